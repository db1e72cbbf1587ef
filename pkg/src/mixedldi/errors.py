class DomainError(ArithmeticError):
    """An interval operation left the domain of the function (e.g. 1/[-1, 1])."""


class ShapeError(ValueError):
    pass


class PreconditionError(ValueError):
    pass


class CapacityError(RuntimeError):
    """Too many non-degenerate entries to enumerate corners."""


class DivergenceError(RuntimeError):
    def __init__(self, message, last_time):
        super().__init__(message)
        self.last_time = last_time


class BlowupError(RuntimeError):
    """The embedding system produced lower > upper or a non-finite bound."""

    def __init__(self, message, time):
        super().__init__(message)
        self.time = time


class ReachFailure(RuntimeError):
    """No certificate could be found for a step of the reachability loop."""

    def __init__(self, message, step, best_c=None, residuals=None, diagnostics=None):
        super().__init__(message)
        self.step = step
        self.best_c = best_c
        self.residuals = residuals
        self.diagnostics = diagnostics or {}
