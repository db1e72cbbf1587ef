"""Vector fields ``f(t, x)`` as expression graphs.

A system file looks like::

    # a quadratic system
    name poly
    param a = 0.5
    states x1 x2
    dx1 = -2*x1 + x2 + a*(x1 + x2)^2
    dx2 = -x1 + a*x1^2 - 2*x2

Statements are separated by newlines or ``;``.  ``param`` lines (the keyword
is optional) bind constants that are inlined at parse time, ``order`` permutes
the working coordinates, and each state gets exactly one ``d<state> = ...``
equation.  Precedence, tightest first: ``^`` (non-negative integer literal
exponent), unary minus, ``* /``, ``+ -``.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DomainError, ShapeError
from .interval import Interval, IntervalVector

__all__ = [
    "Expr",
    "ParseError",
    "Tape",
    "VectorField",
    "const",
    "var",
    "TIME",
    "parse_system",
    "load_system",
    "pretty",
    "eval_point",
    "eval_interval",
]

FUNCTIONS = ("sin", "cos", "atan", "exp", "sqrt", "abs")
BINARY = ("add", "sub", "mul", "div")
KINDS = ("const", "var", "time", "pow_int", "neg") + BINARY + FUNCTIONS


@dataclass(frozen=True)
class Expr:
    kind: str
    children: tuple = ()
    value: float | int | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown expression kind {self.kind!r}")

    # building blocks for fields written directly in Python
    def __add__(self, other):
        return Expr("add", (self, _lift(other)))

    def __radd__(self, other):
        return Expr("add", (_lift(other), self))

    def __sub__(self, other):
        return Expr("sub", (self, _lift(other)))

    def __rsub__(self, other):
        return Expr("sub", (_lift(other), self))

    def __mul__(self, other):
        return Expr("mul", (self, _lift(other)))

    def __rmul__(self, other):
        return Expr("mul", (_lift(other), self))

    def __truediv__(self, other):
        return Expr("div", (self, _lift(other)))

    def __rtruediv__(self, other):
        return Expr("div", (_lift(other), self))

    def __neg__(self):
        return Expr("neg", (self,))

    def __pow__(self, k):
        if int(k) != k or k < 0:
            raise ValueError("exponent must be a non-negative integer")
        return Expr("pow_int", (self,), int(k))

    def variables(self) -> set[int]:
        if self.kind == "var":
            return {self.value}
        out: set[int] = set()
        for c in self.children:
            out |= c.variables()
        return out

    def uses_time(self) -> bool:
        return self.kind == "time" or any(c.uses_time() for c in self.children)

    def map_vars(self, mapping) -> "Expr":
        if self.kind == "var":
            return Expr("var", (), mapping[self.value])
        if not self.children:
            return self
        return Expr(self.kind, tuple(c.map_vars(mapping) for c in self.children), self.value)


def const(v: float) -> Expr:
    return Expr("const", (), float(v))


def var(i: int) -> Expr:
    return Expr("var", (), int(i))


TIME = Expr("time")


def func(name: str, arg: Expr) -> Expr:
    if name not in FUNCTIONS:
        raise ValueError(f"unknown function {name!r}")
    return Expr(name, (arg,))


def _lift(x) -> Expr:
    return x if isinstance(x, Expr) else const(x)


# --------------------------------------------------------------------------
# compiled form


OPCODES = {
    "const": 0,
    "var": 1,
    "time": 2,
    "add": 3,
    "sub": 4,
    "mul": 5,
    "div": 6,
    "pow_int": 7,
    "sin": 8,
    "cos": 9,
    "atan": 10,
    "exp": 11,
    "sqrt": 12,
    "abs": 13,
    "neg": 14,
}
OPNAMES = {v: k for k, v in OPCODES.items()}


class Tape:
    """Post-order instruction list for a set of output expressions.

    Slot ``i`` holds the value of instruction ``i``.  Each node of each tree
    gets its own slot: shared subterms are re-evaluated, never cached.
    """

    def __init__(self, outputs: Sequence[Expr], n_vars: int):
        self.n_vars = n_vars
        self.rows: list[tuple[int, int, int, int, float]] = []
        self.outputs = [self._emit(e) for e in outputs]
        self.n_out = len(self.outputs)
        self.ops = np.array([r[0] for r in self.rows], dtype=np.int32)
        self.arg_a = np.array([r[1] for r in self.rows], dtype=np.int32)
        self.arg_b = np.array([r[2] for r in self.rows], dtype=np.int32)
        self.arg_k = np.array([r[3] for r in self.rows], dtype=np.int32)
        self.consts = np.array([r[4] for r in self.rows], dtype=np.float64)
        self.out_idx = np.array(self.outputs, dtype=np.int32)

    def _emit(self, e: Expr) -> int:
        stack = [(e, False)]
        done: list[int] = []
        while stack:
            node, expanded = stack.pop()
            if not expanded and node.children:
                stack.append((node, True))
                for c in reversed(node.children):
                    stack.append((c, False))
                continue
            args = [done.pop() for _ in node.children][::-1]
            a = args[0] if len(args) > 0 else -1
            b = args[1] if len(args) > 1 else -1
            k = 0
            c = 0.0
            if node.kind == "const":
                c = float(node.value)
            elif node.kind == "var":
                k = int(node.value)
                if not 0 <= k < self.n_vars:
                    raise ShapeError(f"variable index {k} out of range for dimension {self.n_vars}")
            elif node.kind == "pow_int":
                k = int(node.value)
            self.rows.append((OPCODES[node.kind], a, b, k, c))
            done.append(len(self.rows) - 1)
        return done[0]

    def __len__(self):
        return len(self.rows)


# --------------------------------------------------------------------------
# vector fields


class VectorField:
    """``n`` component expressions over state variables ``0..n-1``.

    ``components`` and ``names`` are stored in declaration order.
    ``state_order[k]`` is the declared index of working coordinate ``k``; all
    numerical entry points take and return vectors in working order.
    """

    def __init__(self, components: Sequence[Expr], names: Sequence[str] | None = None,
                 name: str = "", state_order: Sequence[int] | None = None):
        components = tuple(components)
        n = len(components)
        if n == 0:
            raise ShapeError("a vector field needs at least one component")
        names = tuple(names) if names is not None else tuple(f"x{i + 1}" for i in range(n))
        if len(names) != n:
            raise ShapeError(f"{len(names)} names for {n} components")
        order = tuple(range(n)) if state_order is None else tuple(int(i) for i in state_order)
        if sorted(order) != list(range(n)):
            raise ShapeError(f"state_order {order} is not a permutation of 0..{n - 1}")
        for i, c in enumerate(components):
            bad = [v for v in c.variables() if not 0 <= v < n]
            if bad:
                raise ShapeError(f"component {i} references variables {bad} outside 0..{n - 1}")
        self.components = components
        self.declared_names = names
        self.name = name
        self.state_order = order
        inverse = [0] * n
        for k, i in enumerate(order):
            inverse[i] = k
        self._inverse = tuple(inverse)
        self.working = tuple(components[i].map_vars(inverse) for i in order)
        self.tape = Tape(self.working, n)
        self.time_varying = any(c.uses_time() for c in components)

    @property
    def dim(self) -> int:
        return len(self.components)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(self.declared_names[i] for i in self.state_order)

    def with_order(self, order: Sequence) -> "VectorField":
        """Same field with working coordinates permuted.

        ``order`` lists declared state names or declared indices.
        """
        idx = [self.declared_names.index(o) if isinstance(o, str) else int(o) for o in order]
        return VectorField(self.components, self.declared_names, self.name, idx)

    def to_working(self, x_declared) -> np.ndarray:
        return np.asarray(x_declared, dtype=float)[list(self.state_order)]

    def to_declared(self, x_working) -> np.ndarray:
        return np.asarray(x_working, dtype=float)[list(self._inverse)]

    def __call__(self, t, x):
        return eval_point(self, t, x)

    def to_text(self) -> str:
        lines = []
        if self.name:
            lines.append(f"name {self.name}")
        lines.append("states " + " ".join(self.declared_names))
        if self.state_order != tuple(range(self.dim)):
            lines.append("order " + " ".join(self.names))
        for nm, c in zip(self.declared_names, self.components):
            lines.append(f"d{nm} = {pretty(c, self.declared_names)}")
        return "\n".join(lines) + "\n"

    def __repr__(self):
        return f"VectorField({self.name or 'unnamed'}, dim={self.dim}, order={self.names})"


# --------------------------------------------------------------------------
# parser

_TOKEN = re.compile(
    r"(?P<ws>[ \t\r]+)|(?P<comment>#[^\n]*)|(?P<nl>\n)|(?P<semi>;)"
    r"|(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()=,])"
)


class ParseError(ValueError):
    def __init__(self, message, line, col):
        super().__init__(f"line {line}, column {col}: {message}")
        self.line = line
        self.col = col


@dataclass
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    line, line_start, pos = 1, 0, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        col = pos - line_start + 1
        if kind in ("nl", "semi"):
            toks.append(_Tok("sep", m.group(), line, col))
            if kind == "nl":
                line += 1
                line_start = m.end()
        elif kind not in ("ws", "comment"):
            toks.append(_Tok(kind, m.group(), line, col))
        pos = m.end()
    toks.append(_Tok("eof", "", line, pos - line_start + 1))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0
        self.params: dict[str, float] = {"pi": math.pi}
        self.states: list[str] | None = None
        self.order: list[str] | None = None
        self.name = ""
        self.equations: dict[str, Expr] = {}
        self.allow_state_refs = True

    # token helpers
    def peek(self, k=0) -> _Tok:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def next(self) -> _Tok:
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, kind, text=None) -> _Tok:
        t = self.next()
        if t.kind != kind or (text is not None and t.text != text):
            want = text or kind
            got = t.text or t.kind
            raise ParseError(f"expected {want!r}, found {got!r}", t.line, t.col)
        return t

    def error(self, message, tok=None):
        tok = tok or self.peek()
        return ParseError(message, tok.line, tok.col)

    # statements
    def parse(self):
        while self.peek().kind != "eof":
            if self.peek().kind == "sep":
                self.next()
                continue
            self.statement()
            t = self.peek()
            if t.kind not in ("sep", "eof"):
                raise self.error(f"unexpected {t.text!r} after statement")
        return self.finish()

    def _names_until_sep(self) -> list[tuple[str, _Tok]]:
        out = []
        while self.peek().kind == "ident":
            t = self.next()
            out.append((t.text, t))
        return out

    def statement(self):
        t = self.peek()
        if t.kind != "ident":
            raise self.error(f"expected a statement, found {t.text or t.kind!r}")
        keyword_use = self.peek(1).kind != "op" or self.peek(1).text != "="
        if t.text == "states" and keyword_use:
            self.next()
            if self.states is not None:
                raise self.error("states declared twice", t)
            names = self._names_until_sep()
            if not names:
                raise self.error("states needs at least one name")
            seen = set()
            for nm, tok in names:
                if nm in seen:
                    raise self.error(f"duplicate state {nm!r}", tok)
                if nm == "t" or nm in FUNCTIONS or nm in self.params:
                    raise self.error(f"state name {nm!r} is reserved or already a parameter", tok)
                seen.add(nm)
            self.states = [nm for nm, _ in names]
            return
        if t.text == "order" and keyword_use:
            self.next()
            self.order = [nm for nm, _ in self._names_until_sep()]
            self._order_tok = t
            return
        if t.text == "name" and keyword_use:
            self.next()
            self.name = self.expect("ident").text
            return
        if t.text == "param" and keyword_use:
            self.next()
            self.assignment(force_param=True)
            return
        self.assignment(force_param=False)

    def assignment(self, force_param: bool):
        lhs = self.expect("ident")
        self.expect("op", "=")
        target = lhs.text
        is_equation = (not force_param and self.states is not None
                       and target.startswith("d") and target[1:] in self.states)
        if is_equation:
            state = target[1:]
            if state in self.equations:
                raise self.error(f"second equation for state {state!r}", lhs)
            self.allow_state_refs = True
            self.equations[state] = self.expr()
            return
        if self.states is not None and target in self.states:
            raise self.error(f"{target!r} is a state; write its equation as d{target} = ...", lhs)
        if target == "t" or target in FUNCTIONS:
            raise self.error(f"{target!r} is reserved", lhs)
        self.allow_state_refs = False
        value = self.expr()
        self.params[target] = _fold_constant(value, lhs)

    def finish(self):
        if self.states is None:
            raise ParseError("no states declared", 1, 1)
        missing = [s for s in self.states if s not in self.equations]
        if missing:
            raise ParseError(f"dimension mismatch: no equation for {missing}", self.peek().line, 1)
        order = None
        if self.order is not None:
            tok = self._order_tok
            if sorted(self.order) != sorted(self.states):
                raise ParseError(f"order {self.order} is not a permutation of states {self.states}",
                                 tok.line, tok.col)
            order = [self.states.index(s) for s in self.order]
        comps = [self.equations[s] for s in self.states]
        return VectorField(comps, self.states, self.name, order)

    # expressions
    def expr(self) -> Expr:
        left = self.term()
        while self.peek().kind == "op" and self.peek().text in "+-":
            op = self.next().text
            right = self.term()
            left = Expr("add" if op == "+" else "sub", (left, right))
        return left

    def term(self) -> Expr:
        left = self.unary()
        while self.peek().kind == "op" and self.peek().text in "*/":
            op = self.next().text
            right = self.unary()
            left = Expr("mul" if op == "*" else "div", (left, right))
        return left

    def unary(self) -> Expr:
        t = self.peek()
        if t.kind == "op" and t.text == "-":
            self.next()
            nxt, after = self.peek(), self.peek(1)
            # a bare literal folds into a negative constant
            if nxt.kind == "num" and not (after.kind == "op" and after.text == "^"):
                self.next()
                return const(-float(nxt.text))
            return Expr("neg", (self.unary(),))
        if t.kind == "op" and t.text == "+":
            self.next()
            return self.unary()
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        t = self.peek()
        if t.kind == "op" and t.text == "^":
            self.next()
            k = self.next()
            if k.kind != "num" or not re.fullmatch(r"\d+", k.text):
                raise self.error("exponent must be a non-negative integer literal", k)
            nxt = self.peek()
            if nxt.kind == "op" and nxt.text == "^":
                raise self.error("chained exponents are not supported; add parentheses", nxt)
            return Expr("pow_int", (base,), int(k.text))
        return base

    def atom(self) -> Expr:
        t = self.next()
        if t.kind == "num":
            return const(float(t.text))
        if t.kind == "op" and t.text == "(":
            e = self.expr()
            self.expect("op", ")")
            return e
        if t.kind == "ident":
            nm = t.text
            if nm in FUNCTIONS:
                self.expect("op", "(")
                arg = self.expr()
                self.expect("op", ")")
                return Expr(nm, (arg,))
            if nm == "t":
                if not self.allow_state_refs:
                    raise self.error("parameters cannot depend on time", t)
                return TIME
            if self.states is not None and nm in self.states:
                if not self.allow_state_refs:
                    raise self.error(f"parameter depends on state {nm!r}", t)
                return var(self.states.index(nm))
            if nm in self.params:
                return const(self.params[nm])
            raise ParseError(f"unknown identifier {nm!r}", t.line, t.col)
        raise ParseError(f"unexpected {t.text or t.kind!r}", t.line, t.col)


def _fold_constant(e: Expr, tok: _Tok) -> float:
    try:
        out = eval_point(VectorField([e], ["_"]), 0.0, [0.0])
    except DomainError as exc:
        raise ParseError(f"parameter {tok.text!r}: {exc}", tok.line, tok.col) from None
    return float(out[0])


def parse_system(text: str) -> VectorField:
    return _Parser(text).parse()


def load_system(path) -> VectorField:
    path = Path(path)
    f = parse_system(path.read_text(encoding="utf-8"))
    if not f.name:
        f = VectorField(f.components, f.declared_names, path.stem, f.state_order)
    return f


_PREC = {"add": 1, "sub": 1, "mul": 2, "div": 2, "neg": 3, "pow_int": 4}
_SYMBOL = {"add": "+", "sub": "-", "mul": "*", "div": "/"}


def _prec(e: Expr) -> int:
    if e.kind == "const" and e.value < 0:
        return 5  # printed with its own parentheses
    return _PREC.get(e.kind, 5)


def pretty(e: Expr, names: Sequence[str] | None = None) -> str:
    """Render ``e`` in system-file syntax; the result re-parses to ``e``."""

    def nm(i):
        return names[i] if names is not None else f"x{i + 1}"

    def go(e: Expr) -> str:
        k = e.kind
        if k == "const":
            s = repr(float(e.value))
            return f"({s})" if e.value < 0 or s.startswith("-") else s
        if k == "var":
            return nm(e.value)
        if k == "time":
            return "t"
        if k in _SYMBOL:
            p = _PREC[k]
            a, b = e.children
            sa, sb = go(a), go(b)
            if _prec(a) < p:
                sa = f"({sa})"
            if _prec(b) <= p:
                sb = f"({sb})"
            return f"{sa} {_SYMBOL[k]} {sb}"
        if k == "neg":
            (a,) = e.children
            sa = go(a)
            if _prec(a) <= 3 or a.kind == "const":
                sa = f"({sa})"
            return f"-{sa}"
        if k == "pow_int":
            (a,) = e.children
            sa = go(a)
            if _prec(a) < 5 or (a.kind == "const" and a.value >= 0 and "e" in sa):
                sa = f"({sa})"
            return f"{sa}^{e.value}"
        (a,) = e.children
        return f"{k}({go(a)})"

    return go(e)


# --------------------------------------------------------------------------
# point evaluation (numpy, vectorised over trailing axes)

_NP_UNARY = {
    8: np.sin,
    9: np.cos,
    10: np.arctan,
    11: np.exp,
    13: np.abs,
}


def point_pass(tape: Tape, t, x) -> list:
    """Evaluate every tape slot at ``(t, x)``.

    ``x`` has shape ``(n, ...)``; trailing axes broadcast, which lets a single
    pass evaluate a batch of states.
    """
    vals: list = [None] * len(tape.rows)
    with np.errstate(all="ignore"):
        for i, (op, a, b, k, c) in enumerate(tape.rows):
            if op == 1:
                vals[i] = x[k]
            elif op == 0:
                vals[i] = np.float64(c)
            elif op == 3:
                vals[i] = vals[a] + vals[b]
            elif op == 5:
                vals[i] = vals[a] * vals[b]
            elif op == 4:
                vals[i] = vals[a] - vals[b]
            elif op == 6:
                den = vals[b]
                if np.any(np.asarray(den) == 0.0):
                    raise DomainError("division by zero")
                vals[i] = vals[a] / den
            elif op == 7:
                vals[i] = vals[a] ** k if k != 0 else np.ones_like(vals[a]) * 1.0
            elif op == 14:
                vals[i] = -vals[a]
            elif op == 2:
                vals[i] = np.float64(t)
            elif op == 12:
                if np.any(np.asarray(vals[a]) < 0.0):
                    raise DomainError("sqrt of a negative number")
                vals[i] = np.sqrt(vals[a])
            else:
                vals[i] = _NP_UNARY[op](vals[a])
    return vals


def eval_point(f: VectorField, t: float, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[0] != f.dim:
        raise ShapeError(f"state of length {x.shape[0]} for a {f.dim}-dimensional field")
    vals = point_pass(f.tape, t, x)
    out = np.empty(x.shape, dtype=float)
    for i, s in enumerate(f.tape.outputs):
        out[i] = vals[s]
    return out


def eval_interval(f: VectorField, t, X: IntervalVector) -> IntervalVector:
    """Natural interval extension of ``f`` over ``t x X``."""
    from . import kernels

    t = Interval.coerce(t)
    if len(X) != f.dim:
        raise ShapeError(f"box of length {len(X)} for a {f.dim}-dimensional field")
    lo, hi = kernels.interval_eval(f.tape, t.lo, t.hi, X.lo, X.hi)
    return IntervalVector(lo, hi)
