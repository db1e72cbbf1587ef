import os

from setuptools import setup

ext_modules = []
if os.environ.get("MIXEDLDI_NO_EXT", "") != "1":
    try:
        import numpy
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [Extension(
                "mixedldi.kernels._ckernels",
                ["src/mixedldi/kernels/_ckernels.pyx"],
                include_dirs=[numpy.get_include()],
                # no FMA contraction, so results match the Python fallback bit for bit
                extra_compile_args=["-O2", "-ffp-contract=off", "-fno-fast-math"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
