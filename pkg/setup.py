"""Build script: compiles the optional Cython kernel extension.

The extension is a performance core only; if the build fails (no compiler,
no Cython) the package still installs and falls back to the pure-numpy
kernels at import time.
"""

import os

import numpy
from setuptools import setup, Extension

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

ext_modules = []
if cythonize is not None and os.path.exists("src/sbolab/_kernels/_cyimpl.pyx"):
    ext_modules = cythonize(
        [
            Extension(
                "sbolab._kernels._cyimpl",
                ["src/sbolab/_kernels/_cyimpl.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
