"""Build script: compiles the optional fast kernels when Cython is available.

The package works without the extension (a numpy fallback is selected at
import time), so extension build failures are demoted to warnings.
"""

import warnings

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "godice._kernels._core",
                ["src/godice/_kernels/_core.pyx"],
                include_dirs=[numpy.get_include()],
                # No -ffast-math: kernels must keep IEEE semantics so results
                # are bitwise reproducible and match the numpy fallback's
                # documented summation order.
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except Exception as exc:  # pragma: no cover - build environment dependent
    warnings.warn(f"fast kernels not built ({exc}); numpy fallback will be used")

setup(ext_modules=ext_modules)
