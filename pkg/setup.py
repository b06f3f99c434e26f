"""Build script for the optional compiled kernel.

The package is pure Python except for one hot loop (the fixed-slope
Blahut-Arimoto iteration in ``graywyner.kernels._native``).  If Cython or a
C compiler is unavailable the build falls back to a pure-Python install and
the package transparently uses the numpy reference kernel.
"""

import sys

from setuptools import setup


def extensions():
    try:
        import numpy
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError as exc:
        print(f"graywyner: compiled kernel skipped ({exc})", file=sys.stderr)
        return []
    ext = Extension(
        "graywyner.kernels._native",
        ["src/graywyner/kernels/_native.pyx"],
        include_dirs=[numpy.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    return cythonize(
        [ext],
        compiler_directives={
            "language_level": 3,
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
            "initializedcheck": False,
            "embedsignature": True,
        },
    )


setup(ext_modules=extensions())
