"""Build script for the optional compiled sweep kernel.

The package works without the extension (a pure-Python fallback is selected
at import time), so a failed compile is downgraded to a warning.
"""

import warnings

from setuptools import Extension, setup


def extensions():
    try:
        import numpy
        from Cython.Build import cythonize
    except ImportError as exc:
        warnings.warn(f"building without compiled kernels: {exc}")
        return []
    return cythonize(
        [
            Extension(
                "carsmooth._kernels._sweep",
                ["src/carsmooth/_kernels/_sweep.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )


setup(ext_modules=extensions())
