"""Build script for the optional compiled core.

The package is fully functional without the extension (a pure-numpy
fallback is selected at import time), so the build degrades gracefully
when Cython or a C compiler is unavailable.
"""

import warnings

from setuptools import Extension, setup

try:
    import numpy
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "mces._core",
                ["src/mces/_core.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O3"],
                optional=True,
            )
        ],
        language_level="3",
    )
except ImportError:
    warnings.warn(
        "Cython/numpy not available at build time; "
        "installing mces without the compiled core (pure-python backend only)."
    )
    extensions = []

setup(ext_modules=extensions)
