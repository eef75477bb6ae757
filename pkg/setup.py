"""Build script for the optional compiled scatter core.

The package works without the extension (a NumPy fallback is selected at
import time); building it just makes spatially-varying rendering faster.
"""

from setuptools import Extension, setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "defocus_sim._scatter",
                ["src/defocus_sim/_scatter.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
            "initializedcheck": False,
        },
    )
except ImportError:
    # No Cython available: install pure-Python only.
    ext_modules = []

setup(ext_modules=ext_modules)
