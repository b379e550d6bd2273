"""Build script for the optional Cython ADMM kernel.

The package works without the extension (a NumPy implementation of the same
kernel is selected at import time), so a failed compile must not break the
install.  ``optional=True`` lets setuptools swallow compiler errors.
"""

import os

import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

if cythonize is None or not os.path.exists("src/wakeform/_admm_c.pyx"):
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "wakeform._admm_c",
                sources=["src/wakeform/_admm_c.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                optional=True,
            )
        ],
        language_level="3",
    )

setup(ext_modules=ext_modules)
