"""Build script for the compiled solver kernels.

The package works without the extension (a numpy fallback is selected at
import time); building it makes the Monte Carlo paths roughly an order of
magnitude faster.
"""

import numpy
from Cython.Build import cythonize
from setuptools import Extension, setup

extensions = [
    Extension(
        "pfaloha._kernels._cy",
        ["src/pfaloha/_kernels/_cy.pyx"],
        include_dirs=[numpy.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
]

setup(ext_modules=cythonize(extensions, language_level="3"))
