"""Builds the optional compiled transition-table kernel.

The package works without it: when the extension is absent (or CEDGEN_PURE=1
is set) the pure-Python interpreter in cedgen._table_py takes over.
"""

import numpy
from Cython.Build import cythonize
from setuptools import Extension, setup

extensions = [
    Extension(
        "cedgen._fsmcore",
        sources=["src/cedgen/_fsmcore.pyx"],
        include_dirs=[numpy.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
]

setup(ext_modules=cythonize(extensions, language_level=3))
