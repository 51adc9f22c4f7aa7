"""Build script for the compiled kernel extension.

The extension is optional at runtime: if it is absent (no compiler, no
Cython), the package falls back to the pure-numpy kernels selected at
import time in mmcoreset.kernels.
"""

import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

extensions = [
    Extension(
        "mmcoreset._kernels",
        ["src/mmcoreset/_kernels.pyx"],
        include_dirs=[numpy.get_include()],
        extra_compile_args=["-O3", "-fopenmp"],
        extra_link_args=["-fopenmp"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
]

setup(
    ext_modules=cythonize(extensions, language_level=3) if cythonize else [],
)
