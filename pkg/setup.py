"""Builds the optional compiled kernels; the package works without them."""
import os

import numpy as np
from setuptools import setup

ext_modules = []
if not os.environ.get("BINCUT_NO_EXT"):
    try:
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "bincut._kernels",
                    ["src/bincut/_kernels.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
