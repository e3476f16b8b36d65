"""Build the optional compiled core. Installation still succeeds without it;
``sfhd._kernels`` then falls back to the pure-Python implementation."""

import os
import sys

from setuptools import setup


def _extensions():
    if os.environ.get("SFHD_NO_EXT"):
        return []
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError:
        return []

    compile_args = ["-O3"]
    link_args = []
    if sys.platform.startswith("linux"):
        compile_args.append("-fopenmp")
        link_args.append("-fopenmp")

    ext = Extension(
        "sfhd._core",
        ["src/sfhd/_core.pyx"],
        include_dirs=[np.get_include()],
        extra_compile_args=compile_args,
        extra_link_args=link_args,
    )
    return cythonize(
        [ext],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )


setup(ext_modules=_extensions())
