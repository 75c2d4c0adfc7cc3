import os

import numpy as np
from setuptools import Extension, setup

# The compiled core is optional: without Cython (or with WSSVM_NO_EXT=1)
# the package installs with its pure-Python fallback only.
ext_modules = []
if not os.environ.get("WSSVM_NO_EXT"):
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        ext = Extension(
            "wssvm._core",
            ["src/wssvm/_core.pyx"],
            include_dirs=[np.get_include()],
            extra_compile_args=["-O3", "-ffp-contract=off"],
        )
        ext_modules = cythonize(
            [ext],
            compiler_directives={
                "language_level": 3,
                "boundscheck": False,
                "wraparound": False,
                "cdivision": True,
                "initializedcheck": False,
            },
        )

setup(ext_modules=ext_modules)
