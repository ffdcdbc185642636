"""Builds the optional Cython ranking kernels; installs pure Python without Cython."""
from setuptools import Extension, setup

try:
    import numpy as np
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [Extension("coop_arena.ranking._kernels", ["src/coop_arena/ranking/_kernels.pyx"], include_dirs=[np.get_include()])],
        language_level=3,
    )

setup(ext_modules=ext_modules)
