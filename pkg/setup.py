import numpy as np
from setuptools import setup

try:
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [Extension("radstefan._kernels", ["src/radstefan/_kernels.pyx"],
                   include_dirs=[np.get_include()],
                   extra_compile_args=["-O3"])],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    # no Cython: the package falls back to the numpy kernels
    ext_modules = []

setup(ext_modules=ext_modules)
