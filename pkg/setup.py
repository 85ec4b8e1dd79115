import os

import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

npyrandom_lib = os.path.join(os.path.dirname(np.__file__), "random", "lib")

extensions = [
    Extension(
        "sieve_lab._kernels",
        ["src/sieve_lab/_kernels.pyx"],
        include_dirs=[np.get_include()],
        library_dirs=[npyrandom_lib],
        libraries=["npyrandom", "m"],
        # bitwise agreement with the pure-Python fallback needs IEEE-exact arithmetic
        extra_compile_args=["-O3", "-ffp-contract=off"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        optional=True,
    )
]

setup(ext_modules=cythonize(extensions, compiler_directives={"language_level": "3"}))
