from setuptools import Extension, setup

import numpy as np
from Cython.Build import cythonize

DIRECTIVES = {
    "language_level": "3",
    "boundscheck": False,
    "wraparound": False,
    "cdivision": True,
}

ext_modules = [
    Extension(
        "spinemtl._kernels._core",
        ["src/spinemtl/_kernels/_core.pyx"],
        include_dirs=[np.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
]

setup(ext_modules=cythonize(ext_modules, compiler_directives=DIRECTIVES))
