import os

import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

npyrandom = os.path.join(os.path.dirname(np.__file__), "random", "lib")

extensions = [
    Extension(
        "rankbp._ckernels",
        ["src/rankbp/_ckernels.pyx"],
        include_dirs=[np.get_include()],
        library_dirs=[npyrandom],
        libraries=["npyrandom", "m"],
        extra_compile_args=["-O3"],
    )
]

setup(ext_modules=cythonize(extensions, compiler_directives={"language_level": "3"}))
