import os

import numpy
from Cython.Build import cythonize
from setuptools import Extension, setup

# The step kernel draws normals through numpy's C distribution API, which
# lives in the static npyrandom library shipped inside the numpy package.
_NPYRANDOM_DIR = os.path.join(os.path.dirname(numpy.random.__file__), "lib")

extensions = [
    Extension(
        "multifar.simulator._kernel",
        ["src/multifar/simulator/_kernel.pyx"],
        include_dirs=[numpy.get_include()],
        library_dirs=[_NPYRANDOM_DIR],
        libraries=["npyrandom"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        # fp-contract off: the compiled walk must round exactly like the
        # numpy fallback, so FMA fusion of x + sigma*n must not happen.
        extra_compile_args=["-O3", "-ffp-contract=off"],
    )
]

setup(ext_modules=cythonize(extensions, language_level=3))
