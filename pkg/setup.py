# Builds the optional compiled kernel backend. The package works without it:
# g2cone._kernels falls back to the pure-Python backend at import time.
from setuptools import setup

ext_modules = []
try:
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "g2cone._kernels.c_backend",
                ["src/g2cone/_kernels/c_backend.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
