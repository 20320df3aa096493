import os

from setuptools import Extension, setup

# The compiled kernels are optional: the package falls back to the pure-numpy
# implementation when the extension is absent (see plmirelax/kernels.py).
# PLMIRELAX_NO_EXT=1 skips the build entirely.
ext_modules = []
if os.environ.get("PLMIRELAX_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "plmirelax._kernels",
                    ["src/plmirelax/_kernels.pyx"],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
