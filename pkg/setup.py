import os

from setuptools import setup

# The value-iteration sweep kernel is optionally compiled with Cython.
# Everything works without it (a pure-Python sweep is selected at import),
# so a missing or failing Cython toolchain must not break installation.
ext_modules = []
if os.environ.get("IPTACHECK_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            ["src/iptacheck/_vi_kernel.pyx"],
            compiler_directives={"language_level": "3"},
        )
    except Exception:
        ext_modules = []

setup(ext_modules=ext_modules)
