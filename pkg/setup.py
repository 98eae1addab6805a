"""Build the optional Cython trial kernel.

If Cython or a C compiler is unavailable the package still installs and
falls back to the pure-Python loop in ``devlab._pyloop``.
"""
import os

from setuptools import setup

ext_modules = []
if not os.environ.get("DEVLAB_NO_EXT"):
    try:
        import numpy as np
        import scipy  # noqa: F401  (cython_special.pxd is cimported)
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "devlab._kernel",
                    ["src/devlab/_kernel.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
