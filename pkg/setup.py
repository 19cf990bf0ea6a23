"""Builds the optional compiled kernel extension.

The package works without it (NumPy fallback); a failed extension build
is therefore tolerated rather than fatal.
"""

from setuptools import Extension, setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [Extension(
            "cephalo.kernels._native",
            ["src/cephalo/kernels/_native.pyx"],
            include_dirs=[numpy.get_include()],
            define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        )],
        language_level=3,
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
