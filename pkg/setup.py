"""Builds the optional compiled kernels; the package works without them."""

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [Extension("plateaulab._ckernels", ["src/plateaulab/_ckernels.pyx"],
                   include_dirs=[numpy.get_include()],
                   define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")])],
        compiler_directives={"language_level": "3"},
        quiet=True,
    )
except Exception as exc:  # missing Cython or compiler: fall back to numpy kernels
    print(f"warning: compiled kernels not built ({exc})")

setup(ext_modules=ext_modules)
