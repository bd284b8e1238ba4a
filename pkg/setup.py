import os

from setuptools import setup

# The compiled kernels are optional: the package falls back to the NumPy
# implementations in qground._pykernels when the extension is unavailable.
ext_modules = []
if os.environ.get("QGROUND_NO_EXT") != "1":
    try:
        import numpy
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "qground._ckernels",
                    ["src/qground/_ckernels.pyx"],
                    include_dirs=[numpy.get_include()],
                    extra_compile_args=["-O3"],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            language_level=3,
        )
    except ImportError:
        pass

setup(ext_modules=ext_modules)
