from setuptools import Extension, setup

try:
    import numpy as np
    from Cython.Build import cythonize
except ImportError:  # no toolchain: the pure-Python kernels are used
    ext_modules = []
else:
    ext_modules = cythonize(
        [Extension("bincs._glauber_core", ["src/bincs/_glauber_core.pyx"],
                   include_dirs=[np.get_include()],
                   define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")])],
        language_level="3",
    )

setup(ext_modules=ext_modules)
