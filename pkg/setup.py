"""Build the optional compiled kernel module; the package falls back to pure Python without it."""

import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("VNFPLACE_NO_EXT") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize
    except ImportError:
        pass
    else:
        ext_modules = cythonize(
            [
                Extension(
                    "vnfplace._kernels._native",
                    ["src/vnfplace/_kernels/_native.pyx"],
                    include_dirs=[np.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                    extra_compile_args=["-O3"],
                    optional=True,
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
