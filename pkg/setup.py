import os

import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # numpy fallback is used at runtime
    cythonize = None

ext_modules = []
if cythonize is not None and os.environ.get("OSC_CONN_NO_EXT") != "1":
    ext_modules = cythonize(
        [
            Extension(
                "osc_conn._ckernels",
                ["src/osc_conn/_ckernels.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("_GNU_SOURCE", None), ("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O3", "-fopenmp", "-fno-math-errno", "-ffp-contract=off"],
                extra_link_args=["-fopenmp"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
