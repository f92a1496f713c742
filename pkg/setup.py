"""Build script for the optional compiled geometry kernels.

The package works without the extension (a pure-Python/numpy fallback is
selected at import time); building it just makes boundary tracing and
polygon decimation faster on large masks.
"""

import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

extensions = [
    Extension(
        "svgbench.geometry._kernels_cy",
        ["src/svgbench/geometry/_kernels_cy.pyx"],
        include_dirs=[np.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
]

setup(
    ext_modules=cythonize(extensions, compiler_directives={"language_level": "3"}),
)
