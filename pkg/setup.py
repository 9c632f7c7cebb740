import os
import sys

import numpy
from setuptools import Extension, setup

extensions = []
if os.environ.get("NVSINGLET_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize

        extensions = cythonize(
            [
                Extension(
                    "nvsinglet._kernel_cy",
                    ["src/nvsinglet/_kernel_cy.pyx"],
                    include_dirs=[numpy.get_include()],
                    extra_compile_args=["-O3", "-march=native", "-funroll-loops"],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except Exception as exc:  # pragma: no cover - build-env dependent
        sys.stderr.write(
            "nvsinglet: building without the compiled kernel (%s); "
            "the pure-Python fallback will be used\n" % exc
        )

setup(ext_modules=extensions)
