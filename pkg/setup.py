"""Build the optional Cython kernels.

The package works without them: ``ftlscan.kernels`` falls back to the numpy
implementation when the extension is missing or fails to compile.
"""

import os
import sys

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    def run(self):
        try:
            super().run()
        except Exception as exc:  # noqa: BLE001
            print(f"warning: Cython kernels not built ({exc}); using numpy fallback", file=sys.stderr)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:  # noqa: BLE001
            print(f"warning: failed to build {ext.name} ({exc}); using numpy fallback", file=sys.stderr)


def extensions():
    try:
        import numpy as np
        from Cython.Build import cythonize
    except ImportError:
        return []
    random_lib = os.path.join(os.path.dirname(np.__file__), "random", "lib")
    ext = Extension(
        "ftlscan._ckernels",
        ["src/ftlscan/_ckernels.pyx"],
        include_dirs=[np.get_include()],
        library_dirs=[random_lib],
        libraries=["npyrandom", "m"],
        # contraction into FMA would break bitwise agreement with the numpy fallback
        extra_compile_args=["-O3", "-ffp-contract=off"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    return cythonize([ext], compiler_directives={"language_level": "3"})


setup(ext_modules=extensions(), cmdclass={"build_ext": optional_build_ext})
