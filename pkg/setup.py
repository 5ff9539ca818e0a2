"""Build script: compiles the optional Cython fast path.

The package is fully functional without the extension (a numpy fallback is
selected at import time), so a failed compile only costs speed.
"""
import warnings

from setuptools import setup
from setuptools.command.build_ext import build_ext

ext_modules = []
cmdclass = {}

try:
    import numpy as np
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "tracegraph._kernels._ckern",
                ["src/tracegraph/_kernels/_ckern.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

    class optional_build_ext(build_ext):
        """Let the install proceed on compile failure; runtime falls back."""

        def run(self):
            try:
                super().run()
            except Exception as exc:  # compiler missing, etc.
                warnings.warn(f"tracegraph: extension build failed ({exc}); "
                              "using the pure-Python kernels")

        def build_extension(self, ext):
            try:
                super().build_extension(ext)
            except Exception as exc:
                warnings.warn(f"tracegraph: building {ext.name} failed ({exc}); "
                              "using the pure-Python kernels")

    cmdclass["build_ext"] = optional_build_ext
except ImportError:
    warnings.warn("tracegraph: Cython or numpy unavailable at build time; "
                  "installing without the compiled kernels")

setup(ext_modules=ext_modules, cmdclass=cmdclass)
