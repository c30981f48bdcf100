"""Builds the optional compiled kernel core.

The extension is a performance backend only; every operation has a numpy
fallback, so installation must succeed on machines without Cython or a C
compiler.  `python setup.py build_ext --inplace` compiles it for a source
checkout.
"""

import os

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


def _extensions():
    if os.environ.get("UNIBENCH_NO_EXT"):
        return []
    try:
        from Cython.Build import cythonize
    except ImportError:
        return []
    ext = Extension(
        "unibench.kernels._kernels",
        ["src/unibench/kernels/_kernels.pyx"],
        # No -ffast-math: the accumulation order of the kernels is part of
        # their contract (the naive GEMM is the verification oracle).
        extra_compile_args=["-O3"],
    )
    return cythonize([ext], compiler_directives={"language_level": "3"})


class optional_build_ext(build_ext):
    """Fall back to the pure-numpy backend when compilation fails."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing, broken toolchain, ...
            print(f"warning: compiled kernels skipped ({exc}); numpy backend will be used")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"warning: building {ext.name} failed ({exc}); numpy backend will be used")


setup(ext_modules=_extensions(), cmdclass={"build_ext": optional_build_ext})
