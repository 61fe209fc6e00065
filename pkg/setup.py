"""Build script for the optional compiled kernels.

The package works without the extension: ``windcompare._kernels`` falls
back to a pure-numpy implementation when the compiled module is absent.
"""

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    """Build the Cython kernels if possible, otherwise install pure Python."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing or broken toolchain
            print(f"warning: skipping compiled kernels ({exc}); "
                  "using the pure-Python fallback")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"warning: failed to build {ext.name} ({exc}); "
                  "using the pure-Python fallback")


extensions = []
try:
    import numpy as np
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "windcompare._kernels._core",
                ["src/windcompare/_kernels/_core.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except ImportError:
    print("warning: Cython or numpy not available at build time; "
          "installing without compiled kernels")

setup(ext_modules=extensions, cmdclass={"build_ext": OptionalBuildExt})
