"""Build script: compiles the optional Cython speedups.

The extension is a pure accelerator; if compilation fails (no compiler,
no Cython) the package installs anyway and falls back to the pure-Python
kernels at import time.
"""

import os

from setuptools import setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    """build_ext that degrades to a warning instead of failing the install."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # pragma: no cover - toolchain dependent
            print(f"warning: skipping compiled kernels ({exc!r}); "
                  "pure-Python fallback will be used")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:  # pragma: no cover - toolchain dependent
            print(f"warning: could not build {ext.name} ({exc!r}); "
                  "pure-Python fallback will be used")


ext_modules = []
if not os.environ.get("PAIRRANK_SKIP_EXT"):
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            ["src/pairrank/_speedups.pyx"],
            language_level="3",
        )
    except Exception as exc:  # pragma: no cover - toolchain dependent
        print(f"warning: cythonize unavailable ({exc!r}); "
              "pure-Python fallback will be used")

setup(ext_modules=ext_modules, cmdclass={"build_ext": OptionalBuildExt})
