"""Build script: compiles the optional LCS extension.

The extension is a speedup only; if Cython or a C compiler is missing the
package installs anyway and `spanqa.diffmerge` falls back to the pure-Python
kernel at import time.
"""

import sys
from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext
from setuptools.errors import CCompilerError, ExecError, PlatformError


class optional_build_ext(build_ext):
    def run(self):
        try:
            super().run()
        except (PlatformError, FileNotFoundError) as err:
            self._skip(err)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except (CCompilerError, ExecError, PlatformError, ValueError) as err:
            self._skip(err)

    def _skip(self, err):
        print(f"warning: building {self.extensions[0].name} failed ({err}); "
              "using the pure-Python LCS kernel", file=sys.stderr)


try:
    from Cython.Build import cythonize

    extensions = cythonize(
        [Extension("spanqa._lcs_fast", ["src/spanqa/_lcs_fast.pyx"])],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions, cmdclass={"build_ext": optional_build_ext})
