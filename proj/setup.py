"""Builds the pybind11 `_core` extension through the project's CMake tree."""

import shutil
import subprocess
import sys
from pathlib import Path

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class CMakeExtension(Extension):
    def __init__(self, name):
        super().__init__(name, sources=[])


class CMakeBuild(build_ext):
    def build_extension(self, ext):
        source_dir = Path(__file__).resolve().parent
        build_dir = Path(self.build_temp).resolve() / "cmake"
        build_dir.mkdir(parents=True, exist_ok=True)
        subprocess.check_call(
            [
                "cmake",
                "-S", str(source_dir),
                "-B", str(build_dir),
                "-DCMAKE_BUILD_TYPE=Release",
                "-DXBARDSE_BUILD_PYTHON=ON",
                "-DXBARDSE_BUILD_TESTS=OFF",
                f"-DPython_EXECUTABLE={sys.executable}",
            ]
        )
        subprocess.check_call(
            ["cmake", "--build", str(build_dir), "--target", "_core", "--parallel"]
        )
        built = sorted(build_dir.glob("_core.*.so")) or sorted(build_dir.glob("_core.so"))
        if not built:
            raise RuntimeError(f"cmake did not produce the _core module in {build_dir}")
        dest = Path(self.get_ext_fullpath(ext.name))
        dest.parent.mkdir(parents=True, exist_ok=True)
        shutil.copy2(built[-1], dest)


setup(
    ext_modules=[CMakeExtension("xbardse._core")],
    cmdclass={"build_ext": CMakeBuild},
)
