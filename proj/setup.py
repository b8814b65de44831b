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
        source_dir = Path(__file__).parent.resolve()
        build_dir = Path(self.build_temp).resolve()
        build_dir.mkdir(parents=True, exist_ok=True)

        import pybind11

        subprocess.run(
            [
                "cmake",
                "-S", str(source_dir),
                "-B", str(build_dir),
                "-DCMAKE_BUILD_TYPE=Release",
                "-DITERA_BUILD_CLI=OFF",
                "-DITERA_BUILD_TESTS=OFF",
                "-DITERA_BUILD_PYTHON=ON",
                f"-Dpybind11_DIR={pybind11.get_cmake_dir()}",
                f"-DPYTHON_EXECUTABLE={sys.executable}",
            ],
            check=True,
        )
        subprocess.run(
            ["cmake", "--build", str(build_dir), "--target", "_itera", "-j"], check=True
        )

        produced = sorted(build_dir.glob("_itera*.so")) or sorted(
            build_dir.glob("**/_itera*.so")
        )
        if not produced:
            raise RuntimeError("cmake did not produce the _itera module")
        target = Path(self.get_ext_fullpath(ext.name))
        target.parent.mkdir(parents=True, exist_ok=True)
        shutil.copy2(produced[0], target)


setup(
    ext_modules=[CMakeExtension("itera._itera")],
    cmdclass={"build_ext": CMakeBuild},
)
