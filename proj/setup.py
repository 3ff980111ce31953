from glob import glob

from pybind11.setup_helpers import Pybind11Extension, ParallelCompile, build_ext
from setuptools import setup

ParallelCompile("PABC_NUM_BUILD_JOBS", default=4).install()

ext = Pybind11Extension(
    "pabc._pabc",
    sorted(glob("src/*.cpp")) + ["python/module.cpp"],
    include_dirs=["include", "vendor"],
    cxx_std=20,
    extra_compile_args=["-fno-math-errno"],
)

setup(ext_modules=[ext], cmdclass={"build_ext": build_ext})
