from pybind11.setup_helpers import Pybind11Extension, build_ext
from setuptools import setup

core_sources = [
    "src/tensor.cpp",
    "src/graph.cpp",
    "src/params.cpp",
    "src/finite_diff.cpp",
    "src/nets.cpp",
    "src/data.cpp",
    "src/watermark.cpp",
    "src/unlearn.cpp",
    "src/evalx.cpp",
    "src/blo.cpp",
    "src/checkpoint.cpp",
    "src/config.cpp",
    "src/scenario.cpp",
]

setup(
    ext_modules=[
        Pybind11Extension(
            "_w4mu",
            ["bindings/pymodule.cpp"] + core_sources,
            include_dirs=["include", "vendor"],
            cxx_std=20,
        )
    ],
    cmdclass={"build_ext": build_ext},
)
