import os

from setuptools import Extension, setup


def ext_modules():
    if os.environ.get("FRACDISC_NO_EXT"):
        return []
    try:
        import numpy as np
        from Cython.Build import cythonize
    except ImportError:
        return []
    ext = Extension(
        "fracdisc._glkernel",
        ["src/fracdisc/_glkernel.pyx"],
        include_dirs=[np.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        extra_compile_args=["-O3"],
        optional=True,
    )
    return cythonize([ext], compiler_directives={"language_level": "3"})


setup(ext_modules=ext_modules())
