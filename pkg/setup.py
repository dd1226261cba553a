import os

import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # pure-Python install; the numpy kernels take over
    cythonize = None



def _cythonize(*args, **kwargs):
    try:
        return cythonize(*args, **kwargs)
    except Exception as exc:  # fall back to the numpy kernels
        print(f"warning: skipping compiled kernels ({exc})")
        return []


ext_modules = []
if cythonize is not None and not os.environ.get("SUBDOPPLER_NO_EXT"):
    ext_modules = _cythonize(
        [
            Extension(
                "subdoppler._kernels",
                ["src/subdoppler/_kernels.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
                optional=True,
            )
        ],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )

setup(ext_modules=ext_modules)
