"""Build script: compiles the optional Cython integration core.

The package works without the extension (a pure NumPy fallback is selected
at import time), so any failure here degrades to a pure-Python install
instead of aborting.
"""

from setuptools import setup

ext_modules = []
try:
    from Cython.Build import cythonize
    from setuptools import Extension
    import numpy as np

    ext_modules = cythonize(
        [
            Extension(
                "isokin._core",
                ["src/isokin/_core.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except Exception as exc:  # pragma: no cover - build environment dependent
    print(f"isokin: skipping Cython core ({exc}); pure-Python kernels will be used")

setup(ext_modules=ext_modules)
