"""Build script: compiles the optional feature-hashing extension.

The package works without the compiled extension (a pure-Python fallback is
selected at import time), so a failed cythonize is not fatal.
"""

from setuptools import setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        ["src/policygraph/_kernels/_hashfeat.pyx"],
        language_level=3,
    )
except Exception as exc:  # pragma: no cover - build environment dependent
    print(f"cython unavailable, building pure-python only: {exc}")

setup(ext_modules=ext_modules)
