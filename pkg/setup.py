"""Build script: compiles the optional native rollout kernel.

The package works without the extension (a pure-Python kernel is the
fallback), so a failed Cython build must not break installation.
"""

from setuptools import Extension, setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "ctxloco.core._native",
                ["src/ctxloco/core/_native.pyx"],
            )
        ],
        language_level=3,
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
