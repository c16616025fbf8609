"""Build script: compiles the optional speedup extension.

The package is fully functional without the extension (a numpy fallback is
selected at import time), so any compiler/Cython failure downgrades to a
warning instead of aborting the install.
"""

import warnings

from setuptools import setup


def _extensions():
    try:
        import numpy
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError as exc:  # pragma: no cover - build-time only
        warnings.warn(f"speedup extension skipped ({exc}); using pure-numpy kernels")
        return []
    ext = Extension(
        "celltraffic._kernels._speedups",
        sources=["src/celltraffic/_kernels/_speedups.pyx"],
        include_dirs=[numpy.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        extra_compile_args=["-O3"],
    )
    return cythonize(
        [ext],
        compiler_directives={"language_level": 3, "embedsignature": True},
    )


setup(ext_modules=_extensions())
