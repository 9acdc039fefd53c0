"""Build script: compiles the optional Cython kernel extension.

The package works without the extension (numpy fallback is selected at
import time), so a failed compile is downgraded to a warning.
"""

import sys
import warnings

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [Extension("blocklp._kernels", ["src/blocklp/_kernels.pyx"])],
        compiler_directives={
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
            "language_level": "3",
        },
    )
    for ext in ext_modules:
        ext.include_dirs.append(numpy.get_include())
except Exception as exc:  # pragma: no cover
    warnings.warn(
        "Cython kernels will not be built (%s); "
        "falling back to the pure numpy implementation" % exc
    )
    print("blocklp: building without compiled kernels", file=sys.stderr)

setup(ext_modules=ext_modules)
