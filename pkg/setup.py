"""Build script for the optional compiled training kernel.

The package works without the extension; `phytoner.kernels` falls back to
the numpy implementation when `phytoner._kernels_cy` is missing.
"""

from setuptools import Extension, setup

try:
    import numpy as np
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "phytoner._kernels_cy",
                ["src/phytoner/_kernels_cy.pyx"],
                include_dirs=[np.get_include()],
            )
        ],
        language_level=3,
    )

setup(ext_modules=ext_modules)
