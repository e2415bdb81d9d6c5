"""Build shim for the optional compiled simulator core.

The package is fully functional without the extension (a pure-Python
interpreter with identical semantics is selected at import time), so any
failure to cythonize or compile downgrades to a pure-Python install rather
than aborting.
"""

from setuptools import setup

ext_modules = []
try:
    import numpy as np
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "tensopt.sim._engine_cy",
                ["src/tensopt/sim/_engine_cy.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3", "-ffp-contract=off"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except Exception as exc:  # pragma: no cover - build-environment dependent
    print(f"warning: building without compiled simulator core ({exc})")

setup(ext_modules=ext_modules)
