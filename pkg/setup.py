"""Build script for the compiled simulator core.

The hot modules are plain .py files written in Cython's pure-Python mode.
When compiled they import as extension modules; without the build they run
interpreted, selected automatically at import time (see elqrsim/__init__.py).
"""

from pathlib import Path

from setuptools import setup
from setuptools.extension import Extension

from Cython.Build import cythonize

# -ffp-contract=off: no fused multiply-add, so compiled float results stay
# bit-identical to the interpreted fallback on every host.
CFLAGS = ["-O2", "-ffp-contract=off"]

HOT_MODULES = [
    "_rng",
    "link_estimation",
    "energy_model",
    "routing",
    "runlog",
    "netsim",
]


def _extensions():
    exts = []
    for stem in HOT_MODULES:
        src = Path("src") / "elqrsim" / f"{stem}.py"
        exts.append(
            Extension(f"elqrsim.{stem}", [str(src)], extra_compile_args=CFLAGS)
        )
    return exts


setup(
    ext_modules=cythonize(
        _extensions(),
        compiler_directives={"language_level": "3"},
    )
)
