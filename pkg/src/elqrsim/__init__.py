"""Deterministic sensor-network simulator with energy-aware tree routing.

The simulation core (`_rng`, `link_estimation`, `energy_model`, `routing`,
`runlog`, `netsim`) is written in Cython pure-Python mode: each module is a
single .py source that runs compiled when the extension build is present and
interpreted otherwise. Set ELQRSIM_PURE=1 before import to force the
interpreted sources even when extensions exist (used by the backend parity
tests and the benchmark).
"""

import importlib.machinery
import importlib.util
import os
import sys
from pathlib import Path

__version__ = "0.1.0"

_PKG_DIR = Path(__file__).resolve().parent


class _SourceOnlyFinder:
    """Meta-path finder pinning elqrsim submodules to their .py sources."""

    def find_spec(self, fullname, path=None, target=None):
        if not fullname.startswith("elqrsim."):
            return None
        stem = fullname.rsplit(".", 1)[1]
        src = _PKG_DIR / f"{stem}.py"
        if not src.is_file():
            return None
        loader = importlib.machinery.SourceFileLoader(fullname, str(src))
        return importlib.util.spec_from_file_location(fullname, src, loader=loader)


if os.environ.get("ELQRSIM_PURE") == "1":
    sys.meta_path.insert(0, _SourceOnlyFinder())


def backend() -> str:
    """Report which implementation of the hot modules is active."""
    from elqrsim import netsim

    return "compiled" if netsim.COMPILED else "pure"
