"""Parity between the compiled core and the interpreted fallback.

The pure path is selected at import time, so the fallback run happens in a
subprocess with ELQRSIM_PURE=1. Skipped entirely when this process is
already on the pure path (nothing to compare against)."""

import json
import os
import subprocess
import sys

import pytest

import elqrsim
from elqrsim import netsim
from elqrsim.config import ScenarioConfig

SCRIPT = """
import json, sys
import elqrsim
from elqrsim import netsim
from elqrsim.config import ScenarioConfig

cfg = ScenarioConfig(**json.loads(sys.argv[1]))
log = netsim.run(cfg)
print(json.dumps({"backend": elqrsim.backend(),
                  "compiled": bool(netsim.COMPILED),
                  "digest": log.digest()}))
"""


def _run_pure(cfg) -> dict:
    import dataclasses

    env = dict(os.environ, ELQRSIM_PURE="1")
    out = subprocess.run(
        [sys.executable, "-c", SCRIPT, json.dumps(dataclasses.asdict(cfg))],
        capture_output=True, text=True, env=env, check=True, timeout=300,
    )
    return json.loads(out.stdout)


@pytest.mark.skipif(not netsim.COMPILED, reason="already on the pure path")
def test_pure_backend_matches_compiled_digest():
    assert elqrsim.backend() == "compiled"
    cfg = ScenarioConfig(nodes=9, duration_s=40.0, seed=6, protocol="elqr")
    here = netsim.run(cfg).digest()
    sub = _run_pure(cfg)
    assert sub["backend"] == "pure" and sub["compiled"] is False
    assert sub["digest"] == here


@pytest.mark.skipif(not netsim.COMPILED, reason="already on the pure path")
def test_pure_backend_matches_on_ctp_too():
    cfg = ScenarioConfig(nodes=9, duration_s=40.0, seed=6, protocol="ctp")
    assert _run_pure(cfg)["digest"] == netsim.run(cfg).digest()
