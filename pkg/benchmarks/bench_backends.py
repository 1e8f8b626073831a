"""Time the compiled core against the interpreted fallback.

Each backend runs the same scenario in its own subprocess, since the
backend is chosen at import time. Digests are compared as a byte-level
parity check on top of the timing.

Usage:
    python benchmarks/bench_backends.py
    python benchmarks/bench_backends.py --config paper_100node --repeat 5
    python benchmarks/bench_backends.py --set protocol=ctp --duration-s 1000
"""

import argparse
import dataclasses
import json
import os
import statistics
import subprocess
import sys

from elqrsim import config

CHILD = """
import json, sys, time
import elqrsim
from elqrsim import netsim
from elqrsim.config import ScenarioConfig

cfg = ScenarioConfig(**json.loads(sys.argv[1]))
repeat = int(sys.argv[2])
walls = []
digest = None
for _ in range(repeat):
    t0 = time.perf_counter()
    log = netsim.run(cfg)
    walls.append(time.perf_counter() - t0)
    digest = log.digest()
print(json.dumps({"backend": elqrsim.backend(), "walls": walls,
                  "digest": digest}))
"""


def run_backend(cfg, repeat: int, pure: bool) -> dict:
    env = dict(os.environ)
    if pure:
        env["ELQRSIM_PURE"] = "1"
    else:
        env.pop("ELQRSIM_PURE", None)
    out = subprocess.run(
        [sys.executable, "-c", CHILD,
         json.dumps(dataclasses.asdict(cfg)), str(repeat)],
        capture_output=True, text=True, env=env, check=True,
    )
    return json.loads(out.stdout)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(
        description="compare compiled and pure simulator backends")
    ap.add_argument("--config", default="paper_9node",
                    help="packaged scenario name or config file path")
    ap.add_argument("--set", action="append", default=[], metavar="KEY=VAL",
                    help="override a config value (repeatable)")
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--duration-s", type=float, default=300.0,
                    help="simulated seconds per run")
    ap.add_argument("--repeat", type=int, default=3,
                    help="runs per backend, median reported")
    args = ap.parse_args(argv)

    cfg = config.load_config(config.resolve_config_path(args.config))
    cfg = config.apply_overrides(cfg, args.set)
    cfg = dataclasses.replace(cfg, seed=args.seed, duration_s=args.duration_s)
    config.validate(cfg)

    results = {}
    for label, pure in (("compiled", False), ("pure", True)):
        r = run_backend(cfg, args.repeat, pure)
        results[label] = r
        walls = r["walls"]
        print(f"{label:8s} backend={r['backend']:8s} "
              f"median {statistics.median(walls):.3f}s over {len(walls)} runs "
              f"(min {min(walls):.3f}, max {max(walls):.3f}) "
              f"digest {r['digest'][:12]}")

    if results["compiled"]["backend"] == results["pure"]["backend"]:
        print("note: both subprocesses picked the same backend; "
              "build the extension for a real comparison")
    ratio = (statistics.median(results["pure"]["walls"])
             / statistics.median(results["compiled"]["walls"]))
    match = results["compiled"]["digest"] == results["pure"]["digest"]
    print(f"speedup {ratio:.1f}x, digests "
          + ("match" if match else "DIFFER"))
    return 0 if match else 1


if __name__ == "__main__":
    sys.exit(main())
