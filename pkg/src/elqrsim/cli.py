"""Command-line front end: validate configs, execute runs, and produce
matched two-protocol comparisons with CSV artifacts.

Exit codes: 0 success, 2 validation problem, 3 runtime failure.
"""

import argparse
import dataclasses
import os
import statistics
import sys
from concurrent.futures import ProcessPoolExecutor

from elqrsim import metrics, netsim, runlog
from elqrsim.config import (
    ConfigError,
    apply_overrides,
    config_as_text,
    load_config,
    resolve_config_path,
    validate,
)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_RUNTIME = 3


def _load(args):
    path = resolve_config_path(args.config)
    cfg = load_config(path)
    if args.set:
        cfg = apply_overrides(cfg, args.set)
    return cfg


def _parse_seeds(arg, default_seed):
    if not arg:
        return [default_seed]
    seeds = []
    for part in arg.split(","):
        part = part.strip()
        if not part:
            continue
        seeds.append(int(part))
    if not seeds:
        raise ConfigError(["seed list is empty"])
    return seeds


def _run_dir(out, protocol, seed):
    return os.path.join(out, protocol, str(seed))


def _execute_one(cfg_dict, seed, protocol, out):
    """Worker body: one (seed, protocol) run plus its artifacts.

    Takes/returns only picklable data so it can cross a process boundary.
    """
    from elqrsim.config import ScenarioConfig  # local import keeps workers cheap

    cfg = ScenarioConfig(**{**cfg_dict, "seed": seed, "protocol": protocol})
    log = netsim.run(cfg)
    d = _run_dir(out, protocol, seed)
    os.makedirs(d, exist_ok=True)
    runlog.save_events(log, os.path.join(d, "events.txt"))
    runlog.save_snapshots_csv(log, os.path.join(d, "snapshots.csv"))
    metrics.write_load_csv(log, os.path.join(d, "load.csv"))
    metrics.write_prr_csv(log, os.path.join(d, "prr.csv"), cfg.snapshot_interval_s)
    metrics.write_alive_csv(log, os.path.join(d, "alive.csv"))
    cons = metrics.packet_conservation(log)
    energy = metrics.energy_conservation(log, cfg)
    return {
        "protocol": protocol,
        "seed": seed,
        "prr": metrics.prr(log),
        "first_death_s": metrics.first_death_s(log),
        "max_forwarded": metrics.max_forwarded(log),
        "forward_std": metrics.relay_forward_std(log),
        "sink_received": int(log.rx_t.data().size),
        "sent": [int(v) for v in metrics.sent_counts(log)],
        "forwarded": [int(v) for v in metrics.forwarded_counts(log)],
        "digest": log.digest(),
        "conservation_ok": bool(cons["holds"] and energy["holds"]),
        "out_dir": d,
    }


def _execute_many(cfg, jobs, out, parallel):
    cfg_dict = dataclasses.asdict(cfg)
    results = []
    if parallel and parallel > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=parallel) as pool:
            futs = [pool.submit(_execute_one, cfg_dict, s, p, out) for s, p in jobs]
            for f in futs:
                results.append(f.result())
    else:
        for s, p in jobs:
            results.append(_execute_one(cfg_dict, s, p, out))
    return results


def _summary_line(r):
    fd = "none" if r["first_death_s"] is None else f"{r['first_death_s']:.1f}s"
    flags = "" if r["conservation_ok"] else "  CONSERVATION-VIOLATION"
    return (
        f"{r['protocol']} seed={r['seed']} prr={r['prr']:.4f} "
        f"first_death={fd} max_forwarded={r['max_forwarded']} "
        f"digest={r['digest'][:12]}{flags}"
    )


def _report_from_results(rc, re_):
    """compare_report-shaped dict built from two worker summaries."""
    per_node = []
    for i in range(len(rc["sent"])):
        sc, se = rc["sent"][i], re_["sent"][i]
        fc, fe = rc["forwarded"][i], re_["forwarded"][i]
        per_node.append({
            "node_id": i,
            "sent_ctp": sc, "sent_elqr": se,
            "sent_delta_pct": metrics._delta_pct(sc, se),
            "forwarded_ctp": fc, "forwarded_elqr": fe,
            "forwarded_delta_pct": metrics._delta_pct(fc, fe),
        })
    summary = {
        "prr": (rc["prr"], re_["prr"]),
        "max_forwarded": (rc["max_forwarded"], re_["max_forwarded"]),
        "forward_std": (rc["forward_std"], re_["forward_std"]),
        "first_death_s": (rc["first_death_s"], re_["first_death_s"]),
        "sink_received": (rc["sink_received"], re_["sink_received"]),
    }
    return {"per_node": per_node, "summary": summary}


def _write_compare_summary(path, pairs):
    """Cross-seed medians over (ctp_result, elqr_result) pairs."""
    import csv

    def med(vals):
        vals = [v for v in vals if v is not None]
        return statistics.median(vals) if vals else None

    ratios = []
    for rc, re_ in pairs:
        a, b = rc["first_death_s"], re_["first_death_s"]
        if a is not None and b is not None and a > 0:
            ratios.append(b / a)
    std_wins = sum(1 for rc, re_ in pairs if re_["forward_std"] < rc["forward_std"])
    max_wins = sum(1 for rc, re_ in pairs if re_["max_forwarded"] < rc["max_forwarded"])
    rows = [
        ("prr", med([rc["prr"] for rc, _ in pairs]),
         med([re_["prr"] for _, re_ in pairs]), ""),
        ("first_death_s", med([rc["first_death_s"] for rc, _ in pairs]),
         med([re_["first_death_s"] for _, re_ in pairs]),
         "" if not ratios else f"median_ratio={statistics.median(ratios):.4f}"),
        ("max_forwarded", med([rc["max_forwarded"] for rc, _ in pairs]),
         med([re_["max_forwarded"] for _, re_ in pairs]),
         f"elqr_wins={max_wins}/{len(pairs)}"),
        ("forward_std", med([rc["forward_std"] for rc, _ in pairs]),
         med([re_["forward_std"] for _, re_ in pairs]),
         f"elqr_wins={std_wins}/{len(pairs)}"),
    ]
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["key", "ctp_median", "elqr_median", "stat"])
        for key, c, e, stat in rows:
            w.writerow([key, metrics._fmt_opt(c), metrics._fmt_opt(e), stat])


def cmd_validate(args) -> int:
    cfg = _load(args)
    validate(cfg)
    sys.stdout.write(config_as_text(cfg))
    print("config ok")
    return EXIT_OK


def cmd_run(args) -> int:
    cfg = _load(args)
    seeds = _parse_seeds(args.seeds, cfg.seed)
    jobs = [(s, cfg.protocol) for s in seeds]
    results = _execute_many(cfg, jobs, args.out, args.parallel)
    for r in results:
        print(_summary_line(r))
    if any(not r["conservation_ok"] for r in results):
        return EXIT_RUNTIME
    return EXIT_OK


def cmd_compare(args) -> int:
    cfg = _load(args)
    seeds = _parse_seeds(args.seeds, cfg.seed)
    jobs = []
    for s in seeds:
        jobs.append((s, "ctp"))
        jobs.append((s, "elqr"))
    results = _execute_many(cfg, jobs, args.out, args.parallel)
    by_key = {(r["seed"], r["protocol"]): r for r in results}
    pairs = []
    for s in seeds:
        rc, re_ = by_key[(s, "ctp")], by_key[(s, "elqr")]
        report = _report_from_results(rc, re_)
        metrics.write_compare_csv(report, os.path.join(args.out, f"compare_{s}.csv"))
        pairs.append((rc, re_))
        print(_summary_line(rc))
        print(_summary_line(re_))
    os.makedirs(args.out, exist_ok=True)
    _write_compare_summary(os.path.join(args.out, "compare_summary.csv"), pairs)
    if any(not r["conservation_ok"] for r in results):
        return EXIT_RUNTIME
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="elqrsim",
        description="Deterministic data-gathering-tree sensor network simulator",
    )
    sub = p.add_subparsers(dest="command", required=True)
    for name, fn in (("run", cmd_run), ("compare", cmd_compare),
                     ("validate", cmd_validate)):
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True,
                        help="config path or packaged config name")
        sp.add_argument("--set", action="append", default=[], metavar="K=V",
                        help="override one config key (repeatable)")
        sp.add_argument("--seeds", default="",
                        help="comma-separated seed list (default: config seed)")
        sp.add_argument("--out", default="out", help="artifact directory")
        sp.add_argument("--parallel", type=int, default=1, metavar="N",
                        help="worker processes for multi-run commands")
        sp.set_defaults(fn=fn)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as e:
        for prob in e.problems:
            print(f"config error: {prob}", file=sys.stderr)
        return EXIT_VALIDATION
    except Exception as e:  # noqa: BLE001 - CLI boundary
        print(f"runtime error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    raise SystemExit(main())
