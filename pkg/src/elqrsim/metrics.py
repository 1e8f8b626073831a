"""Metrics over completed RunLogs: reception ratio, per-node load,
lifetime curves, conservation identities, and the side-by-side protocol
comparison. Pure functions; nothing here mutates a log."""

import csv

import numpy as np

from elqrsim import energy_model, runlog


def _us_to_s(t_us):
    return np.asarray(t_us, dtype=np.float64) / 1e6


def _pair_key(origin, seqno):
    # (origin, seqno) packed for uniqueness tests; seqnos stay well under 2^32
    return np.asarray(origin, dtype=np.int64) * (1 << 32) + np.asarray(seqno, dtype=np.int64)


def sent_counts(log) -> np.ndarray:
    """Origin sends per node, from send records."""
    out = np.zeros(log.n_nodes, dtype=np.int64)
    origins = log.send_origin.data()
    if origins.size:
        np.add.at(out, origins, 1)
    return out


def forwarded_counts(log) -> np.ndarray:
    """Relayed packets per node, from forward records. Own sends excluded
    by construction (a node never logs a forward for its own packet)."""
    out = np.zeros(log.n_nodes, dtype=np.int64)
    nodes = log.fwd_node.data()
    if nodes.size:
        np.add.at(out, nodes, 1)
    return out


def load_distribution(log) -> np.ndarray:
    return forwarded_counts(log)


def prr(log, window_s: float = 0.0) -> float:
    """Distinct sink receptions over origin sends.

    window_s == 0 means the whole run. Otherwise only records inside
    [0, window_s) count.
    """
    rx_t = log.rx_t.data()
    send_t = log.send_t.data()
    keys = _pair_key(log.rx_origin.data(), log.rx_seqno.data())
    if window_s > 0:
        lim = round(window_s * 1e6)
        keys = keys[rx_t < lim]
        n_sent = int(np.count_nonzero(send_t < lim))
    else:
        n_sent = send_t.size
    if n_sent == 0:
        return 0.0
    return np.unique(keys).size / n_sent


def prr_series(log, window_s: float):
    """Windowed reception ratio: receptions landing in each window over
    sends made in it. Returns (window_end_s, ratio) arrays covering the run."""
    if window_s <= 0:
        raise ValueError("window must be positive")
    win_us = round(window_s * 1e6)
    n_win = max(1, -(-log.duration_us // win_us)) if log.duration_us > 0 else 1
    sends = np.zeros(n_win, dtype=np.int64)
    rxs = np.zeros(n_win, dtype=np.int64)
    st = log.send_t.data()
    if st.size:
        np.add.at(sends, np.minimum(st // win_us, n_win - 1), 1)
    rt = log.rx_t.data()
    if rt.size:
        np.add.at(rxs, np.minimum(rt // win_us, n_win - 1), 1)
    t_end = (np.arange(n_win, dtype=np.int64) + 1) * win_us / 1e6
    ratio = np.where(sends > 0, rxs / np.maximum(sends, 1), 0.0)
    return t_end, ratio


def lifetime(log):
    """(alive_curve, first_death_s). The curve is sampled at snapshot times:
    pairs (t_s, nodes alive at t). first_death_s is None without deaths."""
    snap_t = np.unique(log.snap_t.data())
    death_t = log.death_t.data()
    alive = np.empty(snap_t.size, dtype=np.int64)
    for k, t in enumerate(snap_t):
        alive[k] = log.n_nodes - int(np.count_nonzero(death_t <= t))
    first = None
    if death_t.size:
        first = float(death_t.min() / 1e6)
    return (_us_to_s(snap_t), alive), first


def first_death_s(log):
    return lifetime(log)[1]


def relay_forward_std(log) -> float:
    """Population standard deviation of forwarded counts over relay nodes
    (nodes with at least one forward record)."""
    fwd = forwarded_counts(log)
    relays = fwd[fwd > 0]
    if relays.size == 0:
        return 0.0
    return float(np.std(relays))


def max_forwarded(log) -> int:
    fwd = forwarded_counts(log)
    return int(fwd.max()) if fwd.size else 0


def packet_conservation(log) -> dict:
    """Exact custody identity over one run.

    Every origin send ends in exactly one of: a sink reception record, a
    drop record, or a queue slot still occupied at run end.
    """
    sends = log.send_t.data().size
    sink = log.rx_t.data().size
    drops = log.drop_t.data().size
    inflight = log.inflight_end
    reasons = log.drop_reason.data()
    by_reason = {
        name: int(np.count_nonzero(reasons == code))
        for code, name in enumerate(runlog.DROP_REASON_NAMES)
    }
    rx_keys = _pair_key(log.rx_origin.data(), log.rx_seqno.data())
    return {
        "sends": int(sends),
        "sink_rx": int(sink),
        "drops": int(drops),
        "inflight_end": int(inflight),
        "drops_by_reason": by_reason,
        "sink_rx_unique": bool(np.unique(rx_keys).size == rx_keys.size),
        "holds": bool(sends == sink + drops + inflight),
    }


def energy_conservation(log, cfg) -> dict:
    """Exact energy identities over one run, per node.

    ledger: consumed_pj*1000 + fj_rem + clipped_fj == sum over states of
    power(fJ/us) * state_time(us).
    coupling: radio-tx time == frames * airtime + acks * ack slot.
    """
    budget = energy_model.EnergyBudget(
        cfg.voltage_v, cfg.cpu_active_ma, cfg.cpu_sleep_ma,
        cfg.radio_tx_ma, cfg.radio_rx_ma, cfg.radio_idle_ma,
    )
    powers = [budget.power_fj_per_us(s) for s in range(energy_model.N_STATES)]
    meta = log.node_meta
    n = log.n_nodes
    st = meta["state_time_us"]
    air_us = round(cfg.airtime_ms * 1e3)
    ack_us = round(cfg.ack_slot_ms * 1e3)
    ledger_ok = True
    coupling_ok = True
    for i in range(n):
        total_fj = 0
        for s in range(energy_model.N_STATES):
            total_fj += powers[s] * int(st[i * 5 + s])
        lhs = int(meta["consumed_pj"][i]) * 1000 + int(meta["fj_rem"][i]) \
            + int(meta["clipped_fj"][i])
        if lhs != total_fj:
            ledger_ok = False
        t_tx = int(st[i * 5 + energy_model.STATE_RADIO_TX])
        expect = int(meta["frames_tx"][i]) * air_us + int(meta["acks_tx"][i]) * ack_us
        if t_tx != expect:
            coupling_ok = False
    return {
        "ledger": ledger_ok,
        "tx_coupling": coupling_ok,
        "holds": ledger_ok and coupling_ok,
    }


def node_report(log) -> list:
    """Per-node table: id, sent, forwarded, received, parent at run end.

    received counts custody transfers into the node that later resolved
    (forwards plus foreign-origin drops; sink receptions for the root).
    Packets still queued at run end are not attributed."""
    sent = sent_counts(log)
    fwd = forwarded_counts(log)
    n = log.n_nodes
    recv = np.zeros(n, dtype=np.int64)
    recv += fwd
    dn = log.drop_node.data()
    do = log.drop_origin.data()
    for k in range(dn.size):
        if dn[k] != do[k]:
            recv[dn[k]] += 1
    recv[0] = log.rx_t.data().size
    parents = log.node_meta.get("parent_end")
    rows = []
    for i in range(n):
        rows.append({
            "node_id": i,
            "sent": int(sent[i]),
            "forwarded": int(fwd[i]),
            "received": int(recv[i]),
            "parent": int(parents[i]) if parents is not None else -1,
        })
    return rows


def _delta_pct(a: float, b: float):
    if a == 0:
        return None
    return (b - a) / a * 100.0


def compare_report(log_ctp, log_elqr) -> dict:
    """Side-by-side per-node load and summary metrics for two matched runs."""
    if log_ctp.n_nodes != log_elqr.n_nodes:
        raise ValueError("logs disagree on node count")
    sent_c, sent_e = sent_counts(log_ctp), sent_counts(log_elqr)
    fwd_c, fwd_e = forwarded_counts(log_ctp), forwarded_counts(log_elqr)
    per_node = []
    for i in range(log_ctp.n_nodes):
        per_node.append({
            "node_id": i,
            "sent_ctp": int(sent_c[i]), "sent_elqr": int(sent_e[i]),
            "sent_delta_pct": _delta_pct(int(sent_c[i]), int(sent_e[i])),
            "forwarded_ctp": int(fwd_c[i]), "forwarded_elqr": int(fwd_e[i]),
            "forwarded_delta_pct": _delta_pct(int(fwd_c[i]), int(fwd_e[i])),
        })
    summary = {
        "prr": (prr(log_ctp), prr(log_elqr)),
        "max_forwarded": (max_forwarded(log_ctp), max_forwarded(log_elqr)),
        "forward_std": (relay_forward_std(log_ctp), relay_forward_std(log_elqr)),
        "first_death_s": (first_death_s(log_ctp), first_death_s(log_elqr)),
        "sink_received": (log_ctp.rx_t.data().size, log_elqr.rx_t.data().size),
    }
    return {"per_node": per_node, "summary": summary}


# ---- CSV emission; headers and column order are part of the interface ----

def write_load_csv(log, path) -> None:
    sent = sent_counts(log)
    fwd = forwarded_counts(log)
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["node_id", "sent", "forwarded"])
        for i in range(log.n_nodes):
            w.writerow([i, int(sent[i]), int(fwd[i])])


def write_prr_csv(log, path, window_s: float) -> None:
    t, ratio = prr_series(log, window_s)
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["t", "prr"])
        for k in range(len(t)):
            w.writerow([f"{t[k]:.6f}", f"{ratio[k]:.6f}"])


def write_alive_csv(log, path) -> None:
    (t, alive), _ = lifetime(log)
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["t", "alive"])
        for k in range(len(t)):
            w.writerow([f"{t[k]:.6f}", int(alive[k])])


def _fmt_opt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.6f}"
    return str(v)


def write_compare_csv(report, path) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["kind", "key", "ctp", "elqr", "delta_pct"])
        for row in report["per_node"]:
            w.writerow(["sent", row["node_id"], row["sent_ctp"],
                        row["sent_elqr"], _fmt_opt(row["sent_delta_pct"])])
        for row in report["per_node"]:
            w.writerow(["forwarded", row["node_id"], row["forwarded_ctp"],
                        row["forwarded_elqr"],
                        _fmt_opt(row["forwarded_delta_pct"])])
        for key, (c, e) in report["summary"].items():
            if c is None or e is None:
                delta = None
            else:
                delta = _delta_pct(float(c), float(e))
            w.writerow([
                "summary", key, _fmt_opt(c), _fmt_opt(e), _fmt_opt(delta),
            ])
