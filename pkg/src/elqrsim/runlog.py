"""Append-only run record.

Every metric derives from this log: per-packet custody events (send,
forward, sink reception, drop), node deaths, periodic residual-energy
snapshots, parent decisions, and loop audits. Storage is columnar int64 so
runs are cheap to hold and byte-identity between runs is well defined
(canonical_bytes / digest).

Written in Cython pure-Python mode; importable compiled or interpreted.
"""

import hashlib
import struct

import cython
import numpy as np

COMPILED = cython.compiled

DROP_QUEUE_OVERFLOW = 0
DROP_RETRY_EXHAUST = 1
DROP_DEAD = 2
DROP_REASON_NAMES = ("queue_overflow", "retry_exhaust", "dead")

PROTOCOL_CTP = 0
PROTOCOL_ELQR = 1
PROTOCOL_NAMES = ("ctp", "elqr")


@cython.cclass
class IntCol:
    """Growable int64 column."""

    n = cython.declare(cython.longlong, visibility="public")
    buf = cython.declare(cython.longlong[:], visibility="public")

    def __init__(self, cap: int = 1024):
        self.n = 0
        self.buf = np.empty(max(cap, 16), dtype=np.int64)

    @cython.cfunc
    def _grow(self) -> None:
        old = np.asarray(self.buf)
        new = np.empty(old.shape[0] * 2, dtype=np.int64)
        new[: self.n] = old[: self.n]
        self.buf = new

    @cython.ccall
    def append(self, v: cython.longlong) -> None:
        if self.n == self.buf.shape[0]:
            self._grow()
        self.buf[self.n] = v
        self.n += 1

    def data(self) -> np.ndarray:
        """Zero-copy view of the filled part."""
        return np.asarray(self.buf[: self.n])


@cython.cclass
class RunLog:
    n_nodes = cython.declare(cython.longlong, visibility="public")
    seed = cython.declare(cython.longlong, visibility="public")
    protocol_id = cython.declare(cython.longlong, visibility="public")
    duration_us = cython.declare(cython.longlong, visibility="public")
    inflight_end = cython.declare(cython.longlong, visibility="public")
    finalized = cython.declare(cython.longlong, visibility="public")

    send_t = cython.declare(IntCol, visibility="public")
    send_origin = cython.declare(IntCol, visibility="public")
    send_seqno = cython.declare(IntCol, visibility="public")

    fwd_t = cython.declare(IntCol, visibility="public")
    fwd_node = cython.declare(IntCol, visibility="public")
    fwd_origin = cython.declare(IntCol, visibility="public")
    fwd_seqno = cython.declare(IntCol, visibility="public")

    rx_t = cython.declare(IntCol, visibility="public")
    rx_origin = cython.declare(IntCol, visibility="public")
    rx_seqno = cython.declare(IntCol, visibility="public")

    drop_t = cython.declare(IntCol, visibility="public")
    drop_node = cython.declare(IntCol, visibility="public")
    drop_reason = cython.declare(IntCol, visibility="public")
    drop_origin = cython.declare(IntCol, visibility="public")
    drop_seqno = cython.declare(IntCol, visibility="public")

    death_t = cython.declare(IntCol, visibility="public")
    death_node = cython.declare(IntCol, visibility="public")

    audit_t = cython.declare(IntCol, visibility="public")
    audit_cycles = cython.declare(IntCol, visibility="public")

    dec_t = cython.declare(IntCol, visibility="public")
    dec_node = cython.declare(IntCol, visibility="public")
    dec_reason = cython.declare(IntCol, visibility="public")
    dec_parent = cython.declare(IntCol, visibility="public")
    dec_cost = cython.declare(IntCol, visibility="public")
    dec_energy = cython.declare(IntCol, visibility="public")
    dec_minetx = cython.declare(IntCol, visibility="public")
    dec_beta = cython.declare(IntCol, visibility="public")

    snap_t = cython.declare(IntCol, visibility="public")
    snap_resid = cython.declare(IntCol, visibility="public")  # n_nodes rows per snapshot, pJ

    node_meta = cython.declare(object, visibility="public")  # dict[str, np.ndarray] at finalize

    def __init__(self, n_nodes: int, seed: int, protocol_id: int, duration_us: int):
        self.n_nodes = n_nodes
        self.seed = seed
        self.protocol_id = protocol_id
        self.duration_us = duration_us
        self.inflight_end = 0
        self.finalized = 0
        self.send_t = IntCol()
        self.send_origin = IntCol()
        self.send_seqno = IntCol()
        self.fwd_t = IntCol()
        self.fwd_node = IntCol()
        self.fwd_origin = IntCol()
        self.fwd_seqno = IntCol()
        self.rx_t = IntCol()
        self.rx_origin = IntCol()
        self.rx_seqno = IntCol()
        self.drop_t = IntCol()
        self.drop_node = IntCol()
        self.drop_reason = IntCol()
        self.drop_origin = IntCol()
        self.drop_seqno = IntCol()
        self.death_t = IntCol(64)
        self.death_node = IntCol(64)
        self.audit_t = IntCol(64)
        self.audit_cycles = IntCol(64)
        self.dec_t = IntCol()
        self.dec_node = IntCol()
        self.dec_reason = IntCol()
        self.dec_parent = IntCol()
        self.dec_cost = IntCol()
        self.dec_energy = IntCol()
        self.dec_minetx = IntCol()
        self.dec_beta = IntCol()
        self.snap_t = IntCol(256)
        self.snap_resid = IntCol()
        self.node_meta = {}

    @cython.ccall
    def log_send(self, t: cython.longlong, origin: cython.longlong, seqno: cython.longlong) -> None:
        self.send_t.append(t)
        self.send_origin.append(origin)
        self.send_seqno.append(seqno)

    @cython.ccall
    def log_forward(
        self, t: cython.longlong, node: cython.longlong,
        origin: cython.longlong, seqno: cython.longlong,
    ) -> None:
        self.fwd_t.append(t)
        self.fwd_node.append(node)
        self.fwd_origin.append(origin)
        self.fwd_seqno.append(seqno)

    @cython.ccall
    def log_sink_rx(self, t: cython.longlong, origin: cython.longlong, seqno: cython.longlong) -> None:
        self.rx_t.append(t)
        self.rx_origin.append(origin)
        self.rx_seqno.append(seqno)

    @cython.ccall
    def log_drop(
        self, t: cython.longlong, node: cython.longlong, reason: cython.longlong,
        origin: cython.longlong, seqno: cython.longlong,
    ) -> None:
        self.drop_t.append(t)
        self.drop_node.append(node)
        self.drop_reason.append(reason)
        self.drop_origin.append(origin)
        self.drop_seqno.append(seqno)

    @cython.ccall
    def log_death(self, t: cython.longlong, node: cython.longlong) -> None:
        self.death_t.append(t)
        self.death_node.append(node)

    @cython.ccall
    def log_audit(self, t: cython.longlong, cycles: cython.longlong) -> None:
        self.audit_t.append(t)
        self.audit_cycles.append(cycles)

    @cython.ccall
    def log_decision(
        self, t: cython.longlong, node: cython.longlong, reason: cython.longlong,
        parent: cython.longlong, cost: cython.longlong, energy_mj: cython.longlong,
        minetx: cython.longlong, beta: cython.longlong,
    ) -> None:
        self.dec_t.append(t)
        self.dec_node.append(node)
        self.dec_reason.append(reason)
        self.dec_parent.append(parent)
        self.dec_cost.append(cost)
        self.dec_energy.append(energy_mj)
        self.dec_minetx.append(minetx)
        self.dec_beta.append(beta)

    @cython.ccall
    def begin_snapshot(self, t: cython.longlong) -> None:
        self.snap_t.append(t)

    @cython.ccall
    def append_snapshot_residual(self, pj: cython.longlong) -> None:
        self.snap_resid.append(pj)

    def finalize(self, inflight_end: int, node_meta: dict) -> None:
        self.inflight_end = inflight_end
        self.node_meta = {
            k: np.ascontiguousarray(v, dtype=np.int64) for k, v in node_meta.items()
        }
        self.finalized = 1

    # fixed serialization order for byte identity
    def _columns(self):
        return (
            ("send_t", self.send_t), ("send_origin", self.send_origin),
            ("send_seqno", self.send_seqno),
            ("fwd_t", self.fwd_t), ("fwd_node", self.fwd_node),
            ("fwd_origin", self.fwd_origin), ("fwd_seqno", self.fwd_seqno),
            ("rx_t", self.rx_t), ("rx_origin", self.rx_origin),
            ("rx_seqno", self.rx_seqno),
            ("drop_t", self.drop_t), ("drop_node", self.drop_node),
            ("drop_reason", self.drop_reason), ("drop_origin", self.drop_origin),
            ("drop_seqno", self.drop_seqno),
            ("death_t", self.death_t), ("death_node", self.death_node),
            ("audit_t", self.audit_t), ("audit_cycles", self.audit_cycles),
            ("dec_t", self.dec_t), ("dec_node", self.dec_node),
            ("dec_reason", self.dec_reason), ("dec_parent", self.dec_parent),
            ("dec_cost", self.dec_cost), ("dec_energy", self.dec_energy),
            ("dec_minetx", self.dec_minetx), ("dec_beta", self.dec_beta),
            ("snap_t", self.snap_t), ("snap_resid", self.snap_resid),
        )

    def canonical_bytes(self) -> bytes:
        parts = [
            b"ELQRSIMLOG1",
            struct.pack(
                "<6q", self.n_nodes, self.seed, self.protocol_id,
                self.duration_us, self.inflight_end, self.finalized,
            ),
        ]
        for name, col in self._columns():
            parts.append(name.encode())
            parts.append(struct.pack("<q", col.n))
            parts.append(col.data().tobytes())
        for key in sorted(self.node_meta):
            arr = self.node_meta[key]
            parts.append(key.encode())
            parts.append(struct.pack("<q", arr.size))
            parts.append(arr.tobytes())
        return b"".join(parts)

    def digest(self) -> str:
        return hashlib.sha256(self.canonical_bytes()).hexdigest()


def _fmt_us(us: int) -> str:
    return f"{us // 1_000_000}.{us % 1_000_000:06d}"


def _fmt_pj(pj: int) -> str:
    sign = "-" if pj < 0 else ""
    pj = abs(pj)
    return f"{sign}{pj // 10**12}.{pj % 10**12:012d}"


def save_events(log: RunLog, path) -> None:
    """Write the custody/death/audit record streams as a text event file."""
    with open(path, "w") as f:
        f.write("# elqrsim event log v1\n")
        f.write(
            f"# nodes={log.n_nodes} seed={log.seed} "
            f"protocol={PROTOCOL_NAMES[log.protocol_id]} "
            f"duration_s={_fmt_us(log.duration_us)} inflight_end={log.inflight_end}\n"
        )
        st, so, sq = log.send_t.data(), log.send_origin.data(), log.send_seqno.data()
        f.write("# send: t origin seqno\n")
        for i in range(len(st)):
            f.write(f"S {_fmt_us(st[i])} {so[i]} {sq[i]}\n")
        ft, fn = log.fwd_t.data(), log.fwd_node.data()
        fo, fq = log.fwd_origin.data(), log.fwd_seqno.data()
        f.write("# forward: t node origin seqno\n")
        for i in range(len(ft)):
            f.write(f"F {_fmt_us(ft[i])} {fn[i]} {fo[i]} {fq[i]}\n")
        rt, ro, rq = log.rx_t.data(), log.rx_origin.data(), log.rx_seqno.data()
        f.write("# sink_rx: t origin seqno\n")
        for i in range(len(rt)):
            f.write(f"R {_fmt_us(rt[i])} {ro[i]} {rq[i]}\n")
        dt, dn = log.drop_t.data(), log.drop_node.data()
        dr, do, dq = log.drop_reason.data(), log.drop_origin.data(), log.drop_seqno.data()
        f.write("# drop: t node reason origin seqno\n")
        for i in range(len(dt)):
            f.write(
                f"D {_fmt_us(dt[i])} {dn[i]} {DROP_REASON_NAMES[dr[i]]} {do[i]} {dq[i]}\n"
            )
        xt, xn = log.death_t.data(), log.death_node.data()
        f.write("# death: t node\n")
        for i in range(len(xt)):
            f.write(f"X {_fmt_us(xt[i])} {xn[i]}\n")
        at, ac = log.audit_t.data(), log.audit_cycles.data()
        f.write("# audit: t cycles\n")
        for i in range(len(at)):
            f.write(f"A {_fmt_us(at[i])} {ac[i]}\n")


def save_snapshots_csv(log: RunLog, path) -> None:
    """Snapshot CSV: one row per node per snapshot time."""
    n = log.n_nodes
    ts = log.snap_t.data()
    resid = log.snap_resid.data()
    with open(path, "w") as f:
        f.write("t,node_id,residual_j\n")
        for i in range(len(ts)):
            base = i * n
            for node in range(n):
                f.write(f"{_fmt_us(ts[i])},{node},{_fmt_pj(resid[base + node])}\n")
