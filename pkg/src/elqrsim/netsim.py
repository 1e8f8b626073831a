"""Deterministic discrete-event network core.

Grid-uniform topology with asymmetric log-distance links, per-transmission
Bernoulli delivery from a logistic SNR/PRR curve, unicast ack and
retransmission, FIFO per-node queues, periodic traffic and beacons, and
exact integer energy accrual. Time is int64 microseconds; events execute in
(time, insertion order). One run produces one RunLog from which every
metric derives.

Written in Cython pure-Python mode; importable compiled or interpreted.
"""

import heapq
import math

import cython
import numpy as np

if cython.compiled:
    from cython.cimports.libc.math import cos, exp, log, log10, sqrt
else:
    from math import cos, exp, log, log10, sqrt

from elqrsim import _rng, energy_model, link_estimation, routing, runlog
from elqrsim.config import ScenarioConfig, validate as _validate_config

COMPILED = cython.compiled

# typed module globals: compiled access is a C read, not a dict lookup
EV_TRAFFIC = cython.declare(cython.longlong, 0)
EV_SEND = cython.declare(cython.longlong, 1)
EV_BEACON = cython.declare(cython.longlong, 2)
EV_BEACON_DONE = cython.declare(cython.longlong, 3)
EV_DATA_DONE = cython.declare(cython.longlong, 4)
EV_SNAPSHOT = cython.declare(cython.longlong, 5)
EV_EPOCH = cython.declare(cython.longlong, 6)
EV_AUDIT = cython.declare(cython.longlong, 7)
EV_END = cython.declare(cython.longlong, 8)

FRAME_NONE = cython.declare(cython.longlong, 0)
FRAME_BEACON = cython.declare(cython.longlong, 1)
FRAME_DATA = cython.declare(cython.longlong, 2)

ST_ACT = cython.declare(cython.longlong, energy_model.STATE_CPU_ACTIVE)
ST_SLP = cython.declare(cython.longlong, energy_model.STATE_CPU_SLEEP)
ST_TX = cython.declare(cython.longlong, energy_model.STATE_RADIO_TX)
ST_RX = cython.declare(cython.longlong, energy_model.STATE_RADIO_RX)

ROOT_CAPACITY_J = 1e6  # mains-powered sink: same ledger, effectively immortal

_AUDIT_DEFER_US = cython.declare(cython.longlong, 5_000)
_AUDIT_MAX_DEFERS = cython.declare(cython.longlong, 20)

# channel draws run inline for speed; identical arithmetic to _rng.Stream
# (draw_probe + tests pin the equivalence)
MASK64 = cython.declare(cython.ulonglong, 0xFFFFFFFFFFFFFFFF)
_TWO_PI = cython.declare(cython.double, 6.283185307179586)
_INV_2_53 = cython.declare(cython.double, 1.1102230246251565e-16)


class Topology:
    """Static radio environment: positions and directed link gains."""

    def __init__(self, positions, gain_db, noise_floor_db, area):
        self.positions = np.ascontiguousarray(positions, dtype=np.float64)
        self.gain_db = np.ascontiguousarray(gain_db, dtype=np.float64)
        self.noise_floor_db = float(noise_floor_db)
        self.area = (float(area[0]), float(area[1]))
        self.n = self.positions.shape[0]
        if self.gain_db.shape != (self.n, self.n):
            raise ValueError("gain matrix must be n x n")


def path_loss_db(d_m: float, pl0_db: float = 40.0, d0_m: float = 1.0,
                 path_loss_exp: float = 3.0) -> float:
    """Log-distance path loss; distances below d0 clamp to d0."""
    d = d_m if d_m > d0_m else d0_m
    return pl0_db + 10.0 * path_loss_exp * log10(d / d0_m)


def link_prr(gain_db: float, noise_floor_db: float, k: float = 0.8,
             snr_mid_db: float = 6.0) -> float:
    """Packet reception probability from link gain over the noise floor."""
    snr = gain_db - noise_floor_db
    p = 1.0 / (1.0 + exp(-k * (snr - snr_mid_db)))
    if p < 0.0:
        return 0.0
    if p > 1.0:
        return 1.0
    return p


def generate_uniform_topology(
    n: int,
    area_w: float,
    area_h: float,
    seed: int,
    pl0_db: float = 40.0,
    d0_m: float = 1.0,
    path_loss_exp: float = 3.0,
    tx_power_db: float = 0.0,
    asym_sigma_db: float = 3.0,
    noise_floor_db: float = -93.0,
) -> Topology:
    """Grid-uniform placement: ceil(sqrt(n)) x ceil(sqrt(n)) cells, one node
    placed uniformly inside each cell in row-major order; node 0 (the sink)
    lands in the first cell. Directed gains get a static normal asymmetry
    offset per ordered pair."""
    if n < 1:
        raise ValueError("need at least one node")
    if area_w <= 0 or area_h <= 0:
        raise ValueError("area must be positive")
    cols = math.ceil(math.sqrt(n))
    rows = cols
    cell_w = area_w / cols
    cell_h = area_h / rows
    stream = _rng.Stream(seed, _rng.PURPOSE_TOPOLOGY, 0)
    pos = np.empty((n, 2), dtype=np.float64)
    for k in range(n):
        r, c = divmod(k, cols)
        pos[k, 0] = (c + stream.uniform()) * cell_w
        pos[k, 1] = (r + stream.uniform()) * cell_h
    gain = np.full((n, n), -np.inf, dtype=np.float64)
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            dx = pos[i, 0] - pos[j, 0]
            dy = pos[i, 1] - pos[j, 1]
            d = math.sqrt(dx * dx + dy * dy)
            pl = path_loss_db(d, pl0_db, d0_m, path_loss_exp)
            gain[i, j] = tx_power_db - pl + asym_sigma_db * stream.normal()
    return Topology(pos, gain, noise_floor_db, (area_w, area_h))


@cython.cclass
class _NodeRt:
    """Per-node runtime: protocol state plus queue/radio/energy bookkeeping."""

    nid = cython.declare(cython.longlong, visibility="public")
    is_root = cython.declare(cython.longlong, visibility="public")
    alive = cython.declare(cython.longlong, visibility="public")
    death_logged = cython.declare(cython.longlong, visibility="public")
    death_t_us = cython.declare(cython.longlong, visibility="public")

    table = cython.declare(object, visibility="public")
    est = cython.declare(object, visibility="public")
    acct = cython.declare(object, visibility="public")
    rs0 = cython.declare(cython.ulonglong, visibility="public")
    rs1 = cython.declare(cython.ulonglong, visibility="public")

    q_origin = cython.declare(cython.longlong[:], visibility="public")
    q_seqno = cython.declare(cython.longlong[:], visibility="public")
    q_cap = cython.declare(cython.longlong, visibility="public")
    q_head = cython.declare(cython.longlong, visibility="public")
    q_len = cython.declare(cython.longlong, visibility="public")

    last_accept = cython.declare(cython.longlong[:], visibility="public")

    busy = cython.declare(cython.longlong, visibility="public")
    busy_start_us = cython.declare(cython.longlong, visibility="public")
    frame_kind = cython.declare(cython.longlong, visibility="public")
    beacon_pending = cython.declare(cython.longlong, visibility="public")

    cur_dest = cython.declare(cython.longlong, visibility="public")
    cur_attempts = cython.declare(cython.longlong, visibility="public")
    cur_accepted = cython.declare(cython.longlong, visibility="public")
    cur_dsn = cython.declare(cython.longlong, visibility="public")
    tx_dsn = cython.declare(cython.longlong, visibility="public")

    bcn_path = cython.declare(cython.longlong, visibility="public")
    bcn_hops = cython.declare(cython.longlong, visibility="public")
    bcn_energy = cython.declare(cython.longlong, visibility="public")
    bcn_seqno = cython.declare(cython.longlong, visibility="public")

    next_own_seqno = cython.declare(cython.longlong, visibility="public")
    next_beacon_seqno = cython.declare(cython.longlong, visibility="public")

    last_acc_us = cython.declare(cython.longlong, visibility="public")
    last_beacon_tx_us = cython.declare(cython.longlong, visibility="public")

    own_path = cython.declare(cython.longlong, visibility="public")
    beta = cython.declare(cython.longlong, visibility="public")

    sent_own = cython.declare(cython.longlong, visibility="public")
    forwarded = cython.declare(cython.longlong, visibility="public")
    frames_tx = cython.declare(cython.longlong, visibility="public")
    acks_tx = cython.declare(cython.longlong, visibility="public")

    def __init__(self, nid, is_root, table, est, acct, rng_state, q_cap,
                 n_nodes, beta0, etx_max):
        self.nid = nid
        self.is_root = 1 if is_root else 0
        self.alive = 1
        self.death_logged = 0
        self.death_t_us = -1
        self.table = table
        self.est = est
        self.acct = acct
        self.rs0 = rng_state[0]
        self.rs1 = rng_state[1]
        self.q_origin = np.zeros(q_cap, dtype=np.int64)
        self.q_seqno = np.zeros(q_cap, dtype=np.int64)
        self.q_cap = q_cap
        self.q_head = 0
        self.q_len = 0
        self.last_accept = np.zeros(n_nodes, dtype=np.int64)
        self.busy = 0
        self.busy_start_us = 0
        self.frame_kind = FRAME_NONE
        self.beacon_pending = 0
        self.cur_dest = -1
        self.cur_attempts = 0
        self.cur_accepted = 0
        self.cur_dsn = 0
        self.tx_dsn = 0
        self.bcn_path = 0
        self.bcn_hops = 0
        self.bcn_energy = 0
        self.bcn_seqno = 0
        self.next_own_seqno = 0
        self.next_beacon_seqno = 0
        self.last_acc_us = 0
        self.last_beacon_tx_us = -(1 << 40)
        self.own_path = 0 if is_root else etx_max
        self.beta = beta0
        self.sent_own = 0
        self.forwarded = 0
        self.frames_tx = 0
        self.acks_tx = 0

    @cython.ccall
    def q_push(self, origin: cython.longlong, seqno: cython.longlong) -> cython.longlong:
        if self.q_len >= self.q_cap:
            return 0
        idx: cython.longlong = (self.q_head + self.q_len) % self.q_cap
        self.q_origin[idx] = origin
        self.q_seqno[idx] = seqno
        self.q_len += 1
        return 1

    @cython.ccall
    def q_pop(self) -> None:
        self.q_head = (self.q_head + 1) % self.q_cap
        self.q_len -= 1


@cython.cclass
class Engine:
    cfg = cython.declare(object, visibility="public")
    topology = cython.declare(object, visibility="public")
    log = cython.declare(object, visibility="public")
    nodes = cython.declare(list, visibility="public")
    heap = cython.declare(list, visibility="public")
    seq = cython.declare(cython.longlong, visibility="public")
    n = cython.declare(cython.longlong, visibility="public")
    root = cython.declare(cython.longlong, visibility="public")
    protocol_elqr = cython.declare(cython.longlong, visibility="public")

    rx_off = cython.declare(cython.longlong[:], visibility="public")
    rx_ids = cython.declare(cython.longlong[:], visibility="public")
    snr_fwd = cython.declare(cython.double[:], visibility="public")
    snr_rev = cython.declare(cython.double[:], visibility="public")
    pos_in_rx = cython.declare(cython.longlong[:], visibility="public")
    stamp = cython.declare(cython.longlong[:], visibility="public")
    stamp_tok = cython.declare(cython.longlong, visibility="public")

    duration_us = cython.declare(cython.longlong, visibility="public")
    traffic_us = cython.declare(cython.longlong, visibility="public")
    beacon_us = cython.declare(cython.longlong, visibility="public")
    snapshot_us = cython.declare(cython.longlong, visibility="public")
    audit_us = cython.declare(cython.longlong, visibility="public")
    epoch_us = cython.declare(cython.longlong, visibility="public")
    next_audit_us = cython.declare(cython.longlong, visibility="public")
    air_us = cython.declare(cython.longlong, visibility="public")
    ack_slot_us = cython.declare(cython.longlong, visibility="public")
    staleness_us = cython.declare(cython.longlong, visibility="public")
    expedite_gap_us = cython.declare(cython.longlong, visibility="public")
    expedite_thresh = cython.declare(cython.longlong, visibility="public")

    max_attempts = cython.declare(cython.longlong, visibility="public")
    etx_max = cython.declare(cython.longlong, visibility="public")
    init_etx = cython.declare(cython.longlong, visibility="public")
    hysteresis = cython.declare(cython.longlong, visibility="public")
    alpha_mj = cython.declare(cython.longlong, visibility="public")
    beta_max = cython.declare(cython.longlong, visibility="public")
    epoch_n = cython.declare(cython.longlong, visibility="public")

    p_act = cython.declare(cython.longlong, visibility="public")
    p_slp = cython.declare(cython.longlong, visibility="public")
    p_tx = cython.declare(cython.longlong, visibility="public")
    p_rx = cython.declare(cython.longlong, visibility="public")

    temporal_sigma = cython.declare(cython.double, visibility="public")
    prr_k = cython.declare(cython.double, visibility="public")
    prr_mid = cython.declare(cython.double, visibility="public")
    white_snr = cython.declare(cython.double, visibility="public")

    beacons_in_flight = cython.declare(cython.longlong, visibility="public")
    ended = cython.declare(cython.longlong, visibility="public")

    def __init__(self, cfg: ScenarioConfig, topology: Topology = None):
        _validate_config(cfg)
        self.cfg = cfg
        n = cfg.nodes
        self.n = n
        self.root = 0
        self.protocol_elqr = 1 if cfg.protocol == "elqr" else 0
        if topology is None:
            topology = generate_uniform_topology(
                n, cfg.area_w, cfg.area_h, cfg.seed,
                pl0_db=cfg.pl0_db, d0_m=cfg.d0_m,
                path_loss_exp=cfg.path_loss_exp, tx_power_db=cfg.tx_power_db,
                asym_sigma_db=cfg.asym_sigma_db,
                noise_floor_db=cfg.noise_floor_db,
            )
        if topology.n != n:
            raise ValueError("topology size does not match config nodes")
        self.topology = topology

        self.duration_us = round(cfg.duration_s * 1e6)
        self.traffic_us = round(cfg.traffic_period_s * 1e6)
        self.beacon_us = round(cfg.beacon_interval_s * 1e6)
        self.snapshot_us = round(cfg.snapshot_interval_s * 1e6)
        self.audit_us = round(cfg.audit_interval_s * 1e6)
        self.epoch_us = self.traffic_us * cfg.epoch_rounds
        self.air_us = round(cfg.airtime_ms * 1e3)
        self.ack_slot_us = round(cfg.ack_slot_ms * 1e3)
        self.staleness_us = self.beacon_us * cfg.staleness_periods
        self.expedite_gap_us = round(cfg.expedite_min_gap_ms * 1e3)
        self.expedite_thresh = cfg.expedite_threshold_deci
        self.max_attempts = 1 + cfg.max_retries
        self.etx_max = cfg.etx_max_deci
        self.init_etx = cfg.initial_etx_deci
        self.hysteresis = cfg.hysteresis_deci
        self.alpha_mj = int(cfg.alpha_j * 1000 + 0.5)
        self.beta_max = cfg.beta_max_deci
        self.epoch_n = 0

        budget = energy_model.EnergyBudget(
            cfg.voltage_v, cfg.cpu_active_ma, cfg.cpu_sleep_ma,
            cfg.radio_tx_ma, cfg.radio_rx_ma, cfg.radio_idle_ma,
        )
        self.p_act = budget.power_fj_per_us(ST_ACT)
        self.p_slp = budget.power_fj_per_us(ST_SLP)
        self.p_tx = budget.power_fj_per_us(ST_TX)
        self.p_rx = budget.power_fj_per_us(ST_RX)

        self.temporal_sigma = cfg.temporal_sigma_db
        self.prr_k = cfg.prr_k
        self.prr_mid = cfg.prr_mid_db
        self.white_snr = cfg.white_snr_db

        # static SNR and potential-receiver lists
        snr_static = topology.gain_db - topology.noise_floor_db
        off = np.zeros(n + 1, dtype=np.int64)
        ids_parts = []
        pos_in_rx = np.full(n * n, -1, dtype=np.int64)
        for i in range(n):
            js = []
            for j in range(n):
                if j == i or not np.isfinite(snr_static[i, j]):
                    continue
                if link_prr(topology.gain_db[i, j], topology.noise_floor_db,
                            cfg.prr_k, cfg.prr_mid_db) >= cfg.link_floor_prr:
                    js.append(j)
            for k, j in enumerate(js):
                pos_in_rx[i * n + j] = k
            ids_parts.append(np.asarray(js, dtype=np.int64))
            off[i + 1] = off[i] + len(js)
        rx_ids = np.concatenate(ids_parts) if off[n] > 0 else np.zeros(0, dtype=np.int64)
        fwd = np.zeros(off[n], dtype=np.float64)
        rev = np.zeros(off[n], dtype=np.float64)
        for i in range(n):
            for k in range(off[i], off[i + 1]):
                j = rx_ids[k]
                fwd[k] = snr_static[i, j]
                rev[k] = snr_static[j, i]
        self.rx_off = off
        self.rx_ids = rx_ids
        self.snr_fwd = fwd
        self.snr_rev = rev
        self.pos_in_rx = pos_in_rx
        self.stamp = np.zeros(n, dtype=np.int64)
        self.stamp_tok = 0

        lam_pm = int(cfg.broadcast_lambda * 1000 + 0.5)
        mu_pm = int(cfg.combine_mu * 1000 + 0.5)
        self.nodes = []
        for i in range(n):
            table = routing.NeighborTable(cfg.table_size)
            est = link_estimation.EstimatorState(
                cfg.table_size, cfg.window, lam_pm, mu_pm, cfg.unicast_fold,
                cfg.etx_max_deci, cfg.initial_etx_deci,
            )
            table.bind_links(est.comb)
            cap_j = cfg.capacity_j
            if i == 0 and cfg.root_powered:
                cap_j = ROOT_CAPACITY_J
            acct = energy_model.EnergyAccount(cap_j, cfg.dead_threshold_j)
            state = _rng.derive_state(cfg.seed, _rng.PURPOSE_CHANNEL, i)
            self.nodes.append(
                _NodeRt(i, i == 0, table, est, acct, state,
                        cfg.queue_capacity, n, cfg.beta0_deci, cfg.etx_max_deci)
            )

        self.log = runlog.RunLog(n, cfg.seed, cfg.protocol_id, self.duration_us)
        self.heap = []
        self.seq = 0
        self.beacons_in_flight = 0
        self.ended = 0
        self.next_audit_us = self.audit_us

        # initial schedule; push order fixes same-time execution order
        self._push(0, EV_SNAPSHOT, -1, 0, 0)
        for i in range(n):
            offset = (i % 100) * 10_000
            self._push(offset, EV_BEACON, i, 0, 0)
        for i in range(1, n):
            offset = (i % 100) * 10_000
            self._push(offset, EV_TRAFFIC, i, 0, 0)
        self._push(self.epoch_us, EV_EPOCH, -1, 0, 0)
        self._push(self.audit_us, EV_AUDIT, -1, 0, 0)
        self._push(self.duration_us, EV_END, -1, 0, 0)

    # ---- plumbing ----

    @cython.cfunc
    def _push(self, t: cython.longlong, kind: cython.longlong,
              node: cython.longlong, a: cython.longlong, b: cython.longlong) -> None:
        heapq.heappush(self.heap, (t, self.seq, kind, node, a, b))
        self.seq += 1

    @cython.cfunc
    def _logistic(self, snr: cython.double) -> cython.double:
        return 1.0 / (1.0 + exp(-self.prr_k * (snr - self.prr_mid)))

    @cython.cfunc
    def _nd_u64(self, nd: _NodeRt) -> cython.ulonglong:
        x: cython.ulonglong = nd.rs0
        y: cython.ulonglong = nd.rs1
        nd.rs0 = y
        x = (x ^ ((x << 23) & MASK64)) & MASK64
        nd.rs1 = (x ^ y ^ (x >> 17) ^ (y >> 26)) & MASK64
        return (nd.rs1 + y) & MASK64

    @cython.cfunc
    def _nd_uniform(self, nd: _NodeRt) -> cython.double:
        return (self._nd_u64(nd) >> 11) * _INV_2_53

    @cython.cfunc
    def _nd_normal(self, nd: _NodeRt) -> cython.double:
        u1: cython.double = self._nd_uniform(nd)
        while u1 <= 0.0:
            u1 = self._nd_uniform(nd)
        u2: cython.double = self._nd_uniform(nd)
        return sqrt(-2.0 * log(u1)) * cos(_TWO_PI * u2)

    @cython.ccall
    def draw_probe(self, node: cython.longlong, n: cython.longlong) -> list:
        """Consume n (normal, uniform) pairs from a node's channel stream;
        test hook pinning the inline generator to the _rng.Stream reference."""
        out = []
        nd: _NodeRt = self.nodes[node]
        k: cython.longlong
        for k in range(n):
            out.append(self._nd_normal(nd))
            out.append(self._nd_uniform(nd))
        return out

    @cython.cfunc
    def _residual_mj(self, nd: _NodeRt) -> cython.longlong:
        return nd.acct.residual_pj() // 1_000_000_000

    @cython.cfunc
    def _acc_bg(self, nd: _NodeRt, t: cython.longlong) -> cython.longlong:
        """Background accrual (cpu sleep + radio rx) up to t. While a frame
        is in the air the window past its start stays pending; the frame's
        completion handler settles it."""
        if nd.busy and t > nd.busy_start_us:
            t = nd.busy_start_us
        dt: cython.longlong = t - nd.last_acc_us
        if dt <= 0 or nd.alive == 0:
            return nd.alive
        r: cython.longlong = nd.acct.accrue_us(self.p_slp, ST_SLP, dt)
        if r > 0:
            r = nd.acct.accrue_us(self.p_rx, ST_RX, dt)
        nd.last_acc_us = t
        if r <= 0:
            nd.alive = 0
        return nd.alive

    @cython.cfunc
    def _charge_tx(self, nd: _NodeRt, start_us: cython.longlong,
                   dur_us: cython.longlong) -> cython.longlong:
        """Charge one transmit window [start, start+dur); returns 1 if the
        radio-tx accrual was applied (the ledger was alive entering it)."""
        self._acc_bg(nd, start_us)
        applied: cython.longlong = 0
        if nd.alive:
            r: cython.longlong = nd.acct.accrue_us(self.p_act, ST_ACT, dur_us)
            if r > 0:
                r2: cython.longlong = nd.acct.accrue_us(self.p_tx, ST_TX, dur_us)
                applied = 1
                if r2 <= 0:
                    nd.alive = 0
            else:
                nd.alive = 0
        if start_us + dur_us > nd.last_acc_us:
            nd.last_acc_us = start_us + dur_us
        return applied

    @cython.cfunc
    def _settle_open_series(self, nd: _NodeRt, t: cython.longlong) -> None:
        # a delivered-but-unacked head packet already transferred custody
        # to its destination; resolve the handoff on the sender side so the
        # packet is never counted at two holders (death or end of run)
        if nd.cur_attempts > 0 and nd.cur_accepted:
            hd: cython.longlong = nd.q_head
            if nd.q_origin[hd] != nd.nid:
                self.log.log_forward(t, nd.nid, nd.q_origin[hd], nd.q_seqno[hd])
                nd.forwarded += 1
            nd.q_pop()
            nd.cur_attempts = 0
            nd.cur_accepted = 0

    @cython.cfunc
    def _death_proc(self, nd: _NodeRt, t: cython.longlong) -> None:
        if nd.death_logged:
            return
        nd.alive = 0
        nd.death_logged = 1
        nd.death_t_us = t
        self.log.log_death(t, nd.nid)
        self._settle_open_series(nd, t)
        # custody of everything still queued here ends now
        while nd.q_len > 0:
            idx: cython.longlong = nd.q_head
            self.log.log_drop(t, nd.nid, runlog.DROP_DEAD,
                              nd.q_origin[idx], nd.q_seqno[idx])
            nd.q_pop()
        nd.beacon_pending = 0
        nd.cur_attempts = 0
        nd.cur_accepted = 0
        # a dead node leaves the routing graph: parentless from here on, so
        # pointer walks never traverse its frozen table
        nd.table.parent_slot = -1
        nd.table.parent_id = -1

    # ---- frame start ----

    @cython.cfunc
    def _start_beacon(self, nd: _NodeRt, t: cython.longlong) -> None:
        bcn = routing.advertise(nd.table, nd.nid, nd.is_root == 1,
                                self._residual_mj(nd), nd.next_beacon_seqno,
                                self.etx_max)
        nd.next_beacon_seqno += 1
        nd.bcn_path = bcn.path_etx
        nd.bcn_hops = bcn.hops
        nd.bcn_energy = bcn.energy_mj
        nd.bcn_seqno = bcn.seqno
        nd.busy = 1
        nd.busy_start_us = t
        nd.frame_kind = FRAME_BEACON
        nd.beacon_pending = 0
        nd.last_beacon_tx_us = t
        self.beacons_in_flight += 1
        self._push(t + self.air_us, EV_BEACON_DONE, nd.nid, 0, 0)

    @cython.cfunc
    def _start_data(self, nd: _NodeRt, t: cython.longlong) -> None:
        nd.busy = 1
        nd.busy_start_us = t
        nd.frame_kind = FRAME_DATA
        nd.cur_attempts += 1
        self._push(t + self.air_us + self.ack_slot_us, EV_DATA_DONE, nd.nid, 0, 0)

    # ---- selection ----

    @cython.cfunc
    def _chain_reaches(self, start: cython.longlong,
                       target: cython.longlong) -> cython.longlong:
        """Follow parent links from start; 1 when they pass through target."""
        u: cython.longlong = start
        steps: cython.longlong = 0
        while u >= 0 and u != self.root and steps <= self.n:
            if u == target:
                return 1
            tu: _NodeRt = self.nodes[u]
            u = tu.table.parent_id
            steps += 1
        return 0

    @cython.cfunc
    def _reselect(self, nd: _NodeRt, t: cython.longlong) -> None:
        """Re-run parent selection and commit the verdict.

        A switch to a different parent is refused when that candidate
        currently routes through this node, the way a path-carrying
        advertisement is refused on self-containment. Adding an edge can
        only close a ring if the new parent already reaches the adopter,
        so with the refusal in place the parent graph stays acyclic at
        every instant no matter how stale the advertised costs are. On a
        refusal the node simply stays put until the graph moves.
        """
        if nd.is_root:
            return
        table = nd.table
        table.mark_stale(t, self.staleness_us)
        old_parent: cython.longlong = table.parent_id
        old_own: cython.longlong = nd.own_path
        if self.protocol_elqr:
            dec = routing.elqr_parent_selection(
                table, self.alpha_mj, nd.beta, nd.own_path)
        else:
            dec = routing.ctp_parent_selection(
                table, table.parent_id, self.hysteresis, nd.own_path)
        parent: cython.longlong = dec.parent
        if (parent >= 0 and parent != old_parent
                and self._chain_reaches(parent, nd.nid)):
            parent = -1
        if parent >= 0:
            table.set_parent(table.find(parent))
        else:
            ps: cython.longlong = table.parent_slot
            keep: cython.longlong = 0
            if ps >= 0 and table.ids[ps] == table.parent_id and table.parent_id >= 0:
                if (t - table.last_heard_us[ps] <= self.staleness_us
                        and table.path_deci[ps] < self.etx_max):
                    keep = 1
            if not keep:
                table.set_parent(-1)
        nd.own_path = table.own_path_now(0, self.etx_max)
        self.log.log_decision(
            t, nd.nid, dec.reason, dec.parent, dec.cost_deci, dec.energy_mj,
            dec.min_etx_deci, nd.beta if self.protocol_elqr else 0)
        if table.parent_id >= 0 and old_parent < 0 and nd.q_len > 0 and nd.busy == 0:
            self._push(t, EV_SEND, nd.nid, 0, 0)
        # own cost worsened badly: advertise the bad news soon
        if (nd.own_path > old_own + self.expedite_thresh
                and t - nd.last_beacon_tx_us >= self.expedite_gap_us):
            if nd.busy:
                nd.beacon_pending = 1
            else:
                nd.beacon_pending = 1
                self._push(t, EV_SEND, nd.nid, 0, 0)

    @cython.cfunc
    def _break_parent_loop(self, nd: _NodeRt, sender: cython.longlong,
                           t: cython.longlong) -> None:
        """Sender is this node's parent yet routes data through it. Drop the
        candidate until its next beacon and pick someone else; with nobody
        else usable, go parentless rather than keep the cycle."""
        slot: cython.longlong = nd.table.find(sender)
        if slot >= 0:
            nd.table.valid[slot] = 0
        self._reselect(nd, t)
        if nd.table.parent_id == sender:
            nd.table.set_parent(-1)
            nd.own_path = nd.table.own_path_now(0, self.etx_max)

    # ---- handlers ----

    @cython.cfunc
    def _on_traffic(self, t: cython.longlong, i: cython.longlong) -> None:
        nd: _NodeRt = self.nodes[i]
        if nd.alive == 0:
            return
        if self._acc_bg(nd, t) == 0:
            self._death_proc(nd, t)
            return
        seqno: cython.longlong = nd.next_own_seqno
        nd.next_own_seqno += 1
        self.log.log_send(t, i, seqno)
        nd.sent_own += 1
        if nd.q_push(i, seqno) == 0:
            self.log.log_drop(t, i, runlog.DROP_QUEUE_OVERFLOW, i, seqno)
        elif nd.busy == 0:
            self._push(t, EV_SEND, i, 0, 0)
        self._push(t + self.traffic_us, EV_TRAFFIC, i, 0, 0)

    @cython.cfunc
    def _on_send(self, t: cython.longlong, i: cython.longlong) -> None:
        nd: _NodeRt = self.nodes[i]
        if nd.alive == 0 or nd.busy:
            return
        if nd.beacon_pending:
            self._start_beacon(nd, t)
            return
        if nd.q_len == 0:
            return
        if nd.cur_attempts == 0:
            # first attempt locks the destination to the current parent and
            # opens a fresh link-layer series (retries reuse the same dsn)
            if nd.table.parent_id < 0:
                return
            nd.cur_dest = nd.table.parent_id
            nd.cur_accepted = 0
            nd.tx_dsn += 1
            nd.cur_dsn = nd.tx_dsn
        self._start_data(nd, t)

    @cython.cfunc
    def _on_beacon_due(self, t: cython.longlong, i: cython.longlong) -> None:
        nd: _NodeRt = self.nodes[i]
        if nd.alive == 0:
            return
        self._push(t + self.beacon_us, EV_BEACON, i, 0, 0)
        if nd.busy:
            nd.beacon_pending = 1
            return
        self._start_beacon(nd, t)

    @cython.cfunc
    def _on_beacon_done(self, t: cython.longlong, i: cython.longlong) -> None:
        nd: _NodeRt = self.nodes[i]
        if nd.frame_kind != FRAME_BEACON:
            return
        self.beacons_in_flight -= 1
        nd.busy = 0
        nd.frame_kind = FRAME_NONE
        if nd.alive == 0:
            return  # died before the frame started; it never aired
        if self._charge_tx(nd, nd.busy_start_us, self.air_us):
            nd.frames_tx += 1
        # the frame was on the air regardless of the sender's fate
        off: cython.longlong = self.rx_off[i]
        deg: cython.longlong = self.rx_off[i + 1] - off
        k: cython.longlong
        for k in range(deg):
            j: cython.longlong = self.rx_ids[off + k]
            rd: _NodeRt = self.nodes[j]
            inst: cython.double = self.snr_fwd[off + k] \
                + self.temporal_sigma * self._nd_normal(nd)
            if self._nd_uniform(nd) >= self._logistic(inst):
                continue
            if rd.alive == 0 or rd.busy:
                continue
            white: cython.longlong = 1 if inst >= self.white_snr else 0
            slot: cython.longlong = routing.handle_beacon_ints(
                rd.table, rd.est, i, nd.bcn_path, nd.bcn_hops, nd.bcn_energy,
                nd.bcn_seqno, t, white, self.init_etx, rd.own_path)
            if slot >= 0:
                self._reselect(rd, t)
        if nd.alive == 0:
            self._death_proc(nd, t)
            return
        if nd.beacon_pending or nd.q_len > 0:
            self._push(t, EV_SEND, i, 0, 0)

    @cython.cfunc
    def _on_data_done(self, t: cython.longlong, i: cython.longlong) -> None:
        nd: _NodeRt = self.nodes[i]
        if nd.frame_kind != FRAME_DATA:
            return
        nd.busy = 0
        nd.frame_kind = FRAME_NONE
        if nd.alive == 0:
            return  # died before the frame started; queue already settled
        if self._charge_tx(nd, nd.busy_start_us, self.air_us):
            nd.frames_tx += 1
        idx: cython.longlong = nd.q_head
        origin: cython.longlong = nd.q_origin[idx]
        seqno: cython.longlong = nd.q_seqno[idx]
        dest: cython.longlong = nd.cur_dest
        src_energy: cython.longlong = self._residual_mj(nd)

        off: cython.longlong = self.rx_off[i]
        deg: cython.longlong = self.rx_off[i + 1] - off
        delivered: cython.longlong = 0
        dest_k: cython.longlong = -1
        k: cython.longlong
        for k in range(deg):
            j: cython.longlong = self.rx_ids[off + k]
            rd: _NodeRt = self.nodes[j]
            inst: cython.double = self.snr_fwd[off + k] \
                + self.temporal_sigma * self._nd_normal(nd)
            u: cython.double = self._nd_uniform(nd)
            if u >= self._logistic(inst):
                continue
            if rd.alive == 0 or rd.busy:
                continue
            white: cython.longlong = 1 if inst >= self.white_snr else 0
            if j != dest:
                slot: cython.longlong = routing.handle_snooped_data(
                    rd.table, i, src_energy, t)
                if slot >= 0:
                    rd.est.set_white(slot, white)
                continue
            # destination reception; duplicate filter is per link series
            # (dsn), so the same packet revisiting later is accepted again
            delivered = 1
            dest_k = k
            wslot: cython.longlong = rd.table.find(i)
            if wslot >= 0:
                rd.est.set_white(wslot, white)
            if rd.last_accept[i] != nd.cur_dsn:
                rd.last_accept[i] = nd.cur_dsn
                nd.cur_accepted = 1
                if j == self.root:
                    self.log.log_sink_rx(t, origin, seqno)
                elif rd.q_push(origin, seqno) == 0:
                    self.log.log_drop(t, j, runlog.DROP_QUEUE_OVERFLOW,
                                      origin, seqno)
                elif rd.busy == 0 and rd.table.parent_id >= 0:
                    self._push(t, EV_SEND, j, 0, 0)
                if rd.table.parent_id == i:
                    # my parent is routing through me: certain two-node
                    # cycle, break it now instead of waiting out beacons
                    self._break_parent_loop(rd, i, t)

        # the ack draw is consumed even when the frame never arrived, so
        # the channel sequence does not depend on delivery outcomes
        az: cython.double = self._nd_normal(nd)
        au: cython.double = self._nd_uniform(nd)
        ack_ok: cython.longlong = 0
        if delivered:
            # link-layer ack regardless of duplicate/overflow
            rdd: _NodeRt = self.nodes[dest]
            ack_start: cython.longlong = nd.busy_start_us + self.air_us
            if self._charge_tx(rdd, ack_start, self.ack_slot_us):
                rdd.acks_tx += 1
            rev_inst: cython.double = self.snr_rev[off + dest_k] \
                + self.temporal_sigma * az
            if au < self._logistic(rev_inst):
                ack_ok = 1
            if rdd.alive == 0:
                self._death_proc(rdd, t)

        # custody settles exactly once, even if the sender's own transmit
        # charge just killed it (the frame was already on the air)
        if ack_ok:
            slot_d: cython.longlong = nd.table.find(dest)
            if slot_d >= 0:
                nd.est.record_unicast(slot_d, nd.cur_attempts, 1)
            nd.q_pop()
            if origin != i:
                self.log.log_forward(t, i, origin, seqno)
                nd.forwarded += 1
            nd.cur_attempts = 0
            nd.cur_accepted = 0
        elif nd.cur_attempts >= self.max_attempts:
            slot_d2: cython.longlong = nd.table.find(dest)
            if slot_d2 >= 0:
                nd.est.record_unicast(slot_d2, nd.cur_attempts, 0)
            nd.q_pop()
            if nd.cur_accepted:
                # delivered but every ack was lost: custody did transfer
                if origin != i:
                    self.log.log_forward(t, i, origin, seqno)
                    nd.forwarded += 1
            else:
                self.log.log_drop(t, i, runlog.DROP_RETRY_EXHAUST, origin, seqno)
            nd.cur_attempts = 0
            nd.cur_accepted = 0
        if nd.alive == 0:
            self._death_proc(nd, t)
            return
        if nd.beacon_pending or nd.q_len > 0:
            self._push(t, EV_SEND, i, 0, 0)

    @cython.cfunc
    def _on_snapshot(self, t: cython.longlong) -> None:
        self.log.begin_snapshot(t)
        i: cython.longlong
        for i in range(self.n):
            nd: _NodeRt = self.nodes[i]
            if nd.alive and self._acc_bg(nd, t) == 0:
                self._death_proc(nd, t)
            self.log.append_snapshot_residual(nd.acct.residual_pj())
        self._push(t + self.snapshot_us, EV_SNAPSHOT, -1, 0, 0)

    @cython.cfunc
    def _on_epoch(self, t: cython.longlong) -> None:
        self.epoch_n += 1
        i: cython.longlong
        for i in range(1, self.n):
            nd: _NodeRt = self.nodes[i]
            if nd.alive == 0:
                continue
            if self._acc_bg(nd, t) == 0:
                self._death_proc(nd, t)
                continue
            if self.protocol_elqr:
                nd.beta = routing.update_beta(nd.beta, self.epoch_n, self.beta_max)
            self._reselect(nd, t)
        self._push(t + self.epoch_us, EV_EPOCH, -1, 0, 0)

    @cython.cfunc
    def _on_audit(self, t: cython.longlong, defers: cython.longlong) -> None:
        if self.beacons_in_flight > 0 and defers < _AUDIT_MAX_DEFERS:
            self._push(t + _AUDIT_DEFER_US, EV_AUDIT, -1, defers + 1, 0)
            return
        cycles: cython.longlong = 0
        v: cython.longlong
        for v in range(self.n):
            nd: _NodeRt = self.nodes[v]
            if v == self.root or nd.alive == 0:
                continue
            self.stamp_tok += 1
            u: cython.longlong = v
            while u >= 0 and u != self.root:
                if self.stamp[u] == self.stamp_tok:
                    cycles += 1
                    break
                self.stamp[u] = self.stamp_tok
                tu: _NodeRt = self.nodes[u]
                u = tu.table.parent_id
        self.log.log_audit(t, cycles)
        self.next_audit_us += self.audit_us
        self._push(self.next_audit_us, EV_AUDIT, -1, 0, 0)

    @cython.cfunc
    def _on_end(self, t: cython.longlong) -> None:
        self.ended = 1
        i: cython.longlong
        inflight: cython.longlong = 0
        for i in range(self.n):
            nd: _NodeRt = self.nodes[i]
            if nd.alive:
                # settle the ledger; a node mid-frame settles only up to the
                # frame start (the unresolved frame is never charged/counted)
                if self._acc_bg(nd, t) == 0:
                    self._death_proc(nd, t)
                else:
                    self._settle_open_series(nd, t)
            inflight += nd.q_len
        meta = {}
        n = self.n
        sent = np.zeros(n, dtype=np.int64)
        fwd = np.zeros(n, dtype=np.int64)
        ftx = np.zeros(n, dtype=np.int64)
        atx = np.zeros(n, dtype=np.int64)
        cons = np.zeros(n, dtype=np.int64)
        frem = np.zeros(n, dtype=np.int64)
        clip = np.zeros(n, dtype=np.int64)
        alive = np.zeros(n, dtype=np.int64)
        dth = np.zeros(n, dtype=np.int64)
        par = np.zeros(n, dtype=np.int64)
        dacc = np.zeros(n, dtype=np.int64)
        qend = np.zeros(n, dtype=np.int64)
        refused = np.zeros(n, dtype=np.int64)
        evic = np.zeros(n, dtype=np.int64)
        st = np.zeros(n * 5, dtype=np.int64)
        for i in range(self.n):
            nd2: _NodeRt = self.nodes[i]
            sent[i] = nd2.sent_own
            fwd[i] = nd2.forwarded
            ftx[i] = nd2.frames_tx
            atx[i] = nd2.acks_tx
            cons[i] = nd2.acct.consumed_pj
            frem[i] = nd2.acct.fj_rem
            clip[i] = nd2.acct.clipped_fj
            alive[i] = nd2.alive
            dth[i] = nd2.death_t_us
            par[i] = nd2.table.parent_id
            dacc[i] = nd2.acct.dead_accruals
            qend[i] = nd2.q_len
            refused[i] = nd2.table.refused
            evic[i] = nd2.table.evictions
            stv = np.asarray(nd2.acct.state_time_us)
            for s in range(5):
                st[i * 5 + s] = stv[s]
        meta["sent_own"] = sent
        meta["forwarded"] = fwd
        meta["frames_tx"] = ftx
        meta["acks_tx"] = atx
        meta["consumed_pj"] = cons
        meta["fj_rem"] = frem
        meta["clipped_fj"] = clip
        meta["alive_end"] = alive
        meta["death_t_us"] = dth
        meta["parent_end"] = par
        meta["dead_accruals"] = dacc
        meta["queue_end"] = qend
        meta["beacons_refused"] = refused
        meta["evictions"] = evic
        meta["state_time_us"] = st
        self.log.finalize(int(inflight), meta)

    @cython.ccall
    def run(self):
        heap = self.heap
        while heap:
            ev = heapq.heappop(heap)
            t: cython.longlong = ev[0]
            kind: cython.longlong = ev[2]
            node: cython.longlong = ev[3]
            if kind == EV_DATA_DONE:
                self._on_data_done(t, node)
            elif kind == EV_SEND:
                self._on_send(t, node)
            elif kind == EV_TRAFFIC:
                self._on_traffic(t, node)
            elif kind == EV_BEACON_DONE:
                self._on_beacon_done(t, node)
            elif kind == EV_BEACON:
                self._on_beacon_due(t, node)
            elif kind == EV_SNAPSHOT:
                self._on_snapshot(t)
            elif kind == EV_EPOCH:
                self._on_epoch(t)
            elif kind == EV_AUDIT:
                self._on_audit(t, ev[4])
            elif kind == EV_END:
                self._on_end(t)
                break
        return self.log


def run(cfg: ScenarioConfig, topology: Topology = None):
    """Execute one scenario; returns the completed RunLog."""
    eng = Engine(cfg, topology)
    return eng.run()
