"""Parent selection for a data-gathering tree.

Two engines over one neighbor table: a baseline that minimizes cumulative
ETX with switch hysteresis, and a joint energy/link-quality selector with an
energy floor (alpha) and a growing ETX margin (beta) that widens every
100-round epoch. Cumulative candidate cost of a neighbor is its advertised
path ETX plus the estimated link ETX to it, in deci-transmissions.

Both engines apply the same loop-safety guard: a candidate advertising a
path cost at or above the selecting node's own current cost is never chosen.

Written in Cython pure-Python mode; importable compiled or interpreted.
"""

from dataclasses import dataclass

import cython
import numpy as np

COMPILED = cython.compiled

ETX_MAX_DECI_DEFAULT = 500
HOPS_UNKNOWN = 1 << 20

# Guard disabled sentinel: no real path cost reaches this.
GUARD_OFF = 1 << 62

REASON_JOINT_BEST = 0
REASON_BEST_ETX = 1
REASON_BEST_ENERGY = 2
REASON_EXHAUSTED = 3
REASON_MIN_ETX = 4
REASON_KEEP_HYSTERESIS = 5

REASON_NAMES = (
    "joint-best",
    "best-etx-energy-ok",
    "best-energy-etx-ok",
    "exhausted",
    "min-etx",
    "keep-hysteresis",
)


@dataclass(frozen=True)
class Beacon:
    """Routing control frame. Energy rides along in millijoules."""

    origin: int
    parent: int
    path_etx: int  # deci-ETX; 0 only for the root
    hops: int
    energy_mj: int
    seqno: int


@dataclass(frozen=True)
class DataPacket:
    origin: int
    seqno: int
    hop_src: int
    hop_src_energy_mj: int
    payload_len: int = 28


@dataclass(frozen=True)
class NeighborEntry:
    nodeid: int
    link_etx: int  # deci
    path_etx: int  # deci
    energy_mj: int
    hops: int
    valid: bool
    pinned: bool
    last_heard_us: int

    @property
    def candidate_cost(self) -> int:
        return self.path_etx + self.link_etx


@dataclass(frozen=True)
class ParentDecision:
    parent: int  # node id, -1 when exhausted
    reason: int
    cost_deci: int = 0
    energy_mj: int = 0
    min_etx_deci: int = 0

    @property
    def reason_name(self) -> str:
        return REASON_NAMES[self.reason]


@cython.cfunc
def _rhu(num: cython.longlong, den: cython.longlong) -> cython.longlong:
    return (num + den // 2) // den


def update_beta(beta_deci: int, epoch: int, beta_max_deci: int = ETX_MAX_DECI_DEFAULT) -> int:
    """Grow the ETX margin at a completed 100-round epoch boundary.

    beta' = min(beta_max, beta + beta * epoch / 100), round half up.
    """
    if epoch < 1:
        raise ValueError("epoch counts completed 100-round blocks, >= 1")
    b = beta_deci + _rhu(beta_deci * epoch, 100)
    if b > beta_max_deci:
        b = beta_max_deci
    return b


@cython.cclass
class NeighborTable:
    """Fixed-size slotted neighbor table for one node.

    Estimated link ETX lives in a centi-ETX buffer; by default the table owns
    one (handy for tests), `bind_links` swaps in the estimator's shared
    buffer so both modules see the same values.
    """

    slots = cython.declare(cython.longlong, visibility="public")
    parent_slot = cython.declare(cython.longlong, visibility="public")
    parent_id = cython.declare(cython.longlong, visibility="public")
    refused = cython.declare(cython.longlong, visibility="public")
    evictions = cython.declare(cython.longlong, visibility="public")

    ids = cython.declare(cython.longlong[:], visibility="public")
    path_deci = cython.declare(cython.longlong[:], visibility="public")
    hops = cython.declare(cython.longlong[:], visibility="public")
    energy_mj = cython.declare(cython.longlong[:], visibility="public")
    last_heard_us = cython.declare(cython.longlong[:], visibility="public")
    valid = cython.declare(cython.longlong[:], visibility="public")
    link_centi = cython.declare(cython.longlong[:], visibility="public")

    def __init__(self, slots: int):
        if slots < 1:
            raise ValueError("need at least one slot")
        self.slots = slots
        self.parent_slot = -1
        self.parent_id = -1
        self.refused = 0
        self.evictions = 0
        self.ids = np.full(slots, -1, dtype=np.int64)
        self.path_deci = np.zeros(slots, dtype=np.int64)
        self.hops = np.zeros(slots, dtype=np.int64)
        self.energy_mj = np.zeros(slots, dtype=np.int64)
        self.last_heard_us = np.zeros(slots, dtype=np.int64)
        self.valid = np.zeros(slots, dtype=np.int64)
        self.link_centi = np.zeros(slots, dtype=np.int64)

    @cython.ccall
    def bind_links(self, links: cython.longlong[:]) -> None:
        self.link_centi = links

    @cython.ccall
    def find(self, nodeid: cython.longlong) -> cython.longlong:
        i: cython.longlong
        for i in range(self.slots):
            if self.ids[i] == nodeid:
                return i
        return -1

    @cython.ccall
    def free_slot(self) -> cython.longlong:
        i: cython.longlong
        for i in range(self.slots):
            if self.ids[i] < 0:
                return i
        return -1

    @cython.ccall
    def cand_cost(self, slot: cython.longlong) -> cython.longlong:
        return self.path_deci[slot] + _rhu(self.link_centi[slot], 10)

    @cython.ccall
    def update_entry(
        self,
        slot: cython.longlong,
        path_deci: cython.longlong,
        hops: cython.longlong,
        energy_mj: cython.longlong,
        now_us: cython.longlong,
    ) -> None:
        """Refresh an existing entry from a beacon; restores validity."""
        self.path_deci[slot] = path_deci
        self.hops[slot] = hops
        self.energy_mj[slot] = energy_mj
        self.last_heard_us[slot] = now_us
        self.valid[slot] = 1

    @cython.ccall
    def set_entry_from_beacon(
        self,
        slot: cython.longlong,
        nodeid: cython.longlong,
        path_deci: cython.longlong,
        hops: cython.longlong,
        energy_mj: cython.longlong,
        now_us: cython.longlong,
    ) -> None:
        self.ids[slot] = nodeid
        self.update_entry(slot, path_deci, hops, energy_mj, now_us)
        if self.parent_slot == slot:
            # evicted slot cannot stay pinned to the old parent
            self.parent_slot = -1 if self.parent_id != nodeid else slot

    def set_test_entry(
        self,
        slot: int,
        nodeid: int,
        path_deci: int,
        energy_mj: int,
        link_deci: int = 10,
        hops: int = 1,
    ) -> None:
        """Direct entry injection for unit tests (table-owned link buffer)."""
        self.ids[slot] = nodeid
        self.path_deci[slot] = path_deci
        self.hops[slot] = hops
        self.energy_mj[slot] = energy_mj
        self.last_heard_us[slot] = 0
        self.valid[slot] = 1
        self.link_centi[slot] = link_deci * 10

    @cython.ccall
    def set_parent(self, slot: cython.longlong) -> None:
        self.parent_slot = slot
        self.parent_id = self.ids[slot] if slot >= 0 else -1

    @cython.ccall
    def mark_stale(self, now_us: cython.longlong, horizon_us: cython.longlong) -> cython.longlong:
        """Invalidate entries not heard within the horizon. Returns count."""
        n: cython.longlong = 0
        i: cython.longlong
        for i in range(self.slots):
            if self.ids[i] >= 0 and self.valid[i] == 1:
                if now_us - self.last_heard_us[i] > horizon_us:
                    self.valid[i] = 0
                    n += 1
        return n

    @cython.ccall
    def own_path_now(
        self, is_root: cython.longlong, etx_max_deci: cython.longlong
    ) -> cython.longlong:
        """Current own path cost: 0 at the root, parent cost + link, or the
        unreachable sentinel when parentless."""
        if is_root:
            return 0
        if self.parent_slot >= 0 and self.ids[self.parent_slot] >= 0:
            c: cython.longlong = self.cand_cost(self.parent_slot)
            return c if c < etx_max_deci else etx_max_deci
        return etx_max_deci

    @cython.ccall
    def scan_slots(self, own_path_limit: cython.longlong) -> tuple:
        """One pass over valid, guard-passing entries.

        Returns (best_energy_slot, best_etx_slot), -1s when empty. Ties break
        to the lower node id.
        """
        best_e: cython.longlong = -1
        best_x: cython.longlong = -1
        best_e_energy: cython.longlong = -1
        best_x_cost: cython.longlong = GUARD_OFF
        i: cython.longlong
        for i in range(self.slots):
            if self.ids[i] < 0 or self.valid[i] == 0:
                continue
            if self.path_deci[i] >= own_path_limit:
                continue
            e: cython.longlong = self.energy_mj[i]
            c: cython.longlong = self.cand_cost(i)
            if best_e < 0 or e > best_e_energy or (
                e == best_e_energy and self.ids[i] < self.ids[best_e]
            ):
                best_e = i
                best_e_energy = e
            if best_x < 0 or c < best_x_cost or (
                c == best_x_cost and self.ids[i] < self.ids[best_x]
            ):
                best_x = i
                best_x_cost = c
        return best_e, best_x


def get_entry(table: NeighborTable, nodeid: int):
    """Entry view for inspection; None when absent."""
    slot = table.find(nodeid)
    if slot < 0:
        return None
    return NeighborEntry(
        nodeid=int(table.ids[slot]),
        link_etx=int(_rhu(table.link_centi[slot], 10)),
        path_etx=int(table.path_deci[slot]),
        energy_mj=int(table.energy_mj[slot]),
        hops=int(table.hops[slot]),
        valid=bool(table.valid[slot]),
        pinned=slot == table.parent_slot,
        last_heard_us=int(table.last_heard_us[slot]),
    )


def route_search(table: NeighborTable):
    """Best-energy and best-cost routes over valid entries.

    Returns a pair of NeighborEntry (or None, None on an empty scan).
    """
    be, bx = table.scan_slots(GUARD_OFF)
    e = get_entry(table, int(table.ids[be])) if be >= 0 else None
    x = get_entry(table, int(table.ids[bx])) if bx >= 0 else None
    return e, x


def elqr_parent_selection(
    table: NeighborTable,
    alpha_mj: int,
    beta_deci: int,
    own_path_deci: int = GUARD_OFF,
) -> ParentDecision:
    """Joint energy/quality selection with invalidate-and-repeat.

    Per pass: a single route that is both best-energy and best-cost wins;
    otherwise the best-cost route wins if its energy clears alpha; otherwise
    the best-energy route wins if its cost is within beta of the pass
    minimum; otherwise both candidates are invalidated and the scan repeats.
    Invalidations persist in the table until the next beacon from that
    neighbor restores the entry.
    """
    while True:
        be, bx = table.scan_slots(own_path_deci)
        if bx < 0:
            return ParentDecision(-1, REASON_EXHAUSTED)
        min_etx = int(table.cand_cost(bx))
        if be == bx:
            return ParentDecision(
                int(table.ids[bx]), REASON_JOINT_BEST, min_etx,
                int(table.energy_mj[bx]), min_etx,
            )
        if table.energy_mj[bx] > alpha_mj:
            return ParentDecision(
                int(table.ids[bx]), REASON_BEST_ETX, min_etx,
                int(table.energy_mj[bx]), min_etx,
            )
        be_cost = int(table.cand_cost(be))
        if be_cost < min_etx + beta_deci:
            return ParentDecision(
                int(table.ids[be]), REASON_BEST_ENERGY, be_cost,
                int(table.energy_mj[be]), min_etx,
            )
        table.valid[be] = 0
        table.valid[bx] = 0


def ctp_parent_selection(
    table: NeighborTable,
    current_parent_id: int,
    hysteresis_deci: int,
    own_path_deci: int = GUARD_OFF,
) -> ParentDecision:
    """Minimum cumulative cost with switch hysteresis.

    The challenger must beat the current parent by strictly more than the
    hysteresis margin to take over.
    """
    be, bx = table.scan_slots(own_path_deci)
    if bx < 0:
        return ParentDecision(-1, REASON_EXHAUSTED)
    best_cost = int(table.cand_cost(bx))
    cur = table.find(current_parent_id) if current_parent_id >= 0 else -1
    if cur >= 0 and (table.valid[cur] == 0 or table.path_deci[cur] >= own_path_deci):
        cur = -1
    if cur < 0 or cur == bx:
        return ParentDecision(
            int(table.ids[bx]), REASON_MIN_ETX, best_cost,
            int(table.energy_mj[bx]), best_cost,
        )
    cur_cost = int(table.cand_cost(cur))
    if cur_cost - best_cost > hysteresis_deci:
        return ParentDecision(
            int(table.ids[bx]), REASON_MIN_ETX, best_cost,
            int(table.energy_mj[bx]), best_cost,
        )
    return ParentDecision(
        int(table.ids[cur]), REASON_KEEP_HYSTERESIS, cur_cost,
        int(table.energy_mj[cur]), best_cost,
    )


def advertise(
    table: NeighborTable,
    self_id: int,
    is_root: bool,
    residual_mj: int,
    seqno: int,
    etx_max_deci: int = ETX_MAX_DECI_DEFAULT,
) -> Beacon:
    """Beacon for this node's current state.

    The root advertises cost 0; a parentless non-root advertises the
    unreachable sentinel (ETX max).
    """
    if is_root:
        return Beacon(self_id, self_id, 0, 0, residual_mj, seqno)
    if table.parent_slot >= 0 and table.ids[table.parent_slot] >= 0:
        slot = table.parent_slot
        path = int(table.cand_cost(slot))
        if path > etx_max_deci:
            path = etx_max_deci
        return Beacon(
            self_id, int(table.ids[slot]), path, int(table.hops[slot]) + 1,
            residual_mj, seqno,
        )
    return Beacon(self_id, -1, etx_max_deci, HOPS_UNKNOWN, residual_mj, seqno)


def handle_beacon_ints(
    table: NeighborTable,
    est,
    origin: int,
    path_deci: int,
    hops: int,
    energy_mj: int,
    seqno: int,
    now_us: int,
    white: int,
    init_etx_deci: int,
    own_path_deci: int,
) -> int:
    """Process one received beacon against the table and estimator.

    New neighbors insert into a free slot, or, when the table is full, evict
    the worst non-pinned entry; that fast path is gated on the white bit and
    on the candidate looking better than the node's own current path.
    Returns the slot used, -1 when the beacon was refused.
    """
    slot = table.find(origin)
    if slot >= 0:
        table.update_entry(slot, path_deci, hops, energy_mj, now_us)
        est.record_beacon(slot, seqno)
        est.set_white(slot, white)
        return slot
    slot = table.free_slot()
    if slot < 0:
        if not white:
            table.refused += 1
            return -1
        if path_deci + init_etx_deci >= own_path_deci:
            table.refused += 1
            return -1
        victim = est.eviction_victim(table.ids, table.parent_slot)
        if victim < 0:
            table.refused += 1
            return -1
        est.clear_slot(victim)
        table.evictions += 1
        slot = victim
    table.set_entry_from_beacon(slot, origin, path_deci, hops, energy_mj, now_us)
    est.init_slot(slot, seqno)
    est.set_white(slot, white)
    return slot


def handle_beacon(
    table: NeighborTable,
    est,
    beacon: Beacon,
    now_us: int,
    white: bool,
    init_etx_deci: int,
    own_path_deci: int = GUARD_OFF,
) -> int:
    return handle_beacon_ints(
        table, est, beacon.origin, beacon.path_etx, beacon.hops,
        beacon.energy_mj, beacon.seqno, now_us, 1 if white else 0,
        init_etx_deci, own_path_deci,
    )


def handle_snooped_data(
    table: NeighborTable, hop_src: int, energy_mj: int, now_us: int
) -> int:
    """Refresh a known transmitter's energy from an overheard data frame.

    Unknown transmitters are ignored (no implicit insertion). Returns the
    refreshed slot, -1 otherwise.
    """
    slot = table.find(hop_src)
    if slot < 0:
        return -1
    table.energy_mj[slot] = energy_mj
    table.last_heard_us[slot] = now_us
    return slot
