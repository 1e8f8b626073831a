"""Four-bit style link estimator.

Per-neighbor slot state: a W-beacon reception window folded into an inbound
EWMA, unicast attempt/ack counters folded every U data packets, and a
combining EWMA over both fold streams. The physical-layer white bit is
latched per neighbor and gates fast insertion into a full table (eviction of
the worst non-pinned entry).

Fixed point everywhere: probabilities in milli [0, 1000], combined ETX in
centi-transmissions (x100) so folds like 0.9*10.0 + 0.1*12.0 = 10.2 are
exact; the routing layer consumes deci (x10) via round half up. All folds
round half up.

Written in Cython pure-Python mode; importable compiled or interpreted.
"""

import cython
import numpy as np

COMPILED = cython.compiled

DEFAULT_WINDOW = 5
DEFAULT_LAMBDA_PERMILLE = 900
DEFAULT_MU_PERMILLE = 900
DEFAULT_UNICAST_FOLD = 5
DEFAULT_ETX_MAX_DECI = 500
DEFAULT_INITIAL_ETX_DECI = 30


@cython.cfunc
def _rhu(num: cython.longlong, den: cython.longlong) -> cython.longlong:
    # round half up, non-negative operands only
    return (num + den // 2) // den


@cython.cclass
class EstimatorState:
    """Slot-indexed estimator table for one node.

    Slots are assigned by the routing neighbor table; slot i here describes
    the same neighbor as slot i there. `comb` (centi-ETX) is a shared buffer
    the routing table binds to for candidate-cost scans.
    """

    slots = cython.declare(cython.longlong, visibility="public")
    window = cython.declare(cython.longlong, visibility="public")
    lam_pm = cython.declare(cython.longlong, visibility="public")
    mu_pm = cython.declare(cython.longlong, visibility="public")
    u_fold = cython.declare(cython.longlong, visibility="public")
    etxmax_centi = cython.declare(cython.longlong, visibility="public")
    init_centi = cython.declare(cython.longlong, visibility="public")

    used = cython.declare(cython.longlong[:], visibility="public")
    win_hits = cython.declare(cython.longlong[:], visibility="public")
    win_cnt = cython.declare(cython.longlong[:], visibility="public")
    ewma_milli = cython.declare(cython.longlong[:], visibility="public")
    last_seqno = cython.declare(cython.longlong[:], visibility="public")
    uc_tx = cython.declare(cython.longlong[:], visibility="public")
    uc_ack = cython.declare(cython.longlong[:], visibility="public")
    uc_pkts = cython.declare(cython.longlong[:], visibility="public")
    uc_consec = cython.declare(cython.longlong[:], visibility="public")
    comb = cython.declare(cython.longlong[:], visibility="public")
    white = cython.declare(cython.longlong[:], visibility="public")

    def __init__(
        self,
        slots: int,
        window: int = DEFAULT_WINDOW,
        lambda_permille: int = DEFAULT_LAMBDA_PERMILLE,
        mu_permille: int = DEFAULT_MU_PERMILLE,
        unicast_fold: int = DEFAULT_UNICAST_FOLD,
        etx_max_deci: int = DEFAULT_ETX_MAX_DECI,
        initial_etx_deci: int = DEFAULT_INITIAL_ETX_DECI,
    ):
        if slots < 1:
            raise ValueError("need at least one slot")
        if window < 1 or unicast_fold < 1:
            raise ValueError("window and fold period must be >= 1")
        if not (0 <= lambda_permille <= 1000 and 0 <= mu_permille <= 1000):
            raise ValueError("EWMA weights must be permille in [0, 1000]")
        self.slots = slots
        self.window = window
        self.lam_pm = lambda_permille
        self.mu_pm = mu_permille
        self.u_fold = unicast_fold
        self.etxmax_centi = etx_max_deci * 10
        self.init_centi = initial_etx_deci * 10
        self.used = np.zeros(slots, dtype=np.int64)
        self.win_hits = np.zeros(slots, dtype=np.int64)
        self.win_cnt = np.zeros(slots, dtype=np.int64)
        self.ewma_milli = np.zeros(slots, dtype=np.int64)
        self.last_seqno = np.zeros(slots, dtype=np.int64)
        self.uc_tx = np.zeros(slots, dtype=np.int64)
        self.uc_ack = np.zeros(slots, dtype=np.int64)
        self.uc_pkts = np.zeros(slots, dtype=np.int64)
        self.uc_consec = np.zeros(slots, dtype=np.int64)
        self.comb = np.zeros(slots, dtype=np.int64)
        self.white = np.zeros(slots, dtype=np.int64)

    @cython.ccall
    def init_slot(self, slot: cython.longlong, first_seqno: cython.longlong) -> None:
        """Fresh entry from its first received beacon: one hit in the window,
        optimistic inbound EWMA, combined at the configured initial ETX."""
        self.used[slot] = 1
        self.win_hits[slot] = 1
        self.win_cnt[slot] = 1
        self.ewma_milli[slot] = 1000
        self.last_seqno[slot] = first_seqno
        self.uc_tx[slot] = 0
        self.uc_ack[slot] = 0
        self.uc_pkts[slot] = 0
        self.uc_consec[slot] = 0
        self.comb[slot] = self.init_centi
        self.white[slot] = 0

    @cython.ccall
    def clear_slot(self, slot: cython.longlong) -> None:
        self.used[slot] = 0
        self.win_hits[slot] = 0
        self.win_cnt[slot] = 0
        self.ewma_milli[slot] = 0
        self.last_seqno[slot] = 0
        self.uc_tx[slot] = 0
        self.uc_ack[slot] = 0
        self.uc_pkts[slot] = 0
        self.uc_consec[slot] = 0
        self.comb[slot] = 0
        self.white[slot] = 0

    @cython.cfunc
    def _fold_combined(self, slot: cython.longlong, folded_centi: cython.longlong) -> None:
        v: cython.longlong = folded_centi
        if v < 100:
            v = 100
        if v > self.etxmax_centi:
            v = self.etxmax_centi
        c: cython.longlong = _rhu(
            self.mu_pm * self.comb[slot] + (1000 - self.mu_pm) * v, 1000
        )
        if c < 100:
            c = 100
        if c > self.etxmax_centi:
            c = self.etxmax_centi
        self.comb[slot] = c

    @cython.cfunc
    def _fold_broadcast(self, slot: cython.longlong) -> None:
        p_milli: cython.longlong = _rhu(self.win_hits[slot] * 1000, self.window)
        e: cython.longlong = _rhu(
            self.lam_pm * self.ewma_milli[slot] + (1000 - self.lam_pm) * p_milli, 1000
        )
        self.ewma_milli[slot] = e
        folded: cython.longlong
        if e <= 0:
            folded = self.etxmax_centi
        else:
            folded = _rhu(100000, e)  # 1/p in centi-ETX
        self._fold_combined(slot, folded)
        self.win_hits[slot] = 0
        self.win_cnt[slot] = 0

    @cython.ccall
    def record_beacon(self, slot: cython.longlong, seqno: cython.longlong) -> cython.longlong:
        """Account a received beacon by sequence number.

        Missed seqnos between the last heard one and this are charged as
        losses. Returns the number of window folds performed; duplicates and
        reordered arrivals return -1 with no state change.
        """
        gap: cython.longlong = seqno - self.last_seqno[slot]
        if gap <= 0:
            return -1
        self.last_seqno[slot] = seqno
        folds: cython.longlong = 0
        k: cython.longlong
        for k in range(gap - 1):
            self.win_cnt[slot] += 1
            if self.win_cnt[slot] >= self.window:
                self._fold_broadcast(slot)
                folds += 1
        self.win_cnt[slot] += 1
        self.win_hits[slot] += 1
        if self.win_cnt[slot] >= self.window:
            self._fold_broadcast(slot)
            folds += 1
        return folds

    @cython.ccall
    def record_unicast(
        self, slot: cython.longlong, attempts: cython.longlong, acked: cython.longlong
    ) -> cython.longlong:
        """Account one completed data packet toward `slot`'s unicast estimate.

        `attempts` is the number of frames sent for that packet (first try
        plus retransmissions). Returns 1 if this packet filled the fold
        window, else 0.
        """
        self.uc_tx[slot] += attempts
        self.uc_pkts[slot] += 1
        if acked:
            self.uc_ack[slot] += 1
            self.uc_consec[slot] = 0
        else:
            self.uc_consec[slot] += attempts
        if self.uc_pkts[slot] < self.u_fold:
            return 0
        folded: cython.longlong
        if self.uc_ack[slot] > 0:
            folded = _rhu(self.uc_tx[slot] * 100, self.uc_ack[slot])
        else:
            # no ack the whole window: the unacked streak since the last
            # successful delivery is the estimate
            folded = self.uc_consec[slot] * 100
        self._fold_combined(slot, folded)
        self.uc_tx[slot] = 0
        self.uc_ack[slot] = 0
        self.uc_pkts[slot] = 0
        return 1

    @cython.ccall
    def set_white(self, slot: cython.longlong, clean: cython.longlong) -> None:
        self.white[slot] = 1 if clean else 0

    @cython.ccall
    def combined_centi(self, slot: cython.longlong) -> cython.longlong:
        if self.used[slot] == 0:
            raise LookupError(f"no estimate for slot {slot}")
        return self.comb[slot]

    @cython.ccall
    def combined_deci(self, slot: cython.longlong) -> cython.longlong:
        return _rhu(self.combined_centi(slot), 10)

    @cython.ccall
    def eviction_victim(
        self, ids: cython.longlong[:], pinned_slot: cython.longlong
    ) -> cython.longlong:
        """Worst-combined-ETX occupied slot, skipping the pinned (parent)
        slot; ties broken toward the lower neighbor id. -1 if none."""
        worst: cython.longlong = -1
        worst_val: cython.longlong = -1
        i: cython.longlong
        for i in range(self.slots):
            if ids[i] < 0 or i == pinned_slot:
                continue
            v: cython.longlong = self.comb[i]
            if v > worst_val or (v == worst_val and ids[i] < ids[worst]):
                worst = i
                worst_val = v
        return worst


# Operation-style wrappers over the slot methods.

def record_beacon_reception(state: EstimatorState, slot: int, seqno: int) -> int:
    return state.record_beacon(slot, seqno)


def record_unicast_result(state: EstimatorState, slot: int, attempts: int, acked: bool) -> int:
    if attempts < 1:
        raise ValueError("attempts must be >= 1")
    return state.record_unicast(slot, attempts, 1 if acked else 0)


def combined_link_etx(state: EstimatorState, slot: int) -> int:
    """Current combined estimate in centi-ETX."""
    return state.combined_centi(slot)


def apply_white_bit(state: EstimatorState, slot: int, channel_clean: bool) -> None:
    state.set_white(slot, 1 if channel_clean else 0)
