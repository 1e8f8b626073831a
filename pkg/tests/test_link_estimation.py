"""Estimator unit oracles: frozen fixed-point values, window accounting,
fold arithmetic, and the eviction policy."""

import random

import numpy as np
import pytest

from elqrsim import link_estimation as le


def fresh(slots=1, window=5, lam=900, mu=900, ufold=5, etx_max=500, init=30):
    return le.EstimatorState(slots, window, lam, mu, ufold, etx_max, init)


def snapshot(est, slot):
    return (
        int(est.used[slot]), int(est.win_hits[slot]), int(est.win_cnt[slot]),
        int(est.ewma_milli[slot]), int(est.last_seqno[slot]),
        int(est.uc_tx[slot]), int(est.uc_ack[slot]), int(est.uc_pkts[slot]),
        int(est.uc_consec[slot]), int(est.comb[slot]), int(est.white[slot]),
    )


# ---- broadcast window ----

def test_all_hits_window_keeps_ewma_at_ceiling():
    est = fresh()
    est.init_slot(0, 1)
    for s in (2, 3, 4):
        assert est.record_beacon(0, s) == 0
    assert est.record_beacon(0, 5) == 1  # window filled, one fold
    assert est.ewma_milli[0] == 1000


def test_three_of_five_window_folds_to_960():
    # receptions {1,3,5}, misses {2,4}: p_win=0.6 folded into ewma 1.0
    est = fresh()
    est.init_slot(0, 1)
    assert est.record_beacon(0, 3) == 0
    assert est.record_beacon(0, 5) == 1
    assert est.ewma_milli[0] == 960
    # combined folds 1/0.96 = 104 centi into the 300-centi initial estimate
    assert est.comb[0] == 280


def test_first_beacon_initializes_without_folding():
    est = fresh()
    est.init_slot(0, 7)
    assert est.win_hits[0] == 1
    assert est.win_cnt[0] == 1
    assert est.ewma_milli[0] == 1000
    assert est.combined_deci(0) == 30
    assert est.combined_centi(0) == 300


def test_seqno_gap_accounting_exhaustive():
    # charged losses must equal gap-1 for every gap in 0..W
    window = 5
    for gap in range(0, window + 1):
        est = fresh(window=window)
        est.init_slot(0, 100)
        got = est.record_beacon(0, 100 + gap)
        if gap == 0:
            assert got == -1
            assert est.win_cnt[0] == 1 and est.win_hits[0] == 1
            continue
        # mirror the event stream: init hit, gap-1 losses, final hit
        cnt = hits = folds = 0
        for is_hit in [1] + [0] * (gap - 1) + [1]:
            cnt += 1
            hits += is_hit
            if cnt >= window:
                folds += 1
                cnt = hits = 0
        assert got == folds
        assert est.win_cnt[0] == cnt
        assert est.win_hits[0] == hits


def test_duplicate_and_reordered_seqnos_change_nothing():
    est = fresh()
    est.init_slot(0, 10)
    est.record_beacon(0, 12)
    before = snapshot(est, 0)
    assert est.record_beacon(0, 12) == -1
    assert est.record_beacon(0, 9) == -1
    assert snapshot(est, 0) == before


def test_all_loss_window_with_dead_ewma_clamps_to_max():
    # lambda=0 tracks the window directly; mu=0 exposes the raw fold value.
    # gap 10: window 2 is pure loss (ewma 0), the final hit starts window 3
    est = fresh(lam=0, mu=0)
    est.init_slot(0, 1)
    est.record_beacon(0, 11)
    assert est.ewma_milli[0] == 0
    assert est.comb[0] == 5000


# ---- unicast folds ----

def test_unicast_fold_twelve_tx_ten_ack():
    est = fresh(mu=0, ufold=10)
    est.init_slot(0, 1)
    for k in range(10):
        attempts = 2 if k < 2 else 1
        done = est.record_unicast(0, attempts, 1)
        assert done == (1 if k == 9 else 0)
    assert est.combined_centi(0) == 120
    assert est.combined_deci(0) == 12


def test_unicast_fold_seven_attempts_no_ack():
    est = fresh(mu=0, ufold=7)
    est.init_slot(0, 1)
    for _ in range(7):
        est.record_unicast(0, 1, 0)
    assert est.combined_centi(0) == 700
    assert est.combined_deci(0) == 70


def test_unicast_single_acked_attempt_is_perfect():
    est = fresh(mu=0, ufold=1)
    est.init_slot(0, 1)
    assert est.record_unicast(0, 1, 1) == 1
    assert est.combined_deci(0) == 10


def test_combined_ewma_rounds_half_up():
    # combined 100 centi, fold 120 centi at mu=0.9 -> 102 centi
    est = fresh(init=10)
    est.init_slot(0, 1)
    for k in range(5):
        est.record_unicast(0, 2 if k == 0 else 1, 1)  # 6 tx / 5 ack -> 120
    assert est.combined_centi(0) == 102
    assert est.combined_deci(0) == 10


def test_unicast_wrapper_validates_attempts():
    est = fresh()
    est.init_slot(0, 1)
    with pytest.raises(ValueError):
        le.record_unicast_result(est, 0, 0, True)
    assert le.record_unicast_result(est, 0, 3, False) == 0


def test_combined_etx_unknown_slot_raises():
    est = fresh(slots=2)
    est.init_slot(0, 1)
    with pytest.raises(LookupError):
        est.combined_centi(1)
    with pytest.raises(LookupError):
        le.combined_link_etx(est, 1)


def test_unacked_streak_spans_folds_until_an_ack():
    est = fresh(mu=0, ufold=2)
    est.init_slot(0, 1)
    est.record_unicast(0, 3, 0)
    est.record_unicast(0, 3, 0)  # fold: streak 6 -> 600 centi
    assert est.combined_centi(0) == 600
    est.record_unicast(0, 2, 0)
    est.record_unicast(0, 1, 0)  # fold: streak now 9 -> 900 centi
    assert est.combined_centi(0) == 900
    est.record_unicast(0, 1, 1)
    assert est.uc_consec[0] == 0


# ---- properties ----

def test_monotone_degradation_after_equilibrium():
    # warm the estimate to its clean-link equilibrium first; from there a
    # degrading link must never pull the combined estimate down
    est = fresh()
    est.init_slot(0, 1)
    seq = 1
    for _ in range(299):
        seq += 1
        est.record_beacon(0, seq)
    settled = int(est.comb[0])
    assert settled <= 110
    # one long silent stretch: ten pure-loss windows folded in a single call
    est.record_beacon(0, seq + 51)
    seq += 51
    after_silence = int(est.comb[0])
    assert after_silence > settled
    assert est.ewma_milli[0] < 400
    prev = after_silence
    for _ in range(30):
        seq += 6  # five losses per subsequent hit
        est.record_beacon(0, seq)
        cur = int(est.comb[0])
        assert cur >= prev
        prev = cur
    assert prev > after_silence


def test_bounds_hold_under_random_event_storm():
    rng = random.Random(7)
    est = fresh(slots=4)
    seqs = [0, 0, 0, 0]
    for slot in range(4):
        seqs[slot] = rng.randrange(100)
        est.init_slot(slot, seqs[slot])
    for _ in range(3000):
        slot = rng.randrange(4)
        if rng.random() < 0.5:
            seqs[slot] += rng.randrange(1, 9)
            est.record_beacon(slot, seqs[slot])
        else:
            est.record_unicast(slot, rng.randrange(1, 7), rng.randrange(2))
        assert 100 <= est.comb[slot] <= 5000
        assert 0 <= est.ewma_milli[slot] <= 1000
        assert est.uc_ack[slot] <= est.uc_pkts[slot]
        assert 0 <= est.win_hits[slot] <= est.win_cnt[slot] < 5


def test_white_bit_set_and_clear():
    est = fresh()
    est.init_slot(0, 1)
    le.apply_white_bit(est, 0, True)
    assert est.white[0] == 1
    le.apply_white_bit(est, 0, False)
    assert est.white[0] == 0


# ---- eviction policy ----

def test_eviction_victim_enumerated_against_reference():
    combs = (150, 350, 500)
    id_patterns = ((7, 3, 9, 1), (7, -1, 9, 1), (-1, -1, -1, -1))
    est = fresh(slots=4)
    from itertools import product
    for ids in id_patterns:
        ids_arr = np.asarray(ids, dtype=np.int64)
        for vals in product(combs, repeat=4):
            for slot in range(4):
                est.comb[slot] = vals[slot]
            for pinned in (-1, 0, 1, 2, 3):
                want = -1
                for i in range(4):
                    if ids[i] < 0 or i == pinned:
                        continue
                    if want < 0 or vals[i] > vals[want] or (
                        vals[i] == vals[want] and ids[i] < ids[want]
                    ):
                        want = i
                assert est.eviction_victim(ids_arr, pinned) == want


def test_clear_slot_resets_state():
    est = fresh(slots=2)
    est.init_slot(1, 5)
    est.record_unicast(1, 2, 1)
    est.clear_slot(1)
    assert est.used[1] == 0
    assert est.comb[1] == 0
