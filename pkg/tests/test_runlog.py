"""Append-only run log: column growth, canonical serialization, and the
text emitters whose layouts downstream tooling depends on."""

import pytest

from elqrsim import runlog


def small_log():
    log = runlog.RunLog(2, 7, 1, 3_000_000)
    log.log_send(10, 1, 0)
    log.log_send(1_000_010, 1, 1)
    log.log_forward(500, 1, 1, 99)
    log.log_sink_rx(600, 1, 0)
    log.log_drop(700, 1, runlog.DROP_RETRY_EXHAUST, 1, 1)
    log.log_death(2_000_000, 1)
    log.log_audit(100, 0)
    log.begin_snapshot(0)
    log.append_snapshot_residual(23_760_000_000_000)
    log.append_snapshot_residual(-5)
    log.finalize(0, {"sent_own": [0, 2]})
    return log


def test_intcol_grows_past_initial_capacity():
    col = runlog.IntCol(4)
    for k in range(1000):
        col.append(k * k)
    assert col.n == 1000
    data = col.data()
    assert data.shape == (1000,)
    assert data[999] == 999 * 999 and data[0] == 0
    # tiny requested capacity still rounds up to something usable
    tiny = runlog.IntCol(1)
    tiny.append(-7)
    assert list(tiny.data()) == [-7]


def test_canonical_bytes_layout_and_digest():
    log = small_log()
    blob = log.canonical_bytes()
    assert blob.startswith(b"ELQRSIMLOG1")
    assert b"send_t" in blob and b"snap_resid" in blob and b"sent_own" in blob
    assert log.digest() == small_log().digest()
    assert len(log.digest()) == 64 and int(log.digest(), 16) >= 0


def test_canonical_bytes_sees_every_field():
    base = small_log().digest()
    other = small_log()
    other.log_send(2_000_000, 1, 2)
    assert other.digest() != base
    # meta participates too
    third = runlog.RunLog(2, 7, 1, 3_000_000)
    third.finalize(0, {"sent_own": [0, 3]})
    fourth = runlog.RunLog(2, 7, 1, 3_000_000)
    fourth.finalize(0, {"sent_own": [0, 4]})
    assert third.digest() != fourth.digest()


def test_time_and_charge_formatting():
    assert runlog._fmt_us(0) == "0.000000"
    assert runlog._fmt_us(1_500_000) == "1.500000"
    assert runlog._fmt_us(10_000_000_000_000) == "10000000.000000"
    assert runlog._fmt_pj(23_760_000_000_000) == "23.760000000000"
    assert runlog._fmt_pj(0) == "0.000000000000"
    assert runlog._fmt_pj(-5) == "-0.000000000005"


def test_save_events_layout(tmp_path):
    path = tmp_path / "events.txt"
    runlog.save_events(small_log(), path)
    lines = path.read_text().splitlines()
    assert lines[0] == "# elqrsim event log v1"
    assert lines[1] == ("# nodes=2 seed=7 protocol=elqr duration_s=3.000000 "
                        "inflight_end=0")
    tags = [ln.split()[0] for ln in lines if not ln.startswith("#")]
    assert tags == ["S", "S", "F", "R", "D", "X", "A"]
    assert "S 0.000010 1 0" in lines
    assert "F 0.000500 1 1 99" in lines
    assert "D 0.000700 1 retry_exhaust 1 1" in lines
    assert "X 2.000000 1" in lines


def test_save_snapshots_csv(tmp_path):
    path = tmp_path / "snapshots.csv"
    runlog.save_snapshots_csv(small_log(), path)
    lines = path.read_text().splitlines()
    assert lines[0] == "t,node_id,residual_j"
    assert lines[1] == "0.000000,0,23.760000000000"
    assert lines[2] == "0.000000,1,-0.000000000005"
    assert len(lines) == 3


def test_reason_and_protocol_names():
    assert runlog.DROP_REASON_NAMES[runlog.DROP_QUEUE_OVERFLOW] == "queue_overflow"
    assert runlog.DROP_REASON_NAMES[runlog.DROP_DEAD] == "dead"
    assert runlog.PROTOCOL_NAMES == ("ctp", "elqr")
