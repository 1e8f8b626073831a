"""Energy ledger oracles: capacity arithmetic, exact fixed-point accrual,
death boundary behavior, and the conservation identity."""

import random

import pytest

from elqrsim import energy_model as em


IRIS = em.EnergyBudget(3.0, 8.0, 0.008, 17.0, 15.5, 0.02)


def test_battery_capacity_formula():
    assert em.battery_capacity(3.0, 2.2) == pytest.approx(23760.0, rel=1e-12)
    assert em.battery_capacity(1.0, 1.0) == 3600.0


def test_battery_capacity_rejects_nonpositive():
    with pytest.raises(ValueError):
        em.battery_capacity(0.0, 2.2)
    with pytest.raises(ValueError):
        em.battery_capacity(3.0, -1.0)


def test_budget_validation():
    with pytest.raises(ValueError):
        em.EnergyBudget(0.0, 8.0, 0.008, 17.0, 15.5, 0.02)
    with pytest.raises(ValueError):
        em.EnergyBudget(3.0, -8.0, 0.008, 17.0, 15.5, 0.02)
    with pytest.raises(ValueError):
        em.EnergyBudget(3.0, 8.0, 0.008, 0.01, 15.5, 0.02)  # tx below idle


def test_power_fixed_point():
    # 3 V * 17 mA -> 3000 mV * 17000 uA = 51e6 fJ/us
    assert IRIS.power_fj_per_us(em.STATE_RADIO_TX) == 51_000_000
    assert IRIS.power_fj_per_us(em.STATE_CPU_SLEEP) == 24_000
    assert len(em.STATE_NAMES) == em.N_STATES == 5


def test_one_second_radio_tx_is_51_millijoules_exact():
    acct = em.EnergyAccount(23760.0)
    p = IRIS.power_fj_per_us(em.STATE_RADIO_TX)
    assert acct.accrue_us(p, em.STATE_RADIO_TX, 1_000_000) == 1
    assert acct.consumed_pj == 51_000_000_000
    assert acct.fj_rem == 0
    assert acct.state_time_us[em.STATE_RADIO_TX] == 1_000_000


def test_zero_duration_is_a_noop():
    acct = em.EnergyAccount(1.0)
    before = acct.residual_pj()
    assert acct.accrue_us(10_000, em.STATE_CPU_ACTIVE, 0) == 1
    assert acct.residual_pj() == before
    with pytest.raises(ValueError):
        acct.accrue_us(10_000, em.STATE_CPU_ACTIVE, -1)


def test_death_boundary_floors_residual_and_clips():
    acct = em.EnergyAccount(0.01)  # 1e10 pJ capacity
    # draw 0.02 J worth in one window: half consumed, half clipped
    alive = acct.accrue_us(10_000_000, em.STATE_RADIO_TX, 2_000_000)
    assert alive == 0
    assert acct.consumed_pj == 10_000_000_000
    assert acct.residual_pj() == 0
    assert acct.clipped_fj == 10_000_000_000_000
    assert acct.state_time_us[em.STATE_RADIO_TX] == 2_000_000


def test_dead_account_ignores_accruals_with_diagnostic():
    acct = em.EnergyAccount(0.001)
    acct.accrue_us(10_000_000, em.STATE_RADIO_TX, 1_000_000)
    assert acct.alive == 0
    consumed = acct.consumed_pj
    assert acct.accrue_us(10_000_000, em.STATE_RADIO_RX, 500) == 0
    assert acct.dead_accruals == 1
    assert acct.consumed_pj == consumed


def test_residual_energy_examples():
    acct = em.EnergyAccount(23760.0)
    assert em.residual_energy(acct) == 23760.0
    # exactly 1000 J: 1e12 fJ/us for 1e6 us
    acct.accrue_us(1_000_000_000_000, em.STATE_CPU_ACTIVE, 1_000_000)
    assert em.residual_energy(acct) == 22760.0


def test_account_validation():
    with pytest.raises(ValueError):
        em.EnergyAccount(0.0)
    with pytest.raises(ValueError):
        em.EnergyAccount(1.0, dead_threshold_j=1.0)
    with pytest.raises(ValueError):
        em.EnergyAccount(1.0, dead_threshold_j=-0.1)


def test_named_state_wrapper_rounds_seconds():
    acct = em.EnergyAccount(23760.0)
    em.accrue(acct, IRIS, "radio_tx", 1.0)
    assert acct.consumed_pj == 51_000_000_000
    em.accrue(acct, IRIS, em.STATE_CPU_SLEEP, 0.5)
    assert acct.state_time_us[em.STATE_CPU_SLEEP] == 500_000
    with pytest.raises(ValueError):
        em.accrue(acct, IRIS, "warp_drive", 1.0)


def test_conservation_identity_over_random_sequence():
    rng = random.Random(42)
    powers = [IRIS.power_fj_per_us(s) for s in range(em.N_STATES)]
    acct = em.EnergyAccount(0.005)  # dies partway through
    expect_fj = 0
    died = False
    prev_resid = acct.residual_pj()
    for _ in range(1000):
        s = rng.randrange(em.N_STATES)
        dur = rng.randrange(0, 50_000)
        alive_before = acct.alive
        acct.accrue_us(powers[s], s, dur)
        if alive_before:
            expect_fj += powers[s] * dur
        ledger = acct.consumed_pj * 1000 + acct.fj_rem + acct.clipped_fj
        assert ledger == expect_fj
        resid = acct.residual_pj()
        assert resid <= prev_resid  # monotone drain
        prev_resid = resid
        if not acct.alive:
            died = True
            assert resid == 0  # death permanence: floored, stays floored
    assert died
    total_t = sum(acct.state_time_us)
    assert total_t > 0
