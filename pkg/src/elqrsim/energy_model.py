"""Linear software energy estimation.

Time spent in hardware states accrues charge against a configurable current
budget. The ledger is exact integer arithmetic: powers are millivolts times
microamps (= femtojoules per microsecond, exactly), consumption is stored in
picojoules with a sub-picojoule femtojoule remainder, and durations are
microseconds. When an accrual crosses the death boundary only the remaining
energy is charged and the overshoot is kept in `clipped_fj`, so

    sum over states of power_fj_per_us * state_time_us
        == consumed_pj * 1000 + fj_rem + clipped_fj

holds exactly for any accrual sequence.

Written in Cython pure-Python mode; importable compiled or interpreted.
"""

from dataclasses import dataclass

import cython
import numpy as np

COMPILED = cython.compiled

STATE_CPU_ACTIVE = 0
STATE_CPU_SLEEP = 1
STATE_RADIO_TX = 2
STATE_RADIO_RX = 3
STATE_RADIO_IDLE = 4

STATE_NAMES = ("cpu_active", "cpu_sleep", "radio_tx", "radio_rx", "radio_idle")
N_STATES = 5


@dataclass(frozen=True)
class EnergyBudget:
    """Supply voltage and per-state current draw in milliamps."""

    voltage_v: float = 3.0
    cpu_active_ma: float = 8.0
    cpu_sleep_ma: float = 0.008
    radio_tx_ma: float = 17.0
    radio_rx_ma: float = 15.5
    radio_idle_ma: float = 0.02

    def __post_init__(self):
        if self.voltage_v <= 0:
            raise ValueError("voltage must be positive")
        for name in STATE_NAMES:
            if getattr(self, name + "_ma") < 0:
                raise ValueError(f"{name} current must be >= 0")
        if self.radio_tx_ma < self.radio_idle_ma:
            raise ValueError("radio_tx current must be >= radio_idle current")

    def power_fj_per_us(self, state) -> int:
        """Exact integer power for a state: mV * uA = fJ/us."""
        idx = state if isinstance(state, int) else STATE_NAMES.index(state)
        ma = getattr(self, STATE_NAMES[idx] + "_ma")
        return round(self.voltage_v * 1000) * round(ma * 1000)


def battery_capacity(voltage: float, amp_hours: float) -> float:
    """Battery energy in joules from supply voltage and rated amp-hours."""
    if voltage <= 0 or amp_hours <= 0:
        raise ValueError("voltage and amp_hours must be positive")
    return voltage * amp_hours * 3600.0


def joules_to_pj(j: float) -> int:
    return round(j * 1e12)


@cython.cclass
class EnergyAccount:
    """Integer energy ledger for one node."""

    capacity_pj = cython.declare(cython.longlong, visibility="public")
    dead_threshold_pj = cython.declare(cython.longlong, visibility="public")
    consumed_pj = cython.declare(cython.longlong, visibility="public")
    fj_rem = cython.declare(cython.longlong, visibility="public")
    clipped_fj = cython.declare(cython.longlong, visibility="public")
    alive = cython.declare(cython.longlong, visibility="public")
    dead_accruals = cython.declare(cython.longlong, visibility="public")
    state_time_us = cython.declare(cython.longlong[:], visibility="public")

    def __init__(self, capacity_j: float, dead_threshold_j: float = 0.0):
        if capacity_j <= 0:
            raise ValueError("capacity must be positive")
        if dead_threshold_j < 0 or dead_threshold_j >= capacity_j:
            raise ValueError("dead threshold must be in [0, capacity)")
        self.capacity_pj = joules_to_pj(capacity_j)
        self.dead_threshold_pj = joules_to_pj(dead_threshold_j)
        self.consumed_pj = 0
        self.fj_rem = 0
        self.clipped_fj = 0
        self.alive = 1
        self.dead_accruals = 0
        self.state_time_us = np.zeros(N_STATES, dtype=np.int64)

    @cython.ccall
    def accrue_us(
        self,
        p_fj_per_us: cython.longlong,
        state: cython.longlong,
        dur_us: cython.longlong,
    ) -> cython.longlong:
        """Charge `dur_us` microseconds in `state` at the given power.

        Returns 1 if the account is still alive afterwards, 0 otherwise.
        Accruals on a dead account are ignored (diagnostic counter only).
        """
        if dur_us < 0:
            raise ValueError("duration must be >= 0")
        if self.alive == 0:
            self.dead_accruals += 1
            return 0
        if dur_us == 0:
            return 1
        e_fj: cython.longlong = p_fj_per_us * dur_us
        tot: cython.longlong = self.fj_rem + e_fj
        add_pj: cython.longlong = tot // 1000
        self.fj_rem = tot - add_pj * 1000
        avail: cython.longlong = (
            self.capacity_pj - self.dead_threshold_pj - self.consumed_pj
        )
        if add_pj >= avail:
            # death boundary: charge what remains, remember the overshoot
            self.consumed_pj += avail
            self.clipped_fj += (add_pj - avail) * 1000
            self.alive = 0
        else:
            self.consumed_pj += add_pj
        self.state_time_us[state] += dur_us
        return self.alive

    @cython.ccall
    def residual_pj(self) -> cython.longlong:
        return self.capacity_pj - self.consumed_pj


# Operation-style wrappers.

def accrue(account: EnergyAccount, budget: EnergyBudget, state, duration_s: float) -> None:
    """Accrue `duration_s` seconds of `state` (name or index) on `account`."""
    if duration_s < 0:
        raise ValueError("duration must be >= 0")
    idx = state if isinstance(state, int) else STATE_NAMES.index(state)
    account.accrue_us(budget.power_fj_per_us(idx), idx, round(duration_s * 1e6))


def residual_energy(account: EnergyAccount) -> float:
    """Remaining energy in joules (>= 0)."""
    return account.residual_pj() / 1e12
