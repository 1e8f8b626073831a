"""Scenario configuration: dataclass, INI-style file loading, validation.

Config files use key = value lines under per-area sections ([scenario],
[estimator], [energy], [routing], [channel]). Every key is globally unique,
so CLI overrides are written as plain key=value. Unknown sections or keys
are rejected rather than ignored.
"""

import configparser
from dataclasses import asdict, dataclass, fields, replace
from importlib import resources
from pathlib import Path


class ConfigError(ValueError):
    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


@dataclass(frozen=True)
class ScenarioConfig:
    # scenario
    nodes: int = 9
    area_w: float = 50.0
    area_h: float = 50.0
    seed: int = 1
    duration_s: float = 10000.0
    traffic_period_s: float = 1.0
    protocol: str = "elqr"
    snapshot_interval_s: float = 10.0
    audit_interval_s: float = 100.0
    queue_capacity: int = 12
    max_retries: int = 5
    airtime_ms: float = 4.0
    ack_slot_ms: float = 1.0
    payload_len: int = 28
    # estimator
    window: int = 5
    broadcast_lambda: float = 0.9  # rounded half-up to permille internally
    combine_mu: float = 0.9
    unicast_fold: int = 5
    etx_max_deci: int = 500
    initial_etx_deci: int = 30
    table_size: int = 10
    # energy
    voltage_v: float = 3.0
    cpu_active_ma: float = 8.0
    cpu_sleep_ma: float = 0.008
    radio_tx_ma: float = 17.0
    radio_rx_ma: float = 15.5
    radio_idle_ma: float = 0.02
    capacity_j: float = 23760.0
    dead_threshold_j: float = 0.0
    root_powered: bool = True
    # routing
    alpha_j: float = 14400.0
    beta0_deci: int = 50
    beta_max_deci: int = 500
    epoch_rounds: int = 100
    beacon_interval_s: float = 2.0
    hysteresis_deci: int = 15
    staleness_periods: int = 3
    expedite_threshold_deci: int = 100
    expedite_min_gap_ms: float = 200.0
    # channel
    path_loss_exp: float = 3.0
    pl0_db: float = 40.0
    d0_m: float = 1.0
    tx_power_db: float = 0.0
    noise_floor_db: float = -93.0
    asym_sigma_db: float = 3.0
    temporal_sigma_db: float = 2.0
    prr_k: float = 0.8
    prr_mid_db: float = 6.0
    white_snr_db: float = 9.0
    link_floor_prr: float = 1e-4

    @property
    def protocol_id(self) -> int:
        return 0 if self.protocol == "ctp" else 1


SECTIONS = {
    "scenario": [
        "nodes", "area_w", "area_h", "seed", "duration_s", "traffic_period_s",
        "protocol", "snapshot_interval_s", "audit_interval_s", "queue_capacity",
        "max_retries", "airtime_ms", "ack_slot_ms", "payload_len",
    ],
    "estimator": [
        "window", "broadcast_lambda", "combine_mu", "unicast_fold",
        "etx_max_deci", "initial_etx_deci", "table_size",
    ],
    "energy": [
        "voltage_v", "cpu_active_ma", "cpu_sleep_ma", "radio_tx_ma",
        "radio_rx_ma", "radio_idle_ma", "capacity_j", "dead_threshold_j",
        "root_powered",
    ],
    "routing": [
        "alpha_j", "beta0_deci", "beta_max_deci", "epoch_rounds",
        "beacon_interval_s", "hysteresis_deci", "staleness_periods",
        "expedite_threshold_deci", "expedite_min_gap_ms",
    ],
    "channel": [
        "path_loss_exp", "pl0_db", "d0_m", "tx_power_db", "noise_floor_db",
        "asym_sigma_db", "temporal_sigma_db", "prr_k", "prr_mid_db",
        "white_snr_db", "link_floor_prr",
    ],
}

_FIELD_TYPES = {f.name: f.type for f in fields(ScenarioConfig)}
_KEY_SECTION = {}
for _sec, _keys in SECTIONS.items():
    for _k in _keys:
        if _k in _KEY_SECTION or _k not in _FIELD_TYPES:
            raise RuntimeError(f"schema mismatch on key {_k}")
        _KEY_SECTION[_k] = _sec
if set(_KEY_SECTION) != set(_FIELD_TYPES):
    raise RuntimeError("schema does not cover every config field")

_BOOL_WORDS = {
    "true": True, "yes": True, "on": True, "1": True,
    "false": False, "no": False, "off": False, "0": False,
}


def _convert(key: str, raw: str):
    typ = _FIELD_TYPES[key]
    raw = raw.strip()
    try:
        if typ in ("bool", bool):
            word = raw.lower()
            if word not in _BOOL_WORDS:
                raise ValueError("expected a boolean")
            return _BOOL_WORDS[word]
        if typ in ("int", int):
            return int(raw, 0)
        if typ in ("float", float):
            return float(raw)
        return raw
    except ValueError as e:
        raise ConfigError([f"{key}: bad value {raw!r} ({e})"]) from None


def load_config(path) -> ScenarioConfig:
    """Parse a config file into a validated ScenarioConfig."""
    p = Path(path)
    if not p.is_file():
        raise ConfigError([f"config file not found: {p}"])
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(p.read_text(), source=str(p))
    except configparser.Error as e:
        raise ConfigError([f"parse error: {e}"]) from None
    problems = []
    values = {}
    for sec in parser.sections():
        if sec not in SECTIONS:
            problems.append(f"unknown section [{sec}]")
            continue
        for key, raw in parser.items(sec):
            if key not in _KEY_SECTION:
                problems.append(f"unknown key {key!r} in [{sec}]")
            elif _KEY_SECTION[key] != sec:
                problems.append(
                    f"key {key!r} belongs in [{_KEY_SECTION[key]}], found in [{sec}]"
                )
            else:
                try:
                    values[key] = _convert(key, raw)
                except ConfigError as e:
                    problems.extend(e.problems)
    if problems:
        raise ConfigError(problems)
    cfg = ScenarioConfig(**values)
    validate(cfg)
    return cfg


def apply_overrides(cfg: ScenarioConfig, pairs) -> ScenarioConfig:
    """Apply repeatable key=value overrides, then re-validate."""
    updates = {}
    problems = []
    for pair in pairs:
        if "=" not in pair:
            problems.append(f"override {pair!r} is not key=value")
            continue
        key, raw = pair.split("=", 1)
        key = key.strip()
        if key not in _KEY_SECTION:
            problems.append(f"unknown override key {key!r}")
            continue
        try:
            updates[key] = _convert(key, raw)
        except ConfigError as e:
            problems.extend(e.problems)
    if problems:
        raise ConfigError(problems)
    cfg = replace(cfg, **updates)
    validate(cfg)
    return cfg


def validate(cfg: ScenarioConfig) -> None:
    """Raise ConfigError listing every inconsistency found."""
    p = []
    if cfg.nodes < 2:
        p.append("nodes must be >= 2 (sink plus at least one source)")
    if cfg.area_w <= 0 or cfg.area_h <= 0:
        p.append("area dimensions must be positive")
    if cfg.duration_s < 0:
        p.append("duration_s must be >= 0")
    if cfg.traffic_period_s <= 0:
        p.append("traffic_period_s must be positive")
    if cfg.protocol not in ("ctp", "elqr"):
        p.append(f"protocol must be ctp or elqr, got {cfg.protocol!r}")
    if cfg.snapshot_interval_s <= 0:
        p.append("snapshot_interval_s must be positive")
    if cfg.audit_interval_s <= 0:
        p.append("audit_interval_s must be positive")
    if cfg.queue_capacity < 1:
        p.append("queue_capacity must be >= 1")
    if cfg.max_retries < 0:
        p.append("max_retries must be >= 0")
    if cfg.airtime_ms <= 0 or cfg.ack_slot_ms <= 0:
        p.append("airtime_ms and ack_slot_ms must be positive")
    if cfg.payload_len < 0:
        p.append("payload_len must be >= 0")

    if cfg.window < 1:
        p.append("window must be >= 1")
    if not (0.0 <= cfg.broadcast_lambda <= 1.0 and 0.0 <= cfg.combine_mu <= 1.0):
        p.append("EWMA weights must be in [0, 1]")
    if cfg.unicast_fold < 1:
        p.append("unicast_fold must be >= 1")
    if cfg.etx_max_deci < 10:
        p.append("etx_max_deci must be >= 10")
    if not (10 <= cfg.initial_etx_deci <= cfg.etx_max_deci):
        p.append("initial_etx_deci must be in [10, etx_max_deci]")
    if cfg.table_size < 1:
        p.append("table_size must be >= 1")

    if cfg.voltage_v <= 0:
        p.append("voltage_v must be positive")
    for name in ("cpu_active_ma", "cpu_sleep_ma", "radio_tx_ma", "radio_rx_ma", "radio_idle_ma"):
        if getattr(cfg, name) < 0:
            p.append(f"{name} must be >= 0")
    if cfg.radio_tx_ma < cfg.radio_idle_ma:
        p.append("radio_tx_ma must be >= radio_idle_ma")
    if cfg.capacity_j <= 0:
        p.append("capacity_j must be positive")
    if not (0 <= cfg.dead_threshold_j < cfg.capacity_j):
        p.append("dead_threshold_j must be in [0, capacity_j)")

    if cfg.alpha_j < 0:
        p.append("alpha_j must be >= 0")
    if cfg.beta0_deci < 1:
        p.append("beta0_deci must be >= 1")
    if cfg.beta_max_deci < cfg.beta0_deci:
        p.append("beta_max_deci must be >= beta0_deci")
    if cfg.epoch_rounds < 1:
        p.append("epoch_rounds must be >= 1")
    if cfg.beacon_interval_s <= 0:
        p.append("beacon_interval_s must be positive")
    if cfg.hysteresis_deci < 0:
        p.append("hysteresis_deci must be >= 0")
    if cfg.staleness_periods < 1:
        p.append("staleness_periods must be >= 1")
    if cfg.expedite_threshold_deci < 1:
        p.append("expedite_threshold_deci must be >= 1")
    if cfg.expedite_min_gap_ms < 0:
        p.append("expedite_min_gap_ms must be >= 0")

    if cfg.d0_m <= 0:
        p.append("d0_m must be positive")
    if cfg.path_loss_exp <= 0:
        p.append("path_loss_exp must be positive")
    if cfg.asym_sigma_db < 0 or cfg.temporal_sigma_db < 0:
        p.append("channel sigmas must be >= 0")
    if cfg.prr_k <= 0:
        p.append("prr_k must be positive")
    if not (0.0 < cfg.link_floor_prr < 1.0):
        p.append("link_floor_prr must be in (0, 1)")

    if p:
        raise ConfigError(p)


def packaged_config_names():
    root = resources.files("elqrsim") / "configs"
    return sorted(entry.name for entry in root.iterdir() if entry.name.endswith(".cfg"))


def resolve_config_path(name_or_path: str) -> Path:
    """A bare name (no path separator) resolves against the packaged configs
    first, with or without the .cfg suffix; anything else is a filesystem
    path."""
    cand = Path(name_or_path)
    if cand.is_file():
        return cand
    if "/" not in name_or_path and "\\" not in name_or_path:
        base = name_or_path if name_or_path.endswith(".cfg") else name_or_path + ".cfg"
        packaged = resources.files("elqrsim") / "configs" / base
        try:
            if packaged.is_file():
                return Path(str(packaged))
        except OSError:
            pass
    return cand


def config_as_text(cfg: ScenarioConfig) -> str:
    """Resolved config rendered in the file format (section order fixed)."""
    d = asdict(cfg)
    out = []
    for sec, keys in SECTIONS.items():
        out.append(f"[{sec}]")
        for key in keys:
            v = d[key]
            if isinstance(v, bool):
                v = "true" if v else "false"
            out.append(f"{key} = {v}")
        out.append("")
    return "\n".join(out)
