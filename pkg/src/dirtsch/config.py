"""Run configuration: flat ``key = value`` text with documented keys.

Precedence is command-line override > file > built-in default. Errors name
the file, the line and the field.
"""

from __future__ import annotations

import configparser
import dataclasses
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

from .antenna import BeamConfig, Mode
from .link_model import LinkModelParams, dbm_to_watt
from .scheduler import TimerPolicy
from .sim import SimConfig, Traffic

_SECTION = "run"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    # topology
    nodes: int = 16
    area_width: float = 1000.0
    area_height: float = 1000.0
    radius: float = 350.0
    placement: str = "uniform-connected"
    topology_file: str = ""
    # simulation
    seed: int = 0
    mode: str = "directional"
    duration: float = 300.0
    timeslot: float = 0.010
    data_rate: float = 2e6
    packet_size: int = 127
    traffic: str = "cbr"
    traffic_rate: float = 66.0
    buffer_capacity: int = 256
    reschedule_period: int = 1
    slotframe_length: int = 16
    channels: int = 1
    idle_energy: float = 0.0
    # antenna; "auto" derives the interference multiplier from the thresholds
    beams: int = 4
    interference_factor: str = "auto"
    # radio
    tx_power_dbm: float = 15.0
    rx_threshold_dbm: float = -81.0
    sensing_threshold_dbm: float = -91.0
    noise_density_dbm_hz: float = -174.0
    bandwidth: float = 20e6
    path_loss_exponent: float = 3.0
    path_loss_constant: float = 1.0
    ber: float = 1e-5
    uplink_access_time: float = 0.0
    downlink_access_time: float = 0.0
    # protocol
    timer_base: int = 60

    # -- derived objects ---------------------------------------------------

    def link_params(self) -> LinkModelParams:
        return LinkModelParams(
            noise_density=dbm_to_watt(self.noise_density_dbm_hz),
            bandwidth=self.bandwidth,
            path_loss_exponent=self.path_loss_exponent,
            path_loss_constant=self.path_loss_constant,
            ber=self.ber,
            uplink_access_time=self.uplink_access_time,
            downlink_access_time=self.downlink_access_time,
            tx_power_dbm=self.tx_power_dbm,
            rx_threshold_dbm=self.rx_threshold_dbm,
            sensing_threshold_dbm=self.sensing_threshold_dbm,
        )

    def resolved_interference_factor(self) -> float:
        if self.interference_factor == "auto":
            return threshold_range_ratio(self.rx_threshold_dbm, self.sensing_threshold_dbm,
                                         self.path_loss_exponent)
        return float(self.interference_factor)

    def beam_config(self) -> BeamConfig:
        return BeamConfig(self.beams, self.resolved_interference_factor())

    def policy(self) -> TimerPolicy:
        return TimerPolicy(base=self.timer_base)

    def sim_config(self, mode: str | Mode | None = None) -> SimConfig:
        return SimConfig(
            duration=self.duration, timeslot=self.timeslot, mac_rate=self.data_rate,
            packet_size=self.packet_size, traffic=Traffic(self.traffic), rate=self.traffic_rate,
            buffer_capacity=self.buffer_capacity, seed=self.seed,
            mode=Mode(mode if mode is not None else self.mode),
            reschedule_period=self.reschedule_period, slotframe_length=self.slotframe_length,
            num_channels=self.channels, idle_energy=self.idle_energy,
        )

    def dumps(self) -> str:
        return "".join(f"{f.name} = {getattr(self, f.name)}\n"
                       for f in dataclasses.fields(self))


def threshold_range_ratio(rx_threshold_dbm: float, sensing_threshold_dbm: float,
                          alpha: float) -> float:
    """How much farther a signal stays above the sensing threshold than the
    receive threshold under ``d^-alpha`` path loss."""
    return 10.0 ** ((rx_threshold_dbm - sensing_threshold_dbm) / (10.0 * alpha))


FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}


def default_config_text() -> str:
    return resources.files("dirtsch").joinpath("data/default.cfg").read_text()


def _coerce(name: str, raw: str) -> Any:
    default = getattr(RunConfig, name)
    try:
        if isinstance(default, bool):
            return raw.lower() in ("1", "true", "yes", "on")
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
    except ValueError:
        kind = type(default).__name__
        raise ValueError(f"expected {kind}, got {raw!r}") from None
    return raw


def _key_lines(text: str) -> dict[str, int]:
    lines = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        m = re.match(r"\s*([A-Za-z_][\w-]*)\s*[=:]", raw)
        if m:
            lines.setdefault(m.group(1).lower(), lineno)
    return lines


def parse_config(text: str, source: str = "<config>") -> dict[str, Any]:
    """Parse file text into typed values for the keys it sets."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"),
                                       interpolation=None, strict=True)
    try:
        parser.read_string(f"[{_SECTION}]\n" + text, source=source)
    except configparser.DuplicateOptionError as exc:
        raise ConfigError(f"{source}:{exc.lineno - 1}: field {exc.option!r} set twice") from None
    except configparser.ParsingError as exc:
        lineno, line = exc.errors[0]
        raise ConfigError(f"{source}:{lineno - 1}: expected 'key = value', got "
                          f"{line.strip()!r}") from None
    except configparser.Error as exc:
        msg = str(exc).replace("\n", " ")
        # the synthetic section header shifts line numbers by one
        msg = re.sub(r"line:?\s+(\d+)", lambda m: f"line {int(m.group(1)) - 1}", msg)
        raise ConfigError(f"{source}: {msg}") from None
    if len(parser.sections()) != 1:
        raise ConfigError(f"{source}: sections are not supported; use flat key = value lines")
    where = _key_lines(text)
    values = {}
    for key, raw in parser.items(_SECTION):
        line = where.get(key, 0)
        name = key.replace("-", "_")
        if name not in FIELDS:
            raise ConfigError(f"{source}:{line}: unknown field {key!r}")
        try:
            values[name] = _coerce(name, raw.strip())
        except ValueError as exc:
            raise ConfigError(f"{source}:{line}: field {key!r}: {exc}") from None
    return values


def validate(cfg: RunConfig, origin: Mapping[str, str] | None = None) -> None:
    """Build every derived object once so bad values fail before a run."""
    origin = origin or {}

    def fail(name: str, why: str) -> ConfigError:
        return ConfigError(f"{origin.get(name, '<default>')}: field {name!r}: {why}")

    checks = [
        ("mode", lambda: Mode(cfg.mode)),
        ("traffic", lambda: Traffic(cfg.traffic)),
        ("interference_factor", cfg.beam_config),
        ("beams", lambda: cfg.beam_config().require_even()),
        ("nodes", lambda: cfg.nodes >= 1 or _raise("must be >= 1")),
        ("radius", lambda: cfg.radius > 0 or _raise("must be positive")),
        ("area_width", lambda: cfg.area_width > 0 or _raise("must be positive")),
        ("area_height", lambda: cfg.area_height > 0 or _raise("must be positive")),
        ("timer_base", cfg.policy),
    ]
    for name, check in checks:
        try:
            check()
        except ValueError as exc:
            raise fail(name, str(exc)) from None
    try:
        cfg.link_params()
    except ValueError as exc:
        raise fail("link", str(exc)) from None
    try:
        cfg.sim_config()
    except ValueError as exc:
        raise fail("simulation", str(exc)) from None


def _raise(msg: str):
    raise ValueError(msg)


def load_config(path: str | Path | None = None,
                overrides: Mapping[str, Any] | None = None) -> RunConfig:
    """Defaults, then the file at ``path``, then non-``None`` overrides."""
    values: dict[str, Any] = {}
    origin: dict[str, str] = {}
    if path is not None:
        p = Path(path)
        try:
            text = p.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {str(p)!r}: {exc.strerror}") from None
        values.update(parse_config(text, str(p)))
        lines = _key_lines(text)
        origin.update({k: f"{p}:{lines.get(k, 0)}" for k in values})
    for key, val in (overrides or {}).items():
        if val is None:
            continue
        if key not in FIELDS:
            raise ConfigError(f"unknown override {key!r}")
        values[key] = val
        origin[key] = f"--{key.replace('_', '-')}"
    try:
        cfg = RunConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
    validate(cfg, origin)
    return cfg
