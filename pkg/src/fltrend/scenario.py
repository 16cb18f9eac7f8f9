"""Scenario description, defaults and YAML (de)serialization."""
from __future__ import annotations

import copy
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Mapping, Tuple

import yaml

from .fuzzy import FuzzyConfig
from .radio import FadingParams, LinkParams, PathLossParams
from .triggers import ALGORITHMS, TriggerConfig

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class AccessPoint:
    x: float
    y: float
    channel: int = 1


@dataclass(frozen=True)
class TrafficParams:
    mn_interval_f: float = 0.5
    cn_interval_c: float = 0.08
    packet_bytes: int = 1000


@dataclass(frozen=True)
class ScanParams:
    min_channel_time: float = 1.0
    max_channel_time: float = 3.0


@dataclass(frozen=True)
class DelayParams:
    base_wire_delay_ms: float = 5.0
    air_delay_ms_per_100m: float = 2.0
    # airtime of one 1000-byte retransmission at 2 Mb/s plus MAC overhead
    retry_airtime_ms: float = 4.5
    # after each handover, traffic is relayed through the home network until the
    # new binding is in place; zero window or zero extra gives the plain link delay
    rebind_window_s: float = 2.0
    rebind_extra_ms: float = 30.0


def default_access_points() -> Tuple[AccessPoint, ...]:
    return (
        AccessPoint(50.0, 50.0, 1),
        AccessPoint(100.0, 50.0, 6),
        AccessPoint(50.0, 100.0, 6),
        AccessPoint(100.0, 100.0, 1),
    )


@dataclass(frozen=True)
class Scenario:
    area: Tuple[float, float] = (150.0, 150.0)
    access_points: Tuple[AccessPoint, ...] = field(default_factory=default_access_points)
    home_ap: int = 0
    speed_kmph: float = 20.0
    duration_s: float = 600.0
    seed: int = 1
    algorithm: str = "fl-trend"
    traffic: TrafficParams = TrafficParams()
    path_loss: PathLossParams = PathLossParams()
    fading: FadingParams = FadingParams()
    link: LinkParams = LinkParams()
    # retry threshold calibrated for the default layout and traffic mix
    trigger: TriggerConfig = TriggerConfig(fr_threshold=2)
    fuzzy: FuzzyConfig = field(default_factory=FuzzyConfig)
    scan: ScanParams = ScanParams()
    handshake_latency_s: float = 0.1
    # a candidate AP weaker than this (attenuation, dB) is not eligible as a target
    usable_rssi_db: float = 95.0
    delay: DelayParams = DelayParams()
    # "lost": packets sent while a handover is pending are dropped; "queue": held until attach
    handover_packets: str = "lost"

    def validate(self) -> None:
        errors = []
        if len(self.access_points) < 2:
            errors.append("need at least 2 access points")
        if not 0 <= self.home_ap < len(self.access_points):
            errors.append(f"home_ap {self.home_ap} out of range")
        w, h = self.area
        if w <= 0 or h <= 0:
            errors.append("area must be positive")
        for i, ap in enumerate(self.access_points):
            if not (0 <= ap.x <= w and 0 <= ap.y <= h):
                errors.append(f"access point {i} lies outside the area")
        if self.duration_s <= 0:
            errors.append("duration_s must be positive")
        if self.speed_kmph < 0:
            errors.append("speed_kmph must be non-negative")
        if self.algorithm not in ALGORITHMS:
            errors.append(f"unknown algorithm {self.algorithm!r}")
        if self.traffic.mn_interval_f <= 0 or self.traffic.cn_interval_c <= 0 or self.traffic.packet_bytes <= 0:
            errors.append("traffic intervals and packet size must be positive")
        if not 0 <= self.scan.min_channel_time <= self.scan.max_channel_time:
            errors.append("need 0 <= min_channel_time <= max_channel_time")
        if self.handshake_latency_s < 0:
            errors.append("handshake_latency_s must be non-negative")
        if self.handover_packets not in ("lost", "queue"):
            errors.append(f"handover_packets must be 'lost' or 'queue', got {self.handover_packets!r}")
        if errors:
            raise ValueError("invalid scenario: " + "; ".join(errors))

    def with_overrides(self, **kwargs) -> "Scenario":
        return replace(self, **kwargs)

    def to_dict(self) -> dict:
        out: dict[str, Any] = {"schema_version": SCHEMA_VERSION}
        for f in fields(self):
            value = getattr(self, f.name)
            if f.name == "fuzzy":
                out[f.name] = value.to_dict()
            elif f.name == "access_points":
                out[f.name] = [asdict(ap) for ap in value]
            elif f.name == "area":
                out[f.name] = list(value)
            elif hasattr(value, "__dataclass_fields__"):
                out[f.name] = asdict(value)
            else:
                out[f.name] = value
        return out

    @classmethod
    def from_dict(cls, data: Mapping | None) -> "Scenario":
        data = copy.deepcopy(dict(data or {}))
        version = data.pop("schema_version", SCHEMA_VERSION)
        if version != SCHEMA_VERSION:
            raise ValueError(f"unsupported scenario schema_version {version}")
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown scenario keys: {sorted(unknown)}")
        kwargs: dict[str, Any] = {}
        nested = {
            "traffic": TrafficParams, "path_loss": PathLossParams, "fading": FadingParams,
            "link": LinkParams, "scan": ScanParams, "delay": DelayParams,
        }
        for key, value in data.items():
            if key in nested:
                kwargs[key] = _build(nested[key], value)
            elif key == "trigger":
                kwargs[key] = TriggerConfig.from_dict(value)
            elif key == "fuzzy":
                kwargs[key] = FuzzyConfig.from_dict(value)
            elif key == "access_points":
                kwargs[key] = tuple(AccessPoint(**ap) for ap in value)
            elif key == "area":
                kwargs[key] = tuple(float(v) for v in value)
            else:
                kwargs[key] = value
        return cls(**kwargs)


def _build(cls, value: Mapping | None):
    value = dict(value or {})
    known = {f.name for f in fields(cls)}
    unknown = set(value) - known
    if unknown:
        raise ValueError(f"unknown {cls.__name__} keys: {sorted(unknown)}")
    return cls(**value)


def load_scenario(path: str | Path) -> Scenario:
    with open(path) as fh:
        data = yaml.safe_load(fh) or {}
    return Scenario.from_dict(data)


def dump_scenario(scenario: Scenario) -> str:
    return yaml.safe_dump(scenario.to_dict(), sort_keys=False, default_flow_style=None)
