"""Handover triggers driven by one RadioSample per update interval.

All four triggers expose ``observe(sample, now) -> Decision`` and
``on_attach(now, speed_kmph)``. The simulation calls ``on_attach`` whenever
the node completes association with an access point.
"""
from __future__ import annotations

import enum
import math
from collections import deque
from dataclasses import asdict, dataclass, fields
from typing import Deque, Mapping

from .fuzzy import DEFAULT_CONFIG, FuzzyConfig, InputVector, infer
from .radio import RadioSample

ALGORITHMS = ("fl-trend", "rssi-threshold", "change-of-rssi", "fr-threshold")


class Decision(enum.Enum):
    HOLD = "hold"
    HANDOVER = "handover"


HOLD = Decision.HOLD
HANDOVER = Decision.HANDOVER


@dataclass(frozen=True)
class TriggerConfig:
    update_interval_b: float = 0.1
    window_size_nws: int = 10
    threshold_thho: int = 7
    score_cutoff: float = 0.0
    # "count": TH_HO of the last N_ws scores exceed score_cutoff.
    # "magnitude": the mean of the last N_ws scores reaches TH_HO.
    threshold_mode: str = "count"
    rssi_threshold_db: float = 75.0
    change_window: int = 10
    change_delta_db: float = 10.0
    fr_threshold: int = 3
    suppression_distance_d: float = 100.0
    # "fixed": D is suppression_distance_d.
    # "travelled": D is the distance covered while attached to the previous AP.
    suppression_distance_mode: str = "fixed"
    max_suppression_s: float = 120.0
    baseline_blackout_s: float = 0.1

    def __post_init__(self):
        if self.update_interval_b <= 0:
            raise ValueError("update_interval_b must be positive")
        if self.threshold_mode == "count" and not 0 < self.threshold_thho <= self.window_size_nws:
            raise ValueError("need 0 < threshold_thho <= window_size_nws")
        if self.window_size_nws < 1 or self.change_window < 2:
            raise ValueError("window sizes too small")
        if self.threshold_mode not in ("count", "magnitude"):
            raise ValueError(f"unknown threshold_mode {self.threshold_mode!r}")
        if self.suppression_distance_mode not in ("fixed", "travelled"):
            raise ValueError(f"unknown suppression_distance_mode {self.suppression_distance_mode!r}")
        if self.max_suppression_s < 0 or self.baseline_blackout_s < 0:
            raise ValueError("durations must be non-negative")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Mapping | None) -> "TriggerConfig":
        data = dict(data or {})
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown trigger keys: {sorted(unknown)}")
        return cls(**data)


def compute_suppression(speed_kmph: float, cfg: TriggerConfig, distance_m: float | None = None) -> float:
    """Post-attach delay W = D / speed, in seconds, capped at ``max_suppression_s``."""
    d = cfg.suppression_distance_d if distance_m is None else distance_m
    speed_ms = speed_kmph / 3.6
    if speed_ms <= 0:
        return cfg.max_suppression_s
    return min(d / speed_ms, cfg.max_suppression_s)


class SlidingWindow:
    """Most recent scores, oldest evicted first."""

    def __init__(self, capacity: int):
        self.capacity = capacity
        self.scores: Deque[float] = deque(maxlen=capacity)

    def __len__(self):
        return len(self.scores)

    @property
    def full(self) -> bool:
        return len(self.scores) == self.capacity

    def push(self, value: float) -> None:
        self.scores.append(value)

    def clear(self) -> None:
        self.scores.clear()

    def count_above(self, cutoff: float) -> int:
        return sum(1 for s in self.scores if s > cutoff)

    def mean(self) -> float:
        return sum(self.scores) / len(self.scores) if self.scores else float("nan")


class FLTrendTrigger:
    """Fuzzy score trend over a sliding window, with a speed-dependent post-attach delay."""

    name = "fl-trend"

    def __init__(self, cfg: TriggerConfig = TriggerConfig(), fuzzy_cfg: FuzzyConfig = DEFAULT_CONFIG):
        self.cfg = cfg
        self.fuzzy_cfg = fuzzy_cfg
        self.window = SlidingWindow(cfg.window_size_nws)
        self.iteration_i = 0
        self.suppression_until = -math.inf
        self.last_score: float | None = None

    def mode(self, now: float) -> str:
        return "Suppressed" if now < self.suppression_until else "Monitoring"

    def on_attach(self, now: float, speed_kmph: float, travelled_m: float | None = None,
                  suppress: bool = True) -> float:
        """Reset the window and counter; returns the suppression delay applied."""
        self.window.clear()
        self.iteration_i = 0
        w = 0.0
        if suppress:
            d = travelled_m if self.cfg.suppression_distance_mode == "travelled" else None
            w = compute_suppression(speed_kmph, self.cfg, d)
        self.suppression_until = now + w
        return w

    def observe(self, sample: RadioSample, now: float) -> Decision:
        if now < self.suppression_until:
            return HOLD
        result = infer(InputVector(sample.rssi_db, sample.speed_kmph, sample.distance_m), self.fuzzy_cfg)
        self.last_score = result.score
        self.window.push(result.score)
        if self.window.full and self._threshold_reached():
            return HANDOVER
        self.iteration_i += 1
        return HOLD

    def _threshold_reached(self) -> bool:
        if self.cfg.threshold_mode == "count":
            return self.window.count_above(self.cfg.score_cutoff) >= self.cfg.threshold_thho
        return self.window.mean() >= self.cfg.threshold_thho


def fl_trend_observe(state: FLTrendTrigger, sample: RadioSample, now: float) -> Decision:
    return state.observe(sample, now)


def rssi_threshold_observe(sample: RadioSample, cfg: TriggerConfig) -> Decision:
    return HANDOVER if sample.rssi_db >= cfg.rssi_threshold_db else HOLD


def fr_threshold_observe(sample: RadioSample, cfg: TriggerConfig) -> Decision:
    return HANDOVER if sample.retransmissions >= cfg.fr_threshold else HOLD


class _BaselineTrigger:
    """Common post-attach blackout for the three baseline triggers."""

    name = ""

    def __init__(self, cfg: TriggerConfig = TriggerConfig()):
        self.cfg = cfg
        self.blackout_until = -math.inf

    def on_attach(self, now: float, speed_kmph: float = 0.0, travelled_m: float | None = None,
                  suppress: bool = True) -> float:
        w = self.cfg.baseline_blackout_s if suppress else 0.0
        self.blackout_until = now + w
        self._reset()
        return w

    def _reset(self) -> None:
        pass

    def observe(self, sample: RadioSample, now: float) -> Decision:
        if now < self.blackout_until:
            return HOLD
        return self._decide(sample)

    def _decide(self, sample: RadioSample) -> Decision:
        raise NotImplementedError


class RSSIThresholdTrigger(_BaselineTrigger):
    name = "rssi-threshold"

    def _decide(self, sample):
        return rssi_threshold_observe(sample, self.cfg)


class FRThresholdTrigger(_BaselineTrigger):
    name = "fr-threshold"

    def _decide(self, sample):
        return fr_threshold_observe(sample, self.cfg)


class ChangeOfRSSITrigger(_BaselineTrigger):
    """Hands over when attenuation grew by ``change_delta_db`` across the window."""

    name = "change-of-rssi"

    def __init__(self, cfg: TriggerConfig = TriggerConfig()):
        super().__init__(cfg)
        self.history: Deque[float] = deque(maxlen=cfg.change_window)

    def _reset(self):
        self.history.clear()

    def _decide(self, sample):
        self.history.append(sample.rssi_db)
        if len(self.history) < self.history.maxlen:
            return HOLD
        if self.history[-1] - self.history[0] >= self.cfg.change_delta_db:
            return HANDOVER
        return HOLD


def change_of_rssi_observe(state: ChangeOfRSSITrigger, sample: RadioSample, now: float = math.inf) -> Decision:
    return state.observe(sample, now)


def make_trigger(algorithm: str, cfg: TriggerConfig = TriggerConfig(),
                 fuzzy_cfg: FuzzyConfig = DEFAULT_CONFIG):
    if algorithm == "fl-trend":
        return FLTrendTrigger(cfg, fuzzy_cfg)
    if algorithm == "rssi-threshold":
        return RSSIThresholdTrigger(cfg)
    if algorithm == "change-of-rssi":
        return ChangeOfRSSITrigger(cfg)
    if algorithm == "fr-threshold":
        return FRThresholdTrigger(cfg)
    raise ValueError(f"unknown algorithm {algorithm!r}; choose from {', '.join(ALGORITHMS)}")
