"""Physical-layer observations: log-distance path loss, fading, frame errors.

RSSI is carried as attenuation in dB relative to the transmitter (larger means
a weaker link), so thresholds such as 75 dB read as "at least 75 dB of loss".
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

log = logging.getLogger(__name__)

SPEED_OF_LIGHT = 299_792_458.0


@dataclass(frozen=True)
class PathLossParams:
    beta: float = 2.0
    d0: float = 1.0
    tx_power_mw: float = 50.0
    wavelength: float = 0.125
    frequency: float = 2.4e9

    def __post_init__(self):
        if self.beta <= 0 or self.d0 <= 0 or self.tx_power_mw <= 0 or self.wavelength <= 0:
            raise ValueError(f"path-loss parameters must be positive: {self}")
        implied = self.wavelength * self.frequency
        if abs(implied - SPEED_OF_LIGHT) / SPEED_OF_LIGHT > 0.05:
            log.warning("wavelength*frequency = %.4g m/s, not the speed of light", implied)

    @property
    def tx_power_dbm(self) -> float:
        return 10.0 * math.log10(self.tx_power_mw)


@dataclass(frozen=True)
class FadingParams:
    shadow_sigma_db: float = 4.0
    multipath_sigma_db: float = 2.0
    shadow_correlation_m: float = 10.0

    def __post_init__(self):
        if min(self.shadow_sigma_db, self.multipath_sigma_db, self.shadow_correlation_m) < 0:
            raise ValueError(f"fading parameters must be non-negative: {self}")


@dataclass(frozen=True)
class LinkParams:
    """Frame-error curve: logistic in attenuation, shifted by interference."""

    knee_db: float = 86.0
    slope_db: float = 2.5
    # calibrated against the overlapping-channel layout of the default scenario
    interference_gain_db: float = 12.0
    max_retries: int = 7
    # "share": interference enters as I / (1 + I), the interferers' share of the
    # received power, so it costs at most interference_gain_db. "linear": g * I.
    interference_form: str = "share"

    def __post_init__(self):
        if self.slope_db <= 0:
            raise ValueError("slope_db must be positive")
        if self.interference_form not in ("share", "linear"):
            raise ValueError(f"unknown interference_form {self.interference_form!r}")
        if self.interference_gain_db < 0 or self.max_retries < 0:
            raise ValueError(f"invalid link parameters: {self}")


@dataclass(frozen=True)
class RadioSample:
    rssi_db: float
    distance_m: float
    speed_kmph: float
    retransmissions: int = 0

    def __post_init__(self):
        if self.distance_m < 0 or self.retransmissions < 0:
            raise ValueError(f"invalid radio sample: {self}")


def reference_fspl(p: PathLossParams) -> float:
    """Free-space loss at the close-in reference distance."""
    return 20.0 * math.log10(4.0 * math.pi * p.d0 / p.wavelength)


def path_loss_db(d: float, p: PathLossParams) -> float:
    # the close-in model is only used at or beyond d0
    d = max(d, p.d0)
    return reference_fspl(p) + 10.0 * p.beta * math.log10(d / p.d0)


def path_loss_array(d: np.ndarray, p: PathLossParams) -> np.ndarray:
    d = np.maximum(np.asarray(d, dtype=float), p.d0)
    return reference_fspl(p) + 10.0 * p.beta * np.log10(d / p.d0)


def received_power_dbm(d: float, p: PathLossParams) -> float:
    return p.tx_power_dbm - path_loss_db(d, p)


class ShadowState:
    """Log-normal shadowing on one link, exponentially correlated in distance moved."""

    def __init__(self, sigma_db: float, correlation_m: float, rng: np.random.Generator):
        self.sigma = sigma_db
        self.correlation_m = correlation_m
        self.value = sigma_db * rng.standard_normal() if sigma_db > 0 else 0.0

    def advance(self, moved_m: float, rng: np.random.Generator) -> float:
        if self.sigma <= 0:
            return self.value
        if self.correlation_m <= 0:
            rho = 0.0
        else:
            rho = math.exp(-abs(moved_m) / self.correlation_m)
        self.value = rho * self.value + math.sqrt(1.0 - rho * rho) * self.sigma * rng.standard_normal()
        return self.value


def rssi_at(d: float, p: PathLossParams, f: FadingParams, rng: np.random.Generator,
            shadow: ShadowState | None = None) -> float:
    """Faded attenuation at distance ``d``.

    With ``shadow`` given, its current value is used (the caller advances it as
    the node moves); otherwise an independent shadowing draw is made.
    """
    value = path_loss_db(d, p)
    if shadow is not None:
        value += shadow.value
    elif f.shadow_sigma_db > 0:
        value += f.shadow_sigma_db * rng.standard_normal()
    if f.multipath_sigma_db > 0:
        value += f.multipath_sigma_db * rng.standard_normal()
    return value


def frame_error_prob(rssi_db: float, interference_level: float, link: LinkParams = LinkParams()) -> float:
    if link.interference_form == "share":
        penalty = link.interference_gain_db * interference_level / (1.0 + interference_level)
    else:
        penalty = link.interference_gain_db * interference_level
    x = (rssi_db + penalty - link.knee_db) / link.slope_db
    # split on sign so exp never overflows
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def draw_frame_retries(fep: float, max_retries: int, rng: np.random.Generator) -> tuple[int, bool]:
    """Retransmissions spent on one frame and whether it finally got through.

    Every attempt fails independently with ``fep``; a frame that fails the
    first attempt and all ``max_retries`` retries is dropped.
    """
    if fep <= 0.0:
        return 0, True
    if fep >= 1.0:
        return max_retries, False
    failures = int(rng.geometric(1.0 - fep)) - 1
    if failures > max_retries:
        return max_retries, False
    return failures, True


def sample_retransmissions(fep: float, frames_in_interval: int, max_retries: int,
                           rng: np.random.Generator) -> int:
    if frames_in_interval < 0:
        raise ValueError("frames_in_interval must be non-negative")
    return sum(draw_frame_retries(fep, max_retries, rng)[0] for _ in range(frames_in_interval))
