"""Three-input Mamdani-style fuzzy inference producing a bipolar handover score.

Inputs are RSSI (attenuation in dB, larger is weaker), speed (km/h) and distance
to the serving access point (m). Each is covered by Low/Medium/High trapezoids.
The 27-rule matrix maps every label triple to either a not-handover or a
handover consequent; the two groups are combined by root-sum-square and
collapsed into a single score in [-100, 100].
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Mapping, Sequence, Tuple

log = logging.getLogger(__name__)

LABELS: Tuple[str, str, str] = ("Low", "Medium", "High")
VARIABLES: Tuple[str, str, str] = ("rssi", "speed", "distance")

NOT_HANDOVER = "NH"
HANDOVER = "H"


_BELOW_100 = math.nextafter(100.0, 0.0)


class IndeterminateScoreError(ValueError):
    """No rule fired, so the score has no defined value."""


@dataclass(frozen=True)
class MembershipFunction:
    """Trapezoid (a, b, c, d); a == b or c == d turns that side into a shoulder."""

    a: float
    b: float
    c: float
    d: float

    def __post_init__(self):
        if not (self.a <= self.b <= self.c <= self.d):
            raise ValueError(f"trapezoid breakpoints must be ordered, got {self.as_tuple()}")

    def as_tuple(self) -> Tuple[float, float, float, float]:
        return (self.a, self.b, self.c, self.d)

    def __call__(self, x: float) -> float:
        return membership_degree(self, x)


def membership_degree(mf: MembershipFunction, x: float) -> float:
    a, b, c, d = mf.a, mf.b, mf.c, mf.d
    if b <= x <= c:
        return 1.0
    if x < b:
        if a == b:
            return 1.0
        if x <= a:
            return 0.0
        return (x - a) / (b - a)
    if c == d:
        return 1.0
    if x >= d:
        return 0.0
    return (d - x) / (d - c)


@dataclass(frozen=True)
class FuzzyVariable:
    name: str
    domain: Tuple[float, float]
    labels: Mapping[str, MembershipFunction]

    def __post_init__(self):
        if set(self.labels) != set(LABELS):
            raise ValueError(f"{self.name}: labels must be exactly {LABELS}, got {sorted(self.labels)}")
        lo, hi = self.domain
        if lo >= hi:
            raise ValueError(f"{self.name}: empty domain {self.domain}")

    def clamp(self, x: float) -> float:
        lo, hi = self.domain
        if x < lo or x > hi:
            log.warning("%s=%g outside domain [%g, %g]; clamped", self.name, x, lo, hi)
            return min(max(x, lo), hi)
        return x

    def degrees(self, x: float) -> Dict[str, float]:
        return {label: membership_degree(self.labels[label], x) for label in LABELS}

    def gaps(self, samples: int = 2001) -> list:
        """Points of the domain (on a uniform grid) where no label is active."""
        lo, hi = self.domain
        step = (hi - lo) / (samples - 1)
        xs = [lo + i * step for i in range(samples)]
        return [x for x in xs if max(self.degrees(x).values()) <= 0.0]


@dataclass(frozen=True)
class Rule:
    id: int
    rssi: str
    speed: str
    distance: str
    kind: str  # NOT_HANDOVER or HANDOVER
    index: int  # position within its class, e.g. NH10 -> 10

    @property
    def antecedent(self) -> Tuple[str, str, str]:
        return (self.rssi, self.speed, self.distance)

    @property
    def consequent(self) -> str:
        return f"{self.kind}{self.index}"


# (rssi, speed, distance, consequent), rule ids 1..27 in order.
_RULE_MATRIX = (
    ("High", "High", "High", "NH1"),
    ("High", "Medium", "High", "NH2"),
    ("High", "Low", "High", "NH3"),
    ("Medium", "High", "High", "H1"),
    ("Medium", "Medium", "High", "H2"),
    ("Medium", "Low", "High", "H3"),
    ("Low", "High", "High", "H4"),
    ("Low", "Medium", "High", "H5"),
    ("Low", "Low", "High", "H6"),
    ("High", "High", "Medium", "NH4"),
    ("High", "Medium", "Medium", "NH5"),
    ("High", "Low", "Medium", "NH6"),
    ("Medium", "High", "Medium", "H7"),
    ("Medium", "Medium", "Medium", "H8"),
    ("Medium", "Low", "Medium", "NH7"),
    ("Low", "High", "Medium", "H9"),
    ("Low", "Medium", "Medium", "H10"),
    ("Low", "Low", "Medium", "H11"),
    ("High", "High", "Low", "NH8"),
    ("High", "Medium", "Low", "NH9"),
    ("High", "Low", "Low", "NH10"),
    ("Medium", "High", "Low", "NH11"),
    ("Medium", "Medium", "Low", "NH12"),
    ("Medium", "Low", "Low", "NH13"),
    ("Low", "High", "Low", "H12"),
    ("Low", "Medium", "Low", "H13"),
    ("Low", "Low", "Low", "H14"),
)


def parse_consequent(text: str) -> Tuple[str, int]:
    text = text.strip().upper()
    if text.startswith(NOT_HANDOVER):
        return NOT_HANDOVER, int(text[2:])
    if text.startswith(HANDOVER):
        return HANDOVER, int(text[1:])
    raise ValueError(f"bad consequent {text!r}; expected NH<k> or H<k>")


def make_rules(matrix: Sequence[Sequence[str]]) -> Tuple[Rule, ...]:
    rules = []
    for i, (r, s, d, cons) in enumerate(matrix, start=1):
        kind, index = parse_consequent(cons)
        rules.append(Rule(i, r, s, d, kind, index))
    validate_rules(rules)
    return tuple(rules)


def validate_rules(rules: Sequence[Rule]) -> None:
    if len(rules) != 27:
        raise ValueError(f"expected 27 rules, got {len(rules)}")
    antecedents = {r.antecedent for r in rules}
    if len(antecedents) != 27:
        raise ValueError("rule antecedents are not distinct")
    for r in rules:
        for label in r.antecedent:
            if label not in LABELS:
                raise ValueError(f"rule {r.id}: unknown label {label!r}")


DEFAULT_RULES = make_rules(_RULE_MATRIX)


def _trap(a, b, c, d) -> MembershipFunction:
    return MembershipFunction(a, b, c, d)


def default_variables() -> Dict[str, FuzzyVariable]:
    # rssi "High" means strong signal, i.e. low attenuation
    return {
        "rssi": FuzzyVariable("rssi", (0.0, 150.0), {
            "High": _trap(0.0, 0.0, 65.0, 75.0),
            "Medium": _trap(65.0, 75.0, 75.0, 86.0),
            "Low": _trap(75.0, 86.0, 150.0, 150.0),
        }),
        "speed": FuzzyVariable("speed", (0.0, 120.0), {
            "Low": _trap(0.0, 0.0, 8.0, 14.0),
            "Medium": _trap(8.0, 14.0, 16.0, 22.0),
            "High": _trap(16.0, 22.0, 120.0, 120.0),
        }),
        "distance": FuzzyVariable("distance", (0.0, 500.0), {
            "Low": _trap(0.0, 0.0, 30.0, 50.0),
            "Medium": _trap(30.0, 50.0, 60.0, 80.0),
            "High": _trap(60.0, 80.0, 500.0, 500.0),
        }),
    }


@dataclass(frozen=True)
class FuzzyConfig:
    variables: Mapping[str, FuzzyVariable] = field(default_factory=default_variables)
    rules: Tuple[Rule, ...] = DEFAULT_RULES
    tnorm: str = "min"  # or "product"
    aggregation: str = "rss"  # or "rms"

    def __post_init__(self):
        if set(self.variables) != set(VARIABLES):
            raise ValueError(f"variables must be {VARIABLES}")
        if self.tnorm not in ("min", "product"):
            raise ValueError(f"unknown t-norm {self.tnorm!r}")
        if self.aggregation not in ("rss", "rms"):
            raise ValueError(f"unknown aggregation {self.aggregation!r}")
        validate_rules(self.rules)

    def to_dict(self) -> dict:
        return {
            "tnorm": self.tnorm,
            "aggregation": self.aggregation,
            "variables": {
                name: {
                    "domain": list(var.domain),
                    **{label: list(var.labels[label].as_tuple()) for label in LABELS},
                }
                for name, var in self.variables.items()
            },
            "rules": [[r.rssi, r.speed, r.distance, r.consequent] for r in self.rules],
        }

    @classmethod
    def from_dict(cls, data: Mapping | None) -> "FuzzyConfig":
        data = dict(data or {})
        variables = default_variables()
        for name, entry in (data.get("variables") or {}).items():
            if name not in variables:
                raise ValueError(f"unknown fuzzy variable {name!r}")
            base = variables[name]
            labels = dict(base.labels)
            for label in LABELS:
                if label in entry:
                    labels[label] = MembershipFunction(*map(float, entry[label]))
            domain = tuple(map(float, entry.get("domain", base.domain)))
            variables[name] = FuzzyVariable(name, domain, labels)
        rules = make_rules(data["rules"]) if data.get("rules") else DEFAULT_RULES
        return cls(
            variables=variables,
            rules=rules,
            tnorm=data.get("tnorm", "min"),
            aggregation=data.get("aggregation", "rss"),
        )


@dataclass(frozen=True)
class InputVector:
    rssi: float
    speed: float
    distance: float

    def __post_init__(self):
        if self.speed < 0 or self.distance < 0:
            raise ValueError(f"speed and distance must be non-negative: {self}")


@dataclass(frozen=True)
class InferenceResult:
    firing: Dict[int, float]
    nh_score: float
    h_score: float
    score: float


Degrees = Dict[str, Dict[str, float]]


def fuzzify(inp: InputVector, cfg: FuzzyConfig) -> Degrees:
    values = {"rssi": inp.rssi, "speed": inp.speed, "distance": inp.distance}
    return {
        name: cfg.variables[name].degrees(cfg.variables[name].clamp(values[name]))
        for name in VARIABLES
    }


def fire_rules(degrees: Mapping[str, Mapping[str, float]], rules: Sequence[Rule],
               tnorm: str = "min") -> Dict[int, float]:
    """Rule activations keyed by rule id. Labels missing from ``degrees`` count as 0."""
    rssi = degrees.get("rssi", {})
    speed = degrees.get("speed", {})
    dist = degrees.get("distance", {})
    firing = {}
    for rule in rules:
        mu = (rssi.get(rule.rssi, 0.0), speed.get(rule.speed, 0.0), dist.get(rule.distance, 0.0))
        if tnorm == "min":
            firing[rule.id] = min(mu)
        else:
            firing[rule.id] = mu[0] * mu[1] * mu[2]
    return firing


def aggregate(firing: Mapping[int, float], rules: Sequence[Rule] = DEFAULT_RULES,
              mode: str = "rss") -> Tuple[float, float]:
    """(not-handover score, handover score) as root-sum-squares of each group.

    ``mode="rms"`` additionally divides each sum of squares by its group size.
    """
    nh_sq = h_sq = 0.0
    n_nh = n_h = 0
    for rule in rules:
        w = firing.get(rule.id, 0.0)
        if rule.kind == NOT_HANDOVER:
            nh_sq += w * w
            n_nh += 1
        else:
            h_sq += w * w
            n_h += 1
    if mode == "rms":
        nh_sq = nh_sq / n_nh if n_nh else 0.0
        h_sq = h_sq / n_h if n_h else 0.0
    return math.sqrt(nh_sq), math.sqrt(h_sq)


def defuzzify(nh_score: float, h_score: float) -> float:
    if nh_score < 0 or h_score < 0:
        raise ValueError(f"scores must be non-negative, got ({nh_score}, {h_score})")
    total = nh_score + h_score
    if total == 0:
        raise IndeterminateScoreError("no rule fired; membership configuration leaves a coverage gap")
    if nh_score == 0:
        return 100.0
    if h_score == 0:
        return -100.0
    score = (-100.0 * nh_score + 100.0 * h_score) / total
    # with both kinds of evidence present the bound is never reached; rounding must not reach it either
    return min(_BELOW_100, max(-_BELOW_100, score))


def infer(inp: InputVector, cfg: FuzzyConfig | None = None) -> InferenceResult:
    cfg = cfg or DEFAULT_CONFIG
    firing = fire_rules(fuzzify(inp, cfg), cfg.rules, cfg.tnorm)
    nh, h = aggregate(firing, cfg.rules, cfg.aggregation)
    return InferenceResult(firing, nh, h, defuzzify(nh, h))


def score(rssi: float, speed: float, distance: float, cfg: FuzzyConfig | None = None) -> float:
    return infer(InputVector(rssi, speed, distance), cfg).score


DEFAULT_CONFIG = FuzzyConfig()
