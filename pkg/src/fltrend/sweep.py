"""Speed x algorithm x seed sweeps, averaging, and CSV / plot-series output."""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from .scenario import Scenario
from .sim import MetricsReport, SimResult, Simulation
from .triggers import ALGORITHMS

CSV_COLUMNS = (
    "algorithm", "speed_kmph", "seed", "handovers",
    "mn_loss_pct", "cn_loss_pct", "mn_tput_kbps", "cn_tput_kbps",
    "mn_delay_min_ms", "mn_delay_max_ms", "mn_delay_mean_ms",
    "cn_delay_min_ms", "cn_delay_max_ms", "cn_delay_mean_ms",
)
METRIC_COLUMNS = CSV_COLUMNS[3:]
AVG = "AVG"

DEFAULT_SPEEDS = (5.0, 10.0, 15.0, 20.0, 25.0, 30.0)


class SweepError(RuntimeError):
    pass


@dataclass(frozen=True)
class SweepSpec:
    base_scenario: Scenario = field(default_factory=Scenario)
    speeds_kmph: Tuple[float, ...] = DEFAULT_SPEEDS
    algorithms: Tuple[str, ...] = ALGORITHMS
    seeds: int = 10
    master_seed: int = 2012

    def __post_init__(self):
        if not self.speeds_kmph or not self.algorithms:
            raise ValueError("speeds and algorithms must be non-empty")
        if self.seeds < 1:
            raise ValueError("seeds must be >= 1")
        bad = [a for a in self.algorithms if a not in ALGORITHMS]
        if bad:
            raise ValueError(f"unknown algorithms: {bad}")


def derive_seed(master_seed: int, speed_kmph: float, seed_index: int) -> int:
    # the algorithm is deliberately left out so every trigger sees the same channel
    key = f"{master_seed}:{float(speed_kmph)!r}:{seed_index}".encode()
    return int.from_bytes(hashlib.sha256(key).digest()[:8], "big")


def metrics_row(report: MetricsReport) -> Dict[str, float]:
    return {
        "handovers": float(report.handover_count),
        "mn_loss_pct": report.mn.loss_pct,
        "cn_loss_pct": report.cn.loss_pct,
        "mn_tput_kbps": report.mn.throughput_kbps,
        "cn_tput_kbps": report.cn.throughput_kbps,
        "mn_delay_min_ms": report.mn.delay_min_ms,
        "mn_delay_max_ms": report.mn.delay_max_ms,
        "mn_delay_mean_ms": report.mn.delay_mean_ms,
        "cn_delay_min_ms": report.cn.delay_min_ms,
        "cn_delay_max_ms": report.cn.delay_max_ms,
        "cn_delay_mean_ms": report.cn.delay_mean_ms,
    }


@dataclass(frozen=True)
class RunRow:
    algorithm: str
    speed_kmph: float
    seed_index: int
    run_seed: int
    report: MetricsReport

    @property
    def metrics(self) -> Dict[str, float]:
        return metrics_row(self.report)


@dataclass
class SweepResult:
    rows: List[RunRow]
    averages: Dict[Tuple[str, float], Dict[str, float]]
    scenarios: Dict[Tuple[str, float, int], Scenario] = field(default_factory=dict)

    def average(self, algorithm: str, speed_kmph: float) -> Dict[str, float]:
        return self.averages[(algorithm, float(speed_kmph))]


def _mean(values: Sequence[float]) -> float:
    return math.fsum(values) / len(values)


def compute_averages(rows: Sequence[RunRow], algorithms: Sequence[str],
                     speeds: Sequence[float]) -> Dict[Tuple[str, float], Dict[str, float]]:
    out = {}
    for alg in algorithms:
        for v in speeds:
            group = [r.metrics for r in rows if r.algorithm == alg and r.speed_kmph == float(v)]
            out[(alg, float(v))] = {m: _mean([g[m] for g in group]) for m in METRIC_COLUMNS}
    return out


def _run_one(scenario: Scenario) -> SimResult:
    return Simulation(scenario).run()


def plan_runs(spec: SweepSpec) -> List[Tuple[str, float, int, Scenario]]:
    plan = []
    for alg in spec.algorithms:
        for v in spec.speeds_kmph:
            for i in range(spec.seeds):
                sc = replace(spec.base_scenario, algorithm=alg, speed_kmph=float(v),
                             seed=derive_seed(spec.master_seed, v, i))
                plan.append((alg, float(v), i, sc))
    return plan


def run_sweep(spec: SweepSpec, workers: int = 1,
              on_run: Optional[Callable[[str, float, int, SimResult], None]] = None) -> SweepResult:
    """Run every (algorithm, speed, seed) triple and average over seeds.

    ``on_run`` receives each run's full result (packet log included) in plan
    order; it is the hook for per-run audits and packet-log export.
    """
    plan = plan_runs(spec)
    for _, _, _, sc in plan:
        sc.validate()

    def results():
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                futures = [pool.submit(_run_one, sc) for *_, sc in plan]
                for (alg, v, i, _), fut in zip(plan, futures):
                    yield alg, v, i, _guard(fut.result, alg, v, i)
        else:
            for alg, v, i, sc in plan:
                yield alg, v, i, _guard(lambda: _run_one(sc), alg, v, i)

    rows = []
    scenarios = {}
    for (alg, v, i, res), (_, _, _, sc) in zip(results(), plan):
        rows.append(RunRow(alg, v, i, sc.seed, res.report))
        scenarios[(alg, v, i)] = sc
        if on_run is not None:
            on_run(alg, v, i, res)
    averages = compute_averages(rows, spec.algorithms, [float(v) for v in spec.speeds_kmph])
    return SweepResult(rows, averages, scenarios)


def _guard(fn, alg, v, i):
    try:
        return fn()
    except Exception as exc:
        raise SweepError(f"run failed for algorithm={alg} speed={v} seed_index={i}: {exc}") from exc


def _fmt(value) -> str:
    # repr round-trips floats exactly
    return repr(float(value)) if isinstance(value, float) else str(value)


def _speed_str(v: float) -> str:
    return f"{v:g}"


def csv_text(result: SweepResult) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    keys = list(result.averages)
    for alg, v in keys:
        for row in result.rows:
            if row.algorithm == alg and row.speed_kmph == v:
                m = row.metrics
                writer.writerow([alg, _speed_str(v), row.seed_index] + [_fmt(m[c]) for c in METRIC_COLUMNS])
        avg = result.averages[(alg, v)]
        writer.writerow([alg, _speed_str(v), AVG] + [_fmt(avg[c]) for c in METRIC_COLUMNS])
    return buf.getvalue()


def atomic_write(path: str | Path, text: str) -> None:
    """Write ``text`` to ``path`` via a temp file so no partial file is left on failure."""
    path = Path(path)
    directory = path.parent if str(path.parent) else Path(".")
    if not directory.is_dir():
        raise OSError(f"cannot write {path}: directory {directory} does not exist")
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def emit_csv(result: SweepResult, path: str | Path) -> None:
    atomic_write(path, csv_text(result))


def read_csv(path: str | Path) -> Tuple[List[dict], Dict[Tuple[str, float], Dict[str, float]]]:
    """Parse an emitted CSV into (seed rows, averages keyed by (algorithm, speed))."""
    rows, averages = [], {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != CSV_COLUMNS:
            raise ValueError(f"unexpected CSV header {header}")
        for rec in reader:
            alg, speed, seed = rec[0], float(rec[1]), rec[2]
            metrics = {c: float(x) for c, x in zip(METRIC_COLUMNS, rec[3:])}
            if seed == AVG:
                averages[(alg, speed)] = metrics
            else:
                rows.append({"algorithm": alg, "speed_kmph": speed, "seed": int(seed), **metrics})
    return rows, averages


def emit_plot_series(result: SweepResult, directory: str | Path) -> List[Path]:
    """One two-column (speed, seed-averaged value) file per (metric, algorithm)."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    algorithms = list(dict.fromkeys(alg for alg, _ in result.averages))
    written = []
    for metric in METRIC_COLUMNS:
        for alg in algorithms:
            lines = [f"# speed_kmph {metric} ({alg})"]
            for (a, v), avg in result.averages.items():
                if a == alg:
                    lines.append(f"{_speed_str(v)} {_fmt(avg[metric])}")
            path = directory / f"{metric}__{alg}.dat"
            atomic_write(path, "\n".join(lines) + "\n")
            written.append(path)
    return written


def emit_config_echo(result: SweepResult, path: str | Path) -> None:
    """JSON-lines record of every run's effective scenario, after defaults."""
    lines = []
    for (alg, v, i), sc in result.scenarios.items():
        rec = {"algorithm": alg, "speed_kmph": v, "seed_index": i, "scenario": sc.to_dict()}
        lines.append(json.dumps(rec, sort_keys=True))
    atomic_write(path, "\n".join(lines) + "\n")
