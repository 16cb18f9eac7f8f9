"""Fixed-step simulation of one mobile node roaming across overlapping APs.

Each step of length B the node moves (random waypoint), the serving link is
sampled, the trigger is fed, handovers start or complete, and the two CBR
flows (MN->CN every F seconds, CN->MN every C seconds) are transmitted over the
current link.

The mobility trace and all fading draws come from their own RNG streams, so
two runs with the same seed see the same trajectory and the same channel
regardless of which trigger is being evaluated.
"""
from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .radio import (
    PathLossParams,
    RadioSample,
    draw_frame_retries,
    frame_error_prob,
    path_loss_array,
    path_loss_db,
)
from .scenario import AccessPoint, Scenario
from .triggers import HANDOVER, make_trigger

log = logging.getLogger(__name__)

PACKET_LOG_HEADER = "# fltrend packet-log v1: direction sent_at delivered_at|LOST size_bytes"
EVENT_LOG_HEADER = "# fltrend event-log v1: time event details"


class Direction(enum.Enum):
    MN_TO_CN = "MNtoCN"
    CN_TO_MN = "CNtoMN"


@dataclass
class NodeState:
    position: Tuple[float, float]
    waypoint: Tuple[float, float]
    speed: float  # m/s
    attached_ap: Optional[int] = None
    pending_handover: Optional[Tuple[int, float]] = None  # (target, completes_at)


@dataclass(frozen=True)
class PacketRecord:
    direction: Direction
    sent_at: float
    delivered_at: Optional[float]  # None means lost
    size_bytes: int

    @property
    def lost(self) -> bool:
        return self.delivered_at is None


@dataclass(frozen=True)
class DirectionStats:
    sent: int
    delivered: int
    lost: int
    in_flight: int
    delivered_bytes: int
    loss_pct: float
    throughput_kbps: float
    delay_min_ms: float
    delay_max_ms: float
    delay_mean_ms: float


@dataclass(frozen=True)
class MetricsReport:
    handover_count: int
    failed_handovers: int
    mn: DirectionStats  # MN->CN flow
    cn: DirectionStats  # CN->MN flow


@dataclass
class SimResult:
    report: MetricsReport
    packets: List[PacketRecord]
    events: List[Tuple[float, str, str]]
    duration_s: float

    def write_packet_log(self, path: str | Path) -> None:
        with open(path, "w") as fh:
            fh.write(PACKET_LOG_HEADER + "\n")
            for p in self.packets:
                delivered = "LOST" if p.delivered_at is None else repr(float(p.delivered_at))
                fh.write(f"{p.direction.value} {float(p.sent_at)!r} {delivered} {p.size_bytes}\n")

    def write_event_log(self, path: str | Path) -> None:
        with open(path, "w") as fh:
            fh.write(EVENT_LOG_HEADER + "\n")
            for t, kind, detail in self.events:
                fh.write(f"{float(t)!r} {kind} {detail}\n")


def read_packet_log(path: str | Path) -> List[PacketRecord]:
    records = []
    with open(path) as fh:
        header = fh.readline().rstrip("\n")
        if header != PACKET_LOG_HEADER:
            raise ValueError(f"unexpected packet-log header: {header!r}")
        for line in fh:
            direction, sent, delivered, size = line.split()
            records.append(PacketRecord(
                Direction(direction), float(sent),
                None if delivered == "LOST" else float(delivered), int(size),
            ))
    return records


def summarize(packets: Sequence[PacketRecord], direction: Direction, duration_s: float) -> DirectionStats:
    sent = delivered = lost = in_flight = delivered_bytes = 0
    delays = []
    for p in packets:
        if p.direction is not direction:
            continue
        sent += 1
        if p.delivered_at is None:
            lost += 1
        elif p.delivered_at > duration_s:
            in_flight += 1
        else:
            delivered += 1
            delivered_bytes += p.size_bytes
            delays.append((p.delivered_at - p.sent_at) * 1000.0)
    if delays:
        dmin, dmax, dmean = min(delays), max(delays), math.fsum(delays) / len(delays)
    else:
        dmin = dmax = dmean = math.nan
    return DirectionStats(
        sent=sent,
        delivered=delivered,
        lost=lost,
        in_flight=in_flight,
        delivered_bytes=delivered_bytes,
        loss_pct=100.0 * lost / sent if sent else 0.0,
        throughput_kbps=delivered_bytes * 8 / duration_s / 1000.0,
        delay_min_ms=dmin,
        delay_max_ms=dmax,
        delay_mean_ms=dmean,
    )


def random_waypoint_step(node: NodeState, area: Tuple[float, float], rng: np.random.Generator,
                         dt: float) -> NodeState:
    """Advance toward the waypoint; at the waypoint, draw a new one and stay put this step."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    x, y = node.position
    wx, wy = node.waypoint
    dx, dy = wx - x, wy - y
    remaining = math.hypot(dx, dy)
    if remaining == 0.0:
        new_wp = (float(rng.uniform(0.0, area[0])), float(rng.uniform(0.0, area[1])))
        return replace(node, waypoint=new_wp)
    step = node.speed * dt
    if step >= remaining:
        return replace(node, position=(wx, wy))
    f = step / remaining
    return replace(node, position=(x + dx * f, y + dy * f))


def interference_level_at(position: Tuple[float, float], serving_ap: int, aps: Sequence[AccessPoint],
                          path_loss=None) -> float:
    """Co-channel power from the other APs relative to the serving AP's power (linear)."""
    p = path_loss or PathLossParams()
    srv = aps[serving_ap]
    srv_loss = path_loss_db(math.hypot(position[0] - srv.x, position[1] - srv.y), p)
    total = 0.0
    for j, ap in enumerate(aps):
        if j == serving_ap or ap.channel != srv.channel:
            continue
        loss = path_loss_db(math.hypot(position[0] - ap.x, position[1] - ap.y), p)
        total += 10.0 ** ((srv_loss - loss) / 10.0)
    return total


@dataclass
class ChannelTrace:
    """Per-step trajectory and per-AP link state, independent of the trigger."""

    positions: np.ndarray  # (steps, 2)
    distances: np.ndarray  # (steps, n_aps)
    mean_loss: np.ndarray  # (steps, n_aps) path loss without fading
    rssi: np.ndarray  # (steps, n_aps) faded attenuation
    travelled: np.ndarray  # (steps,) cumulative distance


def build_channel_trace(scenario: Scenario, n_steps: int, mobility_rng: np.random.Generator,
                        fading_rng: np.random.Generator) -> ChannelTrace:
    dt = scenario.trigger.update_interval_b
    home = scenario.access_points[scenario.home_ap]
    node = NodeState(position=(home.x, home.y), waypoint=(home.x, home.y),
                     speed=scenario.speed_kmph / 3.6)
    positions = np.empty((n_steps, 2))
    travelled = np.zeros(n_steps)
    for k in range(n_steps):
        if k:
            prev = node.position
            node = random_waypoint_step(node, scenario.area, mobility_rng, dt)
            travelled[k] = travelled[k - 1] + math.hypot(node.position[0] - prev[0], node.position[1] - prev[1])
        positions[k] = node.position

    ap_xy = np.array([(ap.x, ap.y) for ap in scenario.access_points])
    distances = np.hypot(positions[:, None, 0] - ap_xy[None, :, 0], positions[:, None, 1] - ap_xy[None, :, 1])
    mean_loss = path_loss_array(distances, scenario.path_loss)

    f = scenario.fading
    n_aps = len(scenario.access_points)
    shadow = np.zeros((n_steps, n_aps))
    if f.shadow_sigma_db > 0:
        innovations = fading_rng.standard_normal((n_steps, n_aps))
        moved = np.diff(travelled, prepend=0.0)
        if f.shadow_correlation_m > 0:
            rho = np.exp(-moved / f.shadow_correlation_m)
        else:
            rho = np.zeros(n_steps)
        shadow[0] = f.shadow_sigma_db * innovations[0]
        scale = np.sqrt(1.0 - rho * rho) * f.shadow_sigma_db
        for k in range(1, n_steps):
            shadow[k] = rho[k] * shadow[k - 1] + scale[k] * innovations[k]
    rssi = mean_loss + shadow
    if f.multipath_sigma_db > 0:
        rssi = rssi + f.multipath_sigma_db * fading_rng.standard_normal((n_steps, n_aps))
    return ChannelTrace(positions, distances, mean_loss, rssi, travelled)


def _stream_rngs(seed: int) -> Tuple[np.random.Generator, ...]:
    children = np.random.SeedSequence(seed).spawn(3)
    return tuple(np.random.default_rng(c) for c in children)


class Simulation:
    """One run of one scenario. Use :func:`run` unless stepping by hand."""

    def __init__(self, scenario: Scenario):
        scenario.validate()
        self.scenario = scenario
        self.dt = scenario.trigger.update_interval_b
        self.n_steps = int(math.floor(scenario.duration_s / self.dt + 1e-9))
        mobility_rng, fading_rng, self.rng = _stream_rngs(scenario.seed)
        self.trace = build_channel_trace(scenario, self.n_steps, mobility_rng, fading_rng)
        trig_cfg = replace(scenario.trigger, baseline_blackout_s=scenario.handshake_latency_s)
        self.trigger = make_trigger(scenario.algorithm, trig_cfg, scenario.fuzzy)
        self.serving: Optional[int] = scenario.home_ap
        self.pending: Optional[Tuple[int, float]] = None
        self.handover_count = 0
        self.failed_handovers = 0
        self.events: List[Tuple[float, str, str]] = []
        self.packets: List[PacketRecord] = []
        self._queued: List[Tuple[Direction, float]] = []
        self._attach_travelled = 0.0
        self._rebind_until = -math.inf
        self._co_channel = self._co_channel_matrix(scenario.access_points)

    @staticmethod
    def _co_channel_matrix(aps: Sequence[AccessPoint]) -> np.ndarray:
        ch = np.array([ap.channel for ap in aps])
        m = ch[:, None] == ch[None, :]
        np.fill_diagonal(m, False)
        return m

    def interference(self, k: int, serving: int) -> float:
        others = self._co_channel[serving]
        if not others.any():
            return 0.0
        loss = self.trace.mean_loss[k]
        return float(np.sum(10.0 ** ((loss[serving] - loss[others]) / 10.0)))

    def link_fep(self, k: int, serving: int) -> float:
        return frame_error_prob(self.trace.rssi[k, serving], self.interference(k, serving), self.scenario.link)

    def start_handover(self, k: int, now: float) -> Optional[Tuple[int, float]]:
        rssi = self.trace.rssi[k]
        candidates = [j for j in range(len(rssi)) if j != self.serving and rssi[j] <= self.scenario.usable_rssi_db]
        if not candidates:
            self.failed_handovers += 1
            self.events.append((now, "handover-failed", f"serving={self.serving} no usable candidate"))
            return None
        target = min(candidates, key=lambda j: (rssi[j], j))
        scan = self.scenario.scan
        scan_time = float(self.rng.uniform(scan.min_channel_time, scan.max_channel_time))
        completes_at = now + scan_time + self.scenario.handshake_latency_s
        self.events.append((now, "handover-start", f"from={self.serving} to={target} completes_at={completes_at!r}"))
        self.pending = (target, completes_at)
        self.serving = None
        return self.pending

    def _complete_handover(self, k: int, now: float) -> None:
        target, _ = self.pending
        self.pending = None
        self.serving = target
        self.handover_count += 1
        travelled = self.trace.travelled[k] - self._attach_travelled
        self._attach_travelled = self.trace.travelled[k]
        w = self.trigger.on_attach(now, self.scenario.speed_kmph, travelled)
        self._rebind_until = now + self.scenario.delay.rebind_window_s
        self.events.append((now, "attach", f"ap={target} suppression_s={w!r}"))

    def deliver_packet(self, k: int, direction: Direction, sent_at: float, fep: float) -> PacketRecord:
        """Transmit one packet over the current serving link; returns its record."""
        size = self.scenario.traffic.packet_bytes
        if self.serving is None:
            return PacketRecord(direction, sent_at, None, size)
        retries, ok = draw_frame_retries(fep, self.scenario.link.max_retries, self.rng)
        self._step_retries += retries
        if not ok:
            return PacketRecord(direction, sent_at, None, size)
        d = self.scenario.delay
        delay_ms = (d.base_wire_delay_ms
                    + d.air_delay_ms_per_100m * float(self.trace.distances[k, self.serving]) / 100.0
                    + retries * d.retry_airtime_ms)
        if sent_at < self._rebind_until:
            delay_ms += d.rebind_extra_ms
        return PacketRecord(direction, sent_at, sent_at + delay_ms / 1000.0, size)

    def run(self) -> SimResult:
        sc = self.scenario
        dt = self.dt
        duration = sc.duration_s
        mn_times = _schedule(sc.traffic.mn_interval_f, duration)
        cn_times = _schedule(sc.traffic.cn_interval_c, duration)
        sends = sorted([(t, Direction.MN_TO_CN) for t in mn_times] + [(t, Direction.CN_TO_MN) for t in cn_times],
                       key=lambda item: (item[0], item[1].value))
        si = 0
        n_sends = len(sends)
        retries_last_interval = 0
        self.trigger.on_attach(0.0, sc.speed_kmph, 0.0, suppress=False)
        self.events.append((0.0, "attach", f"ap={self.serving} initial"))

        for k in range(self.n_steps):
            now = k * dt
            if self.pending is not None and now >= self.pending[1] - 1e-9:
                self._complete_handover(k, now)
                if sc.handover_packets == "queue":
                    self._flush_queue(k, now)

            if self.serving is not None:
                sample = RadioSample(
                    rssi_db=float(self.trace.rssi[k, self.serving]),
                    distance_m=float(self.trace.distances[k, self.serving]),
                    speed_kmph=sc.speed_kmph,
                    retransmissions=retries_last_interval,
                )
                if self.trigger.observe(sample, now) is HANDOVER:
                    self.events.append((now, "trigger", f"ap={self.serving} rssi={sample.rssi_db:.2f}"))
                    self.start_handover(k, now)

            self._step_retries = 0
            fep = self.link_fep(k, self.serving) if self.serving is not None else 1.0
            step_end = now + dt
            while si < n_sends and sends[si][0] < step_end - 1e-9:
                t, direction = sends[si]
                si += 1
                if self.serving is None and sc.handover_packets == "queue":
                    self._queued.append((direction, t))
                    continue
                self.packets.append(self.deliver_packet(k, direction, t, fep))
            retries_last_interval = self._step_retries

        # packets still queued at teardown never left the sender
        for direction, t in self._queued:
            self.packets.append(PacketRecord(direction, t, None, sc.traffic.packet_bytes))
        self._queued.clear()
        self.packets.sort(key=lambda p: (p.sent_at, p.direction.value))

        report = MetricsReport(
            handover_count=self.handover_count,
            failed_handovers=self.failed_handovers,
            mn=summarize(self.packets, Direction.MN_TO_CN, duration),
            cn=summarize(self.packets, Direction.CN_TO_MN, duration),
        )
        return SimResult(report, self.packets, self.events, duration)

    def _flush_queue(self, k: int, now: float) -> None:
        fep = self.link_fep(k, self.serving)
        self._step_retries = 0
        for direction, t in self._queued:
            rec = self.deliver_packet(k, direction, now, fep)
            delivered = None if rec.delivered_at is None else rec.delivered_at
            self.packets.append(PacketRecord(direction, t, delivered, rec.size_bytes))
        self._queued.clear()

    _step_retries = 0


def _schedule(interval: float, duration: float) -> List[float]:
    n = int(math.floor(duration / interval - 1e-9)) + 1
    return [i * interval for i in range(n) if i * interval < duration]


def run(scenario: Scenario) -> MetricsReport:
    return Simulation(scenario).run().report


def run_detailed(scenario: Scenario) -> SimResult:
    return Simulation(scenario).run()
