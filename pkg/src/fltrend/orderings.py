"""Comparative orderings between FL Trend and the baselines on sweep averages."""
from __future__ import annotations

from typing import List

from .sweep import SweepResult

HIGH_SPEED_KMPH = 16.0

LOWER_IS_BETTER = ("handovers", "mn_loss_pct", "cn_loss_pct", "mn_delay_mean_ms", "cn_delay_mean_ms")
HIGHER_IS_BETTER = ("mn_tput_kbps", "cn_tput_kbps")


def check_orderings(result: SweepResult) -> List[str]:
    """Violations of the expected orderings; an empty list means they all hold.

    (a) fewer handovers than RSSI Threshold at every speed;
    (b) from 16 km/h up, no more handovers, loss or mean delay and no less
        throughput than FR Threshold and Change of RSSI;
    (c) lower mean delay than RSSI Threshold at every speed.
    """
    out = []
    speeds = sorted({v for _, v in result.averages})
    for v in speeds:
        fl = result.average("fl-trend", v)
        rssi = result.average("rssi-threshold", v)
        if not fl["handovers"] < rssi["handovers"]:
            out.append(f"(a) v={v:g}: handovers fl={fl['handovers']:.3f} !< rssi={rssi['handovers']:.3f}")
        for m in ("mn_delay_mean_ms", "cn_delay_mean_ms"):
            if not fl[m] < rssi[m]:
                out.append(f"(c) v={v:g}: {m} fl={fl[m]:.3f} !< rssi={rssi[m]:.3f}")
        if v < HIGH_SPEED_KMPH:
            continue
        for other in ("fr-threshold", "change-of-rssi"):
            o = result.average(other, v)
            for m in LOWER_IS_BETTER:
                if not fl[m] <= o[m]:
                    out.append(f"(b) v={v:g}: {m} fl={fl[m]:.3f} !<= {other}={o[m]:.3f}")
            for m in HIGHER_IS_BETTER:
                if not fl[m] >= o[m]:
                    out.append(f"(b) v={v:g}: {m} fl={fl[m]:.3f} !>= {other}={o[m]:.3f}")
    return out
