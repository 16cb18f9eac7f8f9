"""Print seed-averaged metrics and the acceptance orderings for a scenario.

    python scripts/calibrate.py [scenario.yaml] [--seeds N] [--set section.key=value ...]
"""
import argparse
import time
from dataclasses import replace

import yaml

from fltrend.scenario import Scenario, load_scenario
from fltrend.sweep import SweepSpec, run_sweep
from fltrend.orderings import check_orderings


def apply_overrides(sc, items):
    data = sc.to_dict()
    for item in items:
        key, value = item.split("=", 1)
        node = data
        *parents, last = key.split(".")
        for p in parents:
            node = node[p]
        node[last] = yaml.safe_load(value)
    return Scenario.from_dict(data)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("scenario", nargs="?")
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--master-seed", type=int, default=2012)
    ap.add_argument("--set", action="append", default=[])
    args = ap.parse_args()
    sc = load_scenario(args.scenario) if args.scenario else Scenario()
    sc = apply_overrides(sc, args.set)
    t = time.time()
    res = run_sweep(SweepSpec(base_scenario=sc, seeds=args.seeds, master_seed=args.master_seed))
    print(f"{len(res.rows)} runs in {time.time() - t:.1f}s")
    cols = ["handovers", "mn_loss_pct", "cn_loss_pct", "mn_tput_kbps", "cn_tput_kbps",
            "mn_delay_mean_ms", "cn_delay_mean_ms"]
    print(f"{'alg':15s} {'v':>4s} " + " ".join(f"{c[:12]:>12s}" for c in cols))
    for (alg, v), avg in res.averages.items():
        print(f"{alg:15s} {v:4g} " + " ".join(f"{avg[c]:12.3f}" for c in cols))
    failures = check_orderings(res)
    for f in failures:
        print("FAIL", f)
    print("orderings:", "all hold" if not failures else f"{len(failures)} violations")


if __name__ == "__main__":
    main()
