#!/usr/bin/env python3
"""Profile a bundled workload on the baseline: pattern counts, the immediate
histogram, and what the 15 immediate bits should be split into.
"""

import argparse
import sys

from rvfuse.isa import Variant
from rvfuse.profiler import (
    count_patterns, coverage, immediate_histogram, select_split,
)
from rvfuse.sim import run
from rvfuse.workloads import (
    DEFAULT_SEED, bundled_workloads, codegen, random_tensors,
)


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("workload", nargs="?", default="lenet5",
                    choices=sorted(bundled_workloads()))
    ap.add_argument("--seed", type=lambda s: int(s, 0), default=DEFAULT_SEED)
    args = ap.parse_args()

    spec = bundled_workloads()[args.workload]
    inp, weights = random_tensors(spec, args.seed)
    prog = codegen(spec, inp, weights)
    res = run(prog, Variant.V0, trace=True)
    events = res.events(prog)

    rep = count_patterns(events)
    print(f"{args.workload}: {rep.total_retired:,} retired instructions, "
          f"{res.cycles:,} cycles\n")
    print(f"{'metric':<18}{'raw':>12}{'cycle-weighted':>16}")
    for m in ("add_count", "mul_count", "mul_add_count", "addi_count",
              "addi_addi_count", "fusedmac_count", "blt_count"):
        print(f"{m:<18}{rep.raw[m]:>12,}{rep.cycle_weighted[m]:>16,}")

    hist = immediate_histogram(events)
    print("\ntop increment pairs (i1, i2) by cycle weight:")
    top = sorted(hist.unsigned.items(), key=lambda kv: -kv[1])[:10]
    for (i1, i2), w in top:
        print(f"  ({i1:>4}, {i2:>4})  weight {w:,}")
    if hist.signed:
        print(f"  signed bucket: {sum(hist.signed.values()):,} weight")

    best = select_split(hist)
    print(f"\nbest split: ({best.b1}, {best.b2}) covering {best.coverage:.2%}")
    print(f"shipped add2i split (5, 10) covers {coverage(hist, 5, 10):.2%}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
