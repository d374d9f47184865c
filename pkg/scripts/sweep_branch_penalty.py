#!/usr/bin/env python3
"""Sensitivity of the reported speedups to the taken-branch penalty.

The default cycle model charges one bubble per taken branch; the real core's
penalty is not public.  This sweep shows how the end-to-end speedup moves as
that knob varies, which bounds how much the headline number depends on the
model assumption.
"""

import argparse
import sys

from rvfuse.isa import Variant
from rvfuse.rewriter import retarget
from rvfuse.sim import CycleModel, run
from rvfuse.workloads import (
    DEFAULT_SEED, bundled_workloads, codegen, random_tensors,
)


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("workload", nargs="?", default="lenet5",
                    choices=sorted(bundled_workloads()))
    ap.add_argument("--max-penalty", type=int, default=3)
    args = ap.parse_args()

    spec = bundled_workloads()[args.workload]
    inp, weights = random_tensors(spec, DEFAULT_SEED)
    base = codegen(spec, inp, weights)

    print(f"{args.workload}: v0/v4 cycle speedup vs taken-branch penalty\n")
    print(f"{'penalty':>8} {'v0 cycles':>12} {'v4 cycles':>12} {'speedup':>9}")
    for penalty in range(args.max_penalty + 1):
        model = CycleModel(taken_branch_extra=penalty)
        v4, _ = retarget(base, Variant.V4, model)
        c0 = run(base, Variant.V0, model).cycles
        c4 = run(v4, Variant.V4, model).cycles
        print(f"{penalty:>8} {c0:>12,} {c4:>12,} {c0 / c4:>9.3f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
