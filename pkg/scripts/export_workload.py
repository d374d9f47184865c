#!/usr/bin/env python3
"""Export a bundled workload as self-contained artifacts: the baseline .s
(with its data section inline), the flat .bin image, the kernel spec JSON,
and the input/weight tensors as binary blobs.

The exported .s round-trips through `rvfuse asm` / `rvfuse rewrite`.
"""

import argparse
import sys
from pathlib import Path

from rvfuse.asm import disassemble, save_bin
from rvfuse.workloads import (
    DEFAULT_SEED, bundled_workloads, codegen, random_tensors, write_tensor,
)


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("workload", nargs="?", default="lenet5",
                    choices=sorted(bundled_workloads()))
    ap.add_argument("--out", default="export")
    ap.add_argument("--seed", type=lambda s: int(s, 0), default=DEFAULT_SEED)
    args = ap.parse_args()

    spec = bundled_workloads()[args.workload]
    inp, weights = random_tensors(spec, args.seed)
    prog = codegen(spec, inp, weights)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    stem = out / args.workload
    stem.with_suffix(".s").write_text(disassemble(prog))
    stem.with_suffix(".bin").write_bytes(save_bin(prog))
    stem.with_suffix(".json").write_text(spec.to_json())
    (out / f"{args.workload}_input.tensor").write_bytes(write_tensor(inp))
    for i, w in enumerate(weights):
        if w is not None:
            (out / f"{args.workload}_w{i}.tensor").write_bytes(write_tensor(w))
    print(f"exported {args.workload} ({len(prog.text)} instructions, "
          f"{len(prog.data)} data bytes) to {out}/")
    return 0


if __name__ == "__main__":
    sys.exit(main())
