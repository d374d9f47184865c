"""Command-line entry point: generate -> profile -> rewrite -> simulate -> report.

Exit codes: 0 success, 1 correctness failure (oracle mismatch), 2 usage or
parse error, 3 simulation trap / exhausted step budget.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .asm import AsmError, assemble, disassemble, load_bin, save_bin
from .evaluator import (
    CorrectnessError, EnergyParams, bench_matrix, report,
)
from .isa import VARIANT_DESCRIPTIONS, Variant
from .profiler import (
    count_patterns, coverage, immediate_histogram, select_split,
)
from .rewriter import retarget
from .sim import (
    DEFAULT_MAX_STEPS, BudgetExceeded, CycleModel, SimTrap, run, run_summary,
    trace_to_ndjson,
)
from .workloads import DEFAULT_SEED, bundled_workloads, codegen, random_tensors

EXIT_OK = 0
EXIT_CORRECTNESS = 1
EXIT_USAGE = 2
EXIT_SIM = 3


def _load_cycle_model(path: str | None) -> CycleModel:
    if path is None:
        return CycleModel()
    return CycleModel.from_dict(json.loads(Path(path).read_text()))


def _load_energy_params(path: str | None) -> EnergyParams:
    if path is None:
        return EnergyParams()
    return EnergyParams.from_dict(json.loads(Path(path).read_text()))


def _parse_variant(text: str) -> Variant:
    try:
        return Variant.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def cmd_asm(args) -> int:
    source = Path(args.input).read_text()
    prog = assemble(source, args.variant)
    out = Path(args.output) if args.output else Path(args.input).with_suffix(".bin")
    out.write_bytes(save_bin(prog))
    print(f"assembled {len(prog.text)} instructions, {len(prog.data)} data bytes -> {out}")
    return EXIT_OK


def cmd_disasm(args) -> int:
    prog = load_bin(Path(args.input).read_bytes())
    text = disassemble(prog)
    if args.output:
        Path(args.output).write_text(text)
        print(f"disassembled {len(prog.text)} instructions -> {args.output}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _obtain_program(args):
    """Program (and name) from a source path or a bundled workload id."""
    if args.workload:
        specs = bundled_workloads()
        if args.workload not in specs:
            raise AsmError(0, f"unknown workload {args.workload!r}; "
                              f"available: {', '.join(sorted(specs))}")
        spec = specs[args.workload]
        inp, weights = random_tensors(spec, args.seed)
        return codegen(spec, inp, weights), args.workload
    if not args.input:
        raise AsmError(0, "an input file or --workload is required")
    prog = assemble(Path(args.input).read_text(), args.variant)
    return prog, Path(args.input).stem


def cmd_profile(args) -> int:
    model = _load_cycle_model(args.cycle_model)
    prog, name = _obtain_program(args)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)

    if prog.text:
        res = run(prog, args.variant, model, max_steps=args.budget, trace=True)
        events = res.events(prog)
        (outdir / "run.json").write_text(
            json.dumps(run_summary(res), indent=2, sort_keys=True) + "\n")
        if args.trace_out:
            Path(args.trace_out).write_text(trace_to_ndjson(prog, res, model))
    else:
        events = []
    rep = count_patterns(events, model)
    hist = immediate_histogram(events, model)

    (outdir / "report.json").write_text(
        json.dumps(rep.to_dict(), indent=2, sort_keys=True) + "\n")
    (outdir / "report.csv").write_text(rep.to_csv())
    (outdir / "histogram.csv").write_text(hist.to_csv())

    split_doc: dict = {"isa_split": {"b1": 5, "b2": 10}}
    if hist.total_weight:
        best = select_split(hist)
        split_doc["best"] = best.to_dict()
        split_doc["isa_split"]["coverage"] = coverage(hist, 5, 10)
    else:
        split_doc["best"] = None
        split_doc["isa_split"]["coverage"] = None
    (outdir / "split.json").write_text(
        json.dumps(split_doc, indent=2, sort_keys=True) + "\n")

    print(f"profiled {name}: {rep.total_retired} retired instructions -> {outdir}")
    if split_doc["best"]:
        b = split_doc["best"]
        print(f"best split ({b['b1']},{b['b2']}) coverage {b['coverage']:.4f}; "
              f"shipped (5,10) coverage {split_doc['isa_split']['coverage']:.4f}")
    return EXIT_OK


def cmd_rewrite(args) -> int:
    source = Path(args.input).read_text()
    prog = assemble(source, args.variant)
    rewritten, stats = retarget(prog, args.variant, _load_cycle_model(args.cycle_model))
    text = disassemble(rewritten)
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    if args.stats:
        Path(args.stats).write_text(
            json.dumps(stats.to_dict(), indent=2, sort_keys=True) + "\n")
    applied = sum(r.applied for r in stats.rules.values())
    print(f"retargeted to {args.variant}: {applied} rewrites applied",
          file=sys.stderr)
    return EXIT_OK


def cmd_bench(args) -> int:
    specs_by_name = bundled_workloads()
    names = args.workloads.split(",") if args.workloads else sorted(specs_by_name)
    unknown = [n for n in names if n not in specs_by_name]
    if unknown:
        raise AsmError(0, f"unknown workloads: {', '.join(unknown)}")
    specs = [specs_by_name[n] for n in names]
    variants = ([Variant.parse(v) for v in args.variants.split(",")]
                if args.variants else list(Variant))
    model = _load_cycle_model(args.cycle_model)
    params = _load_energy_params(args.energy_params)
    rows = bench_matrix(specs, variants, model, params, seed=args.seed,
                        max_steps=args.budget, jobs=args.jobs)
    paths = report(rows, args.out, model, params, seed=args.seed)
    for r in rows:
        print(f"{r.workload:12} {r.variant}  cycles={r.cycles:>10}  "
              f"speedup={r.speedup:6.3f}  energy={r.energy_j * 1e3:8.3f} mJ  "
              f"pm={r.pm_bytes}B dm={r.dm_bytes}B")
    print(f"report written to {paths['csv'].parent}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    variants_help = "; ".join(f"{v}: {d}" for v, d in VARIANT_DESCRIPTIONS.items())
    parser = argparse.ArgumentParser(
        prog="rvfuse",
        description="RV32IM fusion workbench: assemble, profile, rewrite, "
                    "simulate and benchmark custom-instruction variants.",
        epilog=f"Processor variants: {variants_help}.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, variant_default=Variant.V4):
        p.add_argument("--variant", type=_parse_variant, default=variant_default,
                       help="processor variant v0..v4 (default %(default)s)")
        p.add_argument("--cycle-model", metavar="PATH",
                       help="JSON cycle model override")
        p.add_argument("--seed", type=lambda s: int(s, 0), default=DEFAULT_SEED,
                       help="PRNG seed for generated workloads (default 0x%(default)X)")
        p.add_argument("--budget", type=int, default=DEFAULT_MAX_STEPS,
                       help="simulation step budget")

    p = sub.add_parser("asm", help="assemble .s to flat binary")
    p.add_argument("input")
    p.add_argument("-o", "--output")
    common(p)
    p.set_defaults(fn=cmd_asm)

    p = sub.add_parser("disasm", help="disassemble flat binary to .s")
    p.add_argument("input")
    p.add_argument("-o", "--output")
    common(p)
    p.set_defaults(fn=cmd_disasm)

    p = sub.add_parser("profile", help="run and mine fusible patterns")
    p.add_argument("input", nargs="?",
                   help="assembly file (or use --workload)")
    p.add_argument("--workload", help="bundled workload id")
    p.add_argument("--out", default="profile", help="output directory")
    p.add_argument("--trace-out", metavar="PATH",
                   help="also write the full NDJSON event trace here")
    common(p, variant_default=Variant.V0)
    p.set_defaults(fn=cmd_profile)

    p = sub.add_parser("rewrite", help="retarget assembly to a variant")
    p.add_argument("input")
    p.add_argument("-o", "--output")
    p.add_argument("--stats", help="write rewrite statistics JSON here")
    common(p)
    p.set_defaults(fn=cmd_rewrite)

    p = sub.add_parser("bench", help="run the variant matrix and report")
    p.add_argument("--workloads", help="comma-separated ids (default: all bundled)")
    p.add_argument("--variants", help="comma-separated variants (default: v0..v4)")
    p.add_argument("--out", default="report", help="output directory")
    p.add_argument("--energy-params", metavar="PATH",
                   help="JSON energy parameter override")
    p.add_argument("--jobs", type=int, default=1,
                   help="parallel worker processes for matrix cells")
    common(p)
    p.set_defaults(fn=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except AsmError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CorrectnessError as exc:
        print(f"correctness failure: {exc}", file=sys.stderr)
        return EXIT_CORRECTNESS
    except (SimTrap, BudgetExceeded) as exc:
        print(f"simulation failure: {exc}", file=sys.stderr)
        return EXIT_SIM


if __name__ == "__main__":
    sys.exit(main())
