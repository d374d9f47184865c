"""Variant-matrix benchmarking: cycles, speedup, energy, memory footprints.

Every matrix cell (workload x variant) is generated from the same seeded
tensors, retargeted, simulated, and verified bit-exactly against the integer
oracle before any number is reported; an output mismatch aborts the cell
with CorrectnessError rather than producing a row.

Energy per inference is `P * (C / f)` with per-variant power defaults taken
as configuration constants (watts) and a 100 MHz default clock; both are
plain knobs, not measured quantities.  Program memory is 4 bytes per static
instruction; data memory is the size of the bound data image.
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .isa import Variant
from .rewriter import retarget
from .sim import DEFAULT_MAX_STEPS, CycleModel, run
from .workloads import (
    DEFAULT_SEED, KernelSpec, codegen, extract_outputs, oracle, random_tensors,
)

DEFAULT_POWER_W = {
    Variant.V0: 0.830,
    Variant.V1: 0.852,
    Variant.V2: 0.850,
    Variant.V3: 0.847,
    Variant.V4: 0.849,
}
DEFAULT_CLOCK_HZ = 100e6

CSV_HEADER = "workload,variant,cycles,instructions,energy_j,pm_bytes,dm_bytes,speedup"


class CorrectnessError(RuntimeError):
    """A simulated run diverged from the oracle; no result row exists."""


@dataclass
class EnergyParams:
    power_w: dict = field(default_factory=lambda: dict(DEFAULT_POWER_W))
    clock_hz: float = DEFAULT_CLOCK_HZ

    def __post_init__(self):
        for v, p in self.power_w.items():
            if p <= 0:
                raise ValueError(f"power for {v} must be positive, got {p}")
        if self.clock_hz <= 0:
            raise ValueError(f"clock must be positive, got {self.clock_hz}")

    @classmethod
    def from_dict(cls, d: dict) -> "EnergyParams":
        power = dict(DEFAULT_POWER_W)
        for name, watts in d.get("power_w", {}).items():
            power[Variant.parse(name)] = float(watts)
        return cls(power_w=power, clock_hz=float(d.get("clock_hz", DEFAULT_CLOCK_HZ)))

    def to_dict(self) -> dict:
        return {"power_w": {str(v): p for v, p in sorted(self.power_w.items())},
                "clock_hz": self.clock_hz}


def energy(cycles: int, variant: Variant, params: EnergyParams | None = None) -> float:
    """Energy per inference in joules: P * (C / f)."""
    if params is None:
        params = EnergyParams()
    if cycles <= 0:
        raise ValueError(f"cycles must be positive, got {cycles}")
    return params.power_w[variant] * (cycles / params.clock_hz)


@dataclass
class BenchRow:
    workload: str
    variant: Variant
    cycles: int
    instructions: int
    energy_j: float
    pm_bytes: int
    dm_bytes: int
    speedup: float

    def to_dict(self) -> dict:
        return {"workload": self.workload, "variant": str(self.variant),
                "cycles": self.cycles, "instructions": self.instructions,
                "energy_j": self.energy_j, "pm_bytes": self.pm_bytes,
                "dm_bytes": self.dm_bytes, "speedup": self.speedup}


def _run_cell(spec: KernelSpec, variant: Variant, model: CycleModel,
              seed: int, max_steps: int) -> tuple[int, int, int, int]:
    """Generate, retarget, simulate and verify one matrix cell.  Returns
    (cycles, retired instructions, pm bytes, dm bytes)."""
    inp, weights = random_tensors(spec, seed)
    gold = oracle(spec, inp, weights)
    base = codegen(spec, inp, weights)
    prog, _stats = retarget(base, variant, model)
    res = run(prog, variant, model, max_steps=max_steps)
    outs, cls = extract_outputs(spec, res.state.mem, prog.data_base)
    for got, want in zip(outs, gold.outputs):
        if not np.array_equal(got, want):
            raise CorrectnessError(
                f"{spec.name} on {variant}: simulated output diverges from oracle")
    if cls != gold.class_index:
        raise CorrectnessError(
            f"{spec.name} on {variant}: class {cls} != oracle {gold.class_index}")
    return res.cycles, res.steps, prog.pm_bytes, len(prog.data)


def _cell_worker(args):
    spec_json, variant_value, model_dict, seed, max_steps = args
    spec = KernelSpec.from_json(spec_json)
    variant = Variant(variant_value)
    model = CycleModel.from_dict(model_dict)
    cycles, instructions, pm, dm = _run_cell(spec, variant, model, seed, max_steps)
    return spec.name, variant_value, cycles, instructions, pm, dm


def bench_matrix(
    specs: list[KernelSpec],
    variants: list[Variant] | None = None,
    model: CycleModel | None = None,
    params: EnergyParams | None = None,
    seed: int = DEFAULT_SEED,
    max_steps: int = DEFAULT_MAX_STEPS,
    jobs: int = 1,
) -> list[BenchRow]:
    """All (workload, variant) cells, verified against the oracle.  v0 is
    always measured (it is the speedup denominator) even when not in
    `variants`.  Cells are independent; `jobs` > 1 runs them in processes."""
    if variants is None:
        variants = list(Variant)
    if model is None:
        model = CycleModel()
    if params is None:
        params = EnergyParams()

    wanted = list(dict.fromkeys(variants))
    measured = list(dict.fromkeys([Variant.V0] + wanted))
    cells = [(spec, v) for spec in specs for v in measured]
    results: dict[tuple[str, int], tuple[int, int, int, int]] = {}

    if jobs > 1 and len(cells) > 1:
        args = [(spec.to_json(), int(v), model.to_dict(), seed, max_steps)
                for spec, v in cells]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for name, vv, cycles, instructions, pm, dm in pool.map(_cell_worker, args):
                results[(name, vv)] = (cycles, instructions, pm, dm)
    else:
        for spec, v in cells:
            results[(spec.name, int(v))] = _run_cell(spec, v, model, seed, max_steps)

    rows = []
    for spec in specs:
        base_cycles = results[(spec.name, 0)][0]
        for v in wanted:
            cycles, instructions, pm, dm = results[(spec.name, int(v))]
            rows.append(BenchRow(
                workload=spec.name, variant=v, cycles=cycles,
                instructions=instructions,
                energy_j=energy(cycles, v, params),
                pm_bytes=pm, dm_bytes=dm,
                speedup=base_cycles / cycles))
    return rows


# -- reporting ---------------------------------------------------------------

BENCH_SCHEMA = {
    "type": "object",
    "required": ["seed", "cycle_model", "energy_params", "rows"],
    "properties": {
        "seed": {"type": "integer"},
        "cycle_model": {
            "type": "object",
            "required": ["default_cost", "taken_branch_extra", "per_kind"],
            "properties": {
                "default_cost": {"type": "integer", "minimum": 1},
                "taken_branch_extra": {"type": "integer", "minimum": 0},
                "per_kind": {"type": "object",
                             "additionalProperties": {"type": "integer"}},
            },
        },
        "energy_params": {
            "type": "object",
            "required": ["power_w", "clock_hz"],
            "properties": {
                "power_w": {"type": "object",
                            "additionalProperties": {"type": "number"}},
                "clock_hz": {"type": "number"},
            },
        },
        "rows": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["workload", "variant", "cycles", "instructions",
                             "energy_j", "pm_bytes", "dm_bytes", "speedup"],
                "properties": {
                    "workload": {"type": "string"},
                    "variant": {"type": "string", "pattern": "^v[0-4]$"},
                    "cycles": {"type": "integer", "minimum": 1},
                    "instructions": {"type": "integer", "minimum": 1},
                    "energy_j": {"type": "number"},
                    "pm_bytes": {"type": "integer", "minimum": 0},
                    "dm_bytes": {"type": "integer", "minimum": 0},
                    "speedup": {"type": "number"},
                },
            },
        },
    },
}


def rows_to_csv(rows: list[BenchRow]) -> str:
    lines = [CSV_HEADER]
    for r in rows:
        lines.append(f"{r.workload},{r.variant},{r.cycles},{r.instructions},"
                     f"{r.energy_j!r},{r.pm_bytes},{r.dm_bytes},{r.speedup!r}")
    return "\n".join(lines) + "\n"


def rows_to_json(rows: list[BenchRow], model: CycleModel | None = None,
                 params: EnergyParams | None = None,
                 seed: int = DEFAULT_SEED) -> str:
    doc = {
        "seed": seed,
        "cycle_model": (model or CycleModel()).to_dict(),
        "energy_params": (params or EnergyParams()).to_dict(),
        "rows": [r.to_dict() for r in rows],
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


_PALETTE = ("#4878a8", "#e19740", "#59935b", "#bb5252", "#8064a2")


def _svg_bar_chart(title: str, ylabel: str, groups: list[str],
                   series: list[str], value) -> str:
    """Static grouped bar chart; `value(group, series)` yields bar heights."""
    width, height = 760, 420
    left, right, top, bottom = 70, 20, 40, 60
    plot_w = width - left - right
    plot_h = height - top - bottom
    vmax = max((value(g, s) for g in groups for s in series), default=1.0)
    if vmax <= 0:
        vmax = 1.0

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.1f}" y="24" text-anchor="middle" '
        f'font-family="sans-serif" font-size="16">{title}</text>',
        f'<text x="16" y="{top + plot_h / 2:.1f}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12" '
        f'transform="rotate(-90 16 {top + plot_h / 2:.1f})">{ylabel}</text>',
    ]
    for i in range(5):
        frac = i / 4
        y = top + plot_h * (1 - frac)
        parts.append(f'<line x1="{left}" y1="{y:.1f}" x2="{width - right}" '
                     f'y2="{y:.1f}" stroke="#dddddd"/>')
        parts.append(f'<text x="{left - 6}" y="{y + 4:.1f}" text-anchor="end" '
                     f'font-family="sans-serif" font-size="10">{vmax * frac:.3g}</text>')
    group_w = plot_w / max(len(groups), 1)
    bar_w = group_w * 0.8 / max(len(series), 1)
    for gi, g in enumerate(groups):
        x0 = left + gi * group_w + group_w * 0.1
        for si, s in enumerate(series):
            v = value(g, s)
            h = plot_h * (v / vmax)
            x = x0 + si * bar_w
            y = top + plot_h - h
            color = _PALETTE[si % len(_PALETTE)]
            parts.append(f'<rect x="{x:.1f}" y="{y:.1f}" width="{bar_w:.1f}" '
                         f'height="{h:.1f}" fill="{color}"/>')
        parts.append(f'<text x="{x0 + group_w * 0.4:.1f}" y="{height - bottom + 16}" '
                     f'text-anchor="middle" font-family="sans-serif" '
                     f'font-size="11">{g}</text>')
    for si, s in enumerate(series):
        x = left + si * 70
        y = height - 18
        color = _PALETTE[si % len(_PALETTE)]
        parts.append(f'<rect x="{x}" y="{y - 10}" width="12" height="12" fill="{color}"/>')
        parts.append(f'<text x="{x + 16}" y="{y}" font-family="sans-serif" '
                     f'font-size="11">{s}</text>')
    parts.append(f'<line x1="{left}" y1="{top + plot_h}" x2="{width - right}" '
                 f'y2="{top + plot_h}" stroke="black"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def report(rows: list[BenchRow], outdir, model: CycleModel | None = None,
           params: EnergyParams | None = None, seed: int = DEFAULT_SEED) -> dict:
    """Write bench.csv, bench.json, cycles.svg and energy.svg; returns the
    paths.  CSV/JSON output is byte-deterministic for identical inputs."""
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "csv": out / "bench.csv",
        "json": out / "bench.json",
        "cycles_svg": out / "cycles.svg",
        "energy_svg": out / "energy.svg",
    }
    paths["csv"].write_text(rows_to_csv(rows))
    paths["json"].write_text(rows_to_json(rows, model, params, seed))

    groups = list(dict.fromkeys(r.workload for r in rows))
    series = [str(v) for v in sorted({r.variant for r in rows})]
    by_key = {(r.workload, str(r.variant)): r for r in rows}

    def cycles_of(g, s):
        r = by_key.get((g, s))
        return float(r.cycles) if r else 0.0

    def energy_of(g, s):
        r = by_key.get((g, s))
        return r.energy_j * 1e3 if r else 0.0  # millijoules

    paths["cycles_svg"].write_text(
        _svg_bar_chart("Cycles per inference", "cycles", groups, series, cycles_of))
    paths["energy_svg"].write_text(
        _svg_bar_chart("Energy per inference", "energy (mJ)", groups, series, energy_of))
    return paths
