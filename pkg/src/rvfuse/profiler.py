"""Fusible-pattern mining over execution traces.

Four pattern families are counted, matching the custom instructions they
motivate:

  mul_add     mul t,a,b directly followed by add c,c,t (accumulator form,
              the add consumes the mul's destination)
  addi_addi   two adjacent register-increments addi x,x,i1; addi y,y,i2 on
              distinct registers
  fusedmac    the four-instruction window addi,addi,mul,add with the same
              dependency constraints as the two pairs above
  blt         retired blt instructions

Pair matching is greedy left-to-right and non-overlapping: fused
instructions replace disjoint groups, so overlapping counts would
overestimate the fusion opportunity.  Weights use the active CycleModel so
profiler and simulator numbers share units; taken-branch extras are not
attributed to patterns.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .asm import Program
from .isa import Instruction
from .sim import CycleModel

METRICS = ("add_count", "mul_count", "mul_add_count", "addi_count",
           "addi_addi_count", "fusedmac_count", "blt_count")


@dataclass
class PatternReport:
    raw: dict = field(default_factory=dict)
    cycle_weighted: dict = field(default_factory=dict)
    total_retired: int = 0

    def to_dict(self) -> dict:
        return {"raw": dict(self.raw), "cycle_weighted": dict(self.cycle_weighted),
                "total_retired": self.total_retired}

    def to_csv(self) -> str:
        lines = ["metric,raw,cycle_weighted"]
        for m in METRICS:
            lines.append(f"{m},{self.raw[m]},{self.cycle_weighted[m]}")
        lines.append(f"total_retired,{self.total_retired},")
        return "\n".join(lines) + "\n"


@dataclass
class ImmediateHistogram:
    """Cycle-weighted (i1, i2) occurrences of matched addi pairs.

    Pairs where either immediate is negative land in the signed bucket and
    never count as covered by an unsigned bit split.
    """

    unsigned: dict = field(default_factory=dict)   # (i1, i2) -> weight
    signed: dict = field(default_factory=dict)

    @property
    def total_weight(self) -> int:
        return sum(self.unsigned.values()) + sum(self.signed.values())

    def to_csv(self) -> str:
        lines = ["i1,i2,weight"]
        for (i1, i2), w in sorted(self.unsigned.items()):
            lines.append(f"{i1},{i2},{w}")
        for (i1, i2), w in sorted(self.signed.items()):
            lines.append(f"{i1},{i2},{w}")
        return "\n".join(lines) + "\n"


@dataclass
class SplitChoice:
    """Bit allocation of the 15 immediate bits across the two increments."""

    b1: int
    b2: int
    coverage: float

    def __post_init__(self):
        if self.b1 < 1 or self.b2 < 1 or self.b1 + self.b2 != 15:
            raise ValueError(f"invalid split ({self.b1}, {self.b2})")

    def to_dict(self) -> dict:
        return {"b1": self.b1, "b2": self.b2, "coverage": self.coverage}


def _instructions(trace) -> list[Instruction]:
    seq = list(trace)
    if seq and isinstance(seq[0], tuple):
        seq = [inst for _, inst in seq]
    return seq


def _is_increment(inst: Instruction) -> bool:
    return inst.kind == "addi" and inst.rd == inst.rs1


def _is_acc_pair(m: Instruction, a: Instruction) -> bool:
    return (m.kind == "mul" and a.kind == "add"
            and a.rd == a.rs1 and a.rs2 == m.rd)


def _is_inc_pair(a: Instruction, b: Instruction) -> bool:
    return _is_increment(a) and _is_increment(b) and a.rd != b.rd


def _is_fused_window(w) -> bool:
    return _is_inc_pair(w[0], w[1]) and _is_acc_pair(w[2], w[3])


def match_addi_pairs(trace) -> list[tuple[Instruction, Instruction]]:
    """Greedy non-overlapping adjacent register-increment pairs."""
    seq = _instructions(trace)
    out = []
    i = 0
    last = len(seq) - 1
    while i < last:
        a = seq[i]
        b = seq[i + 1]
        if _is_inc_pair(a, b):
            out.append((a, b))
            i += 2
        else:
            i += 1
    return out


def count_patterns(trace, model: CycleModel | None = None) -> PatternReport:
    """Count the four pattern families over a trace (or any instruction
    sequence); greedy left-to-right, non-overlapping within each family."""
    if model is None:
        model = CycleModel()
    seq = _instructions(trace)
    n = len(seq)

    singles = {"add": 0, "mul": 0, "addi": 0, "blt": 0}
    for inst in seq:
        if inst.kind in singles:
            singles[inst.kind] += 1

    mul_add = 0
    i = 0
    while i < n - 1:
        if _is_acc_pair(seq[i], seq[i + 1]):
            mul_add += 1
            i += 2
        else:
            i += 1

    addi_addi = len(match_addi_pairs(seq))

    fused = 0
    i = 0
    while i < n - 3:
        if _is_fused_window(seq[i:i + 4]):
            fused += 1
            i += 4
        else:
            i += 1

    cost = model.cost
    raw = {
        "add_count": singles["add"],
        "mul_count": singles["mul"],
        "mul_add_count": mul_add,
        "addi_count": singles["addi"],
        "addi_addi_count": addi_addi,
        "fusedmac_count": fused,
        "blt_count": singles["blt"],
    }
    weighted = {
        "add_count": singles["add"] * cost("add"),
        "mul_count": singles["mul"] * cost("mul"),
        "mul_add_count": mul_add * (cost("mul") + cost("add")),
        "addi_count": singles["addi"] * cost("addi"),
        "addi_addi_count": addi_addi * 2 * cost("addi"),
        "fusedmac_count": fused * (2 * cost("addi") + cost("mul") + cost("add")),
        "blt_count": singles["blt"] * cost("blt"),
    }
    return PatternReport(raw=raw, cycle_weighted=weighted, total_retired=n)


def immediate_histogram(trace, model: CycleModel | None = None) -> ImmediateHistogram:
    """One entry per matched addi pair; weight is the pair's cycle cost."""
    if model is None:
        model = CycleModel()
    pair_weight = 2 * model.cost("addi")
    hist = ImmediateHistogram()
    for a, b in match_addi_pairs(trace):
        key = (a.imm, b.imm)
        bucket = hist.unsigned if a.imm >= 0 and b.imm >= 0 else hist.signed
        bucket[key] = bucket.get(key, 0) + pair_weight
    return hist


def coverage(hist: ImmediateHistogram, b1: int, b2: int) -> float:
    """Fraction of pair weight with i1 < 2**b1 and i2 < 2**b2; the signed
    bucket always counts as uncovered."""
    total = hist.total_weight
    if total == 0:
        raise ValueError("empty histogram")
    lim1 = 1 << b1
    lim2 = 1 << b2
    got = sum(w for (i1, i2), w in hist.unsigned.items()
              if i1 < lim1 and i2 < lim2)
    return got / total


def select_split(hist: ImmediateHistogram) -> SplitChoice:
    """Coverage-maximizing allocation of the 15 immediate bits, evaluated
    over all 14 candidate splits; ties break toward the smallest b1."""
    best: SplitChoice | None = None
    for b1 in range(1, 15):
        cov = coverage(hist, b1, 15 - b1)
        if best is None or cov > best.coverage:
            best = SplitChoice(b1, 15 - b1, cov)
    return best


# -- static mode -------------------------------------------------------------

def basic_block_leaders(prog: Program) -> set[int]:
    """Indices that start a basic block: entry, control-flow targets,
    instructions after a branch/jump, and loop-body bounds of zol setups."""
    from .isa import BRANCH_OPS, ZOL_SETUP_WITH_OFFSET

    leaders = {prog.entry, 0}
    for i, inst in enumerate(prog.text):
        if inst.kind in BRANCH_OPS or inst.kind == "jal":
            leaders.add(i + inst.imm // 4)
            leaders.add(i + 1)
        elif inst.kind == "jalr":
            leaders.add(i + 1)
        elif inst.kind in ZOL_SETUP_WITH_OFFSET:
            leaders.add(i + 1)           # ZS: hardware jump target
            leaders.add(i + inst.offset + 1)  # past ZE: hardware jump source
    return {l for l in leaders if 0 <= l < len(prog.text)}


def count_patterns_static(prog: Program, pc_hist: dict,
                          model: CycleModel | None = None) -> PatternReport:
    """Static pattern counts weighted by per-address execution counts from a
    prior run.  Windows never span basic-block boundaries; each match is
    weighted by the minimum execution count inside its window.  Trace mode
    is exact; this estimates it without storing a trace."""
    if model is None:
        model = CycleModel()
    text = prog.text
    n = len(text)
    counts = [pc_hist.get(i * 4, 0) for i in range(n)]
    leaders = basic_block_leaders(prog)

    def window_ok(i: int, length: int) -> bool:
        if i + length > n:
            return False
        if any((i + j) in leaders for j in range(1, length)):
            return False
        return all(counts[i + j] > 0 for j in range(length))

    def weight(i: int, length: int) -> int:
        return min(counts[i + j] for j in range(length))

    singles = {"add": 0, "mul": 0, "addi": 0, "blt": 0}
    for i, inst in enumerate(text):
        if inst.kind in singles:
            singles[inst.kind] += counts[i]

    mul_add = 0
    i = 0
    while i < n - 1:
        if _is_acc_pair(text[i], text[i + 1]) and window_ok(i, 2):
            mul_add += weight(i, 2)
            i += 2
        else:
            i += 1

    addi_addi = 0
    i = 0
    while i < n - 1:
        if _is_inc_pair(text[i], text[i + 1]) and window_ok(i, 2):
            addi_addi += weight(i, 2)
            i += 2
        else:
            i += 1

    fused = 0
    i = 0
    while i < n - 3:
        if _is_fused_window(text[i:i + 4]) and window_ok(i, 4):
            fused += weight(i, 4)
            i += 4
        else:
            i += 1

    cost = model.cost
    raw = {
        "add_count": singles["add"],
        "mul_count": singles["mul"],
        "mul_add_count": mul_add,
        "addi_count": singles["addi"],
        "addi_addi_count": addi_addi,
        "fusedmac_count": fused,
        "blt_count": singles["blt"],
    }
    weighted = {
        "add_count": singles["add"] * cost("add"),
        "mul_count": singles["mul"] * cost("mul"),
        "mul_add_count": mul_add * (cost("mul") + cost("add")),
        "addi_count": singles["addi"] * cost("addi"),
        "addi_addi_count": addi_addi * 2 * cost("addi"),
        "fusedmac_count": fused * (2 * cost("addi") + cost("mul") + cost("add")),
        "blt_count": singles["blt"] * cost("blt"),
    }
    return PatternReport(raw=raw, cycle_weighted=weighted,
                         total_retired=sum(counts))
