"""Instruction-accurate simulator for the RV32IM core and its extensions.

Execution model: one architectural instruction per step under a configurable
cycle model (no structural pipeline modeling).  Data memory is byte
addressable and little endian; program text is fetched from the decoded
instruction list (Harvard split, so loads/stores never see text).

Cycle accounting: every retired instruction costs `CycleModel.cost(kind)`;
a taken branch or jump adds `taken_branch_extra` (one fetch bubble in a
three-stage pipeline).  The zero-overhead loop back-jump adds nothing.
Execution stops at an unconditional jump targeting its own address; the
halting instruction costs its plain model cost with no taken-branch extra.

Hardware loop unit: dlp/dlpi/zlp load ZC/ZS/ZE (ZS = pc+4, ZE = pc plus a
word offset); set.zc/set.zs/set.ze load them from registers.  After retiring
the instruction at address ZE with ZC > 1, the pc is set to ZS and ZC
decremented, at zero extra cost; with ZC <= 1 the loop falls through and ZC
becomes 0.  ZC = 0 leaves the loop hardware inert.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .isa import (
    BASE_KINDS, BRANCH_KINDS, ILLEGAL, JUMP_KINDS, MASK32, Instruction,
    Variant, extensions_of,
)
from .asm import Program

BRANCH_AND_JUMP_KINDS = BRANCH_KINDS | JUMP_KINDS

DEFAULT_MAX_STEPS = 50_000_000


class SimTrap(RuntimeError):
    """Architectural trap: illegal instruction, bad memory access, bad pc."""

    def __init__(self, pc: int, inst: Instruction | None, reason: str):
        super().__init__(f"trap at pc=0x{pc:x}: {reason}")
        self.pc = pc
        self.inst = inst
        self.reason = reason


class BudgetExceeded(RuntimeError):
    def __init__(self, steps: int):
        super().__init__(f"step budget exceeded after {steps} steps")
        self.steps = steps


@dataclass
class CycleModel:
    """Per-instruction cycle costs.

    default_cost applies to every kind without an override.  The defaults
    (1 cycle per instruction, +1 per taken branch/jump) approximate a
    three-stage in-order pipeline; the real baseline core's timing is not
    public, so reported speedups always state the model used.
    """

    default_cost: int = 1
    taken_branch_extra: int = 1
    per_kind: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.default_cost < 1:
            raise ValueError("default_cost must be >= 1")
        if self.taken_branch_extra < 0:
            raise ValueError("taken_branch_extra must be >= 0")
        for k, v in self.per_kind.items():
            if v < 1:
                raise ValueError(f"cost({k}) must be >= 1")

    def cost(self, kind: str) -> int:
        return self.per_kind.get(kind, self.default_cost)

    @classmethod
    def from_dict(cls, d: dict) -> "CycleModel":
        return cls(
            default_cost=d.get("default_cost", 1),
            taken_branch_extra=d.get("taken_branch_extra", 1),
            per_kind=dict(d.get("per_kind", {})),
        )

    def to_dict(self) -> dict:
        return {
            "default_cost": self.default_cost,
            "taken_branch_extra": self.taken_branch_extra,
            "per_kind": dict(self.per_kind),
        }


@dataclass
class MachineState:
    """Architectural state snapshot (registers, loop unit, memory, counters)."""

    x: list[int]
    pc: int
    zc: int = 0
    zs: int = 0
    ze: int = 0
    mem: bytearray = field(default_factory=bytearray)
    cycles: int = 0
    retired: dict = field(default_factory=dict)
    pc_hist: dict | None = None


@dataclass
class RunResult:
    cycles: int
    steps: int
    retired: dict
    taken_branches: int
    halted: bool
    state: MachineState
    trace_pcs: list[int] | None = None

    @property
    def retired_total(self) -> int:
        return self.steps

    def events(self, prog: Program) -> list[tuple[int, Instruction]]:
        """Trace as (byte pc, Instruction) pairs, one per retired instruction."""
        if self.trace_pcs is None:
            raise ValueError("run was not traced; pass trace=True")
        text = prog.text
        return [(p * 4, text[p]) for p in self.trace_pcs]


# Dense opcodes for the interpreter loop, hot kinds first.
_CODES = [
    "lb", "addi", "mul", "add", "blt", "add2i", "mac", "fusedmac", "sb",
    "lui", "auipc", "jal", "jalr", "beq", "bne", "bge", "bltu", "bgeu",
    "lh", "lw", "lbu", "lhu", "sh", "sw",
    "slti", "sltiu", "xori", "ori", "andi", "slli", "srli", "srai",
    "sub", "sll", "slt", "sltu", "xor", "srl", "sra", "or", "and",
    "mulh", "mulhsu", "mulhu", "div", "divu", "rem", "remu",
    "dlp", "dlpi", "zlp", "set.zc", "set.zs", "set.ze",
    "fence", "ecall", "ebreak", ILLEGAL,
]
_CODE_OF = {k: c for c, k in enumerate(_CODES)}
_HALT = len(_CODES)  # self-targeting jal; reported as "jal"

(_LB, _ADDI, _MUL, _ADD, _BLT, _ADD2I, _MAC, _FUSEDMAC, _SB,
 _LUI, _AUIPC, _JAL, _JALR, _BEQ, _BNE, _BGE, _BLTU, _BGEU,
 _LH, _LW, _LBU, _LHU, _SH, _SW,
 _SLTI, _SLTIU, _XORI, _ORI, _ANDI, _SLLI, _SRLI, _SRAI,
 _SUB, _SLL, _SLT, _SLTU, _XOR, _SRL, _SRA, _OR, _AND,
 _MULH, _MULHSU, _MULHU, _DIV, _DIVU, _REM, _REMU,
 _DLP, _DLPI, _ZLP, _SETZC, _SETZS, _SETZE,
 _FENCE, _ECALL, _EBREAK, _ILL) = range(len(_CODES))

_TRAP_CODES = frozenset({_FENCE, _ECALL, _EBREAK, _ILL})


def _lower(prog: Program) -> list[tuple]:
    """Lower decoded instructions to dispatch tuples with precomputed
    branch/loop targets (word indices)."""
    ops = []
    for i, inst in enumerate(prog.text):
        k = inst.kind
        c = _CODE_OF[k]
        if c in (_LB, _LH, _LW, _LBU, _LHU):
            ops.append((c, inst.rd, inst.rs1, inst.imm))
        elif c == _ADDI or c in (_SLTI, _SLTIU, _XORI, _ORI, _ANDI,
                                 _SLLI, _SRLI, _SRAI):
            ops.append((c, inst.rd, inst.rs1, inst.imm))
        elif c in (_SB, _SH, _SW):
            ops.append((c, inst.rs1, inst.rs2, inst.imm))
        elif c in (_MUL, _ADD, _SUB, _SLL, _SLT, _SLTU, _XOR, _SRL, _SRA,
                   _OR, _AND, _MULH, _MULHSU, _MULHU, _DIV, _DIVU, _REM, _REMU):
            ops.append((c, inst.rd, inst.rs1, inst.rs2))
        elif c in (_BLT, _BEQ, _BNE, _BGE, _BLTU, _BGEU):
            ops.append((c, inst.rs1, inst.rs2, i + inst.imm // 4))
        elif c == _JAL:
            t = i + inst.imm // 4
            ops.append((_HALT, inst.rd) if t == i else (c, inst.rd, t))
        elif c == _JALR:
            ops.append((c, inst.rd, inst.rs1, inst.imm))
        elif c in (_LUI, _AUIPC):
            ops.append((c, inst.rd, inst.imm))
        elif c == _MAC:
            ops.append((c,))
        elif c in (_ADD2I, _FUSEDMAC):
            ops.append((c, inst.rs1, inst.rs2, inst.i1, inst.i2))
        elif c == _DLP:
            ops.append((c, inst.rs1, i + inst.offset))
        elif c == _DLPI:
            ops.append((c, inst.imm, i + inst.offset))
        elif c == _ZLP:
            ops.append((c, i + inst.offset))
        elif c in (_SETZC, _SETZS, _SETZE):
            ops.append((c, inst.rs1))
        else:  # fence/ecall/ebreak/illegal: trap on execution
            ops.append((c,))
    return ops


def _signed(v: int) -> int:
    return v - 0x100000000 if v >= 0x80000000 else v


def check_extensions(prog: Program, variant: Variant) -> None:
    allowed = BASE_KINDS | extensions_of(variant)
    for i, inst in enumerate(prog.text):
        if inst.kind not in allowed and inst.kind != ILLEGAL:
            raise ValueError(
                f"instruction {i} ({inst.kind}) not available on {variant}")


def run(
    prog: Program,
    variant: Variant | None = None,
    model: CycleModel | None = None,
    *,
    max_steps: int = DEFAULT_MAX_STEPS,
    mem_size: int | None = None,
    trace: bool = False,
    pc_hist: bool = False,
    regs: dict[int, int] | None = None,
    init: MachineState | None = None,
    _raise_on_budget: bool = True,
) -> RunResult:
    """Run to the halt marker (self-targeting jump) or raise.

    If `variant` is given, the program may only use that variant's
    extensions.  `regs` pre-loads registers (for tests); `init` resumes from
    an existing MachineState (its memory object is reused and mutated).
    Raises SimTrap on architectural traps and BudgetExceeded past
    `max_steps`.
    """
    if variant is not None:
        check_extensions(prog, variant)
    if model is None:
        model = CycleModel()
    if max_steps < 1:
        raise ValueError("max_steps must be >= 1")

    ops = _lower(prog)
    n = len(ops)
    if n == 0:
        raise SimTrap(0, None, "empty program")

    M = MASK32
    cost = [model.cost(k) for k in _CODES] + [model.cost("jal")]
    extra = model.taken_branch_extra

    if init is not None:
        mem = init.mem
        x = [v & M for v in init.x]
        pcw = init.pc >> 2
        zc = init.zc
        zs_w = init.zs >> 2
        ze_w = init.ze >> 2
    else:
        if mem_size is None:
            mem_size = prog.data_base + len(prog.data) + (1 << 20)
        mem = bytearray(mem_size)
        mem[prog.data_base:prog.data_base + len(prog.data)] = prog.data
        x = [0] * 32
        pcw = prog.entry
        zc = 0
        zs_w = 0
        ze_w = 0
    memlen = len(mem)
    for r, v in (regs or {}).items():
        if r:
            x[r] = v & M

    retired = [0] * (len(_CODES) + 1)
    pcs: list[int] | None = [] if trace else None
    hist: list[int] | None = [0] * n if pc_hist else None
    taken = 0
    steps = 0
    halted = False

    tr = pcs.append if pcs is not None else None

    while True:
        if steps >= max_steps:
            if _raise_on_budget:
                raise BudgetExceeded(steps)
            break
        steps += 1
        cur = pcw
        try:
            op = ops[cur]
        except IndexError:
            raise SimTrap(cur * 4, None, "pc outside text") from None
        c = op[0]
        retired[c] += 1
        if tr is not None:
            tr(cur)
        if hist is not None:
            hist[cur] += 1
        pcw = cur + 1

        if c == _LB:
            a = (x[op[2]] + op[3]) & M
            if a >= memlen:
                raise SimTrap(cur * 4, prog.text[cur], f"load out of bounds: 0x{a:x}")
            v = mem[a]
            if op[1]:
                x[op[1]] = v - 256 if v > 127 else v
                x[op[1]] &= M
        elif c == _ADDI:
            if op[1]:
                x[op[1]] = (x[op[2]] + op[3]) & M
        elif c == _MUL:
            if op[1]:
                x[op[1]] = (x[op[2]] * x[op[3]]) & M
        elif c == _ADD:
            if op[1]:
                x[op[1]] = (x[op[2]] + x[op[3]]) & M
        elif c == _BLT:
            a = x[op[1]]
            b = x[op[2]]
            if (a - 0x100000000 if a >= 0x80000000 else a) < \
               (b - 0x100000000 if b >= 0x80000000 else b):
                pcw = op[3]
                taken += 1
        elif c == _ADD2I:
            r = op[1]
            if r:
                x[r] = (x[r] + op[3]) & M
            r = op[2]
            if r:
                x[r] = (x[r] + op[4]) & M
        elif c == _MAC:
            x[20] = (x[20] + x[21] * x[22]) & M
        elif c == _FUSEDMAC:
            x[20] = (x[20] + x[21] * x[22]) & M
            r = op[1]
            if r:
                x[r] = (x[r] + op[3]) & M
            r = op[2]
            if r:
                x[r] = (x[r] + op[4]) & M
        elif c == _SB:
            a = (x[op[1]] + op[3]) & M
            if a >= memlen:
                raise SimTrap(cur * 4, prog.text[cur], f"store out of bounds: 0x{a:x}")
            mem[a] = x[op[2]] & 0xFF
        elif c == _LUI:
            if op[1]:
                x[op[1]] = (op[2] << 12) & M
        elif c == _AUIPC:
            if op[1]:
                x[op[1]] = (cur * 4 + (op[2] << 12)) & M
        elif c == _JAL:
            if op[1]:
                x[op[1]] = (cur * 4 + 4) & M
            pcw = op[2]
            taken += 1
        elif c == _HALT:
            if op[1]:
                x[op[1]] = (cur * 4 + 4) & M
            halted = True
            pcw = cur
        elif c == _JALR:
            t = (x[op[2]] + op[3]) & M & ~1
            if t & 3:
                raise SimTrap(cur * 4, prog.text[cur], f"misaligned jump target 0x{t:x}")
            tw = t >> 2
            if tw >= n:
                raise SimTrap(cur * 4, prog.text[cur], f"jump outside text: 0x{t:x}")
            if op[1]:
                x[op[1]] = (cur * 4 + 4) & M
            if tw == cur:
                halted = True
                pcw = cur
            else:
                pcw = tw
                taken += 1
        elif c == _BEQ:
            if x[op[1]] == x[op[2]]:
                pcw = op[3]
                taken += 1
        elif c == _BNE:
            if x[op[1]] != x[op[2]]:
                pcw = op[3]
                taken += 1
        elif c == _BGE:
            a = x[op[1]]
            b = x[op[2]]
            if (a - 0x100000000 if a >= 0x80000000 else a) >= \
               (b - 0x100000000 if b >= 0x80000000 else b):
                pcw = op[3]
                taken += 1
        elif c == _BLTU:
            if x[op[1]] < x[op[2]]:
                pcw = op[3]
                taken += 1
        elif c == _BGEU:
            if x[op[1]] >= x[op[2]]:
                pcw = op[3]
                taken += 1
        elif c == _LH or c == _LHU:
            a = (x[op[2]] + op[3]) & M
            if a & 1:
                raise SimTrap(cur * 4, prog.text[cur], f"misaligned halfword load: 0x{a:x}")
            if a + 1 >= memlen:
                raise SimTrap(cur * 4, prog.text[cur], f"load out of bounds: 0x{a:x}")
            v = mem[a] | (mem[a + 1] << 8)
            if c == _LH and v > 0x7FFF:
                v -= 0x10000
            if op[1]:
                x[op[1]] = v & M
        elif c == _LW:
            a = (x[op[2]] + op[3]) & M
            if a & 3:
                raise SimTrap(cur * 4, prog.text[cur], f"misaligned word load: 0x{a:x}")
            if a + 3 >= memlen:
                raise SimTrap(cur * 4, prog.text[cur], f"load out of bounds: 0x{a:x}")
            if op[1]:
                x[op[1]] = mem[a] | (mem[a + 1] << 8) | (mem[a + 2] << 16) | (mem[a + 3] << 24)
        elif c == _LBU:
            a = (x[op[2]] + op[3]) & M
            if a >= memlen:
                raise SimTrap(cur * 4, prog.text[cur], f"load out of bounds: 0x{a:x}")
            if op[1]:
                x[op[1]] = mem[a]
        elif c == _SH:
            a = (x[op[1]] + op[3]) & M
            if a & 1:
                raise SimTrap(cur * 4, prog.text[cur], f"misaligned halfword store: 0x{a:x}")
            if a + 1 >= memlen:
                raise SimTrap(cur * 4, prog.text[cur], f"store out of bounds: 0x{a:x}")
            v = x[op[2]]
            mem[a] = v & 0xFF
            mem[a + 1] = (v >> 8) & 0xFF
        elif c == _SW:
            a = (x[op[1]] + op[3]) & M
            if a & 3:
                raise SimTrap(cur * 4, prog.text[cur], f"misaligned word store: 0x{a:x}")
            if a + 3 >= memlen:
                raise SimTrap(cur * 4, prog.text[cur], f"store out of bounds: 0x{a:x}")
            v = x[op[2]]
            mem[a] = v & 0xFF
            mem[a + 1] = (v >> 8) & 0xFF
            mem[a + 2] = (v >> 16) & 0xFF
            mem[a + 3] = (v >> 24) & 0xFF
        elif c == _SLTI:
            a = x[op[2]]
            if op[1]:
                x[op[1]] = 1 if (a - 0x100000000 if a >= 0x80000000 else a) < op[3] else 0
        elif c == _SLTIU:
            if op[1]:
                x[op[1]] = 1 if x[op[2]] < (op[3] & M) else 0
        elif c == _XORI:
            if op[1]:
                x[op[1]] = (x[op[2]] ^ op[3]) & M
        elif c == _ORI:
            if op[1]:
                x[op[1]] = (x[op[2]] | op[3]) & M
        elif c == _ANDI:
            if op[1]:
                x[op[1]] = (x[op[2]] & op[3]) & M
        elif c == _SLLI:
            if op[1]:
                x[op[1]] = (x[op[2]] << op[3]) & M
        elif c == _SRLI:
            if op[1]:
                x[op[1]] = x[op[2]] >> op[3]
        elif c == _SRAI:
            a = x[op[2]]
            if op[1]:
                x[op[1]] = ((a - 0x100000000 if a >= 0x80000000 else a) >> op[3]) & M
        elif c == _SUB:
            if op[1]:
                x[op[1]] = (x[op[2]] - x[op[3]]) & M
        elif c == _SLL:
            if op[1]:
                x[op[1]] = (x[op[2]] << (x[op[3]] & 31)) & M
        elif c == _SLT:
            a = x[op[2]]
            b = x[op[3]]
            if op[1]:
                x[op[1]] = 1 if (a - 0x100000000 if a >= 0x80000000 else a) < \
                    (b - 0x100000000 if b >= 0x80000000 else b) else 0
        elif c == _SLTU:
            if op[1]:
                x[op[1]] = 1 if x[op[2]] < x[op[3]] else 0
        elif c == _XOR:
            if op[1]:
                x[op[1]] = x[op[2]] ^ x[op[3]]
        elif c == _SRL:
            if op[1]:
                x[op[1]] = x[op[2]] >> (x[op[3]] & 31)
        elif c == _SRA:
            a = x[op[2]]
            if op[1]:
                x[op[1]] = ((a - 0x100000000 if a >= 0x80000000 else a)
                            >> (x[op[3]] & 31)) & M
        elif c == _OR:
            if op[1]:
                x[op[1]] = x[op[2]] | x[op[3]]
        elif c == _AND:
            if op[1]:
                x[op[1]] = x[op[2]] & x[op[3]]
        elif c == _MULH:
            if op[1]:
                x[op[1]] = ((_signed(x[op[2]]) * _signed(x[op[3]])) >> 32) & M
        elif c == _MULHSU:
            if op[1]:
                x[op[1]] = ((_signed(x[op[2]]) * x[op[3]]) >> 32) & M
        elif c == _MULHU:
            if op[1]:
                x[op[1]] = ((x[op[2]] * x[op[3]]) >> 32) & M
        elif c == _DIV:
            a = _signed(x[op[2]])
            b = _signed(x[op[3]])
            if b == 0:
                q = -1
            elif a == -0x80000000 and b == -1:
                q = -0x80000000
            else:
                q = abs(a) // abs(b)
                if (a < 0) != (b < 0):
                    q = -q
            if op[1]:
                x[op[1]] = q & M
        elif c == _DIVU:
            b = x[op[3]]
            if op[1]:
                x[op[1]] = M if b == 0 else x[op[2]] // b
        elif c == _REM:
            a = _signed(x[op[2]])
            b = _signed(x[op[3]])
            if b == 0:
                r = a
            elif a == -0x80000000 and b == -1:
                r = 0
            else:
                r = abs(a) % abs(b)
                if a < 0:
                    r = -r
            if op[1]:
                x[op[1]] = r & M
        elif c == _REMU:
            b = x[op[3]]
            if op[1]:
                x[op[1]] = x[op[2]] if b == 0 else x[op[2]] % b
        elif c == _DLP:
            zc = x[op[1]]
            zs_w = cur + 1
            ze_w = op[2]
        elif c == _DLPI:
            zc = op[1]
            zs_w = cur + 1
            ze_w = op[2]
        elif c == _ZLP:
            zs_w = cur + 1
            ze_w = op[1]
        elif c == _SETZC:
            zc = x[op[1]]
        elif c == _SETZS:
            v = x[op[1]]
            if v & 3:
                raise SimTrap(cur * 4, prog.text[cur], f"misaligned ZS value 0x{v:x}")
            zs_w = v >> 2
        elif c == _SETZE:
            v = x[op[1]]
            if v & 3:
                raise SimTrap(cur * 4, prog.text[cur], f"misaligned ZE value 0x{v:x}")
            ze_w = v >> 2
        else:
            inst = prog.text[cur]
            raise SimTrap(cur * 4, inst, f"illegal instruction ({inst.kind})")

        if cur == ze_w:
            if zc > 1:
                zc -= 1
                pcw = zs_w
            else:
                zc = 0
        if halted:
            break

    cycles = sum(r * c for r, c in zip(retired, cost)) + taken * extra
    retired_by_kind: dict[str, int] = {}
    for code, count in enumerate(retired):
        if count:
            kind = "jal" if code == _HALT else _CODES[code]
            retired_by_kind[kind] = retired_by_kind.get(kind, 0) + count

    state = MachineState(
        x=x, pc=pcw * 4, zc=zc, zs=zs_w * 4, ze=ze_w * 4, mem=mem,
        cycles=cycles, retired=retired_by_kind,
        pc_hist={p * 4: cnt for p, cnt in enumerate(hist) if cnt} if hist is not None else None,
    )
    return RunResult(cycles=cycles, steps=steps, retired=retired_by_kind,
                     taken_branches=taken, halted=halted, state=state,
                     trace_pcs=pcs)


def new_state(prog: Program, mem_size: int | None = None,
              regs: dict[int, int] | None = None) -> MachineState:
    """Fresh architectural state with the program's data image loaded."""
    if mem_size is None:
        mem_size = prog.data_base + len(prog.data) + (1 << 20)
    mem = bytearray(mem_size)
    mem[prog.data_base:prog.data_base + len(prog.data)] = prog.data
    x = [0] * 32
    for r, v in (regs or {}).items():
        if r:
            x[r] = v & MASK32
    return MachineState(x=x, pc=prog.entry * 4, mem=mem)


def step(state: MachineState, prog: Program,
         model: CycleModel | None = None) -> MachineState:
    """Execute exactly one instruction, mutating and returning `state`."""
    res = run(prog, model=model, max_steps=1, init=state,
              _raise_on_budget=False)
    new = res.state
    state.x = new.x
    state.pc = new.pc
    state.zc, state.zs, state.ze = new.zc, new.zs, new.ze
    state.cycles += res.cycles
    for k, v in res.retired.items():
        state.retired[k] = state.retired.get(k, 0) + v
    return state


def trace(prog: Program, variant: Variant | None = None,
          model: CycleModel | None = None, *,
          max_steps: int = DEFAULT_MAX_STEPS) -> list[tuple[int, Instruction]]:
    """Full event capture: one (byte pc, Instruction) pair per retired
    instruction, in program order."""
    res = run(prog, variant, model, max_steps=max_steps, trace=True)
    return res.events(prog)


def trace_to_ndjson(prog: Program, res: RunResult,
                    model: CycleModel | None = None) -> str:
    """One JSON object per retired instruction: {"pc": ..., "mnemonic": ...,
    "cycle": ...} where cycle is the cumulative count after retirement.

    Taken-branch extras are reconstructed from the pc sequence; a branch
    sitting exactly at a hardware-loop end address would be indistinguishable
    from a taken one here (rewritten loops keep their bodies branch-free, so
    this does not arise in generated code)."""
    import json

    if res.trace_pcs is None:
        raise ValueError("run was not traced; pass trace=True")
    if model is None:
        model = CycleModel()
    text = prog.text
    extra = model.taken_branch_extra
    control = BRANCH_AND_JUMP_KINDS
    pcs = res.trace_pcs
    lines = []
    cycle = 0
    last = len(pcs) - 1
    for k, p in enumerate(pcs):
        inst = text[p]
        cycle += model.cost(inst.kind)
        if inst.kind in control and k < last and pcs[k + 1] != p + 1:
            cycle += extra  # the hardware loop back-jump never lands here
        lines.append(json.dumps({"pc": p * 4, "mnemonic": inst.kind,
                                 "cycle": cycle}))
    return "\n".join(lines) + ("\n" if lines else "")


def run_summary(res: RunResult) -> dict:
    """JSON-ready run summary."""
    return {
        "cycles": res.cycles,
        "retired": dict(sorted(res.retired.items())),
        "steps": res.steps,
        "taken_branches": res.taken_branches,
        "halted": res.halted,
    }
