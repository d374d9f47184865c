"""Assembler and disassembler.

Syntax follows standard RISC-V conventions: one instruction per line,
`label:` definitions, `#` or `;` comments, registers as xN or ABI names.
Custom mnemonics: `mac`, `add2i rs1, rs2, i1, i2`, `fusedmac rs1, rs2, i1, i2`,
`dlp rs1, end_label`, `dlpi count, end_label`, `zlp end_label`,
`set.zc/set.zs/set.ze rs1`.

Sections: `.text` (default) and `.data`.  Data directives: `.byte`, `.word`,
`.zero N`.  `.entry LABEL` sets the start instruction.  In the text section
`.word W` appends the raw instruction word W.

The flat binary format is little-endian: a 16-byte header (magic "MRVL",
u16 version, u16 entry instruction index, u32 text bytes, u32 data bytes)
followed by the text image then the data image.  The data image loads at
DATA_BASE.
"""

from __future__ import annotations

import re
import struct
from dataclasses import dataclass, field

from .isa import (
    BRANCH_OPS, CUSTOM_KINDS, ILLEGAL, I_OPS, LOAD_OPS, R_OPS,
    SHIFT_OPS, STORE_OPS, ZOL_SETUP_WITH_OFFSET,
    Instruction, Variant, decode, encode, extensions_of, required_variant,
)

DATA_BASE = 0x10000
BIN_MAGIC = b"MRVL"
BIN_VERSION = 1
# magic, version, text bytes, data bytes, entry (instruction index)
_HEADER = struct.Struct("<4sHIIH")


class AsmError(ValueError):
    """Assembly diagnostic; always carries a 1-based source line number."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass
class Program:
    """Assembled program: decoded text, resolved labels, initial data image."""

    text: list[Instruction]
    labels: dict[str, int] = field(default_factory=dict)
    data: bytes = b""
    data_base: int = DATA_BASE
    entry: int = 0
    meta: list[int] = field(default_factory=list)  # source line per instruction

    @property
    def pm_bytes(self) -> int:
        return 4 * len(self.text)


REG_NAMES = {f"x{i}": i for i in range(32)}
REG_NAMES.update({
    "zero": 0, "ra": 1, "sp": 2, "gp": 3, "tp": 4,
    "t0": 5, "t1": 6, "t2": 7, "s0": 8, "fp": 8, "s1": 9,
    "a0": 10, "a1": 11, "a2": 12, "a3": 13, "a4": 14, "a5": 15,
    "a6": 16, "a7": 17, "s2": 18, "s3": 19, "s4": 20, "s5": 21,
    "s6": 22, "s7": 23, "s8": 24, "s9": 25, "s10": 26, "s11": 27,
    "t3": 28, "t4": 29, "t5": 30, "t6": 31,
})

_LABEL_RE = re.compile(r"^([A-Za-z_.$][\w.$]*):")
_MEM_RE = re.compile(r"^(-?\w+)\((\w+)\)$")


def _parse_reg(tok: str, line: int) -> int:
    r = REG_NAMES.get(tok.lower())
    if r is None:
        raise AsmError(line, f"unknown register {tok!r}")
    return r


def _parse_int(tok: str, line: int) -> int:
    try:
        return int(tok, 0)
    except ValueError:
        raise AsmError(line, f"expected integer, got {tok!r}") from None


def _split_operands(rest: str) -> list[str]:
    return [p.strip() for p in rest.split(",") if p.strip()]


def hi20(value: int) -> int:
    """Upper 20 bits for a lui of a 32-bit constant (lo12 sign-compensated)."""
    return ((value + 0x800) >> 12) & 0xFFFFF


def lo12(value: int) -> int:
    v = value & 0xFFF
    return v - 0x1000 if v >= 0x800 else v


@dataclass
class _Item:
    """Pre-resolution instruction: kind + operands, label still symbolic."""

    kind: str
    line: int
    rd: int | None = None
    rs1: int | None = None
    rs2: int | None = None
    imm: int | None = None
    i1: int | None = None
    i2: int | None = None
    target: str | int | None = None  # label name or numeric pc-relative bytes
    raw_word: int | None = None


def _expand_li(rd: int, value: int, line: int) -> list[_Item]:
    if not -(1 << 31) <= value < (1 << 32):
        raise AsmError(line, f"li constant out of 32-bit range: {value}")
    value &= 0xFFFFFFFF
    signed = value - (1 << 32) if value >= (1 << 31) else value
    if -2048 <= signed <= 2047:
        return [_Item("addi", line, rd=rd, rs1=0, imm=signed)]
    return [
        _Item("lui", line, rd=rd, imm=hi20(signed)),
        _Item("addi", line, rd=rd, rs1=rd, imm=lo12(signed)),
    ]


def _parse_instruction(mnem: str, ops: list[str], line: int) -> list[_Item]:
    k = mnem
    if k == "nop":
        return [_Item("addi", line, rd=0, rs1=0, imm=0)]
    if k == "mv":
        if len(ops) != 2:
            raise AsmError(line, "mv takes rd, rs")
        return [_Item("addi", line, rd=_parse_reg(ops[0], line),
                      rs1=_parse_reg(ops[1], line), imm=0)]
    if k == "li":
        if len(ops) != 2:
            raise AsmError(line, "li takes rd, imm")
        return _expand_li(_parse_reg(ops[0], line), _parse_int(ops[1], line), line)
    if k == "j":
        if len(ops) != 1:
            raise AsmError(line, "j takes a label")
        return [_Item("jal", line, rd=0, target=ops[0])]
    if k == "halt":
        if ops:
            raise AsmError(line, "halt takes no operands")
        return [_Item("jal", line, rd=0, target=0)]

    if k in R_OPS:
        if len(ops) != 3:
            raise AsmError(line, f"{k} takes rd, rs1, rs2")
        return [_Item(k, line, rd=_parse_reg(ops[0], line),
                      rs1=_parse_reg(ops[1], line), rs2=_parse_reg(ops[2], line))]
    if k in I_OPS or k in SHIFT_OPS:
        if len(ops) != 3:
            raise AsmError(line, f"{k} takes rd, rs1, imm")
        return [_Item(k, line, rd=_parse_reg(ops[0], line),
                      rs1=_parse_reg(ops[1], line), imm=_parse_int(ops[2], line))]
    if k in LOAD_OPS:
        if len(ops) != 2:
            raise AsmError(line, f"{k} takes rd, offset(rs1)")
        m = _MEM_RE.match(ops[1])
        if not m:
            raise AsmError(line, f"bad memory operand {ops[1]!r}")
        return [_Item(k, line, rd=_parse_reg(ops[0], line),
                      rs1=_parse_reg(m.group(2), line),
                      imm=_parse_int(m.group(1), line))]
    if k in STORE_OPS:
        if len(ops) != 2:
            raise AsmError(line, f"{k} takes rs2, offset(rs1)")
        m = _MEM_RE.match(ops[1])
        if not m:
            raise AsmError(line, f"bad memory operand {ops[1]!r}")
        return [_Item(k, line, rs2=_parse_reg(ops[0], line),
                      rs1=_parse_reg(m.group(2), line),
                      imm=_parse_int(m.group(1), line))]
    if k in BRANCH_OPS:
        if len(ops) != 3:
            raise AsmError(line, f"{k} takes rs1, rs2, label")
        tgt: str | int = ops[2]
        if re.match(r"^[+-]?\d", ops[2]):
            tgt = _parse_int(ops[2], line)
        return [_Item(k, line, rs1=_parse_reg(ops[0], line),
                      rs2=_parse_reg(ops[1], line), target=tgt)]
    if k == "jal":
        if len(ops) == 1:  # jal label == jal ra, label
            ops = ["ra", ops[0]]
        if len(ops) != 2:
            raise AsmError(line, "jal takes [rd,] label")
        tgt = ops[1]
        if re.match(r"^[+-]?\d", ops[1]):
            tgt = _parse_int(ops[1], line)
        return [_Item(k, line, rd=_parse_reg(ops[0], line), target=tgt)]
    if k == "jalr":
        if len(ops) == 3:
            return [_Item(k, line, rd=_parse_reg(ops[0], line),
                          rs1=_parse_reg(ops[1], line),
                          imm=_parse_int(ops[2], line))]
        if len(ops) == 2:
            m = _MEM_RE.match(ops[1])
            if not m:
                raise AsmError(line, f"bad jalr operand {ops[1]!r}")
            return [_Item(k, line, rd=_parse_reg(ops[0], line),
                          rs1=_parse_reg(m.group(2), line),
                          imm=_parse_int(m.group(1), line))]
        raise AsmError(line, "jalr takes rd, rs1, imm")
    if k in ("lui", "auipc"):
        if len(ops) != 2:
            raise AsmError(line, f"{k} takes rd, imm")
        return [_Item(k, line, rd=_parse_reg(ops[0], line),
                      imm=_parse_int(ops[1], line))]
    if k in ("fence", "ecall", "ebreak", "mac"):
        if ops:
            raise AsmError(line, f"{k} takes no operands")
        return [_Item(k, line)]
    if k in ("add2i", "fusedmac"):
        if len(ops) != 4:
            raise AsmError(line, f"{k} takes rs1, rs2, i1, i2")
        return [_Item(k, line, rs1=_parse_reg(ops[0], line),
                      rs2=_parse_reg(ops[1], line),
                      i1=_parse_int(ops[2], line), i2=_parse_int(ops[3], line))]
    if k == "dlp":
        if len(ops) != 2:
            raise AsmError(line, "dlp takes rs1, end_label")
        return [_Item(k, line, rs1=_parse_reg(ops[0], line), target=ops[1])]
    if k == "dlpi":
        if len(ops) != 2:
            raise AsmError(line, "dlpi takes count, end_label")
        return [_Item(k, line, imm=_parse_int(ops[0], line), target=ops[1])]
    if k == "zlp":
        if len(ops) != 1:
            raise AsmError(line, "zlp takes end_label")
        return [_Item(k, line, target=ops[0])]
    if k in ("set.zc", "set.zs", "set.ze"):
        if len(ops) != 1:
            raise AsmError(line, f"{k} takes rs1")
        return [_Item(k, line, rs1=_parse_reg(ops[0], line))]
    raise AsmError(line, f"unknown mnemonic {mnem!r}")


def _parse_data_values(directive: str, ops: list[str], line: int) -> bytes:
    out = bytearray()
    if directive == ".byte":
        for tok in ops:
            v = _parse_int(tok, line)
            if not -128 <= v <= 255:
                raise AsmError(line, f".byte value out of range: {v}")
            out.append(v & 0xFF)
    elif directive == ".word":
        for tok in ops:
            v = _parse_int(tok, line)
            if not -(1 << 31) <= v < (1 << 32):
                raise AsmError(line, f".word value out of range: {v}")
            out += (v & 0xFFFFFFFF).to_bytes(4, "little")
    elif directive == ".zero":
        if len(ops) != 1:
            raise AsmError(line, ".zero takes a length")
        n = _parse_int(ops[0], line)
        if n < 0:
            raise AsmError(line, f".zero length must be non-negative: {n}")
        out += bytes(n)
    else:
        raise AsmError(line, f"unknown directive {directive!r}")
    return bytes(out)


def assemble(source: str, variant: Variant = Variant.V4) -> Program:
    """Assemble source text into a Program.

    Custom mnemonics are rejected unless enabled by `variant`.  All
    diagnostics carry the source line number.
    """
    items: list[_Item] = []
    labels: dict[str, int] = {}
    data = bytearray()
    entry_label: str | None = None
    section = "text"

    for lineno, raw in enumerate(source.splitlines(), start=1):
        text = raw.split("#", 1)[0].split(";", 1)[0].strip()
        while text:
            m = _LABEL_RE.match(text)
            if not m:
                break
            name = m.group(1)
            if section != "text":
                raise AsmError(lineno, "labels are only supported in the text section")
            if name in labels:
                raise AsmError(lineno, f"duplicate label {name!r}")
            labels[name] = len(items)
            text = text[m.end():].strip()
        if not text:
            continue

        parts = text.split(None, 1)
        mnem = parts[0].lower()
        rest = parts[1] if len(parts) > 1 else ""
        ops = _split_operands(rest)

        if mnem == ".text":
            section = "text"
            continue
        if mnem == ".data":
            section = "data"
            continue
        if mnem == ".entry":
            if len(ops) != 1:
                raise AsmError(lineno, ".entry takes a label")
            entry_label = ops[0]
            continue
        if mnem.startswith("."):
            if section == "data":
                data += _parse_data_values(mnem, ops, lineno)
                continue
            if mnem == ".word":
                for tok in ops:
                    w = _parse_int(tok, lineno) & 0xFFFFFFFF
                    items.append(_Item(ILLEGAL, lineno, raw_word=w))
                continue
            raise AsmError(lineno, f"directive {mnem} not allowed in text section")
        if section != "text":
            raise AsmError(lineno, f"instruction {mnem!r} in data section")

        items.extend(_parse_instruction(mnem, ops, lineno))

    enabled = extensions_of(variant)
    for item in items:
        if item.kind in CUSTOM_KINDS and item.kind not in enabled:
            raise AsmError(
                item.line,
                f"{item.kind} requires variant >= {required_variant(item.kind)}"
                f" (got {variant})",
            )

    # Resolve labels and build instructions.
    insts: list[Instruction] = []
    meta: list[int] = []
    for idx, item in enumerate(items):
        try:
            insts.append(_resolve_item(item, idx, labels))
        except ValueError as exc:
            if isinstance(exc, AsmError):
                raise
            raise AsmError(item.line, str(exc)) from None
        meta.append(item.line)

    entry = 0
    if entry_label is not None:
        if entry_label not in labels:
            raise AsmError(1, f"undefined .entry label {entry_label!r}")
        entry = labels[entry_label]

    prog = Program(text=insts, labels=labels, data=bytes(data), entry=entry, meta=meta)
    validate_program(prog)
    return prog


def _resolve_item(item: _Item, idx: int, labels: dict[str, int]) -> Instruction:
    k = item.kind
    if k == ILLEGAL:
        return decode(item.raw_word)
    target_idx: int | None = None
    if item.target is not None:
        if isinstance(item.target, str):
            if item.target not in labels:
                raise AsmError(item.line, f"undefined label {item.target!r}")
            target_idx = labels[item.target]
        else:
            if item.target % 4:
                raise AsmError(item.line,
                               f"pc-relative offset must be 4-byte aligned: {item.target}")
            target_idx = idx + item.target // 4
    if k in BRANCH_OPS or k == "jal":
        return Instruction(k, rd=item.rd, rs1=item.rs1, rs2=item.rs2,
                           imm=(target_idx - idx) * 4)
    if k in ZOL_SETUP_WITH_OFFSET:
        return Instruction(k, rs1=item.rs1, imm=item.imm,
                           offset=target_idx - idx)
    return Instruction(k, rd=item.rd, rs1=item.rs1, rs2=item.rs2,
                       imm=item.imm, i1=item.i1, i2=item.i2)


def validate_program(prog: Program) -> None:
    """Program-level invariants: targets inside text, 4-byte aligned offsets."""
    n = len(prog.text)
    for name, idx in prog.labels.items():
        if not 0 <= idx <= n:
            raise ValueError(f"label {name!r} targets instruction {idx}, text has {n}")
    if not 0 <= prog.entry <= max(n - 1, 0):
        raise ValueError(f"entry {prog.entry} outside text")
    for i, inst in enumerate(prog.text):
        if inst.kind in BRANCH_OPS or inst.kind == "jal":
            if inst.imm % 4:
                raise ValueError(f"instruction {i}: offset {inst.imm} not 4-byte aligned")
            t = i + inst.imm // 4
            if not 0 <= t < n:
                raise ValueError(f"instruction {i}: target {t} outside text")
        elif inst.kind in ZOL_SETUP_WITH_OFFSET:
            t = i + inst.offset
            if not 0 <= t < n:
                raise ValueError(f"instruction {i}: loop end {t} outside text")


# -- symbolic view used by the rewriter ------------------------------------

def to_items(prog: Program) -> list[tuple[Instruction, int | None]]:
    """A relocatable view: each instruction paired with its target index
    (branches, jal, zol setups) or None."""
    out = []
    for i, inst in enumerate(prog.text):
        if inst.kind in BRANCH_OPS or inst.kind == "jal":
            out.append((inst, i + inst.imm // 4))
        elif inst.kind in ZOL_SETUP_WITH_OFFSET:
            out.append((inst, i + inst.offset))
        else:
            out.append((inst, None))
    return out


def from_items(
    items: list[tuple[Instruction, int | None]],
    labels: dict[str, int] | None = None,
    data: bytes = b"",
    data_base: int = DATA_BASE,
    entry: int = 0,
    meta: list[int] | None = None,
) -> Program:
    """Rebuild a Program from a symbolic view, recomputing offsets."""
    from dataclasses import replace

    text = []
    for i, (inst, target) in enumerate(items):
        if target is None:
            text.append(inst)
        elif inst.kind in BRANCH_OPS or inst.kind == "jal":
            text.append(replace(inst, imm=(target - i) * 4))
        elif inst.kind in ZOL_SETUP_WITH_OFFSET:
            text.append(replace(inst, offset=target - i))
        else:
            raise ValueError(f"instruction {i}: {inst.kind} cannot carry a target")
    prog = Program(text=text, labels=dict(labels or {}), data=data,
                   data_base=data_base, entry=entry,
                   meta=list(meta) if meta else [0] * len(text))
    validate_program(prog)
    return prog


# -- disassembly ------------------------------------------------------------

_CUSTOM_COMMENTS = {
    "mac": ";x20 = x20 + x21*x22",
    "add2i": ";rs1 = rs1 + i1 / ;rs2 = rs2 + i2",
    "fusedmac": ";x20 = x20 + x21*x22 / ;rs1 = rs1 + i1 / ;rs2 = rs2 + i2",
}


def _reg(n: int) -> str:
    return f"x{n}"


def disassemble(prog: Program) -> str:
    """Render a Program back to assembly text.

    Branch/loop targets get generated labels (existing label names are
    reused where they match).  Reassembling the output under any variant
    that enables the program's extensions reproduces the instruction list.
    """
    targets = set()
    for i, inst in enumerate(prog.text):
        if inst.kind in BRANCH_OPS or inst.kind == "jal":
            t = i + inst.imm // 4
            if t != i or inst.rd != 0 or inst.kind != "jal":
                targets.add(t)
    for i, inst in enumerate(prog.text):
        if inst.kind in ZOL_SETUP_WITH_OFFSET:
            targets.add(i + inst.offset)
    if prog.entry != 0:
        targets.add(prog.entry)

    by_index: dict[int, str] = {}
    for name, idx in sorted(prog.labels.items()):
        if idx in targets and idx not in by_index:
            by_index[idx] = name
    counter = 0
    for t in sorted(targets):
        if t not in by_index:
            while f"L{counter}" in prog.labels:
                counter += 1
            by_index[t] = f"L{counter}"
            counter += 1

    def label_of(idx: int) -> str:
        return by_index[idx]

    lines = []
    if prog.entry != 0:
        lines.append(f".entry {label_of(prog.entry)}")
    for i, inst in enumerate(prog.text):
        if i in by_index:
            lines.append(f"{by_index[i]}:")
        lines.append("    " + _render(inst, i, label_of))
    if prog.data:
        lines.append("")
        lines.append(".data")
        lines.extend(_render_data(prog.data))
    return "\n".join(lines) + "\n"


def _render(inst: Instruction, idx: int, label_of) -> str:
    k = inst.kind
    if k in R_OPS:
        return f"{k} {_reg(inst.rd)}, {_reg(inst.rs1)}, {_reg(inst.rs2)}"
    if k in I_OPS or k in SHIFT_OPS:
        return f"{k} {_reg(inst.rd)}, {_reg(inst.rs1)}, {inst.imm}"
    if k in LOAD_OPS:
        return f"{k} {_reg(inst.rd)}, {inst.imm}({_reg(inst.rs1)})"
    if k in STORE_OPS:
        return f"{k} {_reg(inst.rs2)}, {inst.imm}({_reg(inst.rs1)})"
    if k in BRANCH_OPS:
        return f"{k} {_reg(inst.rs1)}, {_reg(inst.rs2)}, {label_of(idx + inst.imm // 4)}"
    if k == "jal":
        if inst.imm == 0 and inst.rd == 0:
            return "halt"
        return f"jal {_reg(inst.rd)}, {label_of(idx + inst.imm // 4)}"
    if k == "jalr":
        return f"jalr {_reg(inst.rd)}, {_reg(inst.rs1)}, {inst.imm}"
    if k in ("lui", "auipc"):
        return f"{k} {_reg(inst.rd)}, {inst.imm}"
    if k in ("fence", "ecall", "ebreak"):
        return k
    if k == "mac":
        return f"mac                          {_CUSTOM_COMMENTS['mac']}"
    if k in ("add2i", "fusedmac"):
        text = f"{k} {_reg(inst.rs1)}, {_reg(inst.rs2)}, {inst.i1}, {inst.i2}"
        return f"{text:28} {_CUSTOM_COMMENTS[k]}"
    if k == "dlp":
        return f"dlp {_reg(inst.rs1)}, {label_of(idx + inst.offset)}"
    if k == "dlpi":
        return f"dlpi {inst.imm}, {label_of(idx + inst.offset)}"
    if k == "zlp":
        return f"zlp {label_of(idx + inst.offset)}"
    if k in ("set.zc", "set.zs", "set.ze"):
        return f"{k} {_reg(inst.rs1)}"
    if k == ILLEGAL:
        return f".word 0x{inst.imm:08x}"
    raise ValueError(f"cannot render kind {k!r}")


def _render_data(data: bytes) -> list[str]:
    lines = []
    i = 0
    n = len(data)
    while i < n:
        # compress zero runs
        j = i
        while j < n and data[j] == 0:
            j += 1
        if j - i >= 16:
            lines.append(f".zero {j - i}")
            i = j
            continue
        j = min(i + 16, n)
        chunk = ", ".join(str(b) for b in data[i:j])
        lines.append(f".byte {chunk}")
        i = j
    return lines


# -- flat binary ------------------------------------------------------------

def save_bin(prog: Program) -> bytes:
    header = _HEADER.pack(BIN_MAGIC, BIN_VERSION, 4 * len(prog.text),
                          len(prog.data), prog.entry)
    words = b"".join(encode(inst).to_bytes(4, "little") for inst in prog.text)
    return header + words + prog.data


def load_bin(blob: bytes) -> Program:
    if len(blob) < _HEADER.size:
        raise ValueError("truncated image: missing header")
    magic, version, text_len, data_len, entry = _HEADER.unpack_from(blob)
    if magic != BIN_MAGIC:
        raise ValueError(f"bad magic {magic!r}, expected {BIN_MAGIC!r}")
    if version != BIN_VERSION:
        raise ValueError(f"unsupported image version {version}")
    if text_len % 4:
        raise ValueError(f"text length {text_len} not a multiple of 4")
    expected = _HEADER.size + text_len + data_len
    if len(blob) != expected:
        raise ValueError(f"image size {len(blob)} != header total {expected}")
    text = []
    for off in range(_HEADER.size, _HEADER.size + text_len, 4):
        text.append(decode(int.from_bytes(blob[off:off + 4], "little")))
    data = blob[_HEADER.size + text_len:]
    prog = Program(text=text, data=data, entry=entry, meta=[0] * len(text))
    validate_program(prog)
    return prog
