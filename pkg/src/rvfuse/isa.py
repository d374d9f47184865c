"""Instruction set definition: RV32IM base plus the four custom extension groups.

Custom instructions and their major opcodes:

  fusedmac  CUSTOM-0 (0b0001011)   x20 += x21*x22; rs1 += i1; rs2 += i2
  add2i     CUSTOM-1 (0b0101011)   rs1 += i1; rs2 += i2
  mac       CUSTOM-2 (0b1011011)   x20 += x21*x22 (registers hardwired)
  zol group 0b1110111              dlp/dlpi/zlp/set.zc/set.zs/set.ze

Field layout inside the custom formats (normative for this artifact):

  add2i/fusedmac: rs1 at [19:15], rs2 at [24:20], i1 (5 bits, unsigned) at
  [11:7], i2 (10 bits, unsigned) split with its high 3 bits at [14:12] and
  low 7 bits at [31:25].

  zol group: funct3 at [14:12] selects the form (dlp=0, dlpi=1, zlp=2,
  set.zc=4, set.zs=5, set.ze=6).  The loop-end operand of dlp/dlpi/zlp is a
  12-bit signed pc-relative *word* offset stored S-type style (high 7 bits
  at [31:25], low 5 at [11:7]).  dlpi's iteration count is a 10-bit unsigned
  field at [24:15].  set.zc/set.zs/set.ze take rs1 at [19:15].

  mac carries no operand fields; its word is the bare opcode.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

MASK32 = 0xFFFFFFFF

# Major opcodes
OPC_LUI = 0b0110111
OPC_AUIPC = 0b0010111
OPC_JAL = 0b1101111
OPC_JALR = 0b1100111
OPC_BRANCH = 0b1100011
OPC_LOAD = 0b0000011
OPC_STORE = 0b0100011
OPC_OP_IMM = 0b0010011
OPC_OP = 0b0110011
OPC_MISC_MEM = 0b0001111
OPC_SYSTEM = 0b1110011
OPC_FUSEDMAC = 0b0001011  # CUSTOM-0
OPC_ADD2I = 0b0101011     # CUSTOM-1
OPC_MAC = 0b1011011       # CUSTOM-2
OPC_ZOL = 0b1110111       # major bits [6:2] = 11101

BASE_OPCODES = frozenset({
    OPC_LUI, OPC_AUIPC, OPC_JAL, OPC_JALR, OPC_BRANCH, OPC_LOAD, OPC_STORE,
    OPC_OP_IMM, OPC_OP, OPC_MISC_MEM, OPC_SYSTEM,
})
CUSTOM_OPCODES = frozenset({OPC_FUSEDMAC, OPC_ADD2I, OPC_MAC, OPC_ZOL})

# kind -> (funct3, funct7), opcode OPC_OP
R_OPS = {
    "add": (0, 0x00), "sub": (0, 0x20), "sll": (1, 0x00), "slt": (2, 0x00),
    "sltu": (3, 0x00), "xor": (4, 0x00), "srl": (5, 0x00), "sra": (5, 0x20),
    "or": (6, 0x00), "and": (7, 0x00),
    "mul": (0, 0x01), "mulh": (1, 0x01), "mulhsu": (2, 0x01),
    "mulhu": (3, 0x01), "div": (4, 0x01), "divu": (5, 0x01),
    "rem": (6, 0x01), "remu": (7, 0x01),
}
I_OPS = {"addi": 0, "slti": 2, "sltiu": 3, "xori": 4, "ori": 6, "andi": 7}
SHIFT_OPS = {"slli": (1, 0x00), "srli": (5, 0x00), "srai": (5, 0x20)}
LOAD_OPS = {"lb": 0, "lh": 1, "lw": 2, "lbu": 4, "lhu": 5}
STORE_OPS = {"sb": 0, "sh": 1, "sw": 2}
BRANCH_OPS = {"beq": 0, "bne": 1, "blt": 4, "bge": 5, "bltu": 6, "bgeu": 7}
ZOL_OPS = {"dlp": 0, "dlpi": 1, "zlp": 2, "set.zc": 4, "set.zs": 5, "set.ze": 6}

M_OPS = frozenset({"mul", "mulh", "mulhsu", "mulhu", "div", "divu", "rem", "remu"})
ZOL_KINDS = frozenset(ZOL_OPS)
CUSTOM_KINDS = frozenset({"mac", "add2i", "fusedmac"}) | ZOL_KINDS

BASE_KINDS = (
    frozenset(R_OPS) | frozenset(I_OPS) | frozenset(SHIFT_OPS)
    | frozenset(LOAD_OPS) | frozenset(STORE_OPS) | frozenset(BRANCH_OPS)
    | frozenset({"lui", "auipc", "jal", "jalr", "fence", "ecall", "ebreak"})
)
ALL_KINDS = BASE_KINDS | CUSTOM_KINDS

# Distinguished decode result for words outside the encoding image.
ILLEGAL = "illegal"

# Control-flow classification used by the simulator, assembler and rewriter.
BRANCH_KINDS = frozenset(BRANCH_OPS)
JUMP_KINDS = frozenset({"jal", "jalr"})
ZOL_SETUP_WITH_OFFSET = frozenset({"dlp", "dlpi", "zlp"})

DLPI_COUNT_MAX = 1023       # 10-bit unsigned count field
ZOL_OFFSET_MIN = -2048      # 12-bit signed word offset
ZOL_OFFSET_MAX = 2047


class Variant(IntEnum):
    """Processor variants, cumulative from the RV32IM baseline."""

    V0 = 0  # baseline RV32IM
    V1 = 1  # + mac
    V2 = 2  # + add2i
    V3 = 3  # + fusedmac
    V4 = 4  # + zero-overhead hardware loops

    @classmethod
    def parse(cls, text: str) -> "Variant":
        t = text.strip().lower()
        if t in _VARIANT_NAMES:
            return _VARIANT_NAMES[t]
        raise ValueError(f"unknown variant {text!r}; expected one of v0..v4")

    def __str__(self) -> str:
        return f"v{int(self)}"


_VARIANT_NAMES = {f"v{i}": Variant(i) for i in range(5)}

VARIANT_DESCRIPTIONS = {
    Variant.V0: "baseline RV32IM core",
    Variant.V1: "v0 + mac (fused multiply-accumulate on x20/x21/x22)",
    Variant.V2: "v1 + add2i (dual immediate increment)",
    Variant.V3: "v2 + fusedmac (mac plus dual increment in one instruction)",
    Variant.V4: "v3 + zero-overhead hardware loops (dlp/dlpi/zlp/set.zc/set.zs/set.ze)",
}


def extensions_of(variant: Variant) -> frozenset:
    """Custom instruction kinds enabled at `variant` (cumulative ladder)."""
    exts = set()
    if variant >= Variant.V1:
        exts.add("mac")
    if variant >= Variant.V2:
        exts.add("add2i")
    if variant >= Variant.V3:
        exts.add("fusedmac")
    if variant >= Variant.V4:
        exts |= ZOL_KINDS
    return frozenset(exts)


def required_variant(kind: str) -> Variant:
    """Minimum variant at which a custom kind is legal (V0 for base kinds)."""
    if kind == "mac":
        return Variant.V1
    if kind == "add2i":
        return Variant.V2
    if kind == "fusedmac":
        return Variant.V3
    if kind in ZOL_KINDS:
        return Variant.V4
    return Variant.V0


class EncodingError(ValueError):
    pass


def _check_reg(name, value):
    if value is None or not 0 <= value <= 31:
        raise ValueError(f"{name} must be a register index 0..31, got {value}")


def _check_range(name, value, lo, hi):
    if value is None or not lo <= value <= hi:
        raise ValueError(f"{name} out of range [{lo}, {hi}]: {value}")


@dataclass(frozen=True)
class Instruction:
    """One decoded instruction.

    Field use depends on `kind`.  `imm` is the standard immediate (for
    branches/jal it is the resolved pc-relative byte offset, for dlpi the
    iteration count).  `offset` is the pc-relative word offset of the zol
    setup forms.  `i1`/`i2` are the dual increments of add2i/fusedmac.
    For kind "illegal", `imm` holds the raw undecodable word.
    """

    kind: str
    rd: int | None = None
    rs1: int | None = None
    rs2: int | None = None
    imm: int | None = None
    i1: int | None = None
    i2: int | None = None
    offset: int | None = None

    def __post_init__(self):
        k = self.kind
        if k in R_OPS:
            _check_reg("rd", self.rd)
            _check_reg("rs1", self.rs1)
            _check_reg("rs2", self.rs2)
        elif k in I_OPS or k in LOAD_OPS or k == "jalr":
            _check_reg("rd", self.rd)
            _check_reg("rs1", self.rs1)
            _check_range("imm", self.imm, -2048, 2047)
        elif k in SHIFT_OPS:
            _check_reg("rd", self.rd)
            _check_reg("rs1", self.rs1)
            _check_range("shamt", self.imm, 0, 31)
        elif k in STORE_OPS:
            _check_reg("rs1", self.rs1)
            _check_reg("rs2", self.rs2)
            _check_range("imm", self.imm, -2048, 2047)
        elif k in BRANCH_OPS:
            _check_reg("rs1", self.rs1)
            _check_reg("rs2", self.rs2)
            _check_range("imm", self.imm, -4096, 4094)
            if self.imm % 2:
                raise ValueError(f"branch offset must be even: {self.imm}")
        elif k in ("lui", "auipc"):
            _check_reg("rd", self.rd)
            _check_range("imm", self.imm, 0, 0xFFFFF)
        elif k == "jal":
            _check_reg("rd", self.rd)
            _check_range("imm", self.imm, -(1 << 20), (1 << 20) - 2)
            if self.imm % 2:
                raise ValueError(f"jump offset must be even: {self.imm}")
        elif k in ("fence", "ecall", "ebreak", "mac"):
            pass  # no operand fields
        elif k in ("add2i", "fusedmac"):
            _check_reg("rs1", self.rs1)
            _check_reg("rs2", self.rs2)
            _check_range("i1", self.i1, 0, 31)
            _check_range("i2", self.i2, 0, 1023)
        elif k in ("dlp", "dlpi", "zlp"):
            if k == "dlp":
                _check_reg("rs1", self.rs1)
            if k == "dlpi":
                _check_range("count", self.imm, 0, DLPI_COUNT_MAX)
            _check_range("offset", self.offset, ZOL_OFFSET_MIN, ZOL_OFFSET_MAX)
        elif k in ("set.zc", "set.zs", "set.ze"):
            _check_reg("rs1", self.rs1)
        elif k == ILLEGAL:
            pass
        else:
            raise ValueError(f"unknown instruction kind {k!r}")


def _sext(value: int, bits: int) -> int:
    sign = 1 << (bits - 1)
    return (value & (sign - 1)) - (value & sign)


def encode(inst: Instruction) -> int:
    """Encode to a 32-bit word.  Raises EncodingError on out-of-range fields
    (Instruction construction already enforces them; this guards hand-built
    values that bypassed validation, e.g. via dataclasses.replace)."""
    k = inst.kind
    if k in R_OPS:
        f3, f7 = R_OPS[k]
        return (f7 << 25) | (inst.rs2 << 20) | (inst.rs1 << 15) | (f3 << 12) \
            | (inst.rd << 7) | OPC_OP
    if k in I_OPS:
        return _enc_i(I_OPS[k], inst.rd, inst.rs1, inst.imm, OPC_OP_IMM)
    if k in SHIFT_OPS:
        f3, f7 = SHIFT_OPS[k]
        if not 0 <= inst.imm <= 31:
            raise EncodingError(f"shamt out of range: {inst.imm}")
        return (f7 << 25) | (inst.imm << 20) | (inst.rs1 << 15) | (f3 << 12) \
            | (inst.rd << 7) | OPC_OP_IMM
    if k in LOAD_OPS:
        return _enc_i(LOAD_OPS[k], inst.rd, inst.rs1, inst.imm, OPC_LOAD)
    if k == "jalr":
        return _enc_i(0, inst.rd, inst.rs1, inst.imm, OPC_JALR)
    if k in STORE_OPS:
        imm = inst.imm
        if not -2048 <= imm <= 2047:
            raise EncodingError(f"imm out of range: {imm}")
        imm &= 0xFFF
        return ((imm >> 5) << 25) | (inst.rs2 << 20) | (inst.rs1 << 15) \
            | (STORE_OPS[k] << 12) | ((imm & 0x1F) << 7) | OPC_STORE
    if k in BRANCH_OPS:
        imm = inst.imm
        if not -4096 <= imm <= 4094 or imm % 2:
            raise EncodingError(f"branch offset out of range: {imm}")
        imm &= 0x1FFF
        return (((imm >> 12) & 1) << 31) | (((imm >> 5) & 0x3F) << 25) \
            | (inst.rs2 << 20) | (inst.rs1 << 15) | (BRANCH_OPS[k] << 12) \
            | (((imm >> 1) & 0xF) << 8) | (((imm >> 11) & 1) << 7) | OPC_BRANCH
    if k == "lui" or k == "auipc":
        if not 0 <= inst.imm <= 0xFFFFF:
            raise EncodingError(f"imm out of range: {inst.imm}")
        return (inst.imm << 12) | (inst.rd << 7) | (OPC_LUI if k == "lui" else OPC_AUIPC)
    if k == "jal":
        imm = inst.imm
        if not -(1 << 20) <= imm <= (1 << 20) - 2 or imm % 2:
            raise EncodingError(f"jump offset out of range: {imm}")
        imm &= 0x1FFFFF
        return (((imm >> 20) & 1) << 31) | (((imm >> 1) & 0x3FF) << 21) \
            | (((imm >> 11) & 1) << 20) | (((imm >> 12) & 0xFF) << 12) \
            | (inst.rd << 7) | OPC_JAL
    if k == "fence":
        return OPC_MISC_MEM
    if k == "ecall":
        return OPC_SYSTEM
    if k == "ebreak":
        return (1 << 20) | OPC_SYSTEM
    if k == "mac":
        return OPC_MAC
    if k in ("add2i", "fusedmac"):
        if not 0 <= inst.i1 <= 31:
            raise EncodingError(f"i1 out of range 0..31: {inst.i1}")
        if not 0 <= inst.i2 <= 1023:
            raise EncodingError(f"i2 out of range 0..1023: {inst.i2}")
        opc = OPC_ADD2I if k == "add2i" else OPC_FUSEDMAC
        return ((inst.i2 & 0x7F) << 25) | (inst.rs2 << 20) | (inst.rs1 << 15) \
            | ((inst.i2 >> 7) << 12) | (inst.i1 << 7) | opc
    if k in ZOL_OPS:
        f3 = ZOL_OPS[k]
        word = (f3 << 12) | OPC_ZOL
        if k in ZOL_SETUP_WITH_OFFSET:
            off = inst.offset
            if not ZOL_OFFSET_MIN <= off <= ZOL_OFFSET_MAX:
                raise EncodingError(f"offset out of range: {off}")
            off &= 0xFFF
            word |= ((off >> 5) << 25) | ((off & 0x1F) << 7)
        if k == "dlp" or k in ("set.zc", "set.zs", "set.ze"):
            word |= inst.rs1 << 15
        if k == "dlpi":
            if not 0 <= inst.imm <= DLPI_COUNT_MAX:
                raise EncodingError(f"count out of range 0..{DLPI_COUNT_MAX}: {inst.imm}")
            word |= inst.imm << 15
        return word
    raise EncodingError(f"cannot encode kind {k!r}")


def _enc_i(f3, rd, rs1, imm, opc):
    if not -2048 <= imm <= 2047:
        raise EncodingError(f"imm out of range: {imm}")
    return ((imm & 0xFFF) << 20) | (rs1 << 15) | (f3 << 12) | (rd << 7) | opc


_R_DECODE = {(f3, f7): k for k, (f3, f7) in R_OPS.items()}
_I_DECODE = {f3: k for k, f3 in I_OPS.items()}
_LOAD_DECODE = {f3: k for k, f3 in LOAD_OPS.items()}
_STORE_DECODE = {f3: k for k, f3 in STORE_OPS.items()}
_BRANCH_DECODE = {f3: k for k, f3 in BRANCH_OPS.items()}
_ZOL_DECODE = {f3: k for k, f3 in ZOL_OPS.items()}


def _illegal(word: int) -> Instruction:
    return Instruction(ILLEGAL, imm=word)


def decode(word: int) -> Instruction:
    """Decode a 32-bit word.  Words outside the encode image decode to the
    distinguished `illegal` kind; the simulator traps on executing it."""
    word &= MASK32
    opc = word & 0x7F
    rd = (word >> 7) & 0x1F
    f3 = (word >> 12) & 0x7
    rs1 = (word >> 15) & 0x1F
    rs2 = (word >> 20) & 0x1F
    f7 = word >> 25

    if opc == OPC_OP:
        kind = _R_DECODE.get((f3, f7))
        if kind is None:
            return _illegal(word)
        return Instruction(kind, rd=rd, rs1=rs1, rs2=rs2)
    if opc == OPC_OP_IMM:
        if f3 in (1, 5):
            shamt = rs2
            for kind, (kf3, kf7) in SHIFT_OPS.items():
                if kf3 == f3 and kf7 == f7:
                    return Instruction(kind, rd=rd, rs1=rs1, imm=shamt)
            return _illegal(word)
        return Instruction(_I_DECODE[f3], rd=rd, rs1=rs1, imm=_sext(word >> 20, 12))
    if opc == OPC_LOAD:
        kind = _LOAD_DECODE.get(f3)
        if kind is None:
            return _illegal(word)
        return Instruction(kind, rd=rd, rs1=rs1, imm=_sext(word >> 20, 12))
    if opc == OPC_STORE:
        kind = _STORE_DECODE.get(f3)
        if kind is None:
            return _illegal(word)
        imm = _sext((f7 << 5) | rd, 12)
        return Instruction(kind, rs1=rs1, rs2=rs2, imm=imm)
    if opc == OPC_BRANCH:
        kind = _BRANCH_DECODE.get(f3)
        if kind is None:
            return _illegal(word)
        imm = (((word >> 31) & 1) << 12) | (((word >> 7) & 1) << 11) \
            | (((word >> 25) & 0x3F) << 5) | (((word >> 8) & 0xF) << 1)
        return Instruction(kind, rs1=rs1, rs2=rs2, imm=_sext(imm, 13))
    if opc == OPC_LUI:
        return Instruction("lui", rd=rd, imm=word >> 12)
    if opc == OPC_AUIPC:
        return Instruction("auipc", rd=rd, imm=word >> 12)
    if opc == OPC_JAL:
        imm = (((word >> 31) & 1) << 20) | (((word >> 12) & 0xFF) << 12) \
            | (((word >> 20) & 1) << 11) | (((word >> 21) & 0x3FF) << 1)
        return Instruction("jal", rd=rd, imm=_sext(imm, 21))
    if opc == OPC_JALR:
        if f3 != 0:
            return _illegal(word)
        return Instruction("jalr", rd=rd, rs1=rs1, imm=_sext(word >> 20, 12))
    if opc == OPC_MISC_MEM:
        if f3 != 0:
            return _illegal(word)
        return Instruction("fence")
    if opc == OPC_SYSTEM:
        if word == OPC_SYSTEM:
            return Instruction("ecall")
        if word == (1 << 20) | OPC_SYSTEM:
            return Instruction("ebreak")
        return _illegal(word)
    if opc == OPC_MAC:
        if word != OPC_MAC:
            return _illegal(word)
        return Instruction("mac")
    if opc in (OPC_ADD2I, OPC_FUSEDMAC):
        kind = "add2i" if opc == OPC_ADD2I else "fusedmac"
        return Instruction(kind, rs1=rs1, rs2=rs2, i1=rd, i2=(f3 << 7) | f7)
    if opc == OPC_ZOL:
        kind = _ZOL_DECODE.get(f3)
        if kind is None:
            return _illegal(word)
        off = _sext((f7 << 5) | rd, 12)
        if kind == "dlp":
            if rs2 != 0:
                return _illegal(word)
            return Instruction(kind, rs1=rs1, offset=off)
        if kind == "dlpi":
            return Instruction(kind, imm=(rs2 << 5) | rs1, offset=off)
        if kind == "zlp":
            if rs1 != 0 or rs2 != 0:
                return _illegal(word)
            return Instruction(kind, offset=off)
        # set.zc / set.zs / set.ze: only rs1 carries information
        if rd != 0 or rs2 != 0 or f7 != 0:
            return _illegal(word)
        return Instruction(kind, rs1=rs1)
    return _illegal(word)
