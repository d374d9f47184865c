"""Profitability-gated peephole and loop rewrites targeting the custom ISA.

Four rules, applied in a fixed order when enabled by the target variant:

  mac_rule       mul t,a,b; add c,c,t (t dead afterwards) -> mac, renaming
                 a/b/c onto the hardwired x21/x22/x20 inside the enclosing
                 innermost loop; loop-invariant operands are established by
                 moves hoisted to the loop preheader and the accumulator is
                 moved back after the loop when it is live out.
  add2i_rule     adjacent register increments addi x,x,i1; addi y,y,i2
                 (x != y) -> add2i, swapping operand order when that is what
                 makes the immediates fit the 5/10-bit fields.
  fusedmac_rule  adjacent mac and add2i whose increments do not touch
                 x20..x22 -> fusedmac.
  zol_rule       innermost counted blt loops with a compile-time trip count,
                 a branch-free body, and an induction register that is dead
                 after the loop and unused inside the body -> dlpi (or
                 li+set.zc+zlp when the count exceeds dlpi's field); the
                 induction addi and the backedge are deleted.

Every rule fires only when its estimated dynamic cycle delta under the
active cycle model is negative, so cycle counts are non-increasing along
the variant ladder.  Liveness reasoning is block-local with loop-level
summaries and deliberately conservative: a rewrite is skipped whenever the
required dead-register or single-entry condition cannot be proven.  Dynamic
jumps (jalr) are assumed not to target the interior of rewritten regions;
generated kernels contain none.

Rewrites never change the observable outcome: the data-memory image and
every register outside the reported clobber set (x20..x22 scratch, renamed
loop temporaries, deleted induction counters) are identical between the
original and rewritten programs.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .asm import Program, from_items, to_items
from .isa import (
    BRANCH_OPS, DLPI_COUNT_MAX, I_OPS, LOAD_OPS, R_OPS, SHIFT_OPS, STORE_OPS,
    ZOL_KINDS, ZOL_SETUP_WITH_OFFSET, Instruction, Variant,
)
from .sim import CycleModel, check_extensions

Item = tuple  # (Instruction, target index | None)

RULE_ORDER = ("mac_rule", "add2i_rule", "fusedmac_rule", "zol_rule")


@dataclass
class RuleStats:
    matched: int = 0
    applied: int = 0
    estimated_cycles_saved: int = 0

    def to_dict(self) -> dict:
        return {"matched": self.matched, "applied": self.applied,
                "estimated_cycles_saved": self.estimated_cycles_saved}


@dataclass
class RewriteStats:
    rules: dict = field(default_factory=lambda: {r: RuleStats() for r in RULE_ORDER})
    clobbered_regs: set = field(default_factory=set)

    def to_dict(self) -> dict:
        return {
            "rules": {name: rs.to_dict() for name, rs in self.rules.items()},
            "clobbered_regs": sorted(self.clobbered_regs),
        }


def _reads(inst: Instruction) -> tuple:
    k = inst.kind
    if k in R_OPS:
        return (inst.rs1, inst.rs2)
    if k in I_OPS or k in SHIFT_OPS or k in LOAD_OPS or k == "jalr":
        return (inst.rs1,)
    if k in STORE_OPS or k in BRANCH_OPS:
        return (inst.rs1, inst.rs2)
    if k == "mac":
        return (20, 21, 22)
    if k == "add2i":
        return (inst.rs1, inst.rs2)
    if k == "fusedmac":
        return (20, 21, 22, inst.rs1, inst.rs2)
    if k == "dlp" or k in ("set.zc", "set.zs", "set.ze"):
        return (inst.rs1,)
    return ()


def _writes(inst: Instruction) -> tuple:
    k = inst.kind
    if k in R_OPS or k in I_OPS or k in SHIFT_OPS or k in LOAD_OPS \
            or k in ("lui", "auipc", "jal", "jalr"):
        return (inst.rd,)
    if k == "mac":
        return (20,)
    if k == "add2i":
        return (inst.rs1, inst.rs2)
    if k == "fusedmac":
        return (20, inst.rs1, inst.rs2)
    return ()


def _edges(items: list[Item]) -> list[tuple[int, int]]:
    """Static control-flow edges (src, dst), including the hardware
    back-jump of zol setups as (loop_end, loop_start)."""
    out = []
    for j, (inst, target) in enumerate(items):
        if target is None:
            continue
        if inst.kind in BRANCH_OPS or inst.kind == "jal":
            out.append((j, target))
        elif inst.kind in ZOL_SETUP_WITH_OFFSET:
            out.append((target, j + 1))
    return out


def _leaders(items: list[Item]) -> set[int]:
    """Basic-block leaders: multi-instruction windows must not contain one
    strictly inside."""
    leaders = {0}
    for j, (inst, target) in enumerate(items):
        k = inst.kind
        if k in BRANCH_OPS or k == "jal" or k == "jalr":
            leaders.add(j + 1)
            if target is not None:
                leaders.add(target)
        elif k in ZOL_SETUP_WITH_OFFSET:
            leaders.add(j + 1)
            leaders.add(target + 1)
    return leaders


@dataclass
class LoopShape:
    start: int               # first body instruction
    backedge: int            # index of the blt
    induction: int           # register tested by the backedge
    bound_reg: int
    induction_pos: int | None  # index of the single addi r,r,step, if any
    step: int | None
    init: int | None
    bound: int | None
    trip: int | None
    body_branch_free: bool
    body_cf_internal: bool   # body branches stay within [start, backedge]
    single_entry: bool       # nothing but the backedge targets [start..backedge]


def _first_access(items: list[Item], start: int, stop: int, reg: int) -> str | None:
    """Linear first access of reg in [start, stop): 'r', 'w' or None.
    Instructions that both read and write report the read."""
    if reg == 0:
        return None
    for j in range(max(start, 0), min(stop, len(items))):
        inst = items[j][0]
        if reg in _reads(inst):
            return "r"
        if reg in _writes(inst):
            return "w"
    return None


def _local_const_before(items: list[Item], reg: int, idx: int,
                        leaders: set[int]) -> int | None:
    """Constant value of reg on entry to idx, proven by scanning backwards
    to an adjacent li (addi reg,x0,C or lui+addi pair); gives up at any
    control flow or block leader."""
    j = idx - 1
    while j >= 0:
        inst, target = items[j]
        if reg in _writes(inst):
            if inst.kind == "addi" and inst.rs1 == 0 and inst.rd == reg:
                return inst.imm
            if inst.kind == "addi" and inst.rs1 == reg and inst.rd == reg and j > 0:
                prev = items[j - 1][0]
                if prev.kind == "lui" and prev.rd == reg:
                    v = ((prev.imm << 12) + inst.imm) & 0xFFFFFFFF
                    return v - 0x100000000 if v >= 0x80000000 else v
            return None
        if target is not None or inst.kind in ("jalr", "ecall", "ebreak"):
            return None
        if j in leaders:
            return None
        j -= 1
    return None


def _wrap_signed(v: int) -> int:
    v &= 0xFFFFFFFF
    return v - 0x100000000 if v >= 0x80000000 else v


def constant_map(items: list[Item], entry: int = 0) -> list[dict | None]:
    """Forward constant propagation: result[i] maps register -> known
    constant on every path reaching instruction i (None = unreachable).
    Registers are assumed unknown at entry; only li/lui/addi chains
    propagate values.  jalr has no modeled successors (dynamic jumps into
    analyzed regions are outside the rewriter's contract)."""
    n = len(items)
    succs: list[list[int]] = [[] for _ in range(n)]
    for i, (inst, target) in enumerate(items):
        k = inst.kind
        if k in BRANCH_OPS:
            succs[i] = [i + 1, target]
        elif k == "jal":
            succs[i] = [target]
        elif k in ("jalr", "ecall", "ebreak", "fence") or k == "illegal":
            succs[i] = []
        elif k in ZOL_SETUP_WITH_OFFSET:
            succs[i] = [i + 1]
            if 0 <= target < n:
                succs[target].append(i + 1)  # hardware back-jump ZE -> ZS
        else:
            succs[i] = [i + 1]
    for i in range(n):
        succs[i] = [s for s in succs[i] if 0 <= s < n]

    state: list[dict | None] = [None] * n
    state[entry] = {}
    work = [entry]
    while work:
        i = work.pop()
        inst = items[i][0]
        out = dict(state[i])
        k = inst.kind
        if k == "addi":
            src = 0 if inst.rs1 == 0 else None
            if inst.rs1 in out:
                src = out[inst.rs1]
            if inst.rd:
                if src is not None:
                    out[inst.rd] = _wrap_signed(src + inst.imm)
                else:
                    out.pop(inst.rd, None)
        elif k == "lui":
            if inst.rd:
                out[inst.rd] = _wrap_signed(inst.imm << 12)
        else:
            for w in _writes(inst):
                out.pop(w, None)
        for s in succs[i]:
            cur = state[s]
            if cur is None:
                state[s] = dict(out)
                work.append(s)
            else:
                merged = {r: v for r, v in cur.items()
                          if r in out and out[r] == v}
                if merged != cur:
                    state[s] = merged
                    work.append(s)
    return state


def _trip_count(init: int, bound: int, step: int) -> int:
    # bottom-tested loop: the body runs once, then while induction < bound
    if bound <= init:
        return 1
    return -(-(bound - init) // step)


def find_loops(items: list[Item], entry: int = 0) -> list[LoopShape]:
    """All backward-blt loops with their induction/trip-count analysis."""
    edges = _edges(items)
    leaders = _leaders(items)
    consts = constant_map(items, entry)
    loops = []
    for e, (inst, target) in enumerate(items):
        if inst.kind != "blt" or target is None or target > e:
            continue
        s = target
        rI, rB = inst.rs1, inst.rs2

        body = range(s, e)
        branch_free = True
        cf_internal = True
        for j in body:
            bj, tj = items[j]
            if bj.kind in BRANCH_OPS or bj.kind == "jal":
                branch_free = False
                if tj is None or not s <= tj <= e:
                    cf_internal = False
            elif bj.kind == "jalr" or bj.kind in ZOL_KINDS:
                branch_free = False
                cf_internal = False

        single_entry = True
        for (j, t) in edges:
            if s <= t <= e and not (s <= j <= e):
                single_entry = False
            if t == s and j != e:
                single_entry = False

        ind_pos = None
        step = None
        writes = [j for j in body if rI in _writes(items[j][0])]
        if len(writes) == 1:
            j = writes[0]
            cand = items[j][0]
            if cand.kind == "addi" and cand.rd == rI and cand.rs1 == rI \
                    and cand.imm > 0:
                ind_pos = j
                step = cand.imm

        init = _local_const_before(items, rI, s, leaders) if ind_pos is not None else None
        bound = None
        if init is not None:
            at_loop = consts[s] if s < len(consts) else None
            if at_loop is not None and rB in at_loop:
                bound = at_loop[rB]
            elif rB == 0:
                bound = 0
            else:
                bound = _local_const_before(items, rB, s, leaders)
        trip = None
        if init is not None and bound is not None and step:
            trip = _trip_count(init, bound, step)

        loops.append(LoopShape(
            start=s, backedge=e, induction=rI, bound_reg=rB,
            induction_pos=ind_pos, step=step, init=init, bound=bound,
            trip=trip, body_branch_free=branch_free,
            body_cf_internal=cf_internal, single_entry=single_entry))
    return loops


def _enclosing(loops: list[LoopShape], i: int) -> list[LoopShape]:
    """Loops whose span contains index i, innermost first."""
    inside = [L for L in loops if L.start <= i <= L.backedge]
    inside.sort(key=lambda L: (L.backedge - L.start))
    return inside


def _freq(loops: list[LoopShape], i: int) -> int:
    f = 1
    for L in _enclosing(loops, i):
        f *= L.trip if L.trip else 1
    return f


def _dead_after(items: list[Item], loops: list[LoopShape], reg: int,
                nxt: int, wrap_from: int | None, wrap_to: int | None) -> bool:
    """Conservative: reg is dead if no path reads it before writing it.
    Checks the linear suffix and, when inside a loop, the wrap-around
    segment [wrap_from, wrap_to)."""
    if reg == 0:
        return True
    if _first_access(items, nxt, len(items), reg) == "r":
        return False
    if wrap_from is not None and \
            _first_access(items, wrap_from, wrap_to, reg) == "r":
        return False
    return True


def _rename_reg(inst: Instruction, mapping: dict[int, int]) -> Instruction:
    kw = {}
    for f in ("rd", "rs1", "rs2"):
        v = getattr(inst, f)
        if v is not None and v in mapping:
            kw[f] = mapping[v]
    return replace(inst, **kw) if kw else inst


def _edit(items: list[Item], labels: dict, meta: list[int],
          deletions: set[int], insertions: dict[int, list[Item]],
          replacements: dict[int, Item]):
    """Apply deletions/insertions/replacements; all targets are given as
    old indices and remapped.  insertions[i] go before old index i; an
    insertion key of len(items) appends."""
    index_map: dict[int, int] = {}
    new: list[Item] = []
    new_meta: list[int] = []
    pending: list[tuple[Item, int]] = []  # (item, meta line)

    for i in range(len(items) + 1):
        for ins in insertions.get(i, ()):
            line = meta[i] if i < len(meta) else 0
            pending.append((ins, line))
        if i == len(items):
            break
        if i in deletions:
            continue
        for item, line in pending:
            new.append(item)
            new_meta.append(line)
        pending.clear()
        index_map[i] = len(new)
        new.append(replacements.get(i, items[i]))
        new_meta.append(meta[i] if i < len(meta) else 0)
    for item, line in pending:
        new.append(item)
        new_meta.append(line)

    remapped: list[Item] = []
    for inst, target in new:
        if target is None:
            remapped.append((inst, None))
        else:
            if target not in index_map:
                raise ValueError(f"rewrite dangling target {target}")
            remapped.append((inst, index_map[target]))
    new_labels = {name: index_map[idx] for name, idx in labels.items()
                  if idx in index_map}
    return remapped, new_labels, new_meta


def _mv(rd: int, rs: int) -> Item:
    return (Instruction("addi", rd=rd, rs1=rs, imm=0), None)


# -- mac rule ----------------------------------------------------------------

def _match_mac_window(items: list[Item], i: int):
    m = items[i][0]
    a = items[i + 1][0]
    if m.kind != "mul" or a.kind != "add":
        return None
    if a.rd != a.rs1 or a.rs2 != m.rd or m.rd == a.rd:
        return None
    return (m.rd, m.rs1, m.rs2, a.rd)  # t, a, b, c


def _try_mac(items, labels, meta, i, loops, leaders, model, stats):
    matched = _match_mac_window(items, i)
    if matched is None:
        return None
    t, a, b, c = matched
    if (i + 1) in leaders:
        return None
    cost = model.cost
    saving = cost("mul") + cost("add") - cost("mac")
    if saving <= 0:
        return None

    enclosing = _enclosing(loops, i)
    enclosing = [L for L in enclosing if L.start <= i and i + 1 <= L.backedge - 1]
    outer_start = enclosing[-1].start if enclosing else None

    # Exact hardwired placement: no renaming, no moves.
    if (c, a, b) == (20, 21, 22):
        if not _dead_after(items, loops, t, i + 2, outer_start, i):
            return None
        mac_item = (Instruction("mac"), None)
        out = _edit(items, labels, meta, {i + 1}, {}, {i: mac_item})
        stats.applied += 1
        stats.estimated_cycles_saved += saving * _freq(loops, i)
        return out, {t}

    # Renaming inside the innermost enclosing loop.
    if not enclosing:
        return None
    L = enclosing[0]
    s, e = L.start, L.backedge
    if not L.single_entry or not L.body_cf_internal:
        return None
    if len({a, b, c, t}) != 4 or 0 in (a, b, c, t):
        return None
    # sources must not collide with hardwired registers except in place
    if (a in (20, 21, 22) and a != 21) or (b in (20, 21, 22) and b != 22) \
            or (c in (20, 21, 22) and c != 20):
        return None
    mapping = {src: dst for src, dst in ((c, 20), (a, 21), (b, 22)) if src != dst}
    if not mapping:
        return None

    # hardwired targets free inside the loop span (outside the window) and
    # dead beyond it
    for dst in mapping.values():
        for j in range(s, e + 1):
            if j in (i, i + 1):
                continue
            inst = items[j][0]
            if dst in _reads(inst) or dst in _writes(inst):
                return None
        if not _dead_after(items, loops, dst, e + 1, outer_start, s):
            return None

    if not _dead_after(items, loops, t, i + 2, outer_start, i):
        return None
    # t must not be read elsewhere in the body either (only the window add)
    if _first_access(items, s, i, t) == "r":
        return None

    moves_pre: list[Item] = []
    moves_post: list[Item] = []
    clobbered = {t} | set(mapping.values())
    for src, dst in sorted(mapping.items(), key=lambda kv: kv[1]):
        fa = _first_access(items, s, i, src)
        live_in = fa != "w"  # read first, or first touched by the window
        if live_in:
            moves_pre.append(_mv(dst, src))
        live_out = not _dead_after(items, loops, src, e + 1, outer_start, s)
        if live_out:
            if src == c:
                moves_post.append(_mv(src, dst))
            else:
                return None  # no move-back scheme for multiplier operands
        else:
            clobbered.add(src)

    nmoves = len(moves_pre) + len(moves_post)
    if not L.body_branch_free and nmoves:
        return None  # the window may be skipped dynamically; only free wins
    if L.trip is None:
        if nmoves:
            return None
    elif nmoves * cost("addi") >= L.trip * saving:
        return None

    mapping_items: dict[int, Item] = {}
    for j in range(s, e + 1):
        inst, target = items[j]
        if j == i or j == i + 1:
            continue
        renamed = _rename_reg(inst, mapping)
        if renamed is not inst:
            mapping_items[j] = (renamed, target)
    mapping_items[i] = (Instruction("mac"), None)

    insertions = {}
    if moves_pre:
        insertions[s] = moves_pre
    if moves_post:
        insertions[e + 1] = moves_post
    out = _edit(items, labels, meta, {i + 1}, insertions, mapping_items)
    stats.applied += 1
    entry_freq = _freq(loops, s) // (L.trip if L.trip else 1)
    stats.estimated_cycles_saved += (saving * _freq(loops, i)
                                     - nmoves * cost("addi") * entry_freq)
    return out, clobbered


def apply_mac(prog: Program, model: CycleModel | None = None):
    """Fuse accumulator mul+add pairs into mac (see module docstring)."""
    if model is None:
        model = CycleModel()
    items = to_items(prog)
    labels, meta = dict(prog.labels), list(prog.meta)
    stats = RuleStats()
    for i in range(len(items) - 1):
        if _match_mac_window(items, i):
            stats.matched += 1
    clobbered: set[int] = set()
    changed = True
    while changed:
        changed = False
        loops = find_loops(items, prog.entry)
        leaders = _leaders(items)
        for i in range(len(items) - 1):
            res = _try_mac(items, labels, meta, i, loops, leaders, model, stats)
            if res is not None:
                (items, labels, meta), clob = res
                clobbered |= clob
                changed = True
                break
    out = from_items(items, labels, prog.data, prog.data_base, prog.entry, meta)
    return out, stats, clobbered


# -- add2i rule --------------------------------------------------------------

def _match_add2i_window(items: list[Item], i: int):
    a = items[i][0]
    b = items[i + 1][0]
    if a.kind != "addi" or b.kind != "addi":
        return None
    if a.rd != a.rs1 or b.rd != b.rs1 or a.rd == b.rd:
        return None
    return (a.rd, a.imm, b.rd, b.imm)


def apply_add2i(prog: Program, model: CycleModel | None = None):
    """Fuse adjacent independent register increments into add2i."""
    if model is None:
        model = CycleModel()
    cost = model.cost
    saving = 2 * cost("addi") - cost("add2i")
    items = to_items(prog)
    labels, meta = dict(prog.labels), list(prog.meta)
    stats = RuleStats()
    for i in range(len(items) - 1):
        if _match_add2i_window(items, i):
            stats.matched += 1
    changed = saving > 0
    while changed:
        changed = False
        leaders = _leaders(items)
        loops = find_loops(items, prog.entry)
        for i in range(len(items) - 1):
            m = _match_add2i_window(items, i)
            if m is None or (i + 1) in leaders:
                continue
            x, i1, y, i2 = m
            if 0 <= i1 <= 31 and 0 <= i2 <= 1023:
                fused = Instruction("add2i", rs1=x, rs2=y, i1=i1, i2=i2)
            elif 0 <= i2 <= 31 and 0 <= i1 <= 1023:
                fused = Instruction("add2i", rs1=y, rs2=x, i1=i2, i2=i1)
            else:
                continue
            stats.applied += 1
            stats.estimated_cycles_saved += saving * _freq(loops, i)
            items, labels, meta = _edit(items, labels, meta, {i + 1}, {},
                                        {i: (fused, None)})
            changed = True
            break
    out = from_items(items, labels, prog.data, prog.data_base, prog.entry, meta)
    return out, stats, set()


# -- fusedmac rule -----------------------------------------------------------

def _match_fusedmac_window(items: list[Item], i: int):
    a = items[i][0]
    b = items[i + 1][0]
    if a.kind == "mac" and b.kind == "add2i":
        inc = b
    elif a.kind == "add2i" and b.kind == "mac":
        inc = a
    else:
        return None
    if inc.rs1 in (20, 21, 22) or inc.rs2 in (20, 21, 22):
        return None  # increments must not touch the mac unit's registers
    return inc


def apply_fusedmac(prog: Program, model: CycleModel | None = None):
    """Fuse adjacent mac + add2i (either order) into fusedmac."""
    if model is None:
        model = CycleModel()
    cost = model.cost
    saving = cost("mac") + cost("add2i") - cost("fusedmac")
    items = to_items(prog)
    labels, meta = dict(prog.labels), list(prog.meta)
    stats = RuleStats()
    for i in range(len(items) - 1):
        if _match_fusedmac_window(items, i):
            stats.matched += 1
    changed = saving > 0
    while changed:
        changed = False
        leaders = _leaders(items)
        loops = find_loops(items, prog.entry)
        for i in range(len(items) - 1):
            inc = _match_fusedmac_window(items, i)
            if inc is None or (i + 1) in leaders:
                continue
            fused = Instruction("fusedmac", rs1=inc.rs1, rs2=inc.rs2,
                                i1=inc.i1, i2=inc.i2)
            stats.applied += 1
            stats.estimated_cycles_saved += saving * _freq(loops, i)
            items, labels, meta = _edit(items, labels, meta, {i + 1}, {},
                                        {i: (fused, None)})
            changed = True
            break
    out = from_items(items, labels, prog.data, prog.data_base, prog.entry, meta)
    return out, stats, set()


# -- zol rule ----------------------------------------------------------------

def _li_items(reg: int, value: int) -> list[Item]:
    if -2048 <= value <= 2047:
        return [(Instruction("addi", rd=reg, rs1=0, imm=value), None)]
    from .asm import hi20, lo12
    return [(Instruction("lui", rd=reg, imm=hi20(value)), None),
            (Instruction("addi", rd=reg, rs1=reg, imm=lo12(value)), None)]


def apply_zol(prog: Program, model: CycleModel | None = None):
    """Convert eligible innermost counted loops to zero-overhead hardware
    loops, deleting the induction update and the backedge."""
    if model is None:
        model = CycleModel()
    cost = model.cost
    extra = model.taken_branch_extra
    items = to_items(prog)
    labels, meta = dict(prog.labels), list(prog.meta)
    stats = RuleStats()
    clobbered: set[int] = set()

    for L in find_loops(items, prog.entry):
        if L.body_branch_free and L.induction_pos is not None:
            stats.matched += 1

    changed = True
    while changed:
        changed = False
        loops = find_loops(items, prog.entry)
        for L in loops:
            if not (L.body_branch_free and L.single_entry):
                continue
            if L.induction_pos is None or L.trip is None or L.trip < 1:
                continue
            s, e, n = L.start, L.backedge, L.trip
            body = [j for j in range(s, e) if j != L.induction_pos]
            if not body:
                continue
            # induction register: only its own update and the backedge may
            # touch it inside the loop, and it must be dead afterwards
            ok = True
            for j in range(s, e):
                if j == L.induction_pos:
                    continue
                inst = items[j][0]
                if L.induction in _reads(inst) or L.induction in _writes(inst):
                    ok = False
                    break
            if not ok:
                continue
            enclosing = [O for O in loops
                         if O.start <= s and e <= O.backedge and O is not L]
            outer_start = max(enclosing, key=lambda O: O.backedge - O.start).start \
                if enclosing else None
            if not _dead_after(items, loops, L.induction, e + 1, outer_start, s):
                continue

            if n <= DLPI_COUNT_MAX:
                setup = [(Instruction("dlpi", imm=n, offset=0), body[-1])]
            else:
                setup = _li_items(L.induction, n)
                setup += [(Instruction("set.zc", rs1=L.induction), None),
                          (Instruction("zlp", offset=0), body[-1])]
            setup_cost = sum(cost(it[0].kind) for it in setup)
            gain = n * (cost("addi") + cost("blt")) + (n - 1) * extra
            if setup_cost >= gain:
                continue

            items, labels, meta = _edit(items, labels, meta,
                                        {L.induction_pos, e}, {s: setup}, {})
            stats.applied += 1
            entry_freq = _freq(loops, s) // n if n else 1
            stats.estimated_cycles_saved += (gain - setup_cost) * entry_freq
            clobbered.add(L.induction)
            changed = True
            break
    out = from_items(items, labels, prog.data, prog.data_base, prog.entry, meta)
    return out, stats, clobbered


# -- driver ------------------------------------------------------------------

def retarget(prog: Program, variant: Variant,
             model: CycleModel | None = None) -> tuple[Program, RewriteStats]:
    """Apply the enabled rules in the fixed order mac -> add2i -> fusedmac
    -> zol.  retarget(p, V0) is the identity; the result never contains an
    instruction outside the target variant's extensions."""
    if model is None:
        model = CycleModel()
    stats = RewriteStats()
    p = prog
    passes = (
        (Variant.V1, "mac_rule", apply_mac),
        (Variant.V2, "add2i_rule", apply_add2i),
        (Variant.V3, "fusedmac_rule", apply_fusedmac),
        (Variant.V4, "zol_rule", apply_zol),
    )
    for min_variant, name, fn in passes:
        if variant >= min_variant:
            p, rule_stats, clob = fn(p, model)
            stats.rules[name] = rule_stats
            stats.clobbered_regs |= clob
            if rule_stats.applied and name == "mac_rule":
                stats.clobbered_regs |= {20, 21, 22}
    check_extensions(p, variant)
    return p, stats
