import pytest
from hypothesis import given, strategies as st

from rvfuse.asm import DATA_BASE, Program, assemble
from rvfuse.isa import Instruction, Variant
from rvfuse.sim import (
    BudgetExceeded, CycleModel, SimTrap, check_extensions, new_state, run,
    step, trace,
)

M = 0xFFFFFFFF


def _signed(v):
    return v - (1 << 32) if v >= (1 << 31) else v


def run_src(src, variant=Variant.V4, **kw):
    return run(assemble(src, variant), variant, **kw)


# -- ALU semantics against direct integer arithmetic --------------------------

u32 = st.integers(min_value=0, max_value=M)


@given(u32, u32)
def test_add_sub(a, b):
    res = run_src("add x3, x1, x2\nsub x4, x1, x2\nhalt\n",
                  regs={1: a, 2: b})
    assert res.state.x[3] == (a + b) & M
    assert res.state.x[4] == (a - b) & M


@given(u32, u32)
def test_logic_ops(a, b):
    res = run_src("and x3, x1, x2\nor x4, x1, x2\nxor x5, x1, x2\nhalt\n",
                  regs={1: a, 2: b})
    assert res.state.x[3] == a & b
    assert res.state.x[4] == a | b
    assert res.state.x[5] == a ^ b


@given(u32, st.integers(min_value=0, max_value=63))
def test_shifts(a, sh):
    res = run_src("sll x3, x1, x2\nsrl x4, x1, x2\nsra x5, x1, x2\nhalt\n",
                  regs={1: a, 2: sh})
    s = sh & 31
    assert res.state.x[3] == (a << s) & M
    assert res.state.x[4] == a >> s
    assert res.state.x[5] == (_signed(a) >> s) & M


@given(u32, u32)
def test_compare_ops(a, b):
    res = run_src("slt x3, x1, x2\nsltu x4, x1, x2\nhalt\n", regs={1: a, 2: b})
    assert res.state.x[3] == (1 if _signed(a) < _signed(b) else 0)
    assert res.state.x[4] == (1 if a < b else 0)


@given(u32, u32)
def test_mul_family(a, b):
    res = run_src("mul x3, x1, x2\nmulh x4, x1, x2\nmulhsu x5, x1, x2\n"
                  "mulhu x6, x1, x2\nhalt\n", regs={1: a, 2: b})
    assert res.state.x[3] == (a * b) & M
    assert res.state.x[4] == ((_signed(a) * _signed(b)) >> 32) & M
    assert res.state.x[5] == ((_signed(a) * b) >> 32) & M
    assert res.state.x[6] == ((a * b) >> 32) & M


@given(u32, u32)
def test_div_family(a, b):
    res = run_src("div x3, x1, x2\ndivu x4, x1, x2\nrem x5, x1, x2\n"
                  "remu x6, x1, x2\nhalt\n", regs={1: a, 2: b})
    sa, sb = _signed(a), _signed(b)
    if sb == 0:
        q, r, qu, ru = -1, sa, M, a
    else:
        if sa == -(1 << 31) and sb == -1:
            q, r = -(1 << 31), 0
        else:
            q = abs(sa) // abs(sb) * (-1 if (sa < 0) != (sb < 0) else 1)
            r = abs(sa) % abs(sb) * (-1 if sa < 0 else 1)
        qu, ru = (a // b, a % b) if b else (M, a)
    assert res.state.x[3] == q & M
    assert res.state.x[4] == qu
    assert res.state.x[5] == r & M
    assert res.state.x[6] == ru


def test_div_by_zero_no_trap():
    res = run_src("div x3, x1, x2\nhalt\n", regs={1: 7, 2: 0})
    assert res.state.x[3] == M  # all ones


def test_imm_ops():
    res = run_src("addi x3, x1, -5\nandi x4, x1, 0xff\nori x5, x1, 0x70f\n"
                  "xori x6, x1, -1\nslti x7, x1, 100\nsltiu x8, x1, 100\n"
                  "slli x9, x1, 4\nsrli x10, x1, 4\nsrai x11, x1, 4\nhalt\n",
                  regs={1: 0xFFFF0012})
    a = 0xFFFF0012
    assert res.state.x[3] == (a - 5) & M
    assert res.state.x[4] == a & 0xFF
    assert res.state.x[5] == (a | 0x70F) & M
    assert res.state.x[6] == (a ^ M) & M
    assert res.state.x[7] == 1  # signed: a is negative
    assert res.state.x[8] == 0  # unsigned: huge
    assert res.state.x[9] == (a << 4) & M
    assert res.state.x[10] == a >> 4
    assert res.state.x[11] == (_signed(a) >> 4) & M


def test_lui_auipc():
    res = run_src("lui x1, 0x12345\nauipc x2, 1\nhalt\n")
    assert res.state.x[1] == 0x12345000
    assert res.state.x[2] == 4 + (1 << 12)  # pc of auipc is 4


# -- memory ------------------------------------------------------------------

def test_store_load_roundtrip_little_endian():
    res = run_src(f"""
        li x1, {DATA_BASE}
        li x2, 0x11223344
        sw x2, 0(x1)
        lb x3, 0(x1)
        lbu x4, 3(x1)
        lh x5, 0(x1)
        lhu x6, 2(x1)
        lw x7, 0(x1)
        halt
    """)
    assert res.state.mem[DATA_BASE:DATA_BASE + 4] == bytes([0x44, 0x33, 0x22, 0x11])
    assert res.state.x[3] == 0x44
    assert res.state.x[4] == 0x11
    assert res.state.x[5] == 0x3344
    assert res.state.x[6] == 0x1122
    assert res.state.x[7] == 0x11223344


def test_lb_sign_extends():
    prog = assemble(f"li x1, {DATA_BASE}\nlb x2, 0(x1)\nlbu x3, 0(x1)\nhalt\n",
                    Variant.V0)
    prog.data = bytes([0x80])
    res = run(prog)
    assert res.state.x[2] == 0xFFFFFF80
    assert res.state.x[3] == 0x80


def test_sh_sb():
    res = run_src(f"""
        li x1, {DATA_BASE}
        li x2, 0xBEEF
        sh x2, 0(x1)
        sb x2, 4(x1)
        halt
    """)
    assert res.state.mem[DATA_BASE:DATA_BASE + 5] == bytes([0xEF, 0xBE, 0, 0, 0xEF])


def test_misaligned_word_load_traps():
    with pytest.raises(SimTrap, match="misaligned"):
        run_src(f"li x1, {DATA_BASE + 1}\nlw x2, 0(x1)\nhalt\n")


def test_misaligned_half_store_traps():
    with pytest.raises(SimTrap, match="misaligned"):
        run_src(f"li x1, {DATA_BASE + 1}\nsh x2, 0(x1)\nhalt\n")


def test_out_of_bounds_traps_with_pc():
    with pytest.raises(SimTrap) as err:
        run_src("li x1, -4\nlw x2, 0(x1)\nhalt\n")
    assert err.value.pc == 4
    assert err.value.inst.kind == "lw"


# -- control flow ------------------------------------------------------------

def test_branch_taken_and_not():
    res = run_src("""
        li x1, 5
        li x2, 9
        blt x1, x2, taken
        li x3, 111
    taken:
        bge x1, x2, nottaken
        li x4, 222
    nottaken:
        halt
    """)
    assert res.state.x[3] == 0
    assert res.state.x[4] == 222


def test_branch_signed_vs_unsigned():
    res = run_src("""
        li x1, -1
        li x2, 1
        blt x1, x2, a
        li x3, 1
    a:
        bltu x1, x2, b
        li x4, 1
    b:
        halt
    """)
    assert res.state.x[3] == 0  # signed: -1 < 1 taken
    assert res.state.x[4] == 1  # unsigned: 0xffffffff < 1 not taken


def test_jal_links():
    res = run_src("jal x1, target\nnop\ntarget: halt\n")
    assert res.state.x[1] == 4


def test_jalr_links_and_jumps():
    res = run_src("li x1, 12\njalr x2, x1, 0\nnop\nhalt\n")
    assert res.state.x[2] == 8
    assert res.halted


def test_jalr_self_jump_halts():
    # jalr to its own address is the halt convention for indirect jumps
    res = run_src("li x1, 4\njalr x0, x1, 0\n")
    assert res.halted


def test_empty_program_halt_costs_one():
    res = run_src("halt\n")
    assert res.cycles == 1
    assert res.steps == 1
    assert res.retired == {"jal": 1}


def test_taken_branch_extra_cycle():
    a = run_src("li x1, 1\nbeq x0, x0, t\nnop\nt: halt\n")   # taken
    b = run_src("li x1, 1\nbne x0, x0, t\nnop\nt: halt\n")   # not taken
    assert a.taken_branches == 1
    assert b.taken_branches == 0
    # taken path: skips the nop but pays the branch bubble
    assert a.cycles == 1 + 2 + 1
    assert b.cycles == 1 + 1 + 1 + 1


def test_mul_add_vs_mac_cycles():
    pair = run_src("mul x5, x21, x22\nadd x20, x20, x5\nhalt\n", Variant.V0)
    fused = run_src("mac\nhalt\n", Variant.V1)
    assert pair.cycles - pair.retired["jal"] == 2
    assert fused.cycles - fused.retired["jal"] == 1


# -- custom instruction semantics ---------------------------------------------

def test_mac_semantics():
    res = run_src("mac\nhalt\n", Variant.V1, regs={20: 0, 21: 3, 22: 4})
    assert res.state.x[20] == 12
    assert res.retired["mac"] == 1
    assert res.cycles == 2  # mac + halt


def test_mac_wraps():
    res = run_src("mac\nhalt\n", Variant.V1,
                  regs={20: M, 21: 2, 22: 3})
    assert res.state.x[20] == (M + 6) & M


def test_add2i_semantics():
    res = run_src("add2i x5, x6, 4, 64\nhalt\n", Variant.V2,
                  regs={5: 100, 6: 200})
    assert res.state.x[5] == 104
    assert res.state.x[6] == 264


def test_fusedmac_semantics():
    res = run_src("fusedmac x5, x6, 4, 64\nhalt\n", Variant.V3,
                  regs={5: 100, 6: 200, 20: 1, 21: 3, 22: 4})
    assert res.state.x[20] == 13
    assert res.state.x[5] == 104
    assert res.state.x[6] == 264


def test_fusedmac_order_mac_before_increments():
    # when an increment register overlaps the mac unit, the multiply happens
    # first (documented order)
    res = run_src("fusedmac x21, x6, 4, 64\nhalt\n", Variant.V3,
                  regs={20: 0, 21: 10, 22: 2})
    assert res.state.x[20] == 20   # used the pre-increment x21
    assert res.state.x[21] == 14


# -- zero-overhead loops -------------------------------------------------------

def test_dlpi_loop_counts():
    res = run_src("""
        dlpi 3, body_end
        addi x5, x5, 1
    body_end:
        addi x6, x6, 10
        halt
    """)
    assert res.state.x[5] == 3
    assert res.state.x[6] == 30
    assert res.retired.get("blt", 0) == 0
    assert res.taken_branches == 0      # hardware back-jumps are not branches
    assert res.state.zc == 0


def test_dlpi_zero_overhead_cycles():
    # body of 2, count 3: setup + 3*2 + halt, nothing for the back-jumps
    res = run_src("""
        dlpi 3, e
        addi x5, x5, 1
    e:
        addi x6, x6, 1
        halt
    """)
    assert res.cycles == 1 + 3 * 2 + 1


def test_dlpi_count_zero_and_one_fall_through():
    for n, expect in ((0, 1), (1, 1), (2, 2)):
        res = run_src(f"""
            dlpi {n}, e
        e:
            addi x5, x5, 1
            halt
        """)
        assert res.state.x[5] == expect, n


def test_dlp_register_count():
    res = run_src("""
        li x1, 5
        dlp x1, e
    e:
        addi x5, x5, 1
        halt
    """)
    assert res.state.x[5] == 5


def test_set_zc_zlp():
    res = run_src("""
        li x1, 4
        set.zc x1
        zlp e
    e:
        addi x5, x5, 1
        halt
    """)
    assert res.state.x[5] == 4


def test_set_zs_ze_from_registers():
    # build the loop registers by hand: the body addi sits at byte 28
    res = run_src("""
        li x1, 3
        set.zc x1
        li x2, 28
        set.zs x2
        li x3, 28
        set.ze x3
        li x4, 0
        addi x4, x4, 1
        halt
    """)
    assert res.state.x[4] == 3


def test_set_zs_misaligned_traps():
    with pytest.raises(SimTrap, match="misaligned ZS"):
        run_src("li x1, 6\nset.zs x1\nhalt\n")


def test_nested_zol_inner_wins():
    # the single register set means an inner setup overwrites the outer one
    res = run_src("""
        dlpi 4, outer_end
        dlpi 2, inner_end
    inner_end:
        addi x5, x5, 1
    outer_end:
        addi x6, x6, 1
        halt
    """)
    # outer ZE was replaced before ever matching: the inner loop runs once
    # (2 iterations), then execution falls through
    assert res.state.x[5] == 2
    assert res.state.x[6] == 1


def test_zol_state_reported_in_bytes():
    res = run_src("dlpi 1, e\ne: nop\nhalt\n")
    assert res.state.zs == 4
    assert res.state.ze == 4


# -- traps, budget, gating -----------------------------------------------------

def test_illegal_instruction_traps():
    prog = Program(text=[Instruction("illegal", imm=0xBAD)], meta=[0])
    with pytest.raises(SimTrap, match="illegal"):
        run(prog)


def test_ecall_ebreak_fence_trap_on_execution():
    for mnem in ("ecall", "ebreak", "fence"):
        with pytest.raises(SimTrap):
            run_src(f"{mnem}\nhalt\n")


def test_falling_off_text_traps():
    with pytest.raises(SimTrap, match="outside text"):
        run_src("nop\n")


def test_budget_exceeded():
    with pytest.raises(BudgetExceeded):
        run_src("loop: beq x0, x0, loop2\nloop2: beq x0, x0, loop\n",
                max_steps=1000)


def test_extension_gating():
    prog = assemble("mac\nhalt\n", Variant.V1)
    with pytest.raises(ValueError, match="not available on v0"):
        run(prog, Variant.V0)
    check_extensions(prog, Variant.V1)  # fine


# -- x0, cycle accounting, trace ----------------------------------------------

def test_x0_immutable():
    res = run_src("""
        addi x0, x0, 55
        li x1, 7
        add x0, x1, x1
        lui x0, 3
        add2i x0, x1, 4, 4
        halt
    """, Variant.V4)
    assert res.state.x[0] == 0
    assert res.state.x[1] == 7 + 4


_ops = st.sampled_from(["addi", "add", "mul", "xor", "sltu", "sub"])


@st.composite
def straightline(draw):
    n = draw(st.integers(min_value=1, max_value=20))
    lines = []
    for _ in range(n):
        k = draw(_ops)
        rd = draw(st.integers(0, 31))
        rs1 = draw(st.integers(0, 31))
        if k == "addi":
            lines.append(f"addi x{rd}, x{rs1}, {draw(st.integers(-2048, 2047))}")
        else:
            lines.append(f"{k} x{rd}, x{rs1}, x{draw(st.integers(0, 31))}")
    lines.append("halt")
    return "\n".join(lines) + "\n"


@given(straightline())
def test_x0_immutable_random(src):
    res = run_src(src)
    assert res.state.x[0] == 0


@given(straightline())
def test_cycle_additivity_random(src):
    model = CycleModel(default_cost=2, taken_branch_extra=3,
                       per_kind={"mul": 5})
    res = run_src(src, model=model)
    expect = sum(model.cost(k) * n for k, n in res.retired.items())
    expect += model.taken_branch_extra * res.taken_branches
    assert res.cycles == expect


def test_cycle_additivity_with_loops():
    model = CycleModel()
    res = run_src("""
        li x1, 0
        li x2, 50
    loop:
        addi x1, x1, 1
        blt x1, x2, loop
        halt
    """, model=model)
    expect = sum(model.cost(k) * n for k, n in res.retired.items())
    expect += model.taken_branch_extra * res.taken_branches
    assert res.cycles == expect
    assert res.taken_branches == 49


def test_per_kind_cost_override():
    model = CycleModel(per_kind={"mul": 4})
    res = run_src("mul x1, x2, x3\nhalt\n", model=model)
    assert res.cycles == 4 + 1


def test_cycle_model_validation():
    with pytest.raises(ValueError):
        CycleModel(default_cost=0)
    with pytest.raises(ValueError):
        CycleModel(taken_branch_extra=-1)
    with pytest.raises(ValueError):
        CycleModel(per_kind={"mul": 0})


def test_trace_straightline():
    prog = assemble("nop\nnop\nhalt\n", Variant.V0)
    events = trace(prog, Variant.V0)
    assert [pc for pc, _ in events] == [0, 4, 8]
    assert len(events) == 3


def test_trace_dlpi_loop():
    prog = assemble("dlpi 2, e\ne: nop\nhalt\n", Variant.V4)
    events = trace(prog, Variant.V4)
    assert [pc for pc, _ in events] == [0, 4, 4, 8]
    kinds = [inst.kind for _, inst in events]
    assert kinds == ["dlpi", "addi", "addi", "jal"]


@given(straightline())
def test_trace_length_equals_retired(src):
    res = run_src(src, trace=True)
    assert len(res.trace_pcs) == res.steps == sum(res.retired.values())


def test_ndjson_trace_cycles_cumulative():
    import json
    from rvfuse.sim import run_summary, trace_to_ndjson

    prog = assemble("""
        li x1, 0
        li x2, 3
    loop:
        addi x1, x1, 1
        blt x1, x2, loop
        dlpi 2, e
    e:
        addi x5, x5, 1
        halt
    """, Variant.V4)
    model = CycleModel()
    res = run(prog, Variant.V4, model, trace=True)
    lines = trace_to_ndjson(prog, res, model).splitlines()
    events = [json.loads(l) for l in lines]
    assert len(events) == res.steps
    assert all(set(e) == {"pc", "mnemonic", "cycle"} for e in events)
    cycles = [e["cycle"] for e in events]
    assert cycles == sorted(cycles)
    # cumulative reconstruction lands exactly on the run's total, except the
    # final halt which never pays a taken extra
    assert cycles[-1] == res.cycles
    summary = run_summary(res)
    assert summary["cycles"] == res.cycles
    assert summary["retired"] == res.retired
    assert summary["halted"]


# -- single stepping -----------------------------------------------------------

def test_step_matches_run():
    prog = assemble("li x1, 3\nadd x2, x1, x1\nhalt\n", Variant.V0)
    st_ = new_state(prog)
    step(st_, prog)
    assert st_.x[1] == 3 and st_.pc == 4
    step(st_, prog)
    assert st_.x[2] == 6 and st_.pc == 8
    step(st_, prog)  # halt: pc stays
    assert st_.pc == 8
    full = run(prog, Variant.V0)
    assert st_.x == full.state.x
    assert st_.cycles == full.cycles


def test_step_counts_cycles_monotonically():
    prog = assemble("nop\nnop\nhalt\n", Variant.V0)
    s = new_state(prog)
    seen = [s.cycles]
    for _ in range(3):
        step(s, prog)
        seen.append(s.cycles)
    assert seen == sorted(seen)
    assert seen[-1] == 3
