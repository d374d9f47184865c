import json
import random

import numpy as np
import pytest

from rvfuse.isa import CUSTOM_KINDS, Variant
from rvfuse.profiler import count_patterns
from rvfuse.sim import run
from rvfuse.workloads import (
    ArgmaxLayer, ConvLayer, DenseLayer, DEFAULT_SEED, KernelSpec, SpecError,
    build_data_image, codegen, codegen_source, data_layout, extract_outputs,
    lenet5_star, microkernels, oracle, random_input, random_tensors,
    read_tensor, replace_data, requantize, write_tensor,
)


# -- numpy reference: the second, independent implementation -------------------

def numpy_infer(spec, inp, weights):
    """Vectorized int32 inference; deliberately a different construction from
    the oracle's scalar loops."""
    x = np.asarray(inp, dtype=np.int64)
    outputs = []
    for layer, w in zip(spec.layers, weights):
        if isinstance(layer, ConvLayer):
            wt = np.asarray(w, dtype=np.int64)
            k, s = layer.kernel, layer.stride
            out = np.zeros((layer.out_h, layer.out_w, layer.filters), dtype=np.int64)
            for oy in range(layer.out_h):
                for ox in range(layer.out_w):
                    patch = x[oy * s:oy * s + k, ox * s:ox * s + k, :]
                    if layer.depthwise:
                        out[oy, ox, :] = np.einsum("yxc,cyx->c", patch, wt)
                    else:
                        out[oy, ox, :] = np.einsum("yxc,fyxc->f", patch, wt)
            x = _np_requant(out, layer)
            outputs.append(x.astype(np.int8))
        elif isinstance(layer, DenseLayer):
            wt = np.asarray(w, dtype=np.int64)
            acc = wt @ x.reshape(-1)
            x = _np_requant(acc, layer)
            outputs.append(x.astype(np.int8))
        else:
            flat = x.reshape(-1)
            return outputs, int(np.argmax(flat))  # np.argmax: first max wins
    return outputs, None


def _np_requant(acc, layer):
    v = acc >> layer.requant_shift  # numpy >> floors like the scalar pipeline
    if layer.activation == "relu":
        v = np.maximum(v, 0)
    return np.clip(v, -128, 127)


def random_small_spec(rng):
    kind = rng.choice(["conv", "depthwise", "dense", "stack"])
    if kind == "conv":
        in_c = rng.randrange(1, 4)
        k = rng.randrange(1, 4)
        size = rng.randrange(k, k + 5)
        return KernelSpec(name="t", layers=(
            ConvLayer(in_h=size, in_w=size, in_c=in_c, kernel=k,
                      stride=rng.randrange(1, 3), filters=rng.randrange(1, 5),
                      activation=rng.choice(["relu", "none"]),
                      requant_shift=rng.randrange(0, 8)),))
    if kind == "depthwise":
        c = rng.randrange(1, 5)
        k = rng.randrange(1, 3)
        size = rng.randrange(k, k + 4)
        return KernelSpec(name="t", layers=(
            ConvLayer(in_h=size, in_w=size, in_c=c, kernel=k, stride=1,
                      filters=c, depthwise=True,
                      activation=rng.choice(["relu", "none"]),
                      requant_shift=rng.randrange(0, 6)),))
    if kind == "dense":
        return KernelSpec(name="t", layers=(
            DenseLayer(in_dim=rng.randrange(1, 20), out_dim=rng.randrange(1, 8),
                       activation=rng.choice(["relu", "none"]),
                       requant_shift=rng.randrange(0, 8)),))
    conv = ConvLayer(in_h=6, in_w=6, in_c=2, kernel=3, stride=1, filters=4,
                     activation="relu", requant_shift=6)
    flat = conv.out_h * conv.out_w * conv.filters
    return KernelSpec(name="t", layers=(
        conv,
        DenseLayer(in_dim=flat, out_dim=5, activation="none", requant_shift=7),
        ArgmaxLayer(),
    ))


# -- spec shapes ---------------------------------------------------------------

def test_lenet_layer_dimensions():
    spec = lenet5_star()
    l1, l2, l3 = spec.layers[0], spec.layers[1], spec.layers[2]
    assert l1.out_shape == (12, 12, 12)
    assert l2.out_shape == (4, 4, 32)
    assert l3.out_shape == (10,)
    assert spec.has_argmax


def test_lenet_mac_count():
    spec = lenet5_star()
    assert spec.macs() == 12 * 12 * 12 * 36 + 4 * 4 * 32 * (36 * 12) + 512 * 10
    assert spec.macs() == 62208 + 221184 + 5120


def test_lenet_oracle_mac_instrumentation():
    spec = lenet5_star()
    inp, w = random_tensors(spec, DEFAULT_SEED)
    gold = oracle(spec, inp, w)
    assert gold.mac_count == spec.macs()


def test_microkernels_validate():
    specs = microkernels()
    assert len(specs) == 3
    names = {s.name for s in specs}
    assert names == {"conv3x3", "depthwise", "dense64"}
    dw = next(s for s in specs if s.name == "depthwise")
    assert dw.layers[0].depthwise
    assert dw.layers[0].filters == dw.layers[0].in_c


def test_spec_validation_errors():
    with pytest.raises(SpecError, match="overflow"):
        ConvLayer(in_h=400, in_w=400, in_c=64, kernel=50, stride=1,
                  filters=1).validate()
    with pytest.raises(SpecError, match="depthwise"):
        ConvLayer(in_h=8, in_w=8, in_c=4, kernel=3, stride=1, filters=8,
                  depthwise=True).validate()
    with pytest.raises(SpecError, match="activation"):
        DenseLayer(in_dim=4, out_dim=2, activation="gelu").validate()
    with pytest.raises(SpecError, match="expects"):
        KernelSpec(name="bad", layers=(
            ConvLayer(in_h=8, in_w=8, in_c=1, kernel=3, stride=1, filters=2),
            DenseLayer(in_dim=100, out_dim=2),
        )).validate()
    with pytest.raises(SpecError, match="argmax"):
        KernelSpec(name="bad", layers=(ArgmaxLayer(),)).validate()


def test_spec_json_roundtrip():
    spec = lenet5_star()
    again = KernelSpec.from_json(spec.to_json())
    assert again == spec
    for m in microkernels():
        assert KernelSpec.from_json(m.to_json()) == m


# -- oracle --------------------------------------------------------------------

def test_requantize_floor_shift():
    assert requantize(-1, 1, relu=False) == -1  # arithmetic shift floors
    assert requantize(-3, 1, relu=False) == -2
    assert requantize(5, 1, relu=False) == 2
    assert requantize(-7, 0, relu=True) == 0
    assert requantize(1000, 0, relu=False) == 127
    assert requantize(-1000, 0, relu=False) == -128


def test_oracle_all_zero_weights():
    spec = KernelSpec(name="t", layers=(
        ConvLayer(in_h=5, in_w=5, in_c=2, kernel=2, stride=1, filters=3,
                  activation="none", requant_shift=0),
        DenseLayer(in_dim=48, out_dim=4),
        ArgmaxLayer(),
    ))
    spec.validate()
    inp = random_input(spec, 1)
    weights = [np.zeros(l.weight_shape, dtype=np.int8)
               if not isinstance(l, ArgmaxLayer) else None
               for l in spec.layers]
    gold = oracle(spec, inp, weights)
    assert all(not out.any() for out in gold.outputs)
    assert gold.class_index == 0  # lowest-index tie break


def test_oracle_identity_conv():
    spec = KernelSpec(name="t", layers=(
        ConvLayer(in_h=4, in_w=4, in_c=1, kernel=1, stride=1, filters=1,
                  activation="none", requant_shift=0),))
    spec.validate()
    inp = random_input(spec, 3)
    w = [np.ones((1, 1, 1, 1), dtype=np.int8)]
    gold = oracle(spec, inp, w)
    assert np.array_equal(gold.outputs[0].reshape(4, 4), np.asarray(inp).reshape(4, 4))


def test_oracle_argmax_lowest_tie_break():
    spec = KernelSpec(name="t", layers=(
        DenseLayer(in_dim=1, out_dim=4, requant_shift=0), ArgmaxLayer()))
    spec.validate()
    inp = np.array([1], dtype=np.int8)
    w = [np.array([[5], [7], [7], [2]], dtype=np.int8), None]
    gold = oracle(spec, inp, w)
    assert gold.class_index == 1  # first of the tied maxima


def test_oracle_matches_numpy_reference():
    rng = random.Random(77)
    for trial in range(25):
        spec = random_small_spec(rng)
        spec.validate()
        inp, weights = random_tensors(spec, trial)
        gold = oracle(spec, inp, weights)
        outs, cls = numpy_infer(spec, inp, weights)
        assert len(outs) == len(gold.outputs)
        for a, b in zip(gold.outputs, outs):
            assert np.array_equal(a, b), (trial, spec)
        assert cls == gold.class_index, trial


# -- code generation -------------------------------------------------------------

def test_codegen_is_strictly_v0():
    for spec in [lenet5_star()] + microkernels():
        src = codegen_source(spec)
        prog_kinds = {i.kind for i in
                      codegen(spec, *random_tensors(spec, 0)).text}
        assert not prog_kinds & CUSTOM_KINDS
        for mnem in ("mac", "add2i", "fusedmac", "dlp", "zlp", "set."):
            assert mnem not in src


def test_codegen_single_pixel_conv_retires_kk_pairs():
    # one output pixel, one filter: the reduction retires exactly k*k
    # multiply/accumulate pairs
    spec = KernelSpec(name="t", layers=(
        ConvLayer(in_h=3, in_w=3, in_c=1, kernel=3, stride=1, filters=1,
                  activation="none", requant_shift=0),))
    spec.validate()
    inp, w = random_tensors(spec, 5)
    res = run(codegen(spec, inp, w), Variant.V0)
    assert res.retired["mul"] == 9 == spec.macs()
    assert res.retired["add"] >= 9


def test_codegen_simulation_matches_oracle_random_specs():
    rng = random.Random(123)
    for trial in range(15):
        spec = random_small_spec(rng)
        spec.validate()
        inp, weights = random_tensors(spec, trial + 50)
        gold = oracle(spec, inp, weights)
        res = run(codegen(spec, inp, weights), Variant.V0)
        outs, cls = extract_outputs(spec, res.state.mem)
        for a, b in zip(outs, gold.outputs):
            assert np.array_equal(a, b), trial
        assert cls == gold.class_index


def test_codegen_lenet_smoke_matches_oracle():
    spec = lenet5_star()
    inp, w = random_tensors(spec, DEFAULT_SEED)
    gold = oracle(spec, inp, w)
    res = run(codegen(spec, inp, w), Variant.V0)
    outs, cls = extract_outputs(spec, res.state.mem)
    assert cls == gold.class_index
    for a, b in zip(outs, gold.outputs):
        assert np.array_equal(a, b)


def test_codegen_pattern_presence():
    for spec in microkernels():
        inp, w = random_tensors(spec, DEFAULT_SEED)
        prog = codegen(spec, inp, w)
        res = run(prog, Variant.V0, trace=True)
        rep = count_patterns(res.events(prog)).raw
        assert rep["mul_add_count"] > 0, spec.name
        assert rep["addi_addi_count"] > 0, spec.name
        assert rep["fusedmac_count"] > 0, spec.name
        assert rep["blt_count"] > 0, spec.name


def test_bundled_workloads_roundtrip_through_text():
    from rvfuse.asm import assemble, disassemble
    from rvfuse.workloads import bundled_workloads

    for name, spec in bundled_workloads().items():
        inp, w = random_tensors(spec, DEFAULT_SEED)
        prog = codegen(spec, inp, w)
        again = assemble(disassemble(prog), Variant.V0)
        assert again.text == prog.text, name
        assert again.data == prog.data, name


def test_replace_data_swaps_input_only():
    spec = microkernels()[2]  # dense64
    inp0, w = random_tensors(spec, DEFAULT_SEED)
    prog = codegen(spec, inp0, w)
    inp1 = random_input(spec, 999)
    prog2 = replace_data(prog, build_data_image(spec, inp1, w))
    assert prog2.text is prog.text
    res = run(prog2, Variant.V0)
    outs, cls = extract_outputs(spec, res.state.mem)
    gold = oracle(spec, inp1, w)
    assert np.array_equal(outs[0], gold.outputs[0])


def test_data_layout_shape():
    spec = lenet5_star()
    lay = data_layout(spec)
    assert lay.result_off == 0
    assert lay.input_off == 4
    assert lay.input_size == 28 * 28
    sizes = [(s.weights_size, s.out_size) for s in lay.slots[:3]]
    assert sizes == [(12 * 36, 1728), (32 * 36 * 12, 512), (512 * 10, 10)]
    assert lay.total_size == 4 + 784 + sum(a + b for a, b in sizes)
    image = build_data_image(spec, *random_tensors(spec, 0))
    assert len(image) == lay.total_size


def test_build_data_image_rejects_bad_shapes():
    spec = microkernels()[2]
    inp, w = random_tensors(spec, 0)
    with pytest.raises(SpecError, match="input shape"):
        build_data_image(spec, np.zeros(3, dtype=np.int8), w)


# -- tensor blobs -----------------------------------------------------------------

def test_tensor_roundtrip_int8():
    arr = np.arange(-6, 6, dtype=np.int8).reshape(3, 4)
    blob = write_tensor(arr)
    back = read_tensor(blob)
    assert back.dtype == np.int8
    assert np.array_equal(back, arr)


def test_tensor_roundtrip_int32():
    arr = np.array([[2 ** 30, -5]], dtype=np.int32)
    back = read_tensor(write_tensor(arr))
    assert back.dtype == np.int32
    assert np.array_equal(back, arr)


def test_tensor_blob_is_little_endian_with_dims_header():
    arr = np.array([1, 2, 3], dtype=np.int8)
    blob = write_tensor(arr)
    assert blob[0] == 0          # dtype code int8
    assert blob[1] == 1          # ndim
    assert blob[4:8] == (3).to_bytes(4, "little")
    assert blob[8:] == bytes([1, 2, 3])


def test_tensor_blob_size_checked():
    arr = np.array([1, 2, 3], dtype=np.int8)
    with pytest.raises(ValueError):
        read_tensor(write_tensor(arr)[:-1])


def test_random_tensors_deterministic():
    spec = microkernels()[0]
    a = random_tensors(spec, 42)
    b = random_tensors(spec, 42)
    assert np.array_equal(a[0], b[0])
    for x, y in zip(a[1], b[1]):
        assert np.array_equal(x, y)
    c = random_tensors(spec, 43)
    assert not np.array_equal(a[0], c[0])
