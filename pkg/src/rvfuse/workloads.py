"""Quantized CNN kernel specs, baseline code generation, and the integer oracle.

Layers operate on int8 inputs/weights with int32 accumulators.  Each layer's
output pipeline is: arithmetic right shift by `requant_shift` (rounds toward
negative infinity), optional ReLU, clamp to [-128, 127], store as int8.  The
oracle computes the same pipeline with plain Python integer arithmetic and
never touches the instruction set, so it is an independent reference for
simulator runs.

Generated baseline assembly uses canonical counted loop nests (bottom-tested
blt loops) whose innermost reduction exposes the fusible shapes: adjacent
pointer increments followed by a mul/add accumulator pair.  Tensors live in
the data image; addresses are compile-time constants.

Data image layout (offsets from the load base): result word, input tensor,
then per layer its weights followed by its output buffer.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .asm import DATA_BASE, Program, assemble
from .isa import Variant

DEFAULT_SEED = 0x4D52564C
INT32_MAX = (1 << 31) - 1


class SpecError(ValueError):
    pass


@dataclass(frozen=True)
class ConvLayer:
    in_h: int
    in_w: int
    in_c: int
    kernel: int
    stride: int
    filters: int
    activation: str = "relu"
    requant_shift: int = 0
    depthwise: bool = False

    @property
    def out_h(self) -> int:
        return (self.in_h - self.kernel) // self.stride + 1

    @property
    def out_w(self) -> int:
        return (self.in_w - self.kernel) // self.stride + 1

    @property
    def out_shape(self) -> tuple[int, int, int]:
        return (self.out_h, self.out_w, self.filters)

    @property
    def weight_shape(self) -> tuple:
        if self.depthwise:
            return (self.filters, self.kernel, self.kernel)
        return (self.filters, self.kernel, self.kernel, self.in_c)

    def validate(self):
        if min(self.in_h, self.in_w, self.in_c, self.kernel, self.stride,
               self.filters) < 1:
            raise SpecError(f"conv dimensions must be positive: {self}")
        if self.kernel > self.in_h or self.kernel > self.in_w:
            raise SpecError(f"kernel {self.kernel} exceeds input {self.in_h}x{self.in_w}")
        if self.activation not in ("relu", "none"):
            raise SpecError(f"unknown activation {self.activation!r}")
        if not 0 <= self.requant_shift <= 31:
            raise SpecError(f"requant_shift out of range: {self.requant_shift}")
        if self.depthwise and self.filters != self.in_c:
            raise SpecError("depthwise conv requires filters == in_c")
        taps = self.kernel * self.kernel * (1 if self.depthwise else self.in_c)
        if taps * 127 * 127 > INT32_MAX:
            raise SpecError(f"accumulator may overflow 31 bits: {taps} taps")

    def macs(self) -> int:
        taps = self.kernel * self.kernel * (1 if self.depthwise else self.in_c)
        return self.out_h * self.out_w * self.filters * taps


@dataclass(frozen=True)
class DenseLayer:
    in_dim: int
    out_dim: int
    activation: str = "none"
    requant_shift: int = 0

    @property
    def out_shape(self) -> tuple[int]:
        return (self.out_dim,)

    @property
    def weight_shape(self) -> tuple[int, int]:
        return (self.out_dim, self.in_dim)

    def validate(self):
        if self.in_dim < 1 or self.out_dim < 1:
            raise SpecError(f"dense dimensions must be positive: {self}")
        if self.activation not in ("relu", "none"):
            raise SpecError(f"unknown activation {self.activation!r}")
        if not 0 <= self.requant_shift <= 31:
            raise SpecError(f"requant_shift out of range: {self.requant_shift}")
        if self.in_dim * 127 * 127 > INT32_MAX:
            raise SpecError(f"accumulator may overflow 31 bits: {self.in_dim} taps")

    def macs(self) -> int:
        return self.in_dim * self.out_dim


@dataclass(frozen=True)
class ArgmaxLayer:
    dim: int = 0

    def validate(self):
        if self.dim != 0:
            raise SpecError("argmax over the flattened output only (dim=0)")


Layer = ConvLayer | DenseLayer | ArgmaxLayer


@dataclass(frozen=True)
class KernelSpec:
    name: str
    layers: tuple

    def validate(self):
        if not self.layers:
            raise SpecError("spec has no layers")
        shape = None
        for idx, layer in enumerate(self.layers):
            if isinstance(layer, ArgmaxLayer):
                if idx != len(self.layers) - 1 or idx == 0:
                    raise SpecError("argmax must be the final layer")
                layer.validate()
                continue
            layer.validate()
            if shape is not None:
                if isinstance(layer, ConvLayer):
                    if shape != (layer.in_h, layer.in_w, layer.in_c):
                        raise SpecError(
                            f"layer {idx}: expects {(layer.in_h, layer.in_w, layer.in_c)},"
                            f" previous produces {shape}")
                else:
                    if int(np.prod(shape)) != layer.in_dim:
                        raise SpecError(
                            f"layer {idx}: expects {layer.in_dim} inputs,"
                            f" previous produces {int(np.prod(shape))}")
            shape = layer.out_shape

    @property
    def input_shape(self) -> tuple:
        first = self.layers[0]
        if isinstance(first, ConvLayer):
            return (first.in_h, first.in_w, first.in_c)
        return (first.in_dim,)

    @property
    def has_argmax(self) -> bool:
        return isinstance(self.layers[-1], ArgmaxLayer)

    def macs(self) -> int:
        return sum(l.macs() for l in self.layers if not isinstance(l, ArgmaxLayer))

    def to_dict(self) -> dict:
        layers = []
        for l in self.layers:
            if isinstance(l, ConvLayer):
                layers.append({"type": "conv2d", "in_h": l.in_h, "in_w": l.in_w,
                               "in_c": l.in_c, "kernel": l.kernel,
                               "stride": l.stride, "filters": l.filters,
                               "activation": l.activation,
                               "requant_shift": l.requant_shift,
                               "depthwise": l.depthwise})
            elif isinstance(l, DenseLayer):
                layers.append({"type": "dense", "in_dim": l.in_dim,
                               "out_dim": l.out_dim, "activation": l.activation,
                               "requant_shift": l.requant_shift})
            else:
                layers.append({"type": "argmax", "dim": l.dim})
        return {"name": self.name, "layers": layers}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "KernelSpec":
        layers = []
        for ld in d["layers"]:
            t = ld.get("type")
            if t == "conv2d":
                layers.append(ConvLayer(
                    in_h=ld["in_h"], in_w=ld["in_w"], in_c=ld["in_c"],
                    kernel=ld["kernel"], stride=ld["stride"],
                    filters=ld["filters"], activation=ld.get("activation", "relu"),
                    requant_shift=ld.get("requant_shift", 0),
                    depthwise=ld.get("depthwise", False)))
            elif t == "dense":
                layers.append(DenseLayer(
                    in_dim=ld["in_dim"], out_dim=ld["out_dim"],
                    activation=ld.get("activation", "none"),
                    requant_shift=ld.get("requant_shift", 0)))
            elif t == "argmax":
                layers.append(ArgmaxLayer(dim=ld.get("dim", 0)))
            else:
                raise SpecError(f"unknown layer type {t!r}")
        spec = cls(name=d.get("name", "kernel"), layers=tuple(layers))
        spec.validate()
        return spec

    @classmethod
    def from_json(cls, text: str) -> "KernelSpec":
        return cls.from_dict(json.loads(text))


def lenet5_star() -> KernelSpec:
    """The bundled end-to-end workload: two strided 6x6 convolutions and a
    512->10 classifier head, softmax replaced by integer argmax."""
    spec = KernelSpec(name="lenet5", layers=(
        ConvLayer(in_h=28, in_w=28, in_c=1, kernel=6, stride=2, filters=12,
                  activation="relu", requant_shift=8),
        ConvLayer(in_h=12, in_w=12, in_c=12, kernel=6, stride=2, filters=32,
                  activation="relu", requant_shift=10),
        DenseLayer(in_dim=512, out_dim=10, activation="none", requant_shift=10),
        ArgmaxLayer(),
    ))
    spec.validate()
    return spec


def microkernels() -> list[KernelSpec]:
    """Small single-purpose specs for per-extension measurements."""
    specs = [
        KernelSpec(name="conv3x3", layers=(
            ConvLayer(in_h=8, in_w=8, in_c=4, kernel=3, stride=1, filters=8,
                      activation="relu", requant_shift=7),)),
        KernelSpec(name="depthwise", layers=(
            ConvLayer(in_h=8, in_w=8, in_c=8, kernel=3, stride=1, filters=8,
                      activation="relu", requant_shift=6, depthwise=True),)),
        KernelSpec(name="dense64", layers=(
            DenseLayer(in_dim=64, out_dim=16, activation="none",
                       requant_shift=8),)),
    ]
    for s in specs:
        s.validate()
    return specs


def bundled_workloads() -> dict[str, KernelSpec]:
    out = {"lenet5": lenet5_star()}
    for s in microkernels():
        out[s.name] = s
    return out


def random_tensors(spec: KernelSpec, seed: int = DEFAULT_SEED):
    """Seeded input and weight tensors (int8); deterministic for a seed."""
    rng = np.random.default_rng(seed)
    inp = rng.integers(-128, 128, size=spec.input_shape, dtype=np.int8)
    weights = []
    for layer in spec.layers:
        if isinstance(layer, ArgmaxLayer):
            weights.append(None)
        else:
            weights.append(rng.integers(-128, 128, size=layer.weight_shape,
                                        dtype=np.int8))
    return inp, weights


def random_input(spec: KernelSpec, seed: int):
    """A fresh seeded input tensor only (weights unchanged); used to re-run
    one compiled program on many inputs via replace_data."""
    rng = np.random.default_rng(seed)
    return rng.integers(-128, 128, size=spec.input_shape, dtype=np.int8)


# -- oracle ------------------------------------------------------------------

@dataclass
class GoldenResult:
    """Reference outputs: one int8 tensor per compute layer, plus the final
    class index when the spec ends in argmax."""

    outputs: list
    class_index: int | None
    mac_count: int = 0


def requantize(acc: int, shift: int, relu: bool) -> int:
    """Shared requantization: arithmetic shift (floor), ReLU, int8 clamp."""
    v = acc >> shift
    if relu and v < 0:
        v = 0
    if v > 127:
        v = 127
    if v < -128:
        v = -128
    return v


def oracle(spec: KernelSpec, inp, weights) -> GoldenResult:
    """Plain integer-arithmetic inference; no ISA involvement by design."""
    spec.validate()
    outputs = []
    macs = 0
    x = np.asarray(inp, dtype=np.int8).astype(int).tolist()

    for layer, w in zip(spec.layers, weights):
        if isinstance(layer, ConvLayer):
            wt = np.asarray(w, dtype=np.int8).astype(int).tolist()
            relu = layer.activation == "relu"
            sh = layer.requant_shift
            k, s = layer.kernel, layer.stride
            out = [[[0] * layer.filters for _ in range(layer.out_w)]
                   for _ in range(layer.out_h)]
            for oy in range(layer.out_h):
                for ox in range(layer.out_w):
                    for oc in range(layer.filters):
                        acc = 0
                        if layer.depthwise:
                            for ky in range(k):
                                row = x[oy * s + ky]
                                wrow = wt[oc][ky]
                                for kx in range(k):
                                    acc += row[ox * s + kx][oc] * wrow[kx]
                                    macs += 1
                        else:
                            for ky in range(k):
                                row = x[oy * s + ky]
                                wrow = wt[oc][ky]
                                for kx in range(k):
                                    cell = row[ox * s + kx]
                                    wcell = wrow[kx]
                                    for ic in range(layer.in_c):
                                        acc += cell[ic] * wcell[ic]
                                        macs += 1
                        out[oy][ox][oc] = requantize(acc, sh, relu)
            x = out
            outputs.append(np.array(out, dtype=np.int8))
        elif isinstance(layer, DenseLayer):
            wt = np.asarray(w, dtype=np.int8).astype(int).tolist()
            relu = layer.activation == "relu"
            sh = layer.requant_shift
            flat = _flatten(x)
            out = []
            for o in range(layer.out_dim):
                acc = 0
                wrow = wt[o]
                for i in range(layer.in_dim):
                    acc += flat[i] * wrow[i]
                    macs += 1
                out.append(requantize(acc, sh, relu))
            x = out
            outputs.append(np.array(out, dtype=np.int8))
        else:  # argmax, lowest index wins ties
            flat = _flatten(x)
            best = 0
            for i in range(1, len(flat)):
                if flat[i] > flat[best]:
                    best = i
            return GoldenResult(outputs=outputs, class_index=best, mac_count=macs)
    return GoldenResult(outputs=outputs, class_index=None, mac_count=macs)


def _flatten(x):
    if isinstance(x, list) and x and isinstance(x[0], list):
        return [v for row in x for v in _flatten(row)]
    return list(x)


# -- data layout -------------------------------------------------------------

@dataclass(frozen=True)
class LayerSlot:
    weights_off: int
    weights_size: int
    out_off: int
    out_size: int


@dataclass(frozen=True)
class DataLayout:
    """Deterministic placement of tensors in the data image."""

    result_off: int
    input_off: int
    input_size: int
    slots: tuple
    total_size: int


def data_layout(spec: KernelSpec) -> DataLayout:
    off = 0
    result_off = off
    off += 4
    input_off = off
    input_size = int(np.prod(spec.input_shape))
    off += input_size
    slots = []
    for layer in spec.layers:
        if isinstance(layer, ArgmaxLayer):
            slots.append(LayerSlot(0, 0, 0, 0))
            continue
        wsize = int(np.prod(layer.weight_shape))
        osize = int(np.prod(layer.out_shape))
        slots.append(LayerSlot(off, wsize, off + wsize, osize))
        off += wsize + osize
    return DataLayout(result_off=result_off, input_off=input_off,
                      input_size=input_size, slots=tuple(slots), total_size=off)


def build_data_image(spec: KernelSpec, inp, weights) -> bytes:
    layout = data_layout(spec)
    image = bytearray(layout.total_size)
    arr = np.ascontiguousarray(np.asarray(inp, dtype=np.int8))
    if arr.shape != spec.input_shape:
        raise SpecError(f"input shape {arr.shape} != {spec.input_shape}")
    image[layout.input_off:layout.input_off + layout.input_size] = arr.tobytes()
    for layer, w, slot in zip(spec.layers, weights, layout.slots):
        if isinstance(layer, ArgmaxLayer):
            continue
        warr = np.ascontiguousarray(np.asarray(w, dtype=np.int8))
        if warr.shape != layer.weight_shape:
            raise SpecError(f"weight shape {warr.shape} != {layer.weight_shape}")
        image[slot.weights_off:slot.weights_off + slot.weights_size] = warr.tobytes()
    return bytes(image)


def extract_outputs(spec: KernelSpec, mem, data_base: int = DATA_BASE):
    """Read per-layer outputs (and the class index) back from simulated
    memory, shaped like the oracle's GoldenResult."""
    layout = data_layout(spec)
    outputs = []
    for layer, slot in zip(spec.layers, layout.slots):
        if isinstance(layer, ArgmaxLayer):
            continue
        lo = data_base + slot.out_off
        raw = bytes(mem[lo:lo + slot.out_size])
        arr = np.frombuffer(raw, dtype=np.int8).reshape(layer.out_shape)
        outputs.append(arr.copy())
    class_index = None
    if spec.has_argmax:
        lo = data_base + layout.result_off
        class_index = int.from_bytes(bytes(mem[lo:lo + 4]), "little")
    return outputs, class_index


# -- code generation ---------------------------------------------------------

# Register roles; x20..x22 are deliberately untouched (they are the mac
# unit's hardwired scratch on extended variants).
R_IN, R_W, R_OUT, R_PATCH, R_WBASE = "x10", "x11", "x12", "x13", "x14"
R_ACC, R_A, R_B, R_T, R_I = "x15", "x16", "x17", "x18", "x19"
R_KX, R_KY, R_OC, R_OX, R_OY = "x23", "x24", "x25", "x26", "x27"
R_BIC, R_BK, R_BOC = "x5", "x6", "x7"
R_BOX, R_BOY, R_TMP = "x28", "x29", "x30"


class _Emitter:
    def __init__(self):
        self.lines: list[str] = []
        self._n = 0

    def label(self, stem: str) -> str:
        self._n += 1
        return f"{stem}_{self._n}"

    def raw(self, line: str):
        self.lines.append(line)

    def op(self, text: str):
        self.lines.append("    " + text)

    def mark(self, label: str):
        self.lines.append(f"{label}:")

    def text(self) -> str:
        return "\n".join(self.lines) + "\n"


def _emit_requant(e: _Emitter, layer) -> None:
    # acc -> shifted, activated, clamped int8 in R_ACC
    if layer.requant_shift:
        e.op(f"srai {R_ACC}, {R_ACC}, {layer.requant_shift}")
    relu = layer.activation == "relu"
    if relu:
        l = e.label("relu")
        e.op(f"bge {R_ACC}, x0, {l}")
        e.op(f"mv {R_ACC}, x0")
        e.mark(l)
    l = e.label("chi")
    e.op(f"li {R_TMP}, 127")
    e.op(f"bge {R_TMP}, {R_ACC}, {l}")
    e.op(f"mv {R_ACC}, {R_TMP}")
    e.mark(l)
    if not relu:
        l = e.label("clo")
        e.op(f"li {R_TMP}, -128")
        e.op(f"bge {R_ACC}, {R_TMP}, {l}")
        e.op(f"mv {R_ACC}, {R_TMP}")
        e.mark(l)


def _emit_conv(e: _Emitter, layer: ConvLayer, in_addr: int, w_addr: int,
               out_addr: int) -> None:
    k, s = layer.kernel, layer.stride
    in_c = layer.in_c
    row_skip = (layer.in_w - k) * in_c
    patch_step = s * in_c
    row_rem = s * in_c * (layer.in_w - layer.out_w)

    e.op(f"li {R_BK}, {k}")
    e.op(f"li {R_BOC}, {layer.filters}")
    e.op(f"li {R_BOX}, {layer.out_w}")
    e.op(f"li {R_BOY}, {layer.out_h}")
    e.op(f"li {R_PATCH}, {in_addr}")
    e.op(f"li {R_WBASE}, {w_addr}")
    e.op(f"li {R_OUT}, {out_addr}")
    if not layer.depthwise:
        e.op(f"li {R_BIC}, {in_c}")

    loy, lox, loc, lky, lkx = (e.label(x) for x in ("oy", "ox", "oc", "ky", "kx"))
    lic = e.label("ic")

    e.op(f"li {R_OY}, 0")
    e.mark(loy)
    e.op(f"li {R_OX}, 0")
    e.mark(lox)
    e.op(f"mv {R_W}, {R_WBASE}")
    e.op(f"li {R_OC}, 0")
    e.mark(loc)
    e.op(f"mv {R_IN}, {R_PATCH}")
    if layer.depthwise:
        e.op(f"add {R_IN}, {R_IN}, {R_OC}")
    e.op(f"li {R_ACC}, 0")
    e.op(f"li {R_KY}, 0")
    e.mark(lky)
    if layer.depthwise:
        # reduction over kx only; input walks by the channel stride
        e.op(f"li {R_KX}, 0")
        e.mark(lkx)
        e.op(f"lb {R_A}, 0({R_IN})")
        e.op(f"lb {R_B}, 0({R_W})")
        e.op(f"addi {R_W}, {R_W}, 1")
        e.op(f"addi {R_IN}, {R_IN}, {in_c}")
        e.op(f"mul {R_T}, {R_A}, {R_B}")
        e.op(f"add {R_ACC}, {R_ACC}, {R_T}")
        e.op(f"addi {R_KX}, {R_KX}, 1")
        e.op(f"blt {R_KX}, {R_BK}, {lkx}")
    else:
        e.op(f"li {R_KX}, 0")
        e.mark(lkx)
        e.op(f"li {R_I}, 0")
        e.mark(lic)
        e.op(f"lb {R_A}, 0({R_IN})")
        e.op(f"lb {R_B}, 0({R_W})")
        e.op(f"addi {R_IN}, {R_IN}, 1")
        e.op(f"addi {R_W}, {R_W}, 1")
        e.op(f"mul {R_T}, {R_A}, {R_B}")
        e.op(f"add {R_ACC}, {R_ACC}, {R_T}")
        e.op(f"addi {R_I}, {R_I}, 1")
        e.op(f"blt {R_I}, {R_BIC}, {lic}")
        e.op(f"addi {R_KX}, {R_KX}, 1")
        e.op(f"blt {R_KX}, {R_BK}, {lkx}")
    e.op(f"addi {R_KY}, {R_KY}, 1")
    e.op(f"addi {R_IN}, {R_IN}, {row_skip}")
    e.op(f"blt {R_KY}, {R_BK}, {lky}")
    _emit_requant(e, layer)
    e.op(f"sb {R_ACC}, 0({R_OUT})")
    e.op(f"addi {R_OUT}, {R_OUT}, 1")
    e.op(f"addi {R_OC}, {R_OC}, 1")
    e.op(f"blt {R_OC}, {R_BOC}, {loc}")
    e.op(f"addi {R_OX}, {R_OX}, 1")
    e.op(f"addi {R_PATCH}, {R_PATCH}, {patch_step}")
    e.op(f"blt {R_OX}, {R_BOX}, {lox}")
    e.op(f"addi {R_OY}, {R_OY}, 1")
    e.op(f"addi {R_PATCH}, {R_PATCH}, {row_rem}")
    e.op(f"blt {R_OY}, {R_BOY}, {loy}")


def _emit_dense(e: _Emitter, layer: DenseLayer, in_addr: int, w_addr: int,
                out_addr: int) -> None:
    e.op(f"li {R_BIC}, {layer.in_dim}")
    e.op(f"li {R_BOC}, {layer.out_dim}")
    e.op(f"li {R_PATCH}, {in_addr}")
    e.op(f"li {R_W}, {w_addr}")
    e.op(f"li {R_OUT}, {out_addr}")
    lo = e.label("o")
    li = e.label("i")
    e.op(f"li {R_OC}, 0")
    e.mark(lo)
    e.op(f"mv {R_IN}, {R_PATCH}")
    e.op(f"li {R_ACC}, 0")
    e.op(f"li {R_I}, 0")
    e.mark(li)
    e.op(f"lb {R_A}, 0({R_IN})")
    e.op(f"lb {R_B}, 0({R_W})")
    e.op(f"addi {R_IN}, {R_IN}, 1")
    e.op(f"addi {R_W}, {R_W}, 1")
    e.op(f"mul {R_T}, {R_A}, {R_B}")
    e.op(f"add {R_ACC}, {R_ACC}, {R_T}")
    e.op(f"addi {R_I}, {R_I}, 1")
    e.op(f"blt {R_I}, {R_BIC}, {li}")
    _emit_requant(e, layer)
    e.op(f"sb {R_ACC}, 0({R_OUT})")
    e.op(f"addi {R_OUT}, {R_OUT}, 1")
    e.op(f"addi {R_OC}, {R_OC}, 1")
    e.op(f"blt {R_OC}, {R_BOC}, {lo}")


def _emit_argmax(e: _Emitter, n: int, in_addr: int, result_addr: int) -> None:
    e.op(f"li {R_IN}, {in_addr}")
    e.op(f"lb {R_T}, 0({R_IN})")
    e.op(f"li {R_KX}, 0")
    if n > 1:
        l = e.label("amx")
        lskip = e.label("amk")
        e.op(f"addi {R_IN}, {R_IN}, 1")
        e.op(f"li {R_I}, 1")
        e.op(f"li {R_BIC}, {n}")
        e.mark(l)
        e.op(f"lb {R_A}, 0({R_IN})")
        e.op(f"bge {R_T}, {R_A}, {lskip}")
        e.op(f"mv {R_T}, {R_A}")
        e.op(f"mv {R_KX}, {R_I}")
        e.mark(lskip)
        e.op(f"addi {R_IN}, {R_IN}, 1")
        e.op(f"addi {R_I}, {R_I}, 1")
        e.op(f"blt {R_I}, {R_BIC}, {l}")
    e.op(f"li {R_TMP}, {result_addr}")
    e.op(f"sw {R_KX}, 0({R_TMP})")


def codegen_source(spec: KernelSpec, data_base: int = DATA_BASE) -> str:
    """Baseline (v0) assembly for the spec; data is bound separately."""
    spec.validate()
    layout = data_layout(spec)
    e = _Emitter()
    in_addr = data_base + layout.input_off
    in_count = layout.input_size
    for layer, slot in zip(spec.layers, layout.slots):
        if isinstance(layer, ArgmaxLayer):
            _emit_argmax(e, in_count, in_addr, data_base + layout.result_off)
            continue
        if isinstance(layer, ConvLayer):
            _emit_conv(e, layer, in_addr, data_base + slot.weights_off,
                       data_base + slot.out_off)
        else:
            _emit_dense(e, layer, in_addr, data_base + slot.weights_off,
                        data_base + slot.out_off)
        in_addr = data_base + slot.out_off
        in_count = slot.out_size
    e.op("halt")
    return e.text()


def codegen(spec: KernelSpec, inp, weights,
            data_base: int = DATA_BASE) -> Program:
    """Assemble the baseline program with input and weights serialized into
    its data image.  The result is strictly v0: no custom mnemonics."""
    source = codegen_source(spec, data_base)
    prog = assemble(source, Variant.V0)
    return replace_data(prog, build_data_image(spec, inp, weights), data_base)


def replace_data(prog: Program, data: bytes, data_base: int | None = None) -> Program:
    """Same text, different data image (used to re-run one program on many
    inputs without reassembling)."""
    return Program(text=prog.text, labels=prog.labels, data=data,
                   data_base=prog.data_base if data_base is None else data_base,
                   entry=prog.entry, meta=prog.meta)


# -- tensor file format ------------------------------------------------------

_DTYPES = {0: np.int8, 1: np.int32}
_DTYPE_CODES = {np.dtype(np.int8): 0, np.dtype(np.int32): 1}


def write_tensor(arr) -> bytes:
    """Little-endian blob: u8 dtype code, u8 ndim, u16 zero, u32 dims, data."""
    a = np.ascontiguousarray(arr)
    if a.dtype not in _DTYPE_CODES:
        raise ValueError(f"unsupported dtype {a.dtype}")
    head = bytes([_DTYPE_CODES[a.dtype], a.ndim]) + b"\x00\x00"
    dims = b"".join(int(d).to_bytes(4, "little") for d in a.shape)
    return head + dims + a.tobytes()


def read_tensor(blob: bytes):
    if len(blob) < 4:
        raise ValueError("truncated tensor blob")
    code, ndim = blob[0], blob[1]
    if code not in _DTYPES:
        raise ValueError(f"unknown dtype code {code}")
    dims = []
    off = 4
    for _ in range(ndim):
        dims.append(int.from_bytes(blob[off:off + 4], "little"))
        off += 4
    dtype = np.dtype(_DTYPES[code]).newbyteorder("<")
    n = int(np.prod(dims)) if dims else 1
    expect = off + n * dtype.itemsize
    if len(blob) != expect:
        raise ValueError(f"tensor blob size {len(blob)} != expected {expect}")
    arr = np.frombuffer(blob, dtype=dtype, offset=off).reshape(dims)
    return arr.astype(_DTYPES[code])
