"""Analytic FLOPs accounting for convolutional encoder-decoders.

Architectures are described in YAML files::

    name: my-unet
    input: [640, 640, 9]          # height, width, channels
    flops_per_mac: 2              # optional, default 2
    blocks:
      - name: enc1
        role: encoder             # encoder | bottleneck | decoder | head
        layers:
          - {kind: conv2d, kernel: 3, out: 64}
          - {kind: activation}
          - {kind: batchnorm}
      - name: dec1
        role: decoder
        layers:
          - {kind: upsample, scale: 2}
          - {kind: concat, from: enc1}
          - {kind: conv2d, kernel: 3, out: 64}
    taps:                         # extra supervision heads on decoder blocks
      - {block: dec1, kernel: 1, out: 1}

Conventions: a convolution uses "same" padding, so its output is
``ceil(in / stride)``; one multiply-add counts as ``flops_per_mac`` FLOPs and
biases are ignored; batchnorm costs 2 FLOPs per output element and an
activation 1; pooling, upsampling and concatenation are free. A concat joins
the current tensor with the output of the named earlier block.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import yaml

LAYER_KINDS = ("conv2d", "pool", "upsample", "batchnorm", "activation", "concat")
ROLES = ("encoder", "bottleneck", "decoder", "head")
ARCH_DIR = Path(__file__).parent / "archs"


class ArchError(ValueError):
    pass


@dataclass(frozen=True)
class LayerSpec:
    kind: str
    kernel: tuple[int, int] = (1, 1)
    in_channels: Optional[int] = None
    out_channels: Optional[int] = None
    stride: int = 1
    scale: int = 2
    source: Optional[str] = None
    name: str = ""

    def __post_init__(self):
        if self.kind not in LAYER_KINDS:
            raise ArchError(f"{self.name or 'layer'}: unknown kind {self.kind!r}")
        if min(self.kernel) < 1 or self.stride < 1 or self.scale < 1:
            raise ArchError(f"{self.name or 'layer'}: kernel, stride and scale must be >= 1")
        for ch in (self.in_channels, self.out_channels):
            if ch is not None and ch < 1:
                raise ArchError(f"{self.name or 'layer'}: channel counts must be >= 1")
        if self.kind == "conv2d" and self.out_channels is None:
            raise ArchError(f"{self.name or 'layer'}: conv2d needs out channels")
        if self.kind == "concat" and not self.source:
            raise ArchError(f"{self.name or 'layer'}: concat needs a source block")


@dataclass(frozen=True)
class Block:
    name: str
    role: str
    layers: tuple[LayerSpec, ...]


@dataclass(frozen=True)
class Tap:
    block: str
    kernel: tuple[int, int] = (1, 1)
    out_channels: int = 1


@dataclass(frozen=True)
class ArchSpec:
    name: str
    input: tuple[int, int, int]  # height, width, channels
    blocks: tuple[Block, ...] = ()
    taps: tuple[Tap, ...] = ()
    flops_per_mac: int = 2

    def __post_init__(self):
        names = [b.name for b in self.blocks]
        if len(set(names)) != len(names):
            raise ArchError(f"{self.name}: duplicate block names")
        for b in self.blocks:
            if b.role not in ROLES:
                raise ArchError(f"{self.name}: block {b.name} has unknown role {b.role!r}")
        roles = dict(zip(names, (b.role for b in self.blocks)))
        for t in self.taps:
            if roles.get(t.block) != "decoder":
                raise ArchError(f"{self.name}: tap {t.block!r} is not a decoder block")


@dataclass
class LayerRow:
    name: str
    kind: str
    out_shape: tuple[int, int, int]
    flops: int


@dataclass
class FlopsReport:
    arch: str
    input: tuple[int, int, int]
    output: tuple[int, int, int]
    rows: list[LayerRow] = field(default_factory=list)

    @property
    def total(self) -> int:
        return sum(r.flops for r in self.rows)

    @property
    def gflops(self) -> float:
        return self.total / 1e9

    def table(self) -> str:
        lines = [f"# {self.arch}  input {self.input[0]}x{self.input[1]}x{self.input[2]}"]
        lines.append(f"{'layer':<24}{'kind':<12}{'output':>18}{'GFLOPs':>12}")
        for r in self.rows:
            shape = "x".join(str(v) for v in r.out_shape)
            lines.append(f"{r.name:<24}{r.kind:<12}{shape:>18}{r.flops / 1e9:>12.4f}")
        lines.append(f"{'total':<54}{self.gflops:>12.4f}")
        return "\n".join(lines) + "\n"


def layer_flops(
    layer: LayerSpec, in_h: int, in_w: int, in_ch: Optional[int] = None, flops_per_mac: int = 2,
    skip_ch: Optional[int] = None,
) -> tuple[int, tuple[int, int, int]]:
    """FLOPs of one layer and its output shape ``(h, w, c)``.

    ``in_ch`` defaults to the layer's declared ``in_channels``; when both are
    given they must agree. ``skip_ch`` is the channel count joined by a concat.
    """
    label = layer.name or layer.kind
    if in_h < 1 or in_w < 1:
        raise ArchError(f"{label}: spatial dims must be >= 1, got {in_h}x{in_w}")
    if in_ch is None:
        in_ch = layer.in_channels
    elif layer.in_channels is not None and layer.in_channels != in_ch:
        raise ArchError(f"{label}: declared {layer.in_channels} input channels, receives {in_ch}")
    if in_ch is None:
        raise ArchError(f"{label}: input channel count unknown")
    kind = layer.kind
    if kind == "conv2d":
        kh, kw = layer.kernel
        out_h = math.ceil(in_h / layer.stride)
        out_w = math.ceil(in_w / layer.stride)
        macs = kh * kw * in_ch * layer.out_channels * out_h * out_w
        return flops_per_mac * macs, (out_h, out_w, layer.out_channels)
    if kind == "pool":
        out_h, out_w = in_h // layer.stride, in_w // layer.stride
        if out_h < 1 or out_w < 1:
            raise ArchError(f"{label}: pooling {in_h}x{in_w} by {layer.stride} leaves nothing")
        return 0, (out_h, out_w, in_ch)
    if kind == "upsample":
        return 0, (in_h * layer.scale, in_w * layer.scale, in_ch)
    if kind == "concat":
        if skip_ch is None:
            raise ArchError(f"{label}: concat needs the joined channel count")
        return 0, (in_h, in_w, in_ch + skip_ch)
    elements = in_h * in_w * in_ch
    if kind == "batchnorm":
        return 2 * elements, (in_h, in_w, in_ch)
    return elements, (in_h, in_w, in_ch)


def arch_flops(arch: ArchSpec) -> FlopsReport:
    """Propagate shapes through ``arch`` and sum per-layer FLOPs."""
    h, w, c = arch.input
    report = FlopsReport(arch.name, arch.input, arch.input)
    outputs: dict[str, tuple[int, int, int]] = {}
    taps = {}
    for t in arch.taps:
        taps.setdefault(t.block, []).append(t)
    for block in arch.blocks:
        for i, layer in enumerate(block.layers):
            name = layer.name or f"{block.name}.{i}.{layer.kind}"
            skip_ch = None
            if layer.kind == "concat":
                if layer.source not in outputs:
                    raise ArchError(f"{name}: concat source {layer.source!r} not computed yet")
                sh, sw, skip_ch = outputs[layer.source]
                if (sh, sw) != (h, w):
                    raise ArchError(
                        f"{name}: shape mismatch, {h}x{w} joined with {layer.source} at {sh}x{sw}"
                    )
            try:
                flops, (h, w, c) = layer_flops(
                    replace(layer, name=name), h, w, c, arch.flops_per_mac, skip_ch
                )
            except ArchError as exc:
                raise ArchError(f"{arch.name}: {exc}") from None
            report.rows.append(LayerRow(name, layer.kind, (h, w, c), flops))
        outputs[block.name] = (h, w, c)
        for j, tap in enumerate(taps.get(block.name, [])):
            conv = LayerSpec("conv2d", tap.kernel, c, tap.out_channels, name=f"{block.name}.tap{j}")
            flops, shape = layer_flops(conv, h, w, c, arch.flops_per_mac)
            report.rows.append(LayerRow(conv.name, "tap", shape, flops))
    report.output = (h, w, c)
    return report


def arch_compare(a: ArchSpec, b: ArchSpec) -> tuple[float, float]:
    """``(flops(b) / flops(a), flops(b) - flops(a))``; both must share an input resolution."""
    if a.input[:2] != b.input[:2]:
        raise ArchError(f"input resolutions differ: {a.input[:2]} vs {b.input[:2]}")
    fa = arch_flops(a).total
    fb = arch_flops(b).total
    if fa == 0:
        ratio = 1.0 if fb == 0 else math.inf
    else:
        ratio = fb / fa
    return ratio, float(fb - fa)


# -- transforms used for sweeps and property checks ---------------------------


def with_input(arch: ArchSpec, height: int, width: int) -> ArchSpec:
    return replace(arch, input=(height, width, arch.input[2]))


def scale_channels(arch: ArchSpec, factor: int) -> ArchSpec:
    """Multiply every channel count (input and layer outputs) by ``factor``."""

    def scaled(layer: LayerSpec) -> LayerSpec:
        return replace(
            layer,
            in_channels=None if layer.in_channels is None else layer.in_channels * factor,
            out_channels=None if layer.out_channels is None else layer.out_channels * factor,
        )

    blocks = tuple(replace(b, layers=tuple(scaled(l) for l in b.layers)) for b in arch.blocks)
    taps = tuple(replace(t, out_channels=t.out_channels * factor) for t in arch.taps)
    h, w, c = arch.input
    return replace(arch, input=(h, w, c * factor), blocks=blocks, taps=taps)


# -- file format -------------------------------------------------------------


def _kernel(value) -> tuple[int, int]:
    if isinstance(value, int):
        return (value, value)
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return (int(value[0]), int(value[1]))
    raise ArchError(f"bad kernel {value!r}")


def _layer(obj: dict, where: str) -> LayerSpec:
    if not isinstance(obj, dict) or "kind" not in obj:
        raise ArchError(f"{where}: layer must be a mapping with a 'kind'")
    unknown = set(obj) - {"kind", "kernel", "in", "out", "stride", "scale", "from", "name"}
    if unknown:
        raise ArchError(f"{where}: unknown layer keys {sorted(unknown)}")
    stride = obj.get("stride", 2 if obj["kind"] == "pool" else 1)
    return LayerSpec(
        kind=obj["kind"],
        kernel=_kernel(obj.get("kernel", 1)),
        in_channels=obj.get("in"),
        out_channels=obj.get("out"),
        stride=int(stride),
        scale=int(obj.get("scale", 2)),
        source=obj.get("from"),
        name=obj.get("name", ""),
    )


def arch_from_dict(data: dict) -> ArchSpec:
    if not isinstance(data, dict):
        raise ArchError("architecture file must hold a mapping")
    try:
        name = str(data["name"])
        inp = data["input"]
        if len(inp) != 3 or min(int(v) for v in inp) < 1:
            raise ArchError(f"{name}: input must be [height, width, channels] >= 1")
        blocks = []
        for b in data.get("blocks", []):
            bname = b["name"]
            layers = tuple(
                _layer(l, f"{name}/{bname}[{i}]") for i, l in enumerate(b.get("layers", []))
            )
            blocks.append(Block(bname, b.get("role", "encoder"), layers))
        taps = []
        for t in data.get("taps", []):
            if isinstance(t, str):
                t = {"block": t}
            taps.append(Tap(t["block"], _kernel(t.get("kernel", 1)), int(t.get("out", 1))))
        return ArchSpec(
            name=name,
            input=tuple(int(v) for v in inp),
            blocks=tuple(blocks),
            taps=tuple(taps),
            flops_per_mac=int(data.get("flops_per_mac", 2)),
        )
    except (KeyError, TypeError) as exc:
        raise ArchError(f"malformed architecture: {exc!r}") from None


def load_arch(path) -> ArchSpec:
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ArchError(f"{path}: {exc}") from None
    return arch_from_dict(data)


def reference_arch(name: str) -> ArchSpec:
    """Load a shipped architecture (``unet`` or ``asym_unet``)."""
    path = ARCH_DIR / f"{name}.yaml"
    if not path.exists():
        raise ArchError(f"no shipped architecture {name!r}")
    return load_arch(path)
