"""Backbone graphs: loading, forward passes, and the toy test backbone.

Model graphs are TorchScript archives whose forward returns a dict of
named tensors (one per tap point, plus the embedding tap).  A matching
spec file records geometry, normalization, and tap names so the scoring
pipeline never needs to know how a graph was produced.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch

from .config import read_kv, write_kv
from .errors import DegenerateInputError, NumericsError, ShapeError, SpecError

GRAPH_FORMAT = "torchscript-2"

SPEC_FIELDS = ("name", "graph_path", "input_size", "tile_stride", "mean", "std",
               "tap_points", "embedding_tap")


@dataclass(frozen=True)
class BackboneSpec:
    """Declarative description of one runnable backbone graph."""

    name: str
    graph_path: Path
    input_size: int
    tile_stride: int
    mean: tuple
    std: tuple
    tap_points: tuple
    embedding_tap: str

    def validate(self):
        if not self.name:
            raise SpecError("backbone name must be nonempty")
        if self.input_size < 1:
            raise SpecError(f"input_size must be >= 1, got {self.input_size}")
        if self.tile_stride < 1:
            raise SpecError(f"tile_stride must be >= 1, got {self.tile_stride}")
        if not self.tap_points:
            raise SpecError("tap_points must be nonempty")
        if not self.embedding_tap:
            raise SpecError("embedding_tap must be nonempty")
        if len(self.mean) != 3 or len(self.std) != 3:
            raise SpecError("mean and std must each have 3 components")
        if any(s <= 0 for s in self.std):
            raise SpecError(f"std components must be strictly positive, got {self.std}")


def _parse_floats(value: str) -> tuple:
    return tuple(float(p.strip()) for p in value.split(","))


def load_spec(path) -> BackboneSpec:
    """Read a backbone spec file; graph_path resolves against the file's directory."""
    path = Path(path)
    kv = read_kv(path)
    missing = [f for f in SPEC_FIELDS if f not in kv]
    if missing:
        raise SpecError(f"spec file {path} is missing fields: {', '.join(missing)}")
    unknown = set(kv) - set(SPEC_FIELDS) - {"graph_format"}
    if unknown:
        raise SpecError(f"spec file {path} has unknown fields: {', '.join(sorted(unknown))}")
    fmt = kv.get("graph_format", GRAPH_FORMAT)
    if not fmt.startswith("torchscript"):
        raise SpecError(f"unsupported graph_format {fmt!r}")
    graph_path = Path(kv["graph_path"])
    if not graph_path.is_absolute():
        graph_path = path.parent / graph_path
    try:
        spec = BackboneSpec(
            name=kv["name"],
            graph_path=graph_path,
            input_size=int(kv["input_size"]),
            tile_stride=int(kv["tile_stride"]),
            mean=_parse_floats(kv["mean"]),
            std=_parse_floats(kv["std"]),
            tap_points=tuple(p.strip() for p in kv["tap_points"].split(",") if p.strip()),
            embedding_tap=kv["embedding_tap"],
        )
    except ValueError as exc:
        raise SpecError(f"spec file {path}: {exc}") from exc
    spec.validate()
    return spec


def save_spec(path, spec: BackboneSpec, graph_path_value=None) -> Path:
    """Write a spec file.  graph_path_value overrides the stored path (e.g. relative form)."""
    value = graph_path_value if graph_path_value is not None else spec.graph_path
    return write_kv(path, [
        ("name", spec.name),
        ("graph_path", value),
        ("input_size", spec.input_size),
        ("tile_stride", spec.tile_stride),
        ("mean", ",".join(repr(v) for v in spec.mean)),
        ("std", ",".join(repr(v) for v in spec.std)),
        ("tap_points", ",".join(spec.tap_points)),
        ("embedding_tap", spec.embedding_tap),
        ("graph_format", GRAPH_FORMAT),
    ])


@dataclass
class FeatureStack:
    """Per-layer activations, ordered shallow to deep (matches tap_points)."""

    layers: list  # list of (layer_name, np.ndarray)

    @property
    def names(self):
        return [name for name, _ in self.layers]

    @property
    def tensors(self):
        return [t for _, t in self.layers]


@dataclass
class BackboneSession:
    """A loaded graph ready for repeated, share-safe forward passes."""

    spec: BackboneSpec
    module: torch.jit.ScriptModule
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def _run(self, tile: np.ndarray) -> dict:
        size = self.spec.input_size
        if tile.ndim != 3 or tile.shape != (3, size, size):
            raise ShapeError(f"expected tile of shape (3, {size}, {size}), got {tile.shape}")
        x = torch.from_numpy(np.ascontiguousarray(tile, dtype=np.float32)).unsqueeze(0)
        with self._lock, torch.no_grad():
            out = self.module(x)
        return out

    @staticmethod
    def _to_array(name: str, t: torch.Tensor) -> np.ndarray:
        arr = t.detach().numpy()
        if arr.ndim >= 1 and arr.shape[0] == 1:
            arr = arr[0]  # drop batch dim
        if not np.all(np.isfinite(arr)):
            raise NumericsError(f"tap {name!r} produced non-finite values")
        return arr

    def forward_features(self, tile: np.ndarray) -> FeatureStack:
        """Activations at every tap point for one preprocessed tile."""
        out = self._run(tile)
        layers = [(name, self._to_array(name, out[name])) for name in self.spec.tap_points]
        return FeatureStack(layers=layers)

    def forward_embedding(self, tile: np.ndarray) -> np.ndarray:
        """The 1-D embedding-tap vector for one preprocessed tile."""
        out = self._run(tile)
        vec = self._to_array(self.spec.embedding_tap, out[self.spec.embedding_tap]).reshape(-1)
        if np.linalg.norm(vec) == 0.0:
            raise DegenerateInputError("embedding has zero norm")
        return vec


def load_backbone(spec: BackboneSpec) -> BackboneSession:
    """Load the graph, probe it once, and verify every tap name resolves."""
    spec.validate()
    path = Path(spec.graph_path)
    if not path.is_file():
        raise FileNotFoundError(f"backbone graph not found: {path}")
    module = torch.jit.load(str(path), map_location="cpu")
    module.eval()
    probe = torch.zeros(1, 3, spec.input_size, spec.input_size)
    with torch.no_grad():
        out = module(probe)
    if not isinstance(out, dict):
        raise SpecError(f"graph {path} must return a dict of named tensors, got {type(out).__name__}")
    wanted = list(spec.tap_points) + [spec.embedding_tap]
    missing = [name for name in wanted if name not in out]
    if missing:
        raise SpecError(f"graph {path} does not expose tap(s): {', '.join(missing)}")
    return BackboneSession(spec=spec, module=module)


class _ToyNet(torch.nn.Module):
    """Four conv stages (8/16/32/64 channels) with tanh; embedding = stage-4 mean.

    Stage strides are 4, 2, 2, 2 so 224-pixel tiles produce 56/28/14/7
    feature maps.  Weights come from a seeded generator, so the traced
    graph is bitwise reproducible for a given seed.
    """

    CHANNELS = (8, 16, 32, 64)
    STRIDES = (4, 2, 2, 2)

    def __init__(self, seed: int):
        super().__init__()
        gen = torch.Generator().manual_seed(seed)
        chans = (3,) + self.CHANNELS
        self.stages = torch.nn.ModuleList()
        for i in range(4):
            conv = torch.nn.Conv2d(chans[i], chans[i + 1], kernel_size=3,
                                   stride=self.STRIDES[i], padding=1)
            fan_in = chans[i] * 9
            fan_out = chans[i + 1] * 9
            bound = float(np.sqrt(6.0 / (fan_in + fan_out)))
            with torch.no_grad():
                conv.weight.copy_((torch.rand(conv.weight.shape, generator=gen) * 2 - 1) * bound)
                conv.bias.copy_((torch.rand(conv.bias.shape, generator=gen) * 2 - 1) / np.sqrt(fan_in))
            self.stages.append(conv)

    def forward(self, x):
        out = {}
        for i, conv in enumerate(self.stages):
            x = torch.tanh(conv(x))
            out[f"stage{i + 1}"] = x
        out["embedding"] = x.mean(dim=(2, 3))
        return out


def toy_backbone(seed: int, out_dir) -> BackboneSpec:
    """Write a deterministic toy backbone (graph + spec file) into out_dir.

    Returns the spec with graph_path already resolved.  Same seed, same
    bytes; different seeds differ.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    net = _ToyNet(seed).eval()
    example = torch.zeros(1, 3, 224, 224)
    with torch.no_grad():
        traced = torch.jit.trace(net, example, strict=False)
    graph_name = f"toy-{seed}.pt"
    graph_path = out_dir / graph_name
    torch.jit.save(traced, str(graph_path))
    spec = BackboneSpec(
        name=f"toy-{seed}",
        graph_path=graph_path,
        input_size=224,
        tile_stride=200,
        mean=(0.5, 0.5, 0.5),
        std=(0.5, 0.5, 0.5),
        tap_points=("stage1", "stage2", "stage3", "stage4"),
        embedding_tap="embedding",
    )
    save_spec(out_dir / f"toy-{seed}.spec", spec, graph_path_value=graph_name)
    return spec
