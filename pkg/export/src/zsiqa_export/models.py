"""The supported backbone registry and the wrappers that expose tap points.

Every wrapper is a plain ``nn.Module`` whose forward returns a dict of
named tensors: one entry per tap point plus ``embedding``.  That dict is
what gets traced into the portable graph, so tap naming here is the
public contract of the exported files.

Checkpoint provenance: the referenced releases are the public ViT-B/16
weights for CLIP and DINOv1, the dinov2-base weights for DINOv2, and the
open_clip RN50 ("openai") and convnext_base_w ("laion2b_s13b_b82k")
releases for the convolutional towers.  Override per recipe with a local
path when working offline.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch

from .errors import CheckpointError, ConfigError, ExportError

TAP_PER_BLOCK = "per-transformer-block"
TAP_PER_STAGE = "per-stage"

EMBEDDING_TAP = "embedding"

_CLIP_MEAN = (0.48145466, 0.4578275, 0.40821073)
_CLIP_STD = (0.26862954, 0.26130258, 0.27577711)
_IMAGENET_MEAN = (0.485, 0.456, 0.406)
_IMAGENET_STD = (0.229, 0.224, 0.225)


def block_name(i: int) -> str:
    return f"block{i:02d}"


@dataclass
class LoadedModel:
    """A wrapped tower ready to trace, plus the facts the spec file needs."""

    module: torch.nn.Module
    tap_names: tuple
    mean: tuple
    std: tuple


class _TokenTaps(torch.nn.Module):
    """Tap every transformer block of a token tower.

    Tap i is block i's output (post residual add, before any final
    layernorm).  The embedding is the model's published final
    representation: the projected class token for CLIP, the
    final-layernorm class token for DINO v1/v2.
    """

    def __init__(self, model, embedding: str, include_cls: bool):
        super().__init__()
        self.model = model
        self.embedding = embedding  # "projection" | "cls"
        self.include_cls = include_cls

    def forward(self, x):
        out = self.model(pixel_values=x, output_hidden_states=True)
        taps = {}
        for i, h in enumerate(out.hidden_states[1:], start=1):
            taps[block_name(i)] = h if self.include_cls else h[:, 1:, :]
        if self.embedding == "projection":
            taps[EMBEDDING_TAP] = out.image_embeds
        else:
            taps[EMBEDDING_TAP] = out.last_hidden_state[:, 0]
        return taps


class _StageTaps(torch.nn.Module):
    """Tap each convolutional stage of a CNN tower via forward hooks."""

    def __init__(self, visual, stage_modules):
        super().__init__()
        self.visual = visual
        self._names = [name for name, _ in stage_modules]
        self._grab = {}
        for name, mod in stage_modules:
            mod.register_forward_hook(self._hook(name))

    def _hook(self, name):
        def grab(_module, _inputs, output):
            self._grab[name] = output
        return grab

    def forward(self, x):
        self._grab = {}
        emb = self.visual(x)
        taps = {name: self._grab[name] for name in self._names}
        taps[EMBEDDING_TAP] = emb
        return taps


def _quiet_transformers():
    import transformers

    transformers.logging.set_verbosity_error()
    transformers.logging.disable_progress_bar()  # keeps the CLI's stderr clean
    return transformers


def _from_pretrained(cls, checkpoint, **kw):
    try:
        model = cls.from_pretrained(checkpoint, **kw)
    except (OSError, ValueError) as exc:
        raise CheckpointError(f"cannot load checkpoint {checkpoint!r}: {exc}") from exc
    return model.eval().requires_grad_(False)


def _token_taps(model, embedding, include_cls, mean, std) -> LoadedModel:
    n = model.config.num_hidden_layers
    names = tuple(block_name(i) for i in range(1, n + 1))
    return LoadedModel(_TokenTaps(model, embedding, include_cls).eval(), names, mean, std)


def _load_clip_vit(checkpoint, include_cls) -> LoadedModel:
    tf = _quiet_transformers()
    model = _from_pretrained(tf.CLIPVisionModelWithProjection, checkpoint)
    return _token_taps(model, "projection", include_cls, _CLIP_MEAN, _CLIP_STD)


def _load_dino_v1(checkpoint, include_cls) -> LoadedModel:
    tf = _quiet_transformers()
    model = _from_pretrained(tf.ViTModel, checkpoint, add_pooling_layer=False)
    return _token_taps(model, "cls", include_cls, _IMAGENET_MEAN, _IMAGENET_STD)


def _load_dino_v2(checkpoint, include_cls) -> LoadedModel:
    tf = _quiet_transformers()
    model = _from_pretrained(tf.Dinov2Model, checkpoint)
    return _token_taps(model, "cls", include_cls, _IMAGENET_MEAN, _IMAGENET_STD)


def _conv_stages(visual):
    if hasattr(visual, "layer1"):  # modified-ResNet layout
        return [(f"stage{i}", getattr(visual, f"layer{i}")) for i in (1, 2, 3, 4)]
    trunk = getattr(visual, "trunk", None)
    if trunk is not None and hasattr(trunk, "stages"):
        return [(f"stage{i}", stage) for i, stage in enumerate(trunk.stages, start=1)]
    raise ExportError("could not locate convolutional stages on the vision tower")


def _load_open_clip(arch, default_tag, checkpoint, include_cls) -> LoadedModel:
    del include_cls  # validated away for conv models before loading
    try:
        import open_clip
    except ImportError as exc:
        raise CheckpointError(
            f"exporting {arch} needs the open-clip-torch package for the "
            "model definition; install it and re-run"
        ) from exc
    pretrained = checkpoint if checkpoint is not None else default_tag
    try:
        model = open_clip.create_model(arch, pretrained=pretrained)
    except Exception as exc:  # open_clip raises plain RuntimeError for bad tags
        raise CheckpointError(f"cannot load checkpoint {pretrained!r}: {exc}") from exc
    visual = model.visual.eval().requires_grad_(False)
    stages = _conv_stages(visual)
    mean = tuple(getattr(visual, "image_mean", None) or _CLIP_MEAN)
    std = tuple(getattr(visual, "image_std", None) or _CLIP_STD)
    names = tuple(name for name, _ in stages)
    return LoadedModel(_StageTaps(visual, stages).eval(), names, mean, std)


@dataclass(frozen=True)
class ModelEntry:
    model_id: str
    tap_rule: str
    checkpoint: str  # published release the recipe pins by default
    has_cls: bool
    load: object

    def load_model(self, checkpoint=None, include_cls=False) -> LoadedModel:
        ref = checkpoint if checkpoint is not None else self.checkpoint
        return self.load(ref, include_cls)


REGISTRY = {
    e.model_id: e
    for e in (
        ModelEntry("clip-vit-b", TAP_PER_BLOCK, "openai/clip-vit-base-patch16",
                   True, _load_clip_vit),
        ModelEntry("dinov1-vit-b", TAP_PER_BLOCK, "facebook/dino-vitb16",
                   True, _load_dino_v1),
        ModelEntry("dinov2-vit-b", TAP_PER_BLOCK, "facebook/dinov2-base",
                   True, _load_dino_v2),
        ModelEntry("clip-rn50", TAP_PER_STAGE, "openai", False,
                   lambda ckpt, cls: _load_open_clip("RN50", "openai", ckpt, cls)),
        ModelEntry("clip-convnext", TAP_PER_STAGE, "laion2b_s13b_b82k", False,
                   lambda ckpt, cls: _load_open_clip("convnext_base_w",
                                                     "laion2b_s13b_b82k", ckpt, cls)),
    )
}


def supported_models() -> tuple:
    return tuple(sorted(REGISTRY))


def model_entry(model_id: str) -> ModelEntry:
    if model_id not in REGISTRY:
        raise ConfigError(
            f"unknown model_id {model_id!r}; supported: {', '.join(supported_models())}"
        )
    return REGISTRY[model_id]
