import hashlib
import importlib
import importlib.util
import subprocess
import sys

import numpy as np
import pytest
import torch
import transformers

# the package re-exports the export() function under the submodule's name,
# so reach the module itself through importlib
export_mod = importlib.import_module("zsiqa_export.export")
from zsiqa_export.errors import CheckpointError, ConfigError, ExportError
from zsiqa_export.export import PARITY_TOLERANCE, export, probe_image
from zsiqa_export.kvfile import parse_kv
from zsiqa_export.recipe import ExportRecipe

_HAVE_OPEN_CLIP = importlib.util.find_spec("open_clip") is not None


def _recipe(model_id, checkpoint, out_dir, **kw):
    return ExportRecipe(model_id=model_id, checkpoint=str(checkpoint),
                        output_dir=out_dir, **kw)


def _probe(mean, std):
    img = probe_image()
    mean = np.asarray(mean, dtype=np.float32).reshape(3, 1, 1)
    std = np.asarray(std, dtype=np.float32).reshape(3, 1, 1)
    return torch.from_numpy((img - mean) / std).unsqueeze(0)


def test_export_clip_writes_graph_and_spec(tiny_clip_dir, tmp_path):
    result = export(_recipe("clip-vit-b", tiny_clip_dir, tmp_path / "out"))
    assert result.graph_path.is_file()
    assert result.spec_path.is_file()
    assert result.parity <= PARITY_TOLERANCE
    assert result.tap_points == tuple(f"block{i:02d}" for i in range(1, 13))

    kv = parse_kv(result.spec_path.read_text(encoding="utf-8"))
    assert kv["name"] == "clip-vit-b"
    assert kv["graph_path"] == "clip-vit-b.pt"  # relative, lives next to the spec
    assert kv["input_size"] == "224"
    assert kv["tile_stride"] == "200"
    assert kv["mean"] == "0.48145466,0.4578275,0.40821073"
    assert kv["std"] == "0.26862954,0.26130258,0.27577711"
    assert kv["tap_points"].split(",") == list(result.tap_points)
    assert kv["embedding_tap"] == "embedding"
    assert kv["graph_format"] == "torchscript-2"


def test_exported_graph_shapes(tiny_clip_dir, tmp_path):
    result = export(_recipe("clip-vit-b", tiny_clip_dir, tmp_path / "out"))
    graph = torch.jit.load(str(result.graph_path))
    with torch.no_grad():
        out = graph(torch.zeros(1, 3, 224, 224))
    assert out["block01"].shape == (1, 49, 32)  # 224/32 squared, cls dropped
    assert out["block12"].shape == (1, 49, 32)
    assert out["embedding"].shape == (1, 16)  # projected width


def test_dino_embedding_is_final_layernorm_cls(tiny_dino_dir, tmp_path):
    result = export(_recipe("dinov1-vit-b", tiny_dino_dir, tmp_path / "out"))
    kv = parse_kv(result.spec_path.read_text(encoding="utf-8"))
    assert kv["mean"] == "0.485,0.456,0.406"
    assert kv["std"] == "0.229,0.224,0.225"

    model = transformers.ViTModel.from_pretrained(
        tiny_dino_dir, add_pooling_layer=False).eval()
    probe = _probe((0.485, 0.456, 0.406), (0.229, 0.224, 0.225))
    graph = torch.jit.load(str(result.graph_path))
    with torch.no_grad():
        got = graph(probe)
        want = model(pixel_values=probe, output_hidden_states=True)
    assert torch.allclose(got["embedding"], want.last_hidden_state[:, 0], atol=1e-6)
    assert torch.allclose(got["block05"], want.hidden_states[5][:, 1:, :], atol=1e-6)


def test_twelve_taps_for_vit_b_backbones(tiny_dino_dir, tiny_clip_dir, tmp_path):
    for model_id, ckpt in (("dinov1-vit-b", tiny_dino_dir),
                           ("clip-vit-b", tiny_clip_dir)):
        result = export(_recipe(model_id, ckpt, tmp_path / model_id))
        assert len(result.tap_points) == 12
        assert result.parity <= 1e-4


def test_dinov2_interpolates_to_224(tiny_dinov2_dir, tmp_path):
    result = export(_recipe("dinov2-vit-b", tiny_dinov2_dir, tmp_path / "out"))
    graph = torch.jit.load(str(result.graph_path))
    with torch.no_grad():
        out = graph(torch.zeros(1, 3, 224, 224))
    assert out["block01"].shape == (1, 256, 32)  # (224/14)^2 patch tokens


def test_include_cls_keeps_token(tiny_dino_dir, tmp_path):
    result = export(_recipe("dinov1-vit-b", tiny_dino_dir, tmp_path / "out",
                            include_cls=True))
    graph = torch.jit.load(str(result.graph_path))
    with torch.no_grad():
        out = graph(torch.zeros(1, 3, 224, 224))
    assert out["block01"].shape == (1, 197, 32)


def test_unknown_model_rejected(tmp_path):
    with pytest.raises(ConfigError, match="unknown model_id"):
        export(ExportRecipe(model_id="vgg16", output_dir=tmp_path))


def test_wrong_tap_rule_rejected(tiny_clip_dir, tmp_path):
    with pytest.raises(ConfigError, match="per-transformer-block"):
        export(_recipe("clip-vit-b", tiny_clip_dir, tmp_path,
                       tap_rule="per-stage"))
    with pytest.raises(ConfigError, match="unknown tap_rule"):
        export(_recipe("clip-vit-b", tiny_clip_dir, tmp_path,
                       tap_rule="per-layer"))


def test_include_cls_rejected_for_conv_towers(tmp_path):
    # validated before any weights load, so no open_clip needed
    with pytest.raises(ConfigError, match="class token"):
        export(ExportRecipe(model_id="clip-rn50", output_dir=tmp_path,
                            include_cls=True))


@pytest.mark.skipif(_HAVE_OPEN_CLIP, reason="open_clip installed; error path gone")
def test_conv_towers_name_their_missing_dependency(tmp_path):
    with pytest.raises(CheckpointError, match="open-clip-torch"):
        export(ExportRecipe(model_id="clip-rn50", output_dir=tmp_path))
    with pytest.raises(CheckpointError, match="open-clip-torch"):
        export(ExportRecipe(model_id="clip-convnext", output_dir=tmp_path))


def test_parity_gate_removes_bad_outputs(tiny_dino_dir, tmp_path, monkeypatch):
    monkeypatch.setattr(export_mod, "PARITY_TOLERANCE", -1.0)
    with pytest.raises(ExportError, match="parity"):
        export(_recipe("dinov1-vit-b", tiny_dino_dir, tmp_path / "out"))
    assert not (tmp_path / "out" / "dinov1-vit-b.pt").exists()
    assert not (tmp_path / "out" / "dinov1-vit-b.spec").exists()


def test_missing_local_checkpoint(tmp_path):
    with pytest.raises(CheckpointError, match="cannot load checkpoint"):
        export(_recipe("dinov1-vit-b", tmp_path / "nothing-here", tmp_path / "out"))


def test_reexport_is_deterministic(tiny_dino_dir, tmp_path):
    first = export(_recipe("dinov1-vit-b", tiny_dino_dir, tmp_path / "a"))
    second = export(_recipe("dinov1-vit-b", tiny_dino_dir, tmp_path / "b"))
    assert first.spec_path.read_bytes() == second.spec_path.read_bytes()
    probe = _probe((0.485, 0.456, 0.406), (0.229, 0.224, 0.225))
    g1 = torch.jit.load(str(first.graph_path))
    g2 = torch.jit.load(str(second.graph_path))
    with torch.no_grad():
        o1, o2 = g1(probe), g2(probe)
    assert all(torch.equal(o1[k], o2[k]) for k in o1)


def _run_cli(recipe_path):
    return subprocess.run(
        [sys.executable, "-m", "zsiqa_export.cli", str(recipe_path)],
        capture_output=True, text=True)


def test_cli_exports_reproducible_bytes(tiny_dino_dir, tmp_path):
    # byte-identity holds across processes (one trace per process, so the
    # archive's internal type names are stable)
    digests = []
    for tag in ("a", "b"):
        recipe = tmp_path / f"recipe_{tag}.txt"
        recipe.write_text(
            f"model_id = dinov1-vit-b\ncheckpoint = {tiny_dino_dir}\n"
            f"output_dir = out_{tag}\nname = dino\n", encoding="utf-8")
        proc = _run_cli(recipe)
        assert proc.returncode == 0, proc.stderr
        assert "graph=" in proc.stdout and "taps=12" in proc.stdout
        assert proc.stderr == ""
        blob = (tmp_path / f"out_{tag}" / "dino.pt").read_bytes()
        digests.append(hashlib.sha256(blob).hexdigest())
    assert digests[0] == digests[1]


def test_cli_exit_codes(tmp_path, write_recipe):
    assert _run_cli(tmp_path / "missing.txt").returncode == 3
    bad_key = write_recipe(model_id="clip-vit-b", output_dir="out", zoom="2")
    assert _run_cli(bad_key).returncode == 2
    unknown = write_recipe(filename="unknown.txt", model_id="vgg16", output_dir="out")
    assert _run_cli(unknown).returncode == 2


def test_scorer_consumes_exported_backbone(tiny_dino_dir, tmp_path):
    # the only coupling is the emitted files: spec + graph
    from zsiqa import Mode, MeasureConfig, MeasureKind, RgbImage, ScoreRequest
    from zsiqa.backbone import load_backbone, load_spec
    from zsiqa.pipeline import score_pair

    exported = export(_recipe("dinov1-vit-b", tiny_dino_dir, tmp_path / "out"))
    spec = load_spec(exported.spec_path)
    assert spec.input_size == 224 and spec.tile_stride == 200
    session = load_backbone(spec)  # probes the graph: all taps must resolve

    rng = np.random.default_rng(5)
    tile = rng.normal(size=(3, 224, 224)).astype(np.float32)
    stack = session.forward_features(tile)
    assert [name for name, _ in stack.layers] == list(spec.tap_points)
    assert all(t.shape == (196, 32) for _, t in stack.layers)
    assert session.forward_embedding(tile).shape == (32,)

    ref = RgbImage(rng.integers(0, 256, size=(224, 224, 3), dtype=np.uint8))
    noisy = RgbImage(np.clip(ref.pixels.astype(np.int16) + 8, 0, 255).astype(np.uint8))
    cfg = MeasureConfig(kind=MeasureKind.L2)
    same = score_pair(session, ScoreRequest(ref, ref, Mode.FEATS, cfg)).value
    diff = score_pair(session, ScoreRequest(ref, noisy, Mode.FEATS, cfg)).value
    assert same <= 1e-6
    assert diff > same
