import pytest
import torch

import transformers

transformers.logging.set_verbosity_error()


def _save(model, directory):
    model.eval()
    model.save_pretrained(directory)
    return directory


@pytest.fixture(scope="session")
def tiny_clip_dir(tmp_path_factory):
    """A 12-block CLIP vision tower at toy width, saved as a local checkpoint."""
    cfg = transformers.CLIPVisionConfig(
        hidden_size=32, intermediate_size=64, num_hidden_layers=12,
        num_attention_heads=2, image_size=224, patch_size=32, projection_dim=16)
    torch.manual_seed(0)
    model = transformers.CLIPVisionModelWithProjection(cfg)
    return _save(model, tmp_path_factory.mktemp("tiny-clip"))


@pytest.fixture(scope="session")
def tiny_dino_dir(tmp_path_factory):
    cfg = transformers.ViTConfig(
        hidden_size=32, intermediate_size=64, num_hidden_layers=12,
        num_attention_heads=2, image_size=224, patch_size=16)
    torch.manual_seed(0)
    model = transformers.ViTModel(cfg, add_pooling_layer=False)
    return _save(model, tmp_path_factory.mktemp("tiny-dino"))


@pytest.fixture(scope="session")
def tiny_dinov2_dir(tmp_path_factory):
    # native size 518 like the published weights; exports still run at 224
    # through interpolated position encodings.
    cfg = transformers.Dinov2Config(
        hidden_size=32, num_hidden_layers=12, num_attention_heads=2,
        image_size=518, patch_size=14)
    torch.manual_seed(0)
    model = transformers.Dinov2Model(cfg)
    return _save(model, tmp_path_factory.mktemp("tiny-dinov2"))


@pytest.fixture
def write_recipe(tmp_path):
    def make(filename="recipe.txt", **keys):
        path = tmp_path / filename
        path.write_text("".join(f"{k} = {v}\n" for k, v in keys.items()),
                        encoding="utf-8")
        return path
    return make
