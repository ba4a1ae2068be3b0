import numpy as np
import pytest

from zsiqa.backbone import load_backbone, load_spec, toy_backbone
from zsiqa.image import RgbImage, save_image
from support import SIGMAS, add_noise


@pytest.fixture(scope="session")
def toy_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("toy")
    toy_backbone(42, out)
    return out


@pytest.fixture(scope="session")
def toy_spec(toy_dir):
    return load_spec(toy_dir / "toy-42.spec")


@pytest.fixture(scope="session")
def toy_session(toy_spec):
    return load_backbone(toy_spec)


@pytest.fixture(scope="session")
def synthetic_dataset(tmp_path_factory):
    """One 256x256 reference, 20 noisy copies, canonical manifest.

    One fixed noise field scaled per level keeps the distortion strictly
    nested, so any sane distance is monotone in sigma.
    """
    root = tmp_path_factory.mktemp("dataset")
    rng = np.random.default_rng(1234)
    ref = rng.integers(0, 256, size=(256, 256, 3), dtype=np.uint8)
    field = rng.normal(0.0, 1.0, size=ref.shape)
    save_image(RgbImage(ref), root / "ref.png")

    rows = ["# dataset: synthetic",
            "# mos_convention: higher_better",
            "ref_path,dist_path,mos"]
    for i, sigma in enumerate(SIGMAS):
        name = f"dist_{i:02d}.png"
        save_image(RgbImage(add_noise(ref, sigma, field)), root / name)
        rows.append(f"ref.png,{name},{100.0 - 4.0 * i}")
    manifest = root / "manifest.csv"
    manifest.write_text("\n".join(rows) + "\n", encoding="utf-8")
    return manifest
