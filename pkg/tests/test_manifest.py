import numpy as np
import pytest

from zsiqa.errors import AdapterError, DuplicateError, ParseError
from zsiqa.image import RgbImage, save_image
from zsiqa.manifest import (
    EvalSample,
    adapt_pipal,
    adapt_tid2013,
    load_manifest,
    write_manifest,
)


def write(tmp_path, text, name="m.csv"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


# --- parsing ------------------------------------------------------------------

def test_minimal_manifest(tmp_path):
    m = load_manifest(write(tmp_path, "ref_path,dist_path,mos\na.png,b.png,3.5\n"))
    assert m.samples == [EvalSample("a.png", "b.png", 3.5)]
    assert m.mos_convention == "higher_better"
    assert m.dataset is None
    assert m.root == tmp_path


def test_directives_and_comments(tmp_path):
    text = ("# dataset: demo\n"
            "# mos_convention: lower_better\n"
            "# free-form comment\n"
            "ref_path,dist_path,mos\n"
            "a.png,b.png,1\n")
    m = load_manifest(write(tmp_path, text))
    assert m.dataset == "demo"
    assert m.mos_convention == "lower_better"


def test_resolved_paths_are_relative_to_manifest(tmp_path):
    sub = tmp_path / "deep"
    sub.mkdir()
    m = load_manifest(write(sub, "ref_path,dist_path,mos\n../r.png,d.png,1\n"))
    ref, dist = m.resolved(m.samples[0])
    assert ref == sub / "../r.png"
    assert dist == sub / "d.png"


def test_unknown_convention_rejected(tmp_path):
    with pytest.raises(ParseError, match="mos_convention"):
        load_manifest(write(tmp_path, "# mos_convention: bigger\nref_path,dist_path,mos\n"))


def test_wrong_header_rejected(tmp_path):
    with pytest.raises(ParseError, match="header"):
        load_manifest(write(tmp_path, "ref,dist,mos\na,b,1\n"))


def test_missing_header_rejected(tmp_path):
    with pytest.raises(ParseError, match="header"):
        load_manifest(write(tmp_path, "# only comments\n"))


def test_field_count_enforced(tmp_path):
    with pytest.raises(ParseError, match="line 2"):
        load_manifest(write(tmp_path, "ref_path,dist_path,mos\na.png,b.png\n"))


def test_bad_mos_rejected_with_line(tmp_path):
    with pytest.raises(ParseError, match="line 3"):
        load_manifest(write(tmp_path, "ref_path,dist_path,mos\na,b,1\nc,d,abc\n"))
    with pytest.raises(ParseError, match="non-finite"):
        load_manifest(write(tmp_path, "ref_path,dist_path,mos\na,b,inf\n"))


def test_empty_path_rejected(tmp_path):
    with pytest.raises(ParseError):
        load_manifest(write(tmp_path, "ref_path,dist_path,mos\n,b.png,1\n"))


def test_duplicate_pair_rejected(tmp_path):
    text = "ref_path,dist_path,mos\na,b,1\na,b,2\n"
    with pytest.raises(DuplicateError):
        load_manifest(write(tmp_path, text))
    # same distorted under a different reference is fine
    ok = "ref_path,dist_path,mos\na,b,1\nc,b,2\n"
    assert len(load_manifest(write(tmp_path, ok, "ok.csv")).samples) == 2


def test_write_round_trip_and_determinism(tmp_path):
    samples = [EvalSample("r.png", f"d{i}.png", 10.0 - 0.25 * i) for i in range(5)]
    p1 = tmp_path / "m1.csv"
    p2 = tmp_path / "m2.csv"
    write_manifest(p1, samples, dataset="demo", mos_convention="lower_better")
    write_manifest(p2, samples, dataset="demo", mos_convention="lower_better")
    assert p1.read_bytes() == p2.read_bytes()
    m = load_manifest(p1)
    assert m.samples == samples
    assert (m.dataset, m.mos_convention) == ("demo", "lower_better")


# --- TID2013 adapter -------------------------------------------------------------

def tiny_image(path, seed):
    rng = np.random.default_rng(seed)
    save_image(RgbImage(rng.integers(0, 256, (8, 8, 3), dtype=np.uint8)), path)


def make_tid_tree(tmp_path, lowercase_refs=False):
    root = tmp_path / "tid2013"
    (root / "reference_images").mkdir(parents=True)
    (root / "distorted_images").mkdir()
    rows = []
    for r in (1, 2):
        ref_name = f"i{r:02d}.bmp" if lowercase_refs else f"I{r:02d}.BMP"
        tiny_image(root / "reference_images" / ref_name, seed=r)
        for d in (1, 2):
            for lvl in (1, 2):
                name = f"i{r:02d}_{d:02d}_{lvl}.bmp"
                tiny_image(root / "distorted_images" / name, seed=100 * r + 10 * d + lvl)
                rows.append(f"{5.0 - lvl * 0.7 - d * 0.1:.5f} {name}")
    (root / "mos_with_names.txt").write_text("\n".join(rows) + "\n")
    return root


def test_adapt_tid2013(tmp_path):
    root = make_tid_tree(tmp_path)
    out = tmp_path / "out" / "tid.csv"
    out.parent.mkdir()
    m = adapt_tid2013(root, out)
    assert m.dataset == "tid2013"
    assert m.mos_convention == "higher_better"
    assert len(m.samples) == 8
    first = m.samples[0]
    assert first.dist_path.endswith("i01_01_1.bmp")
    assert first.ref_path.endswith("I01.BMP")
    ref, dist = m.resolved(first)
    assert ref.is_file() and dist.is_file()


def test_adapt_tid2013_case_insensitive_refs(tmp_path):
    root = make_tid_tree(tmp_path, lowercase_refs=True)
    m = adapt_tid2013(root, tmp_path / "tid.csv")
    assert len(m.samples) == 8
    assert m.samples[0].ref_path.endswith("i01.bmp")


def test_adapt_tid2013_missing_listing(tmp_path):
    with pytest.raises(FileNotFoundError):
        adapt_tid2013(tmp_path, tmp_path / "out.csv")


def test_adapt_tid2013_missing_reference(tmp_path):
    root = make_tid_tree(tmp_path)
    (root / "reference_images" / "I02.BMP").unlink()
    with pytest.raises(AdapterError, match="I02"):
        adapt_tid2013(root, tmp_path / "out.csv")


def test_adapt_tid2013_bad_name(tmp_path):
    root = make_tid_tree(tmp_path)
    listing = root / "mos_with_names.txt"
    listing.write_text(listing.read_text() + "4.2 not_a_tid_name.bmp\n")
    with pytest.raises(AdapterError, match="not_a_tid_name"):
        adapt_tid2013(root, tmp_path / "out.csv")


# --- PIPAL adapter ----------------------------------------------------------------

def make_pipal_tree(tmp_path):
    root = tmp_path / "pipal"
    (root / "Train_Ref").mkdir(parents=True)
    (root / "Train_Dist").mkdir()
    (root / "Train_Label").mkdir()
    for r in ("A0001", "A0002"):
        tiny_image(root / "Train_Ref" / f"{r}.bmp", seed=hash(r) % 1000)
        lines = []
        for k in range(3):
            name = f"{r}_00_{k:02d}.bmp"
            tiny_image(root / "Train_Dist" / name, seed=k + 7)
            lines.append(f"{name},{1500.0 - 25.0 * k}")
        (root / "Train_Label" / f"{r}.txt").write_text("\n".join(lines) + "\n")
    return root


def test_adapt_pipal(tmp_path):
    root = make_pipal_tree(tmp_path)
    m = adapt_pipal(root, tmp_path / "pipal.csv")
    assert m.dataset == "pipal"
    assert len(m.samples) == 6
    assert {s.mos for s in m.samples} == {1500.0, 1475.0, 1450.0}
    ref, dist = m.resolved(m.samples[0])
    assert ref.is_file() and dist.is_file()


def test_adapt_pipal_no_labels(tmp_path):
    (tmp_path / "empty").mkdir()
    with pytest.raises(FileNotFoundError):
        adapt_pipal(tmp_path / "empty", tmp_path / "out.csv")


def test_adapt_pipal_missing_image(tmp_path):
    root = make_pipal_tree(tmp_path)
    (root / "Train_Dist" / "A0001_00_01.bmp").unlink()
    with pytest.raises(AdapterError, match="A0001_00_01"):
        adapt_pipal(root, tmp_path / "out.csv")


def test_adapt_pipal_malformed_label(tmp_path):
    root = make_pipal_tree(tmp_path)
    label = root / "Train_Label" / "A0001.txt"
    label.write_text(label.read_text() + "justonefield\n")
    with pytest.raises(ParseError):
        adapt_pipal(root, tmp_path / "out.csv")
