import json
import os

import numpy as np
import pytest

from lcprune import DataValidationError, load_pack, load_text_matrix, write_pack
from conftest import make_pack


def test_minimal_pack_roundtrip(tmp_path):
    pack = make_pack([[[1, 2], [3, 4], [5, 6]]], labels=[0, 1, 0])
    manifest = write_pack(pack, str(tmp_path))
    loaded = load_pack(manifest)
    assert loaded.n_samples == 3
    assert loaded.num_layers == 1
    assert loaded.num_classes == 2
    np.testing.assert_array_equal(loaded.layers[0].data, pack.layers[0].data)
    np.testing.assert_array_equal(loaded.labels, pack.labels)


def test_full_pack_roundtrip_bit_exact(tmp_path):
    rng = np.random.default_rng(0)
    probs = rng.random((4, 3)).astype(np.float32)
    probs /= probs.sum(axis=1, keepdims=True)
    pack = make_pack(
        [rng.standard_normal((4, 5)), rng.standard_normal((4, 2))],
        labels=[0, 2, 1, 0],
        probs=probs,
        perplexities=rng.random((4, 9)) + 0.5,
        split="train")
    loaded = load_pack(write_pack(pack, str(tmp_path)))
    for a, b in zip(loaded.layers, pack.layers):
        assert a.data.tobytes() == b.data.tobytes()
    assert loaded.labels.tobytes() == pack.labels.tobytes()
    assert loaded.probs.tobytes() == pack.probs.tobytes()
    assert loaded.perplexities.tobytes() == pack.perplexities.tobytes()
    assert loaded.split == "train"
    assert loaded.digest() == pack.digest()


def test_short_binary_names_file(tmp_path):
    pack = make_pack([[[1, 2], [3, 4], [5, 6]]], labels=[0, 1, 0])
    manifest = write_pack(pack, str(tmp_path))
    fpath = tmp_path / "layer_l0.f32"
    fpath.write_bytes(fpath.read_bytes()[:-1])
    with pytest.raises(DataValidationError, match="layer_l0.f32"):
        load_pack(manifest)


def test_nan_cites_row(tmp_path):
    data = np.zeros((10, 2), dtype=np.float32)
    data[7, 1] = np.nan
    with pytest.raises(DataValidationError, match="row 7"):
        write_pack(make_pack([data], labels=[0] * 10), str(tmp_path))
    # the same pack written raw must fail on load too
    good = np.zeros((10, 2), dtype="<f4")
    manifest = write_pack(make_pack([good], labels=[0] * 10), str(tmp_path))
    data.astype("<f4").tofile(tmp_path / "layer_l0.f32")
    with pytest.raises(DataValidationError, match="row 7"):
        load_pack(manifest)


def test_label_out_of_range(tmp_path):
    probs = np.full((3, 2), 0.5, dtype=np.float32)
    with pytest.raises(DataValidationError, match="label 2"):
        write_pack(make_pack([[[0], [1], [2]]], labels=[0, 1, 2], probs=probs),
                   str(tmp_path))


def test_probs_rowsum_checked(tmp_path):
    probs = np.array([[0.5, 0.5], [0.7, 0.6], [0.5, 0.5]], dtype=np.float32)
    with pytest.raises(DataValidationError, match="row 1"):
        write_pack(make_pack([[[0], [1], [2]]], probs=probs), str(tmp_path))


def test_nonpositive_perplexity(tmp_path):
    pp = np.array([[1.0, 2.0], [0.0, 1.0]], dtype=np.float32)
    with pytest.raises(DataValidationError, match="perplexities"):
        write_pack(make_pack([[[0], [1]]], perplexities=pp), str(tmp_path))


def test_missing_file_and_bad_manifest(tmp_path):
    manifest = write_pack(make_pack([[[1], [2]]]), str(tmp_path))
    os.remove(tmp_path / "layer_l0.f32")
    with pytest.raises(DataValidationError, match="missing file"):
        load_pack(manifest)
    (tmp_path / "pack.json").write_text("{not json")
    with pytest.raises(DataValidationError, match="invalid JSON"):
        load_pack(manifest)
    with pytest.raises(DataValidationError, match="not found"):
        load_pack(str(tmp_path / "nope.json"))


def test_unsupported_version(tmp_path):
    manifest = write_pack(make_pack([[[1], [2]]]), str(tmp_path))
    man = json.loads((tmp_path / "pack.json").read_text())
    man["version"] = 99
    (tmp_path / "pack.json").write_text(json.dumps(man))
    with pytest.raises(DataValidationError, match="version"):
        load_pack(manifest)


def test_write_to_unwritable_dir(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(OSError):
        write_pack(make_pack([[[1], [2]]]), str(blocker / "sub"))


def test_text_matrix_ok(tmp_path):
    p = tmp_path / "m.csv"
    p.write_text("1,2\n3,4\n")
    np.testing.assert_array_equal(load_text_matrix(str(p)),
                                  np.array([[1, 2], [3, 4]], dtype=np.float32))


def test_text_matrix_ragged(tmp_path):
    p = tmp_path / "m.csv"
    p.write_text("1,2\n3\n")
    with pytest.raises(DataValidationError, match="line 2"):
        load_text_matrix(str(p))


def test_text_matrix_unparsable(tmp_path):
    p = tmp_path / "m.csv"
    p.write_text("1,x\n")
    with pytest.raises(DataValidationError, match="row 1 column 2"):
        load_text_matrix(str(p))
