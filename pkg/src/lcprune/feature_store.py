"""On-disk dataset representation: manifest + raw binary matrices.

Layout: little-endian IEEE-754 32-bit floats, row-major, headerless; all
shape metadata lives in the JSON manifest (`pack.json`). Labels are
little-endian unsigned 32-bit integers. A loaded FeaturePack is immutable
and safe to share across threads.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DataValidationError

MANIFEST_VERSION = 1
PROB_ROWSUM_TOL = 1e-4
SPLITS = ("train", "val", "unsplit")


@dataclass(frozen=True)
class LayerMatrix:
    """One layer's feature matrix: n samples by d dimensions, float32."""

    name: str
    data: np.ndarray

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def d(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class FeaturePack:
    """A dataset's layer features plus optional labels/probs/perplexities."""

    layers: list[LayerMatrix]
    labels: Optional[np.ndarray] = None
    probs: Optional[np.ndarray] = None
    perplexities: Optional[np.ndarray] = None
    split: str = "unsplit"

    @property
    def n_samples(self) -> int:
        return self.layers[0].n

    @property
    def num_layers(self) -> int:
        return len(self.layers)

    @property
    def num_classes(self) -> Optional[int]:
        """K: fixed by the probs matrix when present, else max(label)+1."""
        if self.probs is not None:
            return self.probs.shape[1]
        if self.labels is not None:
            return int(self.labels.max()) + 1
        return None

    def digest(self) -> str:
        """SHA-256 over all matrix bytes and shape metadata."""
        h = hashlib.sha256()
        h.update(self.split.encode())
        for lm in self.layers:
            h.update(lm.name.encode())
            h.update(np.int64(lm.d).tobytes())
            h.update(np.ascontiguousarray(lm.data, dtype="<f4").tobytes())
        for arr, tag in ((self.labels, b"labels"), (self.probs, b"probs"),
                         (self.perplexities, b"pp")):
            if arr is not None:
                h.update(tag)
                h.update(np.ascontiguousarray(arr).tobytes())
        return h.hexdigest()


def _check_finite(data: np.ndarray, name: str) -> None:
    bad = ~np.isfinite(data)
    if bad.any():
        row = int(np.argwhere(bad.any(axis=1))[0, 0]) if data.ndim == 2 else int(np.argwhere(bad)[0, 0])
        raise DataValidationError(f"{name}: non-finite entry at row {row}")


def validate_pack(pack: FeaturePack) -> None:
    """Check every pack invariant; raise DataValidationError on the first hit."""
    if not pack.layers:
        raise DataValidationError("pack has no layers")
    if pack.split not in SPLITS:
        raise DataValidationError(f"unknown split tag {pack.split!r}")
    n = pack.layers[0].n
    if n <= 0:
        raise DataValidationError("pack has zero samples")
    for lm in pack.layers:
        if lm.data.ndim != 2 or lm.d <= 0:
            raise DataValidationError(f"layer {lm.name}: not a 2-D matrix")
        if lm.n != n:
            raise DataValidationError(
                f"layer {lm.name}: {lm.n} rows, expected {n}")
        _check_finite(lm.data, f"layer {lm.name}")
    if pack.labels is not None:
        if pack.labels.shape != (n,):
            raise DataValidationError("labels: wrong length")
    if pack.probs is not None:
        if pack.probs.shape[0] != n:
            raise DataValidationError("probs: wrong row count")
        _check_finite(pack.probs, "probs")
        if (pack.probs < 0).any():
            row = int(np.argwhere((pack.probs < 0).any(axis=1))[0, 0])
            raise DataValidationError(f"probs: negative entry at row {row}")
        sums = pack.probs.sum(axis=1, dtype=np.float64)
        off = np.abs(sums - 1.0) > PROB_ROWSUM_TOL
        if off.any():
            row = int(np.argwhere(off)[0, 0])
            raise DataValidationError(
                f"probs: row {row} sums to {sums[row]:.6f}, expected 1")
        if pack.labels is not None and pack.labels.size:
            k = pack.probs.shape[1]
            if int(pack.labels.max()) >= k:
                row = int(np.argmax(pack.labels >= k))
                raise DataValidationError(
                    f"labels: row {row} has label {int(pack.labels[row])} >= K={k}")
    if pack.perplexities is not None:
        if pack.perplexities.shape[0] != n:
            raise DataValidationError("perplexities: wrong row count")
        _check_finite(pack.perplexities, "perplexities")
        if (pack.perplexities <= 0).any():
            row = int(np.argwhere((pack.perplexities <= 0).any(axis=1))[0, 0])
            raise DataValidationError(
                f"perplexities: nonpositive entry at row {row}")


def _read_binary(path: str, rows: int, cols: int, dtype: str, what: str) -> np.ndarray:
    if not os.path.isfile(path):
        raise DataValidationError(f"{what}: missing file {path}")
    expected = rows * cols * 4
    actual = os.path.getsize(path)
    if actual != expected:
        raise DataValidationError(
            f"{what}: {path} is {actual} bytes, expected {expected}")
    return np.fromfile(path, dtype=dtype).reshape(rows, cols)


def load_pack(manifest_path: str) -> FeaturePack:
    """Load and fully validate a pack from its `pack.json` manifest."""
    try:
        with open(manifest_path, encoding="utf-8") as fh:
            man = json.load(fh)
    except FileNotFoundError:
        raise DataValidationError(f"manifest not found: {manifest_path}")
    except json.JSONDecodeError as e:
        raise DataValidationError(f"manifest {manifest_path}: invalid JSON ({e})")
    if man.get("version") != MANIFEST_VERSION:
        raise DataValidationError(
            f"manifest {manifest_path}: unsupported version {man.get('version')!r}")
    base = os.path.dirname(os.path.abspath(manifest_path))
    n = int(man["n_samples"])
    layers = []
    for desc in man.get("layers", []):
        path = os.path.join(base, desc["file"])
        data = _read_binary(path, n, int(desc["dim"]), "<f4", f"layer {desc['name']}")
        layers.append(LayerMatrix(desc["name"], data))
    labels = None
    if man.get("labels"):
        path = os.path.join(base, man["labels"]["file"])
        if not os.path.isfile(path):
            raise DataValidationError(f"labels: missing file {path}")
        if os.path.getsize(path) != n * 4:
            raise DataValidationError(
                f"labels: {path} is {os.path.getsize(path)} bytes, expected {n * 4}")
        labels = np.fromfile(path, dtype="<u4")
    probs = None
    if man.get("probs"):
        path = os.path.join(base, man["probs"]["file"])
        probs = _read_binary(path, n, int(man["probs"]["num_classes"]), "<f4", "probs")
    perplexities = None
    if man.get("perplexities"):
        path = os.path.join(base, man["perplexities"]["file"])
        perplexities = _read_binary(
            path, n, int(man["perplexities"]["num_subnets"]), "<f4", "perplexities")
    pack = FeaturePack(layers=layers, labels=labels, probs=probs,
                       perplexities=perplexities,
                       split=man.get("split", "unsplit"))
    validate_pack(pack)
    return pack


def write_pack(pack: FeaturePack, out_dir: str) -> str:
    """Write a validated pack under out_dir; returns the manifest path.

    load_pack(write_pack(p)) reproduces p bit-exactly.
    """
    validate_pack(pack)
    os.makedirs(out_dir, exist_ok=True)
    man: dict = {"version": MANIFEST_VERSION, "n_samples": pack.n_samples,
                 "layers": [], "split": pack.split}
    for lm in pack.layers:
        fname = f"layer_{lm.name}.f32"
        np.ascontiguousarray(lm.data, dtype="<f4").tofile(os.path.join(out_dir, fname))
        man["layers"].append({"name": lm.name, "dim": lm.d, "file": fname})
    if pack.labels is not None:
        np.ascontiguousarray(pack.labels, dtype="<u4").tofile(
            os.path.join(out_dir, "labels.u32"))
        man["labels"] = {"file": "labels.u32"}
    if pack.probs is not None:
        np.ascontiguousarray(pack.probs, dtype="<f4").tofile(
            os.path.join(out_dir, "probs.f32"))
        man["probs"] = {"num_classes": pack.probs.shape[1], "file": "probs.f32"}
    if pack.perplexities is not None:
        np.ascontiguousarray(pack.perplexities, dtype="<f4").tofile(
            os.path.join(out_dir, "perplexities.f32"))
        man["perplexities"] = {"num_subnets": pack.perplexities.shape[1],
                               "file": "perplexities.f32"}
    manifest_path = os.path.join(out_dir, "pack.json")
    tmp = manifest_path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(man, fh, indent=2, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, manifest_path)
    return manifest_path


def load_text_matrix(path: str, delimiter: str = ",") -> np.ndarray:
    """Parse a rectangular delimiter-separated numeric table into float32."""
    rows: list[list[float]] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            fields = line.split(delimiter)
            if rows and len(fields) != len(rows[0]):
                raise DataValidationError(
                    f"{path}: ragged row at line {lineno} "
                    f"({len(fields)} fields, expected {len(rows[0])})")
            parsed = []
            for col, tok in enumerate(fields, start=1):
                try:
                    parsed.append(float(tok))
                except ValueError:
                    raise DataValidationError(
                        f"{path}: unparsable token {tok!r} at row {lineno} column {col}")
            rows.append(parsed)
    if not rows:
        raise DataValidationError(f"{path}: empty table")
    data = np.asarray(rows, dtype=np.float32)
    _check_finite(data, path)
    return data
