"""On-disk activation dataset: manifest + binary norm/label/prediction files,
plus a synthetic-teacher generator for desk-scale experiments.

Directory layout::

    <dir>/manifest.json     structured text manifest
    <dir>/<layer>.norms     "EATN", u32 version=1, u32 n_samples, u32 n_kernels,
                            then n*k float32 little-endian, sample-major
    <dir>/labels.bin        "EATL", u32 n, then u16 per sample
    <dir>/teacher.bin       "EATP", u32 n, then u16 per sample
    <dir>/images/...        optional, opaque to the core

The output layer is virtual: it is not listed in the manifest's layers and
has one kernel per class, with truth values taken from teacher.bin.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import DataError
from .program import Literal, Program, Rule, RuleSet, _fire_mask, valid_name
from .quantise import OUTPUT_LAYER

MAGIC_NORMS = b"EATN"
MAGIC_LABELS = b"EATL"
MAGIC_PREDS = b"EATP"
SPLIT_NAMES = ("train", "val", "test")


@dataclass(frozen=True)
class LayerMeta:
    name: str
    n_kernels: int
    pooled: bool
    file: str


@dataclass(frozen=True)
class Manifest:
    version: int
    n_samples: int
    class_names: tuple[str, ...]
    splits: dict[str, tuple[int, ...]]
    layers: tuple[LayerMeta, ...]
    image_refs: tuple[str, ...] | None = None

    def layer(self, name: str) -> LayerMeta:
        for lm in self.layers:
            if lm.name == name:
                return lm
        raise DataError(f"unknown layer {name!r}")


@dataclass(frozen=True)
class Dataset:
    manifest: Manifest
    norms: dict[str, np.ndarray]
    labels: np.ndarray
    teacher: np.ndarray

    @property
    def n_samples(self) -> int:
        return self.manifest.n_samples

    def split(self, name: str) -> np.ndarray:
        if name not in self.manifest.splits:
            raise DataError(f"unknown split {name!r}")
        return np.asarray(self.manifest.splits[name], dtype=np.int64)


def validate_manifest(m: Manifest) -> None:
    if m.version != 1:
        raise DataError(f"unsupported manifest version {m.version}")
    if m.n_samples < 1:
        raise DataError("n_samples must be >= 1")
    if len(m.class_names) < 2:
        raise DataError("need at least 2 classes")
    if len(set(m.class_names)) != len(m.class_names):
        raise DataError("duplicate class name")
    for c in m.class_names:
        if not valid_name(c):
            raise DataError(f"invalid class name {c!r}")
    if set(m.splits) != set(SPLIT_NAMES):
        raise DataError(f"splits must be exactly {SPLIT_NAMES}")
    seen: set[int] = set()
    for name in SPLIT_NAMES:
        idx = m.splits[name]
        for i in idx:
            if not (0 <= i < m.n_samples):
                raise DataError(f"split {name!r} index {i} out of range")
        s = set(idx)
        if len(s) != len(idx):
            raise DataError(f"split {name!r} has duplicate indices")
        if s & seen:
            raise DataError("splits are not disjoint")
        seen |= s
    if not m.layers:
        raise DataError("manifest lists no layers")
    names = [lm.name for lm in m.layers]
    if len(set(names)) != len(names):
        raise DataError("duplicate layer name")
    for lm in m.layers:
        if not valid_name(lm.name):
            raise DataError(f"invalid layer name {lm.name!r} ('output' is reserved)")
        if lm.n_kernels < 1:
            raise DataError(f"layer {lm.name!r} has no kernels")
    if m.image_refs is not None and len(m.image_refs) != m.n_samples:
        raise DataError("image_refs length must equal n_samples")


def validate_dataset(d: Dataset) -> None:
    validate_manifest(d.manifest)
    n = d.manifest.n_samples
    if set(d.norms) != {lm.name for lm in d.manifest.layers}:
        raise DataError("norm matrices do not match manifest layers")
    for lm in d.manifest.layers:
        mat = d.norms[lm.name]
        if mat.shape != (n, lm.n_kernels):
            raise DataError(
                f"shape mismatch: layer {lm.name!r} is {mat.shape}, manifest "
                f"declares ({n}, {lm.n_kernels})")
        if not np.isfinite(mat).all():
            raise DataError(f"non-finite norm in layer {lm.name!r}")
        if (mat < 0).any():
            raise DataError(f"negative norm in layer {lm.name!r}")
    k = len(d.manifest.class_names)
    for what, vec in (("labels", d.labels), ("teacher predictions", d.teacher)):
        if vec.shape != (n,):
            raise DataError(f"shape mismatch: {what} has {vec.shape[0]} entries, expected {n}")
        if vec.size and (vec.min() < 0 or vec.max() >= k):
            raise DataError(f"{what} contain a class index out of range")


# ---------------------------------------------------------------------------
# Binary files
# ---------------------------------------------------------------------------

def _read_exact(f, n: int, path: Path) -> bytes:
    buf = f.read(n)
    if len(buf) != n:
        raise DataError(f"{path}: truncated file")
    return buf


def write_norms(path: Path, matrix: np.ndarray) -> None:
    m = np.ascontiguousarray(matrix, dtype="<f4")
    with open(path, "wb") as f:
        f.write(MAGIC_NORMS)
        f.write(struct.pack("<III", 1, m.shape[0], m.shape[1]))
        f.write(m.tobytes(order="C"))


def read_norms(path: Path) -> np.ndarray:
    with open(path, "rb") as f:
        magic = _read_exact(f, 4, path)
        if magic != MAGIC_NORMS:
            raise DataError(f"{path}: bad magic bytes {magic!r}")
        version, n, k = struct.unpack("<III", _read_exact(f, 12, path))
        if version != 1:
            raise DataError(f"{path}: unsupported version {version}")
        data = _read_exact(f, 4 * n * k, path)
        if f.read(1):
            raise DataError(f"{path}: trailing bytes")
    return np.frombuffer(data, dtype="<f4").reshape(n, k).copy()


def _write_u16_vector(path: Path, magic: bytes, vec: np.ndarray) -> None:
    v = np.ascontiguousarray(vec, dtype="<u2")
    with open(path, "wb") as f:
        f.write(magic)
        f.write(struct.pack("<I", v.shape[0]))
        f.write(v.tobytes(order="C"))


def _read_u16_vector(path: Path, magic: bytes) -> np.ndarray:
    with open(path, "rb") as f:
        got = _read_exact(f, 4, path)
        if got != magic:
            raise DataError(f"{path}: bad magic bytes {got!r}")
        (n,) = struct.unpack("<I", _read_exact(f, 4, path))
        data = _read_exact(f, 2 * n, path)
        if f.read(1):
            raise DataError(f"{path}: trailing bytes")
    return np.frombuffer(data, dtype="<u2").astype(np.int64)


# ---------------------------------------------------------------------------
# Directory load/save
# ---------------------------------------------------------------------------

def _manifest_to_doc(m: Manifest) -> dict:
    return {
        "version": m.version,
        "n_samples": m.n_samples,
        "class_names": list(m.class_names),
        "splits": {name: list(m.splits[name]) for name in SPLIT_NAMES},
        "layers": [
            {"name": lm.name, "n_kernels": lm.n_kernels, "pooled": lm.pooled, "file": lm.file}
            for lm in m.layers
        ],
        "image_refs": list(m.image_refs) if m.image_refs is not None else None,
    }


def _manifest_from_doc(doc: dict, path: Path) -> Manifest:
    try:
        layers = tuple(
            LayerMeta(str(e["name"]), int(e["n_kernels"]), bool(e["pooled"]), str(e["file"]))
            for e in doc["layers"]
        )
        refs = doc.get("image_refs")
        return Manifest(
            version=int(doc["version"]),
            n_samples=int(doc["n_samples"]),
            class_names=tuple(str(c) for c in doc["class_names"]),
            splits={str(k): tuple(int(i) for i in v) for k, v in doc["splits"].items()},
            layers=layers,
            image_refs=tuple(str(r) for r in refs) if refs is not None else None,
        )
    except (KeyError, TypeError, ValueError) as e:
        raise DataError(f"{path}: malformed manifest: {e}") from e


def save_dataset(d: Dataset, path) -> None:
    """Write a dataset directory. load_dataset reproduces it bit-exactly."""
    validate_dataset(d)
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    for lm in d.manifest.layers:
        write_norms(root / lm.file, d.norms[lm.name])
    _write_u16_vector(root / "labels.bin", MAGIC_LABELS, d.labels)
    _write_u16_vector(root / "teacher.bin", MAGIC_PREDS, d.teacher)
    doc = _manifest_to_doc(d.manifest)
    (root / "manifest.json").write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def load_dataset(path) -> Dataset:
    """Load and fully validate a dataset directory."""
    root = Path(path)
    mpath = root / "manifest.json"
    if not mpath.is_file():
        raise DataError(f"missing file {mpath}")
    try:
        doc = json.loads(mpath.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise DataError(f"{mpath}: invalid manifest text: {e}") from e
    manifest = _manifest_from_doc(doc, mpath)
    validate_manifest(manifest)

    norms: dict[str, np.ndarray] = {}
    for lm in manifest.layers:
        fpath = root / lm.file
        if not fpath.is_file():
            raise DataError(f"missing file {fpath}")
        norms[lm.name] = read_norms(fpath)
    for name in ("labels.bin", "teacher.bin"):
        if not (root / name).is_file():
            raise DataError(f"missing file {root / name}")
    labels = _read_u16_vector(root / "labels.bin", MAGIC_LABELS)
    teacher = _read_u16_vector(root / "teacher.bin", MAGIC_PREDS)

    d = Dataset(manifest=manifest, norms=norms, labels=labels, teacher=teacher)
    validate_dataset(d)
    return d


# ---------------------------------------------------------------------------
# Synthetic teacher
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SynthConfig:
    """Configuration for a planted-rule synthetic dataset.

    ``rules`` chains one RuleSet per boundary: conv0 -> conv1 -> ... ->
    output.  Bits for conv0 are planted at random (or exhaustively, cycling
    all 2^K assignments); each deeper layer's bits are derived by rule
    evaluation under default negation.  Teacher predictions come from the
    output rule set, first matching rule wins, ``default_class`` otherwise.
    Norms are two-valued per kernel (mean-threshold +/- margin) so that
    quantising at the training mean recovers the planted bits exactly.
    """

    n_samples: int
    layer_sizes: tuple[int, ...]
    n_classes: int
    seed: int
    rules: tuple[RuleSet, ...]
    default_class: int = 0
    exhaustive: bool = False
    split_fractions: tuple[float, float, float] = (0.7, 0.15, 0.15)
    class_names: tuple[str, ...] | None = None
    label_noise: float = 0.0


def _layer_names(cfg: SynthConfig) -> list[str]:
    return [f"conv{i}" for i in range(len(cfg.layer_sizes))]


def _validate_synth(cfg: SynthConfig) -> None:
    if cfg.n_samples < 1 or cfg.n_classes < 2 or not cfg.layer_sizes:
        raise DataError("need n_samples >= 1, n_classes >= 2 and at least one layer")
    if not (0 <= cfg.default_class < cfg.n_classes):
        raise DataError("default_class out of range")
    if abs(sum(cfg.split_fractions) - 1.0) > 1e-9 or min(cfg.split_fractions) < 0:
        raise DataError("split fractions must be non-negative and sum to 1")
    if cfg.exhaustive and cfg.n_samples < 2 ** cfg.layer_sizes[0]:
        raise DataError("exhaustive mode needs n_samples >= 2^K for the first layer")
    names = _layer_names(cfg)
    sizes = dict(zip(names, cfg.layer_sizes))
    sizes[OUTPUT_LAYER] = cfg.n_classes
    expected = list(zip(names, names[1:] + [OUTPUT_LAYER]))
    got = [(rs.source, rs.target) for rs in cfg.rules]
    if got != expected:
        raise DataError(f"rule boundaries {got} must chain {expected}")
    for rs in cfg.rules:
        for r in rs.rules:
            if rs.target == OUTPUT_LAYER and len(r.consequents) != 1:
                raise DataError("output ground-truth rules must assert a single class")
            for lit in r.antecedents + r.consequents:
                if lit.kernel >= sizes[lit.layer]:
                    raise DataError(
                        f"rule references undeclared kernel {lit.layer}.{lit.kernel}")


def generate_synthetic(cfg: SynthConfig) -> Dataset:
    """Deterministic planted-rule dataset; a pure function of the config."""
    _validate_synth(cfg)
    rng = np.random.default_rng(cfg.seed)
    n = cfg.n_samples
    names = _layer_names(cfg)

    # plant the first layer, derive the rest through the rule chain
    if cfg.exhaustive:
        pattern = np.arange(n, dtype=np.int64) % (2 ** cfg.layer_sizes[0])
        cols = [(pattern >> k) & 1 for k in range(cfg.layer_sizes[0])]
        bits0 = (np.stack(cols, axis=1) * 2 - 1).astype(np.int8)
    else:
        bits0 = rng.choice(np.array([-1, 1], dtype=np.int8), size=(n, cfg.layer_sizes[0]))
    bits = {names[0]: bits0}
    for rs in cfg.rules[:-1]:
        out = np.full((n, dict(zip(names, cfg.layer_sizes))[rs.target]), -1, dtype=np.int8)
        for rule in rs.rules:
            m = _fire_mask(rule, bits[rs.source])
            for lit in rule.consequents:
                out[m, lit.kernel] = 1
        bits[rs.target] = out

    teacher = np.full(n, cfg.default_class, dtype=np.int64)
    unassigned = np.ones(n, dtype=bool)
    for rule in cfg.rules[-1].rules:
        m = _fire_mask(rule, bits[names[-1]]) & unassigned
        teacher[m] = rule.consequents[0].kernel
        unassigned[m] = False

    # splits: seeded permutation, stored sorted
    perm = rng.permutation(n)
    n_tr = int(round(cfg.split_fractions[0] * n))
    n_va = int(round(cfg.split_fractions[1] * n))
    splits = {
        "train": tuple(sorted(int(i) for i in perm[:n_tr])),
        "val": tuple(sorted(int(i) for i in perm[n_tr:n_tr + n_va])),
        "test": tuple(sorted(int(i) for i in perm[n_tr + n_va:])),
    }
    train = np.asarray(splits["train"], dtype=np.int64)
    if train.size == 0:
        raise DataError("train split is empty; raise the train fraction")

    # norms: base +/- margin around the planted sign.  The training mean then
    # sits strictly between the two values, so strict-> quantisation recovers
    # the planted bits, unless a kernel is true on every training sample.
    norms: dict[str, np.ndarray] = {}
    for name, k in zip(names, cfg.layer_sizes):
        b = bits[name]
        if b[train].min(axis=0).max() == 1:
            bad = int(np.argmax(b[train].min(axis=0)))
            raise DataError(
                f"kernel {name}.{bad} is true on every training sample; "
                "planted bits would not be recoverable")
        base = rng.uniform(1.0, 2.0, size=k)
        margin = rng.uniform(0.25, 0.5, size=k)
        norms[name] = (base + margin * b).astype(np.float32)

    labels = teacher.copy()
    if cfg.label_noise > 0:
        flip = rng.random(n) < cfg.label_noise
        shift = rng.integers(1, cfg.n_classes, size=n)
        labels[flip] = (labels[flip] + shift[flip]) % cfg.n_classes

    class_names = cfg.class_names or tuple(f"class{i}" for i in range(cfg.n_classes))
    manifest = Manifest(
        version=1,
        n_samples=n,
        class_names=tuple(class_names),
        splits=splits,
        layers=tuple(
            LayerMeta(name, k, pooled=False, file=f"{name}.norms")
            for name, k in zip(names, cfg.layer_sizes)
        ),
        image_refs=None,
    )
    d = Dataset(manifest=manifest, norms=norms, labels=labels, teacher=teacher)
    validate_dataset(d)
    return d
