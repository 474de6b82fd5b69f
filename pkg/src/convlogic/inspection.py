"""Kernel inspection: strongest-activating training samples, the editable
kernel label map, and labelled rendering of rules and per-sample traces."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError
from .program import ClassDecision, Program, _render_rule, infer, serialise
from .quantise import OUTPUT_LAYER, quantise


@dataclass(frozen=True)
class KernelProfile:
    layer: str
    kernel: int
    sample_indices: tuple[int, ...]
    norms: tuple[float, ...]
    image_refs: tuple[str, ...] | None


def top_m(d, layer: str, kernel: int, m: int) -> KernelProfile:
    """The m training samples with the largest norm for one kernel,
    descending; equal norms resolve to the lower sample index."""
    if m < 1:
        raise DataError("m must be >= 1")
    if layer not in d.norms:
        raise DataError(f"unknown layer {layer!r}")
    col = d.norms[layer]
    if not (0 <= kernel < col.shape[1]):
        raise DataError(f"kernel {kernel} out of range for layer {layer!r}")
    train = d.split("train")
    if m > train.size:
        raise DataError(f"m={m} exceeds the training split size {train.size}")
    values = col[train, kernel].astype(np.float64)
    order = np.lexsort((train, -values))[:m]
    chosen = train[order]
    refs = None
    if d.manifest.image_refs is not None:
        refs = tuple(d.manifest.image_refs[i] for i in chosen)
    return KernelProfile(layer, kernel, tuple(int(i) for i in chosen),
                         tuple(float(v) for v in values[order]), refs)


def format_profile(p: KernelProfile) -> str:
    lines = [f"top {len(p.sample_indices)} samples for {p.layer}.{p.kernel}"]
    for rank, (i, v) in enumerate(zip(p.sample_indices, p.norms), 1):
        ref = f"  {p.image_refs[rank - 1]}" if p.image_refs else ""
        lines.append(f"{rank:>3}. sample {i:<8} norm {v:.6g}{ref}")
    return "\n".join(lines)


class LabelMap:
    """Editable map from (layer, kernel) to a human label.

    Text format: one ``layer.kernel = label`` per line, ``#`` comments.
    """

    def __init__(self, entries: dict[tuple[str, int], str] | None = None):
        self.entries: dict[tuple[str, int], str] = dict(entries or {})
        for key, label in self.entries.items():
            if not label:
                raise DataError(f"empty label for {key[0]}.{key[1]}")

    @classmethod
    def parse(cls, text: str) -> "LabelMap":
        entries: dict[tuple[str, int], str] = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            lhs, eq, label = line.partition("=")
            layer, dot, idx = lhs.strip().rpartition(".")
            label = label.strip()
            if not eq or not dot or not idx.isdigit() or not label:
                raise DataError(f"label map line {lineno}: expected 'layer.kernel = label'")
            entries[(layer, int(idx))] = label
        return cls(entries)

    @classmethod
    def load(cls, path) -> "LabelMap":
        return cls.parse(Path(path).read_text(encoding="utf-8"))

    def dump(self) -> str:
        lines = [f"{layer}.{kernel} = {label}"
                 for (layer, kernel), label in sorted(self.entries.items())]
        return "\n".join(lines) + ("\n" if lines else "")

    def save(self, path) -> None:
        Path(path).write_text(self.dump(), encoding="utf-8")


def render_rules(p: Program, labels: LabelMap | None = None) -> str:
    """Program text with kernel literals replaced by their labels.

    Unlabelled kernels render as raw literals; with no labels at all the
    output equals `serialise(p)`.
    """
    return serialise(p, labels.entries if labels else None)


def explain_sample(p: Program, d, index: int, labels: LabelMap | None = None) -> str:
    """Fired-rule trace for one sample, with predicted, teacher and
    ground-truth classes."""
    if not (0 <= index < d.n_samples):
        raise DataError(f"sample {index} out of range")
    lep = p.lep
    if lep not in d.norms:
        raise DataError(f"layer {lep!r} missing from dataset")
    bits = quantise(d.norms[lep][index:index + 1], np.asarray(p.thresholds))[0]
    decision = infer(p, bits)
    names = p.class_names
    entries = labels.entries if labels else None

    lines = [f"sample {index}"]
    if decision.fired:
        for si, ri in decision.fired:
            rs = p.rulesets[si]
            lines.append(f"  fired [{rs.source} -> {rs.target}] "
                         + _render_rule(rs.rules[ri], names, entries))
    else:
        lines.append("  no output rule fired")
    predicted = names[decision.class_index] if decision.class_index is not None else "abstain"
    lines.append(f"  predicted: {predicted}")
    lines.append(f"  teacher:   {names[int(d.teacher[index])]}")
    lines.append(f"  truth:     {names[int(d.labels[index])]}")
    return "\n".join(lines)
