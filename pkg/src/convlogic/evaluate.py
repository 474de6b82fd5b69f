"""Metrics (accuracy, fidelity, program size) and layer x depth sweeps.

The sweep emits one CSV row per (entry layer, depth, split) plus a
human-readable results table.  Figure rendering lives in `figures`; this
module only produces the numbers.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConvlogicError, DataError
from .induction import ExtractionConfig, extract_program
from .program import Program, predict_dataset, simplify
from .quantise import OUTPUT_LAYER

CSV_HEADER = "lep,depth,alpha,split,accuracy,fidelity,abstain,rules,vars,vars_polarity,size"


def accuracy(preds, labels) -> float:
    """Fraction of exact matches; abstentions (-1) count as mismatches."""
    preds = np.asarray(preds)
    labels = np.asarray(labels)
    if preds.shape != labels.shape:
        raise DataError("prediction/label length mismatch")
    if preds.size == 0:
        raise DataError("empty prediction vector")
    return float(np.mean(preds == labels))


def fidelity(preds, teacher_preds) -> float:
    """Agreement rate with the original model's predictions."""
    return accuracy(preds, teacher_preds)


def abstain_rate(preds) -> float:
    preds = np.asarray(preds)
    if preds.size == 0:
        raise DataError("empty prediction vector")
    return float(np.mean(preds == -1))


@dataclass(frozen=True)
class ProgramStats:
    n_rules: int
    n_vars: int
    n_vars_polarity: int
    size: int


def program_stats(p: Program) -> ProgramStats:
    """Rule count, distinct kernels, distinct signed literals and total
    antecedent occurrences over the whole program."""
    kernels: set[tuple[str, int]] = set()
    literals: set[tuple[str, int, bool]] = set()
    n_rules = 0
    size = 0
    for rs in p.rulesets:
        for r in rs.rules:
            n_rules += 1
            size += len(r.antecedents)
            for lit in r.antecedents + r.consequents:
                kernels.add((lit.layer, lit.kernel))
                literals.add((lit.layer, lit.kernel, lit.positive))
    return ProgramStats(n_rules, len(kernels), len(literals), size)


@dataclass(frozen=True)
class SplitMetrics:
    accuracy: float
    fidelity: float
    abstain: float


@dataclass(frozen=True)
class Metrics:
    splits: dict[str, SplitMetrics | None]
    stats: ProgramStats


def evaluate_program(p: Program, d, splits: Sequence[str] = ("train", "val", "test")) -> Metrics:
    """Per-split accuracy/fidelity/abstain plus program stats.

    An empty split yields None rather than fabricated zeros.
    """
    per_split: dict[str, SplitMetrics | None] = {}
    for name in splits:
        idx = d.split(name)
        if idx.size == 0:
            per_split[name] = None
            continue
        preds = predict_dataset(p, d, name)
        per_split[name] = SplitMetrics(
            accuracy=accuracy(preds, d.labels[idx]),
            fidelity=fidelity(preds, d.teacher[idx]),
            abstain=abstain_rate(preds),
        )
    return Metrics(per_split, program_stats(p))


@dataclass(frozen=True)
class SweepCell:
    lep: str
    depth: int
    metrics: Metrics | None
    program: Program | None
    error: str | None = None


@dataclass(frozen=True)
class SweepGrid:
    leps: tuple[str, ...]
    depths: tuple[int, ...]
    alpha: float
    demand_driven: bool
    splits: tuple[str, ...]
    cells: tuple[SweepCell, ...]


def chain_for_lep(d, lep: str) -> tuple[str, ...]:
    """The full layer chain starting at `lep`: lep..deepest conv, then output."""
    names = [lm.name for lm in d.manifest.layers]
    if lep not in names:
        raise DataError(f"layer {lep!r} not in the dataset manifest")
    return tuple(names[names.index(lep):]) + (OUTPUT_LAYER,)


def run_sweep(d, leps: Sequence[str], depths: Sequence[int], alpha: float,
              demand_driven: bool = True, jobs: int = 1,
              splits: Sequence[str] = ("train", "val", "test"),
              do_simplify: bool = True) -> SweepGrid:
    """Extract, simplify and evaluate every (lep, depth) cell.

    Each lep extends its chain through all deeper manifest layers to the
    output, so shallower entry points mean longer chains.  Failures are
    recorded on the cell and the sweep continues.
    """
    cells: list[SweepCell] = []
    for lep in leps:
        for depth in depths:
            try:
                cfg = ExtractionConfig(lep=lep, layers=chain_for_lep(d, lep),
                                       depth=depth, alpha=alpha,
                                       demand_driven=demand_driven)
                prog = extract_program(d, cfg, jobs=jobs)
                if do_simplify:
                    prog = simplify(prog)
                cells.append(SweepCell(lep, depth, evaluate_program(prog, d, splits), prog))
            except ConvlogicError as e:
                cells.append(SweepCell(lep, depth, None, None, error=str(e)))
    return SweepGrid(tuple(leps), tuple(int(v) for v in depths), float(alpha),
                     demand_driven, tuple(splits), tuple(cells))


def _fmt(x: float | None) -> str:
    return "" if x is None else f"{x:.6f}"


def sweep_csv(grid: SweepGrid) -> str:
    """One row per (cell, split); failed cells leave metric fields empty."""
    out = io.StringIO()
    out.write(CSV_HEADER + "\n")
    for cell in grid.cells:
        for split in grid.splits:
            if cell.metrics is None:
                row = [cell.lep, str(cell.depth), format(grid.alpha, "g"), split,
                       "", "", "", "", "", "", ""]
            else:
                sm = cell.metrics.splits.get(split)
                st = cell.metrics.stats
                row = [
                    cell.lep, str(cell.depth), format(grid.alpha, "g"), split,
                    _fmt(sm.accuracy if sm else None),
                    _fmt(sm.fidelity if sm else None),
                    _fmt(sm.abstain if sm else None),
                    str(st.n_rules), str(st.n_vars), str(st.n_vars_polarity), str(st.size),
                ]
            out.write(",".join(row) + "\n")
    return out.getvalue()


def metrics_table(rows: Sequence[tuple[str, Metrics | None]], title: str = "") -> str:
    """Fixed-width results table: one row per configuration."""
    header = (f"{'config':<18} {'tr.acc':>7} {'val.acc':>7} {'te.acc':>7} "
              f"{'tr.fid':>7} {'val.fid':>7} {'te.fid':>7} "
              f"{'vars':>5} {'rules':>6} {'size':>6}")
    lines = []
    if title:
        lines.append(title)
    lines.append(header)
    lines.append("-" * len(header))

    def cell(m: Metrics | None, split: str, attr: str) -> str:
        if m is None:
            return "FAILED"
        sm = m.splits.get(split)
        if sm is None:
            return "-"
        return f"{getattr(sm, attr) * 100:.1f}"

    for name, m in rows:
        if m is None:
            lines.append(f"{name:<18} FAILED")
            continue
        st = m.stats
        lines.append(
            f"{name:<18} {cell(m, 'train', 'accuracy'):>7} {cell(m, 'val', 'accuracy'):>7} "
            f"{cell(m, 'test', 'accuracy'):>7} {cell(m, 'train', 'fidelity'):>7} "
            f"{cell(m, 'val', 'fidelity'):>7} {cell(m, 'test', 'fidelity'):>7} "
            f"{st.n_vars:>5} {st.n_rules:>6} {st.size:>6}")
    return "\n".join(lines)


def sweep_table(grid: SweepGrid) -> str:
    rows = [(f"{c.lep} d={c.depth}", c.metrics) for c in grid.cells]
    return metrics_table(rows, title=f"alpha={grid.alpha:g}")
