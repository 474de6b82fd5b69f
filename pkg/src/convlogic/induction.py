"""Depth-bounded decision-tree induction over bit matrices, and the
layer-by-layer program extraction built on it.

One binary tree is grown per target kernel (or output class) on the training
split, splitting on previous-layer kernels by gini impurity.  Candidate
splits are compared with exact integer arithmetic so ties always break to the
lowest kernel index, independent of float rounding.  Paths to True-predicting
leaves become rules; False leaves rely on default negation.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .errors import DataError
from .program import Literal, Program, Rule, RuleSet, round9
from .quantise import OUTPUT_LAYER, binarise_dataset, compute_thresholds


@dataclass(frozen=True)
class InductionParams:
    """`depth` bounds antecedents per rule at depth + 1; `alpha` freezes any
    child holding less than that fraction of its parent's samples."""

    depth: int
    alpha: float

    def __post_init__(self):
        if self.depth < 1:
            raise ValueError("depth must be >= 1")
        if not (0.0 <= self.alpha < 1.0):
            raise ValueError("alpha must be in [0, 1)")


@dataclass(frozen=True)
class Leaf:
    prediction: bool
    support: int
    positives: int


@dataclass(frozen=True)
class Split:
    kernel: int
    child_true: "TreeNode"
    child_false: "TreeNode"


TreeNode = Union[Leaf, Split]


def gini(positives: int, total: int) -> float:
    """Binary gini impurity 2p(1-p), in [0, 0.5]."""
    if total < 1:
        raise ValueError("total must be >= 1")
    if not (0 <= positives <= total):
        raise ValueError("positives must be in [0, total]")
    p = positives / total
    return 2.0 * p * (1.0 - p)


def best_split(features: np.ndarray, target: np.ndarray) -> int | None:
    """Kernel index minimising the support-weighted child gini, or None.

    Splits that do not strictly reduce impurity are rejected; exact ties go
    to the lowest kernel index.  Comparisons are exact: for a split with
    child counts (nl, nr) and positives (pl, pr), the weighted child gini is
    proportional to (pl*(nl-pl)*nr + pr*(nr-pr)*nl) / (nl*nr), and fractions
    are compared by cross-multiplication in unbounded integers.
    """
    features = np.asarray(features)
    target = np.asarray(target, dtype=bool)
    n = int(target.shape[0])
    pos = int(target.sum())
    neg = n - pos
    if n < 2 or pos == 0 or pos == n:
        return None
    on = features == 1
    n_left = on.sum(axis=0)
    pos_left = (on & target[:, None]).sum(axis=0)

    best_k = None
    best_num = best_den = 0
    for k in range(features.shape[1]):
        nl = int(n_left[k])
        nr = n - nl
        if nl == 0 or nr == 0:
            continue
        pl = int(pos_left[k])
        pr = pos - pl
        num = pl * (nl - pl) * nr + pr * (nr - pr) * nl
        den = nl * nr
        if n * num >= pos * neg * den:
            continue  # no strict impurity reduction over the parent
        if best_k is None or num * best_den < best_num * den:
            best_k, best_num, best_den = k, num, den
    return best_k


def grow_tree(features: np.ndarray, target: np.ndarray, params: InductionParams) -> TreeNode:
    """Recursive growth over the full index set.

    A node becomes a leaf when pure, when its path already carries
    depth + 1 antecedents, when no split strictly reduces impurity, or when
    it was created as a child with |Q|/|P| < alpha (frozen immediately).
    Leaves predict the modal target value; ties predict False.
    """
    features = np.ascontiguousarray(features, dtype=np.int8)
    target = np.asarray(target, dtype=bool)
    if features.ndim != 2 or features.shape[0] != target.shape[0]:
        raise DataError("features and target must share sample rows")
    if target.shape[0] == 0:
        raise DataError("empty training table")
    max_path = params.depth + 1

    def build(rows: np.ndarray, path_len: int) -> TreeNode:
        t = target[rows]
        m = int(rows.size)
        pos = int(t.sum())
        if pos == 0 or pos == m or path_len >= max_path:
            return Leaf(pos * 2 > m, m, pos)
        k = best_split(features[rows], t)
        if k is None:
            return Leaf(pos * 2 > m, m, pos)
        on = features[rows, k] == 1
        children = []
        for sub in (rows[on], rows[~on]):
            if sub.size / m < params.alpha:
                sp = int(target[sub].sum())
                children.append(Leaf(sp * 2 > sub.size, int(sub.size), sp))
            else:
                children.append(build(sub, path_len + 1))
        return Split(k, children[0], children[1])

    return build(np.arange(target.shape[0]), 0)


def tree_to_rules(tree: TreeNode, target_literal: Literal, source_layer: str) -> list[Rule]:
    """One rule per True leaf; the bit=1 branch contributes the positive
    literal of the split kernel, the bit=-1 branch the negative one."""
    rules: list[Rule] = []

    def walk(node: TreeNode, path: list[tuple[int, bool]]) -> None:
        if isinstance(node, Leaf):
            if node.prediction:
                ants = tuple(Literal(source_layer, k, pol) for k, pol in path)
                rules.append(Rule(ants, (target_literal,), node.support, (node.positives,)))
            return
        walk(node.child_true, path + [(node.kernel, True)])
        walk(node.child_false, path + [(node.kernel, False)])

    walk(tree, [])
    return rules


def extract_layer(bits_prev: np.ndarray, bits_target: np.ndarray,
                  targets: Sequence[int], params: InductionParams,
                  source: str, target_layer: str, jobs: int = 1) -> RuleSet:
    """Induce one tree per target kernel and union the rules.

    Rules are ordered by (target kernel, leaf order), so the result does not
    depend on the worker count.
    """
    bits_prev = np.ascontiguousarray(bits_prev, dtype=np.int8)
    bits_target = np.asarray(bits_target)
    if bits_prev.shape[0] != bits_target.shape[0]:
        raise DataError("bit matrices must share sample rows")
    ordered = sorted(set(int(t) for t in targets))

    def rules_for(k: int) -> list[Rule]:
        tree = grow_tree(bits_prev, bits_target[:, k] == 1, params)
        return tree_to_rules(tree, Literal(target_layer, k), source)

    if jobs > 1 and len(ordered) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(rules_for, ordered))
    else:
        chunks = [rules_for(k) for k in ordered]
    return RuleSet(source, target_layer, tuple(r for chunk in chunks for r in chunk))


@dataclass(frozen=True)
class ExtractionConfig:
    """`layers` runs from the logical entry point to "output"; the
    convolutional part must be contiguous in the dataset's layer order."""

    lep: str
    layers: tuple[str, ...]
    depth: int = 5
    alpha: float = 0.01
    demand_driven: bool = True


def extract_program(d, cfg: ExtractionConfig, jobs: int = 1) -> Program:
    """Binarise the configured layers and extract rules boundary by boundary,
    deepest first.

    The output boundary targets every class.  With demand_driven, each
    shallower boundary only targets kernels already referenced by deeper
    antecedents; otherwise all kernels.
    """
    layers = tuple(cfg.layers)
    manifest_names = [lm.name for lm in d.manifest.layers]
    if len(layers) < 2 or layers[-1] != OUTPUT_LAYER:
        raise DataError("layer list must end at the output layer")
    conv = layers[:-1]
    for name in conv:
        if name not in manifest_names:
            raise DataError(f"layer {name!r} not in the dataset manifest")
    positions = [manifest_names.index(name) for name in conv]
    if positions != list(range(positions[0], positions[0] + len(conv))):
        raise DataError(f"layer list {conv} is not contiguous in the manifest order")
    if cfg.lep != layers[0]:
        raise DataError(f"lep {cfg.lep!r} must be the first listed layer")

    params = InductionParams(cfg.depth, cfg.alpha)
    n_classes = len(d.manifest.class_names)
    sizes = {lm.name: lm.n_kernels for lm in d.manifest.layers}
    sizes[OUTPUT_LAYER] = n_classes

    bits = binarise_dataset(d, layers)
    train = np.sort(d.split("train"))
    if train.size == 0:
        raise DataError("empty training split")

    boundaries = list(zip(layers[:-1], layers[1:]))
    extracted: dict[tuple[str, str], RuleSet] = {}
    targets: Sequence[int] = range(n_classes)
    for src, dst in reversed(boundaries):
        rs = extract_layer(bits[src][train], bits[dst][train], targets, params,
                           src, dst, jobs=jobs)
        extracted[(src, dst)] = rs
        if cfg.demand_driven:
            targets = sorted({a.kernel for r in rs.rules for a in r.antecedents})
        else:
            targets = range(sizes[src])

    theta = compute_thresholds(d.norms[cfg.lep], train)
    return Program(
        class_names=tuple(d.manifest.class_names),
        chain=tuple((name, sizes[name]) for name in layers),
        rulesets=tuple(extracted[b] for b in boundaries),
        thresholds=tuple(round9(t) for t in theta),
        depth=cfg.depth,
        alpha=cfg.alpha,
        demand_driven=cfg.demand_driven,
    )
