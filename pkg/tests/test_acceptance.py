"""Acceptance suite: one test per release criterion, each printing a
pass/fail line.  Run with `pytest tests/test_acceptance.py -v -s`."""

import json
import math
import time
from contextlib import contextmanager
from fractions import Fraction

import numpy as np
import pytest

from convlogic import (ExtractionConfig, Literal, Program, Rule, RuleSet, SynthConfig,
                       best_split, compute_thresholds, extract_program,
                       generate_synthetic, infer_bits, load_dataset, parse,
                       predict_dataset, program_stats, quantise, run_sweep,
                       save_dataset, serialise, simplify)
from convlogic.cli import main

L = Literal


@contextmanager
def criterion(name, budget=None):
    t0 = time.perf_counter()
    try:
        yield
    except Exception:
        print(f"[acceptance] {name}: FAIL")
        raise
    elapsed = time.perf_counter() - t0
    if budget is not None:
        assert elapsed < budget, f"{name} took {elapsed:.1f}s, budget {budget}s"
    print(f"[acceptance] {name}: PASS ({elapsed:.2f}s)")


def _rule(src, ants, dst, cls, support=1, positives=None):
    return Rule(tuple(L(src, k, pol) for k, pol in ants), (L(dst, cls),),
                support, positives or (min(support, support),))


def planted_dataset():
    """Teacher is a DNF of 3 rules, each <= 3 literals, over 12 kernels."""
    gt = RuleSet("conv0", "output", (
        _rule("conv0", [(0, True), (1, True)], "output", 1),
        _rule("conv0", [(2, True), (3, True)], "output", 2),
        _rule("conv0", [(4, True), (5, False)], "output", 0),
    ))
    return generate_synthetic(SynthConfig(n_samples=4096, layer_sizes=(12,),
                                          n_classes=3, seed=7, rules=(gt,)))


def chained_dataset():
    """Hidden layer of 8 planted concepts between 12 input kernels and 3 classes."""
    concepts = RuleSet("conv0", "conv1", (
        _rule("conv0", [(0, True)], "conv1", 0),
        _rule("conv0", [(1, True), (2, True)], "conv1", 1),
        _rule("conv0", [(3, False)], "conv1", 2),
        _rule("conv0", [(4, True), (5, False)], "conv1", 3),
        _rule("conv0", [(6, True)], "conv1", 4),
        _rule("conv0", [(7, True), (8, True)], "conv1", 5),
        _rule("conv0", [(9, False), (10, True)], "conv1", 6),
        _rule("conv0", [(11, True)], "conv1", 7),
    ))
    classes = RuleSet("conv1", "output", (
        _rule("conv1", [(0, True), (1, True)], "output", 1),
        _rule("conv1", [(2, True), (3, True)], "output", 2),
        _rule("conv1", [(4, True), (5, False)], "output", 0),
    ))
    return generate_synthetic(SynthConfig(n_samples=4096, layer_sizes=(12, 8),
                                          n_classes=3, seed=11,
                                          rules=(concepts, classes)))


def _fidelity(prog, d, split):
    preds = predict_dataset(prog, d, split)
    return float(np.mean(preds == d.teacher[d.split(split)]))


# ---------------------------------------------------------------------------

def test_quantisation_oracle():
    with criterion("quantisation oracle (1000 columns, exact)", budget=5.0):
        rng = np.random.default_rng(101)
        columns_checked = 0
        for block in range(10):
            n, k = 64, 100
            if block % 2 == 0:
                norms = rng.integers(0, 50, size=(n, k)).astype(np.float32)
            else:
                norms = rng.uniform(0.0, 50.0, size=(n, k)).astype(np.float32)
            train = sorted(rng.choice(n, size=40, replace=False).tolist())
            theta = compute_thresholds(norms, train)
            bits = quantise(norms, theta)
            for col in range(k):
                mean = math.fsum(float(norms[i, col]) for i in train) / len(train)
                for i in range(n):
                    expected = 1 if float(norms[i, col]) > mean else -1
                    assert bits[i, col] == expected
                columns_checked += 1
        assert columns_checked == 1000


def test_induction_oracle():
    def oracle(features, target):
        n = len(target)
        pos = int(sum(target))
        if n < 2 or pos in (0, n):
            return None
        parent = Fraction(2 * pos * (n - pos), n * n)
        best_k, best_score = None, None
        for k in range(features.shape[1]):
            on = features[:, k] == 1
            nl, pl = int(on.sum()), int((on & target).sum())
            nr, pr = n - nl, pos - int((on & target).sum())
            if nl == 0 or nr == 0:
                continue
            score = (Fraction(nl, n) * Fraction(2 * pl * (nl - pl), nl * nl)
                     + Fraction(nr, n) * Fraction(2 * pr * (nr - pr), nr * nr))
            if score >= parent:
                continue
            if best_score is None or score < best_score:
                best_k, best_score = k, score
        return best_k

    with criterion("induction oracle (500 tables, exact incl. ties)", budget=10.0):
        rng = np.random.default_rng(102)
        for _ in range(500):
            n = int(rng.integers(2, 17))
            k = int(rng.integers(1, 5))
            features = rng.choice(np.array([-1, 1], np.int8), size=(n, k))
            target = rng.integers(0, 2, size=n).astype(bool)
            assert best_split(features, target) == oracle(features, target)


def test_planted_rule_recovery():
    with criterion("planted-rule recovery (train=1.0, val>=0.99)", budget=30.0):
        d = planted_dataset()
        prog = extract_program(d, ExtractionConfig("conv0", ("conv0", "output"),
                                                   depth=5, alpha=0.0))
        assert _fidelity(prog, d, "train") == 1.0
        assert _fidelity(prog, d, "val") >= 0.99


def test_depth_monotonicity():
    with criterion("depth monotonicity (train fidelity, depths 1..5)"):
        d = planted_dataset()
        fids = []
        for depth in range(1, 6):
            prog = extract_program(d, ExtractionConfig("conv0", ("conv0", "output"),
                                                       depth=depth, alpha=0.0))
            fids.append(_fidelity(prog, d, "train"))
        assert fids == sorted(fids), fids


def test_rule_length_bound():
    with criterion("rule-length bound (<= depth+1 over the sweep grid)"):
        single = run_sweep(planted_dataset(), ["conv0"], [1, 2, 3, 4, 5], alpha=0.01)
        chained = run_sweep(chained_dataset(), ["conv0", "conv1"], [1, 2, 3, 4, 5],
                            alpha=0.1)
        checked = 0
        for grid in (single, chained):
            for cell in grid.cells:
                assert cell.error is None
                for rs in cell.program.rulesets:
                    for r in rs.rules:
                        assert len(r.antecedents) <= cell.depth + 1
                        checked += 1
        assert checked > 0


def _random_program(rng):
    k = int(rng.integers(3, 17))
    n_classes = int(rng.integers(2, 5))
    classes = tuple(f"class{i}" for i in range(n_classes))
    rules = []
    for _ in range(int(rng.integers(2, 9))):
        n_ants = int(rng.integers(0, min(5, k) + 1))
        kernels = rng.choice(k, size=n_ants, replace=False)
        ants = [(int(a), bool(rng.integers(2))) for a in kernels]
        support = int(rng.integers(1, 50))
        cls = int(rng.integers(n_classes))
        rules.append(_rule("conv0", ants, "output", cls, support,
                           (int(rng.integers(1, support + 1)),)))
        # seed structure both merge forms can act on
        roll = rng.random()
        if n_ants > 0 and roll < 0.5:
            flip = int(rng.integers(n_ants))
            sib = list(ants)
            sib[flip] = (sib[flip][0], not sib[flip][1])
            s2 = int(rng.integers(1, 50))
            rules.append(_rule("conv0", sib, "output", cls, s2,
                               (int(rng.integers(1, s2 + 1)),)))
        elif roll < 0.7 and n_classes > 1:
            other = (cls + 1) % n_classes
            rules.append(_rule("conv0", ants, "output", other, support,
                               (int(rng.integers(1, support + 1)),)))
    return Program(class_names=classes, chain=(("conv0", k), ("output", n_classes)),
                   rulesets=(RuleSet("conv0", "output", tuple(rules)),),
                   thresholds=(1.0,) * k, depth=5, alpha=0.01)


def test_simplification_semantics():
    with criterion("simplification semantics (100 programs, exhaustive)", budget=60.0):
        rng = np.random.default_rng(103)
        merged_something = 0
        for _ in range(100):
            p = _random_program(rng)
            s = simplify(p)
            if sum(len(rs.rules) for rs in s.rulesets) < sum(len(rs.rules) for rs in p.rulesets):
                merged_something += 1
            k = p.chain[0][1]
            patterns = np.arange(2 ** k, dtype=np.int64)[:, None] >> np.arange(k)[None, :]
            bits = ((patterns & 1) * 2 - 1).astype(np.int8)
            assert np.array_equal(infer_bits(p, bits), infer_bits(s, bits))
            assert simplify(s) == s
            assert program_stats(s).size <= program_stats(p).size
        assert merged_something >= 30, "generator failed to exercise the merge rules"


def test_multi_layer_chaining():
    with criterion("multi-layer chaining (fidelity >= 0.95, size growth)", budget=60.0):
        d = chained_dataset()
        multi = simplify(extract_program(
            d, ExtractionConfig("conv0", ("conv0", "conv1", "output"),
                                depth=5, alpha=0.1)))
        single = simplify(extract_program(
            d, ExtractionConfig("conv1", ("conv1", "output"), depth=5, alpha=0.1)))
        assert _fidelity(multi, d, "train") >= 0.95
        assert _fidelity(multi, d, "val") >= 0.95
        assert program_stats(multi).size > program_stats(single).size


def test_determinism(tmp_path):
    with criterion("determinism (repeat runs, 1 vs 8 workers, byte-identical)"):
        cfg = {
            "n_samples": 2048, "layer_sizes": [10, 6], "n_classes": 3, "seed": 19,
            "rules": {
                "conv0 -> conv1": [
                    "conv1.0 <- conv0.0.", "conv1.1 <- conv0.1 & conv0.2.",
                    "conv1.2 <- !conv0.3.", "conv1.3 <- conv0.4.",
                    "conv1.4 <- conv0.5 & !conv0.6.", "conv1.5 <- conv0.7.",
                ],
                "conv1 -> output": [
                    "class1 <- conv1.0 & conv1.1.", "class2 <- conv1.2 & conv1.3.",
                    "class0 <- conv1.4 & !conv1.5.",
                ],
            },
        }
        cfg_path = tmp_path / "synth.json"
        cfg_path.write_text(json.dumps(cfg))
        ds = tmp_path / "ds"
        assert main(["synth", "--config", str(cfg_path), "--out", str(ds)]) == 0

        programs, csvs = [], []
        for run, jobs in (("a", "1"), ("b", "1"), ("c", "8")):
            prog = tmp_path / f"{run}.eric"
            csv = tmp_path / f"{run}.csv"
            assert main(["extract", "--dataset", str(ds), "--lep", "conv0",
                         "--depth", "4", "--alpha", "0.1", "--jobs", jobs,
                         "--out", str(prog)]) == 0
            assert main(["evaluate", "--dataset", str(ds), "--program", str(prog)]) == 0
            assert main(["sweep", "--dataset", str(ds), "--leps", "conv0,conv1",
                         "--depths", "1..3", "--alpha", "0.1", "--jobs", jobs,
                         "--out", str(csv)]) == 0
            programs.append(prog.read_bytes())
            csvs.append(csv.read_bytes())
        assert programs[0] == programs[1] == programs[2]
        assert csvs[0] == csvs[1] == csvs[2]


def test_format_round_trips(tmp_path):
    with criterion("format round-trips (50 datasets + 50 programs)"):
        rng = np.random.default_rng(104)
        for i in range(50):
            n_layers = int(rng.integers(1, 3))
            sizes = tuple(int(rng.integers(2, 7)) for _ in range(n_layers))
            classes = int(rng.integers(2, 4))
            names = [f"conv{j}" for j in range(n_layers)]
            rulesets = []
            for j, (src, dst) in enumerate(zip(names, names[1:] + ["output"])):
                width = sizes[j + 1] if dst != "output" else classes
                rules = tuple(
                    _rule(src, [(int(rng.integers(sizes[j])), bool(rng.integers(2)))],
                          dst, t)
                    for t in range(width))
                rulesets.append(RuleSet(src, dst, rules))
            cfg = SynthConfig(n_samples=int(rng.integers(64, 257)), layer_sizes=sizes,
                              n_classes=classes, seed=int(rng.integers(1 << 16)),
                              rules=tuple(rulesets))
            d = generate_synthetic(cfg)
            path = tmp_path / f"ds{i}"
            save_dataset(d, path)
            d2 = load_dataset(path)
            assert d2.manifest == d.manifest
            assert all(np.array_equal(d2.norms[nm], d.norms[nm]) for nm in d.norms)
            assert np.array_equal(d2.labels, d.labels)
            assert np.array_equal(d2.teacher, d.teacher)

        for _ in range(50):
            p = simplify(_random_program(rng))
            text = serialise(p)
            p2 = parse(text)
            assert p2 == p
            assert serialise(p2) == text
