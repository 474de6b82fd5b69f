import numpy as np
import pytest

from convlogic import (ClassDecision, DataError, Literal, Program, ProgramError,
                       ProgramSyntaxError, Rule, RuleSet, SynthConfig, generate_synthetic,
                       infer, infer_bits, infer_layer, parse, parse_rule,
                       predict_dataset, serialise, simplify)
from convlogic.evaluate import program_stats

L = Literal


def rule(src, ants, dst, cons, support=10, positives=None):
    ant = tuple(L(src, k, pol) for k, pol in ants)
    con = tuple(L(dst, c) for c in cons)
    pos = positives if positives is not None else (support,) * len(con)
    return Rule(ant, con, support, pos)


def single_layer_program(rules, n_kernels=8, classes=("class0", "class1", "class2"),
                         thresholds=None):
    return Program(
        class_names=tuple(classes),
        chain=(("conv0", n_kernels), ("output", len(classes))),
        rulesets=(RuleSet("conv0", "output", tuple(rules)),),
        thresholds=tuple(thresholds or (1.0,) * n_kernels),
        depth=5,
        alpha=0.01,
    )


# ---------------------------------------------------------------------------
# structure validation
# ---------------------------------------------------------------------------

def test_rule_rejects_duplicate_antecedent_kernel():
    with pytest.raises(ProgramError):
        rule("conv0", [(1, True), (1, False)], "output", [0])


def test_rule_rejects_negative_consequent():
    with pytest.raises(ProgramError):
        Rule((), (L("output", 0, positive=False),), 1, (1,))


def test_rule_rejects_zero_positives():
    with pytest.raises(ProgramError):
        Rule((), (L("output", 0),), 4, (0,))


def test_program_rejects_chain_gap():
    with pytest.raises(ProgramError, match="chained-layer mismatch"):
        Program(class_names=("a", "b"),
                chain=(("conv0", 2), ("conv1", 2), ("output", 2)),
                rulesets=(RuleSet("conv0", "output", ()),),
                thresholds=(0.0, 0.0), depth=1, alpha=0.0)


def test_program_rejects_out_of_range_literal():
    with pytest.raises(ProgramError, match="out of range"):
        single_layer_program([rule("conv0", [(9, True)], "output", [0])])


# ---------------------------------------------------------------------------
# inference
# ---------------------------------------------------------------------------

def test_infer_layer_fires_on_mixed_polarity():
    # street asserted by kernel "LW" on and kernel "SG" off
    rs = RuleSet("conv0", "output",
                 (rule("conv0", [(0, True), (1, False)], "output", [2]),))
    bits = np.array([1, -1, 1, 1], dtype=np.int8)
    assert infer_layer(bits, rs, 3).tolist() == [-1, -1, 1]


def test_infer_layer_default_negation():
    rs = RuleSet("conv0", "output", ())
    assert infer_layer(np.ones(4, np.int8), rs, 3).tolist() == [-1, -1, -1]


def test_infer_layer_idempotent_disjunction():
    rs = RuleSet("conv0", "output", (
        rule("conv0", [(0, True)], "output", [1]),
        rule("conv0", [(2, True)], "output", [1]),
    ))
    bits = np.array([1, 1, 1, 1], dtype=np.int8)
    assert infer_layer(bits, rs, 3).tolist() == [-1, 1, -1]


def test_infer_picks_unique_fired_class():
    # analogue of "no trees and grass means desert": all-negative but one
    p = single_layer_program([
        rule("conv0", [(0, False), (1, False), (2, False), (3, True)], "output", [0]),
        rule("conv0", [(4, True)], "output", [1]),
    ])
    decision = infer(p, [-1, -1, -1, 1, -1, 1, 1, 1])
    assert decision.class_index == 0
    assert decision.fired == ((0, 0),)


def test_infer_abstains_when_nothing_fires():
    p = single_layer_program([rule("conv0", [(0, True)], "output", [1])])
    decision = infer(p, [-1] * 8)
    assert decision.class_index is None
    assert decision.fired == ()


def test_infer_conflict_resolved_by_precision():
    # class2 at precision 0.9 beats class0 at 0.6 even though 0 is the lower index
    p = single_layer_program([
        rule("conv0", [(0, True)], "output", [0], support=10, positives=(6,)),
        rule("conv0", [(1, True)], "output", [2], support=10, positives=(9,)),
    ])
    assert infer(p, [1, 1, -1, -1, -1, -1, -1, -1]).class_index == 2


def test_infer_conflict_ties_break_to_support_then_index():
    p = single_layer_program([
        rule("conv0", [(0, True)], "output", [1], support=20, positives=(10,)),
        rule("conv0", [(1, True)], "output", [2], support=10, positives=(5,)),
    ])
    assert infer(p, [1, 1, -1, -1, -1, -1, -1, -1]).class_index == 1
    p = single_layer_program([
        rule("conv0", [(0, True)], "output", [1], support=10, positives=(5,)),
        rule("conv0", [(1, True)], "output", [2], support=10, positives=(5,)),
    ])
    assert infer(p, [1, 1, -1, -1, -1, -1, -1, -1]).class_index == 1


def test_infer_monotone_in_added_rules():
    rng = np.random.default_rng(6)
    base_rules = [rule("conv0", [(0, True), (1, False)], "output", [0])]
    p1 = single_layer_program(base_rules)
    p2 = single_layer_program(base_rules + [rule("conv0", [(2, True)], "output", [1])])
    for _ in range(50):
        bits = rng.choice(np.array([-1, 1], np.int8), size=(1, 8))
        out1 = infer_layer(bits, p1.rulesets[-1], 3)
        out2 = infer_layer(bits, p2.rulesets[-1], 3)
        assert (out2 >= out1).all()


def test_trace_rules_are_satisfied_by_the_input():
    p = single_layer_program([
        rule("conv0", [(0, True)], "output", [0]),
        rule("conv0", [(1, False)], "output", [1]),
        rule("conv0", [(2, True), (3, True)], "output", [2]),
    ])
    rng = np.random.default_rng(7)
    for _ in range(30):
        bits = rng.choice(np.array([-1, 1], np.int8), size=8)
        decision = infer(p, bits)
        for si, ri in decision.fired:
            r = p.rulesets[si].rules[ri]
            for lit in r.antecedents:
                assert bits[lit.kernel] == (1 if lit.positive else -1)


def test_infer_bits_matches_scalar_infer():
    rng = np.random.default_rng(8)
    p = single_layer_program([
        rule("conv0", [(0, True), (2, False)], "output", [0], support=7, positives=(5,)),
        rule("conv0", [(1, True)], "output", [1], support=9, positives=(9,)),
        rule("conv0", [(3, False)], "output", [2], support=4, positives=(3,)),
    ])
    bits = rng.choice(np.array([-1, 1], np.int8), size=(200, 8))
    batch = infer_bits(p, bits)
    for i in range(200):
        d = infer(p, bits[i])
        assert batch[i] == (-1 if d.class_index is None else d.class_index)


def test_infer_rejects_wrong_width():
    p = single_layer_program([rule("conv0", [(0, True)], "output", [0])])
    with pytest.raises(DataError):
        infer(p, [1, -1])


# ---------------------------------------------------------------------------
# simplification
# ---------------------------------------------------------------------------

def test_simplify_merges_complementary_literals():
    # A & B -> C plus A & !B -> C becomes A -> C
    p = single_layer_program([
        rule("conv0", [(0, True), (1, True)], "output", [0], support=4, positives=(3,)),
        rule("conv0", [(0, True), (1, False)], "output", [0], support=6, positives=(5,)),
    ])
    s = simplify(p)
    merged = s.rulesets[0].rules
    assert len(merged) == 1
    assert merged[0].antecedents == (L("conv0", 0),)
    assert merged[0].support == 10
    assert merged[0].positives == (8,)


def test_simplify_merges_identical_antecedents():
    # A -> B plus A -> C becomes A -> B & C
    p = single_layer_program([
        rule("conv0", [(0, True)], "output", [1], support=5, positives=(4,)),
        rule("conv0", [(0, True)], "output", [2], support=5, positives=(3,)),
    ])
    s = simplify(p)
    merged = s.rulesets[0].rules
    assert len(merged) == 1
    assert merged[0].consequents == (L("output", 1), L("output", 2))
    assert merged[0].positives == (4, 3)


def test_simplify_cascades_to_fixpoint():
    # four leaves of a full tree over two kernels collapse to one free rule
    p = single_layer_program([
        rule("conv0", [(0, True), (1, True)], "output", [0], support=1, positives=(1,)),
        rule("conv0", [(0, True), (1, False)], "output", [0], support=1, positives=(1,)),
        rule("conv0", [(0, False), (1, True)], "output", [0], support=1, positives=(1,)),
        rule("conv0", [(0, False), (1, False)], "output", [0], support=1, positives=(1,)),
    ])
    s = simplify(p)
    assert len(s.rulesets[0].rules) == 1
    assert s.rulesets[0].rules[0].antecedents == ()
    assert s.rulesets[0].rules[0].support == 4


def test_simplify_is_idempotent_on_minimal_programs():
    p = single_layer_program([
        rule("conv0", [(0, True), (1, True)], "output", [0]),
        rule("conv0", [(2, False)], "output", [1]),
    ])
    assert simplify(p) == p
    assert simplify(simplify(p)) == simplify(p)


def _random_program(rng):
    k = int(rng.integers(3, 9))
    n_classes = int(rng.integers(2, 4))
    classes = tuple(f"class{i}" for i in range(n_classes))
    rules = []
    for _ in range(int(rng.integers(2, 7))):
        n_ants = int(rng.integers(0, min(4, k) + 1))
        kernels = rng.choice(k, size=n_ants, replace=False)
        ants = [(int(a), bool(rng.integers(2))) for a in kernels]
        support = int(rng.integers(1, 40))
        positives = (int(rng.integers(1, support + 1)),)
        rules.append(rule("conv0", ants, "output", [int(rng.integers(n_classes))],
                          support=support, positives=positives))
        # seed mergeable structure: sometimes add the complementary sibling
        if n_ants > 0 and rng.random() < 0.6:
            flip = int(rng.integers(n_ants))
            sib = list(ants)
            sib[flip] = (sib[flip][0], not sib[flip][1])
            s2 = int(rng.integers(1, 40))
            rules.append(rule("conv0", sib, "output",
                              [rules[-1].consequents[0].kernel],
                              support=s2, positives=(int(rng.integers(1, s2 + 1)),)))
    return single_layer_program(rules, n_kernels=k, classes=classes)


def test_simplify_preserves_decisions_exhaustively():
    rng = np.random.default_rng(9)
    for _ in range(30):
        p = _random_program(rng)
        s = simplify(p)
        k = p.chain[0][1]
        patterns = np.arange(2 ** k)[:, None] >> np.arange(k)[None, :]
        bits = ((patterns & 1) * 2 - 1).astype(np.int8)
        assert np.array_equal(infer_bits(p, bits), infer_bits(s, bits))
        assert program_stats(s).size <= program_stats(p).size
        assert simplify(s) == s


# ---------------------------------------------------------------------------
# prediction over datasets
# ---------------------------------------------------------------------------

def _partition_dataset_and_program():
    # ground-truth rules that partition the assignment space, so the planted
    # program reproduces the teacher exactly
    gt = RuleSet("conv0", "output", (
        rule("conv0", [(0, True)], "output", [0], support=1, positives=(1,)),
        rule("conv0", [(0, False), (1, True)], "output", [1], support=1, positives=(1,)),
        rule("conv0", [(0, False), (1, False)], "output", [2], support=1, positives=(1,)),
    ))
    cfg = SynthConfig(n_samples=512, layer_sizes=(5,), n_classes=3, seed=13, rules=(gt,))
    d = generate_synthetic(cfg)
    from convlogic import compute_thresholds
    from convlogic.program import round9
    theta = compute_thresholds(d.norms["conv0"], d.split("train"))
    p = Program(class_names=d.manifest.class_names,
                chain=(("conv0", 5), ("output", 3)),
                rulesets=(gt,), thresholds=tuple(round9(t) for t in theta),
                depth=5, alpha=0.0)
    return d, p


def test_predict_dataset_reproduces_planted_teacher():
    d, p = _partition_dataset_and_program()
    for split in ("train", "val", "test"):
        preds = predict_dataset(p, d, split)
        assert np.array_equal(preds, d.teacher[d.split(split)])


def test_predict_dataset_empty_program_abstains():
    d, p = _partition_dataset_and_program()
    empty = Program(class_names=p.class_names, chain=p.chain,
                    rulesets=(RuleSet("conv0", "output", ()),),
                    thresholds=p.thresholds, depth=5, alpha=0.0)
    assert (predict_dataset(empty, d, "val") == -1).all()


def test_predict_dataset_is_stateless_across_samples():
    d, p = _partition_dataset_and_program()
    preds = predict_dataset(p, d, "test")
    idx = d.split("test")
    order = np.argsort(d.norms["conv0"][idx, 0])  # any permutation
    from convlogic import infer_bits as ib
    from convlogic.quantise import quantise
    bits = quantise(d.norms["conv0"][idx][order], np.asarray(p.thresholds))
    assert np.array_equal(ib(p, bits), preds[order])


# ---------------------------------------------------------------------------
# serialisation
# ---------------------------------------------------------------------------

def test_serialise_rule_line_shape():
    p = Program(class_names=("desert", "forest", "street"),
                chain=(("conv13", 512), ("output", 3)),
                rulesets=(RuleSet("conv13", "output", (
                    Rule((L("conv13", 334), L("conv13", 500, positive=False)),
                         (L("output", 2),), 41, (39,)),
                )),),
                thresholds=(1.0,) * 512, depth=5, alpha=0.01)
    assert "street <- conv13.334 & !conv13.500. {support=41, pos=39}" in serialise(p)


def test_parse_serialise_round_trip():
    d, p = _partition_dataset_and_program()
    text = serialise(p)
    p2 = parse(text)
    assert p2 == p
    assert serialise(p2) == text


def test_parse_reports_line_of_missing_dot():
    d, p = _partition_dataset_and_program()
    lines = serialise(p).splitlines()
    broken = [ln.replace(". {", " {", 1) if "<-" in ln and "conv0.0 &" not in ln else ln
              for ln in lines]
    bad_line = next(i for i, (a, b) in enumerate(zip(lines, broken), 1) if a != b)
    with pytest.raises(ProgramSyntaxError, match="'.'") as err:
        parse("\n".join(broken))
    assert err.value.line == bad_line


def test_parse_rejects_unknown_class():
    text = "swamp <- conv0.1. {support=1, pos=1}"
    with pytest.raises(ProgramSyntaxError, match="unknown class"):
        parse_rule(text, "conv0", "output", ("desert", "forest"))


def test_parse_rejects_chain_boundary_mismatch():
    d, p = _partition_dataset_and_program()
    text = serialise(p).replace("chain = conv0:5,output:3",
                                "chain = conv0:5,conv1:4,output:3")
    with pytest.raises(ProgramError, match="chained-layer mismatch"):
        parse(text)


def test_empty_antecedent_rule_round_trips():
    p = single_layer_program([Rule((), (L("output", 1),), 12, (9,))])
    text = serialise(p)
    assert "class1 <- true. {support=12, pos=9}" in text
    assert parse(text) == p


def test_thresholds_round_trip_at_nine_digits():
    thetas = (25.3216708, 1 / 3, 0.0, 123456.789)
    from convlogic.program import round9
    p = single_layer_program([rule("conv0", [(0, True)], "output", [0])],
                             n_kernels=4, thresholds=[round9(t) for t in thetas])
    assert parse(serialise(p)).thresholds == p.thresholds
