"""Logic-program model: literals, rules, simplification, layered inference
and the ``.eric`` text format.

File format
-----------
Program files are line-oriented UTF-8.  ``#`` starts a comment and blank
lines are ignored.  Example::

    [meta]
    version = 1
    lep = conv13
    chain = conv13:512,output:3
    classes = desert,forest,street
    depth = 5
    alpha = 0.01
    demand_driven = true

    [rules conv13 -> output]
    street <- conv13.334 & !conv13.500. {support=41, pos=39}

    [thresholds conv13]
    k0 = 25.3216708

One rule per line: comma-separated consequents, ``<-``, antecedent literals
joined with `` & ``, a terminating ``.``, then a ``{support=..., pos=...}``
trailer.  Kernel literals are written ``<layer>.<index>`` and ``!`` negates.
Consequents at the output boundary are class names.  A rule with no
antecedents uses the keyword ``true``.  Multi-consequent rules carry one
``pos`` value per consequent (comma-separated, aligned with the consequents).
Thresholds are printed with 9 significant digits, which a float64 round-trips
exactly.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DataError, ProgramError, ProgramSyntaxError
from .quantise import OUTPUT_LAYER, quantise

_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_-]*\Z")
_RESERVED_NAMES = frozenset({"true", OUTPUT_LAYER})


def _g9(x: float) -> str:
    """Decimal text with 9 significant digits."""
    return format(float(x), ".9g")


def round9(x: float) -> float:
    """Round to the float nearest its 9-significant-digit decimal form."""
    return float(_g9(x))


def valid_name(name: str) -> bool:
    return bool(_NAME_RE.match(name)) and name not in _RESERVED_NAMES


@dataclass(frozen=True, order=True)
class Literal:
    layer: str
    kernel: int
    positive: bool = True

    def negated(self) -> "Literal":
        return Literal(self.layer, self.kernel, not self.positive)

    def render(self, class_names: Sequence[str] | None = None,
               labels: Mapping[tuple[str, int], str] | None = None) -> str:
        if self.layer == OUTPUT_LAYER and class_names is not None:
            name = class_names[self.kernel]
        elif labels and (self.layer, self.kernel) in labels:
            name = labels[(self.layer, self.kernel)]
        else:
            name = f"{self.layer}.{self.kernel}"
        return name if self.positive else "!" + name

    def __str__(self) -> str:
        return self.render()


@dataclass(frozen=True)
class Rule:
    """A conjunction of antecedent literals asserting consequent literals.

    ``positives`` is aligned with ``consequents``: for each asserted literal
    it counts the training samples, out of ``support`` satisfying the
    antecedents, for which that literal held.  Consequents are kept sorted by
    kernel index so structurally equal rules compare equal.
    """

    antecedents: tuple[Literal, ...]
    consequents: tuple[Literal, ...]
    support: int
    positives: tuple[int, ...]

    def __post_init__(self):
        ants = tuple(self.antecedents)
        cons = tuple(self.consequents)
        pos = tuple(int(p) for p in self.positives)
        if not cons:
            raise ProgramError("rule has no consequents")
        if len(pos) != len(cons):
            raise ProgramError("positives must align with consequents")
        if any(not c.positive for c in cons):
            raise ProgramError("consequents must be positive literals")
        if len({c.layer for c in cons}) != 1:
            raise ProgramError("consequents must share one layer")
        if len({c.kernel for c in cons}) != len(cons):
            raise ProgramError("duplicate consequent kernel")
        if ants:
            if len({a.layer for a in ants}) != 1:
                raise ProgramError("antecedents must share one layer")
            if len({a.kernel for a in ants}) != len(ants):
                raise ProgramError("kernel appears twice among antecedents")
        if self.support < 1:
            raise ProgramError("support must be >= 1")
        if any(p < 1 or p > self.support for p in pos):
            raise ProgramError("positives must be in [1, support]")
        order = sorted(range(len(cons)), key=lambda i: cons[i].kernel)
        object.__setattr__(self, "antecedents", ants)
        object.__setattr__(self, "consequents", tuple(cons[i] for i in order))
        object.__setattr__(self, "positives", tuple(pos[i] for i in order))

    @property
    def antecedent_key(self) -> frozenset:
        return frozenset((a.kernel, a.positive) for a in self.antecedents)


@dataclass(frozen=True)
class RuleSet:
    """The rules of one layer boundary: antecedents at `source`, consequents
    at `target`."""

    source: str
    target: str
    rules: tuple[Rule, ...]

    def __post_init__(self):
        object.__setattr__(self, "rules", tuple(self.rules))
        for r in self.rules:
            if r.antecedents and r.antecedents[0].layer != self.source:
                raise ProgramError(
                    f"antecedent layer {r.antecedents[0].layer!r} does not match "
                    f"boundary source {self.source!r}"
                )
            if r.consequents[0].layer != self.target:
                raise ProgramError(
                    f"consequent layer {r.consequents[0].layer!r} does not match "
                    f"boundary target {self.target!r}"
                )


@dataclass(frozen=True)
class Program:
    """An extracted program: chained rule sets plus the entry-layer thresholds.

    ``chain`` lists (layer name, kernel count) from the logical entry point up
    to the output layer.  ``rulesets[i]`` maps chain[i] bits to chain[i+1]
    bits.  ``thresholds`` quantise the entry layer and are stored rounded to
    9 significant digits, exactly as serialised.
    """

    class_names: tuple[str, ...]
    chain: tuple[tuple[str, int], ...]
    rulesets: tuple[RuleSet, ...]
    thresholds: tuple[float, ...]
    depth: int
    alpha: float
    demand_driven: bool = True

    def __post_init__(self):
        object.__setattr__(self, "class_names", tuple(self.class_names))
        object.__setattr__(self, "chain", tuple((str(n), int(k)) for n, k in self.chain))
        object.__setattr__(self, "rulesets", tuple(self.rulesets))
        object.__setattr__(self, "thresholds", tuple(float(t) for t in self.thresholds))
        if len(self.class_names) < 2:
            raise ProgramError("a program needs at least 2 classes")
        if len(set(self.class_names)) != len(self.class_names):
            raise ProgramError("duplicate class name")
        for c in self.class_names:
            if not valid_name(c):
                raise ProgramError(f"invalid class name {c!r}")
        if len(self.chain) < 2:
            raise ProgramError("chain needs an entry layer and the output layer")
        if self.chain[-1] != (OUTPUT_LAYER, len(self.class_names)):
            raise ProgramError("chain must end at the output layer with one kernel per class")
        names = [n for n, _ in self.chain]
        if len(set(names)) != len(names):
            raise ProgramError("duplicate layer in chain")
        for name, k in self.chain[:-1]:
            if not valid_name(name):
                raise ProgramError(f"invalid layer name {name!r}")
            if k < 1:
                raise ProgramError(f"layer {name!r} has no kernels")
        if len(self.rulesets) != len(self.chain) - 1:
            raise ProgramError("chained-layer mismatch: need one rule set per boundary")
        sizes = dict(self.chain)
        for rs, (src, _), (dst, _) in zip(self.rulesets, self.chain[:-1], self.chain[1:]):
            if (rs.source, rs.target) != (src, dst):
                raise ProgramError(
                    f"chained-layer mismatch: rule set {rs.source}->{rs.target} "
                    f"does not fit boundary {src}->{dst}"
                )
            for r in rs.rules:
                if any(a.kernel >= sizes[src] for a in r.antecedents):
                    raise ProgramError(f"antecedent kernel out of range for {src!r}")
                if any(c.kernel >= sizes[dst] for c in r.consequents):
                    raise ProgramError(f"consequent kernel out of range for {dst!r}")
        if len(self.thresholds) != self.chain[0][1]:
            raise ProgramError("threshold count must match the entry layer")
        if any(not np.isfinite(t) or t < 0 for t in self.thresholds):
            raise ProgramError("thresholds must be finite and non-negative")
        if self.depth < 1:
            raise ProgramError("depth must be >= 1")
        if not (0.0 <= self.alpha < 1.0):
            raise ProgramError("alpha must be in [0, 1)")

    @property
    def lep(self) -> str:
        return self.chain[0][0]

    @property
    def layer_sizes(self) -> dict[str, int]:
        return dict(self.chain)


@dataclass(frozen=True)
class ClassDecision:
    """Outcome of inference for one sample.

    ``class_index`` is None when no output rule fired (abstention).
    ``fired`` lists (ruleset index, rule index) pairs for every rule whose
    antecedents were satisfied, across all boundaries: the local explanation.
    """

    class_index: int | None
    fired: tuple[tuple[int, int], ...] = ()


def _fire_mask(rule: Rule, bits: np.ndarray) -> np.ndarray:
    """Boolean vector: rows of `bits` satisfying all antecedents."""
    m = np.ones(bits.shape[0], dtype=bool)
    for lit in rule.antecedents:
        m &= bits[:, lit.kernel] == (1 if lit.positive else -1)
    return m


def class_stats(p: Program) -> dict[int, tuple[int, int]]:
    """Per class: summed (support, positives) over all output rules asserting it."""
    totals: dict[int, tuple[int, int]] = {}
    for r in p.rulesets[-1].rules:
        for lit, pos in zip(r.consequents, r.positives):
            s, q = totals.get(lit.kernel, (0, 0))
            totals[lit.kernel] = (s + r.support, q + pos)
    return totals


def _class_priority(p: Program) -> list[int]:
    """Class indices ordered worst to best.

    When several output literals are set, the winner is the class with the
    highest aggregate precision (summed positives / summed support over its
    output rules), then the highest aggregate support, then the lowest index.
    Aggregates over *all* of a class's rules are unchanged by simplification,
    so simplify never alters decisions.
    """
    totals = class_stats(p)

    def key(c: int):
        s, q = totals.get(c, (0, 0))
        return (q / s if s else -1.0, s, -c)

    return sorted(range(len(p.class_names)), key=key)


def infer_layer(bits, ruleset: RuleSet, n_out: int) -> np.ndarray:
    """One boundary of inference: default negation plus fired-rule assertions."""
    bits = np.asarray(bits, dtype=np.int8)
    squeeze = bits.ndim == 1
    if squeeze:
        bits = bits.reshape(1, -1)
    out = np.full((bits.shape[0], n_out), -1, dtype=np.int8)
    for rule in ruleset.rules:
        if (any(a.kernel >= bits.shape[1] for a in rule.antecedents)
                or any(c.kernel >= n_out for c in rule.consequents)):
            raise ProgramError("literal out of range for the given bit vector")
        m = _fire_mask(rule, bits)
        if m.any():
            for lit in rule.consequents:
                out[m, lit.kernel] = 1
    return out[0] if squeeze else out


def infer_bits(p: Program, bits) -> np.ndarray:
    """Vectorised inference for a (n_samples, K_lep) bit matrix.

    Returns int64 class indices, -1 for abstention.
    """
    cur = np.asarray(bits, dtype=np.int8)
    if cur.ndim != 2 or cur.shape[1] != p.chain[0][1]:
        raise DataError(
            f"bit matrix shape {cur.shape} does not match entry layer "
            f"{p.chain[0][0]!r} ({p.chain[0][1]} kernels)"
        )
    for rs, (_, n_out) in zip(p.rulesets, p.chain[1:]):
        cur = infer_layer(cur, rs, n_out)
    preds = np.full(cur.shape[0], -1, dtype=np.int64)
    for c in _class_priority(p):
        preds[cur[:, c] == 1] = c
    return preds


def infer(p: Program, lep_bits) -> ClassDecision:
    """Single-sample inference with the fired-rule trace."""
    row = np.asarray(lep_bits, dtype=np.int8).reshape(1, -1)
    if row.shape[1] != p.chain[0][1]:
        raise DataError(
            f"bit vector length {row.shape[1]} does not match entry layer "
            f"{p.chain[0][0]!r} ({p.chain[0][1]} kernels)"
        )
    fired: list[tuple[int, int]] = []
    cur = row
    for si, (rs, (_, n_out)) in enumerate(zip(p.rulesets, p.chain[1:])):
        out = np.full((1, n_out), -1, dtype=np.int8)
        for ri, rule in enumerate(rs.rules):
            if _fire_mask(rule, cur)[0]:
                fired.append((si, ri))
                for lit in rule.consequents:
                    out[0, lit.kernel] = 1
        cur = out
    chosen: int | None = None
    for c in _class_priority(p):
        if cur[0, c] == 1:
            chosen = c
    return ClassDecision(chosen, tuple(fired))


def predict_dataset(p: Program, d, split: str) -> np.ndarray:
    """Quantise the entry layer of every sample in a split, then infer.

    Returns int64 class indices aligned with the split's index list, -1 for
    abstention.
    """
    idx = d.split(split)
    lep = p.lep
    if lep not in d.norms:
        raise DataError(f"layer {lep!r} missing from dataset")
    norms = d.norms[lep]
    if norms.shape[1] != len(p.thresholds):
        raise DataError(
            f"program thresholds ({len(p.thresholds)}) do not match layer "
            f"{lep!r} ({norms.shape[1]} kernels)"
        )
    if idx.size == 0:
        return np.empty(0, dtype=np.int64)
    bits = quantise(norms[idx], np.asarray(p.thresholds))
    return infer_bits(p, bits)


# ---------------------------------------------------------------------------
# Simplification
# ---------------------------------------------------------------------------

def _merge_shared_antecedents(rules: list[Rule]) -> bool:
    """Merge rules with identical antecedent sets into multi-consequent rules.

    Only rules with equal support and non-overlapping consequents merge, which
    keeps every class's aggregate (support, positives) intact; rules produced
    by extraction always qualify.
    """
    changed = False
    seen: dict[tuple, int] = {}
    i = 0
    while i < len(rules):
        r = rules[i]
        key = (r.antecedent_key, r.support)
        j = seen.get(key)
        if j is not None and j != i:
            base = rules[j]
            if not {c.kernel for c in base.consequents} & {c.kernel for c in r.consequents}:
                rules[j] = Rule(base.antecedents, base.consequents + r.consequents,
                                base.support, base.positives + r.positives)
                del rules[i]
                changed = True
                continue
        if j is None:
            seen[key] = i
        i += 1
    return changed


def _merge_complements(rules: list[Rule]) -> bool:
    """Merge rule pairs differing only in one kernel's polarity.

    The two rules must assert identical consequent literals; support and
    per-consequent positives are summed, so class aggregates are preserved.
    """
    changed = False
    while True:
        index: dict[tuple, tuple[int, bool]] = {}
        merged = False
        for i, r in enumerate(rules):
            aset = r.antecedent_key
            for lit in r.antecedents:
                rest = aset - {(lit.kernel, lit.positive)}
                key = (r.consequents, rest, lit.kernel)
                hit = index.get(key)
                if hit is not None and hit[1] != lit.positive:
                    j = hit[0]
                    base = rules[j]
                    ants = tuple(a for a in base.antecedents if a.kernel != lit.kernel)
                    rules[j] = Rule(ants, base.consequents, base.support + r.support,
                                    tuple(a + b for a, b in zip(base.positives, r.positives)))
                    del rules[i]
                    merged = changed = True
                    break
                if hit is None:
                    index[key] = (i, lit.positive)
            if merged:
                break
        if not merged:
            return changed


def _simplify_ruleset(rs: RuleSet) -> RuleSet:
    rules = list(rs.rules)
    while True:
        a = _merge_shared_antecedents(rules)
        b = _merge_complements(rules)
        if not (a or b):
            break
    return RuleSet(rs.source, rs.target, tuple(rules))


def simplify(p: Program) -> Program:
    """Merge complementary-literal rule pairs and shared-antecedent rules,
    per boundary, to a fixpoint.  Inference decisions are unchanged."""
    return replace(p, rulesets=tuple(_simplify_ruleset(rs) for rs in p.rulesets))


# ---------------------------------------------------------------------------
# Serialisation
# ---------------------------------------------------------------------------

def _render_rule(r: Rule, class_names: Sequence[str],
                 labels: Mapping[tuple[str, int], str] | None = None) -> str:
    cons = ",".join(lit.render(class_names, labels) for lit in r.consequents)
    ants = " & ".join(lit.render(None, labels) for lit in r.antecedents) or "true"
    pos = ",".join(str(v) for v in r.positives)
    return f"{cons} <- {ants}. {{support={r.support}, pos={pos}}}"


def serialise(p: Program, labels: Mapping[tuple[str, int], str] | None = None) -> str:
    """Render a program as text. `labels` substitutes kernel literal names
    for presentation; unlabelled output stays parseable."""
    lines = [
        "[meta]",
        "version = 1",
        f"lep = {p.lep}",
        "chain = " + ",".join(f"{n}:{k}" for n, k in p.chain),
        "classes = " + ",".join(p.class_names),
        f"depth = {p.depth}",
        f"alpha = {_g9(p.alpha)}",
        f"demand_driven = {'true' if p.demand_driven else 'false'}",
    ]
    for rs in p.rulesets:
        lines.append("")
        lines.append(f"[rules {rs.source} -> {rs.target}]")
        for r in rs.rules:
            lines.append(_render_rule(r, p.class_names, labels))
    lines.append("")
    lines.append(f"[thresholds {p.lep}]")
    for i, t in enumerate(p.thresholds):
        lines.append(f"k{i} = {_g9(t)}")
    return "\n".join(lines) + "\n"


_SECTION_RE = re.compile(r"\[\s*(meta|rules\s+(\S+)\s*->\s*(\S+)|thresholds\s+(\S+))\s*\]\s*\Z")
_LITERAL_RE = re.compile(r"(!?)([A-Za-z_][A-Za-z0-9_-]*)\.([0-9]+)\Z")
_TRAILER_RE = re.compile(r"\{\s*support=([0-9]+),\s*pos=([0-9]+(?:,[0-9]+)*)\s*\}\s*\Z")
_THRESH_RE = re.compile(r"k([0-9]+)\s*=\s*([0-9.eE+-]+)\s*\Z")


def parse_rule(text: str, source: str, target: str, class_names: Sequence[str],
               lineno: int = 1) -> Rule:
    """Parse one rule line for the given boundary."""
    line = text.rstrip()
    arrow = line.find("<-")
    if arrow < 0:
        raise ProgramSyntaxError("expected '<-'", lineno, len(line) + 1)

    tm = _TRAILER_RE.search(line)
    support, positives = 1, None
    body_end = len(line)
    if tm:
        support = int(tm.group(1))
        positives = tuple(int(v) for v in tm.group(2).split(","))
        body_end = tm.start()
    body = line[arrow + 2:body_end].rstrip()
    if not body.endswith("."):
        raise ProgramSyntaxError("expected '.' terminating the rule",
                                 lineno, arrow + 2 + len(body) + 1)
    ants_text = body[:-1]

    class_index = {name: i for i, name in enumerate(class_names)}
    consequents = []
    col = 1
    for tok in line[:arrow].split(","):
        name = tok.strip()
        offset = col + len(tok) - len(tok.lstrip())
        if not name:
            raise ProgramSyntaxError("empty consequent", lineno, offset)
        if target == OUTPUT_LAYER:
            if name not in class_index:
                raise ProgramSyntaxError(f"unknown class {name!r}", lineno, offset)
            consequents.append(Literal(OUTPUT_LAYER, class_index[name]))
        else:
            m = _LITERAL_RE.match(name)
            if not m or m.group(1) or m.group(2) != target:
                raise ProgramSyntaxError(
                    f"expected a positive {target!r} literal, got {name!r}", lineno, offset)
            consequents.append(Literal(target, int(m.group(3))))
        col += len(tok) + 1

    antecedents = []
    if ants_text.strip() != "true":
        col = arrow + 3
        for tok in ants_text.split("&"):
            name = tok.strip()
            offset = col + len(tok) - len(tok.lstrip())
            m = _LITERAL_RE.match(name)
            if not m or m.group(2) != source:
                raise ProgramSyntaxError(
                    f"expected a {source!r} literal, got {name!r}", lineno, offset)
            antecedents.append(Literal(source, int(m.group(3)), not m.group(1)))
            col += len(tok) + 1

    if positives is None:
        positives = (1,) * len(consequents)
    try:
        return Rule(tuple(antecedents), tuple(consequents), support, positives)
    except ProgramError as e:
        raise ProgramSyntaxError(str(e), lineno) from e


def parse(text: str) -> Program:
    """Parse program text. Inverse of `serialise` for label-free output."""
    meta: dict[str, str] = {}
    boundaries: list[tuple[str, str]] = []
    rules: dict[tuple[str, str], list[Rule]] = {}
    thresholds: dict[int, float] = {}
    thresh_layer: str | None = None
    section: tuple | None = None
    meta_done = False

    chain: list[tuple[str, int]] = []
    class_names: list[str] = []

    def finish_meta(lineno):
        nonlocal meta_done
        for key in ("version", "lep", "chain", "classes", "depth", "alpha", "demand_driven"):
            if key not in meta:
                raise ProgramSyntaxError(f"missing meta key {key!r}", lineno)
        if meta["version"] != "1":
            raise ProgramSyntaxError(f"unsupported version {meta['version']!r}", lineno)
        for part in meta["chain"].split(","):
            name, _, size = part.partition(":")
            if not size.isdigit():
                raise ProgramSyntaxError(f"bad chain entry {part!r}", lineno)
            chain.append((name.strip(), int(size)))
        class_names.extend(n.strip() for n in meta["classes"].split(","))
        meta_done = True

    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        stripped = line.strip()
        if stripped.startswith("["):
            m = _SECTION_RE.match(stripped)
            if not m:
                raise ProgramSyntaxError(f"bad section header {stripped!r}", lineno)
            if section == ("meta",) and not meta_done:
                finish_meta(lineno)
            if m.group(1) == "meta":
                section = ("meta",)
            elif m.group(2):
                if not meta_done:
                    raise ProgramSyntaxError("[meta] must come first", lineno)
                src, dst = m.group(2), m.group(3)
                if (src, dst) in rules:
                    raise ProgramSyntaxError(f"duplicate rules section {src}->{dst}", lineno)
                boundaries.append((src, dst))
                rules[(src, dst)] = []
                section = ("rules", src, dst)
            else:
                if not meta_done:
                    raise ProgramSyntaxError("[meta] must come first", lineno)
                thresh_layer = m.group(4)
                section = ("thresholds", thresh_layer)
            continue
        if section is None:
            raise ProgramSyntaxError("content before any section", lineno)
        if section[0] == "meta":
            key, eq, value = line.partition("=")
            if not eq:
                raise ProgramSyntaxError("expected 'key = value'", lineno)
            meta[key.strip()] = value.strip()
        elif section[0] == "rules":
            src, dst = section[1], section[2]
            rules[(src, dst)].append(parse_rule(line, src, dst, class_names, lineno))
        else:
            m = _THRESH_RE.match(stripped)
            if not m:
                raise ProgramSyntaxError("expected 'k<index> = <value>'", lineno)
            idx = int(m.group(1))
            if idx in thresholds:
                raise ProgramSyntaxError(f"duplicate threshold k{idx}", lineno)
            try:
                thresholds[idx] = float(m.group(2))
            except ValueError:
                raise ProgramSyntaxError(f"bad threshold value {m.group(2)!r}", lineno)

    if section == ("meta",) and not meta_done:
        finish_meta(len(text.splitlines()))
    if not meta_done:
        raise ProgramSyntaxError("missing [meta] section", max(1, len(text.splitlines())))

    expected = list(zip([n for n, _ in chain[:-1]], [n for n, _ in chain[1:]]))
    if boundaries != expected:
        raise ProgramError(
            f"chained-layer mismatch: sections {boundaries} do not cover chain "
            f"boundaries {expected}")
    if thresh_layer != chain[0][0]:
        raise ProgramError(
            f"thresholds given for {thresh_layer!r}, expected entry layer {chain[0][0]!r}")
    if sorted(thresholds) != list(range(chain[0][1])):
        raise ProgramError("thresholds must cover k0..k<K-1> exactly once")
    if meta["lep"] != chain[0][0]:
        raise ProgramError(f"lep {meta['lep']!r} is not the first chain layer")
    if meta["demand_driven"] not in ("true", "false"):
        raise ProgramError(f"bad demand_driven value {meta['demand_driven']!r}")

    try:
        depth = int(meta["depth"])
        alpha = float(meta["alpha"])
    except ValueError as e:
        raise ProgramError(f"bad numeric meta value: {e}") from e

    rulesets = tuple(RuleSet(src, dst, tuple(rules[(src, dst)])) for src, dst in expected)
    return Program(
        class_names=tuple(class_names),
        chain=tuple(chain),
        rulesets=rulesets,
        thresholds=tuple(thresholds[i] for i in range(chain[0][1])),
        depth=depth,
        alpha=alpha,
        demand_driven=meta["demand_driven"] == "true",
    )
