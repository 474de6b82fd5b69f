"""Command-line entry point.

Subcommands: synth, extract, evaluate, infer, sweep, inspect, render.
Results go to stdout, diagnostics and the config echo to stderr.
Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import traceback
from pathlib import Path

from .dataset import Dataset, SynthConfig, generate_synthetic, load_dataset, save_dataset
from .errors import ConvlogicError, DataError
from .evaluate import (chain_for_lep, evaluate_program, metrics_table, run_sweep,
                       sweep_csv, sweep_table)
from .induction import ExtractionConfig, extract_program
from .inspection import LabelMap, explain_sample, format_profile, render_rules, top_m
from .program import Program, RuleSet, parse, parse_rule, serialise, simplify
from .quantise import OUTPUT_LAYER

JOBS_ENV = "CONVLOGIC_JOBS"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with code 2 on bad usage; remap to our usage error.
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}\n{self.format_usage()}")


def _default_jobs() -> int:
    try:
        return max(1, int(os.environ.get(JOBS_ENV, "1")))
    except ValueError:
        return 1


def _echo_config(args: argparse.Namespace) -> None:
    items = {k: v for k, v in sorted(vars(args).items()) if k != "func" and v is not None}
    print("# config " + " ".join(f"{k}={v}" for k, v in items.items()), file=sys.stderr)


def _parse_depths(text: str) -> list[int]:
    if ".." in text:
        lo, _, hi = text.partition("..")
        return list(range(int(lo), int(hi) + 1))
    return [int(v) for v in text.split(",")]


def _layers_for(args, d: Dataset) -> tuple[str, ...]:
    if args.layers:
        return tuple(s.strip() for s in args.layers.split(","))
    return chain_for_lep(d, args.lep)


def _pick_alpha(alpha: float | None, layers: tuple[str, ...]) -> float:
    if alpha is not None:
        return alpha
    # single extracted boundary: 0.01; deeper chains tighten to 0.1
    return 0.01 if len(layers) <= 2 else 0.1


def _load_synth_config(path: Path) -> SynthConfig:
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except OSError as e:
        raise DataError(f"cannot read config: {e}") from e
    except json.JSONDecodeError as e:
        raise DataError(f"invalid config JSON: {e}") from e
    try:
        layer_sizes = tuple(int(v) for v in doc["layer_sizes"])
        n_classes = int(doc["n_classes"])
        class_names = tuple(doc.get("class_names")
                            or (f"class{i}" for i in range(n_classes)))
        names = [f"conv{i}" for i in range(len(layer_sizes))]
        chain = list(zip(names, names[1:] + [OUTPUT_LAYER]))
        rule_doc = doc.get("rules", {})
        rulesets = []
        for src, dst in chain:
            lines = rule_doc.get(f"{src} -> {dst}", [])
            rules = tuple(parse_rule(line, src, dst, class_names) for line in lines)
            rulesets.append(RuleSet(src, dst, rules))
        return SynthConfig(
            n_samples=int(doc["n_samples"]),
            layer_sizes=layer_sizes,
            n_classes=n_classes,
            seed=int(doc["seed"]),
            rules=tuple(rulesets),
            default_class=int(doc.get("default_class", 0)),
            exhaustive=bool(doc.get("exhaustive", False)),
            split_fractions=tuple(doc.get("split_fractions", (0.7, 0.15, 0.15))),
            class_names=class_names,
            label_noise=float(doc.get("label_noise", 0.0)),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise DataError(f"invalid synth config: {e}") from e


def _cmd_synth(args) -> int:
    cfg = _load_synth_config(Path(args.config))
    d = generate_synthetic(cfg)
    save_dataset(d, args.out)
    print(f"wrote dataset: {d.n_samples} samples, "
          f"{len(d.manifest.layers)} layers, {len(d.manifest.class_names)} classes -> {args.out}")
    return 0


def _cmd_extract(args) -> int:
    d = load_dataset(args.dataset)
    layers = _layers_for(args, d)
    alpha = _pick_alpha(args.alpha, layers)
    cfg = ExtractionConfig(lep=args.lep, layers=layers, depth=args.depth,
                           alpha=alpha, demand_driven=not args.all_kernels)
    print(f"# extracting layers={','.join(layers)} depth={args.depth} "
          f"alpha={alpha:g} jobs={args.jobs}", file=sys.stderr)
    prog = extract_program(d, cfg, jobs=args.jobs)
    if not args.no_simplify:
        prog = simplify(prog)
    Path(args.out).write_text(serialise(prog), encoding="utf-8")
    print(f"wrote program: {sum(len(rs.rules) for rs in prog.rulesets)} rules -> {args.out}")
    return 0


def _load_program(path) -> Program:
    p = Path(path)
    if not p.is_file():
        raise DataError(f"missing program file {p}")
    return parse(p.read_text(encoding="utf-8"))


def _cmd_evaluate(args) -> int:
    d = load_dataset(args.dataset)
    prog = _load_program(args.program)
    splits = ("train", "val", "test") if args.split == "all" else (args.split,)
    metrics = evaluate_program(prog, d, splits)
    for name in splits:
        sm = metrics.splits[name]
        if sm is None:
            print(f"{name}: undefined (empty split)")
        else:
            print(f"{name}: accuracy={sm.accuracy:.3f} fidelity={sm.fidelity:.3f} "
                  f"abstain={sm.abstain:.3f}")
    st = metrics.stats
    print(f"rules={st.n_rules} vars={st.n_vars} vars_polarity={st.n_vars_polarity} "
          f"size={st.size}")
    if args.table:
        print(metrics_table([(Path(args.program).name, metrics)]))
    return 0


def _cmd_infer(args) -> int:
    d = load_dataset(args.dataset)
    prog = _load_program(args.program)
    labels = LabelMap.load(args.labels) if args.labels else None
    print(explain_sample(prog, d, args.sample, labels))
    return 0


def _cmd_sweep(args) -> int:
    d = load_dataset(args.dataset)
    if args.leps:
        leps = [s.strip() for s in args.leps.split(",")]
    else:
        leps = [lm.name for lm in d.manifest.layers]
    depths = _parse_depths(args.depths)
    longest = max(len(chain_for_lep(d, lep)) for lep in leps)
    alpha = _pick_alpha(args.alpha, ("x",) * longest)
    print(f"# sweep leps={','.join(leps)} depths={depths} alpha={alpha:g} "
          f"jobs={args.jobs}", file=sys.stderr)
    grid = run_sweep(d, leps, depths, alpha, demand_driven=not args.all_kernels,
                     jobs=args.jobs)
    for cell in grid.cells:
        if cell.error:
            print(f"# cell {cell.lep} d={cell.depth} failed: {cell.error}", file=sys.stderr)
    Path(args.out).write_text(sweep_csv(grid), encoding="utf-8")
    print(sweep_table(grid))
    print(f"wrote {args.out}")
    if args.figures:
        from .figures import render_sweep_figures

        for path in render_sweep_figures(grid, args.figures):
            print(f"wrote {path}")
    return 0


def _cmd_inspect(args) -> int:
    d = load_dataset(args.dataset)
    print(format_profile(top_m(d, args.layer, args.kernel, args.m)))
    return 0


def _cmd_render(args) -> int:
    prog = _load_program(args.program)
    labels = LabelMap.load(args.labels) if args.labels else None
    sys.stdout.write(render_rules(prog, labels))
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="convlogic",
                     description="Approximate a CNN with a propositional logic program.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", parents=[], help="generate a synthetic planted-rule dataset")
    p.add_argument("--config", required=True, help="synth config JSON")
    p.add_argument("--out", required=True, help="output dataset directory")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("extract", help="extract a logic program from a dataset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--lep", required=True, help="logical entry point layer")
    p.add_argument("--layers", help="comma list lep,...,output (default: lep..output)")
    p.add_argument("--depth", type=int, default=5)
    p.add_argument("--alpha", type=float, default=None,
                   help="stopping fraction (default 0.01, or 0.1 for multi-layer chains)")
    p.add_argument("--all-kernels", action="store_true",
                   help="target every kernel at intermediate layers")
    p.add_argument("--no-simplify", action="store_true")
    p.add_argument("--jobs", type=int, default=_default_jobs())
    p.add_argument("--out", required=True, help="output program file (.eric)")
    p.set_defaults(func=_cmd_extract)

    p = sub.add_parser("evaluate", help="evaluate a program against a dataset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--program", required=True)
    p.add_argument("--split", default="all", help="train|val|test|all")
    p.add_argument("--table", action="store_true", help="also print a results table")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("infer", help="explain one sample")
    p.add_argument("--dataset", required=True)
    p.add_argument("--program", required=True)
    p.add_argument("--sample", type=int, required=True)
    p.add_argument("--labels", help="kernel label map file")
    p.set_defaults(func=_cmd_infer)

    p = sub.add_parser("sweep", help="layer x depth sweep, CSV plus optional figures")
    p.add_argument("--dataset", required=True)
    p.add_argument("--leps", help="comma list of entry layers (default: all)")
    p.add_argument("--depths", default="1..5", help="e.g. 1..5 or 1,3,5")
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--all-kernels", action="store_true")
    p.add_argument("--jobs", type=int, default=_default_jobs())
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--figures", help="directory for rendered figures")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("inspect", help="strongest-activating training samples for a kernel")
    p.add_argument("--dataset", required=True)
    p.add_argument("--layer", required=True)
    p.add_argument("--kernel", type=int, required=True)
    p.add_argument("--m", type=int, default=10)
    p.set_defaults(func=_cmd_inspect)

    p = sub.add_parser("render", help="print a program with kernel labels substituted")
    p.add_argument("--program", required=True)
    p.add_argument("--labels", help="kernel label map file")
    p.set_defaults(func=_cmd_render)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        _echo_config(args)
        return args.func(args)
    except UsageError as e:
        print(e, file=sys.stderr)
        return 1
    except (ConvlogicError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except Exception:
        traceback.print_exc()
        return 3


if __name__ == "__main__":
    sys.exit(main())
