"""Approximate a CNN's kernel behaviour with a propositional logic program.

Pipeline: binarise per-kernel activation norms at training-mean thresholds,
induce depth-bounded gini decision trees relating kernels across layers,
convert True leaves to rules, simplify the program, and run layered logical
inference to predict classes.
"""

from .dataset import (Dataset, LayerMeta, Manifest, SynthConfig, generate_synthetic,
                      load_dataset, save_dataset)
from .errors import ConvlogicError, DataError, ProgramError, ProgramSyntaxError
from .evaluate import (Metrics, ProgramStats, SweepGrid, accuracy, evaluate_program,
                       fidelity, program_stats, run_sweep, sweep_csv, sweep_table)
from .induction import (ExtractionConfig, InductionParams, Leaf, Split, best_split,
                        extract_layer, extract_program, gini, grow_tree, tree_to_rules)
from .inspection import KernelProfile, LabelMap, explain_sample, render_rules, top_m
from .program import (ClassDecision, Literal, Program, Rule, RuleSet, infer, infer_bits,
                      infer_layer, parse, parse_rule, predict_dataset, serialise, simplify)
from .quantise import OUTPUT_LAYER, binarise_dataset, compute_thresholds, l1_norm, quantise

__version__ = "0.1.0"

__all__ = [
    "ClassDecision", "ConvlogicError", "DataError", "Dataset", "ExtractionConfig",
    "InductionParams", "KernelProfile", "LabelMap", "LayerMeta", "Leaf", "Literal",
    "Manifest", "Metrics", "OUTPUT_LAYER", "Program", "ProgramError", "ProgramStats",
    "ProgramSyntaxError", "Rule", "RuleSet", "Split", "SweepGrid", "SynthConfig",
    "accuracy", "best_split", "binarise_dataset", "compute_thresholds",
    "evaluate_program", "explain_sample", "extract_layer", "extract_program",
    "fidelity", "generate_synthetic", "gini", "grow_tree", "infer", "infer_bits",
    "infer_layer", "l1_norm", "load_dataset", "parse", "parse_rule",
    "predict_dataset", "program_stats", "quantise", "render_rules", "run_sweep",
    "save_dataset", "serialise", "simplify", "sweep_csv", "sweep_table", "top_m",
    "tree_to_rules",
]
