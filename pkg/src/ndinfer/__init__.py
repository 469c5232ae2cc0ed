"""Inference engine for loop-free discrete probabilistic programs with
nondeterministic choice and conditioning.

Programs compile to boolean formulas, the formulas combine into one
reduced multi-terminal decision diagram, the diagram lifts to a compact
MDP, and the maximum conditional probability of each output value is a
conditional reachability query on that MDP.
"""

import sys

# Deeply nested programs recurse through the frontend, the compiler and
# the reference evaluator; the default limit is too tight for them.
sys.setrecursionlimit(max(sys.getrecursionlimit(), 20000))

from .checker import (  # noqa: E402
    InferOptions, QueryResult, SchedulerWitness, ValueResult,
    conditional_bisection, conditional_restart, infer, max_reach_dag,
    weighted_terminal_value,
)
from .compiler import (  # noqa: E402
    CompiledTriple, FlipEntry, boolean_reduce, compile_program,
    enumerate_output_values, format_triple,
)
from .dd import DDStore, FormulaTuple, Leaf, Pair  # noqa: E402
from .errors import NdError  # noqa: E402
from .frontend import analyze, compile_source, load_program  # noqa: E402
from .mdp import (  # noqa: E402
    Mdp, compress, export_explicit, format_explicit, lift, load_explicit_mdp,
    normalize_restart,
)
from .oracle import (  # noqa: E402
    build_exec_tree, brute_force_max_conditional, count_exec_leaves,
    evaluate_assignment, oracle_max_conditional, wmc_probabilistic,
)
from .syntax import REJECT, CoreProgram, Value, format_value  # noqa: E402

__all__ = [
    "CompiledTriple", "CoreProgram", "DDStore", "FlipEntry", "FormulaTuple",
    "InferOptions", "Leaf", "Mdp", "NdError", "Pair", "QueryResult", "REJECT",
    "SchedulerWitness", "Value", "ValueResult", "analyze", "boolean_reduce",
    "brute_force_max_conditional", "build_exec_tree", "compile_program",
    "compile_source", "compress", "conditional_bisection",
    "conditional_restart", "count_exec_leaves", "enumerate_output_values",
    "evaluate_assignment", "export_explicit", "format_explicit",
    "format_triple", "format_value", "infer", "lift", "load_explicit_mdp",
    "load_program", "max_reach_dag", "normalize_restart",
    "oracle_max_conditional", "weighted_terminal_value", "wmc_probabilistic",
]

__version__ = "0.1.0"
