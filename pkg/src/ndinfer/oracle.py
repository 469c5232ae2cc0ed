"""Independent reference semantics, used to verify the engine.

The execution tree unfolds a core program by branching at every flip:
probabilistic nodes carry the flip bias, nondeterministic nodes carry
no weight, and a failed observation replaces the remaining subtree with
a reject leaf.  Because every nondeterministic node sits at a concrete
history, choosing a child per node realizes exactly the
history-dependent resolutions of nondeterminism; mixing children
randomly adds only convex combinations.

Maximization is exact: each subtree gets the finite set of achievable
(mass on the queried value among accepted runs, total accepted mass)
pairs, pruned to the vertices of its convex hull.  Nondeterministic
nodes take the union of their children's sets, probabilistic nodes the
pairwise theta-weighted combinations.  The conditional probability
num/den is quasilinear on the den > 0 region, so its maximum over the
achievable polytope is attained at one of these vertices (den = 0
counting as 0).  Everything is rational arithmetic; nothing here
touches decision diagrams or the checker.

Functions are evaluated by direct substitution of the argument value
into the body, per the function-table semantics; the compiler's
renaming machinery is deliberately not shared.
"""

import os
from dataclasses import dataclass
from fractions import Fraction
from itertools import product

from .errors import NdError, OracleCapError
from .syntax import (
    CCall, CFlip, CFst, CIf, CLet, CNFlip, CObserve, CoreExpr, CoreProgram,
    CSnd, CTuple, CVal, CVar, REJECT, Value, core_free_vars,
)
from .dd import Leaf as FtLeaf

DEFAULT_FLIP_CAP = 18
ORACLE_CAP_ENV = "NODICE_ORACLE_CAP"


@dataclass
class ProbNode:
    theta: Fraction
    then: object
    orelse: object


@dataclass
class NdetNode:
    then: object
    orelse: object


@dataclass
class ExecLeaf:
    outcome: object  # Value or REJECT
    weight: Fraction


def oracle_flip_cap(default: int = DEFAULT_FLIP_CAP) -> int:
    return int(os.environ.get(ORACLE_CAP_ENV, default))


# --------------------------------------------------------------------------- #
# Static flip counting (mirrors the compiler's level allocation: both
# if-branches count, every call expands its callee once).

def _function_map(p: CoreProgram) -> dict:
    return {f.name: f for f in p.functions}


def static_flip_count(p: CoreProgram) -> int:
    funcs = _function_map(p)
    memo = {}

    def count(e: CoreExpr) -> int:
        if isinstance(e, (CFlip, CNFlip)):
            return 1
        if isinstance(e, CLet):
            return count(e.rhs) + count(e.body)
        if isinstance(e, CIf):
            return count(e.then) + count(e.orelse)
        if isinstance(e, CCall):
            f = funcs[e.func]
            if e.func not in memo:
                memo[e.func] = count(f.body)
            return memo[e.func]
        return 0

    return count(p.main)


def _atom_value(e: CoreExpr, env: dict) -> Value:
    if isinstance(e, CVal):
        return e.value
    if isinstance(e, CVar):
        return env[e.name]
    raise NdError("internal: expected an atom")


# --------------------------------------------------------------------------- #
# Execution trees.

def build_exec_tree(p: CoreProgram, cap: int = None):
    """Big-step evaluation, branching at every flip."""
    if cap is None:
        cap = oracle_flip_cap()
    flips = static_flip_count(p)
    if flips > cap:
        raise OracleCapError(
            "program performs %d flips, oracle cap is %d (set %s to raise it)"
            % (flips, cap, ORACLE_CAP_ENV)
        )
    funcs = _function_map(p)

    def ev(e: CoreExpr, env: dict, weight: Fraction, k):
        if isinstance(e, CVal):
            return k(e.value, weight)
        if isinstance(e, CVar):
            return k(env[e.name], weight)
        if isinstance(e, CTuple):
            return k((_atom_value(e.left, env), _atom_value(e.right, env)), weight)
        if isinstance(e, CFst):
            return k(_atom_value(e.arg, env)[0], weight)
        if isinstance(e, CSnd):
            return k(_atom_value(e.arg, env)[1], weight)
        if isinstance(e, CFlip):
            return ProbNode(
                e.theta,
                k(True, weight * e.theta),
                k(False, weight * (1 - e.theta)),
            )
        if isinstance(e, CNFlip):
            return NdetNode(k(True, weight), k(False, weight))
        if isinstance(e, CObserve):
            if _atom_value(e.arg, env):
                return k(True, weight)
            return ExecLeaf(REJECT, weight)
        if isinstance(e, CIf):
            branch = e.then if _atom_value(e.guard, env) else e.orelse
            return ev(branch, env, weight, k)
        if isinstance(e, CLet):
            return ev(
                e.rhs, env, weight,
                lambda v, w: ev(e.body, {**env, e.name: v}, w, k),
            )
        if isinstance(e, CCall):
            f = funcs[e.func]
            return ev(f.body, {f.param: _atom_value(e.arg, env)}, weight, k)
        raise NdError("internal: cannot evaluate %r" % e)

    return ev(p.main, {}, Fraction(1), lambda v, w: ExecLeaf(v, w))


def count_ndet_nodes(tree) -> int:
    if isinstance(tree, NdetNode):
        return 1 + count_ndet_nodes(tree.then) + count_ndet_nodes(tree.orelse)
    if isinstance(tree, ProbNode):
        return count_ndet_nodes(tree.then) + count_ndet_nodes(tree.orelse)
    return 0


def total_leaf_weight(tree, pick_then: bool = True) -> Fraction:
    """Leaf mass under one fixed resolution of the nondeterminism."""
    if isinstance(tree, ExecLeaf):
        return tree.weight
    if isinstance(tree, ProbNode):
        return total_leaf_weight(tree.then, pick_then) + total_leaf_weight(tree.orelse, pick_then)
    branch = tree.then if pick_then else tree.orelse
    return total_leaf_weight(branch, pick_then)


# --------------------------------------------------------------------------- #
# Exact maximization via achievable-pair vertex sets.

def hull_vertices(points):
    """Vertices of the convex hull of 2-D rational points (monotone chain)."""
    pts = sorted(set(points))
    if len(pts) <= 2:
        return pts

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower = []
    for pt in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], pt) <= 0:
            lower.pop()
        lower.append(pt)
    upper = []
    for pt in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], pt) <= 0:
            upper.pop()
        upper.append(pt)
    return sorted(set(lower[:-1] + upper[:-1]))


def pareto_set(tree, v: Value, prune: bool = True):
    """Achievable (value mass, accepted mass) vertices for a subtree,
    both conditional on reaching it."""
    if isinstance(tree, ExecLeaf):
        if tree.outcome is REJECT:
            return [(Fraction(0), Fraction(0))]
        if tree.outcome == v:
            return [(Fraction(1), Fraction(1))]
        return [(Fraction(0), Fraction(1))]
    if isinstance(tree, NdetNode):
        points = pareto_set(tree.then, v, prune) + pareto_set(tree.orelse, v, prune)
    else:
        theta = tree.theta
        left = pareto_set(tree.then, v, prune)
        right = pareto_set(tree.orelse, v, prune)
        points = [
            (theta * a[0] + (1 - theta) * b[0], theta * a[1] + (1 - theta) * b[1])
            for a in left
            for b in right
        ]
    if prune:
        return hull_vertices(points)
    return sorted(set(points))


def oracle_max_conditional(tree, v: Value, prune: bool = True) -> Fraction:
    """Exact maximum of (value mass / accepted mass) over all resolutions."""
    best = Fraction(0)
    for num, den in pareto_set(tree, v, prune):
        if den > 0 and num / den > best:
            best = num / den
    return best


def brute_force_max_conditional(tree, v: Value) -> Fraction:
    """Enumerate every deterministic history-dependent strategy."""
    nodes = []

    def collect(t):
        if isinstance(t, NdetNode):
            nodes.append(t)
            collect(t.then)
            collect(t.orelse)
        elif isinstance(t, ProbNode):
            collect(t.then)
            collect(t.orelse)

    collect(tree)
    if len(nodes) > 20:
        raise OracleCapError("too many nondeterministic nodes to enumerate")

    def eval_fixed(t, choice):
        if isinstance(t, ExecLeaf):
            if t.outcome is REJECT:
                return Fraction(0), Fraction(0)
            return (Fraction(int(t.outcome == v)), Fraction(1))
        if isinstance(t, NdetNode):
            branch = t.then if choice[id(t)] else t.orelse
            return eval_fixed(branch, choice)
        ln, ld = eval_fixed(t.then, choice)
        rn, rd = eval_fixed(t.orelse, choice)
        theta = t.theta
        return (theta * ln + (1 - theta) * rn, theta * ld + (1 - theta) * rd)

    best = Fraction(0)
    for mask in range(1 << len(nodes)):
        choice = {id(node): bool(mask >> i & 1) for i, node in enumerate(nodes)}
        num, den = eval_fixed(tree, choice)
        if den > 0 and num / den > best:
            best = num / den
    return best


# --------------------------------------------------------------------------- #
# Weighted enumeration over the compiled formulas (no decision-diagram
# traversal of the guarded ADD; this checks the purely probabilistic
# compilation directly).

def wmc_probabilistic(triple, v: Value):
    """(mass with accept and model = v, mass with accept), exact."""
    if any(entry.is_nondet for entry in triple.trace):
        raise NdError("weighted enumeration requires a nondeterminism-free trace")
    if len(triple.trace) > 20:
        raise OracleCapError("trace too long for exhaustive enumeration")
    store = triple.store
    thetas = [entry.theta for entry in triple.trace]

    def model_value(ft, bits):
        if isinstance(ft, FtLeaf):
            return store.eval_bdd(ft.ref, bits)
        return (model_value(ft.left, bits), model_value(ft.right, bits))

    num = den = Fraction(0)
    for bits in product((True, False), repeat=len(thetas)):
        weight = Fraction(1)
        for b, theta in zip(bits, thetas):
            weight *= theta if b else 1 - theta
        if weight == 0:
            continue
        if store.eval_bdd(triple.accept, bits):
            den += weight
            if model_value(triple.model, bits) == v:
                num += weight
    return num, den


# --------------------------------------------------------------------------- #
# Direct execution under a fixed flip assignment.  Levels are consumed
# exactly as the compiler allocates them: both if-branches reserve their
# (statically known) block, calls reserve the callee's block.

class _ObserveFailed(Exception):
    pass


def evaluate_assignment(p: CoreProgram, bits) -> object:
    """Run the program with flip i forced to bits[i]; Value or REJECT."""
    funcs = _function_map(p)
    counts = {}

    def count(e) -> int:
        key = id(e)
        if key not in counts:
            if isinstance(e, (CFlip, CNFlip)):
                n = 1
            elif isinstance(e, CLet):
                n = count(e.rhs) + count(e.body)
            elif isinstance(e, CIf):
                n = count(e.then) + count(e.orelse)
            elif isinstance(e, CCall):
                n = count(funcs[e.func].body)
            else:
                n = 0
            counts[key] = n
        return counts[key]

    def ev(e: CoreExpr, env: dict, base: int):
        if isinstance(e, CVal):
            return e.value
        if isinstance(e, CVar):
            return env[e.name]
        if isinstance(e, CTuple):
            return (_atom_value(e.left, env), _atom_value(e.right, env))
        if isinstance(e, CFst):
            return _atom_value(e.arg, env)[0]
        if isinstance(e, CSnd):
            return _atom_value(e.arg, env)[1]
        if isinstance(e, (CFlip, CNFlip)):
            return bits[base]
        if isinstance(e, CObserve):
            if _atom_value(e.arg, env):
                return True
            raise _ObserveFailed()
        if isinstance(e, CIf):
            if _atom_value(e.guard, env):
                return ev(e.then, env, base)
            return ev(e.orelse, env, base + count(e.then))
        if isinstance(e, CLet):
            value = ev(e.rhs, env, base)
            return ev(e.body, {**env, e.name: value}, base + count(e.rhs))
        if isinstance(e, CCall):
            f = funcs[e.func]
            return ev(f.body, {f.param: _atom_value(e.arg, env)}, base)
        raise NdError("internal: cannot execute %r" % e)

    if len(bits) != static_flip_count(p):
        raise NdError("assignment length differs from the program's flip count")
    try:
        return ev(p.main, {}, 0)
    except _ObserveFailed:
        return REJECT


# --------------------------------------------------------------------------- #
# Exact execution-tree leaf counting without building the tree.  The
# recursion is memoized on (syntax node, environment restricted to its
# free variables), which collapses the blowup for programs that thread a
# small state through many sequential stages.

def count_exec_leaves(p: CoreProgram) -> int:
    funcs = _function_map(p)
    fv_cache = {}
    memo = {}

    def fv(e):
        key = id(e)
        if key not in fv_cache:
            fv_cache[key] = core_free_vars(e)
        return fv_cache[key]

    def counts(e: CoreExpr, env: dict) -> dict:
        key = (id(e), tuple(sorted((name, env[name]) for name in fv(e))))
        hit = memo.get(key)
        if hit is not None:
            return hit

        if isinstance(e, (CVal, CVar, CTuple, CFst, CSnd)):
            out = {_expr_value(e, env): 1}
        elif isinstance(e, (CFlip, CNFlip)):
            out = {True: 1, False: 1}
        elif isinstance(e, CObserve):
            out = {True: 1} if _atom_value(e.arg, env) else {REJECT: 1}
        elif isinstance(e, CIf):
            branch = e.then if _atom_value(e.guard, env) else e.orelse
            out = counts(branch, env)
        elif isinstance(e, CCall):
            out = counts(funcs[e.func].body, {funcs[e.func].param: _atom_value(e.arg, env)})
        elif isinstance(e, CLet):
            first = counts(e.rhs, env)
            out = {}
            if REJECT in first:
                out[REJECT] = first[REJECT]
            for value, n in first.items():
                if value is REJECT:
                    continue
                for outcome, n2 in counts(e.body, {**env, e.name: value}).items():
                    out[outcome] = out.get(outcome, 0) + n * n2
        else:
            raise NdError("internal: cannot count %r" % e)

        memo[key] = out
        return out

    return sum(counts(p.main, {}).values())


def _expr_value(e: CoreExpr, env: dict) -> Value:
    if isinstance(e, CVal):
        return e.value
    if isinstance(e, CVar):
        return env[e.name]
    if isinstance(e, CTuple):
        return (_atom_value(e.left, env), _atom_value(e.right, env))
    if isinstance(e, CFst):
        return _atom_value(e.arg, env)[0]
    if isinstance(e, CSnd):
        return _atom_value(e.arg, env)[1]
    raise NdError("internal: not a value form")
