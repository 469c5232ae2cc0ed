"""Maximum conditional reachability on lifted MDPs, plus the end-to-end
inference pipeline.

Two independent methods are provided.  The bisection method binary
searches the conditional probability: for a candidate lambda it computes
the maximum expected terminal reward with rewards 1-lambda on terminals
carrying the queried value, -lambda on other accepting terminals and 0
on reject, whose sign tells whether the true conditional probability
lies above or below lambda.  The restart method reroutes reject states
to the initial state and runs value iteration for plain maximal
reachability on the resulting (cyclic) process.  Memoryless
deterministic schedulers suffice: the achievable (value mass, accepted
mass) pairs form a polytope whose vertices come from deterministic
choices, and the conditional probability is a quasilinear function of
that pair, so it is maximized at a vertex.
"""

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

from .compiler import boolean_reduce, compile_program, enumerate_output_values
from .errors import AnalysisError
from .mdp import (
    LABEL_ACCEPT, LABEL_REJECT, Mdp, compress, lift, normalize_restart,
    topological_order,
)
from .syntax import BoolTy, CoreProgram, Value

RESTART_SWEEP_CAP = 10_000_000
_SIGN_DEADBAND = 1e-12


@dataclass
class SchedulerWitness:
    """Deterministic memoryless choices, one per two-action state."""
    choices: dict  # state index -> "l" | "r"

    def by_level(self, m: Mdp) -> dict:
        """Choices grouped by the originating flip level (for inspection)."""
        out = {}
        for state, action in self.choices.items():
            out.setdefault(m.level[state], set()).add(action)
        return out


def _backward(m: Mdp, terminal_value, order=None, fixed: dict = None,
              argmax: dict = None):
    """One reverse-topological pass; returns the value vector.

    ``terminal_value`` maps a label set to the reward collected at an
    absorbing state.  Probabilistic states take expectations over their
    single action, two-action states the max (or the ``fixed`` choice);
    ``argmax`` (if given) is filled with the maximizing action.
    """
    if order is None:
        order = topological_order(m)
    values = [0.0] * m.num_states
    for s in reversed(order):
        if m.absorbing[s]:
            values[s] = terminal_value(m.labels[s])
            continue
        acts = m.transitions[s]
        if fixed is not None and s in fixed:
            row = acts[fixed[s]]
            values[s] = sum(q * values[dest] for q, dest in row)
            continue
        best, best_action = None, None
        for action in sorted(acts):
            total = sum(q * values[dest] for q, dest in acts[action])
            if best is None or total > best:
                best, best_action = total, action
        values[s] = best
        if argmax is not None and len(acts) > 1:
            argmax[s] = best_action
    return values


def max_reach_dag(m: Mdp, target_label) -> float:
    """Maximal probability of being absorbed in a target-labeled state."""
    order = topological_order(m)
    values = _backward(m, lambda labs: 1.0 if target_label in labs else 0.0, order)
    return values[m.initial]


def weighted_terminal_value(m: Mdp, reward) -> float:
    """Maximum expected terminal reward over memoryless schedulers.

    ``reward`` maps a terminal's label set to a real; rewards all zero
    give 0, and the indicator reward for a label reproduces
    max_reach_dag for it.
    """
    if isinstance(reward, dict):
        table = reward
        reward = lambda labs: table[labs]  # noqa: E731
    order = topological_order(m)
    return _backward(m, reward, order)[m.initial]


def conditional_bisection(m: Mdp, v: Value, tol: float = 1e-6):
    """Max conditional probability of value v given acceptance.

    Returns (probability, witness, iterations).  After the bracket has
    shrunk below tol, the reported probability is the conditional
    probability achieved by the extracted witness scheduler itself,
    which lies inside the bracket; on nondeterminism-free processes this
    makes the answer exact rather than tol-accurate.
    """
    if tol <= 0:
        raise AnalysisError("tolerance must be positive")
    order = topological_order(m)

    if max_reach_dag(m, LABEL_ACCEPT) == 0:
        return 0.0, SchedulerWitness({}), 0

    def reward_at(lam):
        def reward(labs):
            if v in labs:
                return 1.0 - lam
            if LABEL_ACCEPT in labs:
                return -lam
            return 0.0
        return reward

    # The comparison value max(p_v - lambda * p_accept) is strictly
    # positive below the optimum.  Above it, it is negative when every
    # scheduler accepts with positive probability but exactly zero when
    # some scheduler can force rejection (0/0 counts as 0), so a reading
    # inside the dead band only ever certifies an upper bound.  Keeping
    # the lower bound strict also keeps the witness extraction below
    # from tying with an all-rejecting scheduler.
    evaluations = []
    lo, hi = 0.0, 1.0
    iterations = 0
    while hi - lo > tol:
        mid = (lo + hi) / 2.0
        m_mid = _backward(m, reward_at(mid), order)[m.initial]
        evaluations.append((mid, m_mid))
        iterations += 1
        if m_mid > _SIGN_DEADBAND:
            lo = mid
        else:
            hi = mid

    # the comparison value is non-increasing in lambda
    evaluations.sort(key=lambda e: e[0])
    for (_, a), (_, b) in zip(evaluations, evaluations[1:]):
        assert b <= a + 1e-9, "bisection comparison value increased"

    choices = {}
    _backward(m, reward_at(lo), order, argmax=choices)
    witness = SchedulerWitness(choices)
    p_value = _backward(
        m, lambda labs: 1.0 if v in labs else 0.0, order, fixed=choices
    )[m.initial]
    p_accept = _backward(
        m, lambda labs: 1.0 if LABEL_ACCEPT in labs else 0.0, order, fixed=choices
    )[m.initial]
    probability = float(p_value / p_accept) if p_accept > 0 else 0.0
    return probability, witness, iterations


def conditional_restart(m: Mdp, v: Value, tol: float = 1e-6):
    """Same query via the restart transformation and value iteration.

    Returns (probability, iterations).  Sweeps run in reverse
    topological order of the underlying DAG, so within a sweep every
    DAG edge is already converged and only the restart edges carry the
    previous sweep's value.
    """
    if tol <= 0:
        raise AnalysisError("tolerance must be positive")
    order = topological_order(m)  # of the acyclic input
    mr = normalize_restart(m)

    # states from which no v-labeled state is reachable are pinned at 0
    reverse = [[] for _ in range(mr.num_states)]
    for s in range(mr.num_states):
        for dest in mr.successors(s):
            reverse[dest].append(s)
    can_reach = set(mr.states_with_label(v))
    queue = list(can_reach)
    while queue:
        s = queue.pop()
        for p in reverse[s]:
            if p not in can_reach:
                can_reach.add(p)
                queue.append(p)

    values = [0.0] * mr.num_states
    for s in mr.states_with_label(v):
        values[s] = 1.0
    sweep_order = [
        s for s in reversed(order)
        if not mr.absorbing[s] and v not in mr.labels[s] and s in can_reach
    ]
    threshold = tol * 1e-3
    sweeps = 0
    while True:
        sweeps += 1
        if sweeps > RESTART_SWEEP_CAP:
            raise AnalysisError("value iteration exceeded the sweep cap")
        diff = 0.0
        for s in sweep_order:
            acts = mr.transitions[s]
            new = max(
                sum(q * values[dest] for q, dest in acts[action])
                for action in sorted(acts)
            )
            delta = abs(new - values[s])
            if delta > diff:
                diff = delta
            values[s] = new
        if diff < threshold:
            break
    return values[mr.initial], sweeps


# --------------------------------------------------------------------------- #
# Full pipeline.

@dataclass
class InferOptions:
    method: str = "bisection"  # "bisection" | "restart" | "both"
    tol: float = 1e-6
    compress: bool = True
    max_fanout: int = 40
    boolean_reduction: bool = True
    exact: bool = False
    parallel: bool = False


@dataclass
class ValueResult:
    value: Value
    probability: float
    method: str
    iterations: int
    witness: Optional[SchedulerWitness]
    stats: dict = field(default_factory=dict)
    mdp: Mdp = field(default=None, repr=False)


@dataclass
class QueryResult:
    results: list
    surface_result_ty: object = None

    def by_value(self):
        return {r.value: r for r in self.results}


def _infer_single(p: CoreProgram, v: Value, options: InferOptions) -> ValueResult:
    times = {}
    start = time.perf_counter()

    if isinstance(p.result_ty, BoolTy):
        program, target = p, v
    elif options.boolean_reduction:
        program, target = boolean_reduce(p, v), True
    else:
        program, target = p, v
    times["reduce"] = time.perf_counter() - start

    t0 = time.perf_counter()
    triple = compile_program(program)
    store = triple.store
    times["compile"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    add_root = store.guard(triple.model, triple.accept)
    add_inner, add_terminals = store.count_nodes(add_root)
    times["guard"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    m = lift(store, add_root, triple.trace, exact=options.exact)
    pre_states = m.num_states
    times["lift"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    removed = 0
    if options.compress:
        m, report = compress(m, options.max_fanout)
        removed = report.removed
    times["compress"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    witness = None
    if options.method == "bisection":
        probability, witness, iterations = conditional_bisection(m, target, options.tol)
    elif options.method == "restart":
        probability, iterations = conditional_restart(m, target, options.tol)
    elif options.method == "both":
        p_bis, witness, it_bis = conditional_bisection(m, target, options.tol)
        p_res, it_res = conditional_restart(m, target, options.tol)
        if abs(p_bis - p_res) > 2 * options.tol:
            raise AnalysisError(
                "methods disagree: bisection %.9f vs restart %.9f" % (p_bis, p_res)
            )
        probability, iterations = p_bis, it_bis + it_res
    else:
        raise AnalysisError("unknown method %r" % options.method)
    times["check"] = time.perf_counter() - t0
    times["total"] = time.perf_counter() - start

    assert -1e-9 <= probability <= 1 + 1e-9
    probability = min(1.0, max(0.0, probability))

    stats = {
        "add_nodes": add_inner + add_terminals,
        "add_inner": add_inner,
        "add_terminals": add_terminals,
        "mdp_states_pre": pre_states,
        "mdp_states_post": m.num_states,
        "compression_removed": removed,
        "trace_len": len(triple.trace),
        "times": times,
    }
    return ValueResult(v, probability, options.method, iterations, witness, stats, m)


def infer(p: CoreProgram, query, options: InferOptions = None) -> QueryResult:
    """Run the whole pipeline for one value or for every output value."""
    if options is None:
        options = InferOptions()
    if query == "all":
        values = enumerate_output_values(p.result_ty)
    elif isinstance(query, list):
        values = query
    else:
        values = [query]

    if options.parallel and len(values) > 1:
        with ThreadPoolExecutor() as pool:
            results = list(pool.map(lambda v: _infer_single(p, v, options), values))
    else:
        results = [_infer_single(p, v, options) for v in values]
    return QueryResult(results, p.surface_result_ty)
