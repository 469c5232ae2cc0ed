"""Explicit-state MDPs lifted from decision diagrams.

States correspond one-to-one to diagram nodes.  A node over a
probabilistic flip becomes a state with the single action ``d`` and a
two-way (or, for biases 0 and 1, one-way) probabilistic branch; a node
over a nondeterministic flip becomes a state with the two Dirac actions
``l`` (then-edge) and ``r`` (else-edge); terminals become absorbing
states labeled with their output value plus ``A``, or with ``R`` for the
reject terminal.  Absorbing self-loops are kept implicit (``absorbing``
flag) so the transition graph stays an explicit DAG.

Probabilities are binary64 by default; ``exact=True`` keeps them as
Fractions for oracle comparisons.

Mdp values are immutable once built and safe to share across threads.
"""

import io
from dataclasses import dataclass
from fractions import Fraction

from .errors import MdpFormatError, StructuralError
from .syntax import REJECT, format_value, parse_value_literal

ACTIONS = ("d", "l", "r")
LABEL_ACCEPT = "A"
LABEL_REJECT = "R"


@dataclass
class Mdp:
    initial: int
    transitions: list   # per state: dict action -> [(prob, dest)]; absorbing: {}
    labels: list        # per state: frozenset of "A" | "R" | Value
    absorbing: list     # implicit self-loop s -(d,1)-> s
    kind: list          # 'prob' | 'ndet' | 'terminal'
    level: list         # originating diagram level per inner state, else None
    exact: bool = False

    @property
    def num_states(self) -> int:
        return len(self.transitions)

    def transition_count(self) -> int:
        """Explicit edges plus the implicit terminal self-loops."""
        n = sum(len(row) for t in self.transitions for row in t.values())
        return n + sum(1 for a in self.absorbing if a)

    def successors(self, state: int):
        for row in self.transitions[state].values():
            for _, dest in row:
                yield dest

    def states_with_label(self, label):
        return [s for s in range(self.num_states) if label in self.labels[s]]

    def one(self):
        return Fraction(1) if self.exact else 1.0


def lift(store, root: int, trace, exact: bool = False) -> Mdp:
    """One state per diagram node; behavior per the node's trace entry."""
    order = store.reachable(root)
    index = {ref: i for i, ref in enumerate(order)}
    transitions, labels, absorbing, kind, level = [], [], [], [], []

    for ref in order:
        if store.is_terminal(ref):
            value = store.terminal_value(ref)
            if value is REJECT:
                labs = frozenset((LABEL_REJECT,))
            else:
                labs = frozenset((value, LABEL_ACCEPT))
            transitions.append({})
            labels.append(labs)
            absorbing.append(True)
            kind.append("terminal")
            level.append(None)
            continue

        lvl = store.level(ref)
        then, orelse = store.branches(ref)
        entry = trace[lvl]
        assert entry.level == lvl
        if entry.is_nondet:
            one = Fraction(1) if exact else 1.0
            row = {"l": [(one, index[then])], "r": [(one, index[orelse])]}
            kind.append("ndet")
        else:
            theta = entry.theta if exact else float(entry.theta)
            comp = (1 - entry.theta) if exact else float(1 - entry.theta)
            dist = []
            if theta != 0:
                dist.append((theta, index[then]))
            if comp != 0:
                dist.append((comp, index[orelse]))
            row = {"d": dist}
            kind.append("prob")
        transitions.append(row)
        labels.append(frozenset())
        absorbing.append(False)
        level.append(lvl)

    return Mdp(index[root], transitions, labels, absorbing, kind, level, exact)


def topological_order(m: Mdp):
    """States ordered so every edge goes forward; absorbing states are sinks."""
    indegree = [0] * m.num_states
    for s in range(m.num_states):
        for dest in m.successors(s):
            indegree[dest] += 1
    frontier = [s for s in range(m.num_states) if indegree[s] == 0]
    order = []
    while frontier:
        s = frontier.pop()
        order.append(s)
        for dest in m.successors(s):
            indegree[dest] -= 1
            if indegree[dest] == 0:
                frontier.append(dest)
    if len(order) != m.num_states:
        raise StructuralError("MDP has a cycle beyond terminal self-loops")
    return order


@dataclass
class CompressionReport:
    removed: int
    fanout_cap: int
    max_fanout_after: int


def _fanout(transitions, state) -> int:
    return sum(len(row) for row in transitions[state].values())


def compress(m: Mdp, max_fanout: int = 40):
    """Splice out unlabeled single-action states, multiplying probabilities.

    A state s with one enabled action, no label, no self-probability and
    distinct from the initial state routes every incoming edge of
    probability q directly to its successors t_i with probabilities
    q * p_i; this preserves the maximal reachability of every label.
    States are visited successors-first, so one sweep removes everything
    removable; a splice is skipped when it would push some predecessor
    past the fan-out cap (which keeps the sweep linear overall).
    """
    transitions = [
        {a: list(row) for a, row in t.items()} for t in m.transitions
    ]
    predecessors = [set() for _ in range(m.num_states)]
    for s in range(m.num_states):
        for dest in m.successors(s):
            predecessors[dest].add(s)

    removed = set()
    order = topological_order(m)
    for s in reversed(order):
        if s == m.initial or m.labels[s] or m.absorbing[s]:
            continue
        if len(transitions[s]) != 1:
            continue
        (dist,) = transitions[s].values()
        if any(dest == s for _, dest in dist):
            continue

        preds = sorted(predecessors[s])
        # a splice must not push any predecessor past the cap
        feasible = True
        for p in preds:
            extra = 0
            for row in transitions[p].values():
                incoming = sum(1 for _, dest in row if dest == s)
                if incoming:
                    targets = {dest for _, dest in row}
                    new = sum(1 for _, dest in dist if dest not in targets)
                    extra += new - incoming
            if _fanout(transitions, p) + extra > max_fanout:
                feasible = False
                break
        if not feasible:
            continue

        for p in preds:
            for action, row in transitions[p].items():
                if not any(dest == s for _, dest in row):
                    continue
                merged = {}
                for q, dest in row:
                    if dest == s:
                        for pi, target in dist:
                            merged[target] = merged.get(target, 0) + q * pi
                    else:
                        merged[dest] = merged.get(dest, 0) + q
                transitions[p][action] = sorted(
                    ((q, dest) for dest, q in merged.items()), key=lambda e: e[1]
                )
            for _, target in dist:
                predecessors[target].discard(s)
                predecessors[target].add(p)
        for _, target in dist:
            predecessors[target].discard(s)
        removed.add(s)

    keep = [s for s in range(m.num_states) if s not in removed]
    renumber = {old: new for new, old in enumerate(keep)}
    new_transitions = []
    for s in keep:
        new_transitions.append({
            a: [(q, renumber[dest]) for q, dest in row]
            for a, row in transitions[s].items()
        })
    out = Mdp(
        renumber[m.initial],
        new_transitions,
        [m.labels[s] for s in keep],
        [m.absorbing[s] for s in keep],
        [m.kind[s] for s in keep],
        [m.level[s] for s in keep],
        m.exact,
    )
    max_after = max((_fanout(new_transitions, s) for s in range(len(keep))), default=0)
    return out, CompressionReport(len(removed), max_fanout, max_after)


def normalize_restart(m: Mdp) -> Mdp:
    """Reject states restart at the initial state instead of looping.

    Under any fixed scheduler, ordinary reachability of a value in the
    result equals conditional reachability (given acceptance) in the
    input: the rerouted mass replays the run, mimicking rejection
    sampling.
    """
    transitions = [dict(t) for t in m.transitions]
    absorbing = list(m.absorbing)
    for s in m.states_with_label(LABEL_REJECT):
        transitions[s] = {"d": [(m.one(), m.initial)]}
        absorbing[s] = False
    return Mdp(m.initial, transitions, m.labels, absorbing, m.kind, m.level, m.exact)


# --------------------------------------------------------------------------- #
# Explicit text format.
#
#   STATES n
#   INITIAL i
#   LABEL s name          (name: A, R, or a value literal like (T,F))
#   TRANS src action dst prob
#
# States are numbered breadth-first from the initial state; LABEL lines
# are sorted by (state, name) and TRANS lines by (src, action, dst);
# probabilities print as shortest round-trip decimals.

def _label_str(label) -> str:
    if label in (LABEL_ACCEPT, LABEL_REJECT):
        return label
    return format_value(label)


def _bfs_order(m: Mdp):
    order, seen = [], set()
    queue = [m.initial]
    seen.add(m.initial)
    while queue:
        s = queue.pop(0)
        order.append(s)
        for action in sorted(m.transitions[s]):
            for _, dest in m.transitions[s][action]:
                if dest not in seen:
                    seen.add(dest)
                    queue.append(dest)
    return order


def format_explicit(m: Mdp) -> str:
    order = _bfs_order(m)
    renumber = {old: new for new, old in enumerate(order)}
    lines = ["STATES %d" % len(order), "INITIAL %d" % renumber[m.initial]]

    label_lines = []
    for old in order:
        for label in m.labels[old]:
            label_lines.append((renumber[old], _label_str(label)))
    for state, name in sorted(label_lines):
        lines.append("LABEL %d %s" % (state, name))

    trans_lines = []
    for old in order:
        s = renumber[old]
        for action, row in m.transitions[old].items():
            for q, dest in row:
                trans_lines.append((s, action, renumber[dest], float(q)))
        if m.absorbing[old]:
            trans_lines.append((s, "d", s, 1.0))
    for src, action, dst, prob in sorted(trans_lines):
        lines.append("TRANS %d %s %d %s" % (src, action, dst, repr(prob)))
    return "\n".join(lines) + "\n"


def export_explicit(m: Mdp, sink) -> None:
    """Write the documented text format to a writable (byte) stream."""
    text = format_explicit(m)
    if isinstance(sink, io.TextIOBase):
        sink.write(text)
    else:
        sink.write(text.encode("utf-8"))


def load_explicit_mdp(source) -> Mdp:
    """Parse the explicit format back into an Mdp, validating invariants."""
    if hasattr(source, "read"):
        text = source.read()
        if isinstance(text, bytes):
            text = text.decode("utf-8")
    else:
        text = str(source)

    def fail(lineno, message):
        raise MdpFormatError("line %d: %s" % (lineno, message))

    num_states = initial = None
    labels = None
    rows = {}  # (src, action) -> [(prob, dst)]
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        parts = line.split()
        tag = parts[0]
        if tag == "STATES":
            if len(parts) != 2 or not parts[1].isdigit():
                fail(lineno, "malformed STATES line")
            num_states = int(parts[1])
            labels = [set() for _ in range(num_states)]
        elif tag == "INITIAL":
            if num_states is None:
                fail(lineno, "INITIAL before STATES")
            if len(parts) != 2 or not parts[1].isdigit():
                fail(lineno, "malformed INITIAL line")
            initial = int(parts[1])
            if initial >= num_states:
                fail(lineno, "initial state %d beyond STATES %d" % (initial, num_states))
        elif tag == "LABEL":
            if num_states is None:
                fail(lineno, "LABEL before STATES")
            if len(parts) != 3:
                fail(lineno, "malformed LABEL line")
            s = int(parts[1])
            if s >= num_states:
                fail(lineno, "state %d beyond STATES" % s)
            name = parts[2]
            if name in (LABEL_ACCEPT, LABEL_REJECT):
                labels[s].add(name)
            else:
                try:
                    labels[s].add(parse_value_literal(name))
                except ValueError as exc:
                    fail(lineno, str(exc))
        elif tag == "TRANS":
            if num_states is None:
                fail(lineno, "TRANS before STATES")
            if len(parts) != 5:
                fail(lineno, "malformed TRANS line")
            src, action, dst, prob = int(parts[1]), parts[2], int(parts[3]), parts[4]
            if src >= num_states or dst >= num_states:
                fail(lineno, "state beyond STATES")
            if action not in ACTIONS:
                fail(lineno, "unknown action %r" % action)
            try:
                p = float(prob)
            except ValueError:
                fail(lineno, "bad probability %r" % prob)
            if not 0 <= p <= 1:
                fail(lineno, "probability %r outside [0, 1]" % prob)
            rows.setdefault((src, action), []).append((p, dst))
        else:
            fail(lineno, "unknown directive %r" % tag)

    if num_states is None or initial is None:
        raise MdpFormatError("missing STATES/INITIAL header")

    for (src, action), row in rows.items():
        total = sum(q for q, _ in row)
        if abs(total - 1.0) > 1e-9:
            raise MdpFormatError(
                "row (%d, %s) sums to %r, not 1" % (src, action, total)
            )

    transitions = [{} for _ in range(num_states)]
    absorbing = [False] * num_states
    kind = [None] * num_states
    for (src, action), row in rows.items():
        transitions[src][action] = row
    for s in range(num_states):
        acts = transitions[s]
        if set(acts) == {"d"} and len(acts["d"]) == 1 and acts["d"][0][1] == s:
            transitions[s] = {}
            absorbing[s] = True
            kind[s] = "terminal"
            labs = labels[s]
            if not (labs == {LABEL_REJECT}
                    or (LABEL_ACCEPT in labs and len(labs) == 2)):
                raise MdpFormatError(
                    "absorbing state %d must be labeled {R} or {value, A}" % s
                )
        else:
            if labels[s]:
                raise MdpFormatError("non-terminal state %d carries labels" % s)
            if set(acts) == {"d"}:
                kind[s] = "prob"
            elif set(acts) == {"l", "r"}:
                kind[s] = "ndet"
            else:
                raise MdpFormatError(
                    "state %d enables %r; expected {d} or {l, r}" % (s, sorted(acts))
                )

    return Mdp(initial, transitions, [frozenset(l) for l in labels],
               absorbing, kind, [None] * num_states, exact=False)
