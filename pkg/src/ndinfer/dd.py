"""Hash-consed reduced ordered decision diagrams.

One store holds both the boolean diagrams produced by compilation and
the multi-terminal diagram produced by the guarding operator.  Node
references are globally unique integers, so a reference can never be
confused between stores.  Reduction is by construction: no node has
equal branches, the unique table forbids duplicate tests, and there is
at most one terminal per output value.

Levels are the variable order.  Flip variables sit at levels 0..k-1 in
trace order; function-parameter placeholders live in a reserved
namespace at negative levels (tested before any flip) and are composed
away before an ADD is ever built.  Along every path levels strictly
increase, and there is no dynamic reordering: the order *is* the
program order and changing it would change the program's meaning.

A store is single-owner while diagrams are being built; finished
diagrams are immutable and safe to read from any number of threads.
"""

import itertools
from dataclasses import dataclass

from .errors import StoreError
from .syntax import REJECT, format_value

TERM_LEVEL = 1 << 62

_REF_COUNTER = itertools.count(1)

OPS = ("and", "or", "xor", "iff")


@dataclass(frozen=True)
class FormulaTuple:
    """Shape-typed tuple of boolean formulas (the compiled model)."""


@dataclass(frozen=True)
class Leaf(FormulaTuple):
    ref: int


@dataclass(frozen=True)
class Pair(FormulaTuple):
    left: FormulaTuple
    right: FormulaTuple


def ft_leaves(ft: FormulaTuple):
    if isinstance(ft, Leaf):
        yield ft.ref
    else:
        yield from ft_leaves(ft.left)
        yield from ft_leaves(ft.right)


def ft_map(fn, ft: FormulaTuple) -> FormulaTuple:
    if isinstance(ft, Leaf):
        return Leaf(fn(ft.ref))
    return Pair(ft_map(fn, ft.left), ft_map(fn, ft.right))


def ft_zip(fn, a: FormulaTuple, b: FormulaTuple) -> FormulaTuple:
    if isinstance(a, Leaf) and isinstance(b, Leaf):
        return Leaf(fn(a.ref, b.ref))
    if isinstance(a, Pair) and isinstance(b, Pair):
        return Pair(ft_zip(fn, a.left, b.left), ft_zip(fn, a.right, b.right))
    raise StoreError("formula tuples have mismatched shapes")


class DDStore:
    def __init__(self, num_levels: int = 0):
        self.num_levels = num_levels
        self._node = {}       # ref -> (level, then, else); terminals: (TERM_LEVEL, value, None)
        self._unique = {}     # (level, then, else) -> ref
        self._terminals = {}  # output value (or REJECT) -> ref
        self._cache = {}      # (opname, operands...) -> ref
        self.true_ref = self._terminal(True)
        self.false_ref = self._terminal(False)

    # -- node constructors --------------------------------------------------- #

    def _terminal(self, value) -> int:
        ref = self._terminals.get(value)
        if ref is None:
            ref = next(_REF_COUNTER)
            self._terminals[value] = ref
            self._node[ref] = (TERM_LEVEL, value, None)
        return ref

    def _mk(self, level: int, then: int, orelse: int) -> int:
        if then == orelse:  # no redundant tests
            return then
        key = (level, then, orelse)
        ref = self._unique.get(key)
        if ref is None:  # no duplicate tests
            ref = next(_REF_COUNTER)
            self._unique[key] = ref
            self._node[ref] = key
        return ref

    def add_levels(self, n: int) -> int:
        base = self.num_levels
        self.num_levels += n
        return base

    def mk_var(self, level: int) -> int:
        if not 0 <= level < self.num_levels:
            raise StoreError(
                "level %d out of range (store has %d levels)" % (level, self.num_levels)
            )
        return self._mk(level, self.true_ref, self.false_ref)

    def param_var(self, index: int) -> int:
        """Placeholder variable #index in the reserved (negative) band."""
        if index < 0:
            raise StoreError("placeholder index must be nonnegative")
        return self._mk(-1 - index, self.true_ref, self.false_ref)

    # -- accessors ------------------------------------------------------------ #

    def _entry(self, ref: int):
        try:
            return self._node[ref]
        except KeyError:
            raise StoreError("reference %r does not belong to this store" % ref) from None

    def level(self, ref: int) -> int:
        return self._entry(ref)[0]

    def is_terminal(self, ref: int) -> bool:
        return self._entry(ref)[0] == TERM_LEVEL

    def terminal_value(self, ref: int):
        level, value, _ = self._entry(ref)
        if level != TERM_LEVEL:
            raise StoreError("not a terminal")
        return value

    def branches(self, ref: int):
        level, then, orelse = self._entry(ref)
        if level == TERM_LEVEL:
            raise StoreError("terminal has no branches")
        return then, orelse

    def _cofactor(self, ref: int, level: int):
        l, then, orelse = self._node[ref]
        if l == level:
            return then, orelse
        return ref, ref

    # -- boolean operations ----------------------------------------------------- #

    def ite(self, g: int, t: int, e: int) -> int:
        self._entry(g), self._entry(t), self._entry(e)
        return self._ite(g, t, e)

    def _ite(self, g: int, t: int, e: int) -> int:
        if g == self.true_ref:
            return t
        if g == self.false_ref:
            return e
        if t == e:
            return t
        if t == self.true_ref and e == self.false_ref:
            return g
        key = ("ite", g, t, e)
        out = self._cache.get(key)
        if out is None:
            level = min(self._node[g][0], self._node[t][0], self._node[e][0])
            gt, ge = self._cofactor(g, level)
            tt, te = self._cofactor(t, level)
            et, ee = self._cofactor(e, level)
            out = self._mk(level, self._ite(gt, tt, et), self._ite(ge, te, ee))
            self._cache[key] = out
        return out

    def neg(self, a: int) -> int:
        return self.ite(a, self.false_ref, self.true_ref)

    def apply(self, op: str, a: int, b: int) -> int:
        if op == "and":
            return self.ite(a, b, self.false_ref)
        if op == "or":
            return self.ite(a, self.true_ref, b)
        if op == "xor":
            return self.ite(a, self.neg(b), b)
        if op == "iff":
            return self.ite(a, b, self.neg(b))
        raise StoreError("unknown operator %r" % op)

    def broadcast_and(self, g: int, ft: FormulaTuple) -> FormulaTuple:
        return ft_map(lambda ref: self.apply("and", g, ref), ft)

    def pointwise_or(self, a: FormulaTuple, b: FormulaTuple) -> FormulaTuple:
        return ft_zip(lambda x, y: self.apply("or", x, y), a, b)

    # -- composition and renaming ------------------------------------------------ #

    def compose(self, target: int, var_level: int, replacement: int) -> int:
        """target with every test of var_level functionally replaced.

        The replacement may mention arbitrary levels; the rebuild goes
        through ite, which restores the global order.
        """
        self._entry(target), self._entry(replacement)
        return self._compose(target, var_level, replacement)

    def _compose(self, target: int, var_level: int, replacement: int) -> int:
        level = self._node[target][0]
        if level > var_level:
            return target  # levels only increase: var_level cannot occur below
        key = ("comp", target, var_level, replacement)
        out = self._cache.get(key)
        if out is None:
            _, then, orelse = self._node[target]
            if level == var_level:
                out = self._ite(replacement, then, orelse)
            else:
                t = self._compose(then, var_level, replacement)
                e = self._compose(orelse, var_level, replacement)
                out = self._ite(self._mk(level, self.true_ref, self.false_ref), t, e)
            self._cache[key] = out
        return out

    def compose_many(self, target: int, substitutions) -> int:
        """Sequential composition of (level, replacement) pairs.

        Sound for the typed tuple substitution because placeholder levels
        are pairwise distinct and no replacement mentions any of them.
        """
        for var_level, replacement in substitutions:
            target = self.compose(target, var_level, replacement)
        return target

    def shift_levels(self, root: int, offset: int) -> int:
        """Monotone renaming of flip levels; placeholder levels stay put."""
        self._entry(root)
        if offset < 0:
            low = self._min_flip_level(root)
            if low is not None and low + offset < 0:
                raise StoreError("shift by %d pushes level %d below 0" % (offset, low))
        return self._shift(root, offset)

    def _shift(self, root: int, offset: int) -> int:
        level, then, orelse = self._node[root]
        if level == TERM_LEVEL:
            return root
        key = ("shift", root, offset)
        out = self._cache.get(key)
        if out is None:
            new_level = level + offset if level >= 0 else level
            if new_level >= self.num_levels:
                raise StoreError("shifted level %d out of range" % new_level)
            out = self._mk(new_level, self._shift(then, offset), self._shift(orelse, offset))
            self._cache[key] = out
        return out

    def _min_flip_level(self, root: int):
        best = None
        seen = set()
        stack = [root]
        while stack:
            ref = stack.pop()
            if ref in seen:
                continue
            seen.add(ref)
            level, then, orelse = self._node[ref]
            if level == TERM_LEVEL:
                continue
            if level >= 0 and (best is None or level < best):
                best = level
            stack.extend((then, orelse))
        return best

    # -- the guarding operator ------------------------------------------------------- #

    def guard(self, model: FormulaTuple, accept: int) -> int:
        """Reduced ADD for "model where accept holds, else reject".

        For every total assignment the result yields the value obtained
        by evaluating the model leaves when the accepting formula is
        satisfied, and the reject terminal otherwise.
        """
        # Placeholder tests sit above all flips, so they can only show up
        # at a diagram's root; a nonnegative root level rules them out.
        for ref in itertools.chain(ft_leaves(model), (accept,)):
            if self._entry(ref)[0] < 0:
                raise StoreError("guard called with unresolved placeholder levels")
        return self._guard(model, accept)

    def _guard(self, model: FormulaTuple, accept: int) -> int:
        if accept == self.false_ref:
            return self._terminal(REJECT)
        key = ("guard", model, accept)
        out = self._cache.get(key)
        if out is not None:
            return out
        level = self._node[accept][0]
        for ref in ft_leaves(model):
            level = min(level, self._node[ref][0])
        if level == TERM_LEVEL:
            # accept is T here (F returned above); model is fully constant
            out = self._terminal(self._model_value(model))
        else:
            then_model = ft_map(lambda r: self._cofactor(r, level)[0], model)
            else_model = ft_map(lambda r: self._cofactor(r, level)[1], model)
            acc_then, acc_else = self._cofactor(accept, level)
            out = self._mk(
                level, self._guard(then_model, acc_then), self._guard(else_model, acc_else)
            )
        self._cache[key] = out
        return out

    def _model_value(self, model: FormulaTuple):
        if isinstance(model, Leaf):
            return self.terminal_value(model.ref)
        return (self._model_value(model.left), self._model_value(model.right))

    # -- evaluation -------------------------------------------------------------------- #

    def _check_assignment(self, bits):
        if len(bits) != self.num_levels:
            raise StoreError(
                "assignment has %d bits, store has %d levels" % (len(bits), self.num_levels)
            )

    def eval_bdd(self, root: int, bits) -> bool:
        self._check_assignment(bits)
        ref = root
        while not self.is_terminal(ref):
            level, then, orelse = self._entry(ref)
            ref = then if bits[level] else orelse
        return self.terminal_value(ref)

    def eval_add(self, root: int, bits):
        """Follow then/else edges under a total assignment; Value or REJECT."""
        self._check_assignment(bits)
        ref = root
        while not self.is_terminal(ref):
            level, then, orelse = self._entry(ref)
            ref = then if bits[level] else orelse
        return self.terminal_value(ref)

    # -- inspection ---------------------------------------------------------------------- #

    def reachable(self, root: int):
        """Reachable refs, depth-first, then-edge first (deterministic)."""
        order, seen = [], set()
        stack = [root]
        while stack:
            ref = stack.pop()
            if ref in seen:
                continue
            seen.add(ref)
            order.append(ref)
            level, then, orelse = self._entry(ref)
            if level != TERM_LEVEL:
                stack.append(orelse)
                stack.append(then)
        return order

    def count_nodes(self, root: int):
        """(inner, terminal) node counts reachable from root."""
        inner = term = 0
        for ref in self.reachable(root):
            if self.is_terminal(ref):
                term += 1
            else:
                inner += 1
        return inner, term

    def validate(self, root: int):
        """Check reducedness and level monotonicity below root (test hook)."""
        seen_inner = {}
        seen_term = {}
        for ref in self.reachable(root):
            level, then, orelse = self._entry(ref)
            if level == TERM_LEVEL:
                assert then not in seen_term, "duplicate terminal %r" % (then,)
                seen_term[then] = ref
                continue
            assert then != orelse, "redundant test at %r" % ref
            key = (level, then, orelse)
            assert key not in seen_inner, "duplicate test %r" % (key,)
            seen_inner[key] = ref
            for child in (then, orelse):
                assert self._entry(child)[0] > level, "level order violated"

    def to_dot(self, root: int, name: str = "dd") -> str:
        """Graphviz rendering: circles f_i for tests, boxes for outputs."""
        lines = ["digraph %s {" % name]
        for ref in self.reachable(root):
            level, then, orelse = self._entry(ref)
            if level == TERM_LEVEL:
                label = format_value(then) if then is not REJECT else "R"
                lines.append('  n%d [shape=box, label="%s"];' % (ref, label))
            else:
                fname = "f%d" % (level + 1) if level >= 0 else "p%d" % (-level)
                lines.append('  n%d [shape=circle, label="%s"];' % (ref, fname))
                lines.append("  n%d -> n%d;" % (ref, then))
                lines.append("  n%d -> n%d [style=dashed];" % (ref, orelse))
        lines.append("}")
        return "\n".join(lines)
