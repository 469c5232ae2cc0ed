"""Compilation of core programs to (model formulas, accepting formula, trace).

Every expression compiles to a triple: a shape-typed tuple of boolean
formulas describing its output while ignoring observations, a single
formula that holds exactly when all observations succeed, and an ordered
trace of the flips it performs.  Values compile to constants with a
trivially-true accepting formula; flips allocate a fresh level; observe
moves its argument into the accepting formula; if-expressions mux the
two branches on the guard; let makes the bound variable's formulas
available to the body and concatenates traces left before right.

Function bodies are compiled once, over their own level range 0..k-1
and with parameter placeholders in the store's reserved namespace.
Each call site allocates a contiguous fresh block of levels, shifts the
body into it, composes the argument's formulas into the placeholders
and appends the shifted trace, so flips stay independent across calls.
Branch traces are concatenated then-before-else; any order-preserving
interleaving would be correct, this one keeps compilation reproducible.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .dd import DDStore, FormulaTuple, Leaf, Pair, ft_leaves, ft_map
from .errors import NdError
from .syntax import (
    BOOL, BoolTy, CCall, CFlip, CFst, CIf, CLet, CNFlip, CObserve, CoreExpr,
    CoreProgram, CSnd, CTuple, CVal, CVar, ProdTy, SBool, Ty, Value,
    format_value, ty_bit_width, value_has_type,
)


@dataclass(frozen=True)
class FlipEntry:
    level: int
    theta: Optional[Fraction]  # None marks a nondeterministic flip
    origin: tuple = (0, 0)

    @property
    def is_nondet(self) -> bool:
        return self.theta is None

    def annotation(self) -> str:
        if self.theta is None:
            return "n"
        if self.theta.denominator == 1:
            return str(self.theta.numerator)
        f = float(self.theta)
        return repr(f) if Fraction(repr(f)) == self.theta else "%d/%d" % (
            self.theta.numerator, self.theta.denominator)


@dataclass
class CompiledTriple:
    model: FormulaTuple
    accept: int
    trace: list  # [FlipEntry], level of entry i is i
    store: DDStore = field(repr=False, default=None)


@dataclass
class CompiledFunction:
    param: str
    placeholders: FormulaTuple     # param_var leaves shaped like the parameter type
    placeholder_levels: list       # leaf levels, left to right
    body: CompiledTriple           # over local levels 0..len(trace)-1


class LevelAllocator:
    def __init__(self):
        self.next = 0

    def fresh(self) -> int:
        level = self.next
        self.next += 1
        return level

    def block(self, n: int) -> int:
        base = self.next
        self.next += n
        return base


def _ensure_levels(store: DDStore, needed: int):
    if store.num_levels < needed:
        store.add_levels(needed - store.num_levels)


def value_to_formula(store: DDStore, v: Value) -> FormulaTuple:
    if isinstance(v, bool):
        return Leaf(store.true_ref if v else store.false_ref)
    return Pair(value_to_formula(store, v[0]), value_to_formula(store, v[1]))


def _atom_formula(store, env, e: CoreExpr) -> FormulaTuple:
    if isinstance(e, CVal):
        return value_to_formula(store, e.value)
    if isinstance(e, CVar):
        return env[e.name]
    raise NdError("internal: expected an atom, found %r" % e)


def compile_expr(store: DDStore, env: dict, table: dict,
                 alloc: LevelAllocator, e: CoreExpr) -> CompiledTriple:
    true = store.true_ref

    if isinstance(e, CVal):
        return CompiledTriple(value_to_formula(store, e.value), true, [], store)

    if isinstance(e, CVar):
        return CompiledTriple(env[e.name], true, [], store)

    if isinstance(e, CTuple):
        model = Pair(_atom_formula(store, env, e.left), _atom_formula(store, env, e.right))
        return CompiledTriple(model, true, [], store)

    if isinstance(e, CFst):
        return CompiledTriple(_atom_formula(store, env, e.arg).left, true, [], store)

    if isinstance(e, CSnd):
        return CompiledTriple(_atom_formula(store, env, e.arg).right, true, [], store)

    if isinstance(e, (CFlip, CNFlip)):
        level = alloc.fresh()
        _ensure_levels(store, level + 1)
        f = store.mk_var(level)
        theta = e.theta if isinstance(e, CFlip) else None
        entry = FlipEntry(level, theta, e.pos)
        return CompiledTriple(Leaf(f), true, [entry], store)

    if isinstance(e, CObserve):
        cond = _atom_formula(store, env, e.arg)
        return CompiledTriple(Leaf(true), cond.ref, [], store)

    if isinstance(e, CIf):
        g = _atom_formula(store, env, e.guard).ref
        not_g = store.neg(g)
        left = compile_expr(store, env, table, alloc, e.then)
        right = compile_expr(store, env, table, alloc, e.orelse)
        model = store.pointwise_or(
            store.broadcast_and(g, left.model),
            store.broadcast_and(not_g, right.model),
        )
        accept = store.apply(
            "or",
            store.apply("and", g, left.accept),
            store.apply("and", not_g, right.accept),
        )
        return CompiledTriple(model, accept, left.trace + right.trace, store)

    if isinstance(e, CLet):
        bound = compile_expr(store, env, table, alloc, e.rhs)
        body = compile_expr(store, {**env, e.name: bound.model}, table, alloc, e.body)
        accept = store.apply("and", bound.accept, body.accept)
        return CompiledTriple(body.model, accept, bound.trace + body.trace, store)

    if isinstance(e, CCall):
        fn: CompiledFunction = table[e.func]
        k = len(fn.body.trace)
        offset = alloc.block(k)
        _ensure_levels(store, alloc.next)
        shifted_model = ft_map(lambda r: store.shift_levels(r, offset), fn.body.model)
        shifted_accept = store.shift_levels(fn.body.accept, offset)
        arg = _atom_formula(store, env, e.arg)
        subs = list(zip(fn.placeholder_levels, ft_leaves(arg)))
        model = ft_map(lambda r: store.compose_many(r, subs), shifted_model)
        accept = store.compose_many(shifted_accept, subs)
        trace = [
            FlipEntry(offset + entry.level, entry.theta, entry.origin)
            for entry in fn.body.trace
        ]
        return CompiledTriple(model, accept, trace, store)

    raise NdError("internal: cannot compile %r" % e)


def _make_placeholders(store: DDStore, ty: Ty, counter: list) -> FormulaTuple:
    if isinstance(ty, BoolTy):
        ref = store.param_var(counter[0])
        counter[0] += 1
        return Leaf(ref)
    return Pair(
        _make_placeholders(store, ty.left, counter),
        _make_placeholders(store, ty.right, counter),
    )


def compile_program(p: CoreProgram, store: DDStore = None,
                    inline_calls: bool = False) -> CompiledTriple:
    """Compile functions once, then the main expression.

    With inline_calls=True, calls are expanded in the AST first and the
    table machinery is bypassed (debugging aid; same result).
    """
    if store is None:
        store = DDStore()
    if inline_calls:
        p = inline_program(p)

    table = {}
    placeholder_counter = [0]
    for f in p.functions:
        placeholders = _make_placeholders(store, f.param_ty, placeholder_counter)
        levels = [store.level(ref) for ref in ft_leaves(placeholders)]
        env = {f.param: placeholders}
        body = compile_expr(store, env, table, LevelAllocator(), f.body)
        table[f.name] = CompiledFunction(f.param, placeholders, levels, body)

    triple = compile_expr(store, {}, table, LevelAllocator(), p.main)
    # Evaluation contracts are stated over the final trace; any unused
    # template levels above it are unreachable from this triple.
    store.num_levels = len(triple.trace)
    return triple


# --------------------------------------------------------------------------- #
# AST-level call inlining (the compiler's fallback mode; the reference
# oracle evaluates calls directly and never goes through this).

def _subst_var(e: CoreExpr, name: str, atom: CoreExpr) -> CoreExpr:
    def sub(x):
        if isinstance(x, CVar) and x.name == name:
            return CVar(ty=x.ty, name=atom.name) if isinstance(atom, CVar) \
                else CVal(ty=x.ty, value=atom.value)
        if isinstance(x, CTuple):
            return CTuple(ty=x.ty, left=sub(x.left), right=sub(x.right))
        if isinstance(x, CFst):
            return CFst(ty=x.ty, arg=sub(x.arg))
        if isinstance(x, CSnd):
            return CSnd(ty=x.ty, arg=sub(x.arg))
        if isinstance(x, CObserve):
            return CObserve(ty=x.ty, arg=sub(x.arg))
        if isinstance(x, CCall):
            return CCall(ty=x.ty, func=x.func, arg=sub(x.arg))
        if isinstance(x, CIf):
            return CIf(ty=x.ty, guard=sub(x.guard), then=sub(x.then), orelse=sub(x.orelse))
        if isinstance(x, CLet):
            if x.name == name:  # shadowed below
                return CLet(ty=x.ty, name=x.name, rhs=sub(x.rhs), body=x.body)
            return CLet(ty=x.ty, name=x.name, rhs=sub(x.rhs), body=sub(x.body))
        return x

    return sub(e)


def _rename_binders(e: CoreExpr, fresh: list) -> CoreExpr:
    """Freshen every let-bound name so inlined copies cannot capture."""
    def walk(x, ren):
        if isinstance(x, CVar):
            return CVar(ty=x.ty, name=ren.get(x.name, x.name))
        if isinstance(x, CTuple):
            return CTuple(ty=x.ty, left=walk(x.left, ren), right=walk(x.right, ren))
        if isinstance(x, CFst):
            return CFst(ty=x.ty, arg=walk(x.arg, ren))
        if isinstance(x, CSnd):
            return CSnd(ty=x.ty, arg=walk(x.arg, ren))
        if isinstance(x, CObserve):
            return CObserve(ty=x.ty, arg=walk(x.arg, ren))
        if isinstance(x, CCall):
            return CCall(ty=x.ty, func=x.func, arg=walk(x.arg, ren))
        if isinstance(x, CIf):
            return CIf(ty=x.ty, guard=walk(x.guard, ren),
                       then=walk(x.then, ren), orelse=walk(x.orelse, ren))
        if isinstance(x, CLet):
            fresh[0] += 1
            new = "%%i%d" % fresh[0]
            rhs = walk(x.rhs, ren)
            return CLet(ty=x.ty, name=new, rhs=rhs, body=walk(x.body, {**ren, x.name: new}))
        return x

    return walk(e, {})


def inline_program(p: CoreProgram) -> CoreProgram:
    fresh = [0]
    inlined = {}

    def expand(e):
        if isinstance(e, CCall):
            body, param = inlined[e.func]
            copy = _rename_binders(body, fresh)
            return _subst_var(copy, param, expand(e.arg))
        if isinstance(e, CIf):
            return CIf(ty=e.ty, guard=e.guard, then=expand(e.then), orelse=expand(e.orelse))
        if isinstance(e, CLet):
            return CLet(ty=e.ty, name=e.name, rhs=expand(e.rhs), body=expand(e.body))
        return e

    for f in p.functions:
        inlined[f.name] = (expand(f.body), f.param)
    return CoreProgram([], expand(p.main), p.surface_result_ty)


# --------------------------------------------------------------------------- #
# Query plumbing.

def boolean_reduce(p: CoreProgram, v: Value) -> CoreProgram:
    """Wrap the program so "output equals v" becomes its boolean output.

    The maximum conditional probability of returning T in the result
    equals the maximum conditional probability of returning v in p.
    """
    ty = p.result_ty
    if not value_has_type(v, ty):
        raise NdError("value %s does not have the program's output type" % format_value(v))

    fresh = [0]

    def name():
        fresh[0] += 1
        return "%%q%d" % fresh[0]

    def compare(atom: CoreExpr, value: Value, ty: Ty, bindings: list) -> CoreExpr:
        """ANF atom testing atom == value (components against constants)."""
        if isinstance(ty, BoolTy):
            if value:
                return atom
            neg = name()
            bindings.append((neg, CIf(ty=BOOL, guard=atom,
                                      then=CVal(ty=BOOL, value=False),
                                      orelse=CVal(ty=BOOL, value=True))))
            return CVar(ty=BOOL, name=neg)
        left = name()
        bindings.append((left, CFst(ty=ty.left, arg=atom)))
        cl = compare(CVar(ty=ty.left, name=left), value[0], ty.left, bindings)
        right = name()
        bindings.append((right, CSnd(ty=ty.right, arg=atom)))
        cr = compare(CVar(ty=ty.right, name=right), value[1], ty.right, bindings)
        both = name()
        bindings.append((both, CIf(ty=BOOL, guard=cl, then=cr,
                                   orelse=CVal(ty=BOOL, value=False))))
        return CVar(ty=BOOL, name=both)

    if isinstance(ty, BoolTy) and v is True:
        return CoreProgram(p.functions, p.main, SBool())

    root = name()
    bindings = []
    result = compare(CVar(ty=ty, name=root), v, ty, bindings)
    body: CoreExpr = result
    for n, rhs in reversed(bindings):
        body = CLet(ty=BOOL, name=n, rhs=rhs, body=body)
    main = CLet(ty=BOOL, name=root, rhs=p.main, body=body)
    return CoreProgram(p.functions, main, SBool())


def enumerate_output_values(ty: Ty, max_bits: int = 20) -> list:
    """All values of a type, deterministic order (T before F, left-major)."""
    width = ty_bit_width(ty)
    if width > max_bits:
        raise NdError(
            "type has %d boolean components; refusing to enumerate more than %d "
            "(raise the cap to override)" % (width, max_bits)
        )

    def enum(t):
        if isinstance(t, BoolTy):
            return [True, False]
        return [(a, b) for a in enum(t.left) for b in enum(t.right)]

    return enum(ty)


# --------------------------------------------------------------------------- #
# Debug rendering of compiled triples.

def _formula_text(store: DDStore, ref: int) -> str:
    if store.is_terminal(ref):
        v = store.terminal_value(ref)
        return "T" if v is True else "F" if v is False else format_value(v)
    level = store.level(ref)
    then, orelse = store.branches(ref)
    name = "f%d" % (level + 1) if level >= 0 else "p%d" % (-level)
    return "ite(%s, %s, %s)" % (
        name, _formula_text(store, then), _formula_text(store, orelse))


def format_triple(triple: CompiledTriple) -> str:
    store = triple.store

    def model_text(ft):
        if isinstance(ft, Leaf):
            return _formula_text(store, ft.ref)
        return "(%s, %s)" % (model_text(ft.left), model_text(ft.right))

    trace = ", ".join(
        "f%d:%s" % (entry.level + 1, entry.annotation()) for entry in triple.trace
    )
    return "phi = %s\ngamma = %s\ntrace = [%s]" % (
        model_text(triple.model), _formula_text(store, triple.accept), trace)
