"""Seeded generator of small well-typed surface programs.

Programs are generated as surface ASTs, printed, and re-parsed by the
callers, so the whole frontend is exercised.  Flip budgets are tracked
during generation; the nondeterministic branching of the resulting
execution tree is bounded by rejection (callers pass a limit).
"""

import random
from fractions import Fraction

from ndinfer.frontend import compile_source
from ndinfer.oracle import build_exec_tree, count_ndet_nodes
from ndinfer.syntax import (
    EBinary, EBool, ECall, EFlip, EFst, EIf, EInt, ELet, ENFlip, EObserve,
    ESnd, ETuple, EUnary, EUniform, EVar, FunDef, SBool, SProd,
    SurfaceProgram, format_program,
)

THETAS = [
    Fraction(0), Fraction(1), Fraction(1, 2), Fraction(1, 3), Fraction(2, 3),
    Fraction(1, 4), Fraction(3, 4), Fraction(3, 10), Fraction(9, 10),
]

BOOL = SBool()
PAIR = SProd(BOOL, BOOL)


class _Budget:
    def __init__(self, flips, nflips):
        self.flips = flips
        self.nflips = nflips


def _gen(rng: random.Random, env: dict, ty, depth: int, budget: _Budget,
         functions: list):
    bool_vars = [n for n, t in env.items() if t == ty]

    def leaf():
        if bool_vars and rng.random() < 0.6:
            return EVar(name=rng.choice(bool_vars))
        if ty == BOOL:
            return EBool(value=rng.random() < 0.5)
        return ETuple(
            left=_gen(rng, env, ty.left, 0, budget, functions),
            right=_gen(rng, env, ty.right, 0, budget, functions),
        )

    if depth <= 0:
        if ty == BOOL and budget.flips > 0 and rng.random() < 0.5:
            budget.flips -= 1
            if budget.nflips > 0 and rng.random() < 0.3:
                budget.nflips -= 1
                return ENFlip()
            return EFlip(theta=rng.choice(THETAS))
        return leaf()

    choices = ["leaf", "if", "let"]
    if ty == BOOL:
        choices += ["flip", "flip", "flip", "binop", "binop", "not", "observe_let"]
        if budget.flips >= 2:
            choices.append("uniform_eq")
        if functions:
            choices.append("call")
        if any(isinstance(t, SProd) for t in env.values()):
            choices.append("project")
    else:
        choices.append("tuple")

    kind = rng.choice(choices)

    if kind == "flip" and budget.flips > 0:
        budget.flips -= 1
        if budget.nflips > 0 and rng.random() < 0.35:
            budget.nflips -= 1
            return ENFlip()
        return EFlip(theta=rng.choice(THETAS))

    if kind == "if":
        guard = _gen(rng, env, BOOL, depth - 1, budget, functions)
        then = _gen(rng, env, ty, depth - 1, budget, functions)
        orelse = _gen(rng, env, ty, depth - 1, budget, functions)
        return EIf(guard=guard, then=then, orelse=orelse)

    if kind == "let":
        name = "x%d" % len(env)
        rhs_ty = rng.choice([BOOL, BOOL, PAIR])
        rhs = _gen(rng, env, rhs_ty, depth - 1, budget, functions)
        body = _gen(rng, {**env, name: rhs_ty}, ty, depth - 1, budget, functions)
        return ELet(name=name, rhs=rhs, body=body)

    if kind == "binop":
        op = rng.choice(["&&", "||", "<->", "^"])
        return EBinary(
            op=op,
            left=_gen(rng, env, BOOL, depth - 1, budget, functions),
            right=_gen(rng, env, BOOL, depth - 1, budget, functions),
        )

    if kind == "not":
        return EUnary(op="!", arg=_gen(rng, env, BOOL, depth - 1, budget, functions))

    if kind == "observe_let":
        name = "o%d" % len(env)
        cond = _gen(rng, env, BOOL, depth - 1, budget, functions)
        body = _gen(rng, {**env, name: BOOL}, ty, depth - 1, budget, functions)
        return ELet(name=name, rhs=EObserve(arg=cond), body=body)

    if kind == "uniform_eq" and budget.flips >= 2:
        hi = 4 if budget.flips >= 3 and rng.random() < 0.5 else 3
        budget.flips -= hi - 1
        return EBinary(op="==", left=EUniform(lo=0, hi=hi),
                       right=EInt(value=rng.randrange(hi)))

    if kind == "call":
        fname, param_ty, flip_cost = rng.choice(functions)
        if budget.flips >= flip_cost:
            budget.flips -= flip_cost  # every call site replays the body's flips
            return ECall(func=fname,
                         args=[_gen(rng, env, param_ty, depth - 1, budget, functions)])
        return leaf()

    if kind == "project":
        pairs = [n for n, t in env.items() if isinstance(t, SProd)]
        name = rng.choice(pairs)
        proj = EFst if rng.random() < 0.5 else ESnd
        return proj(arg=EVar(name=name))

    if kind == "tuple":
        return ETuple(
            left=_gen(rng, env, ty.left, depth - 1, budget, functions),
            right=_gen(rng, env, ty.right, depth - 1, budget, functions),
        )

    return leaf()


def random_surface_program(seed: int, max_flips: int = 12) -> SurfaceProgram:
    rng = random.Random(seed)
    budget = _Budget(max_flips, 3)
    functions = []
    fundefs = []
    if rng.random() < 0.4:
        # body flips count once per call site, so charge them per call
        helper_budget = _Budget(min(3, budget.flips), 1)
        spare = helper_budget.flips
        body = _gen(rng, {"arg": BOOL}, BOOL, 2, helper_budget, [])
        cost = spare - helper_budget.flips
        fundefs.append(FunDef("helper", [("arg", BOOL)], BOOL, body))
        functions.append(("helper", BOOL, cost))
    out_ty = rng.choice([BOOL, BOOL, PAIR])
    main = _gen(rng, {}, out_ty, rng.randint(3, 5), budget, functions)
    return SurfaceProgram(fundefs, main)


def random_core_program(seed: int, max_flips: int = 12, max_ndet_nodes: int = 6):
    """Core program within the flip and tree-nondeterminism bounds.

    Bumps the seed until the built execution tree fits the bounds, so a
    fixed seed always yields the same program.
    """
    attempt = seed
    while True:
        surface = random_surface_program(attempt, max_flips)
        program = compile_source(format_program(surface))
        tree = build_exec_tree(program, cap=max_flips)
        if count_ndet_nodes(tree) <= max_ndet_nodes:
            return program, tree
        attempt += 104729  # jump to an unrelated seed
