"""Static checks: scoping, call discipline, types, and integer widths.

Ill-formed programs are rejected here instead of being given empty
semantics downstream.  Bare ``int`` resolves to a program-wide default
width: the number of bits of the largest integer literal anywhere in the
program (at least 1).  Integer literals adapt to the width of the other
operand where one is known (``pos != 2`` with ``pos: int<4>`` makes the
literal 4 bits wide).
"""

from .errors import NdTypeError
from .syntax import (
    EBinary, EBool, ECall, EChoose, EFlip, EFst, EIf, EInt, ELet, ENFlip,
    EObserve, ESnd, ETuple, EUnary, EUniform, EVar, Expr, SBool, SInt,
    SProd, SurfaceProgram, SurfaceTy,
)

BOOL_OPS = ("&&", "||", "<->", "^")
CMP_OPS = ("<", "<=")
ARITH_OPS = ("+", "-")
EQ_OPS = ("==", "!=")


def _err(e: Expr, message: str):
    line, col = e.pos
    raise NdTypeError("%d:%d: %s" % (line, col, message))


def _bits(n: int) -> int:
    return max(1, n.bit_length())


def _default_width(p: SurfaceProgram) -> int:
    largest = 0

    def walk(e):
        nonlocal largest
        if isinstance(e, EInt):
            largest = max(largest, e.value)
        elif isinstance(e, (EUniform, EChoose)):
            largest = max(largest, e.lo, e.hi)
        for name in ("left", "right", "arg", "guard", "then", "orelse", "rhs", "body"):
            child = getattr(e, name, None)
            if isinstance(child, Expr):
                walk(child)
        for a in getattr(e, "args", ()):
            walk(a)

    for f in p.functions:
        walk(f.body)
    walk(p.main)
    return _bits(largest)


def _resolve(sty: SurfaceTy, default_width: int) -> SurfaceTy:
    if isinstance(sty, SInt) and sty.width is None:
        return SInt(default_width)
    if isinstance(sty, SProd):
        return SProd(_resolve(sty.left, default_width), _resolve(sty.right, default_width))
    return sty


class Checker:
    def __init__(self, default_width: int):
        self.w = default_width
        self.functions = {}  # name -> (param tys, ret ty); insertion order

    def check(self, e: Expr, env: dict, expected: SurfaceTy = None) -> SurfaceTy:
        ty = self._check(e, env, expected)
        if expected is not None and ty != expected:
            _err(e, "expected %r, found %r" % (expected, ty))
        e.ty = ty
        return ty

    def _check(self, e: Expr, env: dict, expected) -> SurfaceTy:
        if isinstance(e, EBool):
            return SBool()

        if isinstance(e, EInt):
            if isinstance(expected, SInt):
                e.width = expected.width
            elif e.width is None:
                e.width = self.w
            if e.value >= (1 << e.width):
                _err(e, "literal %d does not fit in int<%d>" % (e.value, e.width))
            return SInt(e.width)

        if isinstance(e, EVar):
            if e.name not in env:
                _err(e, "unbound variable %r" % e.name)
            return env[e.name]

        if isinstance(e, ETuple):
            lexp = expected.left if isinstance(expected, SProd) else None
            rexp = expected.right if isinstance(expected, SProd) else None
            return SProd(self.check(e.left, env, lexp), self.check(e.right, env, rexp))

        if isinstance(e, (EFst, ESnd)):
            ty = self.check(e.arg, env)
            if not isinstance(ty, SProd):
                _err(e, "fst/snd expects a tuple, found %r" % ty)
            return ty.left if isinstance(e, EFst) else ty.right

        if isinstance(e, EIf):
            self.check(e.guard, env, SBool())
            then_ty = self.check(e.then, env, expected)
            return self.check(e.orelse, env, then_ty)

        if isinstance(e, ELet):
            rhs_ty = self.check(e.rhs, env)
            return self.check(e.body, {**env, e.name: rhs_ty}, expected)

        if isinstance(e, ECall):
            if e.func not in self.functions:
                _err(e, "call to undefined (or later-defined) function %r" % e.func)
            param_tys, ret_ty = self.functions[e.func]
            if len(e.args) != len(param_tys):
                _err(e, "%s expects %d argument(s), got %d"
                     % (e.func, len(param_tys), len(e.args)))
            for a, pty in zip(e.args, param_tys):
                self.check(a, env, pty)
            return ret_ty

        if isinstance(e, EFlip) or isinstance(e, ENFlip):
            return SBool()

        if isinstance(e, EObserve):
            arg_ty = self.check(e.arg, env)
            if not isinstance(arg_ty, SBool):
                _err(e, "observe expects Bool, found %r" % arg_ty)
            return SBool()

        if isinstance(e, EUnary):
            self.check(e.arg, env, SBool())
            return SBool()

        if isinstance(e, EBinary):
            return self._check_binary(e, env)

        if isinstance(e, (EUniform, EChoose)):
            width = expected.width if isinstance(expected, SInt) else self.w
            top = max(e.lo, e.hi - 1)
            if top >= (1 << width):
                _err(e, "range [%d, %d) does not fit in int<%d>" % (e.lo, e.hi, width))
            return SInt(width)

        raise TypeError(type(e))

    def _check_binary(self, e: EBinary, env: dict) -> SurfaceTy:
        if e.op in BOOL_OPS:
            self.check(e.left, env, SBool())
            self.check(e.right, env, SBool())
            return SBool()

        lty = self.check(e.left, env)
        rty = self.check(e.right, env)
        if isinstance(lty, SInt) and isinstance(rty, SInt) and lty != rty:
            # literal operands adapt to the other side's width
            if isinstance(e.left, (EInt, EUniform, EChoose)):
                lty = self.check(e.left, env, rty)
            elif isinstance(e.right, (EInt, EUniform, EChoose)):
                rty = self.check(e.right, env, lty)

        if e.op in CMP_OPS or e.op in ARITH_OPS:
            if not (isinstance(lty, SInt) and isinstance(rty, SInt)):
                _err(e, "%r expects integers, found %r and %r" % (e.op, lty, rty))
            if lty != rty:
                _err(e, "width mismatch: %r vs %r" % (lty, rty))
            return lty if e.op in ARITH_OPS else SBool()

        if e.op in EQ_OPS:
            if lty != rty:
                _err(e, "cannot compare %r with %r" % (lty, rty))
            return SBool()

        raise TypeError(e.op)


def check_program(p: SurfaceProgram) -> SurfaceProgram:
    """Annotate every subexpression with its type; raise NdTypeError otherwise."""
    w = _default_width(p)
    checker = Checker(w)
    seen = set()
    for f in p.functions:
        if f.name in seen:
            raise NdTypeError("%d:%d: duplicate function %r" % (*f.pos, f.name))
        seen.add(f.name)
        f.params = [(n, _resolve(t, w)) for n, t in f.params]
        f.ret_ty = _resolve(f.ret_ty, w)
        env = dict(f.params)
        checker.check(f.body, env, f.ret_ty)
        checker.functions[f.name] = ([t for _, t in f.params], f.ret_ty)
    checker.check(p.main, {})
    return p
