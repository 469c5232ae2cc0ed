"""AST definitions for the surface language and the A-normal core language.

Core values are plain Python data: ``True``/``False`` for booleans and
2-tuples for pairs, so structural equality and hashing come for free.
Integers exist only in the surface language; after desugaring they are
big-endian tuples of booleans.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Union

Value = Union[bool, tuple]  # bool | (Value, Value)


class _Reject:
    """Marker for a rejected run (a failed observation)."""

    def __repr__(self):
        return "R"


REJECT = _Reject()


# --------------------------------------------------------------------------- #
# Core types: Bool | tau * tau

@dataclass(frozen=True)
class Ty:
    pass


@dataclass(frozen=True)
class BoolTy(Ty):
    def __repr__(self):
        return "Bool"


@dataclass(frozen=True)
class ProdTy(Ty):
    left: Ty
    right: Ty

    def __repr__(self):
        return "(%r, %r)" % (self.left, self.right)


BOOL = BoolTy()


def ty_bit_width(ty: Ty) -> int:
    """Number of boolean components of a type."""
    if isinstance(ty, BoolTy):
        return 1
    return ty_bit_width(ty.left) + ty_bit_width(ty.right)


def value_has_type(v: Value, ty: Ty) -> bool:
    if isinstance(ty, BoolTy):
        return isinstance(v, bool)
    return (
        isinstance(v, tuple)
        and len(v) == 2
        and value_has_type(v[0], ty.left)
        and value_has_type(v[1], ty.right)
    )


def format_value(v: Value) -> str:
    """Compact value literal: T, F, (T,F), ((T,T),F), ..."""
    if v is REJECT:
        return "R"
    if isinstance(v, bool):
        return "T" if v else "F"
    return "(%s,%s)" % (format_value(v[0]), format_value(v[1]))


def parse_value_literal(text: str) -> Value:
    """Inverse of format_value; used by the explicit-MDP loader."""
    pos = 0

    def parse() -> Value:
        nonlocal pos
        if pos >= len(text):
            raise ValueError("truncated value literal: %r" % text)
        c = text[pos]
        if c == "T":
            pos += 1
            return True
        if c == "F":
            pos += 1
            return False
        if c == "(":
            pos += 1
            left = parse()
            if pos >= len(text) or text[pos] != ",":
                raise ValueError("expected ',' in value literal: %r" % text)
            pos += 1
            right = parse()
            if pos >= len(text) or text[pos] != ")":
                raise ValueError("expected ')' in value literal: %r" % text)
            pos += 1
            return (left, right)
        raise ValueError("bad value literal: %r" % text)

    v = parse()
    if pos != len(text):
        raise ValueError("trailing junk in value literal: %r" % text)
    return v


# --------------------------------------------------------------------------- #
# Surface types.  Bool, int<w> (w = None until width inference), pairs.

@dataclass(frozen=True)
class SurfaceTy:
    pass


@dataclass(frozen=True)
class SBool(SurfaceTy):
    def __repr__(self):
        return "Bool"


@dataclass(frozen=True)
class SInt(SurfaceTy):
    width: Optional[int]

    def __repr__(self):
        return "int<%s>" % (self.width if self.width is not None else "?")


@dataclass(frozen=True)
class SProd(SurfaceTy):
    left: SurfaceTy
    right: SurfaceTy

    def __repr__(self):
        return "(%r, %r)" % (self.left, self.right)


def surface_to_core_ty(sty: SurfaceTy) -> Ty:
    if isinstance(sty, SBool):
        return BOOL
    if isinstance(sty, SInt):
        if sty.width is None:
            raise ValueError("int width not resolved")
        return int_bits_ty(sty.width)
    return ProdTy(surface_to_core_ty(sty.left), surface_to_core_ty(sty.right))


def int_bits_ty(width: int) -> Ty:
    """int<w> encodes as a right-nested tuple of w booleans, MSB first."""
    if width == 1:
        return BOOL
    return ProdTy(BOOL, int_bits_ty(width - 1))


def encode_int(n: int, width: int) -> Value:
    bits = [(n >> (width - 1 - i)) & 1 == 1 for i in range(width)]
    v: Value = bits[-1]
    for b in reversed(bits[:-1]):
        v = (b, v)
    return v


def decode_int(v: Value, width: int) -> int:
    n = 0
    for _ in range(width - 1):
        n = (n << 1) | (1 if v[0] else 0)
        v = v[1]
    return (n << 1) | (1 if v else 0)


def render_typed_value(v: Value, sty: SurfaceTy) -> str:
    """Pretty-print a core value through the surface type it came from."""
    if isinstance(sty, SBool):
        return "true" if v else "false"
    if isinstance(sty, SInt):
        return str(decode_int(v, sty.width))
    return "(%s, %s)" % (
        render_typed_value(v[0], sty.left),
        render_typed_value(v[1], sty.right),
    )


# --------------------------------------------------------------------------- #
# Surface expressions.  ``pos`` is a (line, col) pair for diagnostics; the
# checker fills ``ty`` in place.

@dataclass
class Expr:
    pos: tuple = field(default=(0, 0), repr=False)
    ty: Optional[SurfaceTy] = field(default=None, repr=False)


@dataclass
class EBool(Expr):
    value: bool = False


@dataclass
class EInt(Expr):
    value: int = 0
    width: Optional[int] = None  # explicit via int<w> context, else inferred


@dataclass
class EVar(Expr):
    name: str = ""


@dataclass
class ETuple(Expr):
    left: Expr = None
    right: Expr = None


@dataclass
class EFst(Expr):
    arg: Expr = None


@dataclass
class ESnd(Expr):
    arg: Expr = None


@dataclass
class EIf(Expr):
    guard: Expr = None
    then: Expr = None
    orelse: Expr = None


@dataclass
class ELet(Expr):
    name: str = ""
    rhs: Expr = None
    body: Expr = None


@dataclass
class ECall(Expr):
    func: str = ""
    args: list = field(default_factory=list)


@dataclass
class EFlip(Expr):
    theta: Fraction = Fraction(0)


@dataclass
class ENFlip(Expr):
    pass


@dataclass
class EObserve(Expr):
    arg: Expr = None


@dataclass
class EUnary(Expr):
    op: str = "!"
    arg: Expr = None


@dataclass
class EBinary(Expr):
    op: str = ""
    left: Expr = None
    right: Expr = None


@dataclass
class EUniform(Expr):
    lo: int = 0
    hi: int = 0


@dataclass
class EChoose(Expr):
    lo: int = 0
    hi: int = 0


@dataclass
class FunDef:
    name: str
    params: list  # [(name, SurfaceTy)]
    ret_ty: SurfaceTy
    body: Expr
    pos: tuple = (0, 0)


@dataclass
class SurfaceProgram:
    functions: list  # [FunDef]
    main: Expr


# --------------------------------------------------------------------------- #
# Core expressions (A-normal form).  Guards, tuple components and the
# arguments of fst/snd/observe/call are atoms (CVar or CVal); every node
# carries its core type.

@dataclass
class CoreExpr:
    ty: Ty = field(default=None, repr=False)


@dataclass
class CVal(CoreExpr):
    value: Value = False


@dataclass
class CVar(CoreExpr):
    name: str = ""


@dataclass
class CTuple(CoreExpr):
    left: CoreExpr = None   # atom
    right: CoreExpr = None  # atom


@dataclass
class CFst(CoreExpr):
    arg: CoreExpr = None  # atom


@dataclass
class CSnd(CoreExpr):
    arg: CoreExpr = None  # atom


@dataclass
class CIf(CoreExpr):
    guard: CoreExpr = None  # atom
    then: CoreExpr = None
    orelse: CoreExpr = None


@dataclass
class CLet(CoreExpr):
    name: str = ""
    rhs: CoreExpr = None
    body: CoreExpr = None


@dataclass
class CCall(CoreExpr):
    func: str = ""
    arg: CoreExpr = None  # atom


@dataclass
class CFlip(CoreExpr):
    theta: Fraction = Fraction(0)
    pos: tuple = (0, 0)


@dataclass
class CNFlip(CoreExpr):
    pos: tuple = (0, 0)


@dataclass
class CObserve(CoreExpr):
    arg: CoreExpr = None  # atom


@dataclass
class CoreFun:
    name: str
    param: str
    param_ty: Ty
    ret_ty: Ty
    body: CoreExpr


@dataclass
class CoreProgram:
    functions: list  # [CoreFun], callees precede callers
    main: CoreExpr
    # Surface result type, kept so query values can be rendered the way the
    # program wrote them (ints, tuples of ints, ...).
    surface_result_ty: Optional[SurfaceTy] = None

    @property
    def result_ty(self) -> Ty:
        return self.main.ty


def is_atom(e: CoreExpr) -> bool:
    return isinstance(e, (CVal, CVar))


def core_in_anf(e: CoreExpr) -> bool:
    """Syntactic A-normal-form predicate."""
    if isinstance(e, (CVal, CVar, CFlip, CNFlip)):
        return True
    if isinstance(e, CTuple):
        return is_atom(e.left) and is_atom(e.right)
    if isinstance(e, (CFst, CSnd, CObserve)):
        return is_atom(e.arg)
    if isinstance(e, CCall):
        return is_atom(e.arg)
    if isinstance(e, CIf):
        return is_atom(e.guard) and core_in_anf(e.then) and core_in_anf(e.orelse)
    if isinstance(e, CLet):
        return core_in_anf(e.rhs) and core_in_anf(e.body)
    return False


def core_free_vars(e: CoreExpr) -> frozenset:
    if isinstance(e, CVar):
        return frozenset((e.name,))
    if isinstance(e, (CVal, CFlip, CNFlip)):
        return frozenset()
    if isinstance(e, CTuple):
        return core_free_vars(e.left) | core_free_vars(e.right)
    if isinstance(e, (CFst, CSnd, CObserve)):
        return core_free_vars(e.arg)
    if isinstance(e, CCall):
        return core_free_vars(e.arg)
    if isinstance(e, CIf):
        return core_free_vars(e.guard) | core_free_vars(e.then) | core_free_vars(e.orelse)
    if isinstance(e, CLet):
        return core_free_vars(e.rhs) | (core_free_vars(e.body) - {e.name})
    raise TypeError(type(e))


# --------------------------------------------------------------------------- #
# Pretty printer for the surface language.  Canonical form: parsing its own
# output reproduces it verbatim.

_BINOP_PREC = {
    "<->": 1, "^": 1,
    "||": 2,
    "&&": 3,
    "==": 4, "!=": 4, "<": 4, "<=": 4,
    "+": 5, "-": 5,
}


def _fmt_frac(theta: Fraction) -> str:
    if theta.denominator == 1:
        return str(theta.numerator)
    return "%d/%d" % (theta.numerator, theta.denominator)


def format_surface_ty(sty: SurfaceTy) -> str:
    if isinstance(sty, SBool):
        return "Bool"
    if isinstance(sty, SInt):
        return "int" if sty.width is None else "int<%d>" % sty.width
    return "(%s, %s)" % (format_surface_ty(sty.left), format_surface_ty(sty.right))


def format_expr(e: Expr, prec: int = 0) -> str:
    def wrap(s, p):
        return "(" + s + ")" if p < prec else s

    if isinstance(e, EBool):
        return "true" if e.value else "false"
    if isinstance(e, EInt):
        return str(e.value)
    if isinstance(e, EVar):
        return e.name
    if isinstance(e, ETuple):
        return "(%s, %s)" % (format_expr(e.left), format_expr(e.right))
    if isinstance(e, EFst):
        return wrap("fst %s" % format_expr(e.arg, 7), 6)
    if isinstance(e, ESnd):
        return wrap("snd %s" % format_expr(e.arg, 7), 6)
    if isinstance(e, EObserve):
        return wrap("observe %s" % format_expr(e.arg, 7), 6)
    if isinstance(e, EUnary):
        return "!%s" % format_expr(e.arg, 7)
    if isinstance(e, EBinary):
        p = _BINOP_PREC[e.op]
        return wrap(
            "%s %s %s" % (format_expr(e.left, p), e.op, format_expr(e.right, p + 1)),
            p,
        )
    if isinstance(e, EIf):
        return wrap(
            "if %s then %s else %s"
            % (format_expr(e.guard), format_expr(e.then), format_expr(e.orelse, 1)),
            1,
        )
    if isinstance(e, ELet):
        return wrap(
            "let %s = %s in %s"
            % (e.name, format_expr(e.rhs, 2), format_expr(e.body, 1)),
            1,
        )
    if isinstance(e, ECall):
        return "%s(%s)" % (e.func, ", ".join(format_expr(a) for a in e.args))
    if isinstance(e, EFlip):
        return "flip(%s)" % _fmt_frac(e.theta)
    if isinstance(e, ENFlip):
        return "nflip()"
    if isinstance(e, EUniform):
        return "uniform(%d, %d)" % (e.lo, e.hi)
    if isinstance(e, EChoose):
        return "choose(%d, %d)" % (e.lo, e.hi)
    raise TypeError(type(e))


def format_program(p: SurfaceProgram) -> str:
    parts = []
    for f in p.functions:
        params = ", ".join("%s: %s" % (n, format_surface_ty(t)) for n, t in f.params)
        parts.append(
            "fun %s(%s): %s {\n  %s\n}\n"
            % (f.name, params, format_surface_ty(f.ret_ty), format_expr(f.body))
        )
    parts.append(format_expr(p.main) + "\n")
    return "\n".join(parts)
