"""Lower the typed surface language onto the core feature set.

After this pass only booleans, tuples, fst/snd, if/let, calls, flip,
nflip and observe remain:

* integers of width w become w-tuples of booleans (big-endian,
  right-nested) and integer operators become boolean circuits; + and -
  are modulo 2^w, comparisons unsigned;
* boolean connectives become if-expressions that evaluate the left
  operand first (fixing the order nondeterminism is resolved in);
* ``uniform(lo, hi)`` over n = hi-lo outcomes becomes a recursive split:
  a flip with probability floor(n/2)/n choosing between the two uniform
  halves, bottoming out at constants -- each outcome gets exactly 1/n;
* ``choose(lo, hi)`` is the same tree with nflip() at every split;
* multi-parameter functions take one tuple parameter, call sites pack
  their arguments left to right.

Every emitted node carries its *core* type in ``.ty``.
"""

from fractions import Fraction

from .errors import DesugarError
from .syntax import (
    BOOL, EBinary, EBool, ECall, EChoose, EFlip, EFst, EIf, EInt, ELet,
    ENFlip, EObserve, ESnd, ETuple, EUnary, EUniform, EVar, Expr, FunDef,
    ProdTy, SBool, SInt, SProd, SurfaceProgram, Ty, surface_to_core_ty,
)


class FreshNames:
    """Generator of identifiers that cannot clash with source names."""

    def __init__(self, prefix="%"):
        self.prefix = prefix
        self.n = 0

    def fresh(self, hint="t") -> str:
        name = "%s%s%d" % (self.prefix, hint, self.n)
        self.n += 1
        return name


def _bool(v, pos):
    return EBool(pos=pos, ty=BOOL, value=v)


def _var(name, ty, pos):
    return EVar(pos=pos, ty=ty, name=name)


def _ite(g, t, e):
    return EIf(pos=g.pos, ty=t.ty, guard=g, then=t, orelse=e)


def _let(name, rhs, body):
    return ELet(pos=rhs.pos, ty=body.ty, name=name, rhs=rhs, body=body)


def _pair(a, b):
    return ETuple(pos=a.pos, ty=ProdTy(a.ty, b.ty), left=a, right=b)


def _not(a):
    return _ite(a, _bool(False, a.pos), _bool(True, a.pos))


def _and(a, b):
    return _ite(a, b, _bool(False, a.pos))


def _or(a, b):
    return _ite(a, _bool(True, a.pos), b)


def _iff(a, b):
    return _ite(a, b, _not(b))


def _int_const(value, width, pos):
    bits = [(value >> (width - 1 - i)) & 1 == 1 for i in range(width)]
    expr = _bool(bits[-1], pos)
    for b in reversed(bits[:-1]):
        expr = _pair(_bool(b, pos), expr)
    return expr


def _project_bits(var_expr, width):
    """MSB-first list of projection expressions for an int-typed variable."""
    bits = []
    cur = var_expr
    for i in range(width - 1):
        bits.append(EFst(pos=cur.pos, ty=BOOL, arg=cur))
        cur = ESnd(pos=cur.pos, ty=cur.ty.right, arg=cur)
    bits.append(cur)
    return bits


def _pack_bits(bits):
    expr = bits[-1]
    for b in reversed(bits[:-1]):
        expr = _pair(b, expr)
    return expr


class Desugarer:
    def __init__(self):
        self.names = FreshNames()
        # function name -> (packed core param type, core ret type)
        self.signatures = {}

    # -- integer circuits --------------------------------------------------- #

    def _add_circuit(self, la, lb, width, pos, negate_b=False):
        """Ripple-carry sum of two bound int variables, modulo 2^width."""
        a_bits = list(reversed(_project_bits(la, width)))  # LSB first
        b_bits = list(reversed(_project_bits(lb, width)))
        if negate_b:
            b_bits = [_not(b) for b in b_bits]
        carry = _bool(negate_b, pos)  # subtraction adds the +1 of two's complement
        sum_bits = []
        lets = []
        for a, b in zip(a_bits, b_bits):
            cname = self.names.fresh("c")
            lets.append((cname, carry))
            c = _var(cname, BOOL, pos)
            # sum bit a ^ b ^ c (= (a <-> b) <-> c), carry-out (a && b) || (c && (a ^ b))
            sum_bits.append(_iff(_iff(a, b), c))
            carry = _or(_and(a, b), _and(c, _not(_iff(a, b))))
        packed = _pack_bits(list(reversed(sum_bits)))
        for cname, rhs in reversed(lets):
            packed = _let(cname, rhs, packed)
        return packed

    def _eq_circuit(self, l, r, ty):
        if not isinstance(ty, ProdTy):
            return _iff(l, r)
        lf = EFst(pos=l.pos, ty=ty.left, arg=l)
        rf = EFst(pos=r.pos, ty=ty.left, arg=r)
        ls = ESnd(pos=l.pos, ty=ty.right, arg=l)
        rs = ESnd(pos=r.pos, ty=ty.right, arg=r)
        return _and(self._eq_circuit(lf, rf, ty.left), self._eq_circuit(ls, rs, ty.right))

    def _lt_circuit(self, a_bits, b_bits):
        a, b = a_bits[0], b_bits[0]
        head = _and(_not(a), b)
        if len(a_bits) == 1:
            return head
        return _or(head, _and(_iff(a, b), self._lt_circuit(a_bits[1:], b_bits[1:])))

    def _bind_pair(self, left, right, build):
        """let l = left in let r = right in build(l, r) -- fixes order."""
        ln = self.names.fresh("l")
        rn = self.names.fresh("r")
        lv = _var(ln, left.ty, left.pos)
        rv = _var(rn, right.ty, right.pos)
        return _let(ln, left, _let(rn, right, build(lv, rv)))

    # -- expression dispatch ------------------------------------------------ #

    def ds(self, e: Expr) -> Expr:
        pos = e.pos
        if isinstance(e, EBool):
            return _bool(e.value, pos)
        if isinstance(e, EInt):
            return _int_const(e.value, e.width, pos)
        if isinstance(e, EVar):
            return _var(e.name, surface_to_core_ty(e.ty), pos)
        if isinstance(e, ETuple):
            return _pair(self.ds(e.left), self.ds(e.right))
        if isinstance(e, EFst):
            arg = self.ds(e.arg)
            return EFst(pos=pos, ty=arg.ty.left, arg=arg)
        if isinstance(e, ESnd):
            arg = self.ds(e.arg)
            return ESnd(pos=pos, ty=arg.ty.right, arg=arg)
        if isinstance(e, EIf):
            return _ite(self.ds(e.guard), self.ds(e.then), self.ds(e.orelse))
        if isinstance(e, ELet):
            rhs = self.ds(e.rhs)
            body = self.ds(e.body)
            return _let(e.name, rhs, body)
        if isinstance(e, ECall):
            args = [self.ds(a) for a in e.args]
            packed = args[-1]
            for a in reversed(args[:-1]):
                packed = _pair(a, packed)
            _, ret_ty = self.signatures[e.func]
            return ECall(pos=pos, ty=ret_ty, func=e.func, args=[packed])
        if isinstance(e, EFlip):
            return EFlip(pos=pos, ty=BOOL, theta=e.theta)
        if isinstance(e, ENFlip):
            return ENFlip(pos=pos, ty=BOOL)
        if isinstance(e, EObserve):
            return EObserve(pos=pos, ty=BOOL, arg=self.ds(e.arg))
        if isinstance(e, EUnary):
            return _not(self.ds(e.arg))
        if isinstance(e, EBinary):
            return self.ds_binary(e)
        if isinstance(e, (EUniform, EChoose)):
            if e.hi <= e.lo:
                raise DesugarError(
                    "%d:%d: empty range [%d, %d)" % (*pos, e.lo, e.hi)
                )
            width = e.ty.width
            nondet = isinstance(e, EChoose)
            return self._range_tree(e.lo, e.hi, width, nondet, pos)
        raise TypeError(type(e))

    def ds_binary(self, e: EBinary) -> Expr:
        op = e.op
        left = self.ds(e.left)
        right = self.ds(e.right)
        if op == "&&":
            return _and(left, right)
        if op == "||":
            return _or(left, right)
        if op == "<->":
            return self._bind_pair(left, right, _iff)
        if op == "^":
            return self._bind_pair(left, right, lambda l, r: _not(_iff(l, r)))
        if op in ("==", "!="):
            eq = self._bind_pair(left, right, lambda l, r: self._eq_circuit(l, r, left.ty))
            return eq if op == "==" else _not(eq)
        width = _core_width(left.ty)
        if op in ("+", "-"):
            return self._bind_pair(
                left, right,
                lambda l, r: self._add_circuit(l, r, width, e.pos, negate_b=(op == "-")),
            )
        if op == "<":
            return self._bind_pair(
                left, right,
                lambda l, r: self._lt_circuit(_project_bits(l, width), _project_bits(r, width)),
            )
        if op == "<=":
            # a <= b  ==  not (b < a)
            return self._bind_pair(
                left, right,
                lambda l, r: _not(self._lt_circuit(_project_bits(r, width), _project_bits(l, width))),
            )
        raise TypeError(op)

    def _range_tree(self, lo, hi, width, nondet, pos):
        n = hi - lo
        if n == 1:
            return _int_const(lo, width, pos)
        k = n // 2
        coin = ENFlip(pos=pos, ty=BOOL) if nondet \
            else EFlip(pos=pos, ty=BOOL, theta=Fraction(k, n))
        return _ite(
            coin,
            self._range_tree(lo, lo + k, width, nondet, pos),
            self._range_tree(lo + k, hi, width, nondet, pos),
        )


def _core_width(ty: Ty) -> int:
    w = 1
    while isinstance(ty, ProdTy):
        w += 1
        ty = ty.right
    return w


def desugar(p: SurfaceProgram) -> SurfaceProgram:
    """Typed surface program -> core-feature program with core types in .ty.

    Functions come out with exactly one parameter; multi-parameter
    definitions get a packed tuple argument and fst/snd bindings in front
    of their body.
    """
    d = Desugarer()
    functions = []
    for f in p.functions:
        param_tys = [surface_to_core_ty(t) for _, t in f.params]
        packed_ty = param_tys[-1]
        for t in reversed(param_tys[:-1]):
            packed_ty = ProdTy(t, packed_ty)
        ret_ty = surface_to_core_ty(f.ret_ty)
        d.signatures[f.name] = (packed_ty, ret_ty)

        body = d.ds(f.body)
        if len(f.params) == 1:
            param = f.params[0][0]
        else:
            param = d.names.fresh("arg")
            cur = _var(param, packed_ty, f.pos)
            bindings = []
            for name, _ in f.params[:-1]:
                bindings.append((name, EFst(pos=f.pos, ty=cur.ty.left, arg=cur)))
                cur = ESnd(pos=f.pos, ty=cur.ty.right, arg=cur)
            bindings.append((f.params[-1][0], cur))
            for name, rhs in reversed(bindings):
                body = _let(name, rhs, body)
        functions.append(
            FunDef(f.name, [(param, packed_ty)], ret_ty, body, f.pos)
        )
    main = d.ds(p.main)
    return SurfaceProgram(functions, main)
