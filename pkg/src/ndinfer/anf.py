"""A-normalization of desugared programs.

Fresh let-bindings are introduced left to right, so the order in which
flips fire in the core program equals the order of a left-to-right walk
over the source.  Constant tuples fold into single values.
"""

from .desugar import FreshNames
from .syntax import (
    CCall, CFlip, CFst, CIf, CLet, CNFlip, CObserve, CoreExpr, CoreFun,
    CoreProgram, CSnd, CTuple, CVal, CVar, EBool, ECall, EFlip, EFst, EIf,
    ELet, ENFlip, EObserve, ESnd, ETuple, EVar, Expr, SurfaceProgram,
)


def _try_const(e: Expr):
    """Value of a constant expression, or None."""
    if isinstance(e, EBool):
        return e.value
    if isinstance(e, ETuple):
        left = _try_const(e.left)
        right = _try_const(e.right)
        if left is not None and right is not None:
            return (left, right)
    return None


class Normalizer:
    def __init__(self):
        self.names = FreshNames(prefix="%a")

    def atomize(self, e: Expr, bindings: list) -> CoreExpr:
        const = _try_const(e)
        if const is not None or isinstance(e, EBool):
            return CVal(ty=e.ty, value=const)
        if isinstance(e, EVar):
            return CVar(ty=e.ty, name=e.name)
        core = self.normalize(e)
        name = self.names.fresh()
        bindings.append((name, core))
        return CVar(ty=core.ty, name=name)

    def _wrap(self, bindings, body: CoreExpr) -> CoreExpr:
        for name, rhs in reversed(bindings):
            body = CLet(ty=body.ty, name=name, rhs=rhs, body=body)
        return body

    def normalize(self, e: Expr) -> CoreExpr:
        const = _try_const(e)
        if const is not None or isinstance(e, EBool):
            return CVal(ty=e.ty, value=const)
        if isinstance(e, EVar):
            return CVar(ty=e.ty, name=e.name)
        if isinstance(e, ETuple):
            bindings = []
            left = self.atomize(e.left, bindings)
            right = self.atomize(e.right, bindings)
            return self._wrap(bindings, CTuple(ty=e.ty, left=left, right=right))
        if isinstance(e, EFst):
            bindings = []
            arg = self.atomize(e.arg, bindings)
            return self._wrap(bindings, CFst(ty=e.ty, arg=arg))
        if isinstance(e, ESnd):
            bindings = []
            arg = self.atomize(e.arg, bindings)
            return self._wrap(bindings, CSnd(ty=e.ty, arg=arg))
        if isinstance(e, EIf):
            bindings = []
            guard = self.atomize(e.guard, bindings)
            return self._wrap(
                bindings,
                CIf(ty=e.ty, guard=guard,
                    then=self.normalize(e.then), orelse=self.normalize(e.orelse)),
            )
        if isinstance(e, ELet):
            return CLet(ty=e.ty, name=e.name,
                        rhs=self.normalize(e.rhs), body=self.normalize(e.body))
        if isinstance(e, ECall):
            bindings = []
            arg = self.atomize(e.args[0], bindings)
            return self._wrap(bindings, CCall(ty=e.ty, func=e.func, arg=arg))
        if isinstance(e, EFlip):
            return CFlip(ty=e.ty, theta=e.theta, pos=e.pos)
        if isinstance(e, ENFlip):
            return CNFlip(ty=e.ty, pos=e.pos)
        if isinstance(e, EObserve):
            bindings = []
            arg = self.atomize(e.arg, bindings)
            return self._wrap(bindings, CObserve(ty=e.ty, arg=arg))
        raise TypeError(type(e))


def a_normalize(p: SurfaceProgram, surface_result_ty=None) -> CoreProgram:
    """Desugared program -> core program in A-normal form."""
    norm = Normalizer()
    functions = []
    for f in p.functions:
        (param, param_ty), = f.params
        functions.append(
            CoreFun(f.name, param, param_ty, f.ret_ty, norm.normalize(f.body))
        )
    main = norm.normalize(p.main)
    return CoreProgram(functions, main, surface_result_ty)
