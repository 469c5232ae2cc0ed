"""Pipeline front half: source text -> typed, desugared, A-normal core."""

from pathlib import Path

from .anf import a_normalize
from .desugar import desugar
from .parser import parse
from .typecheck import check_program
from .syntax import CoreProgram, SurfaceProgram


def analyze(source: str) -> SurfaceProgram:
    """Parse and type-annotate, without lowering."""
    return check_program(parse(source))


def compile_source(source: str) -> CoreProgram:
    surface = analyze(source)
    result_ty = surface.main.ty
    return a_normalize(desugar(surface), surface_result_ty=result_ty)


def load_program(path) -> CoreProgram:
    return compile_source(Path(path).read_text(encoding="utf-8"))
