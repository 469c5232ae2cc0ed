"""Exception hierarchy shared across the pipeline."""


class NdError(Exception):
    """Base class for all errors raised on malformed input or queries."""


class NdSyntaxError(NdError):
    def __init__(self, message, line=None, col=None):
        self.line = line
        self.col = col
        if line is not None:
            message = "%d:%d: %s" % (line, col, message)
        super().__init__(message)


class NdTypeError(NdError):
    """Static rejection of an ill-formed program."""


class DesugarError(NdError):
    pass


class StoreError(NdError):
    """Misuse of a decision-diagram store (bad level, cross-store ref, ...)."""


class MdpFormatError(NdError):
    """Malformed explicit-MDP text."""


class StructuralError(NdError):
    """An MDP violates a structural precondition (e.g. unexpected cycle)."""


class OracleCapError(NdError):
    """Program exceeds the reference oracle's flip budget."""


class AnalysisError(NdError):
    """Failure during inference proper (non-convergence, method disagreement)."""
