"""Exception hierarchy shared across the package.

Every error carries a stable ``code`` string that the HTTP layer maps to a
status code, so module code raises these directly and never invents ad-hoc
exceptions.
"""

from __future__ import annotations


class TypecaseError(Exception):
    """Base class for all domain errors."""

    code = "Error"

    def __init__(self, message: str, entity: str | None = None):
        super().__init__(message)
        self.message = message
        self.entity = entity


class UnknownId(TypecaseError):
    code = "UnknownId"


class UnknownCharacter(UnknownId):
    code = "UnknownCharacter"


class UnknownSpread(UnknownId):
    code = "UnknownSpread"


class IndexConflict(TypecaseError):
    code = "IndexConflict"


class KeyMismatch(TypecaseError):
    code = "KeyMismatch"


class SameBlock(TypecaseError):
    code = "SameBlock"


class SingletonBlock(TypecaseError):
    code = "SingletonBlock"


class EmptyLog(TypecaseError):
    code = "EmptyLog"


class RevisionConflict(TypecaseError):
    code = "RevisionConflict"


class DatasetSyntaxError(TypecaseError):
    code = "SyntaxError"


class SchemaError(TypecaseError):
    code = "SchemaError"


class IntegrityError(TypecaseError):
    code = "IntegrityError"


class InsufficientData(TypecaseError):
    code = "InsufficientData"


class TooFewNodes(TypecaseError):
    code = "TooFewNodes"


class TooFewBlocks(TypecaseError):
    code = "TooFewBlocks"


class EmptyGraph(TypecaseError):
    code = "EmptyGraph"


class NoConvergence(TypecaseError):
    code = "NoConvergence"

    def __init__(self, message: str, iterations: int = 0):
        super().__init__(message)
        self.iterations = iterations


class EmptyIntersection(TypecaseError):
    code = "EmptyIntersection"


class ConstantImage(TypecaseError):
    code = "ConstantImage"


class MissingImage(TypecaseError):
    code = "MissingImage"


class InfeasibleConfig(TypecaseError):
    code = "InfeasibleConfig"
