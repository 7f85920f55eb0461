"""Exception hierarchy shared by every botflow module.

``DataError`` subclasses describe bad inputs (files, datasets, arguments) and
map to CLI exit status 2; everything else derived from ``BotflowError`` is a
runtime failure (exit status 3).
"""

from __future__ import annotations


class BotflowError(Exception):
    """Base class for all errors raised by this package."""


class DataError(BotflowError):
    """Input data is malformed or violates a precondition."""


# flowcore
class FlowParseError(DataError):
    def __init__(self, message: str, line_no: int | None = None, column: int | None = None):
        where = []
        if line_no is not None:
            where.append(f"line {line_no}")
        if column is not None:
            where.append(f"column {column}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)
        self.line_no = line_no
        self.column = column


class FieldCountMismatch(FlowParseError):
    pass


class NumericParse(FlowParseError):
    pass


class UnknownField(DataError):
    pass


# ingest
class TruncatedFrame(DataError):
    pass


class BadMagic(DataError):
    pass


class TruncatedRecord(DataError):
    pass


class NoSuchInterface(BotflowError):
    pass


class PermissionDenied(BotflowError):
    pass


# dataset
class NonNumericFeature(DataError):
    pass


class TooFewSamples(DataError):
    pass


class EmptyDataset(DataError):
    pass


# classifiers
class InvalidHyperparameter(DataError):
    pass


class SingleClassDataset(DataError):
    pass


class DimensionMismatch(DataError):
    pass


class NonFiniteInput(DataError):
    pass


class EmptyNode(DataError):
    pass


class UnsupportedKind(BotflowError):
    pass


class VersionMismatch(DataError):
    pass


class CorruptModel(DataError):
    pass


# metrics
class EmptyMatrix(DataError):
    pass


class LengthMismatch(DataError):
    pass


class FoldError(BotflowError):
    """Wraps an error raised while evaluating one cross-validation fold."""

    def __init__(self, fold: int, cause: BaseException):
        super().__init__(f"fold {fold}: {cause}")
        self.fold = fold
        self.cause = cause


# featsel
class KTooLarge(DataError):
    pass


class NameSetMismatch(DataError):
    pass


# optimize
class UnknownKind(DataError):
    pass


class KindMismatch(DataError):
    pass


class GridTooLarge(DataError):
    pass


# detector
class NoValidModels(DataError):
    pass


class MetadataParse(DataError):
    pass


class FeatureMissing(DataError):
    pass


class BindFailed(BotflowError):
    pass
