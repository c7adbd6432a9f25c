"""Exception types raised across the workbench."""


class VobenchError(Exception):
    """Base class for all workbench errors."""


# --- trajectory parsing / association ---

class MalformedLine(VobenchError):
    def __init__(self, line_no: int, reason: str = ""):
        self.line_no = line_no
        self.reason = reason
        msg = f"malformed line {line_no}"
        if reason:
            msg += f": {reason}"
        super().__init__(msg)


class EmptyTrajectory(VobenchError):
    pass


class NonMonotonicTimestamps(VobenchError):
    def __init__(self, line_no: int):
        self.line_no = line_no
        super().__init__(f"timestamps not strictly increasing at line {line_no}")


class MissingHeader(VobenchError):
    pass


class NonRotationMatrix(VobenchError):
    def __init__(self, line_no: int, deviation: float):
        self.line_no = line_no
        self.deviation = deviation
        super().__init__(
            f"rotation block at line {line_no} deviates from a rotation by {deviation:.3e}"
        )


class LengthMismatch(VobenchError):
    pass


# --- metrics ---

class TooFewPoints(VobenchError):
    pass


class DegenerateConfiguration(VobenchError):
    pass


class EmptyInput(VobenchError):
    pass


class NoValidIntervals(VobenchError):
    pass


class AllFailed(VobenchError):
    pass


# --- catalog ---

class UnknownEnumValue(VobenchError):
    def __init__(self, row: int, column: str, value: str):
        self.row = row
        self.column = column
        self.value = value
        super().__init__(f"row {row}, column {column!r}: unknown value {value!r}")


class DuplicateSequence(VobenchError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"duplicate sequence {name!r}")


class MissingColumn(VobenchError):
    pass


class NonPositiveDuration(VobenchError):
    pass


class EmptyCatalog(VobenchError):
    pass


# --- decision trees ---

class EmptyLabelSet(VobenchError):
    pass


class EmptyDataSet(VobenchError):
    pass


class TooFewRows(VobenchError):
    pass


class MissingPredictor(VobenchError):
    def __init__(self, predictor: str):
        self.predictor = predictor
        super().__init__(f"row lacks predictor {predictor!r}")


# --- performance clustering ---

class NegativeError(VobenchError):
    pass


class DuplicateRunKey(VobenchError):
    def __init__(self, key):
        self.key = key
        super().__init__(f"duplicate run key {key!r}")


class KTooLarge(VobenchError):
    pass


class AmbiguousCentroids(VobenchError):
    pass


# --- playback ---

class NonMonotonicFrames(VobenchError):
    pass


class InvalidSpec(VobenchError):
    pass


class NoTrackedFrames(VobenchError):
    pass
