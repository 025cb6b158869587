"""Exception hierarchy. Everything raised on purpose derives from RankError."""


class RankError(Exception):
    pass


class InvalidMatrix(RankError, ValueError):
    pass


class NotPSD(RankError, ValueError):
    def __init__(self, message, eigenvalue=None):
        super().__init__(message)
        self.eigenvalue = eigenvalue

    def __reduce__(self):
        return type(self), (self.args[0], self.eigenvalue)


class NotPD(RankError, ValueError):
    pass


class DimensionError(RankError, ValueError):
    pass


class InvalidData(RankError, ValueError):
    pass


class InvalidFolds(RankError, ValueError):
    pass


class InvalidTruth(RankError, ValueError):
    pass


class SmoothingError(RankError):
    pass


class DegenerateSIR(RankError):
    pass


class TooFewRows(RankError, ValueError):
    pass


class ParseError(RankError, ValueError):
    def __init__(self, message, line=None):
        super().__init__(message)
        self.line = line

    def __reduce__(self):
        return type(self), (self.args[0], self.line)


class StageError(RankError):
    """A pipeline stage failed; ``stage`` names it and ``__cause__`` holds the error."""

    def __init__(self, stage, cause):
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")
        self.stage = stage
        self.cause = cause

    def __reduce__(self):
        return type(self), (self.stage, self.cause)


class ReplicationError(RankError):
    def __init__(self, replication, seed, cause):
        super().__init__(f"replication {replication} (seed {seed}) failed: {cause}")
        self.replication = replication
        self.seed = seed
        self.cause = cause

    def __reduce__(self):
        return type(self), (self.replication, self.seed, self.cause)
