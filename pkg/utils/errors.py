"""Exception types shared by every package"""


class DoeblinError(Exception):
    """Base class for solver-toolkit failures"""


class UnknownLabelError(DoeblinError, KeyError):
    """A state, action or signal label is not part of the game"""

    def __str__(self):
        return str(self.args[0]) if self.args else "unknown label"


class GameFileError(DoeblinError):
    """A game document could not be parsed"""

    def __init__(self, message, location=None):
        self.location = location
        if location:
            message = f"{location}: {message}"
        super().__init__(message)


class ZeroProbabilitySignal(DoeblinError):
    """The observed signal has probability zero under the current belief"""


class InadmissibleHistory(DoeblinError):
    """A history has probability zero from the given initial belief"""


class InadmissibleSignal(DoeblinError):
    """An abstract transition was requested for a zero-probability signal"""


class CapExceeded(DoeblinError):
    """An exhaustive computation would exceed its configured cap"""

    def __init__(self, stage, count, cap):
        self.stage = stage
        self.count = count
        self.cap = cap
        super().__init__(f"{stage}: {count} items exceeds cap {cap}")


class NotStochastic(DoeblinError):
    """A matrix expected to be row-stochastic is not"""


class NotBlind(DoeblinError):
    """The operation requires a game with a single signal"""


class NotErgodic(DoeblinError):
    """No product length within the bound is scrambling"""


class NotPrimitive(DoeblinError):
    """No product length within the bound is entrywise positive"""


class NoCertificate(DoeblinError):
    """Neither a user certificate nor a derivable one is available"""


class EtaTooSmall(DoeblinError):
    """The grid resolution cannot preserve the belief support"""


class NumericalFailure(DoeblinError):
    """The linear program did not converge or failed verification"""


class NoConvergence(DoeblinError):
    """The uniform-value estimate did not stabilise within its budget"""

    def __init__(self, message, diagnostics=None):
        self.diagnostics = diagnostics
        super().__init__(message)


class InvalidBlockStructure(DoeblinError):
    """Block length is not a multiple of the sub-block length"""
