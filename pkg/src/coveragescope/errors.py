"""Exception and warning types shared across the toolkit."""


class CoverageScopeError(Exception):
    """Base class for all toolkit errors."""


# -- TLE parsing -------------------------------------------------------------

class TleError(CoverageScopeError, ValueError):
    pass


class ChecksumMismatch(TleError):
    pass


class MalformedField(TleError):
    pass


class LineLength(TleError):
    pass


class CrossLineIdMismatch(TleError):
    pass


class DeepSpaceUnsupported(TleError):
    pass


class MalformedEntry(TleError):
    """Lines that cannot be grouped into a TLE entry."""


# -- propagation -------------------------------------------------------------

class PropagationError(CoverageScopeError):
    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t


class DecayedOrbit(PropagationError):
    pass


class PropagationWindowExceeded(PropagationError):
    pass


# -- coverage ----------------------------------------------------------------

class WindowMismatch(CoverageScopeError, ValueError):
    pass


# -- harvesting --------------------------------------------------------------

class HttpError(CoverageScopeError):
    def __init__(self, message, status=None, retry_after=None):
        super().__init__(message)
        self.status = status
        self.retry_after = retry_after


class ExhaustedRetries(HttpError):
    pass


class CursorInvalid(HttpError):
    pass


class SchemaError(CoverageScopeError, ValueError):
    def __init__(self, message, item_id=None):
        super().__init__(message)
        self.item_id = item_id


class StoreError(CoverageScopeError):
    pass


class DegenerateGeometryWarning(UserWarning):
    pass


# -- enrichment --------------------------------------------------------------

class NonPositiveGsd(CoverageScopeError, ValueError):
    pass


class EmptySeries(CoverageScopeError, ValueError):
    pass


class GroupMismatch(CoverageScopeError, ValueError):
    pass


class AmbiguousContainmentWarning(UserWarning):
    pass


class MissingCovariateWarning(UserWarning):
    pass


class CoverageWarning(UserWarning):
    """Input series is less complete than required for a reliable mean."""


# -- statistics --------------------------------------------------------------

class ConstantColumn(CoverageScopeError, ValueError):
    pass


class RankDeficient(CoverageScopeError, ValueError):
    def __init__(self, message, columns=()):
        super().__init__(message)
        self.columns = tuple(columns)


class AllZero(CoverageScopeError, ValueError):
    pass


class SingletonGroupWarning(UserWarning):
    pass


class DegenerateTargetWarning(UserWarning):
    pass


# -- cli ---------------------------------------------------------------------

class ConfigError(CoverageScopeError):
    pass


class MissingUpstream(CoverageScopeError):
    def __init__(self, message, hint=""):
        super().__init__(f"{message} ({hint})" if hint else message)
        self.hint = hint
