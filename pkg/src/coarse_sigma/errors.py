"""Exception hierarchy shared by every module of the package."""


class CoarseSigmaError(Exception):
    """Base class for all errors raised by coarse_sigma."""


class ParameterError(CoarseSigmaError, ValueError):
    """A builtin space or map was requested with invalid parameters."""


class OracleContractError(CoarseSigmaError):
    """A space oracle returned data violating its own contract."""


class SpecValidationError(CoarseSigmaError, ValueError):
    """A space/map spec document is malformed or describes an invalid metric."""


class ContractError(CoarseSigmaError):
    """Arguments are individually valid but incompatible with each other."""


class HypothesisViolation(CoarseSigmaError):
    """A construction was invoked outside the hypothesis that makes it valid."""


class ConfigurationError(CoarseSigmaError, ValueError):
    """Filtration or sigma configuration cannot produce a meaningful result."""


class ConsistencyError(CoarseSigmaError):
    """Internal bookkeeping between partitions or end threads disagrees."""


class ScaleViolation(CoarseSigmaError):
    """A consecutive gap in a sequence exceeds the allowed scale.

    ``index`` is the position ``i`` of the offending gap ``(x_i, x_{i+1})``.
    """

    def __init__(self, index, pair, distance, scale):
        self.index = index
        self.pair = pair
        self.distance = distance
        self.scale = scale
        super().__init__(
            f"gap {index} between {pair[0]!r} and {pair[1]!r} has length "
            f"{distance:g} > scale {scale:g}"
        )
