"""Exception types shared across the package."""


class ModelError(ValueError):
    """Malformed or inconsistent input data (unknown ids, bad rationals, ...)."""


class ContractViolationError(ValueError):
    """A documented precondition of an operation was violated by the caller."""


class UnsupportedMarketError(ValueError):
    """The market falls outside the regimes the pricing scheme supports."""


class InternalConsistencyError(AssertionError):
    """A self-check failed; indicates a bug in the solver or refinement."""


class OracleCapError(ValueError):
    """Brute-force oracle invoked beyond its configured instance-size cap."""
