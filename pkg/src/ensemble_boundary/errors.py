"""Exception types shared across the package."""


class ContractViolation(ValueError):
    """An operation was called outside its preconditions (shape, hermiticity, ...)."""


class CapacityError(ContractViolation):
    """Input exceeds the configured dense-matrix size cap."""


class ValidationError(ValueError):
    """Model or run parameters are out of range."""
