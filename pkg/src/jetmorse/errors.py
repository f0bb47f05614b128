"""Shared exception types."""


class NumericalGuardError(RuntimeError):
    """A desk-scale numerical guard tripped (overflow bound, dimension cap)."""


class ScenarioFormatError(ValueError):
    """A scenario file is malformed or violates a validated invariant."""
