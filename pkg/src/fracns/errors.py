"""Exception types shared across the package."""


class MeanZeroError(ValueError):
    """A negative-order multiplier was applied to a field with nonzero mean."""


class VacuumError(ValueError):
    """The transformed density kappa + rho/a lost positivity somewhere."""


class ConfigError(ValueError):
    """A run configuration violates a cross-field constraint."""


class BlowUpError(RuntimeError):
    """A simulation exceeded the norm ceiling or produced non-finite values.

    Carries the last valid state and its time for post-mortem inspection.
    """

    def __init__(self, message, last_state=None, t=None):
        super().__init__(message)
        self.last_state = last_state
        self.t = t
