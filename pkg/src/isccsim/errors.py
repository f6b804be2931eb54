"""Exception types shared across the package."""


class NoCrossingError(ValueError):
    """Miss-rate and false-positive curves have no intersection on [0, min mu_delta]."""


class SensingDutyError(ValueError):
    """Sensing occupies the whole time slot (t_s * F >= 1); nothing left for communication."""


class InfeasibleRateError(ValueError):
    """Effective uplink rate is nonpositive for the requested operating point."""


class SurfaceDomainError(ValueError):
    """Accuracy surface queried outside its validated domain."""


class FittingDataError(ValueError):
    """Not enough labeled data to fit; carries the deficient cells."""

    def __init__(self, message: str, deficient_cells=None):
        super().__init__(message)
        self.deficient_cells = list(deficient_cells or [])


class ScenarioValidationError(ValueError):
    """Scenario config rejected; carries the offending field names."""

    def __init__(self, message: str, fields=None):
        super().__init__(message)
        self.fields = list(fields or [])
