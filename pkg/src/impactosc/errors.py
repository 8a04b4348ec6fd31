"""Exception hierarchy shared by all modules."""


class ImpactOscError(Exception):
    """Base class for every error raised by the package."""


class ConfigError(ImpactOscError, ValueError):
    """Invalid oscillator or run configuration. ``field`` names the culprit."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field


class NumericalFailure(ImpactOscError):
    """Base for failures of an iterative or geometric computation."""


class ChatterDetected(NumericalFailure):
    pass


class NoLocalMinimum(NumericalFailure):
    pass


class DegenerateGrazing(NumericalFailure):
    pass


class SingularAtGrazing(NumericalFailure):
    pass


class NoConvergence(NumericalFailure):
    def __init__(self, message, last=None):
        super().__init__(message)
        self.last = last


class BorderStraddle(NoConvergence):
    """Newton iterates could not be kept on one side of the grazing border."""


class StepTooLarge(NumericalFailure):
    pass


class InsufficientDecades(NumericalFailure):
    pass


class DegenerateSide(NumericalFailure):
    pass
