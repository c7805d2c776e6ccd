"""Exception taxonomy shared across the package."""


class DislocadeError(Exception):
    """Base class for all errors raised by this package."""


class InvalidParameter(DislocadeError):
    """A scalar argument is outside its admissible range."""


class InvalidData(DislocadeError):
    """Input data (samples, trajectories, files) is malformed."""


class ShapeMismatch(DislocadeError):
    """Array arguments have inconsistent shapes."""


class OutOfDomain(DislocadeError):
    """An evaluation point lies outside the supported region."""


class PreconditionViolated(DislocadeError):
    """A structural requirement on the input configuration fails."""


class NoConvergence(DislocadeError):
    """An iterative solver exhausted its budget before reaching tolerance."""


class SolverDiverged(DislocadeError):
    """An iterative solver produced unbounded or non-finite iterates."""


class SingularConfiguration(DislocadeError):
    """Particle positions coincide; the interaction is not defined."""


class StiffnessFailure(DislocadeError):
    """Adaptive step control underflowed before the stopping criterion."""


class StepFailure(DislocadeError):
    """A time step could not be completed after repeated halving."""


class InsufficientData(DislocadeError):
    """Too few samples to perform the requested fit or comparison."""


class NotApplicableError(DislocadeError):
    """The requested quantity has no content for this configuration."""


class ScenarioAnomaly(DislocadeError):
    """A scenario run violated one of its structural expectations."""


class ConfigError(DislocadeError):
    """A run configuration is malformed or contains unknown keys."""


class IoError(DislocadeError):
    """Reading or writing run artifacts failed."""
