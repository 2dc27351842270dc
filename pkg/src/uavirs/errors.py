"""Exception types shared across the package."""


class ConfigurationError(Exception):
    """A scenario object is internally inconsistent (missing rule, bad surface, ...)."""


class ScenarioError(Exception):
    """A scenario file failed to parse or validate.

    ``field`` names the offending entry when known (e.g. "experiment.n_budget").
    """

    def __init__(self, message, field=None):
        self.field = field
        if field is not None:
            message = f"{field}: {message}"
        super().__init__(message)


class ExperimentMismatchError(Exception):
    """Scenario's experiment kind does not match the requested run."""
