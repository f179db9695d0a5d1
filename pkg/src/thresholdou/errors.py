"""Exception hierarchy. Everything the CLI maps to exit code 1 derives from
:class:`ThresholdOUError`."""


class ThresholdOUError(ValueError):
    pass


class ModelError(ThresholdOUError):
    """A model fails a shape or domain check."""


class SimulationError(ThresholdOUError):
    pass


class NoInvariantDensityError(ThresholdOUError):
    pass


class DegenerateRegimeError(ThresholdOUError):
    pass


class DataError(ThresholdOUError):
    """Raised by the CSV readers; carries the offending line when known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class DetectionError(ThresholdOUError):
    pass


class MonteCarloError(ThresholdOUError):
    pass


class PipelineError(ThresholdOUError):
    """Wraps an error raised inside one stage of the ``analyze`` pipeline."""

    def __init__(self, stage, cause):
        super().__init__(f"[{stage}] {cause}")
        self.stage = stage
        self.cause = cause
