"""Exception hierarchy shared across the pipeline."""


class NeuroloopError(Exception):
    """Base class for all pipeline errors."""


class ValidationError(NeuroloopError, ValueError):
    """Input violates a documented invariant or precondition."""


class SchemaError(ValidationError):
    """On-disk data does not follow the canonical directory schema."""


class InsufficientDataError(NeuroloopError):
    """A pipeline stage ran out of usable data.

    ``stage`` names the step that failed so reports can say where.
    """

    def __init__(self, stage, message):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage
