"""Exception types shared across the package."""


class TreedynError(Exception):
    """Base class for every error raised by this package."""


class CapExceeded(TreedynError):
    """An enumeration would exceed the configured cap."""

    def __init__(self, requested, cap):
        self.requested = requested
        self.cap = cap
        super().__init__(f"enumeration of {requested} items exceeds cap {cap}")


class ShapeMismatch(TreedynError):
    pass


class InvalidDistribution(TreedynError, ValueError):
    pass


class NotDecidable(TreedynError):
    pass


class NotStabilized(TreedynError):
    def __init__(self, horizon, detail=""):
        self.horizon = horizon
        msg = f"no stabilization depth found within horizon {horizon}"
        super().__init__(msg + (f" ({detail})" if detail else ""))


class NoActivityBound(TreedynError):
    pass


class NotFound(TreedynError):
    pass


class ScheduleOverflow(TreedynError):
    pass


class SeparationNotFound(TreedynError):
    pass


class StageNotFound(TreedynError):
    def __init__(self, stage, detail=""):
        self.stage = stage
        super().__init__(f"stage {stage} not found: {detail}")


class ConditionFailed(TreedynError):
    def __init__(self, condition, witness, detail=""):
        self.condition = condition
        self.witness = witness
        super().__init__(f"{condition} failed at {witness}: {detail}")


class NotDepthCompatible(TreedynError):
    def __init__(self, witness):
        self.witness = witness
        super().__init__(f"not depth compatible; witness cylinder {witness}")


class DimensionMismatch(TreedynError):
    pass


class NoStabilizerElement(TreedynError):
    def __init__(self, step):
        self.step = step
        super().__init__(f"no rigid stabilizer element found at step {step}")


class KEpsNotFound(TreedynError):
    pass


class ConfigError(TreedynError):
    """Malformed configuration; carries a JSON pointer to the offending node."""

    def __init__(self, pointer, message):
        self.pointer = pointer
        super().__init__(f"{pointer or '/'}: {message}")
