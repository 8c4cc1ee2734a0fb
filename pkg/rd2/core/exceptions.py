"""All custom exceptions used throughout rd2."""


from typing import Optional


class InvalidPoseError(Exception):
    """Exception raised when a rotation is not a proper orthonormal matrix."""

    def __init__(self, residual: float):
        self.message = f"Rotation is not orthonormal (residual {residual:.3e})"
        super().__init__(self.message)


class NonFiniteValueError(ValueError):
    """Exception raised when a geometric or physical value contains NaN or inf."""

    def __init__(self, what: str):
        self.message = f"Non-finite value in {what}"
        super().__init__(self.message)


class ConfigError(Exception):
    """Exception raised when configuration is missing, malformed, or inconsistent."""

    def __init__(self, field: str, detail: Optional[str] = None):
        """
        Args:
            field: The dotted path of the offending config field.
            detail: Optional error details.
        """
        self.field = field
        self.message = "Invalid config field '{}'.{}".format(
            field, " " + detail if detail else ""
        )
        super().__init__(self.message)


class DeepPenetrationError(ConfigError):
    """Raised when an initial offset starts the piece deep inside the socket."""

    def __init__(self, penetration: float, limit: float):
        super().__init__(
            "task.initial_offset",
            f"Initial pose penetrates {penetration * 1000:.2f} mm "
            f"(limit {limit * 1000:.2f} mm).",
        )


class EpisodeDoneError(Exception):
    """Exception raised when stepping an environment state which is already done."""


class NonFiniteActivationError(Exception):
    """Exception raised when a network forward pass produces NaN or inf."""

    def __init__(self, network: str, step: int):
        self.step = step
        self.message = f"Non-finite activation in {network} network at step {step}"
        super().__init__(self.message)


class SequenceLengthMismatchError(Exception):
    """Raised when sequences of differing lengths are combined."""

    def __init__(self, expected: int, actual: int):
        self.message = f"Expected sequence length {expected}, got {actual}"
        super().__init__(self.message)


class InvalidSegmentLengthError(ValueError):
    """Raised when a sequence length is odd or smaller than 2."""

    def __init__(self, m: int):
        self.message = f"Sequence length must be an even number >= 2, got {m}"
        super().__init__(self.message)


class CheckpointFormatError(Exception):
    """Raised when a parameter checkpoint file cannot be decoded."""


class SpecMismatchError(Exception):
    """Raised when network parameters do not match the expected network spec."""


class EmptyBufferError(Exception):
    """Raised when sampling from an empty replay buffer."""


class BufferNotReadyError(Exception):
    """Raised when the learner asks for more sequences than the buffer may provide."""

    def __init__(self, available: int, required: int):
        self.message = (
            f"Replay buffer holds {available} sequences, {required} are required"
        )
        super().__init__(self.message)


class NegativePriorityError(ValueError):
    """Raised when a negative replay priority is supplied."""


class PopulationTooSmallError(Exception):
    """Raised when population based training is run with fewer than 2 trials."""


class TrialCrashedError(Exception):
    """Raised when a trial keeps failing after being restarted from its checkpoint."""

    def __init__(self, trial_id: str, restarts: int):
        self.message = f"Trial '{trial_id}' crashed after {restarts} restarts"
        super().__init__(self.message)
