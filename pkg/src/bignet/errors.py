"""Exception types shared across the package."""


class BignetError(Exception):
    """Base class for all package errors."""


class SvgParseError(BignetError):
    """Malformed SVG path data; carries the byte offset into the path string."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset


class UnsupportedSvgFeatureError(BignetError):
    """SVG feature outside the supported M/L/C/Q/Z absolute subset."""


class DegenerateImageError(BignetError):
    """Image has no usable extent (zero height or no geometry)."""


class ContractError(BignetError):
    """A caller violated an argument contract (shape, range, or flag)."""


class InfeasibleRulesetError(BignetError):
    """Rejection sampling exhausted its attempt budget."""

    def __init__(self, message: str, regulation: str):
        super().__init__(message)
        self.regulation = regulation


class ConstructionError(BignetError):
    """Parametric shape construction produced inconsistent geometry."""


class CheckpointError(BignetError):
    """Checkpoint file is corrupt or has an unknown format."""


class SplitError(BignetError):
    """Dataset cannot be split as requested."""


class NonFiniteLossError(BignetError):
    """Loss or gradient became NaN/Inf; carries the offending sample id."""

    def __init__(self, message: str, sample_id: str):
        super().__init__(f"{message} (sample {sample_id})")
        self.sample_id = sample_id
