"""Exception types shared across the package."""


class ActionlabError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(ActionlabError):
    """Invalid configuration value or malformed config file."""


class ValidationError(ActionlabError):
    """A dataset manifest or frame violates an invariant."""


class SplitError(ActionlabError):
    """An object-wise split cannot be constructed as requested."""


class PoseError(ActionlabError):
    """Camera pose input is malformed (e.g. non-unit quaternion)."""


class SamplingError(ActionlabError):
    """A positive-pair sampling strategy has no eligible partner."""


class MetricError(ActionlabError):
    """An embedding-geometry metric cannot be computed on this input."""


class CheckpointError(ActionlabError):
    """Checkpoint archive is corrupt or does not match the model config."""


class TrainingDiverged(ActionlabError):
    """Training loss became non-finite."""
