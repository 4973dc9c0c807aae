"""Exception types shared across the engine."""


class ConfigError(Exception):
    """A config file failed validation; message names the offending field."""


class DegenerateAimError(ValueError):
    """Bow and arrow hands coincide, so the aim direction is undefined."""


class TrainingDiverged(RuntimeError):
    """A loss became non-finite during training."""


class WeightsLayoutError(Exception):
    """A weights file does not match the expected network layout."""
