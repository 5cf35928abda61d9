from core import EtoError


class ConfigError(EtoError):
    """Exception that will be raised if an experiment configuration is malformed"""


class DataExistsError(EtoError):
    """Exception that will be raised if generated data would overwrite existing files without --force"""


class ReplayMismatchError(EtoError):
    """Exception that will be raised if a persisted trajectory does not replay to its stored reward"""


class SplitOverlapError(EtoError):
    """Exception that will be raised if a test split shares instructions with the training split"""


class MixedEnvironmentError(EtoError):
    """Exception that will be raised if reports from different environments are put in one table"""
