from core import EtoError


class InvalidInputError(EtoError):
    """Exception that will be raised if the policy is queried with a token id outside of its vocabulary"""


class CheckpointError(EtoError):
    """Exception that will be raised if a checkpoint is malformed or was written for another vocabulary"""
