class EtoError(Exception):
    """Base exception for the package. Keeps the message around so the cli can report it as json"""

    def __init__(self, message: str) -> None:
        self.message: str = message
        super().__init__(message)


class VocabularyError(EtoError):
    """Exception that will be raised if a token or token id is not part of the vocabulary"""


class InvalidTrajectoryError(EtoError):
    """Exception that will be raised if a trajectory does not satisfy the layout rules"""


class PairingError(EtoError):
    """Exception that will be raised if two trajectories for different instructions are paired"""
