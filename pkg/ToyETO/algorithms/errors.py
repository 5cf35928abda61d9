from typing import Optional

from core import EtoError
from policy import PolicyParams


class TrainingAbortedError(EtoError):
    """Exception that will be raised if training hits a non-finite loss or update. It keeps the last
    finite parameters so the caller can checkpoint them"""

    def __init__(self, message: str, last_params: Optional[PolicyParams] = None) -> None:
        self.last_params: Optional[PolicyParams] = last_params
        super().__init__(message)
