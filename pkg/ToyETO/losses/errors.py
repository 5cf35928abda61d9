from core import EtoError


class PreferenceOrderError(EtoError):
    """Exception that will be raised if a preference pair does not rank its winner strictly above its loser"""


class NonFiniteGradientError(EtoError):
    """Exception that will be raised if a gradient or an update contains nan or inf values"""
