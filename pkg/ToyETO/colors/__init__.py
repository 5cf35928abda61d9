from .colors import Color