import logging
import sys
from typing import Optional

import colors

ROOT_NAME: str = "toyeto"

color_formatter: colors.Color = colors.Color()


class ColorFormatter(logging.Formatter):
    """Formatter that colors the level name the same way the cli colors its SUCCESS/INFO prefixes"""

    def __init__(self, use_color: bool = True) -> None:
        super().__init__(fmt="%(levelname)s: %(name)s - %(message)s")
        self.use_color: bool = use_color

    def format(self, record: logging.LogRecord) -> str:
        message: str = super().format(record)

        if not self.use_color:
            return message

        # only the level prefix gets colored so the message stays greppable
        prefix: str = f"{record.levelname}:"
        return message.replace(
            prefix, color_formatter.paint(prefix, color_formatter.for_level(record.levelname)), 1
        )


def create_logger(log_level: str = "info", use_color: Optional[bool] = None) -> logging.Logger:
    """Function that configures the application logger once and returns it

    Parameters

    log_level : str
        name of the level to log at. Should be one of debug, info, warning, or error

    use_color : Optional[bool]
        whether to color the level names. If None then color is only used when stderr is a terminal

    Returns

    logging.Logger
        returns the root logger of the application
    """
    level: Optional[int] = logging.getLevelName(log_level.upper())

    if not isinstance(level, int):
        raise ValueError(f"The log level {log_level} is not a known logging level")

    if use_color is None:
        use_color = sys.stderr.isatty()

    log_obj: logging.Logger = logging.getLogger(ROOT_NAME)
    log_obj.setLevel(level)

    # calling create_logger twice should not stack handlers
    for handler in list(log_obj.handlers):
        log_obj.removeHandler(handler)

    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(ColorFormatter(use_color))
    log_obj.addHandler(handler)
    log_obj.propagate = False

    return log_obj


def get_logger(name: str) -> logging.Logger:
    """returns a child of the application logger. ex: get_logger("policy") -> toyeto.policy"""
    return logging.getLogger(f"{ROOT_NAME}.{name}")
