from .logger import create_logger, get_logger, ColorFormatter
