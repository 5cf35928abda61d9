from typing import Dict


class Color:
    """Class to handle changing colors in the terminal output"""
    def __init__(self) -> None:

        self.RED: str   = "\033[1;31m"
        self.BLUE: str  = "\033[1;34m"
        self.GREEN: str = "\033[0;32m"
        self.YELLOW: str = '\033[33m'
        self.RESET: str = "\033[0;0m"
        self.BOLD: str    = "\033[;1m"
        self.REVERSE: str = "\033[;7m"

    def for_level(self, level_name: str) -> str:
        """Function that returns the color code used for a logging level name

        Parameters

        level_name : str
            name of the logging level such as "INFO" or "WARNING"

        Returns

        str
            returns the escape code for that level. Unknown levels get the bold code
        """
        level_colors: Dict[str, str] = {
            "DEBUG": self.BLUE,
            "INFO": self.BOLD,
            "WARNING": self.YELLOW,
            "ERROR": self.RED,
            "CRITICAL": self.RED + self.REVERSE,
        }
        return level_colors.get(level_name, self.BOLD)

    def paint(self, text: str, code: str) -> str:
        """wraps text in a color code and resets afterwards"""
        return code + text + self.RESET
