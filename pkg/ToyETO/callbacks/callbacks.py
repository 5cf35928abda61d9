import json
from pathlib import Path
from typing import List, Optional

from envs import WORLDS
from harness import ConfigError, Method


def check_config_file(filepath: Optional[str]) -> Optional[str]:
    """making sure that the config file exists and holds a JSON object

    Parameters

    filepath : Optional[str]
        filepath to an experiment configuration written by ExperimentConfig.save. None means
        the defaults are used

    Returns

    Optional[str]
        returns the filepath if it doesn't raise an error
    """
    if filepath is None:
        return None

    path = Path(filepath)

    if not path.is_file():
        raise ConfigError(f"The configuration file {filepath} was not found")

    if path.suffix != ".json":
        raise ConfigError(f"The configuration file {filepath} has to be a .json file")

    try:
        json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as error:
        raise ConfigError(f"The configuration file {filepath} is not valid JSON: {error}") from None

    return filepath


def check_env(env: Optional[str]) -> Optional[str]:
    """Callback function to check that the environment is one of the toy environments"""
    if env is not None and env.lower() not in WORLDS:
        raise ConfigError(f"The environment {env} is not supported. The supported environments are {', '.join(WORLDS)}")

    return None if env is None else env.lower()


def check_method(method: Optional[str]) -> Optional[str]:
    if method is not None and method.lower() not in {choice.value for choice in Method}:
        raise ConfigError(
            f"The method {method} is not supported. Choose from {', '.join(choice.value for choice in Method)}"
        )

    return None if method is None else method.lower()


def check_seeds(seeds: Optional[List[int]]) -> List[int]:
    """Callback function to make sure that at least one master seed is run and that none repeats"""
    if not seeds:
        return [0]

    if len(set(seeds)) != len(seeds):
        raise ConfigError(f"The seeds {seeds} contain duplicates")

    return list(seeds)
