from dataclasses import dataclass, field
from typing import Any, Dict

import numpy as np

from .errors import InvalidInputError


@dataclass(frozen=True)
class Architecture:
    """fixed window embedding network: embed W tokens, one tanh layer of width h, affine to |V|"""

    vocab_size: int
    embed_dim: int = 16
    window: int = 24
    hidden: int = 64

    def __post_init__(self) -> None:
        for name in ("vocab_size", "embed_dim", "window", "hidden"):
            if getattr(self, name) < 1:
                raise InvalidInputError(f"The architecture field {name} has to be positive, not {getattr(self, name)}")

    @property
    def n_params(self) -> int:
        V, d, W, h = self.vocab_size, self.embed_dim, self.window, self.hidden
        return V * d + W * d * h + h + h * V + V

    def shapes(self) -> Dict[str, tuple]:
        """shapes of the parameter blocks in the order they sit in the flat vector"""
        V, d, W, h = self.vocab_size, self.embed_dim, self.window, self.hidden
        return {"E": (V, d), "W1": (W * d, h), "b1": (h,), "W2": (h, V), "b2": (V,)}

    def to_dict(self) -> Dict[str, int]:
        return {
            "vocab_size": self.vocab_size,
            "embed_dim": self.embed_dim,
            "window": self.window,
            "hidden": self.hidden,
        }

    @classmethod
    def from_dict(cls, record: Dict[str, Any]) -> "Architecture":
        return cls(**{key: int(value) for key, value in record.items()})


def unpack(arch: Architecture, theta: np.ndarray) -> Dict[str, np.ndarray]:
    """Function that splits a flat vector into views of the parameter blocks

    Parameters

    arch : Architecture
        architecture the vector belongs to

    theta : np.ndarray
        flat vector of length arch.n_params. Parameters or a gradient

    Returns

    Dict[str, np.ndarray]
        returns reshaped views (no copies) keyed E, W1, b1, W2, b2
    """
    blocks: Dict[str, np.ndarray] = {}
    offset: int = 0

    for name, shape in arch.shapes().items():
        size: int = int(np.prod(shape))
        blocks[name] = theta[offset:offset + size].reshape(shape)
        offset += size

    return blocks


@dataclass(frozen=True, eq=False)
class PolicyParams:
    arch: Architecture
    theta: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        theta = np.array(self.theta, dtype=np.float64)

        if theta.ndim != 1 or theta.size != self.arch.n_params:
            raise InvalidInputError(
                f"Expected {self.arch.n_params} parameters for {self.arch}, got an array of shape {theta.shape}"
            )

        if not np.all(np.isfinite(theta)):
            raise InvalidInputError("Policy parameters have to be finite")

        theta.flags.writeable = False
        object.__setattr__(self, "theta", theta)

    @property
    def blocks(self) -> Dict[str, np.ndarray]:
        return unpack(self.arch, self.theta)

    def with_theta(self, theta: np.ndarray) -> "PolicyParams":
        return PolicyParams(self.arch, theta)

    def same_as(self, other: "PolicyParams") -> bool:
        return self.arch == other.arch and np.array_equal(self.theta, other.theta)


def zeros(arch: Architecture) -> PolicyParams:
    return PolicyParams(arch, np.zeros(arch.n_params))


def init_params(arch: Architecture, seed: int) -> PolicyParams:
    """Function that draws the untuned starting parameters

    Parameters

    arch : Architecture
        network sizes

    seed : int
        seed of the normal draws

    Returns

    PolicyParams
        returns small random embeddings, fan-in scaled weights and zero biases
    """
    rng: np.random.Generator = np.random.default_rng(seed)

    theta: np.ndarray = np.zeros(arch.n_params)
    blocks: Dict[str, np.ndarray] = unpack(arch, theta)

    blocks["E"][...] = rng.normal(0.0, 0.1, size=blocks["E"].shape)
    blocks["W1"][...] = rng.normal(0.0, 1.0 / np.sqrt(arch.window * arch.embed_dim), size=blocks["W1"].shape)
    blocks["W2"][...] = rng.normal(0.0, 1.0 / np.sqrt(arch.hidden), size=blocks["W2"].shape)

    return PolicyParams(arch, theta)
