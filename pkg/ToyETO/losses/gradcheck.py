from typing import Callable, Tuple

import numpy as np

from policy import InvalidInputError, PolicyParams

LossFunction = Callable[[PolicyParams], Tuple[float, np.ndarray]]


def grad_check(
    loss_fn: LossFunction,
    params: PolicyParams,
    epsilon: float = 1e-5,
    n_coords: int = 200,
    top_k: int = 16,
    seed: int = 0,
    floor: float = 1e-4,
) -> float:
    """Function that compares an analytic gradient with central finite differences

    Parameters

    loss_fn : LossFunction
        maps parameters to (loss, gradient). Inputs are bound in the closure

    params : PolicyParams
        point to check at

    epsilon : float
        half width of the central difference

    n_coords : int
        number of random coordinates. Every coordinate is checked when there are fewer

    top_k : int
        the coordinates with the largest analytic magnitude are always included

    seed : int
        seed of the coordinate draw

    floor : float
        lower bound of the relative error denominator, so coordinates near zero compare absolutely

    Returns

    float
        returns the maximum over the checked coordinates of |a - n| / max(|a|, |n|, floor)
    """
    if not epsilon > 0:
        raise InvalidInputError(f"epsilon has to be positive, not {epsilon}")

    _, analytic = loss_fn(params)
    n_params: int = params.theta.size

    rng: np.random.Generator = np.random.default_rng(seed)

    if n_coords >= n_params:
        coords: np.ndarray = np.arange(n_params)
    else:
        sampled: np.ndarray = rng.choice(n_params, size=n_coords, replace=False)
        largest: np.ndarray = np.argsort(-np.abs(analytic), kind="stable")[:top_k]
        coords = np.union1d(sampled, largest)

    worst: float = 0.0

    for coord in coords:
        shifted: np.ndarray = params.theta.copy()

        shifted[coord] += epsilon
        loss_plus, _ = loss_fn(params.with_theta(shifted))

        shifted[coord] -= 2.0 * epsilon
        loss_minus, _ = loss_fn(params.with_theta(shifted))

        numeric: float = (loss_plus - loss_minus) / (2.0 * epsilon)
        exact: float = float(analytic[coord])

        error: float = abs(exact - numeric) / max(abs(exact), abs(numeric), floor)
        worst = max(worst, error)

    return worst
