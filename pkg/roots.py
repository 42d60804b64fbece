"""
Simultaneous polynomial root finding (Aberth iteration).
"""
import logging
from typing import List, Sequence

import numpy as np

from errors import RootFindingFailed

logger = logging.getLogger(__name__)

EPS = np.finfo(float).eps


def _trim(coeffs: np.ndarray, rel_tol: float = 1e-14) -> np.ndarray:
    scale = float(np.max(np.abs(coeffs))) if coeffs.size else 0.0
    if scale == 0.0:
        return coeffs[:1]
    keep = np.nonzero(np.abs(coeffs) > rel_tol * scale)[0]
    return coeffs[: int(keep[-1]) + 1]


def _root_sort_key(z: complex):
    return (round(z.real, 10), round(z.imag, 10))


def polynomial_roots(
    coeffs: Sequence[complex],
    tol: float = 1e-14,
    max_iter: int = 200,
    restarts: int = 3,
    seed: int = 0,
) -> List[complex]:
    """
    All roots of sum coeffs[k] z^k.

    Aberth's method on the monic polynomial, started on a circle of Cauchy
    radius. A run stops once every correction is below `tol` (relative) or
    every root is at the level of rounding (backward error). Failed runs are
    restarted from randomly perturbed starting points.

    Args:
        coeffs: Coefficients in ascending order
        tol: Relative correction tolerance
        max_iter: Iteration cap per run
        restarts: Extra runs after the first one fails
        seed: Seed of the restart perturbations

    Returns:
        Roots sorted by real then imaginary part (with multiplicity)

    Raises:
        RootFindingFailed: no run converged; `partial` holds the last iterate
    """
    c = _trim(np.asarray(coeffs, dtype=complex).reshape(-1))
    degree = c.size - 1
    if degree <= 0:
        return []
    if degree == 1:
        return [complex(-c[0] / c[1])]

    monic = c[::-1] / c[-1]
    deriv = np.polyder(monic)
    abs_monic = np.abs(monic)
    radius = 1.0 + float(np.max(abs_monic[1:]))
    rng = np.random.default_rng(seed)
    x = np.zeros(degree, dtype=complex)

    for attempt in range(restarts + 1):
        if attempt == 0:
            angles = 2 * np.pi * np.arange(degree) / degree + 0.4
            x = radius * np.exp(1j * angles)
        else:
            logger.debug("Aberth restart %d for degree %d", attempt, degree)
            x = radius * rng.uniform(0.3, 1.0, degree) * np.exp(1j * rng.uniform(0, 2 * np.pi, degree))

        for _ in range(max_iter):
            p = np.polyval(monic, x)
            dp = np.polyval(deriv, x)
            backward = np.polyval(abs_monic, np.abs(x))
            if np.all(np.abs(p) <= 8 * EPS * backward):
                return sorted((complex(r) for r in x), key=_root_sort_key)

            diff = x[:, None] - x[None, :]
            np.fill_diagonal(diff, 1.0)
            inv = 1.0 / diff
            np.fill_diagonal(inv, 0.0)
            with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
                ratio = p / dp
                delta = ratio / (1.0 - ratio * inv.sum(axis=1))
            bad = ~np.isfinite(delta)
            if np.any(bad):
                delta[bad] = 1e-3 * radius * np.exp(1j * rng.uniform(0, 2 * np.pi, int(bad.sum())))
            x = x - delta
            if np.all(np.abs(delta) <= tol * (1.0 + np.abs(x))):
                return sorted((complex(r) for r in x), key=_root_sort_key)

    raise RootFindingFailed(
        f"Aberth iteration did not converge for degree {degree} after {restarts + 1} runs",
        partial=[complex(r) for r in x],
    )
