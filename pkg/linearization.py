"""
Koenigs and Boettcher conjugators for harmonic maps fixing the origin.

For f = h + conj(g) with h(0) = g(0) = 0 the conjugator phi = phi_h + conj(phi_g)
solves phi ⊖ f = T ⊖ phi where T is the model map (lambda z + conj(theta z) in
the Koenigs case, z^p on a superattracting side). Each part is solved on its own.
"""
import cmath
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple

import numpy as np

from analytic import AnalyticFn, TaylorSeries, as_series, power_table, series_compose, series_pow
from errors import (
    MultiplierOutOfRange,
    NotFixedAtZero,
    NotSuperattracting,
    PreconditionError,
)
from harmonic import HarmonicMap, assemble, compose_direct

logger = logging.getLogger(__name__)

FIXED_TOL = 1e-12
ZERO_MULTIPLIER = 1e-12


class LinearizationKind(str, Enum):
    KOENIGS = "koenigs"
    BOETTCHER_ANALYTIC_SIDE = "boettcher_analytic_side"
    BOETTCHER_COANALYTIC_SIDE = "boettcher_coanalytic_side"
    BOETTCHER_BOTH = "boettcher_both"


@dataclass(frozen=True)
class LinearizationResult:
    """
    Conjugator phi and the residual of phi ⊖ f = model ⊖ phi through order N.

    `p` is the local degree of h when the analytic side is superattracting,
    `q` the same for g; both are None on a Koenigs side.
    """

    phi: HarmonicMap
    kind: LinearizationKind
    lambda_: complex
    theta: complex
    p: Optional[int]
    q: Optional[int]
    residual: float
    h_residual: float
    g_residual: float
    model: HarmonicMap


# ========== ANALYTIC SERIES ==========

def _check_fixed_at_zero(h: TaylorSeries) -> None:
    if abs(h.coefficient(0)) > FIXED_TOL:
        raise NotFixedAtZero(f"map must fix the origin, h(0) = {h.coefficient(0)}")


def koenigs_denominators(lam: complex, order: int) -> np.ndarray:
    """lam - lam^n for n = 2..order (the divisors of the Koenigs recursion)."""
    n = np.arange(2, order + 1)
    return lam - lam ** n


def koenigs_series(h: TaylorSeries, order: int) -> TaylorSeries:
    """
    Koenigs function phi with phi(h(z)) = lambda phi(z) + O(z^{N+1}) and phi'(0) = 1.

    The z^n coefficient of phi∘h is sum_{m<=n} c_m [h^m]_n and [h^n]_n = lambda^n,
    which gives c_n = sum_{m<n} c_m [h^m]_n / (lambda - lambda^n).

    Args:
        h: Series with h(0) = 0 and 0 < |h'(0)| < 1
        order: Truncation order N

    Returns:
        phi truncated at N

    Raises:
        NotFixedAtZero: h(0) != 0
        MultiplierOutOfRange: |h'(0)| not in (0, 1)
    """
    _check_fixed_at_zero(h)
    lam = h.coefficient(1)
    if not 0.0 < abs(lam) < 1.0:
        raise MultiplierOutOfRange(f"Koenigs needs 0 < |lambda| < 1, got |lambda| = {abs(lam):.6g}")
    order = max(order, 1)
    table = power_table(h, order)
    denominators = koenigs_denominators(lam, order)
    c = np.zeros(order + 1, dtype=complex)
    c[1] = 1.0
    for n in range(2, order + 1):
        c[n] = np.dot(c[1:n], table[n, 1:n]) / denominators[n - 2]
    return TaylorSeries(c, polynomial=False)


def superattracting_degree(h: TaylorSeries) -> int:
    """Index p of the first nonzero coefficient of h (p >= 2 required)."""
    _check_fixed_at_zero(h)
    if abs(h.coefficient(1)) > ZERO_MULTIPLIER:
        raise NotSuperattracting(f"h'(0) = {h.coefficient(1)} is not zero")
    nonzero = np.nonzero(np.abs(h.coeffs[2:]) > FIXED_TOL)[0]
    if nonzero.size == 0:
        raise NotSuperattracting("no nonzero coefficient a_p with p >= 2 within the truncation")
    return int(nonzero[0]) + 2


def boettcher_series(h: TaylorSeries, order: int, root_index: int = 0) -> TaylorSeries:
    """
    Boettcher function phi with phi(h(z)) = phi(z)^p through z^N.

    phi(z) = b_1 z + ... with b_1^{p-1} = a_p; `root_index` picks the branch
    (0 is the principal root). Matching the z^{p+k} coefficients determines
    b_{k+1} linearly through the term p b_1^{p-1} b_{k+1} of phi^p.

    Raises:
        NotFixedAtZero: h(0) != 0
        NotSuperattracting: h'(0) != 0 or h vanishes identically
    """
    p = superattracting_degree(h)
    order = max(order, 1)
    work = p + order - 1
    a_p = h.coefficient(p)
    b1 = cmath.exp(cmath.log(a_p) / (p - 1)) * cmath.exp(2j * cmath.pi * root_index / (p - 1))
    table = power_table(h.with_order(work), work)
    pivot = p * b1 ** (p - 1)

    b = np.zeros(work + 1, dtype=complex)
    b[1] = b1
    for k in range(1, order):
        composed = np.dot(b[1: k + 1], table[p + k, 1: k + 1])
        powered = series_pow(TaylorSeries(b), p).coeffs[p + k]
        b[k + 1] = (composed - powered) / pivot
    return TaylorSeries(b[: order + 1], polynomial=False)


def koenigs_residual(phi: TaylorSeries, h: TaylorSeries, lam: complex) -> float:
    """max_n |[phi∘h - lam phi]_n| through phi's order."""
    order = phi.trunc_order
    lhs = series_compose(phi, h.with_order(order))
    return lhs.max_coeff_diff(lam * phi)


def boettcher_residual(phi: TaylorSeries, h: TaylorSeries, p: int) -> float:
    """max_n |[phi∘h - phi^p]_n| through phi's order."""
    order = phi.trunc_order
    lhs = series_compose(phi, h.with_order(order))
    return lhs.max_coeff_diff(series_pow(phi, p))


# ========== HARMONIC ASSEMBLY ==========

def harmonic_residual(phi: HarmonicMap, f: HarmonicMap, model: HarmonicMap) -> float:
    """Largest coefficient of phi ⊖ f - model ⊖ phi over both parts."""
    lhs = compose_direct(phi, f)
    rhs = compose_direct(model, phi)
    return max(lhs.h.max_coeff_diff(rhs.h), lhs.g.max_coeff_diff(rhs.g))


def _solve_side(
    fn: TaylorSeries, order: int, superattracting: bool, part: str, root_index: int
) -> Tuple[TaylorSeries, Optional[int], TaylorSeries, float]:
    """Conjugator, local degree, model series and residual for one part."""
    try:
        if superattracting:
            deg = superattracting_degree(fn)
            phi = boettcher_series(fn, order, root_index)
            model = TaylorSeries.monomial(deg, order)
            return phi, deg, model, boettcher_residual(phi, fn, deg)
        multiplier = fn.coefficient(1)
        phi = koenigs_series(fn, order)
        model = TaylorSeries.monomial(1, order, multiplier)
        return phi, None, model, koenigs_residual(phi, fn, multiplier)
    except PreconditionError as e:
        raise type(e)(str(e), part=part) from e


def _parts(f: HarmonicMap, order: int) -> Tuple[TaylorSeries, TaylorSeries]:
    return as_series(f.h, order), as_series(f.g, order)


def _linearize_parts(
    f: HarmonicMap,
    order: int,
    h_super: bool,
    g_super: bool,
    kind: LinearizationKind,
    root_index: int = 0,
) -> LinearizationResult:
    h, g = _parts(f, order)
    phi_h, p, model_h, h_res = _solve_side(h, order, h_super, "h", root_index)
    phi_g, q, model_g, g_res = _solve_side(g, order, g_super, "g", root_index)
    phi = assemble(phi_h, phi_g)
    model = assemble(model_h, model_g)
    result = LinearizationResult(
        phi=phi,
        kind=kind,
        lambda_=h.coefficient(1),
        theta=g.coefficient(1),
        p=p,
        q=q,
        residual=max(h_res, g_res),
        h_residual=h_res,
        g_residual=g_res,
        model=model,
    )
    logger.debug("%s linearization at N=%d, residual %.3e", kind.value, order, result.residual)
    return result


def harmonic_koenigs(f: HarmonicMap, order: int) -> LinearizationResult:
    """
    phi with phi ⊖ f = (lambda z + conj(theta z)) ⊖ phi, both parts by Koenigs.

    Möbius parts fixing 0 are expanded to series first.
    """
    return _linearize_parts(f, order, False, False, LinearizationKind.KOENIGS)


def harmonic_boettcher(f: HarmonicMap, order: int, root_index: int = 0) -> LinearizationResult:
    """phi with phi ⊖ f = (z^p + conj(theta z)) ⊖ phi: Boettcher on h, Koenigs on g."""
    return _linearize_parts(
        f, order, True, False, LinearizationKind.BOETTCHER_ANALYTIC_SIDE, root_index
    )


def linearize(f: HarmonicMap, order: int, root_index: int = 0) -> LinearizationResult:
    """
    Pick the conjugator from the multipliers at 0.

    A part with zero multiplier gets Boettcher, any other part Koenigs.
    """
    h, g = _parts(f, order)
    h_super = abs(h.coefficient(1)) <= ZERO_MULTIPLIER
    g_super = abs(g.coefficient(1)) <= ZERO_MULTIPLIER
    if h_super and g_super:
        kind = LinearizationKind.BOETTCHER_BOTH
    elif h_super:
        kind = LinearizationKind.BOETTCHER_ANALYTIC_SIDE
    elif g_super:
        kind = LinearizationKind.BOETTCHER_COANALYTIC_SIDE
    else:
        kind = LinearizationKind.KOENIGS
    return _linearize_parts(f, order, h_super, g_super, kind, root_index)


def root_choices(fn: AnalyticFn, order: int) -> int:
    """Number of admissible Boettcher branches (p - 1) for a superattracting part."""
    return superattracting_degree(as_series(fn, order)) - 1
