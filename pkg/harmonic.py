"""
Complex harmonic maps f = h + conj(g) and their composition products.

A `HarmonicMap` is a formal ordered pair (h, g): constants are never moved
between the parts, so (h, g) and (h + c, g - conj(c)) are different maps even
though they agree pointwise.
"""
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Union

import numpy as np

from analytic import (
    INFINITY,
    AnalyticFn,
    ExtendedComplex,
    MoebiusTransform,
    TaylorSeries,
    analytic_compose,
    analytic_eval,
    analytic_inverse,
    is_zero_fn,
)
from errors import DegenerateMap, NotInvertible, RepresentationMismatch

logger = logging.getLogger(__name__)


class CompositionLaw(str, Enum):
    DIRECT = "direct"
    CROSSED = "crossed"


@dataclass(frozen=True)
class HarmonicMap:
    """
    f(z) = h(z) + conj(g(z)).

    A zero co-analytic part is only accepted when `analytic_degenerate` is set.
    """

    h: AnalyticFn
    g: AnalyticFn
    analytic_degenerate: bool = False

    def __post_init__(self):
        for name, part in (("h", self.h), ("g", self.g)):
            if not isinstance(part, (TaylorSeries, MoebiusTransform)):
                raise TypeError(f"part {name} must be a TaylorSeries or MoebiusTransform")
        if is_zero_fn(self.g) and not self.analytic_degenerate:
            raise DegenerateMap("co-analytic part is zero; build the map with analytic_map()")

    @property
    def is_mobius(self) -> bool:
        return isinstance(self.h, MoebiusTransform) and isinstance(self.g, MoebiusTransform)

    @property
    def is_series(self) -> bool:
        return isinstance(self.h, TaylorSeries) and isinstance(self.g, TaylorSeries)

    def __call__(self, z):
        return eval_harmonic(self, z)


@dataclass(frozen=True)
class HarmonicConstant:
    """
    Harmonic complex number mu + conj(omega).

    Either entry may be the INFINITY sentinel (the infinite h-fixed points).
    """

    mu: ExtendedComplex
    omega: ExtendedComplex

    @property
    def is_infinite(self) -> bool:
        return self.mu is INFINITY or self.omega is INFINITY

    def value(self) -> ExtendedComplex:
        """mu + conj(omega), collapsing to INFINITY when either entry is infinite."""
        if self.is_infinite:
            return INFINITY
        return complex(self.mu) + complex(self.omega).conjugate()

    def conjugate(self) -> "HarmonicConstant":
        return HarmonicConstant(self.omega, self.mu)


def assemble(h: AnalyticFn, g: AnalyticFn) -> HarmonicMap:
    """Build a map from computed parts, flagging a zero co-analytic part."""
    return HarmonicMap(h, g, analytic_degenerate=is_zero_fn(g))


def identity_map(order: int) -> HarmonicMap:
    """The unit z + conj(z) of the direct composition."""
    z = TaylorSeries.identity(order)
    return HarmonicMap(z, z)


def analytic_map(h: AnalyticFn, order: int = None) -> HarmonicMap:
    """Purely analytic map h + conj(0), explicitly flagged as degenerate."""
    if order is None:
        order = h.trunc_order if isinstance(h, TaylorSeries) else 1
    return HarmonicMap(h, TaylorSeries.zero(order), analytic_degenerate=True)


# ========== COMPOSITION PRODUCTS ==========

def compose_direct(f1: HarmonicMap, f2: HarmonicMap) -> HarmonicMap:
    """f1 ⊖ f2 = h1∘h2 + conj(g1∘g2)."""
    return assemble(analytic_compose(f1.h, f2.h), analytic_compose(f1.g, f2.g))


def compose_crossed(f1: HarmonicMap, f2: HarmonicMap) -> HarmonicMap:
    """f1 ⊚ f2 = h1∘g2 + conj(g1∘h2)."""
    return assemble(analytic_compose(f1.h, f2.g), analytic_compose(f1.g, f2.h))


def compose(f1: HarmonicMap, f2: HarmonicMap, law: Union[CompositionLaw, str]) -> HarmonicMap:
    """Dispatch on the law name: "direct" or "crossed"."""
    law = CompositionLaw(law)
    if law is CompositionLaw.DIRECT:
        return compose_direct(f1, f2)
    return compose_crossed(f1, f2)


def compose_blend(
    f1: HarmonicMap,
    f2: HarmonicMap,
    alpha: complex,
    beta: complex,
    gamma: complex,
    delta: complex,
) -> HarmonicMap:
    """
    Four-parameter product alpha(a∘c) + beta conj(b∘d) + gamma(a∘d) + delta conj(b∘c).

    With f1 = a + conj(b) and f2 = c + conj(d) the stored pair is
    (alpha h1∘h2 + gamma h1∘g2, conj(beta) g1∘g2 + conj(delta) g1∘h2).

    Raises:
        RepresentationMismatch: any part is a Möbius map
    """
    if not (f1.is_series and f2.is_series):
        raise RepresentationMismatch("the blended product needs series parts on both maps")
    h = complex(alpha) * analytic_compose(f1.h, f2.h) + complex(gamma) * analytic_compose(f1.h, f2.g)
    g = (
        complex(beta).conjugate() * analytic_compose(f1.g, f2.g)
        + complex(delta).conjugate() * analytic_compose(f1.g, f2.h)
    )
    return assemble(h, g)


def conjugate_map(f: HarmonicMap) -> HarmonicMap:
    """The conjugate harmonic map g + conj(h)."""
    return assemble(f.g, f.h)


# ========== EVALUATION ==========

def eval_harmonic(f: HarmonicMap, z: ExtendedComplex) -> ExtendedComplex:
    """h(z) + conj(g(z)); a pole in either part propagates INFINITY."""
    hz = analytic_eval(f.h, z)
    gz = analytic_eval(f.g, z)
    if hz is INFINITY or gz is INFINITY:
        return INFINITY
    return hz + gz.conjugate()


def eval_composed(
    f1: HarmonicMap,
    f2: HarmonicMap,
    law: Union[CompositionLaw, str],
    z: ExtendedComplex,
) -> ExtendedComplex:
    """Pointwise value of f1 ∘_H f2 at z by nested evaluation (no series expansion)."""
    law = CompositionLaw(law)
    inner_h, inner_g = (f2.h, f2.g) if law is CompositionLaw.DIRECT else (f2.g, f2.h)
    hz = analytic_eval(f1.h, analytic_eval(inner_h, z))
    gz = analytic_eval(f1.g, analytic_eval(inner_g, z))
    if hz is INFINITY or gz is INFINITY:
        return INFINITY
    return hz + gz.conjugate()


# ========== UNIVALENCE AND CONJUGACY ==========

def _locally_univalent(fn: AnalyticFn) -> bool:
    if isinstance(fn, MoebiusTransform):
        return True
    return fn.trunc_order >= 1 and abs(fn.coeffs[1]) > 1e-12


def is_univalent(f: HarmonicMap) -> bool:
    """Local criterion: each part is Möbius or a series with c_1 != 0."""
    return _locally_univalent(f.h) and _locally_univalent(f.g)


def invert_map(f: HarmonicMap, order: int = None) -> HarmonicMap:
    """
    f^{-1} = h^{-1} + conj(g^{-1}) for a univalent map.

    Raises:
        NotInvertible: a part fails the local univalence criterion
    """
    inverses = []
    for name, part in (("h", f.h), ("g", f.g)):
        if not _locally_univalent(part):
            raise NotInvertible("part is not locally univalent", part=name)
        try:
            inverses.append(analytic_inverse(part, order))
        except NotInvertible as e:
            raise NotInvertible(str(e), part=name) from e
    return assemble(*inverses)


def verify_conjugacy(
    witness: HarmonicMap,
    f1: HarmonicMap,
    f2: HarmonicMap,
    law: Union[CompositionLaw, str],
    samples: Iterable[complex],
    strict: bool = False,
) -> float:
    """
    Residual of witness ∘_H f1 = f2 ∘_H witness over sample points.

    Args:
        witness: Candidate conjugating map
        f1: Map being conjugated
        f2: Target map
        law: "direct" or "crossed"
        samples: Points where both sides are evaluated
        strict: Warn when the witness is not univalent

    Returns:
        max |(witness ∘ f1)(z) - (f2 ∘ witness)(z)| (inf if a pole is hit)
    """
    if strict and not is_univalent(witness):
        logger.warning("⚠️  conjugacy witness is not univalent; residual is informative only")
    worst = 0.0
    for z in samples:
        lhs = eval_composed(witness, f1, law, complex(z))
        rhs = eval_composed(f2, witness, law, complex(z))
        if lhs is INFINITY or rhs is INFINITY:
            if lhs is rhs:
                continue
            return float("inf")
        worst = max(worst, abs(lhs - rhs))
    return float(worst)


def sample_disk(radius: float, count: int, seed: int = 0) -> np.ndarray:
    """Deterministic sample points in the closed disk |z| <= radius."""
    rng = np.random.default_rng(seed)
    r = radius * np.sqrt(rng.uniform(0.0, 1.0, count))
    t = rng.uniform(0.0, 2 * np.pi, count)
    return r * np.exp(1j * t)
