"""
Seeded random inputs shared by the self-test and the test suite.
Every generator takes a numpy Generator so a corpus is reproducible from one seed.
"""
from typing import List, Tuple

import numpy as np

from analytic import MoebiusTransform, TaylorSeries
from hardy import BlockOperator, HardyVector, rank_one_perturbation, simple_comp_op
from harmonic import HarmonicMap


def random_complex(rng: np.random.Generator, size=None, scale: float = 1.0):
    value = scale * (rng.standard_normal(size) + 1j * rng.standard_normal(size))
    return complex(value) if size is None else value


def random_unit_modulus(rng: np.random.Generator, low: float, high: float) -> complex:
    """Complex number with modulus uniform in [low, high] and uniform argument."""
    return complex(rng.uniform(low, high) * np.exp(2j * np.pi * rng.uniform()))


def random_series(
    rng: np.random.Generator, degree: int, order: int, scale: float = 0.5, fixed_zero: bool = False
) -> TaylorSeries:
    coeffs = random_complex(rng, degree + 1, scale)
    if fixed_zero:
        coeffs[0] = 0.0
    return TaylorSeries.from_coeffs(coeffs, order)


def random_harmonic_polynomial(rng: np.random.Generator, order: int, max_degree: int = 3) -> HarmonicMap:
    """h + conj(g) with random polynomial parts of degree <= max_degree."""
    h = random_series(rng, int(rng.integers(1, max_degree + 1)), order)
    g = random_series(rng, int(rng.integers(1, max_degree + 1)), order)
    if g.is_zero():
        g = TaylorSeries.monomial(1, order)
    return HarmonicMap(h, g)


def random_mobius(rng: np.random.Generator) -> MoebiusTransform:
    while True:
        matrix = random_complex(rng, (2, 2))
        if abs(np.linalg.det(matrix)) > 1e-3:
            return MoebiusTransform(matrix)


def random_affine_map(
    rng: np.random.Generator, max_multiplier: float = 0.9, min_multiplier: float = 0.1
) -> HarmonicMap:
    """lam z + a + conj(theta z + b) with |lam|, |theta| drawn independently from [min, max]."""
    lam = random_unit_modulus(rng, min_multiplier, max_multiplier)
    theta = random_unit_modulus(rng, min_multiplier, max_multiplier)
    order = 1
    h = TaylorSeries.from_coeffs([random_complex(rng, scale=0.5), lam], order)
    g = TaylorSeries.from_coeffs([random_complex(rng, scale=0.5), theta], order)
    return HarmonicMap(h, g)


def random_quadratic_contraction(rng: np.random.Generator, order: int) -> HarmonicMap:
    """
    c + lam z + a z^2 in each part with |c| <= 0.1, |lam| <= 0.5, |a| <= 0.2.

    Such a part maps the disk |z| <= 0.5 into itself with |derivative| <= 0.7,
    so every orbit started there converges.
    """
    parts = []
    for _ in range(2):
        coeffs = [
            random_unit_modulus(rng, 0.0, 0.1),
            random_unit_modulus(rng, 0.05, 0.5),
            random_unit_modulus(rng, 0.0, 0.2),
        ]
        parts.append(TaylorSeries.from_coeffs(coeffs, order))
    return HarmonicMap(*parts)


def random_koenigs_map(rng: np.random.Generator, order: int, low: float = 0.1, high: float = 0.8) -> HarmonicMap:
    """
    Cubic parts fixing 0 with multipliers of modulus in [low, high].

    The quadratic and cubic coefficients have modulus at most 0.2, so each part
    contracts the disk |z| < 0.6 and its Koenigs series converges well past 0.3.
    """
    parts = []
    for _ in range(2):
        coeffs = np.zeros(4, dtype=complex)
        coeffs[1] = random_unit_modulus(rng, low, high)
        coeffs[2:] = [random_unit_modulus(rng, 0.0, 0.2) for _ in range(2)]
        parts.append(TaylorSeries.from_coeffs(coeffs, order))
    return HarmonicMap(*parts)


def random_boettcher_map(rng: np.random.Generator, order: int) -> HarmonicMap:
    """Superattracting h = a_p z^p (1 + small terms), p in {2, 3}, Koenigs-type g."""
    p = int(rng.choice([2, 3]))
    h = np.zeros(p + 3, dtype=complex)
    h[p] = random_unit_modulus(rng, 0.5, 1.0)
    h[p + 1:] = h[p] * random_complex(rng, 2, 0.2)
    g = np.zeros(3, dtype=complex)
    g[1] = random_unit_modulus(rng, 0.1, 0.8)
    g[2] = random_complex(rng, scale=0.2)
    return HarmonicMap(TaylorSeries.from_coeffs(h, order), TaylorSeries.from_coeffs(g, order))


def random_self_map_symbol(rng: np.random.Generator, order: int, degree: int = 2, radius: float = 0.95) -> TaylorSeries:
    """Polynomial with sum |c_k| = radius, hence a certified self-map of the disk."""
    coeffs = random_complex(rng, degree + 1)
    coeffs *= radius / np.sum(np.abs(coeffs))
    return TaylorSeries.from_coeffs(coeffs, order)


def random_affine_symbol(rng: np.random.Generator, order: int, radius: float = 0.95) -> TaylorSeries:
    return random_self_map_symbol(rng, order, degree=1, radius=radius)


def random_vector(rng: np.random.Generator, order: int) -> HardyVector:
    return HardyVector(random_complex(rng, order + 1), random_complex(rng, order + 1))


def random_block_operator(rng: np.random.Generator, order: int) -> BlockOperator:
    return BlockOperator(random_complex(rng, (order + 1, order + 1)), random_complex(rng, (order + 1, order + 1)))


def characterization_corpus(
    rng: np.random.Generator, order: int, count: int = 50, eps: float = 1e-2
) -> List[Tuple[BlockOperator, bool]]:
    """
    Operators labelled with the ground truth "is a simple composition operator".

    The first half are C_phi + conj(C_pi) for random polynomial self-maps, the
    second half the same construction with a rank-one perturbation of size eps on A.
    """
    corpus = []
    for k in range(count):
        phi = random_self_map_symbol(rng, order, degree=int(rng.integers(1, 3)))
        pi = random_self_map_symbol(rng, order, degree=int(rng.integers(1, 3)))
        L = simple_comp_op(phi, pi, order)
        if k < count // 2:
            corpus.append((L, True))
        else:
            corpus.append((rank_one_perturbation(L, eps, seed=int(rng.integers(2**31))), False))
    return corpus
