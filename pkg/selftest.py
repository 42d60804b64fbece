"""
Acceptance checks runnable from the command line (`selftest`).

Each check returns (passed, detail); `run_selftest` collects them into rows and
never lets one failing check stop the others.
"""
import logging
import time
from dataclasses import dataclass
from typing import Callable, List, Tuple

import numpy as np

from analytic import INFINITY, MoebiusTransform, TaylorSeries
from config import RunConfig
from corpus import (
    characterization_corpus,
    random_affine_map,
    random_affine_symbol,
    random_block_operator,
    random_boettcher_map,
    random_harmonic_polynomial,
    random_koenigs_map,
    random_mobius,
    random_quadratic_contraction,
    random_vector,
)
from dynamics import OrbitStatus, check_hfixed, fit_decay_rate, orbit_crossed, orbit_direct
from hardy import (
    BlockOperator,
    adjoint_kernel_image,
    basis_vector_e,
    basis_vector_f,
    brute_force_norm,
    commutator_norm,
    hh_inner,
    is_simple_composition,
    kernel_mapping_check,
    multiplicativity_check,
    op_adjoint,
    op_apply,
    op_norm,
    reconstruct_from_basis,
    simple_comp_op,
)
from harmonic import (
    HarmonicMap,
    compose_crossed,
    compose_direct,
    eval_composed,
    eval_harmonic,
    identity_map,
    sample_disk,
)
from linearization import boettcher_series, harmonic_boettcher, harmonic_koenigs, koenigs_series

logger = logging.getLogger(__name__)

Check = Callable[[np.random.Generator], Tuple[bool, str]]


@dataclass(frozen=True)
class SelftestRow:
    criterion: str
    passed: bool
    detail: str
    seconds: float


def _map_diff(f1: HarmonicMap, f2: HarmonicMap) -> float:
    return max(f1.h.max_coeff_diff(f2.h), f1.g.max_coeff_diff(f2.g))


# ========== COMPOSITION ==========

def check_semigroup(rng) -> Tuple[bool, str]:
    """Associativity and two-sided unit of the direct law on random polynomial maps."""
    order = 30
    worst, unit_exact = 0.0, True
    unit = identity_map(order)
    for _ in range(100):
        f1, f2, f3 = (random_harmonic_polynomial(rng, order) for _ in range(3))
        left = compose_direct(compose_direct(f1, f2), f3)
        right = compose_direct(f1, compose_direct(f2, f3))
        scale = 1.0 + max(np.max(np.abs(left.h.coeffs)), np.max(np.abs(left.g.coeffs)))
        worst = max(worst, _map_diff(left, right) / scale)
        unit_exact &= _map_diff(compose_direct(f1, unit), f1) == 0.0
        unit_exact &= _map_diff(compose_direct(unit, f1), f1) == 0.0
    return worst < 1e-10 and unit_exact, f"assoc residual {worst:.2e}, unit exact {unit_exact}"


def crossed_witness(order: int = 16) -> Tuple[HarmonicMap, HarmonicMap, HarmonicMap]:
    """Triple whose two crossed bracketings differ."""
    z = TaylorSeries.monomial(1, order)
    f1 = HarmonicMap(z * z, z)
    f2 = HarmonicMap(z, z * z)
    f3 = HarmonicMap(2.0 * z, z * z * z)
    return f1, f2, f3


def check_crossed_nonassociative(rng) -> Tuple[bool, str]:
    f1, f2, f3 = crossed_witness()
    left = compose_crossed(compose_crossed(f1, f2), f3)
    right = compose_crossed(f1, compose_crossed(f2, f3))
    gap = _map_diff(left, right)
    return gap > 1e-3, f"bracketing discrepancy {gap:.3f}"


def check_mobius_homomorphism(rng) -> Tuple[bool, str]:
    samples = sample_disk(0.9, 20, seed=int(rng.integers(2**31)))
    worst_proj, worst_point = 0.0, 0.0
    for _ in range(100):
        f1 = HarmonicMap(random_mobius(rng), random_mobius(rng))
        f2 = HarmonicMap(random_mobius(rng), random_mobius(rng))
        for law, compose_fn in (("direct", compose_direct), ("crossed", compose_crossed)):
            composite = compose_fn(f1, f2)
            inner_h, inner_g = (f2.h, f2.g) if law == "direct" else (f2.g, f2.h)
            expected_h = MoebiusTransform(f1.h.matrix @ inner_h.matrix)
            expected_g = MoebiusTransform(f1.g.matrix @ inner_g.matrix)
            if not (composite.h.projectively_equal(expected_h) and composite.g.projectively_equal(expected_g)):
                worst_proj = 1.0
            for z in samples:
                inner = (inner_h(complex(z)), inner_g(complex(z)))
                lhs = eval_harmonic(composite, complex(z))
                rhs = eval_composed(f1, f2, law, complex(z))
                # near a pole the two evaluation orders lose accuracy at different rates
                if any(w is INFINITY or abs(w) > 1e3 for w in (*inner, lhs, rhs)):
                    continue
                worst_point = max(worst_point, abs(lhs - rhs) / (1.0 + abs(lhs)))
    passed = worst_proj == 0.0 and worst_point < 1e-10
    return passed, f"pointwise relative residual {worst_point:.2e}"


# ========== DYNAMICS ==========

def check_iterate_identities(rng) -> Tuple[bool, str]:
    """
    Orbit limits are h-fixed, the crossed limit is h(omega) + conj(g(mu)),
    and crossed orbit points match f ⊚ f^{k-1,⊖} for k <= 6.
    """
    worst_fixed, worst_crossed, worst_law, converged = 0.0, 0.0, 0.0, 0
    maps = [random_affine_map(rng) for _ in range(20)] + [random_quadratic_contraction(rng, 64) for _ in range(20)]
    for f in maps:
        z0 = complex(*rng.uniform(-0.35, 0.35, 2))
        direct = orbit_direct(f, z0, n_max=2000, tol=1e-13)
        crossed = orbit_crossed(f, z0, n_max=2000, tol=1e-13)
        if direct.status is not OrbitStatus.CONVERGED or crossed.status is not OrbitStatus.CONVERGED:
            continue
        converged += 1
        mu, omega = direct.limit.mu, direct.limit.omega
        worst_fixed = max(worst_fixed, check_hfixed(f, mu, omega))
        predicted = f.h(omega) + np.conj(f.g(mu))
        worst_crossed = max(worst_crossed, abs(crossed.limit.value() - predicted))
        # crossed iterate k is f ⊚ (direct iterate k-1); degree 2^k stays within order 64 for k <= 6
        previous = identity_map(64)
        for k in range(1, min(6, crossed.steps) + 1):
            value = eval_harmonic(compose_crossed(f, previous), z0)
            worst_law = max(worst_law, abs(value - crossed.points[k]))
            previous = compose_direct(f, previous)
    passed = converged >= 20 and worst_fixed < 1e-8 and worst_crossed < 1e-8 and worst_law < 1e-10
    detail = (f"{converged} converged, fixed residual {worst_fixed:.2e}, "
              f"crossed limit {worst_crossed:.2e}, iterate law {worst_law:.2e}")
    return passed, detail


def check_attracting_rate(rng) -> Tuple[bool, str]:
    """Fitted decay rate within 5% of max(|lambda|, |theta|) on 50 affine maps."""
    worst = 0.0
    for _ in range(50):
        f = random_affine_map(rng)
        lam, theta = f.h.coefficient(1), f.g.coefficient(1)
        mu = f.h.coefficient(0) / (1 - lam)
        omega = f.g.coefficient(0) / (1 - theta)
        # start on the fixed point of the weaker part so a single geometric term remains
        z0 = omega if abs(lam) >= abs(theta) else mu
        orbit = orbit_direct(f, z0, n_max=1000, tol=1e-13)
        limit = mu + np.conj(omega)
        expected = max(abs(lam), abs(theta))
        rate = fit_decay_rate(orbit, limit, floor=1e-11, skip=1)
        worst = max(worst, abs(rate - expected) / expected)
    return worst < 0.05, f"largest relative rate error {worst:.3%}"


# ========== LINEARIZATION ==========

def check_koenigs(rng) -> Tuple[bool, str]:
    order = 20
    worst, worst_point = 0.0, 0.0
    circle = 0.2 * np.exp(2j * np.pi * np.arange(32) / 32)
    for _ in range(50):
        f = random_koenigs_map(rng, order)
        result = harmonic_koenigs(f, order)
        worst = max(worst, result.residual)
        for phi, part, mult in ((result.phi.h, f.h, result.lambda_), (result.phi.g, f.g, result.theta)):
            gap = np.abs(phi(part(circle)) - mult * phi(circle))
            worst_point = max(worst_point, float(np.max(gap)))
    z = TaylorSeries.monomial(1, order)
    c2 = koenigs_series(0.5 * z + 0.5 * z * z, order).coefficient(2)
    passed = worst < 1e-9 and worst_point < 1e-8 and abs(c2 - 2.0) < 1e-12
    return passed, f"coefficient residual {worst:.2e}, pointwise {worst_point:.2e}, c2 = {c2.real:.12g}"


def check_boettcher(rng) -> Tuple[bool, str]:
    order = 16
    worst = 0.0
    for _ in range(50):
        worst = max(worst, harmonic_boettcher(random_boettcher_map(rng, order), order).residual)
    z = TaylorSeries.monomial(1, order)
    exact = all(
        boettcher_series(TaylorSeries.monomial(p, order), order).allclose(z, 0.0) for p in (2, 3, 4)
    )
    doubled = boettcher_series(2.0 * z * z, order).allclose(2.0 * z, 1e-14)
    passed = worst < 1e-9 and exact and doubled
    return passed, f"residual {worst:.2e}, z^p exact {exact}, 2z^2 -> 2z {doubled}"


# ========== HARDY SPACE ==========

def check_hardy_structure(rng) -> Tuple[bool, str]:
    order = 8
    basis = [basis_vector_e(n, order) for n in range(order + 1)] + [basis_vector_f(n, order) for n in range(order + 1)]
    gram = np.array([[hh_inner(u, v) for v in basis] for u in basis])
    orthonormal = bool(np.array_equal(gram, np.eye(len(basis))))
    worst, positive, exact = 0.0, True, True
    for _ in range(1000):
        u, v, w = (random_vector(rng, order) for _ in range(3))
        alpha = complex(*rng.standard_normal(2))
        lhs = hh_inner(alpha * u + v, w)
        rhs = alpha * hh_inner(u, w) + hh_inner(v, w)
        worst = max(worst, abs(lhs - rhs) / (1.0 + abs(lhs)))
        worst = max(worst, abs(hh_inner(u, v) - np.conj(hh_inner(v, u))))
        positive &= hh_inner(u, u).real > 0
        exact &= reconstruct_from_basis(u).allclose(u, 0.0)
    passed = orthonormal and worst < 1e-12 and positive and exact
    return passed, f"orthonormal {orthonormal}, axioms {worst:.2e}, reconstruction exact {exact}"


def check_operator_norms(rng) -> Tuple[bool, str]:
    """
    Power iteration against SVD, the random-vector lower bound, and
    ||C_phi|| = 1 for phi(z) = lambda z with |lambda| < 1.
    """
    order = 32
    worst_svd, worst_sandwich = 0.0, 0.0
    for _ in range(50):
        L = random_block_operator(rng, order)
        value = op_norm(L)
        exact = max(np.linalg.norm(L.A, 2), np.linalg.norm(L.B, 2))
        worst_svd = max(worst_svd, abs(value - exact) / exact)
        brute = brute_force_norm(L, trials=10_000, seed=int(rng.integers(2**31)))
        if brute > value + 1e-6 * exact:
            worst_sandwich = max(worst_sandwich, brute - value)
    z = TaylorSeries.monomial(1, order)
    rotation = max(
        abs(op_norm(simple_comp_op(lam * z, 0.4 * z, order)) - 1.0) for lam in (0.7j, 0.999, -0.99j)
    )
    affine = op_norm(simple_comp_op(0.5 * z + 0.3, 0.5 * z + 0.3, order))
    passed = (worst_svd < 1e-6 and worst_sandwich == 0.0
              and rotation <= 1e-10 and affine <= np.sqrt(1.3 / 0.7))
    return passed, f"svd agreement {worst_svd:.2e}, max ||C_lz|| - 1 = {rotation:.1e}, ||C_0.5z+0.3|| = {affine:.6f}"


def check_adjoint(rng) -> Tuple[bool, str]:
    worst_adj = 0.0
    for _ in range(50):
        L = random_block_operator(rng, 16)
        u, v = random_vector(rng, 16), random_vector(rng, 16)
        lhs = hh_inner(op_apply(L, u), v)
        rhs = hh_inner(u, op_apply(op_adjoint(L), v))
        worst_adj = max(worst_adj, abs(lhs - rhs) / (1.0 + abs(lhs)))
    order = 64
    all_ok, worst_misfit = True, 0.0
    for _ in range(20):
        phi, pi = random_affine_symbol(rng, order), random_affine_symbol(rng, order)
        lam = complex(rng.uniform(0.0, 0.9) * np.exp(2j * np.pi * rng.uniform()))
        image = adjoint_kernel_image(phi, pi, lam, order)
        all_ok &= image.ok
        worst_misfit = max(worst_misfit, image.misfit)
    return worst_adj < 1e-12 and all_ok, f"adjoint identity {worst_adj:.2e}, kernel misfit {worst_misfit:.2e}"


def check_characterization(rng) -> Tuple[bool, str]:
    disagreements = 0
    corpus = characterization_corpus(rng, 16)
    for L, truth in corpus:
        verdicts = (
            is_simple_composition(L) is not None,
            multiplicativity_check(L),
            kernel_mapping_check(L),
        )
        disagreements += sum(v != truth for v in verdicts)
    return disagreements == 0, f"{len(corpus)} operators, {disagreements} disagreement(s)"


def check_normality(rng) -> Tuple[bool, str]:
    order = 32
    z = TaylorSeries.monomial(1, order)
    diagonal = commutator_norm(simple_comp_op(0.7 * z, (0.2 + 0.1j) * z, order))
    shifted = commutator_norm(simple_comp_op(0.5 * z + 0.3, 0.5 * z + 0.3, order))
    unitary = commutator_norm(BlockOperator(np.diag(np.exp(1j * np.arange(order + 1))), np.eye(order + 1)))
    passed = diagonal < 1e-12 and unitary < 1e-12 and shifted > 1e-2
    return passed, f"lambda z: {diagonal:.1e}, 0.5z+0.3: {shifted:.3f}"


# ========== COMMAND LINE ==========

def check_cli_determinism(rng) -> Tuple[bool, str]:
    """Same arguments, same bytes."""
    import main

    commands = [
        ["iterate", "direct", "0.5*z+conj(0.25*z)", "1", "10"],
        ["compose", "--law", "crossed", "z^2+conj(z)", "z+conj(z^3)"],
        ["--n-max", "60", "basin", "0.5*z+conj(0.25*z)", "--grid", "12", "9"],
        ["op", "norm", "--phi", "0.7*z", "--pi", "0.2*z"],
    ]
    for argv in commands:
        if main.execute(argv) != main.execute(argv):
            return False, f"artifacts differ for {' '.join(argv)}"
    return True, f"{len(commands)} commands byte-identical"


CHECKS: List[Tuple[str, Check]] = [
    ("1 direct semigroup", check_semigroup),
    ("2 crossed non-associativity", check_crossed_nonassociative),
    ("3 Möbius homomorphism", check_mobius_homomorphism),
    ("4 iterate identities", check_iterate_identities),
    ("5 attracting rate", check_attracting_rate),
    ("6 Koenigs", check_koenigs),
    ("7 Boettcher", check_boettcher),
    ("8 HH^2 structure", check_hardy_structure),
    ("9 operator norms", check_operator_norms),
    ("10 adjoint and kernels", check_adjoint),
    ("11 characterization triad", check_characterization),
    ("12 normality", check_normality),
    ("13 CLI determinism", check_cli_determinism),
]


def run_selftest(config: RunConfig) -> List[SelftestRow]:
    """Run every check with a generator seeded from config.seed (one stream per check)."""
    rows = []
    for index, (name, check) in enumerate(CHECKS):
        rng = np.random.default_rng([config.seed, index])
        start = time.perf_counter()
        try:
            passed, detail = check(rng)
        except Exception as e:
            logger.exception(f"❌ {name} raised")
            passed, detail = False, f"{type(e).__name__}: {e}"
        elapsed = time.perf_counter() - start
        logger.info(f"{'✅' if passed else '❌'} {name} ({elapsed:.1f}s)")
        rows.append(SelftestRow(name, bool(passed), detail, elapsed))
    return rows


def format_table(rows: List[SelftestRow]) -> str:
    """Plain-text table with one PASS/FAIL line per row and a passed count."""
    width = max(len(row.criterion) for row in rows)
    lines = [f"{'criterion'.ljust(width)}  verdict  detail", "-" * (width + 40)]
    for row in rows:
        verdict = "PASS" if row.passed else "FAIL"
        lines.append(f"{row.criterion.ljust(width)}  {verdict:<7}  {row.detail}")
    passed = sum(row.passed for row in rows)
    lines.append(f"{passed}/{len(rows)} passed")
    return "\n".join(lines) + "\n"
