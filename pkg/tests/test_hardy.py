import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from analytic import TaylorSeries
from corpus import (
    characterization_corpus,
    random_affine_symbol,
    random_block_operator,
    random_self_map_symbol,
    random_vector,
)
from errors import OutOfDisk, PowerIterationStalled, PreconditionError, SymbolNotSelfMap, TruncationMismatch
from hardy import (
    BlockOperator,
    HardyVector,
    adjoint_kernel_image,
    basis_vector_e,
    basis_vector_f,
    brute_force_norm,
    certify_self_map,
    commutator_norm,
    comp_op_matrix,
    decompose_operator,
    fit_kernel_parameter,
    general_comp_op,
    general_norm_bound,
    hh_inner,
    hh_norm,
    hh_product,
    is_normal,
    is_simple_composition,
    kernel_mapping_check,
    kernel_vector,
    monomial_sample_pairs,
    multiplicativity_check,
    multiplicativity_residual,
    norm_bound_simple,
    op_add,
    op_adjoint,
    op_apply,
    op_compose,
    op_norm,
    op_scale,
    rank_one_perturbation,
    reconstruct_from_basis,
    simple_comp_op,
    spectral_norm,
)

seeds = st.integers(min_value=0, max_value=2**31 - 1)


def z_series(order):
    return TaylorSeries.monomial(1, order)


# ========== VECTORS ==========

def test_basis_is_orthonormal():
    order = 6
    basis = [basis_vector_e(n, order) for n in range(order + 1)]
    basis += [basis_vector_f(n, order) for n in range(order + 1)]
    gram = np.array([[hh_inner(u, v) for v in basis] for u in basis])
    assert np.array_equal(gram, np.eye(len(basis)))


@settings(max_examples=50, deadline=None)
@given(seeds, st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False))
def test_inner_product_axioms(seed, alpha):
    rng = np.random.default_rng(seed)
    u, v, w = (random_vector(rng, 8) for _ in range(3))
    lhs = hh_inner(alpha * u + v, w)
    assert abs(lhs - (alpha * hh_inner(u, w) + hh_inner(v, w))) <= 1e-12 * (1 + abs(lhs))
    assert abs(hh_inner(u, v) - np.conj(hh_inner(v, u))) <= 1e-12 * (1 + abs(hh_inner(u, v)))
    assert hh_inner(u, u).real > 0
    assert abs(hh_inner(u, u).imag) <= 1e-12 * hh_inner(u, u).real
    assert reconstruct_from_basis(u).allclose(u, 0.0)


def test_scalar_rule_multiplies_the_function():
    rng = np.random.default_rng(0)
    u = random_vector(rng, 5)
    point = 0.3 - 0.4j
    assert abs((2j * u).evaluate(point) - 2j * u.evaluate(point)) < 1e-12


def test_mismatched_orders_are_rejected():
    with pytest.raises(TruncationMismatch):
        basis_vector_e(0, 3) + basis_vector_e(0, 4)
    with pytest.raises(TruncationMismatch):
        HardyVector(np.zeros(3), np.zeros(4))


def test_product_of_harmonic_functions():
    u = HardyVector([1, 1, 0], [0, 2, 0])  # 1 + z + conj(2z)
    v = HardyVector([0, 1, 0], [0, 1, 0])  # z + conj(z)
    product = hh_product(u, v)
    assert np.allclose(product.a, [0, 1, 1])
    assert np.allclose(product.b, [0, 0, 2])


def test_kernel_reproduces_values():
    lam = 0.3 + 0.2j
    order = 60
    kernel = kernel_vector(lam, order)
    assert kernel.lam == lam
    u = HardyVector([0.5, 1, 2], [0, 1j, 0])
    u = HardyVector(np.pad(u.a, (0, order - 2)), np.pad(u.b, (0, order - 2)))
    assert abs(hh_inner(u, kernel) - u.evaluate(lam)) < 1e-12
    with pytest.raises(OutOfDisk):
        kernel_vector(1.0, 4)


def test_fit_kernel_parameter():
    mu, misfit = fit_kernel_parameter(kernel_vector(0.4j, 10).a)
    assert abs(mu - 0.4j) < 1e-15
    assert misfit < 1e-15
    _, misfit = fit_kernel_parameter(np.array([1, 0.5, 0.3, 0.0]))
    assert misfit > 0.01


# ========== OPERATORS ==========

def test_block_algebra():
    rng = np.random.default_rng(1)
    L1, L2 = random_block_operator(rng, 4), random_block_operator(rng, 4)
    u = random_vector(rng, 4)
    assert op_apply(op_compose(L1, L2), u).allclose(op_apply(L1, op_apply(L2, u)), 1e-10)
    assert op_apply(op_add(L1, L2), u).allclose(op_apply(L1, u) + op_apply(L2, u), 1e-10)
    assert op_apply(op_scale(L1, 3j), u).allclose(3j * op_apply(L1, u), 1e-10)
    assert L1(u).allclose(op_apply(L1, u), 0.0)
    with pytest.raises(TruncationMismatch):
        op_compose(L1, random_block_operator(rng, 5))
    with pytest.raises(TruncationMismatch):
        BlockOperator(np.eye(3), np.eye(4))


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_adjoint_identity(seed):
    rng = np.random.default_rng(seed)
    L = random_block_operator(rng, 10)
    u, v = random_vector(rng, 10), random_vector(rng, 10)
    lhs = hh_inner(op_apply(L, u), v)
    assert abs(lhs - hh_inner(u, op_apply(op_adjoint(L), v))) <= 1e-12 * (1 + abs(lhs))


def test_comp_op_columns_are_symbol_powers():
    order = 6
    z = z_series(order)
    phi = 0.5 * z + 0.25
    M = comp_op_matrix(phi, order)
    assert np.allclose(M[:, 0], [1, 0, 0, 0, 0, 0, 0])
    assert np.allclose(M[:, 2], [0.0625, 0.25, 0.25, 0, 0, 0, 0])


def test_composition_operator_acts_by_composition():
    order = 12
    z = z_series(order)
    phi, pi = 0.5 * z + 0.2 * z * z, 0.3j * z - 0.1
    L = simple_comp_op(phi, pi, order)
    u = HardyVector(np.pad([1, 2, 1j], (0, order - 2)), np.pad([0, 1, 0.5], (0, order - 2)))
    point = 0.2 + 0.1j
    image = op_apply(L, u)
    expected = (1 + 2 * phi(point) + 1j * phi(point) ** 2) + np.conj(pi(point) + 0.5 * pi(point) ** 2)
    assert abs(image.evaluate(point) - expected) < 1e-12


def test_symbol_must_be_a_self_map():
    z = z_series(4)
    with pytest.raises(SymbolNotSelfMap):
        comp_op_matrix(1.2 * z, 4)
    assert certify_self_map(0.5 * z + 0.25) == pytest.approx(0.75)


def test_non_polynomial_symbol_only_warns(caplog):
    z = z_series(3)
    truncated = TaylorSeries.from_coeffs([0, 0.5, 0, 0, 0.1], 3)
    assert not truncated.polynomial
    comp_op_matrix(truncated, 3)
    assert "not certified" in caplog.text


def test_general_operator_blocks():
    order = 5
    z = z_series(order)
    phi, pi = 0.5 * z, 0.25 * z
    L = general_comp_op(phi, pi, 2, 1j, 0.5, 3, order)
    M_phi, M_pi = comp_op_matrix(phi, order), comp_op_matrix(pi, order)
    assert np.allclose(L.A, 2 * M_phi + 0.5 * M_pi)
    assert np.allclose(L.B, -1j * M_pi + 3 * M_phi)


# ========== NORMS ==========

@settings(max_examples=15, deadline=None)
@given(seeds)
def test_power_iteration_matches_svd(seed):
    rng = np.random.default_rng(seed)
    L = random_block_operator(rng, 16)
    exact = max(np.linalg.norm(L.A, 2), np.linalg.norm(L.B, 2))
    value = op_norm(L)
    assert value == pytest.approx(exact, rel=1e-6)
    assert brute_force_norm(L, trials=10_000, seed=seed) <= value * (1 + 1e-6)


def test_spectral_norm_edge_cases():
    assert spectral_norm(np.zeros((3, 3))) == 0.0
    with pytest.raises(PowerIterationStalled):
        spectral_norm(np.diag([1.0, 0.999999, 0.5]), tol=0.0, max_iter=3)


def test_rotation_symbol_has_norm_one():
    order = 24
    z = z_series(order)
    assert op_norm(simple_comp_op(0.7j * z, -0.4 * z, order)) == pytest.approx(1.0, abs=1e-10)
    assert norm_bound_simple(0.7j * z) == 1.0


@pytest.mark.parametrize("lam", [0.999, 0.995j, -0.99])
def test_norm_one_for_multipliers_near_the_circle(lam):
    order = 32
    z = z_series(order)
    assert abs(op_norm(simple_comp_op(lam * z, lam * z, order)) - 1.0) <= 1e-10


def test_slow_spectral_gap_reaches_tolerance():
    M = np.diag(0.999 ** np.arange(33))
    assert abs(spectral_norm(M) - 1.0) <= 1e-10
    assert spectral_norm(3.0 * M) == pytest.approx(3.0, rel=1e-10)


def test_norm_below_classical_bound():
    order = 32
    z = z_series(order)
    phi = 0.5 * z + 0.3
    bound = norm_bound_simple(phi)
    assert bound == pytest.approx(np.sqrt(1.3 / 0.7))
    assert op_norm(simple_comp_op(phi, phi, order)) <= bound
    bound_a, bound_b = general_norm_bound(phi, 0.2 * z, 1, 2, 0.5, 0)
    assert bound_a == pytest.approx(bound + 0.5)
    assert bound_b == pytest.approx(2.0)
    with pytest.raises(OutOfDisk):
        norm_bound_simple(z + 1.0)


# ========== KERNELS ==========

@settings(max_examples=20, deadline=None)
@given(seeds, st.floats(min_value=0.0, max_value=0.9), st.floats(min_value=0.0, max_value=1.0))
def test_adjoint_maps_kernels_to_kernels(seed, radius, turn):
    rng = np.random.default_rng(seed)
    order = 64
    phi, pi = random_affine_symbol(rng, order), random_affine_symbol(rng, order)
    image = adjoint_kernel_image(phi, pi, radius * np.exp(2j * np.pi * turn), order)
    assert image.ok


def test_adjoint_kernel_for_quadratic_symbol_small_point():
    order = 40
    z = z_series(order)
    image = adjoint_kernel_image(0.5 * z * z + 0.2 * z, 0.3 * z, 0.3, order)
    assert image.ok
    assert image.misfit < 1e-10


# ========== CHARACTERIZATIONS ==========

def test_simple_composition_recovered():
    order = 10
    rng = np.random.default_rng(5)
    phi, pi = random_self_map_symbol(rng, order), random_self_map_symbol(rng, order)
    found = is_simple_composition(simple_comp_op(phi, pi, order))
    assert found is not None
    assert found[0].allclose(phi, 1e-12) and found[1].allclose(pi, 1e-12)
    assert is_simple_composition(BlockOperator.identity(order)) is not None
    assert is_simple_composition(op_scale(BlockOperator.identity(order), 2.0)) is None


def test_degree_budget_limits_checked_columns():
    order = 6
    rng = np.random.default_rng(2)
    L = simple_comp_op(random_self_map_symbol(rng, order), random_self_map_symbol(rng, order), order)
    A = np.array(L.A)
    A[:, order] += 1.0
    tampered = BlockOperator(A, L.B)
    assert is_simple_composition(tampered) is None
    assert is_simple_composition(tampered, degree_budget=4) is not None


def test_monomial_pairs_respect_degree():
    pairs = monomial_sample_pairs(6)
    assert pairs
    for u, v in pairs:
        i = int(np.nonzero(u.a)[0][0])
        j = int(np.nonzero(v.a)[0][0])
        assert i + j <= 6
    assert len(monomial_sample_pairs(6, max_degree=2)) < len(pairs)


@settings(max_examples=5, deadline=None)
@given(seeds)
def test_three_characterizations_agree(seed):
    corpus = characterization_corpus(np.random.default_rng(seed), 16, count=10)
    for L, truth in corpus:
        assert (is_simple_composition(L) is not None) == truth
        assert multiplicativity_check(L) == truth
        assert kernel_mapping_check(L) == truth


def test_multiplicativity_residual_of_identity():
    assert multiplicativity_residual(BlockOperator.identity(8)) == 0.0


def test_normality():
    order = 24
    z = z_series(order)
    assert is_normal(simple_comp_op(0.7 * z, (0.2 + 0.1j) * z, order))
    shifted = simple_comp_op(0.5 * z + 0.3, 0.5 * z + 0.3, order)
    assert not is_normal(shifted)
    assert commutator_norm(shifted) > 1e-2


def test_decompose_operator_round_trip():
    rng = np.random.default_rng(8)
    L = random_block_operator(rng, 5)
    recovered = decompose_operator(lambda u: op_apply(L, u), 5)
    assert np.array_equal(recovered.A, L.A) and np.array_equal(recovered.B, L.B)

    def mixing(u):
        return HardyVector(u.b, u.a)

    with pytest.raises(PreconditionError):
        decompose_operator(mixing, 5)


def test_rank_one_perturbation_size():
    L = BlockOperator.identity(6)
    perturbed = rank_one_perturbation(L, 1e-2, seed=4)
    assert np.linalg.norm(perturbed.A - L.A, 2) == pytest.approx(1e-2)
    assert np.array_equal(perturbed.B, L.B)
    assert hh_norm(basis_vector_e(0, 6)) == 1.0
