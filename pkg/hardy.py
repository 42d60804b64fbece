"""
Truncated model of the harmonic Hardy space HH^2 and its composition operators.

A vector is a coefficient pair (a, b) standing for sum a_n z^n + conj(sum b_n z^n).
Scalars act by alpha * (a, b) = (alpha a, conj(alpha) b) so that the represented
function is multiplied by alpha. Operators act blockwise: (A + conj(B))(a, b) = (Aa, Bb).
"""
import logging
from dataclasses import dataclass
from typing import Callable, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from analytic import AnalyticFn, TaylorSeries, as_series, power_table, series_eval
from errors import OutOfDisk, PowerIterationStalled, PreconditionError, SymbolNotSelfMap, TruncationMismatch

logger = logging.getLogger(__name__)

BOUNDARY_SAMPLES = 1024
SELF_MAP_SLACK = 1e-12
ROUNDOFF_FLOOR = 1e-12
RAYLEIGH_ROUNDOFF = 8 * np.finfo(float).eps
STEADY_STEPS = 3
DEFAULT_KERNEL_POINTS = (0.0, 0.3, 0.2j, -0.25 + 0.1j, 0.15 - 0.2j)


def _frozen(values, size: Optional[int] = None) -> np.ndarray:
    arr = np.array(values, dtype=complex).reshape(-1)
    if size is not None and arr.size != size:
        raise TruncationMismatch(f"expected {size} coefficients, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("Hardy vector coefficients must be finite")
    arr.setflags(write=False)
    return arr


# ========== VECTORS ==========

@dataclass(frozen=True, eq=False)
class HardyVector:
    """Coefficient pair (a, b) of a harmonic function truncated at z^N."""

    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        a = _frozen(self.a)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", _frozen(self.b, a.size))

    @property
    def trunc_order(self) -> int:
        return self.a.size - 1

    @classmethod
    def zero(cls, order: int) -> "HardyVector":
        return cls(np.zeros(order + 1), np.zeros(order + 1))

    @classmethod
    def from_series(cls, h: AnalyticFn, g: AnalyticFn, order: int) -> "HardyVector":
        return cls(as_series(h, order).coeffs, as_series(g, order).coeffs)

    def evaluate(self, z: complex) -> complex:
        """a(z) + conj(b(z))."""
        return series_eval(TaylorSeries(self.a), z) + np.conj(series_eval(TaylorSeries(self.b), z))

    def _check(self, other: "HardyVector") -> None:
        if other.trunc_order != self.trunc_order:
            raise TruncationMismatch(
                f"truncation orders differ: {self.trunc_order} vs {other.trunc_order}"
            )

    def __add__(self, other: "HardyVector") -> "HardyVector":
        self._check(other)
        return HardyVector(self.a + other.a, self.b + other.b)

    def __sub__(self, other: "HardyVector") -> "HardyVector":
        self._check(other)
        return HardyVector(self.a - other.a, self.b - other.b)

    def __neg__(self) -> "HardyVector":
        return HardyVector(-self.a, -self.b)

    def __mul__(self, alpha) -> "HardyVector":
        if not np.isscalar(alpha):
            return NotImplemented
        alpha = complex(alpha)
        return HardyVector(alpha * self.a, alpha.conjugate() * self.b)

    __rmul__ = __mul__

    def allclose(self, other: "HardyVector", tol: float = 1e-12) -> bool:
        self._check(other)
        return bool(np.max(np.abs(np.concatenate([self.a - other.a, self.b - other.b]))) <= tol)

    def __repr__(self) -> str:
        return f"HardyVector(N={self.trunc_order})"


@dataclass(frozen=True, eq=False)
class KernelVector(HardyVector):
    """Truncated reproducing kernel at lam: a_n = b_n = conj(lam)^n."""

    lam: complex = 0j


def basis_vector_e(n: int, order: int) -> HardyVector:
    """e_n = z^n."""
    a = np.zeros(order + 1, dtype=complex)
    a[n] = 1.0
    return HardyVector(a, np.zeros(order + 1))


def basis_vector_f(n: int, order: int) -> HardyVector:
    """f_n = conj(z^n)."""
    b = np.zeros(order + 1, dtype=complex)
    b[n] = 1.0
    return HardyVector(np.zeros(order + 1), b)


def hh_inner(u: HardyVector, v: HardyVector) -> complex:
    """
    (u, v) = sum a_n conj(c_n) + sum d_n conj(b_n) for u = (a, b), v = (c, d).

    Linear in u under the pair scalar rule, conjugate symmetric.
    """
    u._check(v)
    return complex(np.vdot(v.a, u.a) + np.vdot(u.b, v.b))


def hh_norm(u: HardyVector) -> float:
    """
    Norm induced by the pair inner product.

    Args:
        u: Vector l + conj(m)

    Returns:
        sqrt(||l||^2 + ||m||^2); rounding below zero is clamped
    """
    return float(np.sqrt(max(hh_inner(u, u).real, 0.0)))


def hh_product(u: HardyVector, v: HardyVector) -> HardyVector:
    """(l + conj(m))(p + conj(q)) = lp + conj(mq), truncated at N."""
    u._check(v)
    n = u.trunc_order + 1
    return HardyVector(np.convolve(u.a, v.a)[:n], np.convolve(u.b, v.b)[:n])


def reconstruct_from_basis(u: HardyVector) -> HardyVector:
    """sum (u, e_n) e_n + sum (u, f_n) f_n, summed with the pair scalar rule."""
    order = u.trunc_order
    total = HardyVector.zero(order)
    for n in range(order + 1):
        e, f = basis_vector_e(n, order), basis_vector_f(n, order)
        total = total + hh_inner(u, e) * e + hh_inner(u, f) * f
    return total


def kernel_vector(lam: complex, order: int) -> KernelVector:
    """
    Raises:
        OutOfDisk: |lam| >= 1
    """
    lam = complex(lam)
    if abs(lam) >= 1.0:
        raise OutOfDisk(f"kernel point must lie in the unit disk, got |lambda| = {abs(lam):.6g}")
    coeffs = np.conj(lam) ** np.arange(order + 1)
    return KernelVector(coeffs, coeffs, lam=lam)


def fit_kernel_parameter(coeffs: np.ndarray) -> Tuple[complex, float]:
    """
    Best kernel point for a coefficient sequence and the remaining misfit.

    The point is read from the first two coefficients (conj(mu) = c_1 / c_0 for
    a kernel, c_0 = 1); the misfit is the largest deviation from conj(mu)^n.
    """
    coeffs = np.asarray(coeffs, dtype=complex)
    mu = np.conj(coeffs[1]) if coeffs.size > 1 else 0j
    ideal = np.conj(mu) ** np.arange(coeffs.size)
    return complex(mu), float(np.max(np.abs(coeffs - ideal)))


# ========== OPERATORS ==========

@dataclass(frozen=True, eq=False)
class BlockOperator:
    """A + conj(B) acting by (a, b) -> (Aa, Bb)."""

    A: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        A = np.array(self.A, dtype=complex)
        B = np.array(self.B, dtype=complex)
        if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape != B.shape:
            raise TruncationMismatch(f"blocks must be equal square matrices, got {A.shape} and {B.shape}")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(B))):
            raise ValueError("operator entries must be finite")
        A.setflags(write=False)
        B.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)

    @property
    def trunc_order(self) -> int:
        return self.A.shape[0] - 1

    @classmethod
    def identity(cls, order: int) -> "BlockOperator":
        return cls(np.eye(order + 1), np.eye(order + 1))

    def __call__(self, u: HardyVector) -> HardyVector:
        return op_apply(self, u)

    def __repr__(self) -> str:
        return f"BlockOperator(N={self.trunc_order})"


def _same_order(*items) -> None:
    orders = {item.trunc_order for item in items}
    if len(orders) > 1:
        raise TruncationMismatch(f"truncation orders differ: {sorted(orders)}")


def op_apply(L: BlockOperator, u: HardyVector) -> HardyVector:
    """
    Apply A + conj(B) to l + conj(m).

    Args:
        L: Block operator of order N
        u: Vector of the same order

    Returns:
        A l + conj(B m)

    Raises:
        TruncationMismatch: the truncation orders differ
    """
    _same_order(L, u)
    return HardyVector(L.A @ u.a, L.B @ u.b)


def op_compose(L1: BlockOperator, L2: BlockOperator) -> BlockOperator:
    """(A1 + conj(B1))(A2 + conj(B2)) = A1 A2 + conj(B1 B2)."""
    _same_order(L1, L2)
    return BlockOperator(L1.A @ L2.A, L1.B @ L2.B)


def op_add(L1: BlockOperator, L2: BlockOperator) -> BlockOperator:
    """
    Blockwise sum.

    Args:
        L1: First operator
        L2: Second operator of the same order

    Returns:
        (A1 + A2) + conj(B1 + B2)
    """
    _same_order(L1, L2)
    return BlockOperator(L1.A + L2.A, L1.B + L2.B)


def op_scale(L: BlockOperator, lam: complex) -> BlockOperator:
    """lam (A + conj(B)) = lam A + conj(conj(lam) B)."""
    lam = complex(lam)
    return BlockOperator(lam * L.A, lam.conjugate() * L.B)


def op_adjoint(L: BlockOperator) -> BlockOperator:
    """Adjoint for the pair inner product: A* + conj(B*)."""
    return BlockOperator(L.A.conj().T, L.B.conj().T)


# ========== COMPOSITION OPERATORS ==========

def certify_self_map(phi: AnalyticFn, samples: int = BOUNDARY_SAMPLES) -> float:
    """max |phi| over `samples` equally spaced points of the unit circle."""
    t = 2 * np.pi * np.arange(samples) / samples
    values = as_series(phi, phi.trunc_order if isinstance(phi, TaylorSeries) else 32)(np.exp(1j * t))
    return float(np.max(np.abs(values)))


def comp_op_matrix(phi: AnalyticFn, order: int) -> np.ndarray:
    """
    Matrix of C_phi in the monomial basis: column n holds phi^n truncated at N.

    Raises:
        SymbolNotSelfMap: a polynomial symbol exceeds 1 on the unit circle
    """
    series = as_series(phi, phi.trunc_order if isinstance(phi, TaylorSeries) else order)
    peak = certify_self_map(series)
    if series.polynomial:
        if peak > 1.0 + SELF_MAP_SLACK:
            raise SymbolNotSelfMap(f"symbol reaches |phi| = {peak:.6g} on the unit circle")
    else:
        logger.warning("⚠️  symbol is not a polynomial; self-map property is not certified")
    return power_table(series, order)


def general_comp_op(
    phi: AnalyticFn,
    pi: AnalyticFn,
    alpha: complex,
    beta: complex,
    gamma: complex,
    delta: complex,
    order: int,
) -> BlockOperator:
    """
    Four-parameter composition operator with symbol phi + conj(pi).

    A = alpha M_phi + gamma M_pi, B = conj(beta) M_pi + conj(delta) M_phi.
    """
    m_phi = comp_op_matrix(phi, order)
    m_pi = comp_op_matrix(pi, order)
    A = complex(alpha) * m_phi + complex(gamma) * m_pi
    B = np.conj(complex(beta)) * m_pi + np.conj(complex(delta)) * m_phi
    return BlockOperator(A, B)


def simple_comp_op(phi: AnalyticFn, pi: AnalyticFn, order: int) -> BlockOperator:
    """C_{phi + conj(pi)} = C_phi + conj(C_pi)."""
    return general_comp_op(phi, pi, 1, 1, 0, 0, order)


# ========== NORMS ==========

def spectral_norm(
    M: np.ndarray, tol: float = 1e-10, max_iter: int = 10_000, seed: int = 0
) -> float:
    """
    Largest singular value by power iteration on M^H M.

    The Rayleigh quotient rho_n of the iterates increases geometrically
    towards sigma_max^2. The loop stops once the extrapolated remaining
    increase delta_n * q / (1 - q), q = delta_n / delta_{n-1}, stays below
    tol * rho for STEADY_STEPS consecutive steps, or once rho stops moving
    at rounding level.

    Args:
        M: Square or rectangular complex matrix
        tol: Relative tolerance on sigma_max^2
        max_iter: Iteration cap
        seed: Seed of the random start vector

    Returns:
        sigma_max(M)

    Raises:
        PowerIterationStalled: the Rayleigh quotient did not settle within max_iter
    """
    if not np.any(M):
        return 0.0
    gram = M.conj().T @ M
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(M.shape[1]) + 1j * rng.standard_normal(M.shape[1])
    v /= np.linalg.norm(v)
    rho_prev: Optional[float] = None
    delta_prev: Optional[float] = None
    steady = 0
    for i in range(max_iter):
        w = gram @ v
        size = float(np.linalg.norm(w))
        if size == 0.0:
            return 0.0
        rho = float(np.real(np.vdot(v, w)))
        v = w / size
        if rho_prev is not None:
            delta = rho - rho_prev
            if delta <= RAYLEIGH_ROUNDOFF * rho:
                logger.debug("power iteration reached rounding level after %d steps", i + 1)
                return float(np.sqrt(rho))
            if delta_prev is not None and delta < delta_prev:
                q = delta / delta_prev
                steady = steady + 1 if delta * q / (1.0 - q) <= tol * rho else 0
                if steady >= STEADY_STEPS:
                    logger.debug("power iteration settled after %d steps", i + 1)
                    return float(np.sqrt(rho))
            else:
                steady = 0
            delta_prev = delta
        rho_prev = rho
    raise PowerIterationStalled(f"power iteration did not settle in {max_iter} steps")


def op_norm(L: BlockOperator, tol: float = 1e-10, max_iter: int = 10_000, seed: int = 0) -> float:
    """||A + conj(B)|| = max(sigma_max(A), sigma_max(B))."""
    return max(spectral_norm(L.A, tol, max_iter, seed), spectral_norm(L.B, tol, max_iter, seed))


def brute_force_norm(L: BlockOperator, trials: int = 10_000, seed: int = 0) -> float:
    """max ||Lu|| / ||u|| over random unit vectors (a lower bound of op_norm)."""
    rng = np.random.default_rng(seed)
    n = L.trunc_order + 1
    a = rng.standard_normal((trials, n)) + 1j * rng.standard_normal((trials, n))
    b = rng.standard_normal((trials, n)) + 1j * rng.standard_normal((trials, n))
    scale = np.sqrt(np.sum(np.abs(a) ** 2, axis=1) + np.sum(np.abs(b) ** 2, axis=1))
    image = np.sum(np.abs(a @ L.A.T) ** 2, axis=1) + np.sum(np.abs(b @ L.B.T) ** 2, axis=1)
    return float(np.max(np.sqrt(image) / scale))


def norm_bound_simple(phi: AnalyticFn) -> float:
    """
    sqrt((1 + |phi(0)|) / (1 - |phi(0)|)), equal to 1 when phi(0) = 0.

    Raises:
        OutOfDisk: |phi(0)| >= 1
    """
    c = abs(complex(as_series(phi, 1).coefficient(0)))
    if c >= 1.0:
        raise OutOfDisk(f"|phi(0)| = {c:.6g} is not inside the unit disk")
    return float(np.sqrt((1.0 + c) / (1.0 - c)))


def general_norm_bound(
    phi: AnalyticFn, pi: AnalyticFn, alpha: complex, beta: complex, gamma: complex, delta: complex
) -> Tuple[float, float]:
    """
    Bounds on ||A|| and ||B|| of the four-parameter operator by the triangle inequality.

    Returns:
        (|alpha| b_phi + |gamma| b_pi, |beta| b_pi + |delta| b_phi) with b the simple bounds
    """
    b_phi = norm_bound_simple(phi)
    b_pi = norm_bound_simple(pi)
    return (
        abs(alpha) * b_phi + abs(gamma) * b_pi,
        abs(beta) * b_pi + abs(delta) * b_phi,
    )


# ========== KERNELS AND ADJOINTS ==========

@dataclass(frozen=True)
class KernelImage:
    """Adjoint image of a kernel next to the kernel pair it should equal."""

    actual: HardyVector
    predicted: HardyVector
    tolerance: float
    misfit: float

    @property
    def ok(self) -> bool:
        return self.misfit <= self.tolerance


def adjoint_kernel_image(phi: AnalyticFn, pi: AnalyticFn, lam: complex, order: int) -> KernelImage:
    """
    Compare C*_{phi + conj(pi)} K_lam with K_{phi(lam)} paired with K_{pi(lam)}.

    The tolerance is the kernel tail max(|phi(lam)|, |pi(lam)|)^{N+1} / sqrt(1 - max^2)
    plus a roundoff floor.
    """
    kernel = kernel_vector(lam, order)
    L = simple_comp_op(phi, pi, order)
    actual = op_apply(op_adjoint(L), kernel)
    phi_lam = complex(as_series(phi, order)(complex(lam)))
    pi_lam = complex(as_series(pi, order)(complex(lam)))
    k_phi = kernel_vector(phi_lam, order)
    k_pi = kernel_vector(pi_lam, order)
    predicted = HardyVector(k_phi.a, k_pi.b)
    peak = max(abs(phi_lam), abs(pi_lam))
    tolerance = peak ** (order + 1) / np.sqrt(1.0 - peak ** 2) + ROUNDOFF_FLOOR
    return KernelImage(actual, predicted, float(tolerance), hh_norm(actual - predicted))


# ========== CHARACTERIZATIONS ==========

def is_simple_composition(
    L: BlockOperator, tol: float = 1e-9, degree_budget: Optional[int] = None
) -> Optional[Tuple[TaylorSeries, TaylorSeries]]:
    """
    Recover (phi, pi) when L = C_phi + conj(C_pi).

    phi is column 1 of A and pi column 1 of B; every column n with
    n * deg <= degree_budget (all columns by default) must equal the n-th
    truncated power, which is exact coefficientwise at any N.

    Returns:
        (phi, pi) on success, None otherwise
    """
    order = L.trunc_order
    if order < 1:
        return None
    symbols = []
    for block in (L.A, L.B):
        symbol = TaylorSeries(block[:, 1])
        powers = power_table(symbol, order)
        deg = max(symbol.degree(), 1)
        columns = [n for n in range(order + 1) if degree_budget is None or n * deg <= degree_budget]
        if float(np.max(np.abs(block[:, columns] - powers[:, columns]))) > tol:
            return None
        symbols.append(symbol)
    return symbols[0], symbols[1]


def monomial_sample_pairs(order: int, max_degree: Optional[int] = None) -> List[Tuple[HardyVector, HardyVector]]:
    """Pairs (z^i + conj(z^i), z^j + conj(z^j)) with i + j <= max_degree (N by default)."""
    top = order if max_degree is None else min(max_degree, order)
    pairs = []
    for i in range(top + 1):
        u = basis_vector_e(i, order) + basis_vector_f(i, order)
        for j in range(i, top + 1 - i):
            pairs.append((u, basis_vector_e(j, order) + basis_vector_f(j, order)))
    return pairs


def multiplicativity_residual(
    L: BlockOperator, sample_pairs: Optional[Iterable[Tuple[HardyVector, HardyVector]]] = None
) -> float:
    """max ||L(uv) - L(u)L(v)|| over the sample pairs."""
    if sample_pairs is None:
        sample_pairs = monomial_sample_pairs(L.trunc_order)
    worst = 0.0
    for u, v in sample_pairs:
        lhs = op_apply(L, hh_product(u, v))
        rhs = hh_product(op_apply(L, u), op_apply(L, v))
        worst = max(worst, hh_norm(lhs - rhs))
    return worst


def multiplicativity_check(
    L: BlockOperator,
    sample_pairs: Optional[Iterable[Tuple[HardyVector, HardyVector]]] = None,
    tol: float = 1e-9,
) -> bool:
    """L(uv) = L(u) L(v) on the sample pairs (monomial pairs by default) within `tol`."""
    return multiplicativity_residual(L, sample_pairs) < tol


def kernel_mapping_misfit(L: BlockOperator, lambdas: Sequence[complex] = DEFAULT_KERNEL_POINTS) -> float:
    """Largest distance of A* K_lam and B* K_lam from the nearest kernel sequence."""
    adjoint = op_adjoint(L)
    worst = 0.0
    for lam in lambdas:
        image = op_apply(adjoint, kernel_vector(lam, L.trunc_order))
        for coeffs in (image.a, image.b):
            _, misfit = fit_kernel_parameter(coeffs)
            worst = max(worst, misfit)
    return worst


def kernel_mapping_check(
    L: BlockOperator, lambdas: Sequence[complex] = DEFAULT_KERNEL_POINTS, tol: float = 1e-9
) -> bool:
    """
    Whether the adjoint maps kernels to kernels on both sides.

    Sample points should stay small (|lam| <= 0.3) so the truncation tail of a
    genuine composition operator stays below `tol`.
    """
    return kernel_mapping_misfit(L, lambdas) < tol


def commutator_norm(L: BlockOperator) -> float:
    """max of ||AA* - A*A||_F and ||BB* - B*B||_F."""
    worst = 0.0
    for M in (L.A, L.B):
        H = M.conj().T
        worst = max(worst, float(np.linalg.norm(M @ H - H @ M, "fro")))
    return worst


def is_normal(L: BlockOperator, tol: float = 1e-12) -> bool:
    """Whether both blocks commute with their adjoints up to `tol` (Frobenius norm)."""
    return commutator_norm(L) < tol


def decompose_operator(apply: Callable[[HardyVector], HardyVector], order: int) -> BlockOperator:
    """
    Recover (A_L, B_L) from a linear map given only by its action.

    Raises:
        PreconditionError: the map moves an analytic basis vector into the
            co-analytic part or the other way round
    """
    A = np.zeros((order + 1, order + 1), dtype=complex)
    B = np.zeros((order + 1, order + 1), dtype=complex)
    for n in range(order + 1):
        image_e = apply(basis_vector_e(n, order))
        image_f = apply(basis_vector_f(n, order))
        if np.any(np.abs(image_e.b) > ROUNDOFF_FLOOR) or np.any(np.abs(image_f.a) > ROUNDOFF_FLOOR):
            raise PreconditionError(f"map mixes analytic and co-analytic parts at basis index {n}")
        A[:, n] = image_e.a
        B[:, n] = image_f.b
    return BlockOperator(A, B)


def rank_one_perturbation(L: BlockOperator, eps: float, seed: int = 0) -> BlockOperator:
    """A + eps u v^H with random unit vectors u, v; B unchanged."""
    rng = np.random.default_rng(seed)
    n = L.trunc_order + 1
    u = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    u /= np.linalg.norm(u)
    v /= np.linalg.norm(v)
    return BlockOperator(L.A + eps * np.outer(u, v.conj()), L.B)
