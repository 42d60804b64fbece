"""
Analytic function representations.

Two carriers are supported: truncated power series (`TaylorSeries`) and
Möbius maps (`MoebiusTransform`). Every series operation closes over a fixed
truncation order N chosen by the caller; coefficients beyond N are dropped
silently and the `polynomial` flag records whether anything was lost.
"""
import cmath
import logging
from dataclasses import dataclass
from typing import List, Sequence, Union

import numpy as np

from errors import (
    DegenerateMatrix,
    IdentityTransform,
    NotInvertible,
    NotNormalized,
    RepresentationMismatch,
)

logger = logging.getLogger(__name__)

DET_THRESHOLD = 1e-14
PROJECTIVE_TOL = 1e-12
ZERO_TOL = 1e-14


class PointAtInfinity:
    """Singleton sentinel for the point at infinity of the Riemann sphere."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "INFINITY"

    def __str__(self) -> str:
        return "∞"

    def __reduce__(self):
        return (PointAtInfinity, ())


INFINITY = PointAtInfinity()
ExtendedComplex = Union[complex, PointAtInfinity]


def is_infinite(z) -> bool:
    """True for the point-at-infinity sentinel."""
    return z is INFINITY


def _truncated_product(a: np.ndarray, b: np.ndarray, order: int) -> np.ndarray:
    out = np.zeros(order + 1, dtype=complex)
    full = np.convolve(a[: order + 1], b[: order + 1])
    k = min(full.size, order + 1)
    out[:k] = full[:k]
    return out


# ========== TAYLOR SERIES ==========

@dataclass(frozen=True, eq=False)
class TaylorSeries:
    """
    Truncated complex power series c_0 + c_1 z + ... + c_N z^N.

    `polynomial` stays True while the coefficients describe an exact
    polynomial; operations that had to drop nonzero terms clear it.
    """

    coeffs: np.ndarray
    polynomial: bool = True

    def __post_init__(self):
        arr = np.array(self.coeffs, dtype=complex).reshape(-1)
        if arr.size == 0:
            raise ValueError("a series needs at least the constant coefficient")
        if not np.all(np.isfinite(arr)):
            raise ValueError("series coefficients must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "coeffs", arr)

    @property
    def trunc_order(self) -> int:
        return self.coeffs.size - 1

    # ---------- constructors ----------

    @classmethod
    def from_coeffs(cls, coeffs: Sequence[complex], order: int) -> "TaylorSeries":
        """
        Build a series of the given order, padding with zeros or truncating.

        Args:
            coeffs: Coefficients c_0, c_1, ... (any length)
            order: Truncation order N

        Returns:
            TaylorSeries with N+1 coefficients
        """
        if order < 0:
            raise ValueError("truncation order must be nonnegative")
        source = np.asarray(coeffs, dtype=complex).reshape(-1)
        arr = np.zeros(order + 1, dtype=complex)
        k = min(source.size, order + 1)
        arr[:k] = source[:k]
        dropped = bool(np.any(source[k:] != 0))
        return cls(arr, polynomial=not dropped)

    @classmethod
    def zero(cls, order: int) -> "TaylorSeries":
        return cls(np.zeros(order + 1, dtype=complex))

    @classmethod
    def constant(cls, value: complex, order: int) -> "TaylorSeries":
        return cls.from_coeffs([value], order)

    @classmethod
    def monomial(cls, k: int, order: int, coeff: complex = 1.0) -> "TaylorSeries":
        """coeff * z^k truncated at `order` (zero series if k > order)."""
        arr = np.zeros(order + 1, dtype=complex)
        if k <= order:
            arr[k] = coeff
        return cls(arr, polynomial=k <= order or coeff == 0)

    @classmethod
    def identity(cls, order: int) -> "TaylorSeries":
        return cls.monomial(1, max(order, 1))

    # ---------- inspection ----------

    def degree(self, tol: float = ZERO_TOL) -> int:
        """Index of the highest coefficient above `tol` (0 for the zero series)."""
        nonzero = np.nonzero(np.abs(self.coeffs) > tol)[0]
        return int(nonzero[-1]) if nonzero.size else 0

    def is_zero(self, tol: float = 0.0) -> bool:
        return not bool(np.any(np.abs(self.coeffs) > tol))

    def coefficient(self, n: int) -> complex:
        return complex(self.coeffs[n]) if 0 <= n <= self.trunc_order else 0j

    def with_order(self, order: int) -> "TaylorSeries":
        """Same series re-truncated (or zero padded) at a new order."""
        result = TaylorSeries.from_coeffs(self.coeffs, order)
        return TaylorSeries(result.coeffs, self.polynomial and result.polynomial)

    def max_coeff_diff(self, other: "TaylorSeries") -> float:
        """Largest coefficient discrepancy, comparing missing coefficients with zero."""
        n = max(self.trunc_order, other.trunc_order) + 1
        a = np.zeros(n, dtype=complex)
        b = np.zeros(n, dtype=complex)
        a[: self.coeffs.size] = self.coeffs
        b[: other.coeffs.size] = other.coeffs
        return float(np.max(np.abs(a - b)))

    def allclose(self, other: "TaylorSeries", tol: float = 1e-12) -> bool:
        return self.max_coeff_diff(other) <= tol

    def __call__(self, z):
        return series_eval(self, z)

    def __repr__(self) -> str:
        return f"TaylorSeries(N={self.trunc_order}, coeffs={np.round(self.coeffs, 12).tolist()})"

    # ---------- arithmetic ----------

    def _combine(self, other: "TaylorSeries", sign: float) -> "TaylorSeries":
        order = min(self.trunc_order, other.trunc_order)
        lhs, rhs = self.with_order(order), other.with_order(order)
        return TaylorSeries(lhs.coeffs + sign * rhs.coeffs, lhs.polynomial and rhs.polynomial)

    def __add__(self, other):
        if isinstance(other, TaylorSeries):
            return self._combine(other, 1.0)
        if np.isscalar(other):
            arr = self.coeffs.copy()
            arr[0] += other
            return TaylorSeries(arr, self.polynomial)
        return NotImplemented

    __radd__ = __add__

    def __neg__(self):
        return TaylorSeries(-self.coeffs, self.polynomial)

    def __sub__(self, other):
        if isinstance(other, TaylorSeries):
            return self._combine(other, -1.0)
        if np.isscalar(other):
            return self + (-other)
        return NotImplemented

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, TaylorSeries):
            order = min(self.trunc_order, other.trunc_order)
            exact = (
                self.polynomial
                and other.polynomial
                and self.degree() + other.degree() <= order
            )
            return TaylorSeries(_truncated_product(self.coeffs, other.coeffs, order), exact)
        if np.isscalar(other):
            return TaylorSeries(self.coeffs * other, self.polynomial)
        return NotImplemented

    __rmul__ = __mul__


def series_eval(f: TaylorSeries, z):
    """
    Horner evaluation of sum c_n z^n.

    Args:
        f: Series to evaluate
        z: Complex scalar or numpy array of points

    Returns:
        complex for scalar input, complex array otherwise
    """
    scalar = np.ndim(z) == 0
    acc = 0j if scalar else np.zeros(np.shape(z), dtype=complex)
    for c in f.coeffs[::-1]:
        acc = acc * z + c
    return complex(acc) if scalar else acc


def series_compose(outer: TaylorSeries, inner: TaylorSeries) -> TaylorSeries:
    """
    Coefficients of outer(inner(z)) through z^N, N = min of the two orders.

    Horner on series: every coefficient of `outer` is folded in, so a nonzero
    inner constant term is handled correctly. The result is exact when both
    are polynomials and deg(outer) * deg(inner) <= N.
    """
    order = min(outer.trunc_order, inner.trunc_order)
    inner_c = inner.coeffs[: order + 1]
    acc = np.zeros(order + 1, dtype=complex)
    for c in outer.coeffs[::-1]:
        acc = _truncated_product(acc, inner_c, order)
        acc[0] += c
    exact = (
        outer.polynomial
        and inner.polynomial
        and outer.degree() * inner.degree() <= order
    )
    return TaylorSeries(acc, exact)


def series_derivative(f: TaylorSeries) -> TaylorSeries:
    """Formal derivative; a series of order N becomes one of order N-1."""
    if f.trunc_order == 0:
        return TaylorSeries.zero(0)
    n = np.arange(1, f.trunc_order + 1)
    return TaylorSeries(f.coeffs[1:] * n, f.polynomial)


def series_pow(f: TaylorSeries, k: int) -> TaylorSeries:
    """Truncated k-th power by repeated squaring (f^0 = 1)."""
    if k < 0:
        raise ValueError("exponent must be nonnegative")
    order = f.trunc_order
    result = np.zeros(order + 1, dtype=complex)
    result[0] = 1.0
    base = f.coeffs.copy()
    e = k
    while e:
        if e & 1:
            result = _truncated_product(result, base, order)
        e >>= 1
        if e:
            base = _truncated_product(base, base, order)
    exact = f.polynomial and k * f.degree() <= order
    return TaylorSeries(result, exact)


def series_invert(f: TaylorSeries, order: int = None) -> TaylorSeries:
    """
    Compositional inverse g with f(g(z)) = z + O(z^{N+1}).

    Coefficients are solved one order at a time: the z^n coefficient of
    f(g) depends on g_n only through c_1 * g_n.

    Args:
        f: Series with f(0) = 0 and f'(0) != 0
        order: Truncation order of the result (defaults to f's order)

    Returns:
        The inverse series

    Raises:
        NotNormalized: f(0) != 0
        NotInvertible: f'(0) is (numerically) zero
    """
    order = f.trunc_order if order is None else order
    order = max(order, 1)
    fn = f.with_order(order)
    c = fn.coeffs
    if abs(c[0]) > ZERO_TOL:
        raise NotNormalized(f"series inversion needs f(0) = 0, got {c[0]}")
    if abs(c[1]) <= 1e-12:
        raise NotInvertible("series inversion needs f'(0) != 0")
    g = np.zeros(order + 1, dtype=complex)
    g[1] = 1.0 / c[1]
    for n in range(2, order + 1):
        composed = series_compose(fn, TaylorSeries(g)).coeffs
        g[n] = -composed[n] / c[1]
    return TaylorSeries(g, polynomial=fn.polynomial and fn.degree() <= 1)


def power_table(f: TaylorSeries, order: int) -> np.ndarray:
    """
    Matrix whose column m holds the coefficients of f^m truncated at `order`.

    The first order+1 coefficients of f^m depend only on the first order+1
    coefficients of f, so the table is exact coefficientwise.
    """
    base = f.with_order(order).coeffs
    table = np.zeros((order + 1, order + 1), dtype=complex)
    column = np.zeros(order + 1, dtype=complex)
    column[0] = 1.0
    for m in range(order + 1):
        table[:, m] = column
        column = _truncated_product(column, base, order)
    return table


# ========== MÖBIUS TRANSFORMS ==========

@dataclass(frozen=True, eq=False)
class MoebiusTransform:
    """z -> (az + b) / (cz + d) with projective matrix semantics."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex).reshape(2, 2)
        if not np.all(np.isfinite(m)):
            raise DegenerateMatrix("Möbius matrix entries must be finite")
        scale = float(np.max(np.abs(m)))
        if scale == 0.0 or abs(np.linalg.det(m / scale)) <= DET_THRESHOLD:
            raise DegenerateMatrix(f"Möbius matrix is singular: {m.tolist()}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def from_entries(cls, a: complex, b: complex, c: complex, d: complex) -> "MoebiusTransform":
        return cls(np.array([[a, b], [c, d]], dtype=complex))

    @classmethod
    def identity(cls) -> "MoebiusTransform":
        return cls(np.eye(2, dtype=complex))

    @property
    def a(self) -> complex:
        return complex(self.matrix[0, 0])

    @property
    def b(self) -> complex:
        return complex(self.matrix[0, 1])

    @property
    def c(self) -> complex:
        return complex(self.matrix[1, 0])

    @property
    def d(self) -> complex:
        return complex(self.matrix[1, 1])

    def normalized(self) -> np.ndarray:
        """Matrix divided by its largest-modulus entry."""
        flat = self.matrix.reshape(-1)
        return self.matrix / flat[int(np.argmax(np.abs(flat)))]

    def projectively_equal(self, other: "MoebiusTransform", tol: float = PROJECTIVE_TOL) -> bool:
        """True when other = s * self for some nonzero scalar s, up to `tol`."""
        lhs = self.matrix.reshape(-1)
        rhs = other.matrix.reshape(-1)
        k = int(np.argmax(np.abs(lhs)))
        if rhs[k] == 0:
            return False
        s = rhs[k] / lhs[k]
        return float(np.max(np.abs(rhs / s - lhs)) / np.max(np.abs(lhs))) <= tol

    def is_identity(self, tol: float = PROJECTIVE_TOL) -> bool:
        return self.projectively_equal(MoebiusTransform.identity(), tol)

    def determinant(self) -> complex:
        return complex(np.linalg.det(self.matrix))

    def __call__(self, z):
        return mobius_eval(self, z)

    def __repr__(self) -> str:
        return f"MoebiusTransform({np.round(self.matrix, 12).tolist()})"


def mobius_eval(m: MoebiusTransform, z: ExtendedComplex) -> ExtendedComplex:
    """(az + b)/(cz + d); the pole and z = ∞ follow the Riemann sphere conventions."""
    a, b, c, d = m.normalized().reshape(-1)
    if z is INFINITY:
        return INFINITY if abs(c) <= ZERO_TOL else complex(a / c)
    den = c * z + d
    if abs(den) <= ZERO_TOL * (abs(c) * abs(z) + abs(d)) or den == 0:
        return INFINITY
    return complex((a * z + b) / den)


def mobius_eval_array(m: MoebiusTransform, z: np.ndarray) -> np.ndarray:
    """Vectorised evaluation; poles map to complex infinity."""
    a, b, c, d = m.normalized().reshape(-1)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        den = c * z + d
        out = (a * z + b) / den
    out = np.where(den == 0, complex(np.inf, 0.0), out)
    return out


def mobius_compose(m1: MoebiusTransform, m2: MoebiusTransform) -> MoebiusTransform:
    """T_{M1} ∘ T_{M2} = T_{M1 M2}."""
    return MoebiusTransform(m1.matrix @ m2.matrix)


def mobius_inverse(m: MoebiusTransform) -> MoebiusTransform:
    """Inverse via the adjugate (d, -b; -c, a)."""
    return MoebiusTransform.from_entries(m.d, -m.b, -m.c, m.a)


def mobius_derivative(m: MoebiusTransform, z: complex) -> ExtendedComplex:
    """(ad - bc) / (cz + d)^2; INFINITY at the pole."""
    den = m.c * z + m.d
    if den == 0:
        return INFINITY
    return complex(m.determinant() / den ** 2)


def mobius_multiplier(m: MoebiusTransform, point: ExtendedComplex) -> ExtendedComplex:
    """
    Multiplier at a fixed point.

    At ∞ (c = 0) the chart w = 1/z turns T into w -> (d/a) w + O(w^2).
    """
    if point is INFINITY:
        n = m.normalized()
        return complex(n[1, 1] / n[0, 0])
    return mobius_derivative(m, point)


def _sort_key(z: ExtendedComplex):
    if z is INFINITY:
        return (1, 0.0, 0.0)
    return (0, round(z.real, 12), round(z.imag, 12))


def mobius_fixed_points(m: MoebiusTransform) -> List[ExtendedComplex]:
    """
    Fixed points of a Möbius map: roots of c z^2 + (d - a) z - b = 0.

    If c = 0 then ∞ is fixed, plus b/(d - a) when d != a.

    Raises:
        IdentityTransform: every point is fixed
    """
    if m.is_identity():
        raise IdentityTransform("the identity Möbius map fixes every point")
    a, b, c, d = m.normalized().reshape(-1)
    if abs(c) <= ZERO_TOL:
        points: List[ExtendedComplex] = [INFINITY]
        if abs(d - a) > ZERO_TOL:
            points.insert(0, complex(b / (d - a)))
        return points
    linear = d - a
    disc = linear * linear + 4 * b * c
    if abs(disc) <= ZERO_TOL:
        return [complex(-linear / (2 * c))]
    root = cmath.sqrt(disc)
    q = -0.5 * (linear + root) if abs(linear + root) >= abs(linear - root) else -0.5 * (linear - root)
    roots = [complex(q / c), complex(-b / q)]
    return sorted(roots, key=_sort_key)


def series_from_mobius(m: MoebiusTransform, order: int) -> TaylorSeries:
    """
    Taylor expansion of (az + b)/(cz + d) at 0 through z^order.

    Raises:
        RepresentationMismatch: 0 is a pole (d = 0)
    """
    a, b, c, d = m.normalized().reshape(-1)
    if abs(d) <= ZERO_TOL:
        raise RepresentationMismatch("Möbius map has a pole at 0 and no Taylor expansion there")
    ratio = -c / d
    geometric = (ratio ** np.arange(order + 1)) / d
    coeffs = b * geometric
    coeffs[1:] += a * geometric[:-1]
    return TaylorSeries(coeffs, polynomial=abs(c) <= ZERO_TOL)


# ========== TAGGED UNION ==========

AnalyticFn = Union[TaylorSeries, MoebiusTransform]


def analytic_eval(fn: AnalyticFn, z: ExtendedComplex) -> ExtendedComplex:
    """Evaluate either representation at a point."""
    if isinstance(fn, MoebiusTransform):
        return mobius_eval(fn, z)
    if z is INFINITY:
        return INFINITY
    return series_eval(fn, z)


def analytic_eval_array(fn: AnalyticFn, z: np.ndarray) -> np.ndarray:
    """Vectorised evaluation; poles and overflow come back as inf or nan entries."""
    if isinstance(fn, MoebiusTransform):
        return mobius_eval_array(fn, z)
    with np.errstate(over="ignore", invalid="ignore"):
        return series_eval(fn, z)


def analytic_compose(outer: AnalyticFn, inner: AnalyticFn) -> AnalyticFn:
    """
    outer ∘ inner for every supported pairing.

    Series∘Möbius expands the Möbius map at 0; Möbius∘series is refused
    because the series range cannot be certified against the pole.
    """
    if isinstance(outer, TaylorSeries) and isinstance(inner, TaylorSeries):
        return series_compose(outer, inner)
    if isinstance(outer, MoebiusTransform) and isinstance(inner, MoebiusTransform):
        return mobius_compose(outer, inner)
    if isinstance(outer, TaylorSeries):
        logger.debug("expanding Möbius inner map to order %d", outer.trunc_order)
        return series_compose(outer, series_from_mobius(inner, outer.trunc_order))
    raise RepresentationMismatch("a Möbius outer map cannot be composed with a series inner map")


def analytic_derivative_at(fn: AnalyticFn, z: complex) -> ExtendedComplex:
    """
    Derivative of either representation at one point.

    Args:
        fn: Truncated series or Möbius map
        z: Evaluation point

    Returns:
        fn'(z), or INFINITY at a Möbius pole
    """
    if isinstance(fn, MoebiusTransform):
        return mobius_derivative(fn, z)
    return series_eval(series_derivative(fn), z)


def analytic_inverse(fn: AnalyticFn, order: int = None) -> AnalyticFn:
    """
    Compositional inverse: the inverse matrix for a Möbius map, series
    reversion otherwise.

    Args:
        fn: Map to invert
        order: Truncation of the reverted series (defaults to the series order)

    Returns:
        Inverse in the same representation

    Raises:
        NotNormalized: the series has a constant term
        NotInvertible: the linear coefficient is zero
    """
    if isinstance(fn, MoebiusTransform):
        return mobius_inverse(fn)
    return series_invert(fn, order)


def as_series(fn: AnalyticFn, order: int) -> TaylorSeries:
    """Series view of either representation, truncated at `order`."""
    if isinstance(fn, MoebiusTransform):
        return series_from_mobius(fn, order)
    return fn.with_order(order)


def is_zero_fn(fn: AnalyticFn) -> bool:
    return isinstance(fn, TaylorSeries) and fn.is_zero()
