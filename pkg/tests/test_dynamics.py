import logging

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from analytic import INFINITY, MoebiusTransform, TaylorSeries
from corpus import random_affine_map, random_quadratic_contraction
from dynamics import (
    ESCAPE_CODE,
    FixedPointClass,
    MobiusCase,
    OrbitStatus,
    basin_render,
    check_hfixed,
    classify_mobius_harmonic,
    classify_multiplier,
    fit_decay_rate,
    induced_fixed_points,
    orbit_crossed,
    orbit_direct,
    prediction_matches,
)
from errors import IdentityTransform, RepresentationMismatch
from harmonic import HarmonicMap, compose_crossed, compose_direct, conjugate_map, eval_harmonic, identity_map

ORDER = 12


def z_series(order=ORDER):
    return TaylorSeries.monomial(1, order)


def mobius(a, b, c, d):
    return MoebiusTransform.from_entries(a, b, c, d)


def test_orbit_starts_at_unit_value():
    z = z_series()
    orbit = orbit_direct(HarmonicMap(0.5 * z, 0.5 * z), 1 + 1j, n_max=1)
    assert orbit.points[0] == 2.0
    assert orbit.steps == 1
    assert orbit.status is OrbitStatus.MAX_ITER


def test_orbit_rejects_nonpositive_cap():
    z = z_series()
    with pytest.raises(ValueError):
        orbit_direct(HarmonicMap(z, z), 0j, n_max=0)


def test_affine_orbit_converges_to_fixed_point():
    z = z_series()
    f = HarmonicMap(0.5 * z + 1.0, 0.25 * z + 1j)
    orbit = orbit_direct(f, 3 - 2j, tol=1e-12)
    assert orbit.status is OrbitStatus.CONVERGED
    assert abs(orbit.limit.mu - 2.0) < 1e-10
    assert abs(orbit.limit.omega - 4j / 3) < 1e-10
    assert check_hfixed(f, orbit.limit.mu, orbit.limit.omega) < 1e-10


def test_conjugate_map_swaps_the_limit():
    z = z_series()
    f = HarmonicMap(0.5 * z + 1.0, 0.25 * z + 1j)
    swapped = orbit_direct(conjugate_map(f), 3 - 2j, tol=1e-12)
    assert swapped.status is OrbitStatus.CONVERGED
    assert abs(swapped.limit.value() - (4j / 3 + 2.0)) < 1e-10


def test_escape_and_pole():
    z = z_series()
    escaping = orbit_direct(HarmonicMap(2.0 * z, z), 1.0, escape_radius=1e3)
    assert escaping.status is OrbitStatus.ESCAPED
    assert not escaping.at_pole

    pole = HarmonicMap(mobius(1, 0, 1, -1), mobius(1, 0, 0, 1))
    hit = orbit_direct(pole, 1.0)
    assert hit.status is OrbitStatus.ESCAPED
    assert hit.at_pole
    assert hit.steps == 0


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=0, max_value=2**31 - 1))
def test_crossed_orbit_limit_and_iterates(seed):
    rng = np.random.default_rng(seed)
    # order 64 holds the degree 2^6 crossed iterate exactly
    f = random_quadratic_contraction(rng, 64)
    z0 = complex(*rng.uniform(-0.35, 0.35, 2))
    direct = orbit_direct(f, z0, tol=1e-13, n_max=2000)
    crossed = orbit_crossed(f, z0, tol=1e-13, n_max=2000)
    assert direct.status is OrbitStatus.CONVERGED
    assert crossed.status is OrbitStatus.CONVERGED
    mu, omega = direct.limit.mu, direct.limit.omega
    assert abs(crossed.limit.value() - (f.h(omega) + np.conj(f.g(mu)))) < 1e-8

    previous = identity_map(64)
    for k in range(1, 7):
        expected = eval_harmonic(compose_crossed(f, previous), z0)
        assert abs(crossed.points[k] - expected) < 1e-10
        previous = compose_direct(f, previous)


@pytest.mark.parametrize("seed", range(8))
def test_decay_rate_of_affine_map(seed):
    f = random_affine_map(np.random.default_rng(seed))
    lam, theta = f.h.coefficient(1), f.g.coefficient(1)
    mu = f.h.coefficient(0) / (1 - lam)
    omega = f.g.coefficient(0) / (1 - theta)
    z0 = omega if abs(lam) >= abs(theta) else mu
    orbit = orbit_direct(f, z0, tol=1e-13)
    rate = fit_decay_rate(orbit, mu + np.conj(omega), floor=1e-11, skip=1)
    assert rate == pytest.approx(max(abs(lam), abs(theta)), rel=0.05)


def test_decay_rate_needs_points():
    z = z_series()
    orbit = orbit_direct(HarmonicMap(0.5 * z, 0.5 * z), 0j)
    with pytest.raises(ValueError):
        fit_decay_rate(orbit, 0j)


@pytest.mark.parametrize("m, expected", [
    (0.0, FixedPointClass.SUPERATTRACTING),
    (0.5j, FixedPointClass.ATTRACTING),
    (1.0, FixedPointClass.INDIFFERENT),
    (-1.5, FixedPointClass.REPELLING),
])
def test_classify_multiplier(m, expected):
    assert classify_multiplier(m) is expected


def test_induced_fixed_points_of_quadratic_parts():
    z = z_series()
    # h = z^2 fixes 0 (superattracting) and 1 (repelling); g = z/2 fixes 0
    f = HarmonicMap(z * z, 0.5 * z)
    records = induced_fixed_points(f)
    assert len(records) == 2
    first, second = records
    assert abs(first.mu) < 1e-10 and abs(second.mu - 1.0) < 1e-10
    assert first.classification is FixedPointClass.SUPERATTRACTING
    assert second.lambda_class is FixedPointClass.REPELLING
    assert second.classification is FixedPointClass.REPELLING
    assert all(r.residual < 1e-9 for r in records)


def test_identity_part_has_no_isolated_fixed_points():
    z = z_series()
    with pytest.raises(IdentityTransform) as info:
        induced_fixed_points(HarmonicMap(z, 0.5 * z))
    assert info.value.part == "h"


def test_truncated_series_part_warns(caplog):
    # z^4 does not fit at order 2, so h is only known up to truncation
    h = TaylorSeries.from_coeffs([0, 0.5, 0, 0, 1], 2)
    assert not h.polynomial
    with caplog.at_level(logging.WARNING, logger="dynamics"):
        records = induced_fixed_points(HarmonicMap(h, 0.25 * z_series()))
    assert len(records) == 1 and abs(records[0].mu) < 1e-12
    assert "analytic part h is a truncated series" in caplog.text
    assert "co-analytic part g" not in caplog.text


def test_polynomial_parts_do_not_warn(caplog):
    z = z_series()
    with caplog.at_level(logging.WARNING, logger="dynamics"):
        induced_fixed_points(HarmonicMap(z * z, 0.5 * z))
    assert "truncated series" not in caplog.text


def test_mobius_fixed_points_drop_infinity():
    f = HarmonicMap(mobius(0.5, 1, 0, 1), mobius(0, 1, 1, 0))
    records = induced_fixed_points(f)
    assert len(records) == 2
    assert all(abs(r.mu - 2.0) < 1e-12 for r in records)


# ========== MÖBIUS TAXONOMY ==========

def test_taxonomy_cases():
    identity = mobius(1, 0, 0, 1)
    translation = mobius(1, 1, 0, 1)
    parabolic = mobius(1, 0, 1, 1)  # z / (z + 1), double fixed point 0
    contraction = mobius(0.5, 1, 0, 1)
    cases = {
        (identity, identity): MobiusCase.UNIT,
        (translation, identity): MobiusCase.TRANSLATION,
        (parabolic, translation): MobiusCase.SINGLE_MU_INF,
        (identity, parabolic): MobiusCase.SINGLE_INF_OMEGA,
        (parabolic, parabolic): MobiusCase.SINGLE_MU_OMEGA,
        (contraction, contraction): MobiusCase.GENERAL,
    }
    for (a, b), expected in cases.items():
        assert classify_mobius_harmonic(HarmonicMap(a, b)).case_label is expected


def test_taxonomy_needs_mobius_parts():
    z = z_series()
    with pytest.raises(RepresentationMismatch):
        classify_mobius_harmonic(HarmonicMap(z, z))


def test_contraction_prediction_matches_orbit():
    a = mobius(0.5, 1, 0, 1)
    b = mobius(0.25, 1j, 0, 1)
    taxonomy = classify_mobius_harmonic(HarmonicMap(a, b))
    assert taxonomy.predicted_limit(0.3) == pytest.approx(2.0 + np.conj(4j / 3))
    orbit = orbit_direct(HarmonicMap(a, b), 0.3, tol=1e-12)
    assert prediction_matches(taxonomy, orbit)
    assert not taxonomy.all_z_convergent  # ∞ is fixed by both parts


def test_translation_prediction_is_infinity():
    r = HarmonicMap(mobius(1, 1, 0, 1), mobius(1, 0, 0, 1))
    taxonomy = classify_mobius_harmonic(r)
    assert taxonomy.predicted_limit(0j) is INFINITY
    orbit = orbit_direct(r, 0j, n_max=200)
    assert prediction_matches(taxonomy, orbit)


def test_single_fixed_point_candidates():
    taxonomy = classify_mobius_harmonic(HarmonicMap(mobius(1, 0, 1, 1), mobius(1, 1, 0, 1)))
    candidates = taxonomy.candidate_limits(0.5)
    assert candidates[0] == pytest.approx(0.5)
    assert candidates[1] is INFINITY


def polar(rng, low, high):
    return rng.uniform(low, high) * np.exp(2j * np.pi * rng.uniform())


def scaled(rng, a, b, c, d):
    s = polar(rng, 0.5, 2.0)
    return mobius(s * a, s * b, s * c, s * d)


def random_identity(rng):
    return scaled(rng, 1, 0, 0, 1)


def random_translation(rng):
    return scaled(rng, 1, polar(rng, 0.5, 2.0), 0, 1)


def random_parabolic(rng):
    # p + (z - p) / (c (z - p) + 1): trace 2, determinant 1, double fixed point p
    p, c = polar(rng, 0.0, 1.5), polar(rng, 1.0, 2.0)
    return scaled(rng, 1 + p * c, -p * p * c, c, 1 - p * c)


def random_two_point(rng):
    m = polar(rng, 0.2, 0.8)
    p = polar(rng, 0.0, 1.5)
    shape = rng.integers(3)
    if shape == 0:
        return scaled(rng, m, p * (1 - m), 0, 1)
    if shape == 1:
        # ∞ attracts
        return scaled(rng, 1 / m, p * (1 - 1 / m), 0, 1)
    q = p + polar(rng, 0.5, 2.0)
    S = np.array([[p, q], [1, 1]])
    M = S @ np.diag([m, 1]) @ np.linalg.inv(S)
    return scaled(rng, *M.reshape(-1))


def random_infinite_side(rng):
    return random_translation(rng) if rng.random() < 0.5 else random_identity(rng)


def random_general_pair(rng):
    a = random_two_point(rng)
    b = random_identity(rng) if rng.random() < 0.2 else random_two_point(rng)
    return (a, b) if rng.random() < 0.5 else (b, a)


def random_translation_pair(rng):
    shape = rng.integers(3)
    a = random_identity(rng) if shape == 0 else random_translation(rng)
    b = random_identity(rng) if shape == 1 else random_translation(rng)
    return a, b


CASE_BUILDERS = {
    MobiusCase.UNIT: lambda rng: (random_identity(rng), random_identity(rng)),
    MobiusCase.TRANSLATION: random_translation_pair,
    MobiusCase.SINGLE_MU_INF: lambda rng: (random_parabolic(rng), random_infinite_side(rng)),
    MobiusCase.SINGLE_INF_OMEGA: lambda rng: (random_infinite_side(rng), random_parabolic(rng)),
    MobiusCase.SINGLE_MU_OMEGA: lambda rng: (random_parabolic(rng), random_parabolic(rng)),
    MobiusCase.GENERAL: random_general_pair,
}


def start_away_from(rng, points):
    finite = [complex(p) for p in points if p is not INFINITY]
    while True:
        z0 = complex(*rng.uniform(-2.0, 2.0, 2))
        if all(abs(z0 - p) >= 0.2 for p in finite):
            return z0


@pytest.mark.parametrize("label", list(MobiusCase))
@settings(max_examples=100, deadline=None)
@given(seed=st.integers(min_value=0, max_value=2**32 - 1))
def test_random_taxonomy_agrees_with_orbit(label, seed):
    rng = np.random.default_rng(seed)
    r = HarmonicMap(*CASE_BUILDERS[label](rng))
    taxonomy = classify_mobius_harmonic(r)
    assert taxonomy.case_label is label
    z0 = start_away_from(rng, taxonomy.fp_a + taxonomy.fp_b)
    orbit = orbit_direct(r, z0)
    # parabolic parts approach their fixed point like 1/(|c| n)
    slow = label in (MobiusCase.SINGLE_MU_INF, MobiusCase.SINGLE_INF_OMEGA, MobiusCase.SINGLE_MU_OMEGA)
    assert prediction_matches(taxonomy, orbit, atol=1e-2 if slow else 1e-6)


# ========== BASINS ==========

def test_basin_of_two_attractors():
    z = z_series()
    # superattracting fixed points at -1 and 1, repelling at 0
    h = 1.5 * z - 0.5 * z * z * z
    g = 0.5 * z
    f = HarmonicMap(h, g)
    grid = basin_render(f, 8, 4, (-1.5, 1.5), (-0.2, 0.2), n_max=500, tol=1e-10)
    assert grid.shape == (4, 8)
    records = induced_fixed_points(f)
    left = records[int(grid[2, 0])]
    right = records[int(grid[2, -1])]
    assert abs(left.mu + 1.0) < 1e-8
    assert abs(right.mu - 1.0) < 1e-8


def test_basin_matches_pixelwise_orbits():
    z = z_series()
    f = HarmonicMap(0.5 * z * z + 0.1, 0.4 * z)
    grid = basin_render(f, 5, 5, (-3, 3), (-3, 3), n_max=200, tol=1e-10)
    re = -3 + (np.arange(5) + 0.5) * 6 / 5
    im = 3 - (np.arange(5) + 0.5) * 6 / 5
    for row in range(5):
        for col in range(5):
            orbit = orbit_direct(f, complex(re[col], im[row]), n_max=200, tol=1e-10)
            escaped = orbit.status is not OrbitStatus.CONVERGED
            assert (grid[row, col] == ESCAPE_CODE) == escaped


def test_basin_edge_cases():
    z = z_series()
    f = HarmonicMap(0.5 * z, 0.5 * z)
    assert basin_render(f, 0, 3, (-1, 1), (-1, 1)).shape == (3, 0)
    identity_part = HarmonicMap(z, 0.5 * z)
    grid = basin_render(identity_part, 3, 3, (-1, 1), (-1, 1), n_max=20)
    assert np.all(grid == ESCAPE_CODE)
