from __future__ import annotations

import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from muband.checks import random_band
from muband.errors import GridTooCoarseWarning, NonpositiveError
from muband.geometry import Band, DoublyWarped, SingleWarp, curvature
from muband.grid import Grid, GridFunction
from muband.models import Family, ModelSpec, build_model
from muband.ode import Kind, SpectralParams, u_samples
from muband.spectral import (
    check_bound_pointwise,
    flat_eigenvalue,
    principal_eigenvalue,
    radial_laplacian,
    rayleigh_quotient,
    smallest_eigenpair,
    sturm_liouville_ground_state,
    symmetric_tridiagonal,
)


def flat_band(lo=0.0, hi=1.0, n_points=2001, n=3) -> Band:
    g = Grid(lo, hi, n_points)
    one = GridFunction(g, np.ones(n_points))
    if n == 3:
        return Band(3, g, DoublyWarped(one, one))
    return Band(n, g, SingleWarp(one))


def flat_problem(L, n_points=2001):
    n = n_points
    t = np.linspace(0.0, L, n)
    return t, np.ones(n - 2), np.ones(n - 1), np.zeros(n - 2)


def random_sl(rng, n_points=2001):
    band = random_band(rng, Grid(0.0, 2.0, n_points))
    inner = band.interior()
    w_nodes = inner.density().values
    w_mid = band.density_at(band.grid.midpoints)
    V = rng.uniform(-1, 1) + 0.5 * np.sin(rng.uniform(1, 4) * inner.t)
    return band.t, w_nodes, w_mid, V, float(rng.uniform(0.2, 2.0))


def test_radial_laplacian_of_cosine_on_flat_band():
    band = flat_band(-1.0, 1.0, 201)
    u = GridFunction.from_callable(band.grid, np.cos, lambda t: -np.sin(t), lambda t: -np.cos(t))
    lap = radial_laplacian(band, u).values
    assert np.max(np.abs(lap + np.cos(band.t))) <= 1e-12


def test_radial_laplacian_from_samples_only():
    band = flat_band(0.0, math.pi, 3143)
    const = GridFunction(band.grid, np.full(3143, 2.5))
    assert np.max(np.abs(radial_laplacian(band, const).values)) <= 1e-9
    u = GridFunction(band.grid, np.sin(band.t))
    assert np.max(np.abs(radial_laplacian(band, u).values + np.sin(band.t))) <= 1e-7


def test_radial_laplacian_logarithmic_identity_on_ricci_model():
    p = SpectralParams(2.0, 2.0, Kind.RICCI)
    band = build_model(ModelSpec(Family.RICCI, p)).interior()
    u = u_samples(p, band.grid)
    w1 = u.d1 / u.values
    w2 = u.d2 / u.values - w1**2
    H = curvature(band).mean_curv.values
    expected = (w2 + w1**2 + H * w1) * u.values
    lap = radial_laplacian(band, u).values
    assert np.max(np.abs(lap - expected) / np.maximum(1.0, np.abs(expected))) <= 1e-6


def test_radial_laplacian_includes_mean_curvature_term():
    # single warp t on [1, 2] with n = 3: Δu = u'' + (2/t) u'
    g = Grid(1.0, 2.0, 101)
    xi = GridFunction.from_callable(g, lambda t: t, lambda t: np.ones_like(t), lambda t: np.zeros_like(t))
    band = Band(3, g, SingleWarp(xi))
    u = GridFunction.from_callable(g, lambda t: t**2, lambda t: 2 * t, lambda t: 2 * np.ones_like(t))
    assert np.max(np.abs(radial_laplacian(band, u).values - 6.0)) <= 1e-12


def test_ricci_model_saturates_pointwise_bound():
    p = SpectralParams(1.0, 2.0, Kind.RICCI)
    band = build_model(ModelSpec(Family.RICCI, p, beta=0.2))
    rep = check_bound_pointwise(band, u_samples(p, band.grid), p)
    assert rep.satisfied
    assert np.max(np.abs(rep.residual.values)) <= 1e-6 * p.lam
    assert rep.grid_points == band.grid.n_points - 2  # vanishing ends are trimmed


def test_flat_band_with_cosine_eigenfunction():
    # u = cos(πt/(2ℓ)) on [-ℓ, ℓ]: -u''/u = π²/(4ℓ²) and V = 0
    ell = 0.8
    band = flat_band(-ell, ell, 401)
    k = math.pi / (2 * ell)
    u = GridFunction.from_callable(band.grid, lambda t: np.cos(k * t), lambda t: -k * np.sin(k * t),
                                   lambda t: -k * k * np.cos(k * t))
    p = SpectralParams(1.0, k * k, Kind.RICCI)
    rep = check_bound_pointwise(band, u, p)
    assert np.max(np.abs(rep.residual.values)) <= 1e-8 and rep.satisfied


def test_scalar_model_with_raised_target_fails_by_the_gap():
    p = SpectralParams(1.0, 3.0, Kind.SCALAR, 3)
    band = build_model(ModelSpec(Family.SCALAR, p))
    u = u_samples(p, band.grid)
    raised = SpectralParams(1.0, 3.1, Kind.SCALAR, 3)
    rep = check_bound_pointwise(band, u, raised)
    assert not rep.satisfied
    assert rep.residual_min == pytest.approx(-0.1, abs=1e-6)


def test_pointwise_rejects_nonpositive_u():
    band = flat_band(0.0, 1.0, 101)
    u = GridFunction(band.grid, np.r_[1.0, np.ones(49), -1.0, np.ones(49), 1.0])
    with pytest.raises(NonpositiveError):
        check_bound_pointwise(band, u, SpectralParams(1.0, 1.0, Kind.RICCI))


@pytest.mark.parametrize("gamma,L", [(1.0, 2.0), (0.5, 1.0), (2.5, 3.0)])
def test_flat_eigenvalue_calibration(gamma, L):
    lam, u = sturm_liouville_ground_state(*flat_problem(L), gamma)
    assert abs(lam - flat_eigenvalue(L, gamma)) / flat_eigenvalue(L, gamma) <= 1e-6
    t = np.linspace(0.0, L, len(u))
    assert np.max(np.abs(u - np.sin(math.pi * t / L))) <= 1e-6


def test_flat_eigenvalue_converges_at_second_order():
    errs = []
    for n in (101, 201, 401):
        lam, _ = sturm_liouville_ground_state(*flat_problem(1.0, n), 1.0)
        errs.append(abs(lam - math.pi**2))
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.02)
    assert errs[1] / errs[2] == pytest.approx(4.0, rel=0.02)


def test_principal_eigenvalue_flat_band():
    ell = 0.8
    band = flat_band(-ell, ell, 2001)
    p = SpectralParams(1.0, 1.0, Kind.RICCI)
    rep = principal_eigenvalue(band, p)
    exact = math.pi**2 / (4 * ell**2)
    assert abs(rep.principal_eigenvalue - exact) / exact <= 1e-6
    assert rep.satisfied and rep.richardson_gap < 1e-4
    assert rep.eigenfunction.values[0] == 0.0 and np.max(rep.eigenfunction.values) == 1.0


def test_principal_eigenvalue_of_scalar_model_is_target():
    p = SpectralParams(1.0, 3.0, Kind.SCALAR, 3)
    band = build_model(ModelSpec(Family.SCALAR, p))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", GridTooCoarseWarning)
        rep = principal_eigenvalue(band, p)
    assert abs(rep.principal_eigenvalue - p.lam) / p.lam <= 1e-3
    assert abs(rep.refined_eigenvalue - p.lam) <= abs(rep.principal_eigenvalue - p.lam)


def test_coarse_grid_warns():
    p = SpectralParams(1.0, 3.0, Kind.SCALAR, 3)
    spec = ModelSpec(Family.SCALAR, p, n_points=21)
    with pytest.warns(GridTooCoarseWarning):
        principal_eigenvalue(build_model(spec), p)


def test_ground_state_is_rayleigh_minimizer():
    rng = np.random.default_rng(5)
    t, w_nodes, w_mid, V, gamma = random_sl(rng, 401)
    lam, u = sturm_liouville_ground_state(t, w_nodes, w_mid, V, gamma)
    assert rayleigh_quotient(t, w_nodes, w_mid, V, gamma, u) == lam
    for _ in range(10):
        trial = u.copy()
        trial[1:-1] += 0.05 * rng.normal(size=len(u) - 2)
        assert rayleigh_quotient(t, w_nodes, w_mid, V, gamma, trial) >= lam - 1e-12


def test_bisection_matches_dense_solver():
    # numpy's dense symmetric eigensolver as an independent check
    rng = np.random.default_rng(6)
    d = rng.uniform(-2, 2, 60)
    e = rng.uniform(-1, 1, 59)
    lam, v = smallest_eigenpair(d, e)
    A = np.diag(d) + np.diag(e, 1) + np.diag(e, -1)
    assert lam == pytest.approx(np.linalg.eigvalsh(A)[0], abs=1e-12)
    assert np.linalg.norm(A @ v - lam * v) <= 1e-9


def test_tridiagonal_rejects_nonpositive_weight():
    t, w_nodes, w_mid, V = flat_problem(1.0, 11)
    w_mid[3] = 0.0
    with pytest.raises(NonpositiveError):
        symmetric_tridiagonal(t, w_nodes, w_mid, V, 1.0)


def test_report_json_keys():
    rep = principal_eigenvalue(flat_band(0.0, 1.0, 201), SpectralParams(1.0, 1.0, Kind.RICCI),
                               richardson=False)
    assert set(rep.to_json()) == {"kind", "lambda_target", "residual_min", "principal_eigenvalue",
                                  "satisfied", "grid_points"}
    assert rep.refined_eigenvalue is None


# --------------------------------------------------------------------------
# randomized properties of the eigen solver


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), s=st.floats(-2.0, 2.0))
def test_potential_shift_moves_eigenvalue(seed, s):
    t, w_nodes, w_mid, V, gamma = random_sl(np.random.default_rng(seed))
    l1, _ = sturm_liouville_ground_state(t, w_nodes, w_mid, V, gamma)
    l2, _ = sturm_liouville_ground_state(t, w_nodes, w_mid, V + s, gamma)
    assert abs(l2 - l1 - s) <= 1e-10


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_eigenvalue_monotone_in_potential(seed):
    rng = np.random.default_rng(seed)
    t, w_nodes, w_mid, V, gamma = random_sl(rng)
    bump = rng.uniform(0, 1) * (1 + np.cos(rng.uniform(1, 4) * t[1:-1]))
    l1, _ = sturm_liouville_ground_state(t, w_nodes, w_mid, V, gamma)
    l2, _ = sturm_liouville_ground_state(t, w_nodes, w_mid, V + bump, gamma)
    assert l1 <= l2 + 1e-12


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_ground_state_is_positive(seed):
    _, u = sturm_liouville_ground_state(*random_sl(np.random.default_rng(seed), 501))
    assert np.all(u[1:-1] > 0)
