from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import brentq

from muband.bubble import (
    BubbleProblem,
    check_width,
    conformal_alpha,
    cs_ricci_gap,
    cs_scalar_equality_ratio,
    cs_scalar_gap,
    energy,
    energy_trace,
    monotonicity_check,
    rigidity_audit,
    second_variation_density,
    second_variation_unrewritten,
    solve_critical,
    stability_Q,
    width_bound_ricci,
    width_bound_scalar,
    width_bounds,
)
from muband.checks import detuned_problems, energy_slope_error, model_problem, random_problem
from muband.errors import HypothesisViolationWarning, NoCriticalPointError, NonpositiveError, RangeError
from muband.geometry import Band, DoublyWarped
from muband.grid import Grid, GridFunction
from muband.models import Family, ModelSpec, build_model
from muband.ode import Kind, SpectralParams, h_profile, perturbed_profile, u_samples

RICCI = ModelSpec(Family.RICCI, SpectralParams(1.0, 2.0, Kind.RICCI), beta=0.2)
SCALAR = ModelSpec(Family.SCALAR, SpectralParams(1.0, 3.0, Kind.SCALAR, 3))
KAPPA = ModelSpec(Family.KAPPA, SpectralParams.pointwise(0), c=0.5)
MODELS = [RICCI, SCALAR, KAPPA,
          ModelSpec(Family.SCALAR, SpectralParams(0.5, 2.0, Kind.SCALAR, 6)),
          ModelSpec(Family.KAPPA, SpectralParams.pointwise(-1), c=1.0)]
IDS = ["ricci", "scalar3", "kappa0", "scalar6", "kappa-1"]


def flat_problem(h, lo=0.5, hi=1.5, n_points=401, gamma=0.0) -> BubbleProblem:
    g = Grid(lo, hi, n_points)
    one = GridFunction(g, np.ones(n_points), np.zeros(n_points), np.zeros(n_points))
    return BubbleProblem(Band(3, g, DoublyWarped(one, one)), one, h, gamma)


def softer(spec: ModelSpec, lam: float) -> BubbleProblem:
    """Model band and weight with h taken from a smaller target."""
    prob = model_problem(spec)
    p = spec.params
    return BubbleProblem(prob.band, prob.u, h_profile(SpectralParams(p.gamma, lam, p.kind, p.n)), p.gamma)


def test_energy_at_reference_slice_is_boundary_term():
    prob = model_problem(SCALAR)
    t0 = prob.reference_t0
    assert t0 == pytest.approx(0.0, abs=1e-15)
    assert energy(prob, t0) == pytest.approx(float(prob.weighted_area()(t0)), abs=1e-12)
    with pytest.raises(RangeError):
        energy(prob, 10.0)


def test_energy_trace_matches_pointwise_energy():
    rng = np.random.default_rng(4)
    prob = random_problem(rng)
    trace = energy_trace(prob)
    for i in (100, 700, 1500):
        assert trace.values[i] == pytest.approx(energy(prob, float(prob.t[i])), abs=1e-9)


def test_energy_slope_matches_first_variation_on_random_problems():
    rng = np.random.default_rng(8)
    for _ in range(5):
        prob = random_problem(rng)
        for s in rng.uniform(0.2, 1.8, 3):
            assert energy_slope_error(prob, float(s)) <= 1e-5


@pytest.mark.parametrize("spec", MODELS, ids=IDS)
def test_models_are_critical_everywhere(spec):
    prob = model_problem(spec)
    p = spec.params
    assert np.max(np.abs(prob.first_variation().values)) <= 1e-7
    tr = energy_trace(prob).values
    assert np.ptp(tr) / np.max(np.abs(tr)) <= 1e-6
    assert np.max(np.abs(stability_Q(prob, p, prob.t))) <= 1e-8
    res = solve_critical(prob, p)
    assert res.rigid and res.t_star == prob.reference_t0
    audit = rigidity_audit(prob, p, res.t_star)
    assert audit.passed, audit.failures()


def test_Q_vanishes_at_random_points_of_model_profiles():
    rng = np.random.default_rng(9)
    for spec in (RICCI, SCALAR):
        prob = model_problem(spec)
        t = rng.uniform(prob.t[0], prob.t[-1], 50)
        assert np.max(np.abs(stability_Q(prob, spec.params, t))) <= 1e-8


def test_Q_shifts_with_the_target():
    prob = model_problem(SCALAR)
    p = SCALAR.params
    raised = SpectralParams(p.gamma, p.lam + 0.5, p.kind, p.n)
    diff = stability_Q(prob, raised, prob.t) - stability_Q(prob, p, prob.t)
    assert np.max(np.abs(diff - 0.5)) <= 1e-12


def test_Q_of_perturbed_profile_is_its_riccati_residual():
    p = SpectralParams(1.0, 1.0, Kind.RICCI)
    eta = perturbed_profile(p, 1e-3)
    T = eta.t_eps
    g = Grid(-0.9 * T, 0.9 * T, 801)
    prob = flat_problem(eta, g.t_min, g.t_max, 801, p.gamma)
    Q = stability_Q(prob, p, g.t)
    assert np.max(np.abs(Q - eta.residual(g.t))) <= 1e-12
    outer = np.abs(g.t) > 0.55 * p.half_width
    assert np.all(Q[outer] > 0)


def test_shifted_prescribing_function_has_one_critical_slice():
    # model data from Λ = 3 against h from Λ' = 6 translated by 0.1:
    # F(t) = h_3(t) - h_6(t - 0.1), whose root is found independently below
    p = SCALAR.params
    ell = p.half_width
    spec = ModelSpec(Family.SCALAR, p, interval=(-0.5 * ell, 0.5 * ell))
    band = build_model(spec)
    p6 = SpectralParams(1.0, 6.0, Kind.SCALAR, 3)
    h6 = h_profile(p6, shift=-0.1)
    prob = BubbleProblem(band, u_samples(p, band.grid), h6, p.gamma)
    res = solve_critical(prob, p)
    h3 = h_profile(p)
    root = brentq(lambda s: float(h3(s) - h6(s)), -0.5 * ell, 0.5 * ell, xtol=1e-14)
    assert not res.rigid and res.roots == (res.t_star,)
    assert res.t_star == pytest.approx(root, abs=1e-8)
    assert res.t_star == pytest.approx(0.2028, abs=1e-4)
    assert abs(res.first_variation_residual) <= 1e-10
    assert res.scan_agrees
    assert res.Q == pytest.approx(float(stability_Q(prob, p, res.t_star)))


def test_no_critical_slice_reports_sign():
    # flat band, u = 1, h = 1/t: F = -1/t < 0 everywhere
    prob = flat_problem(h_profile(SpectralParams.pointwise(0)))
    with pytest.raises(NoCriticalPointError) as info:
        solve_critical(prob)
    assert info.value.sign == -1


def test_bubble_problem_validation():
    g = Grid(0.5, 1.5, 11)
    one = GridFunction(g, np.ones(11))
    band = Band(3, g, DoublyWarped(one, one))
    h = h_profile(SpectralParams.pointwise(0))
    with pytest.raises(NonpositiveError):
        BubbleProblem(band, GridFunction(g, np.r_[np.ones(10), 0.0]), h, 1.0)
    with pytest.raises(RangeError):
        BubbleProblem(band, one, h, 1.0, reference_t0=3.0)
    with pytest.raises(ValueError):
        BubbleProblem(band, GridFunction(Grid(0.0, 1.0, 11), np.ones(11)), h, 1.0)


def test_detuned_metrics_fail_an_audit_check():
    for name, prob, p in detuned_problems():
        audit = rigidity_audit(prob, p, prob.reference_t0)
        assert not audit.passed, name
        assert max(c.residual for c in audit.failures()) > 1e-3, name


def test_audit_check_names_by_family():
    names = {}
    for spec in (RICCI, SCALAR, KAPPA):
        prob = model_problem(spec)
        names[spec.family] = [c.name for c in rigidity_audit(prob, spec.params, 0.5).checks]
    assert "ricci_diagonal" in names[Family.RICCI]
    assert "umbilic" in names[Family.SCALAR]
    assert "ricci_lower_bound" in names[Family.KAPPA]


@pytest.mark.parametrize("spec", [RICCI, KAPPA], ids=["ricci", "kappa0"])
def test_monotone_quantity_vanishes_on_models(spec):
    rep = monotonicity_check(model_problem(spec), spec.params)
    assert np.max(np.abs(rep.h_tilde)) <= 1e-7
    assert rep.nonincreasing and rep.hypotheses_hold


@pytest.mark.parametrize("spec,lam", [(SCALAR, 2.0), (RICCI, 1.5)], ids=["scalar", "ricci"])
def test_monotone_quantity_with_softer_target(spec, lam):
    prob = softer(spec, lam)
    p = spec.params
    # Q = Λ - Λ' > 0 and H-tilde = h_Λ - h_Λ' changes sign at the center
    assert np.min(stability_Q(prob, p, prob.t)) == pytest.approx(p.lam - lam, abs=1e-10)
    rep = monotonicity_check(prob, p)
    assert rep.hypotheses_hold and rep.nonincreasing
    assert np.ptp(rep.weighted) > 1.0
    assert rep.h_tilde[0] > 0 > rep.h_tilde[-1]
    assert solve_critical(prob, p).t_star == pytest.approx(0.0, abs=1e-10)


def test_phase_advanced_profile_keeps_one_sign():
    # h(t + 0.05) still solves the Riccati equation, so Q = 0, but
    # H-tilde = h(t) - h(t + 0.05) > 0 since h is decreasing: no zero crossing
    spec = ModelSpec(Family.RICCI, SpectralParams(1.0, 2.0, Kind.RICCI))
    p = spec.params
    base = model_problem(spec, 0.8)
    prob = BubbleProblem(base.band, base.u, h_profile(p, 0.05), p.gamma)
    rep = monotonicity_check(prob, p)
    assert rep.hypotheses_hold and rep.nonincreasing
    assert np.all(rep.h_tilde > 0) and rep.zero_crossings == ()
    with pytest.raises(NoCriticalPointError) as info:
        solve_critical(prob, p)
    assert info.value.sign == 1


def test_stiffer_target_violates_hypotheses(tmp_path):
    prob = softer(SCALAR, 3.2)
    with pytest.warns(HypothesisViolationWarning):
        rep = monotonicity_check(prob, SCALAR.params)
    assert not rep.hypotheses_hold
    text = rep.to_csv(tmp_path / "m.csv")
    assert text.splitlines()[0] == "t,h_tilde,weighted"


def test_width_bound_limits():
    assert width_bound_ricci(0.0, 4.0) == pytest.approx(math.pi / 2, abs=1e-12)
    for n in range(3, 8):
        assert width_bound_scalar(n, 0.0, n * (n - 1) / 2) == pytest.approx(2 * math.pi / n, abs=1e-12)


@pytest.mark.parametrize("spec", [RICCI, SCALAR, KAPPA], ids=["ricci", "scalar", "kappa"])
def test_maximal_models_attain_the_width_bound(spec):
    band = build_model(spec)
    rep = check_width(band, spec.params, spec.t_interval)
    assert rep.satisfied and rep.equality
    assert set(rep.to_json()) == {"width", "bound", "satisfied", "equality"}


def test_shorter_band_is_strictly_inside_the_bound():
    p = SCALAR.params
    ell = p.half_width
    band = build_model(ModelSpec(Family.SCALAR, p, interval=(-0.5 * ell, 0.5 * ell)))
    rep = check_width(band, p)
    assert rep.satisfied and not rep.equality
    with pytest.raises(ValueError):
        width_bounds(SpectralParams.pointwise(1))


@pytest.mark.parametrize("spec", [RICCI, SCALAR], ids=["ricci", "scalar"])
def test_second_variation_on_models(spec):
    prob = model_problem(spec)
    Q = stability_Q(prob, spec.params, prob.t)
    sv = second_variation_density(prob)
    assert np.max(np.abs(sv + Q)) <= 1e-8


def test_second_variation_two_routes_agree():
    rng = np.random.default_rng(12)
    for _ in range(5):
        prob = random_problem(rng)
        a = second_variation_density(prob)
        b = second_variation_unrewritten(prob)
        assert np.max(np.abs(a - b) / np.maximum(1.0, np.abs(b))) <= 1e-8


# --------------------------------------------------------------------------
# completing-the-square constants


finite = st.floats(-50, 50, allow_nan=False)


@settings(max_examples=200, deadline=None)
@given(w=finite, h=finite, g=st.floats(0.0, 4.0))
def test_ricci_square_completion(w, h, g):
    scale = 1 + w * w + h * h
    assert cs_ricci_gap(w, h, g) >= -1e-12 * scale
    assert abs(cs_ricci_gap(h / 2, h, g)) <= 1e-12 * scale


@settings(max_examples=200, deadline=None)
@given(w=finite, h=finite, n=st.integers(3, 7), frac=st.floats(0.0, 0.999))
def test_scalar_square_completion(w, h, n, frac):
    g = frac * 2 * n / (n - 1)
    scale = 1 + w * w + h * h
    assert cs_scalar_gap(w, h, n, g) >= -1e-12 * scale
    r = cs_scalar_equality_ratio(n, g)
    assert abs(cs_scalar_gap(r * h, h, n, g)) <= 1e-12 * scale


@settings(max_examples=100, deadline=None)
@given(n=st.integers(4, 7), frac=st.floats(0.001, 0.999))
def test_conformal_alpha_in_unit_interval(n, frac):
    g = frac * 2 * n / (n - 1)
    a = conformal_alpha(n, g)
    assert 0 < a < 1
    assert 4 * (n - 2) / (n - 3) * a == pytest.approx(8 / (4 - g))


def test_conformal_alpha_needs_n_at_least_four():
    with pytest.raises(ValueError):
        conformal_alpha(3, 1.0)
