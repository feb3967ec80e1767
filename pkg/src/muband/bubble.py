"""Warped mu-bubbles on bands, restricted to slab regions {t <= t*}.

For fiber-constant u and h the functional reduces to

    E(t*) = u(t*)^γ A(t*) - ∫_{t0}^{t*} h u^γ A dt,

whose derivative is F(t*) u^γ A with F = H + γ (log u)' - h.
"""

from __future__ import annotations

import io
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from .errors import HypothesisViolationWarning, NoCriticalPointError, NonpositiveError, RangeError
from .geometry import Band, curvature
from .grid import GridFunction, cumulative_integral, derivative_values, integrate
from .ode import HProfile, Kind, SpectralParams, h_profile, scalar_coefficient
from .spectral import pointwise_residual

RIGID_TOL = 1e-7
BRENT_XTOL = 1e-12


@dataclass(frozen=True, eq=False)
class BubbleProblem:
    band: Band
    u: GridFunction
    h: HProfile
    gamma: float
    reference_t0: float | None = None

    def __post_init__(self):
        g = self.band.grid
        if self.u.grid != g:
            raise ValueError("u is sampled on a different grid than the band")
        if np.any(self.u.values <= 0):
            raise NonpositiveError("u must be positive on the band")
        self.h(g.t)  # raises DomainError if a pole lies in the band
        t0 = 0.5 * (g.t_min + g.t_max) if self.reference_t0 is None else float(self.reference_t0)
        if not g.t_min <= t0 <= g.t_max:
            raise RangeError(f"reference_t0={t0} lies outside the band")
        object.__setattr__(self, "reference_t0", t0)

    @property
    def t(self) -> np.ndarray:
        return self.band.t

    def log_derivative(self) -> np.ndarray:
        """w' = (log u)' at the nodes."""
        return derivative_values(self.u, 1) / self.u.values

    def mean_curvature(self) -> np.ndarray:
        return curvature(self.band).mean_curv.values

    def first_variation(self) -> GridFunction:
        """F = H + γ w' - h at the nodes (the quantity H-tilde)."""
        F = self.mean_curvature() + self.gamma * self.log_derivative() - self.h(self.t)
        return GridFunction(self.band.grid, F)

    def weighted_area(self) -> GridFunction:
        """u^γ A along the band."""
        return GridFunction(self.band.grid, self.u.values**self.gamma * self.band.area().values)


def energy(problem: BubbleProblem, t_star: float) -> float:
    g = problem.band.grid
    if not g.t_min <= t_star <= g.t_max:
        raise RangeError(f"t_star={t_star} lies outside [{g.t_min}, {g.t_max}]")
    ua = problem.weighted_area()
    boundary = float(CubicSpline(g.t, ua.values)(t_star))
    bulk_density = GridFunction(g, problem.h(g.t) * ua.values)
    t0 = problem.reference_t0
    bulk = integrate(bulk_density, min(t0, t_star), max(t0, t_star))
    return boundary - (bulk if t_star >= t0 else -bulk)


def energy_trace(problem: BubbleProblem) -> GridFunction:
    """E at every node of the band."""
    g = problem.band.grid
    ua = problem.weighted_area()
    bulk = cumulative_integral(GridFunction(g, problem.h(g.t) * ua.values), problem.reference_t0)
    return GridFunction(g, ua.values - bulk.values)


def stability_Q(problem: BubbleProblem, params: SpectralParams, t):
    """Q = coeff h^2 + h' + Λ with h the problem's prescribing function."""
    return params.coeff * problem.h(t) ** 2 + problem.h.derivative(t) + params.lam


def second_variation_density(problem: BubbleProblem) -> np.ndarray:
    """Second variation integrand for a fiber-constant test function ψ = 1.

    γ u^{-1}Δu - (|A|^2 + Ric(ν,ν)) - γ H w' - h' - γ w'^2 at the nodes; all
    tangential gradient terms vanish.
    """
    prof = curvature(problem.band)
    u = problem.u
    H = prof.mean_curv.values
    w1 = problem.log_derivative()
    lap_over_u = (derivative_values(u, 2) + H * derivative_values(u, 1)) / u.values
    g = problem.gamma
    return (g * lap_over_u - prof.second_ff_sq.values - prof.ric_t.values
            - g * H * w1 - problem.h.derivative(problem.t) - g * w1**2)


def second_variation_unrewritten(problem: BubbleProblem) -> np.ndarray:
    """The same integrand before the substitution φ = u^{-γ/2} ψ.

    -|A|^2 - Ric(ν,ν) - γ w'^2 + γ u^{-1}(Δu - H u') - h' with Δ_Σ u = 0.
    """
    prof = curvature(problem.band)
    u = problem.u
    w1 = problem.log_derivative()
    g = problem.gamma
    return (-prof.second_ff_sq.values - prof.ric_t.values - g * w1**2
            + g * derivative_values(u, 2) / u.values - problem.h.derivative(problem.t))


@dataclass(frozen=True, eq=False)
class BubbleResult:
    t_star: float
    first_variation_residual: float
    Q: float | None
    energy_trace: GridFunction = field(repr=False)
    rigid: bool
    t_scan: float
    scan_agrees: bool
    roots: tuple[float, ...] = ()

    def to_json(self, energy_csv_path: str | None = None) -> dict:
        return {
            "t_star": self.t_star,
            "residual": self.first_variation_residual,
            "Q": self.Q,
            "rigid": self.rigid,
            "energy_csv_path": energy_csv_path,
        }


def solve_critical(problem: BubbleProblem, params: SpectralParams | None = None,
                   rigid_tol: float = RIGID_TOL) -> BubbleResult:
    """Find the slice t* where F = H + γ w' - h vanishes.

    If sup |F| <= rigid_tol every slice is critical: the result is flagged
    rigid and t* is the reference slice. Otherwise every sign change of F on
    the grid is refined by Brent's method on a cubic spline of F, and the
    root with the lowest energy is returned. The result is cross-checked
    against the grid slice of minimal energy.
    """
    g = problem.band.grid
    F = problem.first_variation().values
    trace = energy_trace(problem)
    i_scan = int(np.argmin(trace.values))
    t_scan = float(g.t[i_scan])
    q_at = (lambda s: float(stability_Q(problem, params, s))) if params is not None else (lambda s: None)
    if np.max(np.abs(F)) <= rigid_tol:
        t0 = problem.reference_t0
        resid = float(CubicSpline(g.t, F)(t0))
        return BubbleResult(t0, resid, q_at(t0), trace, True, t_scan, True)
    sign = np.sign(F)
    crossings = np.flatnonzero(sign[:-1] * sign[1:] <= 0)
    # Exact zeros at a node show up in two consecutive cells; keep one.
    crossings = [i for k, i in enumerate(crossings) if k == 0 or i != crossings[k - 1] + 1 or F[i] != 0]
    if not crossings:
        s = int(sign[0])
        raise NoCriticalPointError(
            f"F = H + γ(log u)' - h has constant sign {s:+d} on the band", s)
    spline = CubicSpline(g.t, F)
    roots = []
    for i in crossings:
        a, b = g.t[i], g.t[i + 1]
        if F[i] == 0:
            roots.append(float(a))
        elif F[i + 1] == 0:
            roots.append(float(b))
        else:
            roots.append(float(brentq(spline, a, b, xtol=BRENT_XTOL)))
    roots = sorted(set(roots))
    energies = [energy(problem, r) for r in roots]
    t_star = roots[int(np.argmin(energies))]
    resid = float(spline(t_star))
    agrees = abs(t_star - t_scan) <= g.spacing * (1 + 1e-9)
    return BubbleResult(t_star, resid, q_at(t_star), trace, False, t_scan, agrees, tuple(roots))


@dataclass(frozen=True)
class AuditCheck:
    name: str
    passed: bool
    residual: float
    tolerance: float
    structural: bool = False


@dataclass(frozen=True)
class RigidityAudit:
    t_star: float
    checks: tuple[AuditCheck, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list[AuditCheck]:
        return [c for c in self.checks if not c.passed]


def _at(t: np.ndarray, values: np.ndarray, t_star: float) -> float:
    return float(CubicSpline(t, values)(t_star))


def rigidity_audit(problem: BubbleProblem, params: SpectralParams, t_star: float,
                   tol: float = 1e-6) -> RigidityAudit:
    """Check every equality forced on a slice in the rigid case.

    Residuals are evaluated on the nodes and interpolated to t_star.
    """
    band = problem.band
    t = band.t
    prof = curvature(band)
    checks = [AuditCheck("fiber_scalar_flat", True, 0.0, tol, structural=True)]

    def add(name, values):
        r = abs(_at(t, values, t_star))
        checks.append(AuditCheck(name, r <= tol, r, tol))

    add("first_variation", problem.first_variation().values)
    add("stability_Q", stability_Q(problem, params, t))
    if params.kind is Kind.POINTWISE:
        eta = h_profile(params)
        add("mean_curvature_eta", prof.mean_curv.values - eta(t))
        deficit = np.maximum(0.0, 2 * params.kappa - prof.ric_min.values)
        r = float(np.max(deficit))
        checks.append(AuditCheck("ricci_lower_bound", r <= tol, r, tol))
        return RigidityAudit(float(t_star), tuple(checks))
    add("log_derivative", problem.log_derivative() - params.w_ratio * problem.h(t))
    add("spectral_equality", pointwise_residual(band, problem.u, params, prof))
    if params.kind is Kind.RICCI:
        if len(prof.ric_fiber) == 2:
            add("ricci_diagonal", prof.ric_fiber[0].values - prof.ric_fiber[1].values)
        else:
            checks.append(AuditCheck("ricci_diagonal", True, 0.0, tol, structural=True))
    else:
        add("umbilic", prof.traceless_A_sq.values)
    return RigidityAudit(float(t_star), tuple(checks))


def monotonicity_weight(problem: BubbleProblem, params: SpectralParams) -> np.ndarray:
    """The integrand Ψ of the monotone weight exp(∫Ψ).

    Ricci kinds: -γ w' + 2h. Scalar kind: n/(n-1) (-γ w' + h) + γ w'.
    """
    w1 = problem.log_derivative()
    h = problem.h(problem.t)
    g = problem.gamma
    if params.kind is Kind.SCALAR:
        n = params.n
        return n / (n - 1) * (-g * w1 + h) + g * w1
    return -g * w1 + 2 * h


@dataclass(frozen=True, eq=False)
class MonotonicityReport:
    t: np.ndarray
    h_tilde: np.ndarray
    weighted: np.ndarray
    max_increase: float
    nonincreasing: bool
    hypotheses_hold: bool
    zero_crossings: tuple[float, ...]

    def to_csv(self, path: str | Path | None = None) -> str:
        buf = io.StringIO()
        buf.write("t,h_tilde,weighted\n")
        for row in zip(self.t, self.h_tilde, self.weighted):
            buf.write(",".join(f"{x:.17g}" for x in row) + "\n")
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text


def monotonicity_check(problem: BubbleProblem, params: SpectralParams,
                       t_range: tuple[float, float] | None = None,
                       tol: float = 1e-6) -> MonotonicityReport:
    """Check that exp(∫Ψ) H-tilde is nonincreasing along the slices.

    The inequality is only expected when u satisfies the spectral bound and
    Q >= 0 on the range; otherwise a HypothesisViolationWarning is emitted.
    """
    band = problem.band
    if t_range is not None:
        band = band.restrict(*t_range)
        lo = int(np.searchsorted(problem.t, band.grid.t_min - 1e-12 * band.grid.spacing))
        sub = BubbleProblem(band, problem.u.slice(lo, lo + band.grid.n_points), problem.h,
                            problem.gamma, band.grid.t_min)
    else:
        sub = BubbleProblem(band, problem.u, problem.h, problem.gamma, band.grid.t_min)
    t = sub.t
    Ht = sub.first_variation().values
    psi = cumulative_integral(GridFunction(band.grid, monotonicity_weight(sub, params)))
    weighted = np.exp(psi.values) * Ht
    scale = max(1.0, float(np.max(np.abs(weighted))))
    inc = float(max(0.0, np.max(np.diff(weighted))))
    bound_ok = float(np.min(pointwise_residual(band, sub.u, params))) >= -tol * max(1.0, abs(params.lam))
    q_ok = float(np.min(stability_Q(sub, params, t))) >= -tol
    hyp = bound_ok and q_ok
    if not hyp:
        warnings.warn("spectral bound or Q >= 0 fails on the range; monotonicity is not expected",
                      HypothesisViolationWarning, stacklevel=2)
    s = np.sign(Ht)
    idx = np.flatnonzero(s[:-1] * s[1:] < 0)
    crossings = tuple(float(t[i] - Ht[i] * (t[i + 1] - t[i]) / (Ht[i + 1] - Ht[i])) for i in idx)
    return MonotonicityReport(t, Ht, weighted, inc, inc <= tol * scale, hyp, crossings)


def width_bound_ricci(gamma: float, lam: float) -> float:
    """2π/√(Λ(4-γ)); continuous down to γ = 0."""
    return 2 * math.pi / math.sqrt(lam * (4 - gamma))


def width_bound_scalar(n: int, gamma: float, lam: float) -> float:
    """π/√(c_n(γ) Λ); continuous down to γ = 0."""
    return math.pi / math.sqrt(scalar_coefficient(n, gamma) * lam)


def width_bounds(params: SpectralParams, interval: tuple[float, float] | None = None) -> float:
    if params.kind is Kind.RICCI:
        return width_bound_ricci(params.gamma, params.lam)
    if params.kind is Kind.SCALAR:
        return width_bound_scalar(params.n, params.gamma, params.lam)
    if interval is None:
        raise ValueError("the pointwise bound is t_plus - t_minus; pass the interval")
    return float(interval[1] - interval[0])


@dataclass(frozen=True)
class WidthReport:
    width: float
    bound: float
    satisfied: bool
    equality: bool

    def to_json(self) -> dict:
        return {"width": self.width, "bound": self.bound, "satisfied": self.satisfied,
                "equality": self.equality}


def check_width(band: Band, params: SpectralParams, interval: tuple[float, float] | None = None,
                tol: float = 1e-10) -> WidthReport:
    """Compare t_plus - t_minus with the closed-form bound."""
    width = band.width
    bound = width_bounds(params, interval if interval is not None else
                         (band.grid.t_min, band.grid.t_max))
    return WidthReport(width, bound, width <= bound + tol, abs(width - bound) <= tol)


def cs_ricci_gap(w, h, gamma: float):
    """γw² - γhw + h² - (1 - γ/4)h², which equals γ(w - h/2)² >= 0."""
    w = np.asarray(w, dtype=float)
    h = np.asarray(h, dtype=float)
    return gamma * w**2 - gamma * h * w + h**2 - (1 - gamma / 4) * h**2


def cs_scalar_gap(w, h, n: int, gamma: float):
    """Quadratic form in w whose minimum over w is c_n(γ) h², minus that minimum.

    a w² - (γ/(n-1)) h w + n/(2(n-1)) h² - c_n h² with
    a = nγ²/(2(n-1)) - γ² + γ; vanishes exactly at w = 2h/(4(n-1) + 2γ(2-n)).
    """
    w = np.asarray(w, dtype=float)
    h = np.asarray(h, dtype=float)
    a = n * gamma**2 / (2 * (n - 1)) - gamma**2 + gamma
    return (a * w**2 - gamma / (n - 1) * h * w + n / (2 * (n - 1)) * h**2
            - scalar_coefficient(n, gamma) * h**2)


def cs_scalar_equality_ratio(n: int, gamma: float) -> float:
    """w/h at which :func:`cs_scalar_gap` vanishes."""
    return 2.0 / (4 * (n - 1) + 2 * gamma * (2 - n))


def conformal_alpha(n: int, gamma: float) -> float:
    """Solution α of (4(n-2)/(n-3)) α = 8/(4-γ)."""
    if n <= 3:
        raise ValueError("the conformal exponent is defined for n >= 4")
    return 2 * (n - 3) / ((n - 2) * (4 - gamma))
