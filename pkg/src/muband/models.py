"""Constructors for the equality-case band metrics of each family."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import hyp2f1

from .errors import ConfigError, ConstraintViolation, DomainError
from .geometry import Band, Profile
from .grid import DEFAULT_POINTS, Grid, GridFunction
from .ode import HProfile, Kind, SpectralParams, h_profile, u_samples

BETA_CONSTRAINT = "½(1−γ/2)Λ ≥ 2(φ′(0)/φ(0))²"


class Family(str, enum.Enum):
    RICCI = "RicciSpectralModel"
    SCALAR = "ScalarSpectralModel"
    KAPPA = "KappaModel"


_FAMILY_ALIASES = {
    "ricci": Family.RICCI,
    "riccispectralmodel": Family.RICCI,
    "scalar": Family.SCALAR,
    "scalarspectralmodel": Family.SCALAR,
    "kappa": Family.KAPPA,
    "kappamodel": Family.KAPPA,
}

KAPPA_DEFAULT_INTERVAL = (0.25, 1.25)


@dataclass(frozen=True)
class ModelSpec:
    """Parameters of one model metric.

    ``interval`` defaults to the maximal interval (-ell, ell) for the spectral
    families, whose warps vanish at the ends, and to (0.25, 1.25) for the
    kappa family.
    """

    family: Family
    params: SpectralParams
    beta: float = 0.0
    c: float = 0.0
    phi0: tuple[float, float] = (1.0, 1.0)
    interval: tuple[float, float] | None = None
    n_points: int = DEFAULT_POINTS
    fiber_lengths: tuple[float, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        expected = {Family.RICCI: Kind.RICCI, Family.SCALAR: Kind.SCALAR,
                    Family.KAPPA: Kind.POINTWISE}[self.family]
        if self.params.kind is not expected:
            raise ConfigError(f"{self.family.value} needs {expected.value} parameters")
        if min(self.phi0) <= 0:
            raise ConstraintViolation("phi0 entries must be positive")

    @property
    def t_interval(self) -> tuple[float, float]:
        if self.interval is not None:
            return (float(self.interval[0]), float(self.interval[1]))
        if self.family is Family.KAPPA:
            return KAPPA_DEFAULT_INTERVAL
        ell = self.params.half_width
        return (-ell, ell)

    @property
    def grid(self) -> Grid:
        lo, hi = self.t_interval
        return Grid(lo, hi, self.n_points)

    @classmethod
    def from_config(cls, cfg: dict) -> "ModelSpec":
        """Build from the flat config keys family, n, gamma, lambda, kappa, beta,
        c, t_minus, t_plus, n_points."""
        try:
            fam = _FAMILY_ALIASES[str(cfg["family"]).replace("_", "").lower()]
        except KeyError as exc:
            raise ConfigError(f"field 'family': unknown or missing ({cfg.get('family')!r})") from exc
        try:
            if fam is Family.KAPPA:
                params = SpectralParams.pointwise(int(cfg.get("kappa", 0)), int(cfg.get("n", 3)))
            else:
                kind = Kind.RICCI if fam is Family.RICCI else Kind.SCALAR
                params = SpectralParams(float(cfg["gamma"]), float(cfg["lambda"]), kind,
                                        int(cfg.get("n", 3)))
        except KeyError as exc:
            raise ConfigError(f"field {exc.args[0]!r} is required for {fam.value}") from exc
        interval = None
        if "t_minus" in cfg or "t_plus" in cfg:
            if not ("t_minus" in cfg and "t_plus" in cfg):
                raise ConfigError("fields 't_minus' and 't_plus' must be given together")
            interval = (float(cfg["t_minus"]), float(cfg["t_plus"]))
        return cls(
            fam,
            params,
            beta=float(cfg.get("beta", 0.0)),
            c=float(cfg.get("c", 0.0)),
            phi0=tuple(float(x) for x in cfg.get("phi0", (1.0, 1.0))),
            interval=interval,
            n_points=int(cfg.get("n_points", DEFAULT_POINTS)),
            fiber_lengths=tuple(float(x) for x in cfg.get("fiber_lengths", ())),
        )


def warp_exponent(gamma: float, alternative: bool = False) -> float:
    """Cosine exponent of each Ricci-model warp.

    The derived value (1-γ/2)/(2-γ/2) is half the exponent of the product
    phi1*phi2 and makes phi1''/phi1 = phi2''/phi2. ``alternative=True`` returns the
    alternative (1-γ/2)/(2-γ/8), kept for the discrepancy report.
    """
    if alternative:
        return (1 - gamma / 2) / (2 - gamma / 8)
    return (1 - gamma / 2) / (2 - gamma / 2)


def beta_max(params: SpectralParams) -> float:
    """Largest admissible |phi1'(0)/phi1(0)| for the Ricci family."""
    return 0.5 * math.sqrt(max(0.0, (1 - params.gamma / 2) * params.lam))


def _check_inside(lo: float, hi: float, ell: float):
    tol = 1e-12 * ell
    if lo < -ell - tol or hi > ell + tol:
        raise DomainError(f"interval [{lo}, {hi}] reaches past the poles at ±{ell:.12g}")


def _cos_and_pole(om: float, ell: float, t: np.ndarray):
    c = np.clip(np.cos(om * t), 0.0, None)
    at_pole = np.abs(np.abs(t) - ell) <= 1e-12 * max(1.0, ell)
    c[at_pole] = 0.0
    return c, at_pole


def ricci_profile(params: SpectralParams, beta: float = 0.0, phi0=(1.0, 1.0),
                  exponent: float | None = None) -> Profile:
    """Closed-form warps of the Ricci model (exact first and second derivatives)."""
    g = params.gamma
    p = (1 - g / 2) / (1 - g / 4)
    e = warp_exponent(g) if exponent is None else exponent
    om, ell = params.omega, params.half_width

    def profile(t):
        t = np.asarray(t, dtype=float)
        c, at_pole = _cos_and_pole(om, ell, t)
        s = np.sin(om * t)
        integral = s * hyp2f1(0.5, (p + 1) / 2, 1.5, s**2) / om
        base = c**e
        jets = []
        for sign, scale in ((1.0, phi0[0]), (-1.0, phi0[1])):
            b = sign * beta
            if b == 0:
                v = scale * base
            elif g == 0:
                # the integral is atanh(s)/omega and diverges at the poles; use
                # the equivalent product form, finite up to the poles
                v = scale * (1 - s) ** (e / 2 - b / (2 * om)) * (1 + s) ** (e / 2 + b / (2 * om))
            else:
                # log form: cos^e can underflow while exp(b * I) overflows
                with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
                    v = scale * np.exp(e * np.log(c) + b * integral)
                v[at_pole] = 0.0
            with np.errstate(divide="ignore", invalid="ignore"):
                tan = s / c
                cp = c ** (-p)
                k = -e * om * tan + b * cp
                dk = -e * om**2 / c**2 + b * p * om * tan * cp
                d1 = k * v
                d2 = (dk + k**2) * v
            if e == 0 and b == 0:
                d1, d2 = np.zeros_like(t), np.zeros_like(t)
            else:
                d1[at_pole] = np.inf
                d2[at_pole] = np.inf
            jets.append((v, d1, d2))
        return jets

    return profile


def scalar_profile(params: SpectralParams) -> Profile:
    n, g = params.n, params.gamma
    e = 2 * (2 - g) / (2 * n + g - n * g)
    om, ell = params.omega, params.half_width

    def profile(t):
        t = np.asarray(t, dtype=float)
        c, at_pole = _cos_and_pole(om, ell, t)
        with np.errstate(divide="ignore", invalid="ignore"):
            v = c**e
            tan = np.sin(om * t) / c
            k = -e * om * tan
            dk = -e * om**2 / c**2
            d1 = k * v
            d2 = (dk + k**2) * v
        if e == 0:
            d1, d2 = np.zeros_like(t), np.zeros_like(t)
        else:
            d1[at_pole] = np.inf
            d2[at_pole] = np.inf
        return [(v, d1, d2)]

    return profile


def kappa_profile(kappa: int, c: float) -> Profile:
    """phi1 = S^((1+c)/2) C^((1-c)/2), phi2 the same with c -> -c, where
    (S, C) is (sin, cos), (t, 1) or (sinh, cosh)."""

    def parts(t):
        if kappa == 1:
            S, C = np.sin(t), np.cos(t)
            ls, lc = C / S, -S / C
            dls, dlc = -1 / S**2, -1 / C**2
        elif kappa == 0:
            S, C = t, np.ones_like(t)
            ls, lc = 1 / t, np.zeros_like(t)
            dls, dlc = -1 / t**2, np.zeros_like(t)
        else:
            S, C = np.sinh(t), np.cosh(t)
            ls, lc = C / S, S / C
            dls, dlc = -1 / S**2, 1 / C**2
        return S, C, ls, lc, dls, dlc

    def profile(t):
        t = np.asarray(t, dtype=float)
        S, C, ls, lc, dls, dlc = parts(t)
        jets = []
        for cc in (c, -c):
            a, b = (1 + cc) / 2, (1 - cc) / 2
            v = S**a * C**b
            k = a * ls + b * lc
            dk = a * dls + b * dlc
            jets.append((v, k * v, (dk + k**2) * v))
        return jets

    return profile


def build_ricci_model(spec: ModelSpec) -> Band:
    p = spec.params
    if p.kind is not Kind.RICCI:
        raise ConfigError("build_ricci_model needs Ricci spectral parameters")
    lhs = 0.5 * (1 - p.gamma / 2) * p.lam
    rhs = 2 * spec.beta**2
    if lhs < rhs - 1e-12 * max(1.0, abs(lhs)) or lhs < 0:
        raise ConstraintViolation(
            f"beta={spec.beta} violates {BETA_CONSTRAINT}: "
            f"½(1−γ/2)Λ = {lhs:.6g} < 2β² = {rhs:.6g}"
        )
    lo, hi = spec.t_interval
    _check_inside(lo, hi, p.half_width)
    return Band.from_profile(3, spec.grid, ricci_profile(p, spec.beta, spec.phi0),
                             spec.fiber_lengths)


def build_scalar_model(spec: ModelSpec) -> Band:
    p = spec.params
    if p.kind is not Kind.SCALAR:
        raise ConfigError("build_scalar_model needs scalar spectral parameters")
    lo, hi = spec.t_interval
    _check_inside(lo, hi, p.half_width)
    if p.gamma > 2 and max(abs(lo), abs(hi)) >= p.half_width * (1 - 1e-12):
        raise DomainError("for gamma > 2 the warp blows up at the poles; shrink the interval")
    return Band.from_profile(p.n, spec.grid, scalar_profile(p), spec.fiber_lengths)


def build_kappa_model(spec: ModelSpec) -> Band:
    p = spec.params
    if p.kind is not Kind.POINTWISE:
        raise ConfigError("build_kappa_model needs pointwise parameters")
    if not 0 <= spec.c <= 1:
        raise ConstraintViolation(f"c must lie in [0, 1], got {spec.c}")
    if p.n != 3:
        raise ConstraintViolation("kappa models are three-dimensional")
    lo, hi = spec.t_interval
    if lo <= 0:
        raise ConstraintViolation("kappa models need t_minus > 0")
    if p.kappa == 1 and hi >= math.pi / 2:
        raise ConstraintViolation("the kappa = 1 model needs t_plus < π/2")
    return Band.from_profile(3, spec.grid, kappa_profile(p.kappa, spec.c), spec.fiber_lengths)


def build_model(spec: ModelSpec) -> Band:
    return {
        Family.RICCI: build_ricci_model,
        Family.SCALAR: build_scalar_model,
        Family.KAPPA: build_kappa_model,
    }[spec.family](spec)


def matched_h(spec: ModelSpec) -> HProfile:
    """The prescribing function the model saturates."""
    return h_profile(spec.params)


def matched_u(spec: ModelSpec, grid: Grid | None = None) -> GridFunction:
    """The weight u the model saturates, sampled on ``grid`` (default: model grid)."""
    return u_samples(spec.params, spec.grid if grid is None else grid)


def exponent_discrepancy_report(params: SpectralParams, n_points: int = DEFAULT_POINTS,
                                fraction: float = 0.9, tol: float = 1e-6) -> dict:
    """Residuals of the two candidate per-factor exponents (beta = 0).

    Each candidate metric cos(omega t)^e (ds1^2 + ds2^2) is tested against
    the product identity, the mean curvature identity H = (1-γ/2) h and the
    spectral equality, on [-fraction*ell, fraction*ell].
    """
    from .geometry import curvature
    from .spectral import pointwise_residual

    ell = params.half_width
    grid = Grid(-fraction * ell, fraction * ell, n_points)
    h = h_profile(params)(grid.t)
    u = u_samples(params, grid)
    p_total = (1 - params.gamma / 2) / (1 - params.gamma / 4)
    out = {}
    for name, alt in (("derived", False), ("alternative", True)):
        e = warp_exponent(params.gamma, alt)
        band = Band.from_profile(3, grid, ricci_profile(params, 0.0, (1.0, 1.0), e))
        prof = curvature(band)
        cosp = np.cos(params.omega * grid.t) ** p_total
        resid = pointwise_residual(band, u, params, prof)
        out[name] = {
            "exponent": e,
            "product_residual": float(np.max(np.abs(band.density().values - cosp))),
            "mean_curvature_residual": float(
                np.max(np.abs(prof.mean_curv.values - (1 - params.gamma / 2) * h))),
            "spectral_residual": float(np.max(np.abs(resid)) / params.lam),
        }
        out[name]["satisfied"] = all(
            v <= tol for k, v in out[name].items() if k.endswith("residual"))
    out["satisfying"] = [k for k in ("derived", "alternative") if out[k]["satisfied"]]
    return out
