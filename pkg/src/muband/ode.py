"""Prescribing functions h solving Riccati equations, matching weights u, and
the perturbed profiles used to build barriers.

All spectral profiles solve ``coeff * h**2 + h' + lam = 0``; the tangent
solution has poles at ``t + shift = +-half_width``.
"""

from __future__ import annotations

import enum
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.optimize import brentq
from scipy.special import erf

from .errors import DimensionError, DomainError, InvalidAlphaError, RangeError
from .grid import Grid, GridFunction


class Kind(str, enum.Enum):
    RICCI = "RicciSpectral"
    SCALAR = "ScalarSpectral"
    POINTWISE = "RicciPointwise"


def scalar_coefficient(n: int, gamma: float) -> float:
    """c_n(gamma) = (2n + gamma - n gamma) / (4(n-1) + 2 gamma (2-n))."""
    return (2 * n + gamma - n * gamma) / (4 * (n - 1) + 2 * gamma * (2 - n))


@dataclass(frozen=True)
class SpectralParams:
    gamma: float
    lam: float
    kind: Kind = Kind.RICCI
    n: int = 3
    kappa: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        g, lam, n = self.gamma, self.lam, self.n
        if self.kind is Kind.RICCI:
            if n != 3:
                raise DimensionError("the spectral Ricci family is three-dimensional")
            if not 0 <= g < 4:
                raise RangeError(f"Ricci family needs 0 <= gamma < 4, got {g}")
            if not lam > 0:
                raise RangeError(f"lambda must be positive, got {lam}")
        elif self.kind is Kind.SCALAR:
            if not 3 <= n <= 7:
                raise DimensionError(f"scalar family needs 3 <= n <= 7, got {n}")
            if not 0 <= g < 2 * n / (n - 1):
                raise RangeError(f"scalar family needs 0 <= gamma < 2n/(n-1), got {g}")
            if not lam > 0:
                raise RangeError(f"lambda must be positive, got {lam}")
            if not scalar_coefficient(n, g) > 0:
                raise RangeError("scalar coefficient c_n(gamma) is not positive")
        else:
            if self.kappa not in (-1, 0, 1):
                raise RangeError(f"kappa must be -1, 0 or 1, got {self.kappa}")
            if g != 0:
                raise RangeError("the pointwise family has gamma = 0")
            if lam != 4 * self.kappa:
                raise RangeError(f"the pointwise family has lambda = 4*kappa, got {lam}")

    @classmethod
    def pointwise(cls, kappa: int, n: int = 3) -> "SpectralParams":
        return cls(0.0, 4.0 * kappa, Kind.POINTWISE, n, kappa)

    @property
    def coeff(self) -> float:
        """Coefficient of h^2 in the Riccati equation."""
        if self.kind is Kind.RICCI:
            return 1 - self.gamma / 4
        if self.kind is Kind.SCALAR:
            return scalar_coefficient(self.n, self.gamma)
        return 1.0

    @property
    def omega(self) -> float:
        if self.kind is Kind.POINTWISE:
            raise DomainError("pointwise profiles are not tangent profiles")
        return math.sqrt(self.lam * self.coeff)

    @property
    def half_width(self) -> float:
        """Distance from the center to the poles of h."""
        return math.pi / (2 * self.omega)

    @property
    def w_ratio(self) -> float:
        """The ratio (log u)' / h forced in the equality case."""
        if self.kind is Kind.RICCI:
            return 0.5
        if self.kind is Kind.SCALAR:
            n, g = self.n, self.gamma
            return 1.0 / (2 * (n - 1) + g * (2 - n))
        return 0.0

    @property
    def u_exponent(self) -> float:
        """u = cos(omega t)^u_exponent."""
        return self.w_ratio / self.coeff


@dataclass(frozen=True, eq=False)
class HProfile:
    """A prescribing function with its derivative and open domain of finiteness."""

    params: SpectralParams
    shift: float
    fn: Callable = field(repr=False)
    dfn: Callable = field(repr=False)
    domain: tuple[float, float]

    def _check(self, t):
        t = np.asarray(t, dtype=float)
        lo, hi = self.domain
        if np.any(t <= lo) or np.any(t >= hi):
            raise DomainError(f"h is infinite outside ({lo:.6g}, {hi:.6g})")
        return t

    def __call__(self, t):
        return self.fn(self._check(t))

    def derivative(self, t):
        return self.dfn(self._check(t))

    def residual(self, t):
        """coeff*h^2 + h' + lam; zero for an exact solution."""
        t = self._check(t)
        p = self.params
        return p.coeff * self.fn(t) ** 2 + self.dfn(t) + p.lam

    def sample(self, grid: Grid) -> GridFunction:
        return GridFunction(grid, self(grid.t), self.derivative(grid.t))

    def to_csv(self, grid: Grid, path: str | Path | None = None) -> str:
        t = grid.t
        buf = io.StringIO()
        buf.write("t,h,residual\n")
        for row in zip(t, self(t), self.residual(t)):
            buf.write(",".join(f"{x:.17g}" for x in row) + "\n")
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text


def _tangent_profile(p: SpectralParams, shift: float) -> HProfile:
    om = p.omega
    amp = math.sqrt(p.lam / p.coeff)
    ell = p.half_width
    return HProfile(
        p,
        shift,
        lambda t: -amp * np.tan(om * (t + shift)),
        lambda t: -p.lam / np.cos(om * (t + shift)) ** 2,
        (-ell - shift, ell - shift),
    )


def _kappa_functions(kappa: int):
    if kappa == 1:
        return (lambda t: 2 / np.tan(2 * t), lambda t: -4 / np.sin(2 * t) ** 2, (0.0, math.pi / 2))
    if kappa == 0:
        return (lambda t: 1 / t, lambda t: -1 / t**2, (0.0, math.inf))
    if kappa == -1:
        return (lambda t: 2 / np.tanh(2 * t), lambda t: -4 / np.sinh(2 * t) ** 2, (0.0, math.inf))
    raise RangeError(f"kappa must be -1, 0 or 1, got {kappa}")


def h_profile(params: SpectralParams, shift: float = 0.0) -> HProfile:
    """The prescribing function of the given family, translated by ``shift``."""
    if params.kind is Kind.POINTWISE:
        fn, dfn, (lo, hi) = _kappa_functions(params.kappa)
        return HProfile(params, shift, lambda t: fn(t + shift), lambda t: dfn(t + shift),
                        (lo - shift, hi - shift))
    return _tangent_profile(params, shift)


def h_ricci(params: SpectralParams, t, shift: float = 0.0):
    if params.kind is not Kind.RICCI:
        raise ValueError("h_ricci needs Ricci spectral parameters")
    return h_profile(params, shift)(t)


def h_scalar(params: SpectralParams, t, shift: float = 0.0):
    if params.kind is not Kind.SCALAR:
        raise ValueError("h_scalar needs scalar spectral parameters")
    return h_profile(params, shift)(t)


def h_kappa(kappa: int, t):
    """eta solving eta' + eta^2 + 4 kappa = 0 with eta' < 0."""
    return h_profile(SpectralParams.pointwise(kappa))(t)


def u_profile(params: SpectralParams, t, shift: float = 0.0):
    """The positive weight with (log u)' = w_ratio * h and u(-shift) = 1."""
    if params.kind is Kind.POINTWISE:
        return np.ones_like(np.asarray(t, dtype=float))
    t = h_profile(params, shift)._check(t)
    return np.cos(params.omega * (t + shift)) ** params.u_exponent


def u_samples(params: SpectralParams, grid: Grid, shift: float = 0.0) -> GridFunction:
    """u on a grid, allowed to reach the poles where it vanishes.

    Exact derivatives are attached; at a pole they are reported as infinite.
    """
    t = grid.t
    if params.kind is Kind.POINTWISE:
        return GridFunction(grid, np.ones_like(t), np.zeros_like(t), np.zeros_like(t))
    om, e = params.omega, params.u_exponent
    ell = params.half_width
    tol = 1e-9 * max(1.0, ell)
    if np.any(np.abs(t + shift) > ell + tol):
        raise DomainError("grid extends past the poles of h")
    c = np.clip(np.cos(om * (t + shift)), 0.0, None)
    at_pole = np.abs(np.abs(t + shift) - ell) <= tol
    c[at_pole] = 0.0
    u = c**e
    with np.errstate(divide="ignore", invalid="ignore"):
        tan = np.sin(om * (t + shift)) / c
        sec2 = 1.0 / c**2
        d1 = -e * om * tan * u
        d2 = (e**2 * om**2 * tan**2 - e * om**2 * sec2) * u
    d1[at_pole] = np.inf
    d2[at_pole] = np.inf
    return GridFunction(grid, u, d1, d2)


@dataclass(frozen=True)
class AlphaBump:
    """Odd bump alpha with alpha' = (ell^2/4 - t^2) exp(-(2t/ell)^2).

    alpha > 0 on (0, ell], alpha' > 0 on [0, ell/2), alpha' < 0 on (ell/2, ell].
    """

    ell: float

    def __call__(self, t):
        x = 2 * np.asarray(t, dtype=float) / self.ell
        return self.ell**3 / 8 * (math.sqrt(math.pi) / 4 * erf(x) + 0.5 * x * np.exp(-(x**2)))

    def derivative(self, t):
        t = np.asarray(t, dtype=float)
        return (self.ell**2 / 4 - t**2) * np.exp(-((2 * t / self.ell) ** 2))


def validate_alpha(alpha, n_check: int = 2001) -> None:
    """Check the sign conditions of alpha and alpha' on a sample grid of [0, ell]."""
    ell = alpha.ell
    t = np.linspace(0.0, ell, n_check)
    a = alpha(t)
    da = alpha.derivative(t)
    if np.max(np.abs(alpha(-t) + a)) > 1e-12 * max(1.0, np.max(np.abs(a))):
        raise InvalidAlphaError("alpha must be odd")
    if np.any(a[1:] <= 0):
        raise InvalidAlphaError("alpha must be positive on (0, ell]")
    if np.any(da[t < ell / 2] <= 0):
        raise InvalidAlphaError("alpha' must be positive on [0, ell/2)")
    if np.any(da[t > ell / 2] >= 0):
        raise InvalidAlphaError("alpha' must be negative on (ell/2, ell]")


@dataclass(frozen=True, eq=False)
class PerturbedProfile(HProfile):
    """eta_eps(t) = eta(t + eps * alpha(t)) on (-T_eps, T_eps)."""

    epsilon: float = 0.0
    alpha: object = None
    base: HProfile | None = field(default=None, repr=False)

    @property
    def ell(self) -> float:
        return self.alpha.ell

    @property
    def t_eps(self) -> float:
        return self.domain[1]

    def predicted_residual(self, t):
        """eps * alpha'(t) * eta'(t + eps alpha(t))."""
        t = self._check(t)
        s = t + self.epsilon * self.alpha(t)
        return self.epsilon * self.alpha.derivative(t) * self.base.dfn(s)

    def sign_dichotomy(self, n_points: int = 2001) -> dict:
        """Residual signs inside and outside |t| = ell/2 on a grid of (-T_eps, T_eps)."""
        T = self.t_eps
        t = np.linspace(-T, T, n_points + 2)[1:-1]
        r = self.residual(t)
        half = self.ell / 2
        gap = 1e-9 * self.ell
        inner = np.abs(t) < half - gap
        outer = np.abs(t) > half + gap
        return {
            "inner_max": float(np.max(r[inner])) if inner.any() else -math.inf,
            "outer_min": float(np.min(r[outer])) if outer.any() else math.inf,
            "holds": bool(np.all(r[inner] < 0) and np.all(r[outer] > 0)),
        }


def perturbed_profile(params: SpectralParams, epsilon: float, alpha=None,
                      eps0: float = 1e-2) -> PerturbedProfile:
    """Perturbed prescribing function for a spectral family (centered, shift 0).

    ``alpha`` must be odd with ``alpha.ell`` the pole distance it is built for;
    it defaults to :class:`AlphaBump` at the half width of ``params``.
    """
    if params.kind is Kind.POINTWISE:
        raise ValueError("perturbations are defined for the spectral families")
    if not 0 <= epsilon <= eps0:
        raise RangeError(f"epsilon must lie in [0, {eps0}], got {epsilon}")
    base = h_profile(params)
    ell = params.half_width
    alpha = AlphaBump(ell) if alpha is None else alpha
    if abs(alpha.ell - ell) > 1e-12 * ell:
        raise InvalidAlphaError(f"alpha is built for ell={alpha.ell}, poles are at {ell}")
    validate_alpha(alpha)
    probe = np.linspace(0.0, ell, 2001)
    if np.any(1 + epsilon * alpha.derivative(probe) <= 0):
        raise InvalidAlphaError("t + eps*alpha(t) is not increasing; epsilon too large")
    if epsilon == 0:
        T = ell
    else:
        T = brentq(lambda s: s + epsilon * float(alpha(s)) - ell, 0.0, ell, xtol=1e-15)
    om, amp = params.omega, math.sqrt(params.lam / params.coeff)

    def fn(t):
        return -amp * np.tan(om * (t + epsilon * alpha(t)))

    def dfn(t):
        s = t + epsilon * alpha(t)
        return -(1 + epsilon * alpha.derivative(t)) * params.lam / np.cos(om * s) ** 2

    return PerturbedProfile(params, 0.0, fn, dfn, (-T, T), epsilon, alpha, base)


def rk4(f: Callable[[float, float], float], y0: float, t0: float, t1: float,
        step: float = 1e-4) -> float:
    """Classic fourth-order Runge-Kutta for a scalar ODE y' = f(t, y)."""
    n = max(1, int(math.ceil(abs(t1 - t0) / step)))
    dt = (t1 - t0) / n
    t, y = t0, y0
    for _ in range(n):
        k1 = f(t, y)
        k2 = f(t + dt / 2, y + dt * k1 / 2)
        k3 = f(t + dt / 2, y + dt * k2 / 2)
        k4 = f(t + dt, y + dt * k3)
        y += dt * (k1 + 2 * k2 + 2 * k3 + k4) / 6
        t += dt
    return y
