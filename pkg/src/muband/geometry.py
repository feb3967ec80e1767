"""Torical band metrics and their curvature.

A band is ``dt^2 + sum_i f_i(t)^2 ds_i^2`` on an interval times a flat torus,
either with two independent warps (n = 3) or a single warp shared by all
``n - 1`` circle factors. Every curvature quantity is then a function of t.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import BoundaryProximityError, DimensionError, DomainError, NonpositiveError
from .grid import Grid, GridFunction, derivative_values

# (values, first derivative, second derivative) of one warp on an array of t.
WarpJet = tuple[np.ndarray, np.ndarray, np.ndarray]
Profile = Callable[[np.ndarray], list[WarpJet]]


@dataclass(frozen=True, eq=False)
class DoublyWarped:
    phi1: GridFunction
    phi2: GridFunction


@dataclass(frozen=True, eq=False)
class SingleWarp:
    xi: GridFunction


@dataclass(frozen=True, eq=False)
class Band:
    """A cohomogeneity-one torical band.

    ``profile`` is an optional closed form of the warps, used to resample the
    band on other grids and to evaluate the fiber density off the nodes.
    """

    n: int
    grid: Grid
    warp: DoublyWarped | SingleWarp
    fiber_lengths: tuple[float, ...] = ()
    profile: Profile | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.n < 3:
            raise DimensionError(f"band dimension must be >= 3, got {self.n}")
        if isinstance(self.warp, DoublyWarped) and self.n != 3:
            raise DimensionError("doubly warped bands are three-dimensional")
        lengths = tuple(float(x) for x in self.fiber_lengths) or (1.0,) * (self.n - 1)
        if len(lengths) != self.n - 1:
            raise DimensionError(f"expected {self.n - 1} fiber lengths, got {len(lengths)}")
        if min(lengths) <= 0:
            raise NonpositiveError("fiber circle lengths must be positive")
        object.__setattr__(self, "fiber_lengths", lengths)
        for i, f in enumerate(self.warps):
            if f.grid != self.grid:
                raise ValueError("warp sampled on a different grid than the band")
            if np.any(f.values[1:-1] <= 0) or np.any(f.values[[0, -1]] < 0):
                bad = int(np.flatnonzero(f.values <= 0)[0])
                raise NonpositiveError(f"warp {i + 1} is not positive at t={f.t[bad]:.6g}")

    @classmethod
    def from_profile(cls, n: int, grid: Grid, profile: Profile,
                     fiber_lengths: Sequence[float] = ()) -> "Band":
        jets = profile(grid.t)
        fns = [GridFunction(grid, v, d1, d2) for v, d1, d2 in jets]
        warp = DoublyWarped(*fns) if len(fns) == 2 else SingleWarp(fns[0])
        return cls(n, grid, warp, tuple(fiber_lengths), profile)

    @property
    def warps(self) -> list[GridFunction]:
        if isinstance(self.warp, DoublyWarped):
            return [self.warp.phi1, self.warp.phi2]
        return [self.warp.xi]

    @property
    def multiplicities(self) -> list[int]:
        return [1, 1] if isinstance(self.warp, DoublyWarped) else [self.n - 1]

    @property
    def t(self) -> np.ndarray:
        return self.grid.t

    @property
    def width(self) -> float:
        """Distance between the two boundary slices (exact for dt^2 + fiber metrics)."""
        return self.grid.t_max - self.grid.t_min

    def density(self) -> GridFunction:
        """Fiber volume density: phi1*phi2 or xi^(n-1)."""
        vals = np.ones(self.grid.n_points)
        for f, m in zip(self.warps, self.multiplicities):
            vals = vals * f.values**m
        return GridFunction(self.grid, vals)

    def density_at(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if self.profile is not None:
            vals = np.ones_like(t)
            for (v, _, _), m in zip(self.profile(t), self.multiplicities):
                vals = vals * v**m
            return vals
        return np.maximum(CubicSpline(self.t, self.density().values)(t), 0.0)

    def area(self) -> GridFunction:
        """Volume of each t-slice."""
        return GridFunction(self.grid, float(np.prod(self.fiber_lengths)) * self.density().values)

    def is_degenerate(self) -> bool:
        """True when some warp vanishes at an endpoint."""
        return any(np.any(f.values[[0, -1]] <= 0) for f in self.warps)

    def slice(self, start: int, stop: int) -> "Band":
        warps = [f.slice(start, stop) for f in self.warps]
        warp = DoublyWarped(*warps) if len(warps) == 2 else SingleWarp(warps[0])
        return Band(self.n, self.grid.slice(start, stop), warp, self.fiber_lengths, self.profile)

    def interior(self) -> "Band":
        """The band without its two endpoint nodes."""
        return self.slice(1, self.grid.n_points - 1)

    def restrict(self, t_lo: float, t_hi: float) -> "Band":
        """Sub-band made of the nodes lying in [t_lo, t_hi]."""
        slack = 1e-9 * self.grid.spacing
        idx = np.flatnonzero((self.t >= t_lo - slack) & (self.t <= t_hi + slack))
        return self.slice(int(idx[0]), int(idx[-1]) + 1)

    def resample(self, n_points: int) -> "Band":
        grid = Grid(self.grid.t_min, self.grid.t_max, n_points)
        if self.profile is not None:
            return Band.from_profile(self.n, grid, self.profile, self.fiber_lengths)
        fns = [GridFunction(grid, CubicSpline(self.t, f.values)(grid.t)) for f in self.warps]
        warp = DoublyWarped(*fns) if len(fns) == 2 else SingleWarp(fns[0])
        return Band(self.n, grid, warp, self.fiber_lengths)

    def to_csv(self, path: str | Path | None = None) -> str:
        header = "t,phi1,phi2" if isinstance(self.warp, DoublyWarped) else "t,xi"
        cols = [self.t] + [f.values for f in self.warps]
        buf = io.StringIO()
        buf.write(header + "\n")
        for row in zip(*cols):
            buf.write(",".join(f"{x:.17g}" for x in row) + "\n")
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text


@dataclass(frozen=True, eq=False)
class CurvatureProfile:
    grid: Grid
    ric_t: GridFunction
    ric_fiber: list[GridFunction]
    ric_min: GridFunction
    scalar: GridFunction
    mean_curv: GridFunction
    second_ff_sq: GridFunction
    traceless_A_sq: GridFunction

    def columns(self) -> dict[str, np.ndarray]:
        cols = {"t": self.grid.t, "ric_t": self.ric_t.values}
        for i, f in enumerate(self.ric_fiber):
            cols[f"ric_fiber_{i + 1}"] = f.values
        cols.update(
            ric_min=self.ric_min.values,
            scalar=self.scalar.values,
            H=self.mean_curv.values,
            A_sq=self.second_ff_sq.values,
            A0_sq=self.traceless_A_sq.values,
        )
        return cols

    def at(self, t: float) -> dict[str, float]:
        """All fields interpolated at t."""
        cols = self.columns()
        tt = cols.pop("t")
        return {k: float(CubicSpline(tt, v)(t)) for k, v in cols.items()}

    def to_csv(self, path: str | Path | None = None) -> str:
        cols = self.columns()
        buf = io.StringIO()
        buf.write(",".join(cols) + "\n")
        for row in zip(*cols.values()):
            buf.write(",".join(f"{x:.17g}" for x in row) + "\n")
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text


def log_jets(band: Band) -> list[tuple[np.ndarray, np.ndarray]]:
    """(f'/f, f''/f) for each warp."""
    out = []
    for f in band.warps:
        if np.any(f.values <= 0):
            raise DomainError(
                "a warp vanishes on the grid; curvature is singular there "
                "(evaluate on band.interior())"
            )
        out.append((derivative_values(f, 1) / f.values, derivative_values(f, 2) / f.values))
    return out


def _profile(band: Band, ric_t, ric_fiber, scalar, H, A_sq) -> CurvatureProfile:
    g = band.grid
    gf = lambda a: GridFunction(g, a)
    ric_min = np.minimum.reduce([ric_t] + list(ric_fiber))
    traceless = A_sq - H**2 / (band.n - 1)
    return CurvatureProfile(
        g, gf(ric_t), [gf(r) for r in ric_fiber], gf(ric_min), gf(scalar), gf(H),
        gf(A_sq), gf(traceless),
    )


def curvature_doubly_warped(band: Band) -> CurvatureProfile:
    if not isinstance(band.warp, DoublyWarped) or band.n != 3:
        raise DimensionError("curvature_doubly_warped needs a three-dimensional doubly warped band")
    (a, q1), (b, q2) = log_jets(band)
    ric_t = -(q1 + q2)
    ric_1 = -(q1 + a * b)
    ric_2 = -(q2 + a * b)
    return _profile(band, ric_t, [ric_1, ric_2], ric_t + ric_1 + ric_2, a + b, a**2 + b**2)


def curvature_single_warp(band: Band) -> CurvatureProfile:
    if not isinstance(band.warp, SingleWarp):
        raise DimensionError("curvature_single_warp needs a singly warped band")
    n = band.n
    ((k, q),) = log_jets(band)
    ric_t = -(n - 1) * q
    ric_f = -(q + (n - 2) * k**2)
    scalar = -2 * (n - 1) * q - (n - 1) * (n - 2) * k**2
    return _profile(band, ric_t, [ric_f] * (n - 1), scalar, (n - 1) * k, (n - 1) * k**2)


def curvature(band: Band) -> CurvatureProfile:
    if isinstance(band.warp, DoublyWarped):
        return curvature_doubly_warped(band)
    return curvature_single_warp(band)


def alternative_ric_t(band: Band) -> GridFunction:
    """The asymmetric candidate -(phi1 phi2'' + phi2'' phi1)/(phi1 phi2) = -2 phi2''/phi2.

    Kept only to report how far it sits from the finite-difference oracle.
    """
    (_, _), (_, q2) = log_jets(band)
    return GridFunction(band.grid, -2.0 * q2)


@dataclass(frozen=True, eq=False)
class RiemannComponents:
    t: float
    christoffel: np.ndarray  # [k, i, j] = Gamma^k_ij
    riemann: np.ndarray  # [r, s, m, v] = R^r_{smv}
    ricci: np.ndarray  # coordinate components R_ij
    ric_t: float
    ric_fiber: np.ndarray  # orthonormal-frame diagonal
    scalar: float


def _metric_diag(band: Band) -> Callable[[float], np.ndarray]:
    """Diagonal metric components at t: from the closed form when the band
    has one, otherwise from a cubic spline through the warp samples."""
    mults = band.multiplicities
    if band.profile is not None:
        def squares(t):
            return [float(v[0]) ** 2 for v, _, _ in band.profile(np.array([t]))]
    else:
        splines = [CubicSpline(band.t, f.values**2) for f in band.warps]

        def squares(t):
            return [float(s(t)) for s in splines]

    def g(t: float) -> np.ndarray:
        diag = [1.0]
        for sq, m in zip(squares(t), mults):
            diag.extend([sq] * m)
        return np.array(diag)

    return g


def _lowered(dg: np.ndarray) -> np.ndarray:
    """Gamma_{l,ij} = 1/2 (d_i g_jl + d_j g_il - d_l g_ij) from dg[l, i, j] = d_l g_ij."""
    return 0.5 * (np.einsum("ijl->lij", dg) + np.einsum("jil->lij", dg) - dg)


def riemann_fd_oracle(band: Band, t: float, step: float | None = None,
                      order: int = 4) -> RiemannComponents:
    """Brute-force curvature at t from metric samples alone.

    The metric components at t, t +- step (and t +- 2 step for ``order=4``)
    give d_t g and d_t^2 g by central differences of the given order;
    Christoffel symbols and their t derivative follow algebraically, then the
    Riemann tensor. Nothing here knows the warped product formulas.
    """
    if order not in (2, 4):
        raise ValueError(f"order must be 2 or 4, got {order}")
    h = band.grid.spacing if step is None else float(step)
    if t - 2 * h < band.grid.t_min - 1e-12 or t + 2 * h > band.grid.t_max + 1e-12:
        raise BoundaryProximityError(f"t={t} is closer than two steps to the band boundary")
    n = band.n
    metric = _metric_diag(band)
    gm, g0, gp = metric(t - h), metric(t), metric(t + h)
    if order == 2:
        d1 = (gp - gm) / (2 * h)
        d2 = (gp - 2 * g0 + gm) / h**2
    else:
        gmm, gpp = metric(t - 2 * h), metric(t + 2 * h)
        d1 = (gmm - 8 * gm + 8 * gp - gpp) / (12 * h)
        d2 = (-gmm + 16 * gm - 30 * g0 + 16 * gp - gpp) / (12 * h**2)
    g = np.diag(g0)
    ginv = np.linalg.inv(g)
    dg = np.zeros((n, n, n))  # [l, i, j] = d_l g_ij, only l = 0 (t) is nonzero
    ddg = np.zeros((n, n, n))  # [l, i, j] = d_t d_l g_ij
    dg[0] = np.diag(d1)
    ddg[0] = np.diag(d2)
    dginv = -ginv @ dg[0] @ ginv
    G = np.einsum("kl,lij->kij", ginv, _lowered(dg))
    dG = np.zeros((n, n, n, n))  # [m, r, v, s] = d_m Gamma^r_{vs}
    dG[0] = np.einsum("kl,lij->kij", dginv, _lowered(dg)) + np.einsum("kl,lij->kij", ginv, _lowered(ddg))
    # R^r_{smv} = d_m G^r_{vs} - d_v G^r_{ms} + G^r_{ml} G^l_{vs} - G^r_{vl} G^l_{ms}
    R = (
        np.einsum("mrvs->rsmv", dG)
        - np.einsum("vrms->rsmv", dG)
        + np.einsum("rml,lvs->rsmv", G, G)
        - np.einsum("rvl,lms->rsmv", G, G)
    )
    ricci = np.einsum("rsrv->sv", R)
    frame = np.diag(ricci) / g0
    scalar = float(np.sum(frame))
    return RiemannComponents(float(t), G, R, ricci, float(frame[0]), frame[1:], scalar)
