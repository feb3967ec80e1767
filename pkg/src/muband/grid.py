"""Uniform 1-D grids, sampled functions, differentiation and quadrature."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.integrate import cumulative_simpson
from scipy.interpolate import CubicSpline

from .errors import MalformedCSVError, RangeError, TooFewPointsError

DEFAULT_POINTS = 2001

# 2-point Gauss-Legendre nodes on [0, 1]; exact for cubics.
_GL_X = np.array([0.5 - 0.5 / math.sqrt(3.0), 0.5 + 0.5 / math.sqrt(3.0)])


@dataclass(frozen=True)
class Grid:
    t_min: float
    t_max: float
    n_points: int = DEFAULT_POINTS

    def __post_init__(self):
        if not self.n_points >= 3:
            raise TooFewPointsError(f"grid needs at least 3 points, got {self.n_points}")
        if not self.t_min < self.t_max:
            raise RangeError(f"t_min={self.t_min} must be below t_max={self.t_max}")

    @property
    def spacing(self) -> float:
        return (self.t_max - self.t_min) / (self.n_points - 1)

    @cached_property
    def t(self) -> np.ndarray:
        nodes = np.linspace(self.t_min, self.t_max, self.n_points)
        nodes.setflags(write=False)
        return nodes

    @property
    def midpoints(self) -> np.ndarray:
        t = self.t
        return 0.5 * (t[:-1] + t[1:])

    def refined(self, factor: int = 2) -> "Grid":
        """Same interval with the spacing divided by ``factor``."""
        return Grid(self.t_min, self.t_max, factor * (self.n_points - 1) + 1)

    def slice(self, start: int, stop: int) -> "Grid":
        """Sub-grid of nodes ``start..stop-1`` (same spacing)."""
        t = self.t
        return Grid(float(t[start]), float(t[stop - 1]), stop - start)

    def locate(self, t: float) -> int:
        """Index of the cell [t_i, t_{i+1}] containing t (clamped)."""
        i = int(math.floor((t - self.t_min) / self.spacing))
        return min(max(i, 0), self.n_points - 2)


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Samples of a real function on a grid.

    ``d1`` and ``d2`` optionally carry exact first/second derivative samples
    supplied by closed-form constructors. Entries there may be infinite at
    endpoints where the function itself is singular; ``values`` are always
    finite.
    """

    grid: Grid
    values: np.ndarray
    d1: np.ndarray | None = field(default=None, repr=False)
    d2: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", vals)
        if vals.shape != (self.grid.n_points,):
            raise ValueError(
                f"values have shape {vals.shape}, grid has {self.grid.n_points} points"
            )
        if not np.all(np.isfinite(vals)):
            raise ValueError("grid function values must be finite")
        for name in ("d1", "d2"):
            arr = getattr(self, name)
            if arr is not None:
                arr = np.asarray(arr, dtype=float)
                if arr.shape != vals.shape:
                    raise ValueError(f"{name} shape {arr.shape} does not match values")
                object.__setattr__(self, name, arr)

    @classmethod
    def from_callable(cls, grid: Grid, fn: Callable, d1: Callable | None = None,
                      d2: Callable | None = None) -> "GridFunction":
        t = grid.t
        return cls(
            grid,
            fn(t),
            None if d1 is None else np.broadcast_to(d1(t), t.shape).copy(),
            None if d2 is None else np.broadcast_to(d2(t), t.shape).copy(),
        )

    @property
    def t(self) -> np.ndarray:
        return self.grid.t

    def has_exact_derivatives(self) -> bool:
        return self.d1 is not None and self.d2 is not None

    def strip(self) -> "GridFunction":
        """Copy without exact derivative samples."""
        return GridFunction(self.grid, self.values)

    def slice(self, start: int, stop: int) -> "GridFunction":
        cut = lambda a: None if a is None else a[start:stop]
        return GridFunction(self.grid.slice(start, stop), self.values[start:stop],
                            cut(self.d1), cut(self.d2))

    def __call__(self, t):
        """Cubic-spline interpolation of the samples."""
        return CubicSpline(self.grid.t, self.values)(t)

    def to_csv(self, path: str | Path | None = None) -> str:
        buf = io.StringIO()
        buf.write("t,value\n")
        for ti, vi in zip(self.t, self.values):
            buf.write(f"{ti:.17g},{vi:.17g}\n")
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_csv(cls, path: str | Path) -> "GridFunction":
        rows = list(csv.reader(io.StringIO(Path(path).read_text())))
        if not rows or [c.strip() for c in rows[0]] != ["t", "value"]:
            raise MalformedCSVError("expected header 't,value'")
        try:
            data = np.array([[float(a), float(b)] for a, b in rows[1:]])
        except ValueError as exc:
            raise MalformedCSVError(str(exc)) from exc
        grid = Grid(data[0, 0], data[-1, 0], len(data))
        return cls(grid, data[:, 1])


# fourth-order one-sided stencils for nodes 0 and 1 (times 12 dt or 12 dt^2)
_D1_EDGE = (np.array([-25.0, 48.0, -36.0, 16.0, -3.0]), np.array([-3.0, -10.0, 18.0, -6.0, 1.0]))
_D2_EDGE = (np.array([45.0, -154.0, 214.0, -156.0, 61.0, -10.0]),
            np.array([10.0, -15.0, -4.0, 14.0, -6.0, 1.0]))
# third-order five-point fallback for the second derivative on 5-node grids
_D2_EDGE_SHORT = (np.array([35.0, -104.0, 114.0, -56.0, 11.0]),
                  np.array([11.0, -20.0, 6.0, 4.0, -1.0]))


def derivative(f: GridFunction, order: int = 1) -> GridFunction:
    """Finite-difference derivative of order 1 or 2.

    Fourth-order central stencils on nodes 2..N-3 and fourth-order one-sided
    stencils on the two nodes at each end (third order for the second
    derivative on a 5-node grid). Exact derivative samples on ``f`` are
    ignored here.
    """
    if order not in (1, 2):
        raise ValueError(f"order must be 1 or 2, got {order}")
    y = f.values
    n = len(y)
    if n < 5:
        raise TooFewPointsError(f"derivative needs at least 5 points, got {n}")
    dt = f.grid.spacing
    out = np.empty(n)
    if order == 1:
        out[2:-2] = (y[:-4] - 8 * y[1:-3] + 8 * y[3:-1] - y[4:]) / (12 * dt)
        w0, w1 = _D1_EDGE
        sign, scale = -1.0, 12 * dt
    else:
        out[2:-2] = (-y[:-4] + 16 * y[1:-3] - 30 * y[2:-2] + 16 * y[3:-1] - y[4:]) / (12 * dt**2)
        w0, w1 = _D2_EDGE if n >= 6 else _D2_EDGE_SHORT
        sign, scale = 1.0, 12 * dt**2
    m = len(w0)
    head, tail = y[:m], y[::-1][:m]
    out[0] = w0 @ head / scale
    out[1] = w1 @ head / scale
    # mirrored stencils pick up (-1)^order
    out[-1] = sign * (w0 @ tail) / scale
    out[-2] = sign * (w1 @ tail) / scale
    return GridFunction(f.grid, out)


def derivative_values(f: GridFunction, order: int) -> np.ndarray:
    """Derivative samples, preferring exact ones carried by ``f``."""
    exact = f.d1 if order == 1 else f.d2
    if exact is not None:
        return exact
    return derivative(f, order).values


def _cubic_piece(f: GridFunction, i: int, a: float, b: float) -> float:
    """Integral over [a, b] inside cell i of the 4-point local interpolant."""
    if b <= a:
        return 0.0
    n = f.grid.n_points
    j0 = min(max(i - 1, 0), n - 4) if n >= 4 else 0
    idx = np.arange(j0, min(j0 + 4, n))
    tn = f.grid.t[idx]
    yn = f.values[idx]
    x = a + (b - a) * _GL_X
    vals = np.zeros_like(x)
    for k in range(len(idx)):
        basis = np.ones_like(x)
        for m in range(len(idx)):
            if m != k:
                basis *= (x - tn[m]) / (tn[k] - tn[m])
        vals += yn[k] * basis
    return 0.5 * (b - a) * float(vals.sum())


def _simpson_nodes(y: np.ndarray, dt: float) -> float:
    m = len(y) - 1
    if m <= 0:
        return 0.0
    if m == 1:
        return 0.5 * dt * (y[0] + y[1])
    if m == 3:
        return 3 * dt / 8 * (y[0] + 3 * y[1] + 3 * y[2] + y[3])
    if m % 2 == 1:
        head = _simpson_nodes(y[: m - 2], dt)
        return head + 3 * dt / 8 * (y[m - 3] + 3 * y[m - 2] + 3 * y[m - 1] + y[m])
    return dt / 3 * (y[0] + 4 * y[1:m:2].sum() + 2 * y[2:m - 1:2].sum() + y[m])


def integrate(f: GridFunction, a: float | None = None, b: float | None = None) -> float:
    """Integral of the sampled function over [a, b].

    Composite Simpson over the grid nodes inside [a, b] (3/8 rule closes an odd
    count); the partial cells at either end are integrated with the local cubic
    interpolant.
    """
    g = f.grid
    a = g.t_min if a is None else float(a)
    b = g.t_max if b is None else float(b)
    slack = 1e-12 * max(1.0, abs(g.t_min), abs(g.t_max))
    if a < g.t_min - slack or b > g.t_max + slack or a > b:
        raise RangeError(f"[{a}, {b}] is not inside [{g.t_min}, {g.t_max}]")
    a = min(max(a, g.t_min), g.t_max)
    b = min(max(b, g.t_min), g.t_max)
    t = g.t
    dt = g.spacing
    i0 = int(math.ceil((a - g.t_min) / dt - 1e-9))
    i1 = int(math.floor((b - g.t_min) / dt + 1e-9))
    if i0 > i1:
        return _cubic_piece(f, g.locate(a), a, b)
    if i1 - i0 == 1:
        total = _cubic_piece(f, i0, t[i0], t[i1])
    else:
        total = _simpson_nodes(f.values[i0:i1 + 1], dt)
    if a < t[i0]:
        total += _cubic_piece(f, i0 - 1, a, t[i0])
    if b > t[i1]:
        total += _cubic_piece(f, i1, t[i1], b)
    return total


def cumulative_integral(f: GridFunction, t0: float | None = None) -> GridFunction:
    """Samples of the running integral from ``t0`` (default ``t_min``) to each node."""
    run = cumulative_simpson(f.values, dx=f.grid.spacing, initial=0.0)
    if t0 is not None:
        run = run - integrate(f, f.grid.t_min, t0)
    return GridFunction(f.grid, run)
