"""Nonlinear steady-state heat conduction on a 2D chip cross-section.

Solves div(k(T) grad T) + q = 0 with a cell-centred five-point finite-volume
scheme.  Coordinates in um with y pointing down from the chip's top surface
(y = 0) to its backside (y = height).  The 2D model represents a chip of
out-of-plane extent ``depth_um``: the source power P is spread uniformly over
the volume L * H * depth.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import pyamg
import scipy.sparse as sp
from scipy.interpolate import RegularGridInterpolator
from scipy.sparse.linalg import cg

from .materials import MaterialRangeError, ThermalMaterial, get_thermal_material, thermal_conductivity_array

UM = 1e-6
EDGES = ("top", "bottom", "left", "right")


class ThermalError(ValueError):
    pass


class ThermalConvergenceError(RuntimeError):
    def __init__(self, msg, residual):
        self.residual = residual
        super().__init__(f"{msg} (last residual {residual:.3e})")


@dataclass(frozen=True)
class BoundarySegment:
    """Part of one domain edge, from ``start`` to ``stop`` (um along the edge).

    Positions run along x for top/bottom edges and along y for left/right.
    ``temperature_K`` None means adiabatic.
    """
    edge: str
    start: float
    stop: float
    temperature_K: float | None = None

    @property
    def isothermal(self) -> bool:
        return self.temperature_K is not None


@dataclass(frozen=True)
class HeatSource:
    x_um: float
    y_um: float
    width_um: float
    height_um: float
    power_mW: float


@dataclass(frozen=True)
class ThermalProblem:
    width_um: float
    height_um: float
    grid_um: float
    conductivity: ThermalMaterial
    source: HeatSource
    boundaries: tuple[BoundarySegment, ...]
    base_temperature_K: float = 2.2
    depth_um: float = 100.0
    max_outer: int = 100
    tol_K: float = 1e-5
    linear_rtol: float = 1e-10

    def __post_init__(self):
        object.__setattr__(self, "boundaries", tuple(self.boundaries))
        if not (self.width_um > 0 and self.height_um > 0 and self.grid_um > 0 and self.depth_um > 0):
            raise ThermalError("domain size, grid and depth must be positive")
        s = self.source
        if s.power_mW < 0:
            raise ThermalError("source power must be >= 0")
        if not (s.width_um > 0 and s.height_um > 0):
            raise ThermalError("source rectangle must have positive size")
        eps = 1e-9
        if (s.x_um < -eps or s.y_um < -eps or s.x_um + s.width_um > self.width_um + eps
                or s.y_um + s.height_um > self.height_um + eps):
            raise ThermalError("source rectangle must lie inside the domain")
        for b in self.boundaries:
            if b.edge not in EDGES:
                raise ThermalError(f"unknown edge {b.edge!r}")
            if not b.stop > b.start:
                raise ThermalError("boundary segment must have stop > start")
        if not any(b.isothermal for b in self.boundaries):
            raise ThermalError("at least one isothermal boundary segment is required (otherwise singular)")

    @property
    def shape(self) -> tuple[int, int]:
        return int(round(self.width_um / self.grid_um)), int(round(self.height_um / self.grid_um))


@dataclass
class TemperatureField:
    T: np.ndarray                     # (nx, ny) cell-centre temperatures, K
    x_um: np.ndarray
    y_um: np.ndarray
    problem: ThermalProblem
    iterations: int
    residual: float
    last_update_K: float
    faces: dict = field(default_factory=dict)   # edge -> boundary-face temperatures
    outflow_W: float = 0.0

    def extended(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Temperatures on the cell centres plus the boundary faces."""
        p = self.problem
        x = np.concatenate([[0.0], self.x_um, [p.width_um]])
        y = np.concatenate([[0.0], self.y_um, [p.height_um]])
        nx, ny = self.T.shape
        E = np.empty((nx + 2, ny + 2))
        E[1:-1, 1:-1] = self.T
        E[1:-1, 0] = self.faces["top"]
        E[1:-1, -1] = self.faces["bottom"]
        E[0, 1:-1] = self.faces["left"]
        E[-1, 1:-1] = self.faces["right"]
        E[0, 0] = 0.5 * (E[1, 0] + E[0, 1])
        E[-1, 0] = 0.5 * (E[-2, 0] + E[-1, 1])
        E[0, -1] = 0.5 * (E[1, -1] + E[0, -2])
        E[-1, -1] = 0.5 * (E[-2, -1] + E[-1, -2])
        return x, y, E

    def at(self, x_um, y_um):
        x, y, E = self.extended()
        f = RegularGridInterpolator((x, y), E, method="linear")
        return f(np.column_stack([np.atleast_1d(x_um), np.atleast_1d(y_um)]))

    @property
    def max_rise_K(self) -> float:
        return float(self.T.max() - self.problem.base_temperature_K)


def _segment_mask(centres, seg: BoundarySegment):
    return (centres >= seg.start) & (centres < seg.stop)


def _boundary_temps(problem: ThermalProblem, edge: str, centres: np.ndarray) -> np.ndarray:
    """NaN = adiabatic, otherwise the imposed temperature; later segments win."""
    out = np.full(centres.shape, np.nan)
    for seg in problem.boundaries:
        if seg.edge == edge:
            m = _segment_mask(centres, seg)
            out[m] = np.nan if seg.temperature_K is None else seg.temperature_K
    return out


def _source_density(problem: ThermalProblem, x, y) -> np.ndarray:
    """Volumetric heating W/m^3 per cell, using exact cell/rectangle overlap."""
    s = problem.source
    h = problem.grid_um
    ox = np.clip(np.minimum(x + h / 2, s.x_um + s.width_um) - np.maximum(x - h / 2, s.x_um), 0, None)
    oy = np.clip(np.minimum(y + h / 2, s.y_um + s.height_um) - np.maximum(y - h / 2, s.y_um), 0, None)
    frac = np.outer(ox, oy) / (h * h)
    vol = s.width_um * s.height_um * problem.depth_um * UM**3
    return frac * (s.power_mW * 1e-3 / vol)


def _assemble(k, h, bc):
    """Conductance matrix (W/(m K) per unit depth) and Dirichlet RHS pieces."""
    nx, ny = k.shape
    idx = np.arange(nx * ny).reshape(nx, ny)
    rows, cols, vals = [], [], []
    diag = np.zeros((nx, ny))
    # interior faces: harmonic mean; square cells so G = k_face
    kx = 2 * k[:-1] * k[1:] / (k[:-1] + k[1:])
    ky = 2 * k[:, :-1] * k[:, 1:] / (k[:, :-1] + k[:, 1:])
    for a, b, g in ((idx[:-1], idx[1:], kx), (idx[:, :-1], idx[:, 1:], ky)):
        a, b, g = a.ravel(), b.ravel(), g.ravel()
        rows += [a, b]
        cols += [b, a]
        vals += [-g, -g]
    diag[:-1] += kx
    diag[1:] += kx
    diag[:, :-1] += ky
    diag[:, 1:] += ky
    rhs = np.zeros((nx, ny))
    gd = {}
    for edge, sl in (("top", (slice(None), 0)), ("bottom", (slice(None), -1)),
                     ("left", (0, slice(None))), ("right", (-1, slice(None)))):
        Tb = bc[edge]
        iso = ~np.isnan(Tb)
        g = np.where(iso, 2.0 * k[sl], 0.0)  # half-cell conductance
        gd[edge] = g
        diag[sl] += g
        rhs[sl] += g * np.nan_to_num(Tb)
    rows.append(idx.ravel())
    cols.append(idx.ravel())
    vals.append(diag.ravel())
    A = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(nx * ny,) * 2)
    return A, rhs, gd


def solve_steady(problem: ThermalProblem) -> TemperatureField:
    """Picard iteration on k(T) with a preconditioned CG inner solve."""
    nx, ny = problem.shape
    h = problem.grid_um
    x = (np.arange(nx) + 0.5) * h
    y = (np.arange(ny) + 0.5) * h
    bc = {"top": _boundary_temps(problem, "top", x), "bottom": _boundary_temps(problem, "bottom", x),
          "left": _boundary_temps(problem, "left", y), "right": _boundary_temps(problem, "right", y)}
    if not any((~np.isnan(v)).any() for v in bc.values()):
        raise ThermalError("isothermal segments do not cover any boundary face at this grid spacing")
    q = _source_density(problem, x, y) * (h * UM) ** 2  # W/m per cell (unit depth)
    iso_min = min(np.nanmin(v) for v in bc.values() if (~np.isnan(v)).any())
    T = np.full((nx, ny), problem.base_temperature_K, float)
    mat = problem.conductivity
    residual = math.inf
    delta = math.inf
    it = 0
    for it in range(1, problem.max_outer + 1):
        try:
            k = thermal_conductivity_array(mat, T)
        except MaterialRangeError as exc:
            raise MaterialRangeError(f"temperature left the conductivity table during iteration {it}: {exc}") \
                from None
        A, rhs, gd = _assemble(k, h, bc)
        b = (q + rhs).ravel()
        # "local" weighting avoids the randomised spectral-radius estimate, keeping runs bitwise repeatable
        ml = pyamg.smoothed_aggregation_solver(A, symmetry="symmetric",
                                               smooth=("jacobi", {"omega": 4.0 / 3.0, "weighting": "local"}))
        sol, info = cg(A, b, x0=T.ravel(), rtol=problem.linear_rtol, atol=0.0, maxiter=2000,
                       M=ml.aspreconditioner())
        bn = np.linalg.norm(b)
        residual = float(np.linalg.norm(b - A @ sol) / (bn if bn > 0 else 1.0))
        if info != 0:
            raise ThermalConvergenceError("linear solve did not reach tolerance", residual)
        T_new = sol.reshape(nx, ny)
        delta = float(np.max(np.abs(T_new - T)))
        T = T_new
        if delta < problem.tol_K:
            break
    else:
        raise ThermalConvergenceError(f"Picard iteration stalled after {problem.max_outer} steps "
                                      f"(max update {delta:.3e} K)", residual)
    if T.min() < iso_min - 1e-9:
        raise ThermalError("solution undershoots the coldest boundary (maximum principle violated)")
    # boundary-face temperatures and heat leaving through isothermal faces
    k = thermal_conductivity_array(mat, T)
    _, _, gd = _assemble(k, h, bc)
    faces = {}
    out = 0.0
    for edge, sl in (("top", (slice(None), 0)), ("bottom", (slice(None), -1)),
                     ("left", (0, slice(None))), ("right", (-1, slice(None)))):
        Tb = bc[edge]
        Tc = T[sl]
        faces[edge] = np.where(np.isnan(Tb), Tc, Tb)
        out += float(np.sum(gd[edge] * (Tc - np.nan_to_num(Tb))))
    return TemperatureField(T, x, y, problem, it, residual, delta, faces, out * problem.depth_um * UM)


def backside_profile(tf: TemperatureField, y_um: float | None = None) -> list[tuple[float, float]]:
    """(x, T) along the row at ``y_um`` (default: the backside), interpolated."""
    p = tf.problem
    y = p.height_um if y_um is None else float(y_um)
    if not 0 <= y <= p.height_um:
        raise ThermalError(f"y = {y} um outside the domain")
    xs = tf.x_um
    Ts = tf.at(xs, np.full(xs.shape, y))
    return [(float(a), float(b)) for a, b in zip(xs, Ts)]


def rise_at(tf: TemperatureField, x_um: float, y_um: float) -> float:
    """Temperature above the base temperature at one point."""
    p = tf.problem
    if not (0 <= x_um <= p.width_um and 0 <= y_um <= p.height_um):
        raise ThermalError("point outside the domain")
    return float(tf.at(x_um, y_um)[0] - p.base_temperature_K)


# ------------------------------------------------------------------ presets

def anchored_chip(width_um: float = 2000.0, height_um: float = 400.0, grid_um: float = 4.0, *,
                  source_x_um: float = 200.0, source_width_um: float = 28.4, source_height_um: float = 40.0,
                  power_mW: float = 0.33, base_temperature_K: float = 2.2, anchor_fraction: float = 0.5,
                  depth_um: float = 100.0, material: str | ThermalMaterial = "Si-cryo") -> ThermalProblem:
    """Chip cross-section heated under the grating, anchored on the bottom right.

    The anchor covers the rightmost ``anchor_fraction`` of the bottom edge;
    every other boundary is adiabatic.
    """
    if not 0 < anchor_fraction <= 1:
        raise ThermalError("anchor_fraction must lie in (0, 1]")
    mat = material if isinstance(material, ThermalMaterial) else get_thermal_material(material)
    anchor = BoundarySegment("bottom", width_um * (1 - anchor_fraction), width_um + 1e-9, base_temperature_K)
    src = HeatSource(source_x_um, 0.0, source_width_um, source_height_um, power_mW)
    return ThermalProblem(width_um, height_um, grid_um, mat, src, (anchor,), base_temperature_K, depth_um)


def constant_conductivity(k_W_per_mK: float, t_range=(0.0, 1e4), name="const") -> ThermalMaterial:
    return ThermalMaterial(name, tuple(map(float, t_range)), (float(k_W_per_mK),) * 2, "constant")
