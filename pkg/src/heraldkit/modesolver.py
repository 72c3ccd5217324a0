"""Guided modes of lossless 1D multilayer slabs.

The dispersion function propagates (field, normalised derivative) from the
bottom cladding, where the mode decays, through every finite layer, and
measures the mismatch with a decaying solution in the top cladding.  It is
an entire function of n_eff (no poles), so sign changes bracket roots.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.integrate import trapezoid

from .materials import refractive_index, resolve

EPS_NEFF = 1e-9
GRID_POINTS = 2000
BISECT_TOL = 1e-12


class ModeSolverError(ValueError):
    pass


@dataclass(frozen=True)
class SlabStack:
    """Layers listed bottom to top; the claddings are semi-infinite."""
    bottom: object
    layers: tuple[tuple[object, float], ...]   # (material, thickness_nm)
    top: object
    wavelength_nm: float
    polarization: str = "TE"

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(tuple(l) for l in self.layers))
        if not self.layers:
            raise ModeSolverError("a slab needs at least one finite layer")
        if any(not t > 0 for _, t in self.layers):
            raise ModeSolverError("layer thicknesses must be > 0")
        if self.polarization not in ("TE", "TM"):
            raise ModeSolverError("polarization must be TE or TM")

    def indices(self) -> tuple[float, np.ndarray, float]:
        def real_index(m):
            if isinstance(m, (int, float, complex)):
                n = complex(m)
            else:
                n = refractive_index(resolve(m), self.wavelength_nm)
            if abs(n.imag) >= 1e-6:
                raise ModeSolverError(f"lossy layer (k = {n.imag:g}); pass the real part of the index instead")
            return n.real
        return (real_index(self.bottom), np.array([real_index(m) for m, _ in self.layers]),
                real_index(self.top))

    @classmethod
    def symmetric(cls, core: float, clad: float, thickness_nm: float, wavelength_nm: float, pol="TE"):
        return cls(clad, ((core, thickness_nm),), clad, wavelength_nm, pol)


@dataclass
class SlabMode:
    n_eff: float
    polarization: str
    order: int
    x_nm: np.ndarray = field(repr=False)      # sample positions, 0 at the bottom of the first layer
    profile: np.ndarray = field(repr=False)   # E_y (TE) or H_y (TM), unit power
    meta: dict = field(default_factory=dict)

    def sample(self, x_nm: np.ndarray) -> np.ndarray:
        return _field(self._stack, self.n_eff, np.asarray(x_nm, float)) * self._scale


def _transfer(n_bot, ns, ds, n_top, neff, k0, pol):
    """Return mismatch f(n_eff); f = 0 for a guided mode."""
    g_b = k0 * math.sqrt(max(neff**2 - n_bot**2, 0.0))
    g_t = k0 * math.sqrt(max(neff**2 - n_top**2, 0.0))
    w_b = 1.0 / n_bot**2 if pol == "TM" else 1.0
    w_t = 1.0 / n_top**2 if pol == "TM" else 1.0
    u, v = 1.0, w_b * g_b  # field and weighted derivative at bottom interface
    for n, d in zip(ns, ds):
        w = 1.0 / n**2 if pol == "TM" else 1.0
        q2 = k0**2 * (n**2 - neff**2)
        if q2 > 0:
            q = math.sqrt(q2)
            c, s = math.cos(q * d), math.sin(q * d)
            u, v = u * c + v * s / (w * q), -u * w * q * s + v * c
        elif q2 < 0:
            g = math.sqrt(-q2)
            c, s = math.cosh(g * d), math.sinh(g * d)
            u, v = u * c + v * s / (w * g), u * w * g * s + v * c
        else:
            u, v = u + v * d / w, v
        # keep magnitudes bounded; only the sign/zero matters
        m = max(abs(u), abs(v))
        if m > 1e100:
            u, v = u / m, v / m
    return v + w_t * g_t * u


def _field(stack_data, neff, x):
    """Unnormalised profile at positions x (nm, 0 at first layer bottom)."""
    n_bot, ns, ds, n_top, k0, pol = stack_data
    out = np.empty_like(x)
    g_b = k0 * math.sqrt(neff**2 - n_bot**2)
    g_t = k0 * math.sqrt(neff**2 - n_top**2)
    w_b = 1.0 / n_bot**2 if pol == "TM" else 1.0
    edges = np.concatenate([[0.0], np.cumsum(ds)])
    below = x < 0
    out[below] = np.exp(g_b * x[below])
    u, v = 1.0, w_b * g_b
    for n, d, e0, e1 in zip(ns, ds, edges[:-1], edges[1:]):
        w = 1.0 / n**2 if pol == "TM" else 1.0
        q2 = k0**2 * (n**2 - neff**2)
        sel = (x >= e0) & (x < e1)
        t = x[sel] - e0
        if q2 > 0:
            q = math.sqrt(q2)
            out[sel] = u * np.cos(q * t) + v * np.sin(q * t) / (w * q)
            c, s = math.cos(q * d), math.sin(q * d)
            u, v = u * c + v * s / (w * q), -u * w * q * s + v * c
        elif q2 < 0:
            g = math.sqrt(-q2)
            out[sel] = u * np.cosh(g * t) + v * np.sinh(g * t) / (w * g)
            c, s = math.cosh(g * d), math.sinh(g * d)
            u, v = u * c + v * s / (w * g), u * w * g * s + v * c
        else:
            out[sel] = u + v * t / w
            u = u + v * d / w
    above = x >= edges[-1]
    out[above] = u * np.exp(-g_t * (x[above] - edges[-1]))
    return out


def _bisect(f, a, b, fa):
    while b - a > BISECT_TOL:
        m = 0.5 * (a + b)
        fm = f(m)
        if fm == 0:
            return m
        if (fm > 0) == (fa > 0):
            a, fa = m, fm
        else:
            b = m
    return 0.5 * (a + b)


def solve_modes(stack: SlabStack, samples_per_nm: float = 1.0, margin_nm: float | None = None) -> list[SlabMode]:
    """All guided modes, highest n_eff first.  Empty when nothing is guided."""
    n_bot, ns, n_top = stack.indices()
    ds = np.array([t for _, t in stack.layers], float)
    k0 = 2 * math.pi / stack.wavelength_nm
    pol = stack.polarization
    lo = max(n_bot, n_top) + EPS_NEFF
    hi = ns.max() - EPS_NEFF
    if hi <= lo:
        return []
    f = lambda ne: _transfer(n_bot, ns, ds, n_top, ne, k0, pol)
    grid = np.linspace(lo, hi, GRID_POINTS)
    vals = [f(g) for g in grid]
    roots = []
    for a, b, fa, fb in zip(grid[:-1], grid[1:], vals[:-1], vals[1:]):
        if fa == 0:
            roots.append(a)
        elif (fa > 0) != (fb > 0):
            roots.append(_bisect(f, a, b, fa))
    if vals[-1] == 0:
        roots.append(grid[-1])
    roots = sorted(set(roots), reverse=True)

    total = ds.sum()
    data = (n_bot, ns, ds, n_top, k0, pol)
    modes = []
    if not roots:
        return modes
    # one grid for every mode of the stack, wide enough for the least confined
    decay = k0 * math.sqrt(roots[-1] ** 2 - max(n_bot, n_top) ** 2)
    m = margin_nm if margin_nm is not None else min(12.0 / decay, 20 * total)
    npts = int(math.ceil((total + 2 * m) * samples_per_nm)) + 1
    x = np.linspace(-m, total + m, npts)
    for order, ne in enumerate(roots):
        ne = float(ne)
        prof = _field(data, ne, x)
        scale = _unit_power_scale(prof, x, data, ne)
        mode = SlabMode(ne, pol, order, x, prof * scale,
                        {"grid_step": float(grid[1] - grid[0]),
                         "note": "roots closer than grid_step may be missed"})
        mode._stack, mode._scale = data, scale
        modes.append(mode)
    return modes


def _index_at(data, x):
    n_bot, ns, ds, n_top, _, _ = data
    edges = np.concatenate([[0.0], np.cumsum(ds)])
    out = np.full_like(x, n_bot)
    for n, e0, e1 in zip(ns, edges[:-1], edges[1:]):
        out[(x >= e0) & (x < e1)] = n
    out[x >= edges[-1]] = n_top
    return out


def _unit_power_scale(prof, x, data, neff):
    # guided power per unit width in units with eps0 = mu0 = c = 1:
    # TE: (n_eff/2) int |E|^2 dx ; TM: (n_eff/2) int |H|^2 / n^2 dx
    w = prof**2
    if data[5] == "TM":
        w = w / _index_at(data, x) ** 2
    p = 0.5 * neff * trapezoid(w, x * 1e-3)
    return 1.0 / math.sqrt(p)


def mode_overlap(a, b, x_a=None, x_b=None) -> float:
    """|<a|b>|^2 / (<a|a><b|b>) on a common grid (resampled to the finer one)."""
    a = np.asarray(a)
    b = np.asarray(b)
    if x_a is not None and x_b is not None:
        x_a, x_b = np.asarray(x_a, float), np.asarray(x_b, float)
        fine = x_a if np.median(np.diff(x_a)) <= np.median(np.diff(x_b)) else x_b
        lo, hi = max(x_a[0], x_b[0]), min(x_a[-1], x_b[-1])
        xs = fine[(fine >= lo) & (fine <= hi)]
        a = np.interp(xs, x_a, a.real) + 1j * np.interp(xs, x_a, np.imag(a))
        b = np.interp(xs, x_b, b.real) + 1j * np.interp(xs, x_b, np.imag(b))
    elif a.shape != b.shape:
        raise ModeSolverError("profiles on different grids need their sample positions")
    else:
        xs = None
    integ = (lambda y: trapezoid(y, xs)) if xs is not None else np.sum
    num = abs(integ(a * np.conj(b))) ** 2
    den = integ(np.abs(a) ** 2).real * integ(np.abs(b) ** 2).real
    if den == 0:
        raise ModeSolverError("zero profile")
    return float(min(num / den, 1.0))


def slab_from_column(runs: Sequence[tuple[str, float, float]], wavelength_nm: float, y_lo: float, y_hi: float,
                     polarization: str = "TE", inline=None) -> tuple[SlabStack, float]:
    """Slab stack for the window [y_lo, y_hi] (um) of a rasterised column.

    Materials at the window edges become the semi-infinite claddings.  The
    second return value is the y (um) of the slab origin (first-layer bottom)
    so a profile can be evaluated back on the column: x_nm = (y_origin - y)*1e3.
    Layers are ordered bottom (large y) to top.
    """
    inline = inline or {}
    cut = [(m, max(a, y_lo), min(b, y_hi)) for m, a, b in runs if b > y_lo and a < y_hi]
    if len(cut) < 3:
        raise ModeSolverError("window must contain a core between two cladding materials")
    mat = lambda name: inline.get(name, name)
    top_name, bot_name = cut[0][0], cut[-1][0]
    inner = cut[1:-1]
    layers = tuple((mat(m), (b - a) * 1e3) for m, a, b in reversed(inner))
    origin = inner[-1][2]
    return SlabStack(mat(bot_name), layers, mat(top_name), wavelength_nm, polarization), origin
