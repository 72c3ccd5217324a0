"""2D Yee-grid time stepping, sources, DFT monitors and run control.

Normalised units: eps0 = mu0 = c = 1 and lengths (hence c*t) in um, so the
angular frequency of vacuum wavelength lambda (um) is 2*pi/lambda.

"TE" means the electric field points out of the simulation plane (Ez, Hx,
Hy).  "TM" is the dual set (Hz, Ex, Ey).  Internally both are handled as a
node field F living at cell centres and a face field G = (Gx, Gy).
"""
from __future__ import annotations

import hashlib
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from ..geometry import Mixture, PermittivityMap
from ..materials import refractive_index, resolve
from ..modesolver import ModeSolverError, slab_from_column, solve_modes
from . import kernels

MAX_COURANT = 0.7
ENGINE_VERSION = "heraldkit-fdtd-2"


class FdtdError(RuntimeError):
    pass


class ConfigError(FdtdError, ValueError):
    pass


class DivergenceError(FdtdError):
    def __init__(self, step: int, cell: tuple[int, int], component: str):
        self.step, self.cell, self.component = step, cell, component
        super().__init__(f"non-finite {component} at step {step}, cell (i={cell[0]}, j={cell[1]})")


# ------------------------------------------------------------------ config

@dataclass(frozen=True)
class SourceSpec:
    """Unidirectional line source.

    kind="mode": vertical injection line at x = ``position``; the guided mode
    of the column inside ``window`` (y_lo, y_hi) is launched along ``direction``
    ("+x" or "-x").  kind="plane": horizontal line at y = ``position`` with a
    uniform profile, launched along "+y"/"-y" (use with periodic_x).
    """
    kind: str = "mode"
    position: float = 0.0
    direction: str = "+x"
    window: tuple[float, float] | None = None
    mode_order: int = 0
    amplitude: float = 1.0


@dataclass(frozen=True)
class MonitorSpec:
    """Flux line.  orientation "h": y = position, spanning x in [start, stop).
    "v": x = position, spanning y in [start, stop).  None = non-PML extent."""
    name: str
    orientation: str
    position: float
    start: float | None = None
    stop: float | None = None


@dataclass(frozen=True)
class FieldMonitorSpec:
    """Frequency-domain snapshot of the node field on every ``stride``-th cell."""
    name: str
    stride: int = 4


@dataclass
class SimulationConfig:
    pmap: PermittivityMap
    wavelengths_nm: Sequence[float]
    source: SourceSpec
    monitors: Sequence[MonitorSpec] = ()
    courant: float = 0.7
    shutoff: float = 1e-5
    max_steps: int = 400_000
    pml_cells: int = 20
    pml_order: int = 4
    pml_kappa_max: float = 3.0
    pml_alpha_max: float = 0.0
    pml_sigma_scale: float = 1.0
    primary_wavelength_nm: float | None = None
    fractional_bandwidth: float = 0.1
    polarization: str = "TE"
    pec_materials: Sequence[str] = ("Au",)
    periodic_x: bool = False
    field_monitors: Sequence[FieldMonitorSpec] = ()
    check_every: int = 50
    parallel: bool = False
    dtype: str = "float32"
    calibrate: bool = True
    cache_dir: str | None = None
    min_cells_per_wavelength: float = 20.0

    def __post_init__(self):
        self.wavelengths_nm = tuple(float(w) for w in self.wavelengths_nm)
        self.monitors = tuple(self.monitors)
        self.field_monitors = tuple(self.field_monitors)
        self.pec_materials = tuple(self.pec_materials)

    @property
    def lambda0_nm(self) -> float:
        if self.primary_wavelength_nm is not None:
            return float(self.primary_wavelength_nm)
        return float(np.mean(self.wavelengths_nm))

    @property
    def dt(self) -> float:
        return self.courant * min(self.pmap.dx, self.pmap.dy) / math.sqrt(2.0)

    def interior(self) -> tuple[int, int, int, int]:
        """Index bounds [i0, i1) x [j0, j1) of the non-PML region."""
        nx, ny = self.pmap.shape
        p = self.pml_cells
        if self.periodic_x:
            return 0, nx, p, ny - p
        return p, nx - p, p, ny - p

    def validate(self) -> list[str]:
        """Raise ConfigError on invalid settings; return soft warnings."""
        warns = []
        if not 0 < self.courant <= MAX_COURANT:
            raise ConfigError(f"Courant factor S = {self.courant} outside (0, {MAX_COURANT}]")
        if not self.wavelengths_nm or min(self.wavelengths_nm) <= 0:
            raise ConfigError("need at least one positive wavelength")
        if self.polarization not in ("TE", "TM"):
            raise ConfigError("polarization must be 'TE' or 'TM'")
        if not 0 < self.shutoff < 1:
            raise ConfigError("shutoff must lie in (0, 1)")
        if self.max_steps < 1:
            raise ConfigError("max_steps must be >= 1")
        if self.pml_cells < 1:
            raise ConfigError("pml_cells must be >= 1")
        if self.dtype not in ("float64", "float32"):
            raise ConfigError("dtype must be float64 or float32")
        nx, ny = self.pmap.shape
        i0, i1, j0, j1 = self.interior()
        if i1 - i0 < 3 or j1 - j0 < 3:
            raise ConfigError("domain has no room inside the absorbers")
        names = {m.name for m in self.monitors}
        if len(names) != len(self.monitors):
            raise ConfigError("monitor names must be unique")
        for m in self.monitors:
            _monitor_indices(self, m)  # raises if outside
        _source_index(self)
        s = self.source
        if s.kind == "mode" and s.direction not in ("+x", "-x"):
            raise ConfigError("mode sources launch along +x or -x")
        if s.kind == "plane" and s.direction not in ("+y", "-y"):
            raise ConfigError("plane sources launch along +y or -y")
        if s.kind not in ("mode", "plane"):
            raise ConfigError(f"unknown source kind {s.kind!r}")
        # resolution
        lam = min(self.wavelengths_nm) * 1e-3
        nmax = max([1.0] + [abs(n) for n in _material_indices(self.pmap, self.lambda0_nm, self.pec_materials, real=True)])
        cells = lam / (nmax * max(self.pmap.dx, self.pmap.dy))
        if cells < self.min_cells_per_wavelength:
            warns.append(f"resolution {cells:.1f} cells per wavelength in the densest material "
                         f"(< {self.min_cells_per_wavelength:g})")
        return warns


# --------------------------------------------------------------- materials

@dataclass
class CoefficientTable:
    eps_inf: np.ndarray
    ca: np.ndarray
    cb: np.ndarray
    kd: np.ndarray
    bd: np.ndarray
    kinds: list[str]
    has_drude: bool


def _entry_eps(pmap: PermittivityMap, entry, wl_nm: float) -> complex:
    def eps_of(name):
        mat = pmap.inline.get(name) or resolve(name)
        return complex(refractive_index(mat, wl_nm)) ** 2
    if isinstance(entry, Mixture):
        return sum(f * eps_of(m) for m, f in entry.parts)
    return eps_of(entry)


def _material_indices(pmap, wl_nm, pec, real=False):
    out = []
    for e in pmap.materials:
        if isinstance(e, str) and e in pec:
            out.append(1.0)
            continue
        eps = _entry_eps(pmap, e, wl_nm)
        if eps.real <= 0 or eps.imag > eps.real:
            continue  # metals: no propagating wavelength to resolve
        n = np.sqrt(eps)
        out.append(n.real if real else n)
    return out


def drude_from_permittivity(eps: complex, omega: float) -> tuple[float, float]:
    """(omega_p^2, gamma) of 1 - wp^2/(w^2 + i w gamma) matching eps at omega."""
    if eps.real >= 1:
        raise FdtdError("Drude fit needs Re(eps) < 1")
    gamma = omega * eps.imag / (1.0 - eps.real)
    wp2 = (1.0 - eps.real) * (omega**2 + gamma**2)
    return wp2, gamma


def material_coefficients(pmap: PermittivityMap, wavelength_nm: float, dt: float,
                          pec_materials: Sequence[str] = ()) -> CoefficientTable:
    """Per-material update coefficients at one analysis wavelength.

    Re(eps) > 0: eps_inf = Re(eps) plus conductivity sigma = omega*Im(eps).
    Re(eps) <= 0: Drude dispersion fitted at omega (needs Im(eps) > 0).
    Listed PEC materials: the field is pinned to zero.
    """
    omega = 2 * math.pi / (wavelength_nm * 1e-3)
    m = len(pmap.materials)
    eps_inf, ca, cb, kd, bd = (np.zeros(m) for _ in range(5))
    kinds = []
    for idx, entry in enumerate(pmap.materials):
        if isinstance(entry, str) and entry in pec_materials:
            kinds.append("pec")
            eps_inf[idx] = 1.0
            continue
        eps = _entry_eps(pmap, entry, wavelength_nm)
        if eps.real > 0:
            sig = omega * eps.imag
            e = eps.real
            kinds.append("lossy" if sig > 0 else "dielectric")
            den = 1 + sig * dt / (2 * e)
            ca[idx] = (1 - sig * dt / (2 * e)) / den
            cb[idx] = dt / e / den
            eps_inf[idx] = e
        else:
            if eps.imag <= 0:
                raise FdtdError(f"{pmap.material_name(idx)}: lossless negative permittivity is unsupported")
            wp2, g = drude_from_permittivity(eps, omega)
            kinds.append("drude")
            ca[idx], cb[idx], eps_inf[idx] = 1.0, dt, 1.0
            kd[idx] = (1 - g * dt / 2) / (1 + g * dt / 2)
            bd[idx] = wp2 * dt / (1 + g * dt / 2)
    return CoefficientTable(eps_inf, ca, cb, kd, bd, kinds, "drude" in kinds)


# -------------------------------------------------------------------- CPML

@dataclass
class PmlProfile:
    b: np.ndarray
    c: np.ndarray
    inv_kappa: np.ndarray


def cpml_profile(n: int, h: float, dt: float, cells: int, *, order=4, kappa_max=3.0,
                 alpha_max=0.0, sigma_scale=1.0, half=False, enabled=True) -> PmlProfile:
    """Graded CPML coefficients along one axis.

    ``half`` selects face positions (i + 1/2) instead of cell centres.
    """
    pos = np.arange(n) + (1.0 if half else 0.5)  # in cells, from the low edge
    depth = np.zeros(n)
    if enabled:
        lo = cells - pos
        hi = pos - (n - cells)
        depth = np.clip(np.maximum(lo, hi), 0.0, cells) / cells
    sig_max = sigma_scale * 0.8 * (order + 1) / h
    sig = sig_max * depth**order
    kap = 1.0 + (kappa_max - 1.0) * depth**order
    alp = alpha_max * (1.0 - depth) * (depth > 0)
    b = np.exp(-(sig / kap + alp) * dt)
    den = sig * kap + kap**2 * alp
    c = np.where(den > 0, sig * (b - 1.0) / np.where(den > 0, den, 1.0), 0.0)
    return PmlProfile(b, c, 1.0 / kap)


# ----------------------------------------------------------------- helpers

def _cell_index(coord, origin, step, n, what):
    k = int(math.floor((coord - origin) / step + 1e-9))
    if not 0 <= k < n:
        raise ConfigError(f"{what} at {coord} um lies outside the domain")
    return k


def _span_indices(a, b, origin, step, lo, hi, what):
    # cells whose centres fall in [a, b)
    if a is None:
        return lo, hi
    i0 = math.ceil((a - origin) / step - 0.5 - 1e-9)
    i1 = math.ceil((b - origin) / step - 0.5 - 1e-9)
    if i0 < lo or i1 > hi or i1 <= i0:
        raise ConfigError(f"{what} span [{a}, {b}) um leaves the non-PML region")
    return i0, i1


def _monitor_indices(cfg: SimulationConfig, m: MonitorSpec):
    pm = cfg.pmap
    nx, ny = pm.shape
    i0, i1, j0, j1 = cfg.interior()
    if m.orientation == "h":
        j = _cell_index(m.position, pm.origin[1], pm.dy, ny, f"monitor {m.name}")
        if not j0 <= j < j1 or j < 1:
            raise ConfigError(f"monitor {m.name} lies inside the absorber")
        a, b = _span_indices(m.start, m.stop, pm.origin[0], pm.dx, i0, i1, f"monitor {m.name}")
        return "h", j, a, b
    if m.orientation == "v":
        i = _cell_index(m.position, pm.origin[0], pm.dx, nx, f"monitor {m.name}")
        if not i0 <= i < i1 or (i < 1 and not cfg.periodic_x):
            raise ConfigError(f"monitor {m.name} lies inside the absorber")
        a, b = _span_indices(m.start, m.stop, pm.origin[1], pm.dy, j0, j1, f"monitor {m.name}")
        return "v", i, a, b
    raise ConfigError(f"monitor {m.name}: orientation must be 'h' or 'v'")


def _source_index(cfg: SimulationConfig) -> int:
    pm = cfg.pmap
    i0, i1, j0, j1 = cfg.interior()
    s = cfg.source
    if s.kind == "mode":
        i = _cell_index(s.position, pm.origin[0], pm.dx, pm.shape[0], "source")
        if not i0 + 1 <= i < i1 - 1:
            raise ConfigError("source line lies inside the absorber")
        return i
    j = _cell_index(s.position, pm.origin[1], pm.dy, pm.shape[1], "source")
    if not j0 + 1 <= j < j1 - 1:
        raise ConfigError("source line lies inside the absorber")
    return j


def pulse_parameters(lambda0_nm: float, fractional_bandwidth: float) -> tuple[float, float, float]:
    """(omega0, tau, t0) of exp(-((t-t0)/tau)^2) sin(omega0 (t-t0)).

    ``fractional_bandwidth`` is the FWHM of the field spectrum over omega0.
    """
    w0 = 2 * math.pi / (lambda0_nm * 1e-3)
    tau = 4 * math.sqrt(math.log(2)) / (fractional_bandwidth * w0)
    return w0, tau, 5.0 * tau


def waveform(t, w0, tau, t0):
    u = np.asarray(t, float) - t0
    return np.exp(-(u / tau) ** 2) * np.sin(w0 * u)


# ----------------------------------------------------------------- records

@dataclass
class MonitorRecord:
    name: str
    orientation: str
    coordinate: float                 # um, y for "h", x for "v"
    positions: np.ndarray             # um along the line
    wavelengths_nm: np.ndarray
    E: np.ndarray                     # (n_wl, n_pts) complex node field
    H: np.ndarray                     # (n_wl, n_pts) complex face field (averaged)
    raw_flux: np.ndarray              # (n_wl,) toward +x ("v") or +y ("h")
    flux: np.ndarray                  # raw_flux / source power
    index: int = 0
    span: tuple[int, int] = (0, 0)

    def intensity(self) -> np.ndarray:
        return np.abs(self.E) ** 2


@dataclass
class RunResult:
    records: dict[str, MonitorRecord]
    wavelengths_nm: np.ndarray
    source_power: np.ndarray
    steps: int
    converged: bool
    residual: float
    fields: dict[str, dict] = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def __getitem__(self, name) -> MonitorRecord:
        return self.records[name]

    def __contains__(self, name):
        return name in self.records

    def keys(self):
        return self.records.keys()

    @property
    def status(self) -> str:
        return "converged" if self.converged else "unconverged"


@dataclass
class FieldState:
    F: np.ndarray      # Ez (TE) / Hz (TM)
    Gx: np.ndarray     # Hx (TE) / Ex (TM)
    Gy: np.ndarray     # Hy (TE) / Ey (TM)
    psi_Gx: np.ndarray
    psi_Gy: np.ndarray
    psi_Fx: np.ndarray
    psi_Fy: np.ndarray
    Jx: np.ndarray
    Jy: np.ndarray
    step: int = 0

    def components(self, polarization="TE") -> dict[str, np.ndarray]:
        if polarization == "TE":
            return {"Ez": self.F, "Hx": self.Gx, "Hy": self.Gy}
        return {"Hz": self.F, "Ex": self.Gx, "Ey": self.Gy}

    def check_finite(self, polarization="TE") -> None:
        for name, arr in self.components(polarization).items():
            if not np.isfinite(arr).all():
                i, j = np.argwhere(~np.isfinite(arr))[0]
                raise DivergenceError(self.step, (int(i), int(j)), name)


# --------------------------------------------------------------- simulation

class Simulation:
    """One engine instance; owns its field arrays."""

    def __init__(self, cfg: SimulationConfig):
        self.warnings = cfg.validate() + list(cfg.pmap.warnings)
        self.cfg = cfg
        pm = cfg.pmap
        nx, ny = pm.shape
        dt = cfg.dt
        self.dt = dt
        self.te = cfg.polarization == "TE"
        self.k = kernels.parallel if cfg.parallel else kernels.serial
        self.coef = material_coefficients(pm, cfg.lambda0_nm, dt, cfg.pec_materials)
        dtype = np.float32 if cfg.dtype == "float32" else np.float64
        self.dtype = dtype
        c = self.coef
        ids = pm.ids
        self.mid = ids
        # per-cell coefficients (TM faces borrow the material of their cell)
        self.CA = np.ascontiguousarray(c.ca[ids].astype(dtype))
        self.CB = np.ascontiguousarray(c.cb[ids].astype(dtype))
        drude = np.array([k == "drude" for k in c.kinds])[ids]
        ci, cj = np.nonzero(drude)
        self.drude_i, self.drude_j = ci.astype(np.int64), cj.astype(np.int64)
        self.drude_kd = c.kd[ids[ci, cj]].astype(dtype)
        self.drude_bd = c.bd[ids[ci, cj]].astype(dtype)
        w = c.eps_inf[ids] if self.te else np.ones(ids.shape)
        self.W = np.ascontiguousarray(w.astype(dtype))
        p = cfg.pml_cells
        kw = dict(order=cfg.pml_order, kappa_max=cfg.pml_kappa_max, alpha_max=cfg.pml_alpha_max,
                  sigma_scale=cfg.pml_sigma_scale)
        self.px_n = cpml_profile(nx, pm.dx, dt, p, enabled=not cfg.periodic_x, **kw)
        self.px_f = cpml_profile(nx, pm.dx, dt, p, half=True, enabled=not cfg.periodic_x, **kw)
        self.py_n = cpml_profile(ny, pm.dy, dt, p, **kw)
        self.py_f = cpml_profile(ny, pm.dy, dt, p, half=True, **kw)
        self.xs = (np.zeros(0, np.int64) if cfg.periodic_x
                   else np.r_[0:p + 1, nx - p - 1:nx].astype(np.int64))
        self.ys = np.r_[0:p + 1, ny - p - 1:ny].astype(np.int64)
        for prof in (self.px_n, self.px_f, self.py_n, self.py_f):
            prof.b, prof.c, prof.inv_kappa = (a.astype(dtype) for a in (prof.b, prof.c, prof.inv_kappa))
        z = lambda *s: np.zeros(s, dtype)
        nd = ci.size
        self.state = FieldState(z(nx, ny), z(nx, ny), z(nx, ny),
                                z(nx, self.ys.size), z(self.xs.size, ny),
                                z(self.xs.size, ny), z(nx, self.ys.size),
                                z(nd), z(nd))
        self.w0, self.tau, self.t0 = pulse_parameters(cfg.lambda0_nm, cfg.fractional_bandwidth)
        self.omegas = 2 * math.pi / (np.asarray(cfg.wavelengths_nm) * 1e-3)
        self._setup_source()
        self._setup_monitors()

    # ----------------------------------------------------------- sources
    def _setup_source(self):
        cfg, pm = self.cfg, self.cfg.pmap
        s = cfg.source
        self.src_idx = _source_index(cfg)
        nx, ny = pm.shape
        i0, i1, j0, j1 = cfg.interior()
        lam = cfg.lambda0_nm
        if s.kind == "mode":
            x_src = pm.origin[0] + (self.src_idx + 0.5) * pm.dx
            runs = pm.column(x_src)
            y_lo, y_hi = s.window if s.window is not None else (pm.origin[1], pm.origin[1] + ny * pm.dy)
            inline = {k: v for k, v in pm.inline.items()}
            stack, y_org = slab_from_column(runs, lam, y_lo, y_hi, cfg.polarization, inline)
            modes = solve_modes(stack)
            if len(modes) <= s.mode_order:
                raise ModeSolverError(f"source column supports {len(modes)} guided mode(s); "
                                      f"order {s.mode_order} requested")
            mode = modes[s.mode_order]
            yc = pm.y_centers()
            prof = mode.sample((y_org - yc) * 1e3)
            prof[:j0] = 0.0
            prof[j1:] = 0.0
            keep = np.abs(prof) > 1e-9 * np.abs(prof).max()
            self.n_src = mode.n_eff
            self.mode = mode
            line_cb = self.CB[self.src_idx]
            line_eps = self.coef.eps_inf[self.mid[self.src_idx]]
            h = pm.dx
        else:
            prof = np.zeros(nx)
            prof[i0:i1] = 1.0
            keep = prof != 0
            row = self.mid[:, self.src_idx]
            ent = pm.materials[int(row[i0])]
            self.n_src = float(np.sqrt(_entry_eps(pm, ent, lam)).real)
            self.mode = None
            line_cb = self.CB[:, self.src_idx]
            line_eps = self.coef.eps_inf[row]
            h = pm.dy
        idx = np.nonzero(keep)[0]
        self.src_lo, self.src_hi = int(idx[0]), int(idx[-1]) + 1
        prof = prof[self.src_lo:self.src_hi] * s.amplitude
        cbl = line_cb[self.src_lo:self.src_hi].astype(float)
        epsl = line_eps[self.src_lo:self.src_hi]
        d = 1 if s.direction[0] == "+" else -1
        along_x = s.kind == "mode"
        n = self.n_src
        if self.te:
            zeta = (-d * n if along_x else d * n) * np.ones_like(prof)
            sgn = 1.0 if along_x else -1.0
            cF = cbl
            cG = np.full(prof.shape, self.dt)
        else:
            zeta = (d * n if along_x else -d * n) / epsl
            sgn = -1.0 if along_x else 1.0
            cF = np.full(prof.shape, self.dt)
            cG = cbl
        self.src_dir = d
        self.src_along_x = along_x
        # correction amplitudes per unit waveform value
        if d > 0:
            self.src_g_face = self.src_idx - 1
            self.src_g_amp = -sgn * cG * prof / h
            self.src_f_amp = -sgn * cF * zeta * prof / h
        else:
            self.src_g_face = self.src_idx
            self.src_g_amp = sgn * cG * prof / h
            self.src_f_amp = sgn * cF * zeta * prof / h
        self.src_delay = n * h / 2
        self.src_profile = prof
        self.src_end_time = 2 * self.t0

    def _apply_g_source(self, t):
        v = waveform(t, self.w0, self.tau, self.t0)
        if v == 0:
            return
        st = self.state
        a, b = self.src_lo, self.src_hi
        amp = (self.src_g_amp * v).astype(self.dtype)
        if self.src_along_x:
            st.Gy[self.src_g_face, a:b] += amp
        else:
            st.Gx[a:b, self.src_g_face] += amp

    def _apply_f_source(self, t):
        v = waveform(t + self.src_delay, self.w0, self.tau, self.t0)
        if v == 0:
            return
        st = self.state
        a, b = self.src_lo, self.src_hi
        amp = (self.src_f_amp * v).astype(self.dtype)
        if self.src_along_x:
            st.F[self.src_idx, a:b] += amp
        else:
            st.F[a:b, self.src_idx] += amp

    # ---------------------------------------------------------- monitors
    def _setup_monitors(self):
        cfg, pm = self.cfg, self.cfg.pmap
        nw = len(cfg.wavelengths_nm)
        self.mon = []
        off = 0
        rows = []
        for m in cfg.monitors:
            orient, k, a, b = _monitor_indices(cfg, m)
            L = b - a
            if orient == "h":
                # node row j=k, i from a; face average with row k-1
                rows.append((a, k, 1, 0, 0, -1, L, off))
                coord = pm.origin[1] + (k + 0.5) * pm.dy
                pos = pm.origin[0] + (np.arange(a, b) + 0.5) * pm.dx
            else:
                rows.append((k, a, 0, 1, -1, 0, L, off))
                coord = pm.origin[0] + (k + 0.5) * pm.dx
                pos = pm.origin[1] + (np.arange(a, b) + 0.5) * pm.dy
            self.mon.append((m, orient, k, a, b, off, coord, pos))
            off += L
        self.mon_total = off
        arr = np.array(rows, dtype=np.int64).reshape(-1, 8)
        self.mh = [np.ascontiguousarray(arr[arr[:, 2] == 1][:, c]) for c in range(8)]  # "h" lines use Gx
        self.mv = [np.ascontiguousarray(arr[arr[:, 2] == 0][:, c]) for c in range(8)]  # "v" lines use Gy
        # node field: all lines together, no averaging
        self.mf = [np.ascontiguousarray(arr[:, c]) for c in range(8)]
        zero = np.zeros(len(rows), np.int64)
        self.mf[4] = zero
        self.mf[5] = zero.copy()
        self.dftF = np.zeros((nw, off), complex)
        self.dftG = np.zeros((nw, off), complex)
        self.area = {}
        for fm in cfg.field_monitors:
            nx, ny = pm.shape
            s = max(int(fm.stride), 1)
            self.area[fm.name] = (s, np.zeros((nw, (nx + s - 1) // s, (ny + s - 1) // s), complex))

    def _dft_F(self, t):
        ph = np.exp(1j * self.omegas * t) * self.dt
        if self.mon_total:
            i0, j0, di, dj, ai, aj, L, off = self.mf
            kernels.dft_lines(self.state.F, i0, j0, di, dj, ai, aj, L, off, ph, self.dftF)
        for s, buf in self.area.values():
            kernels.dft_area(self.state.F, s, ph, buf)

    def _dft_G(self, t):
        if not self.mon_total:
            return
        ph = np.exp(1j * self.omegas * t) * self.dt
        if self.mh[0].size:
            kernels.dft_lines(self.state.Gx, *self.mh, ph, self.dftG)
        if self.mv[0].size:
            kernels.dft_lines(self.state.Gy, *self.mv, ph, self.dftG)

    # -------------------------------------------------------------- step
    def step(self) -> None:
        """Advance every field by one time step (G to n+1/2, then F to n+1)."""
        cfg, st, k = self.cfg, self.state, self.k
        pm = cfg.pmap
        n = st.step
        f = self.dtype
        dt = f(self.dt)
        idx, idy = f(1.0 / pm.dx), f(1.0 / pm.dy)
        per = cfg.periodic_x
        px_f, py_f, px_n, py_n = self.px_f, self.py_f, self.px_n, self.py_n
        drude = self.drude_i.size > 0
        if self.te:
            k["te_h"](st.F, st.Gx, st.Gy, dt * idx, dt * idy, px_f.inv_kappa, py_f.inv_kappa, per)
            k["te_h_pml"](st.F, st.Gx, st.Gy, self.xs, self.ys, st.psi_Gy, st.psi_Gx,
                          px_f.b, px_f.c, py_f.b, py_f.c, dt, idx, idy)
        else:
            if drude:
                k["drude_current"](st.Gx, st.Jx, self.drude_i, self.drude_j, self.drude_kd, self.drude_bd)
                k["drude_current"](st.Gy, st.Jy, self.drude_i, self.drude_j, self.drude_kd, self.drude_bd)
            k["tm_e"](st.F, st.Gx, st.Gy, self.CA, self.CB, self.CA, self.CB,
                      px_f.inv_kappa, py_f.inv_kappa, idx, idy, per)
            k["tm_e_pml"](st.F, st.Gx, st.Gy, self.CB, self.CB, self.xs, self.ys,
                          st.psi_Gy, st.psi_Gx, px_f.b, px_f.c, py_f.b, py_f.c, idx, idy)
            if drude:
                k["drude_apply"](st.Gx, st.Jx, self.drude_i, self.drude_j, self.CB)
                k["drude_apply"](st.Gy, st.Jy, self.drude_i, self.drude_j, self.CB)
        self._apply_g_source(n * self.dt)
        self._dft_G((n + 0.5) * self.dt)
        if self.te:
            if drude:
                k["drude_current"](st.F, st.Jx, self.drude_i, self.drude_j, self.drude_kd, self.drude_bd)
            k["te_e"](st.F, st.Gx, st.Gy, self.CA, self.CB, px_n.inv_kappa, py_n.inv_kappa, idx, idy, per)
            k["te_e_pml"](st.F, st.Gx, st.Gy, self.CB, self.xs, self.ys, st.psi_Fx, st.psi_Fy,
                          px_n.b, px_n.c, py_n.b, py_n.c, idx, idy, per)
            if drude:
                k["drude_apply"](st.F, st.Jx, self.drude_i, self.drude_j, self.CB)
        else:
            k["tm_h"](st.F, st.Gx, st.Gy, px_n.inv_kappa, py_n.inv_kappa, dt * idx, dt * idy, per)
            k["tm_h_pml"](st.F, st.Gx, st.Gy, self.xs, self.ys, st.psi_Fx, st.psi_Fy,
                          px_n.b, px_n.c, py_n.b, py_n.c, dt, idx, idy, per)
        self._apply_f_source((n + 0.5) * self.dt)
        st.step = n + 1
        self._dft_F((n + 1) * self.dt)

    def energy(self) -> float:
        i0, i1, j0, j1 = self.cfg.interior()
        st = self.state
        return float(kernels.energy(st.F, st.Gx, st.Gy, self.W, i0, i1, j0, j1))

    # --------------------------------------------------------------- run
    def run(self, source_power: np.ndarray | None = None) -> RunResult:
        cfg = self.cfg
        t_start = time.perf_counter()
        if source_power is None:
            source_power = calibrate_source(cfg) if cfg.calibrate else np.ones(len(cfg.wavelengths_nm))
        peak = 0.0
        ratio = 1.0
        converged = False
        st = self.state
        while st.step < cfg.max_steps:
            self.step()
            if st.step % cfg.check_every == 0:
                w = self.energy()
                if not math.isfinite(w):
                    st.check_finite(cfg.polarization)
                    raise DivergenceError(st.step, (-1, -1), "energy")
                peak = max(peak, w)
                ratio = w / peak if peak > 0 else 0.0
                if st.step * self.dt > self.src_end_time and ratio < cfg.shutoff:
                    converged = True
                    break
        if not converged:
            st.check_finite(cfg.polarization)
            ratio = self.energy() / peak if peak > 0 else 0.0
        return self._finish(source_power, converged, ratio, time.perf_counter() - t_start)

    def _finish(self, source_power, converged, ratio, elapsed) -> RunResult:
        cfg, pm = self.cfg, self.cfg.pmap
        sign_v, sign_h = (-1.0, 1.0) if self.te else (1.0, -1.0)
        records = {}
        for m, orient, k, a, b, off, coord, pos in self.mon:
            E = self.dftF[:, off:off + (b - a)].copy()
            H = self.dftG[:, off:off + (b - a)].copy()
            h = pm.dx if orient == "h" else pm.dy
            sgn = sign_h if orient == "h" else sign_v
            raw = sgn * 0.5 * np.real(np.sum(E * np.conj(H), axis=1)) * h
            records[m.name] = MonitorRecord(m.name, orient, coord, pos, np.asarray(cfg.wavelengths_nm),
                                            E, H, raw, raw / source_power, k, (a, b))
        fields = {}
        for name, (s, buf) in self.area.items():
            fields[name] = {"stride": s, "data": buf.copy(),
                            "x": pm.x_centers()[::s], "y": pm.y_centers()[::s]}
        meta = {
            "engine": ENGINE_VERSION, "dt": self.dt, "dx": pm.dx, "dy": pm.dy, "shape": list(pm.shape),
            "courant": cfg.courant, "polarization": cfg.polarization,
            "pml": {"cells": cfg.pml_cells, "order": cfg.pml_order, "kappa_max": cfg.pml_kappa_max,
                    "alpha_max": cfg.pml_alpha_max, "sigma_max": self.cfg.pml_sigma_scale * 0.8 * (cfg.pml_order + 1)
                    / min(pm.dx, pm.dy)},
            "pulse": {"lambda0_nm": cfg.lambda0_nm, "tau": self.tau, "t0": self.t0,
                      "fractional_bandwidth": cfg.fractional_bandwidth},
            "source_n_eff": self.n_src, "materials": dict(zip(
                [pm.material_name(i) for i in range(len(pm.materials))], self.coef.kinds)),
            "warnings": self.warnings, "elapsed_s": elapsed, "dtype": cfg.dtype,
        }
        return RunResult(records, np.asarray(cfg.wavelengths_nm), np.asarray(source_power), self.state.step,
                         converged, float(ratio), fields, meta)


def run(cfg: SimulationConfig) -> RunResult:
    return Simulation(cfg).run()


# ------------------------------------------------------------- calibration

_CAL_MEMO: dict[str, np.ndarray] = {}
CAL_GAP_CELLS = 3


def calibration_config(cfg: SimulationConfig) -> SimulationConfig:
    """Straight, translation-invariant copy of the source cross-section.

    The material column (row) under the injection line is extruded along the
    launch axis; a flux monitor sits CAL_GAP_CELLS downstream of the line.
    """
    from dataclasses import replace
    pm = cfg.pmap
    s = cfg.source
    p = cfg.pml_cells
    k = _source_index(cfg)
    gap = CAL_GAP_CELLS
    lead = 8
    run_len = 2 * p + 2 * lead + gap + 2
    d = 1 if s.direction[0] == "+" else -1
    if s.kind == "mode":
        col = pm.ids[k]
        ids = np.repeat(col[None, :], run_len, axis=0)
        ks = p + lead if d > 0 else run_len - p - lead - 1
        x0 = pm.origin[0] + (k - ks) * pm.dx
        cal = PermittivityMap(ids, pm.materials, pm.dx, pm.dy, (x0, pm.origin[1]), pm.inline)
        xm = x0 + (ks + d * gap + 0.5) * pm.dx
        mon = MonitorSpec("calibration", "v", xm)
    else:
        row = pm.ids[:, k]
        ids = np.repeat(row[:, None], run_len, axis=1)
        ks = p + lead if d > 0 else run_len - p - lead - 1
        y0 = pm.origin[1] + (k - ks) * pm.dy
        cal = PermittivityMap(ids, pm.materials, pm.dx, pm.dy, (pm.origin[0], y0), pm.inline)
        ym = y0 + (ks + d * gap + 0.5) * pm.dy
        mon = MonitorSpec("calibration", "h", ym)
    return replace(cfg, pmap=cal, monitors=(mon,), field_monitors=(), calibrate=False)


def calibration_key(cfg: SimulationConfig) -> str:
    cal = calibration_config(cfg)
    h = hashlib.sha256()
    h.update(ENGINE_VERSION.encode())
    h.update(cal.pmap.digest().encode())
    fields = (cal.wavelengths_nm, cal.lambda0_nm, cal.courant, cal.shutoff, cal.max_steps, cal.pml_cells,
              cal.pml_order, cal.pml_kappa_max, cal.pml_alpha_max, cal.pml_sigma_scale, cal.fractional_bandwidth,
              cal.polarization, cal.pec_materials, cal.periodic_x, cal.dtype, cal.source, cal.monitors,
              cal.check_every)
    h.update(repr(fields).encode())
    return h.hexdigest()


def calibrate_source(cfg: SimulationConfig) -> np.ndarray:
    """Forward power launched by the source, per wavelength (cached)."""
    key = calibration_key(cfg)
    if key in _CAL_MEMO:
        return _CAL_MEMO[key].copy()
    path = Path(cfg.cache_dir) / "calibration" / f"{key}.npy" if cfg.cache_dir else None
    if path is not None and path.is_file():
        p = np.load(path)
        _CAL_MEMO[key] = p
        return p.copy()
    res = Simulation(calibration_config(cfg)).run(source_power=np.ones(len(cfg.wavelengths_nm)))
    d = 1 if cfg.source.direction[0] == "+" else -1
    p = d * res["calibration"].raw_flux
    if np.any(p <= 0):
        raise FdtdError("calibration run measured no forward power")
    _CAL_MEMO[key] = p
    if path is not None:
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(".tmp.npy")
        np.save(tmp, p)
        tmp.replace(path)
    return p.copy()


def clear_calibration_memo() -> None:
    _CAL_MEMO.clear()
