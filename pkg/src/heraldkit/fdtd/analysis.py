"""Post-processing of monitor records: box accounting, beam shape, export."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.optimize import curve_fit

from .engine import FdtdError, MonitorRecord, RunResult


@dataclass
class BoxFluxes:
    """Net power through each face of a closed monitor box (source units)."""
    T_I: np.ndarray   # entering through the top face
    T_L: np.ndarray   # leaving through the left face
    T_R: np.ndarray   # leaving through the right face
    T_B: np.ndarray   # leaving through the bottom face

    @property
    def eta(self) -> np.ndarray:
        return self.T_I - (self.T_L + self.T_R + self.T_B)


def _check_box(top, bottom, left, right):
    for m, o in ((top, "h"), (bottom, "h"), (left, "v"), (right, "v")):
        if m.orientation != o:
            raise FdtdError(f"box monitor {m.name} has orientation {m.orientation}, expected {o}")
    if not (top.coordinate < bottom.coordinate and left.coordinate < right.coordinate):
        raise FdtdError("box monitors are not ordered top < bottom, left < right")
    # horizontal faces must span the columns between the vertical faces and
    # vice versa, on the same grid indices
    if top.span != bottom.span or left.span != right.span:
        raise FdtdError("opposite box faces differ in extent; the box is not closed")
    if top.span != (left.index, right.index) or left.span != (top.index, bottom.index):
        raise FdtdError("box faces do not meet at the corners; the box is not closed")


def box_fluxes(records, top="top", bottom="bottom", left="left", right="right") -> BoxFluxes:
    t, b, l, r = (records[k] for k in (top, bottom, left, right))
    _check_box(t, b, l, r)
    # y points down: flux toward +y enters through the top and leaves through the bottom
    return BoxFluxes(t.flux.copy(), -l.flux, r.flux.copy(), b.flux.copy())


def snspd_efficiency(records, top="top", bottom="bottom", left="left", right="right") -> np.ndarray:
    """T_I - (T_L + T_R + T_B) per wavelength, i.e. the power absorbed in the box."""
    return box_fluxes(records, top, bottom, left, right).eta


def box_monitors(x0: float, x1: float, y0: float, y1: float, dx: float, dy: float, origin: tuple[float, float],
                 prefix: str = "") -> list:
    """Four monitors forming a closed box on the grid of (dx, dy, origin).

    The faces snap to the cell rows/columns that contain the requested edges.
    """
    from .engine import MonitorSpec

    i0 = math.floor((x0 - origin[0]) / dx + 1e-9)
    i1 = math.floor((x1 - origin[0]) / dx + 1e-9)
    j0 = math.floor((y0 - origin[1]) / dy + 1e-9)
    j1 = math.floor((y1 - origin[1]) / dy + 1e-9)
    xc = lambda i: origin[0] + (i + 0.5) * dx
    yc = lambda j: origin[1] + (j + 0.5) * dy
    xe = lambda i: origin[0] + i * dx
    ye = lambda j: origin[1] + j * dy
    return [
        MonitorSpec(prefix + "top", "h", yc(j0), xe(i0), xe(i1)),
        MonitorSpec(prefix + "bottom", "h", yc(j1), xe(i0), xe(i1)),
        MonitorSpec(prefix + "left", "v", xc(i0), ye(j0), ye(j1)),
        MonitorSpec(prefix + "right", "v", xc(i1), ye(j0), ye(j1)),
    ]


# ------------------------------------------------------------ beam shape

@dataclass
class BeamProfile:
    centroid_um: float
    width_4sigma_um: float
    residual: float          # normalised RMS misfit of the best Gaussian
    fit_center_um: float
    fit_waist_um: float      # 1/e^2 intensity radius of the fitted Gaussian
    peak: float


def _gauss(x, a, x0, w):
    return a * np.exp(-2 * (x - x0) ** 2 / w**2)


def beam_profile_from_intensity(x: np.ndarray, intensity: np.ndarray) -> BeamProfile:
    x = np.asarray(x, float)
    I = np.asarray(intensity, float)
    if I.sum() <= 0:
        raise FdtdError("zero intensity on the monitor")
    wsum = I.sum()
    xc = float((x * I).sum() / wsum)
    var = float((((x - xc) ** 2) * I).sum() / wsum)
    width = 4 * math.sqrt(var)
    p0 = (I.max(), xc, max(width / 2, 1e-6))
    try:
        (a, x0, w), _ = curve_fit(_gauss, x, I, p0=p0, maxfev=20000)
        fit = _gauss(x, a, x0, w)
    except RuntimeError:
        a, x0, w = p0
        fit = _gauss(x, *p0)
    resid = float(np.sqrt(np.mean((I - fit) ** 2)) / np.sqrt(np.mean(I**2)))
    return BeamProfile(xc, width, resid, float(x0), float(abs(w)), float(I.max()))


def beam_profile(record: MonitorRecord, wavelength_index: int = 0) -> BeamProfile:
    """Centroid, 4-sigma width and Gaussian-fit residual of |E|^2 along a line."""
    if record.orientation != "h":
        raise FdtdError("beam_profile expects a horizontal monitor")
    return beam_profile_from_intensity(record.positions, np.abs(record.E[wavelength_index]) ** 2)


# --------------------------------------------------------------- export

def write_monitor_csv(result: RunResult, path) -> Path:
    """Rows of (wavelength_nm, monitor, flux), flux normalised to the source."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["wavelength_nm", "monitor", "flux"])
        for name in sorted(result.records):
            rec = result.records[name]
            for wl, f in zip(rec.wavelengths_nm, rec.flux):
                w.writerow([repr(float(wl)), name, repr(float(f))])
    return path


def write_snapshot(array: np.ndarray, path, *, x=None, y=None, units="", description="") -> tuple[Path, Path]:
    """Flat little-endian binary plus a JSON sidecar describing it."""
    path = Path(path)
    arr = np.ascontiguousarray(array)
    if np.iscomplexobj(arr):
        arr = arr.astype("<c16")
    else:
        arr = arr.astype("<f8")
    arr.tofile(path)
    side = {
        "file": path.name, "dtype": arr.dtype.str, "shape": list(arr.shape), "order": "C",
        "axes": ["x", "y"][: arr.ndim] if arr.ndim <= 2 else ["wavelength", "x", "y"],
        "units": units, "description": description,
    }
    if x is not None:
        side["x_um"] = [float(v) for v in x]
    if y is not None:
        side["y_um"] = [float(v) for v in y]
    meta = path.with_suffix(path.suffix + ".json")
    meta.write_text(json.dumps(side, indent=1))
    return path, meta


def read_snapshot(path) -> np.ndarray:
    path = Path(path)
    side = json.loads(path.with_suffix(path.suffix + ".json").read_text())
    return np.fromfile(path, dtype=np.dtype(side["dtype"])).reshape(side["shape"])


def fit_attenuation(depths_um, fluxes) -> tuple[float, float]:
    """Least-squares slope (dB/um, positive for decay) and intercept of 10log10(flux)."""
    d = np.asarray(depths_um, float)
    f = np.asarray(fluxes, float)
    if d.size < 2 or np.any(f <= 0):
        raise FdtdError("attenuation fit needs >= 2 positive flux samples")
    slope, icpt = np.polyfit(d, 10 * np.log10(f), 1)
    return float(-slope), float(icpt)
