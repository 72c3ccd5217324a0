"""Optical dispersion tables and cryogenic thermal-conductivity tables.

All optical permittivities in the toolkit originate here.  Tables are plain
CSV files; interpolation is piecewise linear and never extrapolates.
"""
from __future__ import annotations

import csv
import math
import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

DB_PER_NEPER_POWER = 10.0 * math.log10(math.e)


class MaterialError(ValueError):
    pass


class MaterialRangeError(MaterialError):
    pass


class MaterialParseError(MaterialError):
    def __init__(self, path, line: int, column: int, msg: str):
        self.path, self.line, self.column = str(path), line, column
        super().__init__(f"{path}:{line}:{column}: {msg}")


def _check_increasing(xs: np.ndarray, what: str, name: str) -> None:
    if xs.size == 0:
        raise MaterialError(f"{name}: at least one {what} sample is required")
    if np.any(np.diff(xs) <= 0):
        raise MaterialError(f"{name}: {what} samples must be strictly increasing")


def _interp(xs: np.ndarray, ys: np.ndarray, x: float) -> float:
    # exact (bit-identical) at sample points
    i = int(np.searchsorted(xs, x))
    if i < xs.size and xs[i] == x:
        return float(ys[i])
    t = (x - xs[i - 1]) / (xs[i] - xs[i - 1])
    return float(ys[i - 1] + t * (ys[i] - ys[i - 1]))


@dataclass(frozen=True)
class OpticalMaterial:
    name: str
    wavelengths_nm: tuple[float, ...]
    n: tuple[float, ...]
    k: tuple[float, ...]
    bandgap_eV: float | None = None
    source: str = ""

    def __post_init__(self):
        wl = np.asarray(self.wavelengths_nm, dtype=float)
        _check_increasing(wl, "wavelength", self.name)
        if not (len(self.n) == len(self.k) == wl.size):
            raise MaterialError(f"{self.name}: n, k and wavelength columns differ in length")
        if any(not v > 0 for v in self.n):
            raise MaterialError(f"{self.name}: n must be > 0")
        if any(not v >= 0 for v in self.k):
            raise MaterialError(f"{self.name}: k must be >= 0")

    @classmethod
    def from_samples(cls, name: str, samples: Iterable[Sequence[float]], bandgap_eV=None, source=""):
        rows = [tuple(map(float, s)) for s in samples]
        return cls(name, tuple(r[0] for r in rows), tuple(r[1] for r in rows),
                   tuple(r[2] for r in rows), bandgap_eV, source)

    @classmethod
    def constant(cls, name: str, index: complex, wavelength_nm: float):
        """Single-sample material, valid only at ``wavelength_nm``."""
        index = complex(index)
        return cls(name, (float(wavelength_nm),), (index.real,), (index.imag,))

    @property
    def range_nm(self) -> tuple[float, float]:
        return self.wavelengths_nm[0], self.wavelengths_nm[-1]

    def covers(self, wavelength_nm: float) -> bool:
        lo, hi = self.range_nm
        return lo <= wavelength_nm <= hi


@dataclass(frozen=True)
class ThermalMaterial:
    name: str
    temperatures_K: tuple[float, ...]
    conductivity: tuple[float, ...]
    source: str = ""

    def __post_init__(self):
        t = np.asarray(self.temperatures_K, dtype=float)
        _check_increasing(t, "temperature", self.name)
        if t.size < 2:
            # a single point cannot be queried anywhere except exactly there
            raise MaterialError(f"{self.name}: a conductivity table needs at least two points")
        if len(self.conductivity) != t.size:
            raise MaterialError(f"{self.name}: column length mismatch")
        if any(not v > 0 for v in self.conductivity):
            raise MaterialError(f"{self.name}: conductivity must be > 0")

    @property
    def range_K(self) -> tuple[float, float]:
        return self.temperatures_K[0], self.temperatures_K[-1]

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        return np.asarray(self.temperatures_K), np.asarray(self.conductivity)


VACUUM = OpticalMaterial("vacuum", (0.0, math.inf), (1.0, 1.0), (0.0, 0.0))


def refractive_index(material: OpticalMaterial, wavelength_nm: float) -> complex:
    """Complex index n + ik, linearly interpolated in n and k separately."""
    if material.name == "vacuum":
        return complex(1.0, 0.0)
    if not material.covers(wavelength_nm):
        lo, hi = material.range_nm
        raise MaterialRangeError(
            f"{material.name}: wavelength {wavelength_nm} nm outside tabulated range [{lo}, {hi}] nm")
    wl = np.asarray(material.wavelengths_nm)
    n = _interp(wl, np.asarray(material.n), wavelength_nm)
    k = _interp(wl, np.asarray(material.k), wavelength_nm)
    return complex(n, k)


def permittivity(material: OpticalMaterial, wavelength_nm: float) -> complex:
    return refractive_index(material, wavelength_nm) ** 2


def k_to_dB_per_um(k: float, wavelength_nm: float) -> float:
    """Power attenuation 10*log10(e) * 4*pi*k/lambda, lambda in um."""
    return DB_PER_NEPER_POWER * 4.0 * math.pi * k / (wavelength_nm * 1e-3)


def dB_per_um_to_k(att: float, wavelength_nm: float) -> float:
    return att / DB_PER_NEPER_POWER * (wavelength_nm * 1e-3) / (4.0 * math.pi)


def attenuation_dB_per_um(material: OpticalMaterial, wavelength_nm: float) -> float:
    return k_to_dB_per_um(refractive_index(material, wavelength_nm).imag, wavelength_nm)


def thermal_conductivity(material: ThermalMaterial, T: float) -> float:
    lo, hi = material.range_K
    if not lo <= T <= hi:
        raise MaterialRangeError(f"{material.name}: temperature {T} K outside table range [{lo}, {hi}] K")
    t, k = material.arrays()
    return _interp(t, k, T)


def thermal_conductivity_array(material: ThermalMaterial, T: np.ndarray) -> np.ndarray:
    """Vectorised lookup; exact at table points like the scalar version."""
    lo, hi = material.range_K
    T = np.asarray(T, dtype=float)
    if T.size and (T.min() < lo or T.max() > hi):
        bad = T.max() if T.max() > hi else T.min()
        raise MaterialRangeError(f"{material.name}: temperature {bad:.6g} K outside table range [{lo}, {hi}] K")
    t, k = material.arrays()
    out = np.interp(T, t, k)
    # np.interp is exact at nodes except for rounding in t*(x-x0); pin them
    idx = np.searchsorted(t, T)
    idx = np.clip(idx, 0, t.size - 1)
    hit = t[idx] == T
    out[hit] = k[idx[hit]]
    return out


# --------------------------------------------------------------------- I/O

def _parse_header(path, line: str) -> dict:
    body = line.lstrip("#").strip()
    out = {}
    for part in re.split(r";\s*(?=(?:material|source|bandgap_eV)\s*:)", body):
        if not part.strip():
            continue
        key, sep, val = part.partition(":")
        if not sep:
            raise MaterialParseError(path, 1, 1, f"malformed header field {part.strip()!r}")
        out[key.strip()] = val.strip()
    return out


def _read_rows(path, lines, ncols, first_lineno):
    rows = []
    for lineno, raw in enumerate(lines, start=first_lineno):
        if not raw.strip() or raw.lstrip().startswith("#"):
            continue
        fields = next(csv.reader([raw]))
        if len(fields) != ncols:
            raise MaterialParseError(path, lineno, len(fields) + 1 if len(fields) < ncols else ncols + 1,
                                     f"expected {ncols} columns, got {len(fields)}")
        vals = []
        for col, f in enumerate(fields, start=1):
            try:
                vals.append(float(f))
            except ValueError:
                raise MaterialParseError(path, lineno, col, f"not a number: {f!r}") from None
        rows.append(vals)
    return rows


def load_optical_csv(path: str | Path) -> OpticalMaterial:
    path = Path(path)
    lines = path.read_text().splitlines()
    if not lines or not lines[0].startswith("#"):
        raise MaterialParseError(path, 1, 1, "missing '# material: ...' header line")
    meta = _parse_header(path, lines[0])
    if "material" not in meta:
        raise MaterialParseError(path, 1, 1, "header lacks 'material'")
    bg = meta.get("bandgap_eV", "none")
    try:
        bandgap = None if bg.lower() == "none" else float(bg)
    except ValueError:
        raise MaterialParseError(path, 1, lines[0].find("bandgap_eV") + 1, f"bad bandgap {bg!r}") from None
    start = 1
    if len(lines) > 1 and lines[1].strip().lower().startswith("wavelength"):
        start = 2
    rows = _read_rows(path, lines[start:], 3, start + 1)
    try:
        return OpticalMaterial.from_samples(meta["material"], rows, bandgap, meta.get("source", ""))
    except MaterialError as exc:
        raise MaterialParseError(path, start + 1, 1, str(exc)) from None


def load_thermal_csv(path: str | Path) -> ThermalMaterial:
    path = Path(path)
    lines = path.read_text().splitlines()
    name, source = path.stem, ""
    start = 0
    if lines and lines[0].startswith("#"):
        meta = _parse_header(path, lines[0])
        name, source = meta.get("material", name), meta.get("source", "")
        start = 1
    if len(lines) > start and lines[start].strip().lower().startswith("temperature"):
        start += 1
    rows = _read_rows(path, lines[start:], 2, start + 1)
    try:
        return ThermalMaterial(name, tuple(r[0] for r in rows), tuple(r[1] for r in rows), source)
    except MaterialError as exc:
        raise MaterialParseError(path, start + 1, 1, str(exc)) from None


def _data_dir(kind: str):
    return resources.files("heraldkit") / "data" / kind


def list_materials() -> list[str]:
    return sorted(p.name[:-4] for p in _data_dir("materials").iterdir() if p.name.endswith(".csv"))


def list_thermal_materials() -> list[str]:
    return sorted(p.name[:-4] for p in _data_dir("thermal").iterdir() if p.name.endswith(".csv"))


@lru_cache(maxsize=None)
def get_material(name: str) -> OpticalMaterial:
    if name in ("vacuum", "air"):
        return VACUUM
    path = _data_dir("materials") / f"{name}.csv"
    if not path.is_file():
        raise MaterialError(f"unknown optical material {name!r}; known: {', '.join(list_materials())}")
    with resources.as_file(path) as p:
        return load_optical_csv(p)


@lru_cache(maxsize=None)
def get_thermal_material(name: str) -> ThermalMaterial:
    path = _data_dir("thermal") / f"{name}.csv"
    if not path.is_file():
        raise MaterialError(f"unknown thermal material {name!r}; known: {', '.join(list_thermal_materials())}")
    with resources.as_file(path) as p:
        return load_thermal_csv(p)


def resolve(material) -> OpticalMaterial:
    return material if isinstance(material, OpticalMaterial) else get_material(material)
