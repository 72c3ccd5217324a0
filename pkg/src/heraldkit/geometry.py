"""Parametric cross-section of the back-illuminated grating coupler device.

Coordinates are in um.  x runs along the coupling waveguide (light travels
toward +x), y points *down* into the substrate with y = 0 at the BOX/Si
interface, so the substrate occupies 0 <= y <= substrate_thickness and the
film, cladding and top reflector sit at negative y.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .materials import OpticalMaterial
from .tmm import SnspdStackSpec


class GeometryError(ValueError):
    pass


@dataclass(frozen=True)
class GratingSpec:
    pitch_um: float = 0.71
    ff_start: float = 0.72
    ff_end: float = 0.2
    apodization: float = 0.012
    num_teeth: int = 40
    film_thickness_nm: float = 600.0
    etch_depth_nm: float = 350.0
    clad_thickness_um: float = 1.02
    top_reflector_nm: float = 200.0
    box_thickness_um: float = 2.0
    substrate_thickness_um: float = 400.0
    coupling_waveguide_length_um: float = 3.0
    gap_um: float = 0.0
    film_material: str = "LN-TE"
    clad_material: str = "SiO2"
    box_material: str = "SiO2"
    substrate_material: str = "Si"
    reflector_material: str = "Au"
    ambient_material: str = "vacuum"

    def __post_init__(self):
        if not 0 < self.ff_end <= self.ff_start < 1:
            raise GeometryError("need 0 < FF_end <= FF_start < 1")
        if self.apodization < 0:
            raise GeometryError("apodization must be >= 0")
        if self.num_teeth < 1:
            raise GeometryError("need at least one tooth")
        if self.etch_depth_nm > self.film_thickness_nm:
            raise GeometryError("etch depth exceeds film thickness")
        for name in ("pitch_um", "film_thickness_nm", "etch_depth_nm", "clad_thickness_um",
                     "top_reflector_nm", "box_thickness_um", "substrate_thickness_um"):
            if not getattr(self, name) > 0:
                raise GeometryError(f"{name} must be > 0")
        if self.coupling_waveguide_length_um < 0 or self.gap_um < 0:
            raise GeometryError("waveguide length and gap must be >= 0")

    @property
    def grating_length_um(self) -> float:
        return self.num_teeth * self.pitch_um

    # vertical landmarks (y down, um)
    @property
    def y_film_bottom(self) -> float:
        return -self.box_thickness_um

    @property
    def y_slab_top(self) -> float:
        return self.y_film_bottom - (self.film_thickness_nm - self.etch_depth_nm) * 1e-3

    @property
    def y_film_top(self) -> float:
        return self.y_film_bottom - self.film_thickness_nm * 1e-3

    @property
    def y_clad_top(self) -> float:
        return self.y_film_top - self.clad_thickness_um

    @property
    def y_reflector_top(self) -> float:
        return self.y_clad_top - self.top_reflector_nm * 1e-3


def fill_factors(spec: GratingSpec) -> list[float]:
    """Linear ramp FF_{i+1} = FF_i - alpha, floored at FF_end."""
    ffs = [spec.ff_start]
    for _ in range(spec.num_teeth - 1):
        ffs.append(max(ffs[-1] - spec.apodization, spec.ff_end))
    return ffs


def tooth_widths(spec: GratingSpec) -> list[float]:
    return [ff * spec.pitch_um for ff in fill_factors(spec)]


@dataclass(frozen=True)
class Rect:
    material: str
    x0: float
    x1: float
    y0: float
    y1: float
    label: str = ""
    subcell: bool = False  # rasterise by area-fraction averaging

    @property
    def area(self) -> float:
        return (self.x1 - self.x0) * (self.y1 - self.y0)

    def overlap(self, other: "Rect") -> float:
        w = min(self.x1, other.x1) - max(self.x0, other.x0)
        h = min(self.y1, other.y1) - max(self.y0, other.y0)
        return w * h if w > 0 and h > 0 else 0.0


@dataclass
class Scene:
    rects: list[Rect]
    bounds: tuple[float, float, float, float]  # x0, x1, y0, y1
    background: str = "vacuum"
    materials: dict[str, OpticalMaterial] = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        for r in self.rects:
            if not (r.x1 > r.x0 and r.y1 > r.y0):
                raise GeometryError(f"degenerate rectangle {r.label or r.material}")
        rs = self.rects
        tol = 1e-12
        for a in range(len(rs)):
            for b in range(a + 1, len(rs)):
                if rs[a].material != rs[b].material and rs[a].overlap(rs[b]) > tol:
                    raise GeometryError(
                        f"overlapping regions of different materials: {rs[a].label or rs[a].material} "
                        f"and {rs[b].label or rs[b].material}")

    def find(self, label: str) -> list[Rect]:
        return [r for r in self.rects if r.label == label or r.label.startswith(label + "[")]

    def to_json(self) -> str:
        doc = {
            "units": "um",
            "bounds": list(self.bounds),
            "background": self.background,
            "rects": [asdict(r) for r in self.rects],
            "inline_materials": {k: {"n": list(m.n), "k": list(m.k), "wavelength_nm": list(m.wavelengths_nm)}
                                 for k, m in sorted(self.materials.items())},
        }
        return json.dumps(doc, indent=1, sort_keys=True)

    def digest(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()


def build_source_scene(spec: GratingSpec, detector: SnspdStackSpec | None = None, *,
                       pad_um: float = 0.0, after_grating_um: float = 2.0, air_above_um: float = 0.3,
                       below_substrate_um: float = 1.0, design_wavelength_nm: float = 1560.0) -> Scene:
    """Device cross-section as non-overlapping axis-aligned rectangles.

    Layers that are laterally unbounded span the whole scene, including
    ``pad_um`` of padding on every side (absorber cells live there).  Without
    a detector the substrate runs out through the bottom edge; with one, the
    substrate ends at its thickness and air lies below.
    """
    x_left = -(spec.coupling_waveguide_length_um + spec.gap_um) - pad_um
    x_right = spec.grating_length_um + after_grating_um + pad_um
    y_top = spec.y_reflector_top - air_above_um - pad_um
    t_sub = spec.substrate_thickness_um
    if detector is not None:
        y_bottom = t_sub + detector.total_thickness_nm * 1e-3 + below_substrate_um + pad_um
    else:
        y_bottom = t_sub + below_substrate_um + pad_um

    R: list[Rect] = []
    sub_bottom = t_sub if detector is not None else y_bottom
    R.append(Rect(spec.substrate_material, x_left, x_right, 0.0, sub_bottom, "substrate"))
    R.append(Rect(spec.box_material, x_left, x_right, spec.y_film_bottom, 0.0, "box"))

    g0 = 0.0
    wg_end = -spec.gap_um
    fm, cm = spec.film_material, spec.clad_material
    # coupling waveguide: full film thickness
    R.append(Rect(fm, x_left, wg_end, spec.y_film_top, spec.y_film_bottom, "waveguide"))
    if spec.gap_um > 0:
        R.append(Rect(fm, wg_end, g0, spec.y_slab_top, spec.y_film_bottom, "gap_slab"))
        R.append(Rect(cm, wg_end, g0, spec.y_film_top, spec.y_slab_top, "gap_fill"))
    # residual slab under the grating and beyond it
    R.append(Rect(fm, g0, x_right, spec.y_slab_top, spec.y_film_bottom, "slab"))
    for i, d in enumerate(tooth_widths(spec)):
        x = g0 + i * spec.pitch_um
        R.append(Rect(fm, x, x + d, spec.y_film_top, spec.y_slab_top, f"tooth[{i}]"))
        R.append(Rect(cm, x + d, x + spec.pitch_um, spec.y_film_top, spec.y_slab_top, f"trench[{i}]"))
    x_end = g0 + spec.grating_length_um
    if x_right > x_end:
        R.append(Rect(cm, x_end, x_right, spec.y_film_top, spec.y_slab_top, "after_fill"))
    R.append(Rect(cm, x_left, x_right, spec.y_clad_top, spec.y_film_top, "clad"))
    R.append(Rect(spec.reflector_material, x_left, x_right, spec.y_reflector_top, spec.y_clad_top, "reflector"))

    materials = {}
    if detector is not None:
        nb = detector.nanowire_material(design_wavelength_nm)
        materials[nb.name] = nb
        xa = detector.detector_offset_um
        xb = xa + detector.detector_length_um
        y = t_sub
        for mat, t, label in ((detector.ar_material, detector.t_AR, "det_ar"),
                              (nb.name, detector.t_NbN, "det_nbn"),
                              (detector.cavity_material, detector.t_c, "det_cavity"),
                              (detector.mirror_material, detector.t_r2, "det_mirror")):
            R.append(Rect(mat, xa, xb, y, y + t * 1e-3, label, subcell=(label == "det_nbn")))
            y += t * 1e-3

    meta = {"grating_start_um": g0, "grating_end_um": x_end, "pad_um": pad_um}
    return Scene(R, (x_left, x_right, y_top, y_bottom), spec.ambient_material, materials, meta)


@dataclass(frozen=True)
class Mixture:
    """Volume-averaged blend of materials used for sub-cell sheets."""
    parts: tuple[tuple[str, float], ...]

    @property
    def name(self) -> str:
        return "mix(" + ",".join(f"{m}:{f:.6g}" for m, f in self.parts) + ")"


@dataclass
class PermittivityMap:
    ids: np.ndarray                      # (nx, ny) int32, index into materials
    materials: list                      # str names or Mixture
    dx: float
    dy: float
    origin: tuple[float, float]          # (x, y) of the lower-index cell corner
    inline: dict[str, OpticalMaterial] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)

    @property
    def shape(self) -> tuple[int, int]:
        return self.ids.shape

    def x_centers(self) -> np.ndarray:
        return self.origin[0] + (np.arange(self.ids.shape[0]) + 0.5) * self.dx

    def y_centers(self) -> np.ndarray:
        return self.origin[1] + (np.arange(self.ids.shape[1]) + 0.5) * self.dy

    def material_name(self, i: int) -> str:
        m = self.materials[i]
        return m if isinstance(m, str) else m.name

    def index_of(self, name: str) -> int:
        for i, m in enumerate(self.materials):
            if (m if isinstance(m, str) else m.name) == name:
                return i
        raise KeyError(name)

    def area_of(self, name: str) -> float:
        try:
            idx = self.index_of(name)
        except KeyError:
            return 0.0
        return float(np.count_nonzero(self.ids == idx)) * self.dx * self.dy

    def column(self, x: float) -> list[tuple[str, float, float]]:
        """Runs of material along y at the column containing ``x``: (name, y0, y1)."""
        i = int(math.floor((x - self.origin[0]) / self.dx))
        col = self.ids[i]
        runs = []
        start = 0
        for j in range(1, col.size + 1):
            if j == col.size or col[j] != col[start]:
                runs.append((self.material_name(int(col[start])),
                             self.origin[1] + start * self.dy, self.origin[1] + j * self.dy))
                start = j
        return runs

    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.ids).tobytes())
        h.update(repr((self.ids.shape, [self.material_name(i) for i in range(len(self.materials))],
                       self.dx, self.dy, self.origin)).encode())
        for k in sorted(self.inline):
            m = self.inline[k]
            h.update(repr((k, m.wavelengths_nm, m.n, m.k)).encode())
        return h.hexdigest()


def _center_range(a: float, b: float, origin: float, step: float, n: int) -> tuple[int, int]:
    # cells whose centre c = origin + (i + 0.5) step satisfies a <= c < b
    lo = math.ceil((a - origin) / step - 0.5 - 1e-9)
    hi = math.ceil((b - origin) / step - 0.5 - 1e-9)
    return max(lo, 0), min(hi, n)


def rasterize(scene: Scene, dx: float, dy: float, bounds=None) -> PermittivityMap:
    """Cell-centre sampling of ``scene``; sub-cell rectangles are area-averaged."""
    if not (dx > 0 and dy > 0):
        raise GeometryError("grid spacing must be positive")
    x0, x1, y0, y1 = bounds if bounds is not None else scene.bounds
    nx = int(round((x1 - x0) / dx))
    ny = int(round((y1 - y0) / dy))
    if nx < 1 or ny < 1:
        raise GeometryError("domain smaller than one cell")
    names = [scene.background]
    index = {scene.background: 0}

    def mid(name):
        if name not in index:
            index[name] = len(names)
            names.append(name)
        return index[name]

    ids = np.zeros((nx, ny), dtype=np.int32)
    warnings = []
    min_feature = math.inf
    for r in scene.rects:
        if r.subcell:
            continue
        w, h = r.x1 - r.x0, r.y1 - r.y0
        # features clipped by the scene edge are not small features
        if r.x0 > x0 and r.x1 < x1:
            min_feature = min(min_feature, w)
        if r.y0 > y0 and r.y1 < y1:
            min_feature = min(min_feature, h)
        i0, i1 = _center_range(r.x0, r.x1, x0, dx, nx)
        j0, j1 = _center_range(r.y0, r.y1, y0, dy, ny)
        if i1 > i0 and j1 > j0:
            ids[i0:i1, j0:j1] = mid(r.material)
    if max(dx, dy) > min_feature / 2:
        warnings.append(f"grid spacing ({dx:g}, {dy:g}) um exceeds half the smallest feature ({min_feature:g} um)")

    sub = [r for r in scene.rects if r.subcell]
    if sub:
        solid = [r for r in scene.rects if not r.subcell]
        for r in sub:
            warnings.append(f"{r.label or r.material}: sub-cell layer rasterised by area averaging")
            i0 = max(int(math.floor((r.x0 - x0) / dx)), 0)
            i1 = min(int(math.ceil((r.x1 - x0) / dx)), nx)
            j0 = max(int(math.floor((r.y0 - y0) / dy)), 0)
            j1 = min(int(math.ceil((r.y1 - y0) / dy)), ny)
            for j in range(j0, j1):
                for i in range(i0, i1):
                    cell = Rect("", x0 + i * dx, x0 + (i + 1) * dx, y0 + j * dy, y0 + (j + 1) * dy)
                    parts: dict[str, float] = {}
                    covered = 0.0
                    for s in solid + sub:
                        a = cell.overlap(s) / cell.area
                        if a > 0:
                            parts[s.material] = parts.get(s.material, 0.0) + a
                            covered += a
                    if covered < 1.0 - 1e-12:
                        parts[scene.background] = parts.get(scene.background, 0.0) + (1.0 - covered)
                    frac = tuple(sorted((m, round(f, 12)) for m, f in parts.items()))
                    if len(frac) == 1:
                        ids[i, j] = mid(frac[0][0])
                    else:
                        mix = Mixture(frac)
                        if mix.name not in index:
                            index[mix.name] = len(names)
                            names.append(mix)
                        ids[i, j] = index[mix.name]
    return PermittivityMap(ids, names, dx, dy, (x0, y0), dict(scene.materials), warnings)


def uniform_map(material: str, nx: int, ny: int, dx: float, dy: float, origin=(0.0, 0.0)) -> PermittivityMap:
    return PermittivityMap(np.zeros((nx, ny), np.int32), [material], dx, dy, origin)


def layered_map(layers: Sequence[tuple[str, float]], nx: int, dx: float, dy: float,
                y0: float = 0.0, x0: float = 0.0, inline=None) -> PermittivityMap:
    """Laterally uniform stack, layers given top to bottom as (material, thickness_um)."""
    total = sum(t for _, t in layers)
    rects = []
    y = y0
    for k, (m, t) in enumerate(layers):
        rects.append(Rect(m, x0, x0 + nx * dx, y, y + t, f"layer[{k}]"))
        y += t
    scene = Scene(rects, (x0, x0 + nx * dx, y0, y0 + total), layers[0][0], dict(inline or {}))
    return rasterize(scene, dx, dy)
