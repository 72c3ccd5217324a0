"""Ready-made simulation layouts: grating coupler, lossy slab, straight guide."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..geometry import GratingSpec, PermittivityMap, Rect, Scene, build_source_scene, rasterize
from ..tmm import SnspdStackSpec
from .analysis import box_monitors
from .engine import MonitorSpec, SimulationConfig, SourceSpec


@dataclass
class GcLayout:
    config: SimulationConfig
    scene: Scene
    depth_monitors: dict[str, float] = field(default_factory=dict)  # name -> depth below BOX/Si (um)
    box: tuple[float, float, float, float] | None = None


def depth_name(depth_um: float) -> str:
    return f"down_{depth_um:g}um"


def grating_coupler(spec: GratingSpec, wavelength_nm: float = 1560.0, *, dx: float = 0.02,
                    depths_um: Sequence[float] = (0.1,), detector: SnspdStackSpec | None = None,
                    wavelengths_nm: Sequence[float] | None = None, pml_cells: int = 20,
                    source_margin_um: float = 0.6, after_grating_um: float = 2.0, below_substrate_um: float = 1.0,
                    box_margin_um: float = 0.3, **cfg_kw) -> GcLayout:
    """Cross-section run of the back-illuminated grating coupler.

    The guided TE mode of the coupling waveguide is launched toward the
    grating.  Horizontal monitors at each requested depth below the BOX/Si
    interface span the whole non-PML width.  With a detector, a closed monitor
    box surrounds its stack (for the absorbed-power accounting).
    """
    pad = pml_cells * dx
    scene = build_source_scene(spec, detector, pad_um=pad, after_grating_um=after_grating_um,
                               below_substrate_um=below_substrate_um, design_wavelength_nm=wavelength_nm)
    pmap = rasterize(scene, dx, dx)
    x_left = scene.bounds[0] + pad
    x_right = scene.bounds[1] - pad
    x_src = x_left + source_margin_um
    mons = [MonitorSpec("reflected", "v", x_src - 0.5 * source_margin_um),
            MonitorSpec("forward", "v", x_right - 0.1, spec.y_reflector_top, 0.0)]
    depth_monitors = {}
    for d in depths_um:
        name = depth_name(d)
        depth_monitors[name] = float(d)
        mons.append(MonitorSpec(name, "h", float(d)))
    box = None
    if detector is not None:
        t_sub = spec.substrate_thickness_um
        xa = detector.detector_offset_um - box_margin_um
        xb = detector.detector_offset_um + detector.detector_length_um + box_margin_um
        y_top = t_sub - box_margin_um
        y_bot = t_sub + detector.total_thickness_nm * 1e-3 + min(box_margin_um, 0.5 * below_substrate_um)
        box = (xa, xb, y_top, y_bot)
        mons += box_monitors(xa, xb, y_top, y_bot, pmap.dx, pmap.dy, pmap.origin)
    window = (spec.y_clad_top + dx, -dx)
    src = SourceSpec("mode", x_src, "+x", window)
    wls = tuple(wavelengths_nm) if wavelengths_nm is not None else (float(wavelength_nm),)
    cfg = SimulationConfig(pmap, wls, src, mons, pml_cells=pml_cells, primary_wavelength_nm=wavelength_nm,
                           **cfg_kw)
    return GcLayout(cfg, scene, depth_monitors, box)


def lossy_slab(material: str, wavelength_nm: float, *, thickness_um: float = 20.0, dx: float | None = None,
               depths_um: Sequence[float] | None = None, above: str = "vacuum", pml_cells: int = 20,
               source_gap_um: float = 0.2, **cfg_kw) -> SimulationConfig:
    """Plane wave launched inside a thick slab (periodic in x), flux vs depth.

    The source sits ``source_gap_um`` below the top of the slab, so the
    depth series measures pure bulk attenuation.  Depth 0 is the source line.
    """
    from ..materials import refractive_index, resolve

    n = refractive_index(resolve(material), wavelength_nm).real
    if dx is None:
        dx = wavelength_nm * 1e-3 / n / 24.0
    nx = 4
    top = 0.3
    pad = pml_cells * dx
    y0 = -(top + source_gap_um) - pad
    y1 = thickness_um + 0.5 + pad
    rects = [Rect(material, 0.0, nx * dx, -source_gap_um, y1, "slab")]
    scene = Scene(rects, (0.0, nx * dx, y0, y1), above)
    pmap = rasterize(scene, dx, dx)
    if depths_um is None:
        depths_um = np.linspace(0.5, thickness_um, 40)
    mons = [MonitorSpec(depth_name(float(d)), "h", float(d)) for d in depths_um]
    src = SourceSpec("plane", 0.0 - 0.5 * dx, "+y")
    return SimulationConfig(pmap, (float(wavelength_nm),), src, mons, pml_cells=pml_cells, periodic_x=True,
                            primary_wavelength_nm=wavelength_nm, **cfg_kw)


def straight_waveguide(core: str = "LN-TE", clad: str = "SiO2", thickness_um: float = 0.6,
                       wavelength_nm: float = 1560.0, *, length_um: float = 10.0, dx: float = 0.025,
                       clad_um: float = 2.0, pml_cells: int = 20, monitors_at: Sequence[float] = (2.5, 8.0),
                       wavelengths_nm: Sequence[float] | None = None, **cfg_kw) -> SimulationConfig:
    pad = pml_cells * dx
    h = clad_um + thickness_um / 2
    rects = [Rect(core, -pad, length_um + pad, -thickness_um / 2, thickness_um / 2, "core")]
    scene = Scene(rects, (-pad, length_um + pad, -h - pad, h + pad), clad)
    pmap = rasterize(scene, dx, dx)
    mons = [MonitorSpec(f"x={x:g}", "v", float(x)) for x in monitors_at]
    src = SourceSpec("mode", 1.0, "+x", (-h, h))
    wls = tuple(wavelengths_nm) if wavelengths_nm is not None else (float(wavelength_nm),)
    return SimulationConfig(pmap, wls, src, mons, pml_cells=pml_cells, primary_wavelength_nm=wavelength_nm,
                            **cfg_kw)
