import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from heraldkit.geometry import (GeometryError, GratingSpec, Rect, Scene, build_source_scene, fill_factors,
                                layered_map, rasterize, tooth_widths, uniform_map)
from heraldkit.tmm import SnspdStackSpec


PAPER = GratingSpec()


def test_fill_factor_ramp():
    ff = fill_factors(PAPER)
    assert len(ff) == 40
    assert ff[0] == 0.72
    assert ff[1] == pytest.approx(0.708, abs=1e-12)
    assert ff[-1] == pytest.approx(0.72 - 39 * 0.012, abs=1e-12)
    assert ff[-1] == pytest.approx(0.252, abs=1e-12)


def test_fill_factor_clamp_triggers_when_ramp_is_long():
    ff = fill_factors(GratingSpec(num_teeth=60))
    assert min(ff) == 0.2
    assert ff[-1] == 0.2


def test_tooth_widths():
    d = tooth_widths(PAPER)
    assert d[0] == pytest.approx(0.5112, abs=1e-12)
    assert d[-1] == pytest.approx(0.17892, abs=1e-12)


def test_full_fill_factor_width_is_pitch():
    # FF -> 1 is excluded by the invariant; approach it
    spec = GratingSpec(ff_start=0.999999, ff_end=0.999999, apodization=0.0, num_teeth=2)
    assert tooth_widths(spec)[0] == pytest.approx(spec.pitch_um, rel=1e-5)


@given(ff0=st.floats(0.05, 0.95), frac=st.floats(0.01, 1.0), a=st.floats(0, 0.1), n=st.integers(1, 80))
def test_fill_factors_monotone_and_bounded(ff0, frac, a, n):
    spec = GratingSpec(ff_start=ff0, ff_end=ff0 * frac, apodization=a, num_teeth=n)
    ff = fill_factors(spec)
    assert len(ff) == n
    assert all(b <= c for b, c in zip(ff[1:], ff[:-1]))
    assert all(spec.ff_end <= f <= spec.ff_start for f in ff)


@pytest.mark.parametrize("kw", [dict(ff_start=0.1, ff_end=0.2), dict(ff_end=0.0), dict(apodization=-0.1),
                                dict(etch_depth_nm=700.0), dict(num_teeth=0), dict(box_thickness_um=0.0)])
def test_invalid_specs(kw):
    with pytest.raises(GeometryError):
        GratingSpec(**kw)


def test_grating_extent_and_tooth_positions():
    sc = build_source_scene(PAPER)
    assert PAPER.grating_length_um == pytest.approx(28.4)
    assert sc.meta["grating_end_um"] - sc.meta["grating_start_um"] == pytest.approx(28.4)
    teeth = sc.find("tooth")
    assert len(teeth) == 40
    for i, (t, d) in enumerate(zip(teeth, tooth_widths(PAPER))):
        assert t.x0 == pytest.approx(i * PAPER.pitch_um)
        assert t.x1 - t.x0 == pytest.approx(d)


def test_single_period_construction():
    spec = GratingSpec(num_teeth=1)
    sc = build_source_scene(spec)
    (tooth,) = sc.find("tooth")
    (slab,) = sc.find("slab")
    assert tooth.x1 - tooth.x0 == pytest.approx(0.72 * 0.71)
    assert tooth.y1 - tooth.y0 == pytest.approx(0.35)
    assert slab.y1 - slab.y0 == pytest.approx(0.25)
    assert tooth.y1 == pytest.approx(slab.y0)


def test_detector_stack_thickness_and_span():
    det = SnspdStackSpec(detector_length_um=10, detector_offset_um=4.0)
    sc = build_source_scene(PAPER, det)
    labels = ("det_ar", "det_nbn", "det_cavity", "det_mirror")
    rs = [sc.find(l)[0] for l in labels]
    assert rs[0].y0 == PAPER.substrate_thickness_um
    total = rs[-1].y1 - rs[0].y0
    assert total * 1e3 == pytest.approx(710.5, abs=1e-6)
    assert det.total_thickness_nm == pytest.approx(710.5)
    for r in rs:
        assert (r.x0, r.x1) == (4.0, 14.0)
    assert rs[1].subcell


def test_scene_is_pure():
    a = build_source_scene(PAPER, SnspdStackSpec())
    b = build_source_scene(PAPER, SnspdStackSpec())
    assert a.to_json() == b.to_json()
    assert a.digest() == b.digest()


def test_overlap_rejected():
    with pytest.raises(GeometryError, match="overlapping"):
        Scene([Rect("Si", 0, 2, 0, 2), Rect("SiO2", 1, 3, 1, 3)], (0, 3, 0, 3))


def test_uniform_scene():
    sc = Scene([Rect("Si", 0, 1, 0, 1)], (0, 1, 0, 1), "Si")
    pm = rasterize(sc, 0.1, 0.1)
    assert pm.shape == (10, 10)
    assert np.all(pm.ids == pm.index_of("Si"))
    um = uniform_map("SiO2", 3, 4, 0.1, 0.1)
    assert um.shape == (3, 4) and um.materials == ["SiO2"]


def test_aligned_interface_exact_widths():
    sc = Scene([Rect("Si", 0, 0.6, 0, 1), Rect("SiO2", 0.6, 1.0, 0, 1)], (0, 1, 0, 1))
    pm = rasterize(sc, 0.05, 0.05)
    si = pm.index_of("Si")
    assert np.all(np.count_nonzero(pm.ids == si, axis=0) == 12)
    assert pm.area_of("Si") == pytest.approx(0.6)
    assert pm.area_of("SiO2") == pytest.approx(0.4)


def test_rasterized_teeth_widths_at_10nm():
    spec = GratingSpec(substrate_thickness_um=2.0)
    sc = build_source_scene(spec)
    dx = 0.01
    pm = rasterize(sc, dx, dx)
    y_mid = 0.5 * (spec.y_film_top + spec.y_slab_top)
    j = int((y_mid - pm.origin[1]) / dx)
    row = np.array([pm.material_name(int(v)) for v in pm.ids[:, j]])
    xc = pm.x_centers()
    for i, d in enumerate(tooth_widths(spec)):
        x0 = i * spec.pitch_um
        sel = (xc >= x0) & (xc < x0 + spec.pitch_um)
        width = np.count_nonzero(row[sel] == spec.film_material) * dx
        assert abs(width - d) <= dx + 1e-9


@settings(max_examples=25, deadline=None)
@given(t=st.floats(0.05, 0.8), dx=st.sampled_from([0.01, 0.02, 0.025, 0.05]))
def test_layer_area_within_one_row(t, dx):
    pm = layered_map([("SiO2", 0.5), ("Si", t), ("SiO2", 0.5)], 4, dx, dx)
    rows = pm.area_of("Si") / (4 * dx) / dx
    assert abs(rows * dx - t) <= dx + 1e-9


def test_area_converges_with_refinement():
    sc = Scene([Rect("Si", 0.013, 0.587, 0.021, 0.333)], (0, 1, 0, 1))
    exact = (0.587 - 0.013) * (0.333 - 0.021)
    errs = [abs(rasterize(sc, h, h).area_of("Si") - exact) for h in (0.04, 0.02, 0.01, 0.005)]
    assert errs[-1] < errs[0]
    assert errs[-1] <= 2 * 0.005 * (0.574 + 0.312)


def test_small_features_warn():
    sc = Scene([Rect("Si", 0.2, 0.23, 0, 1)], (0, 1, 0, 1))
    assert any("smallest feature" in w for w in rasterize(sc, 0.02, 0.02).warnings)
    assert not rasterize(sc, 0.01, 0.01).warnings


def test_bad_spacing():
    sc = Scene([], (0, 1, 0, 1))
    with pytest.raises(GeometryError):
        rasterize(sc, 0.0, 0.1)
    with pytest.raises(GeometryError):
        rasterize(sc, 0.1, -0.1)


def test_subcell_sheet_is_area_averaged():
    sc = Scene([Rect("Si", 0, 1, 0, 0.5), Rect("NbN", 0, 1, 0.5, 0.506, "sheet", subcell=True)], (0, 1, 0, 1))
    pm = rasterize(sc, 0.02, 0.02)
    j = int(0.5 / 0.02)
    mix = pm.materials[pm.ids[0, j]]
    parts = dict(mix.parts)
    assert parts["NbN"] == pytest.approx(0.3)
    assert parts["vacuum"] == pytest.approx(0.7)


def test_rasterize_deterministic():
    det = SnspdStackSpec()
    spec = GratingSpec(substrate_thickness_um=3)
    a = rasterize(build_source_scene(spec, det), 0.02, 0.02)
    b = rasterize(build_source_scene(spec, det), 0.02, 0.02)
    assert a.digest() == b.digest()
