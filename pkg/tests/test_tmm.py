import cmath
import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from heraldkit.materials import OpticalMaterial, refractive_index, get_material
from heraldkit.tmm import (Layer, LayerStack1D, SnspdStackSpec, StackError, cavity_sweep, effective_medium,
                           fdtd_cross_check, snspd_layer_stack, solve_stack)

WL = 1560.0


def const(name, n):
    return OpticalMaterial.constant(name, complex(n), WL)


def quarter_wave_r(n0, n1, ns):
    # amplitude reflection of a quarter-wave layer at the design wavelength
    return (n0 * ns - n1**2) / (n0 * ns + n1**2)


def test_bare_interface_identity_media():
    s = LayerStack1D(const("a", 1.5), (), const("b", 1.5), WL)
    r = solve_stack(s)
    assert r.R == pytest.approx(0, abs=1e-15)
    assert r.T == pytest.approx(1, abs=1e-15)


def test_bare_fresnel():
    s = LayerStack1D(const("a", 1.0), (), const("b", 3.5), WL)
    assert solve_stack(s).R == pytest.approx(((3.5 - 1) / 4.5) ** 2, rel=1e-12)


@pytest.mark.parametrize("n0,ns", [(1.0, 2.25), (3.48, 1.0), (1.44, 3.48)])
def test_quarter_wave_ar(n0, ns):
    n1 = math.sqrt(n0 * ns)
    s = LayerStack1D(const("in", n0), (Layer(const("ar", n1), WL / (4 * n1)),), const("out", ns), WL)
    assert solve_stack(s).R < 1e-8
    assert quarter_wave_r(n0, n1, ns) == pytest.approx(0, abs=1e-15)


@pytest.mark.parametrize("n1", [1.2, 2.0, 3.0])
def test_quarter_wave_non_matched(n1):
    n0, ns = 1.0, 1.5
    s = LayerStack1D(const("in", n0), (Layer(const("l", n1), WL / (4 * n1)),), const("out", ns), WL)
    assert solve_stack(s).R == pytest.approx(quarter_wave_r(n0, n1, ns) ** 2, abs=1e-12)


def _stack_strategy(lossy=True):
    nk = st.tuples(st.floats(1.0, 4.0), st.floats(0.0, 3.0) if lossy else st.just(0.0))
    layer = st.tuples(nk, st.floats(1.0, 800.0))
    return st.tuples(st.floats(1.0, 3.6), st.lists(layer, min_size=0, max_size=6),
                     st.tuples(st.floats(1.0, 4.0), st.floats(0.0, 1.0) if lossy else st.just(0.0)),
                     st.floats(0.0, 80.0), st.sampled_from(["s", "p"]))


def _build(spec):
    n0, layers, (ne, ke), ang, pol = spec
    ls = tuple(Layer(const(f"L{i}", complex(n, k)), t) for i, ((n, k), t) in enumerate(layers))
    return LayerStack1D(const("in", n0), ls, const("out", complex(ne, ke)), WL, ang, pol)


@settings(max_examples=100, deadline=None)
@given(_stack_strategy())
def test_energy_closure_random_stacks(spec):
    r = solve_stack(_build(spec))
    total = r.R + r.T + float(np.sum(r.A))
    assert abs(total - 1) < 1e-8
    for v in (r.R, r.T, *r.A):
        assert -1e-8 <= v <= 1 + 1e-8


@settings(max_examples=60, deadline=None)
@given(_stack_strategy(lossy=False))
def test_lossless_stacks(spec):
    st_ = _build(spec)
    r = solve_stack(st_)
    assert abs(r.R + r.T - 1) < 1e-10
    assert np.all(np.abs(r.A) < 1e-10)


@settings(max_examples=60, deadline=None)
@given(_stack_strategy(lossy=False))
def test_reciprocity_under_reversal(spec):
    n0, layers, (ne, _), ang, pol = spec
    s = _build((n0, layers, (ne, 0.0), 0.0, pol))
    assert solve_stack(s).T == pytest.approx(solve_stack(s.reversed()).T, abs=1e-10)


@settings(max_examples=60, deadline=None)
@given(_stack_strategy())
def test_s_and_p_agree_at_normal_incidence(spec):
    n0, layers, exit_, _, _ = spec
    a = solve_stack(_build((n0, layers, exit_, 0.0, "s")))
    b = solve_stack(_build((n0, layers, exit_, 0.0, "p")))
    assert abs(a.R - b.R) < 1e-10 and abs(a.T - b.T) < 1e-10
    assert np.allclose(a.A, b.A, atol=1e-10)


def test_total_internal_reflection_is_exact():
    s = LayerStack1D(const("in", 3.5), (Layer(const("gap", 1.0), 2000.0),), const("out", 1.0), WL, 40.0, "s")
    r = solve_stack(s)
    assert r.T == pytest.approx(0, abs=1e-10)
    assert r.R == pytest.approx(1, abs=1e-10)


def test_lossy_incidence_rejected():
    with pytest.raises(StackError):
        solve_stack(LayerStack1D(const("in", 1.5 + 0.1j), (), const("out", 1.0), WL))


def test_nonpositive_thickness_rejected():
    with pytest.raises(StackError):
        LayerStack1D("SiO2", (Layer("Si", 0.0),), "vacuum", WL)


# ------------------------------------------------------------ effective medium

def test_effective_medium_limits():
    w, h = complex(5.23, 5.82), complex(1.444, 0)
    for pol in ("parallel", "perpendicular"):
        assert effective_medium(100, 100, 5.5, w, h, pol) ** 2 == pytest.approx(w**2, rel=1e-14)
        assert effective_medium(0, 100, 5.5, w, h, pol) ** 2 == pytest.approx(h**2, rel=1e-14)


def test_effective_medium_table_values():
    sio2 = refractive_index(get_material("SiO2"), 1560)
    nbn = complex(5.23, 5.82)
    eps = (nbn**2 + sio2**2) / 2
    got = effective_medium(100, 200, 5.5, nbn, sio2, "parallel")
    assert got == pytest.approx(cmath.sqrt(eps), rel=1e-14)
    # hand check: eps_NbN = 5.23^2 - 5.82^2 + 2i 5.23 5.82
    assert nbn**2 == pytest.approx(complex(27.3529 - 33.8724, 60.8772), rel=1e-12)
    perp = effective_medium(100, 200, 5.5, nbn, sio2, "perpendicular")
    assert 1 / perp**2 == pytest.approx(0.5 / nbn**2 + 0.5 / sio2**2, rel=1e-12)


def test_effective_medium_errors_and_warning():
    with pytest.raises(StackError):
        effective_medium(0, 0, 5, 2, 1)
    with pytest.raises(StackError):
        effective_medium(300, 200, 5, 2, 1)
    with pytest.warns(UserWarning):
        effective_medium(100, 500, 5, 2, 1.5, "parallel", 1560)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        effective_medium(100, 200, 5, 2, 1.444, "parallel", 1560)


# ---------------------------------------------------------------- detector

@pytest.fixture(scope="module")
def table1():
    return snspd_layer_stack(SnspdStackSpec(), WL, polarization="s")


def test_table1_layers(table1):
    assert [l.name for l in table1.layers] == ["AR", "NbN", "cavity", "mirror"]
    assert [l.thickness_nm for l in table1.layers] == [275.0, 5.5, 230.0, 200.0]


def test_table1_closure(table1):
    r = solve_stack(table1)
    assert r.R + r.T + r.A.sum() == pytest.approx(1, abs=1e-12)


def test_table1_nbn_absorbance(table1):
    a = solve_stack(table1).absorbance("NbN")
    assert a > 0.90
    assert a == pytest.approx(TABLE1_A_NBN, abs=2e-5)


# NbN absorbance of the Table-1 stack from the 1D FDTD oracle (dz = 0.5 nm), frozen
TABLE1_A_NBN = 0.929499


def test_table1_against_fdtd_oracle(table1):
    cc = fdtd_cross_check(table1)
    assert cc.passed
    assert cc.max_delta < 0.02
    assert cc.fdtd.absorbance("NbN") == pytest.approx(TABLE1_A_NBN, abs=0.02)


def test_lossless_detector_gives_zero_map():
    spec = SnspdStackSpec(nanowire_index=complex(3.0, 0.0))
    base = snspd_layer_stack(spec, WL)
    layers = list(base.layers)
    layers[3] = Layer(const("lossless_mirror", 1.8), 200.0, "mirror")
    base = LayerStack1D(base.incidence, tuple(layers), base.exit, WL)
    cm = cavity_sweep(base, np.arange(100, 300, 20.0), np.arange(150, 350, 20.0))
    assert np.all(np.abs(cm.A_NbN) < 1e-12)


def test_cavity_map_period_matches_fabry_perot(table1):
    sio2 = refractive_index(get_material("SiO2"), WL).real
    expected = WL / (2 * sio2)
    tc = np.arange(100.0, 1700.0, 0.5)
    cm = cavity_sweep(table1, tc, [275.0])
    a = cm.A_NbN[:, 0]
    peaks = [i for i in range(1, a.size - 1) if a[i] >= a[i - 1] and a[i] > a[i + 1]]
    assert len(peaks) >= 2
    period = float(np.mean(np.diff(tc[peaks])))
    assert period == pytest.approx(expected, rel=0.01)


def test_cavity_sweep_rejects_nonpositive(table1):
    with pytest.raises(StackError):
        cavity_sweep(table1, [0.0, 100.0], [100.0])


def test_cavity_sweep_rows_match_point_solves(table1):
    cm = cavity_sweep(table1, [200.0, 230.0], [250.0, 275.0])
    r = solve_stack(table1.with_thickness("cavity", 230.0).with_thickness("AR", 275.0))
    assert cm.A_NbN[1, 1] == pytest.approx(r.absorbance("NbN"), abs=1e-15)
    assert len(list(cm.rows())) == 4
