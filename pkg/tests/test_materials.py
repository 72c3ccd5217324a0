import csv
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from heraldkit import materials as M
from heraldkit.materials import OpticalMaterial, ThermalMaterial


def _beer_lambert_db_per_um(k, wl_nm):
    # intensity ~ exp(-4 pi k z / lambda); dB = 10 log10(I0/I)
    alpha = 4 * math.pi * k / (wl_nm * 1e-3)
    return 10 * alpha / math.log(10)


def test_nbn_at_design_wavelength():
    n = M.refractive_index(M.get_material("NbN"), 1560)
    assert n == complex(5.23, 5.82)


@pytest.mark.parametrize("wl", [1.0, 780.0, 1560.0, 1e5])
def test_vacuum_is_unity(wl):
    assert M.refractive_index(M.VACUUM, wl) == complex(1.0, 0.0)
    assert M.refractive_index(M.get_material("vacuum"), 1560.0) == complex(1.0, 0.0)


def test_two_sample_midpoint():
    m = OpticalMaterial.from_samples("two", [(1000, 2.0, 0.0), (2000, 3.0, 0.0)])
    assert M.refractive_index(m, 1500) == complex(2.5, 0.0)


def test_out_of_range_names_material_and_wavelength():
    m = OpticalMaterial.from_samples("two", [(1000, 2.0, 0.0), (2000, 3.0, 0.0)])
    with pytest.raises(M.MaterialRangeError, match=r"two.*2500"):
        M.refractive_index(m, 2500)
    with pytest.raises(M.MaterialRangeError):
        M.refractive_index(M.get_material("NbN"), 1561)


def test_lossless_attenuation_is_zero():
    m = OpticalMaterial.from_samples("lossless", [(500, 1.5, 0.0), (1500, 1.5, 0.0)])
    assert M.attenuation_dB_per_um(m, 900) == 0.0


def test_silicon_pump_attenuation():
    # k = alpha * lambda / (4 pi) with alpha in nepers/um from 0.55 dB/um
    alpha_nat = 0.55 / (10 * math.log10(math.e))
    k_expected = alpha_nat * 0.780 / (4 * math.pi)
    assert k_expected == pytest.approx(0.00786, rel=2e-3)
    si = M.get_material("Si")
    assert M.refractive_index(si, 780).imag == pytest.approx(k_expected, rel=1e-5)
    assert M.attenuation_dB_per_um(si, 780) == pytest.approx(0.55, rel=5e-3)
    assert M.k_to_dB_per_um(0.00786, 780) == pytest.approx(0.55, rel=5e-3)


def test_cryo_silicon_halves_pump_loss():
    a = M.attenuation_dB_per_um(M.get_material("Si"), 780)
    b = M.attenuation_dB_per_um(M.get_material("Si-cryo"), 780)
    # the tables store k to 8 decimals
    assert b == pytest.approx(a / 2, rel=1e-5)


def test_nbn_attenuation_against_direct_formula():
    val = M.attenuation_dB_per_um(M.get_material("NbN"), 1560)
    assert val == pytest.approx(_beer_lambert_db_per_um(5.82, 1560), rel=1e-12)
    assert val == pytest.approx(204, abs=1)


def test_silicon_bandgap_metadata():
    assert M.get_material("Si").bandgap_eV == pytest.approx(1.1)


@given(k=st.floats(0, 10), wl=st.floats(200, 5000))
def test_k_db_round_trip(k, wl):
    back = M.dB_per_um_to_k(M.k_to_dB_per_um(k, wl), wl)
    assert back == pytest.approx(k, rel=1e-10, abs=1e-300)


@given(k1=st.floats(0, 5), dk=st.floats(1e-6, 5), wl=st.floats(300, 3000), dwl=st.floats(1, 1000))
def test_attenuation_monotone(k1, dk, wl, dwl):
    assert M.k_to_dB_per_um(k1 + dk, wl) > M.k_to_dB_per_um(k1, wl)
    if k1 > 0:
        assert M.k_to_dB_per_um(k1, wl + dwl) < M.k_to_dB_per_um(k1, wl)


@given(st.lists(st.tuples(st.floats(1.0, 4.0), st.floats(0.0, 2.0)), min_size=1, max_size=12))
def test_interpolation_exact_at_samples(nk):
    wl = [400.0 + 37.5 * i for i in range(len(nk))]
    m = OpticalMaterial.from_samples("t", [(w, n, k) for w, (n, k) in zip(wl, nk)])
    for w, (n, k) in zip(wl, nk):
        assert M.refractive_index(m, w) == complex(n, k)


def test_invalid_optical_tables_rejected():
    with pytest.raises(M.MaterialError):
        OpticalMaterial.from_samples("dup", [(1000, 2.0, 0.0), (1000, 2.0, 0.0)])
    with pytest.raises(M.MaterialError):
        OpticalMaterial.from_samples("neg", [(1000, -1.0, 0.0)])
    with pytest.raises(M.MaterialError):
        OpticalMaterial.from_samples("negk", [(1000, 1.0, -0.1)])


def test_thermal_midpoint_and_range():
    t = ThermalMaterial("t", (2.0, 4.0), (500.0, 1500.0))
    assert M.thermal_conductivity(t, 3.0) == 1000.0
    with pytest.raises(M.MaterialRangeError, match="4.5"):
        M.thermal_conductivity(t, 4.5)
    with pytest.raises(M.MaterialRangeError):
        M.thermal_conductivity_array(t, np.array([3.0, 1.0]))


def test_single_point_thermal_table_rejected():
    with pytest.raises(M.MaterialError):
        ThermalMaterial("one", (2.0,), (100.0,))


def test_bundled_silicon_table_identity(tmp_path):
    mat = M.get_thermal_material("Si-cryo")
    path = M._data_dir("thermal") / "Si-cryo.csv"
    rows = [r for r in csv.reader(path.read_text().splitlines()) if r and not r[0].startswith("#")][1:]
    T = np.array([float(r[0]) for r in rows])
    k = np.array([float(r[1]) for r in rows])
    for a, b in zip(T, k):
        assert M.thermal_conductivity(mat, a) == b
    assert np.array_equal(M.thermal_conductivity_array(mat, T), k)


def test_silicon_cryo_conductivity_follows_cubic_law():
    mat = M.get_thermal_material("Si-cryo")
    beta = 230 / 4.2**3
    for T in (1.0, 2.0, 4.0, 10.0):
        assert M.thermal_conductivity(mat, T) == pytest.approx(beta * T**3, rel=1e-4)


def test_parse_error_reports_location(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("# material: bad; source: test; bandgap_eV: none\nwavelength_nm,n,k\n1000,1.5,0\n1100,x,0\n")
    with pytest.raises(M.MaterialParseError) as exc:
        M.load_optical_csv(p)
    assert (exc.value.line, exc.value.column) == (4, 2)
    assert "bad.csv" in str(exc.value)


def test_missing_header_rejected(tmp_path):
    p = tmp_path / "nohdr.csv"
    p.write_text("1000,1.5,0\n")
    with pytest.raises(M.MaterialParseError):
        M.load_optical_csv(p)


def test_header_and_bandgap_parsed(tmp_path):
    p = tmp_path / "ok.csv"
    p.write_text("# material: Foo; source: made up; bandgap_eV: 2.5\n500,1.5,0.1\n600,1.6,0.2\n")
    m = M.load_optical_csv(p)
    assert (m.name, m.bandgap_eV, m.source) == ("Foo", 2.5, "made up")


def test_every_bundled_material_loads():
    for name in M.list_materials():
        m = M.get_material(name)
        assert m.name == name
    for name in M.list_thermal_materials():
        assert M.get_thermal_material(name).name == name


def test_unknown_material():
    with pytest.raises(M.MaterialError, match="unknown"):
        M.get_material("unobtainium")
