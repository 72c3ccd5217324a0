import math

import pytest
from hypothesis import given, strategies as st

from heraldkit.budget import (BudgetError, CarCalibration, LossChain, car_estimate, chain_csv_rows,
                              db_to_efficiency, depth_for_absorbed_fraction, efficiency_to_db, format_table,
                              heralding_efficiency, pair_rate_budget, pump_suppression_dB)
from heraldkit.tmm import SnspdStackSpec, snspd_layer_stack, solve_stack

CAL = CarCalibration()


@pytest.mark.parametrize("t,a,expected", [(400, 0.55, 220.0), (400, 0.275, 110.0), (0, 0.55, 0.0), (0, 7.0, 0.0)])
def test_pump_suppression(t, a, expected):
    assert pump_suppression_dB(t, a) == expected


def test_pump_suppression_rejects_negative():
    with pytest.raises(BudgetError):
        pump_suppression_dB(-1, 0.55)


def test_depth_for_absorbed_fraction():
    d = depth_for_absorbed_fraction(0.55, 0.99)
    assert d == pytest.approx(20 / 0.55, rel=1e-12)
    assert round(d, 1) == 36.4
    assert depth_for_absorbed_fraction(1.0, 0.9) == pytest.approx(10.0, rel=1e-12)
    assert depth_for_absorbed_fraction(0.3, 1e-12) == pytest.approx(0.0, abs=1e-9)
    with pytest.raises(BudgetError):
        depth_for_absorbed_fraction(0.0, 0.5)


def test_car_anchors_are_exact():
    assert car_estimate(CAL, 220.0).car == 3.16e13
    assert car_estimate(CAL, 110.0).car == 3.16e3
    assert not car_estimate(CAL, 220.0).extrapolated


def test_car_midpoint_is_geometric():
    assert car_estimate(CAL, 165.0).car == pytest.approx(3.16e8, rel=1e-12)
    assert car_estimate(CAL, 165.0).car == pytest.approx(math.sqrt(3.16e13 * 3.16e3), rel=1e-12)


def test_car_extrapolation_flagged():
    lo, hi = CAL.valid_range_dB
    assert (lo, hi) == (55.0, 275.0)
    assert not car_estimate(CAL, 275.0).extrapolated
    assert car_estimate(CAL, 276.0).extrapolated
    assert car_estimate(CAL, 40.0).extrapolated


def test_degenerate_calibration():
    with pytest.raises(BudgetError):
        CarCalibration(((100.0, 10.0), (100.0, 1e3)))
    with pytest.raises(BudgetError):
        CarCalibration(((100.0, 0.0), (200.0, 1e3)))


@given(a=st.floats(0, 400), d=st.floats(1e-3, 100))
def test_car_monotone(a, d):
    assert car_estimate(CAL, a + d).car > car_estimate(CAL, a).car


@given(db=st.floats(0, 60))
def test_db_round_trip(db):
    assert efficiency_to_db(db_to_efficiency(db)) == pytest.approx(db, abs=1e-12)


@given(eff=st.floats(1e-6, 1.0))
def test_efficiency_round_trip(eff):
    assert db_to_efficiency(efficiency_to_db(eff)) == pytest.approx(eff, rel=1e-12)


def test_empty_and_half_power_chains():
    assert heralding_efficiency(LossChain()) == 1.0
    assert heralding_efficiency(LossChain().add_dB("half", 3.0103)) == pytest.approx(0.5, abs=1e-6)


@given(st.lists(st.tuples(st.sampled_from(["dB", "eff"]), st.floats(0.01, 0.999)), min_size=1, max_size=8),
       st.randoms())
def test_order_invariance(entries, rnd):
    pairs = [(f"c{i}", kind, v * (10 if kind == "dB" else 1)) for i, (kind, v) in enumerate(entries)]
    a = heralding_efficiency(LossChain.from_pairs(pairs))
    shuffled = list(pairs)
    rnd.shuffle(shuffled)
    assert heralding_efficiency(LossChain.from_pairs(shuffled)) == a


def test_invalid_contributions():
    with pytest.raises(BudgetError):
        LossChain().add_dB("gain", -0.1)
    with pytest.raises(BudgetError):
        LossChain().add_efficiency("over", 1.2)
    with pytest.raises(BudgetError):
        LossChain.from_pairs([("x", "percent", 5)])


def test_detector_chain_brackets_reported_efficiency():
    a_nbn = solve_stack(snspd_layer_stack(SnspdStackSpec(), 1560.0, polarization="s")).absorbance("NbN")
    chain = LossChain().add_dB("GC + substrate", 0.17).add_efficiency("SNSPD absorbance", a_nbn)
    assert 0.90 <= heralding_efficiency(chain) <= 0.97


def test_pair_rate():
    assert pair_rate_budget(0.33).probability == pytest.approx(0.1, rel=1e-12)
    assert pair_rate_budget(0.033).probability == pytest.approx(0.01, rel=1e-12)
    assert pair_rate_budget(0.0).probability == 0.0
    sat = pair_rate_budget(5.0)
    assert sat.saturated and sat.probability == 1.0
    with pytest.raises(BudgetError):
        pair_rate_budget(1.0, 0.0)


def test_table_outputs():
    ch = LossChain().add_dB("gc", 0.13).add_dB("substrate", 0.04).add_efficiency("detector", 0.95)
    rows = ch.table()
    assert [r[0] for r in rows] == ["gc", "substrate", "detector"]
    assert rows[-1][3] == pytest.approx(heralding_efficiency(ch), rel=1e-12)
    text = format_table(ch)
    lines = text.splitlines()
    assert lines[0].split() == ["contribution", "loss_dB", "efficiency", "cumulative"]
    assert lines[-1].startswith("total")
    assert len({len(l) for l in lines[:-1]}) == 1   # aligned columns
    csv_rows = chain_csv_rows(ch)
    assert csv_rows[0] == ["contribution", "loss_dB", "efficiency", "cumulative"]
    assert float(csv_rows[1][1]) == 0.13
