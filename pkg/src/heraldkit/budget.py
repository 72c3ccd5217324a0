"""Closed-form photon accounting: pump suppression, CAR, efficiency chains."""
from __future__ import annotations

import math
from decimal import Decimal
from dataclasses import dataclass, field
from typing import Iterable, Sequence


class BudgetError(ValueError):
    pass


def db_to_efficiency(loss_dB: float) -> float:
    return 10.0 ** (-loss_dB / 10.0)


def efficiency_to_db(eff: float) -> float:
    if not 0 < eff <= 1:
        raise BudgetError(f"efficiency must lie in (0, 1], got {eff}")
    return -10.0 * math.log10(eff)


@dataclass(frozen=True)
class Contribution:
    name: str
    loss_dB: float

    def __post_init__(self):
        if not (self.loss_dB >= 0 and math.isfinite(self.loss_dB)):
            raise BudgetError(f"{self.name}: loss must be a finite value >= 0 dB")

    @property
    def efficiency(self) -> float:
        return db_to_efficiency(self.loss_dB)


@dataclass
class LossChain:
    """Ordered named losses; each can be entered in dB or as an efficiency."""
    items: list[Contribution] = field(default_factory=list)

    def add_dB(self, name: str, loss_dB: float) -> "LossChain":
        self.items.append(Contribution(name, float(loss_dB)))
        return self

    def add_efficiency(self, name: str, eff: float) -> "LossChain":
        self.items.append(Contribution(name, efficiency_to_db(float(eff))))
        return self

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[str, str, float]]) -> "LossChain":
        """(name, "dB"|"eff", value) triples."""
        ch = cls()
        for name, kind, v in pairs:
            if kind == "dB":
                ch.add_dB(name, v)
            elif kind == "eff":
                ch.add_efficiency(name, v)
            else:
                raise BudgetError(f"unknown contribution kind {kind!r}")
        return ch

    @property
    def total_dB(self) -> float:
        return math.fsum(c.loss_dB for c in self.items)

    def table(self) -> list[tuple[str, float, float, float]]:
        """(name, dB, efficiency, cumulative efficiency) per entry."""
        rows, cum = [], 1.0
        for c in self.items:
            cum *= c.efficiency
            rows.append((c.name, c.loss_dB, c.efficiency, cum))
        return rows

    def __len__(self):
        return len(self.items)


def heralding_efficiency(chain: LossChain) -> float:
    # summing dB first keeps the result independent of entry order
    return db_to_efficiency(chain.total_dB)


def pump_suppression_dB(thickness_um: float, attenuation_dB_per_um: float) -> float:
    if thickness_um < 0 or attenuation_dB_per_um < 0:
        raise BudgetError("thickness and attenuation must be >= 0")
    # multiply the shortest decimal forms so 400 x 0.55 is 220, not 220.00000000000003
    return float(Decimal(repr(float(thickness_um))) * Decimal(repr(float(attenuation_dB_per_um))))


def depth_for_absorbed_fraction(attenuation_dB_per_um: float, fraction: float) -> float:
    if not attenuation_dB_per_um > 0:
        raise BudgetError("attenuation must be > 0")
    if not 0 <= fraction < 1:
        raise BudgetError("fraction must lie in [0, 1)")
    return -10.0 * math.log10(1.0 - fraction) / attenuation_dB_per_um


@dataclass(frozen=True)
class CarCalibration:
    """Two (suppression dB, CAR) anchors; log10(CAR) is linear between them."""
    anchors: tuple[tuple[float, float], tuple[float, float]] = ((220.0, 3.16e13), (110.0, 3.16e3))
    margin: float = 0.5   # fraction of the anchor interval allowed beyond each end

    def __post_init__(self):
        (s1, c1), (s2, c2) = self.anchors
        if s1 == s2:
            raise BudgetError("CAR calibration anchors need distinct suppression values")
        if not (c1 > 0 and c2 > 0):
            raise BudgetError("CAR anchor values must be > 0")

    @property
    def slope(self) -> float:
        (s1, c1), (s2, c2) = self.anchors
        return (math.log10(c1) - math.log10(c2)) / (s1 - s2)

    @property
    def valid_range_dB(self) -> tuple[float, float]:
        lo, hi = sorted(a[0] for a in self.anchors)
        pad = self.margin * (hi - lo)
        return lo - pad, hi + pad


@dataclass(frozen=True)
class CarEstimate:
    car: float
    suppression_dB: float
    extrapolated: bool


def car_estimate(cal: CarCalibration, suppression_dB: float) -> CarEstimate:
    for s, c in cal.anchors:
        if suppression_dB == s:  # exact at the anchors
            return CarEstimate(float(c), suppression_dB, False)
    s1, c1 = cal.anchors[0]
    log_car = math.log10(c1) + cal.slope * (suppression_dB - s1)
    lo, hi = cal.valid_range_dB
    return CarEstimate(10.0**log_car, suppression_dB, not lo <= suppression_dB <= hi)


@dataclass(frozen=True)
class PairRate:
    probability: float
    saturated: bool


def pair_rate_budget(pump_power_mW: float, power_per_tenth_mW: float = 0.33) -> PairRate:
    """Pair probability per pulse, linear in pump power: 0.1 at ``power_per_tenth_mW``."""
    if pump_power_mW < 0 or not power_per_tenth_mW > 0:
        raise BudgetError("pump power must be >= 0 and the calibration power > 0")
    p = 0.1 * pump_power_mW / power_per_tenth_mW
    return PairRate(min(p, 1.0), p > 1.0)


def format_table(chain: LossChain) -> str:
    rows = chain.table()
    w = max([len("contribution")] + [len(r[0]) for r in rows])
    out = [f"{'contribution':<{w}}  {'loss_dB':>9}  {'efficiency':>10}  {'cumulative':>10}"]
    for name, db, eff, cum in rows:
        out.append(f"{name:<{w}}  {db:>9.4f}  {eff:>10.6f}  {cum:>10.6f}")
    out.append(f"{'total':<{w}}  {chain.total_dB:>9.4f}  {heralding_efficiency(chain):>10.6f}")
    return "\n".join(out)


def chain_csv_rows(chain: LossChain) -> list[list[str]]:
    rows = [["contribution", "loss_dB", "efficiency", "cumulative"]]
    for name, db, eff, cum in chain.table():
        rows.append([name, repr(db), repr(eff), repr(cum)])
    return rows
