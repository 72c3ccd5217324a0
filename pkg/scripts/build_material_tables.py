"""Regenerate the bundled optical and thermal CSV tables.

Dielectrics come from published Sellmeier fits, evaluated on a 10 nm grid.
Gold is the Johnson & Christy (1972) table, silicon is hand-tabulated near
the two working wavelengths.  Run from the repository root:

    python scripts/build_material_tables.py
"""
from pathlib import Path

import numpy as np

DATA = Path(__file__).resolve().parents[1] / "src" / "heraldkit" / "data"
GRID_NM = np.arange(400, 2001, 10)


def sellmeier(lam_um, terms):
    lam2 = lam_um**2
    n2 = 1.0 + sum(b * lam2 / (lam2 - c) for b, c in terms)
    return np.sqrt(n2)


def write_optical(name, source, rows, bandgap="none"):
    path = DATA / "materials" / f"{name}.csv"
    with open(path, "w") as fh:
        fh.write(f"# material: {name}; source: {source}; bandgap_eV: {bandgap}\n")
        fh.write("wavelength_nm,n,k\n")
        for lam, n, k in rows:
            fh.write(f"{lam:g},{n:.6f},{k:.6g}\n")


def main():
    lam_um = GRID_NM / 1000.0

    # Malitson, JOSA 55, 1205 (1965)
    n = sellmeier(lam_um, [(0.6961663, 0.0684043**2), (0.4079426, 0.1162414**2),
                           (0.8974794, 9.896161**2)])
    write_optical("SiO2", "Malitson JOSA 55 1205 (1965) Sellmeier, fused silica",
                  [(l, v, 0.0) for l, v in zip(GRID_NM, n)])

    # Malitson & Dodge, JOSA 62, 1405 (1972), ordinary ray
    n = sellmeier(lam_um, [(1.4313493, 0.0726631**2), (0.65054713, 0.1193242**2),
                           (5.3414021, 18.028251**2)])
    write_optical("Al2O3", "Malitson & Dodge JOSA 62 1405 (1972) Sellmeier, ordinary ray",
                  [(l, v, 0.0) for l, v in zip(GRID_NM, n)])

    # Zelmon, Small & Jundt, JOSA B 14, 3319 (1997), congruent LN
    n_e = sellmeier(lam_um, [(2.9804, 0.02047), (0.5981, 0.0666), (8.9543, 416.08)])
    n_o = sellmeier(lam_um, [(2.6734, 0.01764), (1.2290, 0.05914), (12.614, 474.6)])
    write_optical("LN-TE", "Zelmon et al. JOSA B 14 3319 (1997) Sellmeier, extraordinary index "
                  "(in-plane TE field along the crystal z axis)",
                  [(l, v, 0.0) for l, v in zip(GRID_NM, n_e)])
    write_optical("LN-TM", "Zelmon et al. JOSA B 14 3319 (1997) Sellmeier, ordinary index",
                  [(l, v, 0.0) for l, v in zip(GRID_NM, n_o)])

    # Johnson & Christy, PRB 6, 4370 (1972): (eV, n, k)
    jc = [(0.64, 0.92, 13.78), (0.77, 0.56, 11.21), (0.89, 0.43, 9.519),
          (1.02, 0.35, 8.145), (1.14, 0.27, 7.150), (1.26, 0.22, 6.350),
          (1.39, 0.17, 5.663), (1.51, 0.16, 5.083), (1.64, 0.14, 4.542),
          (1.76, 0.13, 4.103), (1.88, 0.14, 3.697), (2.01, 0.21, 3.272)]
    rows = sorted((1239.84193 / ev, n, k) for ev, n, k in jc)
    write_optical("Au", "Johnson & Christy PRB 6 4370 (1972) table, wavelength = 1239.84193/E_eV",
                  rows)

    # Room-temperature silicon.  Real index near 780 nm after Green, SEMSC 92
    # 1305 (2008); near 1560 nm from the Li (1980) Sellmeier.  k at 760-800 nm
    # is calibrated so that 10*log10(e)*4*pi*k/lambda = 0.55 dB/um at 780 nm.
    def li_si(lam):
        l2 = lam**2
        return np.sqrt(11.6858 + 0.939816 / l2 + 0.00810461 * 1.1071**2 / (l2 - 1.1071**2))

    k780 = 0.55 / (10 * np.log10(np.e)) * 0.780 / (4 * np.pi)
    pump = [(760, 3.714, k780 * 760 / 780), (780, 3.705, k780), (800, 3.696, k780 * 800 / 780)]
    telecom = [(l, float(li_si(l / 1000)), 0.0) for l in (1400, 1500, 1550, 1560, 1600, 1700)]
    write_optical("Si", "n: Green SEMSC 92 1305 (2008) near 780 nm, Li JPCRD 9 561 (1980) "
                  "Sellmeier above 1400 nm; k near 780 nm calibrated to a 0.55 dB/um bulk "
                  "attenuation (fitted value, not a measured datum)",
                  pump + telecom, bandgap="1.1")
    write_optical("Si-cryo", "as Si with k halved near 780 nm (cryogenic lower bound on "
                  "sub-gap absorption)",
                  [(l, n, k / 2) for l, n, k in pump] + telecom, bandgap="1.1")

    write_optical("NbN", "single value (n+ik) at 1560 nm used for the detector design",
                  [(1560, 5.23, 5.82)])
    write_optical("vacuum", "definition", [(200, 1.0, 0.0), (20000, 1.0, 0.0)], bandgap="none")

    # Crystalline Si, boundary-scattering limited phonon conduction
    # k = beta*T^3 with beta fixed by k(4.2 K) = 230 W/(m K) (order of the
    # Glassbrenner & Slack, Phys. Rev. 134, A1058 (1964) low-T data).
    beta = 230.0 / 4.2**3
    temps = np.round(np.arange(1.0, 20.01, 0.25), 2)
    with open(DATA / "thermal" / "Si-cryo.csv", "w") as fh:
        fh.write("# material: Si-cryo; source: k = beta*T^3, beta = 230/4.2^3 W/(m K^4), "
                 "Casimir boundary-scattering regime anchored to Glassbrenner & Slack "
                 "Phys. Rev. 134 A1058 (1964)\n")
        fh.write("temperature_K,k_W_per_mK\n")
        for t in temps:
            fh.write(f"{t:g},{beta * t**3:.6g}\n")


if __name__ == "__main__":
    main()
