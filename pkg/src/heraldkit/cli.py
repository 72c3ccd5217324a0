"""Command line: run, plot, budget, materials.

Exit codes: 0 success, 1 a job failed, 2 bad configuration or arguments.
"""
from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

EXIT_OK, EXIT_JOB_FAILED, EXIT_CONFIG = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def _cmd_run(args) -> int:
    from .orchestrator import ConfigError, load_config, run_experiment
    try:
        cfg = load_config(args.config)
        if args.output:
            cfg.output = Path(args.output).resolve()
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    mf = run_experiment(cfg, workers=args.workers)
    counts = {}
    for j in mf.jobs:
        counts[j.status] = counts.get(j.status, 0) + 1
    print(f"{cfg.name}: " + ", ".join(f"{v} {k}" for k, v in sorted(counts.items())))
    print(f"manifest: {cfg.output / 'manifest.json'}")
    for j in mf.jobs:
        if j.status == "failed":
            print(f"  job {j.index}: {j.error}", file=sys.stderr)
    if args.plot and mf.ok:
        from .plots import emit_plots
        for p in emit_plots(mf):
            print(f"plot: {p}")
    return EXIT_OK if mf.ok else EXIT_JOB_FAILED


def _cmd_plot(args) -> int:
    from .plots import emit_plots
    path = Path(args.manifest)
    if path.is_dir():
        path = path / "manifest.json"
    if not path.is_file():
        print(f"no manifest at {path}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        paths = emit_plots(path)
    except ValueError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_JOB_FAILED
    for p in paths:
        print(p)
    return EXIT_OK


def _parse_chain(items):
    out = []
    for it in items or []:
        name, _, val = it.rpartition("=")
        if not name:
            raise ValueError(f"chain entry {it!r} should look like NAME=0.17dB or NAME=0.93")
        if val.lower().endswith("db"):
            out.append((name, "dB", float(val[:-2])))
        else:
            out.append((name, "eff", float(val)))
    return out


def _cmd_budget(args) -> int:
    from . import budget as B
    try:
        chain = B.LossChain.from_pairs(_parse_chain(args.chain))
        supp = B.pump_suppression_dB(args.thickness, args.attenuation)
        cal = B.CarCalibration()
        car = B.car_estimate(cal, supp)
        depth = B.depth_for_absorbed_fraction(args.attenuation, args.fraction)
        pair = B.pair_rate_budget(args.pump_power)
    except (ValueError, B.BudgetError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.csv:
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(["quantity", "value"])
        w.writerows([["suppression_dB", repr(supp)], ["car", repr(car.car)],
                     ["car_extrapolated", str(car.extrapolated).lower()],
                     ["depth_for_fraction_um", repr(depth)], ["pair_probability", repr(pair.probability)]])
        if len(chain):
            w.writerow([])
            w.writerows(B.chain_csv_rows(chain))
        return EXIT_OK
    print(f"pump suppression      {supp:.4f} dB  ({args.thickness:g} um x {args.attenuation:g} dB/um)")
    flag = "  [extrapolated]" if car.extrapolated else ""
    print(f"CAR estimate          {car.car:.4g}{flag}")
    print(f"depth for {args.fraction:g} absorbed  {depth:.4f} um")
    sat = "  [saturated]" if pair.saturated else ""
    print(f"pair probability      {pair.probability:.4g} per pulse at {args.pump_power:g} mW{sat}")
    if len(chain):
        print()
        print(B.format_table(chain))
    return EXIT_OK


def _cmd_materials(args) -> int:
    from .materials import (MaterialError, get_material, get_thermal_material, list_materials,
                            list_thermal_materials)
    if args.action == "list":
        for n in list_materials():
            m = get_material(n)
            lo, hi = m.range_nm
            print(f"{n:<10} optical  {lo:g}-{hi:g} nm")
        for n in list_thermal_materials():
            m = get_thermal_material(n)
            lo, hi = m.range_K
            print(f"{n:<10} thermal  {lo:g}-{hi:g} K")
        return EXIT_OK
    if not args.name:
        print("materials show needs a NAME", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if args.name in list_materials():
            m = get_material(args.name)
            print(f"# {m.name}: {m.source}")
            print("wavelength_nm,n,k")
            for w, n, k in zip(m.wavelengths_nm, m.n, m.k):
                print(f"{w:g},{n:.6g},{k:.6g}")
        else:
            t = get_thermal_material(args.name)
            print(f"# {t.name}: {t.source}")
            print("temperature_K,k_W_per_mK")
            for T, k in zip(t.temperatures_K, t.conductivity):
                print(f"{T:g},{k:.6g}")
    except MaterialError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="heraldkit", description="Heralded single-photon source design toolkit")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    r = sub.add_parser("run", help="run an experiment config")
    r.add_argument("config")
    r.add_argument("--workers", type=int, default=None)
    r.add_argument("--output", default=None, help="override the output directory")
    r.add_argument("--plot", action="store_true", help="write SVG figures after the run")
    r.set_defaults(fn=_cmd_run)

    pl = sub.add_parser("plot", help="write SVG figures for a manifest")
    pl.add_argument("manifest")
    pl.set_defaults(fn=_cmd_plot)

    b = sub.add_parser("budget", help="pump suppression, CAR and efficiency chain")
    b.add_argument("--thickness", type=float, default=400.0, help="substrate thickness, um")
    b.add_argument("--attenuation", type=float, default=0.55, help="pump attenuation, dB/um")
    b.add_argument("--fraction", type=float, default=0.99, help="absorbed pump fraction for the depth estimate")
    b.add_argument("--pump-power", type=float, default=0.33, help="pump power, mW")
    b.add_argument("--chain", nargs="*", metavar="NAME=VALUE",
                   help="loss entries, e.g. gc=0.17dB detector=0.93")
    b.add_argument("--csv", action="store_true")
    b.set_defaults(fn=_cmd_budget)

    m = sub.add_parser("materials", help="bundled material tables")
    m.add_argument("action", choices=["list", "show"])
    m.add_argument("name", nargs="?")
    m.set_defaults(fn=_cmd_materials)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    return args.fn(args)


if __name__ == "__main__":
    raise SystemExit(main())
