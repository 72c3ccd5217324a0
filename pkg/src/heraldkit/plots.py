"""Figures from a completed run manifest."""
from __future__ import annotations

from collections import defaultdict
from pathlib import Path

import numpy as np

from .orchestrator import RunManifest, read_table
from .svgplot import heatmap, line_plot


def _col(row, key):
    # sweep columns are named by their path unless the table already has the leaf name
    return row[key] if key in row else row[key.split(".")[-1]]


def _num(rows, key):
    return [float(_col(r, key)) for r in rows]


def _group(rows, keys):
    g = defaultdict(list)
    for r in rows:
        g[tuple(_col(r, k) for k in keys)].append(r)
    return g


def _label(keys, vals):
    return ", ".join(f"{k.split('.')[-1]}={v}" for k, v in zip(keys, vals)) or "run"


def emit_plots(manifest: RunManifest | str | Path) -> list[Path]:
    mf = manifest if isinstance(manifest, RunManifest) else RunManifest.load(manifest)
    if not mf.ok:
        raise ValueError("manifest has failed jobs; nothing to plot")
    out = mf.output
    sweep = [p for p, _ in mf.sweep]
    figs: dict[str, str] = {}

    if mf.kind == "pump-attenuation":
        rows = read_table(out / "depth_series.csv")
        series = {_label(sweep, k): (_num(v, "depth_um"), _num(v, "transmission_dB"))
                  for k, v in _group(rows, sweep).items()}
        figs["attenuation.svg"] = line_plot(series, title="Pump transmission vs depth", xlabel="depth (um)",
                                            ylabel="transmission (dB)")
    elif mf.kind == "gc-transmission":
        rows = read_table(out / "flux.csv")
        series = {}
        for k, v in _group(rows, sweep + ["monitor"]).items():
            series[_label(sweep + ["monitor"], k)] = (_num(v, "wavelength_nm"), _num(v, "flux"))
        figs["transmission.svg"] = line_plot(series, title="Normalised flux per monitor",
                                             xlabel="wavelength (nm)", ylabel="flux / source")
        beam = read_table(out / "beam.csv")
        bs = {_label(sweep, k): (_num(v, "depth_um"), _num(v, "gauss_residual"))
              for k, v in _group(beam, sweep).items()}
        figs["beam_residual.svg"] = line_plot(bs, title="Gaussian-fit residual vs depth", xlabel="depth (um)",
                                              ylabel="residual")
    elif mf.kind == "snspd-fdtd-sweep":
        rows = read_table(out / "eta.csv")
        if sweep:
            xk = sweep[0]
            series = {_label(sweep[1:], k): (_num(v, xk), _num(v, "eta"))
                      for k, v in _group(rows, sweep[1:]).items()}
            figs["eta.svg"] = line_plot(series, title="Absorbed fraction in the detector box",
                                        xlabel=xk.split(".")[-1], ylabel="eta")
    elif mf.kind == "cavity-map":
        for k, rows in _group(read_table(out / "map.csv"), sweep).items():
            tc = sorted({float(r["t_c_nm"]) for r in rows})
            ta = sorted({float(r["t_AR_nm"]) for r in rows})
            z = np.full((len(tc), len(ta)), np.nan)
            for r in rows:
                z[tc.index(float(r["t_c_nm"])), ta.index(float(r["t_AR_nm"]))] = float(r["A_NbN"])
            i, j = np.unravel_index(np.nanargmax(z), z.shape)
            name = "cavity_map.svg" if not sweep else f"cavity_map_{'_'.join(k)}.svg"
            figs[name] = heatmap(z, tc, ta, title="NbN absorbance", xlabel="t_c (nm)", ylabel="t_AR (nm)",
                                 mark=(tc[i], ta[j]), colorbar_label="A")
    elif mf.kind == "thermal":
        rows = read_table(out / "backside.csv")
        series = {_label(sweep, k): (_num(v, "x_um"), [1e3 * a for a in _num(v, "rise_K")])
                  for k, v in _group(rows, sweep).items()}
        figs["backside_profile.svg"] = line_plot(series, title="Backside temperature rise", xlabel="x (um)",
                                                 ylabel="rise (mK)", markers=False)
        if not sweep:
            lines = (out / "field.csv").read_text().splitlines()
            y = [float(v) for v in lines[0].split(",")[1:]]
            data = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]])
            x, T = data[:, 0], data[:, 1:]
            step = max(1, int(np.ceil(max(T.shape) / 120)))
            figs["temperature_field.svg"] = heatmap(T[::step, ::step], x[::step], y[::step],
                                                    title="Temperature (K)", xlabel="x (um)",
                                                    ylabel="y (um)", colorbar_label="T")
    elif mf.kind == "budget":
        rows = read_table(out / "chain.csv")
        body = [r for r in rows if r["contribution"] != "total"]
        figs["chain.svg"] = line_plot({"cumulative": (list(range(1, len(body) + 1)), _num(body, "cumulative"))},
                                      title="Cumulative efficiency", xlabel="chain entry", ylabel="efficiency")
    paths = []
    for name, svg in sorted(figs.items()):
        p = out / name
        p.write_text(svg)
        paths.append(p)
    return paths
