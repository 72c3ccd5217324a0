"""Config-driven batch runner with content-hash caching and a job manifest.

A config is one YAML file::

    kind: pump-attenuation
    name: desk
    output: ../../runs/pump        # relative to the config file
    workers: 2
    params: {wavelength_nm: 780}   # overrides of the kind's defaults
    sweep:
      - {path: thickness_um, values: [10, 20]}

Every point of the sweep grid is a job; a job is a pure function of its
parameters and produces named tables.  Results are cached under
``$HERALDKIT_CACHE`` (default ``<output>/.cache``) keyed by a hash of the
job kind, parameters and toolkit version.
"""
from __future__ import annotations

import copy
import csv
import hashlib
import io
import itertools
import json
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np
import yaml

from . import __version__

log = logging.getLogger(__name__)

CACHE_ENV = "HERALDKIT_CACHE"
KINDS = ("gc-transmission", "pump-attenuation", "snspd-fdtd-sweep", "cavity-map", "thermal", "budget")
TOP_KEYS = {"kind", "name", "output", "workers", "params", "sweep"}


class ConfigError(ValueError):
    pass


# ------------------------------------------------------------ defaults

_GRATING = {
    "pitch_um": 0.71, "ff_start": 0.72, "ff_end": 0.2, "apodization": 0.012, "num_teeth": 40,
    "film_thickness_nm": 600.0, "etch_depth_nm": 350.0, "clad_thickness_um": 1.02, "top_reflector_nm": 200.0,
    "box_thickness_um": 2.0, "substrate_thickness_um": 25.0, "coupling_waveguide_length_um": 3.0,
    "gap_um": 0.0,
}
_DETECTOR = {
    "t_AR": 275.0, "t_NbN": 5.5, "w_NbN": 100.0, "P_S": 200.0, "t_c": 230.0, "t_r2": 200.0,
    "detector_length_um": 10.0, "detector_center_um": 3.4,
}
_SIM = {"dx_um": 0.022, "pml_cells": 20, "courant": 0.7, "shutoff": 1e-5, "max_steps": 400000, "dtype": "float32"}

DEFAULTS: dict[str, dict] = {
    "budget": {
        "thickness_um": 400.0, "attenuation_dB_per_um": 0.55, "absorbed_fraction": 0.99,
        "car_anchors": [[220.0, 3.16e13], [110.0, 3.16e3]], "pump_power_mW": 0.33,
        "power_per_tenth_mW": 0.33, "chain": [["GC + substrate", "dB", 0.17], ["detector stack", "eff", 0.9295]],
    },
    "pump-attenuation": {
        "material": "Si", "wavelength_nm": 780.0, "thickness_um": 20.0, "n_depths": 40, "first_depth_um": 0.5,
        "cells_per_wavelength": 24.0, "sim": {**_SIM, "dx_um": None},
    },
    "gc-transmission": {
        "wavelength_nm": 1560.0, "wavelengths_nm": [1500.0, 1530.0, 1560.0, 1590.0, 1620.0],
        "depths_um": [0.1, 2.0, 24.9], "grating": dict(_GRATING), "sim": dict(_SIM),
    },
    "snspd-fdtd-sweep": {
        "wavelength_nm": 1560.0, "beam_depth_um": 24.0,
        "grating": {**_GRATING, "coupling_waveguide_length_um": 8.0}, "detector": dict(_DETECTOR),
        "sim": dict(_SIM),
    },
    "cavity-map": {
        "wavelength_nm": 1560.0, "polarization": "s", "detector": {k: v for k, v in _DETECTOR.items()
                                                                   if not k.startswith("detector_")},
        "t_c_nm": {"start": 130.0, "stop": 330.0, "step": 5.0},
        "t_AR_nm": {"start": 175.0, "stop": 375.0, "step": 5.0},
    },
    "thermal": {
        "width_um": 2000.0, "height_um": 400.0, "grid_um": 4.0, "source_x_um": 200.0, "source_width_um": 28.4,
        "source_height_um": 40.0, "power_mW": 0.33, "base_temperature_K": 2.2, "anchor_fraction": 0.5,
        "depth_um": 100.0, "material": "Si-cryo", "detector_x_um": 214.2,
    },
}


def _type_ok(default, value) -> bool:
    if default is None:
        return value is None or (isinstance(value, (int, float)) and not isinstance(value, bool))
    if isinstance(default, bool):
        return isinstance(value, bool)
    if isinstance(default, float):
        return isinstance(value, (int, float)) and not isinstance(value, bool)
    if isinstance(default, int):
        return isinstance(value, int) and not isinstance(value, bool)
    if isinstance(default, str):
        return isinstance(value, str)
    if isinstance(default, list):
        return isinstance(value, list)
    return False


def _merge(defaults: dict, over: dict, where: str) -> dict:
    if not isinstance(over, dict):
        raise ConfigError(f"{where or 'params'}: expected a mapping")
    out = copy.deepcopy(defaults)
    for k, v in over.items():
        path = f"{where}.{k}" if where else k
        if k not in defaults:
            raise ConfigError(f"unknown parameter {path!r}; allowed: {', '.join(sorted(defaults))}")
        d = defaults[k]
        if isinstance(d, dict):
            out[k] = _merge(d, v, path)
        elif not _type_ok(d, v):
            raise ConfigError(f"parameter {path!r}: {v!r} has the wrong type (default {d!r})")
        else:
            out[k] = float(v) if isinstance(d, float) else v
    return out


def _get_path(d: dict, path: str):
    cur = d
    for part in path.split("."):
        if not isinstance(cur, dict) or part not in cur:
            raise ConfigError(f"sweep path {path!r} does not name a parameter")
        cur = cur[part]
    return cur


def _set_path(d: dict, path: str, value):
    parts = path.split(".")
    cur = d
    for part in parts[:-1]:
        cur = cur[part]
    cur[parts[-1]] = value


@dataclass
class SweepAxis:
    path: str
    values: list


@dataclass
class ExperimentConfig:
    kind: str
    name: str
    params: dict
    sweep: list[SweepAxis] = field(default_factory=list)
    output: Path = Path("runs")
    workers: int = 1
    source: Path | None = None

    def jobs(self) -> list[dict]:
        if not self.sweep:
            return [copy.deepcopy(self.params)]
        out = []
        for combo in itertools.product(*(ax.values for ax in self.sweep)):
            p = copy.deepcopy(self.params)
            for ax, v in zip(self.sweep, combo):
                _set_path(p, ax.path, v)
            out.append(p)
        return out

    def digest(self) -> str:
        blob = {"kind": self.kind, "params": self.params,
                "sweep": [[a.path, a.values] for a in self.sweep], "version": __version__}
        return _hash(blob)


def _hash(obj) -> str:
    return hashlib.sha256(json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()).hexdigest()


def parse_config(data: dict, base_dir: Path | None = None) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError("config must be a mapping")
    extra = set(data) - TOP_KEYS
    if extra:
        raise ConfigError(f"unknown top-level keys: {', '.join(sorted(extra))}")
    kind = data.get("kind")
    if kind not in KINDS:
        raise ConfigError(f"kind must be one of {', '.join(KINDS)}; got {kind!r}")
    params = _merge(DEFAULTS[kind], data.get("params") or {}, "")
    sweep = []
    for i, ax in enumerate(data.get("sweep") or []):
        if not isinstance(ax, dict) or set(ax) != {"path", "values"}:
            raise ConfigError(f"sweep[{i}] must have exactly the keys 'path' and 'values'")
        default = _get_path(DEFAULTS[kind], ax["path"])
        vals = ax["values"]
        if not isinstance(vals, list) or not vals:
            raise ConfigError(f"sweep[{i}] ({ax['path']}): values must be a non-empty list")
        for v in vals:
            if not _type_ok(default, v):
                raise ConfigError(f"sweep[{i}] ({ax['path']}): {v!r} has the wrong type")
        if isinstance(default, float):
            vals = [float(v) for v in vals]
        sweep.append(SweepAxis(ax["path"], vals))
    workers = data.get("workers", 1)
    if not isinstance(workers, int) or isinstance(workers, bool) or workers < 1:
        raise ConfigError("workers must be a positive integer")
    name = data.get("name", kind)
    if not isinstance(name, str) or not name:
        raise ConfigError("name must be a non-empty string")
    base = base_dir or Path.cwd()
    output = Path(data.get("output", f"runs/{name}"))
    if not output.is_absolute():
        output = base / output
    return ExperimentConfig(kind, name, params, sweep, output, workers)


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text())
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    cfg = parse_config(data, path.parent)
    cfg.source = path
    return cfg


# ---------------------------------------------------------------- jobs

Table = list[list]   # first row is the header


def _grating(p):
    from .geometry import GratingSpec
    return GratingSpec(**p)


def _detector(p):
    from .tmm import SnspdStackSpec
    q = dict(p)
    if "detector_center_um" in q:
        c = q.pop("detector_center_um")
        q["detector_offset_um"] = c - q["detector_length_um"] / 2
    return SnspdStackSpec(**q)


def _sim_kwargs(s, cache_dir):
    kw = {k: s[k] for k in ("courant", "shutoff", "max_steps", "dtype")}
    if cache_dir is not None:
        kw["cache_dir"] = str(cache_dir)
    return kw


def attenuation_fit(depths_um, transmission_dB) -> tuple[float, float, float]:
    """Ordinary least squares of dB against depth: (slope, intercept, R^2)."""
    y = np.asarray(transmission_dB, float)
    x = np.asarray(depths_um, float)
    if x.size < 3:
        raise ValueError("attenuation fit needs at least 3 points")
    slope, icpt = np.polyfit(x, y, 1)
    ss_res = float(np.sum((y - (slope * x + icpt)) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    if abs(slope) < 1e-15:
        slope = 0.0
    return float(slope), float(icpt), r2


def job_budget(p, cache_dir=None) -> dict[str, Table]:
    from . import budget as B
    supp = B.pump_suppression_dB(p["thickness_um"], p["attenuation_dB_per_um"])
    a = p["car_anchors"]
    if len(a) != 2 or any(len(x) != 2 for x in a):
        raise ConfigError("car_anchors must be two [dB, CAR] pairs")
    cal = B.CarCalibration(((float(a[0][0]), float(a[0][1])), (float(a[1][0]), float(a[1][1]))))
    car = B.car_estimate(cal, supp)
    depth = B.depth_for_absorbed_fraction(p["attenuation_dB_per_um"], p["absorbed_fraction"])
    pair = B.pair_rate_budget(p["pump_power_mW"], p["power_per_tenth_mW"])
    chain = B.LossChain.from_pairs((str(n), str(k), float(v)) for n, k, v in p["chain"])
    return {
        "suppression": [["thickness_um", "attenuation_dB_per_um", "suppression_dB", "car", "extrapolated",
                         "depth_for_fraction_um", "absorbed_fraction", "pair_probability", "saturated"],
                        [p["thickness_um"], p["attenuation_dB_per_um"], supp, car.car, car.extrapolated,
                         depth, p["absorbed_fraction"], pair.probability, pair.saturated]],
        "chain": B.chain_csv_rows(chain) + [["total", repr(chain.total_dB), repr(B.heralding_efficiency(chain)),
                                             repr(B.heralding_efficiency(chain))]],
    }


def job_pump_attenuation(p, cache_dir=None) -> dict[str, Table]:
    from .fdtd.engine import run
    from .fdtd.setups import lossy_slab
    s = p["sim"]
    depths = np.linspace(p["first_depth_um"], p["thickness_um"], p["n_depths"])
    dx = s["dx_um"]
    if dx is None:
        from .materials import refractive_index, resolve
        n = refractive_index(resolve(p["material"]), p["wavelength_nm"]).real
        dx = p["wavelength_nm"] * 1e-3 / n / p["cells_per_wavelength"]
    cfg = lossy_slab(p["material"], p["wavelength_nm"], thickness_um=p["thickness_um"], dx=dx,
                     depths_um=depths, pml_cells=s["pml_cells"], **_sim_kwargs(s, cache_dir))
    res = run(cfg)
    names = [m.name for m in cfg.monitors]
    flux = np.array([res[n].flux[0] for n in names])
    coords = np.array([res[n].coordinate for n in names])
    tdb = 10 * np.log10(flux)
    slope, icpt, r2 = attenuation_fit(coords, tdb)
    return {
        "depth_series": [["depth_um", "flux", "transmission_dB"]] + [[d, f, t] for d, f, t in zip(coords, flux, tdb)],
        "fit": [["slope_dB_per_um", "intercept_dB", "r2", "steps", "converged"],
                [slope, icpt, r2, res.steps, res.converged]],
    }


def job_gc_transmission(p, cache_dir=None) -> dict[str, Table]:
    from .fdtd.analysis import beam_profile
    from .fdtd.engine import run
    from .fdtd.setups import grating_coupler
    s = p["sim"]
    lay = grating_coupler(_grating(p["grating"]), p["wavelength_nm"], dx=s["dx_um"], depths_um=p["depths_um"],
                          wavelengths_nm=p["wavelengths_nm"], pml_cells=s["pml_cells"], **_sim_kwargs(s, cache_dir))
    res = run(lay.config)
    rows = [["wavelength_nm", "monitor", "flux"]]
    for name in sorted(res.keys()):
        for wl, f in zip(res[name].wavelengths_nm, res[name].flux):
            rows.append([wl, name, f])
    iw = int(np.argmin(np.abs(np.asarray(p["wavelengths_nm"]) - p["wavelength_nm"])))
    beam = [["depth_um", "flux", "centroid_um", "width_4sigma_um", "gauss_residual"]]
    for name, d in lay.depth_monitors.items():
        bp = beam_profile(res[name], iw)
        beam.append([d, res[name].flux[iw], bp.centroid_um, bp.width_4sigma_um, bp.residual])
    return {"flux": rows, "beam": beam,
            "run": [["steps", "converged", "residual"], [res.steps, res.converged, res.residual]]}


def job_snspd_fdtd(p, cache_dir=None) -> dict[str, Table]:
    from .fdtd.analysis import beam_profile, box_fluxes
    from .fdtd.engine import run
    from .fdtd.setups import depth_name, grating_coupler
    s = p["sim"]
    det = _detector(p["detector"])
    lay = grating_coupler(_grating(p["grating"]), p["wavelength_nm"], dx=s["dx_um"],
                          depths_um=(p["beam_depth_um"],), detector=det, pml_cells=s["pml_cells"],
                          **_sim_kwargs(s, cache_dir))
    res = run(lay.config)
    bf = box_fluxes(res)
    bp = beam_profile(res[depth_name(p["beam_depth_um"])], 0)
    return {
        "eta": [["detector_length_um", "detector_center_um", "wavelength_nm", "T_I", "T_L", "T_R", "T_B", "eta"],
                [p["detector"]["detector_length_um"], p["detector"]["detector_center_um"], p["wavelength_nm"],
                 bf.T_I[0], bf.T_L[0], bf.T_R[0], bf.T_B[0], bf.eta[0]]],
        "beam": [["depth_um", "centroid_um", "width_4sigma_um"], [p["beam_depth_um"], bp.centroid_um,
                                                                  bp.width_4sigma_um]],
        "run": [["steps", "converged", "residual"], [res.steps, res.converged, res.residual]],
    }


def _axis(r):
    n = int(round((r["stop"] - r["start"]) / r["step"])) + 1
    if n < 1 or r["step"] <= 0:
        raise ConfigError("sweep range needs step > 0 and stop >= start")
    return r["start"] + r["step"] * np.arange(n)


def job_cavity_map(p, cache_dir=None) -> dict[str, Table]:
    from .tmm import SnspdStackSpec, cavity_sweep, snspd_layer_stack
    spec = SnspdStackSpec(**p["detector"])
    base = snspd_layer_stack(spec, p["wavelength_nm"], polarization=p["polarization"])
    cm = cavity_sweep(base, _axis(p["t_c_nm"]), _axis(p["t_AR_nm"]))
    tc, ta = cm.argmax
    return {"map": [["t_c_nm", "t_AR_nm", "R", "T", "A_NbN", "A_Au"]] + [list(r) for r in cm.rows()],
            "argmax": [["t_c_nm", "t_AR_nm", "A_NbN"], [tc, ta, cm.max]]}


def job_thermal(p, cache_dir=None) -> dict[str, Table]:
    from .thermal import anchored_chip, backside_profile, rise_at, solve_steady
    kw = {k: v for k, v in p.items() if k != "detector_x_um"}
    prob = anchored_chip(**kw)
    tf = solve_steady(prob)
    prof = backside_profile(tf)
    rise = rise_at(tf, p["detector_x_um"], p["height_um"])
    return {
        "backside": [["x_um", "T_K", "rise_K"]] + [[x, T, T - p["base_temperature_K"]] for x, T in prof],
        "summary": [["detector_x_um", "backside_rise_K", "max_rise_K", "iterations", "outflow_mW"],
                    [p["detector_x_um"], rise, tf.max_rise_K, tf.iterations, tf.outflow_W * 1e3]],
        "field": [["x_um"] + [float(y) for y in tf.y_um]] + [[float(x)] + [float(v) for v in row]
                                                             for x, row in zip(tf.x_um, tf.T)],
    }


JOBS: dict[str, Callable[..., dict[str, Table]]] = {
    "budget": job_budget, "pump-attenuation": job_pump_attenuation, "gc-transmission": job_gc_transmission,
    "snspd-fdtd-sweep": job_snspd_fdtd, "cavity-map": job_cavity_map, "thermal": job_thermal,
}


# -------------------------------------------------------------- caching

def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def table_csv(table: Table) -> bytes:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    for row in table:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue().encode()


def job_key(kind: str, params: dict) -> str:
    return _hash({"kind": kind, "params": params, "version": __version__})


def cache_root(cfg: ExperimentConfig) -> Path:
    env = os.environ.get(CACHE_ENV)
    return Path(env) if env else cfg.output / ".cache"


def _run_job(kind: str, params: dict, cache_dir: str | None) -> tuple[dict[str, bytes], float, str | None]:
    """Worker entry point: returns CSV bytes per table, wall time and an error."""
    t0 = time.perf_counter()
    try:
        tables = JOBS[kind](params, cache_dir)
        out = {name: table_csv(t) for name, t in tables.items()}
        return out, time.perf_counter() - t0, None
    except Exception as exc:  # recorded per job, never fatal to the batch
        return {}, time.perf_counter() - t0, f"{type(exc).__name__}: {exc}"


@dataclass
class JobRecord:
    index: int
    key: str
    params: dict
    status: str = "pending"        # done | cached | failed
    artifacts: dict = field(default_factory=dict)   # relative path -> sha256
    wall_s: float = 0.0
    error: str | None = None


@dataclass
class RunManifest:
    config_hash: str
    kind: str
    name: str
    version: str
    output: Path
    jobs: list[JobRecord]
    sweep: list = field(default_factory=list)
    outputs: dict = field(default_factory=dict)     # combined tables: relative path -> sha256

    @property
    def ok(self) -> bool:
        return all(j.status in ("done", "cached") for j in self.jobs)

    @property
    def n_computed(self) -> int:
        return sum(j.status == "done" for j in self.jobs)

    def to_json(self) -> str:
        d = {"config_hash": self.config_hash, "kind": self.kind, "name": self.name, "version": self.version,
             "sweep": self.sweep, "outputs": self.outputs,
             "jobs": [{"index": j.index, "key": j.key, "status": j.status, "params": j.params,
                       "artifacts": j.artifacts, "wall_s": round(j.wall_s, 6), "error": j.error} for j in self.jobs]}
        return json.dumps(d, indent=1, sort_keys=True)

    @classmethod
    def load(cls, path) -> "RunManifest":
        path = Path(path)
        d = json.loads(path.read_text())
        jobs = [JobRecord(j["index"], j["key"], j["params"], j["status"], j["artifacts"], j["wall_s"], j["error"])
                for j in d["jobs"]]
        return cls(d["config_hash"], d["kind"], d["name"], d["version"], path.parent, jobs, d.get("sweep", []),
                   d.get("outputs", {}))

    def verify(self) -> list[str]:
        """Artifacts that are missing or whose content hash changed."""
        bad = []
        pairs = [kv for j in self.jobs for kv in j.artifacts.items()] + list(self.outputs.items())
        for rel, h in pairs:
            f = self.output / rel
            if not f.is_file() or hashlib.sha256(f.read_bytes()).hexdigest() != h:
                bad.append(rel)
        return bad


def _cached(cdir: Path) -> dict[str, bytes] | None:
    idx = cdir / "tables.json"
    if not idx.is_file():
        return None
    names = json.loads(idx.read_text())
    out = {}
    for n in names:
        f = cdir / f"{n}.csv"
        if not f.is_file():
            return None
        out[n] = f.read_bytes()
    return out


def _store(cdir: Path, tables: dict[str, bytes]):
    cdir.mkdir(parents=True, exist_ok=True)
    for n, b in tables.items():
        (cdir / f"{n}.csv").write_bytes(b)
    (cdir / "tables.json").write_text(json.dumps(sorted(tables)))


def _sweep_columns(cfg: ExperimentConfig, params: dict) -> list:
    return [_get_path(params, ax.path) for ax in cfg.sweep]


def _combine(cfg: ExperimentConfig, jobs: list[JobRecord], results: dict[int, dict[str, bytes]]) -> dict[str, bytes]:
    """One CSV per table name with the sweep coordinates prepended.

    A sweep coordinate whose name already is a column of the table is not
    repeated.
    """
    names = sorted({n for r in results.values() for n in r})
    out = {}
    for n in names:
        header = None
        keep: list[int] = []
        lines = []
        for j in jobs:
            if j.index not in results or n not in results[j.index]:
                continue
            rows = list(csv.reader(io.StringIO(results[j.index][n].decode())))
            if header is None:
                keep = [k for k, ax in enumerate(cfg.sweep) if ax.path.split(".")[-1] not in rows[0]]
                header = [cfg.sweep[k].path for k in keep] + rows[0]
            coords = _sweep_columns(cfg, j.params)
            prefix = [_cell(coords[k]) for k in keep]
            lines += [prefix + r for r in rows[1:]]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        w.writerows(lines)
        out[n] = buf.getvalue().encode()
    return out


def run_experiment(cfg: ExperimentConfig, workers: int | None = None) -> RunManifest:
    workers = workers or cfg.workers
    root = cache_root(cfg)
    out = cfg.output
    out.mkdir(parents=True, exist_ok=True)
    fdtd_cache = root / "fdtd"
    jobs = [JobRecord(i, job_key(cfg.kind, p), p) for i, p in enumerate(cfg.jobs())]
    results: dict[int, dict[str, bytes]] = {}
    todo = []
    for j in jobs:
        hit = _cached(root / "jobs" / j.key)
        if hit is not None:
            results[j.index] = hit
            j.status = "cached"
        else:
            todo.append(j)
    log.info("%s: %d jobs, %d cached", cfg.name, len(jobs), len(jobs) - len(todo))

    def finish(j, tables, wall, err):
        j.wall_s = wall
        if err is None:
            _store(root / "jobs" / j.key, tables)
            results[j.index] = tables
            j.status = "done"
        else:
            j.status = "failed"
            j.error = err
            log.error("job %d failed: %s", j.index, err)

    if todo and workers > 1 and len(todo) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(todo))) as ex:
            futs = [(j, ex.submit(_run_job, cfg.kind, j.params, str(fdtd_cache))) for j in todo]
            for j, f in futs:
                finish(j, *f.result())
    else:
        for j in todo:
            finish(j, *_run_job(cfg.kind, j.params, str(fdtd_cache)))

    # the parent alone writes artifacts, in job order
    for j in jobs:
        if j.index not in results:
            continue
        for n, b in sorted(results[j.index].items()):
            rel = f"jobs/{j.index:03d}_{n}.csv"
            (out / "jobs").mkdir(exist_ok=True)
            (out / rel).write_bytes(b)
            j.artifacts[rel] = hashlib.sha256(b).hexdigest()
    combined = _combine(cfg, jobs, results)
    mf = RunManifest(cfg.digest(), cfg.kind, cfg.name, __version__, out, jobs,
                     [[a.path, a.values] for a in cfg.sweep])
    for n, b in combined.items():
        rel = f"{n}.csv"
        (out / rel).write_bytes(b)
        mf.outputs[rel] = hashlib.sha256(b).hexdigest()
    (out / "manifest.json").write_text(mf.to_json())
    return mf


def read_table(path) -> list[dict[str, str]]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))
