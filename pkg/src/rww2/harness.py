"""Reproducible experiment runners: configuration parsing, run orchestration,
verdict classification, sweep/bisection studies and result persistence.

Config files are flat ``key = value`` text with dotted sections; unknown keys
are rejected.  Every runner writes its manifest before computing and flushes
diagnostics row by row, so partial results survive a blowup.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field
import json
import math
import os
import platform

import numpy as np

from . import __version__
from .conformal import (
    conformal_energy,
    conformal_init,
    conformal_mass,
    conformal_rhs,
    resample_to_grid,
    surface_on_grid,
)
from .diagnostics import collect_sample, DIAGNOSTIC_COLUMNS
from .errors import ConfigurationError, ConformalBreakdownError
from .models import ModelParams, WaveState, operators_for
from .spectral import (
    DepthParam,
    Grid,
    Rectifier,
    dealias_project,
    from_coefficients,
    to_physical,
    to_spectral,
    write_physical_snapshot,
    write_spectral_snapshot,
)
from .stepping import IntegrationConfig, integrate
from .toy import ToyState, blowup_witness, toy_integrate, write_toy_series

__all__ = [
    "ExperimentConfig",
    "parse_config",
    "gaussian_state",
    "initial_state",
    "run_wave",
    "WaveRunResult",
    "run_instability_sweep",
    "run_rectifier_order_study",
    "run_critical_delta",
    "run_error_study",
    "run_drift_study",
    "run_reference",
    "run_toy",
    "run_single",
    "write_table",
]

AMPLIFIED_BAND_RATIO = 1e-8  # high-band/total elevation energy marking "amplified"


# ---------------------------------------------------------------------------
# configuration schema


def _parse_scalar(text):
    text = text.strip()
    if text.startswith("[") and text.endswith("]"):
        inner = text[1:-1].strip()
        if not inner:
            return []
        return [_parse_scalar(part) for part in inner.split(",")]
    low = text.lower()
    if low in ("true", "false"):
        return low == "true"
    if low in ("inf", "+inf", "infinity"):
        return math.inf
    if low in ("-inf", "-infinity"):
        return -math.inf
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        pass
    if len(text) >= 2 and text[0] == text[-1] and text[0] in "'\"":
        return text[1:-1]
    return text


_SCHEMA = {
    # key: (kind, default) -- kind in {str, bool, int, float, list, floatlist, intlist}
    "model": ("str", None),
    "epsilon": ("float", None),
    "mu": ("float", None),
    "grid.half_length": ("float", None),
    "grid.n_modes": ("int", None),
    "integration.dt": ("float", None),
    "integration.t_end": ("float", None),
    "integration.sample_stride": ("int", 100),
    "integration.blowup_threshold": ("float", 1e10),
    "integration.cfl_constant": ("float", 0.5),
    "rectifier.order": ("float", 0.0),
    "rectifier.delta": ("float", 1.0),
    "dealias": ("bool", True),
    "init.kind": ("str", "gaussian-power"),
    "init.p": ("int", 2),
    "init.path": ("str", ""),
    "init.k0": ("int", 1),
    "init.kn": ("int", 4096),
    "output.dir": ("str", ""),
    "seed": ("int", 0),
    "threads": ("int", 1),
    "snapshot.times": ("floatlist", ()),
    "diagnostics.energy_order": ("int", 3),
    "diagnostics.band_fraction": ("float", 0.25),
    "diagnostics.rt_probes": ("int", 0),
    "sweep.n_modes": ("intlist", ()),
    "sweep.dealias": ("list", ()),
    "sweep.order": ("floatlist", ()),
    "sweep.delta": ("floatlist", ()),
    "sweep.epsilon": ("floatlist", ()),
    "sweep.p": ("intlist", ()),
    "critical.t_horizon": ("float", 2.0),
    "critical.delta_lo": ("float", 1e-3),
    "critical.delta_hi": ("float", 1e-2),
    "critical.rel_width": ("float", 0.05),
    "reference.dt_factor": ("int", 10),
    "drift.dts": ("floatlist", (0.1, 0.01, 0.001)),
    "toy.t_end": ("float", 1.0),
}


def _coerce(key, kind, value):
    def fail(expected):
        raise ConfigurationError(f"config key {key}: expected {expected}, got {value!r}")

    if kind == "str":
        if not isinstance(value, str):
            fail("a string")
        return value
    if kind == "bool":
        if not isinstance(value, bool):
            fail("true/false")
        return value
    if kind == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            fail("an integer")
        return value
    if kind == "float":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            fail("a number")
        return float(value)
    if kind in ("list", "floatlist", "intlist"):
        if not isinstance(value, list):
            value = [value]
        if kind == "floatlist":
            return tuple(float(v) for v in value)
        if kind == "intlist":
            return tuple(int(v) for v in value)
        return tuple(value)
    raise AssertionError(kind)


@dataclass
class ExperimentConfig:
    """Resolved configuration for one experiment (or sweep)."""

    values: dict = dc_field(default_factory=dict)

    def __getitem__(self, key):
        return self.values[key]

    def get(self, key, default=None):
        return self.values.get(key, default)

    # -- derived objects ----------------------------------------------------

    def depth(self):
        return DepthParam(self.values["mu"])

    def grid(self):
        return Grid(self.values["grid.half_length"], self.values["grid.n_modes"])

    def rectifier(self, order=None, delta=None):
        order = self.values["rectifier.order"] if order is None else order
        delta = self.values["rectifier.delta"] if delta is None else delta
        if self.values["model"] == "ww2" and order != 0.0:
            raise ConfigurationError("model = ww2 does not admit a rectifier (rectifier.order)")
        if order == 0.0:
            return Rectifier.identity()
        if math.isinf(order):
            return Rectifier.lowpass(delta)
        return Rectifier.power_law(order, delta)

    def model_params(self, epsilon=None, order=None, delta=None, dealias=None):
        return ModelParams(
            epsilon=self.values["epsilon"] if epsilon is None else epsilon,
            depth=self.depth(),
            rect=self.rectifier(order, delta),
            dealias=self.values["dealias"] if dealias is None else dealias,
        )

    def integration(self, grid=None, dt=None, t_end=None):
        grid = grid or self.grid()
        return IntegrationConfig(
            dt=self.values["integration.dt"] if dt is None else dt,
            t_end=self.values["integration.t_end"] if t_end is None else t_end,
            sample_stride=self.values["integration.sample_stride"],
            blowup_threshold=self.values["integration.blowup_threshold"],
            cfl_constant=self.values["integration.cfl_constant"],
            grid_spacing=grid.spacing,
        )

    def manifest(self, kind, extra=None):
        man = {
            "kind": kind,
            "config": {k: _jsonable(v) for k, v in sorted(self.values.items())},
            "provenance": {
                "package": "rww2",
                "version": __version__,
                "numpy": np.__version__,
                "python": platform.python_version(),
                "machine": platform.machine(),
            },
        }
        if extra:
            man.update(extra)
        return man


def _jsonable(v):
    if isinstance(v, tuple):
        return list(v)
    if isinstance(v, float) and math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return v


def parse_config(path, full_scale=False, overrides=None):
    """Parse a key = value config file into an ExperimentConfig.

    Unknown keys and malformed values raise ConfigurationError naming the key.
    ``full_scale.<key>`` entries replace ``<key>`` when full_scale is True.
    """
    if not os.path.exists(path):
        raise ConfigurationError(f"config file not found: {path}")
    raw = {}
    full_overrides = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigurationError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
            key, _, val = line.partition("=")
            key = key.strip()
            target = raw
            if key.startswith("full_scale."):
                key = key[len("full_scale."):]
                target = full_overrides
            if key not in _SCHEMA:
                raise ConfigurationError(f"{path}:{lineno}: unknown config key {key!r}")
            target[key] = _parse_scalar(val)
    if full_scale:
        raw.update(full_overrides)
    if overrides:
        raw.update(overrides)
    return resolve_config(raw)


def resolve_config(raw):
    """Apply defaults and validate a raw key-value mapping."""
    values = {}
    for key, (kind, default) in _SCHEMA.items():
        if key in raw:
            values[key] = _coerce(key, kind, raw[key])
        else:
            values[key] = default
    unknown = set(raw) - set(_SCHEMA)
    if unknown:
        raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
    _validate(values)
    return ExperimentConfig(values)


def _require(values, key):
    if values[key] is None:
        raise ConfigurationError(f"missing required config key {key}")


def _validate(v):
    _require(v, "model")
    if v["model"] not in ("rww2", "ww2", "toy", "reference"):
        raise ConfigurationError(f"model must be rww2|ww2|toy|reference, got {v['model']!r}")
    if v["model"] != "toy":
        for key in ("epsilon", "mu", "grid.half_length", "grid.n_modes",
                    "integration.dt", "integration.t_end"):
            _require(v, key)
        if v["epsilon"] < 0:
            raise ConfigurationError("epsilon must be nonnegative")
        if not (v["mu"] == math.inf or v["mu"] >= 1.0):
            raise ConfigurationError("mu must be >= 1 or inf")
        n = v["grid.n_modes"]
        if n <= 0 or n % 2:
            raise ConfigurationError(f"grid.n_modes must be a positive even integer, got {n}")
    if v["rectifier.order"] > 0:
        raise ConfigurationError("rectifier.order must be <= 0")
    if v["rectifier.delta"] <= 0:
        raise ConfigurationError("rectifier.delta must be positive")
    if v["init.kind"] not in ("gaussian-power", "file", "toy-blowup"):
        raise ConfigurationError(f"init.kind must be gaussian-power|file|toy-blowup, got {v['init.kind']!r}")
    if v["init.kind"] == "gaussian-power" and v["init.p"] not in (1, 2, 3):
        raise ConfigurationError(f"init.p must be one of 1, 2, 3, got {v['init.p']}")


# ---------------------------------------------------------------------------
# initial data


def gaussian_state(grid, p=2, dealias=True):
    """zeta0 = exp(-|x|^p), psi0 = 0, optionally projected onto the dealias band."""
    zeta = to_spectral(np.exp(-np.abs(grid.x) ** p), grid)
    if dealias:
        zeta = dealias_project(zeta)
    psi = from_coefficients(np.zeros(grid.n_modes, dtype=complex), grid)
    return WaveState(zeta, psi)


def state_from_file(path, grid, dealias=True):
    data = np.genfromtxt(path, delimiter=",", names=True)
    x = data["x"]
    if x.size != grid.n_modes or np.max(np.abs(x - grid.x)) > 1e-9 * grid.half_length:
        raise ConfigurationError(f"init.path {path}: sample locations do not match the grid")
    zeta = to_spectral(data["zeta"], grid)
    psi = to_spectral(data["psi"], grid)
    pc = psi.coeffs.copy()
    pc[0] = 0.0  # the potential trace is defined up to a constant
    psi = from_coefficients(pc, grid)
    if dealias:
        zeta, psi = dealias_project(zeta), dealias_project(psi)
    return WaveState(zeta, psi)


def initial_state(cfg, grid=None, dealias=None, p=None):
    grid = grid or cfg.grid()
    dealias = cfg["dealias"] if dealias is None else dealias
    kind = cfg["init.kind"]
    if kind == "gaussian-power":
        return gaussian_state(grid, cfg["init.p"] if p is None else p, dealias)
    if kind == "file":
        return state_from_file(cfg["init.path"], grid, dealias)
    raise ConfigurationError(f"init.kind {kind!r} is not valid for a wave run")


# ---------------------------------------------------------------------------
# persistence


class RunWriter:
    """Writes manifest first, then appends diagnostics rows with flushing."""

    def __init__(self, outdir, manifest):
        self.outdir = outdir
        os.makedirs(outdir, exist_ok=True)
        with open(os.path.join(outdir, "manifest.json"), "w") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
        self._diag = open(os.path.join(outdir, "diagnostics.csv"), "w")
        self._diag.write(",".join(DIAGNOSTIC_COLUMNS) + "\n")
        self._diag.flush()

    def write_row(self, t, row):
        vals = [t] + [row[c] for c in DIAGNOSTIC_COLUMNS[1:]]
        self._diag.write(",".join("%.17g" % v for v in vals) + "\n")
        self._diag.flush()

    def write_snapshot(self, label, state):
        write_spectral_snapshot(os.path.join(self.outdir, f"snapshot_{label}.csv"),
                                state.zeta, state.psi)
        write_physical_snapshot(os.path.join(self.outdir, f"snapshot_{label}_physical.csv"),
                                state.zeta, state.psi)

    def finish(self, summary):
        with open(os.path.join(self.outdir, "result.json"), "w") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True)
            fh.write("\n")
        self._diag.close()


def write_table(path, columns, rows):
    """Result table CSV with fixed column order."""
    with open(path, "w") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            cells = []
            for c in columns:
                v = row[c]
                if isinstance(v, bool):
                    cells.append("true" if v else "false")
                elif v is None:
                    cells.append("")
                elif isinstance(v, float):
                    cells.append("%.17g" % v)
                else:
                    cells.append(str(v))
            fh.write(",".join(cells) + "\n")


# ---------------------------------------------------------------------------
# wave runs


@dataclass
class WaveRunResult:
    times: list
    rows: list
    snapshots: dict
    final_state: object
    blowup: object
    n_steps: int
    max_band_ratio: float
    verdict: str

    @property
    def blowup_time(self):
        return None if self.blowup is None else self.blowup.time


def run_wave(grid, params, state0, int_config, *, energy_order=3, band_fraction=0.25,
             rt_probes=0, seed=0, snapshot_times=(), writer=None):
    """Integrate one wave model run, collecting diagnostics and the verdict.

    Verdicts: "blowup" when the state leaves the finite range, "amplified"
    when the elevation high-band energy exceeds AMPLIFIED_BAND_RATIO times
    the total at any sample, else "stable".
    """
    ops = operators_for(grid, params)
    y0 = ops.pack(state0)
    rng = np.random.default_rng(seed)
    snapshots = {}
    pending = sorted(snapshot_times)
    ratio_track = {"max": 0.0}

    def on_sample(t, y):
        state = ops.unpack(y)
        row = collect_sample(state, params, energy_order=energy_order,
                             band_fraction=band_fraction, rt_probes=rt_probes, rng=rng)
        total = float(np.sum(np.abs(state.zeta.coeffs) ** 2))
        if total > 0:
            ratio_track["max"] = max(ratio_track["max"], row["highband_energy"] / total)
        while pending and t >= pending[0] - 0.5 * int_config.dt:
            snapshots[pending.pop(0)] = state
        if writer is not None:
            writer.write_row(t, row)
        return row

    res = integrate(y0, ops.rhs, int_config, on_sample=on_sample)
    final_state = None if res.final_state is None else ops.unpack(res.final_state)
    if res.blowup is None and pending:
        for t in pending:
            snapshots[t] = final_state
    if res.blowup is not None:
        verdict = "blowup"
    elif ratio_track["max"] > AMPLIFIED_BAND_RATIO:
        verdict = "amplified"
    else:
        verdict = "stable"
    return WaveRunResult(
        times=res.times,
        rows=res.samples,
        snapshots=snapshots,
        final_state=final_state,
        blowup=res.blowup,
        n_steps=res.n_steps,
        max_band_ratio=ratio_track["max"],
        verdict=verdict,
    )


def _run_one_config(cfg, *, n_modes=None, dealias=None, order=None, delta=None,
                    epsilon=None, p=None, dt=None, t_end=None, writer=None,
                    snapshot_times=()):
    if cfg["model"] not in ("rww2", "ww2"):
        raise ConfigurationError(
            f"model = {cfg['model']} is not a wave-model run; use the matching subcommand"
        )
    grid = Grid(cfg["grid.half_length"], n_modes or cfg["grid.n_modes"])
    params = cfg.model_params(epsilon=epsilon, order=order, delta=delta, dealias=dealias)
    state0 = initial_state(cfg, grid=grid, dealias=params.dealias, p=p)
    int_config = cfg.integration(grid=grid, dt=dt, t_end=t_end)
    return run_wave(
        grid, params, state0, int_config,
        energy_order=cfg["diagnostics.energy_order"],
        band_fraction=cfg["diagnostics.band_fraction"],
        rt_probes=cfg["diagnostics.rt_probes"],
        seed=cfg["seed"],
        snapshot_times=snapshot_times,
        writer=writer,
    )


def _map_runs(fn, items, threads):
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(item) for item in items]


def _outdir(cfg, default):
    out = cfg["output.dir"] or default
    os.makedirs(out, exist_ok=True)
    return out


# ---------------------------------------------------------------------------
# experiment runners


def run_instability_sweep(cfg, outdir=None):
    """Stability matrix over mode counts and the dealias switch (identity rectifier)."""
    if not cfg.rectifier().is_identity:
        raise ConfigurationError("instability sweep requires the identity rectifier")
    outdir = _outdir(cfg, "instability_sweep")
    RunWriter(outdir, cfg.manifest("instability-sweep")).finish({"status": "running"})
    n_list = cfg["sweep.n_modes"] or (cfg["grid.n_modes"],)
    d_list = cfg["sweep.dealias"] or (cfg["dealias"],)
    cases = [(n, bool(d)) for n in n_list for d in d_list]

    def one(case):
        n, dealias = case
        result = _run_one_config(cfg, n_modes=n, dealias=dealias)
        return {
            "n_modes": n,
            "dealias": dealias,
            "verdict": result.verdict,
            "blowup_time": result.blowup_time,
        }

    rows = _map_runs(one, cases, cfg["threads"])
    write_table(os.path.join(outdir, "instability.csv"),
                ("n_modes", "dealias", "verdict", "blowup_time"), rows)
    return rows


def run_rectifier_order_study(cfg, outdir=None):
    """Verdicts across rectifier orders at fixed strength, with growth records."""
    outdir = _outdir(cfg, "rectifier_order")
    RunWriter(outdir, cfg.manifest("rectifier-order")).finish({"status": "running"})
    orders = cfg["sweep.order"] or (cfg["rectifier.order"],)
    n_list = cfg["sweep.n_modes"] or (cfg["grid.n_modes"],)
    cases = [(r, n) for r in orders for n in n_list]

    def one(case):
        r, n = case
        label = f"r{r:+g}_N{n}"
        writer = RunWriter(os.path.join(outdir, label),
                           cfg.manifest("rectifier-order-run", {"order": r, "n_modes": n}))
        result = _run_one_config(cfg, n_modes=n, order=r, writer=writer)
        writer.finish({"verdict": result.verdict, "blowup_time": result.blowup_time})
        return {"order": r, "n_modes": n, "verdict": result.verdict,
                "blowup_time": result.blowup_time}

    rows = _map_runs(one, cases, cfg["threads"])
    write_table(os.path.join(outdir, "rectifier_order.csv"),
                ("order", "n_modes", "verdict", "blowup_time"), rows)
    return rows


def run_delta_sweep(cfg, outdir=None):
    """Verdicts across rectifier strengths at fixed order."""
    outdir = _outdir(cfg, "delta_sweep")
    RunWriter(outdir, cfg.manifest("delta-sweep")).finish({"status": "running"})

    def one(delta):
        result = _run_one_config(cfg, delta=delta)
        return {"delta": delta, "verdict": result.verdict, "blowup_time": result.blowup_time}

    rows = _map_runs(one, list(cfg["sweep.delta"]), cfg["threads"])
    write_table(os.path.join(outdir, "delta_sweep.csv"),
                ("delta", "verdict", "blowup_time"), rows)
    return rows


def run_critical_delta(cfg, outdir=None):
    """Bisect the rectifier strength separating survival from breakdown at horizon T."""
    outdir = _outdir(cfg, "critical_delta")
    RunWriter(outdir, cfg.manifest("critical-delta")).finish({"status": "running"})
    horizon = cfg["critical.t_horizon"]
    rel_width = cfg["critical.rel_width"]
    eps_list = cfg["sweep.epsilon"] or (cfg["epsilon"],)
    eps_ref = cfg["epsilon"]

    def survives(eps, delta):
        result = _run_one_config(cfg, epsilon=eps, delta=delta, t_end=horizon)
        return result.blowup is None

    def one(eps):
        scale = (eps / eps_ref) ** 2
        lo = cfg["critical.delta_lo"] * scale
        hi = cfg["critical.delta_hi"] * scale
        for _ in range(4):
            if not survives(eps, hi):
                hi *= 4.0
            else:
                break
        else:
            raise ConfigurationError(
                f"critical-delta bracket error at epsilon={eps}: upper endpoint {hi} still blows up"
            )
        for _ in range(4):
            if survives(eps, lo):
                lo /= 4.0
            else:
                break
        else:
            raise ConfigurationError(
                f"critical-delta bracket error at epsilon={eps}: lower endpoint {lo} is still stable"
            )
        while (hi - lo) / math.sqrt(lo * hi) > rel_width:
            mid = math.sqrt(lo * hi)
            if survives(eps, mid):
                hi = mid
            else:
                lo = mid
        return {"epsilon": eps, "delta_lo": lo, "delta_hi": hi,
                "delta_geomean": math.sqrt(lo * hi)}

    rows = _map_runs(one, list(eps_list), cfg["threads"])
    write_table(os.path.join(outdir, "critical_delta.csv"),
                ("epsilon", "delta_lo", "delta_hi", "delta_geomean"), rows)
    return rows


def run_reference_trajectory(cfg, epsilon, p, dt=None, n_modes=None, t_end=None):
    """Integrate the conformal reference from the model's initial data;
    returns (ConformalState at t_end, energy drift, record)."""
    grid = Grid(cfg["grid.half_length"], n_modes or cfg["grid.n_modes"])
    state0 = initial_state(cfg, grid=grid, dealias=cfg["dealias"], p=p)
    cstate = conformal_init(state0, cfg.depth(), epsilon=epsilon)
    dt = (cfg["integration.dt"] if dt is None else dt) / cfg["reference.dt_factor"]
    t_end = cfg["integration.t_end"] if t_end is None else t_end
    int_config = IntegrationConfig(
        dt=dt, t_end=t_end,
        sample_stride=max(1, int(round(t_end / dt)) // 50),
        blowup_threshold=cfg["integration.blowup_threshold"],
        grid_spacing=grid.spacing,
    )
    e0 = conformal_energy(cstate)
    record = []

    def on_sample(t, y):
        cs = cstate.unpack(y)
        row = {"t": t, "energy": conformal_energy(cs), "mass": conformal_mass(cs)}
        record.append(row)
        return row

    def rhs(y):
        return conformal_rhs(cstate.unpack(y))

    res = integrate(cstate.pack(), rhs, int_config, on_sample=on_sample)
    if res.blowup is not None:
        raise ConformalBreakdownError(
            f"reference run left the finite range at t={res.blowup.detected_at}",
            time=res.blowup.time,
        )
    final = cstate.unpack(res.final_state)
    drift = abs(record[-1]["energy"] - e0) / max(abs(e0), 1e-300)
    return final, drift, record


def run_error_study(cfg, outdir=None):
    """Sup-norm elevation error of the rectified model against the conformal
    reference at the final time, for each (epsilon, delta, p)."""
    outdir = _outdir(cfg, "error_study")
    RunWriter(outdir, cfg.manifest("error-study")).finish({"status": "running"})
    eps_list = cfg["sweep.epsilon"] or (cfg["epsilon"],)
    p_list = cfg["sweep.p"] or (cfg["init.p"],)
    deltas = cfg["sweep.delta"] or (cfg["rectifier.delta"],)
    order = cfg["rectifier.order"] if cfg["rectifier.order"] != 0.0 else -1.0
    rows = []
    for p in p_list:
        for eps in eps_list:
            try:
                ref, drift, _ = run_reference_trajectory(cfg, eps, p)
                grid = cfg.grid()
                zeta_ref = surface_on_grid(ref, grid)
                ref_failed = False
            except ConformalBreakdownError:
                zeta_ref, drift, ref_failed = None, math.nan, True

            def one(delta):
                if ref_failed:
                    return {"epsilon": eps, "delta": delta, "p": p, "sup_error": math.nan}
                result = _run_one_config(cfg, epsilon=eps, p=p, order=order, delta=delta)
                if result.blowup is not None or result.final_state is None:
                    return {"epsilon": eps, "delta": delta, "p": p, "sup_error": math.nan}
                zeta_m = to_physical(result.final_state.zeta)
                return {
                    "epsilon": eps, "delta": delta, "p": p,
                    "sup_error": float(np.max(np.abs(zeta_m - zeta_ref))),
                }

            rows.extend(_map_runs(one, list(deltas), cfg["threads"]))
    write_table(os.path.join(outdir, "error_study.csv"),
                ("epsilon", "delta", "p", "sup_error"), rows)
    return rows


def run_drift_study(cfg, outdir=None):
    """Relative Hamiltonian drift at the final time across time steps, with slope fit."""
    outdir = _outdir(cfg, "drift_study")
    RunWriter(outdir, cfg.manifest("drift-study")).finish({"status": "running"})
    rows = []
    for dt in cfg["drift.dts"]:
        result = _run_one_config(cfg, dt=dt)
        if result.blowup is not None:
            rows.append({"dt": dt, "drift": math.nan})
            continue
        h0 = result.rows[0]["H"]
        h1 = result.rows[-1]["H"]
        rows.append({"dt": dt, "drift": abs(h1 - h0) / abs(h0)})
    write_table(os.path.join(outdir, "drift.csv"), ("dt", "drift"), rows)
    good = [(r["dt"], r["drift"]) for r in rows if math.isfinite(r["drift"]) and r["drift"] > 1e-14]
    slope = math.nan
    if len(good) >= 2:
        slope = float(np.polyfit(np.log([g[0] for g in good]), np.log([g[1] for g in good]), 1)[0])
    with open(os.path.join(outdir, "slope.json"), "w") as fh:
        json.dump({"slope": slope}, fh)
        fh.write("\n")
    return rows, slope


def run_reference(cfg, outdir=None):
    """Stand-alone conformal reference run emitting diagnostics and snapshots."""
    outdir = _outdir(cfg, "reference_run")
    writer = RunWriter(outdir, cfg.manifest("reference-run", {"frame": "conformal"}))
    final, drift, record = run_reference_trajectory(cfg, cfg["epsilon"], cfg["init.p"])
    with open(os.path.join(outdir, "reference.csv"), "w") as fh:
        fh.write("t,energy,mass\n")
        for row in record:
            fh.write("%.17g,%.17g,%.17g\n" % (row["t"], row["energy"], row["mass"]))
    grid = cfg.grid()
    zeta_vals = surface_on_grid(final, grid)
    zeta = to_spectral(zeta_vals, grid)
    psi = to_spectral(resampled_potential(final, grid), grid)
    writer.write_snapshot("final", WaveState(zeta, psi))
    writer.finish({"energy_drift": drift, "frame": "physical"})
    return final, drift


def resampled_potential(cstate, grid):
    return resample_to_grid(cstate, cstate.potential, grid) / cstate.epsilon


def run_toy(cfg, outdir=None):
    """Toy-system run from the blowup witness construction; writes the series CSV."""
    outdir = _outdir(cfg, "toy_run")
    writer = RunWriter(outdir, cfg.manifest("toy"))
    eps = cfg["epsilon"] if cfg["epsilon"] is not None else 1.0
    mu = cfg["mu"] if cfg["mu"] is not None else 1.0
    depth = DepthParam(mu)
    rect = cfg.rectifier()
    state, bound = blowup_witness(cfg["init.k0"], cfg["init.kn"], epsilon=eps,
                                  depth=depth, rect=rect)
    rows, final, blow_t = toy_integrate(state, cfg["toy.t_end"],
                                        threshold=cfg["integration.blowup_threshold"])
    write_toy_series(os.path.join(outdir, "toy_series.csv"), state.ks, rows)
    writer.finish({"predicted_bound": bound, "blowup_time": blow_t})
    return rows, bound, blow_t


def run_single(cfg, outdir=None):
    """One plain simulation with manifest, diagnostics CSV and final snapshot."""
    outdir = _outdir(cfg, "run")
    writer = RunWriter(outdir, cfg.manifest("simulate"))
    result = _run_one_config(cfg, writer=writer, snapshot_times=cfg["snapshot.times"])
    for t, snap in result.snapshots.items():
        writer.write_snapshot("t%g" % t, snap)
    if result.final_state is not None:
        writer.write_snapshot("final", result.final_state)
    writer.finish({
        "verdict": result.verdict,
        "blowup_time": result.blowup_time,
        "n_steps": result.n_steps,
        "max_band_ratio": result.max_band_ratio,
    })
    return result
