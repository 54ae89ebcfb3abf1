"""Named experiments, one per figure panel, and their file outputs."""
from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    SweepTable,
    find_R_extrema,
    fit_gaussian_R,
    fit_inverse_T,
    fit_line,
    measured_phase,
)
from .config import params_from_mapping
from .core import (
    ConfigError,
    GeomPhaseError,
    Orientation,
    PathSpec,
    SystemParams,
    ValidationError,
    to_angular,
)
from .dynamics import (
    MAX_PHASE_STEP,
    MIN_STEPS,
    adiabatic_phases,
    coherence,
    evolve_joint,
    mean_photon_number,
    write_trajectories_csv,
)
from .oracle import oracle_compare
from .paths import make_path, straight_reference
from .svg import Series, emit_svg

log = logging.getLogger("geomphase")

COMMON_DEFAULTS = {
    "delta_mhz": 40.0,
    "chi_mhz": -1.0,
    "kappa_mhz": 0.0,
    "samples": 512,
    "shape": "circle",
    "orientation": "ccw",
}


class UnknownExperimentError(ConfigError):
    pass


class OutputError(GeomPhaseError):
    """Results could not be written."""


@dataclass(frozen=True)
class Experiment:
    name: str
    description: str
    defaults: dict
    runner: object


EXPERIMENTS: dict[str, Experiment] = {}


def experiment(name, description, **defaults):
    def register(fn):
        EXPERIMENTS[name] = Experiment(name, description, defaults, fn)
        return fn

    return register


@dataclass
class ExperimentSpec:
    name: str
    config: dict = field(default_factory=dict)
    out_dir: Path | None = None
    jobs: int = 1
    png: bool = False

    def __post_init__(self):
        if self.name not in EXPERIMENTS:
            raise UnknownExperimentError(f"unknown experiment {self.name!r}; choose from {', '.join(EXPERIMENTS)}")
        self.config = resolve_config(self.name, self.config)

    @property
    def params(self) -> SystemParams:
        return params_from_mapping(self.config)


def resolve_config(name: str, overrides: dict) -> dict:
    merged = {**COMMON_DEFAULTS, **EXPERIMENTS[name].defaults, **overrides}
    return {k: merged[k] for k in sorted(merged)}


def default_out_dir() -> Path:
    return Path(os.environ.get("GEOMPHASE_OUT", "out"))


# -- grids -------------------------------------------------------------------

def _require(cfg, key, ok, why):
    if not ok(cfg[key]):
        raise ValidationError(f"{key}={cfg[key]!r}: {why}", field=key)


def _range_grid(cfg, lo, hi, step):
    _require(cfg, step, lambda v: v > 0, "step must be > 0")
    _require(cfg, hi, lambda v: v >= cfg[lo], f"must be >= {lo}")
    n = int(math.floor((cfg[hi] - cfg[lo]) / cfg[step] + 1e-9)) + 1
    return cfg[lo] + cfg[step] * np.arange(n)


def _t_grid(cfg):
    _require(cfg, "t_min_ns", lambda v: v > 0, "durations must be > 0")
    return _range_grid(cfg, "t_min_ns", "t_max_ns", "t_step_ns")


def _eps_grid(cfg, min_points=2):
    _require(cfg, "eps0_min_mhz", lambda v: v >= 0, "must be >= 0")
    _require(cfg, "eps0_max_mhz", lambda v: v > cfg["eps0_min_mhz"], "must exceed eps0_min_mhz")
    _require(cfg, "eps0_points", lambda v: v >= min_points, f"need at least {min_points} points")
    return np.linspace(cfg["eps0_min_mhz"], cfg["eps0_max_mhz"], cfg["eps0_points"])


def _spec(cfg, **changes) -> PathSpec:
    base = dict(shape=cfg["shape"], orientation=cfg["orientation"], samples=cfg["samples"])
    base.update(changes)
    if "eps0" not in base:
        base["eps0"] = to_angular(cfg["eps0_mhz"])
    if "duration" not in base:
        base["duration"] = cfg["duration_ns"]
    try:
        return PathSpec(**base)
    except ValidationError as exc:
        key = {"eps0": "eps0_mhz", "duration": "duration_ns"}.get(exc.field, exc.field)
        raise ValidationError(f"{key}: {exc}", field=key) from None


def _map(fn, items, jobs):
    items = list(items)
    if jobs > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, items))
    return [fn(item) for item in items]


def resolve_branch(wrapped, tracked) -> np.ndarray:
    """Pick, point by point, the 2 pi image of a measured (wrapped) phase that is
    closest to the phase tracked continuously through the integration.

    Plain continuity unwrapping slips when a sweep is coarse where the phase
    varies quickly (short pulses); this does not.
    """
    wrapped = np.asarray(wrapped, dtype=float)
    tracked = np.asarray(tracked, dtype=float)
    return wrapped + 2 * math.pi * np.round((tracked - wrapped) / (2 * math.pi))


# -- workers (top level so they pickle) ---------------------------------------

def _shape_point(args):
    """Total phase for ccw/cw of one shape and for their common straight reference."""
    spec, params = args
    out = {}
    for orient in (Orientation.CCW, Orientation.CW):
        w = make_path(spec.replace(orientation=orient))
        res = measured_phase(w, params)
        out[orient.value] = (res.C, res.phase, adiabatic_phases(w, params))
    # both orientations share one amplitude profile
    ref = straight_reference(w)
    res = measured_phase(ref, params)
    out["straight"] = (res.C, res.phase, adiabatic_phases(ref, params))
    return out


def _coherence_point(args):
    spec, params = args
    res = measured_phase(make_path(spec), params)
    return res.C, res.phase


def _shape_sweep(specs, params, jobs):
    points = _map(_shape_point, [(s, params) for s in specs], jobs)
    cols = {}
    for key in ("ccw", "cw", "straight"):
        c = np.array([p[key][0] for p in points])
        tracked = np.array([p[key][1] for p in points])
        ad = [p[key][2] for p in points]
        cols[key] = dict(
            C=c,
            gamma=resolve_branch(np.angle(c), tracked),
            tracked=tracked,
            R=np.abs(c),
            theory=np.array([a.gamma_dyn + a.gamma_geo for a in ad]),
            geo_theory=np.array([a.gamma_geo for a in ad]),
            delta_area=np.array([a.delta_area for a in ad]),
        )
    for key in ("ccw", "cw"):
        ratio = np.angle(cols[key]["C"] / cols["straight"]["C"])
        cols[key]["geo"] = resolve_branch(ratio, cols[key]["tracked"] - cols["straight"]["tracked"])
    return cols


def _metadata(spec: ExperimentSpec, **results) -> dict:
    p = spec.params
    return {
        "experiment": spec.name,
        "config": spec.config,
        "params_rad_per_ns": {"delta": p.delta, "chi": p.chi, "kappa": p.kappa},
        "solver": {"method": "rk4", "max_phase_step_rad": MAX_PHASE_STEP, "min_steps": MIN_STEPS,
                   "phase_approximate": p.kappa != 0},
        "version": __version__,
        "results": results,
    }


# -- experiments ---------------------------------------------------------------

@experiment("fig3a", "total phase vs pulse length for ccw, cw and straight paths",
            eps0_mhz=370.0, t_min_ns=20.0, t_max_ns=600.0, t_step_ns=10.0)
def run_fig3a(spec: ExperimentSpec):
    cfg, params = spec.config, spec.params
    T = _t_grid(cfg)
    cols = _shape_sweep([_spec(cfg, duration=t) for t in T], params, spec.jobs)
    table = SweepTable("T", T, units={"T": "ns"})
    for key in ("ccw", "cw", "straight"):
        table.add(f"gamma_{key}", cols[key]["gamma"], "rad")
    for key in ("ccw", "cw", "straight"):
        table.add(f"theory_{key}", cols[key]["theory"], "rad")
    for key in ("ccw", "cw", "straight"):
        table.add(f"R_{key}", cols[key]["R"])
    line = fit_line(T, cols["straight"]["gamma"])
    table.metadata = _metadata(spec, straight_line_fit=line.as_dict(), straight_rms=line.rms_residual)
    series = [Series("T", f"gamma_{k}", k, "scatter") for k in ("ccw", "cw", "straight")]
    series += [Series("T", f"theory_{k}", f"{k} adiabatic", "line") for k in ("ccw", "cw", "straight")]
    return table, dict(series=series, xlabel="T (ns)", ylabel="phase difference gamma (rad)", title="total phase vs pulse length")


@experiment("fig3b", "geometric phase vs pulse length with 1/T fits",
            eps0_mhz=370.0, t_min_ns=20.0, t_max_ns=600.0, t_step_ns=10.0, fit_t_min_ns=100.0, fit_order=2)
def run_fig3b(spec: ExperimentSpec):
    cfg, params = spec.config, spec.params
    _require(cfg, "fit_order", lambda v: v in (1, 2), "must be 1 or 2")
    T = _t_grid(cfg)
    cols = _shape_sweep([_spec(cfg, duration=t) for t in T], params, spec.jobs)
    table = SweepTable("T", T, units={"T": "ns"})
    fits = {}
    sel = T >= cfg["fit_t_min_ns"]
    for key in ("ccw", "cw"):
        geo = cols[key]["geo"]
        table.add(f"geo_{key}", geo, "rad")
        table.add(f"adiabatic_{key}", cols[key]["geo_theory"], "rad")
        fit = fit_inverse_T(np.column_stack([T[sel], geo[sel]]), order=cfg["fit_order"])
        design = np.column_stack([np.ones_like(T)] + [T ** -k for k in range(1, cfg["fit_order"] + 1)])
        table.add(f"fit_{key}", design @ fit.coefficients, "rad")
        fits[key] = {**fit.as_dict(), "rms_residual": fit.rms_residual,
                     "adiabatic": float(cols[key]["geo_theory"][-1])}
    table.metadata = _metadata(spec, fits=fits)
    series = [Series("T", "geo_ccw", "ccw", "scatter"), Series("T", "geo_cw", "cw", "scatter"),
              Series("T", "fit_ccw", "ccw fit", "line", dashed=True), Series("T", "fit_cw", "cw fit", "line", dashed=True),
              Series("T", "adiabatic_ccw", "ccw adiabatic", "line"), Series("T", "adiabatic_cw", "cw adiabatic", "line")]
    return table, dict(series=series, xlabel="T (ns)", ylabel="geometric phase (rad)", title="geometric phase vs pulse length")


@experiment("fig3c", "geometric phase vs enclosed area at fixed pulse length",
            duration_ns=300.0, eps0_min_mhz=0.0, eps0_max_mhz=370.0, eps0_points=12)
def run_fig3c(spec: ExperimentSpec):
    cfg, params = spec.config, spec.params
    eps = _eps_grid(cfg)
    cols = _shape_sweep([_spec(cfg, eps0=to_angular(e)) for e in eps], params, spec.jobs)
    table = SweepTable("eps0", eps, units={"eps0": "MHz"})
    fits = {}
    for key in ("ccw", "cw"):
        table.add(f"delta_area_{key}", cols[key]["delta_area"])
        table.add(f"geo_{key}", cols[key]["geo"], "rad")
        fit = fit_line(cols[key]["delta_area"], cols[key]["geo"])
        table.add(f"fit_{key}", fit["intercept"] + fit["slope"] * cols[key]["delta_area"], "rad")
        table.add(f"theory_{key}", -2.0 * cols[key]["delta_area"], "rad")
        fits[key] = {**fit.as_dict(), "rms_residual": fit.rms_residual}
    pooled = fit_line(np.concatenate([cols["ccw"]["delta_area"], cols["cw"]["delta_area"]]),
                      np.concatenate([cols["ccw"]["geo"], cols["cw"]["geo"]]))
    fits["pooled"] = {**pooled.as_dict(), "rms_residual": pooled.rms_residual}
    table.metadata = _metadata(spec, fits=fits, slope=pooled["slope"])
    series = []
    for key in ("ccw", "cw"):
        series += [Series(f"delta_area_{key}", f"geo_{key}", key, "scatter"),
                   Series(f"delta_area_{key}", f"fit_{key}", f"{key} fit", "line"),
                   Series(f"delta_area_{key}", f"theory_{key}", f"{key} -2 dA", "line", dashed=True)]
    return table, dict(series=series, xlabel="enclosed area difference dA", ylabel="geometric phase (rad)",
                       title="geometric phase vs area difference")


@experiment("fig3d", "adiabatic geometric phase vs detuning (both signs of delta)",
            eps0_mhz=190.0, duration_ns=2000.0, delta_min_mhz=20.0, delta_max_mhz=80.0, delta_step_mhz=10.0)
def run_fig3d(spec: ExperimentSpec):
    cfg = spec.config
    _require(cfg, "delta_min_mhz", lambda v: v > 0, "magnitude range must start above 0")
    mags = _range_grid(cfg, "delta_min_mhz", "delta_max_mhz", "delta_step_mhz")
    deltas = np.concatenate([-mags[::-1], mags])
    tasks = []
    for d in deltas:
        params = params_from_mapping({**cfg, "delta_mhz": float(d)})
        tasks.append((_spec(cfg), params))
    points = _map(_shape_point, tasks, spec.jobs)
    geo, theory, R = [], [], []
    for pt in points:
        ratio = pt["ccw"][0] / pt["straight"][0]
        tracked = pt["ccw"][1] - pt["straight"][1]
        geo.append(float(resolve_branch(np.angle(ratio), tracked)))
        theory.append(pt["ccw"][2].gamma_geo)
        R.append(abs(pt["ccw"][0]))
    table = SweepTable("delta", deltas, units={"delta": "MHz"})
    table.add("geo_ccw", geo, "rad")
    table.add("adiabatic_ccw", theory, "rad")
    table.add("R_ccw", R)
    table.metadata = _metadata(spec)
    series = [Series("delta", "geo_ccw", "measured (ccw)", "scatter"), Series("delta", "adiabatic_ccw", "adiabatic", "line")]
    return table, dict(series=series, xlabel="delta/2pi (MHz)", ylabel="geometric phase (rad)", title="geometric phase vs detuning")


@experiment("fig4a", "Bloch vector length vs drive amplitude with Gaussian fits",
            eps0_min_mhz=0.0, eps0_max_mhz=370.0, eps0_points=10, durations_ns=(50.0, 100.0, 200.0))
def run_fig4a(spec: ExperimentSpec):
    cfg, params = spec.config, spec.params
    eps = _eps_grid(cfg, min_points=3)
    _require(cfg, "durations_ns", lambda v: all(t > 0 for t in v), "durations must be > 0")
    combos = [(t, o) for t in cfg["durations_ns"] for o in ("ccw", "cw")]
    tasks = [(_spec(cfg, duration=t, orientation=o, eps0=to_angular(e)), params) for t, o in combos for e in eps]
    results = _map(_coherence_point, tasks, spec.jobs)
    table = SweepTable("eps0", eps, units={"eps0": "MHz"})
    fits, series = {}, []
    for i, (t, o) in enumerate(combos):
        R = np.array([abs(c) for c, _ in results[i * eps.size:(i + 1) * eps.size]])
        name = f"R_T{t:g}_{o}"
        table.add(name, R)
        fit = fit_gaussian_R(np.column_stack([to_angular(eps), R]))
        table.add(name + "_fit", fit["R0"] * np.exp(-fit["c"] * to_angular(eps) ** 2))
        fits[name] = {**fit.as_dict(), "rms_log_residual": fit.rms_residual}
        series += [Series("eps0", name, f"T={t:g} {o}", "scatter"), Series("eps0", name + "_fit", None, "line")]
    table.metadata = _metadata(spec, fits=fits)
    return table, dict(series=series, xlabel="eps0/2pi (MHz)", ylabel="R/R0", title="coherence vs drive amplitude")


@experiment("fig4b", "Bloch vector length vs pulse length; ringing maxima",
            eps0_mhz=190.0, t_min_ns=10.0, t_max_ns=200.0, t_step_ns=1.0)
def run_fig4b(spec: ExperimentSpec):
    cfg, params = spec.config, spec.params
    T = _t_grid(cfg)
    table = SweepTable("T", T, units={"T": "ns"})
    summary = {}
    period = 2 * math.pi / abs(params.delta)
    for o in ("ccw", "cw"):
        results = _map(_coherence_point, [(_spec(cfg, duration=t, orientation=o), params) for t in T], spec.jobs)
        R = np.array([abs(c) for c, _ in results])
        table.add(f"R_{o}", R)
        ext = find_R_extrema(np.column_stack([T, R]), period=period)
        summary[o] = {"maxima_ns": ext.times.tolist(), "mean_spacing_ns": float(np.mean(ext.spacings())) if len(ext) > 1 else None,
                      "sparse_grid": ext.sparse}
    table.metadata = _metadata(spec, extrema=summary, ringing_period_ns=period,
                               photon_number=mean_photon_number(to_angular(cfg["eps0_mhz"]), params.delta))
    series = [Series("T", "R_ccw", "ccw"), Series("T", "R_cw", "cw")]
    return table, dict(series=series, xlabel="T (ns)", ylabel="R", title="coherence vs pulse length")


@experiment("fig4c", "coherent-state trajectories of both qubit branches (non-adiabatic)",
            eps0_mhz=190.0, duration_ns=30.0)
def run_fig4c(spec: ExperimentSpec):
    cfg, params = spec.config, spec.params
    ps = _spec(cfg)
    w = make_path(ps)
    tg, te = evolve_joint(w, params)
    opposite, _ = evolve_joint(make_path(ps.replace(orientation=ps.orientation.reversed())), params)
    table = SweepTable("t", tg.times, units={"t": "ns"})
    table.add("re_alpha_g", tg.alpha.real)
    table.add("im_alpha_g", tg.alpha.imag)
    table.add("theta_g", tg.theta, "rad")
    table.add("re_alpha_e", te.alpha.real)
    table.add("im_alpha_e", te.alpha.imag)
    table.add("theta_e", te.theta, "rad")
    table.add("re_alpha_g_opposite", opposite.alpha.real)
    table.add("im_alpha_g_opposite", opposite.alpha.imag)
    for branch, d in (("g", params.delta_g), ("e", params.delta_e)):
        ad = -w.values / (2 * d)
        table.add(f"re_adiabatic_{branch}", ad.real)
        table.add(f"im_adiabatic_{branch}", ad.imag)
    coh = coherence(tg, te)
    table.metadata = _metadata(spec, alpha_g_final=[tg.final_alpha.real, tg.final_alpha.imag],
                               alpha_e_final=[te.final_alpha.real, te.final_alpha.imag], R=coh.R, gamma=coh.gamma)
    series = [Series("re_alpha_g", "im_alpha_g", "g"), Series("re_alpha_e", "im_alpha_e", "e", dashed=True),
              Series("re_alpha_g_opposite", "im_alpha_g_opposite", "g, opposite", dashed=True),
              Series("re_adiabatic_g", "im_adiabatic_g", "g adiabatic"), Series("re_adiabatic_e", "im_adiabatic_e", "e adiabatic")]
    extra = {"trajectory.csv": lambda path: write_trajectories_csv(tg, te, path)}
    return table, dict(series=series, xlabel="Re alpha", ylabel="Im alpha", title="coherent-state trajectories", extra=extra)


@experiment("oracle-check", "Fock-space oracle vs coherent-state solver",
            eps0_mhz=190.0, durations_ns=(30.0, 100.0))
def run_oracle_check(spec: ExperimentSpec):
    cfg, params = spec.config, spec.params
    if params.kappa != 0:
        raise ValidationError("kappa_mhz: the oracle is unitary; set kappa_mhz = 0", field="kappa_mhz")
    durations = np.array(sorted(cfg["durations_ns"]), dtype=float)
    table = SweepTable("T", durations, units={"T": "ns"})
    reports = {}
    for o in ("ccw", "cw"):
        rows = _map(_oracle_point, [(_spec(cfg, duration=t, orientation=o), params, cfg.get("n_truncation"))
                                    for t in durations], spec.jobs)
        for field_name in ("fidelity_g", "fidelity_e", "phase_residual_rad", "r_residual", "norm_drift"):
            table.add(f"{field_name}_{o}", [getattr(r, field_name) for r in rows])
        reports[o] = [{**asdict(r), "T_ns": float(t)} for r, t in zip(rows, durations)]
    passed = all(_oracle_ok(r) for rs in reports.values() for r in rs)
    table.metadata = _metadata(spec, reports=reports, passed=passed)
    series = [Series("T", f"phase_residual_rad_{o}", f"phase residual {o}", "scatter") for o in ("ccw", "cw")]
    series += [Series("T", f"r_residual_{o}", f"R residual {o}", "scatter") for o in ("ccw", "cw")]
    return table, dict(series=series, xlabel="T (ns)", ylabel="residual", title="oracle check")


def _oracle_point(args):
    spec, params, n = args
    return oracle_compare(make_path(spec), params, n)


def _oracle_ok(r: dict) -> bool:
    return (min(r["fidelity_g"], r["fidelity_e"]) >= 0.999 and r["phase_residual_rad"] <= 1e-3
            and r["r_residual"] <= 1e-4 and r["norm_drift"] <= 1e-6)


# -- driver --------------------------------------------------------------------

@dataclass
class ExperimentOutput:
    table: SweepTable
    files: dict = field(default_factory=dict)


def run_experiment(spec: ExperimentSpec) -> ExperimentOutput:
    """Run the named sweep; write CSV + JSON + SVG if ``spec.out_dir`` is set."""
    table, plot = EXPERIMENTS[spec.name].runner(spec)
    table.validate(monotone=spec.name != "fig4c")
    output = ExperimentOutput(table)
    if spec.out_dir is None:
        return output
    out = Path(spec.out_dir)
    extra = plot.pop("extra", {})
    try:
        out.mkdir(parents=True, exist_ok=True)
        files = {
            "csv": out / f"{spec.name}.csv",
            "json": out / f"{spec.name}.json",
            "svg": out / f"{spec.name}.svg",
        }
        files["csv"].write_text(table.to_csv())
        files["json"].write_text(table.to_json())
        if len(table) >= 2:
            files["svg"].write_text(emit_svg(table, **plot))
        else:
            log.warning("%s: a single-row table has no SVG figure", spec.name)
            del files["svg"]
        for suffix, writer in extra.items():
            path = out / f"{spec.name}_{suffix}"
            writer(path)
            files[suffix] = path
        if spec.png:
            from .plotting import render_png

            files["png"] = out / f"{spec.name}.png"
            render_png(table, plot.get("series"), files["png"], xlabel=plot.get("xlabel"),
                       ylabel=plot.get("ylabel"), title=plot.get("title"))
    except OSError as exc:
        raise OutputError(f"cannot write results to {out}: {exc}") from None
    output.files = files
    return output


def describe() -> list[tuple[str, str, dict]]:
    return [(e.name, e.description, resolve_config(e.name, {})) for e in EXPERIMENTS.values()]

