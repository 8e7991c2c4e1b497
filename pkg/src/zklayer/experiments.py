"""Preset experiments behind ``zk run``.

Each runner takes a validated :class:`~zklayer.config.ExperimentConfig`
and returns an :class:`ExperimentResult`: report items, metrics tables and
an optional failure record.  Snapshots are written as the runs progress
when an output directory is given.  Sweep points are independent and can
be spread over worker processes; results are collected in sweep order, so
outputs do not depend on the number of workers.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .config import ExperimentConfig, InitialCondition
from .diagnostics import (
    Identity,
    conservation_report,
    decay_experiment,
    identity_residual,
    interpolation_ratio,
)
from .domain import DomainSpec, Field
from .errors import UsageError
from .initial import gaussian_pulse, philox, random_bandlimited, scale_to_l2, single_mode
from .io import metrics_rows, read_snapshot, write_snapshot
from .solver import _ladder, run
from .weights import WeightKind, WeightSpec

__all__ = [
    "ExperimentResult",
    "build_initial",
    "run_experiment",
    "AUDIT_WEIGHT_PAIRS",
    "TOLERANCES",
]

TOLERANCES = {
    "linear_l2_drift": 1e-12,
    "mass_drift": 1e-6,
    "energy_drift": 1e-4,
    "regularized_residual": 1e-6,
    "decay_rate_fraction": 0.95,
    "audit_change": 0.05,
    "ladder_variation": 0.20,
}

AUDIT_WEIGHT_PAIRS = (
    (WeightSpec(WeightKind.ONE), WeightSpec(WeightKind.ONE)),
    (WeightSpec(WeightKind.RHO, 0.75, order=1), WeightSpec(WeightKind.RHO, 0.75)),
)

CHECKS = {
    "linear-dispersion": "L2 norm conservation under the exact linear flow",
    "conservation": "conservation of mass and energy for the homogeneous equation",
    "h-sweep": "regularized L2 identity and Cauchy behaviour as h decreases",
    "decay-sweep": "decay of the exponentially weighted mass",
    "perturbation": "Lipschitz dependence on initial data in a weighted norm",
    "interpolation-audit": "empirical constants of the weighted interpolation inequality",
    "custom": "single run with conservation and identity diagnostics",
}


@dataclass
class ExperimentResult:
    report: dict
    tables: dict = field(default_factory=dict)
    extra_csv: dict = field(default_factory=dict)
    failure: dict | None = None
    data: dict = field(default_factory=dict)

    @property
    def ok(self):
        return self.failure is None


def build_initial(ic: InitialCondition, dom: DomainSpec) -> Field:
    if ic.type == "gaussian-pulse":
        f = gaussian_pulse(dom, ic.amplitude, ic.width, ic.center, ic.modes)
    elif ic.type == "single-mode":
        f = single_mode(dom, ic.k, ic.modes, ic.amplitude)
    else:
        f = read_snapshot(ic.path, dom.dealias)
        if f.dom.shape != dom.shape or (f.dom.L1, f.dom.L2, f.dom.X) != (dom.L1, dom.L2, dom.X):
            raise UsageError(f"snapshot {ic.path} does not match the configured domain")
        f = Field(dom, physical=f.physical)
    if ic.l2_norm is not None:
        f = scale_to_l2(f, ic.l2_norm)
    return f


def _snapshot_writer(outdir, every):
    if outdir is None:
        return None
    snapdir = Path(outdir) / "snapshots"
    count = {"n": 0}

    def cb(state):
        if every and count["n"] % every == 0:
            write_snapshot(snapdir / f"u_{state.step_count:08d}.zkf", state.u)
        count["n"] += 1

    return cb


def _finish(state, outdir):
    if outdir is not None:
        write_snapshot(Path(outdir) / "snapshots" / "final.zkf", state.u)


def _header(cfg: ExperimentConfig):
    return {
        "preset": cfg.preset,
        "check": CHECKS[cfg.preset],
        "config_hash": cfg.config_hash,
        "seed": cfg.seed,
        "grid": f"{cfg.domain.Nx}x{cfg.domain.Ny}x{cfg.domain.Nz}",
    }


def _single(cfg: ExperimentConfig, solver, outdir):
    u0 = build_initial(cfg.initial_condition, cfg.domain)
    state = run(u0, solver, callback=_snapshot_writer(outdir, cfg.snapshot_every))
    _finish(state, outdir)
    return state


def _seam_items(state):
    return {
        "seam_warning": bool(state.flags.get("seam_warning", False)),
        "max_seam_magnitude": max(r["seam"] for r in state.metrics),
    }


# -- single-run presets ----------------------------------------------------------


def _linear_dispersion(cfg, outdir, jobs):
    state = _single(cfg, cfg.solver, outdir)
    l2 = np.sqrt([r["mass"] for r in state.metrics])
    drift = float(np.max(np.abs(l2 / l2[0] - 1.0)))
    rep = _header(cfg)
    rep.update({
        "l2_initial": float(l2[0]),
        "l2_drift": drift,
        "l2_drift_tol": TOLERANCES["linear_l2_drift"],
        "l2_drift_pass": drift <= TOLERANCES["linear_l2_drift"],
    })
    rep.update(_seam_items(state))
    return ExperimentResult(rep, {"": metrics_rows(state)}, data={"state": state})


def _conservation(cfg, outdir, jobs):
    state = _single(cfg, cfg.solver, outdir)
    cr = conservation_report(state)
    rep = _header(cfg)
    rep.update({
        "max_abs_initial": state.metrics[0]["max_abs"],
        "mass_drift": cr.mass_drift,
        "mass_drift_tol": TOLERANCES["mass_drift"],
        "energy_drift": cr.energy_drift,
        "energy_drift_tol": TOLERANCES["energy_drift"],
        "pass": cr.mass_drift <= TOLERANCES["mass_drift"] and cr.energy_drift <= TOLERANCES["energy_drift"],
    })
    rep.update(_seam_items(state))
    return ExperimentResult(rep, {"": metrics_rows(state)}, data={"state": state})


def _custom(cfg, outdir, jobs):
    state = _single(cfg, cfg.solver, outdir)
    rep = _header(cfg)
    cr = conservation_report(state)
    rep.update({"mass_drift": cr.mass_drift, "energy_drift": cr.energy_drift})
    rep["l2_identity_residual"] = identity_residual(state, Identity.L2_LINEAR)
    if cfg.solver.alpha is not None:
        rep["weighted_identity_residual"] = identity_residual(state, Identity.WEIGHTED_EXP)
    rep.update(_seam_items(state))
    return ExperimentResult(rep, {"": metrics_rows(state)}, data={"state": state})


# -- sweeps ------------------------------------------------------------------------


def _map(func, items, jobs):
    if jobs and jobs > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, len(items))) as pool:
            return list(pool.map(func, items))
    return [func(item) for item in items]


def _subdir(outdir, name):
    return None if outdir is None else Path(outdir) / name


def _h_point(args):
    cfg, h, outdir = args
    solver = replace(cfg.solver, h=h, delta=None)
    state = _single(cfg, solver, outdir)
    return {
        "h": h,
        "rows": metrics_rows(state),
        "residual": identity_residual(state, Identity.L2_REGULARIZED),
        "final": state.u.values(),
        "max_abs": max(r["max_abs"] for r in state.metrics),
        "seam_warning": bool(state.flags.get("seam_warning", False)),
    }


def _h_sweep(cfg, outdir, jobs):
    hs = cfg.sweep.get("h")
    if not hs:
        raise UsageError("h-sweep needs sweep.h")
    hs = sorted(hs, reverse=True)
    items = [(cfg, h, _subdir(outdir, f"h_{h:g}")) for h in hs]
    pts = _map(_h_point, items, jobs)
    dom = cfg.domain
    dists = [
        math.sqrt(float(np.sum((a["final"] - b["final"]) ** 2)) * dom.cell_volume)
        for a, b in zip(pts[:-1], pts[1:])
    ]
    residuals = [p["residual"] for p in pts]
    cauchy = all(d2 < d1 for d1, d2 in zip(dists[:-1], dists[1:]))
    tol = TOLERANCES["regularized_residual"]
    rep = _header(cfg)
    rep.update({
        "h_values": hs,
        "regularized_residuals": residuals,
        "residual_tol": tol,
        "residual_pass": all(r <= tol for r in residuals),
        "max_abs": [p["max_abs"] for p in pts],
        "truncation_inactive": [p["max_abs"] <= 1.0 / p["h"] for p in pts],
        "consecutive_distances": dists,
        "cauchy_decreasing": cauchy,
        "seam_warning": any(p["seam_warning"] for p in pts),
    })
    tables = {f"h_{p['h']:g}": p["rows"] for p in pts}
    return ExperimentResult(rep, tables, data={"points": pts})


def _decay_point(args):
    cfg, alpha, outdir = args
    u0 = build_initial(cfg.initial_condition, cfg.domain)
    rep = decay_experiment(
        u0,
        cfg.solver,
        alpha,
        outside_tol=cfg.decay.get("outside_tol", 1e-10),
        eps0=cfg.decay.get("eps0"),
    )
    rows = metrics_rows(rep.state) if rep.state is not None else []
    if rep.state is not None:
        _finish(rep.state, outdir)
    rep.state = None
    return {"alpha": alpha, "report": rep, "rows": rows}


def _decay_sweep(cfg, outdir, jobs):
    alphas = cfg.sweep.get("alpha")
    if not alphas:
        raise UsageError("decay-sweep needs sweep.alpha")
    items = [(cfg, a, _subdir(outdir, f"alpha_{a:g}")) for a in alphas]
    pts = _map(_decay_point, items, jobs)
    frac = TOLERANCES["decay_rate_fraction"]
    reps = [p["report"] for p in pts]
    linear = cfg.solver.mode == "off"
    rep = _header(cfg)
    rep.update({
        "alpha_values": list(alphas),
        "status": [r.status for r in reps],
        "fitted_rates": [r.rate for r in reps],
        "fitted_rate_target": "squared weighted norm",
        "norm_rates": [r.norm_rate for r in reps],
        "predicted_linear_rates": [r.prediction.predicted_linear_rate for r in reps],
        "lambda11": cfg.domain.lambda11,
        "nonincreasing": [r.nonincreasing for r in reps],
        "max_outside_window": [r.outside_max for r in reps],
    })
    if linear:
        rep["rate_fraction_required"] = frac
        rep["rate_pass"] = [r.meets_linear_prediction(1.0 - frac) for r in reps]
    else:
        rep["rate_positive"] = [r.rate > 0 for r in reps]
    failure = None
    bad = [p["alpha"] for p in pts if p["report"].status == "invalid"]
    if bad:
        failure = {
            "status": "invalid-experiment",
            "reason": "seam or window guard violated",
            "alpha": bad,
            "messages": [p["report"].message for p in pts if p["report"].status == "invalid"],
        }
    tables = {f"alpha_{p['alpha']:g}": p["rows"] for p in pts}
    return ExperimentResult(rep, tables, failure=failure, data={"reports": reps})


def _perturbation(cfg, outdir, jobs):
    eps = cfg.sweep.get("eps")
    if not eps:
        raise UsageError("perturbation needs sweep.eps")
    if cfg.weight.kind not in (WeightKind.KAPPA, WeightKind.EXP):
        raise UsageError("perturbation study needs a KappaAlphaBeta or Exp2Alpha weight")
    u0 = build_initial(cfg.initial_condition, cfg.domain)
    pert = build_initial(cfg.perturbation, cfg.domain)
    base, reps = _ladder(u0, pert, eps, cfg.solver, cfg.weight)
    _finish(base, outdir)
    ratios = [r.ratio for r in reps]
    finite = [r for r in ratios if math.isfinite(r)]
    variation = (max(finite) - min(finite)) / min(finite) if finite else math.nan
    rep = _header(cfg)
    rep.update({
        "weight": f"{cfg.weight.kind.value}(alpha={cfg.weight.alpha:g}, beta={cfg.weight.beta:g})",
        "eps_values": list(eps),
        "initial_distances": [r.initial_distance for r in reps],
        "amplification_ratios": ratios,
        "final_ratios": [r.distances[-1] / r.initial_distance if r.initial_distance else math.nan for r in reps],
        "exact_match": [r.exact_match for r in reps],
        "ratio_variation": variation,
        "variation_tol": TOLERANCES["ladder_variation"],
        "bounded": bool(finite) and all(math.isfinite(r) for r in finite),
        "pass": bool(finite) and variation < TOLERANCES["ladder_variation"],
    })
    return ExperimentResult(rep, {"": metrics_rows(base)}, data={"reports": reps})


def audit_fields(dom, seed, count, kmax, lmax, decay):
    """The audit sample: ``count`` fields from one Philox stream."""
    rng = philox(seed)
    return [random_bandlimited(dom, kmax=kmax, lmax=lmax, decay=decay, rng=rng) for _ in range(count)]


def _audit(cfg, outdir, jobs):
    a = cfg.audit
    n = int(a["samples"])
    combos = [tuple(c) for c in (a.get("combos") or PRESET_COMBOS)]
    fields = audit_fields(cfg.domain, cfg.seed, 2 * n, a["kmax"], a["lmax"], a["decay"])
    rows = []
    changes = []
    for w1, w2 in AUDIT_WEIGHT_PAIRS:
        name = _pair_name(w1, w2)
        for k, m, q in combos:
            r = np.array([interpolation_ratio(f, k, m, q, w1, w2).ratio for f in fields])
            first, full = float(np.max(r[:n])), float(np.max(r))
            change = full / first - 1.0
            changes.append(change)
            rows.append({
                "weights": name, "k": k, "m": m, "q": q,
                "max_ratio_n": first, "max_ratio_2n": full, "relative_change": change,
            })
    rep = _header(cfg)
    rep.update({
        "samples": n,
        "doubled_samples": 2 * n,
        "combos": [f"({k},{m},{q})" for k, m, q in combos],
        "max_relative_change": max(changes),
        "change_tol": TOLERANCES["audit_change"],
        "all_finite": all(math.isfinite(r["max_ratio_2n"]) for r in rows),
        "pass": max(changes) < TOLERANCES["audit_change"],
    })
    return ExperimentResult(rep, {}, extra_csv={"audit.csv": rows}, data={"rows": rows})


PRESET_COMBOS = ((1, 0, 2), (1, 0, 4), (1, 0, 6), (2, 0, 4), (2, 1, 2), (2, 0, 8))


def _pair_name(w1, w2):
    def one(w):
        if w.kind is WeightKind.ONE:
            return "One"
        tag = f"{w.kind.value}({w.alpha:g})"
        return tag + "'" if w.order else tag

    return f"{one(w1)}/{one(w2)}"


RUNNERS = {
    "linear-dispersion": _linear_dispersion,
    "conservation": _conservation,
    "h-sweep": _h_sweep,
    "decay-sweep": _decay_sweep,
    "perturbation": _perturbation,
    "interpolation-audit": _audit,
    "custom": _custom,
}


def run_experiment(cfg: ExperimentConfig, outdir=None, jobs=1) -> ExperimentResult:
    """Run the preset named in ``cfg``; no files besides snapshots are written."""
    return RUNNERS[cfg.preset](cfg, outdir, jobs)
