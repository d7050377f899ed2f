"""Orchestration of scenario experiments into reports, CSV tables and figures."""
from __future__ import annotations

import csv
import io
import json
import logging
import os
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import analysis, carving, flow, resolvent, svg
from .errors import ResonanceLabError
from .scenario import Scenario, build_model

log = logging.getLogger(__name__)

CSV_COLUMNS = ("branch_id", "re_z", "im_z", "re_r", "im_r", "status")
POLE_TOL = 1e-8
ORACLE_TOL = 1e-8


@dataclass
class Outcome:
    result: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)
    errors: list = field(default_factory=list)
    rows: list = field(default_factory=list)
    r_tracks: list = field(default_factory=list)
    z_tracks: list = field(default_factory=list)
    cone: object = None

    def check(self, name, passed, **detail):
        self.checks.append({"name": name, "passed": bool(passed), **_plain(detail)})

    def track(self, label, zs, rs, status):
        for z, r in zip(zs, rs):
            self.rows.append((label, z, r, status))
        self.r_tracks.append((label, list(rs)))
        self.z_tracks.append((label, list(zs)))


def _plain(v):
    if isinstance(v, dict):
        return {str(k): _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if isinstance(v, (complex, np.complexfloating)):
        return [float(v.real), float(v.imag)]
    if isinstance(v, np.bool_):
        return bool(v)
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, np.ndarray):
        return _plain(v.tolist())
    return v


def _sorted(rs):
    rs = np.asarray(rs, dtype=complex)
    return rs[np.lexsort((rs.imag, rs.real))]


def _pmap(threads, fn, items):
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


# ---------------------------------------------------------------- experiments

def exp_spectrum_grid(model, exp, knobs, threads, rng):
    out = Outcome()
    if "points" in exp:
        pts = exp["points"]
    else:
        re = exp.get("re", [-1.0, 1.0, 5])
        im = exp.get("im", [0.1, 1.0, 3])
        pts = [complex(x, y) for y in np.linspace(im[0], im[1], int(im[2]))
               for x in np.linspace(re[0], re[1], int(re[2]))]
    tau = knobs.get("tau_sigma", resolvent.TAU_SIGMA)

    def one(z):
        rs = _sorted(resolvent.resonances(model, z, tau))
        return rs, resolvent.scaled_det_residuals(model, z, rs)

    worst, over = 0.0, 0
    entries = []
    for z, (rs, res) in zip(pts, _pmap(threads, one, pts)):
        entries.append({"z": z, "resonances": list(rs)})
        for b, r in enumerate(rs):
            out.rows.append((str(b), z, r, "ok"))
        worst = max(worst, float(np.max(res, initial=0.0)))
        over += int(len(rs) > model.n_aux)
    for b in range(max((len(e["resonances"]) for e in entries), default=0)):
        out.r_tracks.append((str(b), [e["resonances"][b] for e in entries
                                      if len(e["resonances"]) > b]))
    out.z_tracks.append(("grid", list(pts)))
    out.result = {"points": entries}
    out.check("pole_characterization", worst < POLE_TOL, worst_scaled_residual=worst)
    out.check("count_bound", over == 0, violations=over)
    return out


def exp_continue(model, exp, knobs, threads, rng):
    out = Outcome()
    tau = knobs.get("tau_sigma", resolvent.TAU_SIGMA)
    start = exp["start"]
    if "start_r" in exp:
        r0 = exp["start_r"]
    else:
        rs = _sorted(resolvent.resonances(model, start, tau))
        r0 = rs[exp.get("branch", 0)]
    traj = analysis.continue_branch(model, start, r0, exp["path"], tau_sigma=tau)
    out.track("0", traj.path, traj.values, traj.status.value)
    out.result = {"status": traj.status.value, "final": traj.final, "n_steps": len(traj.path),
                  "boundary_limit": traj.boundary_limit, "detail": _plain(traj.detail)}
    vals = np.asarray(traj.values)
    jumps = np.abs(np.diff(vals)) <= 0.05 * (1 + np.abs(vals[:-1])) + 1e-15
    out.check("jump_contract", bool(np.all(jumps)) or traj.status.value != "ok",
              max_jump=traj.max_jump())
    return out


def _carve(model, exp, threads):
    return carving.egorov_compact(
        lambda z: resolvent.eval_T(model, z).matrix, exp["interval"], exp["delta"],
        grid_step=exp.get("grid_step"), m_max=exp.get("m_max", 8), scale=exp.get("scale", 1.0),
        threads=threads)


def exp_egorov(model, exp, knobs, threads, rng):
    out = Outcome()
    cert = _carve(model, exp, threads)
    out.result = cert.to_dict()
    out.cone = cert.K
    out.check("certificate_bounds", cert.check(), excluded=cert.excluded_measure,
              delta=cert.delta)
    out.check("measure_bound", cert.excluded_measure < cert.delta)
    return out


def exp_impacting(model, exp, knobs, threads, rng):
    out = Outcome()
    K = None
    if "lambdas" in exp:
        lams = exp["lambdas"]
    elif "interval" in exp:
        cert = _carve(model, {"delta": 0.1, **exp}, threads)
        K = cert.K
        out.cone = K
        out.result["certificate"] = {"moduli": cert.moduli, "K": K.to_dict(),
                                     "excluded_grid_measure": cert.excluded_measure}
        lams = list(K.grid(exp.get("lambda_step", 0.05)))
    else:
        lams = []
    tau_real = knobs.get("tau_real", analysis.TAU_REAL)
    margin = knobs.get("real_margin", analysis.REAL_MARGIN)
    tau = knobs.get("tau_sigma", resolvent.TAU_SIGMA)

    def one(lam):
        return analysis.find_impacting(model, lam, exp.get("y_ladder"), tau_real, margin,
                                       tau_sigma=tau)

    sets = _pmap(threads, one, lams)
    real_ok = True
    for i, s in enumerate(sets):
        for b, t in s.trajectories.items():
            out.track(f"L{i}B{b}", t.path, t.values, t.status.value)
        for _, v in s.branches:
            real_ok &= abs(v.imag) < tau_real and -margin <= v.real <= 1 + margin
    out.result["sets"] = [s.to_dict() for s in sets]
    out.check("impacting_values_real_in_unit_interval", real_ok)
    if exp.get("verify") and K is not None:
        rep = analysis.verify_single_valuedness(model, K, sets)
        out.result["single_valuedness"] = rep.to_dict()
        out.check("single_valuedness", rep.passed, count=rep.count, height=rep.height)
    return out


def exp_classify(model, exp, knobs, threads, rng):
    out = Outcome()
    cands = list(exp.get("candidates", []))
    detected = []
    if "region" in exp:
        detected = analysis.detect_branch_points(model, exp["region"])
        cands += [r.location for r in detected]
    reports = []
    for c in cands:
        try:
            reports.append(analysis.classify_singularity(model, c, exp.get("radius"),
                                                         exp.get("n_rays", 8)))
        except ResonanceLabError as exc:
            out.errors.append({"candidate": c, "error": type(exc).__name__, "message": str(exc)})
    out.result = {"detected": [r.to_dict() for r in detected],
                  "reports": [r.to_dict() for r in reports]}
    absorbing = [r.location for r in reports if r.kind == "absorbing_suspect"]
    if absorbing:
        log.warning("absorbing-point suspects found at %s", absorbing)
    out.check("no_absorbing_suspects", not absorbing, suspects=absorbing)
    consistent = all((r.kind == "branch") == any(len(c) > 1 for c in analysis.cycles(r.monodromy))
                     for r in reports)
    out.check("report_consistency", consistent)
    return out


def _gap_lambdas(model, n, rng):
    e0 = np.sort(model.unperturbed_spectrum())
    e1 = np.sort(np.linalg.eigvalsh(np.asarray(model.h0) + model.perturbation()))
    mids = list(0.5 * (e0[1:] + e0[:-1])) + [e0[0] - 0.5, e0[-1] + 0.5]
    rng.shuffle(mids)
    out = []
    for lam in mids:
        if np.min(np.abs(e1 - lam)) > 1e-3 and np.min(np.abs(e0 - lam)) > 1e-3:
            out.append(float(lam))
        if len(out) == n:
            break
    return out


def real_resonances_in_unit(model, lam, tau_real=1e-6):
    rs = resolvent.resonances(model, lam)
    keep = (np.abs(rs.imag) < tau_real * np.maximum(1, np.abs(rs))) & (rs.real >= -1e-12) \
        & (rs.real <= 1 + 1e-12)
    return np.sort(rs[keep].real)


def exp_oracle(model, exp, knobs, threads, rng):
    out = Outcome()
    lams = exp.get("lambdas") or _gap_lambdas(model, exp.get("n_lambdas", 3), rng)
    entries, ok_all, dir_ok = [], True, True
    for lam in lams:
        recs = flow.crossings(model, lam, exp.get("grid_n", 2001))
        s = np.array(sorted(r.s_star for r in recs))
        res = real_resonances_in_unit(model, lam)
        ok = len(s) == len(res) and bool(np.all(np.abs(s - res) <= ORACLE_TOL))
        ok_all &= ok
        dir_ok &= all(flow.crossing_direction_hf(model, r) == r.direction for r in recs)
        entries.append({"lambda": lam, "crossings": list(s), "real_resonances": list(res),
                        "net_flow": flow.net_flow(recs), "agree": ok})
    out.result = {"lambdas": entries}
    out.check("oracle_equivalence", ok_all)
    out.check("direction_consistency", dir_ok)
    return out


def exp_ray_stats(model, exp, knobs, threads, rng):
    out = Outcome()
    out.result = analysis.ray_survival_stats(model, exp["z0"], exp["region"],
                                             exp.get("n_rays", 360), exp.get("step", 0.01))
    return out


EXPERIMENT_FUNCS = {
    "spectrum-grid": exp_spectrum_grid,
    "continue": exp_continue,
    "egorov": exp_egorov,
    "impacting": exp_impacting,
    "classify": exp_classify,
    "oracle-check": exp_oracle,
    "ray-stats": exp_ray_stats,
}


# ---------------------------------------------------------------- output

def _fmt(x):
    return repr(float(x))


def csv_text(outcomes):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for m, o in enumerate(outcomes):
        prefix = f"M{m}:" if len(outcomes) > 1 else ""
        for label, z, r, status in o.rows:
            z, r = complex(z), complex(r)
            w.writerow((prefix + str(label), _fmt(z.real), _fmt(z.imag), _fmt(r.real),
                        _fmt(r.imag), status))
    return buf.getvalue()


def _atomic_write(path, text):
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


@dataclass
class RunResult:
    report: dict
    csv: str
    figures: dict
    exit_code: int


def run_scenario(sc: Scenario, threads=1, seed=None) -> RunResult:
    """Run every model of the scenario through its experiment."""
    seed = sc.seed if seed is None else seed
    rng = np.random.default_rng(seed)
    models_ = [build_model(sc.model, rng) for _ in range(sc.repeat)]
    func = EXPERIMENT_FUNCS[sc.kind]
    outcomes = []
    for model in models_:
        try:
            o = func(model, sc.experiment, sc.knobs, threads, rng)
        except ResonanceLabError as exc:
            o = Outcome()
            o.errors.append({"error": type(exc).__name__, "message": str(exc)})
        outcomes.append(o)
    failed = any(not c["passed"] for o in outcomes for c in o.checks) or \
        any(o.errors for o in outcomes)
    report = {
        "scenario": sc.raw,
        "seed": seed,
        "experiment": sc.kind,
        "runs": [{"model": {"kind": m.kind.value, "name": m.name, "n_aux": m.n_aux},
                  "result": _plain(o.result), "checks": o.checks, "errors": _plain(o.errors)}
                 for m, o in zip(models_, outcomes)],
        "all_checks_passed": not failed,
    }
    figures = {}
    tracks_r = [t for o in outcomes for t in o.r_tracks]
    tracks_z = [t for o in outcomes for t in o.z_tracks]
    cone = next((o.cone for o in outcomes if o.cone is not None), None)
    if tracks_r:
        figures["r_plane.svg"] = svg.r_plane_figure(tracks_r)
    if tracks_z or cone is not None:
        figures["z_plane.svg"] = svg.z_plane_figure(tracks_z, cone)
    return RunResult(report, csv_text(outcomes), figures, 1 if failed else 0)


def write_outputs(sc: Scenario, result: RunResult, out_dir):
    out = sc.output
    report_path = os.path.join(out_dir, out.get("report", "report.json"))
    csv_path = os.path.join(out_dir, out.get("csv", "trajectories.csv"))
    _atomic_write(report_path, json.dumps(result.report, indent=2, sort_keys=True) + "\n")
    _atomic_write(csv_path, result.csv)
    paths = [report_path, csv_path]
    if out.get("svg", True):
        for name, text in result.figures.items():
            p = os.path.join(out_dir, name)
            _atomic_write(p, text)
            paths.append(p)
    return paths
