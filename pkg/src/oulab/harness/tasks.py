"""Task runners.  Each returns ``(result, checks)`` with JSON-ready contents."""
from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from ..errors import RadiusTooSmall
from ..geometry import (
    SamplerConfig,
    constants_ABC,
    curvature_h,
    domain_from_spec,
    integral_functional_domain,
    integral_functional_h,
    sample_boundary,
    sphere_admissibility,
    sphere_blowup_witness,
)
from ..geometry.domains import Rational1D
from ..mc import PathConfig, cylindrical_convergence, kernel_check, kernel_g, killed_semigroup, resolvent_mc
from ..solver import (
    boundary_identity_residual,
    check_energy_identity,
    check_w22_bound,
    discretize,
    export_solution,
    solve_dirichlet,
    sobolev_norms,
    trace_inequality_check,
    w22_constant,
)
from ..sources import source_from_spec
from ..spectral import measure_from_spec

__all__ = ["Context", "check", "RUNNERS", "SWEEP_COLUMNS", "expand_sources"]

SWEEP_COLUMNS = ("n", "witness", "sup_h", "A", "B", "C", "K2", "w22_ratio", "mc_estimate", "mc_stderr")
SWEEP_DOC = {
    "n": "truncation dimension",
    "witness": "H_n at the boundary point x0 + r_n e_n (spheres only)",
    "sup_h": "sampled supremum of H_n on the boundary (equals C)",
    "A": "sampled sup |Q^{1/2} D g~| over the band",
    "B": "sampled sup ||Q^{1/2} D^2 g~ Q^{1/2}||_HS over the band",
    "C": "sampled sup of H_n on the boundary",
    "K2": "1/lam^2 + 2/lam + M(lam, A, B, C)",
    "w22_ratio": "achieved ||u||^2_{W22} / ||f||^2 of the grid solution (n <= 3)",
    "mc_estimate": "Monte Carlo resolvent estimate at the probe",
    "mc_stderr": "standard error of mc_estimate",
}

_RELATIONS = {
    "<=": lambda v, b, t: v <= b + t,
    "<": lambda v, b, t: v < b + t,
    ">=": lambda v, b, t: v >= b - t,
    ">": lambda v, b, t: v > b - t,
    "==": lambda v, b, t: abs(v - b) <= t,
}


def check(name, value, bound, relation="<=", tolerance=0.0):
    """A verdict that can be recomputed from its stored fields."""
    if isinstance(value, str) or isinstance(bound, str):
        passed = relation == "==" and value == bound
    else:
        value, bound, tolerance = float(value), float(bound), float(tolerance)
        passed = bool(np.isfinite(value)) and bool(_RELATIONS[relation](value, bound, tolerance))
    return {"name": name, "value": value, "bound": bound, "relation": relation,
            "tolerance": tolerance, "passed": bool(passed)}


class Context:
    """Resolved measures and domains of a scenario plus the output directory."""

    def __init__(self, cfg, out_dir=None):
        self.cfg = cfg
        self.seed = int(cfg.get("seed", 0))
        self.measure_specs = cfg.get("measures", {})
        self.domain_specs = cfg.get("domains", {})
        self.out_dir = Path(out_dir) if out_dir is not None else None
        self.outputs = cfg.get("outputs", {})
        self.files = []

    def measure(self, name, n=None):
        m = measure_from_spec(self.measure_specs[name])
        if n is not None and n < m.dim:
            m = m.truncate(n)
        return m

    def domain(self, name, n):
        return domain_from_spec(self.domain_specs[name], n)

    def sampler(self, task):
        return SamplerConfig(**{"seed": self.seed, **task.get("sampler", {})})

    def paths(self, task, **defaults):
        return PathConfig(**{"seed": self.seed, **defaults, **task.get("paths", {})})

    def write_path(self, name):
        if self.out_dir is None:
            return None
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.files.append(name)
        return self.out_dir / name


def expand_sources(specs):
    """Expand ``{"kind": "random", "count": m}`` into ``m`` consecutive seeds."""
    out = []
    for spec in specs:
        if isinstance(spec, dict) and spec.get("kind") == "random" and "count" in spec:
            base = {k: v for k, v in spec.items() if k != "count"}
            out.extend({**base, "seed": spec["seed"] + i} for i in range(spec["count"]))
        else:
            out.append(spec)
    return out


def _grid_kw(task):
    kw = {}
    for key in ("resolution", "box_halfwidth", "scheme"):
        if key in task:
            kw[key] = task[key]
    return kw


def _sphere_params(spec):
    if spec.get("tag") != "sphere":
        return None
    return np.asarray(spec.get("center", [0.0]), float), float(spec["radius"])


# -- curvature ----------------------------------------------------------------

def run_curvature(task, ctx):
    m = ctx.measure(task["measure"])
    n = task.get("n", m.dim)
    dom = ctx.domain(task["domain"], n)
    rep = constants_ABC(m, dom, ctx.sampler(task))
    result = {"n": n, "constants": rep.to_dict()}
    checks = []
    tol = task.get("tolerance", 1e-3)
    if "expect_C_max" in task:
        checks.append(check("C", rep.C, task["expect_C_max"], "<=", tol))
    if dom.geometry_tag == "half_space":
        # h is constant on a hyperplane
        closed = float(np.max(dom.closed_form_h(m, dom.anchor[None, :])))
        result["C_closed_form"] = closed
        checks.append(check("C_closed_form", rep.C, closed, "==", 1e-9 * max(1.0, abs(closed))))
    sp = _sphere_params(ctx.domain_specs[task["domain"]])
    if sp is not None:
        verdict = sphere_admissibility(m, *sp)
        result["admissibility"] = verdict
        if "expect_admissibility" in task:
            checks.append(check("admissibility", verdict, task["expect_admissibility"], "=="))
    return result, checks


# -- grid solves --------------------------------------------------------------

def run_solve(task, ctx):
    n = task.get("n", measure_from_spec(ctx.measure_specs[task["measure"]]).dim)
    m = ctx.measure(task["measure"], n)
    dom = ctx.domain(task["domain"], n)
    grid = discretize(m, dom, **_grid_kw(task))
    wanted = task.get("checks", ["energy", "apriori"])
    tol = task.get("tolerance", 1e-6)
    rep = constants_ABC(m, dom, ctx.sampler(task)) if {"w22", "trace"} & set(wanted) else None
    rows, checks = [], []
    sources = expand_sources(task["sources"])
    for si, spec in enumerate(sources):
        f = source_from_spec(spec, n)
        for li, lam in enumerate(task["lambdas"]):
            sol = solve_dirichlet(m, grid, f, lam)
            fn = sol.f_norm_sq()
            norms = sobolev_norms(m, sol)
            row = {"source": si, "lambda": lam, "f_norm_sq": fn, "norms": norms.to_dict(),
                   "cg_iterations": sol.iterations, "cg_residual": sol.residual}
            tag = f"source {si}, lambda {lam:g}"
            if "energy" in wanted:
                res = check_energy_identity(m, sol)
                row["energy_residual"] = res
                checks.append(check(f"energy identity [{tag}]", res, tol, "<"))
            if "apriori" in wanted:
                checks.append(check(f"L2 a-priori [{tag}]", sol.l2_sq(), fn / lam**2, "<=", tol * fn))
                checks.append(check(f"gradient a-priori [{tag}]", sol.grad_sq(), 2.0 * fn / lam, "<=",
                                    tol * fn))
            if "w22" in wanted:
                ratio, K2, M = check_w22_bound(m, sol, rep, norms)
                row.update(w22_ratio=ratio, K2=K2, M=M)
                checks.append(check(f"W22 bound [{tag}]", ratio, K2, "<="))
                if rep.C <= 0:
                    checks.append(check(f"M for C <= 0 [{tag}]", M, 8.0, "==", 0.0))
            if "trace" in wanted:
                tr = trace_inequality_check(m, sol, dom, rep, norms=norms)
                row["trace"] = tr
                checks.append(check(f"trace inequality [{tag}]", tr["lhs"], tr["rhs"], "<="))
            if "boundary_identity" in wanted:
                row["boundary_identity_residual"] = boundary_identity_residual(m, sol, dom)
            if task.get("export"):
                stem = f"{task.get('id', 'solve')}_source{si}_lambda{li}"
                path = ctx.write_path(stem + ".bin")
                if path is not None:
                    ctx.files.append(stem + ".json")
                    export_solution(sol, path)
            rows.append(row)
    result = {"n": n, "grid_shape": list(grid.shape), "interior_cells": int(grid.n_interior),
              "constants": rep.to_dict() if rep is not None else None, "rows": rows}
    return result, checks


def run_boundary_identity(task, ctx):
    n = task.get("n", measure_from_spec(ctx.measure_specs[task["measure"]]).dim)
    m = ctx.measure(task["measure"], n)
    dom = ctx.domain(task["domain"], n)
    f = source_from_spec(task["source"], n)
    lam = task.get("lambda", 1.0)
    kw = {"box_halfwidth": task["box_halfwidth"]} if "box_halfwidth" in task else {}
    residuals = []
    for res in task["resolutions"]:
        sol = solve_dirichlet(m, discretize(m, dom, resolution=res, **kw), f, lam)
        residuals.append(boundary_identity_residual(m, sol, dom))
    min_ratio = task.get("min_ratio", 1.3)
    ratios = [a / b if b > 0 else float("inf") for a, b in zip(residuals, residuals[1:])]
    checks = [check(f"refinement {task['resolutions'][i]} -> {task['resolutions'][i + 1]}", r,
                    min_ratio, ">=") for i, r in enumerate(ratios)]
    return {"n": n, "resolutions": task["resolutions"], "residuals": residuals,
            "ratios": ratios}, checks


# -- Monte Carlo --------------------------------------------------------------

def run_mc(task, ctx):
    n = task.get("n", measure_from_spec(ctx.measure_specs[task["measure"]]).dim)
    m = ctx.measure(task["measure"], n)
    dom = ctx.domain(task["domain"], n)
    F = source_from_spec(task["source"], n)
    cfg = ctx.paths(task)
    rows, checks = [], []
    tol = task.get("tolerance", 0.0)
    for i, x in enumerate(task["probes"]):
        if "t" in task:
            est, se = killed_semigroup(m, dom, F, task["t"], x, cfg)
            row = {"probe": x, "estimate": est, "stderr": se, "tail_bound": 0.0}
        else:
            row = {"probe": x, **resolvent_mc(m, dom, F, task.get("lambda", 1.0), x, cfg).to_dict()}
        if "expect" in task:
            checks.append(check(f"probe {i}", row["estimate"], task["expect"], "==",
                                3.0 * row["stderr"] + tol + row["tail_bound"]))
        rows.append(row)
    return {"n": n, "rows": rows}, checks


def run_crosscheck(task, ctx):
    n = task.get("n", measure_from_spec(ctx.measure_specs[task["measure"]]).dim)
    m = ctx.measure(task["measure"], n)
    dom = ctx.domain(task["domain"], n)
    F = source_from_spec(task["source"], n)
    lam = task["lambda"]
    grid = discretize(m, dom, **_grid_kw(task))
    sol = solve_dirichlet(m, grid, F, lam)
    cfg = ctx.paths(task)
    grid_tol = task.get("grid_tolerance", 0.01)
    rows, checks = [], []
    for i, x in enumerate(task["probes"]):
        xg = np.zeros(n)
        xg[: min(n, len(x))] = x[:n]
        ug = float(sol.evaluate(xg[None, :])[0])
        mc = resolvent_mc(m, dom, F, lam, xg, cfg)
        tol = 3.0 * mc.stderr + grid_tol + mc.tail_bound
        diff = abs(ug - mc.estimate)
        rows.append({"probe": x, "u_grid": ug, "mc": mc.to_dict(), "difference": diff,
                     "tolerance": tol})
        checks.append(check(f"probe {i}", diff, tol, "<="))
    return {"n": n, "grid_shape": list(grid.shape), "grid_tolerance": grid_tol, "rows": rows}, checks


def run_kernel(task, ctx):
    m = ctx.measure(task["measure"], task.get("n"))
    cfg = ctx.paths(task, h=0.25)
    out = kernel_check(m, task["T"], task["times"], cfg)
    limit = task.get("max_deviation", 4.0)
    spot = float(kernel_g(1.0, 1.0))
    checks = [check("max deviation (stderr units)", out["max_deviation"], limit, "<"),
              check("g(1,1)", spot, 0.63212, "==", 5e-6)]
    return {"max_deviation": out["max_deviation"], "g_1_1": spot, "rows": out["rows"]}, checks


def run_convergence(task, ctx):
    dims = task["dims"]
    m = ctx.measure(task["measure"], max(dims))
    F = source_from_spec(task["source"], max(dims))
    cfg = ctx.paths(task)
    x = np.asarray(task["probe"], dtype=float)
    spec = ctx.domain_specs[task["domain"]]
    rows = cylindrical_convergence(m, lambda n: domain_from_spec(spec, n), F, task["lambda"], x,
                                   dims, cfg)
    checks = []
    ok = [r for r in rows if "estimate" in r]
    est = [r["estimate"] for r in ok]
    se = [r["stderr"] for r in ok]
    diffs = [abs(b - a) for a, b in zip(est, est[1:])]
    for i in range(1, len(diffs)):
        slack = 2.0 * float(np.hypot(se[i], se[i + 1]))
        checks.append(check(f"|U_{ok[i + 1]['n']} - U_{ok[i]['n']}| non-increasing", diffs[i],
                            diffs[i - 1], "<=", slack))
    result = {"rows": rows, "differences": diffs}
    if "control_domain" in task:
        cspec = ctx.domain_specs[task["control_domain"]]
        crow = cylindrical_convergence(m, lambda n: domain_from_spec(cspec, n), F, task["lambda"],
                                       x, dims, cfg)
        cest = [r["estimate"] for r in crow if "estimate" in r]
        spread = float(max(cest) - min(cest)) if cest else float("nan")
        result["control_rows"] = crow
        checks.append(check("control estimates identical across n", spread, 0.0, "==", 0.0))
    return result, checks


# -- integral functional ------------------------------------------------------

def run_integral_functional(task, ctx):
    spec = ctx.domain_specs[task["domain"]]
    m = ctx.measure(task["measure"])
    n = task.get("n", m.dim)
    hyp = spec.get("hypotheses", {"a": 1.0, "alpha": 0.0, "beta": 0.0})
    g = spec["g_1d"]
    g1d = Rational1D(g["numerator"], g.get("denominator", [1.0]))
    rng = np.random.default_rng(ctx.seed)
    dom, diag = integral_functional_domain(m, g1d, spec["r"], n, hyp["a"], hyp["alpha"], hyp["beta"],
                                           band_delta=spec.get("band_delta", 1.0), rng=rng,
                                           samples=task.get("samples", 256))
    pts, _ = sample_boundary(m, dom, rng, task.get("boundary_points", 256))
    h_special = integral_functional_h(m, dom, pts)
    h_generic = curvature_h(m, dom, pts, boundary_tol=1e-8)
    agree = float(np.max(np.abs(h_special - h_generic)) / max(1.0, float(np.max(np.abs(h_generic)))))
    tol = task.get("tolerance", 1e-8)
    checks = [
        check("|Q^{1/2} D G_n|^2 lower bound", diag.min_sampled_gradient_sq, diag.gradient_lower_bound,
              ">=", 1e-9 * diag.gradient_lower_bound),
        check("H_n <= h bound", float(np.max(h_special)), diag.h_bound, "<=",
              tol * max(1.0, diag.h_bound)),
        check("H_n via phi_n vs direct", agree, tol, "<="),
        check("profile inequality phi^2/|phi|_H^2 <= f_n", diag.inner_bound_max_excess, 0.0, "<=", tol),
    ]
    return {"n": n, "diagnostics": diag.to_dict(), "boundary_points": int(pts.shape[0]),
            "H_max": float(np.max(h_special)), "relative_disagreement": agree}, checks


# -- dimension sweep ----------------------------------------------------------

def _fmt(v):
    return "" if v is None else "%.17g" % v


def run_sweep(task, ctx):
    m = ctx.measure(task["measure"])
    spec = ctx.domain_specs[task["domain"]]
    cols = set(task["columns"])
    lam = task.get("lambda", 1.0)
    sp = _sphere_params(spec)
    rows = []
    for n in task["dims"]:
        row = dict.fromkeys(SWEEP_COLUMNS)
        row["n"] = n
        dom = domain_from_spec(spec, n)
        if "witness" in cols and sp is not None:
            try:
                row["witness"] = sphere_blowup_witness(m, sp[0], sp[1], n)
            except RadiusTooSmall:
                row["witness"] = float("nan")
        rep = None
        if cols & {"curvature", "w22"}:
            rep = constants_ABC(m, dom, ctx.sampler(task))
            row.update(sup_h=rep.C, A=rep.A, B=rep.B, C=rep.C,
                       K2=1.0 / lam**2 + 2.0 / lam + w22_constant(lam, rep.A, rep.B, rep.C))
        if "w22" in cols and n <= 3:
            sub = m.truncate(n) if m.dim > n else m
            f = source_from_spec(task.get("source", 1.0), n)
            sol = solve_dirichlet(sub, discretize(sub, dom, **_grid_kw(task)), f, lam)
            row["w22_ratio"] = check_w22_bound(sub, sol, rep)[0]
        if "mc" in cols:
            sub = m.truncate(n) if m.dim > n else m
            F = source_from_spec(task.get("source", 1.0), n)
            probe = np.zeros(n)
            p = task.get("probe", [0.0])
            probe[: min(n, len(p))] = p[:n]
            est = resolvent_mc(sub, dom, F, lam, probe, ctx.paths(task, n=n))
            row.update(mc_estimate=est.estimate, mc_stderr=est.stderr)
        rows.append(row)

    checks = []
    expect = task.get("expect", {})
    C = [r["C"] for r in rows if r["C"] is not None]
    W = [(r["n"], r["witness"]) for r in rows if r["witness"] is not None]
    if "C_max" in expect and C:
        checks.append(check("max C over the sweep", max(C), expect["C_max"], "<=", 1e-3))
    if "C_constant" in expect and C:
        checks.append(check("C constant across n", max(abs(c - expect["C_constant"]) for c in C), 0.0,
                            "<=", 1e-9 * max(1.0, abs(expect["C_constant"]))))
    if "witness_increasing_from" in expect:
        k = expect["witness_increasing_from"]
        tail = [w for n, w in W if n >= k]
        gap = min((b - a for a, b in zip(tail, tail[1:])), default=float("nan"))
        checks.append(check(f"witness strictly increasing for n >= {k}", gap, 0.0, ">"))
    if "witness_min_at_end" in expect and W:
        checks.append(check(f"witness at n = {W[-1][0]}", W[-1][1], expect["witness_min_at_end"], ">"))
    if "witness_at" in expect:
        wa = expect["witness_at"]
        w = dict(W).get(wa["n"], float("nan"))
        scale = wa.get("relative_to", 1.0)
        checks.append(check(f"witness at n = {wa['n']} (units of {scale:g})", w / scale, wa["value"],
                            "==", wa["tolerance"]))

    name = ctx.outputs.get("sweep", "sweep.csv")
    if "id" in task:
        stem, suffix = (name.rsplit(".", 1) + ["csv"])[:2]
        name = f"{stem}_{task['id']}.{suffix}"
    path = ctx.write_path(name)
    if path is not None:
        with open(path, "w", newline="") as fh:
            fh.write("# " + "; ".join(f"{c}: {SWEEP_DOC[c]}" for c in SWEEP_COLUMNS) + "\n")
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(SWEEP_COLUMNS)
            for r in rows:
                writer.writerow([str(r["n"])] + [_fmt(r[c]) for c in SWEEP_COLUMNS[1:]])
    return {"columns": list(SWEEP_COLUMNS), "column_doc": SWEEP_DOC, "csv": name if path else None,
            "rows": rows}, checks


RUNNERS = {
    "curvature": run_curvature,
    "solve": run_solve,
    "boundary_identity": run_boundary_identity,
    "mc": run_mc,
    "sweep": run_sweep,
    "crosscheck": run_crosscheck,
    "kernel": run_kernel,
    "convergence": run_convergence,
    "integral_functional": run_integral_functional,
}
