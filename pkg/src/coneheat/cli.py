"""Command-line front end: every operation as a subcommand emitting one table.

Output is CSV (17 significant digits, '\\n' line endings, a ``#`` metadata
block above the header) or JSON with the same numbers. Exit status is 0 when
every gate passes, 1 when a gate fails and 2 on usage or domain errors.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from typing import Any, Sequence

import numpy as np

from . import __version__
from .acceptance import DEFAULT_SEED, probe_rng, run_all
from .cone_kernel import (
    DEFAULT_QUAD,
    ConeGeometry,
    ConePoint,
    DerivOp,
    carslaw_P,
    delta_convergence,
    discontinuity_distance,
    heat_residual,
    kernel_full,
    mass_integral,
    p_series,
    semigroup_check,
    weber_check,
)
from .errors import ConeHeatError
from .estimator import (
    DEFAULT_CFG,
    decay_exponent_scan,
    e_decay_stability,
    far_field_gradient_check,
    g_sum,
    g_sum_exponent_scan,
    grad_dt_op,
    grad_op,
    green_function,
    holder_exponent_scan,
)
from .quad import QuadConfig
from .solver import (
    angular_bump,
    constant_source,
    gaussian_bump,
    holder_bump,
    probe,
    schauder_stability,
)


class UsageError(Exception):
    pass


class Table:
    def __init__(self, columns: Sequence[str], rows: list[list[Any]], passed: bool = True,
                 meta: dict[str, Any] | None = None, failure: str = ""):
        self.columns = list(columns)
        self.rows = rows
        self.passed = passed
        self.meta = meta or {}
        self.failure = failure


# ---------------------------------------------------------------------------
# argument helpers


def _reals(text: str) -> list[float]:
    try:
        return [float(a) for a in text.split(",") if a.strip() != ""]
    except ValueError as exc:
        raise UsageError(f"expected comma-separated reals, got {text!r}") from exc


def _point(text: str, geom: ConeGeometry) -> ConePoint:
    vals = _reals(text)
    if len(vals) != 2 + geom.m:
        raise UsageError(f"a point needs r,theta plus {geom.m} tangential coordinates")
    return ConePoint(vals[0], vals[1], tuple(vals[2:]))


def _geom(ns) -> ConeGeometry:
    return ConeGeometry(ns.beta, ns.m)


def _qcfg(ns, default: QuadConfig) -> QuadConfig:
    return default.with_(abs_tol=ns.abs_tol if ns.abs_tol is not None else default.abs_tol,
                         rel_tol=ns.rel_tol if ns.rel_tol is not None else default.rel_tol)


_OPS = {
    "d_r": lambda m: DerivOp("d_r"),
    "d_theta_over_r": lambda m: DerivOp("d_theta_over_r"),
    "d_t": lambda m: DerivOp("d_t"),
    "d_r_dtheta_over_r": lambda m: DerivOp("d_r_dtheta_over_r"),
    "d_r_dsi": lambda m: DerivOp("d_r_dsi", 0),
    "d_t_dr": lambda m: DerivOp("d_t_dr"),
    "grad": grad_op,
    "grad_dt": grad_dt_op,
}


def _op(name: str, m: int):
    if name not in _OPS:
        raise UsageError(f"unknown operator {name!r}; choose from {', '.join(_OPS)}")
    return _OPS[name](m)


# ---------------------------------------------------------------------------
# subcommands


def cmd_eval(ns) -> Table:
    g = _geom(ns)
    kv = kernel_full(g, _point(ns.x, g), _point(ns.y, g), ns.t, _qcfg(ns, DEFAULT_QUAD))
    return Table(["value", "err_estimate", "rep"], [[kv.value, kv.err_estimate, kv.rep]])


def cmd_compare_reps(ns) -> Table:
    rng = probe_rng(ns.seed, 1)
    cfg = _qcfg(ns, DEFAULT_QUAD)
    rows, ok = [], True
    while len(rows) < ns.samples:
        z = float(rng.uniform(0.0, ns.z_max))
        v = float(rng.uniform(-ns.beta * math.pi, ns.beta * math.pi))
        if discontinuity_distance(v, ns.beta) < 1e-6:
            continue
        ps, _ = p_series(z, v, ns.beta)
        pc, _ = carslaw_P(z, v, ns.beta, cfg)
        gap = abs(ps - pc)
        ok &= gap <= 1e-8 * max(1.0, abs(ps))
        rows.append([z, v, ps, pc, gap])
    return Table(["z", "v", "P_series", "P_carslaw", "gap"], rows, ok, failure="representation gap above 1e-8 |P|")


def cmd_heat_residual(ns) -> Table:
    rng = probe_rng(ns.seed, 3)
    g = _geom(ns)
    rows, ok = [], True
    for _ in range(ns.samples):
        x = ConePoint(float(rng.uniform(0.2, 2.0)), float(rng.uniform(-math.pi, math.pi)), tuple(rng.uniform(-0.5, 0.5, g.m)))
        y = ConePoint(float(rng.uniform(0.2, 2.0)), float(rng.uniform(-math.pi, math.pi)), tuple(rng.uniform(-0.5, 0.5, g.m)))
        t = float(rng.uniform(0.2, 2.0))
        hr = heat_residual(g, x, y, t, ns.h, _qcfg(ns, DEFAULT_QUAD))
        ok &= hr.passed
        rows.append([x.r, x.theta, y.r, y.theta, t, hr.residual_h, hr.residual_h2, hr.ratio])
    return Table(["r", "theta", "rp", "thetap", "t", "residual_h", "residual_h2", "ratio"], rows, ok,
                 failure="residual ratio outside [3.5, 4.5]")


def cmd_mass(ns) -> Table:
    g = _geom(ns)
    x = _point(ns.x, g)
    rows, ok = [], True
    for t in _reals(ns.t):
        val, err = mass_integral(g, x, t, cfg=_qcfg(ns, DEFAULT_QUAD))
        ok &= abs(val - 1.0) <= 1e-6
        rows.append([t, val, err])
    return Table(["t", "mass", "err_estimate"], rows, ok, failure="mass differs from 1 by more than 1e-6")


def cmd_semigroup(ns) -> Table:
    g = _geom(ns)
    lhs, rhs, gap = semigroup_check(g, _point(ns.x, g), _point(ns.y, g), ns.t1, ns.t2, cfg=_qcfg(ns, DEFAULT_QUAD))
    return Table(["t1", "t2", "lhs", "rhs", "relative_gap"], [[ns.t1, ns.t2, lhs, rhs, gap]], gap <= 1e-4,
                 failure="semigroup gap above 1e-4")


def cmd_delta(ns) -> Table:
    g = _geom(ns)
    dc = delta_convergence(g, _point(ns.x, g), _reals(ns.ts), cfg=_qcfg(ns, DEFAULT_QUAD))
    ok = abs(dc.slope - 1.0) <= 0.2
    return Table(["t", "error"], [[t, e] for t, e in zip(dc.ts, dc.errors)], ok, {"slope": dc.slope},
                 failure="delta convergence not linear in t")


def cmd_weber(ns) -> Table:
    lhs, rhs, gap = weber_check(ns.mu, ns.r, ns.rp, ns.t)
    return Table(["mu", "r", "rp", "t", "lhs", "rhs", "gap"], [[ns.mu, ns.r, ns.rp, ns.t, lhs, rhs, gap]],
                 gap <= 1e-6, failure="Weber gap above 1e-6")


def cmd_green(ns) -> Table:
    g = _geom(ns)
    val, err = green_function(g, _point(ns.x, g), _point(ns.y, g), _qcfg(ns, DEFAULT_CFG))
    return Table(["value", "err_estimate"], [[val, err]])


def cmd_decay_scan(ns) -> Table:
    g = _geom(ns)
    op = _op(ns.op, g.m)
    direction = _reals(ns.direction) if ns.direction else [0.6, 0.8] + [0.0] * g.m
    radii = np.geomspace(ns.radius_min, ns.radius_max, ns.count)
    rep = decay_exponent_scan(g, op, direction, radii, _qcfg(ns, DEFAULT_CFG), mode=ns.mode)
    rows = [[math.exp(a), math.exp(b)] for a, b in rep.fitted.points]
    meta = {"slope": rep.fitted.slope, "r2": rep.fitted.r2, "target": rep.target_exponent, "mode": ns.mode}
    return Table(["distance", "time_integral_norm"], rows, rep.passed, meta, failure="decay slope outside tolerance")


def cmd_holder_scan(ns) -> Table:
    g = _geom(ns)
    y = _point(ns.y, g) if ns.y else ConePoint(1.0, 0.3, (0.0,) * g.m)
    scan = holder_exponent_scan(g, _op(ns.op, g.m), y, cfg=_qcfg(ns, DEFAULT_CFG))
    meta = {"rho": g.rho, "slope": scan.report.fitted.slope, "r2": scan.report.fitted.r2,
            "envelope_constant": scan.envelope_constant, "envelope_ok": scan.envelope_ok}
    return Table(["delta", "modulus"], [list(p) for p in zip(scan.deltas, scan.values)],
                 scan.report.passed and scan.envelope_ok, meta, failure="Hoelder slope or envelope failed")


def cmd_e_decay(ns) -> Table:
    zmax = _reals(ns.z_max)
    if len(zmax) != 2:
        raise UsageError("--z-max needs two values")
    st = e_decay_stability(ns.beta, ns.p, ns.n, ns.dv, (zmax[0], zmax[1]), ns.form)
    ok = math.isfinite(st.sup_large) and st.rel_change < 0.01
    row = [ns.p, ns.n, int(ns.dv), st.sup_small, st.sup_large, st.rel_change, st.where_large[0], st.where_large[1]]
    return Table(["p", "n", "dv", "sup_small", "sup", "rel_change", "z_at", "v_at"], [row], ok, {"form": ns.form},
                 failure="supremum changed by 1% or more when z_max doubled")


def cmd_g_sum(ns) -> Table:
    Rs = _reals(ns.R) if ns.R else list(np.geomspace(1.0, 10.0, 7))
    rep = g_sum_exponent_scan(ns.beta, ns.v, ns.r, ns.rp, Rs)
    rows = [[R, g_sum(ns.beta, ns.v, ns.r, ns.rp, R)[0]] for R in Rs]
    meta = {"slope": rep.fitted.slope, "r2": rep.fitted.r2, "target": rep.target_exponent}
    return Table(["R", "g_sum"], rows, rep.passed, meta, failure="G-sum exponent outside tolerance")


def cmd_far_field(ns) -> Table:
    s_values = _reals(ns.s)
    res = far_field_gradient_check(_geom(ns), s_values)
    drops = [a - b for a, b in zip(res.log_max_grad, res.log_max_grad[1:])]
    # halving s from s0 must lower the log by at least 0.9 / s0 = 0.9 (1/s1 - 1/s0)
    ok = res.bound_ok and all(d >= 0.9 * (1.0 / s1 - 1.0 / s0) for d, s0, s1 in zip(drops, s_values, s_values[1:]))
    rows = [[s, lg, lb] for s, lg, lb in zip(res.s_values, res.log_max_grad, res.log_bound)]
    return Table(["s", "log_max_grad", "log_bound"], rows, ok, failure="far-field decay too slow")


_SOURCES = {
    "gaussian": lambda ns: gaussian_bump(),
    "holder": lambda ns: holder_bump(ns.alpha),
    "angular": lambda ns: angular_bump(),
    "constant": lambda ns: constant_source(1.0),
}


def cmd_solve(ns) -> Table:
    g = _geom(ns)
    src = _SOURCES[ns.source](ns)
    pr = probe(g, src, _point(ns.x, g), ns.t)
    mixed = pr.second_derivs.get("d_r_dtheta_over_r", (math.nan, math.nan))
    row = [pr.x.r, pr.x.theta, pr.t, *pr.u, *pr.du_dt, *mixed]
    return Table(["r", "theta", "t", "u", "u_err", "du_dt", "du_dt_err", "d_r_dtheta_over_r", "mixed_err"], [row])


def cmd_schauder(ns) -> Table:
    g = _geom(ns)
    st = schauder_stability(g, holder_bump(ns.alpha), ns.t, _reals(ns.deltas))
    meta = {"drift": st.drift, "in_hypothesis": st.in_hypothesis}
    rows = [[d, r] for d, r in zip(st.deltas, st.ratios)]
    return Table(["delta", "ratio"], rows, st.passed, meta, failure="Schauder ratio drifted by 2x or more")


def cmd_selftest(ns) -> Table:
    only = [int(a) for a in _reals(ns.only)] if ns.only else None
    results = run_all(ns.seed, only, stream=sys.stderr)
    rows = [[r.number, int(r.passed), r.seconds, r.detail] for r in results]
    failed = [str(r.number) for r in results if not r.passed]
    return Table(["criterion", "passed", "seconds", "detail"], rows, not failed,
                 failure="criteria failed: " + ",".join(failed))


# ---------------------------------------------------------------------------
# parser and output


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--beta", type=float, default=0.7)
    p.add_argument("--m", type=int, default=0)
    p.add_argument("--abs-tol", type=float, default=None)
    p.add_argument("--rel-tol", type=float, default=None)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", default=None)
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="coneheat", description="Heat kernel of the flat cone: evaluation and estimates.")
    parser.add_argument("--version", action="version", version=f"coneheat {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    c = _common()

    def add(name, fn, help_):
        sp = sub.add_parser(name, parents=[c], help=help_)
        sp.set_defaults(fn=fn)
        return sp

    sp = add("eval", cmd_eval, "kernel value H(x, y, t)")
    sp.add_argument("--x", required=True)
    sp.add_argument("--y", required=True)
    sp.add_argument("--t", type=float, required=True)
    sp = add("compare-reps", cmd_compare_reps, "series against Carslaw on seeded (z, v)")
    sp.add_argument("--samples", type=int, default=200)
    sp.add_argument("--z-max", type=float, default=50.0)
    sp = add("heat-residual", cmd_heat_residual, "finite-difference heat residual under step halving")
    sp.add_argument("--samples", type=int, default=20)
    sp.add_argument("--h", type=float, default=0.02)
    sp = add("mass", cmd_mass, "total mass of H(x, ., t) (m = 0)")
    sp.add_argument("--x", default="0.5,0")
    sp.add_argument("--t", default="0.3,1")
    sp = add("semigroup", cmd_semigroup, "semigroup identity (m = 0)")
    sp.add_argument("--x", default="0.8,0.2")
    sp.add_argument("--y", default="1.2,2.5")
    sp.add_argument("--t1", type=float, default=0.3)
    sp.add_argument("--t2", type=float, default=0.5)
    sp = add("delta", cmd_delta, "delta convergence off the vertex (m = 0)")
    sp.add_argument("--x", default="0.9,1")
    sp.add_argument("--ts", default="0.1,0.05,0.025")
    sp = add("weber", cmd_weber, "Weber's formula gap")
    sp.add_argument("--mu", type=float, default=0.0)
    sp.add_argument("--r", type=float, default=1.0)
    sp.add_argument("--rp", type=float, default=1.0)
    sp.add_argument("--t", type=float, default=1.0)
    sp = add("green", cmd_green, "Green function int H dt (m >= 2)")
    sp.add_argument("--x", required=True)
    sp.add_argument("--y", required=True)
    sp = add("decay-scan", cmd_decay_scan, "decay exponent of a time-integrated derivative norm")
    sp.add_argument("--op", default="d_t")
    sp.add_argument("--direction", default=None)
    sp.add_argument("--radius-min", type=float, default=0.1)
    sp.add_argument("--radius-max", type=float, default=10.0)
    sp.add_argument("--count", type=int, default=7)
    sp.add_argument("--mode", choices=("scaled", "fixed"), default="scaled")
    sp = add("holder-scan", cmd_holder_scan, "Hoelder exponent of derivative differences near the vertex")
    sp.add_argument("--op", default="d_r")
    sp.add_argument("--y", default=None)
    sp = add("e-decay", cmd_e_decay, "supremum of weighted z-derivatives of E")
    sp.add_argument("--p", type=float, default=0.0)
    sp.add_argument("--n", type=int, default=0)
    sp.add_argument("--dv", action="store_true")
    sp.add_argument("--form", choices=("theorem", "scaled"), default="theorem")
    sp.add_argument("--z-max", default="500,1000")
    sp = add("g-sum", cmd_g_sum, "R-exponent of the weighted Bessel sum")
    sp.add_argument("--v", type=float, default=2.0)
    sp.add_argument("--r", type=float, default=0.3)
    sp.add_argument("--rp", type=float, default=0.3)
    sp.add_argument("--R", default=None)
    sp = add("far-field", cmd_far_field, "far-field gradient decay in 1/s")
    sp.add_argument("--s", default="1e-4,5e-5")
    sp = add("solve", cmd_solve, "convolution solution and second derivatives (m = 0)")
    sp.add_argument("--x", default="0.5,0")
    sp.add_argument("--t", type=float, default=0.5)
    sp.add_argument("--source", choices=tuple(_SOURCES), default="gaussian")
    sp.add_argument("--alpha", type=float, default=0.2)
    sp = add("schauder", cmd_schauder, "Schauder ratio under halving of vertex-adjacent separations")
    sp.add_argument("--alpha", type=float, default=0.2)
    sp.add_argument("--t", type=float, default=0.5)
    sp.add_argument("--deltas", default="0.2,0.1,0.05,0.025")
    sp = add("selftest", cmd_selftest, "run the acceptance suite")
    sp.add_argument("--only", default=None, help="comma-separated criterion numbers")
    return parser


def _fmt(v: Any) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    text = str(v)
    if any(ch in text for ch in ',"\n'):
        text = '"' + text.replace('"', '""') + '"'
    return text


def _json_value(v: Any) -> Any:
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        f = float(f"{float(v):.17g}")
        return f if math.isfinite(f) else str(f)
    return v


def render(table: Table, meta: dict[str, Any], fmt: str) -> str:
    meta = {**meta, **table.meta, "passed": table.passed}
    if fmt == "json":
        doc = {"metadata": {k: _json_value(v) for k, v in meta.items()}, "columns": table.columns,
               "rows": [[_json_value(v) for v in row] for row in table.rows]}
        return json.dumps(doc, indent=2) + "\n"
    lines = [f"# {k}: {_fmt(v)}" for k, v in meta.items()]
    lines.append(",".join(table.columns))
    lines += [",".join(_fmt(v) for v in row) for row in table.rows]
    return "\n".join(lines) + "\n"


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    try:
        if ns.m < 0 or ns.m % 2:
            raise UsageError("--m must be an even nonnegative integer")
        table = ns.fn(ns)
    except (UsageError, ConeHeatError, ValueError) as exc:
        print(f"coneheat {ns.command}: {exc}", file=sys.stderr)
        return 2
    meta = {"command": ns.command, "version": __version__, "beta": ns.beta, "m": ns.m,
            "abs_tol": ns.abs_tol if ns.abs_tol is not None else "default",
            "rel_tol": ns.rel_tol if ns.rel_tol is not None else "default", "seed": ns.seed}
    text = render(table, meta, ns.format)
    if ns.out:
        with open(ns.out, "w", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if not table.passed:
        print(f"coneheat {ns.command}: gate failed: {table.failure}", file=sys.stderr)
        return 1
    return 0


def main() -> None:
    sys.exit(run())
