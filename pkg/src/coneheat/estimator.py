"""Quantitative functionals of the cone heat kernel and exponent fits.

Bounds of the form ``<= C f(delta)`` with an unspecified constant are
checked through their exponent: values are sampled on a geometric ladder
and the log-log slope is fitted by least squares.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np

from . import specfun
from .cone_kernel import (
    ConeGeometry,
    ConePoint,
    DerivOp,
    cone_distance,
    discontinuity_distance,
    e_scaled,
    gradient_components,
    gradient_dt_components,
    kernel_derivative,
    kernel_derivative_grid,
    kernel_full,
    log_gradient_norm,
    series_terms_needed,
)
from .errors import DomainError, PreconditionError, UnsupportedConfigurationError
from .quad import QuadConfig, gauss_legendre, integrate_finite, integrate_time_kernel

DEFAULT_CFG = QuadConfig(abs_tol=1e-13, rel_tol=1e-9, max_subdiv=4000)


# ---------------------------------------------------------------------------
# fits and reports


@dataclass(frozen=True)
class ExponentFit:
    slope: float
    intercept: float
    r2: float
    points: tuple[tuple[float, float], ...]


@dataclass(frozen=True)
class EstimateReport:
    """Outcome of an exponent check.

    ``mode="equal"`` passes when ``|slope - target| <= tolerance`` and
    ``r2 >= 0.98``; ``mode="at_least"`` (upper moduli) passes when
    ``slope >= target - tolerance`` and ``r2 >= 0.98``.
    """

    target_exponent: float
    fitted: ExponentFit
    passed: bool
    tolerance: float
    mode: str = "equal"
    note: str = ""


R2_GATE = 0.98


def fit_exponent(xs: Sequence[float], ys: Sequence[float]) -> ExponentFit:
    """Least-squares line through (log x, log |y|)."""
    xs = np.asarray(xs, float)
    ys = np.abs(np.asarray(ys, float))
    if xs.size < 4:
        raise DomainError("an exponent fit needs at least 4 points")
    if np.any(xs <= 0) or np.any(ys <= 0):
        raise DomainError("log-log fit needs positive abscissae and nonzero values")
    lx, ly = np.log(xs), np.log(ys)
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 1.0
    return ExponentFit(float(slope), float(intercept), max(0.0, min(1.0, r2)), tuple(zip(lx.tolist(), ly.tolist())))


def make_report(fit: ExponentFit, target: float, tolerance: float, mode: str = "equal", note: str = "") -> EstimateReport:
    if mode == "equal":
        ok = abs(fit.slope - target) <= tolerance
    elif mode == "at_least":
        ok = fit.slope >= target - tolerance
    else:
        raise DomainError("mode must be 'equal' or 'at_least'")
    return EstimateReport(target, fit, bool(ok and fit.r2 >= R2_GATE), tolerance, mode, note)


# ---------------------------------------------------------------------------
# operators: a single DerivOp or the Euclidean norm of several


@dataclass(frozen=True)
class VectorOp:
    """Pointwise Euclidean norm of several component operators."""

    components: tuple[DerivOp, ...]
    name: str

    @property
    def order(self) -> int:
        return self.components[0].order


def grad_op(m: int) -> VectorOp:
    return VectorOp(gradient_components(m), "grad_x")


def grad_dt_op(m: int) -> VectorOp:
    return VectorOp(gradient_dt_components(m), "grad_x d_t")


AnyOp = Union[DerivOp, VectorOp]


def _components(op: AnyOp) -> tuple[DerivOp, ...]:
    return op.components if isinstance(op, VectorOp) else (op,)


def _is_grad_dt(op: AnyOp) -> bool:
    return all(c.kind.startswith("d_t_d") and c.kind != "d_t_dt" for c in _components(op))


def op_value(geom: ConeGeometry, op: AnyOp, x: ConePoint, y: ConePoint, t: float, cfg: QuadConfig | None = None) -> float:
    """Signed value for a DerivOp, nonnegative norm for a VectorOp."""
    kw = {} if cfg is None else {"cfg": cfg}
    if isinstance(op, DerivOp):
        return kernel_derivative(geom, op, x, y, t, **kw)[0]
    return math.sqrt(sum(kernel_derivative(geom, c, x, y, t, **kw)[0] ** 2 for c in op.components))


def _abs_in_time(geom, op, x, y):
    def g(ts: np.ndarray) -> np.ndarray:
        return np.array([abs(op_value(geom, op, x, y, float(t))) for t in ts])

    return g


# ---------------------------------------------------------------------------
# time-integrated norms and the Green function


def time_integral_norm(geom: ConeGeometry, op: AnyOp, x: ConePoint, y: ConePoint,
                       cfg: QuadConfig = DEFAULT_CFG) -> tuple[float, float]:
    """``int_0^inf |op H(x, y, tau)| dtau``.

    Order (with d_t counted twice) must be at most 2, or 3 for the
    gradient of the time derivative, which is bounded for every x and y.
    """
    x.check(geom), y.check(geom)
    d = cone_distance(geom, x, y)
    if d == 0.0:
        raise DomainError("time_integral_norm needs x != y")
    order = op.order
    if order > 3 or (order == 3 and not _is_grad_dt(op)):
        raise PreconditionError(f"operators of order {order} are outside the time-integrated bound")
    power = 0.5 * (geom.m + 2) + order
    res = integrate_time_kernel(_abs_in_time(geom, op, x, y), power, cfg, c=d * d / 4.0)
    err = res.err_estimate if res.converged else max(res.err_estimate, 1e-6 * abs(res.value))
    return res.value, err


def green_function(geom: ConeGeometry, x: ConePoint, y: ConePoint, cfg: QuadConfig = DEFAULT_CFG) -> tuple[float, float]:
    """``G(x, y) = int_0^inf H(x, y, t) dt`` for m >= 2."""
    if geom.m < 2:
        raise DomainError("the Green function int H dt diverges for m = 0")
    x.check(geom), y.check(geom)
    d = cone_distance(geom, x, y)
    if d == 0.0:
        raise DomainError("green_function needs x != y")

    def g(ts: np.ndarray) -> np.ndarray:
        return np.array([kernel_full(geom, x, y, float(t)).value for t in ts])

    res = integrate_time_kernel(g, 0.5 * (geom.m + 2), cfg, c=d * d / 4.0)
    return res.value, res.err_estimate


def displaced_point(geom: ConeGeometry, x: ConePoint, direction: Sequence[float], rho: float) -> ConePoint:
    """Point at x + rho * direction in the developed chart centred on x's angle.

    ``direction`` has m + 2 entries (the first two span the cone's plane).
    A planar polar angle beyond the sector is folded back into [-pi, pi).
    """
    d = np.asarray(direction, float)
    if d.size != geom.m + 2:
        raise DomainError("direction needs m + 2 components")
    nrm = float(np.linalg.norm(d))
    if nrm == 0:
        raise DomainError("direction must be nonzero")
    d = d / nrm
    X = np.array([x.r, 0.0]) + rho * d[:2]
    r = math.hypot(X[0], X[1])
    phi = math.atan2(X[1], X[0])
    s = tuple(np.asarray(x.shat) + rho * d[2:])
    return ConePoint(r, x.theta + phi / geom.beta, s)


def decay_exponent_scan(geom: ConeGeometry, op: AnyOp, direction: Sequence[float], radii: Sequence[float],
                        cfg: QuadConfig = DEFAULT_CFG, x0: ConePoint | None = None,
                        mode: str = "scaled", tolerance: float = 0.05) -> EstimateReport:
    """Fit ``log time_integral_norm`` against ``log |x - y|``.

    ``mode="scaled"`` dilates the pair ``(x0, x0 + direction)`` by each
    radius, the configuration in which the bound is uniform; ``mode="fixed"``
    keeps ``x0`` and moves ``y = x0 + radius * direction``. The target slope
    is ``-(m + order)``.
    """
    radii = np.asarray(radii, float)
    if radii.size < 5 or radii.max() / radii.min() < 10.0:
        raise DomainError("radii must contain at least 5 values spanning a decade")
    x0 = x0 if x0 is not None else ConePoint(0.5, 0.0, (0.0,) * geom.m)
    x0.check(geom)
    dist, vals = [], []
    for rho in radii:
        if mode == "scaled":
            x = x0.scaled(rho)
            y = displaced_point(geom, x0, direction, 1.0).scaled(rho)
        elif mode == "fixed":
            x = x0
            y = displaced_point(geom, x0, direction, rho)
        else:
            raise DomainError("mode must be 'scaled' or 'fixed'")
        dist.append(cone_distance(geom, x, y))
        vals.append(time_integral_norm(geom, op, x, y, cfg)[0])
    fit = fit_exponent(dist, vals)
    return make_report(fit, -(geom.m + op.order), tolerance)


# ---------------------------------------------------------------------------
# Hoelder moduli near the vertex


def holder_modulus(geom: ConeGeometry, op: AnyOp, y: ConePoint, u1: ConePoint, u2: ConePoint,
                   cfg: QuadConfig = DEFAULT_CFG) -> tuple[float, float]:
    """``int_0^inf |op H(u1, y, tau) - op H(u2, y, tau)| dtau`` for |y| = 1, |u| < 1/8."""
    for p in (y, u1, u2):
        p.check(geom)
    if abs(math.hypot(y.r, *y.shat) - 1.0) > 1e-12:
        raise DomainError("holder_modulus needs |y| = 1")
    for u in (u1, u2):
        if math.hypot(u.r, *u.shat) >= 0.125:
            raise DomainError("holder_modulus needs |u| < 1/8")
    if u1 == u2:
        return 0.0, 0.0

    def g(ts: np.ndarray) -> np.ndarray:
        return np.array([abs(op_value(geom, op, u1, y, float(t)) - op_value(geom, op, u2, y, float(t))) for t in ts])

    c = min(cone_distance(geom, u1, y), cone_distance(geom, u2, y)) ** 2 / 4.0
    res = integrate_time_kernel(g, 0.5 * (geom.m + 2) + op.order, cfg, c=c)
    return res.value, res.err_estimate


@dataclass(frozen=True)
class HolderScan:
    deltas: tuple[float, ...]
    values: tuple[float, ...]
    report: EstimateReport
    envelope_ok: bool
    envelope_constant: float


def holder_exponent_scan(geom: ConeGeometry, op: AnyOp, y: ConePoint, theta0: float = 0.0,
                         ks: Iterable[int] = range(3, 9), cfg: QuadConfig = DEFAULT_CFG,
                         slack: float = 1.1) -> HolderScan:
    """Hoelder modulus over separations delta = 2^-k for self-similar pairs.

    The pair sits on the circle of radius ``c delta`` around the vertex at
    cone angles differing by a quarter turn, so ``|u1 - u2| = delta`` and
    both points scale with delta. The slope must be at least rho - 0.05.
    The envelope constant is fixed at the coarsest separation and every
    finer pair must stay below ``slack * C delta^rho``.
    """
    rho = geom.rho
    dth = 0.5 * math.pi / geom.beta
    c = 1.0 / (2.0 * math.sin(math.pi / 4))
    deltas, vals = [], []
    for k in ks:
        delta = 2.0 ** (-k)
        s0 = (0.0,) * geom.m
        u1 = ConePoint(c * delta, theta0, s0)
        u2 = ConePoint(c * delta, theta0 + dth, s0)
        deltas.append(delta)
        vals.append(holder_modulus(geom, op, y, u1, u2, cfg)[0])
    fit = fit_exponent(deltas, vals)
    report = make_report(fit, rho, 0.05, "at_least")
    C = vals[0] / deltas[0] ** rho
    env = all(v <= slack * C * d ** rho for d, v in zip(deltas, vals))
    return HolderScan(tuple(deltas), tuple(vals), report, env, C)


# ---------------------------------------------------------------------------
# Bessel-weighted time integrals


def g_weighted(mu: float, v_exp: float, h: float, r: float, rp: float, R: float,
               cfg: QuadConfig = DEFAULT_CFG) -> tuple[float, float]:
    """``pi int_0^inf (2 pi t)^-v (r r'/2t)^h e^{-(r^2+r'^2+R^2)/4t} I_mu(r r'/2t) dt``."""
    if v_exp <= 0:
        raise DomainError("v_exp must be positive")
    if mu < 0 or min(r, rp, R) < 0:
        raise DomainError("mu, r, r', R must be nonnegative")
    if r * rp == 0.0:
        if mu > 0 or h > 0:
            return 0.0, 0.0
        if h < 0:
            raise DomainError("z^h diverges at z = 0 for h < 0")
        if R == 0 or v_exp <= 1:
            raise DomainError("integral diverges")
        val = math.pi * (2 * math.pi) ** (-v_exp) * (R * R / 4.0) ** (1.0 - v_exp) * math.gamma(v_exp - 1.0)
        return val, 1e-15 * val
    _g_checks(mu, v_exp, h, r, rp, R)
    return _g_integral(lambda z: specfun.ive(mu, z), v_exp, h, r, rp, R, cfg)


def _g_checks(mu, v_exp, h, r, rp, R):
    if (r - rp) ** 2 + R * R == 0:
        raise DomainError("integral diverges at t = 0 when r = r' and R = 0")
    if v_exp + h + mu <= 1:
        raise DomainError("integral diverges at t = infinity")


def _g_integral(scaled_bessel, v_exp, h, r, rp, R, cfg):
    c = ((r - rp) ** 2 + R * R) / 4.0

    def g(ts: np.ndarray) -> np.ndarray:
        z = r * rp / (2 * ts)
        return (math.pi * (2 * math.pi * ts) ** (-v_exp) * z ** h
                * np.exp(-c / ts) * scaled_bessel(z))

    res = integrate_time_kernel(g, v_exp, cfg, c=c)
    return res.value, res.err_estimate


def g_sum(beta: float, v_exp: float, r: float, rp: float, R: float, cfg: QuadConfig = DEFAULT_CFG) -> tuple[float, float]:
    """``sum_{k>=1} k G_{k/beta - 1, v, 1 - 1/beta}`` with the sum inside the time integral.

    The order-k terms are truncated where the scaled tail majorant drops
    below 1e-17 of the leading term; that bound is added to the error.
    """
    h = 1.0 - 1.0 / beta
    _g_checks(1.0 / beta - 1.0, v_exp, h, r, rp, R)

    def summed(z: np.ndarray) -> np.ndarray:
        zmax = float(np.max(z))
        K, _ = series_terms_needed(zmax, beta, tol=1e-18)
        k = np.arange(1, K + 2, dtype=float)
        iv = specfun.ive(k[None, :] / beta - 1.0, z[:, None])
        return iv @ k

    return _g_integral(summed, v_exp, h, r, rp, R, cfg)


def g_sum_exponent_scan(beta: float, v_exp: float, r: float = 0.3, rp: float = 0.3,
                        Rs: Sequence[float] = tuple(np.geomspace(1.0, 10.0, 7)),
                        cfg: QuadConfig = DEFAULT_CFG, tolerance: float = 0.1) -> EstimateReport:
    """R-exponent of the G-sum in the regime r r' < 9 R^2 / 10; target 2 - 2v."""
    Rs = np.asarray(Rs, float)
    if np.any(r * rp >= 0.9 * Rs ** 2):
        raise DomainError("every R must satisfy r r' < 9 R^2 / 10")
    vals = [g_sum(beta, v_exp, r, rp, float(R), cfg)[0] for R in Rs]
    return make_report(fit_exponent(Rs, vals), 2.0 - 2.0 * v_exp, tolerance)


# ---------------------------------------------------------------------------
# decay of the contour term


def e_decay_grid_z(z_max: float, per_decade: int = 20, z_min: float = 1e-3) -> np.ndarray:
    """Nested logarithmic z-grid: 10^(k/per_decade) up to z_max, plus z_max."""
    k0 = int(math.floor(per_decade * math.log10(z_min)))
    k1 = int(math.floor(per_decade * math.log10(z_max) + 1e-12))
    grid = 10.0 ** (np.arange(k0, k1 + 1) / per_decade)
    if grid[-1] < z_max * (1 - 1e-12):
        grid = np.append(grid, z_max)
    return grid


def e_decay_grid_v(beta: float, n: int = 48, margin: float = 1e-3) -> np.ndarray:
    """Uniform v-grid on [0, beta pi] (E is even in v) kept margin away from the jump set."""
    v = np.linspace(0.0, beta * math.pi, n + 1)
    keep = np.array([discontinuity_distance(float(x), beta) >= margin for x in v])
    return v[keep]


def _e_decay_values(beta, p, n, with_v, z_grid, v_grid, cfg, form) -> np.ndarray:
    """Weighted |z^p d^n ...| on the (v, z) grid; NaN where undefined (z = 0)."""
    from .cone_kernel import e_derivatives

    out = np.full((len(v_grid), len(z_grid)), np.nan)
    for a, v in enumerate(v_grid):
        if discontinuity_distance(float(v), beta) < 1e-3:
            raise DomainError("v_grid must keep a margin of 1e-3 from the jump set")
        for b, z in enumerate(z_grid):
            if z == 0.0 and (p > 0 or n >= 1.0 / beta):
                continue
            if form == "scaled":
                val = e_scaled(float(z), float(v), beta, n, with_v, cfg)[0]
            else:
                val = e_derivatives(float(z), float(v), beta, n, with_v, cfg)[0]
            out[a, b] = abs(val) * (z ** p if p else 1.0)
    return out


def _check_decay_args(beta, n, form, z_grid):
    if not (0 < beta <= 1):
        raise DomainError("beta must lie in (0, 1]")
    if n not in (0, 1, 2):
        raise DomainError("n must be 0, 1 or 2")
    if form not in ("scaled", "theorem"):
        raise DomainError("form must be 'scaled' or 'theorem'")
    if np.any(z_grid < 0) or np.any(z_grid > 1e3 * (1 + 1e-12)):
        raise DomainError("z_grid must lie in [0, 1000]")
    return math.sin(math.pi / beta) == 0.0 or abs(1 / beta - round(1 / beta)) < 1e-13


def _sup(vals: np.ndarray, z_grid, v_grid) -> tuple[float, tuple[float, float]]:
    if np.all(np.isnan(vals)):
        return 0.0, (math.nan, math.nan)
    a, b = np.unravel_index(np.nanargmax(vals), vals.shape)
    return float(vals[a, b]), (float(z_grid[b]), float(v_grid[a]))


def e_decay_scan(beta: float, p: float, n: int, with_v: bool, z_grid: Sequence[float], v_grid: Sequence[float],
                 cfg: QuadConfig | None = None, form: str = "scaled") -> tuple[float, tuple[float, float]]:
    """Grid supremum of a weighted z-derivative of E.

    ``form="scaled"`` measures ``z^p d^n/dz^n [e^z E]`` (the quantity the
    integral representation controls); ``form="theorem"`` measures
    ``z^p d^n/dz^n E`` itself. ``with_v`` adds one v-derivative.
    Returns the supremum and its (z, v) location; exactly 0 when 1/beta is
    an integer.
    """
    from .cone_kernel import DEFAULT_QUAD

    z_grid = np.asarray(z_grid, float)
    v_grid = np.asarray(v_grid, float)
    if _check_decay_args(beta, n, form, z_grid):
        return 0.0, (float(z_grid[0]), float(v_grid[0]))
    vals = _e_decay_values(beta, p, n, with_v, z_grid, v_grid, cfg or DEFAULT_QUAD, form)
    return _sup(vals, z_grid, v_grid)


@dataclass(frozen=True)
class EDecayStability:
    sup_small: float
    sup_large: float
    rel_change: float
    where_large: tuple[float, float]


def e_decay_stability(beta: float, p: float, n: int, with_v: bool, z_max: tuple[float, float] = (500.0, 1000.0),
                      form: str = "scaled", v_points: int = 48, cfg: QuadConfig | None = None) -> EDecayStability:
    """Suprema on nested grids up to z_max[0] and z_max[1] and their relative change."""
    from .cone_kernel import DEFAULT_QUAD

    vg = e_decay_grid_v(beta, v_points)
    zs = np.union1d(e_decay_grid_z(z_max[1]), [z_max[0]])
    if _check_decay_args(beta, n, form, zs):
        return EDecayStability(0.0, 0.0, 0.0, (math.nan, math.nan))
    vals = _e_decay_values(beta, p, n, with_v, zs, vg, cfg or DEFAULT_QUAD, form)
    small = zs <= z_max[0] * (1 + 1e-12)
    s1, _ = _sup(vals[:, small], zs[small], vg)
    s2, w2 = _sup(vals, zs, vg)
    rel = abs(s2 - s1) / s1 if s1 > 0 else (0.0 if s2 == 0 else math.inf)
    return EDecayStability(s1, s2, rel, w2)


# ---------------------------------------------------------------------------
# far-field gradient


def _polydisk_boundary(R: float, m: int, n_ang: int) -> list[tuple[float, tuple[float, ...]]]:
    """(r, s_hat) samples on the boundary of D_R x B_R (angle handled separately)."""
    if m == 0:
        return [(R, ())]
    pts = []
    fr = np.linspace(0.0, 1.0, 5)
    for f in fr:
        for k in range(n_ang):
            a = 2 * math.pi * k / n_ang
            s = [0.0] * m
            s[0], s[1] = f * R * math.cos(a), f * R * math.sin(a)
            pts.append((R, tuple(s)))
            s2 = [0.0] * m
            s2[0], s2[1] = R * math.cos(a), R * math.sin(a)
            pts.append((f * R, tuple(s2)))
    return pts


def far_field_log_max_gradient(geom: ConeGeometry, s: float, n_theta: int = 16, n_ang: int = 4) -> float:
    """log max |grad_x H(x, y, 1)| with x on the boundary of A_{1/sqrt s} and y on that of A_{10/sqrt s}.

    Rotation invariance reduces the angular sampling to the difference
    theta' - theta on a uniform grid that includes 0.
    """
    if not (0 < s <= 1e-4):
        raise DomainError("s must lie in (0, 1e-4]")
    Rx, Ry = 1.0 / math.sqrt(s), 10.0 / math.sqrt(s)
    best = -math.inf
    for rx, sx in _polydisk_boundary(Rx, geom.m, n_ang):
        for ry, sy in _polydisk_boundary(Ry, geom.m, n_ang):
            for k in range(n_theta):
                th = -math.pi + 2 * math.pi * k / n_theta
                x = ConePoint(rx, 0.0, sx)
                y = ConePoint(ry, th, sy)
                if rx == 0.0:
                    continue
                best = max(best, log_gradient_norm(geom, x, y, 1.0))
    return best


@dataclass(frozen=True)
class FarFieldResult:
    s_values: tuple[float, ...]
    log_max_grad: tuple[float, ...]
    log_bound: tuple[float, ...]
    bound_ok: bool


def far_field_gradient_check(geom: ConeGeometry, s_values: Sequence[float] = (1e-4, 5e-5)) -> FarFieldResult:
    """Compare log max |grad H| with log(C e^{-1/s}), C calibrated at s = 1e-4."""
    s_values = tuple(float(s) for s in s_values)
    logs = [far_field_log_max_gradient(geom, s) for s in s_values]
    log_c = (far_field_log_max_gradient(geom, 1e-4) if 1e-4 not in s_values else logs[s_values.index(1e-4)]) + 1e4
    bounds = [log_c - 1.0 / s for s in s_values]
    ok = all(lg <= b + 1e-9 * abs(b) for lg, b in zip(logs, bounds))
    return FarFieldResult(s_values, tuple(logs), tuple(bounds), ok)


# ---------------------------------------------------------------------------
# weighted spatial integral


def weighted_alpha_integral(geom: ConeGeometry, op: DerivOp | None, x: ConePoint, alpha: float,
                            radius: float = 16.0, n_r: int = 96, n_theta: int = 96, n_t: int = 9,
                            n_rho: int = 48, n_psi: int = 16) -> tuple[float, float]:
    """``int sup_{1<=t<=2} |op H(x, y, t)| |x - y|^alpha dV_y``.

    Tensor Gauss-Legendre in r' (panels of unit length up to ``x.r + radius``)
    and the periodic trapezoid in theta'; the supremum over t is taken on
    ``n_t`` equispaced times. For m = 2 the tangential offset is integrated
    in polar form (rho, psi). The error estimate is the change when every
    resolution is halved.
    """
    if not (0 < alpha <= 1):
        raise DomainError("alpha must lie in (0, 1]")
    if geom.m not in (0, 2):
        raise UnsupportedConfigurationError("weighted_alpha_integral supports m = 0 and m = 2")
    fine = _weighted_alpha(geom, op, x, alpha, radius, n_r, n_theta, n_t, n_rho, n_psi)
    coarse = _weighted_alpha(geom, op, x, alpha, radius, n_r // 2, n_theta // 2, n_t, n_rho // 2, max(4, n_psi // 2))
    return fine, abs(fine - coarse)


def _weighted_alpha(geom, op, x, alpha, radius, n_r, n_theta, n_t, n_rho, n_psi):
    beta = geom.beta
    r_hi = x.r + radius
    n_pan = max(1, int(math.ceil(r_hi)))
    per = max(4, n_r // n_pan)
    rr, wr = [], []
    for k in range(n_pan):
        a, b = k * r_hi / n_pan, (k + 1) * r_hi / n_pan
        xs, ws = gauss_legendre(per, a, b)
        rr.append(xs)
        wr.append(ws)
    rp = np.concatenate(rr)
    wrp = np.concatenate(wr)
    th = -math.pi + 2 * math.pi * np.arange(n_theta) / n_theta
    wth = 2 * math.pi / n_theta
    RP, TH = np.meshgrid(rp, th, indexing="ij")
    dth = np.abs(((TH + math.pi) % (2 * math.pi)) - math.pi)
    bd = beta * dth
    d2_planar = np.where(bd <= math.pi, x.r ** 2 + RP ** 2 - 2 * x.r * RP * np.cos(bd), (x.r + RP) ** 2)
    vol = beta * RP * wrp[:, None] * wth
    ts = np.linspace(1.0, 2.0, n_t)
    if geom.m == 0:
        sup = np.zeros_like(RP)
        for t in ts:
            sup = np.maximum(sup, np.abs(kernel_derivative_grid(geom, op, x, RP, TH, float(t))))
        return float(np.sum(sup * d2_planar ** (0.5 * alpha) * vol))
    rho, wrho = gauss_legendre(n_rho, 0.0, radius)
    psi = 2 * math.pi * np.arange(n_psi) / n_psi
    wpsi = 2 * math.pi / n_psi
    ds = np.stack([np.cos(psi), np.sin(psi)], axis=-1)  # (n_psi, 2)
    dshat = rho[:, None, None] * ds[None, :, :]  # (n_rho, n_psi, 2)
    total = 0.0
    for a in range(RP.shape[0]):
        shp = (RP.shape[1], n_rho, n_psi)
        rp_b = np.broadcast_to(RP[a][:, None, None], shp)
        th_b = np.broadcast_to(TH[a][:, None, None], shp)
        ds_b = np.broadcast_to(dshat[None], shp + (2,))
        sup = np.zeros(shp)
        for t in ts:
            sup = np.maximum(sup, np.abs(kernel_derivative_grid(geom, op, x, rp_b, th_b, float(t), ds_b)))
        dist = (d2_planar[a][:, None, None] + rho[None, :, None] ** 2) ** (0.5 * alpha)
        w = vol[a][:, None, None] * (rho * wrho)[None, :, None] * wpsi
        total += float(np.sum(sup * dist * w))
    return total
