"""Adaptive Gauss-Kronrod quadrature.

Integrands are called with a 1-D numpy array of abscissae and must return an
array of the same shape. The engine keeps a list of panels, each carrying a
15-point Kronrod value and the difference to the embedded 7-point Gauss
value as its error estimate (plus a floor for rounding noise), and bisects
the worst panels until the summed estimate meets the tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError

Integrand = Callable[[np.ndarray], np.ndarray]

_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

# 15 nodes on [-1, 1] and the matching weight vectors
_NODES = np.concatenate([-_XGK[:-1], [0.0], _XGK[:-1][::-1]])
_WK = np.concatenate([_WGK[:-1], [_WGK[-1]], _WGK[:-1][::-1]])
_WG15 = np.zeros(15)
_WG15[[1, 3, 5, 9, 11, 13]] = np.concatenate([_WG[:3], _WG[:3][::-1]])
_WG15[7] = _WG[3]

_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class QuadConfig:
    """Tolerances and mandatory knots for the adaptive engines."""

    abs_tol: float = 1e-10
    rel_tol: float = 1e-10
    max_subdiv: int = 4000
    split_points: Sequence[float] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise DomainError("abs_tol and rel_tol must be positive")
        if self.max_subdiv < 1:
            raise DomainError("max_subdiv must be >= 1")

    def with_(self, **kw) -> "QuadConfig":
        return replace(self, **kw)


@dataclass(frozen=True)
class QuadResult:
    value: float
    err_estimate: float
    evaluations: int
    converged: bool

    def __add__(self, other: "QuadResult") -> "QuadResult":
        return QuadResult(
            self.value + other.value,
            self.err_estimate + other.err_estimate,
            self.evaluations + other.evaluations,
            self.converged and other.converged,
        )


def _panels(f: Integrand, a: np.ndarray, b: np.ndarray):
    """Kronrod values and error estimates for panels [a_i, b_i]."""
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    x = mid[:, None] + half[:, None] * _NODES[None, :]
    fx = np.asarray(f(x.ravel()), dtype=float).reshape(x.shape)
    if not np.all(np.isfinite(fx)):
        raise DomainError("integrand returned a non-finite value")
    k = half * (fx @ _WK)
    g = half * (fx @ _WG15)
    floor = 50.0 * _EPS * np.abs(half) * (np.abs(fx) @ _WK)
    return k, np.abs(k - g) + floor, floor


def _knots(a: float, b: float, pts: Sequence[float]) -> np.ndarray:
    inner = sorted({float(p) for p in pts if a < p < b})
    return np.array([a, *inner, b])


def integrate_finite(f: Integrand, a: float, b: float, cfg: QuadConfig | None = None) -> QuadResult:
    """Adaptive integral of ``f`` over ``[a, b]``.

    ``cfg.split_points`` inside ``(a, b)`` become fixed panel boundaries;
    use them at kinks or near-singular points. A result that misses the
    tolerance within ``cfg.max_subdiv`` panels is returned with
    ``converged=False``; so is one whose remaining error is the rounding
    floor of a cancelling integrand, with that floor as its estimate.
    """
    cfg = cfg or QuadConfig()
    a, b = float(a), float(b)
    if a == b:
        return QuadResult(0.0, 0.0, 0, True)
    if not (math.isfinite(a) and math.isfinite(b)):
        raise DomainError("integrate_finite needs finite limits")
    if a > b:
        raise DomainError("integrate_finite requires a <= b")
    edges = _knots(a, b, cfg.split_points)
    lo, hi = edges[:-1], edges[1:]
    val, err, flo = _panels(f, lo, hi)
    nev = 15 * lo.size
    while True:
        total = float(val.sum())
        etot = float(err.sum())
        target = max(cfg.abs_tol, cfg.rel_tol * abs(total))
        if etot <= target:
            return QuadResult(total, etot, nev, True)
        # rounding noise of a cancelling integrand cannot be bisected away
        noise_bound = etot - float(flo.sum()) <= 0.1 * target
        if lo.size >= cfg.max_subdiv or noise_bound:
            return QuadResult(total, etot, nev, False)
        # bisect every panel above its fair share, worst first
        share = target / lo.size
        pick = np.flatnonzero(err > 0.5 * share)
        if pick.size == 0:
            pick = np.array([int(np.argmax(err))])
        room = cfg.max_subdiv - lo.size
        if pick.size > room:
            pick = pick[np.argsort(err[pick])[::-1][:room]]
        mids = 0.5 * (lo[pick] + hi[pick])
        if np.any((mids <= lo[pick]) | (mids >= hi[pick])):
            return QuadResult(total, etot, nev, False)
        new_lo = np.concatenate([lo[pick], mids])
        new_hi = np.concatenate([mids, hi[pick]])
        v2, e2, f2 = _panels(f, new_lo, new_hi)
        nev += 15 * new_lo.size
        keep = np.ones(lo.size, bool)
        keep[pick] = False
        lo = np.concatenate([lo[keep], new_lo])
        hi = np.concatenate([hi[keep], new_hi])
        val = np.concatenate([val[keep], v2])
        err = np.concatenate([err[keep], e2])
        flo = np.concatenate([flo[keep], f2])


def _reciprocal_tail(f: Integrand, y0: float, cfg: QuadConfig) -> QuadResult:
    """Integral over [y0, inf) through y = y0 / u, u in (0, 1]."""

    def g(u: np.ndarray) -> np.ndarray:
        y = y0 / u
        return f(y) * y0 / (u * u)

    return integrate_finite(g, 0.0, 1.0, cfg.with_(split_points=(0.25, 0.5)))


def integrate_semi_infinite(f: Integrand, a: float, decay_scale: float, cfg: QuadConfig | None = None) -> QuadResult:
    """Integral of ``f`` over ``[a, inf)``.

    The integrand is sampled at ``a + j * decay_scale``. As soon as a sample
    satisfies ``|f(Y)| * decay_scale <= abs_tol / 4`` and the next sample is
    smaller still, the range is truncated at ``Y``; under the exponential
    decay contract ``|f(y)| <= M exp(-y / decay_scale)`` the discarded tail is
    at most ``|f(Y)| * decay_scale``, which is added to the error estimate.
    If no such point appears within 200 scale lengths the decay is treated as
    algebraic and the remainder is integrated through the reciprocal map.
    """
    cfg = cfg or QuadConfig()
    if not decay_scale > 0:
        raise DomainError("decay_scale must be positive")
    a = float(a)
    steps = a + decay_scale * np.arange(1, 201, dtype=float)
    fy = np.abs(np.asarray(f(steps), dtype=float))
    ok = fy * decay_scale <= 0.25 * cfg.abs_tol
    cut = None
    for j in range(1, len(steps) - 1):
        # exponential decay shows up as a steady per-step ratio below ~e^-1/2
        geometric = fy[j + 1] <= 0.6 * fy[j] and fy[j] <= 0.6 * fy[j - 1]
        if ok[j] and (geometric or fy[j] == 0.0):
            cut = j
            break
    knots = tuple(p for p in cfg.split_points if p > a)
    if cut is not None:
        y_end = float(steps[cut])
        tail = float(fy[cut]) * decay_scale
        pts = knots + tuple(steps[: cut : max(1, cut // 8)])
        res = integrate_finite(f, a, y_end, cfg.with_(abs_tol=0.5 * cfg.abs_tol, split_points=pts))
        return QuadResult(res.value, res.err_estimate + tail, res.evaluations + len(steps), res.converged)
    y_mid = float(steps[-1]) if a + decay_scale * 200 > 0 else 1.0
    pts = knots + tuple(steps[::10])
    head = integrate_finite(f, a, y_mid, cfg.with_(abs_tol=0.5 * cfg.abs_tol, split_points=pts))
    tail = _reciprocal_tail(f, y_mid, cfg.with_(abs_tol=0.5 * cfg.abs_tol))
    return head + tail


def integrate_time_kernel(g: Integrand, power: float, cfg: QuadConfig | None = None, *, c: float) -> QuadResult:
    """Integral over ``t in (0, inf)`` of ``g(t) ~ t^(-power) exp(-c / t)``.

    Time is first rescaled by ``c`` (``t = c s``) so the split point ``s = 1``
    sits at the natural scale of the kernel. On ``(0, 1]`` the substitution
    ``s = 1/u`` turns the essential singularity into an exponential tail in
    ``u``; ``[1, inf)`` is handled by :func:`integrate_semi_infinite`.
    """
    cfg = cfg or QuadConfig()
    if not c > 0:
        raise DomainError("integrate_time_kernel needs c > 0")
    sub = cfg.with_(abs_tol=0.5 * cfg.abs_tol / c, split_points=())

    def near(u: np.ndarray) -> np.ndarray:
        return g(c / u) / (u * u)

    def far(s: np.ndarray) -> np.ndarray:
        return g(c * s)

    peak = max(1.0, float(power) - 2.0)
    lo = integrate_semi_infinite(near, 1.0, max(1.0, peak), sub.with_(split_points=(peak, 2 * peak, 4 * peak)))
    hi = integrate_semi_infinite(far, 1.0, 1.0, sub.with_(split_points=(2.0, 4.0, 8.0)))
    tot = lo + hi
    return QuadResult(c * tot.value, c * tot.err_estimate, tot.evaluations, tot.converged)


def gaussian_cutoff(t: float, tol: float) -> float:
    """Smallest L with ``exp(-L^2 t) / (2 t) <= tol``.

    Bounds the tail of ``int_L^inf exp(-lam^2 t) |g(lam)| lam dlam`` for
    ``|g| <= 1``.
    """
    if t <= 0 or tol <= 0:
        raise DomainError("gaussian_cutoff needs t > 0, tol > 0")
    arg = -math.log(2.0 * t * tol)
    return math.sqrt(max(arg, 0.0) / t)


def integrate_damped_oscillatory(f: Integrand, spacing: float, t: float, cfg: QuadConfig | None = None) -> QuadResult:
    """Integral over ``[0, inf)`` of ``exp(-lam^2 t) g(lam) lam`` with ``|g| <= 1``.

    ``f`` is the full integrand. Panels are fixed at multiples of
    ``spacing`` (the oscillation half-period) up to the Gaussian cutoff, and
    the discarded tail is bounded analytically.
    """
    cfg = cfg or QuadConfig()
    if not spacing > 0:
        raise DomainError("spacing must be positive")
    lam_max = gaussian_cutoff(t, 0.5 * cfg.abs_tol)
    knots = tuple(np.arange(spacing, lam_max, spacing))
    if len(knots) > cfg.max_subdiv // 2:
        knots = tuple(np.linspace(0.0, lam_max, cfg.max_subdiv // 2)[1:-1])
    res = integrate_finite(
        f, 0.0, lam_max, cfg.with_(abs_tol=0.5 * cfg.abs_tol, split_points=knots)
    )
    tail = math.exp(-lam_max * lam_max * t) / (2.0 * t)
    return QuadResult(res.value, res.err_estimate + tail, res.evaluations, res.converged)


def gauss_legendre(n: int, a: float, b: float) -> tuple[np.ndarray, np.ndarray]:
    """n-point Gauss-Legendre rule mapped to [a, b]."""
    x, w = np.polynomial.legendre.leggauss(n)
    half = 0.5 * (b - a)
    return 0.5 * (a + b) + half * x, half * w


def kronrod_panels(a, b) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """15-point Kronrod nodes on each panel [a_i, b_i] with both weight sets.

    ``a`` and ``b`` broadcast; returns (nodes, Kronrod weights, embedded
    Gauss weights), each of shape ``a.shape + (15,)``. Degenerate panels
    (a = b) get zero weights.
    """
    a = np.asarray(a, float)[..., None]
    b = np.asarray(b, float)[..., None]
    half = 0.5 * (b - a)
    return 0.5 * (a + b) + half * _NODES, half * _WK, half * _WG15
