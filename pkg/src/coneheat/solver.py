"""Convolution solution of the inhomogeneous heat equation on the 2-D cone.

``u = -(H * f)`` solves ``du/dt = Delta u - f`` with zero initial data when
``f`` is supported in the disk of radius ``R`` about the vertex (m = 0).

The angular integral is done exactly in Fourier modes: with
``H = sum_n c_n(r, r', t) e^{i n (theta' - theta)}`` and
``f = sum_n f_n(r', tau) e^{i n theta'}`` (f_n from an FFT in theta'),

    (H * f)(x, t) = sum_n e^{i n theta} int_0^t dsigma
                    2 pi beta int_0^R c_n(r, r', sigma) f_n(r', t - sigma) r' dr'.

Both remaining integrals use fixed tensor Gauss-Kronrod rules whose panel
breakpoints move continuously with the probe point: the quadrature error is
then a smooth function of x and t, so finite differences of ``convolve``
stay meaningful. The error estimate is the Kronrod/Gauss difference summed
over both levels.

Second derivatives follow the difference-against-f(x) representation:
the time derivative is

    d/dt (H * f)(x, t) = f(x, t)
        + int_0^t dsigma [ int_A dH/dsigma (x, y, sigma) (f(y, t-sigma) - f(x, t-sigma)) dy
                           + f(x, t - sigma) int_{dA} dH/dn (x, y, sigma) dS_y ],

and the mixed operator ``d_r (1/(beta r)) d_theta`` has a vanishing boundary
term because the disk is rotation invariant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import specfun
from .cone_kernel import ConeGeometry, ConePoint, cone_distance, wrap_angle
from .errors import DomainError, UnsupportedConfigurationError
from .quad import kronrod_panels

SourceFn = Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]

_WINDOW = (1.0, 3.0, 6.0, 12.0)  # r' breakpoints at r +- k sqrt(sigma)
_GRADING = 6  # geometric panels toward r' = 0 (ratio 4)
_MODE_FLOOR = 1e-15


@dataclass(frozen=True)
class PolyDisk:
    """Disk of radius R about the vertex times a tangential ball (empty for m = 0)."""

    radius: float = 10.0
    center_shat: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if not self.radius > 0:
            raise DomainError("PolyDisk radius must be positive")


@dataclass(frozen=True)
class SourceTerm:
    """Source f(r, theta, tau), vectorised over broadcasting numpy arrays.

    ``knots`` lists radii where f is not smooth in r (the vertex and the
    support radius are always treated as knots). ``holder_alpha`` sets the
    time substitution near tau = t; ``holder_seminorm`` is filled in by
    :func:`measure_holder_seminorm`, never declared.
    """

    f: SourceFn
    support: PolyDisk = field(default_factory=PolyDisk)
    holder_alpha: float = 0.5
    holder_seminorm: float | None = None
    knots: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if not (0 < self.holder_alpha < 1):
            raise DomainError("holder_alpha must lie in (0, 1)")
        if self.holder_seminorm is not None and self.holder_seminorm < 0:
            raise DomainError("holder_seminorm must be nonnegative")
        R = self.support.radius
        rr = np.array([1.001, 1.5])[:, None] * R
        th = np.linspace(-math.pi, math.pi, 16, endpoint=False)[None, :]
        for tau in (0.0, 1.0):
            vals = np.asarray(self.f(rr, th, np.full_like(rr * th, tau)), float)
            if np.any(vals != 0.0):
                raise DomainError("f must vanish outside its support")

    def value(self, x: ConePoint, tau: float) -> float:
        return float(np.asarray(self.f(np.array(x.r), np.array(x.theta), np.array(float(tau)))))

    @property
    def q(self) -> float:
        """Exponent of the substitution sigma = sigma_0 s^q on the first time panel."""
        return max(2.0, 2.0 / self.holder_alpha)


@dataclass(frozen=True)
class SolverConfig:
    """Resolution of the tensor rules.

    ``n_theta`` is the initial FFT length (doubled up to ``max_theta`` until
    the highest retained mode sits below a quarter of it); ``min_sigma_ratio``
    bounds the number of geometric time panels.
    """

    n_theta: int = 64
    max_theta: int = 1024
    sigma_ratio: float = 4.0
    min_sigma_ratio: float = 4.0 ** -20


DEFAULT_SOLVER = SolverConfig()


@dataclass(frozen=True)
class SolutionProbe:
    """Solution data at one space-time point; every entry is (value, err)."""

    x: ConePoint
    t: float
    u: tuple[float, float]
    du_dt: tuple[float, float]
    second_derivs: dict


def _check(geom: ConeGeometry, x: ConePoint, t: float) -> None:
    if geom.m != 0:
        raise UnsupportedConfigurationError("the convolution solver supports m = 0 only")
    x.check(geom)
    if not (t >= 0 and math.isfinite(t)):
        raise DomainError("t must be finite and nonnegative")


# ---------------------------------------------------------------------------
# quadrature rules


def _sigma_rule(src: SourceTerm, r: float, t: float, cfg: SolverConfig):
    """Time nodes: geometric panels in sigma plus a power-law first panel."""
    feats = [r] + [abs(r - k) for k in (*src.knots, src.support.radius)]
    feats = [d for d in feats if d > 1e-12]
    floor = min([(d / 4.0) ** 2 for d in feats] + [t / cfg.sigma_ratio])
    floor = max(floor, t * cfg.min_sigma_ratio)
    J = max(1, int(math.ceil(math.log(t / floor) / math.log(cfg.sigma_ratio))))
    edges = t * cfg.sigma_ratio ** -np.arange(J, -1, -1, dtype=float)
    xs, wk, wg = kronrod_panels(edges[:-1], edges[1:])
    s0, k0, g0 = kronrod_panels(0.0, 1.0)
    q = src.q
    sig0 = edges[0] * s0 ** q
    jac = edges[0] * q * s0 ** (q - 1.0)
    sig = np.concatenate([sig0.ravel(), xs.ravel()])
    wK = np.concatenate([(k0 * jac).ravel(), wk.ravel()])
    wG = np.concatenate([(g0 * jac).ravel(), wg.ravel()])
    return sig, wK, wG


def _radial_rule(src: SourceTerm, r: float, sig: np.ndarray):
    """r' nodes per sigma (rows), with breakpoints at r +- k sqrt(sigma) and knots."""
    R = src.support.radius
    sq = np.sqrt(sig)[:, None]
    ks = np.array((-max(_WINDOW),) + tuple(-k for k in _WINDOW[-2::-1]) + (0.0,) + _WINDOW)
    lo = np.clip(r - _WINDOW[-1] * sq, 0.0, R)
    hi = np.clip(r + _WINDOW[-1] * sq, 0.0, R)
    pts = [np.clip(r + ks[None, :] * sq, lo, hi)]
    extra = np.array([0.0, *src.knots], float)[None, :]
    pts.append(np.clip(np.broadcast_to(extra, (sig.size, extra.shape[1])), lo, hi))
    cand = np.concatenate(pts, axis=1)
    pos = np.where(cand > 0, cand, np.inf).min(axis=1, keepdims=True)
    pos = np.where(np.isfinite(pos), pos, 0.0)
    grade = pos * 4.0 ** -np.arange(1, _GRADING + 1)[None, :]
    pts.append(np.clip(grade, lo, hi))
    edges = np.sort(np.concatenate(pts, axis=1), axis=1)
    return kronrod_panels(edges[:, :-1], edges[:, 1:])


def _modes(src: SourceTerm, rp: np.ndarray, tau: np.ndarray, cfg: SolverConfig):
    """Fourier coefficients f_n(r', tau) for n = 0.., plus a truncation bound."""
    N = cfg.n_theta
    while True:
        th = -math.pi + 2.0 * math.pi * np.arange(N) / N
        F = np.asarray(src.f(rp[..., None], th, tau[..., None]), float)
        F = np.broadcast_to(F, rp.shape + (N,))
        scale = float(np.max(np.abs(F))) if F.size else 0.0
        if scale == 0.0:
            return np.zeros(rp.shape + (1,), complex), 0.0
        c = np.fft.rfft(F, axis=-1) / N
        c[..., 1::2] *= -1.0  # theta grid starts at -pi
        mag = np.max(np.abs(c).reshape(-1, c.shape[-1]), axis=0)
        keep = np.flatnonzero(mag > _MODE_FLOOR * scale)
        top = int(keep.max()) + 1
        if top <= N // 4 or 2 * N > cfg.max_theta:
            tail = float(mag[top:].sum()) * 2.0 if top < mag.size else 0.0
            return c[..., :top], tail
        N *= 2


def _kernels(kind: str, beta: float, r: float, rp: np.ndarray, sig: np.ndarray, nus: np.ndarray):
    """Mode kernels c_n, d c_n/d sigma or d c_n/d r on the (sigma, r') grid."""
    s = sig[:, None, None]
    rpp = rp[..., None]
    z = r * rpp / (2.0 * s)
    w = np.exp(-((r - rpp) ** 2) / (4.0 * s)) / (4.0 * math.pi * beta * s)
    j0 = specfun.ive(nus, z)
    if kind == "u":
        return w * j0
    D = specfun.ive_dz(nus, z)
    if kind == "dt":
        return w * (((r - rpp) ** 2 / (4.0 * s * s) - 1.0 / s) * j0 - (z / s) * D)
    dr = w * (-(r - rpp) / (2.0 * s) * j0 + rpp / (2.0 * s) * D)
    return dr / r - w * j0 / (r * r)


def _flux(beta: float, r: float, R: float, sig: np.ndarray) -> np.ndarray:
    """int over the circle r' = R of dH/dr' (outward normal) as a function of sigma."""
    z = r * R / (2.0 * sig)
    w = np.exp(-((r - R) ** 2) / (4.0 * sig)) / (4.0 * math.pi * beta * sig)
    dcr = w * ((r - R) / (2.0 * sig) * specfun.ive(0.0, z) + r / (2.0 * sig) * specfun.ive_dz(0.0, z))
    return 2.0 * math.pi * beta * R * dcr


def _time_integral(kind: str, geom: ConeGeometry, src: SourceTerm, x: ConePoint, t: float,
                   cfg: SolverConfig) -> tuple[float, float]:
    """int_0^t S(sigma) dsigma for S the mode sum of the chosen kernel against f."""
    beta, r = geom.beta, x.r
    sig, wsK, wsG = _sigma_rule(src, r, t, cfg)
    nodes, wrK, wrG = _radial_rule(src, r, sig)
    S = sig.size
    rp = nodes.reshape(S, -1)
    wK = wrK.reshape(S, -1) * rp
    wG = wrG.reshape(S, -1) * rp
    tau = np.broadcast_to((t - sig)[:, None], rp.shape)
    fn, tail = _modes(src, rp, tau, cfg)
    nmodes = fn.shape[-1]
    n = np.arange(nmodes, dtype=float)
    fx = np.asarray(src.f(np.array(r), np.array(x.theta), t - sig), float) * np.ones(S)
    if kind == "dt":
        fn = fn.copy()
        fn[..., 0] -= fx[:, None]
    if kind == "drdth":
        if nmodes == 1:
            return 0.0, 0.0
        n, fn = n[1:], fn[..., 1:]
    K = _kernels(kind, beta, r, rp, sig, n / beta)
    prod = K * fn
    AK = 2.0 * math.pi * beta * np.einsum("sm,smn->sn", wK, prod)
    AG = 2.0 * math.pi * beta * np.einsum("sm,smn->sn", wG, prod)
    phase = np.exp(1j * n * x.theta)
    if kind == "drdth":
        phase = phase * (1j * n / beta)
    mult = np.where(n == 0, 1.0, 2.0)
    valK = np.real(AK * phase) @ mult
    valG = np.real(AG * phase) @ mult
    if kind == "dt":
        fl = fx * _flux(beta, r, src.support.radius, sig)
        valK = valK + fl
        valG = valG + fl
    inner = np.abs(valK - valG)
    total = float(wsK @ valK)
    err = abs(total - float(wsG @ valK)) + float(wsK @ inner)
    # truncated Fourier modes: |c_n| <= 1/(2 pi beta) * radial mass, times the time weight
    if tail > 0.0:
        bound = {"u": t, "dt": 1.0, "drdth": 1.0}[kind]
        err += tail * bound * (1.0 if kind == "u" else 1.0 / max(r * r, 1e-300))
    return total, err + 1e-15 * abs(total)


# ---------------------------------------------------------------------------
# public operations


def convolve(geom: ConeGeometry, src: SourceTerm, x: ConePoint, t: float,
             cfg: SolverConfig = DEFAULT_SOLVER) -> tuple[float, float]:
    """``u(x, t) = -int_0^t int_A H(x, y, t - tau) f(y, tau) dy dtau`` and its error."""
    _check(geom, x, t)
    if t == 0.0:
        return 0.0, 0.0
    val, err = _time_integral("u", geom, src, x, t, cfg)
    return -val, err


SECOND_DERIVATIVE_OPS = ("d_t", "d_r_dtheta_over_r")


def second_derivative_rep(geom: ConeGeometry, src: SourceTerm, op: str, x: ConePoint, t: float,
                          cfg: SolverConfig = DEFAULT_SOLVER) -> tuple[float, float]:
    """``d_t u`` or ``d_r (1/(beta r)) d_theta u`` through the interior/boundary split.

    ``d_t`` is defined on the vertex as well; the mixed operator needs r > 0.
    """
    _check(geom, x, t)
    if op not in SECOND_DERIVATIVE_OPS:
        raise DomainError(f"op must be one of {SECOND_DERIVATIVE_OPS}")
    if op == "d_r_dtheta_over_r" and x.r == 0.0:
        raise DomainError("the mixed radial-angular derivative is undefined on the vertex")
    if t == 0.0:
        raise DomainError("second derivatives need t > 0")
    if op == "d_t":
        val, err = _time_integral("dt", geom, src, x, t, cfg)
        return -(src.value(x, t) + val), err
    val, err = _time_integral("drdth", geom, src, x, t, cfg)
    return -val, err


def laplacian_rep(geom: ConeGeometry, src: SourceTerm, x: ConePoint, t: float,
                  cfg: SolverConfig = DEFAULT_SOLVER) -> tuple[float, float]:
    """``Delta u = d_t u + f`` with d_t u from the representation."""
    v, e = second_derivative_rep(geom, src, "d_t", x, t, cfg)
    return v + src.value(x, t), e


def probe(geom: ConeGeometry, src: SourceTerm, x: ConePoint, t: float,
          cfg: SolverConfig = DEFAULT_SOLVER) -> SolutionProbe:
    u = convolve(geom, src, x, t, cfg)
    dt = second_derivative_rep(geom, src, "d_t", x, t, cfg)
    sd = {}
    if x.r > 0:
        sd["d_r_dtheta_over_r"] = second_derivative_rep(geom, src, "d_r_dtheta_over_r", x, t, cfg)
    return SolutionProbe(x, t, u, dt, sd)


# ---------------------------------------------------------------------------
# finite-difference cross-checks of convolve


def _richardson(d_h: float, d_h2: float, noise: float) -> tuple[float, float]:
    val = (4.0 * d_h2 - d_h) / 3.0
    return val, abs(d_h2 - d_h) / 3.0 + noise


def _default_step(x: ConePoint, h: float | None) -> float:
    """Spatial step: 0.04, shrunk to r/10 near the vertex where the stencil sees 1/r terms."""
    return min(0.04, 0.1 * x.r) if h is None else h


def fd_laplacian(geom: ConeGeometry, src: SourceTerm, x: ConePoint, t: float, h: float | None = None,
                 cfg: SolverConfig = DEFAULT_SOLVER) -> tuple[float, float]:
    """Polar five-point Laplacian of ``convolve`` with one Richardson step (needs r > 2h)."""
    h = _default_step(x, h)
    if not x.r > 2 * h:
        raise DomainError("fd_laplacian needs r > 2h")
    u0, e0 = convolve(geom, src, x, t, cfg)
    ests, errs = [], [e0]
    for hh in (h, h / 2):
        up, ep = convolve(geom, src, ConePoint(x.r + hh, x.theta), t, cfg)
        um, em = convolve(geom, src, ConePoint(x.r - hh, x.theta), t, cfg)
        k = hh / (geom.beta * x.r)
        tp, etp = convolve(geom, src, ConePoint(x.r, wrap_angle(x.theta + k)), t, cfg)
        tm, etm = convolve(geom, src, ConePoint(x.r, wrap_angle(x.theta - k)), t, cfg)
        urr = (up - 2 * u0 + um) / hh ** 2
        ur = (up - um) / (2 * hh)
        uth = (tp - 2 * u0 + tm) / hh ** 2
        ests.append(urr + ur / x.r + uth)
        errs += [ep, em, etp, etm]
    noise = 1e-15 * (abs(u0) + 1.0) * 16.0 / (h / 2) ** 2
    return _richardson(ests[0], ests[1], noise)


def fd_time_derivative(geom: ConeGeometry, src: SourceTerm, x: ConePoint, t: float, h: float = 0.02,
                       cfg: SolverConfig = DEFAULT_SOLVER) -> tuple[float, float]:
    """Central difference of ``convolve`` in t with one Richardson step (needs t > h)."""
    if not t > h:
        raise DomainError("fd_time_derivative needs t > h")
    ests = []
    for hh in (h, h / 2):
        up, _ = convolve(geom, src, x, t + hh, cfg)
        um, _ = convolve(geom, src, x, t - hh, cfg)
        ests.append((up - um) / (2 * hh))
    noise = 1e-15 * 4.0 / h
    return _richardson(ests[0], ests[1], noise)


def fd_mixed(geom: ConeGeometry, src: SourceTerm, x: ConePoint, t: float, h: float | None = None,
             cfg: SolverConfig = DEFAULT_SOLVER) -> tuple[float, float]:
    """Nested central differences for ``d_r (1/(beta r)) d_theta u`` (needs r > 2h)."""
    h = _default_step(x, h)
    if not x.r > 2 * h:
        raise DomainError("fd_mixed needs r > 2h")
    ests = []
    for hh in (h, h / 2):
        g = []
        for rr in (x.r + hh, x.r - hh):
            k = hh / (geom.beta * rr)
            up, _ = convolve(geom, src, ConePoint(rr, wrap_angle(x.theta + k)), t, cfg)
            um, _ = convolve(geom, src, ConePoint(rr, wrap_angle(x.theta - k)), t, cfg)
            g.append((up - um) / (2 * hh))
        ests.append((g[0] - g[1]) / (2 * hh))
    noise = 1e-15 * 8.0 / (h / 2) ** 2
    return _richardson(ests[0], ests[1], noise)


@dataclass(frozen=True)
class PdeResidual:
    residual: float
    err: float
    du_dt: float
    laplacian: float

    @property
    def passed(self) -> bool:
        return abs(self.residual) <= 3.0 * self.err


def pde_residual(geom: ConeGeometry, src: SourceTerm, x: ConePoint, t: float, h: float | None = None,
                 cfg: SolverConfig = DEFAULT_SOLVER) -> PdeResidual:
    """``d_t u - Delta u + f`` with d_t u from the representation and Delta u by differences."""
    dt, edt = second_derivative_rep(geom, src, "d_t", x, t, cfg)
    lap, elap = fd_laplacian(geom, src, x, t, h, cfg)
    return PdeResidual(dt - lap + src.value(x, t), edt + elap, dt, lap)


# ---------------------------------------------------------------------------
# Hoelder seminorms and the Schauder ratio

ProbePair = tuple[tuple[ConePoint, float], tuple[ConePoint, float]]


def _parabolic_distance(geom: ConeGeometry, p: tuple[ConePoint, float], q: tuple[ConePoint, float], alpha: float) -> float:
    return cone_distance(geom, p[0], q[0]) ** alpha + abs(p[1] - q[1]) ** (alpha / 2.0)


def measure_holder_seminorm(geom: ConeGeometry, src: SourceTerm, pairs: Sequence[ProbePair]) -> float:
    """``sup |f(p1) - f(p2)| / (|x1 - x2|^alpha + |t1 - t2|^{alpha/2})`` over the pairs."""
    best = 0.0
    for p, q in pairs:
        d = _parabolic_distance(geom, p, q, src.holder_alpha)
        if d == 0.0:
            raise DomainError("probe pairs must be distinct points")
        best = max(best, abs(src.value(*p) - src.value(*q)) / d)
    return best


@dataclass(frozen=True)
class SchauderReport:
    """Hoelder quotient of the complex Hessian field over that of f.

    For m = 0 the complex Hessian has the single component Delta u / 4;
    the constant cancels in the ratio, so the field is Delta u.
    """

    ratio: float
    err: float
    field_seminorm: float
    f_seminorm: float
    worst_pair: ProbePair | None
    in_hypothesis: bool


def schauder_ratio(geom: ConeGeometry, src: SourceTerm, probe_pairs: Sequence[ProbePair],
                   cfg: SolverConfig = DEFAULT_SOLVER) -> SchauderReport:
    """Hoelder seminorm of Delta u over the measured seminorm of f on the same pairs.

    ``in_hypothesis`` is False when alpha >= min(1/beta - 1, 1), the range
    the estimate does not cover; the ratio is still reported.
    """
    if geom.m != 0:
        raise UnsupportedConfigurationError("the convolution solver supports m = 0 only")
    alpha = src.holder_alpha
    in_hyp = alpha < min(1.0 / geom.beta - 1.0, 1.0)
    cache: dict = {}

    def field(p: tuple[ConePoint, float]) -> tuple[float, float]:
        key = (p[0].r, p[0].theta if p[0].r > 0 else 0.0, p[1])
        if key not in cache:
            cache[key] = laplacian_rep(geom, src, p[0], p[1], cfg)
        return cache[key]

    fsn = measure_holder_seminorm(geom, src, probe_pairs)
    best, best_err, worst = 0.0, 0.0, None
    for p, q in probe_pairs:
        d = _parabolic_distance(geom, p, q, alpha)
        (a, ea), (b, eb) = field(p), field(q)
        quot = abs(a - b) / d
        if quot >= best:
            best, best_err, worst = quot, (ea + eb) / d, (p, q)
    if fsn == 0.0:
        if best <= best_err:
            return SchauderReport(0.0, 0.0, best, 0.0, worst, in_hyp)
        return SchauderReport(math.inf, math.inf, best, 0.0, worst, in_hyp)
    return SchauderReport(best / fsn, best_err / fsn, best, fsn, worst, in_hyp)


def vertex_pairs(geom: ConeGeometry, delta: float, t: float, theta0: float = 0.0) -> list[ProbePair]:
    """Vertex-adjacent pairs at separation scale delta: (0, delta), (delta, 2 delta), and an angular pair."""
    v = ConePoint(0.0, 0.0)
    a = ConePoint(delta, theta0)
    b = ConePoint(2 * delta, theta0)
    c = ConePoint(delta, wrap_angle(theta0 + math.pi / (2 * geom.beta)))
    return [((v, t), (a, t)), ((a, t), (b, t)), ((a, t), (c, t))]


@dataclass(frozen=True)
class SchauderStability:
    deltas: tuple[float, ...]
    ratios: tuple[float, ...]
    drift: float
    in_hypothesis: bool

    @property
    def passed(self) -> bool:
        return self.drift < 2.0 and all(math.isfinite(r) for r in self.ratios)


def schauder_stability(geom: ConeGeometry, src: SourceTerm, t: float = 0.5,
                       deltas: Sequence[float] = (0.2, 0.1, 0.05, 0.025),
                       cfg: SolverConfig = DEFAULT_SOLVER) -> SchauderStability:
    """Schauder ratio on vertex-adjacent pairs at each separation; drift = max/min over consecutive halvings."""
    ratios = []
    hyp = True
    for d in deltas:
        rep = schauder_ratio(geom, src, vertex_pairs(geom, d, t), cfg)
        ratios.append(rep.ratio)
        hyp = rep.in_hypothesis
    drift = max(max(a, b) / min(a, b) if min(a, b) > 0 else math.inf for a, b in zip(ratios, ratios[1:]))
    return SchauderStability(tuple(deltas), tuple(ratios), drift, hyp)


# ---------------------------------------------------------------------------
# sources used by the checks


def gaussian_bump(width: float = 1.0, radius: float = 10.0) -> SourceTerm:
    """``exp(-|y|^2 / width^2)`` cut off at the support radius, constant in time."""

    def f(r, th, tau):
        r, th, tau = np.broadcast_arrays(r, th, tau)
        return np.where(r <= radius, np.exp(-(r / width) ** 2), 0.0)

    return SourceTerm(f, PolyDisk(radius), holder_alpha=0.5, knots=())


def holder_bump(alpha: float, width: float = 2.0, radius: float = 10.0) -> SourceTerm:
    """``|y|^alpha (1 - |y|^2/width^2)_+^3``: Hoelder of exponent alpha at the vertex."""

    def f(r, th, tau):
        r, th, tau = np.broadcast_arrays(r, th, tau)
        cut = np.clip(1.0 - (r / width) ** 2, 0.0, None) ** 3
        return np.abs(r) ** alpha * cut

    return SourceTerm(f, PolyDisk(radius), holder_alpha=alpha, knots=(width,))


def angular_bump(width: float = 3.0, radius: float = 10.0) -> SourceTerm:
    """``r^2 (1 - r^2/width^2)_+^4 (1 + cos(theta)/2) (1 + tau)``: two Fourier modes."""

    def f(r, th, tau):
        r, th, tau = np.broadcast_arrays(r, th, tau)
        phi = r * r * np.clip(1.0 - (r / width) ** 2, 0.0, None) ** 4
        return phi * (1.0 + 0.5 * np.cos(th)) * (1.0 + tau)

    return SourceTerm(f, PolyDisk(radius), holder_alpha=0.9, knots=(width,))


def constant_source(c: float, radius: float = 10.0) -> SourceTerm:
    def f(r, th, tau):
        r, th, tau = np.broadcast_arrays(r, th, tau)
        return np.where(r <= radius, c, 0.0)

    return SourceTerm(f, PolyDisk(radius), holder_alpha=0.5, knots=())


def zero_source(radius: float = 10.0) -> SourceTerm:
    def f(r, th, tau):
        return np.zeros(np.broadcast(r, th, tau).shape)

    return SourceTerm(f, PolyDisk(radius), holder_alpha=0.5)
