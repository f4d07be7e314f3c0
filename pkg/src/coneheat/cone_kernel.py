"""Heat kernel of the flat cone C_beta x R^m.

Metric ``dr^2 + beta^2 r^2 dtheta^2 + |ds|^2`` with ``theta`` in
``[-pi, pi)``; densities are taken against ``beta r dr dtheta ds``.

The planar factor is ``Hhat = P(z, v) exp(-(r^2 + r'^2)/4t) / (8 pi^2 beta t)``
with ``z = r r' / 2t`` and ``v = beta * wrap(theta' - theta)``. The angular
factor ``P`` is available in two independent forms:

series
    ``P = 2 pi [I_0(z) + 2 sum_k I_{k/beta}(z) cos(k v / beta)]``
carslaw
    finite residue sum ``2 pi beta sum exp(z cos(v + 2 k beta pi))`` plus the
    contour term ``E(z, v)`` plus half residues on the jump set.

Both are even in ``v`` so the sign convention of the angle difference is
immaterial. Everything is computed in the scaled form ``exp(-z) P`` so
that ``z`` in the thousands does not overflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import specfun
from .errors import DiscontinuityError, DomainError, UnsupportedConfigurationError
from .quad import QuadConfig, gauss_legendre, integrate_damped_oscillatory, integrate_finite

TWO_PI = 2.0 * math.pi
_EPS = np.finfo(float).eps
_DISC_TOL = 1e-12
_lgamma = np.vectorize(math.lgamma, otypes=[float])


def wrap_angle(a):
    """Reduce an angle to ``[-pi, pi)``."""
    return (np.asarray(a, dtype=float) + math.pi) % TWO_PI - math.pi if np.ndim(a) else (
        (float(a) + math.pi) % TWO_PI - math.pi
    )


# ---------------------------------------------------------------------------
# domain types


@dataclass(frozen=True)
class ConeGeometry:
    beta: float
    m: int = 0

    def __post_init__(self) -> None:
        if not (0.0 < self.beta <= 1.0):
            raise DomainError(f"beta must lie in (0, 1], got {self.beta}")
        if int(self.m) != self.m or self.m < 0 or self.m % 2:
            raise DomainError(f"m must be an even nonnegative integer, got {self.m}")

    @property
    def rho(self) -> float:
        """Hoelder exponent min(1/beta - 1, 1) of derivatives at the vertex."""
        return min(1.0 / self.beta - 1.0, 1.0)


@dataclass(frozen=True)
class ConePoint:
    r: float
    theta: float = 0.0
    shat: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if not (self.r >= 0.0 and math.isfinite(self.r)):
            raise DomainError(f"r must be finite and >= 0, got {self.r}")
        object.__setattr__(self, "theta", wrap_angle(float(self.theta)))
        object.__setattr__(self, "shat", tuple(float(s) for s in self.shat))

    @classmethod
    def of(cls, r: float, theta: float = 0.0, *s: float) -> "ConePoint":
        return cls(r, theta, tuple(s))

    def check(self, geom: ConeGeometry) -> "ConePoint":
        if len(self.shat) != geom.m:
            raise DomainError(f"point has {len(self.shat)} tangential coordinates, geometry needs {geom.m}")
        return self

    def scaled(self, lam: float) -> "ConePoint":
        return ConePoint(lam * self.r, self.theta, tuple(lam * s for s in self.shat))

    def developed(self, beta: float) -> np.ndarray:
        """Coordinates in the developed chart (r cos beta theta, r sin beta theta, s)."""
        phi = beta * self.theta
        return np.array([self.r * math.cos(phi), self.r * math.sin(phi), *self.shat])

    @classmethod
    def from_developed(cls, beta: float, X: Sequence[float]) -> "ConePoint":
        r = math.hypot(X[0], X[1])
        phi = math.atan2(X[1], X[0])
        if abs(phi) > beta * math.pi + 1e-15:
            raise DomainError("developed point lies outside the sector |phi| <= beta pi")
        return cls(r, phi / beta, tuple(X[2:]))


@dataclass(frozen=True)
class KernelArgs:
    z: float
    v: float
    R: float
    t: float

    @classmethod
    def from_points(cls, geom: ConeGeometry, x: ConePoint, y: ConePoint, t: float) -> "KernelArgs":
        if not t > 0:
            raise DomainError("t must be positive")
        R = math.dist(x.shat, y.shat) if geom.m else 0.0
        return cls(x.r * y.r / (2 * t), reduce_v(geom.beta * wrap_angle(y.theta - x.theta), geom.beta), R, t)


@dataclass(frozen=True)
class KernelValue:
    value: float
    err_estimate: float
    rep: str
    converged: bool = True


@dataclass(frozen=True)
class SeriesConfig:
    n_max_cap: int = 5000
    tail_eps: float = 0.25
    target_abs_tol: float = 1e-300

    def __post_init__(self) -> None:
        if self.n_max_cap < 1 or self.tail_eps <= 0 or self.target_abs_tol <= 0:
            raise DomainError("SeriesConfig fields must be positive")


DEFAULT_QUAD = QuadConfig(abs_tol=1e-15, rel_tol=1e-13, max_subdiv=4000)
DEFAULT_SERIES = SeriesConfig()

_KINDS = {
    # kind: (order, uses r or theta, tangential indices needed)
    "d_r": (1, True, 0),
    "d_theta_over_r": (1, True, 0),
    "d_si": (1, False, 1),
    "d_t": (2, False, 0),
    "d_r_dsi": (2, True, 1),
    "d_si_dsj": (2, False, 2),
    "d_theta_dsi_over_r": (2, True, 1),
    "d_r_dtheta_over_r": (2, True, 0),
    "d_t_dr": (3, True, 0),
    "d_t_dtheta_over_r": (3, True, 0),
    "d_t_dsi": (3, False, 1),
    "d_t_dt": (4, False, 0),
}


@dataclass(frozen=True)
class DerivOp:
    """Derivative in the x variable (and time) applied to H(x, y, t).

    ``theta`` derivatives use the orthonormal frame ``(1/(beta r)) d_theta``
    by default; ``frame="paper"`` selects the plain ``(1/r) d_theta``.
    ``d_r_dtheta_over_r`` is ``d_r[(1/(beta r)) d_theta]``, the mixed
    component of the Hessian in the orthonormal frame. The order counts a
    time derivative as two.
    """

    kind: str
    i: int | None = None
    j: int | None = None
    frame: str = "orthonormal"

    def __post_init__(self) -> None:
        if self.kind not in _KINDS:
            raise DomainError(f"unknown derivative kind {self.kind!r}")
        need = _KINDS[self.kind][2]
        if need >= 1 and self.i is None:
            raise DomainError(f"{self.kind} needs index i")
        if need == 2 and self.j is None:
            raise DomainError(f"{self.kind} needs index j")
        if self.frame not in ("orthonormal", "paper"):
            raise DomainError("frame must be 'orthonormal' or 'paper'")

    @property
    def order(self) -> int:
        return _KINDS[self.kind][0]

    @property
    def spatial_polar(self) -> bool:
        return _KINDS[self.kind][1]

    def check(self, geom: ConeGeometry) -> "DerivOp":
        for idx in (self.i, self.j):
            if idx is not None and not (0 <= idx < geom.m):
                raise DomainError(f"tangential index {idx} out of range for m={geom.m}")
        return self

    @property
    def theta_count(self) -> int:
        return 1 if "theta" in self.kind else 0


# ---------------------------------------------------------------------------
# angle bookkeeping


def reduce_v(v, beta: float):
    """Reduce ``v`` modulo ``2 beta pi`` into ``[-beta pi, beta pi)``."""
    period = 2.0 * beta * math.pi
    return (v + beta * math.pi) % period - beta * math.pi


def residue_indices(v: float, beta: float) -> tuple[list[int], list[int]]:
    """Indices k with |v + 2 k beta pi| < pi, and those on the jump |.| = pi."""
    span = int(math.ceil(1.0 / beta)) + 2
    inside, half = [], []
    for k in range(-span, span + 1):
        phi = v + 2 * k * beta * math.pi
        gap = abs(abs(phi) - math.pi)
        if gap <= _DISC_TOL:
            half.append(k)
        elif abs(phi) < math.pi:
            inside.append(k)
    return inside, half


def discontinuity_distance(v: float, beta: float) -> float:
    """Distance from v to the jump set {±pi mod 2 beta pi}."""
    period = 2.0 * beta * math.pi
    d1 = abs(((v - math.pi) + 0.5 * period) % period - 0.5 * period)
    d2 = abs(((v + math.pi) + 0.5 * period) % period - 0.5 * period)
    return min(d1, d2)


def _integer_inverse(beta: float) -> bool:
    q = 1.0 / beta
    return abs(q - round(q)) < 1e-13


# ---------------------------------------------------------------------------
# series representation of P


def _log_majorant(nu: np.ndarray, z: float) -> np.ndarray:
    """log of exp(-z) (z/2)^nu / Gamma(nu+1) * min(e^z, e^{z^2/(4(nu+1))})."""
    if z == 0.0:
        return np.where(nu == 0, 0.0, -np.inf)
    nu = np.maximum(nu, 0.0)
    return nu * (math.log(z) - math.log(2.0)) - _lgamma(nu + 1.0) + np.minimum(0.0, z * z / (4.0 * (nu + 1.0)) - z)


def series_terms_needed(z_max: float, beta: float, cfg: SeriesConfig = DEFAULT_SERIES, tol: float = 1e-18) -> tuple[int, float]:
    """Truncation index K and a rigorous bound on the discarded scaled tail.

    The tail of every jet component is dominated by
    ``sum_{k>K} 2 (1 + nu_k)^2 exp(-z) I_{nu_k - 2}(z)`` with ``nu_k = k/beta``,
    which in turn is bounded with the Poisson majorant of ``I``.
    """
    tol = max(tol, 0.0)
    step = 64
    k0 = 1
    while True:
        k = np.arange(k0, k0 + step, dtype=float)
        nu = k / beta
        logt = math.log(2.0) + 2.0 * np.log1p(nu) + _log_majorant(nu - 2.0, z_max)
        t = np.exp(logt)
        # tail after index K: reverse cumulative sum plus geometric remainder
        ratio = t[-1] / t[-2] if t[-2] > 0 else 0.0
        if ratio < 1.0:
            rem = t[-1] * ratio / (1.0 - ratio)
            tails = np.cumsum(t[::-1])[::-1] - t + rem
            hit = np.flatnonzero((tails <= tol) & (nu >= 2.0))
            if hit.size:
                K = int(k[hit[0]])
                return K, float(tails[hit[0]])
        k0 += step
        if k0 > cfg.n_max_cap:
            return cfg.n_max_cap, math.inf


def _series_jet_arrays(z: np.ndarray, v: np.ndarray, beta: float, nz: int, with_v: bool, cfg: SeriesConfig):
    """Scaled jet exp(-z) * {P, P_z, P_zz, P_v, P_zv} by the Bessel series.

    Returns (jet dict, abs error dict, converged flag). ``z`` and ``v`` are
    1-D arrays of equal length.
    """
    zmax = float(z.max()) if z.size else 0.0
    K, tail = series_terms_needed(zmax, beta, cfg)
    converged = math.isfinite(tail)
    k = np.arange(0, K + 1, dtype=float)
    nu = k / beta
    eps_k = np.where(k == 0, 1.0, 2.0)
    jet_i = specfun.ive_jet(nu[None, :], z[:, None], nz)
    ang = (k[None, :] / beta) * v[:, None]
    c = np.cos(ang)
    out, err = {}, {}
    zero = z == 0.0
    base = [TWO_PI * eps_k[None, :] * ji for ji in jet_i]
    for j in range(nz + 1):
        bj = np.where(zero[:, None], 0.0, base[j]) if j else base[j]
        name = ["P", "Pz", "Pzz"][j]
        out[name] = (bj * c).sum(axis=1)
        err[name] = 8.0 * _EPS * (np.abs(bj) * (1 + k[None, :])).sum(axis=1) + TWO_PI * tail
    if with_v:
        s = np.sin(ang) * (-(k[None, :] / beta))
        for j in range(min(nz, 1) + 1):
            bj = np.where(zero[:, None], 0.0, base[j])
            name = ["Pv", "Pzv"][j]
            out[name] = (bj * s).sum(axis=1)
            err[name] = 8.0 * _EPS * (np.abs(bj) * (1 + k[None, :]) ** 2 / beta).sum(axis=1) + TWO_PI * tail
    return out, err, converged


def p_series(z: float, v: float, beta: float, precision: str = "auto", cfg: SeriesConfig = DEFAULT_SERIES) -> tuple[float, float]:
    """Unscaled ``P(z, v)`` from the Bessel series, with an error bound.

    In double precision the oscillating sum loses about ``log10(e^z / |P|)``
    digits, which is catastrophic in the shadow of the cone at large ``z``.
    ``precision="auto"`` detects that loss from the double-precision error
    bound and re-evaluates the same series with mpmath at a working
    precision sized to the cancellation; ``"double"`` and ``"extended"``
    force one path.
    """
    if z < 0:
        raise DomainError("z must be >= 0")
    if precision not in ("auto", "double", "extended"):
        raise DomainError("precision must be auto, double or extended")
    v = float(reduce_v(v, beta))
    if precision != "extended":
        jet, err, _ = _series_jet_arrays(np.array([z]), np.array([v]), beta, 0, False, cfg)
        scale = math.exp(z) if z < 700 else math.inf
        val, e = float(jet["P"][0]) * scale, float(err["P"][0]) * scale
        if precision == "double" or e <= 1e-11 * max(1.0, abs(val)):
            return val, e
    return _p_series_mp(z, v, beta, cfg)


def _p_series_mp(z: float, v: float, beta: float, cfg: SeriesConfig) -> tuple[float, float]:
    import mpmath

    # digits lost to cancellation ~ z(1 - cos) / ln 10, plus a margin
    dps = int(30 + 2.0 * z / math.log(10.0))
    with mpmath.workdps(dps):
        zz = mpmath.mpf(z)
        vb = mpmath.mpf(v) / mpmath.mpf(beta)
        total = mpmath.besseli(0, zz)
        tol = mpmath.mpf(10) ** (-(dps - 5)) * mpmath.e ** zz
        k = 1
        while True:
            term = 2 * mpmath.besseli(mpmath.mpf(k) / beta, zz) * mpmath.cos(k * vb)
            total += term
            if abs(term) < tol and k / beta > z:
                break
            k += 1
            if k > cfg.n_max_cap:
                break
        val = 2 * mpmath.pi * total
        return float(val), float(abs(val)) * 1e-15 + float(tol) * 10


# ---------------------------------------------------------------------------
# contour term E(z, v)


class _FParts:
    """Trigonometric constants of the contour integrand at fixed (v, beta)."""

    def __init__(self, v: float, beta: float, on_jump: bool = False):
        self.beta = beta
        self.a = v / beta
        self.b = math.pi / beta
        self.cm = (v - math.pi) / beta
        self.cp = (v + math.pi) / beta
        self.sb = math.sin(self.b)
        self.sa, self.ca = math.sin(self.a), math.cos(self.a)
        self.hm = math.sin(0.5 * self.cm) ** 2
        self.hp = math.sin(0.5 * self.cp) ** 2
        # pick the factor that can vanish and split it off
        self.minus_near = self.hm <= self.hp
        if on_jump:
            if self.minus_near:
                self.hm = 0.0
            else:
                self.hp = 0.0
        sc_m = 0.0 if (on_jump and self.minus_near) else math.sin(self.cm)
        sc_p = 0.0 if (on_jump and not self.minus_near) else math.sin(self.cp)
        self.sin_cm, self.sin_cp = sc_m, sc_p
        self.A = self.sa * (sc_m if self.minus_near else sc_p)
        self.dA = math.sin(self.a + (self.cm if self.minus_near else self.cp)) / beta
        self.width = 2.0 * beta * math.sqrt(min(self.hm, self.hp))

    def F(self, y: np.ndarray) -> np.ndarray:
        sh = 2.0 * np.sinh(0.5 * y / self.beta) ** 2
        d1 = sh + 2.0 * self.hm
        d2 = sh + 2.0 * self.hp
        if self.minus_near:
            return 2.0 * self.sb * (self.A / (d1 * d2) - self.ca / d2)
        return 2.0 * self.sb * (self.A / (d1 * d2) - self.ca / d1)

    def Fv(self, y: np.ndarray) -> np.ndarray:
        sh = 2.0 * np.sinh(0.5 * y / self.beta) ** 2
        d1 = sh + 2.0 * self.hm
        d2 = sh + 2.0 * self.hp
        dd1 = self.sin_cm / self.beta
        dd2 = self.sin_cp / self.beta
        main = self.dA / (d1 * d2) - self.A * (dd1 / d1 + dd2 / d2) / (d1 * d2)
        if self.minus_near:
            rest = self.sa / (self.beta * d2) + self.ca * dd2 / (d2 * d2)
        else:
            rest = self.sa / (self.beta * d1) + self.ca * dd1 / (d1 * d1)
        return 2.0 * self.sb * (main + rest)


def _e_upper_limit(z: float, beta: float, n: int) -> float:
    """y beyond which exp(-z(cosh y - 1)) (cosh y - 1)^n e^{-y/beta} < e^{-48}."""
    rate = 1.0 / beta - n
    y = 1.0
    for _ in range(200):
        if z * (math.cosh(y) - 1.0) + rate * y > 48.0:
            return y
        y *= 1.25
    return y


def _e_integral(z: float, v: float, beta: float, n: int, with_v: bool, cfg: QuadConfig, on_jump: bool = False) -> tuple[float, float]:
    """d^n/dz^n [exp(z) E] (and its v-derivative) as an integral in y."""
    if math.sin(math.pi / beta) == 0.0 or _integer_inverse(beta):
        return 0.0, 0.0
    if z == 0.0 and n >= 1.0 / beta:
        raise DomainError("z-derivative of exp(z)E diverges at z = 0 for this order")
    parts = _FParts(v, beta, on_jump)
    if with_v and on_jump:
        raise DiscontinuityError("angle derivative of E does not exist on the jump set")
    Y = _e_upper_limit(z, beta, n)
    knots = []
    w = parts.width
    if 0.0 < w < 1.0:
        s = 0.25 * w
        while s < min(Y, 2.0):
            knots.append(s)
            s *= 2.0
    if z > 1.0:
        s = 1.0 / math.sqrt(z)
        while s < Y:
            knots.append(s)
            s *= 2.0
    knots.extend([1.0, 2.0, 4.0, 8.0])
    base = parts.Fv if with_v else parts.F

    def f(y: np.ndarray) -> np.ndarray:
        ch = np.cosh(y) - 1.0
        g = np.exp(-z * ch) * base(y)
        if n:
            g = g * (-ch) ** n
        return g

    res = integrate_finite(f, 0.0, Y, cfg.with_(split_points=tuple(knots)))
    return res.value, res.err_estimate


def e_scaled(z: float, v: float, beta: float, order_z: int = 0, with_v: bool = False, cfg: QuadConfig = DEFAULT_QUAD) -> tuple[float, float]:
    """``d^n/dz^n [exp(z) E(z, v)]`` (optionally also differentiated in v).

    This is the quantity bounded uniformly in z; the unscaled derivatives of
    E follow from it by the Leibniz rule.
    """
    _check_zv(z, v, beta)
    v = float(reduce_v(v, beta))
    if discontinuity_distance(v, beta) <= _DISC_TOL and not _integer_inverse(beta):
        raise DiscontinuityError(
            "v is on the jump set of E; evaluate P through carslaw_P, which adds the half-residue terms"
        )
    return _e_integral(z, v, beta, order_z, with_v, cfg)


def _check_zv(z: float, v: float, beta: float) -> None:
    if not (z >= 0 and math.isfinite(z)):
        raise DomainError("z must be finite and >= 0")
    if not math.isfinite(v):
        raise DomainError("v must be finite")
    if not (0 < beta <= 1):
        raise DomainError("beta must lie in (0, 1]")


def e_eval(z: float, v: float, beta: float, cfg: QuadConfig = DEFAULT_QUAD) -> tuple[float, float]:
    """Contour term ``E(z, v)``; exactly zero when ``1/beta`` is an integer."""
    val, err = e_scaled(z, v, beta, 0, False, cfg)
    s = math.exp(-z)
    return val * s, err * s


def e_derivatives(z: float, v: float, beta: float, order_z: int = 0, with_v: bool = False, cfg: QuadConfig = DEFAULT_QUAD) -> tuple[float, float]:
    """``d^n/dz^n E`` or ``d/dv d^n/dz^n E`` for ``n = order_z`` in {0, 1, 2}.

    Differentiation is done under the integral sign on ``exp(z) E`` and
    converted with ``E = exp(-z) * (exp(z) E)``.
    """
    if order_z not in (0, 1, 2):
        raise DomainError("order_z must be 0, 1 or 2")
    parts = [e_scaled(z, v, beta, j, with_v, cfg) for j in range(order_z + 1)]
    coef = {0: [1.0], 1: [-1.0, 1.0], 2: [1.0, -2.0, 1.0]}[order_z]
    s = math.exp(-z)
    val = s * sum(c * p[0] for c, p in zip(coef, parts))
    err = s * sum(abs(c) * p[1] for c, p in zip(coef, parts))
    return val, err


# ---------------------------------------------------------------------------
# Carslaw representation of P


def _carslaw_jet_scalar(z: float, v: float, beta: float, nz: int, with_v: bool, cfg: QuadConfig):
    """Scaled jet exp(-z) * {P, P_z, P_zz, P_v, P_zv} from the residue form."""
    inside, half = residue_indices(v, beta)
    jet = {"P": 0.0, "Pz": 0.0, "Pzz": 0.0, "Pv": 0.0, "Pzv": 0.0}
    err = {key: 0.0 for key in jet}
    for k in inside:
        phi = v + 2 * k * beta * math.pi
        c, s = math.cos(phi), math.sin(phi)
        w = TWO_PI * beta * math.exp(z * (c - 1.0))
        jet["P"] += w
        jet["Pz"] += c * w
        jet["Pzz"] += c * c * w
        jet["Pv"] += -z * s * w
        jet["Pzv"] += (-s - z * s * c) * w
    if half:
        # for integer 1/beta the half residues pair into one smooth residue at
        # angle pi, whose v-derivatives vanish; otherwise P jumps here
        if with_v and not _integer_inverse(beta):
            raise DiscontinuityError("v-derivatives are evaluated off the jump set")
        w = math.pi * beta * math.exp(-2.0 * z) * len(half)
        jet["P"] += w
        jet["Pz"] -= w
        jet["Pzz"] += w
    for key in jet:
        err[key] = 4 * _EPS * abs(jet[key])
    if _integer_inverse(beta):
        return jet, err
    on_jump = bool(half)
    ez2 = math.exp(-2.0 * z)
    # exp(-z) E = exp(-2z) (e^z E); skip when far below the residue part
    scale = max(abs(jet["P"]), 1e-300)
    if ez2 * 1e3 * (1.0 + 1.0 / max(z, 1e-150) ** 2) < 1e-18 * scale:
        for key in err:
            err[key] += ez2 * 1e3 * (1.0 + 1.0 / z ** 2)
        return jet, err
    eh = [_e_integral(z, v, beta, j, False, cfg, on_jump) for j in range(nz + 1)]
    comb = {0: [1.0], 1: [-1.0, 1.0], 2: [1.0, -2.0, 1.0]}
    for j, name in enumerate(["P", "Pz", "Pzz"][: nz + 1]):
        cs = comb[j]
        jet[name] += ez2 * sum(c * e[0] for c, e in zip(cs, eh[: j + 1]))
        err[name] += ez2 * sum(abs(c) * e[1] for c, e in zip(cs, eh[: j + 1]))
    if with_v:
        ev = [_e_integral(z, v, beta, j, True, cfg) for j in range(min(nz, 1) + 1)]
        jet["Pv"] += ez2 * ev[0][0]
        err["Pv"] += ez2 * ev[0][1]
        if nz >= 1:
            jet["Pzv"] += ez2 * (ev[1][0] - ev[0][0])
            err["Pzv"] += ez2 * (ev[1][1] + ev[0][1])
    return jet, err


def carslaw_P(z: float, v: float, beta: float, cfg: QuadConfig = DEFAULT_QUAD) -> tuple[float, float]:
    """Unscaled ``P(z, v)`` from residues, contour term and half residues."""
    _check_zv(z, v, beta)
    v = float(reduce_v(v, beta))
    jet, err = _carslaw_jet_scalar(z, v, beta, 0, False, cfg)
    if z > 700:
        raise OverflowError("P overflows a double for z > 700; use the scaled jet")
    s = math.exp(z)
    return jet["P"] * s, err["P"] * s


def p_jet(z: float, v: float, beta: float, nz: int = 0, with_v: bool = False, rep: str = "auto",
          qcfg: QuadConfig = DEFAULT_QUAD, scfg: SeriesConfig = DEFAULT_SERIES):
    """Scaled jet of P with the representation picked by ``rep``.

    ``auto`` uses the series where its cancellation is mild (small ``z`` or
    points lit by a residue) and the Carslaw form elsewhere.
    Returns (jet, err, rep_used, converged).
    """
    v = float(reduce_v(v, beta))
    if rep == "auto":
        rep = _choose_rep(z, v, beta)
    if rep == "series":
        jet, err, conv = _series_jet_arrays(np.array([z]), np.array([v]), beta, nz, with_v, scfg)
        return {k: float(a[0]) for k, a in jet.items()}, {k: float(a[0]) for k, a in err.items()}, "series", conv
    if rep != "carslaw":
        raise DomainError("rep must be auto, series or carslaw")
    if with_v and discontinuity_distance(v, beta) <= 1e-9 and not _integer_inverse(beta):
        # the full P is smooth across the jump set: average the two sides
        h = 1e-7
        ja, ea = _carslaw_jet_scalar(z, v + h, beta, nz, True, qcfg)
        jb, eb = _carslaw_jet_scalar(z, v - h, beta, nz, True, qcfg)
        jet = {k: 0.5 * (ja[k] + jb[k]) for k in ja}
        err = {k: 0.5 * (ea[k] + eb[k]) + abs(ja[k] - jb[k]) * 1e-6 for k in ja}
        return jet, err, "carslaw", True
    jet, err = _carslaw_jet_scalar(z, v, beta, nz, with_v, qcfg)
    return jet, err, "carslaw", True


def _lit_factor(z: float, v: float, beta: float) -> float:
    inside, half = residue_indices(v, beta)
    best = -2.0
    for k in inside + half:
        best = max(best, math.cos(v + 2 * k * beta * math.pi))
    return math.exp(z * (best - 1.0)) if best > -2.0 else 0.0


def _choose_rep(z: float, v: float, beta: float) -> str:
    if z <= 8.0:
        return "series"
    if z <= 30.0 and _lit_factor(z, v, beta) >= 1e-3:
        return "series"
    return "carslaw"


# ---------------------------------------------------------------------------
# kernel values


def _check_t(t: float) -> None:
    if not (t > 0 and math.isfinite(t)):
        raise DomainError("t must be positive and finite")


def _log_w(beta: float, r: float, rp: float, t: float) -> float:
    """log of exp(-(r - r')^2/4t) / (8 pi^2 beta t), the scale of Hhat / (e^{-z}P)."""
    return -math.log(8.0 * math.pi ** 2 * beta * t) - (r - rp) ** 2 / (4.0 * t)


def kernel_2d_series(beta: float, r: float, rp: float, v: float, t: float, cfg: SeriesConfig = DEFAULT_SERIES) -> KernelValue:
    """Planar factor Hhat by the Bessel series (vertex handled exactly)."""
    _check_t(t)
    if r == 0.0 or rp == 0.0:
        val = math.exp(-(r * r + rp * rp) / (4 * t)) / (4 * math.pi * beta * t)
        return KernelValue(val, 4 * _EPS * val, "series")
    z = r * rp / (2 * t)
    jet, err, conv = _series_jet_arrays(np.array([z]), np.array([float(reduce_v(v, beta))]), beta, 0, False, cfg)
    w = math.exp(_log_w(beta, r, rp, t))
    return KernelValue(w * float(jet["P"][0]), w * float(err["P"][0]), "series", conv)


def kernel_2d_carslaw(beta: float, r: float, rp: float, v: float, t: float, cfg: QuadConfig = DEFAULT_QUAD) -> KernelValue:
    """Planar factor Hhat by the Carslaw residue + contour form."""
    _check_t(t)
    z = r * rp / (2 * t)
    jet, err = _carslaw_jet_scalar(z, float(reduce_v(v, beta)), beta, 0, False, cfg)
    w = math.exp(_log_w(beta, r, rp, t))
    return KernelValue(w * jet["P"], w * err["P"], "carslaw")


def _tangential(geom: ConeGeometry, x: ConePoint, y: ConePoint, t: float):
    d = np.array(x.shat) - np.array(y.shat) if geom.m else np.zeros(0)
    R2 = float(d @ d)
    log_he = -0.5 * geom.m * math.log(4 * math.pi * t) - R2 / (4 * t)
    return d, R2, log_he


def kernel_full(geom: ConeGeometry, x: ConePoint, y: ConePoint, t: float, cfg: QuadConfig = DEFAULT_QUAD,
                rep: str = "auto", scfg: SeriesConfig = DEFAULT_SERIES) -> KernelValue:
    """H(x, y, t) = Hhat(r, theta, r', theta', t) (4 pi t)^{-m/2} exp(-R^2/4t)."""
    x.check(geom), y.check(geom)
    _check_t(t)
    _, _, log_he = _tangential(geom, x, y, t)
    args = KernelArgs.from_points(geom, x, y, t)
    if x.r == 0.0 or y.r == 0.0:
        kv = kernel_2d_series(geom.beta, x.r, y.r, args.v, t, scfg)
        he = math.exp(log_he)
        return KernelValue(kv.value * he, kv.err_estimate * he, kv.rep)
    jet, err, used, conv = p_jet(args.z, args.v, geom.beta, 0, False, rep, cfg, scfg)
    lw = _log_w(geom.beta, x.r, y.r, t) + log_he
    w = math.exp(lw)
    return KernelValue(float(w * jet["P"]), float(w * err["P"]), used, conv)


def log_kernel_full(geom: ConeGeometry, x: ConePoint, y: ConePoint, t: float, cfg: QuadConfig = DEFAULT_QUAD) -> float:
    """Natural log of H(x, y, t), finite even where H underflows."""
    _check_t(t)
    _, _, log_he = _tangential(geom, x, y, t)
    args = KernelArgs.from_points(geom, x, y, t)
    if x.r == 0.0 or y.r == 0.0:
        return -math.log(4 * math.pi * geom.beta * t) - (x.r ** 2 + y.r ** 2) / (4 * t) + log_he
    jet, _, _, _ = p_jet(args.z, args.v, geom.beta, 0, False, "auto", cfg)
    return _log_w(geom.beta, x.r, y.r, t) + log_he + math.log(jet["P"])


# ---------------------------------------------------------------------------
# derivatives


_NEEDS = {
    # kind: (z-order, needs v)
    "d_r": (1, False),
    "d_theta_over_r": (0, True),
    "d_si": (0, False),
    "d_t": (1, False),
    "d_r_dsi": (1, False),
    "d_si_dsj": (0, False),
    "d_theta_dsi_over_r": (0, True),
    "d_r_dtheta_over_r": (1, True),
    "d_t_dr": (2, False),
    "d_t_dtheta_over_r": (1, True),
    "d_t_dsi": (1, False),
    "d_t_dt": (2, False),
}


def _polar_parts(r: float, rp: float, t: float, jet: dict, err: dict):
    """Polar derivatives of Hhat divided by W, as {name: (value, err)}.

    With g = log G, G = exp(-(r^2+r'^2)/4t)/(8 pi^2 beta t), Hhat = G P(z, v),
    z = r r'/2t and v = beta(theta' - theta) (so (1/(beta r)) d_theta = -(1/r) d_v).
    """
    S = r * r + rp * rp
    g_r = -r / (2 * t)
    g_t = -1.0 / t + S / (4 * t * t)
    g_rt = r / (2 * t * t)
    g_tt = 1.0 / (t * t) - S / (2 * t ** 3)
    z = r * rp / (2 * t)
    z_r = rp / (2 * t)
    z_t = -z / t
    z_rt = -rp / (2 * t * t)
    z_tt = 2 * z / (t * t)
    P, Pz, Pzz = jet.get("P", 0.0), jet.get("Pz", 0.0), jet.get("Pzz", 0.0)
    Pv, Pzv = jet.get("Pv", 0.0), jet.get("Pzv", 0.0)
    eP, ePz, ePzz = err.get("P", 0.0), err.get("Pz", 0.0), err.get("Pzz", 0.0)
    ePv, ePzv = err.get("Pv", 0.0), err.get("Pzv", 0.0)
    out = {"hat": (P, eP)}
    out["t"] = (g_t * P + z_t * Pz, np.abs(g_t) * eP + np.abs(z_t) * ePz)
    out["tt"] = (
        (g_t * g_t + g_tt) * P + (2 * g_t * z_t + z_tt) * Pz + z_t * z_t * Pzz,
        np.abs(g_t * g_t + g_tt) * eP + np.abs(2 * g_t * z_t + z_tt) * ePz + z_t * z_t * ePzz,
    )
    if np.all(np.asarray(r) > 0):
        out["r"] = (g_r * P + z_r * Pz, np.abs(g_r) * eP + np.abs(z_r) * ePz)
        out["th"] = (-Pv / r, ePv / r)
        out["tr"] = (
            g_t * (g_r * P + z_r * Pz) + g_rt * P + g_r * z_t * Pz + z_rt * Pz + z_r * z_t * Pzz,
            np.abs(g_t) * (np.abs(g_r) * eP + np.abs(z_r) * ePz) + np.abs(g_rt) * eP + (np.abs(g_r * z_t) + np.abs(z_rt)) * ePz
            + np.abs(z_r * z_t) * ePzz,
        )
        out["tth"] = (-(g_t * Pv + z_t * Pzv) / r, (np.abs(g_t) * ePv + np.abs(z_t) * ePzv) / r)
        out["rth"] = (
            -((g_r / r - 1.0 / (r * r)) * Pv + (z_r / r) * Pzv),
            np.abs(g_r / r - 1.0 / (r * r)) * ePv + np.abs(z_r / r) * ePzv,
        )
    return out


def _tangential_parts(m: int, d: np.ndarray, R2: float, t: float, i, j):
    """Derivatives of H_E divided by H_E."""
    he_t = -m / (2 * t) + R2 / (4 * t * t)
    out = {"1": 1.0, "t": he_t, "tt": he_t * he_t + m / (2 * t * t) - R2 / (2 * t ** 3)}
    if i is not None:
        di = d[..., i]
        out["i"] = -di / (2 * t)
        out["ti"] = di / (2 * t * t) - di / (2 * t) * he_t
        if j is not None:
            out["ij"] = d[..., i] * d[..., j] / (4 * t * t) - (0.5 / t if i == j else 0.0)
    return out


def _assemble(kind: str, pol: dict, tan: dict):
    """Combine polar and tangential factors; returns (value, err) in units of W*H_E."""

    def p(name):
        return pol[name]

    if kind == "d_r":
        terms = [(p("r"), tan["1"])]
    elif kind == "d_theta_over_r":
        terms = [(p("th"), tan["1"])]
    elif kind == "d_si":
        terms = [(p("hat"), tan["i"])]
    elif kind == "d_t":
        terms = [(p("t"), tan["1"]), (p("hat"), tan["t"])]
    elif kind == "d_r_dsi":
        terms = [(p("r"), tan["i"])]
    elif kind == "d_si_dsj":
        terms = [(p("hat"), tan["ij"])]
    elif kind == "d_theta_dsi_over_r":
        terms = [(p("th"), tan["i"])]
    elif kind == "d_r_dtheta_over_r":
        terms = [(p("rth"), tan["1"])]
    elif kind == "d_t_dr":
        terms = [(p("tr"), tan["1"]), (p("r"), tan["t"])]
    elif kind == "d_t_dtheta_over_r":
        terms = [(p("tth"), tan["1"]), (p("th"), tan["t"])]
    elif kind == "d_t_dsi":
        terms = [(p("t"), tan["i"]), (p("hat"), tan["ti"])]
    elif kind == "d_t_dt":
        terms = [(p("tt"), tan["1"]), (p("t"), 2 * tan["t"]), (p("hat"), tan["tt"])]
    else:  # pragma: no cover - guarded by DerivOp
        raise DomainError(kind)
    val = sum(a[0] * c for a, c in terms)
    err = sum(a[1] * np.abs(c) for a, c in terms)
    return val, err


def _deriv_log_scale(geom: ConeGeometry, op: DerivOp, x: ConePoint, y: ConePoint, t: float, rep: str,
                     qcfg: QuadConfig, scfg: SeriesConfig):
    """(log W H_E, coefficient, coefficient error, rep) for op applied to H."""
    x.check(geom), y.check(geom), op.check(geom)
    _check_t(t)
    if op.spatial_polar and x.r == 0.0:
        raise DomainError(f"{op.kind} is not defined at the vertex r = 0")
    d, R2, log_he = _tangential(geom, x, y, t)
    args = KernelArgs.from_points(geom, x, y, t)
    nz, with_v = _NEEDS[op.kind]
    if args.z == 0.0:
        jet = {"P": TWO_PI, "Pz": 0.0, "Pzz": 0.0, "Pv": 0.0, "Pzv": 0.0}
        err = {k: 4 * _EPS * abs(val) for k, val in jet.items()}
        # every z-derivative enters multiplied by z_r, z_t, ... which vanish here
        used, conv = "series", True
    else:
        jet, err, used, conv = p_jet(args.z, args.v, geom.beta, nz, with_v, rep, qcfg, scfg)
    pol = _polar_parts(x.r, y.r, t, jet, err)
    tan = _tangential_parts(geom.m, d, R2, t, op.i, op.j)
    val, e = _assemble(op.kind, pol, tan)
    if op.frame == "paper" and op.theta_count:
        val, e = val * geom.beta, e * geom.beta
    return _log_w(geom.beta, x.r, y.r, t) + log_he, val, e, used, conv


def kernel_derivative(geom: ConeGeometry, op: DerivOp, x: ConePoint, y: ConePoint, t: float,
                      cfg: QuadConfig = DEFAULT_QUAD, method: str = "analytic", rep: str = "auto",
                      scfg: SeriesConfig = DEFAULT_SERIES, h: float | None = None) -> tuple[float, float]:
    """Apply ``op`` (in x and t) to H(x, y, t).

    ``analytic`` differentiates the chosen representation of P term by term
    (residue terms and the contour integrals for the Carslaw form).
    ``finite_difference`` uses central differences of :func:`kernel_full` on
    two step sizes combined by Richardson extrapolation; the error estimate
    is the Richardson correction plus propagated rounding.
    """
    if method == "analytic":
        lw, val, e, _, _ = _deriv_log_scale(geom, op, x, y, t, rep, cfg, scfg)
        w = math.exp(lw)
        return float(val * w), float(e * w)
    if method == "finite_difference":
        return _fd_derivative(geom, op, x, y, t, cfg, rep, h)
    raise DomainError("method must be 'analytic' or 'finite_difference'")


def log_abs_derivative(geom: ConeGeometry, op: DerivOp, x: ConePoint, y: ConePoint, t: float,
                       cfg: QuadConfig = DEFAULT_QUAD) -> float:
    """log |op H(x, y, t)|, usable where the value itself underflows."""
    lw, val, _, _, _ = _deriv_log_scale(geom, op, x, y, t, "auto", cfg, DEFAULT_SERIES)
    return lw + math.log(abs(val)) if val != 0.0 else -math.inf


def _shift(x: ConePoint, var: str, h: float, i: int | None = None) -> ConePoint:
    if var == "r":
        return ConePoint(x.r + h, x.theta, x.shat)
    if var == "theta":
        return ConePoint(x.r, x.theta + h, x.shat)
    s = list(x.shat)
    s[i] += h
    return ConePoint(x.r, x.theta, tuple(s))


_FD_PLAN = {
    # kind: list of (variable, index-attr) applied innermost first
    "d_r": ["r"],
    "d_theta_over_r": ["theta"],
    "d_si": ["si"],
    "d_t": ["t"],
    "d_r_dsi": ["si", "r"],
    "d_si_dsj": ["sj", "si"],
    "d_theta_dsi_over_r": ["si", "theta"],
    "d_r_dtheta_over_r": ["theta/r", "r"],
    "d_t_dr": ["r", "t"],
    "d_t_dtheta_over_r": ["theta", "t"],
    "d_t_dsi": ["si", "t"],
    "d_t_dt": ["tt"],
}


def _fd_derivative(geom, op, x, y, t, cfg, rep, h):
    op.check(geom)
    if op.spatial_polar and x.r == 0.0:
        raise DomainError(f"{op.kind} is not defined at the vertex r = 0")
    beta = geom.beta
    plan = _FD_PLAN[op.kind]

    def evaluate(hh: float) -> float:
        def H(xx: ConePoint, tt: float) -> float:
            return kernel_full(geom, xx, y, tt, cfg, rep).value

        def apply(steps, xx, tt):
            if not steps:
                return H(xx, tt)
            var, rest = steps[-1], steps[:-1]
            if var == "r":
                hr = min(hh, 0.5 * xx.r) if xx.r > 0 else hh
                return (apply(rest, _shift(xx, "r", hr), tt) - apply(rest, _shift(xx, "r", -hr), tt)) / (2 * hr)
            if var == "theta":
                ht = hh / max(xx.r, hh)
                val = (apply(rest, _shift(xx, "theta", ht), tt) - apply(rest, _shift(xx, "theta", -ht), tt)) / (2 * ht)
                return val / (beta * xx.r)
            if var == "theta/r":
                ht = hh / max(xx.r, hh)
                val = (apply(rest, _shift(xx, "theta", ht), tt) - apply(rest, _shift(xx, "theta", -ht), tt)) / (2 * ht)
                return val / (beta * xx.r)
            if var in ("si", "sj"):
                idx = op.i if var == "si" else op.j
                return (apply(rest, _shift(xx, "s", hh, idx), tt) - apply(rest, _shift(xx, "s", -hh, idx), tt)) / (2 * hh)
            if var == "t":
                ht = min(hh, 0.5 * tt)
                return (apply(rest, xx, tt + ht) - apply(rest, xx, tt - ht)) / (2 * ht)
            if var == "tt":
                ht = min(hh, 0.25 * tt)
                return (apply(rest, xx, tt + ht) - 2 * apply(rest, xx, tt) + apply(rest, xx, tt - ht)) / (ht * ht)
            raise DomainError(var)  # pragma: no cover

        return apply(plan, x, t)

    if h is None:
        scale = min(math.sqrt(t), x.r if x.r > 0 else math.sqrt(t))
        h = 0.02 * scale
    d1 = evaluate(h)
    d2 = evaluate(0.5 * h)
    rich = (4 * d2 - d1) / 3
    hval = abs(kernel_full(geom, x, y, t, cfg, rep).value)
    noise = 1e-14 * max(hval, abs(rich) * h) / (0.5 * h) ** min(op.order, 2)
    val = op.frame == "paper" and op.theta_count
    if val:
        rich *= beta
        d1 *= beta
        d2 *= beta
    return rich, abs(d2 - d1) / 3 + noise


# ---------------------------------------------------------------------------
# vectorised planar kernel for quadrature grids


def hhat_grid(beta: float, r, rp, dtheta, t: float, cfg: QuadConfig = DEFAULT_QUAD,
              scfg: SeriesConfig = DEFAULT_SERIES) -> np.ndarray:
    """Hhat on broadcast arrays of (r, r', theta' - theta) at fixed t.

    Uses the series for points where it is well conditioned and falls back
    to the Carslaw form point by point elsewhere.
    """
    _check_t(t)
    r_b, rp_b, th_b = np.broadcast_arrays(np.asarray(r, float), np.asarray(rp, float), np.asarray(dtheta, float))
    shape = r_b.shape
    rr, rpp, th = r_b.ravel(), rp_b.ravel(), th_b.ravel()
    z = rr * rpp / (2 * t)
    v = reduce_v(beta * wrap_angle(th), beta)
    out = np.empty_like(z)
    lit = np.array([_choose_rep(zi, vi, beta) == "series" for zi, vi in zip(z, v)]) if z.size else np.zeros(0, bool)
    if lit.any():
        # bucket by z so the truncation index follows the local argument
        idx = np.flatnonzero(lit)
        order = idx[np.argsort(z[idx])]
        for chunk in np.array_split(order, max(1, int(math.ceil(order.size / 4096)))):
            if chunk.size == 0:
                continue
            jet, _, _ = _series_jet_arrays(z[chunk], v[chunk], beta, 0, False, scfg)
            out[chunk] = jet["P"]
    for k in np.flatnonzero(~lit):
        jet, _ = _carslaw_jet_scalar(float(z[k]), float(v[k]), beta, 0, False, cfg)
        out[k] = jet["P"]
    w = np.exp(-(rr - rpp) ** 2 / (4 * t)) / (8 * math.pi ** 2 * beta * t)
    return (w * out).reshape(shape)


def hhat_modes(beta: float, r, rp, t: float, n_modes: int) -> np.ndarray:
    """Angular Fourier coefficients of Hhat: Hhat = sum_n c_n e^{i n (theta'-theta)}.

    ``c_n = (1/(2 pi beta)) (1/2t) exp(-(r - r')^2/4t) exp(-z) I_{|n|/beta}(z)``;
    returned for n = 0..n_modes-1 with shape (..., n_modes).
    """
    _check_t(t)
    r_b, rp_b = np.broadcast_arrays(np.asarray(r, float), np.asarray(rp, float))
    z = r_b * rp_b / (2 * t)
    nu = np.arange(n_modes) / beta
    iv = specfun.ive(nu, z[..., None])
    w = np.exp(-(r_b - rp_b) ** 2 / (4 * t)) / (4 * math.pi * beta * t)
    return w[..., None] * iv


# ---------------------------------------------------------------------------
# Weber's formula


def weber_check(mu: float, r: float, rp: float, t: float, cfg: QuadConfig | None = None) -> tuple[float, float, float]:
    """Both sides of Weber's second exponential integral.

    lhs = (1/2t) exp(-(r^2+r'^2)/4t) I_mu(r r'/2t) (closed form through the
    scaled Bessel function); rhs = int_0^inf exp(-lam^2 t) J_mu(lam r)
    J_mu(lam r') lam dlam by panel quadrature on the J-zero spacing.
    """
    cfg = cfg or QuadConfig(abs_tol=1e-11, rel_tol=1e-11, max_subdiv=20000)
    if mu < 0 or r < 0 or rp < 0 or not t > 0:
        raise DomainError("weber_check needs mu >= 0, r, r' >= 0, t > 0")
    z = r * rp / (2 * t)
    lhs = math.exp(-(r - rp) ** 2 / (4 * t)) / (2 * t) * specfun.ive(mu, z)
    if max(r, rp) == 0.0:
        rhs = 1.0 / (2 * t) if mu == 0 else 0.0
        return lhs, rhs, abs(lhs - rhs)

    def f(lam: np.ndarray) -> np.ndarray:
        return np.exp(-lam * lam * t) * specfun.jv(mu, lam * r) * specfun.jv(mu, lam * rp) * lam

    res = integrate_damped_oscillatory(f, math.pi / max(r, rp), t, cfg)
    return lhs, res.value, abs(lhs - res.value)


# ---------------------------------------------------------------------------
# distances and Euclidean reference


def cone_distance(geom: ConeGeometry, x: ConePoint, y: ConePoint) -> float:
    """Geodesic distance on C_beta x R^m."""
    dth = abs(wrap_angle(y.theta - x.theta))
    R2 = sum((a - b) ** 2 for a, b in zip(x.shat, y.shat))
    if geom.beta * dth <= math.pi:
        d2 = x.r ** 2 + y.r ** 2 - 2 * x.r * y.r * math.cos(geom.beta * dth) + R2
    else:
        d2 = (x.r + y.r) ** 2 + R2
    return math.sqrt(max(d2, 0.0))


def euclidean_kernel(m: int, d: float, t: float) -> float:
    """(4 pi t)^{-(m+2)/2} exp(-d^2/4t), the heat kernel of R^{m+2}."""
    return (4 * math.pi * t) ** (-(m + 2) / 2) * math.exp(-d * d / (4 * t))


# ---------------------------------------------------------------------------
# vectorised derivatives for quadrature grids


def _jet_grid(beta: float, z: np.ndarray, v: np.ndarray, nz: int, with_v: bool, cfg: QuadConfig, scfg: SeriesConfig):
    """Scaled P-jet on flat arrays: series where well conditioned, Carslaw elsewhere."""
    names = ["P", "Pz", "Pzz"][: nz + 1] + (["Pv", "Pzv"][: min(nz, 1) + 1] if with_v else [])
    jet = {k: np.zeros_like(z) for k in names}
    err = {k: np.zeros_like(z) for k in names}
    lit = np.array([_choose_rep(zi, vi, beta) == "series" for zi, vi in zip(z, v)], dtype=bool)
    idx = np.flatnonzero(lit)
    if idx.size:
        order = idx[np.argsort(z[idx])]
        for chunk in np.array_split(order, max(1, int(math.ceil(order.size / 2048)))):
            if chunk.size:
                j, e, _ = _series_jet_arrays(z[chunk], v[chunk], beta, nz, with_v, scfg)
                for k in names:
                    jet[k][chunk] = j[k]
                    err[k][chunk] = e[k]
    for k0 in np.flatnonzero(~lit):
        j, e, _, _ = p_jet(float(z[k0]), float(v[k0]), beta, nz, with_v, "carslaw", cfg, scfg)
        for k in names:
            jet[k][k0] = j[k]
            err[k][k0] = e[k]
    return jet, err


def kernel_derivative_grid(geom: ConeGeometry, op: DerivOp | None, x: ConePoint, rp, dtheta, t: float,
                           dshat=None, cfg: QuadConfig = DEFAULT_QUAD, scfg: SeriesConfig = DEFAULT_SERIES) -> np.ndarray:
    """``op H(x, y, t)`` (or H itself for ``op=None``) on a grid of y.

    ``rp`` and ``dtheta = theta' - theta`` broadcast together; ``dshat`` has
    a trailing axis of length m holding ``s_hat(y) - s_hat(x)``.
    """
    _check_t(t)
    x.check(geom)
    kind = "hat" if op is None else op.check(geom).kind
    if op is not None and op.spatial_polar and x.r == 0.0:
        raise DomainError(f"{kind} is not defined at the vertex r = 0")
    rp_b, th_b = np.broadcast_arrays(np.asarray(rp, float), np.asarray(dtheta, float))
    shape = rp_b.shape
    rp_f = rp_b.ravel()
    z = x.r * rp_f / (2 * t)
    v = reduce_v(geom.beta * wrap_angle(th_b.ravel()), geom.beta)
    nz, with_v = (0, False) if op is None else _NEEDS[kind]
    jet, err = _jet_grid(geom.beta, z, v, nz, with_v, cfg, scfg)
    zero = z == 0.0
    for k in jet:
        if k != "P":
            jet[k][zero] = 0.0
    pol = _polar_parts(x.r, rp_f, t, jet, err)
    if geom.m:
        if dshat is None:
            raise DomainError("dshat is required when m > 0")
        ds = np.broadcast_to(np.asarray(dshat, float), shape + (geom.m,)).reshape(-1, geom.m)
        d = -ds  # s_hat(x) - s_hat(y)
        R2 = np.sum(d * d, axis=1)
    else:
        d = np.zeros((rp_f.size, 0))
        R2 = np.zeros(rp_f.size)
    if op is None:
        val = pol["hat"][0]
    else:
        tan = _tangential_parts(geom.m, d, R2, t, op.i, op.j)
        val, _ = _assemble(kind, pol, tan)
        if op.frame == "paper" and op.theta_count:
            val = val * geom.beta
    logw = (-np.log(8.0 * math.pi ** 2 * geom.beta * t) - (x.r - rp_f) ** 2 / (4 * t)
            - 0.5 * geom.m * math.log(4 * math.pi * t) - R2 / (4 * t))
    return (np.exp(logw) * val).reshape(shape)


def gradient_components(m: int) -> tuple[DerivOp, ...]:
    """Orthonormal-frame components of the x-gradient."""
    return (DerivOp("d_r"), DerivOp("d_theta_over_r")) + tuple(DerivOp("d_si", i) for i in range(m))


def gradient_dt_components(m: int) -> tuple[DerivOp, ...]:
    """Orthonormal-frame components of the x-gradient of d_t."""
    return (DerivOp("d_t_dr"), DerivOp("d_t_dtheta_over_r")) + tuple(DerivOp("d_t_dsi", i) for i in range(m))


def log_gradient_norm(geom: ConeGeometry, x: ConePoint, y: ConePoint, t: float, cfg: QuadConfig = DEFAULT_QUAD) -> float:
    """log |grad_x H(x, y, t)|, kept in log form because it underflows in the far field."""
    comps = []
    lw = None
    for op in gradient_components(geom.m):
        lw, val, _, _, _ = _deriv_log_scale(geom, op, x, y, t, "auto", cfg, DEFAULT_SERIES)
        comps.append(float(val))
    norm = math.sqrt(sum(c * c for c in comps))
    return lw + math.log(norm) if norm > 0 else -math.inf


# ---------------------------------------------------------------------------
# invariant checks: heat equation, mass, semigroup, delta convergence


def _fd_heat_operator(geom: ConeGeometry, x: ConePoint, y: ConePoint, t: float, h: float, cfg: QuadConfig) -> float:
    """Second-order central differences of (d_t - Delta_x) H(x, y, t) with step h in every variable."""
    def H(p: ConePoint, tt: float) -> float:
        return kernel_full(geom, p, y, tt, cfg).value

    h0 = H(x, t)
    dt = (H(x, t + h) - H(x, t - h)) / (2 * h)
    up, um = H(ConePoint(x.r + h, x.theta, x.shat), t), H(ConePoint(x.r - h, x.theta, x.shat), t)
    lap = (up - 2 * h0 + um) / h ** 2 + (up - um) / (2 * h * x.r)
    k = h / (geom.beta * x.r)
    tp = H(ConePoint(x.r, wrap_angle(x.theta + k), x.shat), t)
    tm = H(ConePoint(x.r, wrap_angle(x.theta - k), x.shat), t)
    lap += (tp - 2 * h0 + tm) / h ** 2
    for i in range(geom.m):
        e = np.zeros(geom.m)
        e[i] = h
        sp = H(ConePoint(x.r, x.theta, tuple(np.asarray(x.shat) + e)), t)
        sm = H(ConePoint(x.r, x.theta, tuple(np.asarray(x.shat) - e)), t)
        lap += (sp - 2 * h0 + sm) / h ** 2
    return dt - lap


@dataclass(frozen=True)
class HeatResidual:
    residual_h: float
    residual_h2: float
    ratio: float

    @property
    def passed(self) -> bool:
        return 3.5 <= self.ratio <= 4.5


def heat_residual(geom: ConeGeometry, x: ConePoint, y: ConePoint, t: float, h: float = 0.02,
                  cfg: QuadConfig = DEFAULT_QUAD) -> HeatResidual:
    """Finite-difference residual of the heat equation at steps h and h/2.

    Central differences are second order, so the ratio of the two residuals
    tends to 4 when the kernel solves the equation.
    """
    x.check(geom), y.check(geom)
    if not x.r > 4 * h:
        raise DomainError("heat_residual needs r > 4h")
    if not t > 2 * h:
        raise DomainError("heat_residual needs t > 2h")
    a = _fd_heat_operator(geom, x, y, t, h, cfg)
    b = _fd_heat_operator(geom, x, y, t, h / 2, cfg)
    return HeatResidual(a, b, abs(a / b) if b != 0 else math.inf)


def _radial_nodes(r0: float, t: float, n_per: int, halfwidth: float = 14.0) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes on [0, r0 + halfwidth sqrt(t)] with unit-scale panels near r0."""
    hi = r0 + halfwidth * math.sqrt(t)
    edges = sorted({0.0, hi, *[min(hi, max(0.0, r0 + k * math.sqrt(t))) for k in (-8, -4, -2, -1, 0, 1, 2, 4, 8)]})
    xs, ws = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        if b > a:
            nx, nw = gauss_legendre(n_per, a, b)
            xs.append(nx)
            ws.append(nw)
    return np.concatenate(xs), np.concatenate(ws)


def _polar_integral(geom: ConeGeometry, fn, centers: Sequence[float], t: float, n_per: int, n_theta: int) -> float:
    """int fn(r', theta') beta r' dr' dtheta' with Gauss panels in r' and the trapezoid in theta'."""
    r0 = max(centers)
    rp, wr = _radial_nodes(r0, t, n_per)
    th = -math.pi + 2 * math.pi * np.arange(n_theta) / n_theta
    RP, TH = np.meshgrid(rp, th, indexing="ij")
    vals = fn(RP, TH)
    return float(np.sum(vals * (geom.beta * rp * wr)[:, None]) * 2 * math.pi / n_theta)


def mass_integral(geom: ConeGeometry, x: ConePoint, t: float, n_per: int = 24, n_theta: int = 96,
                  cfg: QuadConfig = DEFAULT_QUAD) -> tuple[float, float]:
    """``int H(x, y, t) dV_y`` over the 2-D cone (m = 0) and a resolution-halving error."""
    if geom.m != 0:
        raise UnsupportedConfigurationError("mass_integral integrates over the 2-D cone (m = 0)")
    x.check(geom)
    _check_t(t)

    def fn(RP, TH):
        return kernel_derivative_grid(geom, None, x, RP, TH - x.theta, t, cfg=cfg)

    fine = _polar_integral(geom, fn, [x.r], t, n_per, n_theta)
    coarse = _polar_integral(geom, fn, [x.r], t, n_per // 2, n_theta // 2)
    return fine, abs(fine - coarse)


def semigroup_check(geom: ConeGeometry, x: ConePoint, y: ConePoint, t1: float, t2: float,
                    n_per: int = 24, n_theta: int = 96, cfg: QuadConfig = DEFAULT_QUAD) -> tuple[float, float, float]:
    """``int H(x, w, t1) H(w, y, t2) dV_w`` against ``H(x, y, t1 + t2)``; returns (lhs, rhs, relative gap)."""
    if geom.m != 0:
        raise UnsupportedConfigurationError("semigroup_check integrates over the 2-D cone (m = 0)")
    x.check(geom), y.check(geom)
    _check_t(t1), _check_t(t2)

    def fn(RP, TH):
        a = kernel_derivative_grid(geom, None, x, RP, TH - x.theta, t1, cfg=cfg)
        b = kernel_derivative_grid(geom, None, y, RP, TH - y.theta, t2, cfg=cfg)
        return a * b

    lhs = _polar_integral(geom, fn, [x.r, y.r], max(t1, t2), n_per, n_theta)
    rhs = kernel_full(geom, x, y, t1 + t2, cfg).value
    return lhs, rhs, abs(lhs - rhs) / abs(rhs)


@dataclass(frozen=True)
class DeltaConvergence:
    ts: tuple[float, ...]
    errors: tuple[float, ...]
    slope: float


def delta_convergence(geom: ConeGeometry, x: ConePoint, ts: Sequence[float] = (0.1, 0.05, 0.025),
                      n_per: int = 24, n_theta: int = 128, cfg: QuadConfig = DEFAULT_QUAD) -> DeltaConvergence:
    """``|int H(x, y, t) f(y) dV - f(x)|`` for ``f = exp(-r^2)(1 + r^2 cos(theta)/2)``.

    The error is t Delta f(x) + O(t^2) off the vertex, so the log-log slope
    in t tends to 1. The vertex itself is excluded.
    """
    if geom.m != 0:
        raise UnsupportedConfigurationError("delta_convergence integrates over the 2-D cone (m = 0)")
    x.check(geom)
    if x.r == 0.0:
        raise DomainError("delta convergence is asserted off the vertex only")

    def f(r, th):
        return np.exp(-r * r) * (1.0 + 0.5 * r * r * np.cos(th))

    fx = float(f(x.r, x.theta))
    errs = []
    for t in ts:
        def fn(RP, TH, t=t):
            return kernel_derivative_grid(geom, None, x, RP, TH - x.theta, t, cfg=cfg) * f(RP, TH)

        errs.append(abs(_polar_integral(geom, fn, [x.r], t, n_per, n_theta) - fx))
    lt, le = np.log(np.asarray(ts, float)), np.log(np.asarray(errs))
    slope = float(np.polyfit(lt, le, 1)[0])
    return DeltaConvergence(tuple(float(t) for t in ts), tuple(errs), slope)
