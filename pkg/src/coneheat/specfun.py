"""Real-order Bessel functions and the Gamma function.

The modified Bessel function is evaluated in the scaled form
``ive(nu, z) = exp(-z) * I_nu(z)`` throughout; the unscaled value is a thin
wrapper. Two evaluation branches are used:

* the ascending power series, summed in log space. All of its terms are
  positive, so it is accurate for every argument, but its cost grows like
  ``z`` and it is reserved for the region where the asymptotic series
  cannot reach full precision;
* the Hankel large-argument expansion, used when ``z >= 25`` and the
  expansion actually converges to double precision (``nu**2`` small compared
  with ``z``). Elements for which it does not converge fall back to the
  series.

``J_nu`` uses Miller's backward recurrence with the Neumann normalisation
sum, which is stable for every real order and argument in range.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BesselOverflowError, DomainError

_LOG_MAX = 709.0
_LN2 = math.log(2.0)
_HANKEL_ZMIN = 25.0
_HANKEL_TERMS = 48
_BLOCK = 2_000_000

_lgamma = np.vectorize(math.lgamma, otypes=[float])


@dataclass(frozen=True)
class BesselOrder:
    """Nonnegative finite Bessel order."""

    nu: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.nu) or self.nu < 0:
            raise DomainError(f"Bessel order must be finite and >= 0, got {self.nu}")

    def __float__(self) -> float:
        return float(self.nu)


@dataclass(frozen=True)
class ScaledBesselValue:
    """Either ``I_nu(z)`` (``scaled=False``) or ``exp(-z) I_nu(z)``."""

    value: float
    scaled: bool
    z: float


def _order(nu) -> float:
    nu = float(nu)
    if not math.isfinite(nu) or nu < 0:
        raise DomainError(f"Bessel order must be finite and >= 0, got {nu}")
    return nu


def _arg(z) -> float:
    z = float(z)
    if not math.isfinite(z) or z < 0:
        raise DomainError(f"Bessel argument must be finite and >= 0, got {z}")
    return z


def gamma(x: float) -> float:
    """Gamma function for positive real ``x``."""
    x = float(x)
    if not x > 0:
        raise DomainError(f"gamma requires x > 0, got {x}")
    if x > 171.6:
        raise OverflowError(f"gamma({x}) overflows a double")
    return math.gamma(x)


def lgamma(x: float) -> float:
    """log Gamma(x) for positive real ``x``."""
    x = float(x)
    if not x > 0:
        raise DomainError(f"lgamma requires x > 0, got {x}")
    return math.lgamma(x)


# ---------------------------------------------------------------------------
# modified Bessel I, scaled


def _series_terms(nu: np.ndarray, z: np.ndarray) -> int:
    kpk = 0.5 * (np.sqrt(nu * nu + z * z) - nu)
    return int(np.max(kpk + 9.0 * np.sqrt(kpk + 1.0) + 30.0))


def _ive_series_jet(nu: np.ndarray, z: np.ndarray, order: int) -> list[np.ndarray]:
    """Power series for exp(-z) I_nu^{(j)}(z), j = 0..order, with z > 0."""
    out = [np.empty_like(z) for _ in range(order + 1)]
    if z.size == 0:
        return out
    ks = np.argsort(0.5 * (np.sqrt(nu * nu + z * z) - nu))
    nu_s, z_s = nu[ks], z[ks]
    start = 0
    while start < z_s.size:
        kmax = _series_terms(nu_s[start:start + 1], z_s[start:start + 1])
        rows = max(1, _BLOCK // max(kmax, 1))
        stop = min(z_s.size, start + rows)
        kmax = _series_terms(nu_s[start:stop], z_s[start:stop])
        n = nu_s[start:stop, None]
        x = z_s[start:stop, None]
        k = np.arange(1, kmax + 1, dtype=float)[None, :]
        logq = 2.0 * (np.log(x) - _LN2)
        logt = np.concatenate(
            [np.zeros((n.shape[0], 1)), np.cumsum(logq - np.log(k) - np.log(k + n), axis=1)],
            axis=1,
        )
        peak = logt.max(axis=1, keepdims=True)
        w = np.exp(logt - peak)
        base = n[:, 0] * (np.log(x[:, 0]) - _LN2) - _lgamma(n[:, 0] + 1.0) - x[:, 0] + peak[:, 0]
        kk = np.arange(0, kmax + 1, dtype=float)[None, :]
        p = 2.0 * kk + n
        logx = np.log(x[:, 0])
        for j in range(order + 1):
            if j == 0:
                s = w.sum(axis=1)
            elif j == 1:
                s = (w * p).sum(axis=1)
            else:
                s = (w * p * (p - 1.0)).sum(axis=1)
            # powers of 1/z stay in log space so subnormal z cannot overflow
            with np.errstate(over="ignore", under="ignore"):
                out[j][ks[start:stop]] = np.exp(base - j * logx) * s
        start = stop
    return out


def _hankel_coeffs(nu: np.ndarray) -> np.ndarray:
    mu = 4.0 * nu * nu
    k = np.arange(1, _HANKEL_TERMS + 1, dtype=float)
    fac = (mu[:, None] - (2.0 * k[None, :] - 1.0) ** 2) / (8.0 * k[None, :])
    return np.concatenate([np.ones((nu.size, 1)), np.cumprod(fac, axis=1)], axis=1)


def _ive_hankel_jet(nu: np.ndarray, z: np.ndarray, order: int):
    """Hankel expansion; returns (jet, converged mask)."""
    a = _hankel_coeffs(nu)
    k = np.arange(0, _HANKEL_TERMS + 1, dtype=float)[None, :]
    zp = z[:, None] ** (-k)
    terms = a * zp * (-1.0) ** k
    mag = np.abs(terms)
    # truncate at the smallest term; require it below double resolution
    idx = np.argmin(mag, axis=1)
    smallest = mag[np.arange(z.size), idx]
    ok = smallest <= 1e-17 * np.abs(terms[:, 0])
    mask = k <= idx[:, None]
    s0 = np.where(mask, terms, 0.0).sum(axis=1)
    pref = 1.0 / np.sqrt(2.0 * np.pi * z)
    jet = [pref * s0]
    if order >= 1:
        s1 = np.where(mask, terms * (1.0 - (k + 0.5) / z[:, None]), 0.0).sum(axis=1)
        jet.append(pref * s1)
    if order >= 2:
        jet.append((1.0 + nu * nu / (z * z)) * jet[0] - jet[1] / z)
    return jet, ok


def _ive_zero_jet(nu: np.ndarray, order: int) -> list[np.ndarray]:
    """Derivatives of I_nu at z = 0 (inf where singular)."""
    v0 = np.where(nu == 0.0, 1.0, 0.0)
    out = [v0]
    if order >= 1:
        d1 = np.where(nu == 1.0, 0.5, np.where((nu > 0) & (nu < 1), np.inf, 0.0))
        out.append(d1)
    if order >= 2:
        d2 = np.where(nu == 0.0, 0.5, np.where(nu == 2.0, 0.25, 0.0))
        d2 = np.where(((nu > 0) & (nu < 1)) | ((nu > 1) & (nu < 2)), np.inf, d2)
        out.append(d2)
    return out


def ive_jet(nu, z, order: int = 0):
    """Scaled values ``exp(-z) I_nu^{(j)}(z)`` for ``j = 0..order``.

    ``nu`` and ``z`` broadcast against each other. Returns a list of arrays
    (or floats when both inputs are scalars).
    """
    if order not in (0, 1, 2):
        raise DomainError("order must be 0, 1 or 2")
    scalar = np.ndim(nu) == 0 and np.ndim(z) == 0
    nu_b, z_b = np.broadcast_arrays(np.asarray(nu, dtype=float), np.asarray(z, dtype=float))
    shape = nu_b.shape
    n = nu_b.ravel().copy()
    x = z_b.ravel().copy()
    if np.any(~np.isfinite(n)) or np.any(n < 0):
        raise DomainError("Bessel order must be finite and >= 0")
    if np.any(np.isnan(x)) or np.any(x < 0):
        raise DomainError("Bessel argument must be >= 0")
    out = [np.empty_like(x) for _ in range(order + 1)]
    zero = x == 0.0
    if zero.any():
        for j, val in enumerate(_ive_zero_jet(n[zero], order)):
            out[j][zero] = val
    big = (~zero) & (x >= _HANKEL_ZMIN) & (n * n <= 4.0 * x)
    rest = (~zero) & (~big)
    if big.any():
        jet, ok = _ive_hankel_jet(n[big], x[big], order)
        idx = np.flatnonzero(big)
        for j in range(order + 1):
            out[j][idx[ok]] = jet[j][ok]
        rest[idx[~ok]] = True
    if rest.any():
        jet = _ive_series_jet(n[rest], x[rest], order)
        for j in range(order + 1):
            out[j][rest] = jet[j]
    res = [o.reshape(shape) for o in out]
    if scalar:
        return [float(r) for r in res]
    return res


def ive(nu, z):
    """Scaled modified Bessel function ``exp(-z) I_nu(z)`` (vectorised)."""
    return ive_jet(nu, z, 0)[0]


def ive_dz(nu, z):
    """``d/dz [exp(-z) I_nu(z)]`` without the cancellation of ``I' - I``.

    In the Hankel region the expansion is differentiated term by term, which
    keeps full relative accuracy as z grows; elsewhere the jet difference is
    used (its relative loss is at most about log10(2 z) digits there).
    """
    scalar = np.ndim(nu) == 0 and np.ndim(z) == 0
    nu_b, z_b = np.broadcast_arrays(np.asarray(nu, dtype=float), np.asarray(z, dtype=float))
    shape = nu_b.shape
    n = nu_b.ravel().copy()
    x = z_b.ravel().copy()
    j0, j1 = ive_jet(n, x, 1)
    out = j1 - j0
    big = (x >= _HANKEL_ZMIN) & (n * n <= 4.0 * x)
    if big.any():
        nb, xb = n[big], x[big]
        a = _hankel_coeffs(nb)
        k = np.arange(0, _HANKEL_TERMS + 1, dtype=float)[None, :]
        terms = a * xb[:, None] ** (-k) * (-1.0) ** k
        mag = np.abs(terms)
        idx = np.argmin(mag, axis=1)
        ok = mag[np.arange(xb.size), idx] <= 1e-17 * np.abs(terms[:, 0])
        mask = k <= idx[:, None]
        s1 = np.where(mask, -terms * (k + 0.5) / xb[:, None], 0.0).sum(axis=1)
        d = s1 / np.sqrt(2.0 * np.pi * xb)
        ib = np.flatnonzero(big)
        out[ib[ok]] = d[ok]
    out = out.reshape(shape)
    return float(out) if scalar else out


def log_iv(nu: float, z: float) -> float:
    """Natural log of ``I_nu(z)``; finite for every z > 0."""
    nu, z = _order(nu), _arg(z)
    if z == 0.0:
        return 0.0 if nu == 0.0 else -math.inf
    return math.log(ive(nu, z)) + z


def bessel_i(nu, z, scaled: bool = False) -> ScaledBesselValue:
    """Modified Bessel function of the first kind, real order ``nu >= 0``.

    With ``scaled=True`` the returned value is ``exp(-z) I_nu(z)``, finite for
    every ``z``. The unscaled value raises :class:`BesselOverflowError` when
    it does not fit in a double.
    """
    nu, z = _order(nu), _arg(z)
    s = ive(nu, z)
    if scaled:
        return ScaledBesselValue(s, True, z)
    if z > _LOG_MAX and (s == 0.0 or math.log(s) + z > _LOG_MAX):
        raise BesselOverflowError(
            f"I_{nu}({z}) overflows; request scaled=True for exp(-z) I_nu(z)"
        )
    return ScaledBesselValue(s * math.exp(z), False, z)


def bessel_i_prime(nu, z) -> float:
    """Derivative ``I'_nu(z)``.

    Undefined (infinite) at ``z = 0`` for ``0 < nu < 1``; the whole range
    ``nu < 1`` at ``z = 0`` is rejected.
    """
    nu, z = _order(nu), _arg(z)
    if z == 0.0:
        if nu < 1.0:
            raise DomainError("I'_nu(0) requires nu >= 1")
        return 0.5 if nu == 1.0 else 0.0
    d = ive_jet(nu, z, 1)[1]
    if z > _LOG_MAX:
        raise BesselOverflowError(f"I'_{nu}({z}) overflows; use ive_jet")
    return d * math.exp(z)


# ---------------------------------------------------------------------------
# Bessel J


def jv(nu: float, z):
    """Bessel function ``J_nu(z)`` for scalar ``nu >= 0`` and array ``z >= 0``."""
    nu = _order(nu)
    scalar = np.ndim(z) == 0
    x = np.atleast_1d(np.asarray(z, dtype=float)).ravel()
    if np.any(np.isnan(x)) or np.any(x < 0):
        raise DomainError("Bessel argument must be >= 0")
    out = np.zeros_like(x)
    zero = x == 0.0
    out[zero] = 1.0 if nu == 0.0 else 0.0
    small = (~zero) & (x <= 1.0)
    if small.any():
        out[small] = _jv_series(nu, x[small])
    pos = x > 1.0
    if pos.any():
        out[pos] = _jv_miller(nu, x[pos])
    return float(out[0]) if scalar else out.reshape(np.shape(z))


def _jv_series(nu: float, x: np.ndarray) -> np.ndarray:
    """Power series for ``0 < x <= 1``; 24 terms reach double precision."""
    q = -0.25 * x * x
    term = np.ones_like(x)
    acc = np.ones_like(x)
    for k in range(1, 24):
        term = term * q / (k * (k + nu))
        acc += term
    with np.errstate(under="ignore"):
        return np.exp(nu * (np.log(x) - _LN2) - math.lgamma(nu + 1.0)) * acc


def _jv_miller(nu: float, x: np.ndarray) -> np.ndarray:
    n_int = int(math.floor(nu))
    nu0 = nu - n_int
    top = max(float(n_int), float(x.max()))
    m = int(top + 40 + 6.0 * top ** (1.0 / 3.0))
    m += m % 2  # start on an even offset so the normalisation parity is fixed
    j_next = np.zeros_like(x)
    j_cur = np.full_like(x, 1e-300)
    norm = np.zeros_like(x)
    saved = np.zeros_like(x)
    # weights of the Neumann sum (z/2)^nu0 = sum_k w_k J_{nu0+2k}(z)
    for idx in range(m, -1, -1):
        if idx % 2 == 0:
            k = idx // 2
            if k == 0:
                w = 1.0 if nu0 == 0.0 else math.gamma(nu0 + 1.0)
            elif nu0 == 0.0:
                w = 2.0
            else:
                w = math.exp(math.log(nu0 + 2 * k) + math.lgamma(nu0 + k) - math.lgamma(k + 1))
            norm += w * j_cur
        if idx == n_int:
            saved = j_cur.copy()
        if idx == 0:
            break
        mu = nu0 + idx
        j_prev = (2.0 * mu / x) * j_cur - j_next
        j_next, j_cur = j_cur, j_prev
        big = np.abs(j_cur) > 1e250
        if big.any():
            j_cur[big] *= 1e-250
            j_next[big] *= 1e-250
            norm[big] *= 1e-250
            saved[big] *= 1e-250
    return saved * (0.5 * x) ** nu0 / norm


def bessel_j(nu, z) -> float:
    """Scalar ``J_nu(z)`` for ``nu >= 0``, ``z >= 0``."""
    return jv(_order(nu), _arg(z))


# ---------------------------------------------------------------------------
# weighted tail bound


def bessel_tail_bound(N: int, mu1: float, mu2: float, z: float, eps: float, *, beta: float) -> float:
    """Upper bound for ``sum_{k>=N} k^mu2 I_{k/beta - mu1}(z)``.

    The bound has the form ``C * z^(N/beta - mu1) * exp(3z/2 + eps z)``.
    Starting from the Poisson-integral majorant
    ``I_nu(z) <= (z/2)^nu e^z / Gamma(nu + 1)`` and
    ``sup_z z^a exp(-(1/2 + eps) z) = (a / (1/2 + eps))^a e^{-a}``,
    the constant ``C`` is the explicit series
    ``sum_k k^mu2 2^{-nu_k} sup_z(...) / Gamma(nu_k + 1)``, summed until the
    remaining geometric tail is below ``1e-12`` of the partial sum; that
    remainder bound is added so the result stays an upper bound.
    """
    if int(N) != N or N < 1:
        raise DomainError("N must be a positive integer")
    if not (0 < beta <= 1):
        raise DomainError("beta must lie in (0, 1]")
    if eps <= 0 or mu1 < 0 or mu2 < 0:
        raise DomainError("eps > 0 and mu1, mu2 >= 0 required")
    z = _arg(z)
    nu_n = N / beta - mu1
    if nu_n < 0:
        raise DomainError("need N/beta - mu1 >= 0")
    if z == 0.0 and nu_n > 0:
        return 0.0
    log_c = _log_tail_constant(int(N), mu1, mu2, eps, beta)
    log_z = 0.0 if nu_n == 0 else nu_n * math.log(z)
    return math.exp(log_c + log_z + (1.5 + eps) * z)


def _log_tail_constant(N: int, mu1: float, mu2: float, eps: float, beta: float) -> float:
    c = 0.5 + eps
    q_inf = (1.0 + 2.0 * eps) ** (-1.0 / beta)
    chunk = 256
    k0 = N
    total_log = -math.inf
    while True:
        k = np.arange(k0, k0 + chunk, dtype=float)
        a = (k - N) / beta
        nu = k / beta - mu1
        with np.errstate(divide="ignore", invalid="ignore"):
            sup = np.where(a > 0, a * np.log(a / c) - a, 0.0)
        logt = mu2 * np.log(k) + sup - nu * math.log(2.0) - _lgamma(nu + 1.0)
        m = max(total_log, float(logt.max()))
        total_log = m + math.log(math.exp(total_log - m) + float(np.exp(logt - m).sum()))
        ratio = math.exp(logt[-1] - logt[-2])
        q = max(ratio, q_inf)
        if q < 1.0:
            rem_log = logt[-1] + math.log(q / (1.0 - q))
            if rem_log - total_log < math.log(1e-12):
                return total_log + math.log1p(math.exp(rem_log - total_log))
        k0 += chunk
        if k0 > 10_000_000:
            raise DomainError("tail-bound constant failed to converge")
