"""Acceptance suite: one function per criterion, each returning a pass/fail line.

Random probe sets come from numpy's Philox counter-based generator keyed by
``(seed, criterion number)``, so every criterion draws an independent,
reproducible stream from the single run seed (default 42).
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable, Iterable, TextIO

import numpy as np

from . import specfun
from .cone_kernel import (
    ConeGeometry,
    ConePoint,
    DerivOp,
    carslaw_P,
    cone_distance,
    discontinuity_distance,
    euclidean_kernel,
    heat_residual,
    kernel_full,
    mass_integral,
    p_series,
    semigroup_check,
    weber_check,
)
from .estimator import (
    decay_exponent_scan,
    e_decay_stability,
    far_field_gradient_check,
    g_sum_exponent_scan,
    grad_dt_op,
    holder_exponent_scan,
)
from .solver import (
    angular_bump,
    convolve,
    fd_mixed,
    fd_time_derivative,
    gaussian_bump,
    holder_bump,
    pde_residual,
    schauder_stability,
    second_derivative_rep,
)

DEFAULT_SEED = 42


def probe_rng(seed: int, stream: int) -> np.random.Generator:
    """Philox generator keyed by (seed, stream)."""
    return np.random.Generator(np.random.Philox(key=np.array([seed, stream], dtype=np.uint64)))


@dataclass(frozen=True)
class CriterionResult:
    number: int
    title: str
    passed: bool
    detail: str
    seconds: float

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"[{tag}] criterion {self.number:2d} {self.title}: {self.detail} ({self.seconds:.1f} s)"


def _timed(number: int, title: str, body: Callable[[], tuple[bool, str]]) -> CriterionResult:
    t0 = time.perf_counter()
    ok, detail = body()
    return CriterionResult(number, title, bool(ok), detail, time.perf_counter() - t0)


# ---------------------------------------------------------------------------
# 1. representation agreement


def criterion_1(seed: int = DEFAULT_SEED, samples: int = 200) -> CriterionResult:
    def body():
        rng = probe_rng(seed, 1)
        worst, n = 0.0, 0
        for beta in (0.3, 0.5, 0.66, 0.8, 0.95):
            done = 0
            while done < samples:
                z = float(rng.uniform(0.0, 50.0))
                v = float(rng.uniform(-beta * math.pi, beta * math.pi))
                if discontinuity_distance(v, beta) < 1e-6:
                    continue
                ps, _ = p_series(z, v, beta)
                pc, _ = carslaw_P(z, v, beta)
                worst = max(worst, abs(ps - pc) / max(1.0, abs(ps)))
                done += 1
                n += 1
        return worst <= 1e-8, f"{n} tuples, max |P_series - P_carslaw| / max(1,|P|) = {worst:.3e} (gate 1e-8)"

    res = _timed(1, "representation agreement", body)
    if res.seconds > 60.0:
        return CriterionResult(1, res.title, False, res.detail + " but runtime exceeded 60 s", res.seconds)
    return res


# ---------------------------------------------------------------------------
# 2. Euclidean reduction


def criterion_2(seed: int = DEFAULT_SEED, samples: int = 50) -> CriterionResult:
    def body():
        rng = probe_rng(seed, 2)
        worst = 0.0
        for m in (0, 2):
            g = ConeGeometry(1.0, m)
            for _ in range(samples):
                x = ConePoint(float(rng.uniform(0, 3)), float(rng.uniform(-math.pi, math.pi)),
                              tuple(rng.uniform(-1, 1, m)))
                y = ConePoint(float(rng.uniform(0, 3)), float(rng.uniform(-math.pi, math.pi)),
                              tuple(rng.uniform(-1, 1, m)))
                t = float(rng.uniform(0.1, 2.0))
                h = kernel_full(g, x, y, t).value
                worst = max(worst, abs(h - euclidean_kernel(m, cone_distance(g, x, y), t)))
        return worst <= 1e-12, f"{2 * samples} tuples (m = 0, 2), max abs gap {worst:.3e} (gate 1e-12)"

    return _timed(2, "Euclidean reduction", body)


# ---------------------------------------------------------------------------
# 3. heat-equation residual


def criterion_3(seed: int = DEFAULT_SEED, probes: int = 20) -> CriterionResult:
    def body():
        rng = probe_rng(seed, 3)
        ratios = []
        for beta in (0.6, 0.8):
            for k in range(probes):
                m = 0 if k % 2 == 0 else 2
                g = ConeGeometry(beta, m)
                x = ConePoint(float(rng.uniform(0.2, 2.0)), float(rng.uniform(-math.pi, math.pi)),
                              tuple(rng.uniform(-0.5, 0.5, m)))
                y = ConePoint(float(rng.uniform(0.2, 2.0)), float(rng.uniform(-math.pi, math.pi)),
                              tuple(rng.uniform(-0.5, 0.5, m)))
                t = float(rng.uniform(0.2, 2.0))
                ratios.append(heat_residual(g, x, y, t, h=0.02).ratio)
        lo, hi = min(ratios), max(ratios)
        return 3.5 <= lo and hi <= 4.5, (f"{len(ratios)} probes (beta 0.6, 0.8; m 0/2), residual ratio under "
                                         f"halving in [{lo:.4f}, {hi:.4f}] (gate [3.5, 4.5])")

    return _timed(3, "heat-equation residual O(h^2)", body)


# ---------------------------------------------------------------------------
# 4. mass and semigroup


def criterion_4(seed: int = DEFAULT_SEED) -> CriterionResult:
    def body():
        rng = probe_rng(seed, 4)
        g = ConeGeometry(0.7, 0)
        worst_mass = 0.0
        for t in (0.3, 1.0):
            for _ in range(3):
                x = ConePoint(float(rng.uniform(0, 2)), float(rng.uniform(-math.pi, math.pi)))
                worst_mass = max(worst_mass, abs(mass_integral(g, x, t)[0] - 1.0))
        x = ConePoint(float(rng.uniform(0.2, 1.5)), float(rng.uniform(-math.pi, math.pi)))
        y = ConePoint(float(rng.uniform(0.2, 1.5)), float(rng.uniform(-math.pi, math.pi)))
        _, _, gap = semigroup_check(g, x, y, 0.3, 0.5)
        ok = worst_mass <= 1e-6 and gap <= 1e-4
        return ok, f"max |mass - 1| = {worst_mass:.3e} (gate 1e-6); semigroup relative gap {gap:.3e} (gate 1e-4)"

    res = _timed(4, "mass conservation and semigroup", body)
    if res.seconds > 300.0:
        return CriterionResult(4, res.title, False, res.detail + " but runtime exceeded 5 min", res.seconds)
    return res


# ---------------------------------------------------------------------------
# 5. Weber's formula


def criterion_5(seed: int = DEFAULT_SEED, samples: int = 20) -> CriterionResult:
    def body():
        rng = probe_rng(seed, 5)
        beta = 0.7
        mus = (0.0, 0.5, 1.0, 1.0 / beta)
        worst = 0.0
        for k in range(samples):
            mu = mus[k % 4]
            r, rp = (float(a) for a in rng.uniform(0.0, 5.0, 2))
            t = float(rng.uniform(0.1, 2.0))
            worst = max(worst, weber_check(mu, r, rp, t)[2])
        return worst <= 1e-6, f"{samples} tuples, max gap {worst:.3e} (gate 1e-6)"

    return _timed(5, "Weber's formula", body)


# ---------------------------------------------------------------------------
# 6. decay exponents


def criterion_6(seed: int = DEFAULT_SEED) -> CriterionResult:
    radii = np.geomspace(0.1, 10.0, 7)

    def body():
        parts, ok = [], True
        for beta in (0.6, 0.8):
            g = ConeGeometry(beta, 0)
            for name, op in (("d_t", DerivOp("d_t")), ("T: d_r d_theta/r", DerivOp("d_r_dtheta_over_r")),
                             ("grad d_t", grad_dt_op(0))):
                rep = decay_exponent_scan(g, op, (0.6, 0.8), radii)
                ok &= rep.passed
                parts.append(f"b={beta} {name} {rep.fitted.slope:+.4f}/{rep.target_exponent:+.0f} r2={rep.fitted.r2:.4f}")
        return ok, "; ".join(parts) + " (tol 0.05, r2 >= 0.98)"

    return _timed(6, "decay exponents", body)


# ---------------------------------------------------------------------------
# 7. Hoelder exponent near the vertex


def criterion_7(seed: int = DEFAULT_SEED) -> CriterionResult:
    def body():
        parts, ok = [], True
        for beta in (0.8, 0.5):
            g = ConeGeometry(beta, 0)
            scan = holder_exponent_scan(g, DerivOp("d_r"), ConePoint(1.0, 0.3))
            ok &= scan.report.passed and scan.envelope_ok
            parts.append(f"b={beta} rho={g.rho:.2f} slope {scan.report.fitted.slope:.4f} "
                         f"r2={scan.report.fitted.r2:.4f} envelope {'ok' if scan.envelope_ok else 'violated'}")
        return ok, "; ".join(parts) + " (slope >= rho - 0.05)"

    return _timed(7, "Hoelder exponent", body)


# ---------------------------------------------------------------------------
# 8. E-decay


def criterion_8(seed: int = DEFAULT_SEED) -> CriterionResult:
    def body():
        parts, ok = [], True
        beta = 0.7
        for p, n in ((0, 0), (1, 1), (1, 2)):
            for with_v in (False, True):
                st = e_decay_stability(beta, p, n, with_v, form="theorem")
                good = math.isfinite(st.sup_large) and st.rel_change < 0.01
                ok &= good
                parts.append(f"(p={p},n={n}{',dv' if with_v else ''}) sup {st.sup_large:.4g} change {100 * st.rel_change:.3f}%")
        zero = []
        for b in (0.5, 1.0 / 3.0):
            for p, n in ((0, 0), (1, 1), (1, 2)):
                for with_v in (False, True):
                    zero.append(e_decay_stability(b, p, n, with_v, form="theorem").sup_large)
        ok &= all(s == 0.0 for s in zero)
        parts.append(f"1/beta in {{2,3}}: max sup {max(zero):.1g}")
        return ok, "beta=0.7 " + "; ".join(parts) + " (gate < 1%, exactly 0 for integer 1/beta)"

    return _timed(8, "E-decay", body)


# ---------------------------------------------------------------------------
# 9. G-sum regimes


def criterion_9(seed: int = DEFAULT_SEED) -> CriterionResult:
    def body():
        parts, ok = [], True
        for v in (2.0, 3.0):
            rep = g_sum_exponent_scan(0.7, v)
            ok &= rep.passed
            parts.append(f"v={v:g} slope {rep.fitted.slope:.4f}/{rep.target_exponent:g} r2={rep.fitted.r2:.4f}")
        return ok, "beta=0.7 " + "; ".join(parts) + " (tol 0.1)"

    return _timed(9, "G-sum regimes", body)


# ---------------------------------------------------------------------------
# 10. far-field gradient


def criterion_10(seed: int = DEFAULT_SEED) -> CriterionResult:
    def body():
        res = far_field_gradient_check(ConeGeometry(0.7, 0), (1e-4, 5e-5))
        drop = res.log_max_grad[0] - res.log_max_grad[1]
        need = 0.9 / 1e-4
        return drop >= need and res.bound_ok, (f"beta=0.7: log max|grad H| {res.log_max_grad[0]:.6g} -> "
                                               f"{res.log_max_grad[1]:.6g}, drop {drop:.6g} (gate >= {need:g}); "
                                               f"bound C e^(-1/s) {'holds' if res.bound_ok else 'fails'}")

    return _timed(10, "far-field gradient", body)


# ---------------------------------------------------------------------------
# 11. solver consistency


def plane_fd_oracle(f: Callable[[np.ndarray, np.ndarray], np.ndarray], t: float, L: float = 6.0,
                    dx: float = 0.05) -> tuple[np.ndarray, np.ndarray]:
    """Explicit five-point scheme for ``u_t = Delta u - f`` on [-L, L]^2 with zero data.

    Returns the grid coordinates and u(., t); the time step is dx^2/5.
    """
    n = int(round(2 * L / dx)) + 1
    xs = np.linspace(-L, L, n)
    X, Y = np.meshgrid(xs, xs, indexing="ij")
    src = f(X, Y)
    steps = int(math.ceil(t / (dx * dx / 5.0)))
    dt = t / steps
    u = np.zeros_like(X)
    for _ in range(steps):
        lap = np.zeros_like(u)
        lap[1:-1, 1:-1] = (u[2:, 1:-1] + u[:-2, 1:-1] + u[1:-1, 2:] + u[1:-1, :-2] - 4 * u[1:-1, 1:-1]) / dx ** 2
        u = u + dt * (lap - src)
        u[0, :] = u[-1, :] = u[:, 0] = u[:, -1] = 0.0
    return xs, u


def criterion_11(seed: int = DEFAULT_SEED, probes: int = 10) -> CriterionResult:
    def body():
        rng = probe_rng(seed, 11)
        g = ConeGeometry(0.8, 0)
        src = angular_bump()
        pde_ok, worst_pde = True, 0.0
        rep_ok, worst_rep = True, 0.0
        for _ in range(probes):
            x = ConePoint(float(rng.uniform(0.2, 2.5)), float(rng.uniform(-math.pi, math.pi)))
            t = float(rng.uniform(0.2, 1.0))
            pr = pde_residual(g, src, x, t)
            pde_ok &= pr.passed
            worst_pde = max(worst_pde, abs(pr.residual) / pr.err)
            for op, fd in (("d_t", fd_time_derivative), ("d_r_dtheta_over_r", fd_mixed)):
                a, ea = second_derivative_rep(g, src, op, x, t)
                b, eb = fd(g, src, x, t)
                gap = abs(a - b)
                rep_ok &= gap <= max(1e-4, ea + eb)
                worst_rep = max(worst_rep, gap)
        # beta = 1 against the plane finite-difference oracle
        g1 = ConeGeometry(1.0, 0)
        gb = gaussian_bump()
        tt = 0.5
        xs, u = plane_fd_oracle(lambda X, Y: np.exp(-(X * X + Y * Y)), tt)
        i0 = int(np.argmin(np.abs(xs)))
        worst_fd = 0.0
        for k in (0, 10, 20, 30, 40):
            worst_fd = max(worst_fd, abs(convolve(g1, gb, ConePoint(xs[i0 + k], 0.0), tt)[0] - u[i0 + k, i0]))
        fd_ok = worst_fd <= 1e-3
        st = schauder_stability(g, holder_bump(0.2))
        ok = pde_ok and rep_ok and fd_ok and st.passed and st.in_hypothesis
        detail = (f"PDE residual <= {worst_pde:.3f} x err at {probes} probes (gate 3); rep vs FD max gap "
                  f"{worst_rep:.2e} (gate max(1e-4, err)); beta=1 vs plane FD oracle {worst_fd:.2e} (gate 1e-3); "
                  f"Schauder ratios {', '.join(f'{r:.4f}' for r in st.ratios)} drift {st.drift:.4f} (gate < 2)")
        return ok, detail

    return _timed(11, "solver consistency", body)


# ---------------------------------------------------------------------------
# 12. special-function goldens


def criterion_12(seed: int = DEFAULT_SEED) -> CriterionResult:
    def body():
        zs = np.linspace(0.1, 50.0, 200)
        worst = 0.0
        for z in zs:
            s = math.sqrt(2.0 / (math.pi * z))
            pairs = (
                (specfun.bessel_i(0.5, z).value, s * math.sinh(z)),
                (specfun.bessel_i(1.5, z).value, s * (math.cosh(z) - math.sinh(z) / z)),
                (specfun.bessel_j(0.5, z), s * math.sin(z)),
                (specfun.bessel_j(1.5, z), s * (math.sin(z) / z - math.cos(z))),
            )
            for got, want in pairs:
                worst = max(worst, abs(got - want) / max(abs(want), 1e-300) if abs(want) > 1e-8 else abs(got - want))
        rec = 0.0
        for nu in np.linspace(1.0, 10.0, 19):
            for z in np.linspace(0.25, 50.0, 200):
                ip = specfun.bessel_i_prime(nu, z)
                i_nu = specfun.bessel_i(nu, z).value
                i_m = specfun.bessel_i(nu - 1.0, z).value
                rec = max(rec, abs(ip + nu * i_nu / z - i_m) / i_m)
        ok = worst <= 1e-9 and rec <= 1e-9
        return ok, f"half-integer closed forms max rel err {worst:.2e}; recurrence max rel residual {rec:.2e} (gate 1e-9)"

    return _timed(12, "specfun goldens", body)


CRITERIA: dict[int, Callable[..., CriterionResult]] = {
    1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4, 5: criterion_5, 6: criterion_6,
    7: criterion_7, 8: criterion_8, 9: criterion_9, 10: criterion_10, 11: criterion_11, 12: criterion_12,
}


def run_all(seed: int = DEFAULT_SEED, only: Iterable[int] | None = None, stream: TextIO | None = None) -> list[CriterionResult]:
    """Run the selected criteria in order, printing one line each to ``stream`` if given."""
    out = []
    for k in sorted(only) if only is not None else sorted(CRITERIA):
        res = CRITERIA[k](seed)
        out.append(res)
        if stream is not None:
            print(res.line(), file=stream, flush=True)
    return out
