"""Two-user closed forms, correlation-driven placements and rate lower bounds."""
from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass

import cvxpy as cp
import numpy as np

from .fairness_ao import optimal_wj_given_x
from .model import (
    SystemConfig,
    Topology,
    channel_correlation,
    jammer_channel,
    linspace_positions,
    zf_gains,
)
from .st_response import LinkState, equal_sinr_alloc, evaluate_jammer_action, waterfill
from .subsolver import SeparableQuadratic, SolveReport, project_positions, solve_p37

__all__ = [
    "K2Result",
    "IdealPositions",
    "eig2x2_closed",
    "pair_correlation",
    "maximize_pair_correlation",
    "k2_sumrate_procedure",
    "k2_fairness",
    "heuristic_positions",
    "ideal_positions",
    "full_correlation_residual",
    "check_full_correlation",
    "mrt_beam",
    "lb_sumrate",
    "lb_minrate",
]


@dataclass(frozen=True)
class K2Result:
    x_star: np.ndarray
    a_star: float
    w_star: np.ndarray
    rate: float
    rate_curve: list[tuple[float, float]]


@dataclass(frozen=True)
class IdealPositions:
    x_star: np.ndarray
    achieved: bool
    span: float


def eig2x2_closed(a: float, d1: float, d2: float, r_abs: float, N: int, tau: float) -> float:
    """Top eigenvalue of [[a N/d1^tau, sqrt(a(1-a)) r], [., (1-a) N/d2^tau]]."""
    if not 0.0 <= a <= 1.0:
        raise ValueError("a must lie in [0, 1]")
    p1, p2 = N / d1**tau, N / d2**tau
    if r_abs < 0 or r_abs > math.sqrt(p1 * p2) * (1 + 1e-12):
        raise ValueError(f"|r|={r_abs} outside [0, N/sqrt(d1^tau d2^tau)]")
    f = a * p1 + (1 - a) * p2
    disc = f * f - 4 * a * (1 - a) * (p1 * p2 - r_abs**2)
    if disc < -1e-12 * max(f * f, 1e-300):
        raise ValueError(f"negative discriminant {disc}")
    return 0.5 * (f + math.sqrt(max(disc, 0.0)))


def pair_correlation(config: SystemConfig, topology: Topology, x, i: int, j: int) -> float:
    return abs(channel_correlation(topology, config, x, i, j))


def _pair_terms(config, topology, x0, pairs, scale=None):
    """Summed separable minorant of sum_p scale_p |r_p(x)|^2, tangent at x0."""
    x0 = np.asarray(x0, dtype=float)
    k = 2 * np.pi / config.wavelength
    s = np.sin(topology.phi)
    amp = topology.d_J ** (-config.tau / 2)
    slope = np.zeros(x0.size)
    curv = 0.0
    const = 0.0
    for p, (i, j) in enumerate(pairs):
        c = 1.0 if scale is None else scale[p]
        r0 = channel_correlation(topology, config, x0, i, j)
        alpha = k * (s[j] - s[i])
        beta = np.angle(r0)
        coef = 2 * c * amp[i] * amp[j] * abs(r0)
        slope += coef * (-alpha * np.sin(alpha * x0 - beta))
        curv += coef * alpha**2
        const += c * abs(r0) ** 2
    return SeparableQuadratic(x0=x0, slope=slope, curvature=np.full(x0.size, curv), const=const)


PAIR_TOL = 1e-12
PAIR_MAX_ITER = 5000


def _sca_positions(config, topology, x_init, objective, step, tol=None, max_iter=None):
    """Generic monotone SCA loop on positions; stops on relative change ``tol``."""
    tol = config.eps_inner if tol is None else tol
    max_iter = config.max_inner if max_iter is None else max_iter
    start = time.perf_counter()
    x = project_positions(np.asarray(x_init, dtype=float), config.d_min, config.L)
    trace = [objective(x)]
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        x_new = step(x)
        f = objective(x_new)
        if f < trace[-1]:  # rounding only; keep the anchor
            converged = True
            break
        x = x_new
        trace.append(f)
        if abs(trace[-1] - trace[-2]) <= tol * max(abs(trace[-1]), 1e-300):
            converged = True
            break
    report = SolveReport(
        objective_trace=trace,
        final_objective=trace[-1],
        iterations=it,
        max_violation=0.0,
        wall_ms=(time.perf_counter() - start) * 1e3,
        converged=converged,
    )
    return x, report


def maximize_pair_correlation(config: SystemConfig, topology: Topology, i: int, j: int, x_init):
    """SCA ascent on |g_i^H(x) g_j(x)|^2; returns ``(x, report)``."""
    if np.isclose(np.sin(topology.phi[i]), np.sin(topology.phi[j]), rtol=0, atol=1e-15):
        x = np.asarray(x_init, dtype=float)
        r = pair_correlation(config, topology, x, i, j)
        return x, SolveReport([r**2], r**2, 0, 0.0, 0.0, True)

    def objective(x):
        return pair_correlation(config, topology, x, i, j) ** 2

    def step(x):
        quad = _pair_terms(config, topology, x, [(i, j)])
        return solve_p37(quad, config.d_min, config.L)[0]

    alpha = 2 * np.pi / config.wavelength * (np.sin(topology.phi[j]) - np.sin(topology.phi[i]))
    x, report = _sca_positions(config, topology, x_init, objective, step, PAIR_TOL, PAIR_MAX_ITER)
    trace = list(report.objective_trace)
    iters = report.iterations
    # SCA stops at any stationary point, saddles included; exact coordinate
    # moves escape them and SCA resumes from the improved point
    for _ in range(config.max_inner):
        x_new = _coordinate_sweep(x, alpha, config.d_min, config.L)
        f = objective(x_new)
        if f <= trace[-1] * (1 + PAIR_TOL):
            break
        x, rep = _sca_positions(config, topology, x_new, objective, step, PAIR_TOL, PAIR_MAX_ITER)
        trace += rep.objective_trace
        iters += rep.iterations + 1
    report.objective_trace[:] = trace
    report.final_objective = trace[-1]
    report.iterations = iters
    return x, report


def _coordinate_sweep(x, alpha: float, d_min: float, L: float) -> np.ndarray:
    """One pass of exact per-antenna maximization of |sum_n exp(j alpha x_n)|.

    With the other antennas fixed the objective is a sinusoid in x_n, so its
    maximum over the feasible interval is at a peak or an endpoint.
    """
    x = np.array(x, dtype=float)
    N = x.size
    for n in range(N):
        rest = np.sum(np.exp(1j * alpha * np.delete(x, n)))
        lo = x[n - 1] + d_min if n > 0 else 0.0
        hi = x[n + 1] - d_min if n < N - 1 else L
        if hi <= lo:
            continue
        cands = [lo, hi, x[n]]
        if rest != 0:
            period = 2 * np.pi / abs(alpha)
            peak = np.angle(rest) / alpha
            k0 = math.ceil((lo - peak) / period)
            k1 = math.floor((hi - peak) / period)
            cands += [peak + k * period for k in range(k0, k1 + 1)]
        vals = [abs(rest + np.exp(1j * alpha * c)) for c in cands]
        best = int(np.argmax(vals))
        if vals[best] > vals[2]:
            x[n] = min(max(cands[best], lo), hi)
    return x


def _require_k2(topology: Topology) -> None:
    if topology.K != 2:
        raise ValueError(f"two-user procedure needs K=2, got K={topology.K}")


def k2_sumrate_procedure(
    config: SystemConfig, topology: Topology, grid_eps: float = 0.01, x_init=None
) -> K2Result:
    _require_k2(topology)
    if not 0 < grid_eps <= 1:
        raise ValueError("grid_eps must lie in (0, 1]")
    x0 = linspace_positions(config.N, config.L) if x_init is None else x_init
    x, _ = maximize_pair_correlation(config, topology, 0, 1, x0)
    gains = zf_gains(topology, config)
    n = int(round(1 / grid_eps))
    grid = np.linspace(0.0, 1.0, n + 1)
    curve = []
    beams = []
    for a in grid:
        w, _ = optimal_wj_given_x(x, topology, config, weights=[a, 1 - a])
        rate = evaluate_jammer_action(config, topology, w, x, "sum", gains).sum_rate
        curve.append((float(a), rate))
        beams.append(w)
    k = int(np.argmin([r for _, r in curve]))
    return K2Result(x_star=x, a_star=curve[k][0], w_star=beams[k], rate=curve[k][1], rate_curve=curve)


def k2_fairness(config: SystemConfig, topology: Topology, x_init=None):
    """Returns ``(x, w_J, min_rate)``."""
    _require_k2(topology)
    x0 = linspace_positions(config.N, config.L) if x_init is None else x_init
    x, _ = maximize_pair_correlation(config, topology, 0, 1, x0)
    w, _ = optimal_wj_given_x(x, topology, config)
    rate = evaluate_jammer_action(config, topology, w, x, "min").min_rate
    return x, w, rate


def _max_min_step(config, topology, x0, pairs):
    quads = [_pair_terms(config, topology, x0, [p]) for p in pairs]
    N = len(x0)
    x = cp.Variable(N)
    t = cp.Variable()
    cons = [x[0] >= 0, x[N - 1] <= config.L]
    if N > 1:
        cons.append(cp.diff(x) >= config.d_min)
    for q in quads:
        cons.append(
            q.const + q.slope @ (x - x0) - 0.5 * q.curvature[0] * cp.sum_squares(x - x0) >= t
        )
    prob = cp.Problem(cp.Maximize(t), cons)
    try:
        prob.solve(solver=cp.CLARABEL)
    except cp.error.SolverError:
        return x0
    if x.value is None or prob.status not in ("optimal", "optimal_inaccurate"):
        return x0
    return project_positions(x.value, config.d_min, config.L)


def heuristic_positions(
    config: SystemConfig, topology: Topology, rule: str, x_init
) -> tuple[np.ndarray, SolveReport]:
    """Correlation-driven placement for K > 2 (rules: max_min_pair, max_sum_pair)."""
    pairs = list(itertools.combinations(range(topology.K), 2))
    x_init = np.asarray(x_init, dtype=float)
    if not pairs:
        return x_init, SolveReport([0.0], 0.0, 0, 0.0, 0.0, True)
    corr = [lambda x, p=p: pair_correlation(config, topology, x, *p) ** 2 for p in pairs]
    if rule == "max_sum_pair":

        def objective(x):
            return float(sum(c(x) for c in corr))

        def step(x):
            return solve_p37(_pair_terms(config, topology, x, pairs), config.d_min, config.L)[0]

        tol, max_iter = PAIR_TOL, PAIR_MAX_ITER

    elif rule == "max_min_pair":

        def objective(x):
            return float(min(c(x) for c in corr))

        def step(x):
            return _max_min_step(config, topology, x, pairs)

        tol, max_iter = config.eps_inner, config.max_inner

    else:
        raise ValueError(f"unknown rule {rule!r}")
    if len(pairs) == 1 or np.allclose(np.sin(topology.phi), np.sin(topology.phi[0]), atol=1e-15):
        i, j = pairs[0]
        if len(pairs) == 1:
            return maximize_pair_correlation(config, topology, i, j, x_init)
        return x_init, SolveReport([objective(x_init)], objective(x_init), 0, 0.0, 0.0, True)
    return _sca_positions(config, topology, x_init, objective, step, tol, max_iter)


def full_correlation_residual(x, topology: Topology, config: SystemConfig) -> float:
    """max over pairs of 1 - |sum_n exp(j k x_n (sin phi_i - sin phi_j))| / N."""
    x = np.asarray(x, dtype=float)
    s = np.sin(topology.phi)
    k = 2 * np.pi / config.wavelength
    worst = 0.0
    for i, j in itertools.combinations(range(topology.K), 2):
        val = abs(np.exp(1j * k * x * (s[i] - s[j])).sum()) / x.size
        worst = max(worst, 1.0 - val)
    return float(worst)


def check_full_correlation(x, topology: Topology, config: SystemConfig, tol: float = 1e-9) -> bool:
    return full_correlation_residual(x, topology, config) <= tol


def ideal_positions(topology: Topology, config: SystemConfig, decimals: int = 1) -> IdealPositions:
    """Arithmetic progression whose step is the LCM of the rounded pair periods."""
    s = np.sin(topology.phi)
    scale = 10**decimals
    ints = []
    for i, j in itertools.combinations(range(topology.K), 2):
        gap = abs(s[i] - s[j])
        if gap <= 1e-15:
            continue  # already aligned
        period = round(config.wavelength / gap, decimals)
        n = int(round(period * scale))
        if n == 0:
            raise ValueError(f"period of pair ({i}, {j}) rounds to zero")
        ints.append(n)
    if not ints:
        x = linspace_positions(config.N, config.L)
    else:
        step = math.lcm(*ints) / scale
        x = np.arange(config.N) * step
    return IdealPositions(
        x_star=x,
        achieved=check_full_correlation(x, topology, config),
        span=float(x[-1] - x[0]),
    )


def mrt_beam(topology: Topology, config: SystemConfig, x, i: int = 0) -> np.ndarray:
    g = jammer_channel(topology, config, x, i)
    return g / np.linalg.norm(g)


def _bound_link(config: SystemConfig, topology: Topology) -> LinkState:
    jam = config.N * topology.d_J ** (-config.tau)
    return LinkState(zf_gains(topology, config), config.Q_J_mw * jam + config.sigma2_mw)


def lb_sumrate(config: SystemConfig, topology: Topology) -> float:
    """Sum rate if every user received the full array gain of jamming."""
    return waterfill(_bound_link(config, topology), config.P_sum_mw).sum_rate


def lb_minrate(config: SystemConfig, topology: Topology) -> float:
    return equal_sinr_alloc(_bound_link(config, topology), config.P_sum_mw).min_rate
