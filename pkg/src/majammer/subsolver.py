"""Convex subproblems produced by the SCA steps.

* :func:`solve_p22` - beamformer/level step of the sum-rate AO (fixed positions).
* :func:`solve_p24` - position/level step of the sum-rate AO (fixed beamformer).
* :func:`solve_p37` - separable concave quadratic over the antenna-spacing chain.

The first two are conic programs solved with Clarabel through cvxpy. All
quantities are rescaled by the noise power so the solver sees O(1) numbers:
with ``kappa_i = sigma2 / gain_i`` and ``q = Q_J / sigma2`` the ST cost of
user ``i`` is ``kappa_i * (1 + q |w^H g_i|^2)``.

The slack variables Psi_i of the budget relaxation are carried as
``log_psi`` because they grow like exp(chi * P_sum / K).

After every conic solve the level ``eta`` and the slacks are recomputed in
closed form (smallest feasible level for the returned beamformer/positions),
which removes solver-tolerance infeasibility and can only lower the
objective. If the polished point does not improve on the anchor, the anchor
is returned unchanged.
"""
from __future__ import annotations

import math
import threading
import time
import warnings
from dataclasses import dataclass, field

import cvxpy as cp
import numpy as np
from scipy.optimize import brentq

from .model import SystemConfig, Topology, jammer_channels, zf_gains
from .surrogates import (
    cos_lower_coeffs,
    position_gain_lower_terms,
    position_gain_upper_terms,
)

__all__ = [
    "SolverSettings",
    "SolveReport",
    "AnchorInfeasibleError",
    "SumRateContext",
    "sumrate_context",
    "SeparableQuadratic",
    "jam_gains",
    "relaxed_objective",
    "budget_residuals",
    "active_users",
    "min_feasible_level",
    "solve_p22",
    "solve_p24",
    "solve_p37",
    "project_positions",
]

LN2 = math.log(2.0)
ETA_FLOOR = 1e-9
PSI_FLOOR = 1e-9
# slacks below this at the anchor are pinned to zero for the step: their
# budget share is under 1e-8 nats and their inverse would overflow
ACTIVE_LOG_PSI = math.log(PSI_FLOOR) + 1.0
GUARD = 1e-9  # lower bound on (sigma2 + Q_J * jam) / sigma2 inside logs


@dataclass(frozen=True)
class SolverSettings:
    kkt_tol: float = 1e-6
    feas_tol: float = 1e-8
    max_iters: int = 5000

    def __post_init__(self) -> None:
        if min(self.kkt_tol, self.feas_tol, self.max_iters) <= 0:
            raise ValueError("solver settings must be positive")


@dataclass
class SolveReport:
    objective_trace: list[float]
    final_objective: float
    iterations: int
    max_violation: float
    wall_ms: float
    converged: bool
    details: dict = field(default_factory=dict)


class AnchorInfeasibleError(ValueError):
    """Raised when an SCA anchor violates the relaxed budget constraints."""

    def __init__(self, residuals: dict[str, float]):
        self.residuals = residuals
        worst = ", ".join(f"{k}={v:.3e}" for k, v in residuals.items() if v > 0)
        super().__init__(f"anchor infeasible: {worst}")


@dataclass(frozen=True)
class SumRateContext:
    """Fixed data shared by every sum-rate subproblem of one scenario."""

    config: SystemConfig
    topology: Topology
    gains: np.ndarray
    kappa: np.ndarray
    q: float

    @property
    def chi(self) -> float:
        return self.config.chi

    @property
    def P_sum(self) -> float:
        return self.config.P_sum_mw


def sumrate_context(config: SystemConfig, topology: Topology) -> SumRateContext:
    gains = zf_gains(topology, config)
    return SumRateContext(
        config=config,
        topology=topology,
        gains=gains,
        kappa=config.sigma2_mw / gains,
        q=config.Q_J_mw / config.sigma2_mw,
    )


def jam_gains(ctx: SumRateContext, w_J, x) -> np.ndarray:
    """|w_J^H g_i(x)|^2 for every user."""
    G = jammer_channels(ctx.topology, ctx.config, x)
    return np.abs(np.asarray(w_J, dtype=complex).conj() @ G) ** 2


def relaxed_objective(ctx: SumRateContext, eta: float, w_J, x) -> float:
    """Sum rate in bits/s/Hz written through the water level (no surrogates)."""
    cost = ctx.kappa * (1 + ctx.q * jam_gains(ctx, w_J, x))
    return float(np.sum(np.maximum(np.log(eta) - np.log(cost), 0.0)) / LN2)


def _surrogate_value(ctx, eta, eta0, scaled_jam) -> float:
    """Upper surrogate of the objective: tangent ln(eta), minorized jamming."""
    lin = math.log(eta0) + (eta - eta0) / eta0
    arg = np.maximum(1 + scaled_jam, 1e-300)
    return float(np.sum(np.maximum(lin - np.log(ctx.kappa) - np.log(arg), 0.0)) / LN2)


def budget_residuals(ctx: SumRateContext, eta: float, log_psi, cost) -> dict[str, float]:
    """Violations of the smoothed budget pair (positive = violated)."""
    log_psi = np.asarray(log_psi, dtype=float)
    chi = ctx.chi
    res = {"budget": float(chi * ctx.P_sum - np.sum(np.logaddexp(0.0, log_psi)))}
    level = log_psi - chi * (eta - np.asarray(cost))
    for i, v in enumerate(level):
        res[f"level[{i}]"] = float(v)
    res["eta_floor"] = float(ETA_FLOOR - eta)
    return res


def active_users(log_psi0) -> np.ndarray:
    """Users whose slack is carried through the next convex step."""
    return np.asarray(log_psi0, dtype=float) >= ACTIVE_LOG_PSI


def _check_anchor(ctx, eta0, log_psi0, cost0, settings: SolverSettings) -> None:
    res = budget_residuals(ctx, eta0, log_psi0, cost0)
    # budget row is in nats summed over users; scale its tolerance accordingly
    tol = {k: settings.feas_tol * max(1.0, ctx.chi * ctx.P_sum) for k in res}
    if any(v > tol[k] for k, v in res.items()):
        raise AnchorInfeasibleError(res)


def min_feasible_level(ctx: SumRateContext, cost, log_psi0) -> tuple[float, np.ndarray]:
    """Smallest level meeting the linearized budget constraints for given costs.

    With the slack tangent taken at ``log_psi0``, each active slack is capped
    at ``Psi0 * (1 + chi*(eta - cost) - ln Psi0)``; inactive slacks take the
    exact cap ``exp(chi*(eta - cost))``. The slacks are set to their caps and
    the level is the root of the budget row.
    """
    cost = np.asarray(cost, dtype=float)
    log_psi0 = np.asarray(log_psi0, dtype=float)
    chi, target = ctx.chi, ctx.chi * ctx.P_sum
    act = active_users(log_psi0)
    lp0 = np.where(act, log_psi0, 0.0)
    # eta at which an active cap reaches the slack floor
    eta_floor = np.max((cost + (lp0 - 1 + PSI_FLOOR * np.exp(-lp0)) / chi)[act], initial=-np.inf)
    eta_floor = max(eta_floor, ETA_FLOOR)

    def log_caps(eta):
        arg = 1 + chi * (eta - cost) - lp0
        lin = lp0 + np.log(np.maximum(arg, 1e-300))
        return np.where(act, lin, chi * (eta - cost))

    def h(eta):
        return np.sum(np.logaddexp(0.0, log_caps(eta))) - target

    if h(eta_floor) >= 0:
        eta = eta_floor
    else:
        hi = eta_floor + max(1.0, abs(eta_floor))
        while h(hi) < 0:
            hi = eta_floor + 2 * (hi - eta_floor)
        eta = brentq(h, eta_floor, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
        # step just inside the feasible side of the root
        while h(eta) < 0:
            eta = eta + max(abs(eta), 1.0) * 4 * np.finfo(float).eps
    return float(eta), log_caps(eta)


def _real_rows(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Rows r_re, r_im with Re(a^H w) = r_re @ wv and Im(a^H w) = r_im @ wv."""
    return np.concatenate([a.real, a.imag]), np.concatenate([-a.imag, a.real])


# --- beamformer step ----------------------------------------------------


class _P22Problem:
    def __init__(self, K: int, N: int, chi: float, active: tuple[bool, ...]):
        idx = [i for i in range(K) if active[i]]
        A = len(idx)
        self.wv = cp.Variable(2 * N)
        self.eta = cp.Variable()
        self.rho = cp.Variable(A)
        self.t = cp.Variable(K)
        self.inv_eta0 = cp.Parameter(nonneg=True)
        self.obj_const = cp.Parameter(K)
        self.U = cp.Parameter((K, 2 * N))
        self.c = cp.Parameter(K)
        self.B = [cp.Parameter((2, 2 * N)) for _ in range(K)]
        self.kappa = cp.Parameter(K)
        self.lvl_const = cp.Parameter(A)
        self.inv_psi0 = cp.Parameter(A, nonneg=True)
        self.rho_min = cp.Parameter(A)
        self.budget_rhs = cp.Parameter()
        log_arg = self.c + self.U @ self.wv
        cons = [
            self.t >= self.obj_const + self.inv_eta0 * self.eta - cp.log(log_arg),
            self.t >= 0,
            cp.norm(self.wv) <= 1,
            self.eta >= ETA_FLOOR,
            log_arg >= GUARD,
            self.rho >= self.rho_min,
            cp.sum(cp.log(self.rho + self.inv_psi0)) >= self.budget_rhs,
        ]
        for a, i in enumerate(idx):
            cons.append(
                chi * (self.eta - self.kappa[i] - cp.sum_squares(self.B[i] @ self.wv))
                >= self.lvl_const[a] + self.rho[a]
            )
        self.problem = cp.Problem(cp.Minimize(cp.sum(self.t)), cons)


class _P24Problem:
    def __init__(self, K: int, N: int, chi: float, d_min: float, L: float, active: tuple[bool, ...]):
        idx = [i for i in range(K) if active[i]]
        A = len(idx)
        self.x = cp.Variable(N)
        self.eta = cp.Variable()
        self.rho = cp.Variable(A)
        self.t = cp.Variable(K)
        self.inv_eta0 = cp.Parameter(nonneg=True)
        self.obj_const = cp.Parameter(K)
        self.low_const = cp.Parameter(K)
        self.low_lin = cp.Parameter((K, N))
        self.low_sq = [cp.Parameter(N, nonneg=True) for _ in range(K)]
        self.low_m = [cp.Parameter(N) for _ in range(K)]
        self.up_const = cp.Parameter(K)
        self.up_lin = cp.Parameter((K, N))
        self.up_sq = [cp.Parameter(N, nonneg=True) for _ in range(K)]
        self.up_m = [cp.Parameter(N) for _ in range(K)]
        self.lvl_const = cp.Parameter(A)
        self.inv_psi0 = cp.Parameter(A, nonneg=True)
        self.rho_min = cp.Parameter(A)
        self.budget_rhs = cp.Parameter()
        cons = [
            self.t >= 0,
            self.eta >= ETA_FLOOR,
            self.rho >= self.rho_min,
            cp.sum(cp.log(self.rho + self.inv_psi0)) >= self.budget_rhs,
            self.x[0] >= 0,
            self.x[N - 1] <= L,
        ]
        if N > 1:
            cons.append(cp.diff(self.x) >= d_min)
        # epigraph variables for the quadratic parts keep the log argument affine
        self.s_low = cp.Variable(K)
        self.s_up = cp.Variable(A)
        for i in range(K):
            cons.append(
                self.s_low[i] >= cp.sum_squares(cp.multiply(self.low_sq[i], self.x) - self.low_m[i])
            )
        for a, i in enumerate(idx):
            cons.append(
                self.s_up[a] >= cp.sum_squares(cp.multiply(self.up_sq[i], self.x) - self.up_m[i])
            )
        log_arg = self.low_const + self.low_lin @ self.x - self.s_low
        cons += [
            log_arg >= GUARD,
            self.t >= self.obj_const + self.inv_eta0 * self.eta - cp.log(log_arg),
            chi * (self.eta - self.up_const[idx] - self.up_lin[idx, :] @ self.x - self.s_up)
            >= self.lvl_const + self.rho,
        ]
        self.problem = cp.Problem(cp.Minimize(cp.sum(self.t)), cons)


_cache = threading.local()


def _problem(kind: str, *key):
    store = getattr(_cache, "store", None)
    if store is None:
        store = _cache.store = {}
    full = (kind, *key)
    if full not in store:
        prob = _P22Problem(*key) if kind == "p22" else _P24Problem(*key)
        # cvxpy builds the first solve's data on a different path than later
        # parameter updates; one discarded solve keeps results bit-stable
        prob.fresh = True
        store[full] = prob
    return store[full]


def _set_common(prob, ctx: SumRateContext, eta0: float, log_psi0: np.ndarray) -> None:
    lp = log_psi0[active_users(log_psi0)]
    prob.inv_eta0.value = 1.0 / eta0
    prob.obj_const.value = math.log(eta0) - 1.0 - np.log(ctx.kappa)
    prob.lvl_const.value = lp - 1.0
    prob.inv_psi0.value = np.exp(-lp)
    prob.rho_min.value = PSI_FLOOR * np.exp(-lp)
    prob.budget_rhs.value = ctx.chi * ctx.P_sum - float(np.sum(lp))


def _run(prob, settings: SolverSettings) -> tuple[bool, int]:
    if prob.fresh:
        prob.fresh = False
        _run(prob, settings)
    try:
        with warnings.catch_warnings():
            # inaccurate solutions are polished and re-checked by the caller
            warnings.simplefilter("ignore", UserWarning)
            prob.problem.solve(
                solver=cp.CLARABEL,
                max_iter=settings.max_iters,
                tol_gap_abs=settings.kkt_tol * 1e-2,
                tol_gap_rel=settings.kkt_tol * 1e-2,
                tol_feas=settings.feas_tol,
            )
    except cp.error.SolverError:
        return False, settings.max_iters
    stats = prob.problem.solver_stats
    iters = int(stats.num_iters) if stats is not None and stats.num_iters is not None else 0
    return prob.problem.status in ("optimal", "optimal_inaccurate"), iters


def solve_p22(
    ctx: SumRateContext,
    eta0: float,
    w0,
    x,
    log_psi0,
    settings: SolverSettings | None = None,
):
    """One SCA step over (eta, w_J, Psi) with positions ``x`` held fixed.

    Returns ``(eta, w_J, log_psi, report)``; ``report.final_objective`` is the
    surrogate objective at the returned point, which upper-bounds the true
    relaxed objective there and never exceeds the anchor's objective.
    """
    settings = settings or SolverSettings()
    start = time.perf_counter()
    w0 = np.asarray(w0, dtype=complex)
    x = np.asarray(x, dtype=float)
    log_psi0 = np.asarray(log_psi0, dtype=float)
    K, N = ctx.topology.K, x.size
    G = jammer_channels(ctx.topology, ctx.config, x)
    proj0 = G.conj().T @ w0  # g_i^H w0
    jam0 = np.abs(proj0) ** 2
    cost0 = ctx.kappa * (1 + ctx.q * jam0)
    _check_anchor(ctx, eta0, log_psi0, cost0, settings)
    anchor_obj = relaxed_objective(ctx, eta0, w0, x)

    prob = _problem("p22", K, N, ctx.chi, tuple(active_users(log_psi0).tolist()))
    _set_common(prob, ctx, eta0, log_psi0)
    U = np.empty((K, 2 * N))
    for i in range(K):
        u = ctx.q * G[:, i] * proj0[i]
        U[i] = 2 * _real_rows(u)[0]
        re, im = _real_rows(G[:, i])
        prob.B[i].value = math.sqrt(ctx.kappa[i] * ctx.q) * np.vstack([re, im])
    prob.U.value = U
    prob.c.value = 1 - ctx.q * jam0
    prob.kappa.value = ctx.kappa
    ok, iters = _run(prob, settings)

    result = None
    if ok and prob.wv.value is not None:
        wv = prob.wv.value
        w = wv[:N] + 1j * wv[N:]
        nw = np.linalg.norm(w)
        if nw > 1:
            w = w / nw
        scaled = 2 * np.real(np.conj(w) @ (ctx.q * G * proj0)) - ctx.q * jam0
        if np.all(1 + scaled >= GUARD):
            cost = ctx.kappa * (1 + ctx.q * np.abs(G.conj().T @ w) ** 2)
            eta, log_psi = min_feasible_level(ctx, cost, log_psi0)
            obj = _surrogate_value(ctx, eta, eta0, scaled)
            if obj <= anchor_obj:
                result = (eta, w, log_psi, obj, cost)
    if result is None:
        eta, w, log_psi, obj, cost = eta0, w0, log_psi0, anchor_obj, cost0
    else:
        eta, w, log_psi, obj, cost = result
    res = budget_residuals(ctx, eta, log_psi, cost)
    res["norm"] = float(np.linalg.norm(w) - 1)
    viol = max(0.0, max(res.values()))
    report = SolveReport(
        objective_trace=[anchor_obj, obj],
        final_objective=obj,
        iterations=iters,
        max_violation=viol,
        wall_ms=(time.perf_counter() - start) * 1e3,
        converged=ok and viol <= settings.feas_tol * max(1.0, ctx.chi * ctx.P_sum),
        details={"status": prob.problem.status, "accepted": result is not None},
    )
    return eta, w, log_psi, report


# --- position step ------------------------------------------------------


def _position_surrogates(ctx: SumRateContext, w_J, x0):
    """Quadratic coefficients (about x0) of the scaled jamming minorant/majorant.

    For user i, with dx = x - x0:
      q * minorant = lc[i] + ll[i] @ dx - sum(lq[i] * dx**2)
      q * majorant = uc[i] + ul[i] @ dx + sum(uq[i] * dx**2)
    """
    K, N = ctx.topology.K, len(x0)
    lc, uc = np.empty(K), np.empty(K)
    ll, ul, lq, uq = (np.empty((K, N)) for _ in range(4))
    for i in range(K):
        wts, params, const = position_gain_lower_terms(x0, w_J, ctx.topology, ctx.config, i)
        val, slope, curv = cos_lower_coeffs(params)
        lc[i] = ctx.q * (2 * np.sum(wts * val) - const)
        ll[i] = 2 * ctx.q * wts * slope
        lq[i] = ctx.q * wts * curv
        base, wts, params = position_gain_upper_terms(x0, w_J, ctx.topology, ctx.config, i)
        val, slope, curv = cos_lower_coeffs(params)
        uc[i] = ctx.q * (base - 2 * np.sum(wts * val))
        ul[i] = -2 * ctx.q * wts * slope
        uq[i] = ctx.q * wts * curv
    return lc, ll, lq, uc, ul, uq


def solve_p24(
    ctx: SumRateContext,
    eta0: float,
    w_J,
    x0,
    log_psi0,
    settings: SolverSettings | None = None,
):
    """One SCA step over (eta, x, Psi) with the beamformer held fixed.

    Returns ``(eta, x, log_psi, report)`` with the same guarantees as
    :func:`solve_p22`.
    """
    settings = settings or SolverSettings()
    start = time.perf_counter()
    cfg = ctx.config
    w_J = np.asarray(w_J, dtype=complex)
    x0 = np.asarray(x0, dtype=float)
    log_psi0 = np.asarray(log_psi0, dtype=float)
    K, N = ctx.topology.K, x0.size
    jam0 = jam_gains(ctx, w_J, x0)
    cost0 = ctx.kappa * (1 + ctx.q * jam0)
    _check_anchor(ctx, eta0, log_psi0, cost0, settings)
    anchor_obj = relaxed_objective(ctx, eta0, w_J, x0)

    lc, ll, lq, uc, ul, uq = _position_surrogates(ctx, w_J, x0)
    prob = _problem("p24", K, N, ctx.chi, cfg.d_min, cfg.L, tuple(active_users(log_psi0).tolist()))
    _set_common(prob, ctx, eta0, log_psi0)
    prob.low_const.value = 1 + lc - ll @ x0
    prob.low_lin.value = ll
    prob.up_const.value = ctx.kappa * (1 + uc - ul @ x0)
    prob.up_lin.value = ctx.kappa[:, None] * ul
    for i in range(K):
        sq = np.sqrt(lq[i])
        prob.low_sq[i].value = sq
        prob.low_m[i].value = sq * x0
        sq = np.sqrt(ctx.kappa[i] * uq[i])
        prob.up_sq[i].value = sq
        prob.up_m[i].value = sq * x0
    ok, iters = _run(prob, settings)

    def scaled_low(x):
        dx = x - x0
        return lc + ll @ dx - lq @ dx**2

    def scaled_up(x):
        dx = x - x0
        return uc + ul @ dx + uq @ dx**2

    result = None
    if ok and prob.x.value is not None:
        x = project_positions(prob.x.value, cfg.d_min, cfg.L)
        low = scaled_low(x)
        if np.all(1 + low >= GUARD):
            cost = ctx.kappa * (1 + scaled_up(x))
            eta, log_psi = min_feasible_level(ctx, cost, log_psi0)
            obj = _surrogate_value(ctx, eta, eta0, low)
            if obj <= anchor_obj:
                result = (eta, x, log_psi, obj, cost)
    if result is None:
        eta, x, log_psi, obj, cost = eta0, x0, log_psi0, anchor_obj, cost0
    else:
        eta, x, log_psi, obj, cost = result
    res = budget_residuals(ctx, eta, log_psi, cost)
    res["span_low"] = float(-x[0])
    res["span_high"] = float(x[-1] - cfg.L)
    if N > 1:
        res["spacing"] = float(cfg.d_min - np.diff(x).min())
    viol = max(0.0, max(res.values()))
    report = SolveReport(
        objective_trace=[anchor_obj, obj],
        final_objective=obj,
        iterations=iters,
        max_violation=viol,
        wall_ms=(time.perf_counter() - start) * 1e3,
        converged=ok and viol <= settings.feas_tol * max(1.0, ctx.chi * ctx.P_sum),
        details={"status": prob.problem.status, "accepted": result is not None},
    )
    return eta, x, log_psi, report


# --- separable quadratic positions ---------------------------------------


@dataclass(frozen=True)
class SeparableQuadratic:
    """sum_m const_m + slope_m*(x_m - x0_m) - curvature_m/2*(x_m - x0_m)**2."""

    x0: np.ndarray
    slope: np.ndarray
    curvature: np.ndarray
    const: float = 0.0

    def value(self, x) -> float:
        dx = np.asarray(x, dtype=float) - self.x0
        return float(self.const + np.sum(self.slope * dx - 0.5 * self.curvature * dx**2))


def _isotonic(y: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Weighted least-squares non-decreasing fit (pool adjacent violators)."""
    vals: list[float] = []
    wts: list[float] = []
    sizes: list[int] = []
    for yi, wi in zip(y, w):
        vals.append(float(yi))
        wts.append(float(wi))
        sizes.append(1)
        while len(vals) > 1 and vals[-2] > vals[-1]:
            wsum = wts[-2] + wts[-1]
            merged = (vals[-2] * wts[-2] + vals[-1] * wts[-1]) / wsum
            vals[-2:] = [merged]
            wts[-2:] = [wsum]
            sizes[-2:] = [sizes[-2] + sizes[-1]]
    return np.repeat(vals, sizes)


def project_positions(v, d_min: float, L: float, weights=None) -> np.ndarray:
    """Weighted Euclidean projection onto {0 <= x_1, x_n - x_{n-1} >= d_min, x_N <= L}.

    Shifting ``z_n = x_n - (n-1) d_min`` turns the set into a bounded monotone
    cone, whose projection is the clipped isotonic fit.
    """
    v = np.asarray(v, dtype=float)
    N = v.size
    room = L - (N - 1) * d_min
    if room < -1e-12:
        raise ValueError(f"infeasible geometry: (N-1)*d_min={(N - 1) * d_min} > L={L}")
    room = max(room, 0.0)
    w = np.ones(N) if weights is None else np.asarray(weights, dtype=float)
    shift = np.arange(N) * d_min
    z = np.clip(_isotonic(v - shift, w), 0.0, room)
    x = z + shift
    x[-1] = min(x[-1], L)
    return x


def solve_p37(quad: SeparableQuadratic, d_min: float, L: float):
    """Maximize a separable concave quadratic over the feasible position set."""
    start = time.perf_counter()
    x0 = np.asarray(quad.x0, dtype=float)
    slope = np.asarray(quad.slope, dtype=float)
    curv = np.asarray(quad.curvature, dtype=float)
    if np.any(curv < 0) or not np.all(np.isfinite(curv)) or not np.all(np.isfinite(slope)):
        raise ValueError("curvatures must be finite and non-negative")
    if (x0.size - 1) * d_min > L + 1e-12:
        raise ValueError(f"infeasible geometry: (N-1)*d_min > L={L}")
    cmax = curv.max() if curv.size else 0.0
    flat = curv <= 1e-14 * max(cmax, 1e-300)
    if np.any(flat & (np.abs(slope) > 0)):
        raise ValueError("zero curvature with non-zero slope is unbounded per coordinate")
    if cmax == 0.0:
        x = project_positions(x0, d_min, L)
    else:
        weights = np.where(flat, 1e-12 * cmax, curv)
        vertex = np.where(flat, x0, x0 + slope / np.where(flat, 1.0, curv))
        x = project_positions(vertex, d_min, L, weights)
    anchor = quad.value(project_positions(x0, d_min, L))
    val = quad.value(x)
    if val < anchor:  # only possible through rounding
        x, val = project_positions(x0, d_min, L), anchor
    viol = max(0.0, -x[0], x[-1] - L, (d_min - np.diff(x).min()) if x.size > 1 else 0.0)
    report = SolveReport(
        objective_trace=[anchor, val],
        final_objective=val,
        iterations=1,
        max_violation=float(viol),
        wall_ms=(time.perf_counter() - start) * 1e3,
        converged=True,
    )
    return x, report
