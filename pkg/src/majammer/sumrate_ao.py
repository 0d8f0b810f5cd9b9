"""Alternating minimization of the suspicious sum rate.

The ST's water-filling reaction enters through the level ``eta`` and the
smoothed budget slacks. Blocks alternate between the beamformer step
(:func:`~majammer.subsolver.solve_p22`) and the position step
(:func:`~majammer.subsolver.solve_p24`); each block is an inner SCA loop.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .model import (
    SystemConfig,
    Topology,
    derive_topology,
    jammer_channels,
    linspace_positions,
)
from .st_response import evaluate_jammer_action
from .subsolver import (
    SolveReport,
    SolverSettings,
    SumRateContext,
    jam_gains,
    relaxed_objective,
    solve_p22,
    solve_p24,
    sumrate_context,
)

__all__ = [
    "SumRateState",
    "init_sumrate",
    "channel_sum_beam",
    "tight_level",
    "optimize_beam_sum",
    "run_algorithm1",
]

INIT_ETA = 5.0
INIT_PSI = 100.0


@dataclass
class SumRateState:
    eta: float
    w_J: np.ndarray
    x: np.ndarray
    log_psi: np.ndarray
    inner_traces: list[list[float]] = field(default_factory=list)
    outer_trace: list[float] = field(default_factory=list)

    @property
    def psi(self) -> np.ndarray:
        return np.exp(self.log_psi)


def channel_sum_beam(topology: Topology, config: SystemConfig, x) -> np.ndarray:
    """Normalized sum of all jamming channels at positions ``x``."""
    s = jammer_channels(topology, config, x).sum(axis=1)
    n = np.linalg.norm(s)
    if n == 0:
        return np.full(len(x), 1 / math.sqrt(len(x)), dtype=complex)
    return s / n


def init_sumrate(config: SystemConfig, topology: Topology) -> SumRateState:
    x = linspace_positions(config.N, config.L)
    return SumRateState(
        eta=INIT_ETA,
        w_J=channel_sum_beam(topology, config, x),
        x=x,
        log_psi=np.full(topology.K, math.log(INIT_PSI)),
    )


def tight_level(ctx: SumRateContext, cost) -> tuple[float, np.ndarray]:
    """Level solving the smoothed budget with every slack at its cap.

    Returns ``(eta, log_psi)`` with ``log_psi = chi * (eta - cost)``. This is
    the lowest level feasible for the unlinearized smoothed constraints.
    """
    cost = np.asarray(cost, dtype=float)
    chi, P = ctx.chi, ctx.P_sum

    def h(eta):
        return np.sum(np.logaddexp(0.0, chi * (eta - cost))) - chi * P

    lo = cost.min() - 1.0
    hi = cost.max() + P + 1.0
    eta = brentq(h, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    while h(eta) < 0:
        eta += max(abs(eta), 1.0) * 4 * np.finfo(float).eps
    return float(eta), chi * (eta - cost)


def _lift(ctx: SumRateContext, state: SumRateState) -> None:
    """Replace (eta, Psi) by the tight level when the guess violates the budget."""
    cost = ctx.kappa * (1 + ctx.q * jam_gains(ctx, state.w_J, state.x))
    budget_ok = np.sum(np.logaddexp(0.0, state.log_psi)) >= ctx.chi * ctx.P_sum
    level_ok = np.all(state.log_psi <= ctx.chi * (state.eta - cost))
    if not (budget_ok and level_ok):
        state.eta, state.log_psi = tight_level(ctx, cost)


def _inner(step, ctx, state: SumRateState, settings, eps, max_inner) -> tuple[list[float], int]:
    trace = [relaxed_objective(ctx, state.eta, state.w_J, state.x)]
    solves = 0
    for _ in range(max_inner):
        report = step(ctx, state, settings)
        solves += 1
        trace.append(report.final_objective)
        if abs(trace[-2] - trace[-1]) <= eps:
            break
    return trace, solves


def _beam_step(ctx, state, settings) -> SolveReport:
    state.eta, state.w_J, state.log_psi, rep = solve_p22(
        ctx, state.eta, state.w_J, state.x, state.log_psi, settings
    )
    return rep


def _position_step(ctx, state, settings) -> SolveReport:
    state.eta, state.x, state.log_psi, rep = solve_p24(
        ctx, state.eta, state.w_J, state.x, state.log_psi, settings
    )
    return rep


def optimize_beam_sum(
    config: SystemConfig,
    topology: Topology,
    x,
    w_init=None,
    settings: SolverSettings | None = None,
    ctx: SumRateContext | None = None,
) -> tuple[np.ndarray, list[float]]:
    """Beamformer-only inner loop at fixed positions (used by the benchmarks)."""
    ctx = ctx or sumrate_context(config, topology)
    x = np.asarray(x, dtype=float)
    w = channel_sum_beam(topology, config, x) if w_init is None else np.asarray(w_init, complex)
    state = SumRateState(eta=INIT_ETA, w_J=w, x=x, log_psi=np.zeros(topology.K))
    _lift(ctx, state)
    trace, _ = _inner(_beam_step, ctx, state, settings, config.eps_inner, config.max_inner)
    return state.w_J, trace


def run_algorithm1(
    config: SystemConfig,
    topology: Topology | None = None,
    settings: SolverSettings | None = None,
    x_init=None,
    w_init=None,
):
    """Run the alternating minimization; returns ``(w_J, x, report)``.

    ``report.objective_trace`` holds the relaxed objective after every block
    (starting with the initial point). ``report.final_objective`` is the
    ground-truth sum rate of the returned action.
    """
    start = time.perf_counter()
    topology = topology or derive_topology(config)
    settings = settings or SolverSettings()
    ctx = sumrate_context(config, topology)
    state = init_sumrate(config, topology)
    if x_init is not None:
        state.x = np.asarray(x_init, dtype=float)
        state.w_J = channel_sum_beam(topology, config, state.x)
    if w_init is not None:
        state.w_J = np.asarray(w_init, dtype=complex)
    _lift(ctx, state)
    state.outer_trace.append(relaxed_objective(ctx, state.eta, state.w_J, state.x))

    converged = False
    outer = 0
    solves = 0
    for outer in range(1, config.max_outer + 1):
        trace_w, n = _inner(_beam_step, ctx, state, settings, config.eps_inner, config.max_inner)
        solves += n
        state.inner_traces.append(trace_w)
        f_w = relaxed_objective(ctx, state.eta, state.w_J, state.x)
        state.outer_trace.append(f_w)
        trace_x, n = _inner(
            _position_step, ctx, state, settings, config.eps_inner, config.max_inner
        )
        solves += n
        state.inner_traces.append(trace_x)
        f_x = relaxed_objective(ctx, state.eta, state.w_J, state.x)
        state.outer_trace.append(f_x)
        if abs(f_x - f_w) <= config.eps_outer:
            converged = True
            break

    truth = evaluate_jammer_action(config, topology, state.w_J, state.x, "sum", ctx.gains)
    diffs = np.diff(state.outer_trace)
    report = SolveReport(
        objective_trace=list(state.outer_trace),
        final_objective=truth.sum_rate,
        iterations=outer,
        max_violation=0.0,
        wall_ms=(time.perf_counter() - start) * 1e3,
        converged=converged,
        details={
            "state": state,
            "inner_solves": solves,
            "max_increase": float(diffs.max()) if diffs.size else 0.0,
            "relaxed_objective": state.outer_trace[-1],
        },
    )
    return state.w_J, state.x, report
