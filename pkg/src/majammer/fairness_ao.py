"""Max-min fairness design.

Under the equal-SINR reaction the ST's common rate is decreasing in
``w^H G(x) G(x)^H w`` where ``G`` stacks the jamming channels weighted by
``D_j = Q_J / |w_{j,ZF}^H h_j|^2``. The jammer therefore maximizes the top
eigenvalue of ``G^H G``, written as ``max_y y^H G^H G y`` over unit ``y``
and alternated with the positions.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .model import SystemConfig, Topology, derive_topology, jammer_channels, linspace_positions, zf_gains
from .st_response import evaluate_jammer_action
from .subsolver import SeparableQuadratic, SolveReport, solve_p37

__all__ = [
    "FairnessState",
    "fairness_weights",
    "build_weighted_gram",
    "principal_eig",
    "optimal_wj_given_x",
    "update_y",
    "position_quadratic",
    "fairness_objective",
    "update_x_fairness",
    "optimize_beam_min",
    "run_algorithm2",
]


@dataclass
class FairnessState:
    x: np.ndarray
    y: np.ndarray
    trace: list[float] = field(default_factory=list)


def fairness_weights(topology: Topology, config: SystemConfig) -> np.ndarray:
    """D_j = Q_J / |w_{j,ZF}^H h_j|^2."""
    return config.Q_J_mw / zf_gains(topology, config)


def _weighted_channels(x, topology, config, weights) -> np.ndarray:
    weights = np.asarray(weights, dtype=float)
    if np.any(weights < 0):
        raise ValueError("weights must be non-negative")
    return jammer_channels(topology, config, x) * np.sqrt(weights)


def build_weighted_gram(x, topology: Topology, config: SystemConfig, weights) -> np.ndarray:
    """K x K matrix with entries sqrt(w_i w_j) g_i^H g_j."""
    G = _weighted_channels(x, topology, config, weights)
    A = G.conj().T @ G
    return 0.5 * (A + A.conj().T)


def _canonical_phase(v: np.ndarray) -> np.ndarray:
    """Rotate so the (first) largest-modulus entry is real and positive."""
    k = int(np.argmax(np.abs(v)))
    if np.abs(v[k]) == 0:
        return v
    return v * np.exp(-1j * np.angle(v[k]))


def principal_eig(A: np.ndarray) -> tuple[float, np.ndarray]:
    vals, vecs = np.linalg.eigh(A)
    return float(vals[-1]), _canonical_phase(vecs[:, -1])


def optimal_wj_given_x(x, topology: Topology, config: SystemConfig, weights=None):
    """Principal eigenvector of G G^H and its eigenvalue.

    Computed from the K x K Gram: if ``G^H G u = xi u`` then ``G u / |G u|``
    is the matching eigenvector of ``G G^H``.
    """
    if weights is None:
        weights = fairness_weights(topology, config)
    G = _weighted_channels(x, topology, config, weights)
    xi, u = principal_eig(build_weighted_gram(x, topology, config, weights))
    v = G @ u
    n = np.linalg.norm(v)
    if n == 0:
        N = G.shape[0]
        return np.full(N, 1 / math.sqrt(N), dtype=complex), 0.0
    return _canonical_phase(v / n), xi


def update_y(x, y_prev, topology: Topology, config: SystemConfig, weights=None) -> np.ndarray:
    """One normalized power-iteration step on the weighted Gram."""
    if weights is None:
        weights = fairness_weights(topology, config)
    b = build_weighted_gram(x, topology, config, weights) @ np.asarray(y_prev, dtype=complex)
    n = np.linalg.norm(b)
    if n == 0:
        return np.asarray(y_prev, dtype=complex)
    return b / n


def fairness_objective(x, y, topology: Topology, config: SystemConfig, weights=None) -> float:
    if weights is None:
        weights = fairness_weights(topology, config)
    y = np.asarray(y, dtype=complex)
    A = build_weighted_gram(x, topology, config, weights)
    return float(np.real(np.vdot(y, A @ y)))


def position_quadratic(x0, y, topology: Topology, config: SystemConfig, weights=None):
    """Separable concave minorant of y^H G^H(x) G(x) y, tangent at ``x0``.

    Each cross term ``c_ij cos(a_ij x_m + b_ij)`` is replaced by its quadratic
    minorant; all antennas share the curvature ``sum c_ij a_ij^2``.
    """
    if weights is None:
        weights = fairness_weights(topology, config)
    x0 = np.asarray(x0, dtype=float)
    y = np.asarray(y, dtype=complex)
    amp = np.sqrt(np.asarray(weights, dtype=float)) * topology.d_J ** (-config.tau / 2)
    s = np.sin(topology.phi)
    k = 2 * np.pi / config.wavelength
    yy = np.conj(y)[:, None] * y[None, :]  # conj(y_i) y_j
    coef = np.abs(yy) * np.outer(amp, amp)
    alpha = k * (s[None, :] - s[:, None])  # phase rate of g_i^H g_j per antenna
    beta = -np.angle(yy)
    arg = alpha[None, :, :] * x0[:, None, None] - beta[None, :, :]
    value = float(np.sum(coef[None] * np.cos(arg)))
    slope = np.sum(coef[None] * (-alpha[None] * np.sin(arg)), axis=(1, 2))
    curv = np.full(x0.size, float(np.sum(coef * alpha**2)))
    return SeparableQuadratic(x0=x0, slope=slope, curvature=curv, const=value)


def update_x_fairness(x_prev, y, topology: Topology, config: SystemConfig, weights=None):
    quad = position_quadratic(x_prev, y, topology, config, weights)
    x, _ = solve_p37(quad, config.d_min, config.L)
    return x


def optimize_beam_min(config: SystemConfig, topology: Topology, x, weights=None):
    """Min-objective beamformer at fixed positions (closed form)."""
    return optimal_wj_given_x(x, topology, config, weights)[0]


def _initial_y(K: int) -> np.ndarray:
    s = np.ones(K)
    v = s + 1j * s
    return v / np.linalg.norm(v)


def _rel_change(a: float, b: float) -> float:
    return abs(a - b) / max(abs(a), abs(b), 1e-300)


def run_algorithm2(
    config: SystemConfig,
    topology: Topology | None = None,
    x_init=None,
):
    """Run the (y, x) alternation; returns ``(x, w_J, report)``.

    Tolerances are relative because the objective scales with Q_J and the
    path loss. ``report.final_objective`` is the ground-truth min rate.
    """
    start = time.perf_counter()
    topology = topology or derive_topology(config)
    weights = fairness_weights(topology, config)
    x = linspace_positions(config.N, config.L) if x_init is None else np.asarray(x_init, float)
    state = FairnessState(x=x, y=_initial_y(topology.K))

    def obj(xv, yv):
        return fairness_objective(xv, yv, topology, config, weights)

    state.trace.append(obj(state.x, state.y))
    converged = False
    outer = 0
    inner_steps = 0
    if not np.any(weights > 0):
        converged = True
    else:
        for outer in range(1, config.max_outer + 1):
            for _ in range(config.max_inner):
                state.y = update_y(state.x, state.y, topology, config, weights)
                state.trace.append(obj(state.x, state.y))
                inner_steps += 1
                if _rel_change(state.trace[-2], state.trace[-1]) <= config.eps_inner:
                    break
            f_y = state.trace[-1]
            for _ in range(config.max_inner):
                state.x = update_x_fairness(state.x, state.y, topology, config, weights)
                state.trace.append(obj(state.x, state.y))
                inner_steps += 1
                if _rel_change(state.trace[-2], state.trace[-1]) <= config.eps_inner:
                    break
            f_x = state.trace[-1]
            if _rel_change(f_x, f_y) <= config.eps_outer:
                converged = True
                break

    w_J, xi = optimal_wj_given_x(state.x, topology, config, weights)
    # the closed-form y is the exact principal eigenvector at the final x
    state.y = principal_eig(build_weighted_gram(state.x, topology, config, weights))[1]
    truth = evaluate_jammer_action(config, topology, w_J, state.x, "min")
    report = SolveReport(
        objective_trace=list(state.trace),
        final_objective=truth.min_rate,
        iterations=outer,
        max_violation=0.0,
        wall_ms=(time.perf_counter() - start) * 1e3,
        converged=converged,
        details={"state": state, "xi_max": xi, "inner_steps": inner_steps},
    )
    return state.x, w_J, report
