"""Tangent bounds and smoothing used by the SCA steps.

Each bound touches its target at the expansion point. ``*_upper`` functions
never fall below the target and ``*_lower`` functions never exceed it.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import SystemConfig, Topology, jammer_channel

__all__ = [
    "CosineSurrogateParams",
    "log_upper",
    "log_upper_slack",
    "quad_lower_bf",
    "cos_lower",
    "cos_lower_coeffs",
    "position_gain_lower",
    "position_gain_upper",
    "position_gain_lower_terms",
    "position_gain_upper_terms",
    "smooth_max",
]


@dataclass(frozen=True)
class CosineSurrogateParams:
    """Quadratic minorant of cos(alpha*x - beta) expanded at ``x0``."""

    alpha: float | np.ndarray
    beta: float | np.ndarray
    x0: float | np.ndarray

    @property
    def delta(self):
        return np.square(self.alpha)


def log_upper(eta, eta0):
    """Tangent line of ln at ``eta0``; dominates ln(eta) everywhere."""
    if np.any(np.asarray(eta0) <= 0):
        raise ValueError("expansion point must be positive")
    return np.log(eta0) + (eta - eta0) / eta0


def log_upper_slack(psi, psi0):
    """Same tangent bound, applied to the slack variables."""
    return log_upper(psi, psi0)


def quad_lower_bf(w, w0, G) -> float:
    """Linear minorant 2 Re(w^H G w0) - w0^H G w0 of the PSD form w^H G w."""
    G = np.asarray(G, dtype=complex)
    if not np.allclose(G, G.conj().T, atol=1e-12 * max(1.0, np.abs(G).max())):
        raise ValueError("G must be Hermitian")
    w = np.asarray(w, dtype=complex)
    w0 = np.asarray(w0, dtype=complex)
    Gw0 = G @ w0
    return float(2 * np.real(np.vdot(w, Gw0)) - np.real(np.vdot(w0, Gw0)))


def cos_lower_coeffs(params: CosineSurrogateParams):
    """(value, slope, curvature) of the minorant at its expansion point.

    The minorant is ``value + slope*(x - x0) - curvature/2*(x - x0)**2``.
    """
    arg = params.alpha * params.x0 - params.beta
    return np.cos(arg), -params.alpha * np.sin(arg), params.delta


def cos_lower(x, params: CosineSurrogateParams):
    value, slope, curv = cos_lower_coeffs(params)
    dx = np.asarray(x) - params.x0
    return value + slope * dx - 0.5 * curv * dx**2


def smooth_max(x, chi: float):
    """Log-sum-exp smoothing of max(x, 0), written to avoid overflow."""
    if chi <= 0:
        raise ValueError("chi must be positive")
    x = np.asarray(x, dtype=float)
    out = np.maximum(x, 0.0) + np.log1p(np.exp(-chi * np.abs(x))) / chi
    return out if out.ndim else float(out)


def _phase_rate(topology: Topology, config: SystemConfig, i: int) -> float:
    return 2 * np.pi * np.sin(topology.phi[i]) / config.wavelength


def position_gain_lower_terms(x0, w_J, topology: Topology, config: SystemConfig, i: int):
    """Per-antenna weights and cosine parameters of the jamming-gain minorant.

    Returns ``(weights, params, const)`` so that the minorant equals
    ``2 * sum(weights * cos_lower(x, params)) - const``.
    """
    x0 = np.asarray(x0, dtype=float)
    w_J = np.asarray(w_J, dtype=complex)
    g0 = jammer_channel(topology, config, x0, i)
    f = w_J * np.vdot(w_J, g0)  # W_J g_i(x0)
    amp = topology.d_J[i] ** (-config.tau / 2)
    weights = np.abs(f) * amp
    params = CosineSurrogateParams(alpha=_phase_rate(topology, config, i), beta=np.angle(f), x0=x0)
    const = float(np.abs(np.vdot(w_J, g0)) ** 2)
    return weights, params, const


def position_gain_lower(x, x0, w_J, topology: Topology, config: SystemConfig, i: int) -> float:
    """Minorant of |w_J^H g_i(x)|^2 in the positions, tangent at ``x0``."""
    weights, params, const = position_gain_lower_terms(x0, w_J, topology, config, i)
    return float(2 * np.sum(weights * cos_lower(x, params)) - const)


def position_gain_upper_terms(x0, w_J, topology: Topology, config: SystemConfig, i: int):
    """Pieces of the jamming-gain majorant.

    Returns ``(base, weights, params)``; the majorant is
    ``base - 2 * sum(weights * cos_lower(x, params))``.
    """
    x0 = np.asarray(x0, dtype=float)
    w_J = np.asarray(w_J, dtype=complex)
    N = x0.size
    g0 = jammer_channel(topology, config, x0, i)
    xi = float(np.real(np.vdot(w_J, w_J)))  # top eigenvalue of w w^H
    v = xi * g0 - w_J * np.vdot(w_J, g0)  # (xi I - W_J) g_i(x0)
    c3 = float(np.real(np.vdot(g0, v)))
    amp = topology.d_J[i] ** (-config.tau / 2)
    base = xi * N * amp**2 + c3
    weights = np.abs(v) * amp
    params = CosineSurrogateParams(alpha=_phase_rate(topology, config, i), beta=np.angle(v), x0=x0)
    return base, weights, params


def position_gain_upper(x, x0, w_J, topology: Topology, config: SystemConfig, i: int) -> float:
    """Majorant of |w_J^H g_i(x)|^2 in the positions, tangent at ``x0``."""
    base, weights, params = position_gain_upper_terms(x0, w_J, topology, config, i)
    return float(base - 2 * np.sum(weights * cos_lower(x, params)))
