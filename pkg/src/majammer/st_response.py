"""The suspicious transmitter's best power allocation against a jammer action.

Two objectives are supported: the ST maximizes its sum rate (water-filling)
or its minimum rate (equal-SINR allocation). Reported rates anywhere in the
package come from :func:`evaluate_jammer_action`, which always spends the
full budget.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .model import SystemConfig, Topology, jammer_channels, zf_gains

__all__ = [
    "LinkState",
    "StResponse",
    "waterfill",
    "equal_sinr_alloc",
    "rates",
    "link_state",
    "evaluate_jammer_action",
]

Objective = Literal["sum", "min"]


@dataclass(frozen=True)
class LinkState:
    """Per-user ZF gain |w_i^H h_i|^2 and interference-plus-noise (mW)."""

    gain: np.ndarray
    interference: np.ndarray

    def __post_init__(self) -> None:
        gain = np.asarray(self.gain, dtype=float)
        interference = np.asarray(self.interference, dtype=float)
        if gain.shape != interference.shape or gain.ndim != 1:
            raise ValueError("gain and interference must be 1-D arrays of equal length")
        if np.any(gain <= 0) or np.any(interference <= 0):
            raise ValueError("gains and interference must be strictly positive")
        object.__setattr__(self, "gain", gain)
        object.__setattr__(self, "interference", interference)

    @property
    def cost(self) -> np.ndarray:
        """Inverse effective SNR per unit power, c_i = interference_i / gain_i."""
        return self.interference / self.gain


@dataclass(frozen=True)
class StResponse:
    powers: np.ndarray
    eta: float | None
    sinrs: np.ndarray
    sum_rate: float
    min_rate: float


def rates(link: LinkState, powers) -> tuple[float, float]:
    """Sum rate and minimum rate (bits/s/Hz) for the given allocation."""
    powers = np.asarray(powers, dtype=float)
    if np.any(powers < 0):
        raise ValueError("powers must be non-negative")
    r = np.log2(1.0 + powers * link.gain / link.interference)
    return float(r.sum()), float(r.min())


def _response(link: LinkState, powers: np.ndarray, eta: float | None) -> StResponse:
    sinrs = powers * link.gain / link.interference
    per_user = np.log2(1.0 + sinrs)
    return StResponse(
        powers=powers,
        eta=eta,
        sinrs=sinrs,
        sum_rate=float(per_user.sum()),
        min_rate=float(per_user.min()),
    )


def waterfill_level(cost: np.ndarray, P_sum: float) -> float:
    """Water level eta with sum(max(eta - cost, 0)) = P_sum, by sort-and-solve."""
    c = np.sort(np.asarray(cost, dtype=float))
    csum = np.cumsum(c)
    k = np.arange(1, c.size + 1)
    levels = (P_sum + csum) / k
    # largest active set whose level clears its worst member
    active = np.nonzero(levels > c)[0]
    return float(levels[active[-1]])


def waterfill(link: LinkState, P_sum: float) -> StResponse:
    if not P_sum > 0:
        raise ValueError("P_sum must be positive")
    cost = link.cost
    eta = waterfill_level(cost, P_sum)
    powers = np.maximum(eta - cost, 0.0)
    # remove rounding drift so the budget is met to the last ulp or so
    powers *= P_sum / powers.sum()
    return _response(link, powers, eta)


def equal_sinr_alloc(link: LinkState, P_sum: float) -> StResponse:
    if not P_sum > 0:
        raise ValueError("P_sum must be positive")
    cost = link.cost
    powers = P_sum * cost / cost.sum()
    return _response(link, powers, None)


def link_state(
    config: SystemConfig,
    topology: Topology,
    w_J,
    x,
    gains: np.ndarray | None = None,
) -> LinkState:
    """Assemble the per-user link state for jammer action (w_J, x)."""
    w_J = np.asarray(w_J, dtype=complex)
    if gains is None:
        gains = zf_gains(topology, config)
    G = jammer_channels(topology, config, x)
    jam = np.abs(w_J.conj() @ G) ** 2
    return LinkState(gain=gains, interference=config.Q_J_mw * jam + config.sigma2_mw)


def evaluate_jammer_action(
    config: SystemConfig,
    topology: Topology,
    w_J,
    x,
    objective: Objective = "sum",
    gains: np.ndarray | None = None,
) -> StResponse:
    """Ground-truth ST reaction and resulting rates for a jammer action."""
    w_J = np.asarray(w_J, dtype=complex)
    if np.linalg.norm(w_J) > 1 + 1e-9:
        raise ValueError(f"jamming beamformer norm {np.linalg.norm(w_J)} exceeds 1")
    link = link_state(config, topology, w_J, x, gains)
    if objective == "sum":
        return waterfill(link, config.P_sum_mw)
    if objective == "min":
        return equal_sinr_alloc(link, config.P_sum_mw)
    raise ValueError(f"unknown objective {objective!r}")
