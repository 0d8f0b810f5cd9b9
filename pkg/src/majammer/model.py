"""Scenario geometry, line-of-sight channels and zero-forcing beamformers.

Everything here is a pure function of its inputs. Complex vectors are plain
``numpy`` arrays; antenna positions are 1-D float arrays validated by
:func:`check_positions`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from typing import Sequence

import numpy as np

__all__ = [
    "ConfigError",
    "SystemConfig",
    "Topology",
    "dbm_to_mw",
    "derive_topology",
    "topology_from_angles",
    "check_positions",
    "positions_feasible",
    "st_channel",
    "st_channels",
    "jammer_channel",
    "jammer_channels",
    "zf_beamformers",
    "zf_gains",
    "channel_correlation",
    "linspace_positions",
]


class ConfigError(ValueError):
    """Invalid scenario parameters."""


def dbm_to_mw(dbm: float) -> float:
    """Convert dBm to milliwatts; ``-inf`` maps to 0."""
    if dbm == -math.inf:
        return 0.0
    return 10.0 ** (dbm / 10.0)


def _default_angles(K: int) -> tuple[float, ...]:
    if K == 1:
        return (0.0,)
    return tuple(float(v) for v in np.linspace(-np.pi / 3, np.pi / 3, K))


@dataclass(frozen=True)
class SystemConfig:
    """All scenario parameters.

    Powers are given in dBm; ``P_sum_mw`` / ``Q_J_mw`` hold the linear values.
    ``theta`` defaults to ``K`` angles evenly spaced on [-pi/3, pi/3].
    """

    M: int = 5
    K: int = 4
    N: int = 5
    r: float = 1000.0
    r_d: float = 1000.0
    theta: tuple[float, ...] | None = None
    tau: float = 3.0
    wavelength: float = 1.0
    d_min: float = 0.5
    L: float = 2.3
    P_sum_dbm: float = 10.0
    Q_J_dbm: float = 10.0
    sigma2_mw: float = 1e-9
    chi: float = 5.0
    eps_outer: float = 1e-3
    eps_inner: float = 1e-4
    max_outer: int = 50
    max_inner: int = 100
    seed: int = 0
    P_sum_mw: float = field(init=False, repr=False)
    Q_J_mw: float = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if self.theta is None:
            object.__setattr__(self, "theta", _default_angles(self.K))
        else:
            object.__setattr__(self, "theta", tuple(float(t) for t in self.theta))
        object.__setattr__(self, "P_sum_mw", dbm_to_mw(self.P_sum_dbm))
        object.__setattr__(self, "Q_J_mw", dbm_to_mw(self.Q_J_dbm))
        self._validate()

    def _validate(self) -> None:
        if self.K < 1 or self.N < 1:
            raise ConfigError("K and N must be at least 1")
        if self.M < self.K:
            raise ConfigError(f"M={self.M} must be >= K={self.K} for zero forcing")
        if len(self.theta) != self.K:
            raise ConfigError(f"expected {self.K} angles, got {len(self.theta)}")
        for i, t in enumerate(self.theta):
            if not -np.pi / 2 < t < np.pi / 2:
                raise ConfigError(f"theta[{i}]={t} outside (-pi/2, pi/2)")
        for name in ("r", "r_d", "wavelength", "chi", "sigma2_mw"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        if self.d_min < 0 or self.L < 0:
            raise ConfigError("d_min and L must be non-negative")
        if (self.N - 1) * self.d_min > self.L + 1e-12:
            raise ConfigError(
                f"(N-1)*d_min = {(self.N - 1) * self.d_min} exceeds L = {self.L}"
            )
        if self.P_sum_mw <= 0:
            raise ConfigError("P_sum must be positive")
        if self.eps_outer <= 0 or self.eps_inner <= 0:
            raise ConfigError("tolerances must be positive")
        if self.max_outer < 1 or self.max_inner < 1:
            raise ConfigError("iteration caps must be at least 1")

    def patch(self, **changes) -> "SystemConfig":
        """Return a copy with ``changes`` applied (angles reset if K changes)."""
        if "K" in changes and "theta" not in changes and changes["K"] != self.K:
            changes["theta"] = None
        return replace(self, **changes)

    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in fields(cls) if f.init]


@dataclass(frozen=True)
class Topology:
    """Per-user distances and jammer-side arrival angles (radians)."""

    theta: np.ndarray
    d_S: np.ndarray
    d_J: np.ndarray
    phi: np.ndarray

    @property
    def K(self) -> int:
        return len(self.phi)

    def rotated(self, rho: float) -> "Topology":
        """Jammer array boresight rotated by ``rho``: phi_i -> phi_i - rho."""
        return replace(self, phi=self.phi - rho)


def derive_topology(config: SystemConfig) -> Topology:
    theta = np.asarray(config.theta, dtype=float)
    return topology_from_angles(theta, config.r, config.r_d)


def topology_from_angles(theta: np.ndarray, r: float, r_d: float) -> Topology:
    theta = np.asarray(theta, dtype=float)
    if np.any(np.abs(theta) >= np.pi / 2):
        raise ConfigError("arrival angles must lie strictly inside (-pi/2, pi/2)")
    offset = r * np.tan(theta)
    d_S = r / np.cos(theta)
    d_J = np.sqrt(r_d**2 + offset**2)
    phi = np.arctan(offset / r_d)
    return Topology(theta=theta, d_S=d_S, d_J=d_J, phi=phi)


def linspace_positions(N: int, L: float) -> np.ndarray:
    """Evenly spread positions over [0, L]; a single antenna sits at L/2."""
    if N == 1:
        return np.array([L / 2.0])
    return np.linspace(0.0, L, N)


def check_positions(x, d_min: float, L: float, tol: float = 1e-12) -> np.ndarray:
    """Validate spacing and span constraints; return ``x`` as a float array."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("positions must be a non-empty 1-D array")
    if x[0] < -tol:
        raise ValueError(f"x[0]={x[0]} below 0")
    if x[-1] > L + tol:
        raise ValueError(f"x[-1]={x[-1]} above L={L}")
    gaps = np.diff(x)
    if gaps.size and gaps.min() < d_min - tol:
        n = int(np.argmin(gaps))
        raise ValueError(f"gap x[{n + 1}]-x[{n}]={gaps[n]} below d_min={d_min}")
    return x


def positions_feasible(x, d_min: float, L: float, tol: float = 1e-12) -> bool:
    try:
        check_positions(x, d_min, L, tol)
    except ValueError:
        return False
    return True


def _pathloss_amp(d: float, tau: float) -> float:
    return 1.0 / math.sqrt(d**tau)


def st_channel(topology: Topology, config: SystemConfig, i: int) -> np.ndarray:
    """Channel from the ST's half-wavelength array to user ``i`` (0-based)."""
    m = np.arange(config.M)
    k = 2 * np.pi / config.wavelength
    phase = k * m * (config.wavelength / 2) * np.sin(topology.theta[i])
    return np.exp(1j * phase) * _pathloss_amp(topology.d_S[i], config.tau)


def st_channels(topology: Topology, config: SystemConfig) -> np.ndarray:
    """All ST channels stacked as columns, shape (M, K)."""
    return np.stack([st_channel(topology, config, i) for i in range(topology.K)], axis=1)


def jammer_channel(topology: Topology, config: SystemConfig, x, i: int) -> np.ndarray:
    """Channel from the movable-antenna jammer at positions ``x`` to user ``i``."""
    x = np.asarray(x, dtype=float)
    k = 2 * np.pi / config.wavelength
    return np.exp(1j * k * x * np.sin(topology.phi[i])) * _pathloss_amp(
        topology.d_J[i], config.tau
    )


def jammer_channels(topology: Topology, config: SystemConfig, x) -> np.ndarray:
    """All jammer channels as columns, shape (N, K)."""
    x = np.asarray(x, dtype=float)
    k = 2 * np.pi / config.wavelength
    amp = topology.d_J ** (-config.tau / 2)
    return np.exp(1j * k * np.outer(x, np.sin(topology.phi))) * amp


def zf_beamformers(h_list: Sequence[np.ndarray] | np.ndarray) -> np.ndarray:
    """Unit-norm zero-forcing beamformers, returned as columns of an (M, K) array.

    Column ``i`` is the projection of ``h_i`` onto the orthogonal complement of
    the other users' channels, normalized.
    """
    H = np.column_stack(list(h_list)) if not isinstance(h_list, np.ndarray) else h_list
    M, K = H.shape
    W = np.empty((M, K), dtype=complex)
    for i in range(K):
        A = np.delete(H, i, axis=1)
        if A.shape[1] == 0:
            v = H[:, i]
        else:
            gram = A.conj().T @ A
            if np.linalg.matrix_rank(gram) < A.shape[1]:
                raise ValueError(_colliding(H, i))
            P = np.eye(M) - A @ np.linalg.solve(gram, A.conj().T)
            v = P @ H[:, i]
        nv = np.linalg.norm(v)
        if nv <= 1e-12 * np.linalg.norm(H[:, i]):
            raise ValueError(_colliding(H, i))
        W[:, i] = v / nv
    return W


def _colliding(H: np.ndarray, i: int) -> str:
    Hn = H / np.linalg.norm(H, axis=0)
    corr = np.abs(Hn.conj().T @ Hn)
    np.fill_diagonal(corr, 0.0)
    a, b = np.unravel_index(np.argmax(corr), corr.shape)
    return (
        f"ST channels are linearly dependent while nulling for user {i}; "
        f"users {min(a, b)} and {max(a, b)} collide (|corr|={corr[a, b]:.6f})"
    )


def zf_gains(topology: Topology, config: SystemConfig) -> np.ndarray:
    """Effective channel powers |w_i^H h_i|^2 under zero forcing."""
    H = st_channels(topology, config)
    W = zf_beamformers(H)
    return np.abs(np.einsum("mk,mk->k", W.conj(), H)) ** 2


def channel_correlation(topology: Topology, config: SystemConfig, x, i: int, j: int) -> complex:
    """Inner product g_i(x)^H g_j(x)."""
    gi = jammer_channel(topology, config, x, i)
    gj = jammer_channel(topology, config, x, j)
    return complex(np.vdot(gi, gj))
