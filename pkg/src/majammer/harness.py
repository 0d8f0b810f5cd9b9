"""Benchmark schemes, sweeps, AoA-error robustness, config files and CSV output.

Every reported rate is produced by :func:`~majammer.st_response.evaluate_jammer_action`.
Random streams come from ``numpy.random.Generator(MT19937(seed))``.
"""
from __future__ import annotations

import csv
import io
import itertools
import logging
import math
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .fairness_ao import optimize_beam_min, run_algorithm2
from .model import (
    ConfigError,
    SystemConfig,
    Topology,
    derive_topology,
    topology_from_angles,
    zf_gains,
)
from .special import lb_minrate, lb_sumrate
from .st_response import evaluate_jammer_action, waterfill_level
from .sumrate_ao import optimize_beam_sum, run_algorithm1

__all__ = [
    "SCHEMES",
    "ExperimentSpec",
    "ResultRow",
    "JammerAction",
    "make_rng",
    "random_feasible_positions",
    "half_wavelength_lattice",
    "optimize_scheme",
    "score_action",
    "run_scheme",
    "sweep",
    "robustness_samples",
    "robustness_aoa",
    "parse_config",
    "load_config",
    "write_csv",
    "rows_to_csv",
]

log = logging.getLogger(__name__)

SCHEMES = ("proposed", "rap", "fpa", "as", "fb_eap", "rula", "lower_bound")
SWEEP_PARAMS = ("L", "Q_J_dbm", "mu")


@dataclass(frozen=True)
class ExperimentSpec:
    name: str = "default"
    objective: str = "sum"
    schemes: tuple[str, ...] = ("proposed",)
    sweep_param: str | None = None
    sweep_values: tuple[float, ...] = ()
    trials: int = 1
    seed: int = 0
    mu: float = 0.0
    rap_draws: int = 100
    eap_draws: int = 10_000
    rula_angles: int = 50
    as_extra: int = 3
    timing: bool = True

    def __post_init__(self) -> None:
        object.__setattr__(self, "schemes", tuple(self.schemes))
        object.__setattr__(self, "sweep_values", tuple(float(v) for v in self.sweep_values))
        if self.objective not in ("sum", "min"):
            raise ConfigError(f"objective must be 'sum' or 'min', got {self.objective!r}")
        for s in self.schemes:
            if s not in SCHEMES:
                raise ConfigError(f"unknown scheme {s!r}; choose from {', '.join(SCHEMES)}")
        if self.sweep_param is not None:
            if self.sweep_param not in SWEEP_PARAMS:
                raise ConfigError(f"sweep_param must be one of {SWEEP_PARAMS}")
            if not self.sweep_values:
                raise ConfigError("sweep_values must be non-empty when sweep_param is set")
        if self.trials < 1 or self.rap_draws < 1 or self.eap_draws < 1 or self.rula_angles < 1:
            raise ConfigError("trials and draw counts must be at least 1")
        if self.mu < 0:
            raise ConfigError("mu must be non-negative")


@dataclass(frozen=True)
class ResultRow:
    experiment: str
    scheme: str
    objective: str
    L: float
    Q_J_dbm: float
    mu: float
    seed: int
    rate_bits: float
    iterations: int
    runtime_ms: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.rate_bits) and self.rate_bits >= 0):
            raise ValueError(f"rate must be finite and non-negative, got {self.rate_bits}")


@dataclass(frozen=True)
class JammerAction:
    """Beamformer, positions and array rotation chosen by a scheme."""

    w_J: np.ndarray
    x: np.ndarray
    rho: float = 0.0
    iterations: int = 0
    converged: bool = True
    extra: dict = field(default_factory=dict)


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.MT19937(seed))


def random_feasible_positions(config: SystemConfig, rng: np.random.Generator, size=None) -> np.ndarray:
    """Uniform draw from the feasible position polytope (sorted-uniform trick)."""
    N, d = config.N, config.d_min
    room = config.L - (N - 1) * d
    if room < -1e-12:
        raise ConfigError(f"(N-1)*d_min exceeds L={config.L}")
    shape = (N,) if size is None else (size, N)
    z = np.sort(rng.uniform(0.0, max(room, 0.0), size=shape), axis=-1)
    return z + np.arange(N) * d


def half_wavelength_lattice(config: SystemConfig, count: int | None = None) -> np.ndarray:
    return np.arange(config.N if count is None else count) * config.wavelength / 2


def _beam(config, topology, x, objective):
    if objective == "sum":
        return optimize_beam_sum(config, topology, x)[0]
    return optimize_beam_min(config, topology, x)


def _rate(config, topology, w, x, objective, gains=None) -> float:
    res = evaluate_jammer_action(config, topology, w, x, objective, gains)
    return res.sum_rate if objective == "sum" else res.min_rate


def _best(config, topology, candidates: Iterable, objective) -> JammerAction:
    """Beam-optimize each (x, rho) candidate and keep the lowest scored rate."""
    best, best_rate, n = None, math.inf, 0
    for x, rho in candidates:
        topo = topology.rotated(rho) if rho else topology
        w = _beam(config, topo, x, objective)
        r = _rate(config, topo, w, x, objective)
        n += 1
        if r < best_rate:
            best, best_rate = JammerAction(w_J=w, x=np.asarray(x, float), rho=rho), r
    return JammerAction(w_J=best.w_J, x=best.x, rho=best.rho, iterations=n)


def _fb_eap(config, topology, objective, rng, draws) -> JammerAction:
    X = random_feasible_positions(config, rng, size=draws)
    k = 2 * np.pi / config.wavelength
    amp = topology.d_J ** (-config.tau / 2)
    G = np.exp(1j * k * X[:, :, None] * np.sin(topology.phi)[None, None, :]) * amp  # (D,N,K)
    W = G.sum(axis=2)
    W /= np.linalg.norm(W, axis=1, keepdims=True)
    jam = np.abs(np.einsum("dn,dnk->dk", W.conj(), G)) ** 2
    gains = zf_gains(topology, config)
    cost = (config.Q_J_mw * jam + config.sigma2_mw) / gains
    if objective == "sum":
        rates = np.empty(draws)
        for d in range(draws):
            eta = waterfill_level(cost[d], config.P_sum_mw)
            rates[d] = np.sum(np.log2(1 + np.maximum(eta - cost[d], 0) / cost[d]))
    else:
        rates = np.log2(1 + config.P_sum_mw / cost.sum(axis=1))
    d = int(np.argmin(rates))
    return JammerAction(w_J=W[d], x=X[d], iterations=draws)


def optimize_scheme(
    config: SystemConfig,
    topology: Topology,
    scheme: str,
    objective: str,
    spec: ExperimentSpec | None = None,
    rng: np.random.Generator | None = None,
) -> JammerAction | None:
    """Jammer action chosen by ``scheme``; ``None`` for the lower bound."""
    spec = spec or ExperimentSpec(objective=objective)
    rng = rng or make_rng(spec.seed)
    if objective not in ("sum", "min"):
        raise ValueError(f"unknown objective {objective!r}")
    if scheme == "proposed":
        if objective == "sum":
            w, x, rep = run_algorithm1(config, topology)
        else:
            x, w, rep = run_algorithm2(config, topology)
        return JammerAction(w_J=w, x=x, iterations=rep.iterations, converged=rep.converged)
    if scheme == "fpa":
        return _best(config, topology, [(half_wavelength_lattice(config), 0.0)], objective)
    if scheme == "rap":
        draws = (random_feasible_positions(config, rng) for _ in range(spec.rap_draws))
        return _best(config, topology, ((x, 0.0) for x in draws), objective)
    if scheme == "as":
        grid = half_wavelength_lattice(config, config.N + spec.as_extra)
        subsets = itertools.combinations(range(grid.size), config.N)
        return _best(config, topology, ((grid[list(s)], 0.0) for s in subsets), objective)
    if scheme == "rula":
        x = half_wavelength_lattice(config)
        angles = np.linspace(-np.pi / 5, np.pi / 5, spec.rula_angles)
        return _best(config, topology, ((x, float(rho)) for rho in angles), objective)
    if scheme == "fb_eap":
        return _fb_eap(config, topology, objective, rng, spec.eap_draws)
    if scheme == "lower_bound":
        return None
    raise ValueError(f"unknown scheme {scheme!r}")


def score_action(
    config: SystemConfig, topology: Topology, action: JammerAction | None, objective: str
) -> float:
    """True rate of ``action`` against ``topology`` (lower bound when ``None``)."""
    if action is None:
        return lb_sumrate(config, topology) if objective == "sum" else lb_minrate(config, topology)
    topo = topology.rotated(action.rho) if action.rho else topology
    return _rate(config, topo, action.w_J, action.x, objective)


def run_scheme(
    config: SystemConfig,
    scheme: str,
    objective: str,
    spec: ExperimentSpec | None = None,
    topology: Topology | None = None,
) -> ResultRow:
    spec = spec or ExperimentSpec(objective=objective)
    return _run_scheme(config, scheme, objective, spec, topology)[0]


def _run_scheme(config, scheme, objective, spec, topology=None) -> tuple[ResultRow, bool]:
    topology = topology or derive_topology(config)
    start = time.perf_counter()
    action = optimize_scheme(config, topology, scheme, objective, spec, make_rng(spec.seed))
    rate = score_action(config, topology, action, objective)
    elapsed = (time.perf_counter() - start) * 1e3 if spec.timing else 0.0
    row = ResultRow(
        experiment=spec.name,
        scheme=scheme,
        objective=objective,
        L=config.L,
        Q_J_dbm=config.Q_J_dbm,
        mu=spec.mu,
        seed=spec.seed,
        rate_bits=rate,
        iterations=0 if action is None else action.iterations,
        runtime_ms=elapsed,
    )
    return row, action is None or action.converged


def sweep(config: SystemConfig, spec: ExperimentSpec) -> list[ResultRow]:
    """Rows for every (grid value, scheme); L values that cannot hold the array are skipped."""
    if spec.sweep_param is None:
        return [run_scheme(config, s, spec.objective, spec) for s in spec.schemes]
    if spec.sweep_param == "mu":
        return robustness_aoa(config, spec.sweep_values, spec.trials, spec.seed, spec)
    rows = []
    for value in spec.sweep_values:
        try:
            cfg = config.patch(**{spec.sweep_param: value})
        except ConfigError as exc:
            log.warning("skipping %s=%g: %s", spec.sweep_param, value, exc)
            continue
        rows.extend(run_scheme(cfg, s, spec.objective, spec) for s in spec.schemes)
    return rows


_HALF_PI = np.pi / 2 - 1e-6


def _perturbed_topology(estimate: Topology, config: SystemConfig, mu: float, rng) -> Topology:
    theta = estimate.theta + rng.uniform(-mu / 2, mu / 2, size=estimate.K)
    phi = estimate.phi + rng.uniform(-mu / 2, mu / 2, size=estimate.K)
    if np.any(np.abs(theta) > _HALF_PI) or np.any(np.abs(phi) > _HALF_PI):
        log.warning("AoA draw outside (-pi/2, pi/2); clamping")
        theta = np.clip(theta, -_HALF_PI, _HALF_PI)
        phi = np.clip(phi, -_HALF_PI, _HALF_PI)
    true = topology_from_angles(theta, config.r, config.r_d)
    return Topology(theta=true.theta, d_S=true.d_S, d_J=true.d_J, phi=phi)


def robustness_samples(
    config: SystemConfig,
    mu: float,
    trials: int,
    seed: int,
    schemes: Sequence[str],
    objective: str,
    spec: ExperimentSpec | None = None,
) -> dict[str, np.ndarray]:
    """Per-trial true rates of actions optimized on the estimated AoAs."""
    if trials < 1:
        raise ValueError("trials must be at least 1")
    spec = spec or ExperimentSpec(objective=objective, seed=seed)
    estimate = derive_topology(config)
    actions = {
        s: optimize_scheme(config, estimate, s, objective, spec, make_rng(seed)) for s in schemes
    }
    rng = make_rng(seed)
    out = {s: np.empty(trials) for s in schemes}
    for t in range(trials):
        true = _perturbed_topology(estimate, config, mu, rng) if mu > 0 else estimate
        for s in schemes:
            out[s][t] = score_action(config, true, actions[s], objective)
    return out


def robustness_aoa(
    config: SystemConfig,
    mu_grid: Sequence[float],
    trials: int,
    seed: int,
    spec: ExperimentSpec | None = None,
) -> list[ResultRow]:
    spec = spec or ExperimentSpec(seed=seed, trials=trials)
    rows = []
    for mu in mu_grid:
        start = time.perf_counter()
        samples = robustness_samples(config, mu, trials, seed, spec.schemes, spec.objective, spec)
        elapsed = (time.perf_counter() - start) * 1e3 if spec.timing else 0.0
        for s in spec.schemes:
            rows.append(
                ResultRow(
                    experiment=spec.name,
                    scheme=s,
                    objective=spec.objective,
                    L=config.L,
                    Q_J_dbm=config.Q_J_dbm,
                    mu=float(mu),
                    seed=seed,
                    rate_bits=float(samples[s].mean()),
                    iterations=trials,
                    runtime_ms=elapsed,
                )
            )
    return rows


# --- config files ---------------------------------------------------------

_ALIASES = {"lambda": "wavelength"}
_SPEC_FIELDS = {f.name: f for f in fields(ExperimentSpec)}
_INT_FIELDS = {"M", "K", "N", "max_outer", "max_inner", "seed", "trials", "rap_draws",
               "eap_draws", "rula_angles", "as_extra"}


def _parse_value(key: str, raw: str):
    raw = raw.strip()
    if key in ("theta", "sweep_values"):
        return tuple(float(v) for v in raw.split(",") if v.strip())
    if key == "schemes":
        return tuple(v.strip() for v in raw.split(",") if v.strip())
    if key in ("name", "objective"):
        return raw
    if key == "sweep_param":
        return raw or None
    if key == "timing":
        if raw.lower() in ("true", "yes", "on", "1"):
            return True
        if raw.lower() in ("false", "no", "off", "0"):
            return False
        raise ValueError(f"not a boolean: {raw!r}")
    if key in _INT_FIELDS:
        return int(raw)
    return float(raw)


def parse_config(text: str) -> tuple[SystemConfig, ExperimentSpec]:
    """Parse ``key = value`` lines (``#`` starts a comment)."""
    sys_keys = set(SystemConfig.field_names())
    sys_kw, spec_kw = {}, {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, raw = (p.strip() for p in line.split("=", 1))
        key = _ALIASES.get(key, key)
        try:
            value = _parse_value(key, raw)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {exc}") from None
        if key == "seed":
            sys_kw[key] = spec_kw[key] = value
        elif key in sys_keys:
            sys_kw[key] = value
        elif key in _SPEC_FIELDS:
            spec_kw[key] = value
        else:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
    try:
        return SystemConfig(**sys_kw), ExperimentSpec(**spec_kw)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def load_config(path: str | Path) -> tuple[SystemConfig, ExperimentSpec]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text)


# --- CSV ------------------------------------------------------------------

_COLUMNS = [f.name for f in fields(ResultRow)]


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.12g}"
    return str(v)


def rows_to_csv(rows: Iterable[ResultRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(_COLUMNS)
    for row in rows:
        d = asdict(row)
        w.writerow([_fmt(d[c]) for c in _COLUMNS])
    return buf.getvalue()


def write_csv(rows: Iterable[ResultRow], path: str | Path) -> None:
    Path(path).write_text(rows_to_csv(rows), encoding="utf-8")
