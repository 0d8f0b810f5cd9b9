"""Acceptance criteria, one test each.

Every test records a PASS/FAIL line that the terminal summary prints. The
expensive runs are shared through ``_suite`` and also produce the CSV used by
the determinism criterion.
"""
import time
from functools import lru_cache

import numpy as np
import pytest
from conftest import bisection_waterfill, record_criterion

from majammer.fairness_ao import (
    build_weighted_gram,
    fairness_weights,
    principal_eig,
    run_algorithm2,
    update_y,
)
from majammer.harness import (
    ExperimentSpec,
    ResultRow,
    make_rng,
    random_feasible_positions,
    robustness_samples,
    rows_to_csv,
    run_scheme,
)
from majammer.model import ConfigError, SystemConfig, derive_topology, jammer_channel, linspace_positions
from majammer.special import (
    check_full_correlation,
    eig2x2_closed,
    full_correlation_residual,
    ideal_positions,
    k2_fairness,
    k2_sumrate_procedure,
    lb_minrate,
    lb_sumrate,
    maximize_pair_correlation,
    mrt_beam,
    pair_correlation,
)
from majammer.st_response import LinkState, evaluate_jammer_action, waterfill
from majammer.sumrate_ao import run_algorithm1
from majammer.surrogates import (
    CosineSurrogateParams,
    cos_lower,
    cos_lower_coeffs,
    log_upper,
    position_gain_lower,
    position_gain_lower_terms,
    position_gain_upper,
    position_gain_upper_terms,
    quad_lower_bf,
    smooth_max,
)

pytestmark = pytest.mark.slow

BENCHMARKS = ("rap", "fpa", "as", "fb_eap", "rula")
TRIALS = 200
# the stated grid plus the finer steps the span sweeps use; L < 2 cannot hold the array
SPAN_GRID = (1.0, 1.3, 1.6, 1.9, 2.0, 2.1, 2.2, 2.3, 2.4, 2.5)
POWER_GRID = (0.0, 5.0, 10.0, 15.0)


def seeded_config(seed: int, K: int = 4, **kw) -> SystemConfig:
    """Seed 0 keeps the default angles; other seeds draw sorted U(-pi/3, pi/3)."""
    if seed == 0 and K == 4:
        return SystemConfig(seed=0, **kw)
    theta = np.sort(make_rng(seed).uniform(-np.pi / 3, np.pi / 3, K))
    return SystemConfig(K=K, theta=tuple(theta), seed=seed, **kw)


def _row(name, scheme, objective, cfg, rate, iterations=0, mu=0.0) -> ResultRow:
    return ResultRow(name, scheme, objective, cfg.L, cfg.Q_J_dbm, mu, cfg.seed, rate, iterations, 0.0)


def build_suite() -> dict:
    """Run every optimizer-backed criterion once; rows hold no timings."""
    out: dict = {"rows": [], "wall": {}}
    rows = out["rows"]

    # criterion 1
    alg1 = []
    for seed in range(10):
        cfg = seeded_config(seed)
        t0 = time.perf_counter()
        _, _, rep = run_algorithm1(cfg)
        alg1.append((seed, rep, time.perf_counter() - t0))
        rows.append(_row("c1_alg1", "proposed", "sum", cfg, rep.final_objective, rep.iterations))
    out["alg1"] = alg1

    # criterion 2
    cfg = SystemConfig()
    t0 = time.perf_counter()
    _, _, rep = run_algorithm2(cfg)
    out["alg2"] = (rep, time.perf_counter() - t0)
    rows.append(_row("c2_alg2", "proposed", "min", cfg, rep.final_objective, rep.iterations))

    # criterion 5
    bench = {}
    t0 = time.perf_counter()
    for objective in ("sum", "min"):
        spec = ExperimentSpec(name="c5_bench", objective=objective, timing=False)
        for scheme in ("proposed",) + BENCHMARKS:
            row = run_scheme(cfg, scheme, objective, spec)
            bench[objective, scheme] = row.rate_bits
            rows.append(row)
    out["wall"]["bench"] = time.perf_counter() - t0
    topo = derive_topology(cfg)
    out["lb"] = {"sum": lb_sumrate(cfg, topo), "min": lb_minrate(cfg, topo)}
    out["bench"] = bench

    # criterion 6
    trends = {}
    for objective in ("sum", "min"):
        spec = ExperimentSpec(name="c6_trend", objective=objective, timing=False)
        for param, grid in (("L", SPAN_GRID), ("Q_J_dbm", POWER_GRID)):
            series = []
            for value in grid:
                try:
                    c = cfg.patch(**{param: value})
                except ConfigError:
                    continue  # the array does not fit in this span
                row = run_scheme(c, "proposed", objective, spec)
                series.append((value, row.rate_bits))
                rows.append(row)
            trends[objective, param] = series
    out["trends"] = trends

    # criterion 7
    k2 = []
    for seed in range(5):
        c = seeded_config(seed + 1, K=2)
        t = derive_topology(c)
        res = k2_sumrate_procedure(c, t)
        _, _, rate_min = k2_fairness(c, t)
        a1 = run_algorithm1(c, t)[2].final_objective
        a2 = run_algorithm2(c, t)[2].final_objective
        x_opt, _ = maximize_pair_correlation(c, t, 0, 1, linspace_positions(c.N, c.L))
        r_opt = pair_correlation(c, t, x_opt, 0, 1)
        draws = random_feasible_positions(c, make_rng(seed), size=100)
        r_rand = max(pair_correlation(c, t, x, 0, 1) for x in draws)
        k2.append((c.seed, res.rate, a1, rate_min, a2, r_opt, r_rand))
        rows.append(_row("c7_k2", "k2_closed", "sum", c, res.rate))
        rows.append(_row("c7_k2", "proposed", "sum", c, a1))
        rows.append(_row("c7_k2", "k2_closed", "min", c, rate_min))
        rows.append(_row("c7_k2", "proposed", "min", c, a2))
    out["k2"] = k2

    # criterion 9
    robust = {}
    for objective in ("sum", "min"):
        base = robustness_samples(cfg, 0.0, 1, 0, ("proposed", "fpa"), objective)
        pert = robustness_samples(cfg, 0.1, TRIALS, 0, ("proposed", "fpa"), objective)
        for s in ("proposed", "fpa"):
            robust[objective, s] = (float(base[s][0]), pert[s])
            rows.append(_row("c9_aoa", s, objective, cfg, float(base[s][0]), 1, 0.0))
            rows.append(_row("c9_aoa", s, objective, cfg, float(pert[s].mean()), TRIALS, 0.1))
    out["robust"] = robust
    return out


@lru_cache(maxsize=1)
def _suite() -> dict:
    return build_suite()


def test_criterion_01_monotone_sumrate_ao():
    bad = []
    for seed, rep, wall in _suite()["alg1"]:
        rise = float(np.max(np.diff(rep.objective_trace), initial=0.0))
        if rise > 1e-6 or not rep.converged or rep.iterations > 50 or wall > 60:
            bad.append(f"seed {seed}: rise={rise:.2e} it={rep.iterations} wall={wall:.1f}s")
    worst = max(w for _, _, w in _suite()["alg1"])
    its = max(r.iterations for _, r, _ in _suite()["alg1"])
    detail = "; ".join(bad) or f"10 seeds, max outer iterations {its}, max wall {worst:.1f}s"
    record_criterion(1, not bad, detail)
    assert not bad, detail


def test_criterion_02_fairness_ao_convergence():
    rep, wall = _suite()["alg2"]
    trace = np.asarray(rep.objective_trace)
    drop = float(np.max(-np.diff(trace), initial=0.0))
    # the trace is O(1e-8) in mW units; apply the slack relative to its scale
    ok = drop <= 1e-9 * trace.max() and rep.converged and rep.iterations <= 15 and wall <= 10
    detail = f"outer iterations {rep.iterations}, max relative drop {drop / trace.max():.1e}, wall {wall:.2f}s"
    record_criterion(2, ok, detail)
    assert ok, detail


def test_criterion_03_oracle_equivalences():
    rng = make_rng(3)
    wf = 0.0
    for _ in range(1000):
        K = int(rng.integers(1, 9))
        link = LinkState(rng.uniform(0.1, 10, K), rng.uniform(0.1, 10, K))
        P = float(rng.uniform(0.1, 20))
        wf = max(wf, float(np.abs(waterfill(link, P).powers - bisection_waterfill(link.cost, P)).max()))

    eig = 0.0
    for _ in range(10_000):
        a = float(rng.uniform())
        d1, d2 = rng.uniform(500, 2000, 2)
        N, tau = int(rng.integers(1, 9)), float(rng.uniform(2, 4))
        p1, p2 = N / d1**tau, N / d2**tau
        r = float(rng.uniform(0, np.sqrt(p1 * p2)))
        b = np.sqrt(a * (1 - a)) * r
        dense = np.linalg.eigvalsh(np.array([[a * p1, b], [b, (1 - a) * p2]]))[-1]
        closed = eig2x2_closed(a, d1, d2, r, N, tau)
        eig = max(eig, abs(closed - dense) / dense)

    power = 0.0
    for seed in range(10):
        cfg = seeded_config(seed)
        topo = derive_topology(cfg)
        x = random_feasible_positions(cfg, make_rng(seed))
        wts = fairness_weights(topo, cfg)
        y = np.ones(topo.K, dtype=complex) / np.sqrt(topo.K)
        for _ in range(5000):
            y = update_y(x, y, topo, cfg, wts)
        A = build_weighted_gram(x, topo, cfg, wts)
        ref, _ = principal_eig(A)
        power = max(power, abs(np.real(np.vdot(y, A @ y)) - ref) / ref)

    ok = wf <= 1e-9 and eig <= 1e-9 and power <= 1e-6
    detail = f"waterfill {wf:.1e}, eig2x2 rel {eig:.1e}, power iteration rel {power:.1e}"
    record_criterion(3, ok, detail)
    assert ok, detail


def _rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


def test_criterion_04_surrogate_validity():
    rng = make_rng(4)
    n = 10_000
    h = 1e-6
    tan, viol, grad, gap = 0.0, 0.0, 0.0, 0.0

    # log tangent
    eta0 = rng.uniform(1e-3, 1e3, n)
    eta = rng.uniform(1e-3, 1e3, n)
    tan = max(tan, float(np.abs(log_upper(eta0, eta0) - np.log(eta0)).max()))
    viol = max(viol, float(np.max(np.log(eta) - log_upper(eta, eta0))))
    fd = (np.log(eta0 + h * eta0) - np.log(eta0 - h * eta0)) / (2 * h * eta0)
    grad = max(grad, float(np.max(np.abs(1 / eta0 - fd) * eta0)))

    # cosine minorant
    p = CosineSurrogateParams(rng.uniform(-20, 20, n), rng.uniform(-np.pi, np.pi, n), rng.uniform(-3, 3, n))
    x = rng.uniform(-3, 3, n)
    value, slope, _ = cos_lower_coeffs(p)
    tan = max(tan, float(np.abs(cos_lower(p.x0, p) - np.cos(p.alpha * p.x0 - p.beta)).max()))
    viol = max(viol, float(np.max(cos_lower(x, p) - np.cos(p.alpha * x - p.beta))))
    fd = (np.cos(p.alpha * (p.x0 + h) - p.beta) - np.cos(p.alpha * (p.x0 - h) - p.beta)) / (2 * h)
    scale = np.maximum(np.abs(p.alpha), 1.0)
    grad = max(grad, float(np.max(np.abs(slope - fd) / scale)))

    # smoothing gap
    chi = rng.uniform(0.1, 50, n)
    v = rng.uniform(-50, 50, n)
    sm = np.array([smooth_max(vi, ci) for vi, ci in zip(v, chi)])
    gap = float(np.max(sm - np.maximum(v, 0) - np.log(2) / chi))
    gap = max(gap, float(np.max(np.maximum(v, 0) - sm)))

    # beamformer linearization
    for _ in range(n):
        B = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        G = B @ B.conj().T
        w0 = rng.normal(size=4) + 1j * rng.normal(size=4)
        w = rng.normal(size=4) + 1j * rng.normal(size=4)
        d = rng.normal(size=4) + 1j * rng.normal(size=4)
        f0 = np.real(np.vdot(w0, G @ w0))
        tan = max(tan, abs(quad_lower_bf(w0, w0, G) - f0) / f0)
        fw = np.real(np.vdot(w, G @ w))
        viol = max(viol, (quad_lower_bf(w, w0, G) - fw) / max(fw, f0))
        fp = np.real(np.vdot(w0 + h * d, G @ (w0 + h * d)))
        fm = np.real(np.vdot(w0 - h * d, G @ (w0 - h * d)))
        an = (quad_lower_bf(w0 + h * d, w0, G) - quad_lower_bf(w0 - h * d, w0, G)) / (2 * h)
        grad = max(grad, _rel(an, (fp - fm) / (2 * h)) if abs(fp - fm) > 1e-6 * f0 * h else 0.0)

    # jamming gain minorant and majorant in the positions, scaled to O(N)
    cfg = SystemConfig()
    topo = derive_topology(cfg)
    k = 2 * np.pi / cfg.wavelength
    for t in range(n):
        i = t % topo.K
        s = topo.d_J[i] ** cfg.tau
        x0 = rng.uniform(0, cfg.L, cfg.N)
        w = rng.normal(size=cfg.N) + 1j * rng.normal(size=cfg.N)
        w /= np.linalg.norm(w)
        x = x0 + rng.normal(scale=0.5, size=cfg.N)
        g0 = jammer_channel(topo, cfg, x0, i)
        true0 = abs(np.vdot(w, g0)) ** 2 * s
        true = abs(np.vdot(w, jammer_channel(topo, cfg, x, i))) ** 2 * s
        lo0 = position_gain_lower(x0, x0, w, topo, cfg, i) * s
        hi0 = position_gain_upper(x0, x0, w, topo, cfg, i) * s
        tan = max(tan, abs(lo0 - true0), abs(hi0 - true0))
        viol = max(
            viol,
            position_gain_lower(x, x0, w, topo, cfg, i) * s - true,
            true - position_gain_upper(x, x0, w, topo, cfg, i) * s,
        )
        # gradients at the expansion point
        alpha = k * np.sin(topo.phi[i])
        c = np.vdot(w, g0)
        exact = -2 * alpha * np.imag(np.conj(c) * np.conj(w) * g0) * s
        wl, pl, _ = position_gain_lower_terms(x0, w, topo, cfg, i)
        gl = 2 * wl * cos_lower_coeffs(pl)[1] * s
        _, wu, pu = position_gain_upper_terms(x0, w, topo, cfg, i)
        gu = -2 * wu * cos_lower_coeffs(pu)[1] * s
        j = int(rng.integers(cfg.N))
        e = np.zeros(cfg.N)
        e[j] = h
        fd = (
            abs(np.vdot(w, jammer_channel(topo, cfg, x0 + e, i))) ** 2
            - abs(np.vdot(w, jammer_channel(topo, cfg, x0 - e, i))) ** 2
        ) * s / (2 * h)
        scale = max(np.abs(exact).max(), 1.0)
        grad = max(grad, abs(exact[j] - fd) / scale, abs(gl[j] - fd) / scale, abs(gu[j] - fd) / scale)

    ok = tan <= 1e-12 and viol <= 1e-10 and grad <= 1e-5 and gap <= 1e-12
    detail = f"tangency {tan:.1e}, bound violation {viol:.1e}, gradient {grad:.1e}, smoothing excess {gap:.1e}"
    record_criterion(4, ok, detail)
    assert ok, detail


def test_criterion_05_benchmark_dominance():
    suite = _suite()
    bench, lb = suite["bench"], suite["lb"]
    bad = []
    for objective in ("sum", "min"):
        mine = bench[objective, "proposed"]
        for s in BENCHMARKS:
            if mine > bench[objective, s] + 1e-6:
                bad.append(f"{objective}: proposed {mine:.4f} > {s} {bench[objective, s]:.4f}")
        if mine < lb[objective] - 1e-6:
            bad.append(f"{objective}: proposed {mine:.4f} < bound {lb[objective]:.4f}")
    wall = suite["wall"]["bench"]
    if wall > 1800:
        bad.append(f"bench took {wall:.0f}s")
    detail = "; ".join(bad) or f"all schemes dominated, bench {wall:.0f}s"
    record_criterion(5, not bad, detail)
    assert not bad, detail


def test_criterion_06_trends():
    bad = []
    for (objective, param), series in _suite()["trends"].items():
        rates = [r for _, r in series]
        if len(rates) < 2:
            bad.append(f"{objective}/{param}: fewer than two feasible grid points")
        for (v0, r0), (v1, r1) in zip(series, series[1:]):
            if r1 > r0 + 1e-3:
                bad.append(f"{objective}/{param}: {r0:.4f}@{v0:g} -> {r1:.4f}@{v1:g}")
    spans = [v for v, _ in _suite()["trends"]["sum", "L"]]
    detail = "; ".join(bad) or f"non-increasing on L={spans} and Q_J={list(POWER_GRID)}"
    record_criterion(6, not bad, detail)
    assert not bad, detail


def test_criterion_07_two_user_cross_validation():
    bad = []
    worst = 0.0
    for seed, k2_sum, a1, k2_min, a2, r_opt, r_rand in _suite()["k2"]:
        worst = max(worst, abs(k2_sum - a1), abs(k2_min - a2))
        if abs(k2_sum - a1) > 0.05 or abs(k2_min - a2) > 0.05:
            bad.append(f"seed {seed}: sum {k2_sum:.4f}/{a1:.4f}, min {k2_min:.4f}/{a2:.4f}")
        if not r_opt > r_rand:
            bad.append(f"seed {seed}: |r| {r_opt:.4e} <= random {r_rand:.4e}")
    detail = "; ".join(bad) or f"5 geometries, max gap {worst:.4f} bits/s/Hz, |r| beats 100 draws"
    record_criterion(7, not bad, detail)
    assert not bad, detail


def test_criterion_08_bound_witness():
    d = 0.5
    cfg = SystemConfig(K=2, theta=(float(np.arcsin(-d / 2)), float(np.arcsin(d / 2))), L=8.0)
    topo = derive_topology(cfg)
    ip = ideal_positions(topo, cfg)
    w = mrt_beam(topo, cfg, ip.x_star)
    s = evaluate_jammer_action(cfg, topo, w, ip.x_star, "sum").sum_rate
    m = evaluate_jammer_action(cfg, topo, w, ip.x_star, "min").min_rate
    es = abs(s - lb_sumrate(cfg, topo))
    em = abs(m - lb_minrate(cfg, topo))
    res = full_correlation_residual(ip.x_star, topo, cfg)
    ok = ip.achieved and es <= 1e-6 and em <= 1e-6 and check_full_correlation(ip.x_star, topo, cfg) and res <= 1e-9
    detail = f"sum gap {es:.1e}, min gap {em:.1e}, residual {res:.1e}, span {ip.span:g}"
    record_criterion(8, ok, detail)
    assert ok, detail


def test_criterion_09_robustness():
    bad, parts = [], []
    for objective in ("sum", "min"):
        inc = {}
        for s in ("proposed", "fpa"):
            base, samples = _suite()["robust"][objective, s]
            inc[s] = samples.mean() / base - 1
            se = samples.std(ddof=1) / np.sqrt(samples.size) / base
            if s == "proposed" and inc[s] > 0.05 + 2 * se:
                bad.append(f"{objective}: proposed +{inc[s]:.2%} exceeds 5% + 2SE")
        parts.append(f"{objective}: proposed {inc['proposed']:+.2%}, fpa {inc['fpa']:+.2%}")
        if not inc["fpa"] > inc["proposed"]:
            bad.append(f"{objective}: fpa increase does not exceed proposed")
    detail = "; ".join(parts + bad)
    record_criterion(9, not bad, detail)
    assert not bad, detail


def test_criterion_10_determinism():
    first = rows_to_csv(_suite()["rows"])
    second = rows_to_csv(build_suite()["rows"])
    ok = first.encode() == second.encode()
    detail = f"{len(_suite()['rows'])} rows, {len(first.encode())} bytes, identical={ok}"
    record_criterion(10, ok, detail)
    assert ok, detail
