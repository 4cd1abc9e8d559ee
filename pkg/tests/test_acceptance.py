"""Acceptance suite: one test per criterion, at the stated scales and
tolerances. Run with `pytest -s tests/test_acceptance.py` to see the
per-criterion PASS lines. The heavy circuit criteria (4-6) dominate the
runtime; everything is seeded and deterministic."""

import hashlib
import json
import math
import time

import numpy as np
import pytest

from paulitel.analytics import ksize_pmf, overlap_pmf, peak_bound, peak_bound_vs_gbeta, syk_size_pmf
from paulitel.circuits import (
    GROWTH_RATE,
    CircuitSpec,
    OperatorSeed,
    SubsystemSpec,
    scrambling_time_0d,
    size_trace,
)
from paulitel.clifford import enumerate_symplectic2, gate_table
from paulitel.fidelity import CouplingSpec, collect_phase_data, epr_fidelity
from paulitel.pauli import SiteSet, k_size, overlap, random_pauli_of_size
from paulitel.syk import (
    StringyParams,
    SykParams,
    correlator_finite_T,
    correlator_infinite_T,
    lyapunov,
    resum_winding,
    solve_lyapunov,
    stringy_correlator,
    winding_distribution,
)
from paulitel.util import rng_for, subset_sites

WORKERS = 2
SEED = 20250809


def report(num, summary):
    print(f"\nACCEPTANCE {num}: PASS - {summary}")


# ---------------------------------------------------------------------- 1
def test_criterion_01_clifford_group():
    t0 = time.perf_counter()
    enumerate_symplectic2.cache_clear()
    gate_table.cache_clear()
    gates = enumerate_symplectic2()
    gate_table()
    elapsed = time.perf_counter() - t0
    assert len(gates) == 720
    assert all(g.is_symplectic() for g in gates)
    assert len(gates) * 16 == 11520
    assert elapsed < 1.0
    report(1, f"720 symplectic gates (x16 phases = 11520) in {elapsed:.3f}s")


# -------------------------------------------------------------------- 2+3
@pytest.fixture(scope="module")
def late_time_1d_trace():
    n = 512
    spec = CircuitSpec(dimension=1, extent=n, depth=4 * n, seed=SEED)
    trace = size_trace(
        OperatorSeed((n // 2,)),
        spec,
        SubsystemSpec("all"),
        realizations=50,
        record_at=[0, n, 2 * n, 3 * n, 4 * n],
        workers=WORKERS,
    )
    return spec, trace


def test_criterion_02_late_time_saturation(late_time_1d_trace):
    spec, trace = late_time_1d_trace
    n = spec.n_sites
    mean_frac = trace.mean_size[-1] / n
    width = trace.size_width[-1]
    target_width = math.sqrt(3 * n / 16)
    assert abs(mean_frac - 0.75) <= 0.02
    assert abs(width - target_width) <= 0.20 * target_width
    report(
        2,
        f"1D N={n}: late mean size/N = {mean_frac:.4f} (0.75 +- 0.02), "
        f"width {width:.2f} vs sqrt(3N/16) = {target_width:.2f}",
    )


def test_criterion_03_single_qubit_peak(late_time_1d_trace):
    spec, trace = late_time_1d_trace
    n = spec.n_sites
    t_probe = int(trace.ts[-1])
    g_tuned = math.pi * n / trace.mean_size[-1]  # g S_K / K = pi at the probe
    coupling = CouplingSpec("size", g_tuned, SubsystemSpec("all"))
    res = epr_fidelity([n // 2], spec, coupling, t_probe, realizations=50, workers=WORKERS)
    assert res.value >= 0.95
    zero = CouplingSpec("size", 0.0, SubsystemSpec("all"))
    res0 = epr_fidelity([n // 2], spec, zero, t_probe, realizations=50, workers=WORKERS)
    assert abs(res0.value - 0.25) <= 0.02
    report(
        3,
        f"g = {g_tuned:.4f} tuned: F = {res.value:.4f} >= 0.95; "
        f"g = 0: F = {res0.value:.4f} = 0.25 +- 0.02",
    )


# ---------------------------------------------------------------------- 4
def test_criterion_04_0d_growth_law():
    n, p = 10**6, 101
    t_star = scrambling_time_0d(n, p)
    depth = int(t_star - 3)
    spec = CircuitSpec(dimension=0, extent=n, depth=depth, seed=SEED)
    trace = size_trace(
        OperatorSeed(tuple(range(p))), spec, SubsystemSpec("all"),
        realizations=100, workers=WORKERS,
    )
    lo = 2
    ts = trace.ts[lo:]
    slope = np.polyfit(ts, np.log(trace.mean_size[lo:]), 1)[0]
    target = math.log(GROWTH_RATE)
    assert abs(slope - target) <= 0.05 * target
    ratio = float((trace.size_width[lo:] / trace.mean_size[lo:]).max())
    target_ratio = 1.0 / math.sqrt(p)
    assert target_ratio / 2 <= ratio <= 2 * target_ratio
    report(
        4,
        f"0D N=1e6 p=101: slope {slope:.4f} vs ln(1.6) = {target:.4f} (5%); "
        f"width/mean max {ratio:.4f} vs 1/sqrt(p) = {target_ratio:.4f} (factor 2)",
    )


# ---------------------------------------------------------------------- 5
def test_criterion_05_three_regime_fidelity():
    n, p = 10**6, 101
    g = 28 * math.pi / 3  # g p ~ pi * 1e3; also g * (3/4) = 7 pi for a clean revival
    t_star = scrambling_time_0d(n, p)
    t_on = math.log(math.pi * n / (g * p)) / math.log(GROWTH_RATE)
    t_col = math.log(n / (g * math.sqrt(p))) / math.log(GROWTH_RATE)
    ts = list(range(10, 28))
    circuit = CircuitSpec(dimension=0, extent=n, depth=max(ts), seed=SEED)
    blocks = [OperatorSeed(tuple(range(p)))]
    data = collect_phase_data(blocks, circuit, SubsystemSpec("all"), ts, 16, workers=WORKERS)
    f_of_t = {}
    for t in ts:
        per_real = []
        for d in (per[t] for per in data):
            sk = d.k_sizes(np.array([[0], [1], [2], [3]], dtype=np.int64))
            theta = g * sk / d.k + math.pi * np.array([0, 1, 1, 1])
            per_real.append(abs(np.exp(1j * theta).mean()) ** 2)
        f_of_t[t] = float(np.mean(per_real))
    # fully dephased phases leave F ~ (1 + 3)/16 = 0.25, so the collapse
    # threshold sits between that floor and the coherent peaks
    high, low = 0.8, 0.35
    onset = [t for t in ts if f_of_t[t] >= high and abs(t - t_on) <= 2]
    assert onset, f"no onset near t* - log(gp) ~ {t_on:.1f}: {f_of_t}"
    t1 = min(onset)
    collapse = [t for t in ts if t1 < t <= math.ceil(t_star) and f_of_t[t] <= low]
    assert collapse, f"no collapse by t* ~ {t_star:.1f} (predicted ~{t_col:.1f}): {f_of_t}"
    t2 = min(collapse)
    # revival = start of the stable late plateau
    tails = [t for t in ts if t > t2 and all(f_of_t[u] >= high for u in ts if u >= t)]
    assert tails, f"no stable revival after collapse: {f_of_t}"
    t3 = min(tails)
    assert t1 < t2 < t3
    report(
        5,
        f"0D three regimes: onset t={t1} (~{t_on:.1f}), collapse t={t2} "
        f"(~{t_col:.1f}), revival t={t3} (t* = {t_star:.1f})",
    )


# ---------------------------------------------------------------------- 6
def test_criterion_06_capacity_linearity():
    from paulitel.capacity import CapacitySweepSpec, capacity_sweep

    spec = CapacitySweepSpec(
        k_list=(300, 1000, 3000, 9000),
        n_sites=10**6,
        p=101,
        epsilon_th=0.07,
        realizations=12,
        qu_draws=64,
        seed=SEED,
    )
    t0 = time.perf_counter()
    result = capacity_sweep(spec, workers=WORKERS)
    elapsed = time.perf_counter() - t0
    assert elapsed < 3600.0
    for rk in result.per_k:
        assert not rk.unbounded_in_grid, f"threshold not bracketed at K={rk.k}"
        assert rk.n_max <= rk.k / 2
    slope, r2 = result.nmax_linearity()
    assert r2 > 0.9
    nmax_str = ", ".join(f"K={r.k}: {r.n_max:.1f}" for r in result.per_k)
    report(6, f"capacity linear: {nmax_str}; slope {slope:.4f}, R^2 = {r2:.3f} ({elapsed:.0f}s)")


# ---------------------------------------------------------------------- 7
def test_criterion_07_hypergeometric_oracles():
    samples = 100_000
    rng = rng_for(SEED, 0x07)

    n, r1, r2 = 10**4, 100, 100
    dist = overlap_pmf(n, r1, r2)
    counts = np.zeros(len(dist.p_values), dtype=np.int64)
    for _ in range(samples):
        p1 = random_pauli_of_size(r1, n, rng)
        p2 = random_pauli_of_size(r2, n, rng)
        counts[overlap(p1, p2) - int(dist.p_values[0])] += 1
    tv_overlap = 0.5 * float(np.abs(counts / samples - dist.pmf).sum())
    assert tv_overlap < 0.02
    assert dist.mean() == pytest.approx(r1 * r2 / n, rel=1e-9)
    assert dist.variance() == pytest.approx(r1 * r2 / n, rel=0.02)

    s, k = 300, 200
    kdist = ksize_pmf(n, s, k)
    kcounts = np.zeros(len(kdist.values), dtype=np.int64)
    for _ in range(samples):
        p1 = random_pauli_of_size(s, n, rng)
        c = SiteSet(frozenset(int(x) for x in subset_sites(n, k, rng)))
        kcounts[k_size(p1, c) - int(kdist.values[0])] += 1
    tv_ksize = 0.5 * float(np.abs(kcounts / samples - kdist.pmf).sum())
    assert tv_ksize < 0.02
    assert kdist.mean() == pytest.approx(s * k / n, rel=1e-9)
    assert kdist.width() ** 2 == pytest.approx(s * k / n, rel=0.05)
    report(
        7,
        f"overlap TV = {tv_overlap:.4f}, K-size TV = {tv_ksize:.4f} "
        f"(< 0.02 at 1e5 samples); moment identities hold",
    )


# ---------------------------------------------------------------------- 8
def test_criterion_08_syk_consistency():
    # (a) beta -> 0 limit matches the infinite-temperature form
    warm = SykParams(10**5, 4, 2, 1.0, 1e-4, 5.0)
    cold0 = SykParams(10**5, 4, 2, 1.0, 0.0, 5.0)
    diff = max(
        abs(
            correlator_finite_T(warm, t, "leading")
            - (-1j) ** warm.p * correlator_infinite_T(cold0, t)
        )
        for t in (0.5, 1.5, 2.5)
    )
    assert diff < 1e-6

    # (b) winding resummation reproduces the closed form on a 20-point grid
    worst = 0.0
    for beta in (0.0, 0.3, 1.0, 3.0, 10.0):
        for t in (0.5, 1.5, 2.5, 3.5):
            pr = SykParams(10**5, 4, 2, 1.0, beta, 2.0)
            dist = winding_distribution(pr, t, 60_000)
            assert dist.truncation_ok
            closed = correlator_finite_T(pr, t, "full")
            worst = max(worst, abs(resum_winding(dist, pr) - closed) / abs(closed))
    assert worst < 1e-6

    # (c) low-temperature magnitude peak reaches 1 within 2%
    pr = SykParams(10**6, 4, 4, 1.0, 50.0, 2.0)
    lam = lyapunov(pr)
    t_peak = math.log(2 * lam * pr.n_fermions / (pr.g * pr.j)) / lam
    peak = abs(correlator_finite_T(pr, t_peak, "leading"))
    assert abs(peak - 1.0) <= 0.02

    # (d) chaos-exponent limits to 1%
    assert solve_lyapunov(1e-4) / (2e-4) == pytest.approx(1.0, abs=0.01)
    assert solve_lyapunov(1e3) / (2 * math.pi) == pytest.approx(1.0, abs=0.01)
    report(
        8,
        f"beta->0 diff {diff:.2e}; resummation worst rel {worst:.2e}; "
        f"|C| peak {peak:.4f}; solver limits within 1%",
    )


# ---------------------------------------------------------------------- 9
def test_criterion_09_peak_bound():
    x = 0.99
    eta_grid = np.linspace(0.002, 0.6, 600)
    mins = {}
    etas = {}
    for delta in (10.0, 100.0, 1000.0):
        n_max = int(delta * x / (1 - x) * 6) + 200
        dist = syk_size_pmf(delta, x, n_max)
        res = peak_bound(dist, math.pi / dist.mean(), 1.0, eta_grid)
        mins[delta] = res.b
        etas[delta] = res.eta_star
    assert mins[10.0] > mins[100.0] > mins[1000.0]
    eta_pred = math.sqrt(math.log(8 * 1000.0 / math.pi**3) / 1000.0)
    assert abs(etas[1000.0] - eta_pred) <= 0.25 * eta_pred
    cmp = peak_bound_vs_gbeta(100.0, 0.5, 50.0, 4000, np.linspace(0.002, 0.6, 300))
    assert cmp["bound_inconclusive"] and cmp["min_b"] > cmp["g_beta"]
    report(
        9,
        f"min B: {mins[10.0]:.3f} > {mins[100.0]:.3f} > {mins[1000.0]:.3f}; "
        f"eta* = {etas[1000.0]:.4f} vs {eta_pred:.4f} (25%); "
        f"betaJ=50 bound-inconclusive flag raised",
    )


# --------------------------------------------------------------------- 10
def test_criterion_10_stringy_correlator():
    soft = StringyParams(delta=50.0, epsilon_str=0.02, g_n=1e-3, g=1.0, t=1.0)
    mag = abs(stringy_correlator(soft))
    assert mag >= 0.98

    base = StringyParams(delta=8.0, epsilon_str=1.0, g_n=1e-4, g=1.0, t=0.0)
    t_pole = math.log(4.0 / (base.g * base.g_n))
    mag0 = abs(stringy_correlator(base))
    peak = max(
        abs(stringy_correlator(StringyParams(8.0, 1.0, 1e-4, 1.0, frac * t_pole)))
        for frac in (0.90, 0.95, 0.98)
    )
    assert peak >= 5 * mag0
    report(
        10,
        f"eps->0: |C|/|2pt| = {mag:.4f} >= 0.98; eps=1 pole peak {peak / mag0:.1f}x t=0",
    )


# --------------------------------------------------------------------- 11
def test_criterion_11_determinism(tmp_path):
    from paulitel.cli import main

    cfg = {
        "subcommand": "ruc-fidelity",
        "seed": SEED,
        "parameters": {
            "dimension": 1,
            "extent": 64,
            "depth": 128,
            "n": 1,
            "coupling": {"kind": "size", "g": math.pi, "subsystem": {"kind": "all"}},
            "t": [32, 128],
            "realizations": 50,
        },
    }
    cfg_path = tmp_path / "det.json"
    cfg_path.write_text(json.dumps(cfg))
    digests = {}
    for workers in (1, 4):
        out = tmp_path / f"det_w{workers}.csv"
        rc = main(["--config", str(cfg_path), "--out", str(out), "--workers", str(workers)])
        assert rc == 0
        digests[workers] = hashlib.sha256(out.read_bytes()).hexdigest()
    assert digests[1] == digests[4]
    report(11, f"byte-identical CSVs across worker counts (sha256 {digests[1][:12]}...)")
