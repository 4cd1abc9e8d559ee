"""Channel-capacity sweep.

For each (n, K) the marginal per-qubit fidelity is maximized over a time
grid and a coupling grid; the capacity n_max(K) is where the optimal
infidelity crosses the threshold, found by a linear fit of log(1 - F*)
against n. Fidelity surfaces are oscillatory in both t and g, so grid
search is used: the t grid is linear around the step count at which a
weight-p seed grows to ~N/n, and the g grid is logarithmic around the
first-peak prediction g * S_K / K = pi.

Evolving the 2n logical images is the only expensive part; their K-sizes
at each probe time are cached, after which every (t, g) grid point is a
cheap phase sum, and the whole g grid reuses one set of sizes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field


import numpy as np

from .circuits import GROWTH_RATE, CircuitSpec, SubsystemSpec
from .fidelity import collect_phase_data, default_blocks
from .util import STREAM_SAMPLING, rng_for, write_csv


@dataclass(frozen=True)
class CapacitySweepSpec:
    k_list: tuple[int, ...]
    n_sites: int = 10**6
    p: int = 101
    epsilon_th: float = 0.07
    n_fracs: tuple[float, ...] = (0.0015, 0.003, 0.005, 0.008, 0.013, 0.02)
    n_grid: dict | None = None  # optional explicit {K: [n, ...]}
    t_below: int = 5
    t_above: int = 2
    g_factors: tuple[float, ...] = tuple(np.geomspace(0.6, 1.8, 25))
    realizations: int = 12
    qu_draws: int = 64
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.epsilon_th < 1.0:
            raise ValueError("epsilon_th must lie in (0, 1)")
        for k in self.k_list:
            if k < 2:
                raise ValueError("K must be at least 2")

    def n_values(self, k: int) -> list[int]:
        if self.n_grid and k in self.n_grid:
            vals = [int(n) for n in self.n_grid[k]]
        else:
            # n = 1 is always present as a deep below-threshold anchor
            vals = sorted({1} | {max(1, round(k * f)) for f in self.n_fracs})
        vals = [n for n in vals if n * self.p <= self.n_sites // 2]
        if not vals:
            raise ValueError(f"no admissible n values for K={k} (n p <= N/2)")
        return vals


@dataclass
class CapacityPoint:
    k: int
    n: int
    t_opt: int
    g_opt: float
    f_opt: float
    f_err: float


@dataclass
class CapacityKResult:
    k: int
    n_max: float
    slope: float
    intercept: float
    t_opt: int
    g_opt: float
    unbounded_in_grid: bool
    points: list[CapacityPoint] = field(default_factory=list)


@dataclass
class CapacityResult:
    spec: CapacitySweepSpec
    per_k: list[CapacityKResult]

    CSV_HEADER = ("K", "n_max", "slope", "intercept", "t_opt", "g_opt")

    def to_csv(self, path) -> None:
        rows = (
            (r.k, r.n_max, r.slope, r.intercept, r.t_opt, r.g_opt) for r in self.per_k
        )
        write_csv(path, self.CSV_HEADER, rows)

    def nmax_linearity(self) -> tuple[float, float]:
        """Least-squares slope of n_max vs K and its R^2."""
        ks = np.array([r.k for r in self.per_k if not r.unbounded_in_grid], dtype=float)
        nm = np.array([r.n_max for r in self.per_k if not r.unbounded_in_grid], dtype=float)
        if len(ks) < 2:
            raise ValueError("need at least two bounded K points")
        a, b = np.polyfit(ks, nm, 1)
        pred = a * ks + b
        ss_res = float(np.sum((nm - pred) ** 2))
        ss_tot = float(np.sum((nm - nm.mean()) ** 2))
        return float(a), 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0


def _point_seed(seed: int, k: int, n: int) -> int:
    return int(rng_for(seed, 0xCA9, k, n).integers(0, 2**62))


def _marginal_sk(data, qu: np.ndarray, measured: int) -> np.ndarray:
    """(M, 4) K-sizes of the measured qubit's letter variants."""
    m, n = qu.shape
    base = np.zeros((m, 2, data.variant_planes.shape[-1]), dtype=np.uint64)
    for q in range(n):
        if q != measured:
            base ^= data.variant_planes[q, qu[:, q]]
    sk = np.empty((m, 4), dtype=np.int64)
    for letter in range(4):
        acc = base ^ data.variant_planes[measured, letter][None]
        sk[:, letter] = np.bitwise_count(acc[:, 0] | acc[:, 1]).sum(axis=1, dtype=np.int64)
    return sk


def _marginal_f_grid(sk: np.ndarray, gs: np.ndarray, k: int) -> np.ndarray:
    """Mean |(z_I - z_X - z_Z - z_Y)/4|^2 over samples, for each g."""
    out = np.empty(len(gs))
    for i, g in enumerate(gs):
        z = np.exp(1j * g * sk / k)
        amp = (z[:, 0] - z[:, 1:].sum(axis=1)) / 4.0
        out[i] = float(np.mean(np.abs(amp) ** 2))
    return out


def evaluate_point(n: int, k: int, spec: CapacitySweepSpec) -> CapacityPoint:
    """Optimal marginal fidelity for one (n, K): grid search over (t, g)."""
    t_center = max(1, round(math.log(spec.n_sites / (spec.p * max(n, 1))) / math.log(GROWTH_RATE)))
    ts = list(range(max(1, t_center - spec.t_below), t_center + spec.t_above + 1))
    circuit = CircuitSpec(
        dimension=0, extent=spec.n_sites, depth=max(ts), seed=_point_seed(spec.seed, k, n)
    )
    blocks = default_blocks(n, spec.p)
    subsystem = SubsystemSpec("random", k=k)
    data = collect_phase_data(blocks, circuit, subsystem, ts, spec.realizations)

    sk_all = {}  # (realization, t) -> (M, 4) K-sizes
    for r, per_t in enumerate(data):
        qu = rng_for(circuit.seed, r, STREAM_SAMPLING).integers(
            0, 4, size=(spec.qu_draws, n), dtype=np.int64
        )
        for t in ts:
            sk_all[(r, t)] = _marginal_sk(per_t[t], qu, 0)

    best = None
    g_factors = np.asarray(spec.g_factors, dtype=float)
    for t in ts:
        letter_sk = np.concatenate(
            [data[r][t].single_letter_k_sizes().ravel() for r in range(spec.realizations)]
        )
        mean_sk = float(letter_sk.mean())
        if mean_sk <= 0:
            continue
        gs = math.pi * k / mean_sk * g_factors
        f_grid = np.stack([
            _marginal_f_grid(sk_all[(r, t)], gs, k) for r in range(spec.realizations)
        ])
        f_mean = f_grid.mean(axis=0)
        gi = int(np.argmax(f_mean))
        # earliest-t preference on ties: strict improvement required
        if best is None or f_mean[gi] > best[0] + 1e-12:
            err = float(f_grid[:, gi].std(ddof=1) / math.sqrt(spec.realizations))
            best = (float(f_mean[gi]), err, t, float(gs[gi]))
    if best is None:
        raise ValueError("no usable probe time: evolved operators never touch C")
    f_opt, f_err, t_opt, g_opt = best
    return CapacityPoint(k=k, n=n, t_opt=t_opt, g_opt=g_opt, f_opt=f_opt, f_err=f_err)


def optimize_fidelity(n: int, k: int, spec: CapacitySweepSpec) -> tuple[int, float, float]:
    """(t*, g*, F*) of the marginal fidelity on the default grids."""
    pt = evaluate_point(n, k, spec)
    return pt.t_opt, pt.g_opt, pt.f_opt


def _fit_crossing(points: list[CapacityPoint], eps_th: float, k: int):
    """Crossing of the log-infidelity line with log(eps_th).

    log(1 - F*) is mildly convex in n over a wide grid, so the line is fit
    locally: the points nearest the threshold (at least one on each side,
    up to four in total) determine the crossing.
    """
    ns = np.array([p.n for p in points], dtype=float)
    inf = np.clip(1.0 - np.array([p.f_opt for p in points]), 1e-12, None)
    bracketed = inf.min() < eps_th < inf.max()
    y = np.log(inf)
    target = math.log(eps_th)
    if not bracketed:
        slope, intercept = np.polyfit(ns, y, 1)
        return None, float(slope), float(intercept)
    order = np.argsort(np.abs(y - target), kind="stable")
    chosen: list[int] = []
    for idx in order:
        chosen.append(int(idx))
        below = any(y[i] < target for i in chosen)
        above = any(y[i] > target for i in chosen)
        if len(chosen) >= 4 and below and above:
            break
    if not (any(y[i] < target for i in chosen) and any(y[i] > target for i in chosen)):
        chosen = list(range(len(points)))
    if len(chosen) < 3:
        extra = [int(i) for i in order if int(i) not in chosen]
        chosen.extend(extra[: 3 - len(chosen)])
    sel = sorted(chosen)
    slope, intercept = np.polyfit(ns[sel], y[sel], 1)
    if slope <= 0:
        return None, float(slope), float(intercept)
    n_max = (target - intercept) / slope
    return min(float(n_max), k / 2.0), float(slope), float(intercept)


def capacity_sweep(spec: CapacitySweepSpec, workers: int = 1) -> CapacityResult:
    jobs = [(n, k, spec) for k in spec.k_list for n in spec.n_values(k)]
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as pool:
            points = list(pool.map(_point_worker, jobs))
    else:
        points = [_point_worker(j) for j in jobs]

    per_k = []
    for k in spec.k_list:
        pts = sorted((p for p in points if p.k == k), key=lambda p: p.n)
        if len(pts) < 3:
            raise ValueError("need at least 3 n points per K")
        n_max, slope, intercept = _fit_crossing(pts, spec.epsilon_th, k)
        if n_max is None:
            per_k.append(
                CapacityKResult(k, math.nan, slope, intercept, 0, math.nan, True, pts)
            )
            continue
        nearest = min(pts, key=lambda p: abs(p.n - n_max))
        per_k.append(
            CapacityKResult(k, n_max, slope, intercept, nearest.t_opt, nearest.g_opt, False, pts)
        )
    return CapacityResult(spec=spec, per_k=per_k)


def _point_worker(job):
    n, k, spec = job
    return evaluate_point(n, k, spec)
