"""Random-unitary-circuit layouts and Pauli-string time evolution.

One time step is a full brick-layer period: 2 sub-layers in 1D, 4 in 2D
(two horizontal-bond phases then two vertical-bond phases), and a single
random perfect matching in 0D. 2D sites are linearized row-major:
site(x, y) = y * Lx + x.

Evolution is phase-free Clifford propagation of Pauli strings. 1D/2D use a
dense per-site letter array; 0D uses a sparse batch (CSR over rows) where
only pairs touching the current support are gated. Matching partners of
support sites are drawn uniformly from the unmatched complement, which is
distributionally identical to sampling the full matching and discarding
untouched pairs; when the support is a sizeable fraction of the system the
engine switches to an explicit permutation matching instead.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import backend
from .clifford import gate_table, n_gates
from .pauli import PauliString, SiteSet
from .util import STREAM_CIRCUIT, STREAM_COUPLING, STREAM_ENCODING, rng_for, write_csv

ETA_QUBIT = 9.0 / 15.0  # two-site spread probability under a random gate
GROWTH_RATE = 1.0 + ETA_QUBIT  # per-step size multiplier in 0D

# support density above which 0D matching switches to a full permutation
_DENSE_MATCH_FRACTION = 8


@dataclass(frozen=True)
class CircuitSpec:
    """Geometry, depth and seed of one scrambling-circuit ensemble."""

    dimension: int
    extent: int | tuple[int, int]
    depth: int
    boundary: str = "open"
    seed: int = 0

    def __post_init__(self):
        if self.dimension not in (0, 1, 2):
            raise ValueError("dimension must be 0, 1 or 2")
        if self.depth < 0:
            raise ValueError("depth must be non-negative")
        if self.boundary not in ("open", "periodic"):
            raise ValueError("boundary must be open or periodic")
        if self.dimension == 2:
            if not (isinstance(self.extent, tuple) and len(self.extent) == 2):
                raise ValueError("2D extent must be (Lx, Ly)")
        elif not isinstance(self.extent, int):
            raise ValueError("0D/1D extent must be an int")
        if self.dimension == 0 and self.n_sites % 2 != 0:
            raise ValueError("0D pairing requires an even number of sites")

    @property
    def n_sites(self) -> int:
        if self.dimension == 2:
            return self.extent[0] * self.extent[1]
        return self.extent


@dataclass
class LayerSchedule:
    """Materialized gate layout: site pairs per sub-layer.

    For 1D/2D the same sub-layers repeat every step; for 0D there is one
    matching per step.
    """

    n_sites: int
    steps: int
    sublayers_per_step: int
    layers: list[tuple[np.ndarray, np.ndarray]]
    repeats: bool  # True: `layers` is one period, cycled `steps` times

    def layer_at(self, step: int, sub: int) -> tuple[np.ndarray, np.ndarray]:
        if self.repeats:
            return self.layers[sub]
        return self.layers[step * self.sublayers_per_step + sub]


def _pairs_1d(n: int, parity: int, periodic: bool) -> tuple[np.ndarray, np.ndarray]:
    a = np.arange(parity, n - 1, 2, dtype=np.int64)
    b = a + 1
    if periodic and parity == 1 and n % 2 == 0 and n > 2:
        a = np.append(a, n - 1)
        b = np.append(b, 0)
    return a, b


def _pairs_2d(lx: int, ly: int, axis: int, parity: int, periodic: bool):
    a_sites, b_sites = [], []
    if axis == 0:  # horizontal bonds
        xs = range(parity, lx if periodic else lx - 1, 2)
        for y in range(ly):
            for x in xs:
                a_sites.append(y * lx + x)
                b_sites.append(y * lx + (x + 1) % lx)
    else:  # vertical bonds
        ys = range(parity, ly if periodic else ly - 1, 2)
        for y in ys:
            for x in range(lx):
                a_sites.append(y * lx + x)
                b_sites.append(((y + 1) % ly) * lx + x)
    return np.array(a_sites, dtype=np.int64), np.array(b_sites, dtype=np.int64)


def sample_matching(n: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Uniform perfect matching: random permutation, consecutive pairing."""
    perm = rng.permutation(n).astype(np.int64)
    return np.ascontiguousarray(perm[0::2]), np.ascontiguousarray(perm[1::2])


def build_layout(spec: CircuitSpec, rng: np.random.Generator | None = None) -> LayerSchedule:
    """Materialize the gate layout for a circuit spec.

    0D draws an independent matching per step and therefore needs `rng`;
    prefer the evolution engine for large 0D systems, which generates
    matchings on the fly.
    """
    n = spec.n_sites
    periodic = spec.boundary == "periodic"
    if spec.dimension == 1:
        if periodic and n % 2 != 0:
            raise ValueError("periodic 1D layout requires even N")
        layers = [_pairs_1d(n, 0, periodic), _pairs_1d(n, 1, periodic)]
        return LayerSchedule(n, spec.depth, 2, layers, repeats=True)
    if spec.dimension == 2:
        lx, ly = spec.extent
        if periodic and (lx % 2 or ly % 2):
            raise ValueError("periodic 2D layout requires even Lx, Ly")
        layers = [
            _pairs_2d(lx, ly, 0, 0, periodic),
            _pairs_2d(lx, ly, 0, 1, periodic),
            _pairs_2d(lx, ly, 1, 0, periodic),
            _pairs_2d(lx, ly, 1, 1, periodic),
        ]
        return LayerSchedule(n, spec.depth, 4, layers, repeats=True)
    if rng is None:
        raise ValueError("materializing a 0D layout requires an rng")
    layers = [sample_matching(n, rng) for _ in range(spec.depth)]
    return LayerSchedule(n, spec.depth, 1, layers, repeats=False)


class BatchEngine:
    """Evolves a batch of Pauli strings through one circuit realization.

    All strings in the batch see the same gates, as required when they feed
    a common fidelity estimate. Gate and matching draws depend only on
    (spec.seed, realization), never on the batch contents' row order.
    """

    def __init__(self, spec: CircuitSpec, rows: Sequence[PauliString], realization: int = 0):
        self.spec = spec
        self.n = spec.n_sites
        self.n_rows = len(rows)
        self.rng = rng_for(spec.seed, realization, STREAM_CIRCUIT)
        self.table = gate_table()
        self.table_flat = np.ascontiguousarray(self.table.reshape(-1))
        self.t = 0
        for p in rows:
            if p.support and max(p.support) >= self.n:
                raise ValueError("seed string support outside the system")
        if spec.dimension == 0:
            self._init_sparse(rows)
        else:
            self._init_dense(rows)

    # -- dense (1D/2D) -------------------------------------------------
    def _init_dense(self, rows):
        self.state = np.zeros((self.n_rows, self.n), dtype=np.uint8)
        for r, p in enumerate(rows):
            for site, code in p.support.items():
                self.state[r, site] = code
        self.schedule = build_layout(self.spec)

    def _step_dense(self):
        for sub in range(self.schedule.sublayers_per_step):
            pa, pb = self.schedule.layer_at(self.t, sub)
            gates = self.rng.integers(0, n_gates(), size=len(pa), dtype=np.int64)
            backend.apply_pairs_dense(self.state, pa, pb, gates, self.table)

    # -- sparse CSR (0D) -----------------------------------------------
    def _init_sparse(self, rows):
        sites, letters, ptr = [], [], [0]
        for p in rows:
            ss = sorted(p.support)
            sites.extend(ss)
            letters.extend(p.support[s] for s in ss)
            ptr.append(len(sites))
        self.row_ptr = np.array(ptr, dtype=np.int64)
        self.sites = np.array(sites, dtype=np.int64)
        self.letters = np.array(letters, dtype=np.uint8)
        self.support = np.unique(self.sites)
        self.stamp = np.zeros(self.n, dtype=np.uint8)
        self.stamp_val = 0
        self._mask = None  # lazy O(N) scratch for the dense-support regime
        self._pos = None

    def _advance_stamp(self):
        self.stamp_val += 1
        if self.stamp_val == 256:
            self.stamp[:] = 0
            self.stamp_val = 1

    def _draw_pairs(self, support):
        n_support = len(support)
        if n_support * _DENSE_MATCH_FRACTION >= self.n:
            pa, pb = sample_matching(self.n, self.rng)
            if self._mask is None:
                self._mask = np.zeros(self.n, dtype=bool)
            self._mask[support] = True
            keep = self._mask[pa] | self._mask[pb]
            self._mask[support] = False
            return pa[keep], pb[keep]
        out = np.empty(2 * n_support, dtype=np.int64)
        budget = 2 * n_support + 64
        while True:
            self._advance_stamp()
            draws = self.rng.integers(0, self.n, size=budget, dtype=np.int64)
            n_pairs, _ = backend.match_sites(support, draws, self.stamp, self.stamp_val, out)
            if n_pairs >= 0:
                pairs = out[: 2 * n_pairs]
                return pairs[0::2].copy(), pairs[1::2].copy()
            budget *= 4

    def _step_sparse(self):
        support = self.support
        if len(support) == 0:
            return
        pa, pb = self._draw_pairs(support)
        n_pairs = len(pa)
        gates = self.rng.integers(0, n_gates(), size=n_pairs, dtype=np.int64)
        pair_sites = np.empty(2 * n_pairs, dtype=np.int64)
        pair_sites[0::2] = pa
        pair_sites[1::2] = pb
        if 32 * n_pairs >= self.n:
            # dense regime: O(1) slot lookup through a position array
            if self._pos is None:
                self._pos = np.empty(self.n, dtype=np.int64)
            self._pos[pair_sites] = np.arange(2 * n_pairs, dtype=np.int64)
            slots = self._pos[self.sites]
            self.row_ptr, self.sites, self.letters, active = backend.step_csr(
                self.row_ptr, self.letters, slots, pa, pb, gates, self.table_flat
            )
            self.support = np.sort(pair_sites[active.view(bool)])
        else:
            slot_of = np.argsort(pair_sites, kind="stable")
            sorted_ps = pair_sites[slot_of]
            slots = slot_of[np.searchsorted(sorted_ps, self.sites)]
            self.row_ptr, self.sites, self.letters, active = backend.step_csr(
                self.row_ptr, self.letters, slots, pa, pb, gates, self.table_flat
            )
            # next support read off the sorted pair sites; avoids a re-sort
            self.support = sorted_ps[active[slot_of].view(bool)]

    # -- public ----------------------------------------------------------
    def step(self):
        if self.spec.dimension == 0:
            self._step_sparse()
        else:
            self._step_dense()
        self.t += 1

    def run_to(self, t: int):
        if t < self.t:
            raise ValueError("engine cannot run backwards")
        while self.t < t:
            self.step()

    def sizes(self) -> np.ndarray:
        if self.spec.dimension == 0:
            return np.diff(self.row_ptr)
        return (self.state != 0).sum(axis=1, dtype=np.int64)

    def k_sizes(self, c_sorted: np.ndarray) -> np.ndarray:
        if self.spec.dimension != 0:
            return (self.state[:, c_sorted] != 0).sum(axis=1, dtype=np.int64)
        if len(self.sites) == 0:
            return np.zeros(self.n_rows, dtype=np.int64)
        member, _ = _membership(self.sites, c_sorted)
        row_ids = np.repeat(np.arange(self.n_rows), np.diff(self.row_ptr))
        return np.bincount(row_ids[member], minlength=self.n_rows).astype(np.int64)

    def planes(self, c_sorted: np.ndarray) -> np.ndarray:
        """Per-row (2, n_words) x/z bit planes of the restriction to C."""
        from .util import pack_planes

        k = len(c_sorted)
        n_words = (k + 63) // 64
        out = np.zeros((self.n_rows, 2, n_words), dtype=np.uint64)
        if self.spec.dimension != 0:
            sub = self.state[:, c_sorted]
            for r in range(self.n_rows):
                idx = np.flatnonzero(sub[r])
                out[r] = pack_planes(idx.astype(np.int64), sub[r, idx], k)
            return out
        member, pos = _membership(self.sites, c_sorted)
        for r in range(self.n_rows):
            lo, hi = self.row_ptr[r], self.row_ptr[r + 1]
            m = member[lo:hi]
            out[r] = pack_planes(pos[lo:hi][m], self.letters[lo:hi][m], k)
        return out

    def strings(self) -> list[PauliString]:
        if self.spec.dimension != 0:
            return [PauliString.from_dense(self.state[r]) for r in range(self.n_rows)]
        out = []
        for r in range(self.n_rows):
            lo, hi = self.row_ptr[r], self.row_ptr[r + 1]
            out.append(
                PauliString({int(s): int(l) for s, l in zip(self.sites[lo:hi], self.letters[lo:hi])})
            )
        return out


def _membership(sites: np.ndarray, c_sorted: np.ndarray):
    """For each site, whether it lies in c_sorted and at which position."""
    pos = np.searchsorted(c_sorted, sites)
    pos_c = np.minimum(pos, len(c_sorted) - 1)
    member = (pos < len(c_sorted)) & (c_sorted[pos_c] == sites)
    return member, pos_c


def evolve(
    p0: PauliString,
    schedule: LayerSchedule,
    rng: np.random.Generator,
    record_at: Iterable[int] = (),
) -> dict[int, PauliString]:
    """Reference single-string evolution through a materialized layout.

    Gates are drawn for every pair of every sub-layer in layout order, so a
    fixed rng reproduces one specific circuit. Snapshots are returned for
    the requested time steps (step 0 is the input).
    """
    record = set(record_at) or {schedule.steps}
    table = gate_table()
    state = np.zeros((1, schedule.n_sites), dtype=np.uint8)
    for site, code in p0.support.items():
        state[0, site] = code
    out: dict[int, PauliString] = {}
    if 0 in record:
        out[0] = p0
    for t in range(schedule.steps):
        for sub in range(schedule.sublayers_per_step):
            pa, pb = schedule.layer_at(t, sub)
            gates = rng.integers(0, n_gates(), size=len(pa), dtype=np.int64)
            backend.apply_pairs_dense(state, pa, pb, gates, table)
        if (t + 1) in record:
            out[t + 1] = PauliString.from_dense(state[0])
    return out


@dataclass(frozen=True)
class SubsystemSpec:
    """Recipe for the coupled subsystem C (resolved per realization)."""

    kind: str = "all"  # all | random | contiguous | explicit
    k: int | None = None
    sites: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.kind not in ("all", "random", "contiguous", "explicit"):
            raise ValueError(f"unknown subsystem kind {self.kind!r}")
        if self.kind in ("random", "contiguous") and self.k is None:
            raise ValueError(f"{self.kind} subsystem needs k")
        if self.kind == "explicit" and not self.sites:
            raise ValueError("explicit subsystem needs sites")

    def size_in(self, n: int) -> int:
        if self.kind == "all":
            return n
        if self.kind == "explicit":
            return len(self.sites)
        return self.k

    def resolve(self, n: int, rng: np.random.Generator | None = None) -> np.ndarray:
        from .util import subset_sites

        if self.kind == "all":
            return np.arange(n, dtype=np.int64)
        if self.kind == "contiguous":
            if self.k > n:
                raise ValueError("K exceeds system size")
            return np.arange(self.k, dtype=np.int64)
        if self.kind == "explicit":
            return np.array(sorted(self.sites), dtype=np.int64)
        if rng is None:
            raise ValueError("random subsystem needs an rng")
        return subset_sites(n, self.k, rng)

    def as_site_set(self, n: int, rng: np.random.Generator | None = None) -> SiteSet:
        kind = "random" if self.kind == "explicit" else self.kind
        return SiteSet(frozenset(int(s) for s in self.resolve(n, rng)), kind)


@dataclass(frozen=True)
class OperatorSeed:
    """Seed family: one logical qubit encoded on a block of sites.

    A single-site block seeds the bare X, Y, Z letters. A p-site block
    (p odd) seeds a fixed random weight-p anticommuting triple with
    Y = X * Z at the phase-free level.
    """

    sites: tuple[int, ...]

    def __post_init__(self):
        p = len(self.sites)
        if p < 1 or (p > 1 and p % 2 == 0):
            raise ValueError("encoding weight must be 1 or odd")
        if len(set(self.sites)) != p:
            raise ValueError("seed block sites must be distinct")

    def xz_pair(self, rng: np.random.Generator | None) -> tuple[PauliString, PauliString]:
        """Encoded images of logical X and Z (Y follows as their product)."""
        from .pauli import X, Z

        if len(self.sites) == 1:
            s = self.sites[0]
            return PauliString({s: X}), PauliString({s: Z})
        pairs = ((1, 2), (1, 3), (2, 1), (2, 3), (3, 1), (3, 2))
        xs, zs = {}, {}
        picks = rng.integers(0, 6, size=len(self.sites))
        for site, pick in zip(self.sites, picks):
            a, b = pairs[pick]
            xs[site] = a
            zs[site] = b
        return PauliString(xs), PauliString(zs)

    def triple(self, rng: np.random.Generator | None):
        from .pauli import multiply

        px, pz = self.xz_pair(rng)
        return px, multiply(px, pz), pz


@dataclass
class SizeTrace:
    """Per-step size statistics over realizations x seed letters."""

    ts: np.ndarray
    mean_size: np.ndarray
    size_width: np.ndarray
    mean_k_size: np.ndarray
    k_size_width: np.ndarray
    n_realizations: int

    CSV_HEADER = ("t", "mean_size", "size_width", "mean_k_size", "k_size_width", "n_realizations")

    def to_csv(self, path) -> None:
        rows = zip(self.ts, self.mean_size, self.size_width, self.mean_k_size, self.k_size_width)
        write_csv(path, self.CSV_HEADER, (tuple(r) + (self.n_realizations,) for r in rows))

    @classmethod
    def from_csv(cls, path) -> "SizeTrace":
        data = np.genfromtxt(path, delimiter=",", names=True)
        data = np.atleast_1d(data)
        return cls(
            ts=data["t"].astype(np.int64),
            mean_size=data["mean_size"],
            size_width=data["size_width"],
            mean_k_size=data["mean_k_size"],
            k_size_width=data["k_size_width"],
            n_realizations=int(data["n_realizations"][0]),
        )


def _trace_one_realization(spec, seed_blocks, subsystem, record, realization):
    rows = []
    for qi, block in enumerate(seed_blocks):
        enc_rng = rng_for(spec.seed, STREAM_ENCODING, qi)
        rows.extend(block.triple(enc_rng))
    c_sorted = subsystem.resolve(spec.n_sites, rng_for(spec.seed, realization, STREAM_COUPLING))
    engine = BatchEngine(spec, rows, realization)
    sizes = np.empty((len(record), len(rows)), dtype=np.int64)
    ksizes = np.empty_like(sizes)
    for i, t in enumerate(record):
        engine.run_to(t)
        sizes[i] = engine.sizes()
        ksizes[i] = engine.k_sizes(c_sorted)
    return sizes, ksizes


def size_trace(
    op_family: OperatorSeed | Sequence[OperatorSeed],
    spec: CircuitSpec,
    subsystem: SubsystemSpec = SubsystemSpec("all"),
    realizations: int = 10,
    record_at: Sequence[int] | None = None,
    workers: int = 1,
) -> SizeTrace:
    """Mean and width of size / K-size over realizations and seed letters."""
    if realizations < 1:
        raise ValueError("need at least one realization")
    blocks = [op_family] if isinstance(op_family, OperatorSeed) else list(op_family)
    record = sorted(set(record_at if record_at is not None else range(spec.depth + 1)))
    args = [(spec, blocks, subsystem, record, r) for r in range(realizations)]
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_trace_worker, args))
    else:
        results = [_trace_worker(a) for a in args]
    sizes = np.concatenate([s for s, _ in results], axis=1)
    ksizes = np.concatenate([k for _, k in results], axis=1)
    ddof = 1 if sizes.shape[1] > 1 else 0
    return SizeTrace(
        ts=np.array(record, dtype=np.int64),
        mean_size=sizes.mean(axis=1),
        size_width=sizes.std(axis=1, ddof=ddof),
        mean_k_size=ksizes.mean(axis=1),
        k_size_width=ksizes.std(axis=1, ddof=ddof),
        n_realizations=realizations,
    )


def _trace_worker(args):
    return _trace_one_realization(*args)


def scrambling_time_0d(n: int, p: int) -> float:
    """Steps for a weight-p seed to reach system scale in the 0D circuit."""
    return float(np.log(n / p) / np.log(GROWTH_RATE))
