"""Shared plumbing: deterministic RNG streams, CSV emission, bit tricks."""

from __future__ import annotations

import numpy as np

# Sub-stream labels so that independent random choices made for the same
# (seed, realization) never share a generator.
STREAM_CIRCUIT = 1
STREAM_COUPLING = 2
STREAM_SAMPLING = 3
STREAM_ENCODING = 4

_MASK63 = (1 << 63) - 1


def rng_for(seed: int, *key: int) -> np.random.Generator:
    """Generator keyed by (seed, *key); same key gives the same stream."""
    entropy = [int(seed) & _MASK63] + [int(k) & _MASK63 for k in key]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))


def fmt(x) -> str:
    """Render a value for CSV output; floats use 17 significant digits."""
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.17g}"
    return str(x)


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(x) for x in row) + "\n")


def parallel_map(fn, items, workers: int = 1) -> list:
    """Ordered map, optionally over a process pool.

    Results are reduced in task order, so worker count never changes the
    output, only the wall time.
    """
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    from concurrent.futures import ProcessPoolExecutor

    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def popcount64(a: np.ndarray) -> int:
    """Total number of set bits in a uint64 array."""
    return int(np.bitwise_count(a).sum(dtype=np.int64))


def pack_planes(idx: np.ndarray, letters: np.ndarray, n_bits: int) -> np.ndarray:
    """Pack per-site letters into (2, n_words) x/z bit planes.

    `idx` are bit positions < n_bits, `letters` the 2-bit codes at those
    positions. XOR of packed planes realizes the phase-free Pauli product.
    """
    n_words = (n_bits + 63) // 64
    planes = np.zeros((2, n_words), dtype=np.uint64)
    if len(idx) == 0:
        return planes
    word = (idx >> 6).astype(np.int64)
    bit = np.left_shift(np.uint64(1), (idx & 63).astype(np.uint64))
    x_sel = (letters & 1).astype(bool)
    z_sel = (letters & 2).astype(bool)
    np.bitwise_xor.at(planes[0], word[x_sel], bit[x_sel])
    np.bitwise_xor.at(planes[1], word[z_sel], bit[z_sel])
    return planes


def planes_weight(planes: np.ndarray) -> int:
    """Number of non-identity sites encoded in a pair of bit planes."""
    return popcount64(planes[0] | planes[1])


def subset_sites(n_sites: int, k: int, rng: np.random.Generator) -> np.ndarray:
    """Sorted random k-subset of range(n_sites) without materializing it.

    Rejection sampling keeps memory O(k) so coupling sets remain cheap even
    for very large systems; falls back to a partial shuffle when k is a
    sizeable fraction of n_sites.
    """
    if k > n_sites:
        raise ValueError(f"subset size {k} exceeds {n_sites}")
    if k == n_sites:
        return np.arange(n_sites, dtype=np.int64)
    if k * 16 >= n_sites:
        return np.sort(rng.choice(n_sites, size=k, replace=False)).astype(np.int64)
    chosen: set[int] = set()
    while len(chosen) < k:
        draw = rng.integers(0, n_sites, size=2 * (k - len(chosen)), dtype=np.int64)
        for j in draw:
            if len(chosen) >= k:
                break
            chosen.add(int(j))
    return np.array(sorted(chosen), dtype=np.int64)
