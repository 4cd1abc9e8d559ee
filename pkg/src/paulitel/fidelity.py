"""Teleportation-fidelity engine.

The EPR fidelity of the coupled two-sided circuit at infinite temperature
reduces, for Clifford scramblers, to a pure phase sum over the inserted
operator basis:

    F = | (1/d_A^2) sum_Q exp(i theta_Q) |^2,
    theta_Q = g * S_K[U Q U~] / K + pi * S[Q(0)]        (size coupling)
    theta_Q = pi * [S_K[U Q U~] == 0] + pi * S[Q(0)]    (projector coupling)

The pi * S[Q(0)] term folds the fixed Y-type decoding and operator
transposition into a sign per non-identity letter of the inserted operator.
The identity operator always participates with theta = 0; it carries the
reference phase of the unperturbed entangled state.

Per circuit realization only the evolved images of logical X and Z per
qubit are propagated; every sampled operator is a phase-free product of
those images, so its K-size comes from XOR-ing restriction bit planes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .circuits import BatchEngine, CircuitSpec, OperatorSeed, SubsystemSpec
from .pauli import PauliString, SiteSet, k_size, size
from .util import (
    STREAM_COUPLING,
    STREAM_ENCODING,
    STREAM_SAMPLING,
    rng_for,
    write_csv,
)

COUPLING_KINDS = ("size", "hpr_projector")


@dataclass(frozen=True)
class CouplingSpec:
    """Two-sided coupling: graded size phase or binary EPR-projector phase."""

    kind: str
    g: float
    subsystem: SubsystemSpec

    def __post_init__(self):
        if self.kind not in COUPLING_KINDS:
            raise ValueError(f"coupling kind must be one of {COUPLING_KINDS}")


@dataclass(frozen=True)
class FidelityResult:
    value: float  # clamped to [0, 1] for reporting
    std_error: float
    n_qubits: int
    g: float
    t: int
    k: int
    kind: str
    samples: int
    seed: int
    raw_value: float  # unclamped estimator

    CSV_HEADER = ("n", "K", "g", "t", "kind", "value", "std_error", "samples", "seed")

    def csv_row(self) -> tuple:
        return (
            self.n_qubits,
            self.k,
            self.g,
            self.t,
            self.kind,
            self.value,
            self.std_error,
            self.samples,
            self.seed,
        )


def results_to_csv(path, results: Sequence[FidelityResult]) -> None:
    write_csv(path, FidelityResult.CSV_HEADER, (r.csv_row() for r in results))


def phase(q0: PauliString, qt: PauliString, coupling: CouplingSpec, c: SiteSet) -> float:
    """Correlator phase of one evolved basis operator."""
    sk = k_size(qt, c)
    decode = math.pi * size(q0)
    if coupling.kind == "size":
        return coupling.g * sk / c.k + decode
    return math.pi * (1.0 if sk == 0 else 0.0) + decode


def epr_to_state_fidelity(f_epr: float, d_a: int) -> float:
    """Average state-teleportation fidelity from the EPR fidelity."""
    if d_a < 2:
        raise ValueError("subsystem dimension must be at least 2")
    return (d_a * f_epr + 1.0) / (d_a + 1.0)


def state_to_epr_fidelity(f_state: float, d_a: int) -> float:
    if d_a < 2:
        raise ValueError("subsystem dimension must be at least 2")
    return ((d_a + 1.0) * f_state - 1.0) / d_a


# ---------------------------------------------------------------------------
# plane-based phase data, shared by the EPR and marginal estimators


def _encoded_xz_rows(blocks: Sequence[OperatorSeed], seed: int):
    rows = []
    for qi, block in enumerate(blocks):
        px, pz = block.xz_pair(rng_for(seed, STREAM_ENCODING, qi))
        rows.append(px)
        rows.append(pz)
    return rows


class PhaseData:
    """Evolved C-restrictions of the logical X/Z images for one realization.

    variant_planes[q, l] is the packed (x, z) bit-plane pair of logical
    letter l (0=I, 1=X, 2=Z, 3=Y) of qubit q restricted to C.
    """

    def __init__(self, planes_xz: np.ndarray, n_qubits: int, k: int):
        n_words = planes_xz.shape[-1]
        v = np.zeros((n_qubits, 4, 2, n_words), dtype=np.uint64)
        v[:, 1] = planes_xz[0::2]
        v[:, 2] = planes_xz[1::2]
        v[:, 3] = v[:, 1] ^ v[:, 2]
        self.variant_planes = v
        self.n_qubits = n_qubits
        self.k = k

    def k_sizes(self, letter_vectors: np.ndarray) -> np.ndarray:
        """K-size of each product operator; letter_vectors is (M, n) in 0..3."""
        m = letter_vectors.shape[0]
        acc = np.zeros((m, 2, self.variant_planes.shape[-1]), dtype=np.uint64)
        for q in range(self.n_qubits):
            acc ^= self.variant_planes[q, letter_vectors[:, q]]
        return np.bitwise_count(acc[:, 0] | acc[:, 1]).sum(axis=(1,), dtype=np.int64)

    def single_letter_k_sizes(self) -> np.ndarray:
        """(n, 3) K-sizes of the evolved X, Z, Y images per qubit."""
        planes = self.variant_planes
        out = np.empty((self.n_qubits, 3), dtype=np.int64)
        for q in range(self.n_qubits):
            for i, l in enumerate((1, 2, 3)):
                out[q, i] = int(np.bitwise_count(planes[q, l, 0] | planes[q, l, 1]).sum())
        return out


def _collect_one(args):
    blocks, circuit, subsystem, ts, r = args
    rows = _encoded_xz_rows(blocks, circuit.seed)
    c_sorted = subsystem.resolve(circuit.n_sites, rng_for(circuit.seed, r, STREAM_COUPLING))
    engine = BatchEngine(circuit, rows, r)
    per_t = {}
    for t in ts:
        engine.run_to(t)
        per_t[t] = PhaseData(engine.planes(c_sorted), len(blocks), len(c_sorted))
    return per_t


def collect_phase_data(
    blocks: Sequence[OperatorSeed],
    circuit: CircuitSpec,
    subsystem: SubsystemSpec,
    ts: Sequence[int],
    realizations: int,
    workers: int = 1,
) -> list[dict[int, PhaseData]]:
    """Evolve the 2n logical rows once per realization, snapshot at each t."""
    from .util import parallel_map

    _validate_blocks(blocks, circuit.n_sites)
    ts = sorted(set(int(t) for t in ts))
    args = [(blocks, circuit, subsystem, ts, r) for r in range(realizations)]
    return parallel_map(_collect_one, args, workers)


def _validate_blocks(blocks: Sequence[OperatorSeed], n_sites: int):
    seen: set[int] = set()
    for b in blocks:
        for s in b.sites:
            if s in seen:
                raise ValueError("seed blocks overlap")
            if s >= n_sites:
                raise ValueError("seed block outside the system")
            seen.add(s)


def _phases(sk: np.ndarray, s0: np.ndarray, kind: str, g: float, k: int) -> np.ndarray:
    if kind == "size":
        return g * sk / k + np.pi * s0
    return np.pi * (sk == 0) + np.pi * s0


def _epr_f_one(data: PhaseData, letter_vectors: np.ndarray, kind, g, exhaustive: bool) -> float:
    sk = data.k_sizes(letter_vectors)
    s0 = (letter_vectors != 0).sum(axis=1)
    theta = _phases(sk, s0, kind, g, data.k)
    terms = np.exp(1j * theta)
    if exhaustive:
        est = terms.mean()
    else:
        d2 = 4.0 ** letter_vectors.shape[1]
        est = 1.0 / d2 + (1.0 - 1.0 / d2) * terms.mean()
    return float(abs(est) ** 2)


def _all_letter_vectors(n: int) -> np.ndarray:
    grid = np.indices((4,) * n).reshape(n, -1).T
    return grid.astype(np.int64)


def _random_nonidentity_vectors(n: int, count: int, rng) -> np.ndarray:
    out = rng.integers(0, 4, size=(count, n), dtype=np.int64)
    while True:
        bad = np.flatnonzero((out == 0).all(axis=1))
        if len(bad) == 0:
            return out
        out[bad] = rng.integers(0, 4, size=(len(bad), n), dtype=np.int64)


def epr_fidelity_encoded(
    blocks: Sequence[OperatorSeed],
    circuit: CircuitSpec,
    coupling: CouplingSpec,
    t: int,
    realizations: int = 20,
    sampling: str | int = "exhaustive",
    workers: int = 1,
) -> FidelityResult:
    """EPR fidelity for logical qubits encoded on disjoint site blocks."""
    n = len(blocks)
    if realizations < 1:
        raise ValueError("need at least one realization")
    exhaustive = sampling == "exhaustive"
    if exhaustive and 4**n > 4096:
        raise ValueError("exhaustive sampling limited to 4^n <= 4096")
    data = collect_phase_data(blocks, circuit, coupling.subsystem, [t], realizations, workers)
    per_real = []
    for r, d in enumerate(data):
        if exhaustive:
            vec = _all_letter_vectors(n)
        else:
            rng = rng_for(circuit.seed, r, STREAM_SAMPLING)
            vec = _random_nonidentity_vectors(n, int(sampling), rng)
        per_real.append(_epr_f_one(d[t], vec, coupling.kind, coupling.g, exhaustive))
    return _result_from(per_real, blocks, circuit, coupling, t, len(vec))


def epr_fidelity(
    sites: Sequence[int],
    circuit: CircuitSpec,
    coupling: CouplingSpec,
    t: int,
    realizations: int = 20,
    sampling: str | int = "exhaustive",
    workers: int = 1,
) -> FidelityResult:
    """EPR fidelity for bare single-site qubits."""
    blocks = [OperatorSeed((int(s),)) for s in sites]
    return epr_fidelity_encoded(blocks, circuit, coupling, t, realizations, sampling, workers)


def _result_from(per_real, blocks, circuit, coupling, t, samples) -> FidelityResult:
    vals = np.asarray(per_real, dtype=float)
    raw = float(vals.mean())
    err = float(vals.std(ddof=1) / math.sqrt(len(vals))) if len(vals) > 1 else 0.0
    return FidelityResult(
        value=min(max(raw, 0.0), 1.0),
        std_error=err,
        n_qubits=len(blocks),
        g=coupling.g,
        t=int(t),
        k=coupling.subsystem.size_in(circuit.n_sites),
        kind=coupling.kind,
        samples=int(samples),
        seed=circuit.seed,
        raw_value=raw,
    )


# ---------------------------------------------------------------------------
# marginal (single measured qubit out of n) fidelity


def marginal_f_from_data(
    data: PhaseData,
    qu_vectors: np.ndarray,
    measured: int,
    kind: str,
    g: float,
) -> float:
    """F^m for one realization given sampled unmeasured letter vectors.

    qu_vectors is (M, n) with column `measured` ignored; the measured qubit
    is summed exhaustively over its 4 letters for each sample.
    """
    m, n = qu_vectors.shape
    base = np.zeros((m, 2, data.variant_planes.shape[-1]), dtype=np.uint64)
    for q in range(n):
        if q == measured:
            continue
        base ^= data.variant_planes[q, qu_vectors[:, q]]
    s0_u = (np.delete(qu_vectors, measured, axis=1) != 0).sum(axis=1)
    amp = np.zeros(m, dtype=complex)
    for letter in range(4):
        acc = base ^ data.variant_planes[measured, letter][None]
        sk = np.bitwise_count(acc[:, 0] | acc[:, 1]).sum(axis=1, dtype=np.int64)
        s0 = s0_u + (1 if letter else 0)
        amp += np.exp(1j * _phases(sk, s0, kind, g, data.k))
    return float(np.mean(np.abs(amp / 4.0) ** 2))


def marginal_fidelity(
    blocks: Sequence[OperatorSeed],
    circuit: CircuitSpec,
    coupling: CouplingSpec,
    t: int,
    measured_qubit: int = 0,
    realizations: int = 20,
    qu_draws: int = 100,
    workers: int = 1,
) -> FidelityResult:
    """Fidelity of one teleported qubit while n are sent.

    Equivalent to the full EPR fidelity restricted to operator pairs that
    agree on all unmeasured qubits; for n = 1 it reduces to epr_fidelity
    with exhaustive sampling.
    """
    n = len(blocks)
    if not 0 <= measured_qubit < n:
        raise ValueError("measured qubit index out of range")
    data = collect_phase_data(blocks, circuit, coupling.subsystem, [t], realizations, workers)
    per_real = []
    for r, d in enumerate(data):
        if n == 1:
            qu = np.zeros((1, 1), dtype=np.int64)
        else:
            rng = rng_for(circuit.seed, r, STREAM_SAMPLING)
            qu = rng.integers(0, 4, size=(qu_draws, n), dtype=np.int64)
        per_real.append(marginal_f_from_data(d[t], qu, measured_qubit, coupling.kind, coupling.g))
    return _result_from(per_real, blocks, circuit, coupling, t, len(qu) * 4)


def default_blocks(n: int, p: int, start: int = 0) -> list[OperatorSeed]:
    """n disjoint weight-p blocks on consecutive sites."""
    return [OperatorSeed(tuple(range(start + i * p, start + (i + 1) * p))) for i in range(n)]
