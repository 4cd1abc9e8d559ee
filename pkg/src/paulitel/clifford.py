"""The 2-qubit Clifford group modulo Pauli phases.

Elements are symplectic maps over GF(2): each gate is stored as the images
of the four generators X1, Z1, X2, Z2, where a 2-qubit phase-free Pauli is a
4-bit vector (x1, z1, x2, z2). There are exactly 720 such maps; together
with the 16 Pauli phase assignments they recover the familiar 11520 2-qubit
Cliffords. All simulated quantities here are phase-free, so sampling the
720-element quotient uniformly is statistically identical to sampling the
full group.

The action on a Pauli pair is precomputed as a (720, 16) lookup table over
pair codes ``v = a | (b << 2)`` with a, b the 2-bit letters on the two
sites. Applying a gate is then a single table read.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .pauli import PauliString


def symplectic_product(u: int, v: int) -> int:
    """1 if the 4-bit Pauli vectors anticommute, else 0."""
    return (
        ((u & 1) & ((v >> 1) & 1))
        ^ (((u >> 1) & 1) & (v & 1))
        ^ (((u >> 2) & 1) & ((v >> 3) & 1))
        ^ (((u >> 3) & 1) & ((v >> 2) & 1))
    )


@dataclass(frozen=True)
class SymplecticGate2:
    """Images of (X1, Z1, X2, Z2), each a non-identity 4-bit Pauli vector."""

    images: tuple[int, int, int, int]

    def encoding(self) -> int:
        ix1, iz1, ix2, iz2 = self.images
        return ix1 | (iz1 << 4) | (ix2 << 8) | (iz2 << 12)

    def is_symplectic(self) -> bool:
        ix1, iz1, ix2, iz2 = self.images
        if 0 in self.images:
            return False
        return (
            symplectic_product(ix1, iz1) == 1
            and symplectic_product(ix2, iz2) == 1
            and symplectic_product(ix1, ix2) == 0
            and symplectic_product(ix1, iz2) == 0
            and symplectic_product(iz1, ix2) == 0
            and symplectic_product(iz1, iz2) == 0
        )

    def apply_pair(self, v: int) -> int:
        """Map a pair code v = a | (b << 2) through the gate."""
        out = 0
        for bit, img in zip((1, 2, 4, 8), self.images):
            if v & bit:
                out ^= img
        return out


@lru_cache(maxsize=1)
def enumerate_symplectic2() -> tuple[SymplecticGate2, ...]:
    """All 720 phase-free 2-qubit Cliffords, ordered by their encoding."""
    gates = []
    vs = range(1, 16)
    for ix1 in vs:
        for iz1 in vs:
            if symplectic_product(ix1, iz1) != 1:
                continue
            for ix2 in vs:
                if symplectic_product(ix1, ix2) or symplectic_product(iz1, ix2):
                    continue
                for iz2 in vs:
                    if (
                        symplectic_product(ix2, iz2) == 1
                        and not symplectic_product(ix1, iz2)
                        and not symplectic_product(iz1, iz2)
                    ):
                        gates.append(SymplecticGate2((ix1, iz1, ix2, iz2)))
    gates.sort(key=SymplecticGate2.encoding)
    return tuple(gates)


@lru_cache(maxsize=1)
def gate_table() -> np.ndarray:
    """(720, 16) uint8 lookup: table[g, v] = image pair code of v under gate g."""
    gates = enumerate_symplectic2()
    table = np.zeros((len(gates), 16), dtype=np.uint8)
    for gi, gate in enumerate(gates):
        for v in range(16):
            table[gi, v] = gate.apply_pair(v)
    return table


def n_gates() -> int:
    return len(enumerate_symplectic2())


def sample_gate(rng: np.random.Generator) -> SymplecticGate2:
    """Uniform draw from the 720-element table."""
    gates = enumerate_symplectic2()
    return gates[int(rng.integers(0, len(gates)))]


def apply_gate(gate: SymplecticGate2, p: PauliString, i: int, j: int) -> PauliString:
    """Conjugate the restriction of p to sites (i, j) through the gate."""
    if i == j:
        raise ValueError("gate sites must be distinct")
    a = p.support.get(i, 0)
    b = p.support.get(j, 0)
    if a == 0 and b == 0:
        return p
    out = gate.apply_pair(a | (b << 2))
    support = dict(p.support)
    for site, letter in ((i, out & 3), (j, out >> 2)):
        if letter:
            support[site] = letter
        else:
            support.pop(site, None)
    return PauliString(support)
