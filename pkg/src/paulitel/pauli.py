"""Sparse phase-free Pauli strings.

A Pauli string is stored as a map from site index to a 2-bit letter code
(x bit | z bit << 1):

    I = 0  (never stored; identity is absence from the map)
    X = 1
    Z = 2
    Y = 3

With this encoding the phase-free group product is site-wise XOR, which is
what every hot path in the package relies on. Overall phases are discarded
throughout: all derived quantities (sizes, coupling phases, fidelities) are
phase-free by construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

I, X, Z, Y = 0, 1, 2, 3

_CODE_FROM_LETTER = {"I": I, "X": X, "Y": Y, "Z": Z}
_LETTER_FROM_CODE = {I: "I", X: "X", Y: "Y", Z: "Z"}


class PauliString:
    """Phase-free Pauli operator with sparse support.

    Immutable by convention: operations return new strings. The support map
    never contains identity letters, so ``size`` is exactly ``len(support)``.
    """

    __slots__ = ("support",)

    def __init__(self, support: Mapping[int, int] | None = None):
        s = {}
        if support:
            for site, code in support.items():
                code = int(code)
                if code == I:
                    continue
                if code not in (X, Y, Z):
                    raise ValueError(f"invalid letter code {code} at site {site}")
                if site < 0:
                    raise ValueError(f"negative site index {site}")
                s[int(site)] = code
        self.support = s

    @classmethod
    def from_letters(cls, letters: Mapping[int, str]) -> "PauliString":
        return cls({site: _CODE_FROM_LETTER[ch.upper()] for site, ch in letters.items()})

    @classmethod
    def from_dense(cls, codes: Iterable[int]) -> "PauliString":
        return cls({i: c for i, c in enumerate(codes) if c})

    @classmethod
    def identity(cls) -> "PauliString":
        return cls()

    def letters(self) -> dict[int, str]:
        return {site: _LETTER_FROM_CODE[c] for site, c in sorted(self.support.items())}

    def sites(self) -> np.ndarray:
        return np.array(sorted(self.support), dtype=np.int64)

    def __eq__(self, other) -> bool:
        return isinstance(other, PauliString) and self.support == other.support

    def __hash__(self):
        return hash(frozenset(self.support.items()))

    def __repr__(self) -> str:
        if not self.support:
            return "PauliString(I)"
        body = " ".join(f"{_LETTER_FROM_CODE[c]}{s}" for s, c in sorted(self.support.items()))
        return f"PauliString({body})"


@dataclass(frozen=True)
class SiteSet:
    """A concrete coupled subsystem: which sites, and how they were chosen."""

    sites: frozenset[int]
    selection_kind: str = "random"  # random | contiguous | all

    def __post_init__(self):
        if self.selection_kind not in ("random", "contiguous", "all"):
            raise ValueError(f"unknown selection kind {self.selection_kind!r}")

    @property
    def k(self) -> int:
        return len(self.sites)

    def as_array(self) -> np.ndarray:
        return np.array(sorted(self.sites), dtype=np.int64)

    @classmethod
    def all_sites(cls, n: int) -> "SiteSet":
        return cls(frozenset(range(n)), "all")

    @classmethod
    def contiguous(cls, k: int, n: int) -> "SiteSet":
        if k > n:
            raise ValueError(f"K={k} exceeds system size {n}")
        return cls(frozenset(range(k)), "contiguous")

    @classmethod
    def random(cls, k: int, n: int, rng: np.random.Generator) -> "SiteSet":
        from .util import subset_sites

        return cls(frozenset(int(s) for s in subset_sites(n, k, rng)), "random")


def size(p: PauliString) -> int:
    """Number of non-identity letters."""
    return len(p.support)


def k_size(p: PauliString, c: SiteSet) -> int:
    """Number of non-identity letters inside the coupled subsystem."""
    if len(p.support) < len(c.sites):
        return sum(1 for s in p.support if s in c.sites)
    return sum(1 for s in c.sites if s in p.support)


def multiply(p1: PauliString, p2: PauliString) -> PauliString:
    """Site-wise phase-free product; coinciding letters cancel."""
    if len(p1.support) < len(p2.support):
        p1, p2 = p2, p1
    out = dict(p1.support)
    for site, code in p2.support.items():
        merged = out.get(site, I) ^ code
        if merged:
            out[site] = merged
        else:
            out.pop(site, None)
    return PauliString(out)


def overlap(p1: PauliString, p2: PauliString) -> int:
    """Number of sites where both strings are non-identity."""
    if len(p1.support) > len(p2.support):
        p1, p2 = p2, p1
    return sum(1 for s in p1.support if s in p2.support)


def commutes(p1: PauliString, p2: PauliString) -> bool:
    """Phase-free commutation: parity of site-wise symplectic products."""
    if len(p1.support) > len(p2.support):
        p1, p2 = p2, p1
    acc = 0
    for site, a in p1.support.items():
        b = p2.support.get(site, I)
        acc ^= ((a & 1) & (b >> 1)) ^ ((a >> 1) & (b & 1))
    return acc == 0


def random_pauli(n_sites: int, rng: np.random.Generator) -> PauliString:
    """Uniform string: every site i.i.d. over {I, X, Y, Z}."""
    codes = rng.integers(0, 4, size=n_sites, dtype=np.uint8)
    return PauliString.from_dense(codes)


def random_pauli_of_size(s: int, n_sites: int, rng: np.random.Generator) -> PauliString:
    """Uniform string with exactly s non-identity sites, letters i.i.d."""
    if s > n_sites:
        raise ValueError(f"requested size {s} exceeds system size {n_sites}")
    from .util import subset_sites

    sites = subset_sites(n_sites, s, rng)
    letters = rng.integers(1, 4, size=s, dtype=np.uint8)
    return PauliString({int(site): int(c) for site, c in zip(sites, letters)})
