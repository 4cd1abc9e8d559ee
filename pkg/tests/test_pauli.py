import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from paulitel import analytics
from paulitel.pauli import (
    PauliString,
    SiteSet,
    commutes,
    k_size,
    multiply,
    overlap,
    random_pauli,
    random_pauli_of_size,
    size,
)
from paulitel.util import rng_for


def pstr(text, sites=None):
    """Build a string from letters like "XZY" on given (or consecutive) sites."""
    sites = sites if sites is not None else range(len(text))
    return PauliString.from_letters(dict(zip(sites, text)))


strings = st.dictionaries(st.integers(0, 30), st.sampled_from([1, 2, 3]), max_size=12).map(
    PauliString
)


class TestSize:
    def test_identity(self):
        assert size(PauliString.identity()) == 0

    def test_three_letter_example(self):
        # 1 x X x 1 x 1 x Z x X x 1
        p = pstr("XZX", sites=[1, 4, 5])
        assert size(p) == 3

    def test_random_mean_size(self):
        # each site iid over {1,X,Y,Z}: mean size (1 - 1/d^2) N = 0.75 N
        rng = rng_for(7)
        n, m = 100, 20_000
        sizes = np.array([size(random_pauli(n, rng)) for _ in range(m)])
        se = np.sqrt(n * 0.75 * 0.25 / m)
        assert abs(sizes.mean() - 75.0) < 3 * se


class TestKSize:
    def test_full_subsystem_equals_size(self):
        p = pstr("XYZ")
        assert k_size(p, SiteSet.all_sites(10)) == size(p)

    def test_identity_any_subsystem(self):
        assert k_size(PauliString.identity(), SiteSet.contiguous(3, 10)) == 0

    def test_direct_count(self):
        p = pstr("XYZ")  # X0 Y1 Z2
        assert k_size(p, SiteSet(frozenset({1, 3}))) == 1

    def test_bounded(self):
        rng = rng_for(8)
        for _ in range(50):
            p = random_pauli_of_size(12, 40, rng)
            c = SiteSet.random(9, 40, rng)
            assert k_size(p, c) <= min(size(p), c.k)

    def test_matches_hypergeometric_moments(self):
        # K-size of a random size-S string vs the exact pmf from analytics
        n, s, k, m = 400, 60, 50, 4000
        rng = rng_for(9)
        vals = np.empty(m)
        for i in range(m):
            p = random_pauli_of_size(s, n, rng)
            c = SiteSet.random(k, n, rng)
            vals[i] = k_size(p, c)
        dist = analytics.ksize_pmf(n, s, k)
        mu, var = dist.mean(), dist.width() ** 2
        assert abs(vals.mean() - mu) < 3 * np.sqrt(var / m)
        # variance estimator SE ~ var * sqrt(2/m)
        assert abs(vals.var(ddof=1) - var) < 3 * var * np.sqrt(2.0 / m)


class TestMultiply:
    def test_identity_neutral(self):
        p = pstr("XZY")
        assert multiply(p, PauliString.identity()) == p

    def test_self_inverse(self):
        assert multiply(pstr("X"), pstr("X")) == PauliString.identity()

    def test_mean_product_size(self):
        # two independent random strings: E size = R1 + R2 - (4/3) R1 R2 / N
        n, r1, r2, m = 300, 60, 90, 4000
        rng = rng_for(10)
        vals = np.empty(m)
        for i in range(m):
            vals[i] = size(multiply(random_pauli_of_size(r1, n, rng), random_pauli_of_size(r2, n, rng)))
        expected = r1 + r2 - (4.0 / 3.0) * r1 * r2 / n
        assert abs(vals.mean() - expected) < 4 * vals.std(ddof=1) / np.sqrt(m)

    @given(strings)
    @settings(max_examples=60)
    def test_square_is_identity(self, p):
        assert size(multiply(p, p)) == 0

    @given(strings, strings)
    @settings(max_examples=60)
    def test_commutative(self, p, q):
        assert multiply(p, q) == multiply(q, p)

    @given(strings, strings, strings)
    @settings(max_examples=60)
    def test_associative(self, p, q, r):
        assert multiply(multiply(p, q), r) == multiply(p, multiply(q, r))


class TestOverlap:
    def test_disjoint(self):
        assert overlap(pstr("XY", sites=[0, 1]), pstr("XY", sites=[5, 6])) == 0

    def test_equal_supports(self):
        p = pstr("XYZZ")
        assert overlap(p, pstr("ZZXX")) == 4

    def test_mean_overlap(self):
        n, r1, r2, m = 250, 40, 70, 4000
        rng = rng_for(11)
        vals = np.array(
            [
                overlap(random_pauli_of_size(r1, n, rng), random_pauli_of_size(r2, n, rng))
                for _ in range(m)
            ]
        )
        expected = r1 * r2 / n
        assert abs(vals.mean() - expected) < 4 * vals.std(ddof=1) / np.sqrt(m)


class TestRandomSampling:
    def test_zero_sites(self):
        assert random_pauli(0, rng_for(1)) == PauliString.identity()

    def test_size_histogram_binomial(self):
        n, m = 200, 30_000
        rng = rng_for(12)
        sizes = np.array([size(random_pauli(n, rng)) for _ in range(m)])
        dist = analytics.binomial_size_pmf(n)
        counts = np.bincount(sizes, minlength=n + 1)
        tv = 0.5 * np.abs(counts / m - dist.pmf).sum()
        assert tv < 0.05

    def test_fixed_size_exact(self):
        rng = rng_for(13)
        for _ in range(20):
            assert size(random_pauli_of_size(10, 50, rng)) == 10

    def test_oversized_request_rejected(self):
        with pytest.raises(ValueError):
            random_pauli_of_size(51, 50, rng_for(1))

    def test_commutes_is_symmetric(self):
        rng = rng_for(14)
        for _ in range(50):
            p, q = random_pauli(12, rng), random_pauli(12, rng)
            assert commutes(p, q) == commutes(q, p)
