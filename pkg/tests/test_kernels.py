"""Backend dispatch and the exhaustive cell-scan kernel.

The cell scan is checked against an independent oracle that works from the
definitions: Rademacher products for membership, digit descents for the
selector, and exact Riemann sums for the kernel integral.
"""

import random
from fractions import Fraction

import numpy as np
import pytest

from walshdiv._kernels import (
    backend,
    bit_reversal_table,
    cell_scan,
    hadamard_inplace,
    use_backend,
    walsh_sign_row,
)
from walshdiv.dyadic import DyadicPoint, xor_add
from walshdiv.walsh import dirichlet_star, rademacher, walsh

BACKENDS = ("numpy", "numba")


class TestBackendSelection:
    def test_active_backend_is_known(self):
        assert backend() in BACKENDS

    def test_use_backend_switches_and_restores(self):
        before = backend()
        with use_backend("numpy"):
            assert backend() == "numpy"
        assert backend() == before

    def test_use_backend_rejects_unknown(self):
        with pytest.raises(ValueError):
            with use_backend("cuda"):
                pass

    def test_use_backend_restores_on_exception(self):
        before = backend()
        with pytest.raises(KeyError):
            with use_backend("numpy"):
                raise KeyError("boom")
        assert backend() == before


class TestHadamard:
    @pytest.mark.parametrize("name", BACKENDS)
    def test_involution_up_to_scale(self, name):
        rng = np.random.default_rng(0)
        v = rng.integers(-50, 50, size=256).astype(np.int64)
        a = v.copy()
        with use_backend(name):
            hadamard_inplace(a)
            hadamard_inplace(a)
        assert np.array_equal(a, 256 * v)

    def test_object_dtype_big_integers(self):
        v = np.array([10**25, -(10**24), 3, 0], dtype=object)
        a = v.copy()
        hadamard_inplace(a)
        hadamard_inplace(a)
        assert list(a) == [4 * x for x in v]

    def test_rejects_non_power_of_two(self):
        with pytest.raises(ValueError):
            hadamard_inplace(np.zeros(6, dtype=np.int64))

    def test_single_butterfly(self):
        a = np.array([3, 5], dtype=np.int64)
        hadamard_inplace(a)
        assert list(a) == [8, -2]


class TestBitReversal:
    def test_against_string_reversal(self):
        for k in range(7):
            rev = bit_reversal_table(k)
            want = [int(format(i, f"0{k}b")[::-1], 2) if k else 0 for i in range(1 << k)]
            assert list(rev) == want

    def test_is_an_involution_as_permutation(self):
        rev = bit_reversal_table(9)
        assert np.array_equal(rev[rev], np.arange(1 << 9))


class TestWalshSignRow:
    @pytest.mark.parametrize("name", BACKENDS)
    def test_matches_pointwise_walsh(self, name):
        k = 6
        rev = bit_reversal_table(k)
        with use_backend(name):
            for i in range(1 << k):
                row = walsh_sign_row(int(rev[i]), 1 << k)
                x = DyadicPoint(i, k)
                assert all(row[m] == walsh(m, x) for m in range(1 << k))

    def test_backend_parity_large(self):
        rng = random.Random(1)
        for _ in range(5):
            rx = rng.randrange(0, 1 << 12)
            with use_backend("numpy"):
                a = walsh_sign_row(rx, 1 << 12)
            with use_backend("numba"):
                b = walsh_sign_row(rx, 1 << 12)
            assert np.array_equal(a, b)


def cell_scan_oracle(n: int):
    """Definition-chasing scan over all level-(n+2) cells, exact arithmetic."""
    members, m_vals, nus, integrals = [], [], [], []
    res = n + 8
    for j in range(1 << (n + 2)):
        x = DyadicPoint(j, n + 2) if j else DyadicPoint.zero()
        total = sum(rademacher(k, x) * rademacher(k + 1, x) for k in range(1, n + 1))
        members.append(3 * abs(total) < n)
        m = 0
        for k in range(1, n):
            if rademacher(k, x) == 1 and rademacher(k + 1, x) == -1:
                m += 1 << k
        m_vals.append(m)
        nus.append(m.bit_count())
        integral = Fraction(0)
        if m:  # no descents means no kernel, and a zero integral
            for i in range(j << (res - n - 2)):
                t = DyadicPoint(i, res) if i else DyadicPoint.zero()
                integral += Fraction(dirichlet_star(m, xor_add(x, t)), 1 << res)
        integrals.append(integral * (1 << (n + 2)))
    return members, m_vals, nus, integrals


class TestCellScan:
    @pytest.mark.parametrize("name", BACKENDS)
    def test_matches_definition_oracle(self, name):
        n = 4
        want_member, want_m, want_nu, want_int = cell_scan_oracle(n)
        with use_backend(name):
            member, m_vals, nu, integral_num = cell_scan(n)
        assert list(member) == want_member
        assert list(m_vals) == want_m
        assert list(nu) == want_nu
        assert [Fraction(int(v)) for v in integral_num] == want_int

    def test_backend_parity(self):
        with use_backend("numpy"):
            a = cell_scan(6)
        with use_backend("numba"):
            b = cell_scan(6)
        for x, y in zip(a, b):
            assert np.array_equal(x, y)

    def test_range_validation(self):
        with pytest.raises(ValueError):
            cell_scan(0)
        with pytest.raises(ValueError):
            cell_scan(41)

    def test_selector_bits_live_in_window(self):
        n = 7
        member, m_vals, nu, _ = cell_scan(n)
        m_vals = [int(m) for m in m_vals]
        assert all(m % 2 == 0 for m in m_vals)
        assert all(m < (1 << n) for m in m_vals)
        assert all(int(c) == m.bit_count() for c, m in zip(nu, m_vals))
