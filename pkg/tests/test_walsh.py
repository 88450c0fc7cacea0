"""Walsh system, Dirichlet kernels, grid vectors, and the exact transform.

Oracles are deliberately independent of the implementation:

- Walsh signs come from literal products of Rademacher digits obtained by
  repeated doubling, and from a Sylvester-Hadamard matrix built by Kronecker
  squaring with string-reversed column indices;
- the naive transform is a full matrix application;
- kernels are checked against term-by-term character sums.
"""

import random
from fractions import Fraction

import numpy as np
import pytest

from walshdiv.dyadic import DyadicPoint, xor_add
from walshdiv.walsh import (
    DyadicExpansion,
    GridVector,
    bit_reverse,
    dirichlet,
    dirichlet_pow2,
    dirichlet_star,
    fwht,
    fwht_float,
    fwht_inverse,
    rademacher,
    walsh,
)


def digits_by_doubling(x: Fraction, count: int) -> list[int]:
    out = []
    for _ in range(count):
        x *= 2
        d = int(x >= 1)
        out.append(d)
        x -= d
    return out


def walsh_by_digit_products(n: int, x: DyadicPoint) -> int:
    """w_n as the literal product Π (1 - 2·x_{j+1}) over set bits j of n."""
    digits = digits_by_doubling(x.value, max(n.bit_length() + 1, x.exponent) + 1)
    sign = 1
    j = 0
    while n >> j:
        if (n >> j) & 1:
            sign *= 1 - 2 * digits[j]
        j += 1
    return sign


def paley_sign_matrix(k: int) -> np.ndarray:
    """P[m, i] = w_m(i/2^k) via Kronecker squaring + string bit reversal."""
    h = np.array([[1]], dtype=np.int64)
    for _ in range(k):
        h = np.kron(np.array([[1, 1], [1, -1]], dtype=np.int64), h)
    rev = [int(format(i, f"0{k}b")[::-1], 2) if k else 0 for i in range(1 << k)]
    return h[:, rev]


def naive_transform(values: list[Fraction], k: int) -> list[Fraction]:
    """out[m] = 2^-k Σ_i v[i] · w_m(i/2^k), by full matrix application."""
    p = paley_sign_matrix(k)
    scale = Fraction(1, 1 << k)
    return [scale * sum(int(p[m, i]) * values[i] for i in range(1 << k))
            for m in range(1 << k)]


def random_fraction(rng: random.Random) -> Fraction:
    return Fraction(rng.randrange(-99, 100), rng.randrange(1, 40))


# -- pointwise system --------------------------------------------------------


class TestPointwise:
    def test_rademacher_is_a_digit_sign(self):
        x = DyadicPoint(5, 4)  # digits 0101
        assert [rademacher(j, x) for j in range(6)] == [1, -1, 1, -1, 1, 1]

    def test_walsh_matches_digit_products_exhaustively(self):
        for i in range(1 << 6):
            x = DyadicPoint(i, 6)
            for n in range(64):
                assert walsh(n, x) == walsh_by_digit_products(n, x), (n, i)

    def test_walsh_matches_digit_products_randomized(self):
        rng = random.Random(1)
        for _ in range(500):
            n = rng.randrange(0, 1 << 20)
            x = DyadicPoint(rng.randrange(0, 1 << 16), 16)
            assert walsh(n, x) == walsh_by_digit_products(n, x)

    def test_character_property(self):
        rng = random.Random(2)
        for _ in range(500):
            m, n = rng.randrange(1 << 20), rng.randrange(1 << 20)
            x = DyadicPoint(rng.randrange(0, 1 << 14), 14)
            assert walsh(m, x) * walsh(n, x) == walsh(m ^ n, x)

    def test_translation_property(self):
        rng = random.Random(3)
        for _ in range(500):
            n = rng.randrange(1 << 20)
            x = DyadicPoint(rng.randrange(0, 1 << 12), 12)
            y = DyadicPoint(rng.randrange(0, 1 << 12), 12)
            assert walsh(n, xor_add(x, y)) == walsh(n, x) * walsh(n, y)

    def test_walsh_paley_matrix_agreement(self):
        p = paley_sign_matrix(6)
        for i in range(64):
            x = DyadicPoint(i, 6)
            for m in range(64):
                assert walsh(m, x) == int(p[m, i])


class TestKernels:
    def test_pow2_kernel_is_a_box(self):
        # D_4 = 4 on [0, 1/4), 0 elsewhere
        assert dirichlet_pow2(2, DyadicPoint.zero()) == 4
        assert dirichlet_pow2(2, DyadicPoint(1, 3)) == 4
        assert dirichlet_pow2(2, DyadicPoint(1, 2)) == 0
        assert dirichlet_pow2(2, DyadicPoint(7, 3)) == 0

    def test_dirichlet_equals_character_sum(self):
        p = paley_sign_matrix(6)
        sums = np.cumsum(p, axis=0)  # sums[n-1, i] = Σ_{k<n} w_k(i/2^6)
        for i in range(64):
            x = DyadicPoint(i, 6)
            for n in range(1, 65):
                assert dirichlet(n, x) == int(sums[n - 1, i]), (n, i)

    def test_dirichlet_at_zero_is_n(self):
        for n in list(range(1, 40)) + [977, 1 << 12, (1 << 30) + 7]:
            assert dirichlet(n, DyadicPoint.zero()) == n

    def test_dirichlet_mean_is_one(self):
        for n in (1, 2, 3, 7, 16, 41, 64):
            total = sum(dirichlet(n, DyadicPoint(i, 6)) for i in range(64))
            assert Fraction(total, 64) == 1

    def test_star_kernel_factorization(self):
        rng = random.Random(4)
        for _ in range(300):
            n = rng.randrange(1, 1 << 10)
            x = DyadicPoint(rng.randrange(0, 1 << 10), 10)
            assert dirichlet(n, x) == walsh(n, x) * dirichlet_star(n, x)

    def test_star_kernel_known_point(self):
        quarter = DyadicPoint(1, 2)
        assert dirichlet_star(3, quarter) == -1
        assert walsh(3, quarter) == -1
        assert dirichlet(3, quarter) == 1

    def test_huge_single_bit_orders_stay_cheap(self):
        # orders like 2^32796 must evaluate through their set bits only
        e = 32796
        x = DyadicPoint(5, 6)
        assert dirichlet(1 << e, x) == 0
        assert dirichlet((1 << e) + 1, x) == 1  # only the k=0 term survives
        assert dirichlet(1 << e, DyadicPoint.zero()) == 1 << e

    def test_rejects_nonpositive_orders(self):
        with pytest.raises(ValueError):
            dirichlet(0, DyadicPoint.zero())
        with pytest.raises(ValueError):
            dirichlet_star(0, DyadicPoint.zero())


class TestBitHelpers:
    def test_bit_reverse_matches_string_reversal(self):
        for width in range(0, 10):
            for i in range(1 << width):
                want = int(format(i, f"0{width}b")[::-1], 2) if width else 0
                assert bit_reverse(i, width) == want

    def test_expansion_round_trip(self):
        for n in (0, 1, 2, 3, 12, 255, 1 << 14):
            exp = DyadicExpansion.of(n)
            assert exp.index == n
            assert sum(1 << j for j in exp.set_positions()) == n


# -- grid vectors -------------------------------------------------------------


class TestGridVector:
    def test_from_values_round_trip(self):
        vals = [Fraction(1, 3), Fraction(-2, 5), 0, 7]
        g = GridVector.from_values(2, vals)
        assert g.values() == [Fraction(v) for v in vals]
        assert g[1] == Fraction(-2, 5)
        assert len(g) == 4

    def test_denominator_is_a_plain_int(self):
        g = GridVector.from_values(2, [Fraction(1, 6), 0, 0, 0])
        assert type(g.denominator) is int
        assert type(fwht(g).denominator) is int

    def test_value_at_point(self):
        g = GridVector.from_values(2, [10, 20, 30, 40])
        assert g.value_at(DyadicPoint(1, 2)) == 20
        assert g.value_at(DyadicPoint(5, 3)) == 30  # 5/8 lies in [1/2, 3/4)

    def test_arithmetic(self):
        a = GridVector.from_values(1, [Fraction(1, 2), Fraction(1, 3)])
        b = GridVector.from_values(1, [Fraction(1, 6), 1])
        assert (a + b).values() == [Fraction(2, 3), Fraction(4, 3)]
        assert a.scaled(6).values() == [3, 2]
        assert a.scaled(Fraction(-1, 2)).values() == [
            Fraction(-1, 4),
            Fraction(-1, 6),
        ]

    def test_norm_and_mean(self):
        g = GridVector.from_values(2, [1, -1, Fraction(1, 2), 0])
        assert g.norm1() == Fraction(5, 8)
        assert g.mean() == Fraction(1, 8)

    def test_nonzero_indices(self):
        g = GridVector.from_values(2, [0, 3, 0, -1])
        assert g.nonzero_indices() == [1, 3]

    def test_sample_walsh_matches_pointwise(self):
        for n in (0, 1, 5, 12):
            g = GridVector.sample_walsh(n, 5)
            assert all(g[i] == walsh(n, DyadicPoint(i, 5)) for i in range(32))

    def test_sample_kernels_match_pointwise(self):
        for n in (1, 2, 3, 9, 31):
            g = GridVector.sample_dirichlet(n, 5)
            s = GridVector.sample_dirichlet_star(n, 5)
            for i in range(32):
                x = DyadicPoint(i, 5)
                assert g[i] == dirichlet(n, x)
                assert s[i] == dirichlet_star(n, x)

    def test_sampling_rejects_aliasing(self):
        with pytest.raises(ValueError):
            GridVector.sample_dirichlet(32, 5)
        GridVector.sample_dirichlet(31, 5)  # last representable order is fine

    def test_csv_has_exact_and_float_columns(self):
        g = GridVector.from_values(1, [Fraction(1, 3), 2])
        text = g.to_csv(["k=v"])
        lines = text.strip().splitlines()
        assert lines[0] == "# k=v"
        assert lines[1].startswith("index,")
        assert "1/3" in lines[2]


# -- transform ----------------------------------------------------------------


class TestTransform:
    def test_constant_transforms_to_delta(self):
        g = GridVector.constant(4, Fraction(3, 7))
        c = fwht(g)
        assert c[0] == Fraction(3, 7)
        assert c.nonzero_indices() == [0]

    def test_character_transforms_to_unit(self):
        for m in (0, 1, 6, 15):
            c = fwht(GridVector.sample_walsh(m, 4))
            assert c[m] == 1
            assert c.nonzero_indices() == [m]

    def test_matches_naive_transform(self):
        rng = random.Random(7)
        for k in range(0, 7):
            vals = [random_fraction(rng) for _ in range(1 << k)]
            got = fwht(GridVector.from_values(k, vals))
            assert got.values() == naive_transform(vals, k)

    def test_inverse_round_trip(self):
        rng = random.Random(8)
        for k in (0, 3, 8):
            vals = [random_fraction(rng) for _ in range(1 << k)]
            g = GridVector.from_values(k, vals)
            assert fwht_inverse(fwht(g)) == g

    def test_parseval(self):
        rng = random.Random(9)
        for _ in range(20):
            k = rng.randrange(0, 9)
            vals = [random_fraction(rng) for _ in range(1 << k)]
            c = fwht(GridVector.from_values(k, vals))
            lhs = Fraction(sum(v * v for v in vals), 1 << k)
            assert lhs == sum(w * w for w in c.values())

    def test_linearity(self):
        rng = random.Random(10)
        a = GridVector.from_values(5, [random_fraction(rng) for _ in range(32)])
        b = GridVector.from_values(5, [random_fraction(rng) for _ in range(32)])
        assert fwht(a + b) == fwht(a) + fwht(b)
        assert fwht(a.scaled(Fraction(2, 3))) == fwht(a).scaled(Fraction(2, 3))

    def test_big_integer_values_stay_exact(self):
        # forces the object-dtype path: entries near 2^80
        base = 1 << 80
        vals = [base + i for i in range(8)]
        c = fwht(GridVector.from_values(3, vals))
        assert c[0] == base + Fraction(7, 2)
        assert fwht_inverse(c).values() == vals

    def test_float_path_approximates_exact(self):
        rng = random.Random(11)
        vals = [random_fraction(rng) for _ in range(64)]
        exact = fwht(GridVector.from_values(6, vals))
        approx = fwht_float(np.array([float(v) for v in vals]))
        for m in range(64):
            assert abs(float(exact[m]) - approx[m]) < 1e-12

    def test_rejects_non_power_of_two_float_input(self):
        with pytest.raises(ValueError):
            fwht_float(np.ones(12))
