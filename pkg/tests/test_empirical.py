import math

import numpy as np
import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from buchsieve import empirical as E


def test_primes_upto():
    assert E.primes_upto(1).size == 0
    assert E.primes_upto(30).tolist() == [2, 3, 5, 7, 11, 13, 17, 19, 23, 29]
    assert E.primes_upto(10**5).tolist() == list(sympy.primerange(2, 10**5 + 1))


@settings(max_examples=300, deadline=None)
@given(st.integers(2, 2**62))
def test_factorize_matches_sympy(n):
    f = E.factorize(n)
    assert math.prod(f) == n
    expect = sorted(p for p, k in sympy.factorint(n).items() for _ in range(k))
    assert f == expect


def test_factorize_hard_cases():
    p, q = 1000003, 999999000001
    assert E.factorize(p * q) == [p, q]
    assert E.factorize(2**61 - 1) == [2**61 - 1]
    assert E.factorize(1) == []
    with pytest.raises(ValueError):
        E.factorize(0)
    with pytest.raises(E.RangeError):
        E.factorize(2**63)


def test_largest_prime_factor():
    assert E.largest_prime_factor(12) == 3
    assert E.largest_prime_factor(999983 * 2) == 999983
    assert E.largest_prime_factor(1000003) == 1000003
    with pytest.raises(ValueError):
        E.largest_prime_factor(1)


@settings(max_examples=200, deadline=None)
@given(st.integers(2, 10**12))
def test_is_prime_matches_sympy(n):
    assert E.is_prime(n) == sympy.isprime(n)


def test_check_interval_witnesses():
    rep = E.check_interval(10**6)
    assert rep.found
    assert rep.y == math.ceil(1000 * math.log(1e6) ** 1.39)
    for n, p in rep.witnesses:
        assert n % p == 0 and sympy.isprime(p) and p > rep.threshold
        assert max(sympy.factorint(n)) == p
    with pytest.raises(E.RangeError):
        E.check_interval(10)


def test_check_interval_workers_agree():
    a = E.check_interval(5 * 10**8, max_witnesses=None, verify=False, workers=1)
    b = E.check_interval(5 * 10**8, max_witnesses=None, verify=False, workers=4)
    assert a.witnesses == b.witnesses and a.scanned == b.scanned


def _rough_naive(X, Y, z):
    return sum(1 for n in range(X + 1, X + Y + 1) if all(n % p for p in sympy.primerange(2, z + 1)))


@pytest.mark.parametrize("X,Y,z", [(10**4, 500, 7), (10**5, 1000, 30), (2 * 10**5, 100, 47)])
def test_rough_count_naive(X, Y, z):
    assert E.rough_count(X, Y, z)[0] == _rough_naive(X, Y, z)


def test_rough_count_edge_cases():
    assert E.rough_count(10**6, 0, 10) == (0, 0.0)
    with pytest.raises(ValueError):
        E.rough_count(10**6, 10, 10)  # below X^{1/3}
    X, Y = 10**6, 10**4
    z = math.isqrt(X + Y)
    count, _ = E.rough_count(X, Y, z)
    assert count == len(list(sympy.primerange(X + 1, X + Y + 1)))


def test_rough_count_prediction():
    count, pred = E.rough_count(10**7, 10**5, round(10 ** (7 / 3)))
    assert abs(count / pred - 1) < 0.05


def test_smooth_count_naive():
    X, Z = 3000, 20
    top = math.floor(math.e * X)
    naive = sum(1 for n in range(X + 1, top + 1) if max(sympy.factorint(n)) < Z)
    count, bound = E.smooth_count(X, Z)
    assert count == naive
    assert bound == pytest.approx(X * math.exp(-math.log(X) / math.log(Z) / 2))


def test_smooth_count_limits():
    assert E.smooth_count(1000, 2)[0] == 0  # P+(n) < 2 only for n = 1
    with pytest.raises(E.RangeError):
        E.smooth_count(10**9, 100)


def test_prime_reciprocal_sum():
    assert E.prime_reciprocal_sum(2, 3) == pytest.approx(1 / 3)
    assert E.prime_reciprocal_sum(5, 5) == 0.0
    ref = math.fsum(1 / p for p in sympy.primerange(10**4 + 1, 10**5 + 1))
    assert E.prime_reciprocal_sum(10**4, 10**5) == pytest.approx(ref, rel=1e-13)
    # Mertens: sum ~ log log hi - log log lo
    assert E.prime_reciprocal_sum(10**6, 10**8) == pytest.approx(math.log(math.log(1e8) / math.log(1e6)), abs=1e-3)


@pytest.mark.slow
def test_rough_count_error_shrinks():
    errs = []
    for X in (10**7, 10**8, 10**9):
        count, pred = E.rough_count(X, 10**6, round(X ** (1 / 3)))
        errs.append(abs(count / pred - 1))
    assert errs[0] > errs[1] > errs[2]
