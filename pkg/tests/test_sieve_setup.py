import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from buchsieve.buchstab import DomainError
from buchsieve.sieve_setup import (
    beta_of_r,
    default_L,
    f_eta_xi,
    golden_section,
    mellin_f,
    minimize_beta,
    setup_params,
)


def test_minimizer():
    r, b = minimize_beta()
    assert abs(r - 1.625) <= 0.002
    assert abs(b - 1.388) <= 0.001
    # dense grid as an independent check
    grid = np.linspace(1.05, 1.99, 20001)
    vals = np.array([beta_of_r(x) for x in grid])
    assert b <= vals.min() + 1e-9
    assert r == pytest.approx(grid[vals.argmin()], abs=2e-4)


@settings(max_examples=100, deadline=None)
@given(st.floats(1.05, 1.99), st.floats(1.05, 1.99), st.floats(0.0, 1.0))
def test_beta_convex(a, b, t):
    m = t * a + (1 - t) * b
    assert beta_of_r(m) <= t * beta_of_r(a) + (1 - t) * beta_of_r(b) + 1e-12


def test_golden_section_quadratic():
    x, fx, width = golden_section(lambda v: (v - 0.3) ** 2, -1, 2, tol=1e-9)
    assert x == pytest.approx(0.3, abs=1e-8)
    assert width <= 1e-9


def test_default_L():
    assert default_L(1e-3) == 200001


def test_setup_params_structure():
    p = setup_params(1e4)
    assert p.J >= 1
    prev_hi = None
    for j in range(1, p.J + 1):
        lo, hi = p.interval(j)
        assert lo < hi
        if prev_hi is not None:
            # intervals shrink geometrically and are disjoint
            assert hi <= prev_hi
        prev_hi = lo
    d = p.to_dict()
    assert d["J"] == p.J


def test_setup_params_bad_input():
    with pytest.raises(ValueError):
        setup_params(-1.0)
    with pytest.raises(ValueError):
        setup_params(1e4, r=0.9)


def _mellin_quad(s, eta, xi):
    # f' is -1/xi on the right ramp and +1/xi on the left
    def re(z, sign):
        return (z**s).real * sign / xi

    def im(z, sign):
        return (z**s).imag * sign / xi

    a, b = 1 + eta, 1 + eta + xi
    c, d = 1 - eta - xi, 1 - eta
    val = complex(quad(re, a, b, args=(1,), epsabs=0, epsrel=1e-12)[0], quad(im, a, b, args=(1,), epsabs=0, epsrel=1e-12)[0])
    val -= complex(quad(re, c, d, args=(1,), epsabs=0, epsrel=1e-12)[0], quad(im, c, d, args=(1,), epsabs=0, epsrel=1e-12)[0])
    return val


@settings(max_examples=60, deadline=None)
@given(
    st.floats(-3.0, 3.0),
    st.floats(-20.0, 20.0),
    st.floats(0.01, 0.3),
    st.floats(0.01, 0.3),
)
def test_mellin_matches_quadrature(sr, si, eta, xi):
    s = complex(sr, si)
    if abs(s + 1) < 1e-3:
        return
    exact = mellin_f(s, eta, xi)
    ref = _mellin_quad(s, eta, xi)
    assert abs(exact - ref) <= 1e-6 * max(abs(ref), 1e-9)


def test_mellin_identity_at_one():
    for eta, xi in ((0.1, 0.2), (0.01, 0.05), (0.3, 0.4)):
        assert mellin_f(1, eta, xi) == pytest.approx(2 * eta + xi, rel=1e-14)


def test_mellin_decay_bound():
    # |f^(s)| <= min(2 eta + xi + ..., 2 * (1+eta+xi)^(sigma+1) / (xi |s+1|))
    eta, xi = 0.1, 0.1
    for t in (10.0, 100.0, 1000.0):
        s = complex(0.0, t)
        assert abs(mellin_f(s, eta, xi)) <= 2 * (1 + eta + xi) / (xi * abs(s + 1))


def test_mellin_domain():
    with pytest.raises(DomainError):
        mellin_f(-1, 0.1, 0.1)
    with pytest.raises(DomainError):
        mellin_f(0.5, 0.6, 0.5)


def test_trapezoid_shape():
    assert f_eta_xi(1.0, 0.1, 0.1) == 1.0
    assert f_eta_xi(1.15, 0.1, 0.1) == pytest.approx(0.5)
    assert f_eta_xi(0.85, 0.1, 0.1) == pytest.approx(0.5)
    assert f_eta_xi(2.0, 0.1, 0.1) == 0.0
