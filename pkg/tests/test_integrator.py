import math

import numpy as np
import pytest
from scipy.integrate import quad

from buchsieve.buchstab import omega_exact
from buchsieve.integrator import (
    SingularKernelError,
    deficiency,
    kernel_box_bounds,
    kernel_values,
    report_csv,
    separable_integral,
    total_deficiency,
)
from buchsieve.regions import REGION_NAMES, Kernel, Region, build_region, empty_region, lower, upper

G = 1 / 19
W = 0.5 - G


def oracle_s72(g=G):
    """Nested scipy quad over the two-dimensional S72 region."""

    def inner(a0):
        lo = max(g, 0.5 - a0, 0.36 - a0 / 2)
        hi = 0.25
        if lo >= hi:
            return 0.0
        f = lambda a1: omega_exact((1 - g - a0 - a1) / a1) / (a0 * a1 * a1)  # noqa: E731
        return quad(f, lo, hi, epsabs=1e-13, epsrel=1e-12, limit=200)[0]

    return (1 - g) * quad(inner, 0.25, 0.5 - g, epsabs=1e-12, epsrel=1e-11, limit=200, points=[0.28, 0.5 - 0.25])[0]


def oracle_s8(g=G):
    def inner(a0):
        lo, hi = 0.25, min(a0, (1 - g - a0) / 2)
        if lo >= hi:
            return 0.0
        f = lambda a1: 1.0 / ((1 - g - a0 - a1) * a0 * a1)  # noqa: E731
        return quad(f, lo, hi, epsabs=1e-13, epsrel=1e-12)[0]

    return (1 - g) * quad(inner, 0.25, 0.5 - g, epsabs=1e-12, epsrel=1e-11, limit=200)[0]


@pytest.fixture(scope="module")
def s72():
    return build_region("S72", G)


@pytest.fixture(scope="module")
def s8():
    return build_region("S8", G)


def test_empty_is_zero():
    est = deficiency(empty_region(), "upper")
    assert est.value == 0.0 and est.upper == 0.0


@pytest.mark.parametrize("name,oracle", [("S72", oracle_s72), ("S8", oracle_s8)])
def test_quad_oracle(name, oracle):
    ref = oracle()
    region = build_region(name, G)
    up = deficiency(region, "upper")
    assert up.upper >= ref
    assert up.upper - ref < 3e-3 * ref
    assert abs(up.value - ref) < 1e-5
    mid = deficiency(region, "midpoint")
    assert abs(mid.value - ref) < 1e-4


def test_monte_carlo_agrees(s72):
    ref = oracle_s72()
    mc = deficiency(s72, "monte_carlo", samples=200_000, seed=3)
    assert mc.stderr > 0
    assert abs(mc.value - ref) < 5 * mc.stderr
    again = deficiency(s72, "monte_carlo", samples=200_000, seed=3)
    assert again.value == mc.value
    other = deficiency(s72, "monte_carlo", samples=200_000, seed=4)
    assert other.value != mc.value


@pytest.mark.parametrize("name", ["S713", "V5331_almost", "W712"])
def test_mode_ordering(name):
    region = build_region(name, G)
    up = deficiency(region, "upper", resolution=1 / 20)
    mc = deficiency(region, "monte_carlo", samples=100_000, seed=0)
    mid = deficiency(region, "midpoint", resolution=1 / 80)
    assert mid.value <= up.upper
    assert mc.value <= up.upper + 4 * mc.stderr


@pytest.mark.parametrize("name,res", [("S72", (1 / 50, 1 / 100, 1 / 200)), ("U5333", (1 / 10, 1 / 20, 1 / 40))])
def test_upper_monotone_in_resolution(name, res):
    region = build_region(name, G)
    ups = [deficiency(region, "upper", resolution=h).upper for h in res]
    assert all(b <= a + 1e-15 for a, b in zip(ups, ups[1:]))


@pytest.mark.parametrize("mode", ["upper", "midpoint", "monte_carlo"])
def test_worker_determinism(mode):
    region = build_region("S713", G)
    kw = {"resolution": 1 / 40} if mode != "monte_carlo" else {"samples": 150_000}
    a = deficiency(region, mode, workers=1, **kw)
    b = deficiency(region, mode, workers=3, **kw)
    assert a.value == b.value and a.upper == b.upper and a.cells == b.cells


def test_singular_kernel_rejected():
    r = Region("bad", 2, (upper(0, 0.3), lower(1, 0.1), upper(1, 0.2)), Kernel.buchstab_std(2, G), 1.0)
    with pytest.raises(SingularKernelError):
        deficiency(r, "upper")
    r2 = Region("bad2", 1, (lower(0, 0.5), upper(0, 1 - G, strict=False)), Kernel.prime_part(1, G), 1.0)
    with pytest.raises(SingularKernelError):
        deficiency(r2, "midpoint")


def test_bad_arguments(s72):
    with pytest.raises(ValueError):
        deficiency(s72, "trapezoid")
    with pytest.raises(ValueError):
        deficiency(s72, "monte_carlo", samples=100)
    with pytest.raises(ValueError):
        deficiency(s72, "midpoint", resolution=0)
    with pytest.raises(ValueError):
        total_deficiency(1 / 20)


def test_kernel_box_bounds_bracket(s8):
    rng = np.random.default_rng(5)
    lo = np.array([[0.26, 0.25], [0.3, 0.26]])
    hi = lo + 0.01
    up, dn, sep = kernel_box_bounds(s8.kernel, lo, hi, hi.sum(axis=1))
    for k in range(2):
        pts = rng.uniform(lo[k], hi[k], size=(2000, 2))
        vals = kernel_values(s8.kernel, pts) * pts.prod(axis=1)
        assert vals.max() <= up[k] and vals.min() >= dn[k]
    ref = [math.log(hi[k, 0] / lo[k, 0]) * math.log(hi[k, 1] / lo[k, 1]) for k in range(2)]
    assert np.allclose(sep, ref)


def test_separable_integral_exponents():
    lo = np.array([[0.2, 0.1, 0.3]])
    hi = np.array([[0.4, 0.2, 0.5]])
    got = separable_integral((2, 0, 1), lo, hi)[0]
    ref = (1 / 0.2 - 1 / 0.4) * 0.1 * math.log(0.5 / 0.3)
    assert got == pytest.approx(ref, rel=1e-14)


def test_report_structure():
    coarse = {2: 1 / 50, 3: 1 / 20, 4: 1 / 16, 5: 1 / 12, 6: 1 / 10}
    rep = total_deficiency(G, "midpoint", resolution=coarse, alternate_w712=True)
    assert set(rep.rows) == set(REGION_NAMES)
    assert set(rep.alternates) == {"W712[literal]"}
    assert rep.final == pytest.approx(1 - rep.S5 - rep.S7 - rep.S8)
    text = report_csv(rep, {"S72": 0.4425785, "S8": 0.2021922})
    assert text.splitlines()[0].startswith("region,mode,value,upper")
    assert rep.to_json() == rep.to_json()
