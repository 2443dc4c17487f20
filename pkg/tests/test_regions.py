import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from buchsieve.regions import (
    REGION_NAMES,
    Constraint,
    Kernel,
    Region,
    RegionError,
    all_regions,
    build_region,
    chain,
    contains,
    contains_many,
    empty_region,
    exclusion,
    halfspace_fraction,
    linear,
    lower,
    region_from_json,
    region_to_json,
    regions_from_json,
    regions_to_json,
    upper,
)

G = 1 / 19


def _lin_ok(c: Constraint, a) -> bool:
    s = sum(float(v) * a[i] for i, v in c.coefficients)
    if c.lo is not None and not (s > c.lo if c.strict_lo else s >= c.lo):
        return False
    if c.hi is not None and not (s < c.hi if c.strict_hi else s <= c.hi):
        return False
    return True


def naive_ok(c: Constraint, a) -> bool:
    """Independent evaluator: plain loops, every subset enumerated."""
    if c.kind in ("LowerBound", "UpperBound", "SubsetSumInterval"):
        return _lin_ok(c, a)
    if c.kind == "OrderChain":
        return all(a[i] < a[j] for i, j in zip(c.chain, c.chain[1:]))
    if c.kind == "SubsetSumExclusion":
        fam = c.subsets
        if fam is None:
            fam = [s for r in range(1, len(c.index_set) + 1) for s in itertools.combinations(c.index_set, r)]
        return not any(c.lo <= sum(a[i] for i in s) <= c.hi for s in fam)
    if c.kind == "ExcludedUnion":
        return not any(all(naive_ok(x, a) for x in clause) for clause in c.clauses)
    raise AssertionError(c.kind)


def naive_contains(region: Region, a) -> bool:
    return all(naive_ok(c, a) for c in region.constraints)


REGIONS = all_regions(G)
LIT = build_region("W712", G, "literal")


def _sample(region, rng, n):
    lo, hi = region.bounding_box()
    # pad a little so the boundary is exercised from both sides
    pad = 0.02 * (hi - lo) + 1e-3
    return rng.uniform(lo - pad, hi + pad, size=(n, region.dimension))


@pytest.mark.parametrize("name", list(REGION_NAMES) + ["W712[literal]"])
def test_membership_matches_naive(name):
    region = LIT if name == "W712[literal]" else REGIONS[name]
    rng = np.random.default_rng(1)
    pts = _sample(region, rng, 4000)
    if name == "U531":
        # thin 6D region: sort half the rows so the order chains hold
        pts[::2] = -np.sort(-pts[::2], axis=1)
    fast = contains_many(region, pts)
    slow = np.array([naive_contains(region, p) for p in pts])
    assert (fast == slow).all()
    assert fast.any(), "sample never hit the region"


@settings(max_examples=300, deadline=None)
@given(st.lists(st.floats(0.0, 0.5), min_size=6, max_size=6))
def test_u531_exclusion_matches_enumerator(a):
    region = REGIONS["U531"]
    assert contains(region, a) == naive_contains(region, a)


@pytest.mark.parametrize("name", REGION_NAMES)
def test_bbox_contains_samples(name):
    region = REGIONS[name]
    lo, hi = region.bounding_box()
    rng = np.random.default_rng(2)
    pts = _sample(region, rng, 20000)
    inside = pts[contains_many(region, pts)]
    assert (inside >= lo - 1e-12).all() and (inside <= hi + 1e-12).all()


@settings(max_examples=40, deadline=None)
@given(st.floats(0.0, 0.2), st.floats(0.0, 0.2))
def test_bbox_monotone_under_tightening(t1, t2):
    # adding a constraint can only shrink the box
    base = REGIONS["S72"]
    lo, hi = base.bounding_box()
    extra = (upper(0, float(hi[0] - t1 * (hi[0] - lo[0]))), lower(1, float(lo[1] + t2 * (hi[1] - lo[1]))))
    tighter = Region("t", 2, base.constraints + extra, base.kernel, base.prefactor)
    box = tighter.bounding_box()
    if box is None:
        return
    assert (box[0] >= lo - 1e-9).all() and (box[1] <= hi + 1e-9).all()


def test_empty_region():
    assert empty_region().bounding_box() is None


@pytest.mark.parametrize("name", REGION_NAMES)
def test_json_round_trip(name):
    region = REGIONS[name]
    again = region_from_json(region_to_json(region))
    assert again == region
    assert region_to_json(again) == region_to_json(region)


def test_json_many():
    regs = list(REGIONS.values())
    assert regions_from_json(regions_to_json(regs)) == regs


def test_validation():
    with pytest.raises(RegionError):
        build_region("nope", G)
    with pytest.raises(RegionError):
        build_region("S72", 0.3)
    with pytest.raises(RegionError):
        build_region("W712", G, "other")
    with pytest.raises(RegionError):
        Constraint("Bogus")
    with pytest.raises(RegionError):
        exclusion([0, 1], 0.5, 0.4)
    with pytest.raises(RegionError):
        Region("x", 2, (lower(3, 0.1),), Kernel.buchstab_std(2, G), 1.0)


def test_literal_reading_differs():
    assert region_to_json(LIT) != region_to_json(REGIONS["W712"])
    assert LIT.meta["w712_reading"] == "literal"


def test_strictness():
    r = Region("s", 1, (lower(0, 0.2), upper(0, 0.3)), Kernel.prime_part(1, G), 1.0)
    assert contains(r, [0.2])
    assert not contains(r, [0.3])
    r2 = Region("c", 2, (chain(0, 1), linear({0: 1, 1: 1}, lo=0.5, strict_lo=True)), Kernel.prime_part(2, G), 1.0)
    assert not contains(r2, [0.25, 0.25])
    assert contains(r2, [0.24, 0.27])


@settings(max_examples=60, deadline=None)
@given(
    st.lists(st.floats(-2, 2), min_size=3, max_size=3),
    st.floats(-1, 1),
)
def test_halfspace_fraction_is_upper_bound(a, b):
    a = np.array(a)
    if np.abs(a).max() < 1e-2:
        return
    lo = np.array([[0.1, 0.2, 0.3]])
    hi = np.array([[0.4, 0.3, 0.5]])
    rng = np.random.default_rng(0)
    pts = rng.uniform(lo[0], hi[0], size=(20000, 3))
    mc = np.mean(pts @ a <= b)
    frac = float(halfspace_fraction(a, b, lo, hi)[0])
    assert frac >= mc - 0.015
