"""Integration regions over exponent vectors alpha (p_j = x^{alpha_j}).

A region is plain data: a list of constraints, a kernel descriptor and a
prefactor.  It can be written to and read back from JSON bit-exactly, and is
compiled to numpy arrays for vectorised membership tests.

All the small slack terms (multiples of delta, epsilon) are dropped, so the
thresholds become Z -> gamma, V -> 1/2 - 2 gamma, W -> 1/2 - gamma,
X^2 -> 1 - gamma and the Type II window is [1/2 - gamma, 1/2].
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.optimize import linprog

REGION_NAMES = (
    "U531",
    "V5331_primes",
    "V5331_almost",
    "U5333",
    "W712",
    "S713",
    "S72",
    "S8",
)
KINDS = (
    "LowerBound",
    "UpperBound",
    "OrderChain",
    "SubsetSumInterval",
    "SubsetSumExclusion",
    "ExcludedUnion",
)
KERNEL_TAGS = ("buchstab_std", "role_reversal", "prime_part")
W712_READINGS = ("p2p3", "literal")

ROLE_REVERSAL_SPLIT = 0.36


class RegionError(ValueError):
    pass


@dataclass(frozen=True)
class Kernel:
    """Integrand family.

    ``exponents[i]`` is the power of alpha_i in the denominator.  The omega
    argument (for the Buchstab kernels) and the prime-part factor always use
    the sum of all coordinates.
    """

    tag: str
    gamma: float
    exponents: tuple[int, ...]

    def __post_init__(self):
        if self.tag not in KERNEL_TAGS:
            raise RegionError(f"unknown kernel tag {self.tag!r}")

    @classmethod
    def buchstab_std(cls, dim: int, gamma: float) -> "Kernel":
        return cls("buchstab_std", gamma, (1,) * (dim - 1) + (2,))

    @classmethod
    def prime_part(cls, dim: int, gamma: float) -> "Kernel":
        return cls("prime_part", gamma, (1,) * dim)

    @classmethod
    def role_reversal(cls, gamma: float) -> "Kernel":
        return cls("role_reversal", gamma, (2, 0, 1, 1))

    def to_dict(self) -> dict:
        return {"tag": self.tag, "gamma": self.gamma, "exponents": list(self.exponents)}


@dataclass(frozen=True)
class Constraint:
    """One constraint; which fields matter depends on ``kind``.

    * LowerBound / UpperBound: ``coefficients = {i: 1}``, ``lo`` or ``hi``.
    * OrderChain: ``chain`` lists indices with alpha strictly increasing.
    * SubsetSumInterval: lo (<|<=) sum c_i alpha_i (<|<=) hi; either side optional.
    * SubsetSumExclusion: no subset sum over ``index_set`` lies in the closed
      window [lo, hi]; ``subsets`` restricts the family (default: all non-empty).
    * ExcludedUnion: the point must not satisfy every constraint of any clause.
    """

    kind: str
    coefficients: tuple[tuple[int, Fraction], ...] = ()
    lo: float | None = None
    hi: float | None = None
    strict_lo: bool = False
    strict_hi: bool = True
    chain: tuple[int, ...] = ()
    index_set: tuple[int, ...] = ()
    subsets: tuple[tuple[int, ...], ...] | None = None
    clauses: tuple[tuple["Constraint", ...], ...] = ()
    label: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise RegionError(f"unknown constraint kind {self.kind!r}")
        for v in (self.lo, self.hi):
            if v is not None and not np.isfinite(v):
                raise RegionError("constraint bounds must be finite")
        if self.kind in ("LowerBound", "UpperBound", "SubsetSumInterval") and not self.coefficients:
            raise RegionError("linear constraint without coefficients")
        if self.kind == "SubsetSumExclusion":
            if not self.index_set or self.lo is None or self.hi is None or not self.lo < self.hi:
                raise RegionError("exclusion needs a non-empty index set and a window lo < hi")
        if self.kind == "OrderChain" and len(self.chain) < 2:
            raise RegionError("order chain needs at least two indices")

    def indices(self) -> set[int]:
        out = {i for i, _ in self.coefficients} | set(self.chain) | set(self.index_set)
        for clause in self.clauses:
            for c in clause:
                out |= c.indices()
        return out

    def excluded_subsets(self) -> list[tuple[int, ...]]:
        if self.subsets is not None:
            return [tuple(s) for s in self.subsets]
        idx = sorted(self.index_set)
        return [s for r in range(1, len(idx) + 1) for s in itertools.combinations(idx, r)]

    def to_dict(self) -> dict:
        d: dict = {"kind": self.kind}
        if self.label:
            d["label"] = self.label
        if self.coefficients:
            d["coefficients"] = {str(i): str(c) for i, c in self.coefficients}
        if self.kind in ("LowerBound", "UpperBound", "SubsetSumInterval", "SubsetSumExclusion"):
            d["lo"], d["hi"] = self.lo, self.hi
            if self.kind != "SubsetSumExclusion":
                d["strict_lo"], d["strict_hi"] = self.strict_lo, self.strict_hi
        if self.chain:
            d["chain"] = list(self.chain)
        if self.index_set:
            d["index_set"] = list(self.index_set)
            if self.subsets is not None:
                d["subsets"] = [list(s) for s in self.subsets]
        if self.clauses:
            d["clauses"] = [[c.to_dict() for c in clause] for clause in self.clauses]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Constraint":
        coeffs = tuple(
            sorted((int(i), Fraction(c)) for i, c in d.get("coefficients", {}).items())
        )
        subsets = d.get("subsets")
        return cls(
            kind=d["kind"],
            coefficients=coeffs,
            lo=d.get("lo"),
            hi=d.get("hi"),
            strict_lo=d.get("strict_lo", False),
            strict_hi=d.get("strict_hi", True),
            chain=tuple(d.get("chain", ())),
            index_set=tuple(d.get("index_set", ())),
            subsets=None if subsets is None else tuple(tuple(s) for s in subsets),
            clauses=tuple(
                tuple(cls.from_dict(c) for c in clause) for clause in d.get("clauses", ())
            ),
            label=d.get("label", ""),
        )


# -- constraint constructors -------------------------------------------------


def _coeffs(c: dict[int, object]) -> tuple[tuple[int, Fraction], ...]:
    return tuple(sorted((i, Fraction(v)) for i, v in c.items()))


def lower(i: int, bound: float, strict: bool = False) -> Constraint:
    return Constraint("LowerBound", _coeffs({i: 1}), lo=bound, strict_lo=strict)


def upper(i: int, bound: float, strict: bool = True) -> Constraint:
    return Constraint("UpperBound", _coeffs({i: 1}), hi=bound, strict_hi=strict)


def chain(*idx: int) -> Constraint:
    return Constraint("OrderChain", chain=tuple(idx))


def linear(coeffs: dict[int, object], lo=None, hi=None, strict_lo=False, strict_hi=True, label=""):
    return Constraint(
        "SubsetSumInterval",
        _coeffs(coeffs),
        lo=lo,
        hi=hi,
        strict_lo=strict_lo,
        strict_hi=strict_hi,
        label=label,
    )


def sum_of(idx, weights=None) -> dict[int, object]:
    weights = weights or {}
    return {i: weights.get(i, 1) for i in idx}


def exclusion(index_set, lo: float, hi: float, subsets=None, label="") -> Constraint:
    return Constraint(
        "SubsetSumExclusion",
        lo=lo,
        hi=hi,
        index_set=tuple(index_set),
        subsets=None if subsets is None else tuple(tuple(s) for s in subsets),
        label=label,
    )


def excluded_union(clauses, label="") -> Constraint:
    return Constraint("ExcludedUnion", clauses=tuple(tuple(c) for c in clauses), label=label)


# -- regions -----------------------------------------------------------------


@dataclass(frozen=True)
class Region:
    name: str
    dimension: int
    constraints: tuple[Constraint, ...]
    kernel: Kernel
    prefactor: float
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not 1 <= self.dimension <= 8:
            raise RegionError("dimension out of range")
        for c in self.constraints:
            bad = [i for i in c.indices() if not 0 <= i < self.dimension]
            if bad:
                raise RegionError(f"constraint {c.kind} references indices {bad} >= {self.dimension}")
        if len(self.kernel.exponents) != self.dimension:
            raise RegionError("kernel exponent pattern does not match the dimension")

    @property
    def gamma(self) -> float:
        return self.kernel.gamma

    def compiled(self) -> "CompiledRegion":
        cached = self.meta.get("_compiled")
        if cached is None:
            cached = CompiledRegion.build(self)
            self.meta["_compiled"] = cached
        return cached

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray] | None:
        return self.compiled().bbox

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "dimension": self.dimension,
            "constraints": [c.to_dict() for c in self.constraints],
            "kernel": self.kernel.to_dict(),
            "prefactor": self.prefactor,
            "meta": {k: v for k, v in self.meta.items() if not k.startswith("_")},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Region":
        k = d["kernel"]
        return cls(
            name=d["name"],
            dimension=int(d["dimension"]),
            constraints=tuple(Constraint.from_dict(c) for c in d["constraints"]),
            kernel=Kernel(k["tag"], float(k["gamma"]), tuple(int(e) for e in k["exponents"])),
            prefactor=float(d["prefactor"]),
            meta=dict(d.get("meta", {})),
        )


def region_to_json(region: Region, **kw) -> str:
    return json.dumps(region.to_dict(), sort_keys=True, **kw)


def region_from_json(text: str) -> Region:
    return Region.from_dict(json.loads(text))


def regions_to_json(regions, **kw) -> str:
    return json.dumps([r.to_dict() for r in regions], sort_keys=True, **kw)


def regions_from_json(text: str) -> list[Region]:
    data = json.loads(text)
    if isinstance(data, dict):
        data = [data]
    return [Region.from_dict(d) for d in data]


def _u53(g: float) -> list[Constraint]:
    """Four primes Z < p4 < p3 < p2 < p1 < V with the Buchstab cut-offs."""
    V, W, X2 = 0.5 - 2 * g, 0.5 - g, 1 - g
    return [
        lower(3, g, strict=True),
        chain(3, 2, 1, 0),
        upper(0, V),
        linear(sum_of([0, 1]), hi=W),
        linear(sum_of([0, 1, 2], {2: 2}), hi=X2),
        linear(sum_of([0, 1, 2, 3], {3: 2}), hi=X2),
    ]


def build_region(name: str, gamma: float, w712_reading: str = "p2p3") -> Region:
    """Construct one of the eight discarded-sum regions at the given gamma."""
    if name not in REGION_NAMES:
        raise RegionError(f"unknown region {name!r}; expected one of {REGION_NAMES}")
    if not 0 < gamma < 0.25:
        raise RegionError("gamma must lie in (0, 1/4)")
    g = gamma
    W, X2 = 0.5 - g, 1 - g
    lo2, hi2 = W, 0.5  # Type II window
    quarter = 0.25
    meta: dict = {}

    if name == "U531":
        cons = _u53(g) + [
            linear(sum_of(range(4)), hi=W),
            lower(5, g),
            chain(5, 4, 3),
            linear(sum_of(range(5), {4: 2}), hi=X2),
            linear(sum_of(range(6), {5: 2}), hi=X2),
            exclusion(range(6), lo2, hi2),
        ]
        dim, kernel, pref = 6, Kernel.buchstab_std(6, g), 1 - g
    elif name in ("V5331_primes", "V5331_almost"):
        cons = _u53(g) + [
            linear(sum_of(range(4)), lo=0.5, strict_lo=True),
            linear(sum_of([1, 2, 3]), hi=W),
            exclusion(range(4), lo2, hi2),
        ]
        if name == "V5331_primes":
            dim, kernel = 4, Kernel.prime_part(4, g)
        else:
            cons += [
                chain(3, 4),
                linear(sum_of(range(5), {4: 2}), hi=X2),
                exclusion(range(5), lo2, hi2),
            ]
            # p4 <= p5 is weak; the chain encodes it strictly, which differs on a null set
            dim, kernel = 5, Kernel.buchstab_std(5, g)
        pref = 1 - g
    elif name == "U5333":
        cons = _u53(g) + [
            linear(sum_of(range(4)), lo=0.5, strict_lo=True),
            linear(sum_of([1, 2, 3]), lo=0.5, strict_lo=True),
        ]
        dim, kernel, pref = 4, Kernel.buchstab_std(4, g), 1 - g
    elif name == "W712":
        if w712_reading not in W712_READINGS:
            raise RegionError(f"unknown W712 reading {w712_reading!r}")
        # coordinates: 0 = q, 1 = m, 2 = p2, 3 = p3; the old p1 is q*m
        p1 = {0: 1, 1: 1}
        cons = [
            linear(p1, lo=quarter, hi=W),
            lower(3, g),
            chain(3, 2),
            upper(2, quarter),
            linear(sum_of([0, 1, 3]), lo=0.5, strict_lo=True),
            linear(sum_of([0, 1, 2], {0: Fraction(1, 2), 1: Fraction(1, 2)}), hi=ROLE_REVERSAL_SPLIT),
            linear(sum_of([0, 1, 2, 3], {3: 2}), hi=X2),
            linear(sum_of([2, 3]), lo=quarter, strict_lo=True),
            lower(0, g),
            chain(0, 1),
            exclusion(
                range(4),
                lo2,
                hi2,
                subsets=[(0, 2, 3), (1, 2, 3), (0, 2), (0, 3), (1, 2), (1, 3)],
                label="type-II products",
            ),
        ]

        def plus_p1(*idx):
            # the excluded-set conditions that mention p1 under each reading
            out: dict[int, object] = {i: 1 for i in idx}
            extra = p1 if w712_reading == "literal" else {3: 1}
            for i, c in extra.items():
                out[i] = out.get(i, 0) + c
            return out

        clauses = [
            [linear(sum_of([1, 2, 3]), hi=W)],
            [upper(1, quarter), linear(sum_of([0, 2, 3]), hi=W)],
            [linear(plus_p1(1), hi=quarter), linear(sum_of([0, 2]), hi=W)],
            [linear(sum_of([1, 2]), hi=quarter), linear(plus_p1(0), hi=W)],
            [linear(plus_p1(0), hi=quarter), linear(sum_of([1, 2]), hi=W)],
            [linear(sum_of([0, 2]), hi=quarter), linear(plus_p1(1), hi=W)],
        ]
        cons.append(excluded_union(clauses, label="asymptotic ranges"))
        dim, kernel, pref = 4, Kernel.role_reversal(g), (1 - g) / g
        meta["w712_reading"] = w712_reading
    elif name == "S713":
        cons = [
            lower(0, quarter),
            upper(0, W),
            lower(3, g),
            chain(3, 2, 1),
            upper(1, quarter),
            linear(sum_of([0, 1]), lo=0.5, strict_lo=True),
            linear({0: Fraction(1, 2), 1: 1}, hi=ROLE_REVERSAL_SPLIT),
            linear(sum_of([0, 1, 2], {2: 2}), hi=X2),
            linear(sum_of([0, 1, 2, 3], {3: 2}), hi=X2),
            exclusion(range(4), lo2, hi2),
        ]
        dim, kernel, pref = 4, Kernel.buchstab_std(4, g), 1 - g
    elif name == "S72":
        cons = [
            lower(0, quarter),
            upper(0, W),
            lower(1, g),
            upper(1, quarter),
            linear(sum_of([0, 1]), lo=0.5, strict_lo=True),
            linear({0: Fraction(1, 2), 1: 1}, lo=ROLE_REVERSAL_SPLIT),
        ]
        dim, kernel, pref = 2, Kernel.buchstab_std(2, g), 1 - g
    else:  # S8
        cons = [
            lower(0, quarter),
            upper(0, W),
            lower(1, quarter),
            chain(1, 0),
            linear({0: 1, 1: 2}, hi=X2),
        ]
        dim, kernel, pref = 2, Kernel.prime_part(2, g), 1 - g

    return Region(name, dim, tuple(cons), kernel, pref, meta)


def all_regions(gamma: float, w712_reading: str = "p2p3") -> dict[str, Region]:
    return {n: build_region(n, gamma, w712_reading) for n in REGION_NAMES}


def empty_region(dim: int = 2, gamma: float = 1 / 19, name: str = "empty") -> Region:
    """A region with contradictory constraints (alpha_0 >= 0.3 and alpha_0 < 0.2)."""
    cons = (lower(0, 0.3), upper(0, 0.2)) + tuple(
        c for i in range(1, dim) for c in (lower(i, gamma), upper(i, 0.25))
    )
    return Region(name, dim, cons, Kernel.buchstab_std(dim, gamma), 1 - gamma)


# -- compiled form -----------------------------------------------------------


@dataclass
class Linear:
    """Rows A x (< | <=) b."""

    A: np.ndarray
    b: np.ndarray
    strict: np.ndarray

    @classmethod
    def from_constraints(cls, cons, dim: int) -> "Linear":
        rows, bs, st = [], [], []

        def add(coeffs: dict[int, float], bound: float, strict: bool):
            row = np.zeros(dim)
            for i, c in coeffs.items():
                row[i] += c
            rows.append(row)
            bs.append(bound)
            st.append(strict)

        for c in cons:
            if c.kind in ("LowerBound", "UpperBound", "SubsetSumInterval"):
                co = {i: float(v) for i, v in c.coefficients}
                if c.lo is not None:
                    add({i: -v for i, v in co.items()}, -c.lo, c.strict_lo)
                if c.hi is not None:
                    add(co, c.hi, c.strict_hi)
            elif c.kind == "OrderChain":
                for a, b in zip(c.chain, c.chain[1:]):
                    add({a: 1.0, b: -1.0}, 0.0, True)
        if not rows:
            return cls(np.zeros((0, dim)), np.zeros(0), np.zeros(0, bool))
        return cls(np.array(rows), np.array(bs), np.array(st, bool))

    def satisfied(self, pts: np.ndarray) -> np.ndarray:
        v = pts @ self.A.T
        ok = np.where(self.strict, v < self.b, v <= self.b)
        return ok.all(axis=1)

    def box_range(self, lo: np.ndarray, hi: np.ndarray):
        """min and max of each row over boxes; shapes (n, m)."""
        Ap = np.clip(self.A, 0, None)
        An = np.clip(self.A, None, 0)
        vmin = lo @ Ap.T + hi @ An.T
        vmax = hi @ Ap.T + lo @ An.T
        return vmin, vmax

    def box_status(self, lo, hi):
        """(all_ok, any_violated) per box."""
        vmin, vmax = self.box_range(lo, hi)
        all_ok = np.where(self.strict, vmax < self.b, vmax <= self.b).all(axis=1)
        violated = np.where(self.strict, vmin >= self.b, vmin > self.b).any(axis=1)
        return all_ok, violated


@dataclass
class CompiledRegion:
    dim: int
    linear: Linear
    excl_M: np.ndarray  # (k, d) 0/1 subset indicator rows
    excl_lo: np.ndarray
    excl_hi: np.ndarray
    clauses: list[Linear]
    bbox: tuple[np.ndarray, np.ndarray] | None

    @classmethod
    def build(cls, region: Region) -> "CompiledRegion":
        d = region.dimension
        lin = Linear.from_constraints(region.constraints, d)
        M, elo, ehi, clauses = [], [], [], []
        for c in region.constraints:
            if c.kind == "SubsetSumExclusion":
                for s in c.excluded_subsets():
                    row = np.zeros(d)
                    row[list(s)] = 1.0
                    M.append(row)
                    elo.append(c.lo)
                    ehi.append(c.hi)
            elif c.kind == "ExcludedUnion":
                clauses.extend(Linear.from_constraints(cl, d) for cl in c.clauses)
        return cls(
            dim=d,
            linear=lin,
            excl_M=np.array(M).reshape(-1, d),
            excl_lo=np.array(elo),
            excl_hi=np.array(ehi),
            clauses=clauses,
            bbox=_bbox(lin, d),
        )

    def contains(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(pts)
        ok = self.linear.satisfied(pts)
        if len(self.excl_M):
            s = pts @ self.excl_M.T
            ok &= ~((s >= self.excl_lo) & (s <= self.excl_hi)).any(axis=1)
        for cl in self.clauses:
            ok &= ~cl.satisfied(pts)
        return ok

    def classify(self, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
        """Per box: 1 inside, 0 straddles the boundary, -1 outside."""
        all_ok, out = self.linear.box_status(lo, hi)
        if len(self.excl_M):
            smin = lo @ self.excl_M.T
            smax = hi @ self.excl_M.T
            inside_win = (smin >= self.excl_lo) & (smax <= self.excl_hi)
            clear = (smax < self.excl_lo) | (smin > self.excl_hi)
            out |= inside_win.any(axis=1)
            all_ok &= clear.all(axis=1)
        for cl in self.clauses:
            c_all, c_none = cl.box_status(lo, hi)
            out |= c_all
            all_ok &= c_none
        status = np.zeros(len(lo), dtype=np.int8)
        status[all_ok] = 1
        status[out] = -1
        return status

    def contract(self, lo: np.ndarray, hi: np.ndarray, passes: int = 2):
        """Shrink boxes to a superset of box-intersect-linear-constraints.

        Returns new (lo, hi); a box with lo > hi in some coordinate is empty.
        """
        A, b = self.linear.A, self.linear.b
        lo, hi = lo.copy(), hi.copy()
        for _ in range(passes):
            for k in range(len(b)):
                row = A[k]
                nz = np.nonzero(row)[0]
                terms_min = np.where(row > 0, lo * row, hi * row)
                total_min = terms_min.sum(axis=1)
                for i in nz:
                    rest = total_min - terms_min[:, i]
                    lim = (b[k] - rest) / row[i]
                    if row[i] > 0:
                        hi[:, i] = np.minimum(hi[:, i], lim)
                    else:
                        lo[:, i] = np.maximum(lo[:, i], lim)
        return lo, hi

    def fraction_upper(self, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
        return _region_fraction(self, lo, hi)

    def sum_upper(self, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
        """Upper bound for sum(alpha) over box-intersect-region using single rows.

        A row a.x <= b with a_i >= 1 everywhere gives
        sum x <= b - sum (a_i - 1) lo_i.
        """
        best = hi.sum(axis=1)
        A, b = self.linear.A, self.linear.b
        for k in range(len(b)):
            if np.all(A[k] >= 1.0):
                best = np.minimum(best, b[k] - lo @ (A[k] - 1.0))
        return best


def _bbox(lin: Linear, d: int):
    """Per-coordinate extent of the linear part (exclusions ignored)."""
    lo, hi = np.zeros(d), np.zeros(d)
    for i in range(d):
        for sign, store in ((1.0, lo), (-1.0, hi)):
            c = np.zeros(d)
            c[i] = sign
            res = linprog(c, A_ub=lin.A, b_ub=lin.b, bounds=[(0, 1)] * d, method="highs")
            if res.status == 2:
                return None
            if res.status != 0:
                raise RegionError(f"bounding box LP failed: {res.message}")
            store[i] = res.fun * sign
    return lo, hi


def contains(region: Region, alpha) -> bool:
    a = np.asarray(alpha, dtype=float)
    if a.shape != (region.dimension,):
        raise RegionError(f"expected a {region.dimension}-vector, got shape {a.shape}")
    return bool(region.compiled().contains(a[None, :])[0])


def contains_many(region: Region, pts) -> np.ndarray:
    pts = np.asarray(pts, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != region.dimension:
        raise RegionError("points must have shape (n, dimension)")
    return region.compiled().contains(pts)


def max_linear(region: Region, coeffs) -> float | None:
    """sup of coeffs . alpha over the closure of the linear part (None if empty)."""
    lin = region.compiled().linear
    c = -np.asarray(coeffs, dtype=float)
    res = linprog(c, A_ub=lin.A, b_ub=lin.b, bounds=[(0, 1)] * region.dimension, method="highs")
    if res.status == 2:
        return None
    return -res.fun


# -- volume fractions --------------------------------------------------------

_THIN = 1e-3


def halfspace_fraction(a: np.ndarray, b: float, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Upper bound (exact up to rounding) for vol(box and {a.x <= b}) / vol(box).

    Uses the vertex inclusion-exclusion formula on the unit cube after an
    affine change of variables.  Coordinates with tiny scaled coefficient are
    dropped, which only enlarges the set.
    """
    w = hi - lo
    c = a[None, :] * w  # scaled coefficients, (n, d)
    rhs = b - lo @ a
    neg = c < 0
    rhs = rhs - np.where(neg, c, 0.0).sum(axis=1)
    c = np.abs(c)
    cmax = c.max(axis=1, keepdims=True)
    c = np.where(c < _THIN * cmax, 0.0, c)
    out = np.ones(len(lo))
    full = rhs >= c.sum(axis=1)
    none = rhs <= 0
    out[none] = 0.0
    todo = ~(full | none)
    if not todo.any():
        return out
    c, rhs = c[todo], rhs[todo]
    d = c.shape[1]
    k = (c > 0).sum(axis=1)
    res = np.empty(len(c))
    for kk in np.unique(k):
        sel = k == kk
        cs = np.sort(c[sel], axis=1)[:, d - kk :]
        verts = np.array(list(itertools.product((0.0, 1.0), repeat=int(kk))))
        signs = (-1.0) ** verts.sum(axis=1)
        t = np.clip(rhs[sel][:, None] - cs @ verts.T, 0.0, None) ** kk
        vol = (t * signs).sum(axis=1) / (math.factorial(int(kk)) * np.prod(cs, axis=1))
        res[sel] = vol
    out[todo] = np.clip(res + 1e-9, 0.0, 1.0)
    return out


def _region_fraction(comp: "CompiledRegion", lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Upper bound for vol(box and region) / vol(box), one constraint at a time."""
    frac = np.ones(len(lo))
    lin = comp.linear
    vmin, vmax = lin.box_range(lo, hi)
    for k in range(len(lin.b)):
        cut = (vmin[:, k] < lin.b[k]) & (vmax[:, k] > lin.b[k])
        if cut.any():
            frac[cut] = np.minimum(frac[cut], halfspace_fraction(lin.A[k], lin.b[k], lo[cut], hi[cut]))
    if len(comp.excl_M):
        smin = lo @ comp.excl_M.T
        smax = hi @ comp.excl_M.T
        for k in range(len(comp.excl_M)):
            a, b = comp.excl_lo[k], comp.excl_hi[k]
            cut = (smax[:, k] >= a) & (smin[:, k] <= b)
            if cut.any():
                row = comp.excl_M[k]
                below = halfspace_fraction(row, a, lo[cut], hi[cut])
                above = halfspace_fraction(-row, -b, lo[cut], hi[cut])
                frac[cut] = np.minimum(frac[cut], np.minimum(below + above, 1.0))
    for cl in comp.clauses:
        # outside a conjunction means violating at least one of its rows
        total = np.zeros(len(lo))
        for k in range(len(cl.b)):
            total += halfspace_fraction(-cl.A[k], -cl.b[k], lo, hi)
        frac = np.minimum(frac, np.minimum(total, 1.0))
    return frac
