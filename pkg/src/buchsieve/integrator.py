"""Deficiency integrals over constraint regions.

Three evaluation modes:

* ``midpoint``: uniform grid, a cell contributes kernel(midpoint) * volume
  when its midpoint lies in the region.
* ``upper``: a rigorous bound.  Cells are bisected from the bounding box;
  every cell not provably outside contributes
  sup(omega_upper) * (exact integral of the power denominators over the cell).
  Cells are first shrunk against the linear constraints, which keeps every
  region point while tightening the bound.
* ``monte_carlo``: uniform samples in the bounding box, seeded.

Sums use ``math.fsum`` so totals are independent of chunking and worker count.
"""
from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .buchstab import omega_upper_inf, omega_upper_sup, omega_vec
from .regions import REGION_NAMES, Kernel, Region, RegionError, all_regions, build_region, max_linear

MODES = ("midpoint", "upper", "monte_carlo")

# upper mode: base grid width plus per-cell gap tolerance for adaptive splits
DEFAULT_RESOLUTION = {2: 1 / 400, 3: 1 / 100, 4: 1 / 60, 5: 1 / 30, 6: 1 / 24}
DEFAULT_GAP_TOL = {2: 1e-7, 3: 1e-7, 4: 1e-7, 5: 1e-7, 6: 1e-8}
# midpoint mode has no adaptivity, so it needs much finer uniform grids
MIDPOINT_RESOLUTION = {2: 1 / 1600, 3: 1 / 400, 4: 1 / 320, 5: 1 / 160, 6: 1 / 384}
DEFAULT_SAMPLES = 400_000
MIN_WIDTH = 1e-7
CHUNK = 1 << 16


class SingularKernelError(RegionError):
    pass


@dataclass
class IntegralEstimate:
    region: str
    mode: str
    value: float
    upper: float | None
    cells: int
    resolution: float | None
    stderr: float = 0.0
    seconds: float = 0.0
    truncated: bool = False

    def to_dict(self) -> dict:
        return asdict(self)


# -- kernels -----------------------------------------------------------------


def kernel_values(kernel: Kernel, pts: np.ndarray) -> np.ndarray:
    """Exact kernel (without prefactor) at points of shape (n, d)."""
    g = kernel.gamma
    pts = np.asarray(pts, dtype=float)
    e = np.asarray(kernel.exponents, dtype=float)
    denom = np.prod(pts**e, axis=1)
    rest = 1.0 - g - pts.sum(axis=1)
    if kernel.tag == "buchstab_std":
        return omega_vec(rest / pts[:, -1]) / denom
    if kernel.tag == "prime_part":
        return 1.0 / (rest * denom)
    return omega_vec(rest / g) * omega_vec(pts[:, 1] / pts[:, 0]) / denom


def kernel_factor(kernel: Kernel, pts: np.ndarray) -> np.ndarray:
    """The kernel with its power denominators removed."""
    e = np.asarray(kernel.exponents, dtype=float)
    return kernel_values(kernel, pts) * np.prod(np.asarray(pts, dtype=float) ** e, axis=1)


def _power_integral(e: int, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    if e == 0:
        return hi - lo
    if e == 1:
        return np.log1p((hi - lo) / lo)
    if e == 2:
        return (hi - lo) / (lo * hi)
    return (lo ** (1 - e) - hi ** (1 - e)) / (e - 1)


def separable_integral(exponents, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Exact integral of prod alpha_i^{-e_i} over each box."""
    out = np.ones(len(lo))
    for i, e in enumerate(exponents):
        out *= _power_integral(int(e), lo[:, i], hi[:, i])
    return out


def kernel_box_bounds(kernel: Kernel, lo, hi, s_hi):
    """Bounds (fac_up, fac_dn, sep) with the kernel integral over each box
    between fac_dn * sep and fac_up * sep.

    ``sep`` is the exact integral of the power denominators and ``fac`` bounds
    the remaining factor (omega terms, or the prime-part 1/(1-gamma-sum)).
    ``s_hi`` is an upper bound for sum(alpha) over box-and-region.  The lower
    factor uses omega_upper too; it only steers refinement.
    """
    g = kernel.gamma
    s_lo = lo.sum(axis=1)
    sep = separable_integral(kernel.exponents, lo, hi)
    rest_lo = 1.0 - g - s_hi
    rest_hi = 1.0 - g - s_lo
    if kernel.tag == "buchstab_std":
        u_lo = rest_lo / hi[:, -1]
        u_hi = rest_hi / lo[:, -1]
        return omega_upper_sup(u_lo, u_hi), omega_upper_inf(u_lo, u_hi), sep
    if kernel.tag == "prime_part":
        with np.errstate(divide="ignore"):
            up = np.where(rest_lo > 0, 1.0 / np.where(rest_lo > 0, rest_lo, 1.0), np.inf)
        return up, 1.0 / rest_hi, sep
    u1 = (rest_lo / g, rest_hi / g)
    u2 = (lo[:, 1] / hi[:, 0], hi[:, 1] / lo[:, 0])
    up = omega_upper_sup(*u1) * omega_upper_sup(*u2)
    dn = omega_upper_inf(*u1) * omega_upper_inf(*u2)
    return up, dn, sep


def check_nonsingular(region: Region) -> None:
    """Raise if a kernel denominator can reach 0 on the closure of the region."""
    if region.bounding_box() is None:
        return
    d = region.dimension
    for i, e in enumerate(region.kernel.exponents):
        needs = e > 0 or (region.kernel.tag == "buchstab_std" and i == d - 1)
        if needs:
            c = np.zeros(d)
            c[i] = -1.0
            lo_i = -max_linear(region, c)
            if lo_i <= 0:
                raise SingularKernelError(
                    f"{region.name}: alpha_{i} can reach 0; the constraints need a positive lower bound on it"
                )
    if region.kernel.tag == "prime_part":
        top = max_linear(region, np.ones(d))
        if top >= 1.0 - region.gamma:
            raise SingularKernelError(
                f"{region.name}: sum(alpha) can reach 1 - gamma; the constraints need a margin below it"
            )


# -- helpers -----------------------------------------------------------------


def _chunks(n: int, size: int = CHUNK):
    return [(a, min(a + size, n)) for a in range(0, n, size)]


def _pmap(fn, n: int, workers: int):
    """fn(a, b) over fixed index chunks; results in chunk order."""
    spans = _chunks(n)
    if workers <= 1 or len(spans) == 1:
        return [fn(a, b) for a, b in spans]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(lambda s: fn(*s), spans))


def _split(lo: np.ndarray, hi: np.ndarray):
    """Bisect each box along its widest axis (lowest index on ties)."""
    w = hi - lo
    ax = np.argmax(w, axis=1)
    rows = np.arange(len(lo))
    mid = 0.5 * (lo[rows, ax] + hi[rows, ax])
    lo2, hi2 = lo.copy(), hi.copy()
    hi1 = hi.copy()
    hi1[rows, ax] = mid
    lo2[rows, ax] = mid
    return np.concatenate([lo, lo2]), np.concatenate([hi1, hi2])


def _empty(region: Region, mode: str, resolution, t0) -> IntegralEstimate:
    return IntegralEstimate(region.name, mode, 0.0, 0.0, 0, resolution, 0.0, time.perf_counter() - t0)


# -- modes -------------------------------------------------------------------


def _midpoint(region: Region, h: float, workers: int) -> tuple[float, int]:
    comp = region.compiled()
    blo, bhi = comp.bbox
    n_axis = 2 ** np.ceil(np.log2(np.maximum((bhi - blo) / h, 1.0)))
    target = (bhi - blo) / n_axis * (1 + 1e-12)
    vol = float(np.prod((bhi - blo) / n_axis))
    sums: list[float] = []
    counts: list[int] = []

    def leaves(lo, hi):
        mid = 0.5 * (lo + hi)

        def part(a, b):
            inside = comp.contains(mid[a:b])
            if not inside.any():
                return 0.0, 0
            return math.fsum(kernel_values(region.kernel, mid[a:b][inside]).tolist()), int(inside.sum())

        for v, c in _pmap(part, len(lo), workers):
            sums.append(v)
            counts.append(c)

    # depth-first over batches so memory stays bounded; cells meeting the
    # region only by classification are kept, outside ones are pruned
    stack = [(blo[None, :].copy(), bhi[None, :].copy())]
    while stack:
        lo, hi = stack.pop()
        over = (hi - lo) / target
        if np.all(over <= 1.0):
            leaves(lo, hi)
            continue
        keep = comp.classify(lo, hi) >= 0
        lo, hi, over = lo[keep], hi[keep], over[keep]
        if not len(lo):
            continue
        ax = np.argmax(over, axis=1)
        rows = np.arange(len(lo))
        mid = 0.5 * (lo[rows, ax] + hi[rows, ax])
        lo2, hi1 = lo.copy(), hi.copy()
        hi1[rows, ax] = mid
        lo2[rows, ax] = mid
        lo, hi = np.concatenate([lo, lo2]), np.concatenate([hi1, hi])
        if len(lo) > 4 * CHUNK:
            half = len(lo) // 2
            stack.append((lo[half:], hi[half:]))
            stack.append((lo[:half], hi[:half]))
        else:
            stack.append((lo, hi))
    return region.prefactor * vol * math.fsum(sums), sum(counts)


def _upper(region: Region, h: float, gap_tol: float, max_cells: int, workers: int):
    comp = region.compiled()
    kern = region.kernel
    expo = np.asarray(kern.exponents, dtype=float)
    blo, bhi = comp.bbox
    lo, hi = blo[None, :].copy(), bhi[None, :].copy()
    uppers: list[float] = []
    mids: list[float] = []
    n_final = 0
    truncated = False
    tau = gap_tol

    def evaluate(a, b):
        l, u = comp.contract(lo[a:b], hi[a:b])
        ok = np.all(l < u, axis=1)
        l, u = l[ok], u[ok]
        status = comp.classify(l, u)
        ok = status >= 0
        l, u, status = l[ok], u[ok], status[ok]
        s_hi = comp.sum_upper(l, u)
        f_up, f_dn, sep = kernel_box_bounds(kern, l, u, s_hi)
        up = f_up * sep
        edge = status == 0
        if edge.any():
            # sup of the denominators times the region's share of the cell
            le, ue = l[edge], u[edge]
            dens = np.prod(le ** -expo, axis=1) * np.prod(ue - le, axis=1)
            frac = comp.fraction_upper(le, ue)
            share = dens * frac
            up[edge] = f_up[edge] * np.minimum(sep[edge], share)
        gap = np.where(edge, up, up - f_dn * sep)
        # estimate: smooth factor at the midpoint times the exact denominator integral
        m = 0.5 * (l + u)
        mv = np.zeros(len(l))
        inner = status == 1
        if inner.any():
            mv[inner] = kernel_factor(kern, m[inner]) * sep[inner]
        if edge.any():
            mv[edge] = kernel_values(kern, m[edge]) * np.prod(ue - le, axis=1) * frac
        return l, u, up, gap, mv

    while len(lo):
        parts = _pmap(evaluate, len(lo), workers)
        lo = np.concatenate([p[0] for p in parts])
        hi = np.concatenate([p[1] for p in parts])
        up = np.concatenate([p[2] for p in parts])
        gap = np.concatenate([p[3] for p in parts])
        mv = np.concatenate([p[4] for p in parts])
        w = (hi - lo).max(axis=1)
        split = (w > h) | ((gap > tau) & (w > MIN_WIDTH))
        if n_final + len(lo) + int(split.sum()) > max_cells:
            truncated = True
            split[:] = False
        done = ~split
        uppers.extend(up[done].tolist())
        mids.extend(mv[done].tolist())
        n_final += int(done.sum())
        lo, hi = _split(lo[split], hi[split]) if split.any() else (lo[:0], hi[:0])
    pf = region.prefactor
    return pf * math.fsum(mids), pf * math.fsum(uppers), n_final, truncated


def _monte_carlo(region: Region, samples: int, seed: int, workers: int):
    comp = region.compiled()
    blo, bhi = comp.bbox
    vol = float(np.prod(bhi - blo))
    seqs = np.random.SeedSequence(seed).spawn(len(_chunks(samples)))

    def part(a, b):
        rng = np.random.default_rng(seqs[a // CHUNK])
        pts = blo + (bhi - blo) * rng.random((b - a, len(blo)))
        f = np.zeros(b - a)
        inside = comp.contains(pts)
        if inside.any():
            f[inside] = kernel_values(region.kernel, pts[inside])
        return math.fsum(f.tolist()), math.fsum((f * f).tolist())

    parts = _pmap(part, samples, workers)
    s1 = math.fsum(p[0] for p in parts)
    s2 = math.fsum(p[1] for p in parts)
    mean = s1 / samples
    var = max(s2 / samples - mean * mean, 0.0)
    scale = region.prefactor * vol
    return scale * mean, scale * math.sqrt(var / samples)


def deficiency(
    region: Region,
    mode: str = "upper",
    resolution: float | None = None,
    samples: int | None = None,
    seed: int = 0,
    gap_tol: float | None = None,
    max_cells: int = 3_000_000,
    workers: int = 1,
) -> IntegralEstimate:
    """Integrate prefactor * kernel over the region."""
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")
    t0 = time.perf_counter()
    d = region.dimension
    if region.bounding_box() is None:
        return _empty(region, mode, resolution, t0)
    check_nonsingular(region)

    if mode == "monte_carlo":
        samples = DEFAULT_SAMPLES if samples is None else int(samples)
        if samples < 10_000:
            raise ValueError("monte_carlo needs at least 10^4 samples")
        value, err = _monte_carlo(region, samples, seed, workers)
        return IntegralEstimate(
            region.name, mode, value, None, samples, None, err, time.perf_counter() - t0
        )

    table = MIDPOINT_RESOLUTION if mode == "midpoint" else DEFAULT_RESOLUTION
    h = table.get(d, 1 / 40) if resolution is None else float(resolution)
    if not h > 0:
        raise ValueError("resolution must be positive")
    if mode == "midpoint":
        value, cells = _midpoint(region, h, workers)
        return IntegralEstimate(region.name, mode, value, None, cells, h, 0.0, time.perf_counter() - t0)

    tol = DEFAULT_GAP_TOL.get(d, 4e-6) if gap_tol is None else float(gap_tol)
    value, up, cells, trunc = _upper(region, h, tol, max_cells, workers)
    return IntegralEstimate(
        region.name, mode, value, up, cells, h, 0.0, time.perf_counter() - t0, trunc
    )


# -- report ------------------------------------------------------------------


@dataclass
class DeficiencyReport:
    gamma: float
    mode: str
    w712_reading: str
    rows: dict[str, IntegralEstimate]
    alternates: dict[str, IntegralEstimate] = field(default_factory=dict)

    def figure(self, name: str) -> float:
        r = self.rows[name]
        return r.upper if self.mode == "upper" else r.value

    @property
    def S5(self) -> float:
        return math.fsum(self.figure(n) for n in ("U531", "V5331_primes", "V5331_almost", "U5333"))

    @property
    def S7(self) -> float:
        return math.fsum(self.figure(n) for n in ("W712", "S713", "S72"))

    @property
    def S8(self) -> float:
        return self.figure("S8")

    @property
    def final(self) -> float:
        return 1.0 - self.S5 - self.S7 - self.S8

    def to_dict(self) -> dict:
        return {
            "gamma": self.gamma,
            "mode": self.mode,
            "w712_reading": self.w712_reading,
            "rows": {k: v.to_dict() for k, v in self.rows.items()},
            "alternates": {k: v.to_dict() for k, v in self.alternates.items()},
            "S5": self.S5,
            "S7": self.S7,
            "S8": self.S8,
            "final": self.final,
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, **kw)


def total_deficiency(
    gamma: float = 1 / 19,
    mode: str = "upper",
    resolution: float | dict | None = None,
    w712_reading: str = "p2p3",
    alternate_w712: bool = False,
    regions: dict[str, Region] | None = None,
    **kw,
) -> DeficiencyReport:
    """Per-region deficiencies plus the S5 / S7 / S8 aggregates."""
    if not 1 / 19 - 1e-9 <= gamma < 0.25:
        raise ValueError("gamma must lie in [1/19, 1/4)")
    regs = regions or all_regions(gamma, w712_reading)

    def res_for(reg):
        if isinstance(resolution, dict):
            return resolution.get(reg.name, resolution.get(reg.dimension))
        return resolution

    rows = {n: deficiency(regs[n], mode, resolution=res_for(regs[n]), **kw) for n in REGION_NAMES}
    alternates = {}
    if alternate_w712:
        other = "literal" if w712_reading == "p2p3" else "p2p3"
        reg = build_region("W712", gamma, other)
        alternates[f"W712[{other}]"] = deficiency(reg, mode, resolution=res_for(reg), **kw)
    return DeficiencyReport(gamma, mode, w712_reading, rows, alternates)


CSV_COLUMNS = ("region", "mode", "value", "upper", "paper_bound", "pass", "cells", "seconds")


def report_rows(report: DeficiencyReport, targets: dict[str, float] | None = None, tol: float = 0.02):
    targets = targets or {}
    items = list(report.rows.items()) + list(report.alternates.items())
    out = []
    for name, est in items:
        bound = targets.get(name)
        fig = est.upper if report.mode == "upper" else est.value
        if bound is None:
            ok = None
        elif report.mode == "upper":
            ok = fig <= bound * (1 + tol)
        else:
            ok = fig <= bound
        out.append(
            {
                "region": name,
                "mode": est.mode,
                "value": est.value,
                "upper": est.upper,
                "paper_bound": bound,
                "pass": ok,
                "cells": est.cells,
                "seconds": round(est.seconds, 3),
            }
        )
    return out


def report_csv(report: DeficiencyReport, targets=None, tol: float = 0.02) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    w.writeheader()
    for row in report_rows(report, targets, tol):
        w.writerow({k: ("" if v is None else v) for k, v in row.items()})
    return buf.getvalue()
