"""Buchstab's function omega(u).

omega(u) = 1/u on [1, 2], and for u > 2 it is the continuous solution of the
delay equation (u omega(u))' = omega(u - 1).  On [2, 3] this integrates to
(1 + log(u - 1))/u.  Beyond u = 3 the values come from a precomputed grid built
once per process by trapezoidal integration of the delay equation, one unit
interval at a time.

Two evaluation routes exist:

* ``omega_exact`` -- closed forms on [1, 3], grid interpolation beyond.
* ``omega_upper`` -- the piecewise upper envelope used for rigorous bounds,
  with the constants 0.5644 on [3, 4) and 0.5617 on [4, inf).

Both are zero below u = 1 when called through the vectorised kernels
(``omega_vec`` / ``omega_upper``); the scalar ``omega_exact`` rejects u < 1.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np

EULER_GAMMA = 0.5772156649015329
OMEGA_LIMIT = math.exp(-EULER_GAMMA)

UPPER_3_4 = 0.5644
UPPER_4_INF = 0.5617

# argmax of (1 + log(u-1))/u on [2, 3]: 1/(u-1) = log(u-1)
_PEAK_U = 1.0 + 1.0 / 0.5671432904097838  # 1 + 1/W(1)

DEFAULT_STEP = 1e-4
DEFAULT_U_MAX = 40.0


class DomainError(ValueError):
    pass


@dataclass(frozen=True)
class BuchstabGrid:
    """omega sampled at u = 1 + i*step for 0 <= i <= (u_max - 1)/step."""

    u_max: float
    step: float
    values: np.ndarray

    @property
    def nodes(self) -> np.ndarray:
        return 1.0 + self.step * np.arange(len(self.values))

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        out = np.interp(u, self.nodes, self.values)
        return np.where(u > self.u_max, OMEGA_LIMIT, out)


def _closed_form(u: np.ndarray) -> np.ndarray:
    out = np.empty_like(u)
    low = u <= 2.0
    out[low] = 1.0 / u[low]
    hi = ~low
    out[hi] = (1.0 + np.log(u[hi] - 1.0)) / u[hi]
    return out


def build_grid(u_max: float = DEFAULT_U_MAX, step: float = DEFAULT_STEP) -> BuchstabGrid:
    """Integrate the delay equation on [1, u_max] with a fixed trapezoidal step."""
    if u_max < 4:
        raise DomainError("u_max must be at least 4")
    per_unit = int(round(1.0 / step))
    if per_unit < 1 or abs(per_unit * step - 1.0) > 1e-12:
        raise DomainError("step must divide 1 exactly")
    units = int(math.ceil(u_max - 1.0))
    n = units * per_unit + 1
    u = 1.0 + step * np.arange(n)
    vals = np.empty(n)
    head = 2 * per_unit + 1  # nodes in [1, 3]
    vals[:head] = _closed_form(u[:head])

    # u*omega(u) on [k, k+1] = k*omega(k) + int_{k}^{u} omega(t-1) dt, k >= 3
    for k in range(2, units):
        start = k * per_unit
        lagged = vals[start - per_unit : start + 1]
        incr = 0.5 * step * (lagged[:-1] + lagged[1:])
        uw = u[start] * vals[start] + np.concatenate(([0.0], np.cumsum(incr)))
        vals[start : start + per_unit + 1] = uw / u[start : start + per_unit + 1]
    return BuchstabGrid(u_max=float(u[-1]), step=step, values=vals)


@functools.lru_cache(maxsize=4)
def get_grid(u_max: float = DEFAULT_U_MAX, step: float = DEFAULT_STEP) -> BuchstabGrid:
    grid = build_grid(u_max, step)
    grid.values.setflags(write=False)
    return grid


def omega_vec(u) -> np.ndarray:
    """omega on arrays, zero for u < 1 (kernels integrate right up to that edge)."""
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    closed = (u >= 1.0) & (u <= 3.0)
    out[closed] = _closed_form(u[closed])
    far = u > 3.0
    if np.any(far):
        out[far] = get_grid()(u[far])
    return out


def omega_exact(u):
    """omega(u) for u >= 1; accepts scalars or arrays."""
    arr = np.asarray(u, dtype=float)
    if np.any(~(arr >= 1.0)):
        raise DomainError(f"omega is only defined here for u >= 1, got {u!r}")
    out = omega_vec(arr)
    return float(out) if out.ndim == 0 else out


def omega_upper(u):
    """Piecewise upper envelope of omega."""
    arr = np.asarray(u, dtype=float)
    out = np.zeros_like(arr)
    a = (arr >= 1) & (arr < 2)
    out[a] = 1.0 / arr[a]
    b = (arr >= 2) & (arr < 3)
    out[b] = (1.0 + np.log(arr[b] - 1.0)) / arr[b]
    out[(arr >= 3) & (arr < 4)] = UPPER_3_4
    out[arr >= 4] = UPPER_4_INF
    return float(out) if out.ndim == 0 else out


def _log_piece(u):
    return (1.0 + np.log(u - 1.0)) / u


def omega_upper_sup(lo, hi) -> np.ndarray:
    """sup of omega_upper over [lo, hi], elementwise.

    The envelope is not monotone: 1/u falls on [1, 2), the log piece rises to
    its peak near u = 2.763 then falls, and the constant tail steps down.
    """
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    out = np.zeros(np.broadcast(lo, hi).shape)
    lo, hi = np.broadcast_to(lo, out.shape), np.broadcast_to(hi, out.shape)

    m = (hi >= 1) & (lo < 2)
    out[m] = np.maximum(out[m], 1.0 / np.maximum(lo[m], 1.0))

    m = (hi >= 2) & (lo < 3)
    if np.any(m):
        a = np.maximum(lo[m], 2.0)
        b = np.minimum(hi[m], 3.0)
        at = np.clip(_PEAK_U, a, b)
        out[m] = np.maximum(out[m], _log_piece(at))

    m = (hi >= 3) & (lo < 4)
    out[m] = np.maximum(out[m], UPPER_3_4)
    m = hi >= 4
    out[m] = np.maximum(out[m], UPPER_4_INF)
    return out


def omega_upper_inf(lo, hi) -> np.ndarray:
    """inf of omega_upper over [lo, hi], elementwise (zero if lo < 1)."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    shape = np.broadcast(lo, hi).shape
    lo, hi = np.broadcast_to(lo, shape), np.broadcast_to(hi, shape)
    out = np.full(shape, np.inf)

    m = (hi >= 1) & (lo < 2)
    out[m] = np.minimum(out[m], 1.0 / np.minimum(hi[m], 2.0))
    m = (hi >= 2) & (lo < 3)
    if np.any(m):
        a = np.maximum(lo[m], 2.0)
        b = np.minimum(hi[m], 3.0 - 1e-15)
        out[m] = np.minimum(out[m], np.minimum(_log_piece(a), _log_piece(b)))
    m = (hi >= 3) & (lo < 4)
    out[m] = np.minimum(out[m], UPPER_3_4)
    m = hi >= 4
    out[m] = np.minimum(out[m], UPPER_4_INF)
    out[lo < 1] = 0.0
    return out


def omega2(alpha, gamma: float, mode: str = "exact"):
    """Role-reversal weight omega((1-gamma-sum alpha)/gamma) * omega(alpha1/alpha0).

    ``alpha`` is a length-4 sequence (or an (n, 4) array).  Arguments that fall
    below 1 make the corresponding factor vanish.
    """
    a = np.asarray(alpha, dtype=float)
    if a.shape[-1] != 4:
        raise DomainError("omega2 takes four exponents (alpha0..alpha3)")
    if gamma <= 0:
        raise DomainError("gamma must be positive")
    if np.any(a[..., 0] <= 0):
        raise DomainError("alpha0 must be positive")
    fn = {"exact": omega_vec, "upper": omega_upper}.get(mode)
    if fn is None:
        raise ValueError(f"unknown mode {mode!r}")
    first = (1.0 - gamma - a.sum(axis=-1)) / gamma
    second = a[..., 1] / a[..., 0]
    out = np.asarray(fn(first)) * np.asarray(fn(second))
    return float(out) if out.ndim == 0 else out
