"""Parameter machinery: the interval-length exponent beta(r), the sieve
constants and prime ranges I_j, and the trapezoidal smoothing f_{eta,xi}.

Every magnitude is stored as a natural logarithm (``*_log`` fields) because x
itself is far too large to represent.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

from .buchstab import DomainError

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def beta_of_r(r: float) -> float:
    """Exponent of log x in the interval length as a function of the ratio r."""
    if not 1.0 < r < 2.0:
        raise DomainError(f"r must lie in (1, 2), got {r}")
    ell = -math.log(r - 1.0)  # log(1/theta) with theta = r - 1
    num = math.log(1.0 + ell) - math.log(ell) + math.log(2.0)
    return num / (2.0 * math.log(r)) - 0.5


def golden_section(f, lo: float, hi: float, tol: float = 1e-6, max_iter: int = 200):
    """Minimise a unimodal f on [lo, hi]; returns (xmin, fmin, bracket_width)."""
    a, b = lo, hi
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x), b - a


def minimize_beta(tol: float = 1e-6) -> tuple[float, float]:
    # beta blows up at both ends of (1, 2); stay a hair inside
    r_star, beta_star, _ = golden_section(beta_of_r, 1.0 + 1e-9, 2.0 - 1e-9, tol=tol)
    return r_star, beta_star


def default_L(epsilon: float) -> int:
    return math.ceil(200.0 / epsilon) + 1


@dataclass(frozen=True)
class SieveParams:
    log_x: float
    gamma: float
    delta: float
    epsilon: float
    r: float
    K: int
    L: int
    theta: float
    omega_param: float
    w_log: float
    J: int
    H: int
    Q1_log: float
    Q2_log: float
    Q3_log: float
    y_log: float
    intervals: tuple = field(repr=False)

    @property
    def loglog_x(self) -> float:
        return math.log(self.log_x)

    # thresholds of the sieve decomposition
    @property
    def z_log(self) -> float:
        return self.log_x - self.L * self.epsilon * self.loglog_x

    @property
    def Z_log(self) -> float:
        return (self.gamma - 2 * self.delta) * self.log_x

    @property
    def W_log(self) -> float:
        return (0.5 - self.gamma + self.delta) * self.log_x

    @property
    def X_log(self) -> float:
        return (0.5 - self.gamma / 2 + self.delta) * self.log_x

    @property
    def V_log(self) -> float:
        return (0.5 - 2 * self.gamma + 3 * self.delta) * self.log_x

    @property
    def lambda_log(self) -> float:
        return self.y_log + 100 * self.loglog_x - self.log_x

    def interval(self, j: int) -> tuple[float, float]:
        """(lo, hi] of log p_j, 1-based."""
        return self.intervals[j - 1]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["intervals"] = [list(iv) for iv in self.intervals]
        for name in ("z_log", "Z_log", "W_log", "X_log", "V_log", "lambda_log"):
            d[name] = getattr(self, name)
        return d

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, **kw)


def y_log_formula(log_x: float, delta: float, J: int, theta: float) -> float:
    ell = math.log(1.0 / theta)
    loglog = math.log(log_x)
    return (
        0.5 * log_x
        + (-0.5 + 10 * delta) * loglog
        + 0.5 * J * (math.log(2.0) + math.log(1.0 + ell) - math.log(ell))
    )


def setup_params(
    log_x: float,
    gamma: float = 1 / 19,
    delta: float = 1e-3,
    epsilon: float = 1e-3,
    r: float = 1.625,
    K: int = 100,
    L: int | None = None,
) -> SieveParams:
    if not 0 < gamma < 0.5:
        raise DomainError("gamma must lie in (0, 1/2)")
    if delta <= 0 or epsilon <= 0:
        raise DomainError("delta and epsilon must be positive")
    if not 1 < r < 2:
        raise DomainError("r must lie in (1, 2)")
    if K < 2:
        raise DomainError("K must be at least 2")
    if L is None:
        L = default_L(epsilon)

    theta = r - 1 + epsilon
    if theta <= 1 / r:
        raise DomainError(f"theta = {theta:.6f} must exceed 1/r = {1 / r:.6f}")
    if log_x <= math.e:
        raise DomainError("log_x too small")
    loglog = math.log(log_x)
    w_log = log_x / loglog**2
    if w_log < 1:
        raise DomainError("log_x too small: w < e")
    omega_param = gamma * (r - 1) * log_x
    ratio = omega_param / math.log(K)
    if ratio <= 1:
        raise DomainError("log_x too small: omega must exceed K")
    J = math.ceil(math.log(ratio) / math.log(r))
    H = math.ceil(math.sqrt(loglog) / (10 * delta))
    Q1_log = 10 * delta * loglog
    Q2_log = H * Q1_log
    Q3_log = 2 * math.floor(log_x**0.9)

    intervals = []
    for j in range(1, J + 1):
        scale = omega_param * r ** (-j)
        lo = (1 - 2 * epsilon) * scale if j <= K else theta * scale
        intervals.append((lo, (1 - epsilon) * scale))

    return SieveParams(
        log_x=float(log_x),
        gamma=gamma,
        delta=delta,
        epsilon=epsilon,
        r=r,
        K=K,
        L=L,
        theta=theta,
        omega_param=omega_param,
        w_log=w_log,
        J=J,
        H=H,
        Q1_log=Q1_log,
        Q2_log=Q2_log,
        Q3_log=float(Q3_log),
        y_log=y_log_formula(log_x, delta, J, theta),
        intervals=tuple(intervals),
    )


def f_eta_xi(z: float, eta: float, xi: float) -> float:
    """Trapezoid: 1 on [1-eta, 1+eta], linear ramps of width xi, 0 outside."""
    _check_smoothing(eta, xi)
    if 1 - eta <= z <= 1 + eta:
        return 1.0
    if 1 + eta < z <= 1 + eta + xi:
        return (1 - z + eta + xi) / xi
    if 1 - eta - xi <= z < 1 - eta:
        return (z - 1 + eta + xi) / xi
    return 0.0


def mellin_f(s: complex, eta: float, xi: float) -> complex:
    """Closed-form Mellin transform -int z^s df(z) of the trapezoid."""
    _check_smoothing(eta, xi)
    s = complex(s)
    if s == -1:
        raise DomainError("the closed form has a removable pole at s = -1")
    p = s + 1
    # a^p - b^p = b^p * expm1(p log(a/b)); avoids cancelling the O(1) parts
    num = (1 + eta) ** p * _cexpm1(p * math.log1p(xi / (1 + eta))) + (1 - eta) ** p * _cexpm1(
        p * math.log1p(-xi / (1 - eta))
    )
    return num / (xi * p)


def _cexpm1(w: complex) -> complex:
    a, b = w.real, w.imag
    em1 = math.expm1(a)
    re = em1 * math.cos(b) - 2.0 * math.sin(0.5 * b) ** 2
    return complex(re, math.exp(a) * math.sin(b))


def _check_smoothing(eta: float, xi: float) -> None:
    if eta <= 0 or xi <= 0 or 1 - eta - xi <= 0:
        raise DomainError("need eta, xi > 0 and eta + xi < 1")
