"""Desk-scale arithmetic checks: factoring, interval scans, rough and smooth
number counts, prime reciprocal sums.

All integers stay below 2^63 so numpy int64 arrays can hold them.
"""
from __future__ import annotations

import functools
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .buchstab import omega_exact

INT64_MAX = 2**63 - 1
TRIAL_LIMIT = 10**6
SEGMENT = 1 << 20
MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)  # deterministic below 3.3e24


class RangeError(ValueError):
    pass


def primes_upto(n: int) -> np.ndarray:
    """All primes <= n (plain sieve of Eratosthenes)."""
    if n < 2:
        return np.zeros(0, dtype=np.int64)
    s = np.ones(n + 1, dtype=bool)
    s[:2] = False
    s[4::2] = False
    for p in range(3, math.isqrt(n) + 1, 2):
        if s[p]:
            s[p * p :: 2 * p] = False
    return np.nonzero(s)[0].astype(np.int64)


@functools.lru_cache(maxsize=1)
def _trial_primes() -> np.ndarray:
    return primes_upto(TRIAL_LIMIT)


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin for 64-bit n."""
    if n < 2:
        return False
    for p in MR_BASES:
        if n % p == 0:
            return n == p
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in MR_BASES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def pollard_brent(n: int) -> int:
    """A non-trivial factor of an odd composite n; deterministic parameter sweep."""
    if n % 2 == 0:
        return 2
    for c in range(1, 200):
        y, m, g, r, q = 2, 128, 1, 1, 1
        f = lambda v: (v * v + c) % n  # noqa: E731
        x = ys = y
        while g == 1:
            x = y
            for _ in range(r):
                y = f(y)
            k = 0
            while k < r and g == 1:
                ys = y
                for _ in range(min(m, r - k)):
                    y = f(y)
                    q = q * abs(x - y) % n
                g = math.gcd(q, n)
                k += m
            r *= 2
        if g == n:
            g = 1
            while g == 1:
                ys = f(ys)
                g = math.gcd(abs(x - ys), n)
        if g != n:
            return g
    raise ArithmeticError(f"rho failed to split {n}")


def factorize(n: int) -> list[int]:
    """Prime factors of n with multiplicity, ascending."""
    if n < 1:
        raise ValueError("n must be positive")
    if n > INT64_MAX:
        raise RangeError("n exceeds 2^63 - 1")
    out: list[int] = []
    if n == 1:
        return out
    tp = _trial_primes()
    hits = tp[(np.int64(n) % tp) == 0]
    for p in hits.tolist():
        while n % p == 0:
            out.append(p)
            n //= p
    stack = [n] if n > 1 else []
    while stack:
        m = stack.pop()
        if m < TRIAL_LIMIT**2 or is_prime(m):
            # no factor below the trial limit, so m < limit^2 forces m prime
            out.append(m)
            continue
        d = pollard_brent(m)
        stack.extend((d, m // d))
    return sorted(out)


def largest_prime_factor(n: int) -> int:
    if n < 2:
        raise ValueError("largest_prime_factor needs n >= 2")
    return factorize(n)[-1]


# -- segmented scans ---------------------------------------------------------


def _segment_lpf(start: int, stop: int, primes: np.ndarray, limit: int | None = None):
    """For n in [start, stop): (n, cofactor, largest divided prime).

    Divides out every prime in ``primes`` (with multiplicity).  If ``primes``
    covers sqrt(stop), the cofactor is 1 or the prime P+(n).
    """
    n = np.arange(start, stop, dtype=np.int64)
    rem = n.copy()
    big = np.ones_like(n)
    for p in primes.tolist():
        if limit is not None and p > limit:
            break
        pk = p
        while pk < stop:
            first = (-start) % pk
            if first >= len(n):
                break
            rem[first::pk] //= p
            big[first::pk] = p
            if pk > (stop - 1) // p:
                break
            pk *= p
    return n, rem, big


def _segments(lo: int, hi: int, size: int = SEGMENT):
    """Half-open [a, b) pieces covering [lo, hi)."""
    return [(a, min(a + size, hi)) for a in range(lo, hi, size)]


def _map_segments(fn, segs, workers: int):
    if workers <= 1 or len(segs) <= 1:
        return [fn(a, b) for a, b in segs]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(lambda s: fn(*s), segs))


@dataclass
class IntervalReport:
    x: int
    y: int
    gamma: float
    beta_exp: float
    threshold: float
    witnesses: list[tuple[int, int]] = field(default_factory=list)
    found: bool = False
    scanned: int = 0
    scan_time: float = 0.0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["witnesses"] = [list(w) for w in self.witnesses]
        return d


def interval_length(x: int, beta_exp: float) -> int:
    return math.ceil(math.sqrt(x) * math.log(x) ** beta_exp)


def check_interval(
    x: int,
    gamma: float = 1 / 19,
    beta_exp: float = 1.39,
    max_witnesses: int | None = 10,
    verify: bool = True,
    workers: int = 1,
) -> IntervalReport:
    """Scan [x, x+y] for n with P+(n) > x^{1-gamma}, y = ceil(sqrt(x) (ln x)^beta)."""
    if x < 1000:
        raise RangeError("x must be at least 1000")
    if not 0 < gamma < 1:
        raise ValueError("gamma must lie in (0, 1)")
    t0 = time.perf_counter()
    y = interval_length(x, beta_exp)
    if x + y + 1 > INT64_MAX:
        raise RangeError("x + y overflows 64 bits")
    threshold = x ** (1.0 - gamma)
    primes = primes_upto(math.isqrt(x + y) + 1)
    report = IntervalReport(x, y, gamma, beta_exp, threshold)

    def scan(a, b):
        n, rem, big = _segment_lpf(a, b, primes)
        lpf = np.maximum(rem, big)
        hit = lpf > threshold
        return list(zip(n[hit].tolist(), lpf[hit].tolist())), b - a

    segs = _segments(x, x + y + 1)
    # process in batches so a capped scan can stop early
    step = max(1, workers)
    for i in range(0, len(segs), step):
        for wits, count in _map_segments(scan, segs[i : i + step], workers):
            report.witnesses.extend(wits)
            report.scanned += count
        if max_witnesses is not None and len(report.witnesses) >= max_witnesses:
            del report.witnesses[max_witnesses:]
            break
    report.found = bool(report.witnesses)
    if verify:
        for n, p in report.witnesses:
            if not (n % p == 0 and is_prime(p) and p > threshold and x <= n <= x + y):
                raise ArithmeticError(f"witness ({n}, {p}) failed re-verification")
            if largest_prime_factor(n) != p:
                raise ArithmeticError(f"witness ({n}, {p}) disagrees with the factoriser")
    report.scan_time = time.perf_counter() - t0
    return report


def rough_count(X: int, Y: int, z: int, workers: int = 1) -> tuple[int, float]:
    """#{n in (X, X+Y] : no prime factor <= z} and omega(ln X/ln z) Y/ln z."""
    if Y == 0:
        return 0, 0.0
    if Y < 0 or not 2 <= z < X:
        raise ValueError("need Y >= 0 and 2 <= z < X")
    if Y < round(X ** (1 / 3)):
        raise ValueError("Y must be at least X^{1/3}")
    if X + Y > INT64_MAX:
        raise RangeError("X + Y overflows 64 bits")
    primes = primes_upto(z)

    def seg(a, b):
        keep = np.ones(b - a, dtype=bool)
        for p in primes.tolist():
            keep[(-a) % p :: p] = False
        return int(keep.sum())

    count = sum(_map_segments(seg, _segments(X + 1, X + Y + 1), workers))
    predicted = omega_exact(math.log(X) / math.log(z)) * Y / math.log(z)
    return count, predicted


SMOOTH_MAX = 10**8


def smooth_count(X: int, Z: int, workers: int = 1) -> tuple[int, float]:
    """#{n in (X, eX] : P+(n) < Z} and the bound X e^{-u/2}, u = ln X/ln Z."""
    if not 2 <= Z <= X:
        raise ValueError("need 2 <= Z <= X")
    if X > SMOOTH_MAX:
        raise RangeError(f"X above {SMOOTH_MAX} is too large for a desk scan")
    top = math.floor(math.e * X)
    primes = primes_upto(Z - 1)

    def seg(a, b):
        _, rem, _ = _segment_lpf(a, b, primes)
        return int((rem == 1).sum())

    count = sum(_map_segments(seg, _segments(X + 1, top + 1), workers))
    u = math.log(X) / math.log(Z)
    return count, X * math.exp(-u / 2)


PRIME_SUM_MAX = 10**10


def prime_reciprocal_sum(lo: int, hi: int, workers: int = 1) -> float:
    """Sum of 1/p over primes lo < p <= hi."""
    if hi == lo:
        return 0.0
    if not 2 <= lo < hi:
        raise ValueError("need 2 <= lo < hi")
    if hi > PRIME_SUM_MAX:
        raise RangeError(f"hi above {PRIME_SUM_MAX}")
    base = primes_upto(math.isqrt(hi) + 1)

    def seg(a, b):
        flags = np.ones(b - a, dtype=bool)
        for p in base.tolist():
            if p * p >= b:
                break
            start = max(p * p, a + (-a) % p)
            flags[start - a :: p] = False
        if a < 2:
            flags[: 2 - a] = False
        ps = np.nonzero(flags)[0] + a
        return math.fsum((1.0 / ps).tolist())

    parts = _map_segments(seg, _segments(lo + 1, hi + 1), workers)
    return math.fsum(parts)
