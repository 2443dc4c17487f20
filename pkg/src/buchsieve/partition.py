"""The partition walk that splits p_1 ... p_J into two sides of size ~ z^{1/2}.

Everything is additive in log units.  Write A = g + alpha + log Q1 + log Q2
for the base of the first side (pi), B = g' for the second side (tau),
h = (log z)/2 and Lw_j = r^{-j} log(omega).

The walk starts on pi.  At index j it adds log p_j to the current side; for
j < J it switches side iff

    base + prefix_side(j) > h - Lw_{j+1}

and switching is still allowed, i.e. the previous switch index is at most
J - C with C = C(epsilon) the terminal constant.  After the first switch past
J - C the remaining indices go to the current side.

Membership intervals D are the intersection, over the indices of one side,
of the rays implied by each continue/stop decision, plus the balance window
|base + sum_side - h| <= bal.  Every ray for an index of pi involves only
primes of pi, so D_pi depends only on (p_j)_{j in pi}.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .sieve_setup import SieveParams, setup_params

DEFAULT_ASYMP_LOG = 2.0  # log of the global "asymp" constant (C = e^2)
MAX_BRUTE_J = 20


class PartitionError(ValueError):
    pass


class PartitionInputError(PartitionError):
    pass


class WalkFailure(PartitionError):
    pass


@dataclass(frozen=True)
class Interval:
    """{t : lo < t <= hi} when lo_open, else {t : lo <= t <= hi}."""

    lo: float
    hi: float
    lo_open: bool = True

    @property
    def empty(self) -> bool:
        return self.lo > self.hi or (self.lo_open and self.lo == self.hi)

    def __contains__(self, t: float) -> bool:
        return (t > self.lo if self.lo_open else t >= self.lo) and t <= self.hi

    def to_list(self) -> list:
        return [self.lo, self.hi]


@dataclass(frozen=True)
class PartitionInput:
    params: SieveParams
    g: int
    g_prime: int
    alpha: int
    primes_log: tuple[float, ...]
    asymp_log: float = DEFAULT_ASYMP_LOG
    C_term: int | None = None
    balance: float | None = None

    @property
    def J(self) -> int:
        return len(self.primes_log)

    @property
    def A(self) -> float:
        p = self.params
        return self.g + self.alpha + p.Q1_log + p.Q2_log

    @property
    def B(self) -> float:
        return float(self.g_prime)

    @property
    def half(self) -> float:
        return self.params.z_log / 2

    @property
    def terminal(self) -> int:
        return self.C_term if self.C_term is not None else terminal_constant(self.params, self.asymp_log)

    @property
    def balance_bound(self) -> float:
        if self.balance is not None:
            return self.balance
        return derived_balance(self.params, self.J, self.terminal, self.asymp_log)


def terminal_constant(params: SieveParams, asymp_log: float = DEFAULT_ASYMP_LOG) -> int:
    """Smallest C > 3 + log(log C_asymp / (eps log K)) / log r, and at least 2.

    Past index J - C the margin eps * Lw_{j+2} no longer beats the implied
    constants, so the walk stops switching there.
    """
    p = params
    bound = 3.0 + math.log(asymp_log / (p.epsilon * math.log(p.K))) / math.log(p.r)
    return max(2, math.floor(bound) + 1)


def derived_balance(params: SieveParams, J: int, C: int, asymp_log: float = DEFAULT_ASYMP_LOG) -> float:
    """Worst-case |side - h| the walk can leave, in log units."""
    p = params
    lw_J = p.omega_param * p.r ** (-J)
    eps_rel = p.epsilon / (p.r - 1)
    return asymp_log + max(p.r ** (C - 2) * lw_J, asymp_log + (1 + eps_rel) * lw_J)


def range_violations(inp: PartitionInput) -> list[str]:
    """Asymptotic size hypotheses on alpha, g and g' that fail."""
    p = inp.params
    lx = p.log_x
    a0 = math.floor(lx**0.9)
    out = []
    if not a0 <= inp.alpha < 2 * a0:
        out.append(f"alpha={inp.alpha} outside [{a0}, {2 * a0})")
    g_lo = (0.5 - p.gamma + p.delta / 4) * lx
    if not g_lo <= inp.g <= (0.5 - p.gamma / 2 + 2 * p.delta) * lx:
        out.append(f"g={inp.g} outside its range")
    if not g_lo <= inp.g_prime <= (0.5 - p.delta / 4) * lx:
        out.append(f"g'={inp.g_prime} outside its range")
    return out


def validate(inp: PartitionInput, strict_ranges: bool = False) -> None:
    p = inp.params
    if inp.J < 1:
        raise PartitionInputError("need at least one prime")
    if inp.J > len(p.intervals):
        raise PartitionInputError(f"J={inp.J} exceeds the {len(p.intervals)} configured intervals")
    for name in ("g", "g_prime", "alpha"):
        if int(getattr(inp, name)) != getattr(inp, name):
            raise PartitionInputError(f"{name} must be an integer")
    for j, lp in enumerate(inp.primes_log, start=1):
        lo, hi = p.interval(j)
        if not lo < lp <= hi:
            raise PartitionInputError(f"log p_{j}={lp:.6g} outside I_{j}=({lo:.6g}, {hi:.6g}]")
    total = inp.A + inp.B + math.fsum(inp.primes_log)
    if abs(total - 2 * inp.half) > inp.asymp_log:
        raise PartitionInputError(
            f"product is not ~ z: log-excess {total - 2 * inp.half:.4g} exceeds {inp.asymp_log}"
        )
    # with a single prime only one side is admissible and balance alone decides
    if inp.J > 1:
        if inp.A + inp.primes_log[0] > inp.half:
            raise PartitionInputError("the first prime already pushes the pi side past z^{1/2}")
        if inp.A + math.fsum(inp.primes_log) <= inp.half:
            raise PartitionInputError("all primes together do not push the pi side past z^{1/2}")
    if strict_ranges:
        bad = range_violations(inp)
        if bad:
            raise PartitionInputError("; ".join(bad))


@dataclass
class PartitionResult:
    pi: tuple[int, ...]
    tau: tuple[int, ...]
    D_pi: Interval
    D_tau: Interval
    switches: tuple[int, ...] = ()
    trace: list[dict] = field(default_factory=list, compare=False)

    def key(self):
        return self.pi, self.tau

    def to_dict(self) -> dict:
        return {
            "pi": list(self.pi),
            "tau": list(self.tau),
            "D_pi": self.D_pi.to_list(),
            "D_tau": self.D_tau.to_list(),
            "switches": list(self.switches),
            "trace": self.trace,
        }


def _thresholds(inp: PartitionInput) -> np.ndarray:
    """h - Lw_{j+1} for j = 1..J (index j-1)."""
    p = inp.params
    j = np.arange(1, inp.J + 1)
    return inp.half - p.omega_param * p.r ** (-(j + 1.0))


def run_partition(inp: PartitionInput, strict_ranges: bool = False, trace: bool = False) -> PartitionResult:
    validate(inp, strict_ranges)
    J, C, bal = inp.J, inp.terminal, inp.balance_bound
    thr = _thresholds(inp)
    base = {0: inp.A, 1: inp.B}  # 0 = pi, 1 = tau
    prefix = {0: 0.0, 1: 0.0}
    side, last_switch = 0, 0
    sides = np.zeros(J, dtype=bool)
    switches = []
    rows = []
    for j in range(1, J + 1):
        lp = inp.primes_log[j - 1]
        sides[j - 1] = bool(side)
        prefix[side] += lp
        action = "end"
        if j < J:
            if last_switch > J - C:
                action = "terminal"
            elif base[side] > thr[j - 1] - prefix[side]:
                action = "stop"
            else:
                action = "continue"
        if trace:
            rows.append(
                {
                    "j": j,
                    "side": "pi" if side == 0 else "tau",
                    "log_p": lp,
                    "sum_pi": base[0] + prefix[0],
                    "sum_tau": base[1] + prefix[1],
                    "threshold": float(thr[j - 1]) if j < J else inp.half,
                    "action": action,
                    "ray": _ray(action, float(thr[j - 1] - prefix[side])) if j < J else None,
                }
            )
        if action == "stop":
            switches.append(j)
            last_switch = j
            side = 1 - side
    for s in (0, 1):
        lo, hi = inp.half - bal - prefix[s], inp.half + bal - prefix[s]
        if not lo <= base[s] <= hi:
            name = "pi" if s == 0 else "tau"
            raise WalkFailure(
                f"walk left the {name} side off balance by {base[s] + prefix[s] - inp.half:.4g} "
                f"(bound {bal:.4g}, C(eps)={C}, J={J}); parameters are outside the proven regime"
            )
    D_pi, D_tau = membership_intervals(inp, sides)
    pi = tuple(int(i) + 1 for i in np.nonzero(~sides)[0])
    tau = tuple(int(i) + 1 for i in np.nonzero(sides)[0])
    return PartitionResult(pi, tau, D_pi, D_tau, tuple(switches), rows)


def _ray(action: str, t: float):
    if action == "continue":
        return ["-inf", t]
    if action == "stop":
        return [t, "inf"]
    return None


def _intervals_vec(inp: PartitionInput, masks: np.ndarray):
    """D bounds for many assignments at once.

    ``masks[k, j]`` is True when index j+1 goes to tau.  Returns per-side
    (lo_open, lo_closed, hi, feasible) arrays of shape (n, 2).
    """
    J, C, bal = inp.J, inp.terminal, inp.balance_bound
    n = len(masks)
    lp = np.asarray(inp.primes_log, dtype=float)
    thr = _thresholds(inp)
    on = np.stack([~masks, masks], axis=2)  # (n, J, 2)
    pref = np.cumsum(np.where(on, lp[None, :, None], 0.0), axis=1)

    idx = np.arange(1, J + 1)
    switch = np.zeros((n, J), dtype=bool)
    switch[:, :-1] = masks[:, :-1] != masks[:, 1:]
    last = np.maximum.accumulate(np.where(switch, idx, 0), axis=1)
    before = np.zeros((n, J), dtype=int)
    before[:, 1:] = last[:, :-1]
    allowed = before <= J - C
    allowed[:, -1] = False

    feasible = ~masks[:, 0]  # index 1 is always on pi
    feasible &= ~(switch & ~allowed).any(axis=1)

    lo_open = np.full((n, 2), -np.inf)
    hi = np.full((n, 2), np.inf)
    side = masks.astype(int)
    rows = np.arange(n)
    for j in range(J - 1):
        act = allowed[:, j]
        s = side[:, j]
        t = thr[j] - pref[rows, j, s]
        stop = act & switch[:, j]
        cont = act & ~switch[:, j]
        lo_open[rows[stop], s[stop]] = np.maximum(lo_open[rows[stop], s[stop]], t[stop])
        hi[rows[cont], s[cont]] = np.minimum(hi[rows[cont], s[cont]], t[cont])
    tot = pref[:, -1, :]
    lo_closed = inp.half - bal - tot
    hi = np.minimum(hi, inp.half + bal - tot)
    return lo_open, lo_closed, hi, feasible


def membership_intervals(inp: PartitionInput, tau_mask) -> tuple[Interval, Interval]:
    lo_o, lo_c, hi, ok = _intervals_vec(inp, np.asarray(tau_mask, dtype=bool)[None, :])
    out = []
    for s in (0, 1):
        if not ok[0]:
            out.append(Interval(math.inf, -math.inf))
        elif lo_o[0, s] >= lo_c[0, s]:
            out.append(Interval(float(lo_o[0, s]), float(hi[0, s]), True))
        else:
            out.append(Interval(float(lo_c[0, s]), float(hi[0, s]), False))
    return out[0], out[1]


def bruteforce_partition(inp: PartitionInput) -> list[PartitionResult]:
    """Every assignment whose D intervals contain (A, B)."""
    J = inp.J
    if J > MAX_BRUTE_J:
        raise PartitionError(f"brute force limited to J <= {MAX_BRUTE_J}")
    codes = np.arange(2**J, dtype=np.int64)
    masks = ((codes[:, None] >> np.arange(J)) & 1).astype(bool)
    lo_o, lo_c, hi, ok = _intervals_vec(inp, masks)
    vals = np.array([inp.A, inp.B])
    hit = ok & np.all((vals > lo_o) & (vals >= lo_c) & (vals <= hi), axis=1)
    out = []
    for k in np.nonzero(hit)[0]:
        m = masks[k]
        D_pi, D_tau = membership_intervals(inp, m)
        pi = tuple(int(i) + 1 for i in np.nonzero(~m)[0])
        tau = tuple(int(i) + 1 for i in np.nonzero(m)[0])
        sw = tuple(int(i) + 1 for i in np.nonzero(m[:-1] != m[1:])[0])
        out.append(PartitionResult(pi, tau, D_pi, D_tau, sw))
    return out


# -- instances ---------------------------------------------------------------


def regime_params(J: int, epsilon: float = 0.1, gamma: float = 1 / 19, r: float = 1.625,
                  asymp_log: float = DEFAULT_ASYMP_LOG, C_target: int | None = None) -> SieveParams:
    """Parameters with exactly J intervals and C(eps) <= J - 1.

    K is raised until the terminal constant is small enough, then log x is
    placed in the middle of the window that yields J intervals.
    """
    if J < 3:
        raise PartitionError("regime_params needs J >= 3")
    C = C_target if C_target is not None else min(J - 1, 4)
    # need eps * log K * r^{C-3} > asymp_log
    logK = 1.01 * asymp_log / (epsilon * r ** (C - 3))
    K = max(2, math.ceil(math.exp(logK)))
    logK = math.log(K)
    ratio = r ** (J - 0.5)  # log(omega)/log K strictly inside (r^{J-1}, r^J]
    log_x = ratio * logK / (gamma * (r - 1))
    p = setup_params(log_x, gamma=gamma, epsilon=epsilon, r=r, K=K)
    if p.J != J:
        raise PartitionError(f"could not place J={J} (got {p.J})")
    return p


def random_instance(params: SieveParams, rng: np.random.Generator, J: int | None = None,
                    asymp_log: float = DEFAULT_ASYMP_LOG, max_tries: int = 1000) -> PartitionInput:
    """Random valid input: primes uniform in log space inside I_j, then the
    bases chosen so the global product is ~ z and the walk hypotheses hold."""
    J = params.J if J is None else J
    h = params.z_log / 2
    a0 = math.floor(params.log_x**0.9)
    qq = params.Q1_log + params.Q2_log
    for _ in range(max_tries):
        lp = np.array([rng.uniform(*params.interval(j)) for j in range(1, J + 1)])
        # (lo, hi] -> nudge off the open end
        lp = np.where(lp <= [params.interval(j)[0] for j in range(1, J + 1)], np.nextafter(lp, np.inf), lp)
        total = math.fsum(lp.tolist())
        a_lo, a_hi = h - total, h - lp[0]
        if a_hi - a_lo < 2:
            continue
        target = rng.uniform(a_lo + 1, a_hi - 1)
        alpha = a0 if target - qq - a0 > 0 else 0
        g = int(round(target - qq - alpha))
        A = g + alpha + qq
        g_prime = int(round(2 * h - A - total + rng.uniform(-asymp_log / 2, asymp_log / 2)))
        inp = PartitionInput(params, g, g_prime, alpha, tuple(float(v) for v in lp), asymp_log)
        try:
            validate(inp)
        except PartitionInputError:
            continue
        return inp
    raise PartitionError("could not draw a valid instance; the parameters leave no room")


def failure_rate(params: SieveParams, n: int, seed: int = 0, **kw) -> float:
    """Fraction of random valid instances on which the walk fails."""
    rng = np.random.default_rng(seed)
    bad = 0
    for _ in range(n):
        try:
            run_partition(random_instance(params, rng, **kw))
        except WalkFailure:
            bad += 1
    return bad / n


def trace_text(res: PartitionResult) -> str:
    head = f"{'j':>3} {'side':<4} {'log p_j':>12} {'sum_pi':>14} {'sum_tau':>14} {'threshold':>14}  action"
    lines = [head]
    for r in res.trace:
        lines.append(
            f"{r['j']:>3} {r['side']:<4} {r['log_p']:>12.4f} {r['sum_pi']:>14.4f} "
            f"{r['sum_tau']:>14.4f} {r['threshold']:>14.4f}  {r['action']}"
        )
    lines.append(f"pi  = {list(res.pi)}")
    lines.append(f"tau = {list(res.tau)}")
    lines.append(f"D_pi  = ({res.D_pi.lo:.4f}, {res.D_pi.hi:.4f}]")
    lines.append(f"D_tau = ({res.D_tau.lo:.4f}, {res.D_tau.hi:.4f}]")
    return "\n".join(lines)


def trace_json(inp: PartitionInput, res: PartitionResult) -> str:
    d = res.to_dict()
    d["input"] = {
        "g": inp.g,
        "g_prime": inp.g_prime,
        "alpha": inp.alpha,
        "primes_log": list(inp.primes_log),
        "C_term": inp.terminal,
        "balance": inp.balance_bound,
    }
    return json.dumps(d, sort_keys=True)


def with_tau_perturbed(inp: PartitionInput, res: PartitionResult, rng, scale: float = 0.3) -> PartitionInput:
    """Move tau-side primes inside their intervals and shift g' to keep the
    product fixed (up to integer rounding)."""
    lp = list(inp.primes_log)
    delta = 0.0
    for j in res.tau:
        lo, hi = inp.params.interval(j)
        new = float(np.clip(lp[j - 1] + rng.uniform(-scale, scale) * (hi - lo), np.nextafter(lo, hi), hi))
        delta += new - lp[j - 1]
        lp[j - 1] = new
    return replace(inp, primes_log=tuple(lp), g_prime=int(round(inp.g_prime - delta)))
