"""Acceptance criteria 1-9.  Each test prints one PASS/FAIL line; the
terminal summary repeats them in order."""
import io
import json
import math
import sys
import time

import numpy as np
import pytest
from scipy.integrate import quad

from buchsieve import empirical, partition
from buchsieve.buchstab import omega_exact, omega_upper
from buchsieve.cli import load_targets, main
from buchsieve.integrator import total_deficiency
from buchsieve.sieve_setup import mellin_f, minimize_beta

TARGETS = load_targets()
BOUNDS = TARGETS["regions"]
TOL = TARGETS["upper_tolerance"]  # 0.02


def _cli(*argv):
    out = io.StringIO()
    t0 = time.perf_counter()
    code = main(list(argv), out=out)
    return code, out.getvalue(), time.perf_counter() - t0


@pytest.fixture(scope="module")
def upper_runs():
    """Two identical full reports in the default (upper) mode."""
    return [_cli("report", "--format", "json") for _ in range(2)]


@pytest.fixture(scope="module")
def upper_report(upper_runs):
    return json.loads(upper_runs[0][1])


def test_criterion_1_beta(acceptance):
    t0 = time.perf_counter()
    r, b = minimize_beta()
    dt = time.perf_counter() - t0
    ok = abs(r - 1.625) <= 0.002 and abs(b - 1.388) <= 0.001 and dt < 1.0
    acceptance(1, ok, f"r*={r:.6f} beta*={b:.6f} in {dt:.3f}s")
    assert ok


def test_criterion_2_deficiency_table(acceptance, upper_runs, upper_report):
    t0 = time.perf_counter()
    mid = total_deficiency(1 / 19, "midpoint")
    mid_time = time.perf_counter() - t0
    mid_bad = [n for n, b in BOUNDS.items() if not mid.rows[n].value <= b]

    rows = {r["region"]: r for r in upper_report["rows"]}
    up_bad = [n for n, b in BOUNDS.items() if not rows[n]["upper"] <= b * (1 + TOL)]
    literal = rows["W712[literal]"]["upper"]
    # the literal W712 reading may fail only if the corrected one passes
    up_ok = not up_bad
    report_time = upper_runs[0][2]
    ok = not mid_bad and up_ok and report_time <= 900 and mid_time <= 900
    detail = (
        f"midpoint failures={mid_bad or 'none'}; upper failures={up_bad or 'none'}; "
        f"W712 literal upper={literal:.5f} (info, bound x1.02={BOUNDS['W712'] * (1 + TOL):.5f}); "
        f"report {report_time:.0f}s"
    )
    acceptance(2, ok, detail)
    assert ok


def test_criterion_3_aggregates(acceptance, upper_report):
    s = upper_report["summary"]
    agg = TARGETS["aggregates"]
    ok = (
        s["S5"] <= agg["S5"] * (1 + TOL)
        and s["S7"] <= agg["S7"] * (1 + TOL)
        and s["final"] >= TARGETS["final_min"]
    )
    acceptance(3, ok, f"S5={s['S5']:.6f} S7={s['S7']:.6f} S8={s['S8']:.6f} final={s['final']:.6f}")
    assert ok


def test_criterion_4_gamma_monotone(acceptance, upper_report):
    f19 = upper_report["summary"]["final"]
    f18 = total_deficiency(1 / 18, "upper").final
    ok = f18 > f19 > 0
    acceptance(4, ok, f"final(1/18)={f18:.6f} final(1/19)={f19:.6f}")
    assert ok


def test_criterion_5_buchstab(acceptance):
    u = np.linspace(2, 3, 1001)
    closed = np.max(np.abs(omega_exact(u) - (1 + np.log(u - 1)) / u))

    # integrated delay relation: u w(u) - v w(v) = int_{v-1}^{u-1} w(t) dt
    v = 2.1
    us = np.linspace(2.2, 19.9, 178)
    resid = max(
        abs(x * omega_exact(x) - v * omega_exact(v) - quad(omega_exact, v - 1, x - 1, limit=500, points=[2.0, 3.0])[0])
        for x in us
    )
    grid = np.linspace(1, 40, 400001)
    dominated = bool(np.all(omega_exact(grid) <= omega_upper(grid) + 1e-15))
    ok = closed <= 1e-10 and resid <= 1e-6 and dominated
    acceptance(5, ok, f"closed-form err={closed:.2e} delay residual={resid:.2e} upper dominates={dominated}")
    assert ok


def test_criterion_6_partition(acceptance):
    t0 = time.perf_counter()
    agree = total = 0
    for J in (5, 8, 10, 12):
        params = partition.regime_params(J)
        rng = np.random.default_rng(J)
        for _ in range(1000):
            inp = partition.random_instance(params, rng)
            brute = partition.bruteforce_partition(inp)
            total += 1
            agree += len(brute) == 1 and brute[0].key() == partition.run_partition(inp).key()
    dt = time.perf_counter() - t0
    ok = agree == total and dt < 30
    acceptance(6, ok, f"{agree}/{total} agree in {dt:.1f}s")
    assert ok


def _mellin_oracle(s, eta, xi):
    def part(a, b, f):
        return quad(lambda z: f(z**s), a, b, epsabs=0, epsrel=1e-12, limit=200)[0]

    val = 0j
    for a, b, sign in ((1 + eta, 1 + eta + xi, 1), (1 - eta - xi, 1 - eta, -1)):
        val += sign * complex(part(a, b, lambda w: w.real), part(a, b, lambda w: w.imag)) / xi
    return val


@pytest.mark.filterwarnings("ignore::scipy.integrate.IntegrationWarning")
def test_criterion_7_mellin(acceptance):
    rng = np.random.default_rng(7)
    worst = 0.0
    n = 0
    while n < 100:
        s = complex(rng.uniform(-3, 3), rng.uniform(-30, 30))
        eta, xi = rng.uniform(0.01, 0.3, size=2)
        ref = _mellin_oracle(s, eta, xi)
        if abs(ref) < 1e-6:
            continue  # relative error is meaningless at a zero
        worst = max(worst, abs(mellin_f(s, eta, xi) - ref) / abs(ref))
        n += 1
    ident = max(
        abs(mellin_f(1, e, x) - (2 * e + x)) / (2 * e + x)
        for e, x in rng.uniform(0.01, 0.45, size=(100, 2))
        if e + x < 1
    )
    ok = worst <= 1e-6 and ident <= 10 * np.finfo(float).eps  # machine precision: 10 ulps
    acceptance(7, ok, f"max rel err={worst:.2e} over {n} samples; identity err={ident:.1e}")
    assert ok


def test_criterion_8_empirical(acceptance):
    rng = np.random.default_rng(8)
    xs = rng.integers(10**6, 10**9, size=50, endpoint=True)
    found = sum(empirical.check_interval(int(x), 1 / 19, 1.39).found for x in xs)
    X = 10**8
    count, pred = empirical.rough_count(X, 10**6, round(X ** (1 / 3)))
    rel = count / pred - 1
    ok = found == 50 and abs(rel) <= 0.05
    acceptance(8, ok, f"found {found}/50; rough_count rel err={rel:+.4f}")
    assert ok


def test_criterion_9_determinism(acceptance, upper_runs):
    (c1, a, _), (c2, b, _) = upper_runs
    ok = c1 == c2 == 0 and a == b
    acceptance(9, ok, f"byte-identical={a == b} exit codes={c1},{c2}")
    assert ok


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
