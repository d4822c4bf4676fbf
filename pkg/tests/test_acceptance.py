"""Acceptance criteria, one test per criterion.

Each test prints a single ``criterion N: PASS|FAIL ...`` line (visible
without ``-s``) and then asserts.  Random instances use
``default_rng(N)`` for criterion N; tolerances are the contract values.
"""

import json
import subprocess
import sys
import time
import timeit
from pathlib import Path

import numpy as np
import pytest

from fadingbc import oracle
from fadingbc.bounds import (
    Order,
    Reason,
    achievable_pair,
    achievable_wsr,
    evaluate_bound,
    outer_value,
    tightness,
    trivial_outer,
    wsr_expression,
)
from fadingbc.channel import validate_channel
from fadingbc.constructions import (
    PreconditionError,
    degraded_certificate,
    thm2_certificate_auto,
    thm2_condition,
)
from fadingbc.feasibility import make_program, solve_feasibility
from fadingbc.kernel import Case, classify_case
from generators import interior_case1, kkt_instance, random_channel, random_weight
from oracles import mp_outer_case1, mp_q_star

REF = ([1, 2], [0.5, 0.5], [1], [1], 1.0)
SRC = Path(__file__).resolve().parent.parent / "src"


@pytest.fixture
def report(capsys):
    def _report(number: int, ok: bool, detail: str):
        with capsys.disabled():
            print(f"\ncriterion {number}: {'PASS' if ok else 'FAIL'} {detail}")
        return ok
    return _report


def best_time(fn, number=20, repeat=5) -> float:
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number


def test_criterion_01_q_star_root(report):
    ch = validate_channel(*REF)
    ref = float(mp_q_star(*REF, 2))
    case = classify_case(ch, 2.0)
    elapsed = best_time(lambda: classify_case(ch, 2.0))
    ok = (abs(ref - 0.125) <= 1e-15 and case.case_tag is Case.CASE1
          and abs(case.q_star - 0.125) <= 1e-10 and elapsed < 1e-3)
    report(1, ok, f"q_star={case.q_star!r} oracle={ref!r} time={elapsed * 1e3:.3f}ms")
    assert ok


def test_criterion_02_capacity_point(report):
    ch = validate_channel(*REF)
    ref = float(mp_outer_case1(*REF, 2, mp_q_star(*REF, 2)))

    def compute():
        case = classify_case(ch, 2.0)
        return outer_value(ch, 2.0, case), achievable_wsr(ch, 2.0, case.q_star)

    outer, inner = compute()
    rep = evaluate_bound(ch, 2.0)
    elapsed = best_time(compute)
    full = best_time(lambda: evaluate_bound(ch, 2.0), number=5)
    ok = (abs(outer - inner) <= 1e-9 and abs(outer - ref) <= 1e-6 and abs(ref - 1.018797) <= 1e-6
          and rep.feasible and elapsed < 10e-3)
    report(2, ok, f"outer={outer:.12f} inner={inner:.12f} oracle={ref:.12f} "
                  f"time={elapsed * 1e3:.3f}ms (full pipeline {full * 1e3:.2f}ms)")
    assert ok


def test_criterion_03_degraded_feasibility(report):
    rng = np.random.default_rng(3)
    start = time.perf_counter()
    agree = 0
    for _ in range(200):
        ch = random_channel(rng, degraded=True)
        w = random_weight(rng)
        case = classify_case(ch, w)
        cert = degraded_certificate(ch, w, case)
        program = make_program(cert.channel, w, case.case_tag, case.eval_point())
        agree += bool(cert.residuals.passed and solve_feasibility(program))
    elapsed = time.perf_counter() - start
    ok = agree == 200 and elapsed < 5.0
    report(3, ok, f"agreement={agree}/200 time={elapsed:.2f}s")
    assert ok


def test_criterion_04_construction_vs_lp(report):
    rng = np.random.default_rng(4)
    start = time.perf_counter()
    found = agree = 0
    worst = 0.0
    while found < 200:
        ch, w, case = interior_case1(rng)
        try:
            if not thm2_condition(ch, w, case.q_star):
                continue
        except PreconditionError:
            continue
        found += 1
        cons = thm2_certificate_auto(ch, w, case.q_star)
        res = cons.matrix.residuals
        worst = max(worst, res.max_violation)
        program = make_program(cons.matrix.channel, w, Case.CASE1, case.q_star)
        agree += bool(res.max_violation <= 1e-9 and solve_feasibility(program))
    elapsed = time.perf_counter() - start
    ok = agree == 200 and elapsed < 10.0
    report(4, ok, f"agreement={agree}/200 max_residual={worst:.2e} time={elapsed:.2f}s")
    assert ok


def test_criterion_05_one_sided(report):
    rng = np.random.default_rng(5)
    start = time.perf_counter()
    cond_ok = tight_ok = 0
    failures = []
    for _ in range(200):
        ch, w, case = interior_case1(rng, n=int(rng.integers(2, 5)), one_sided=True)
        cond = thm2_condition(ch, w, case.q_star)
        rep = evaluate_bound(ch, w)
        _, reason = tightness(ch, w, case, rep.feasible, rep.inner)
        gap = abs(rep.outer_value - rep.inner_value)
        cond_ok += cond
        good = reason is Reason.THM4_ONE_SIDED and gap <= 1e-9
        tight_ok += good
        if not good:
            failures.append((w, gap))
    elapsed = time.perf_counter() - start
    ok = cond_ok == 200 and tight_ok == 200 and elapsed < 5.0
    detail = (f"split_condition={cond_ok}/200 tight_one_sided={tight_ok}/200 "
              f"time={elapsed:.2f}s")
    if failures:
        detail += " gaps " + ", ".join(f"w={w:.3f}:{g:.2e}" for w, g in failures)
    report(5, ok, detail)
    assert ok


def test_criterion_06_candidate_supremacy(report):
    rng = np.random.default_rng(6)
    start = time.perf_counter()
    found = 0
    worst_gap = worst_identity = -np.inf
    while found < 50:
        ch = random_channel(rng)
        w = random_weight(rng)
        rep = evaluate_bound(ch, w)
        if rep.case_tag is not Case.CASE1 or not rep.feasible:
            continue
        found += 1
        cert = rep.certificate
        aug = cert.channel
        at_f = oracle.opt2_objective(cert, oracle.candidate_f(aug, rep.q_star), aug, w)
        res = oracle.opt2_numeric_max(cert, aug, w, 64, seed=found, q_star=rep.q_star)
        worst_gap = max(worst_gap, (res.best_value - at_f) / max(1.0, abs(at_f)))
        worst_identity = max(worst_identity,
                             oracle.verify_bound_identity(aug, w, rep.case, cert))
    elapsed = time.perf_counter() - start
    ok = worst_gap <= 1e-6 and worst_identity <= 1e-9 and elapsed < 60.0
    report(6, ok, f"instances=50 max_rel_gap={worst_gap:.2e} "
                  f"max_identity_residual={worst_identity:.2e} time={elapsed:.2f}s")
    assert ok


def test_criterion_07_kkt_majorization(report):
    rng = np.random.default_rng(7)
    start = time.perf_counter()
    agree = 0
    verdicts = {True: 0, False: 0}
    for _ in range(500):
        A, aug, w, q_star = kkt_instance(rng)
        kkt = oracle.kkt_check(A, aug, w, q_star)
        agree += kkt.duals_nonnegative == kkt.majorization_holds
        verdicts[kkt.majorization_holds] += 1
    elapsed = time.perf_counter() - start
    ok = agree == 500 and elapsed < 5.0
    report(7, ok, f"agreement={agree}/500 (holds={verdicts[True]}, "
                  f"violated={verdicts[False]}) time={elapsed:.2f}s")
    assert ok


def test_criterion_08_convexity(report):
    rng = np.random.default_rng(8)
    start = time.perf_counter()
    min_eig, max_dev = np.inf, 0.0
    for _ in range(500):
        ch = random_channel(rng)
        w = random_weight(rng)
        A = rng.uniform(size=(ch.n, ch.m))
        A /= A.sum(axis=0)
        f = oracle.FVector.from_d(np.sort(rng.uniform(0, 2 * np.pi * np.e * ch.power, ch.n))[::-1],
                                  ch).f
        rep = oracle.hessian_psd_check(A, ch, w, f)
        min_eig = min(min_eig, rep.min_eigenvalue)
        max_dev = max(max_dev, rep.fd_deviation)
    elapsed = time.perf_counter() - start
    ok = min_eig >= -1e-9 and max_dev <= 1e-5 and elapsed < 10.0
    report(8, ok, f"min_eig={min_eig:.2e} max_fd_deviation={max_dev:.2e} time={elapsed:.2f}s")
    assert ok


@pytest.fixture(scope="module")
def sweep_instances():
    rng = np.random.default_rng(9)
    grid = np.linspace(1.0, 8.0, 33)
    start = time.perf_counter()
    channels, reports = [], []
    for _ in range(50):
        ch = random_channel(rng)
        channels.append(ch)
        reports.append([evaluate_bound(ch, w) for w in grid])
    return channels, reports, time.perf_counter() - start


def test_criterion_09_weak_duality(report, sweep_instances):
    channels, reports, elapsed = sweep_instances
    certified = violations = 0
    corners_ok = True
    for ch, reps in zip(channels, reports):
        for rep in reps:
            if rep.feasible:
                certified += 1
                violations += rep.inner_value > rep.outer_value + 1e-9
        c1, c2 = trivial_outer(ch)
        p1 = achievable_pair(ch, ch.power, Order.DECODE_AT_BOTH_1)
        p2 = achievable_pair(ch, 0.0, Order.DECODE_AT_BOTH_2)
        corners_ok &= (p1.r1, p1.r2) == (c1, 0.0) and (p2.r1, p2.r2) == (0.0, c2)
    ok = violations == 0 and corners_ok and elapsed < 30.0
    report(9, ok, f"certified_points={certified} violations={violations} "
                  f"corners_exact={corners_ok} time={elapsed:.2f}s")
    assert ok


def test_criterion_10_stationarity(report, sweep_instances):
    channels, reports, _ = sweep_instances
    worst, count = 0.0, 0
    for ch, reps in zip(channels, reports):
        for rep in reps:
            if rep.case_tag is not Case.CASE1:
                continue
            count += 1
            x, h = rep.q_star, 1e-5 * ch.power
            fd = (wsr_expression(ch, rep.weight, x + h)
                  - wsr_expression(ch, rep.weight, x - h)) / (2 * h)
            worst = max(worst, abs(float(fd)))
    ok = worst <= 1e-6
    report(10, ok, f"case1_points={count} max_abs_derivative={worst:.2e}")
    assert ok


def _cli(*args) -> bytes:
    env = {"PYTHONPATH": str(SRC), "PATH": "/usr/bin:/bin"}
    return subprocess.run([sys.executable, "-m", "fadingbc.cli", *args], env=env,
                          capture_output=True, check=False).stdout


def test_criterion_11_determinism(report, tmp_path):
    spec = tmp_path / "ref.json"
    spec.write_text(json.dumps(dict(zip(
        ("h_values", "h_probs", "g_values", "g_probs", "power"), REF))))
    runs = []
    for k in range(2):
        out = tmp_path / f"region{k}.csv"
        _cli("region", "--input", str(spec), "--w-grid", "1:8:33", "--permuted",
             "--out", str(out), "--plot")
        verify = _cli("verify", "--input", str(spec), "--w", "2", "--seed", "7")
        runs.append((out.read_bytes(), (tmp_path / f"region{k}.gp").read_bytes().replace(
            f"region{k}".encode(), b"region"), verify))
    ok = runs[0] == runs[1] and len(runs[0][0]) > 0 and len(runs[0][2]) > 0
    report(11, ok, f"region_bytes={len(runs[0][0])} verify_bytes={len(runs[0][2])} identical={ok}")
    assert ok
