import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fadingbc.channel import validate_channel
from fadingbc.constructions import (
    CapsTooSmall,
    PreconditionError,
    corollary_checks,
    degraded_certificate,
    thm2_certificate,
    thm2_certificate_auto,
    thm2_condition,
    thm2_split_index,
    thm3_conditions,
)
from fadingbc.feasibility import make_program, solve_feasibility
from fadingbc.kernel import Case, classify_case, coefficients
from generators import interior_case1, random_channel, random_weight
from oracles import lp_feasible


def test_static_degraded_certificate(static_degraded):
    case = classify_case(static_degraded, 1.0)
    assert case.case_tag is Case.CASE2
    cert = degraded_certificate(static_degraded, 1.0, case)
    np.testing.assert_array_equal(cert.entries, [[1.0], [0.0]])
    assert cert.residuals.max_violation == 0.0
    a = 1.0 + cert.channel.fade1.inv_sq
    np.testing.assert_allclose(a, [2.0, 1.25])
    assert 1 / a[1] >= 1.0 / 2.0


def test_two_column_degraded_certificate():
    ch = validate_channel([2, 3], [.4, .6], [0.5, 1.5], [.3, .7], 2.0)
    case = classify_case(ch, 1.7)
    cert = degraded_certificate(ch, 1.7, case)
    np.testing.assert_array_equal(cert.entries, np.vstack([np.eye(2), np.zeros((2, 2))]))
    assert cert.residuals.passed


def test_degraded_requires_degradedness(ref_channel):
    with pytest.raises(PreconditionError):
        degraded_certificate(ref_channel, 2.0, classify_case(ref_channel, 2.0))


def test_degraded_certificate_passes_every_case():
    rng = np.random.default_rng(20)
    seen = set()
    for _ in range(150):
        ch = random_channel(rng, degraded=True)
        for w in (1.0, random_weight(rng), 50.0):
            case = classify_case(ch, w)
            seen.add(case.case_tag)
            assert degraded_certificate(ch, w, case).residuals.passed
    assert seen == set(Case)


def test_reference_split_index_tie(ref_channel):
    co = coefficients(ref_channel, 0.125)
    assert co.T1 == pytest.approx(1 / co.b[0], abs=1e-15)
    assert thm2_split_index(ref_channel, 2.0, 0.125) == 1
    assert thm2_condition(ref_channel, 2.0, 0.125)


def test_split_index_extremes():
    # at x = 0 here T1 = h_1^2 = 1 and 1/b_j = g_j^2
    ch = validate_channel([1, 2], [.5, .5], [1.2, 1.5], [.5, .5], 1.0)
    assert thm2_split_index(ch, 1.0, 0.0) == 0
    ch = validate_channel([1, 2], [.5, .5], [0.3, 0.4], [.5, .5], 1.0)
    assert thm2_split_index(ch, 1.0, 0.0) == 2


def test_reference_certificate(ref_channel):
    cons = thm2_certificate(ref_channel, 2.0, 0.125, 1e6)
    assert cons.matrix.residuals.max_violation <= 1e-9
    np.testing.assert_allclose(cons.alpha, [1.0])
    assert cons.matrix.entries.shape == (3, 1)
    assert cons.h0 < ref_channel.fade1.values[0]
    assert cons.a0 == pytest.approx(1e6, rel=1e-9)
    assert lp_feasible(make_program(cons.matrix.channel, 2.0, Case.CASE1, 0.125))


def test_caps_too_small_refused():
    rng = np.random.default_rng(0)
    for _ in range(5000):
        ch, w, case = interior_case1(rng)
        try:
            if thm2_condition(ch, w, case.q_star):
                continue
        except PreconditionError:
            continue
        with pytest.raises(CapsTooSmall):
            thm2_certificate(ch, w, case.q_star, 1e9)
        return
    pytest.fail("no channel violating the split condition found")


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_construction_agrees_with_lp(seed):
    rng = np.random.default_rng(seed)
    ch, w, case = interior_case1(rng)
    try:
        if not thm2_condition(ch, w, case.q_star):
            return
        cons = thm2_certificate_auto(ch, w, case.q_star)
    except PreconditionError:
        return
    assert cons.alpha.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.all(cons.alpha >= 0) and np.all(cons.caps[ch.fade2.p > 0] > 0)
    assert cons.beta.min() >= -1e-12 and cons.gamma.min() >= -1e-12
    assert cons.matrix.residuals.passed
    program = make_program(cons.matrix.channel, w, Case.CASE1, case.q_star)
    assert solve_feasibility(program)


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_one_sided_and_fade_conditions_imply_split_condition(seed):
    rng = np.random.default_rng(seed)
    ch, w, case = interior_case1(rng, one_sided=bool(rng.integers(2)))
    try:
        cond1, cond2 = thm3_conditions(ch)
        holds = thm2_condition(ch, w, case.q_star)
    except PreconditionError:
        return
    if ch.m == 1 or cond1 or cond2:
        assert holds


def test_fade_conditions_example():
    ch = validate_channel([1, 10], [.5, .5], [0.6], [1], 1.0)
    assert thm3_conditions(ch) == (False, True)


def test_fade_conditions_on_degraded_channels():
    rng = np.random.default_rng(3)
    for _ in range(200):
        ch = random_channel(rng, degraded=True)
        if ch.n == 1:
            continue
        assert thm3_conditions(ch)[1]


def test_preconditions():
    single = validate_channel([2], [1], [1], [1], 1.0)
    with pytest.raises(PreconditionError):
        thm3_conditions(single)
    with pytest.raises(PreconditionError):
        thm2_split_index(validate_channel([1, 2], [.5, .5], [3], [1], 1.0), 1.0, 0.1)


def test_channel_shape_predicates(ref_channel):
    assert corollary_checks(ref_channel) == {"one_sided": True, "degraded": False}
    ch = validate_channel([2, 3], [.5, .5], [1, 1.5], [.5, .5], 1.0)
    assert corollary_checks(ch) == {"one_sided": False, "degraded": True}
    ch = validate_channel([1, 3], [.5, .5], [2, 4], [.5, .5], 1.0)
    assert corollary_checks(ch) == {"one_sided": False, "degraded": False}
