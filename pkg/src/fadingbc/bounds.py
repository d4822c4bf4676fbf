"""Outer and inner bounds on the weighted sum-rate ``R1 + w R2``.

The outer value comes from the case classification (it is an established
bound only together with a coupling-matrix certificate).  The inner value
comes from Gaussian superposition coding, searched over a power-split grid
that always contains the stationary split ``Q*``.
"""

from __future__ import annotations

import enum
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .channel import Channel, FadePmf, swap_channel
from .constructions import (
    ConstructionError,
    PreconditionError,
    corollary_checks,
    degraded_certificate,
    thm2_certificate_auto,
    thm2_condition,
    thm3_conditions,
)
from .feasibility import CERT_TOL, CouplingMatrix, build_feasibility_program, solve_feasibility
from .kernel import Case, CaseClassification, classify_case, ergodic_capacity

log = logging.getLogger(__name__)

TIGHT_RTOL = 1e-9
INNER_GRID = 129


class Order(enum.Enum):
    """Which receiver must decode the cloud (common) codeword.

    ``DECODE_AT_BOTH_1``: user 2's codeword is decoded at both receivers.
    ``DECODE_AT_BOTH_2``: user 1's codeword is decoded at both receivers.
    """

    DECODE_AT_BOTH_1 = "DecodeAtBoth_1"
    DECODE_AT_BOTH_2 = "DecodeAtBoth_2"


class Reason(enum.Enum):
    THM4_ONE_SIDED = "Thm4_OneSided"
    THM5_CONDITION = "Thm5_Condition"
    CASE2_ENDPOINT = "Case2_Endpoint"
    CASE3_ENDPOINT = "Case3_Endpoint"
    THM1_CONDITION = "Thm1_Condition"
    NUMERIC_MATCH = "NumericMatch"
    NOT_ESTABLISHED = "NotEstablished"


class Mechanism(enum.Enum):
    LP = "lp"
    DEGRADED = "degraded"
    VIRTUAL_FADE = "virtual_fade"
    NONE = "none"


class ConditionFailed(ValueError):
    """The cloud codeword is not decodable at the stronger receiver."""

    def __init__(self, lhs: float, rhs: float):
        super().__init__(f"decodability condition fails: {lhs:.9g} < {rhs:.9g}")
        self.lhs = lhs
        self.rhs = rhs


@dataclass(frozen=True)
class RatePoint:
    r1: float
    r2: float


def _log_gain(pmf: FadePmf, hi, lo):
    """``E log2((1 + V^2 hi) / (1 + V^2 lo))``, vectorised over ``lo``/``hi``."""
    hi = np.asarray(hi, dtype=float)
    lo = np.asarray(lo, dtype=float)
    v2 = pmf.v**2
    terms = np.log2((1.0 + np.multiply.outer(hi, v2)) / (1.0 + np.multiply.outer(lo, v2)))
    return terms @ pmf.p


def trivial_outer(channel: Channel) -> tuple[float, float]:
    """Single-user ergodic capacities ``(C1, C2)``."""
    return (ergodic_capacity(channel.fade1, channel.power),
            ergodic_capacity(channel.fade2, channel.power))


def outer_value(channel: Channel, w: float, case: CaseClassification) -> float:
    Q = channel.power
    if case.case_tag is Case.CASE1:
        qs = case.q_star
        return float(0.5 * _log_gain(channel.fade1, qs, 0.0)
                     + 0.5 * w * _log_gain(channel.fade2, Q, qs))
    if case.case_tag is Case.CASE2:
        return ergodic_capacity(channel.fade1, Q)
    return w * ergodic_capacity(channel.fade2, Q)


def _pair_arrays(channel: Channel, q_tilde, order: Order):
    Q = channel.power
    q_tilde = np.asarray(q_tilde, dtype=float)
    if order is Order.DECODE_AT_BOTH_1:
        r1 = 0.5 * _log_gain(channel.fade1, q_tilde, 0.0)
        r2 = 0.5 * np.minimum(_log_gain(channel.fade1, Q, q_tilde),
                              _log_gain(channel.fade2, Q, q_tilde))
    else:
        rest = Q - q_tilde
        r2 = 0.5 * _log_gain(channel.fade2, rest, 0.0)
        r1 = 0.5 * np.minimum(_log_gain(channel.fade1, Q, rest),
                              _log_gain(channel.fade2, Q, rest))
    return r1, r2


def achievable_pair(channel: Channel, q_tilde: float, order: Order = Order.DECODE_AT_BOTH_1) -> RatePoint:
    """Superposition-coding rate pair with user 1's codeword at power ``q_tilde``.

    In both orders ``q_tilde`` is the power of user 1's codeword, so
    ``q_tilde = Q`` gives ``(C1, 0)`` under order 1 and ``q_tilde = 0`` gives
    ``(0, C2)`` under order 2.
    """
    if not 0.0 <= q_tilde <= channel.power:
        raise ValueError(f"q_tilde = {q_tilde} outside [0, {channel.power}]")
    r1, r2 = _pair_arrays(channel, q_tilde, order)
    return RatePoint(float(r1), float(r2))


def wsr_expression(channel: Channel, w: float, q_tilde):
    """``0.5 E log2(1 + H^2 qt) + (w/2) E log2((1 + G^2 Q)/(1 + G^2 qt))`` (no range check)."""
    return (0.5 * _log_gain(channel.fade1, q_tilde, 0.0)
            + 0.5 * w * _log_gain(channel.fade2, channel.power, q_tilde))


def decodability_sides(channel: Channel, q_tilde: float) -> tuple[float, float]:
    Q = channel.power
    return (float(_log_gain(channel.fade1, Q, q_tilde)),
            float(_log_gain(channel.fade2, Q, q_tilde)))


def achievable_wsr(channel: Channel, w: float, q_tilde: float) -> float:
    """Weighted sum-rate achieved when receiver 1 can also decode user 2's codeword.

    Raises :class:`ConditionFailed` (with both sides attached) otherwise.
    """
    if not 0.0 <= q_tilde <= channel.power:
        raise ValueError(f"q_tilde = {q_tilde} outside [0, {channel.power}]")
    lhs, rhs = decodability_sides(channel, q_tilde)
    if lhs < rhs:
        raise ConditionFailed(lhs, rhs)
    return float(wsr_expression(channel, w, q_tilde))


@dataclass(frozen=True)
class InnerResult:
    value: float
    q_tilde: float
    order: Order


def best_inner(channel: Channel, w: float, q_star: float | None = None,
               points: int = INNER_GRID) -> InnerResult:
    """Best superposition weighted sum-rate over a uniform split grid plus ``Q*``."""
    grid = np.linspace(0.0, channel.power, points)
    if q_star is not None:
        grid = np.append(grid, q_star)
    best = None
    for order in Order:
        r1, r2 = _pair_arrays(channel, grid, order)
        vals = r1 + w * r2
        k = int(np.argmax(vals))
        if best is None or vals[k] > best.value:
            best = InnerResult(float(vals[k]), float(grid[k]), order)
    return best


def _matches(outer: float, inner: float) -> bool:
    return abs(outer - inner) <= TIGHT_RTOL * max(1.0, abs(outer))


def tightness(channel: Channel, w: float, case: CaseClassification, feasible: bool,
              inner: InnerResult | None = None) -> tuple[bool, Reason]:
    """Decide whether the certified outer value is also achievable.

    Structural reasons are reported first; every claimed match is also
    checked numerically against the superposition inner value.
    """
    if not feasible:
        return False, Reason.NOT_ESTABLISHED
    if inner is None:
        inner = best_inner(channel, w, case.q_star)
    outer = outer_value(channel, w, case)
    match = _matches(outer, inner.value)

    reason = None
    if case.case_tag is Case.CASE2:
        reason = Reason.CASE2_ENDPOINT
    elif case.case_tag is Case.CASE3:
        reason = Reason.CASE3_ENDPOINT
    elif case.is_interior and channel.m == 1:
        reason = Reason.THM4_ONE_SIDED
    else:
        if case.is_interior:
            try:
                if thm3_conditions(channel)[1]:
                    reason = Reason.THM5_CONDITION
            except PreconditionError:
                pass
        if reason is None:
            lhs, rhs = decodability_sides(channel, case.q_star)
            if lhs >= rhs:
                reason = Reason.THM1_CONDITION
            elif match:
                reason = Reason.NUMERIC_MATCH
    if reason is None:
        return False, Reason.NOT_ESTABLISHED
    if not match:
        log.warning("tightness reason %s but outer %.12g != inner %.12g (w=%g)",
                    reason.value, outer, inner.value, w)
        return False, Reason.NOT_ESTABLISHED
    return True, reason


@dataclass(frozen=True)
class BoundReport:
    weight: float
    case: CaseClassification
    outer_value: float
    feasible: bool
    mechanism: Mechanism
    certificate: CouplingMatrix | None
    inner: InnerResult
    tight: bool
    tightness_reason: Reason
    swapped: bool = False

    @property
    def case_tag(self) -> Case:
        return self.case.case_tag

    @property
    def q_star(self) -> float | None:
        return self.case.q_star

    @property
    def inner_value(self) -> float:
        return self.inner.value


def certify_point(channel: Channel, w: float, case: CaseClassification,
                  augment_h=(), augment_g=(), tol: float = CERT_TOL,
                  lp_only: bool = False) -> tuple[Mechanism, CouplingMatrix | None]:
    """Generic LP first, then the degraded and virtual-fade constructions."""
    program = build_feasibility_program(channel, w, case, augment_h, augment_g)
    sol = solve_feasibility(program, tol)
    if sol:
        return Mechanism.LP, sol
    if lp_only:
        return Mechanism.NONE, None
    if corollary_checks(channel)["degraded"]:
        cert = degraded_certificate(channel, w, case)
        if cert.residuals.max_violation <= tol:
            return Mechanism.DEGRADED, cert
    if case.case_tag is Case.CASE1:
        try:
            if thm2_condition(channel, w, case.q_star):
                cons = thm2_certificate_auto(channel, w, case.q_star)
                if cons.matrix.residuals.max_violation <= tol:
                    return Mechanism.VIRTUAL_FADE, cons.matrix
        except (PreconditionError, ConstructionError) as exc:
            log.debug("virtual-fade construction unavailable at w=%g: %s", w, exc)
    return Mechanism.NONE, None


def evaluate_bound(channel: Channel, w: float, augment_h=(), augment_g=(),
                   swapped: bool = False, tol: float = CERT_TOL) -> BoundReport:
    """Full pipeline for one weight: classify, certify, bound, tightness."""
    if not w >= 1.0:
        raise ValueError(f"weight must be >= 1, got {w}")
    case = classify_case(channel, w)
    mechanism, cert = certify_point(channel, w, case, augment_h, augment_g, tol)
    feasible = cert is not None
    outer = outer_value(channel, w, case)
    inner = best_inner(channel, w, case.q_star)
    tight, reason = tightness(channel, w, case, feasible, inner)
    return BoundReport(float(w), case, outer, feasible, mechanism, cert, inner,
                       tight, reason, swapped)


@dataclass(frozen=True)
class SweepResult:
    reports: list[BoundReport]
    frontier: dict[Order, list[RatePoint]] = field(default_factory=dict)


def inner_frontier(channel: Channel, points: int = INNER_GRID) -> dict[Order, list[RatePoint]]:
    grid = np.linspace(0.0, channel.power, points)
    out = {}
    for order in Order:
        r1, r2 = _pair_arrays(channel, grid, order)
        out[order] = [RatePoint(float(a), float(b)) for a, b in zip(r1, r2)]
    return out


def region_sweep(channel: Channel, w_grid, include_permuted: bool = False,
                 augment_h=(), augment_g=(), workers: int = 1,
                 tol: float = CERT_TOL) -> SweepResult:
    """Evaluate every weight in ``w_grid``; optionally the permuted bound too.

    Permuted rows bound ``w R1 + R2``: they are computed on the channel with
    the receivers exchanged and flagged ``swapped``.  Output order follows
    the grid regardless of ``workers``.
    """
    w_grid = [float(w) for w in w_grid]
    if not w_grid:
        raise ValueError("empty weight grid")
    for w in w_grid:
        if not w >= 1.0:
            raise ValueError(f"weights must be >= 1, got {w}")
    jobs = [(channel, w, augment_h, augment_g, False, tol) for w in w_grid]
    if include_permuted:
        swapped = swap_channel(channel)
        jobs += [(swapped, w, augment_g, augment_h, True, tol) for w in w_grid]

    def run(job):
        return evaluate_bound(*job)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            reports = list(pool.map(run, jobs))
    else:
        reports = [run(job) for job in jobs]
    return SweepResult(reports, inner_frontier(channel))


def outer_vertices(channel: Channel, reports: list[BoundReport], tol: float = 1e-9) -> list[RatePoint]:
    """Corner points of the polygon cut out by the certified supporting lines.

    Lines are ``R1 + w R2 <= V`` (or ``w R1 + R2 <= V`` for swapped rows),
    together with ``R1 <= C1``, ``R2 <= C2`` and the nonnegative quadrant.
    """
    c1, c2 = trivial_outer(channel)
    lines = [(1.0, 0.0, c1), (0.0, 1.0, c2), (-1.0, 0.0, 0.0), (0.0, -1.0, 0.0)]
    for rep in reports:
        if not rep.feasible:
            continue
        if rep.swapped:
            lines.append((rep.weight, 1.0, rep.outer_value))
        else:
            lines.append((1.0, rep.weight, rep.outer_value))
    L = np.array(lines)
    pts = []
    for i in range(len(L)):
        for j in range(i + 1, len(L)):
            M = L[[i, j], :2]
            det = np.linalg.det(M)
            if abs(det) < 1e-14:
                continue
            p = np.linalg.solve(M, L[[i, j], 2])
            if np.all(L[:, :2] @ p <= L[:, 2] + tol * np.maximum(1.0, np.abs(L[:, 2]))):
                pts.append((round(float(p[0]), 12) + 0.0, round(float(p[1]), 12) + 0.0))
    # boundary order from the R2 axis round to the R1 axis; the origin is not on it
    pts = sorted((t for t in set(pts) if t != (0.0, 0.0)), key=lambda t: -math.atan2(t[1], t[0]))
    return [RatePoint(a, b) for a, b in pts]
