"""Scalar analysis shared by every bound.

The central object is the stationarity function

    r(w, x) = sum_i p_i / (x + 1/h_i^2) - w * sum_j q_j / (x + 1/g_j^2)

whose sign on ``[0, Q]`` selects which of the three outer-bound cases
applies, and whose root ``Q*`` is both the outer-bound evaluation point and
the optimal superposition split.  All rates are in bits per channel use.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .channel import Channel, FadePmf

log = logging.getLogger(__name__)

TWO_PI_E = 2.0 * math.pi * math.e

BISECT_XTOL = 1e-12
BISECT_MAXITER = 200
SCAN_POINTS = 65
# |r| below this fraction of the sum of its two terms counts as zero
DEGENERATE_RTOL = 1e-12


class UndefinedQuantityError(ValueError):
    """A derived quantity does not exist for this channel."""


class Case(enum.Enum):
    CASE1 = "Case1"
    CASE2 = "Case2"
    CASE3 = "Case3"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class CaseClassification:
    case_tag: Case
    q_star: float | None
    r_at_zero: float
    r_at_power: float
    power: float
    roots: tuple[float, ...] = field(default=())

    @property
    def is_interior(self) -> bool:
        """True for Case 1 with ``0 < Q* < Q`` (strictly)."""
        return self.case_tag is Case.CASE1 and 0.0 < self.q_star < self.power

    def eval_point(self) -> float:
        """Power level at which the case's coefficients are evaluated."""
        if self.case_tag is Case.CASE1:
            return self.q_star
        if self.case_tag is Case.CASE2:
            return self.power
        return 0.0


def r_eval(channel: Channel, w: float, x):
    """Stationarity function r(w, x); ``x`` may be a scalar or an array."""
    x = np.asarray(x, dtype=float)
    h_term = channel.fade1.p / (x[..., None] + channel.fade1.inv_sq)
    g_term = channel.fade2.p / (x[..., None] + channel.fade2.inv_sq)
    out = h_term.sum(axis=-1) - w * g_term.sum(axis=-1)
    return float(out) if out.ndim == 0 else out


def _r_scale(channel: Channel, w: float, x):
    x = np.asarray(x, dtype=float)
    h_term = channel.fade1.p / (x[..., None] + channel.fade1.inv_sq)
    g_term = channel.fade2.p / (x[..., None] + channel.fade2.inv_sq)
    return h_term.sum(axis=-1) + w * g_term.sum(axis=-1)


def _bisect(fn, lo: float, hi: float, f_lo: float, f_hi: float) -> float:
    # assumes f_lo >= 0 >= f_hi
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    # run to floating-point resolution; the bracket ends far inside BISECT_XTOL
    for _ in range(BISECT_MAXITER):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        f_mid = fn(mid)
        if f_mid == 0.0:
            return mid
        if f_mid > 0.0:
            lo, f_lo = mid, f_mid
        else:
            hi, f_hi = mid, f_mid
    return lo if abs(f_lo) <= abs(f_hi) else hi


def classify_case(channel: Channel, w: float) -> CaseClassification:
    """Select the outer-bound case for weight ``w`` and locate ``Q*``.

    Case 1 (``r(w,0) >= 0 >= r(w,Q)``) is checked first, then Case 2
    (``r(w,Q) > 0``), then Case 3 (``r(w,0) < 0``).  When ``r`` vanishes
    identically on ``[0, Q]`` the Case 1 root is reported as ``Q``.  If a
    65-point scan finds several sign changes the smallest root is used and a
    diagnostic is logged.
    """
    Q = channel.power
    fn = lambda x: r_eval(channel, w, x)  # noqa: E731
    r0 = fn(0.0)
    rq = fn(Q)
    if r0 >= 0.0 and rq <= 0.0:
        grid = np.linspace(0.0, Q, SCAN_POINTS)
        vals = r_eval(channel, w, grid)
        scale = _r_scale(channel, w, grid)
        if np.all(np.abs(vals) <= DEGENERATE_RTOL * scale):
            return CaseClassification(Case.CASE1, Q, r0, rq, Q, (Q,))
        signs = np.sign(vals)
        nz = np.flatnonzero(signs)
        changes = [(nz[k], nz[k + 1]) for k in range(len(nz) - 1)
                   if signs[nz[k]] != signs[nz[k + 1]]]
        if len(changes) > 1:
            roots = []
            for i0, i1 in changes:
                lo, hi = float(grid[i0]), float(grid[i1])
                f_lo, f_hi = float(vals[i0]), float(vals[i1])
                if f_lo > 0:
                    roots.append(_bisect(fn, lo, hi, f_lo, f_hi))
                else:
                    neg = lambda x: -fn(x)  # noqa: E731
                    roots.append(_bisect(neg, lo, hi, -f_lo, -f_hi))
            roots.sort()
            log.warning("r(w=%g, x) has %d sign changes on [0, %g]; roots %s; "
                        "using the smallest", w, len(roots), Q, roots)
            return CaseClassification(Case.CASE1, roots[0], r0, rq, Q, tuple(roots))
        q_star = _bisect(fn, 0.0, Q, r0, rq)
        return CaseClassification(Case.CASE1, q_star, r0, rq, Q, (q_star,))
    if rq > 0.0:
        return CaseClassification(Case.CASE2, None, r0, rq, Q)
    return CaseClassification(Case.CASE3, None, r0, rq, Q)


@dataclass(frozen=True)
class Coefficients:
    """Shifted noise powers ``a_i = x + 1/h_i^2`` and ``b_j = x + 1/g_j^2``."""

    a: np.ndarray
    b: np.ndarray
    at_power: float
    T: float
    p_last: float

    @property
    def T1(self) -> float:
        """Average of ``p_i / a_i`` over all but the strongest H-fade."""
        if self.p_last >= 1.0:
            raise UndefinedQuantityError("T1 is undefined when p_n = 1")
        return (self.T - self.p_last / self.a[-1]) / (1.0 - self.p_last)


def coefficients(channel: Channel, x: float) -> Coefficients:
    if x < 0:
        raise ValueError(f"x must be nonnegative, got {x}")
    a = x + channel.fade1.inv_sq
    b = x + channel.fade2.inv_sq
    T = float(np.dot(channel.fade1.p, 1.0 / a))
    return Coefficients(a, b, float(x), T, float(channel.fade1.p[-1]))


def ergodic_capacity(pmf: FadePmf, power: float) -> float:
    """``0.5 * E[log2(1 + power * fade^2)]``."""
    if not power > 0:
        raise ValueError(f"power must be positive, got {power}")
    return 0.5 * pmf.expect(lambda v: np.log2(1.0 + power * v**2))


def constant_C(channel: Channel, w: float) -> float:
    """Gaussian-maximum-entropy constant separating the bound from ``h(Y1|U) - w h(Y2|U)``."""
    Q = channel.power
    first = 0.5 * w * channel.fade2.expect(lambda g: np.log2(TWO_PI_E * (Q + 1.0 / g**2)))
    second = 0.5 * channel.fade1.expect(lambda h: np.log2(TWO_PI_E / h**2))
    return first - second
