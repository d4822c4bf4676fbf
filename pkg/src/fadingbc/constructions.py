"""Explicit coupling-matrix certificates and the sufficient conditions behind them.

Two constructions are provided:

* degraded channels (``g_m < h_1``): pad H with virtual copies of the G
  fades and use ``A = [I; 0]``;
* the virtual-fade construction for Case 1: a zero-probability fade ``h_0``
  below every real fade, with ``(n+1) x m`` matrix whose first row is
  ``beta``, last row ``gamma`` and middle rows proportional to ``p_i/a_i``.

Both are returned as :class:`~fadingbc.feasibility.CouplingMatrix` objects
whose residuals were computed by the generic checker, never trusted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import Channel, augment_channel
from .feasibility import CouplingMatrix, build_feasibility_program, certify, make_program
from .kernel import Case, CaseClassification, coefficients

TIE_RTOL = 1e-12
COLLISION_SHIFT = 1e-9
A0_START = 1e3
A0_FACTOR = 10.0
A0_STEPS = 10


class PreconditionError(ValueError):
    pass


class ConstructionError(ValueError):
    pass


class CapsTooSmall(ConstructionError):
    """The alpha caps sum below one: the sufficient condition fails."""


@dataclass(frozen=True)
class Thm2Construction:
    alpha: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray
    a0: float
    h0: float
    k_index: int
    caps: np.ndarray
    matrix: CouplingMatrix


def corollary_checks(channel: Channel) -> dict:
    return {
        "one_sided": channel.m == 1,
        "degraded": channel.fade2.values[-1] < channel.fade1.values[0],
    }


def degraded_certificate(channel: Channel, w: float, case: CaseClassification) -> CouplingMatrix:
    """Identity-on-zeros certificate for a degraded channel, any case tag.

    H is padded with zero-probability copies of ``g_1..g_m``; the virtual
    rows then reproduce every ``b_j`` exactly.
    """
    g = channel.fade2.values
    h = channel.fade1.values
    if not g[-1] < h[0]:
        raise PreconditionError(f"channel is not degraded: g_m = {g[-1]} >= h_1 = {h[0]}")
    existing = set(h)
    virtual = [v * (1.0 - COLLISION_SHIFT) if v in existing else v for v in g]
    program = build_feasibility_program(channel, w, case, augment_h=virtual)
    m = channel.m
    A = np.zeros((program.n, m))
    A[:m, :m] = np.eye(m)
    return certify(A, program)


def _require_virtual_fade_preconditions(channel: Channel):
    p_n = channel.fade1.probs[-1]
    if not p_n > 0:
        raise PreconditionError("requires p_n > 0")
    if not p_n < 1:
        raise PreconditionError("requires p_n < 1")
    if not channel.fade1.values[-1] > channel.fade2.values[-1]:
        raise PreconditionError("requires h_n > g_m")


def thm2_split_index(channel: Channel, w: float, q_star: float) -> int:
    """Number of G-fades with ``1/b_j <= T1`` (ties counted in)."""
    _require_virtual_fade_preconditions(channel)
    co = coefficients(channel, q_star)
    T1 = co.T1
    return int(np.count_nonzero(1.0 / co.b <= T1 * (1.0 + TIE_RTOL)))


def thm2_condition(channel: Channel, w: float, q_star: float) -> bool:
    """``(w-1) T1 >= w sum_{j<=k} q_j (T1 - 1/b_j)`` at ``x = Q*``."""
    _require_virtual_fade_preconditions(channel)
    co = coefficients(channel, q_star)
    T1 = co.T1
    k = thm2_split_index(channel, w, q_star)
    q = channel.fade2.p[:k]
    lhs = (w - 1.0) * T1
    rhs = w * float(np.dot(q, T1 - 1.0 / co.b[:k]))
    return lhs >= rhs - TIE_RTOL * w * T1


def _caps(channel: Channel, w: float, q_star: float):
    co = coefficients(channel, q_star)
    a, b, T = co.a, co.b, co.T
    a_n = a[-1]
    p_n = channel.fade1.p[-1]
    beta_branch = (b - a_n) / (1.0 - a_n * T)
    gamma_branch = 1.0 / (T - p_n / a_n)
    ratio = np.minimum(beta_branch, gamma_branch)
    caps = w * channel.fade2.p / b * ratio
    return co, ratio, caps


def thm2_certificate(channel: Channel, w: float, q_star: float, a0: float) -> Thm2Construction:
    """Virtual-fade certificate at a given virtual coefficient ``a0``.

    The weights ``alpha_j`` are the caps ``(w q_j/b_j) min{...}`` normalised
    to sum to one; a total cap below one means the sufficient condition fails
    and no normalisation is attempted.  Raises :class:`ConstructionError` if
    some ``beta_j`` or ``gamma_j`` is negative at this ``a0``.
    """
    _require_virtual_fade_preconditions(channel)
    co, ratio, caps = _caps(channel, w, q_star)
    total = float(caps.sum())
    if total < 1.0 - TIE_RTOL:
        raise CapsTooSmall(f"sum of alpha caps is {total:.12g} < 1")
    a, b, T = co.a, co.b, co.T
    if not a0 > max(a[0], b[0]):
        raise ConstructionError(f"a0 = {a0} must exceed max(a_1, b_1) = {max(a[0], b[0])}")
    h0 = 1.0 / math.sqrt(a0 - q_star)
    a0 = q_star + 1.0 / h0**2

    q = channel.fade2.p
    p = channel.fade1.p
    a_n, p_n = a[-1], p[-1]
    alpha = caps / total
    # c_j = alpha_j b_j / (w q_j); a zero-probability column carries no weight
    c = np.where(q > 0, ratio / total, 0.0)
    beta = (b - a_n + c * (a_n * T - 1.0)) / (a0 - a_n)
    gamma = (a0 * (1.0 - c * (T - p_n / a_n)) + c * (1.0 - p_n) - b) / (a0 - a_n)

    n, m = channel.n, channel.m
    A = np.empty((n + 1, m))
    A[0] = beta
    A[1:n] = np.outer(p[:-1] / a[:-1], c)
    A[n] = gamma
    k = thm2_split_index(channel, w, q_star)
    if beta.min() < -1e-12 or gamma.min() < -1e-12:
        raise ConstructionError(f"negative beta/gamma at a0 = {a0:.6g}: "
                                f"min beta {beta.min():.3g}, min gamma {gamma.min():.3g}")
    program = make_program(augment_channel(channel, [h0]), w, Case.CASE1, q_star)
    matrix = certify(A, program)
    return Thm2Construction(alpha, beta, gamma, a0, h0, k, caps, matrix)


def thm2_certificate_auto(channel: Channel, w: float, q_star: float) -> Thm2Construction:
    """Escalate ``a0`` from ``1e3 max(a_1, b_1)`` by factors of ten."""
    _require_virtual_fade_preconditions(channel)
    co = coefficients(channel, q_star)
    a0 = A0_START * max(co.a[0], co.b[0])
    last = None
    for _ in range(A0_STEPS + 1):
        try:
            return thm2_certificate(channel, w, q_star, a0)
        except CapsTooSmall:
            raise
        except ConstructionError as exc:
            last = exc
        a0 *= A0_FACTOR
    raise ConstructionError(f"no nonnegative construction up to a0 = {a0 / A0_FACTOR:.3g}: {last}")


def thm3_conditions(channel: Channel) -> tuple[bool, bool]:
    """The two fade-only sufficient conditions (``g_n`` read as ``g_m``)."""
    _require_virtual_fade_preconditions(channel)
    h, p = channel.fade1.v, channel.fade1.p
    g = channel.fade2.v
    p_n = p[-1]
    cond1 = (1.0 - p_n) * g[0] ** 2 >= float(np.dot(p[:-1], h[:-1] ** 2))
    cond2 = (1.0 - p_n) / g[-1] ** 2 >= float(np.dot(p[:-1], 1.0 / h[:-1] ** 2))
    return bool(cond1), bool(cond2)
