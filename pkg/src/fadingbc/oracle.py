"""Independent numerical checks of the entropy-power optimisation.

For a fixed coupling matrix ``A`` the outer bound reduces to maximising

    F(f) = sum_i p_i f_i - (w/2) sum_j q_j log2( sum_i A_ij 2^{2 f_i} )

over conditional-entropy surrogates ``f`` subject to the EPI chain.  With
``d_i = 2^{2 f_i} - 2 pi e / h_i^2`` the constraints are linear,

    2 pi e Q >= d_1 >= d_2 >= ... >= d_n >= 0,

so the search below runs in ``d``.  The candidate ``f*_i = 1/2 log2(2 pi e
(Q* + 1/h_i^2))`` has ``d*_i = 2 pi e Q*`` for every ``i``.

Note on curvature: ``F`` is concave in ``f``.  The matrix assembled by
:func:`hessian_psd_check` from the ``e_lj`` weights is positive
semidefinite and equals ``-Hess(F) / ln 2``.  Concavity in ``f`` does not
make the ``d``-space problem concave, so the maximiser is treated as a
generic smooth search with many starts.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .bounds import outer_value
from .channel import Channel
from .feasibility import make_program
from .kernel import TWO_PI_E, Case, CaseClassification, constant_C

LN2 = math.log(2.0)

ARMIJO_BETA = 0.5
ARMIJO_C = 1e-4
MAX_ITER = 500
DEFAULT_RESTARTS = 64
FD_STEP = 1e-5
VALUE_STALL = 1e-15


def _entries(A) -> np.ndarray:
    return np.asarray(getattr(A, "entries", A), dtype=float)


@dataclass(frozen=True)
class FVector:
    f: np.ndarray
    d: np.ndarray

    @classmethod
    def from_f(cls, f, channel: Channel) -> "FVector":
        f = np.asarray(f, dtype=float)
        return cls(f, 2.0 ** (2.0 * f) - TWO_PI_E * channel.fade1.inv_sq)

    @classmethod
    def from_d(cls, d, channel: Channel) -> "FVector":
        d = np.asarray(d, dtype=float)
        return cls(0.5 * np.log2(d + TWO_PI_E * channel.fade1.inv_sq), d)

    def chain_violation(self, power: float) -> float:
        """Largest violation of ``2 pi e Q >= d_1 >= ... >= d_n >= 0``."""
        d = self.d
        worst = max(0.0, -float(d[-1]), float(d[0]) - TWO_PI_E * power)
        if len(d) > 1:
            worst = max(worst, float(np.max(d[1:] - d[:-1])))
        return worst


def candidate_f(channel: Channel, q_star: float) -> FVector:
    """Gaussian-input allocation ``f*_i = 1/2 log2(2 pi e (Q* + 1/h_i^2))``."""
    f = 0.5 * np.log2(TWO_PI_E * (q_star + channel.fade1.inv_sq))
    return FVector.from_f(f, channel)


def opt2_objective(A, f, channel: Channel, w: float) -> float:
    A = _entries(A)
    f = np.asarray(getattr(f, "f", f), dtype=float)
    S = A.T @ 2.0 ** (2.0 * f)
    if np.any(S <= 0):
        raise ValueError("inner sums must be positive")
    return float(channel.fade1.p @ f - 0.5 * w * (channel.fade2.p @ np.log2(S)))


def _objective_increment(A, f, delta, channel: Channel, w: float) -> float:
    """``F(f + delta) - F(f)`` without cancellation between the two evaluations."""
    e = _weights(A, f)
    growth = np.expm1(2.0 * LN2 * np.asarray(delta))
    return float(channel.fade1.p @ delta
                 - 0.5 * w / LN2 * (channel.fade2.p @ np.log1p(e.T @ growth)))


def _weights(A, f) -> np.ndarray:
    """``e_lj = A_lj 2^{2 f_l} / sum_i A_ij 2^{2 f_i}``; columns sum to one."""
    A = _entries(A)
    f = np.asarray(getattr(f, "f", f), dtype=float)
    num = A * 2.0 ** (2.0 * f)[:, None]
    return num / num.sum(axis=0)


def objective_gradient_f(A, f, channel: Channel, w: float) -> np.ndarray:
    """``dF/df_l = p_l - w sum_j q_j e_lj``."""
    return channel.fade1.p - w * (_weights(A, f) @ channel.fade2.p)


def verify_bound_identity(channel: Channel, w: float, case: CaseClassification, A) -> float:
    """``|outer value - (F(f*) + C)|`` for a Case 1 certificate.

    ``channel`` must be the index set of ``A`` (virtual fades included);
    zero-probability entries leave both sides unchanged.
    """
    if case.case_tag is not Case.CASE1:
        raise ValueError("bound identity applies to Case 1 only")
    fstar = candidate_f(channel, case.q_star)
    rhs = opt2_objective(A, fstar, channel, w) + constant_C(channel, w)
    return abs(outer_value(channel, w, case) - rhs)


# --- projected ascent in d-space -------------------------------------------

def pav_nonincreasing(y) -> np.ndarray:
    """Euclidean projection onto nonincreasing sequences (pool adjacent violators)."""
    means: list[float] = []
    sizes: list[int] = []
    for v in np.asarray(y, dtype=float).tolist():
        size = 1
        while means and means[-1] < v:
            prev = sizes.pop()
            v = (means.pop() * prev + v * size) / (prev + size)
            size += prev
        means.append(v)
        sizes.append(size)
    return np.repeat(means, sizes)


def project_chain(d, cap: float) -> np.ndarray:
    """Project onto ``cap >= d_1 >= ... >= d_n >= 0``: isotonic fit, then clamp."""
    out = pav_nonincreasing(d)
    np.clip(out, 0.0, cap, out=out)
    return out


class _DSpace:
    def __init__(self, A, channel: Channel, w: float):
        self.A = _entries(A)
        self.c = TWO_PI_E * channel.fade1.inv_sq
        self.p = channel.fade1.p
        self.q = channel.fade2.p
        self.w = w
        self.cap = TWO_PI_E * channel.power

    def value(self, d):
        x = d + self.c
        S = self.A.T @ x
        return float(0.5 * (self.p @ np.log2(x)) - 0.5 * self.w * (self.q @ np.log2(S)))

    def grad(self, d):
        x = d + self.c
        S = self.A.T @ x
        return (self.p / x - self.w * (self.A @ (self.q / S))) / (2.0 * LN2)

    def ascend(self, d0):
        d = project_chain(d0, self.cap)
        val = self.value(d)
        step = self.cap
        for _ in range(MAX_ITER):
            g = self.grad(d)
            t = step
            moved = False
            for _ in range(60):
                trial = project_chain(d + t * g, self.cap)
                diff = trial - d
                if not diff.any():
                    break
                tv = self.value(trial)
                if tv >= val + ARMIJO_C * float(g @ diff):
                    moved = True
                    break
                t *= ARMIJO_BETA
            if not moved:
                break
            change = float(np.abs(diff).max())
            gain = tv - val
            d, val = trial, tv
            step = 2.0 * t
            if change <= 1e-13 * self.cap or gain <= VALUE_STALL * max(1.0, abs(val)):
                break
        return d, val


@dataclass(frozen=True)
class AscentResult:
    best: FVector
    best_value: float
    best_start: int
    start_kinds: tuple[str, ...]
    seed: int


def opt2_numeric_max(A, channel: Channel, w: float, restarts: int = DEFAULT_RESTARTS,
                     seed: int = 0, q_star: float | None = None,
                     workers: int = 1) -> AscentResult:
    """Multi-start projected gradient ascent of ``F`` over the chain polytope.

    Starts: the candidate (when ``q_star`` is given), every block vertex
    ``(cap, ..., cap, 0, ..., 0)``, then ``restarts`` random sorted interior
    points drawn from ``seed``.  Ties go to the lowest start index.
    """
    space = _DSpace(A, channel, w)
    n = channel.n
    starts = []
    kinds = []
    if q_star is not None:
        starts.append(np.full(n, TWO_PI_E * q_star))
        kinds.append("candidate")
    for t in range(n + 1):
        v = np.zeros(n)
        v[:t] = space.cap
        starts.append(v)
        kinds.append(f"vertex{t}")
    rng = np.random.default_rng(seed)
    for _ in range(restarts):
        starts.append(np.sort(rng.uniform(0.0, space.cap, n))[::-1])
        kinds.append("random")

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(space.ascend, starts))
    else:
        results = [space.ascend(s) for s in starts]
    best_idx = 0
    for k, (_, val) in enumerate(results):
        if val > results[best_idx][1]:
            best_idx = k
    d_best, _ = results[best_idx]
    best = FVector.from_d(d_best, channel)
    # report the value in f coordinates so it is comparable with opt2_objective
    return AscentResult(best, opt2_objective(A, best, channel, w), best_idx,
                        tuple(kinds), seed)


# --- KKT ------------------------------------------------------------------

@dataclass(frozen=True)
class KKTReport:
    lambdas: np.ndarray
    stationarity: np.ndarray
    majorization_slack: np.ndarray
    tol: float = 1e-12

    @property
    def min_lambda(self) -> float:
        return float(self.lambdas.min()) if self.lambdas.size else 0.0

    @property
    def duals_nonnegative(self) -> bool:
        return bool(np.all(self.lambdas >= -self.tol))

    @property
    def majorization_holds(self) -> bool:
        return bool(np.all(self.majorization_slack >= -self.tol))

    @property
    def max_stationarity(self) -> float:
        return float(np.abs(self.stationarity).max())

    @property
    def equivalent(self) -> bool:
        return self.duals_nonnegative == self.majorization_holds


def kkt_check(A, channel: Channel, w: float, q_star: float) -> KKTReport:
    """Recover the chain duals at ``f*`` and report stationarity residuals.

    The bound duals are zero at ``f*`` (neither box constraint is active);
    the chain duals ``lambda_1..lambda_{n-1}`` follow recursively from the
    first ``n-1`` stationarity equations and the last equation is left as a
    residual.
    """
    A = _entries(A)
    f = candidate_f(channel, q_star).f
    p, q = channel.fade1.p, channel.fade2.p
    n = channel.n
    P = 2.0 ** (2.0 * f)
    pull = w * (_weights(A, f) @ q)      # sum_j w q_j A_ij 2^{2f_i} / S_j
    lambdas = np.zeros(max(n - 1, 0))
    acc = 0.0
    for i in range(n - 1):
        acc += (pull[i] - p[i]) / P[i]
        lambdas[i] = acc
    mu = eta = 0.0
    res = np.zeros(n)
    if n == 1:
        res[0] = p[0] - pull[0] - mu + eta
    else:
        res[0] = p[0] - pull[0] - mu + lambdas[0] * P[0]
        for i in range(1, n - 1):
            res[i] = p[i] - pull[i] + (lambdas[i] - lambdas[i - 1]) * P[i]
        res[n - 1] = p[n - 1] - pull[n - 1] + eta - lambdas[n - 2] * P[n - 1]
    program = make_program(channel, w, Case.CASE1, q_star)
    slack = program.majorization.slack(A)
    return KKTReport(lambdas, res, slack)


# --- curvature ------------------------------------------------------------

def me_block(e_col: np.ndarray, i: int) -> np.ndarray:
    """Rank-structured block whose quadratic form is ``sum_{t != i} e_t (x_t - x_i)^2``."""
    n = len(e_col)
    M = np.zeros((n, n))
    for l in range(n):
        if l != i:
            M[l, l] = e_col[l]
            M[l, i] = -e_col[l]
            M[i, l] = -e_col[l]
    M[i, i] = e_col.sum() - e_col[i]
    return M


def analytic_hessian(A, channel: Channel, w: float, f) -> np.ndarray:
    """``M_lk = 2 w sum_j q_j (delta_lk e_lj - e_lj e_kj)``, i.e. ``-Hess(F)/ln 2``."""
    e = _weights(A, f)
    q = channel.fade2.p
    M = np.zeros((e.shape[0], e.shape[0]))
    for j in range(e.shape[1]):
        col = e[:, j]
        M += q[j] * (np.diag(col) - np.outer(col, col))
    return 2.0 * w * M


def hessian_from_blocks(A, channel: Channel, w: float, f) -> np.ndarray:
    """Same matrix assembled as ``w sum_j q_j sum_i e_ij ME^{ij}``."""
    e = _weights(A, f)
    q = channel.fade2.p
    n, m = e.shape
    M = np.zeros((n, n))
    for j in range(m):
        for i in range(n):
            M += q[j] * e[i, j] * me_block(e[:, j], i)
    return w * M


def fd_hessian(A, channel: Channel, w: float, f, step: float = FD_STEP) -> np.ndarray:
    """Central second differences of ``F`` at ``f``."""
    f = np.asarray(getattr(f, "f", f), dtype=float)
    n = len(f)
    D = lambda delta: _objective_increment(A, f, delta, channel, w)  # noqa: E731
    H = np.zeros((n, n))
    eye = np.eye(n) * step
    for k in range(n):
        H[k, k] = (D(eye[k]) + D(-eye[k])) / step**2
        for l in range(k + 1, n):
            val = (D(eye[k] + eye[l]) - D(eye[k] - eye[l])
                   - D(-eye[k] + eye[l]) + D(-eye[k] - eye[l])) / (4 * step**2)
            H[k, l] = H[l, k] = val
    return H


@dataclass(frozen=True)
class HessianReport:
    min_eigenvalue: float
    fd_deviation: float
    matrix: np.ndarray


def hessian_psd_check(A, channel: Channel, w: float, f, step: float = FD_STEP) -> HessianReport:
    M = analytic_hessian(A, channel, w, f)
    if M.shape[0] == 1:
        min_eig = float(M[0, 0])
    else:
        min_eig = float(np.linalg.eigvalsh(M).min())
    fd = -fd_hessian(A, channel, w, f, step) / LN2
    return HessianReport(min_eig, float(np.abs(M - fd).max()), M)


def epi_chain_at_candidate(channel: Channel, q_star: float) -> float:
    """Max deviation of ``d*_i`` from ``2 pi e Q*``."""
    return float(np.abs(candidate_f(channel, q_star).d - TWO_PI_E * q_star).max())


# --- combined report ------------------------------------------------------

GAP_RTOL = 1e-6
IDENTITY_TOL = 1e-9
LAMBDA_TOL = 1e-12
EIG_TOL = 1e-9


def verification_report(cert, w: float, case: CaseClassification, restarts: int = DEFAULT_RESTARTS,
                        seed: int = 0, workers: int = 1) -> dict:
    """Run every oracle against a Case 1 certificate and collect the verdicts."""
    channel = cert.channel
    A = _entries(cert)
    fstar = candidate_f(channel, case.q_star)
    at_candidate = opt2_objective(A, fstar, channel, w)
    ascent = opt2_numeric_max(A, channel, w, restarts, seed, case.q_star, workers)
    gap = ascent.best_value - at_candidate
    kkt = kkt_check(A, channel, w, case.q_star)
    hess = hessian_psd_check(A, channel, w, fstar)
    identity = verify_bound_identity(channel, w, case, A)
    chain = epi_chain_at_candidate(channel, case.q_star)
    checks = {
        "gap": gap <= GAP_RTOL * max(1.0, abs(at_candidate)),
        "kkt": kkt.duals_nonnegative and kkt.max_stationarity <= IDENTITY_TOL,
        "hessian": hess.min_eigenvalue >= -EIG_TOL,
        "identity": identity <= IDENTITY_TOL,
        "epi_chain": chain <= 1e-12 * max(1.0, TWO_PI_E * case.power),
    }
    return {
        "objective_at_candidate": at_candidate,
        "best_found": ascent.best_value,
        "gap": gap,
        "kkt_min_lambda": kkt.min_lambda,
        "kkt_max_stationarity": kkt.max_stationarity,
        "hessian_min_eig": hess.min_eigenvalue,
        "hessian_fd_deviation": hess.fd_deviation,
        "identity_residual": identity,
        "epi_chain_residual": chain,
        "seed": seed,
        "restarts": restarts,
        "checks": checks,
        "passed": all(checks.values()),
    }
