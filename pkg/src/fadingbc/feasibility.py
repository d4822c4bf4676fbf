"""Existence of the coupling matrix ``A`` as a linear feasibility problem.

For a case evaluated at power level ``x`` put ``a_i = x + 1/h_i^2`` and
``b_j = x + 1/g_j^2``.  A certificate is an ``n x m`` entrywise nonnegative
matrix with

* unit column sums,
* moment rows ``sum_i a_i A_ij = b_j``,
* the case's majorization rows: prefix sums ``sum_{i<=k} p_i/a_i`` bounded
  above by ``sum_j (w q_j/b_j) sum_{i<=k} A_ij`` (Cases 1 and 3), or suffix
  sums bounded below the same way (Case 2).

"Positive" is read as entrywise nonnegative throughout; the degraded
construction's certificate has zero blocks.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .channel import Channel, augment_channel
from .kernel import Case, CaseClassification
from .simplex import phase1

CERT_TOL = 1e-9
NEG_CLAMP = 1e-12
INFEASIBLE_THRESHOLD = 1e-8
MAX_CELLS = 10**6


class Direction(enum.Enum):
    PREFIX_LE = "PrefixLE"
    SUFFIX_GE = "SuffixGE"


class DimensionError(ValueError):
    pass


@dataclass(frozen=True)
class MajorizationSpec:
    direction: Direction
    left_weights: np.ndarray   # p_i / a_i
    right_weights: np.ndarray  # w q_j / b_j

    def row_sums(self, A: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Left and right sides of every majorization row, k = 1..n."""
        weighted = A @ self.right_weights
        if self.direction is Direction.PREFIX_LE:
            return np.cumsum(self.left_weights), np.cumsum(weighted)
        return (np.cumsum(self.left_weights[::-1])[::-1],
                np.cumsum(weighted[::-1])[::-1])

    def slack(self, A: np.ndarray) -> np.ndarray:
        """Signed slack per row; nonnegative means the row holds."""
        left, right = self.row_sums(A)
        if self.direction is Direction.PREFIX_LE:
            return right - left
        return left - right


@dataclass(frozen=True)
class FeasibilityProgram:
    channel: Channel          # after virtual-fade augmentation
    w: float
    case_tag: Case
    x: float
    a: np.ndarray
    b: np.ndarray
    majorization: MajorizationSpec

    @property
    def n(self) -> int:
        return len(self.a)

    @property
    def m(self) -> int:
        return len(self.b)

    @property
    def n_variables(self) -> int:
        return self.n * self.m

    @property
    def n_equalities(self) -> int:
        return 2 * self.m

    @property
    def n_inequalities(self) -> int:
        return self.n

    def equality_rows(self) -> tuple[np.ndarray, np.ndarray]:
        """Column-sum rows then moment rows over row-major ``A`` entries."""
        n, m = self.n, self.m
        rows = np.zeros((2 * m, n * m))
        for j in range(m):
            rows[j, j::m] = 1.0
            rows[m + j, j::m] = self.a
        rhs = np.concatenate([np.ones(m), self.b])
        return rows, rhs

    def inequality_rows(self) -> tuple[np.ndarray, np.ndarray]:
        """Majorization rows in ``G vec(A) <= h`` form."""
        n, m = self.n, self.m
        t = self.majorization.right_weights
        s = self.majorization.left_weights
        G = np.zeros((n, n * m))
        h = np.zeros(n)
        prefix = self.majorization.direction is Direction.PREFIX_LE
        for k in range(n):
            rng = range(0, k + 1) if prefix else range(k, n)
            for i in rng:
                G[k, i * m:(i + 1) * m] = t
            h[k] = s[list(rng)].sum()
        if prefix:
            return -G, -h
        return G, h


@dataclass(frozen=True)
class CertificateReport:
    nonnegativity: float
    column_sum: float
    moment: float
    majorization: np.ndarray   # per-row relative violation, >= 0
    tol: float

    @property
    def max_violation(self) -> float:
        maj = float(self.majorization.max()) if self.majorization.size else 0.0
        return max(self.nonnegativity, self.column_sum, self.moment, maj)

    @property
    def passed(self) -> bool:
        return self.max_violation <= self.tol

    def to_dict(self) -> dict:
        return {
            "nonnegativity": self.nonnegativity,
            "column_sum": self.column_sum,
            "moment": self.moment,
            "majorization": [float(v) for v in self.majorization],
            "max_violation": self.max_violation,
            "passed": self.passed,
        }


@dataclass(frozen=True)
class CouplingMatrix:
    entries: np.ndarray
    residuals: CertificateReport
    channel: Channel   # index sets the rows/columns refer to

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @property
    def m(self) -> int:
        return self.entries.shape[1]


@dataclass(frozen=True)
class Infeasible:
    infeasibility: float

    def __bool__(self):
        return False


def make_program(channel: Channel, w: float, case_tag: Case, x: float) -> FeasibilityProgram:
    """Program for an already augmented channel at evaluation point ``x``."""
    a = x + channel.fade1.inv_sq
    b = x + channel.fade2.inv_sq
    direction = Direction.SUFFIX_GE if case_tag is Case.CASE2 else Direction.PREFIX_LE
    maj = MajorizationSpec(direction, channel.fade1.p / a, w * channel.fade2.p / b)
    return FeasibilityProgram(channel, float(w), case_tag, float(x), a, b, maj)


def build_feasibility_program(channel: Channel, w: float, case: CaseClassification,
                              augment_h=(), augment_g=()) -> FeasibilityProgram:
    """Pose the coupling-matrix existence problem for ``case``.

    Case 1 is evaluated at ``Q*``, Case 2 at ``Q`` and Case 3 at zero.
    Virtual fades in ``augment_h``/``augment_g`` enter with probability 0.
    """
    aug = augment_channel(channel, augment_h, augment_g)
    return make_program(aug, w, case.case_tag, case.eval_point())


def check_certificate(A, program: FeasibilityProgram, tol: float = CERT_TOL) -> CertificateReport:
    """Residuals of every certificate condition.

    Column sums are absolute, moment rows relative to ``b_j`` and
    majorization rows relative to the larger of the two row totals.
    """
    A = np.asarray(getattr(A, "entries", A), dtype=float)
    if A.shape != (program.n, program.m):
        raise DimensionError(f"certificate shape {A.shape} does not match "
                             f"program ({program.n}, {program.m})")
    nonneg = float(max(0.0, -A.min()))
    colsum = float(np.abs(A.sum(axis=0) - 1.0).max())
    moment = float((np.abs(program.a @ A - program.b) / program.b).max())
    maj = program.majorization
    scale = max(float(maj.left_weights.sum()), float(maj.right_weights.sum()))
    violation = np.maximum(0.0, -maj.slack(A)) / scale + 0.0
    return CertificateReport(nonneg, colsum, moment, violation, tol)


def solve_feasibility(program: FeasibilityProgram, tol: float = CERT_TOL):
    """Return a :class:`CouplingMatrix` or :class:`Infeasible`.

    Phase-1 simplex on ``vec(A) >= 0`` with the equality rows and slacked
    majorization rows.  A phase-1 optimum above ``1e-8`` means infeasible.
    """
    n, m = program.n, program.m
    if n * m > MAX_CELLS:
        raise DimensionError(f"program too large: {n} x {m}")
    E, e = program.equality_rows()
    G, h = program.inequality_rows()
    nv = n * m
    lhs = np.zeros((E.shape[0] + n, nv + n))
    lhs[:E.shape[0], :nv] = E
    lhs[E.shape[0]:, :nv] = G
    lhs[E.shape[0]:, nv:] = np.eye(n)
    rhs = np.concatenate([e, h])
    res = phase1(lhs, rhs)
    if res.infeasibility > INFEASIBLE_THRESHOLD:
        return Infeasible(res.infeasibility)
    A = res.x[:nv].reshape(n, m)
    report = check_certificate(A, program, tol)
    if not report.passed:
        return Infeasible(max(res.infeasibility, report.max_violation))
    return CouplingMatrix(A, report, program.channel)


def certify(A, program: FeasibilityProgram, tol: float = CERT_TOL) -> CouplingMatrix:
    """Wrap an explicit matrix as a :class:`CouplingMatrix` with its residuals."""
    A = np.array(getattr(A, "entries", A), dtype=float)
    report = check_certificate(A, program, tol)
    A = np.where((A < 0) & (A >= -NEG_CLAMP), 0.0, A)
    return CouplingMatrix(A, report, program.channel)
