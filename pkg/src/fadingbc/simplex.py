"""Dense phase-1 simplex for feasibility of ``A x = b, x >= 0``.

One artificial variable per row; the sum of artificials is minimised with
Bland's smallest-index rule, which rules out cycling.  Only the phase-1
optimum is needed: a zero objective certifies feasibility and the basic
solution is a feasible point.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PIVOT_TOL = 1e-11
COST_TOL = 1e-12


@dataclass(frozen=True)
class Phase1Result:
    x: np.ndarray
    infeasibility: float
    iterations: int


def phase1(A_eq, b_eq, max_iter: int | None = None) -> Phase1Result:
    """Minimise the total artificial mass for ``A_eq x = b_eq, x >= 0``.

    Rows are scaled to unit max-norm first, so ``infeasibility`` is measured
    on unit-scale data.
    """
    A = np.array(A_eq, dtype=float)
    b = np.array(b_eq, dtype=float)
    if A.ndim != 2 or b.shape != (A.shape[0],):
        raise ValueError("A_eq must be 2-D with one rhs entry per row")
    rows, cols = A.shape

    norms = np.abs(A).max(axis=1)
    norms[norms == 0] = 1.0
    A /= norms[:, None]
    b /= norms
    neg = b < 0
    A[neg] *= -1.0
    b[neg] *= -1.0

    # tableau columns: originals, artificials, rhs
    tab = np.zeros((rows, cols + rows + 1))
    tab[:, :cols] = A
    tab[:, cols:cols + rows] = np.eye(rows)
    tab[:, -1] = b
    basis = list(range(cols, cols + rows))
    cost = np.zeros(cols + rows + 1)
    cost[:cols] = -A.sum(axis=0)
    cost[-1] = -b.sum()

    if max_iter is None:
        max_iter = 50 * (rows + cols + 10)
    it = 0
    while it < max_iter:
        entering = -1
        for j in range(cols + rows):
            if cost[j] < -COST_TOL:
                entering = j
                break
        if entering < 0:
            break
        col = tab[:, entering]
        leave = -1
        best = np.inf
        for i in range(rows):
            if col[i] > PIVOT_TOL:
                ratio = tab[i, -1] / col[i]
                if ratio < best - 1e-15 or (abs(ratio - best) <= 1e-15 and leave >= 0
                                             and basis[i] < basis[leave]):
                    best = ratio
                    leave = i
        if leave < 0:
            # cannot happen for a bounded phase-1 problem; treat as stalled
            break
        piv = tab[leave, entering]
        tab[leave] /= piv
        for i in range(rows):
            if i != leave and tab[i, entering] != 0.0:
                tab[i] -= tab[i, entering] * tab[leave]
        cost -= cost[entering] * tab[leave]
        basis[leave] = entering
        it += 1

    x = np.zeros(cols)
    art = 0.0
    for i, var in enumerate(basis):
        val = max(tab[i, -1], 0.0)
        if var < cols:
            x[var] = val
        else:
            art += val
    return Phase1Result(x, float(art), it)
