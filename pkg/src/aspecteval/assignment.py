"""Rectangular linear sum assignment with a deterministic tie-break."""

from __future__ import annotations

import math

import numpy as np
from scipy.optimize import linear_sum_assignment

from aspecteval.errors import NonFiniteCostError


def pairing_cost(cost, pairing) -> float:
    """Total cost of ``pairing``, correctly rounded."""
    cost = np.asarray(cost, dtype=np.float64)
    return math.fsum(float(cost[r, c]) for r, c in pairing)


def _solve(cost: np.ndarray, rows: list[int], cols: list[int]) -> list[tuple[int, int]]:
    """Optimal pairing of the submatrix ``cost[rows][:, cols]`` in original indices."""
    if not rows or not cols:
        return []
    r_idx, c_idx = linear_sum_assignment(cost[np.ix_(rows, cols)])
    return [(rows[i], cols[j]) for i, j in zip(r_idx, c_idx)]


def solve_assignment(cost, *, tol: float = 0.0) -> list[tuple[int, int]]:
    """Minimum-cost pairing of ``min(rows, cols)`` (row, col) pairs, sorted by row.

    Among optimal pairings the lexicographically smallest pair list is
    returned, so equal-cost problems always produce the same answer. Totals
    are compared as correctly rounded sums; ``tol`` (relative, floored at an
    absolute ``tol``) additionally merges near-equal totals into ties.

    scipy's shortest augmenting path solver provides the optimum. The
    tie-break fixes pairs one at a time in lexicographic order, accepting a
    pair when some completion of it is no worse than the best pairing seen.
    """
    cost = np.asarray(cost, dtype=np.float64)
    if cost.ndim != 2:
        raise ValueError(f"cost matrix must be 2-D, got shape {cost.shape}")
    n_rows, n_cols = cost.shape
    if n_rows < 1 or n_cols < 1:
        raise ValueError(f"cost matrix must be at least 1x1, got {cost.shape}")
    if not np.all(np.isfinite(cost)):
        raise NonFiniteCostError("cost matrix contains NaN or infinite entries")
    if tol < 0:
        raise ValueError("tol must be non-negative")

    k = min(n_rows, n_cols)
    best = sorted(_solve(cost, list(range(n_rows)), list(range(n_cols))))
    best_total = pairing_cost(cost, best)
    slack = tol * max(1.0, abs(best_total))

    fixed: list[tuple[int, int]] = []
    free_cols = list(range(n_cols))
    for step in range(k):
        still_needed = k - step - 1
        last_row = fixed[-1][0] if fixed else -1
        chosen = None
        for r in range(last_row + 1, n_rows - still_needed):
            for c in free_cols:
                rest = _solve(cost, list(range(r + 1, n_rows)), [x for x in free_cols if x != c])
                completion = fixed + [(r, c)] + sorted(rest)
                if best[:step + 1] == fixed + [(r, c)]:
                    # the incumbent continues with this pair; never lose it to solver rounding
                    own = pairing_cost(cost, best)
                    if own <= pairing_cost(cost, completion):
                        completion = best
                total = pairing_cost(cost, completion)
                if total <= best_total + slack:
                    chosen = (r, c)
                    if total < best_total:
                        best, best_total = completion, total
                    break
            if chosen is not None:
                break
        if chosen is None:  # pragma: no cover - the incumbent's own pair always qualifies
            raise RuntimeError("tie-break search failed to reproduce the optimum")
        fixed.append(chosen)
        free_cols.remove(chosen[1])
    return fixed
