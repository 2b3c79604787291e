"""Minimum-cost bipartite assignment (Hungarian method, O(n^3)).

Shortest-augmenting-path formulation with row/column potentials. The inner
column scan is vectorized with numpy; rectangular inputs are padded to square
with zero-cost dummy rows or columns.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Matching:
    pairs: tuple[tuple[int, int], ...]  # (row, col), sorted by row
    total_cost: float
    unmatched: tuple[int, ...]  # indices into the larger side
    unmatched_side: str  # "rows", "cols" or "" when square


def _solve_square(cost: np.ndarray) -> np.ndarray:
    """Return col_of_row for a square matrix."""
    n = cost.shape[0]
    u = np.zeros(n + 1)
    v = np.zeros(n + 1)
    # row_of_col[j] is the row matched to column j (1-based, 0 = free); column 0 is virtual
    row_of_col = np.zeros(n + 1, dtype=np.int64)
    way = np.zeros(n + 1, dtype=np.int64)
    c = np.zeros((n + 1, n + 1))
    c[1:, 1:] = cost
    for i in range(1, n + 1):
        row_of_col[0] = i
        j0 = 0
        minv = np.full(n + 1, np.inf)
        used = np.zeros(n + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = row_of_col[j0]
            free = ~used
            free[0] = False
            cur = c[i0] - u[i0] - v
            better = free & (cur < minv)
            minv[better] = cur[better]
            way[better] = j0
            cand = np.where(free, minv, np.inf)
            j1 = int(np.argmin(cand))
            delta = cand[j1]
            u[row_of_col[used]] += delta
            v[used] -= delta
            minv[free] -= delta
            j0 = j1
            if row_of_col[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            row_of_col[j0] = row_of_col[j1]
            j0 = j1
    col_of_row = np.empty(n, dtype=np.int64)
    col_of_row[row_of_col[1:] - 1] = np.arange(n)
    return col_of_row


def hungarian(cost) -> Matching:
    """Optimal assignment of ``min(rows, cols)`` pairs minimizing total cost."""
    c = np.asarray(cost, dtype=np.float64)
    if c.ndim != 2:
        raise ValueError(f"cost matrix must be 2-D, got shape {c.shape}")
    if np.isnan(c).any():
        raise ValueError("cost matrix contains NaN")
    if not np.isfinite(c).all():
        raise ValueError("cost matrix contains infinite entries")
    rows, cols = c.shape
    if rows == 0 or cols == 0:
        side = "rows" if rows else ("cols" if cols else "")
        return Matching((), 0.0, tuple(range(max(rows, cols))), side)
    n = max(rows, cols)
    square = np.zeros((n, n))
    square[:rows, :cols] = c
    col_of_row = _solve_square(square)
    pairs = tuple((r, int(col_of_row[r])) for r in range(rows) if col_of_row[r] < cols)
    total = math.fsum(c[r, k] for r, k in pairs)
    if rows > cols:
        matched = {r for r, _ in pairs}
        unmatched, side = tuple(r for r in range(rows) if r not in matched), "rows"
    elif cols > rows:
        matched = {k for _, k in pairs}
        unmatched, side = tuple(k for k in range(cols) if k not in matched), "cols"
    else:
        unmatched, side = (), ""
    return Matching(pairs, total, unmatched, side)
