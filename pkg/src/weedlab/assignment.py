"""Minimum-cost one-to-one assignment (Hungarian method).

The solver is exact: float costs are lossless dyadic rationals, so the
matrix is rescaled to integers and solved with integer potentials — no
tolerance knobs, and the returned total is the true minimum. Among
cost-equal optima the lexicographically smallest pair list wins; that rule
is enforced by folding a positional preference into the integer objective
(scaled far below any real cost difference) rather than by post-processing.

Rectangular matrices are padded to square internally; pairs involving a
padded row/column are dropped, leaving min(n_rows, n_cols) pairs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence


class EmptyMatrix(ValueError):
    """Cost matrix has zero rows or zero columns."""


@dataclass(frozen=True)
class Assignment:
    """Chosen (row, column) pairs, sorted by row, plus their summed cost."""

    pairs: tuple[tuple[int, int], ...]
    total_cost: float


def _as_rows(costs) -> list[list[float]]:
    rows = [[float(x) for x in row] for row in costs]
    if not rows or not rows[0]:
        raise EmptyMatrix("cost matrix must have at least one row and one column")
    width = len(rows[0])
    for row in rows:
        if len(row) != width:
            raise ValueError("cost matrix rows have unequal lengths")
        for x in row:
            if not math.isfinite(x):
                raise ValueError(f"cost matrix cells must be finite, got {x!r}")
    return rows


def _to_integer_grid(rows: list[list[float]]) -> list[list[int]]:
    # Every float is p / q with q a power of two, so the max denominator is
    # a common one and the rescaled cells are exact.
    ratios = [[x.as_integer_ratio() for x in row] for row in rows]
    q_max = max(q for row in ratios for _, q in row)
    return [[p * (q_max // q) for p, q in row] for row in ratios]


def _solve_square(a: list[list[int]]) -> list[int]:
    """Exact min-cost perfect matching on a square integer matrix.

    Shortest-augmenting-path formulation with row/column potentials
    (O(n^3)). Returns the column assigned to each row.
    """
    n = len(a)
    INF = float("inf")
    u = [0] * (n + 1)
    v = [0] * (n + 1)
    p = [0] * (n + 1)  # p[j]: 1-based row matched to column j; p[0] is scratch
    way = [0] * (n + 1)
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv: list = [INF] * (n + 1)
        used = [False] * (n + 1)
        while True:
            used[j0] = True
            i0 = p[j0]
            delta = INF
            j1 = 0
            row = a[i0 - 1]
            ui0 = u[i0]
            for j in range(1, n + 1):
                if not used[j]:
                    cur = row[j - 1] - ui0 - v[j]
                    if cur < minv[j]:
                        minv[j] = cur
                        way[j] = j0
                    if minv[j] < delta:
                        delta = minv[j]
                        j1 = j
            for j in range(n + 1):
                if used[j]:
                    u[p[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while j0 != 0:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
    row_to_col = [0] * n
    for j in range(1, n + 1):
        row_to_col[p[j] - 1] = j - 1
    return row_to_col


def hungarian_assign(costs: Sequence[Sequence[float]]) -> Assignment:
    """Solve the assignment problem for a (possibly rectangular) cost matrix.

    Returns the pairs of the minimum-total-cost assignment of size
    min(n_rows, n_cols); ties in total cost are broken toward the
    lexicographically smallest pair list. Raises EmptyMatrix for a matrix
    with no rows or no columns and ValueError for non-finite cells.
    """
    rows = _as_rows(costs)
    n_rows, n_cols = len(rows), len(rows[0])
    n = max(n_rows, n_cols)
    grid = _to_integer_grid(rows)

    # Secondary objective: row i contributes digit(i) * base^(n-1-i), where
    # digit is the assigned real column, or n_cols for "row unassigned"
    # (pushed to a padded column). Minimizing the combined integer therefore
    # minimizes cost first and the pair list lexicographically second.
    base = n_cols + 1
    primary_scale = base**n
    place = [base ** (n - 1 - i) for i in range(n)]

    combined = [[0] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            if i < n_rows and j < n_cols:
                combined[i][j] = grid[i][j] * primary_scale + j * place[i]
            elif i < n_rows:
                combined[i][j] = n_cols * place[i]  # real row parked on padding
            else:
                combined[i][j] = 0  # padded row

    row_to_col = _solve_square(combined)
    pairs = tuple(
        (i, j) for i, j in enumerate(row_to_col[:n_rows]) if j < n_cols
    )
    total = math.fsum(rows[i][j] for i, j in pairs)
    return Assignment(pairs=pairs, total_cost=total)
