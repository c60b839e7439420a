"""Exact rational linear solving by Gaussian elimination.

Small dense systems only; coefficients are ``fractions.Fraction`` throughout,
so solvability verdicts are exact.  Underdetermined systems return one
solution with free variables set to zero.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Optional


def solve_linear_system(
    matrix: list[list[Fraction]], rhs: list[Fraction]
) -> Optional[list[Fraction]]:
    """Solve ``matrix @ x = rhs`` exactly; ``None`` when inconsistent."""
    m = len(matrix)
    if len(rhs) != m:
        raise ValueError("rhs length does not match row count")
    n = len(matrix[0]) if m else 0
    rows = [list(map(Fraction, row)) + [Fraction(r)] for row, r in zip(matrix, rhs)]
    for row in rows:
        if len(row) != n + 1:
            raise ValueError("ragged matrix")

    pivot_cols: list[int] = []
    rank = 0
    for col in range(n):
        pivot = next((r for r in range(rank, m) if rows[r][col] != 0), None)
        if pivot is None:
            continue
        rows[rank], rows[pivot] = rows[pivot], rows[rank]
        inv = 1 / rows[rank][col]
        rows[rank] = [v * inv for v in rows[rank]]
        for r in range(m):
            if r != rank and rows[r][col] != 0:
                factor = rows[r][col]
                rows[r] = [a - factor * b for a, b in zip(rows[r], rows[rank])]
        pivot_cols.append(col)
        rank += 1
        if rank == m:
            break
    for r in range(rank, m):
        if rows[r][n] != 0:
            return None
    x = [Fraction(0)] * n
    for r, col in enumerate(pivot_cols):
        x[col] = rows[r][n]
    return x
