"""Exact Gaussian elimination over rational-like scalars.

Routines accept any scalar type closed under +, -, *, / with exact
equality against 0; Fraction and ComplexRational both qualify.  Pivots
are chosen by largest magnitude (abs for orderable scalars, a norm2()
method otherwise).  Inputs are never mutated and results are fully
deterministic: the reduced echelon form is unique, and nullspace vectors
are normalised so their first nonzero entry is one.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence, TypeVar

T = TypeVar("T")


def _pivot_size(x):
    norm2 = getattr(x, "norm2", None)
    if callable(norm2):
        return norm2()
    return abs(x)


def rref(matrix: Sequence[Sequence[T]], ncols: int) -> tuple[list[list[T]], list[int]]:
    """Reduced row echelon form and pivot column list."""
    rows = [list(r) for r in matrix]
    for r in rows:
        if len(r) != ncols:
            raise ValueError("ragged matrix")
    pivots: list[int] = []
    rank = 0
    for col in range(ncols):
        best, best_size = None, None
        for i in range(rank, len(rows)):
            if rows[i][col] != 0:
                size = _pivot_size(rows[i][col])
                if best is None or size > best_size:
                    best, best_size = i, size
        if best is None:
            continue
        rows[rank], rows[best] = rows[best], rows[rank]
        piv = rows[rank][col]
        rows[rank] = [v / piv for v in rows[rank]]
        for i in range(len(rows)):
            if i != rank and rows[i][col] != 0:
                f = rows[i][col]
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[rank])]
        pivots.append(col)
        rank += 1
        if rank == len(rows):
            break
    return rows, pivots


def rank(matrix: Sequence[Sequence[T]], ncols: int) -> int:
    return len(rref(matrix, ncols)[1])


def nullspace(
    matrix: Sequence[Sequence[T]],
    ncols: int,
    zero: T = Fraction(0),
    one: T = Fraction(1),
) -> list[list[T]]:
    """Exact kernel basis, one vector per free column, first nonzero entry
    normalised to one.  A matrix with no rows has full kernel."""
    if ncols < 1:
        raise ValueError("need at least one column")
    reduced, pivots = rref(matrix, ncols) if len(matrix) else ([], [])
    free = [c for c in range(ncols) if c not in pivots]
    basis: list[list[T]] = []
    for f in free:
        v = [zero] * ncols
        v[f] = one
        for r, p in enumerate(pivots):
            coeff = reduced[r][f]
            if coeff != 0:
                v[p] = zero - coeff
        lead = next(x for x in v if x != 0)
        if lead != one:
            v = [x / lead for x in v]
        basis.append(v)
    return basis


def solve_in_span(
    vectors: Sequence[Sequence[T]],
    target: Sequence[T],
    zero: T = Fraction(0),
) -> list[T] | None:
    """Exact coordinates of target in span(vectors), or None if outside.

    Solves V^T c = target by eliminating the augmented system.
    """
    if not vectors:
        return None if any(t != 0 for t in target) else []
    ncols = len(vectors)
    nrows = len(target)
    if any(len(v) != nrows for v in vectors):
        raise ValueError("vector length mismatch")
    aug = [[vectors[j][i] for j in range(ncols)] + [target[i]] for i in range(nrows)]
    reduced, pivots = rref(aug, ncols + 1)
    if ncols in pivots:
        return None
    coords = [zero] * ncols
    for r, p in enumerate(pivots):
        coords[p] = reduced[r][ncols]
    return coords
