"""Exact polynomial nullspaces of differential operators.

For an operator A of order k and a degree bound K, the space
S = ker(A) intersected with degree-<= K polynomial fields is computed
exactly: A acts linearly on coefficient vectors, the matrix of that
action is assembled column by column over the graded-lex bases, and its
rational nullspace is the kernel basis.  No sampling is involved, so the
result is a certificate, not evidence.

C-elliptic operators have finite-dimensional polynomial kernels whose
dimension stabilizes once K is large enough; kernel_dim_profile exposes
that stabilization, which corroborates (or refutes) the randomized
symbol probe from diffop.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from . import linalg
from .diffop import DiffOperator, apply_operator
from .polyalg import PolyVec, format_poly, format_rational, monomial_basis


@dataclass(frozen=True)
class KernelBasis:
    """Exact basis of ker(A) within degree-<= K fields.

    m is the ambient coefficient dimension dimV * |P_K basis| and rank
    the exact rank of the coefficient map, so dim + rank == m.
    """

    operator: DiffOperator
    K: int
    basis: tuple[PolyVec, ...]
    m: int
    rank: int

    @property
    def dim(self) -> int:
        return len(self.basis)


@dataclass(frozen=True)
class DimProfile:
    """Kernel dimensions for K = 0..K_max; stabilized when the last two
    entries agree."""

    dims: tuple[int, ...]

    @property
    def stabilized(self) -> bool:
        return len(self.dims) >= 2 and self.dims[-1] == self.dims[-2]


def coefficient_matrix(A: DiffOperator, K: int) -> list[list[Fraction]]:
    """Matrix of p -> A p between coefficient spaces at degree bound K.

    Rows index output coefficients (dimW * |P_{K-k}|), columns input
    coefficients (dimV * |P_K|), both in the PolyVec layout.
    """
    source = monomial_basis(A.n, K)
    m = A.dimV * source.size
    target_size = A.dimW * monomial_basis(A.n, max(K - A.order, 0)).size
    columns = []
    zero = Fraction(0)
    one = Fraction(1)
    for col in range(m):
        coeffs = [zero] * m
        coeffs[col] = one
        image = apply_operator(A, PolyVec(source, A.dimV, tuple(coeffs)))
        columns.append(image.coeffs)
    return [[columns[c][r] for c in range(m)] for r in range(target_size)]


def kernel_basis(A: DiffOperator, K: int) -> KernelBasis:
    """Exact basis of the degree-<= K polynomial kernel of A.

    For K below the operator order every field is annihilated, so the
    full coefficient space comes back.  Basis vectors follow the echelon
    convention (first nonzero coefficient equal to one) and are uniquely
    determined by A and K.
    """
    if K < 0:
        raise ValueError(f"need K >= 0, got {K}")
    source = monomial_basis(A.n, K)
    m = A.dimV * source.size
    if K < A.order:
        eye = []
        for col in range(m):
            coeffs = [Fraction(0)] * m
            coeffs[col] = Fraction(1)
            eye.append(PolyVec(source, A.dimV, tuple(coeffs)))
        return KernelBasis(operator=A, K=K, basis=tuple(eye), m=m, rank=0)
    matrix = coefficient_matrix(A, K)
    vectors = linalg.nullspace(matrix, m)
    basis = tuple(PolyVec(source, A.dimV, tuple(v)) for v in vectors)
    return KernelBasis(operator=A, K=K, basis=basis, m=m, rank=m - len(basis))


def kernel_dim_profile(A: DiffOperator, K_max: int) -> DimProfile:
    """Kernel dimension at each degree bound K = 0..K_max."""
    if K_max < 0:
        raise ValueError(f"need K_max >= 0, got {K_max}")
    return DimProfile(dims=tuple(kernel_basis(A, K).dim for K in range(K_max + 1)))


def kernel_to_json(kb: KernelBasis) -> dict:
    """Serialize with exact "p/q" coefficient strings plus pretty text."""
    return {
        "operator": kb.operator.describe(),
        "K": kb.K,
        "dim": kb.dim,
        "ambient_dim": kb.m,
        "rank": kb.rank,
        "basis": [
            {
                "coeffs": [format_rational(c) for c in p.coeffs],
                "pretty": format_poly(p),
            }
            for p in kb.basis
        ],
    }
