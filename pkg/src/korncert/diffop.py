"""Constant-coefficient homogeneous differential operators.

An operator A = sum_{|alpha| = k} A_alpha d^alpha maps polynomial fields
R^n -> R^dimV to fields R^n -> R^dimW through exact rational matrices
A_alpha.  The module provides the standard first-order vector-field
operators (gradient, divergence, symmetric / deviatoric gradients), full
higher gradients, user-supplied term lists or fourth-order coefficient
tensors, exact application to polynomials, exact symbol matrices over
the complex rationals, and a randomized ellipticity probe.

Ellipticity here means the symbol A[xi] is injective for all real
xi != 0; C-ellipticity extends that to complex xi.  The probe samples
random rational frequencies, computes symbol ranks exactly, and on a
rank drop produces an exact witness pair (xi, v) with A[xi] v = 0.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Sequence

from . import linalg
from .polyalg import (
    MultiIndex,
    PolyVec,
    differentiate,
    format_rational,
    monomial_basis,
    parse_rational,
)

Matrix = tuple[tuple[Fraction, ...], ...]

_PROBE_COEFF_BOUND = 10**6


@dataclass(frozen=True, eq=False)
class ComplexRational:
    """Exact complex number with rational real and imaginary parts."""

    re: Fraction = Fraction(0)
    im: Fraction = Fraction(0)

    @classmethod
    def of(cls, value) -> "ComplexRational":
        if isinstance(value, ComplexRational):
            return value
        if isinstance(value, complex):
            return cls(Fraction(value.real), Fraction(value.imag))
        return cls(parse_rational(value))

    def __bool__(self) -> bool:
        return self.re != 0 or self.im != 0

    def __eq__(self, other: object) -> bool:
        if isinstance(other, ComplexRational):
            return self.re == other.re and self.im == other.im
        if isinstance(other, (int, Fraction)):
            return self.im == 0 and self.re == other
        if isinstance(other, complex):
            return self == ComplexRational.of(other)
        return NotImplemented

    def __hash__(self) -> int:
        return hash(self.re) if self.im == 0 else hash((self.re, self.im))

    def __add__(self, other) -> "ComplexRational":
        o = ComplexRational.of(other)
        return ComplexRational(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __neg__(self) -> "ComplexRational":
        return ComplexRational(-self.re, -self.im)

    def __sub__(self, other) -> "ComplexRational":
        return self + (-ComplexRational.of(other))

    def __rsub__(self, other) -> "ComplexRational":
        return ComplexRational.of(other) + (-self)

    def __mul__(self, other) -> "ComplexRational":
        o = ComplexRational.of(other)
        return ComplexRational(
            self.re * o.re - self.im * o.im,
            self.re * o.im + self.im * o.re,
        )

    __rmul__ = __mul__

    def __truediv__(self, other) -> "ComplexRational":
        o = ComplexRational.of(other)
        d = o.norm2()
        if d == 0:
            raise ZeroDivisionError("division by complex zero")
        return ComplexRational(
            (self.re * o.re + self.im * o.im) / d,
            (self.im * o.re - self.re * o.im) / d,
        )

    def __rtruediv__(self, other) -> "ComplexRational":
        return ComplexRational.of(other) / self

    def conjugate(self) -> "ComplexRational":
        return ComplexRational(self.re, -self.im)

    def norm2(self) -> Fraction:
        return self.re * self.re + self.im * self.im

    def to_complex(self) -> complex:
        return complex(float(self.re), float(self.im))

    def __str__(self) -> str:
        if self.im == 0:
            return format_rational(self.re)
        if self.re == 0:
            return f"{format_rational(self.im)}i"
        sign = "+" if self.im > 0 else "-"
        return f"{format_rational(self.re)}{sign}{format_rational(abs(self.im))}i"


CR_ZERO = ComplexRational()
CR_ONE = ComplexRational(Fraction(1))


@dataclass(frozen=True)
class DiffOperator:
    """Immutable operator description: terms maps each multi-index of the
    shared order to a dimW x dimV rational matrix."""

    n: int
    order: int
    dimV: int
    dimW: int
    terms: tuple[tuple[MultiIndex, Matrix], ...]
    name: str = "custom"

    @cached_property
    def term_map(self) -> dict[MultiIndex, Matrix]:
        return dict(self.terms)

    def describe(self) -> dict:
        return {
            "name": self.name,
            "n": self.n,
            "order": self.order,
            "dimV": self.dimV,
            "dimW": self.dimW,
            "term_count": len(self.terms),
        }

    def to_json(self) -> dict:
        return {
            "order": self.order,
            "dimV": self.dimV,
            "dimW": self.dimW,
            "terms": [
                {
                    "alpha": list(alpha.entries),
                    "matrix": [[format_rational(v) for v in row] for row in m],
                }
                for alpha, m in self.terms
            ],
        }


def custom_operator(
    terms: Sequence[tuple[MultiIndex | tuple[int, ...], Sequence[Sequence]]],
    name: str = "custom",
) -> DiffOperator:
    """Validate and freeze a term list into a DiffOperator.

    Requires a nonempty list, one common order and shape across terms,
    distinct multi-indices, and at least one nonzero matrix entry.
    """
    if not terms:
        raise ValueError("operator needs at least one term")
    seen: dict[MultiIndex, Matrix] = {}
    n = order = dim_v = dim_w = None
    any_nonzero = False
    for alpha_raw, matrix_raw in terms:
        alpha = alpha_raw if isinstance(alpha_raw, MultiIndex) else MultiIndex(tuple(alpha_raw))
        if n is None:
            n, order = len(alpha), alpha.order
        if len(alpha) != n:
            raise ValueError("terms disagree on the number of variables")
        if alpha.order != order:
            raise ValueError(f"mixed orders: |{alpha.entries}| != {order}")
        if alpha in seen:
            raise ValueError(f"duplicate multi-index {alpha.entries}")
        matrix = tuple(tuple(parse_rational(v) for v in row) for row in matrix_raw)
        if dim_w is None:
            dim_w = len(matrix)
            dim_v = len(matrix[0]) if matrix else 0
        if len(matrix) != dim_w or any(len(row) != dim_v for row in matrix):
            raise ValueError("terms disagree on matrix shape")
        if any(v != 0 for row in matrix for v in row):
            any_nonzero = True
        seen[alpha] = matrix
    if dim_v == 0 or dim_w == 0:
        raise ValueError("operator matrices must be nonempty")
    if not any_nonzero:
        raise ValueError("all-zero operator")
    ordered = tuple(
        sorted(seen.items(), key=lambda kv: (kv[0].order, tuple(-e for e in kv[0].entries)))
    )
    return DiffOperator(n=n, order=order, dimV=dim_v, dimW=dim_w, terms=ordered, name=name)


def operator_from_tensor4(tensor) -> DiffOperator:
    """First-order operator (Au)_{ij} = sum_{k,l} A_{ijkl} d_l u_k from a
    nested n x n x n x n coefficient array, output rows flattened row-major."""
    n = len(tensor)
    if n < 1 or any(
        len(tensor[i]) != n
        or any(len(tensor[i][j]) != n or len(tensor[i][j][k]) != n for j in range(n) for k in range(n))
        for i in range(n)
    ):
        raise ValueError("tensor4 must be n x n x n x n")
    terms = []
    for l in range(n):
        matrix = [
            [parse_rational(tensor[i][j][k][l]) for k in range(n)]
            for i in range(n)
            for j in range(n)
        ]
        terms.append((MultiIndex(tuple(1 if m == l else 0 for m in range(n))), matrix))
    return custom_operator(terms, name="tensor4")


def _unit_alpha(n: int, l: int) -> MultiIndex:
    return MultiIndex(tuple(1 if m == l else 0 for m in range(n)))


def builtin_operator(name: str, n: int, order: int | None = None) -> DiffOperator:
    """Construct one of the named operators on R^n.

    Names: grad, div, sym_grad, dev_grad, dev_sym_grad, grad_k (the last
    takes the gradient order as `order`).  The three symmetric or
    deviatoric variants need n >= 2 (in one variable they collapse).
    Matrix-valued outputs are flattened row-major, so dimW = n^2 for the
    first-order matrix operators and n^(k+1) for grad_k.
    """
    if n < 1:
        raise ValueError(f"need n >= 1, got {n}")
    if name in {"sym_grad", "dev_grad", "dev_sym_grad"} and n < 2:
        raise ValueError(f"{name} needs n >= 2")
    if name != "grad_k" and order is not None:
        raise ValueError(f"{name} does not take an order argument")

    inv_n = Fraction(1, n)
    half = Fraction(1, 2)

    def matrix_op(entry) -> DiffOperator:
        terms = []
        for l in range(n):
            rows = [[entry(i, j, k, l) for k in range(n)] for i in range(n) for j in range(n)]
            terms.append((_unit_alpha(n, l), rows))
        return custom_operator(terms, name=name)

    if name == "grad":
        return matrix_op(lambda i, j, k, l: Fraction(int(k == i and j == l)))
    if name == "div":
        terms = [(_unit_alpha(n, l), [[Fraction(int(k == l)) for k in range(n)]]) for l in range(n)]
        return custom_operator(terms, name=name)
    if name == "sym_grad":
        return matrix_op(
            lambda i, j, k, l: half * (int(j == l and k == i) + int(i == l and k == j))
        )
    if name == "dev_grad":
        return matrix_op(
            lambda i, j, k, l: Fraction(int(k == i and j == l)) - inv_n * int(i == j and k == l)
        )
    if name == "dev_sym_grad":
        return matrix_op(
            lambda i, j, k, l: half * (int(j == l and k == i) + int(i == l and k == j))
            - inv_n * int(i == j and k == l)
        )
    if name == "grad_k":
        if order is None or order < 1:
            raise ValueError("grad_k needs an order >= 1")
        basis_k = monomial_basis(n, order)
        alphas = [mi for mi in basis_k.exponents if mi.order == order]
        dim_w = n ** (order + 1)
        terms = []
        for alpha in alphas:
            rows = [[Fraction(0)] * n for _ in range(dim_w)]
            for row in range(dim_w):
                digits = []
                rest, i_comp = row, row // (n**order)
                rest -= i_comp * (n**order)
                for _ in range(order):
                    rest, d = divmod(rest, n)
                    digits.append(d)
                counts = [0] * n
                for d in digits:
                    counts[d] += 1
                if tuple(counts) == alpha.entries:
                    rows[row][i_comp] = Fraction(1)
            terms.append((alpha, rows))
        return custom_operator(terms, name=f"grad_{order}")
    raise ValueError(f"unknown operator name: {name}")


def operator_from_json(obj: dict) -> DiffOperator:
    """Parse the JSON operator form: either an explicit term list
    {"order", "dimV", "dimW", "terms": [{"alpha", "matrix"}]} or a
    fourth-order tensor {"tensor4": nested array}."""
    if "tensor4" in obj:
        return operator_from_tensor4(obj["tensor4"])
    try:
        terms = [(tuple(t["alpha"]), t["matrix"]) for t in obj["terms"]]
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed operator spec: {exc}") from exc
    op = custom_operator(terms)
    for key in ("order", "dimV", "dimW"):
        if key in obj and obj[key] != getattr(op, key):
            raise ValueError(f"operator spec field {key}={obj[key]} does not match terms")
    return op


def apply_operator(A: DiffOperator, p: PolyVec) -> PolyVec:
    """Exact A p, a dimW-valued polynomial of degree <= deg(p) - order."""
    if p.dimV != A.dimV:
        raise ValueError(f"operator expects dimV={A.dimV}, polynomial has {p.dimV}")
    if p.basis.n != A.n:
        raise ValueError(f"operator lives on R^{A.n}, polynomial on R^{p.basis.n}")
    target = monomial_basis(A.n, max(p.basis.K - A.order, 0))
    coeffs = [Fraction(0)] * (A.dimW * target.size)
    for alpha, matrix in A.terms:
        dp = differentiate(p, alpha)
        for j in range(target.size):
            for w in range(A.dimW):
                acc = Fraction(0)
                for v in range(A.dimV):
                    m = matrix[w][v]
                    if m != 0:
                        acc += m * dp.coeffs[j * A.dimV + v]
                if acc != 0:
                    coeffs[j * A.dimW + w] += acc
    return PolyVec(target, A.dimW, tuple(coeffs))


@dataclass(frozen=True)
class SymbolMatrix:
    """Exact symbol A[xi] = sum_alpha xi^alpha A_alpha at a complex
    rational frequency."""

    xi: tuple[ComplexRational, ...]
    matrix: tuple[tuple[ComplexRational, ...], ...]
    order: int

    @property
    def shape(self) -> tuple[int, int]:
        return (len(self.matrix), len(self.matrix[0]))

    def apply(self, v: Sequence) -> tuple[ComplexRational, ...]:
        vec = [ComplexRational.of(x) for x in v]
        if len(vec) != self.shape[1]:
            raise ValueError("vector length mismatch")
        return tuple(
            sum((row[j] * vec[j] for j in range(len(vec))), CR_ZERO) for row in self.matrix
        )

    def rank(self) -> int:
        return linalg.rank([list(row) for row in self.matrix], self.shape[1])

    def kernel(self) -> list[tuple[ComplexRational, ...]]:
        vecs = linalg.nullspace(
            [list(row) for row in self.matrix], self.shape[1], zero=CR_ZERO, one=CR_ONE
        )
        return [tuple(v) for v in vecs]

    def to_complex(self):
        import numpy as np

        return np.array([[v.to_complex() for v in row] for row in self.matrix])


def symbol_matrix(A: DiffOperator, xi: Sequence) -> SymbolMatrix:
    """Evaluate the symbol exactly; xi entries may be ints, Fractions,
    rational strings, floats, or complex numbers (floats keep their
    exact binary value)."""
    z = tuple(ComplexRational.of(v) for v in xi)
    if len(z) != A.n:
        raise ValueError(f"frequency has {len(z)} entries, expected {A.n}")
    rows = [[CR_ZERO for _ in range(A.dimV)] for _ in range(A.dimW)]
    for alpha, matrix in A.terms:
        power = CR_ONE
        for v, e in zip(z, alpha.entries):
            for _ in range(e):
                power = power * v
        if not power:
            continue
        for w in range(A.dimW):
            for v in range(A.dimV):
                if matrix[w][v] != 0:
                    rows[w][v] = rows[w][v] + power * matrix[w][v]
    return SymbolMatrix(xi=z, matrix=tuple(tuple(r) for r in rows), order=A.order)


@dataclass(frozen=True)
class Witness:
    """Exact certificate of symbol rank deficiency: A[xi] v = 0, v != 0."""

    xi: tuple[ComplexRational, ...]
    v: tuple[ComplexRational, ...]

    def to_json(self) -> dict:
        return {
            "xi": [str(z) for z in self.xi],
            "v": [str(z) for z in self.v],
        }


@dataclass(frozen=True)
class EllipticityReport:
    elliptic: bool
    elliptic_trials: int
    c_elliptic: bool
    c_elliptic_trials: int
    witness: Witness | None = None

    def to_json(self) -> dict:
        return {
            "elliptic": self.elliptic,
            "elliptic_trials": self.elliptic_trials,
            "c_elliptic": self.c_elliptic,
            "c_elliptic_trials": self.c_elliptic_trials,
            "witness": self.witness.to_json() if self.witness else None,
        }


def _witness_from(symbol: SymbolMatrix) -> Witness:
    kernel = symbol.kernel()
    assert kernel, "rank-deficient symbol must have a kernel vector"
    v = kernel[0]
    image = symbol.apply(v)
    assert all(not z for z in image), "witness must satisfy A[xi] v = 0 exactly"
    return Witness(xi=symbol.xi, v=v)


def ellipticity_probe(A: DiffOperator, trials: int = 8, seed: int = 0) -> EllipticityReport:
    """Randomized exact-rank test of the symbol.

    Real ellipticity evidence: `trials` random rational frequencies, each
    with numerator and denominator bounded by 10^6.  Complex evidence
    additionally checks the deterministic family xi = e_1 + i e_j,
    j = 2..n, before the random complex draws; that family catches the
    classical failures (for the deviatoric symmetric gradient on R^2 it
    produces the witness xi = (1, i), v = (1, -i)).  Rank drops yield an
    exact witness.  Full-rank evidence is only evidence, not proof.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    rng = random.Random(seed)

    def rand_fraction() -> Fraction:
        return Fraction(
            rng.randint(-_PROBE_COEFF_BOUND, _PROBE_COEFF_BOUND),
            rng.randint(1, _PROBE_COEFF_BOUND),
        )

    def rand_real_xi() -> list[ComplexRational]:
        while True:
            xi = [ComplexRational(rand_fraction()) for _ in range(A.n)]
            if any(xi):
                return xi

    def rand_complex_xi() -> list[ComplexRational]:
        while True:
            xi = [ComplexRational(rand_fraction(), rand_fraction()) for _ in range(A.n)]
            if any(xi):
                return xi

    witness: Witness | None = None
    c_elliptic = True
    for j in range(1, A.n):
        xi = [CR_ZERO] * A.n
        xi[0] = CR_ONE
        xi[j] = ComplexRational(Fraction(0), Fraction(1))
        symbol = symbol_matrix(A, xi)
        if symbol.rank() < A.dimV:
            c_elliptic = False
            if witness is None:
                witness = _witness_from(symbol)
    for _ in range(trials):
        symbol = symbol_matrix(A, rand_complex_xi())
        if symbol.rank() < A.dimV:
            c_elliptic = False
            if witness is None:
                witness = _witness_from(symbol)
    elliptic = True
    for _ in range(trials):
        symbol = symbol_matrix(A, rand_real_xi())
        if symbol.rank() < A.dimV:
            elliptic = False
            if witness is None:
                witness = _witness_from(symbol)
    if not elliptic:
        c_elliptic = False
    return EllipticityReport(
        elliptic=elliptic,
        elliptic_trials=trials,
        c_elliptic=c_elliptic,
        c_elliptic_trials=trials,
        witness=witness,
    )
