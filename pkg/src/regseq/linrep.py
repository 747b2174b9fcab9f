"""q-linear representations of regular sequences.

A representation is the data (A_0, ..., A_{q-1}, e, v0): the sequence value
at n is ``e . A_{r_0} ... A_{r_{l-1}} . v0`` over the q-ary digits
r_{l-1}...r_0 of n (least significant digit first in the product).  All
sequence-level arithmetic is exact rational, so these routines double as
test oracles for the rigorous numerics.

Two modes are distinguished.  In ``Sequence`` mode the recursion
``v(qn+r) = A_r v(n)`` is required to hold for qn+r = 0 as well, which
forces v0 to be a fixed vector of A_0; ``MatrixProduct`` mode drops that
gate (the zero index is then special-cased wherever it matters).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum

from gmpy2 import mpq

from . import exact
from .exact import Matrix, mat, mat_add, mat_mul, mat_sub, mat_vec, identity, zeros


class SchemaError(ValueError):
    """Input does not conform to the representation file schema."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


class DimensionMismatch(SchemaError):
    pass


class ModeViolation(SchemaError):
    """Sequence mode requires A_0 v0 = v0 exactly."""


class Mode(str, Enum):
    SEQUENCE = "sequence"
    MATRIX_PRODUCT = "matrix"


@dataclass(frozen=True)
class LinRep:
    q: int
    d: int
    matrices: tuple  # q matrices, d x d, mpq entries
    left: tuple  # row vector, length d
    initial: tuple  # column vector, length d
    mode: Mode

    def validate(self) -> "LinRep":
        if self.q < 2:
            raise SchemaError("q", "q must be at least 2")
        if self.d < 1:
            raise SchemaError("dimension", "dimension must be at least 1")
        if len(self.matrices) != self.q:
            raise DimensionMismatch("matrices", f"expected {self.q} matrices")
        for r, a in enumerate(self.matrices):
            if len(a) != self.d or any(len(row) != self.d for row in a):
                raise DimensionMismatch(f"matrices[{r}]", f"expected {self.d}x{self.d}")
        if len(self.left) != self.d:
            raise DimensionMismatch("left", f"expected length {self.d}")
        if len(self.initial) != self.d:
            raise DimensionMismatch("initial", f"expected length {self.d}")
        if self.mode == Mode.SEQUENCE:
            if mat_vec(self.matrices[0], self.initial) != tuple(self.initial):
                raise ModeViolation("initial", "sequence mode requires A_0 v0 = v0")
        return self


@dataclass(frozen=True)
class DerivedMatrices:
    """B_r = sum_{r'<r} A_{r'} and C = sum_r A_r."""

    b: tuple  # B_0 .. B_{q-1}
    c: Matrix

    @staticmethod
    def of(rep: LinRep) -> "DerivedMatrices":
        b = [zeros(rep.d)]
        for r in range(1, rep.q):
            b.append(mat_add(b[-1], rep.matrices[r - 1]))
        c = mat_add(b[-1], rep.matrices[rep.q - 1])
        return DerivedMatrices(tuple(b), c)


def make_linrep(q, matrices, left, initial, mode=Mode.SEQUENCE) -> LinRep:
    matrices = tuple(mat(a) for a in matrices)
    d = len(matrices[0])
    rep = LinRep(
        q=int(q),
        d=d,
        matrices=matrices,
        left=tuple(mpq(x) for x in left),
        initial=tuple(mpq(x) for x in initial),
        mode=Mode(mode),
    )
    return rep.validate()


# -- digits and evaluation ------------------------------------------------------


def digits(n: int, q: int) -> list[int]:
    """q-ary digits, least significant first; zero has the empty expansion."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    out = []
    while n:
        n, r = divmod(n, q)
        out.append(r)
    return out


def undigits(ds, q: int) -> int:
    n = 0
    for d in reversed(ds):
        n = n * q + d
    return n


def matrix_f(rep: LinRep, n: int) -> Matrix:
    """f(n) = A_{r_0} ... A_{r_{l-1}}; f(0) = I.

    Iterates over the digits from the most significant end, using
    f(qn+r) = A_r f(n).
    """
    out = identity(rep.d)
    for r in reversed(digits(n, rep.q)):
        out = mat_mul(rep.matrices[r], out)
    return out


def vector_v(rep: LinRep, n: int) -> tuple:
    """v(n) = f(n) v0, via the digit recursion."""
    v = tuple(rep.initial)
    for r in reversed(digits(n, rep.q)):
        v = mat_vec(rep.matrices[r], v)
    return v


def term(rep: LinRep, n: int):
    """x(n) = e . f(n) . v0, exact rational."""
    return sum(l * x for l, x in zip(rep.left, vector_v(rep, n)))


def vector_table(rep: LinRep, upto: int) -> list:
    """v(n) for 0 <= n < upto by dynamic programming (shared subproducts)."""
    out = [tuple(rep.initial)]
    for n in range(1, upto):
        out.append(mat_vec(rep.matrices[n % rep.q], out[n // rep.q]))
    return out


def matrix_table(rep: LinRep, upto: int) -> list:
    """f(n) for 0 <= n < upto by dynamic programming."""
    out = [identity(rep.d)]
    for n in range(1, upto):
        out.append(mat_mul(rep.matrices[n % rep.q], out[n // rep.q]))
    return out


# -- summatory functions ---------------------------------------------------------


def summatory_direct(rep: LinRep, n_upper: int):
    """X(N) = sum_{0 <= n < N} x(n) by direct summation (test oracle)."""
    vs = vector_table(rep, max(n_upper, 1))
    return sum(
        sum(l * x for l, x in zip(rep.left, vs[n])) for n in range(n_upper)
    ) if n_upper > 0 else mpq(0)


def summatory_fast(rep: LinRep, n_upper: int):
    """F(N) and X(N) in O(log N) matrix operations.

    Uses F(qN+r) = C F(N) + B_r f(N) + (I - A_0) [qN+r > 0] together with
    f(qN+r) = A_r f(N), iterating over the digits of N from the most
    significant end.
    """
    der = DerivedMatrices.of(rep)
    d = rep.d
    f = identity(d)
    big_f = zeros(d)
    prefix = 0
    i_minus_a0 = mat_sub(identity(d), rep.matrices[0])
    for r in reversed(digits(n_upper, rep.q)):
        big_f = mat_add(mat_mul(der.c, big_f), mat_mul(der.b[r], f))
        if prefix or r:
            big_f = mat_add(big_f, i_minus_a0)
        f = mat_mul(rep.matrices[r], f)
        prefix = prefix * rep.q + r
    x = sum(
        rep.left[i] * sum(big_f[i][j] * rep.initial[j] for j in range(d))
        for i in range(d)
    )
    return big_f, x


# -- file format -------------------------------------------------------------------


def _parse_rational(x, path: str):
    if isinstance(x, bool):
        raise SchemaError(path, "expected a rational, got a boolean")
    if isinstance(x, int):
        return mpq(x)
    if isinstance(x, str):
        try:
            return mpq(x)
        except ValueError:
            raise SchemaError(path, f"not a rational: {x!r}") from None
    raise SchemaError(path, f"expected int or 'p/q' string, got {type(x).__name__}")


_FIELDS = {"q", "dimension", "mode", "matrices", "left", "initial"}


def parse_linrep(text: str, *, enforce_mode: bool = True) -> LinRep:
    """Parse the JSON representation format; errors carry field paths.

    ``enforce_mode=False`` skips the sequence-mode fixed-vector gate so that
    validation tooling can report it as a failing invariant instead.
    """
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise SchemaError("$", f"invalid JSON: {e}") from None
    if not isinstance(obj, dict):
        raise SchemaError("$", "expected a JSON object")
    unknown = set(obj) - _FIELDS
    if unknown:
        raise SchemaError(sorted(unknown)[0], "unknown field")
    missing = _FIELDS - set(obj)
    if missing:
        raise SchemaError(sorted(missing)[0], "missing field")
    if not isinstance(obj["q"], int) or isinstance(obj["q"], bool):
        raise SchemaError("q", "expected an integer")
    if not isinstance(obj["dimension"], int) or isinstance(obj["dimension"], bool):
        raise SchemaError("dimension", "expected an integer")
    q, d = obj["q"], obj["dimension"]
    if obj["mode"] not in (Mode.SEQUENCE.value, Mode.MATRIX_PRODUCT.value):
        raise SchemaError("mode", "expected 'sequence' or 'matrix'")
    ms = obj["matrices"]
    if not isinstance(ms, list) or len(ms) != q:
        raise DimensionMismatch("matrices", f"expected a list of {q} matrices")
    matrices = []
    for r, a in enumerate(ms):
        if not isinstance(a, list) or len(a) != d or any(
            not isinstance(row, list) or len(row) != d for row in a
        ):
            raise DimensionMismatch(f"matrices[{r}]", f"expected a {d}x{d} matrix")
        matrices.append(
            tuple(
                tuple(_parse_rational(x, f"matrices[{r}][{i}][{j}]")
                      for j, x in enumerate(row))
                for i, row in enumerate(a)
            )
        )
    for name in ("left", "initial"):
        if not isinstance(obj[name], list) or len(obj[name]) != d:
            raise DimensionMismatch(name, f"expected a list of length {d}")
    left = tuple(_parse_rational(x, f"left[{i}]") for i, x in enumerate(obj["left"]))
    initial = tuple(
        _parse_rational(x, f"initial[{i}]") for i, x in enumerate(obj["initial"])
    )
    rep = LinRep(q=q, d=d, matrices=tuple(matrices), left=left, initial=initial,
                 mode=Mode(obj["mode"]))
    if not enforce_mode:
        try:
            return rep.validate()
        except ModeViolation:
            return rep
    return rep.validate()


def _emit_rational(x) -> int | str:
    x = mpq(x)
    return int(x) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def serialize_linrep(rep: LinRep) -> str:
    obj = {
        "q": rep.q,
        "dimension": rep.d,
        "mode": rep.mode.value,
        "matrices": [
            [[_emit_rational(x) for x in row] for row in a] for a in rep.matrices
        ],
        "left": [_emit_rational(x) for x in rep.left],
        "initial": [_emit_rational(x) for x in rep.initial],
    }
    return json.dumps(obj, indent=2, sort_keys=True)
