"""Exact linear algebra over the rationals plus mod-p row echelon forms.

Matrices are immutable tuples of tuples of Fraction.  The mod-p echelon
state uses numpy int64 rows; with p < 2**15 every intermediate product
stays far below the int64 range, so the reduction is exact.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

Matrix = tuple[tuple[Fraction, ...], ...]
Vector = tuple[Fraction, ...]


def mat(rows: Iterable[Iterable]) -> Matrix:
    m = tuple(tuple(Fraction(x) for x in row) for row in rows)
    if m and any(len(r) != len(m[0]) for r in m):
        raise ValueError("ragged matrix")
    return m


def identity(n: int) -> Matrix:
    return tuple(
        tuple(Fraction(1 if i == j else 0) for j in range(n)) for i in range(n)
    )


def zeros(n: int, m: int) -> Matrix:
    return tuple(tuple(Fraction(0) for _ in range(m)) for _ in range(n))


def transpose(a: Matrix) -> Matrix:
    return tuple(zip(*a)) if a else ()


def mat_mul(a: Matrix, b: Matrix) -> Matrix:
    bt = transpose(b)
    return tuple(
        tuple(sum(x * y for x, y in zip(row, col)) for col in bt) for row in a
    )


def mat_vec(a: Matrix, v: Sequence[Fraction]) -> Vector:
    return tuple(sum(x * y for x, y in zip(row, v)) for row in a)


def mat_add(a: Matrix, b: Matrix) -> Matrix:
    return tuple(tuple(x + y for x, y in zip(ra, rb)) for ra, rb in zip(a, b))


def mat_scale(a: Matrix, c: Fraction) -> Matrix:
    return tuple(tuple(c * x for x in row) for row in a)


def is_symmetric(a: Matrix) -> bool:
    n = len(a)
    return all(a[i][j] == a[j][i] for i in range(n) for j in range(i + 1, n))


def block_diag(blocks: Sequence[Matrix]) -> Matrix:
    n = sum(len(b) for b in blocks)
    out = [[Fraction(0)] * n for _ in range(n)]
    off = 0
    for b in blocks:
        k = len(b)
        for i in range(k):
            for j in range(k):
                out[off + i][off + j] = b[i][j]
        off += k
    return tuple(tuple(row) for row in out)


def det(a: Matrix) -> Fraction:
    """Determinant by fraction Gaussian elimination with partial pivoting."""
    n = len(a)
    m = [list(row) for row in a]
    out = Fraction(1)
    for c in range(n):
        piv = next((r for r in range(c, n) if m[r][c] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != c:
            m[c], m[piv] = m[piv], m[c]
            out = -out
        out *= m[c][c]
        inv = 1 / m[c][c]
        for r in range(c + 1, n):
            if m[r][c] == 0:
                continue
            f = m[r][c] * inv
            for k in range(c, n):
                m[r][k] -= f * m[c][k]
    return out


def rank(a: Matrix) -> int:
    if not a:
        return 0
    n, cols = len(a), len(a[0])
    m = [list(row) for row in a]
    r = 0
    for c in range(cols):
        piv = next((i for i in range(r, n) if m[i][c] != 0), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        inv = 1 / m[r][c]
        for i in range(r + 1, n):
            if m[i][c] == 0:
                continue
            f = m[i][c] * inv
            for k in range(c, cols):
                m[i][k] -= f * m[r][k]
        r += 1
        if r == n:
            break
    return r


def solve(a: Matrix, b: Sequence[Fraction]) -> Vector | None:
    """One exact solution of a x = b, or None when the system is inconsistent.

    Free variables are set to zero, so callers get a deterministic
    representative even for singular systems.
    """
    n = len(a)
    cols = len(a[0]) if a else 0
    m = [list(row) + [Fraction(b[i])] for i, row in enumerate(a)]
    pivots: list[tuple[int, int]] = []
    r = 0
    for c in range(cols):
        piv = next((i for i in range(r, n) if m[i][c] != 0), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        inv = 1 / m[r][c]
        m[r] = [x * inv for x in m[r]]
        for i in range(n):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                m[i] = [x - f * y for x, y in zip(m[i], m[r])]
        pivots.append((r, c))
        r += 1
    for i in range(r, n):
        if m[i][cols] != 0:
            return None
    x = [Fraction(0)] * cols
    for row, col in pivots:
        x[col] = m[row][cols]
    return tuple(x)


def inverse(a: Matrix) -> Matrix:
    n = len(a)
    cols = []
    for j in range(n):
        e = [Fraction(1 if i == j else 0) for i in range(n)]
        col = solve(a, e)
        if col is None or any(
            sum(a[i][k] * col[k] for k in range(n)) != e[i] for i in range(n)
        ):
            raise ZeroDivisionError("matrix is singular")
        cols.append(col)
    return transpose(tuple(cols))


def congruent_diagonalize(a: Matrix) -> tuple[list[Fraction], Matrix]:
    """Symmetric Gaussian reduction: returns (d, P) with P^T a P = diag(d).

    Requires a symmetric nondegenerate matrix.  When a pivot slot has a
    zero diagonal entry, a column with a nonzero off-diagonal pairing is
    added first (e_i <- e_i + e_j), which always produces a usable pivot.
    """
    n = len(a)
    g = [list(row) for row in a]
    p = [list(row) for row in identity(n)]

    def add_col(dst: int, src: int, f: Fraction) -> None:
        # basis change e_dst <- e_dst + f e_src, applied congruently
        for r in range(n):
            g[r][dst] += f * g[r][src]
        for r in range(n):
            g[dst][r] += f * g[src][r]
        for r in range(n):
            p[r][dst] += f * p[r][src]

    for i in range(n):
        if g[i][i] == 0:
            j = next((k for k in range(i + 1, n) if g[i][k] != 0), None)
            if j is None:
                raise ZeroDivisionError("degenerate symmetric matrix")
            add_col(i, j, Fraction(1))
            if g[i][i] == 0:
                # both diagonals were zero: e_i + e_j has norm 2 g[i][j] != 0
                raise ArithmeticError("pivot repair failed")
        for j in range(i + 1, n):
            if g[i][j] != 0:
                add_col(j, i, -g[i][j] / g[i][i])
    d = [g[i][i] for i in range(n)]
    return d, tuple(tuple(row) for row in p)


def scale_columns(p: Matrix, factors: Sequence[Fraction]) -> Matrix:
    return tuple(
        tuple(x * factors[j] for j, x in enumerate(row)) for row in p
    )


class EchelonModP:
    """Incremental reduced row echelon basis over F_p.

    Rows are kept fully reduced against each other (Gauss-Jordan), so
    reducing a new vector is a single matrix product.  Deterministic:
    the resulting basis depends only on the multiset of inserted rows.
    """

    def __init__(self, width: int, p: int):
        self.width = width
        self.p = p
        self._rows = np.zeros((0, width), dtype=np.int64)
        self._cols: list[int] = []

    @property
    def rank(self) -> int:
        return len(self._cols)

    def reduce(self, vec: np.ndarray) -> np.ndarray:
        v = np.asarray(vec, dtype=np.int64) % self.p
        if self._cols:
            coeffs = v[self._cols]
            if coeffs.any():
                v = (v - coeffs @ self._rows) % self.p
        return v

    def insert(self, vec: np.ndarray) -> bool:
        """Reduce vec against the basis; returns True if it added rank."""
        v = self.reduce(vec)
        nz = np.nonzero(v)[0]
        if len(nz) == 0:
            return False
        lead = int(nz[0])
        v = v * pow(int(v[lead]), -1, self.p) % self.p
        if self._cols:
            coeffs = self._rows[:, lead]
            if coeffs.any():
                self._rows = (self._rows - np.outer(coeffs, v)) % self.p
        self._rows = np.vstack([self._rows, v])
        self._cols.append(lead)
        return True


def rank_mod_p(rows: Iterable[np.ndarray], width: int, p: int) -> int:
    ech = EchelonModP(width, p)
    for r in rows:
        ech.insert(r)
    return ech.rank
