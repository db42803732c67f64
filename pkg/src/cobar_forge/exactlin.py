"""Exact linear algebra over prime fields and over the integers.

Everything here works on exact residues or Python integers. Matrices over
F_p are stored sparsely (``FpMatrix``) but eliminated densely with numpy
int64 arrays; with p <= 7 and a reduction after every update there is no
overflow risk.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import gcd
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "FpMatrix",
    "IntMatrix",
    "RowReduction",
    "LinearSolver",
    "row_reduce",
    "rref",
    "rank_mod_p",
    "kernel_mod_p",
    "smith_normal_form",
    "snf_divisors",
    "inv_mod",
    "is_prime",
]


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    d = 2
    while d * d <= n:
        if n % d == 0:
            return False
        d += 1
    return True


def inv_mod(a: int, p: int) -> int:
    a %= p
    if a == 0:
        raise ZeroDivisionError(f"0 has no inverse mod {p}")
    return pow(a, p - 2, p)


@dataclass(frozen=True)
class FpMatrix:
    """Sparse matrix over F_p, stored as ``{(row, col): residue}``."""

    p: int
    rows: int
    cols: int
    entries: dict = field(default_factory=dict)

    def __post_init__(self):
        if not is_prime(self.p):
            raise ValueError(f"{self.p} is not prime")
        clean = {}
        for (r, c), v in dict(self.entries).items():
            if not (0 <= r < self.rows and 0 <= c < self.cols):
                raise IndexError(f"entry ({r}, {c}) outside {self.rows}x{self.cols}")
            v %= self.p
            if v:
                clean[(r, c)] = v
        object.__setattr__(self, "entries", clean)

    @classmethod
    def from_dense(cls, p: int, data) -> "FpMatrix":
        arr = np.asarray(data, dtype=np.int64)
        if arr.ndim != 2:
            arr = arr.reshape(len(data), -1) if len(data) else np.zeros((0, 0), np.int64)
        rows, cols = arr.shape
        entries = {(int(r), int(c)): int(arr[r, c]) for r, c in zip(*np.nonzero(arr % p))}
        return cls(p, rows, cols, entries)

    def to_dense(self) -> np.ndarray:
        a = np.zeros((self.rows, self.cols), dtype=np.int64)
        for (r, c), v in self.entries.items():
            a[r, c] = v
        return a

    def apply(self, v: Sequence[int]) -> list[int]:
        out = [0] * self.rows
        for (r, c), x in self.entries.items():
            out[r] = (out[r] + x * v[c]) % self.p
        return out


@dataclass(frozen=True)
class IntMatrix:
    """Sparse integer matrix; entries are arbitrary precision ints."""

    rows: int
    cols: int
    entries: dict = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for (r, c), v in dict(self.entries).items():
            if not (0 <= r < self.rows and 0 <= c < self.cols):
                raise IndexError(f"entry ({r}, {c}) outside {self.rows}x{self.cols}")
            if v:
                clean[(r, c)] = int(v)
        object.__setattr__(self, "entries", clean)

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[int]], cols: int | None = None) -> "IntMatrix":
        ncols = cols if cols is not None else (len(rows[0]) if rows else 0)
        ent = {(i, j): v for i, row in enumerate(rows) for j, v in enumerate(row) if v}
        return cls(len(rows), ncols, ent)

    def to_lists(self) -> list[list[int]]:
        out = [[0] * self.cols for _ in range(self.rows)]
        for (r, c), v in self.entries.items():
            out[r][c] = v
        return out


# ---------------------------------------------------------------------------
# F_p elimination


def rref(a: np.ndarray, p: int) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form of ``a`` mod p; pivots are column indices.

    Pivot choice is deterministic: columns left to right, first row with a
    nonzero entry.
    """
    a = np.array(a, dtype=np.int64) % p
    m, n = a.shape
    pivots: list[int] = []
    r = 0
    for c in range(n):
        if r == m:
            break
        nz = np.nonzero(a[r:, c])[0]
        if nz.size == 0:
            continue
        piv = r + int(nz[0])
        if piv != r:
            a[[r, piv]] = a[[piv, r]]
        a[r] = (a[r] * inv_mod(int(a[r, c]), p)) % p
        col = a[:, c].copy()
        col[r] = 0
        nzr = np.nonzero(col)[0]
        if nzr.size:
            a[nzr] = (a[nzr] - np.outer(col[nzr], a[r])) % p
        pivots.append(c)
        r += 1
    return a, pivots


def rank_mod_p(a, p: int) -> int:
    a = np.asarray(a, dtype=np.int64)
    if a.size == 0:
        return 0
    return len(rref(a, p)[1])


def kernel_mod_p(a, p: int) -> np.ndarray:
    """Basis of {v : a v = 0} as the rows of the returned array."""
    a = np.asarray(a, dtype=np.int64)
    m, n = a.shape
    if n == 0:
        return np.zeros((0, 0), dtype=np.int64)
    if m == 0:
        return np.eye(n, dtype=np.int64)
    r, piv = rref(a, p)
    free = [c for c in range(n) if c not in set(piv)]
    basis = np.zeros((len(free), n), dtype=np.int64)
    for i, f in enumerate(free):
        basis[i, f] = 1
        for k, pc in enumerate(piv):
            basis[i, pc] = (-r[k, f]) % p
    return basis


@dataclass
class RowReduction:
    rank: int
    pivots: list[int]
    kernel_basis: list[list[int]]
    image_basis: list[list[int]]


def row_reduce(m: FpMatrix) -> RowReduction:
    """Rank, pivot columns, kernel basis and column-space basis of ``m``."""
    a = m.to_dense()
    if m.rows == 0 or m.cols == 0:
        ker = [list(map(int, row)) for row in np.eye(m.cols, dtype=np.int64)]
        return RowReduction(0, [], ker, [])
    _, piv = rref(a, m.p)
    ker = kernel_mod_p(a, m.p)
    image = [list(map(int, a[:, c])) for c in piv]
    return RowReduction(len(piv), piv, [list(map(int, v)) for v in ker], image)


class LinearSolver:
    """Precomputed solver for ``A x = b`` over F_p, ``A`` of shape (m, n).

    Solutions are batched: ``solve`` takes b with shape (m,) or (m, k).
    """

    def __init__(self, a, p: int):
        a = np.asarray(a, dtype=np.int64) % p
        self.p = p
        self.shape = a.shape
        m, n = a.shape
        aug = np.concatenate([a, np.eye(m, dtype=np.int64)], axis=1)
        red, piv = rref(aug, p)
        self.pivots = [c for c in piv if c < n]
        self.rank = len(self.pivots)
        self._transform = red[:, n:]
        self._reduced = red[:, :n]

    def image_contains(self, b) -> np.ndarray | bool:
        c = (self._transform @ np.asarray(b, dtype=np.int64)) % self.p
        rest = c[self.rank:]
        if rest.ndim == 1:
            return not rest.any()
        return ~rest.any(axis=0)

    def solve(self, b) -> np.ndarray:
        """One preimage (free variables set to zero); raises if none exists."""
        b = np.asarray(b, dtype=np.int64)
        c = (self._transform @ b) % self.p
        if c[self.rank:].any():
            raise ValueError("right-hand side is not in the image")
        n = self.shape[1]
        out = np.zeros((n,) + b.shape[1:], dtype=np.int64)
        for k, pc in enumerate(self.pivots):
            out[pc] = c[k]
        return out


# ---------------------------------------------------------------------------
# Smith normal form over Z


def smith_normal_form(m: IntMatrix) -> tuple[list[int], int]:
    """Cokernel invariants of ``m`` viewed as a map Z^cols -> Z^rows.

    ``m`` acts on column vectors, so the cokernel is Z^rows / (column span).
    Returns the nontrivial divisors d_1 | d_2 | ... (units dropped) and the
    free rank of the cokernel.
    """
    a = m.to_lists()
    diag = _diagonalize(a, m.rows, m.cols)
    nonzero = [abs(d) for d in diag if d]
    divisors = [d for d in nonzero if d != 1]
    return sorted(divisors), m.rows - len(nonzero)


def snf_divisors(rows: Sequence[Sequence[int]], target_dim: int) -> tuple[list[int], int]:
    """Cokernel of the lattice spanned by ``rows`` inside Z^target_dim."""
    mat = IntMatrix.from_rows([list(r) for r in rows], target_dim) if rows else IntMatrix(0, target_dim)
    # transpose so that generators become columns of a map into Z^target_dim
    t = IntMatrix(mat.cols, mat.rows, {(c, r): v for (r, c), v in mat.entries.items()})
    return smith_normal_form(t)


def _diagonalize(a: list[list[int]], rows: int, cols: int) -> list[int]:
    a = [row[:] for row in a]
    diag: list[int] = []
    top = 0
    while top < min(rows, cols):
        # pick the smallest nonzero entry in the remaining block
        best = None
        for i in range(top, rows):
            for j in range(top, cols):
                v = a[i][j]
                if v and (best is None or abs(v) < abs(a[best[0]][best[1]])):
                    best = (i, j)
        if best is None:
            break
        i, j = best
        a[top], a[i] = a[i], a[top]
        for row in a:
            row[top], row[j] = row[j], row[top]
        while True:
            piv = a[top][top]
            done = True
            for i in range(top + 1, rows):
                q = a[i][top] // piv
                if q:
                    a[i] = [x - q * y for x, y in zip(a[i], a[top])]
                if a[i][top]:
                    done = False
            for j in range(top + 1, cols):
                q = a[top][j] // piv
                if q:
                    for row in a:
                        row[j] -= q * row[top]
                if a[top][j]:
                    done = False
            if done:
                # divisibility condition for the rest of the block
                bad = None
                for i in range(top + 1, rows):
                    for j in range(top + 1, cols):
                        if a[i][j] % piv:
                            bad = i
                            break
                    if bad is not None:
                        break
                if bad is None:
                    break
                a[top] = [x + y for x, y in zip(a[top], a[bad])]
                continue
            # move the smallest nonzero in row/col top to the pivot
            cand = [(abs(a[i][top]), i, top) for i in range(top, rows) if a[i][top]]
            cand += [(abs(a[top][j]), top, j) for j in range(top, cols) if a[top][j]]
            _, i, j = min(cand)
            if i != top:
                a[top], a[i] = a[i], a[top]
            if j != top:
                for row in a:
                    row[top], row[j] = row[j], row[top]
        diag.append(a[top][top])
        top += 1
    # normalize so each divides the next (already holds, kept as a guard)
    out = [abs(d) for d in diag]
    for k in range(len(out)):
        for l in range(k + 1, len(out)):
            g = gcd(out[k], out[l])
            if g and g != out[k]:
                out[k], out[l] = g, out[k] * out[l] // g
    return out


def dense_from_vectors(vectors: Iterable[Sequence[int]], n: int) -> np.ndarray:
    vs = [list(v) for v in vectors]
    if not vs:
        return np.zeros((0, n), dtype=np.int64)
    return np.asarray(vs, dtype=np.int64)
