"""Dense exact linear algebra over finite fields F_q, q = p^e.

Matrices are plain ``int64`` numpy arrays holding canonical representatives
in ``[0, q)``.  Vectors are rows and matrices act on the right, so a linear
map ``v -> v @ A`` has the images of the basis vectors as the rows of ``A``.

Prime fields use numpy arithmetic directly (matrix products go through
float64 BLAS, which is exact at the sizes used here).  Extension fields use
the Conway polynomial fixed by :mod:`galois`.  For q <= 256 elementwise
arithmetic goes through precomputed tables, and matrix products through the
F_p-linear representation: each element acts as an e x e matrix over F_p on
its base-p digit vector, so one prime-field product does the whole job.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "FieldSpec",
    "Subspace",
    "rref",
    "rank",
    "kernel_basis",
    "left_kernel",
    "solve_left",
    "inverse",
    "matrix_power",
    "fitting_split",
    "is_nilpotent_matrix",
    "intersect",
    "subspace_sum",
    "contains",
    "is_complementary",
]

_PANEL = 48
# largest extension field with q x q lookup tables
_TABLE_MAX = 256
# exact float64 accumulation bound for prime-field products
_FLOAT_EXACT = 2 ** 52


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    d = 2
    while d * d <= n:
        if n % d == 0:
            return False
        d += 1
    return True


@dataclass(frozen=True)
class FieldSpec:
    """The field F_q with q = p**e."""

    p: int
    e: int = 1

    def __post_init__(self):
        if not _is_prime(self.p) or self.p > 97:
            raise ValueError(f"p must be a prime <= 97, got {self.p}")
        if self.e < 1:
            raise ValueError(f"extension degree must be >= 1, got {self.e}")

    @property
    def q(self) -> int:
        return self.p ** self.e

    @property
    def is_prime(self) -> bool:
        return self.e == 1

    @cached_property
    def _gf(self):
        import galois

        return galois.GF(self.p ** self.e)

    @cached_property
    def _inverses(self) -> np.ndarray:
        if self.is_prime:
            inv = np.zeros(self.p, dtype=np.int64)
            for a in range(1, self.p):
                inv[a] = pow(a, -1, self.p)
            return inv
        gf = self._gf
        nz = gf(np.arange(1, self.q))
        return np.concatenate([[0], (gf(1) / nz).view(np.ndarray)]).astype(np.int64)

    def to_json(self) -> dict:
        return {"p": self.p, "e": self.e}

    @classmethod
    def from_json(cls, data: dict) -> "FieldSpec":
        return cls(int(data["p"]), int(data.get("e", 1)))

    # -- element arithmetic -------------------------------------------------

    def array(self, data) -> np.ndarray:
        """Coerce integer data to canonical representatives.

        Over a prime field any integers are reduced mod p.  Over an extension
        field integers are read as prime-subfield elements (reduced mod p), so
        modules built over F_p embed unchanged.
        """
        try:
            a = np.asarray(data, dtype=np.int64)
        except OverflowError:
            a = np.asarray(data, dtype=object)
        return np.mod(a, self.p).astype(np.int64)

    def elements(self) -> range:
        return range(self.q)

    def _g(self, a):
        return self._gf(np.asarray(a, dtype=np.int64))

    @cached_property
    def _tables(self):
        """(add, neg, mul) lookup tables, or None when q is too large."""
        if self.is_prime or self.q > _TABLE_MAX:
            return None
        gf = self._gf
        x = gf(np.arange(self.q))
        add = (x[:, None] + x[None, :]).view(np.ndarray).astype(np.int64)
        mul = (x[:, None] * x[None, :]).view(np.ndarray).astype(np.int64)
        neg = (-x).view(np.ndarray).astype(np.int64)
        return add, neg, mul

    @cached_property
    def _linrep(self):
        """digits (q, e) and multiplication matrices (q, e, e) over F_p."""
        p, e = self.p, self.e
        ints = np.arange(self.q)
        digits = np.stack([(ints // p ** i) % p for i in range(e)], axis=1).astype(np.int64)
        gf = self._gf
        basis = gf(np.array([p ** i for i in range(e)]))
        prods = (basis[None, :] * gf(ints)[:, None]).view(np.ndarray).astype(np.int64)
        mats = np.stack([(prods // p ** i) % p for i in range(e)], axis=-1)
        return digits, mats

    def add(self, a, b) -> np.ndarray:
        if self.is_prime:
            return (np.asarray(a) + np.asarray(b)) % self.p
        if self._tables is not None:
            return self._tables[0][np.asarray(a, dtype=np.int64), np.asarray(b, dtype=np.int64)]
        return (self._g(a) + self._g(b)).view(np.ndarray).astype(np.int64)

    def sub(self, a, b) -> np.ndarray:
        if self.is_prime:
            return (np.asarray(a) - np.asarray(b)) % self.p
        if self._tables is not None:
            t = self._tables
            return t[0][np.asarray(a, dtype=np.int64), t[1][np.asarray(b, dtype=np.int64)]]
        return (self._g(a) - self._g(b)).view(np.ndarray).astype(np.int64)

    def neg(self, a) -> np.ndarray:
        if self.is_prime:
            return (-np.asarray(a)) % self.p
        if self._tables is not None:
            return self._tables[1][np.asarray(a, dtype=np.int64)]
        return (-self._g(a)).view(np.ndarray).astype(np.int64)

    def mul(self, a, b) -> np.ndarray:
        """Elementwise (broadcasting) product."""
        if self.is_prime:
            return (np.asarray(a) * np.asarray(b)) % self.p
        if self._tables is not None:
            return self._tables[2][np.asarray(a, dtype=np.int64), np.asarray(b, dtype=np.int64)]
        return (self._g(a) * self._g(b)).view(np.ndarray).astype(np.int64)

    def _ext_matmul(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        digits, mats = self._linrep
        e = self.e
        Fp = FieldSpec(self.p)
        ad = digits[a]                    # (..., n, m, e)
        bm = mats[b]                      # (..., m, k, e, e)
        n, m = a.shape[-2:]
        k = b.shape[-1]
        A = ad.reshape(a.shape[:-2] + (n, m * e))
        B = np.swapaxes(bm, -3, -2).reshape(b.shape[:-2] + (m * e, k * e))
        C = Fp.matmul(A, B).reshape(np.broadcast_shapes(a.shape[:-2], b.shape[:-2]) + (n, k, e))
        return C @ (self.p ** np.arange(e, dtype=np.int64))

    def inv(self, a) -> np.ndarray | int:
        """Elementwise inverse; zero maps to zero."""
        out = self._inverses[np.asarray(a, dtype=np.int64)]
        return int(out) if np.ndim(out) == 0 else out

    def matmul(self, a, b) -> np.ndarray:
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        if a.shape[-1] == 0:
            shape = a.shape[:-1] + b.shape[-1:]
            return np.zeros(shape, dtype=np.int64)
        if not self.is_prime:
            if self.q <= _TABLE_MAX and a.ndim >= 2 and b.ndim >= 2:
                return self._ext_matmul(a, b)
            return (self._g(a) @ self._g(b)).view(np.ndarray).astype(np.int64)
        k = a.shape[-1]
        step = max(1, _FLOAT_EXACT // ((self.p - 1) ** 2 + 1))
        if k <= step:
            out = np.matmul(a.astype(np.float64), b.astype(np.float64))
            return np.mod(out, self.p).astype(np.int64)
        out = np.zeros(a.shape[:-1] + b.shape[-1:], dtype=np.int64)
        for s in range(0, k, step):
            part = np.matmul(a[..., s:s + step].astype(np.float64),
                             b[..., s:s + step, :].astype(np.float64))
            out = (out + np.mod(part, self.p).astype(np.int64)) % self.p
        return out

    def eye(self, n: int) -> np.ndarray:
        return np.eye(n, dtype=np.int64)

    def zeros(self, *shape: int) -> np.ndarray:
        return np.zeros(shape, dtype=np.int64)

    def random(self, shape, rng: np.random.Generator) -> np.ndarray:
        return rng.integers(0, self.q, size=shape, dtype=np.int64)

    def lincomb(self, coeffs: Sequence[int], mats: np.ndarray) -> np.ndarray:
        """Sum of ``coeffs[i] * mats[i]`` for a stack of matrices."""
        mats = np.asarray(mats, dtype=np.int64)
        coeffs = np.asarray(coeffs, dtype=np.int64)
        if len(coeffs) == 0:
            return np.zeros(mats.shape[1:], dtype=np.int64)
        flat = mats.reshape(len(mats), -1)
        return self.matmul(coeffs[None, :], flat).reshape(mats.shape[1:])


# -- elimination -------------------------------------------------------------


def _panel_pivots(F: FieldSpec, P: np.ndarray) -> tuple[list[int], list[int]]:
    """Greedy pivot rows/cols of a small panel, left to right."""
    P = P.copy()
    m, w = P.shape
    rows: list[int] = []
    cols: list[int] = []
    alive = np.ones(m, dtype=bool)
    for j in range(w):
        cand = np.flatnonzero(alive & (P[:, j] != 0))
        if len(cand) == 0:
            continue
        i = int(cand[0])
        rows.append(i)
        cols.append(j)
        alive[i] = False
        rest = np.flatnonzero(alive & (P[:, j] != 0))
        if len(rest):
            factor = F.mul(P[rest, j], F.inv(P[i, j]))
            P[rest, j:] = F.sub(P[rest, j:], F.mul(factor[:, None], P[i, j:][None, :]))
    return rows, cols


def _small_inverse(F: FieldSpec, A: np.ndarray) -> np.ndarray:
    n = A.shape[0]
    M = np.concatenate([A, np.eye(n, dtype=np.int64)], axis=1)
    for c in range(n):
        nz = np.flatnonzero(M[c:, c])
        if len(nz) == 0:
            raise ValueError("matrix is singular")
        i = c + int(nz[0])
        if i != c:
            M[[c, i]] = M[[i, c]]
        M[c] = F.mul(M[c], F.inv(M[c, c]))
        col = M[:, c].copy()
        col[c] = 0
        nzr = np.flatnonzero(col)
        if len(nzr):
            M[nzr] = F.sub(M[nzr], F.mul(col[nzr, None], M[c][None, :]))
    return M[:, n:]


def rref(F: FieldSpec, m) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form and pivot columns.

    The returned matrix has the same shape as ``m`` with zero rows last.
    Elimination is done in column panels so the bulk of the work is a few
    large matrix products.
    """
    M = np.array(m, dtype=np.int64, copy=True)
    if M.ndim != 2:
        raise ValueError("rref expects a 2-d matrix")
    nrows, ncols = M.shape
    r = 0
    pivots: list[int] = []
    c = 0
    while c < ncols and r < nrows:
        w = min(_PANEL, ncols - c)
        prow, pcol = _panel_pivots(F, M[r:, c:c + w])
        if not prow:
            c += w
            continue
        k = len(prow)
        # move pivot rows to r..r+k-1 preserving the order of the others
        order = [r + i for i in prow]
        others = [i for i in range(r, nrows) if i not in set(order)]
        M[r:] = M[order + others]
        J = [c + j for j in pcol]
        B = M[r:r + k, c:]
        B = F.matmul(_small_inverse(F, M[r:r + k][:, J]), B)
        M[r:r + k, c:] = B
        if r > 0:
            M[:r, c:] = F.sub(M[:r, c:], F.matmul(M[:r][:, J], B))
        if r + k < nrows:
            M[r + k:, c:] = F.sub(M[r + k:, c:], F.matmul(M[r + k:][:, J], B))
        pivots.extend(J)
        r += k
        c += w
    return M, pivots


def rank(F: FieldSpec, m) -> int:
    m = np.asarray(m)
    if m.size == 0:
        return 0
    return len(rref(F, m)[1])


def _nullspace_from_rref(F: FieldSpec, R: np.ndarray, pivots: list[int], n: int) -> np.ndarray:
    free = [j for j in range(n) if j not in set(pivots)]
    K = np.zeros((len(free), n), dtype=np.int64)
    if not free:
        return K
    K[np.arange(len(free)), free] = 1
    if pivots:
        K[:, pivots] = F.neg(R[:len(pivots)][:, free].T)
    return K


def kernel_basis(F: FieldSpec, m) -> "Subspace":
    """Basis of ``{v : m @ v = 0}`` (column-vector kernel); dim = cols - rank."""
    m = np.asarray(m, dtype=np.int64)
    n = m.shape[1]
    if m.shape[0] == 0:
        return Subspace.full(F, n)
    R, piv = rref(F, m)
    return Subspace(F, n, _nullspace_from_rref(F, R, piv, n))


def left_kernel(F: FieldSpec, m) -> "Subspace":
    """Basis of ``{v : v @ m = 0}``, the kernel of the right action."""
    return kernel_basis(F, np.asarray(m, dtype=np.int64).T)


def solve_left(F: FieldSpec, A, B) -> np.ndarray | None:
    """Return X with ``X @ A == B`` or None if some row of B is outside rowspace(A)."""
    A = np.asarray(A, dtype=np.int64)
    B = np.asarray(B, dtype=np.int64)
    k, n = A.shape
    if B.shape[0] == 0:
        return np.zeros((0, k), dtype=np.int64)
    if k == 0:
        return np.zeros((B.shape[0], 0), dtype=np.int64) if not B.any() else None
    # [A^T | B^T] reduced: solutions read off the augmented columns
    aug = np.concatenate([A.T, B.T], axis=1)
    R, piv = rref(F, aug)
    if any(p >= k for p in piv):
        return None
    X = np.zeros((k, B.shape[0]), dtype=np.int64)
    X[piv] = R[:len(piv), k:]
    return X.T


def inverse(F: FieldSpec, A) -> np.ndarray:
    A = np.asarray(A, dtype=np.int64)
    n = A.shape[0]
    if A.shape != (n, n):
        raise ValueError("inverse of a non-square matrix")
    R, piv = rref(F, np.concatenate([A, np.eye(n, dtype=np.int64)], axis=1))
    if piv[:n] != list(range(n)) or len(piv) < n:
        raise ValueError("matrix is singular")
    return R[:, n:]


def matrix_power(F: FieldSpec, A, k: int) -> np.ndarray:
    A = np.asarray(A, dtype=np.int64)
    result = np.eye(A.shape[0], dtype=np.int64)
    base = A
    while k:
        if k & 1:
            result = F.matmul(result, base)
        k >>= 1
        if k:
            base = F.matmul(base, base)
    return result


def _stable_power(F: FieldSpec, f: np.ndarray) -> np.ndarray:
    # f^(2^j) with 2^j >= n; rank has stabilised by then
    n = f.shape[0]
    g = f
    j = 1
    while j < n:
        g = F.matmul(g, g)
        j *= 2
    return g


def fitting_split(F: FieldSpec, f) -> tuple["Subspace", "Subspace"]:
    """Fitting decomposition ``V = ker f^n (+) im f^n`` for the right action v -> v f."""
    f = np.asarray(f, dtype=np.int64)
    n = f.shape[0]
    if f.shape != (n, n):
        raise ValueError("fitting_split needs a square matrix")
    g = _stable_power(F, f)
    return left_kernel(F, g), Subspace(F, n, g)


def is_nilpotent_matrix(F: FieldSpec, f) -> bool:
    f = np.asarray(f, dtype=np.int64)
    if f.shape[0] == 0:
        return True
    return not _stable_power(F, f).any()


# -- subspaces ---------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Subspace:
    """Row space of a matrix, stored as its canonical RREF basis."""

    field: FieldSpec
    ambient_dim: int
    basis: np.ndarray = field(repr=False)

    def __init__(self, F: FieldSpec, ambient_dim: int, rows=None, *, reduced: bool = False):
        rows = np.zeros((0, ambient_dim), dtype=np.int64) if rows is None else np.asarray(rows, dtype=np.int64)
        rows = rows.reshape(-1, ambient_dim) if ambient_dim else np.zeros((0, 0), dtype=np.int64)
        if not reduced and rows.shape[0]:
            R, piv = rref(F, rows)
            rows = R[:len(piv)]
        object.__setattr__(self, "field", F)
        object.__setattr__(self, "ambient_dim", ambient_dim)
        object.__setattr__(self, "basis", rows)

    @classmethod
    def full(cls, F: FieldSpec, n: int) -> "Subspace":
        return cls(F, n, np.eye(n, dtype=np.int64), reduced=True)

    @classmethod
    def zero(cls, F: FieldSpec, n: int) -> "Subspace":
        return cls(F, n, None)

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    def __len__(self) -> int:
        return self.dim

    def __eq__(self, other) -> bool:
        if not isinstance(other, Subspace):
            return NotImplemented
        return (self.ambient_dim == other.ambient_dim and self.basis.shape == other.basis.shape
                and np.array_equal(self.basis, other.basis))

    def __hash__(self):
        return hash((self.ambient_dim, self.basis.tobytes()))

    def __repr__(self) -> str:
        return f"Subspace(dim={self.dim}, ambient={self.ambient_dim})"

    def pivots(self) -> list[int]:
        return [int(np.flatnonzero(row)[0]) for row in self.basis]

    def coordinates(self, vectors) -> np.ndarray | None:
        """Coordinates of ``vectors`` (rows) in the stored basis, None if outside."""
        vectors = np.asarray(vectors, dtype=np.int64).reshape(-1, self.ambient_dim)
        piv = self.pivots()
        coords = vectors[:, piv] if piv else np.zeros((vectors.shape[0], 0), dtype=np.int64)
        if not np.array_equal(self.field.matmul(coords, self.basis), vectors):
            return None
        return coords

    def image(self, A) -> "Subspace":
        """Image under the right action v -> v A."""
        A = np.asarray(A, dtype=np.int64)
        return Subspace(self.field, A.shape[1], self.field.matmul(self.basis, A))

    def complement_basis(self) -> np.ndarray:
        """Standard basis vectors spanning a complement."""
        free = [j for j in range(self.ambient_dim) if j not in set(self.pivots())]
        C = np.zeros((len(free), self.ambient_dim), dtype=np.int64)
        C[np.arange(len(free)), free] = 1
        return C


def _check(a: Subspace, b: Subspace):
    if a.ambient_dim != b.ambient_dim:
        raise ValueError(f"ambient dimension mismatch: {a.ambient_dim} vs {b.ambient_dim}")


def subspace_sum(a: Subspace, b: Subspace) -> Subspace:
    _check(a, b)
    return Subspace(a.field, a.ambient_dim, np.concatenate([a.basis, b.basis]))


def intersect(a: Subspace, b: Subspace) -> Subspace:
    _check(a, b)
    F = a.field
    if a.dim == 0 or b.dim == 0:
        return Subspace.zero(F, a.ambient_dim)
    # x a_basis = y b_basis  <=>  [x, -y] [A; B] = 0
    stacked = np.concatenate([a.basis, b.basis])
    K = left_kernel(F, stacked).basis
    return Subspace(F, a.ambient_dim, F.matmul(K[:, :a.dim], a.basis))


def contains(a: Subspace, v) -> bool:
    v = np.asarray(v, dtype=np.int64)
    if v.ndim == 1:
        v = v[None, :]
    if v.shape[1] != a.ambient_dim:
        raise ValueError("ambient dimension mismatch")
    return a.coordinates(v) is not None


def is_complementary(a: Subspace, b: Subspace) -> bool:
    _check(a, b)
    return a.dim + b.dim == a.ambient_dim and subspace_sum(a, b).dim == a.ambient_dim


def stack(rows: Iterable[np.ndarray], ncols: int) -> np.ndarray:
    rows = [np.asarray(r, dtype=np.int64).reshape(-1, ncols) for r in rows]
    if not rows:
        return np.zeros((0, ncols), dtype=np.int64)
    return np.concatenate(rows)
