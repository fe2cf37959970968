"""Integral Verma-module arithmetic in characteristic 0.

Vectors of a Verma module are dicts mapping ordered PBW monomials (exponent
tuples over the creation roots) to integer coefficients.  Acting by a
Chevalley basis element straightens the product with the integer structure
constants from :mod:`grsummands.rootdata`.  The highest-weight flavour creates
with ``f``'s, the lowest-weight flavour with ``e``'s.

Only ordinary powers are stored; divided powers are obtained by dividing by
factorials at the end, and the results are integral (Kostant).
"""

from __future__ import annotations

from collections import defaultdict
from math import factorial

from ..rootdata import LieData, Weight

Mono = tuple[int, ...]
Vec = dict[Mono, int]


def _add_into(acc: dict, vec: dict, scale: int = 1):
    for m, c in vec.items():
        v = acc.get(m, 0) + scale * c
        if v:
            acc[m] = v
        else:
            acc.pop(m, None)


class VermaZ:
    """Verma module over Z with generator of weight ``mu``.

    ``create`` is ``"f"`` (highest weight: ``e`` kills the generator) or
    ``"e"`` (lowest weight: ``f`` kills the generator).
    """

    def __init__(self, lie: LieData, mu: Weight, create: str = "f"):
        if create not in ("e", "f"):
            raise ValueError("create must be 'e' or 'f'")
        self.lie = lie
        self.mu = tuple(mu)
        self.create = create
        self.kill = "e" if create == "f" else "f"
        self.creators = [(create, a) for a in lie.labels]
        self._index = {k: i for i, k in enumerate(self.creators)}
        self._cache: dict[tuple, Vec] = {}
        self._cwt = [lie.weight_of(k) for k in self.creators]

    def weight(self, mono: Mono) -> Weight:
        w = list(self.mu)
        for a, cw in zip(mono, self._cwt):
            if a:
                for i, c in enumerate(cw):
                    w[i] += a * c
        return tuple(w)

    def act(self, key: tuple, mono: Mono) -> Vec:
        """Apply one Chevalley basis element to a PBW monomial."""
        ck = (key, mono)
        hit = self._cache.get(ck)
        if hit is not None:
            return hit
        res = self._act(key, mono)
        self._cache[ck] = res
        return res

    def _act(self, key: tuple, mono: Mono) -> Vec:
        kind = key[0]
        if kind == "h":
            c = self.weight(mono)[key[1]]
            return {mono: c} if c else {}
        first = next((i for i, a in enumerate(mono) if a), None)
        if kind == self.create:
            j = self._index[key]
            if first is None or j <= first:
                m = list(mono)
                m[j] += 1
                return {tuple(m): 1}
        elif first is None:
            return {}
        # mono = x_first * m1 ;  y x m1 = x (y m1) + [y, x] m1
        x = self.creators[first]
        m1 = list(mono)
        m1[first] -= 1
        m1 = tuple(m1)
        out: Vec = {}
        _add_into(out, self.apply(x, self.act(key, m1)))
        for k2, c in self.lie.bracket(key, x).items():
            _add_into(out, self.act(k2, m1), c)
        return out

    def apply(self, key: tuple, vec: Vec) -> Vec:
        out: Vec = {}
        for m, c in vec.items():
            _add_into(out, self.act(key, m), c)
        return out

    def apply_power(self, key: tuple, n: int, vec: Vec) -> Vec:
        for _ in range(n):
            vec = self.apply(key, vec)
        return vec

    def divided_action(self, key: tuple, n: int, mono: Mono) -> dict[Mono, int]:
        """``x^(n)`` applied to the divided monomial basis vector of ``mono``,
        expressed in divided monomials (integer coefficients)."""
        vec = self.apply_power(key, n, {mono: 1})
        den = factorial(n) * _fact_prod(mono)
        out = {}
        for m, c in vec.items():
            num = c * _fact_prod(m)
            if num % den:
                raise ArithmeticError("non-integral divided-power coefficient")
            if num:
                out[m] = num // den
        return out

    def monomials_by_weight(self, max_height: int) -> dict[Weight, list[Mono]]:
        """All creation monomials of height <= ``max_height``, grouped by weight."""
        heights = [sum(self.lie.root_coords[a]) for a in self.lie.labels]
        groups: dict[Weight, list[Mono]] = defaultdict(list)
        n = len(heights)

        def rec(i, cur, h):
            if i == n:
                m = tuple(cur)
                groups[self.weight(m)].append(m)
                return
            a = 0
            while h + a * heights[i] <= max_height:
                cur.append(a)
                rec(i + 1, cur, h + a * heights[i])
                cur.pop()
                a += 1

        rec(0, [], 0)
        return dict(groups)

    def vacuum_coefficient(self, word: list[tuple[tuple, int]], mono: Mono) -> int:
        """Coefficient of the generator in ``word`` applied to ``mono``.

        ``word`` lists ``(key, n)`` factors ``x^(n)``, applied right to left.
        ``mono`` is an ordinary (not divided) monomial.
        """
        vec: Vec = {mono: 1}
        for key, n in reversed(word):
            vec = self.apply_power(key, n, vec)
            f = factorial(n)
            if any(c % f for c in vec.values()):
                raise ArithmeticError("non-integral divided-power coefficient")
            vec = {m: c // f for m, c in vec.items()}
        return vec.get((0,) * len(self.creators), 0)


def _fact_prod(mono: Mono) -> int:
    out = 1
    for a in mono:
        out *= factorial(a)
    return out


# -- integer Hermite normal form ---------------------------------------------


def hnf_rows(A: list[list[int]]) -> tuple[list[list[int]], list[list[int]]]:
    """Row Hermite form of an integer matrix.

    Returns ``(H, U)`` where the rows of ``H`` are a Z-basis of the row
    lattice of ``A`` in echelon form (positive pivots) and ``H = U A``.
    """
    A = [list(map(int, row)) for row in A]
    m = len(A)
    n = len(A[0]) if m else 0
    U = [[int(i == j) for j in range(m)] for i in range(m)]
    r = 0
    for c in range(n):
        if r == m:
            break
        while True:
            nz = [i for i in range(r, m) if A[i][c] != 0]
            if not nz:
                break
            piv = min(nz, key=lambda i: abs(A[i][c]))
            A[r], A[piv] = A[piv], A[r]
            U[r], U[piv] = U[piv], U[r]
            done = True
            for i in range(r + 1, m):
                if A[i][c]:
                    q = A[i][c] // A[r][c]
                    A[i] = [x - q * y for x, y in zip(A[i], A[r])]
                    U[i] = [x - q * y for x, y in zip(U[i], U[r])]
                    if A[i][c]:
                        done = False
            if done:
                break
        if r < m and A[r][c] != 0:
            if A[r][c] < 0:
                A[r] = [-x for x in A[r]]
                U[r] = [-x for x in U[r]]
            for i in range(r):
                q = A[i][c] // A[r][c]
                if q:
                    A[i] = [x - q * y for x, y in zip(A[i], A[r])]
                    U[i] = [x - q * y for x, y in zip(U[i], U[r])]
            r += 1
    return A[:r], U[:r]


def solve_in_hnf(H: list[list[int]], v: list[int]) -> list[int]:
    """Integer coordinates of ``v`` in the echelon basis ``H``."""
    v = list(map(int, v))
    coords = []
    for row in H:
        c = next(j for j, x in enumerate(row) if x)
        if v[c] % row[c]:
            raise ArithmeticError("vector is not in the lattice")
        q = v[c] // row[c]
        coords.append(q)
        if q:
            v = [x - q * y for x, y in zip(v, row)]
    if any(v):
        raise ArithmeticError("vector is not in the lattice")
    return coords
