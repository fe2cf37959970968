"""Root data, weights and Chevalley structure for small simple simply connected types.

Each Cartan type is a table entry: Cartan matrix, the positive roots with
their labels, and integer matrices for a Chevalley basis ``e_a, f_a, h_i`` in
the natural representation.  Everything else (root coordinates, structure
constants, Weyl reflections) is derived from the table, so adding a type is
a table addition.

Weights are integer tuples in the fundamental-weight basis.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, lru_cache
from itertools import product

import numpy as np

Weight = tuple[int, ...]


def _E(n: int, i: int, j: int) -> np.ndarray:
    m = np.zeros((n, n), dtype=np.int64)
    m[i, j] = 1
    return m


# Natural-representation matrices act on column vectors here (standard matrix
# units); only their commutators are used, so the module-wide row convention
# does not enter.
TYPE_TABLES: dict[str, dict] = {
    "A1": {
        "rank": 1,
        "cartan": [[2]],
        "roots": ["alpha1"],
        "e": {"alpha1": _E(2, 0, 1)},
        "h": [np.diag([1, -1])],
        "diagram": [0],
    },
    "A2": {
        "rank": 2,
        "cartan": [[2, -1], [-1, 2]],
        "roots": ["alpha1", "alpha2", "alpha12"],
        "e": {"alpha1": _E(3, 0, 1), "alpha2": _E(3, 1, 2), "alpha12": _E(3, 0, 2)},
        "h": [np.diag([1, -1, 0]), np.diag([0, 1, -1])],
        "diagram": [1, 0],
    },
}


@dataclass(frozen=True)
class GroupData:
    """A simple simply connected group of the given type, in characteristic p, with Frobenius level r."""

    type: str
    p: int
    r: int = 1

    def __post_init__(self):
        if self.type not in TYPE_TABLES:
            raise ValueError(f"unsupported Cartan type {self.type!r}; known: {sorted(TYPE_TABLES)}")
        if self.p < 2 or any(self.p % d == 0 for d in range(2, int(self.p ** 0.5) + 1)):
            raise ValueError(f"p must be prime, got {self.p}")
        if self.r < 1:
            raise ValueError("Frobenius level r must be >= 1")

    @property
    def table(self) -> dict:
        return TYPE_TABLES[self.type]

    @property
    def rank(self) -> int:
        return self.table["rank"]

    @property
    def cartan(self) -> np.ndarray:
        return np.array(self.table["cartan"], dtype=np.int64)

    @property
    def roots(self) -> list[str]:
        """Labels of the positive roots; the first ``rank`` are simple."""
        return list(self.table["roots"])

    @property
    def N(self) -> int:
        return len(self.table["roots"])

    @property
    def pr(self) -> int:
        return self.p ** self.r

    def root(self, label: str) -> Weight:
        return lie_data(self.type).root_weights[label]

    def with_level(self, r: int) -> "GroupData":
        return GroupData(self.type, self.p, r)

    def to_json(self) -> dict:
        return {"type": self.type, "p": self.p, "r": self.r}

    @classmethod
    def from_json(cls, data: dict) -> "GroupData":
        return cls(str(data["type"]), int(data["p"]), int(data.get("r", 1)))


# -- Lie algebra structure ---------------------------------------------------


class LieData:
    """Chevalley basis of the Lie algebra with integer structure constants.

    Basis keys are ``("e", label)``, ``("f", label)`` and ``("h", i)``.
    ``f_a`` is the transpose of ``e_a`` in the natural representation, so the
    transpose map is the anti-involution swapping them.
    """

    def __init__(self, type_name: str):
        t = TYPE_TABLES[type_name]
        self.rank = t["rank"]
        self.labels = list(t["roots"])
        self.mats: dict[tuple, np.ndarray] = {}
        for a in self.labels:
            self.mats[("e", a)] = np.asarray(t["e"][a], dtype=np.int64)
            self.mats[("f", a)] = np.asarray(t["e"][a], dtype=np.int64).T.copy()
        for i, h in enumerate(t["h"]):
            self.mats[("h", i)] = np.asarray(h, dtype=np.int64)
        self.keys = list(self.mats)
        self._flat = np.array([self.mats[k].ravel() for k in self.keys], dtype=np.float64)
        self.root_weights: dict[str, Weight] = {}
        for a in self.labels:
            coords = []
            for i in range(self.rank):
                br = self.bracket(("h", i), ("e", a))
                coords.append(int(br.get(("e", a), 0)))
            self.root_weights[a] = tuple(coords)
        cart = np.array(t["cartan"])
        inv = np.linalg.inv(cart.astype(float))
        self.root_coords: dict[str, tuple[int, ...]] = {
            a: tuple(int(round(x)) for x in np.asarray(w, dtype=float) @ inv)
            for a, w in self.root_weights.items()
        }
        for i, a in enumerate(self.labels[:self.rank]):
            if tuple(cart[i]) != self.root_weights[a]:
                raise ValueError(f"table for {type_name}: simple root {a} disagrees with Cartan matrix")

    def decompose(self, m: np.ndarray) -> dict[tuple, int]:
        coef, *_ = np.linalg.lstsq(self._flat.T, m.ravel().astype(np.float64), rcond=None)
        out = {}
        for k, c in zip(self.keys, coef):
            ci = int(round(c))
            if abs(c - ci) > 1e-9:
                raise ValueError("non-integral structure constant")
            if ci:
                out[k] = ci
        recon = sum((c * self.mats[k] for k, c in out.items()), np.zeros_like(m))
        if not np.array_equal(recon, m):
            raise ValueError("matrix is outside the Lie algebra")
        return out

    @lru_cache(maxsize=None)
    def bracket(self, x: tuple, y: tuple) -> dict[tuple, int]:
        a, b = self.mats[x], self.mats[y]
        return self.decompose(a @ b - b @ a)

    def weight_of(self, key: tuple) -> Weight:
        kind, lab = key
        if kind == "h":
            return (0,) * self.rank
        w = self.root_weights[lab]
        return w if kind == "e" else tuple(-c for c in w)

    def conjugate(self, P: np.ndarray, key: tuple) -> tuple[int, tuple]:
        """``P x P^{-1}`` for a signed permutation P, as ``(sign, key')``."""
        Pinv = np.round(np.linalg.inv(P)).astype(np.int64)
        d = self.decompose(P @ self.mats[key] @ Pinv)
        if len(d) != 1:
            raise ValueError("conjugate is not a single basis element")
        (k, s), = d.items()
        return s, k

    @cached_property
    def reflection_reps(self) -> list[np.ndarray]:
        """Signed permutation representatives of the simple reflections."""
        reps = []
        for a in self.labels[:self.rank]:
            e = self.mats[("e", a)]
            i, j = map(int, np.argwhere(e)[0])
            n = e.shape[0]
            P = np.eye(n, dtype=np.int64)
            P[i, i] = P[j, j] = 0
            P[i, j] = 1
            P[j, i] = -1
            reps.append(P)
        return reps


@lru_cache(maxsize=None)
def lie_data(type_name: str) -> LieData:
    return LieData(type_name)


# -- weights -----------------------------------------------------------------


def rho(g: GroupData) -> Weight:
    return (1,) * g.rank


def is_dominant(lam: Weight) -> bool:
    return all(c >= 0 for c in lam)


def is_restricted(g: GroupData, lam: Weight, r: int | None = None) -> bool:
    r = g.r if r is None else r
    return len(lam) == g.rank and all(0 <= c < g.p ** r for c in lam)


def restricted_weights(g: GroupData) -> list[Weight]:
    """All p^r-restricted weights in lexicographic order."""
    return [tuple(w) for w in product(range(g.pr), repeat=g.rank)]


def simple_reflection(g: GroupData, i: int, lam: Weight) -> Weight:
    alpha = g.cartan[i]
    return tuple(int(c - lam[i] * a) for c, a in zip(lam, alpha))


def w0_act(g: GroupData, lam: Weight) -> Weight:
    """Longest Weyl element: minus the diagram involution."""
    sigma = g.table["diagram"]
    return tuple(-lam[sigma[i]] for i in range(g.rank))


def lambda_zero(g: GroupData, lam: Weight) -> Weight:
    """(p^r - 1) rho + w0 lam."""
    lam = tuple(int(c) for c in lam)
    if not is_restricted(g, lam):
        raise ValueError(f"{lam} is not {g.pr}-restricted")
    w = w0_act(g, lam)
    return tuple((g.pr - 1) + c for c in w)


def steinberg_weight(g: GroupData, r: int | None = None) -> Weight:
    r = g.r if r is None else r
    return (g.p ** r - 1,) * g.rank


def root_to_fundamental(g: GroupData, coeffs) -> Weight:
    """Convert root-basis coordinates to fundamental-weight coordinates."""
    return tuple(int(x) for x in np.asarray(coeffs, dtype=np.int64) @ g.cartan)


def fundamental_to_root(g: GroupData, lam: Weight) -> tuple[Fraction, ...]:
    inv = np.linalg.inv(g.cartan.astype(float))
    det = int(round(np.linalg.det(g.cartan)))
    adj = np.round(inv * det).astype(np.int64)
    num = np.asarray(lam, dtype=np.int64) @ adj
    return tuple(Fraction(int(x), det) for x in num)


def parse_weight(text: str) -> Weight:
    return tuple(int(x) for x in str(text).replace(" ", "").split(",") if x != "")
