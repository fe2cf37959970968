"""Weight-graded modules carried by divided-power generator matrices."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator

import numpy as np

from ..exactlin import FieldSpec, is_nilpotent_matrix
from ..rootdata import GroupData, Weight, lie_data

FORMAT_VERSION = 1


def gen_label(kind: str, root: str, n: int) -> str:
    return f"{kind}:{root}:{n}"


def parse_label(label: str) -> tuple[str, str, int]:
    kind, root, n = label.split(":")
    if kind not in ("e", "f"):
        raise ValueError(f"bad generator label {label!r}")
    return kind, root, int(n)


class LevelSpec(str, Enum):
    """Subgroup schemes whose distribution algebras act on modules.

    ``Gr``, ``GrT``, ``GrU``, ``GrB`` and ``G`` are the levels used
    throughout.  ``T``, ``U``, ``B`` and ``TRIVIAL`` are the plain subgroups,
    needed for fixed-point and splitting tests.  ``U`` and ``B`` use the
    negative Borel, so the unipotent direction is the ``f`` family.
    """

    Gr = "Gr"
    GrT = "GrT"
    GrU = "GrU"
    GrB = "GrB"
    G = "G"
    T = "T"
    U = "U"
    B = "B"
    TRIVIAL = "trivial"

    @property
    def torus(self) -> str | None:
        """``"full"``, ``"mod"`` (weights mod p^r) or None."""
        return {"Gr": "mod", "GrU": "mod", "GrT": "full", "GrB": "full", "G": "full",
                "T": "full", "B": "full", "U": None, "trivial": None}[self.value]

    def bounds(self, g: GroupData) -> tuple[int | None, int | None]:
        """Exclusive bounds on n for ``e^(n)`` and ``f^(n)``; None means unbounded."""
        pr = g.pr
        return {
            "Gr": (pr, pr), "GrT": (pr, pr), "GrU": (pr, None), "GrB": (pr, None),
            "G": (None, None), "T": (1, 1), "U": (1, None), "B": (1, None),
            "trivial": (1, 1),
        }[self.value]

    @property
    def needs_G(self) -> bool:
        """True if the level uses generators beyond Dist(G_r T)."""
        return self.value in ("GrU", "GrB", "G", "U", "B")

    @property
    def needs_e(self) -> bool:
        """True if the level uses e^(n) with n >= p^r."""
        return self.value == "G"

    @property
    def graded(self) -> "LevelSpec":
        """The level with the full torus in place of its torus part."""
        return {"Gr": LevelSpec.GrT, "GrU": LevelSpec.GrB, "U": LevelSpec.B,
                "trivial": LevelSpec.T}.get(self.value, self)

    @classmethod
    def parse(cls, text: "str | LevelSpec") -> "LevelSpec":
        if isinstance(text, LevelSpec):
            return text
        for lv in cls:
            if lv.value.lower() == str(text).lower():
                return lv
        raise ValueError(f"unknown level {text!r}")


# levels whose generators a structure tag guarantees
STRUCTURES = {
    "G": frozenset(LevelSpec),
    "GrB": frozenset(l for l in LevelSpec if not l.needs_e),
    "GrT": frozenset(l for l in LevelSpec if not l.needs_G),
}


def supports(structure: str, level: LevelSpec) -> bool:
    return LevelSpec.parse(level) in STRUCTURES[structure]


def structure_of(gens: dict, full: dict, pr: int) -> str:
    """Largest structure tag whose generators all appear in ``gens``."""
    missing = [parse_label(l) for l in full if l not in gens]
    if not missing:
        return "G"
    if all(k == "e" and n >= pr for k, _, n in missing):
        return "GrB"
    if all(n >= pr for _, _, n in missing):
        return "GrT"
    raise ValueError("generator set does not carry a G_rT-structure")


@dataclass(frozen=True, eq=False)
class GMod:
    """A finite-dimensional module given by a weight grading and generator matrices.

    ``gens`` maps canonical labels ``"e:alpha1:n"`` to ``dim x dim`` matrices
    over ``field`` acting on row vectors.  Labels with ``n > nil_bound`` are
    omitted and act as zero.  ``structure`` records the largest level the
    actions are valid for: ``"G"`` for rational G-modules, ``"GrT"`` for
    modules such as baby Vermas that only carry a G_rT-structure, ``"GrB"``
    when the e^(n) with n >= p^r are missing.
    """

    group: GroupData
    field: FieldSpec
    weights: tuple[Weight, ...]
    gens: dict[str, np.ndarray] = field(repr=False)
    structure: str = "G"
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(tuple(int(c) for c in w) for w in self.weights))
        for lab, m in self.gens.items():
            parse_label(lab)
            if m.shape != (self.dim, self.dim):
                raise ValueError(f"generator {lab} has shape {m.shape}, expected {(self.dim, self.dim)}")
        if self.structure not in STRUCTURES:
            raise ValueError(f"unknown structure {self.structure!r}")

    @property
    def dim(self) -> int:
        return len(self.weights)

    @property
    def nil_bound(self) -> int:
        return max((parse_label(l)[2] for l in self.gens), default=0)

    def __repr__(self) -> str:
        nm = f" {self.name}" if self.name else ""
        return f"GMod({self.group.type}, p={self.group.p}{nm}, dim={self.dim})"

    def gen(self, kind: str, root: str, n: int) -> np.ndarray:
        if n == 0:
            return np.eye(self.dim, dtype=np.int64)
        m = self.gens.get(gen_label(kind, root, n))
        if m is None:
            return np.zeros((self.dim, self.dim), dtype=np.int64)
        return m

    def weight_array(self) -> np.ndarray:
        return np.array(self.weights, dtype=np.int64).reshape(self.dim, self.group.rank)

    def level_generators(self, level: LevelSpec, minimal: bool = False) -> Iterator[tuple[str, np.ndarray]]:
        """Generator matrices for a level.

        With ``minimal=True`` only the simple-root divided powers ``x^(p^k)``
        are produced; these generate the same distribution algebra.
        """
        level = LevelSpec.parse(level)
        if not supports(self.structure, level):
            raise ValueError(f"{self!r} carries only a {self.structure}-structure, not enough for level {level.value}")
        be, bf = level.bounds(self.group)
        roots = self.group.roots
        simple = set(roots[:self.group.rank])
        nb = self.nil_bound
        p = self.group.p
        for kind, bound in (("e", be), ("f", bf)):
            top = nb if bound is None else min(nb, bound - 1)
            for a in roots:
                if minimal and a not in simple:
                    continue
                n = 1
                while n <= top:
                    lab = gen_label(kind, a, n)
                    if lab in self.gens:
                        yield lab, self.gens[lab]
                    n = n * p if minimal else n + 1

    def weight_classes(self, level: LevelSpec) -> np.ndarray:
        """Integer class id per basis vector for the torus part of a level."""
        level = LevelSpec.parse(level)
        W = self.weight_array()
        if level.torus is None:
            return np.zeros(self.dim, dtype=np.int64)
        if level.torus == "mod":
            W = np.mod(W, self.group.pr)
        _, ids = np.unique(W, axis=0, return_inverse=True) if self.dim else (None, np.zeros(0, int))
        return np.asarray(ids, dtype=np.int64).ravel()

    def with_field(self, F: FieldSpec) -> "GMod":
        """Extend scalars along F_p -> F_q (entries must lie in the prime field)."""
        if F == self.field:
            return self
        if F.p != self.field.p or not self.field.is_prime:
            raise ValueError("can only extend scalars from the prime field")
        return GMod(self.group, F, self.weights, dict(self.gens), self.structure, self.name)

    def renamed(self, name: str) -> "GMod":
        return GMod(self.group, self.field, self.weights, self.gens, self.structure, name)

    def validate(self) -> None:
        """Check weight-block structure and nilpotency of every generator."""
        W = self.weight_array()
        lie = lie_data(self.group.type)
        for lab, m in self.gens.items():
            kind, root, n = parse_label(lab)
            shift = np.array(lie.root_weights[root], dtype=np.int64) * n * (1 if kind == "e" else -1)
            rows, cols = np.nonzero(m)
            if len(rows) and not np.array_equal(W[rows] + shift, W[cols]):
                bad = int(rows[np.flatnonzero(np.any(W[rows] + shift != W[cols], axis=1))[0]])
                raise ValueError(f"generator {lab} breaks the weight grading at basis vector {bad}")
            if n == 1 and not is_nilpotent_matrix(self.field, m):
                raise ValueError(f"generator {lab} is not nilpotent")

    def to_json(self) -> dict:
        return {
            "format": FORMAT_VERSION,
            "group": self.group.to_json(),
            "field": self.field.to_json(),
            "dim": self.dim,
            "structure": self.structure,
            "name": self.name,
            "weights": [list(w) for w in self.weights],
            "gens": {lab: m.tolist() for lab, m in sorted(self.gens.items())},
        }

    @classmethod
    def from_json(cls, data: dict) -> "GMod":
        if int(data.get("format", 0)) != FORMAT_VERSION:
            raise ValueError(f"unsupported module format {data.get('format')!r}")
        g = GroupData.from_json(data["group"])
        F = FieldSpec.from_json(data["field"])
        dim = int(data["dim"])
        weights = tuple(tuple(w) for w in data["weights"])
        if len(weights) != dim:
            raise ValueError("weights length does not match dim")
        gens = {}
        for lab, m in data["gens"].items():
            arr = np.asarray(m, dtype=np.int64).reshape(dim, dim)
            if arr.size and (arr.min() < 0 or arr.max() >= F.q):
                raise ValueError(f"generator {lab} has non-canonical entries")
            gens[lab] = arr
        mod = cls(g, F, weights, gens, data.get("structure", "G"), data.get("name", ""))
        mod.validate()
        return mod


def prune(gens: dict[str, np.ndarray]) -> dict[str, np.ndarray]:
    """Drop zero maps beyond the last nonzero divided power."""
    nb = max((parse_label(l)[2] for l, m in gens.items() if m.any()), default=0)
    return {l: m for l, m in gens.items() if parse_label(l)[2] <= nb}
