"""Constructions of G-modules and G_rT-modules as generator matrices."""

from __future__ import annotations

import itertools
from functools import lru_cache
from math import factorial

import numpy as np

from ..exactlin import FieldSpec, Subspace, inverse, left_kernel, solve_left
from ..rootdata import (
    GroupData,
    Weight,
    fundamental_to_root,
    is_dominant,
    is_restricted,
    lie_data,
    steinberg_weight,
    w0_act,
)
from .gmod import GMod, LevelSpec, gen_label, parse_label, prune, structure_of, supports
from .verma import VermaZ, hnf_rows, solve_in_hnf


class NotInvariantError(ValueError):
    """A subspace is not stable under some generator (label in ``.label``)."""

    def __init__(self, label: str, msg: str | None = None):
        super().__init__(msg or f"subspace is not invariant under {label}")
        self.label = label


def default_field(g: GroupData) -> FieldSpec:
    return FieldSpec(g.p, 1)


def _weight_sort_key(g: GroupData, top: Weight, w: Weight):
    depth = fundamental_to_root(g, tuple(a - b for a, b in zip(top, w)))
    return (sum(depth), tuple(-c for c in w))


def trivial_module(g: GroupData, F: FieldSpec | None = None) -> GMod:
    F = F or default_field(g)
    return GMod(g, F, ((0,) * g.rank,), {}, "G", "k")


# -- Weyl modules over Z -------------------------------------------------------


@lru_cache(maxsize=None)
def _weyl_integral(type_name: str, lam: Weight):
    """Kostant Z-form of the Weyl module V(lam).

    Returns (weights, gens, gram) with integer entries (python ints).
    The lattice in each weight space is the image of the divided monomials
    in the highest-weight Verma module modulo the radical of the
    contravariant form.
    """
    lie = lie_data(type_name)
    g = GroupData(type_name, 2)
    V = VermaZ(lie, lam, "f")
    depth = fundamental_to_root(g, tuple(a - b for a, b in zip(lam, w0_act(g, lam))))
    height = int(sum(depth))
    groups = V.monomials_by_weight(height)
    creators = V.creators
    tau = [("e", k[1]) for k in creators]

    blocks = {}
    for nu, monos in groups.items():
        k = len(monos)
        G = [[0] * k for _ in range(k)]
        for i, mi in enumerate(monos):
            word = [(tau[t], mi[t]) for t in reversed(range(len(mi))) if mi[t]]
            for j, mj in enumerate(monos):
                c = V.vacuum_coefficient(word, mj)
                den = 1
                for a in mj:
                    den *= factorial(a)
                if c % den:
                    raise ArithmeticError("non-integral contravariant form")
                G[i][j] = c // den
        H, U = hnf_rows(G)
        if H:
            blocks[nu] = (monos, G, H, U)

    order = sorted(blocks, key=lambda w: _weight_sort_key(g, lam, w))
    offset = {}
    weights: list[Weight] = []
    for nu in order:
        offset[nu] = len(weights)
        weights.extend([nu] * len(blocks[nu][2]))
    dim = len(weights)

    gram = [[0] * dim for _ in range(dim)]
    for nu in order:
        monos, G, H, U = blocks[nu]
        o = offset[nu]
        for a, xa in enumerate(U):
            for b, xb in enumerate(U):
                gram[o + a][o + b] = sum(xa[i] * G[i][j] * xb[j] for i in range(len(xa)) for j in range(len(xb))
                                          if xa[i] and xb[j])

    gens: dict[str, list[list[int]]] = {}
    for kind in ("e", "f"):
        for root in lie.labels:
            key = (kind, root)
            n = 1
            while True:
                M = [[0] * dim for _ in range(dim)]
                nonzero = False
                for nu in order:
                    monos, G, H, U = blocks[nu]
                    target = tuple(c + n * s for c, s in zip(nu, lie.weight_of(key)))
                    if target not in blocks:
                        continue
                    tm, tG, tH, _ = blocks[target]
                    tidx = {m: i for i, m in enumerate(tm)}
                    images = [V.divided_action(key, n, m) for m in monos]
                    for a, xa in enumerate(U):
                        y = [0] * len(tm)
                        for i, c in enumerate(xa):
                            if c:
                                for m, d in images[i].items():
                                    y[tidx[m]] += c * d
                        if not any(y):
                            continue
                        ell = [sum(y[i] * tG[i][j] for i in range(len(y)) if y[i]) for j in range(len(tm))]
                        z = solve_in_hnf(tH, ell)
                        for b, c in enumerate(z):
                            if c:
                                M[offset[nu] + a][offset[target] + b] = c
                                nonzero = True
                if not nonzero:
                    break
                gens[gen_label(kind, root, n)] = M
                n += 1
    return tuple(weights), gens, gram


def weyl_module(g: GroupData, lam: Weight, F: FieldSpec | None = None) -> tuple[GMod, np.ndarray]:
    """Weyl module V(lam) reduced mod p, with its contravariant Gram matrix."""
    lam = tuple(int(c) for c in lam)
    if len(lam) != g.rank or not is_dominant(lam):
        raise ValueError(f"{lam} is not a dominant weight for {g.type}")
    F = F or default_field(g)
    weights, igens, igram = _weyl_integral(g.type, lam)
    dim = len(weights)
    gens = {}
    for lab, M in igens.items():
        gens[lab] = F.array(np.array(M, dtype=object).reshape(dim, dim))
    nb = max((parse_label(l)[2] for l in gens), default=0)
    full = {}
    for kind in ("e", "f"):
        for a in g.roots:
            for n in range(1, nb + 1):
                lab = gen_label(kind, a, n)
                full[lab] = gens.get(lab, np.zeros((dim, dim), dtype=np.int64))
    gram = F.array(np.array(igram, dtype=object).reshape(dim, dim))
    mod = GMod(g, F, weights, prune(full), "G", f"V{_fmt(lam)}")
    return mod, gram


def _fmt(lam: Weight) -> str:
    return "(" + ",".join(str(c) for c in lam) + ")"


@lru_cache(maxsize=None)
def _simple_cached(g: GroupData, lam: Weight, F: FieldSpec) -> GMod:
    weyl, gram = weyl_module(g, lam, F)
    rad = left_kernel(F, gram)
    L = quotient_module(weyl, rad, LevelSpec.G)
    return L.renamed(f"L{_fmt(lam)}")


def simple_module(g: GroupData, lam: Weight, F: FieldSpec | None = None) -> GMod:
    """L(lam): the Weyl module modulo the radical of its contravariant form.

    The construction is valid for every dominant weight; restricted weights
    are the usual input.
    """
    lam = tuple(int(c) for c in lam)
    if len(lam) != g.rank or not is_dominant(lam):
        raise ValueError(f"{lam} is not a dominant weight for {g.type}")
    return _simple_cached(g, lam, F or default_field(g))


def steinberg(g: GroupData, F: FieldSpec | None = None) -> GMod:
    return simple_module(g, steinberg_weight(g), F).renamed(f"St_{g.r}")


# -- baby Verma modules --------------------------------------------------------


@lru_cache(maxsize=None)
def _baby_verma_cached(g: GroupData, lam: Weight, F: FieldSpec) -> GMod:
    lie = lie_data(g.type)
    pr = g.pr
    low = tuple(c - 2 * (pr - 1) for c in lam)
    V = VermaZ(lie, low, "e")
    monos = sorted(itertools.product(range(pr), repeat=g.N), key=lambda m: (sum(m), m))
    index = {m: i for i, m in enumerate(monos)}
    dim = len(monos)
    weights = [V.weight(m) for m in monos]
    gens = {}
    for kind in ("e", "f"):
        for a in g.roots:
            for n in range(1, pr):
                M = np.zeros((dim, dim), dtype=np.int64)
                for i, m in enumerate(monos):
                    for m2, c in V.divided_action((kind, a), n, m).items():
                        j = index.get(m2)
                        if j is None:
                            if c % g.p:
                                raise ArithmeticError("truncated term survives mod p")
                            continue
                        M[i, j] = c % g.p
                gens[gen_label(kind, a, n)] = F.array(M)
    return GMod(g, F, tuple(weights), prune(gens), "GrT", f"Z{_fmt(lam)}")


def baby_verma(g: GroupData, lam: Weight, F: FieldSpec | None = None) -> GMod:
    """The baby Verma module ind_{B_r}^{G_r} lam for the negative Borel B.

    Realized as Dist(G_r) (x)_{Dist(B_r)} (lam - 2(p^r - 1) rho): divided
    e-monomials with exponents < p^r applied to a generator killed by every f.
    Its top weight is lam and its socle is L(lam); for lam = (p^r - 1) rho it
    is the Steinberg module.
    """
    lam = tuple(int(c) for c in lam)
    if len(lam) != g.rank:
        raise ValueError("weight has the wrong rank")
    return _baby_verma_cached(g, lam, F or default_field(g))


# -- closure operations --------------------------------------------------------


def _same_group(a: GMod, b: GMod):
    if a.group != b.group:
        raise ValueError(f"group mismatch: {a.group} vs {b.group}")
    if a.field != b.field:
        raise ValueError(f"field mismatch: {a.field} vs {b.field}")


def _labels(g: GroupData, nb: int) -> list[tuple[str, str, int]]:
    return [(k, a, n) for k in ("e", "f") for a in g.roots for n in range(1, nb + 1)]


_ORDER = ["GrT", "GrB", "G"]


def meet(*structures: str) -> str:
    return min(structures, key=_ORDER.index)


def _carried(structure: str, pr: int, label: str) -> bool:
    k, _, n = parse_label(label)
    if n < pr or structure == "G":
        return True
    return structure == "GrB" and k == "f"


def restrict_gens(gens: dict, structure: str, pr: int) -> dict:
    """Drop the labels a structure tag does not carry."""
    return {l: m for l, m in gens.items() if _carried(structure, pr, l)}


def direct_sum(*mods: GMod) -> GMod:
    if not mods:
        raise ValueError("direct_sum of nothing")
    for m in mods[1:]:
        _same_group(mods[0], m)
    g, F = mods[0].group, mods[0].field
    dims = [m.dim for m in mods]
    n = sum(dims)
    nb = max(m.nil_bound for m in mods)
    gens = {}
    for k, a, j in _labels(g, nb):
        M = np.zeros((n, n), dtype=np.int64)
        o = 0
        for m in mods:
            M[o:o + m.dim, o:o + m.dim] = m.gen(k, a, j)
            o += m.dim
        gens[gen_label(k, a, j)] = M
    structure = meet(*(m.structure for m in mods))
    weights = tuple(w for m in mods for w in m.weights)
    name = "+".join(m.name or "?" for m in mods)
    return GMod(g, F, weights, prune(restrict_gens(gens, structure, g.pr)), structure, name)


def tensor(a: GMod, b: GMod) -> GMod:
    """Tensor product; x^(n) acts by sum_{i+j=n} x^(i) (x) x^(j)."""
    _same_group(a, b)
    F = a.field
    nb = min(a.nil_bound + b.nil_bound, a.dim * b.dim)
    gens = {}
    for k, r, n in _labels(a.group, nb):
        M = np.zeros((a.dim * b.dim,) * 2, dtype=np.int64)
        for i in range(n + 1):
            A, B = a.gen(k, r, i), b.gen(k, r, n - i)
            if A.any() and B.any():
                M = F.add(M, _kron(F, A, B))
        gens[gen_label(k, r, n)] = M
    weights = tuple(tuple(x + y for x, y in zip(u, v)) for u in a.weights for v in b.weights)
    structure = meet(a.structure, b.structure)
    gens = restrict_gens(gens, structure, a.group.pr)
    return GMod(a.group, F, weights, prune(gens), structure, f"{a.name}*{b.name}")


def _kron(F: FieldSpec, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    if F.is_prime:
        return np.kron(A, B) % F.p
    m, n = A.shape
    k, l = B.shape
    P = F.mul(A[:, None, :, None], B[None, :, None, :])
    return P.reshape(m * k, n * l)


def dual(a: GMod) -> GMod:
    """Linear dual: x^(n) acts by (-1)^n times the transpose."""
    F = a.field
    gens = {}
    for lab, M in a.gens.items():
        n = parse_label(lab)[2]
        gens[lab] = F.neg(M.T) if n % 2 else M.T.copy()
    weights = tuple(tuple(-c for c in w) for w in a.weights)
    return GMod(a.group, F, weights, gens, a.structure, f"({a.name})^*")


def tau_twist(a: GMod) -> GMod:
    """Contravariant twist: dual space, e^(n) acting by the transpose of f^(n)."""
    gens = {}
    for lab, M in a.gens.items():
        k, r, n = parse_label(lab)
        other = gen_label("f" if k == "e" else "e", r, n)
        gens[other] = M.T.copy()
    structure = "G" if a.structure == "G" else "GrT"
    gens = restrict_gens(gens, structure, a.group.pr)
    return GMod(a.group, a.field, a.weights, gens, structure, f"tau({a.name})")


def frobenius_twist(a: GMod, s: int = 1) -> GMod:
    """s-th Frobenius twist: weights times p^s, x^(n) acts as x^(n/p^s)."""
    if a.structure != "G":
        raise ValueError("Frobenius twist needs a G-module")
    q = a.group.p ** s
    gens = {}
    nb = a.nil_bound * q
    for k, r, n in _labels(a.group, nb):
        M = a.gen(k, r, n // q) if n % q == 0 else np.zeros((a.dim,) * 2, dtype=np.int64)
        gens[gen_label(k, r, n)] = M
    weights = tuple(tuple(q * c for c in w) for w in a.weights)
    return GMod(a.group, a.field, weights, prune(gens), "G", f"({a.name})^[{s}]")


def restrict_structure(a: GMod, structure: str = "GrT") -> GMod:
    """Forget the generators beyond a smaller structure tag."""
    structure = meet(a.structure, structure)
    gens = restrict_gens(a.gens, structure, a.group.pr)
    return GMod(a.group, a.field, a.weights, gens, structure, a.name)


# -- sub and quotient ----------------------------------------------------------


def homogeneous_basis(a: GMod, s: Subspace) -> np.ndarray:
    """A basis of ``s`` made of weight vectors, or raise if ``s`` is not graded."""
    F = a.field
    W = a.weight_array()
    parts = []
    for w in sorted(set(a.weights)):
        mask = np.all(W == np.array(w), axis=1)
        P = np.where(mask[None, :], s.basis, 0)
        if s.dim and s.coordinates(P) is None:
            raise ValueError(f"subspace is not weight-homogeneous (weight {w})")
        parts.append(Subspace(F, a.dim, P).basis)
    B = np.concatenate(parts) if parts else np.zeros((0, a.dim), dtype=np.int64)
    if B.shape[0] != s.dim:
        raise ValueError("subspace is not weight-homogeneous")
    return B


def _basis_weights(a: GMod, B: np.ndarray) -> tuple[Weight, ...]:
    out = []
    for row in B:
        j = int(np.flatnonzero(row)[0])
        out.append(a.weights[j])
    return tuple(out)


def check_invariant(a: GMod, s: Subspace, level: LevelSpec = LevelSpec.G) -> str | None:
    """Label of the first generator of the level not preserving ``s``, else None."""
    F = a.field
    for lab, M in a.level_generators(level):
        if s.coordinates(F.matmul(s.basis, M)) is None:
            return lab
    return None


def _induced(a: GMod, s: Subspace, level: LevelSpec, act) -> tuple[dict, str]:
    """Apply ``act`` to the generators preserving ``s``; enforce the level ones."""
    F = a.field
    pr = a.group.pr
    needed = {lab for lab, _ in a.level_generators(level)}
    kept = {}
    for lab, M in a.gens.items():
        if check_invariant_one(F, s, M):
            kept[lab] = act(M)
        elif lab in needed:
            raise NotInvariantError(lab)
    structure = meet(a.structure, structure_of(kept, a.gens, pr))
    return prune(restrict_gens(kept, structure, pr)), structure


def _level_for(a: GMod, level) -> LevelSpec:
    level = LevelSpec.parse(level)
    if not supports(a.structure, level):
        raise ValueError(f"{a!r} carries only a {a.structure}-structure, not enough for level {level.value}")
    return level


def sub_module(a: GMod, s: Subspace, level: LevelSpec = LevelSpec.GrT, return_basis: bool = False):
    """Restriction of the action to an invariant weight-graded subspace.

    ``s`` must be stable under the generators of ``level``; every further
    generator of ``a`` that happens to preserve ``s`` is kept as well, and the
    structure tag of the result records what survived.
    """
    level = _level_for(a, level)
    bad = check_invariant(a, s, level)
    if bad is not None:
        raise NotInvariantError(bad)
    S = homogeneous_basis(a, s)
    F = a.field
    gens, structure = _induced(a, s, level, lambda M: solve_left(F, S, F.matmul(S, M)))
    mod = GMod(a.group, F, _basis_weights(a, S), gens, structure, f"sub({a.name})")
    return (mod, S) if return_basis else mod


def quotient_module(a: GMod, s: Subspace, level: LevelSpec = LevelSpec.GrT, return_basis: bool = False):
    """Action on ``a / s`` in the basis of standard vectors complementing ``s``."""
    level = _level_for(a, level)
    bad = check_invariant(a, s, level)
    if bad is not None:
        raise NotInvariantError(bad)
    homogeneous_basis(a, s)
    F = a.field
    k = s.dim
    C = s.complement_basis()
    Tinv = inverse(F, np.concatenate([s.basis, C]))
    gens, structure = _induced(a, s, level, lambda M: F.matmul(F.matmul(C, M), Tinv)[:, k:])
    mod = GMod(a.group, F, _basis_weights(a, C), gens, structure, f"quot({a.name})")
    return (mod, C) if return_basis else mod


def check_invariant_one(F: FieldSpec, s: Subspace, M: np.ndarray) -> bool:
    return s.coordinates(F.matmul(s.basis, M)) is not None


def induced_module(g: GroupData, lam: Weight, F: FieldSpec | None = None) -> GMod:
    """H^0(lam), realized as the dual of the Weyl module of -w0 lam."""
    V, _ = weyl_module(g, tuple(-c for c in w0_act(g, lam)), F)
    return dual(V).renamed(f"H0{_fmt(lam)}")
