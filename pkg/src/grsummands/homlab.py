"""Intertwiners, endomorphism rings, decompositions and isomorphism tests.

Maps act on row vectors: ``X`` (dim a x dim b) is a homomorphism a -> b when
``A_x @ X == X @ B_x`` for every generator ``x`` of the level, and ``X`` only
connects basis vectors whose weights agree on the level's torus part.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field

import numpy as np

from .exactlin import (
    FieldSpec,
    Subspace,
    is_nilpotent_matrix,
    kernel_basis,
    left_kernel,
    rank,
    rref,
    subspace_sum,
)
from .exactlin import _stable_power
from .modcore import GMod, LevelSpec, dual, simple_module, sub_module
from .modcore.build import meet, restrict_gens, restrict_structure
from .modcore.gmod import gen_label, parse_label
from .rootdata import lie_data, restricted_weights, simple_reflection

log = logging.getLogger(__name__)

RANDOM_DRAWS = 64
EXHAUSTIVE_DIM = 6
ENUM_BUDGET = 2 ** 16


class FieldTooSmallError(RuntimeError):
    """Random endomorphisms never split or certify; a larger field is needed."""


class InvariantViolation(AssertionError):
    """An internal consistency check failed.  Always a bug."""


# -- hom spaces ----------------------------------------------------------------


def torus_keys(m: GMod, level: LevelSpec) -> list[tuple]:
    level = LevelSpec.parse(level)
    if level.torus is None:
        return [()] * m.dim
    if level.torus == "mod":
        pr = m.group.pr
        return [tuple(c % pr for c in w) for w in m.weights]
    return [tuple(w) for w in m.weights]


def _allowed(a: GMod, b: GMod, level: LevelSpec) -> np.ndarray:
    ka, kb = torus_keys(a, level), torus_keys(b, level)
    return np.array([[x == y for y in kb] for x in ka], dtype=bool).reshape(a.dim, b.dim)


@dataclass
class HomSpace:
    source: GMod
    target: GMod
    level: LevelSpec
    basis: np.ndarray = field(repr=False)  # shape (k, dim source, dim target)

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @property
    def field(self) -> FieldSpec:
        return self.source.field

    def element(self, coeffs) -> np.ndarray:
        return self.field.lincomb(coeffs, self.basis)

    def random_element(self, rng: np.random.Generator) -> np.ndarray:
        return self.element(self.field.random(self.dim, rng))

    def points(self, projective: bool = False):
        """All F_q-points (optionally one per line through 0, excluding 0)."""
        q = self.field.q
        for c in itertools.product(range(q), repeat=self.dim):
            if projective:
                nz = next((x for x in c if x), 0)
                if nz != 1:
                    continue
            yield self.element(c)


def _residual(F: FieldSpec, Xs: np.ndarray, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    if F.is_prime:
        R = np.matmul(A.astype(np.float64), Xs.astype(np.float64)) - np.matmul(Xs.astype(np.float64), B.astype(np.float64))
        return np.mod(R, F.p).astype(np.int64)
    return np.stack([F.sub(F.matmul(A, X), F.matmul(X, B)) for X in Xs]) if len(Xs) else Xs


def _refine(F: FieldSpec, Xs: np.ndarray, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Restrict the span of ``Xs`` to the solutions of A X = X B."""
    if len(Xs) == 0:
        return Xs
    R = _residual(F, Xs, A, B).reshape(len(Xs), -1)
    cols = np.flatnonzero(R.any(axis=0))
    if len(cols) == 0:
        return Xs
    K = left_kernel(F, R[:, cols]).basis
    if len(K) == 0:
        return Xs[:0]
    shape = Xs.shape
    return F.matmul(K, Xs.reshape(shape[0], -1)).reshape((len(K),) + shape[1:])


def _pair_generators(a: GMod, b: GMod, level: LevelSpec, minimal: bool):
    la = dict(a.level_generators(level, minimal))
    lb = dict(b.level_generators(level, minimal))
    for lab in sorted(set(la) | set(lb)):
        yield lab, la.get(lab, np.zeros((a.dim, a.dim), dtype=np.int64)), lb.get(lab, np.zeros((b.dim, b.dim), dtype=np.int64))


def solve_intertwiners(F: FieldSpec, mask: np.ndarray, pairs, check_pairs=()) -> np.ndarray:
    """Basis (RREF, stacked) of {X : X[~mask] = 0, A X = X B for all pairs}.

    ``pairs`` drive the solve; ``check_pairs`` are verified afterwards and
    used for further refinement if some equation is not yet satisfied.
    """
    da, db = mask.shape
    idx = np.flatnonzero(mask.ravel())
    Xs = np.zeros((len(idx), da * db), dtype=np.int64)
    Xs[np.arange(len(idx)), idx] = 1
    Xs = Xs.reshape(len(idx), da, db)
    for A, B in pairs:
        Xs = _refine(F, Xs, A, B)
        if len(Xs) == 0:
            return Xs
    for A, B in check_pairs:
        if len(Xs) and _residual(F, Xs, A, B).any():
            log.warning("generating set missed an equation; refining")
            Xs = _refine(F, Xs, A, B)
    if len(Xs):
        R, piv = rref(F, Xs.reshape(len(Xs), -1))
        Xs = R[:len(piv)].reshape((len(piv), da, db))
    return Xs


def hom_space(a: GMod, b: GMod, level: LevelSpec | str = LevelSpec.Gr) -> HomSpace:
    """Basis of the level-equivariant maps a -> b."""
    level = LevelSpec.parse(level)
    if a.group != b.group:
        raise ValueError(f"group mismatch: {a.group} vs {b.group}")
    if a.field != b.field:
        raise ValueError(f"field mismatch: {a.field} vs {b.field}")
    Xs = solve_intertwiners(
        a.field, _allowed(a, b, level),
        ((A, B) for _, A, B in _pair_generators(a, b, level, minimal=True)),
        ((A, B) for _, A, B in _pair_generators(a, b, level, minimal=False)))
    return HomSpace(a, b, level, Xs)


def end_space(a: GMod, level: LevelSpec | str = LevelSpec.Gr) -> HomSpace:
    return hom_space(a, a, level)


def is_homomorphism(a: GMod, b: GMod, X: np.ndarray, level: LevelSpec | str) -> str | None:
    """Label of a violated intertwining equation, or None."""
    level = LevelSpec.parse(level)
    F = a.field
    mask = _allowed(a, b, level)
    if np.any(X[~mask]):
        return "torus"
    for lab, A, B in _pair_generators(a, b, level, minimal=False):
        if not np.array_equal(F.matmul(A, X), F.matmul(X, B)):
            return lab
    return None


# -- isomorphism ---------------------------------------------------------------


@dataclass
class IsoResult:
    verdict: bool | str  # True, False or "unknown"
    witness: np.ndarray | None = None
    method: str = ""

    def __bool__(self) -> bool:
        if self.verdict == "unknown":
            raise ValueError("isomorphism test was inconclusive")
        return bool(self.verdict)


def _key_multiset(m: GMod, level) -> list:
    return sorted(torus_keys(m, level))


def is_isomorphic(a: GMod, b: GMod, level: LevelSpec | str = LevelSpec.Gr, seed: int = 0,
                  draws: int = RANDOM_DRAWS, budget: int = ENUM_BUDGET) -> IsoResult:
    level = LevelSpec.parse(level)
    if a.dim != b.dim:
        return IsoResult(False, method="dimension")
    if _key_multiset(a, level) != _key_multiset(b, level):
        return IsoResult(False, method="weights")
    if a.dim == 0:
        return IsoResult(True, np.zeros((0, 0), dtype=np.int64), "empty")
    H = hom_space(a, b, level)
    if H.dim == 0:
        return IsoResult(False, method="hom=0")
    F = a.field
    n = a.dim
    for X in H.basis:
        if rank(F, X) == n:
            return IsoResult(True, X, "basis")
    rng = np.random.default_rng(seed)
    for _ in range(draws):
        X = H.random_element(rng)
        if rank(F, X) == n:
            return IsoResult(True, X, "random")
    if F.q ** H.dim <= budget:
        for X in H.points(projective=True):
            if rank(F, X) == n:
                return IsoResult(True, X, "exhaustive")
        return IsoResult(False, method="exhaustive")
    return IsoResult("unknown", method="random search exhausted")


# -- decomposition -------------------------------------------------------------


@dataclass
class Summand:
    subspace: Subspace
    module: GMod
    embedding: np.ndarray  # rows: basis of the summand in ambient coordinates
    certificate: str = ""


@dataclass
class DecompositionResult:
    ambient: GMod
    level: LevelSpec
    summands: list[Summand]
    classes: list[list[int]]
    seed: int
    field: FieldSpec
    unresolved: list[tuple[int, int]] = field(default_factory=list)

    @property
    def dims(self) -> list[int]:
        return [s.module.dim for s in self.summands]

    def multiplicities(self) -> list[int]:
        return [len(c) for c in self.classes]

    def class_of(self, i: int) -> int:
        return next(k for k, c in enumerate(self.classes) if i in c)

    def to_json(self) -> dict:
        return {
            "level": self.level.value,
            "field": self.field.to_json(),
            "seed": self.seed,
            "dims": self.dims,
            "classes": [{"dim": self.summands[c[0]].module.dim, "members": c,
                         "multiplicity": len(c)} for c in self.classes],
            "certificates": [s.certificate for s in self.summands],
            "unresolved_pairs": [list(p) for p in self.unresolved],
        }


def _try_split(F: FieldSpec, E: HomSpace, rng, draws: int):
    """Look for an endomorphism with a nontrivial Fitting decomposition.

    Returns ``("split", ker, im)``, ``("local", certificate)`` or
    ``("unknown", reason)``.
    """
    n = E.source.dim
    I = np.eye(n, dtype=np.int64)
    scalars = [F.mul(c, I) for c in F.elements()]

    def examine(a):
        has_eig = False
        for c, cI in enumerate(scalars):
            f = F.sub(a, cI)
            if rank(F, f) == n:
                continue
            has_eig = True
            g = _stable_power(F, f)
            if g.any():
                return ("split", left_kernel(F, g), Subspace(F, n, g))
        return ("local",) if has_eig else ("noeig",)

    consistent = True
    for X in E.basis:
        out = examine(X)
        if out[0] == "split":
            return out
        consistent &= out[0] == "local"
    for _ in range(draws):
        out = examine(E.random_element(rng))
        if out[0] == "split":
            return out
        consistent &= out[0] == "local"
    if E.dim <= EXHAUSTIVE_DIM and F.q ** E.dim <= ENUM_BUDGET:
        for X in E.points(projective=True):
            if rank(F, X) == n or is_nilpotent_matrix(F, X):
                continue
            g = _stable_power(F, X)
            return ("split", left_kernel(F, g), Subspace(F, n, g))
        return ("local", "exhaustive")
    if consistent:
        return ("local", f"random({draws})")
    return ("unknown", "draws without eigenvalues in the field")


def _split_module(m: GMod, level: LevelSpec, rng, draws: int, out: list, emb: np.ndarray):
    F = m.field
    E = end_space(m, level)
    if E.dim == 1:
        out.append(Summand(Subspace(F, emb.shape[1], emb), m, emb, "dim End = 1"))
        return
    res = _try_split(F, E, rng, draws)
    if res[0] == "split":
        for part in res[1:]:
            sm, S = sub_module(m, part, level, return_basis=True)
            _split_module(sm, level, rng, draws, out, F.matmul(S, emb))
        return
    if res[0] == "unknown":
        raise FieldTooSmallError(f"could not split or certify {m!r} over F_{F.q}: {res[1]}")
    out.append(Summand(Subspace(F, emb.shape[1], emb), m, emb, res[1] if len(res) > 1 else "local"))


def _enlarged(F: FieldSpec) -> FieldSpec:
    e = F.e
    while F.p ** e < 16:
        e += 1
    return FieldSpec(F.p, max(e, 2 * F.e) if F.p ** e == F.q else e)


def decompose(v: GMod, level: LevelSpec | str = LevelSpec.Gr, seed: int = 0,
              draws: int = RANDOM_DRAWS, group: bool = True) -> DecompositionResult:
    """Krull-Schmidt decomposition at a level, with iso-class grouping.

    Splitting runs at the level with the full torus (Gr -> GrT, GrU -> GrB):
    a graded indecomposable stays indecomposable after forgetting the grading,
    so the summands are the same and keep integer weights.  Grouping into
    classes uses isomorphism at the requested level.
    """
    level = LevelSpec.parse(level)
    work = level.graded
    rng = np.random.default_rng(seed)
    F = v.field
    out: list[Summand] = []
    try:
        _split_module(v, work, rng, draws, out, np.eye(v.dim, dtype=np.int64))
    except FieldTooSmallError:
        if not F.is_prime:
            raise
        F2 = _enlarged(F)
        log.info("retrying decomposition over F_%d", F2.q)
        out = []
        v = v.with_field(F2)
        F = F2
        _split_module(v, work, rng, draws, out, np.eye(v.dim, dtype=np.int64))
    total = sum(s.module.dim for s in out)
    if total != v.dim:
        raise InvariantViolation(f"summand dimensions add to {total}, not {v.dim}")
    classes, unresolved = ([[i] for i in range(len(out))], []) if not group else _group(out, level, seed)
    return DecompositionResult(v, level, out, classes, seed, F, unresolved)


def _group(out: list[Summand], level: LevelSpec, seed: int):
    classes: list[list[int]] = []
    unresolved = []
    for i, s in enumerate(out):
        for c in classes:
            r = is_isomorphic(out[c[0]].module, s.module, level, seed)
            if r.verdict == "unknown":
                unresolved.append((c[0], i))
                continue
            if r.verdict:
                c.append(i)
                break
        else:
            classes.append([i])
    return classes, unresolved


def multiplicity(v: GMod | DecompositionResult, m: GMod, level: LevelSpec | str = LevelSpec.Gr, seed: int = 0) -> int:
    """Number of summands of v (at the level) isomorphic to m."""
    level = LevelSpec.parse(level)
    if isinstance(v, GMod):
        if m.dim > v.dim:
            return 0
        v = decompose(v, level, seed)
    count = 0
    for c in v.classes:
        rep = v.summands[c[0]].module
        if rep.dim == m.dim and is_isomorphic(rep, m, level, seed).verdict is True:
            count += len(c)
    return count


def is_indecomposable(m: GMod, level: LevelSpec | str = LevelSpec.Gr, seed: int = 0) -> bool:
    return len(decompose(m, level, seed, group=False).summands) == 1


# -- socle, radical, heads ------------------------------------------------------


def simples(m: GMod) -> dict:
    """The simple G_r-modules L(mu), mu restricted, over m's field."""
    return {mu: simple_module(m.group, mu, m.field) for mu in restricted_weights(m.group)}


def socle(v: GMod, level: LevelSpec | str = LevelSpec.Gr) -> Subspace:
    """Sum of the images of all maps L(mu) -> v.

    For a G_rT-module the G_r-socle is T-stable and equals the G_rT-socle, so
    both levels use the G_r-simples.
    """
    level = LevelSpec.parse(level)
    if level not in (LevelSpec.Gr, LevelSpec.GrT):
        raise ValueError("socle is defined here for levels Gr and GrT")
    F = v.field
    rows = [np.zeros((0, v.dim), dtype=np.int64)]
    for L in simples(v).values():
        H = hom_space(L, v, LevelSpec.Gr)
        rows.extend(H.basis)
    return Subspace(F, v.dim, np.concatenate(rows))


def radical(v: GMod, level: LevelSpec | str = LevelSpec.Gr) -> Subspace:
    """Annihilator of the socle of the dual."""
    S = socle(dual(v), level)
    if S.dim == 0:
        return Subspace.full(v.field, v.dim)
    return kernel_basis(v.field, S.basis)


def head_multiplicities(v: GMod) -> dict:
    """mu -> dim Hom_{G_r}(v, L(mu)) (= multiplicity of L(mu) in the head)."""
    return {mu: hom_space(v, L, LevelSpec.Gr).dim for mu, L in simples(v).items()}


def socle_multiplicities(v: GMod) -> dict:
    return {mu: hom_space(L, v, LevelSpec.Gr).dim for mu, L in simples(v).items()}


def simple_head(v: GMod):
    """The restricted mu with head L(mu), or None when the head is not simple."""
    hm = {mu: d for mu, d in head_multiplicities(v).items() if d}
    if len(hm) == 1:
        (mu, d), = hm.items()
        if d == 1:
            return mu
    return None


def is_projective(v: GMod, qdims: dict) -> bool:
    """G_r-projectivity via the projective cover dimension.

    The cover of v is the sum of Q_r(mu)^(dim Hom(v, L(mu))); v is projective
    exactly when that dimension equals dim v.  ``qdims`` maps restricted mu to
    dim Q_r(mu).
    """
    cover = sum(d * qdims[mu] for mu, d in head_multiplicities(v).items())
    return cover == v.dim


# -- twisting by the Weyl group -------------------------------------------------


def twist_by_weyl(v: GMod, i: int = 0) -> GMod:
    """Twist by the Chevalley representative of the i-th simple reflection.

    A generator x^(n) of the twisted module acts as (Ad(h) x)^(n) of v; for a
    signed permutation h this is sign^n times another root vector.
    """
    g = v.group
    if v.structure == "GrB":
        v = restrict_structure(v, "GrT")
    lie = lie_data(g.type)
    P = lie.reflection_reps[i]
    nb = v.nil_bound
    gens = {}
    for kind in ("e", "f"):
        for a in g.roots:
            sign, (k2, a2) = lie.conjugate(P, (kind, a))
            for n in range(1, nb + 1):
                M = v.gen(k2, a2, n)
                gens[gen_label(kind, a, n)] = v.field.neg(M) if (sign < 0 and n % 2) else M
    gens = restrict_gens(gens, v.structure, g.pr)
    weights = tuple(simple_reflection(g, i, w) for w in v.weights)
    out = GMod(g, v.field, weights, {l: m for l, m in gens.items() if m.any() or parse_label(l)[2] <= nb},
               v.structure, f"w{i + 1}.{v.name}")
    out.validate()
    return out
