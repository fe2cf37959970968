"""Charts on the variety of summands, splitting tests and stable decompositions.

A decomposition V = M (+) N is fixed once and for all in a
:class:`SplitContext`.  A linear map f: M -> N gives the chart point
W_f = {m + f(m)}; all summands complementary to N arise this way, and W_f is a
G_r-submodule exactly when f is an intertwiner.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .exactlin import (
    FieldSpec,
    Subspace,
    intersect,
    inverse,
    is_complementary,
    rank,
    solve_left,
    subspace_sum,
)
from .exactlin import _stable_power
from .homlab import (
    ENUM_BUDGET,
    DecompositionResult,
    InvariantViolation,
    decompose,
    hom_space,
    is_isomorphic,
    solve_intertwiners,
    torus_keys,
)
from .modcore import GMod, LevelSpec, direct_sum, sub_module
from .modcore.gmod import parse_label

CONDITION_BUDGET = 6


class ChartError(ValueError):
    """A subspace (or transported point) is outside the chart."""


class BudgetExceeded(RuntimeError):
    """An enumeration would exceed its budget."""


# -- subspace tests ------------------------------------------------------------


def _keyed_basis(F: FieldSpec, s: Subspace, keys: list) -> np.ndarray | None:
    """Basis of s made of key-homogeneous vectors, or None if s is not graded."""
    if len(set(keys)) <= 1:
        return s.basis
    parts = []
    ids = {k: i for i, k in enumerate(sorted(set(keys)))}
    karr = np.array([ids[k] for k in keys])
    for k, i in ids.items():
        mask = karr == i
        P = np.where(mask[None, :], s.basis, 0)
        if s.coordinates(P) is None:
            return None
        parts.append(Subspace(F, s.ambient_dim, P).basis)
    B = np.concatenate(parts)
    return B if B.shape[0] == s.dim else None


def submodule_violation(v: GMod, s: Subspace, level: LevelSpec | str = LevelSpec.Gr) -> str | None:
    """First obstruction to s being a level-submodule: a generator label,
    ``"torus"`` for a non-homogeneous subspace, or None."""
    level = LevelSpec.parse(level)
    if s.ambient_dim != v.dim:
        raise ValueError("subspace lives in the wrong ambient space")
    F = v.field
    if _keyed_basis(F, s, torus_keys(v, level)) is None:
        return "torus"
    for lab, M in v.level_generators(level):
        if s.coordinates(F.matmul(s.basis, M)) is None:
            return lab
    return None


def is_submodule(v: GMod, s: Subspace, level: LevelSpec | str = LevelSpec.Gr) -> bool:
    return submodule_violation(v, s, level) is None


def _subspace_actions(v: GMod, S: np.ndarray, level: LevelSpec, minimal: bool):
    F = v.field
    for lab, M in v.level_generators(level, minimal):
        yield lab, M, solve_left(F, S, F.matmul(S, M))


def equivariant_projection(v: GMod, s: Subspace, level: LevelSpec | str = LevelSpec.Gr) -> np.ndarray | None:
    """A level-equivariant idempotent of v with image s, or None.

    Solves for P: v -> s equivariant with P restricted to s the identity; the
    inclusion of s splits exactly when such P exists.
    """
    level = LevelSpec.parse(level)
    if not is_submodule(v, s, level):
        return None
    F = v.field
    keys = torus_keys(v, level)
    S = _keyed_basis(F, s, keys)
    if S.shape[0] == 0:
        return np.zeros((v.dim, v.dim), dtype=np.int64)
    skeys = [keys[int(np.flatnonzero(row)[0])] for row in S]
    mask = np.array([[a == b for b in skeys] for a in keys], dtype=bool).reshape(v.dim, len(S))
    pairs = [(M, Sx) for _, M, Sx in _subspace_actions(v, S, level, True)]
    checks = [(M, Sx) for _, M, Sx in _subspace_actions(v, S, level, False)]
    Ps = solve_intertwiners(F, mask, pairs, checks)
    if len(Ps) == 0:
        return None
    # want sum_i c_i (S @ P_i) = I_k
    k = len(S)
    imgs = np.stack([F.matmul(S, P).ravel() for P in Ps])
    c = solve_left(F, imgs, np.eye(k, dtype=np.int64).ravel()[None, :])
    if c is None:
        return None
    P = F.lincomb(c[0], Ps)
    return F.matmul(P, S)


def is_summand(v: GMod, s: Subspace, level: LevelSpec | str = LevelSpec.Gr):
    """(verdict, complement) where the complement is level-invariant."""
    pi = equivariant_projection(v, s, level)
    if pi is None:
        return False, None
    F = v.field
    I = np.eye(v.dim, dtype=np.int64)
    comp = Subspace(F, v.dim, F.sub(I, pi))
    return True, comp


# -- split contexts and charts ---------------------------------------------------


@dataclass
class SplitContext:
    """A fixed level decomposition V = M (+) N with adapted bases."""

    ambient: GMod
    m_part: Subspace
    n_part: Subspace
    projections: tuple[np.ndarray, np.ndarray] = field(repr=False)
    m_basis: np.ndarray = field(repr=False)
    n_basis: np.ndarray = field(repr=False)
    m_module: GMod | None = None
    n_module: GMod | None = None
    level: LevelSpec = LevelSpec.Gr

    @property
    def field(self) -> FieldSpec:
        return self.ambient.field

    @property
    def change(self) -> np.ndarray:
        return np.concatenate([self.m_basis, self.n_basis])

    def blocks(self, g: np.ndarray):
        """Blocks (a, b, c, d) of v -> v g in the adapted basis."""
        F = self.field
        T = self.change
        G = F.matmul(F.matmul(T, g), inverse(F, T))
        k = self.m_basis.shape[0]
        return G[:k, :k], G[:k, k:], G[k:, :k], G[k:, k:]


def make_context(v: GMod, m_part: Subspace, n_part: Subspace, level: LevelSpec | str = LevelSpec.Gr,
                 check: bool = True) -> SplitContext:
    level = LevelSpec.parse(level)
    F = v.field
    if not is_complementary(m_part, n_part):
        raise ValueError("parts are not complementary")
    if check:
        for part, nm in ((m_part, "M"), (n_part, "N")):
            bad = submodule_violation(v, part, level)
            if bad is not None:
                raise ValueError(f"{nm} part is not a {level.value}-submodule (violates {bad})")
    try:
        M, Mb = sub_module(v, m_part, LevelSpec.GrT, return_basis=True)
        N, Nb = sub_module(v, n_part, LevelSpec.GrT, return_basis=True)
    except ValueError:
        M = N = None
        Mb, Nb = m_part.basis, n_part.basis
    T = np.concatenate([Mb, Nb])
    Tinv = inverse(F, T)
    k = Mb.shape[0]
    prM = F.matmul(Tinv[:, :k], Mb)
    prN = F.matmul(Tinv[:, k:], Nb)
    return SplitContext(v, m_part, n_part, (prM, prN), Mb, Nb, M, N, level)


def chart_to_subspace(ctx: SplitContext, f: np.ndarray) -> Subspace:
    """The graph {m + f(m)} of f: M -> N (coordinates in the adapted bases)."""
    F = ctx.field
    f = np.asarray(f, dtype=np.int64)
    k, l = ctx.m_basis.shape[0], ctx.n_basis.shape[0]
    if f.shape != (k, l):
        raise ValueError(f"chart map has shape {f.shape}, expected {(k, l)}")
    return Subspace(F, ctx.ambient.dim, F.add(ctx.m_basis, F.matmul(f, ctx.n_basis)))


def subspace_to_chart(ctx: SplitContext, w: Subspace) -> np.ndarray:
    F = ctx.field
    k = ctx.m_basis.shape[0]
    if w.dim != k:
        raise ChartError(f"not in chart: dimension {w.dim} instead of {k}")
    C = F.matmul(w.basis, inverse(F, ctx.change))
    X, Y = C[:, :k], C[:, k:]
    if rank(F, X) < k:
        raise ChartError("not in chart: subspace meets the N part")
    return F.matmul(inverse(F, X), Y)


@dataclass
class DecompPoint:
    """Chart coordinates (f, g) of the decomposition W_f (+) W'_g."""

    f: np.ndarray
    g: np.ndarray


def point_subspaces(ctx: SplitContext, pt: DecompPoint) -> tuple[Subspace, Subspace]:
    F = ctx.field
    W1 = chart_to_subspace(ctx, pt.f)
    W2 = Subspace(F, ctx.ambient.dim, F.add(ctx.n_basis, F.matmul(pt.g, ctx.m_basis)))
    return W1, W2


def validate_point(ctx: SplitContext, pt: DecompPoint) -> None:
    """Raise unless f and g are intertwiners M -> N and N -> M."""
    if ctx.m_module is None:
        raise ValueError("context parts are not graded; cannot check intertwiners")
    for X, a, b in ((pt.f, ctx.m_module, ctx.n_module), (pt.g, ctx.n_module, ctx.m_module)):
        from .homlab import is_homomorphism

        bad = is_homomorphism(a, b, X, ctx.level)
        if bad is not None:
            raise ValueError(f"chart coordinate is not an intertwiner (violates {bad})")


def act_on_chart(ctx: SplitContext, g: np.ndarray, pt: DecompPoint) -> DecompPoint:
    """Transport a chart point along v -> v g.

    With blocks [[a, b], [c, d]] of g in the adapted basis, W_f = rows of
    [1, f] goes to [a + f c, b + f d], so f' = (a + f c)^-1 (b + f d); the N-side
    chart transforms symmetrically.  Raises ChartError if the image leaves the
    chart.
    """
    F = ctx.field
    a, b, c, d = ctx.blocks(np.asarray(g, dtype=np.int64))
    X = F.add(a, F.matmul(pt.f, c))
    Y = F.add(d, F.matmul(pt.g, b))
    if rank(F, X) < X.shape[0] or rank(F, Y) < Y.shape[0]:
        raise ChartError("left chart")
    f2 = F.matmul(inverse(F, X), F.add(b, F.matmul(pt.f, d)))
    g2 = F.matmul(inverse(F, Y), F.add(c, F.matmul(pt.g, a)))
    return DecompPoint(f2, g2)


def transport_subspace(ctx: SplitContext, g: np.ndarray, w: Subspace) -> Subspace:
    return w.image(g)


def root_element(v: GMod, kind: str, root: str, t: int) -> np.ndarray:
    """The group element x_root(t) = sum_n t^n x^(n) acting on v."""
    F = v.field
    out = np.eye(v.dim, dtype=np.int64)
    tn = 1
    for n in range(1, v.nil_bound + 1):
        tn = int(F.mul(tn, t))
        M = v.gen(kind, root, n)
        if M.any() and tn:
            out = F.add(out, F.mul(tn, M))
    return out


def torus_element(v: GMod, t: tuple[int, ...]) -> np.ndarray:
    """Diagonal action of the torus point with fundamental coordinates t_i in F_q^x."""
    F = v.field
    diag = []
    for w in v.weights:
        x = 1
        for ti, wi in zip(t, w):
            base = ti if wi >= 0 else F.inv(ti)
            for _ in range(abs(wi)):
                x = int(F.mul(x, base))
        diag.append(x)
    return np.diag(np.array(diag, dtype=np.int64))


# -- Prop-3.5 style conditions -------------------------------------------------


def _batched_nilpotent(F: FieldSpec, mats: np.ndarray) -> np.ndarray:
    if not F.is_prime:
        from .exactlin import is_nilpotent_matrix

        return np.array([is_nilpotent_matrix(F, m) for m in mats], dtype=bool)
    X = mats.astype(np.float64)
    j = 1
    n = mats.shape[-1]
    while j < n:
        X = np.mod(np.matmul(X, X), F.p)
        j *= 2
    return ~X.reshape(len(X), -1).any(axis=1)


def is_nil_subspace(mats, field: FieldSpec, budget: int = ENUM_BUDGET) -> bool:
    """True iff every F_q-linear combination of ``mats`` is nilpotent."""
    mats = np.asarray(mats, dtype=np.int64)
    if mats.size == 0 or len(mats) == 0:
        return True
    q = field.q
    if q ** len(mats) > budget:
        raise BudgetExceeded(f"{q}^{len(mats)} combinations exceed budget {budget}")
    coeffs = []
    for c in itertools.product(range(q), repeat=len(mats)):
        nz = next((x for x in c if x), 0)
        if nz == 1:
            coeffs.append(c)
    flat = mats.reshape(len(mats), -1)
    ok = True
    for s in range(0, len(coeffs), 512):
        C = np.array(coeffs[s:s + 512], dtype=np.int64)
        combos = field.matmul(C, flat).reshape((len(C),) + mats.shape[1:])
        if not _batched_nilpotent(field, combos).all():
            ok = False
            break
    return ok


def cross_maps(ctx: SplitContext) -> list[np.ndarray]:
    """Hom(M, N) and Hom(N, M) embedded as endomorphisms of V (adapted basis)."""
    if ctx.m_module is None:
        raise ValueError("context parts are not graded")
    M, N = ctx.m_module, ctx.n_module
    k, l = M.dim, N.dim
    out = []
    for X in hom_space(M, N, LevelSpec.Gr).basis:
        E = np.zeros((k + l, k + l), dtype=np.int64)
        E[:k, k:] = X
        out.append(E)
    for X in hom_space(N, M, LevelSpec.Gr).basis:
        E = np.zeros((k + l, k + l), dtype=np.int64)
        E[k:, :k] = X
        out.append(E)
    return out


def classes_disjoint(a: GMod, b: GMod, seed: int = 0) -> bool:
    """No Gr-indecomposable summand of a is isomorphic to one of b."""
    if a.dim == 0 or b.dim == 0:
        return True
    da = decompose(a, LevelSpec.Gr, seed)
    db = decompose(b, LevelSpec.Gr, seed)
    for ca in da.classes:
        x = da.summands[ca[0]].module
        for cb in db.classes:
            y = db.summands[cb[0]].module
            r = is_isomorphic(x, y, LevelSpec.Gr, seed)
            if r.verdict == "unknown":
                raise RuntimeError("isomorphism test inconclusive while checking disjointness")
            if r.verdict:
                return False
    return True


def check_conditions(ctx: SplitContext, budget: int = CONDITION_BUDGET, seed: int = 0) -> dict:
    """Evaluate the nilpotency criterion (c5) and class disjointness (c4).

    c5: every element of Hom(M,N) (+) Hom(N,M), viewed inside End(V), is
    nilpotent (exhaustive over F_q when the hom-sum has dim <= budget).
    c4: the Gr-indecomposable classes of M and N are disjoint.  Both are run
    when possible and must agree.
    """
    F = ctx.field
    c4 = classes_disjoint(ctx.m_module, ctx.n_module, seed)
    X = cross_maps(ctx)
    if len(X) <= budget:
        c5 = is_nil_subspace(np.array(X).reshape(len(X), ctx.ambient.dim, ctx.ambient.dim) if X else [], F,
                             budget=max(ENUM_BUDGET, F.q ** len(X)))
        if c5 != c4:
            raise InvariantViolation(f"criteria disagree: c4={c4}, c5={c5}")
    else:
        c5 = "skipped"
    return {
        "conditions": {"c4": c4, "c5": c5},
        "hom_dims": {"MN": hom_space(ctx.m_module, ctx.n_module, "Gr").dim,
                     "NM": hom_space(ctx.n_module, ctx.m_module, "Gr").dim},
        "evaluated": ["c4"] + (["c5"] if c5 != "skipped" else []),
        "note": "" if c5 != "skipped" else "practical criterion only",
        "seed": seed,
        "field": F.to_json(),
    }


# -- stable decompositions -------------------------------------------------------


def _subset_module(v: GMod, dec: DecompositionResult, idx) -> tuple[Subspace, GMod]:
    F = v.field
    rows = np.concatenate([dec.summands[i].embedding for i in idx]) if idx else np.zeros((0, v.dim), dtype=np.int64)
    s = Subspace(F, v.dim, rows)
    mods = [dec.summands[i].module for i in idx]
    return s, (direct_sum(*mods) if mods else None)


def find_stable_decomposition(v: GMod, m_class: GMod, level: LevelSpec | str = LevelSpec.G,
                              seed: int = 0, max_subset: int = 4) -> SplitContext | None:
    """Search a level decomposition of v for a part that is Gr-isomorphic to m_class.

    Returns the SplitContext (M = that part, N = the remaining summands) or
    None when no grouping of the level-summands restricts to m_class.
    """
    level = LevelSpec.parse(level)
    dec = decompose(v, level, seed)
    F = v.field
    n = len(dec.summands)
    dims = dec.dims
    for size in range(1, min(max_subset, n) + 1):
        for idx in itertools.combinations(range(n), size):
            if sum(dims[i] for i in idx) != m_class.dim:
                continue
            s, mod = _subset_module(v, dec, list(idx))
            if is_isomorphic(mod, m_class, LevelSpec.Gr, seed).verdict is True:
                rest = [i for i in range(n) if i not in idx]
                t, _ = _subset_module(v, dec, rest)
                return make_context(v, s, t, level)
    return None


def count_summands_bruteforce(v: GMod, m_class: GMod, budget: int = ENUM_BUDGET, seed: int = 0) -> int:
    """Number of Gr-summand subspaces of v isomorphic to m_class, over F_q.

    Every such summand has a complement made of summands of a fixed
    Gr-decomposition (exchange property), so it is the graph of an intertwiner
    on one of finitely many base charts.
    """
    dec = decompose(v, LevelSpec.Gr, seed)
    F = v.field
    n = len(dec.summands)
    if m_class.dim > v.dim:
        return 0
    found: set[Subspace] = set()
    spent = 0
    bases = []
    for size in range(0, n + 1):
        for idx in itertools.combinations(range(n), size):
            if sum(dec.dims[i] for i in idx) != m_class.dim:
                continue
            s, mod = _subset_module(v, dec, list(idx))
            if is_isomorphic(mod, m_class, LevelSpec.Gr, seed).verdict is not True:
                continue
            rest = [i for i in range(n) if i not in idx]
            t, _ = _subset_module(v, dec, rest)
            ctx = make_context(v, s, t, LevelSpec.Gr, check=False)
            if ctx.n_module is None or ctx.n_basis.shape[0] == 0:
                H = np.zeros((1, ctx.m_basis.shape[0], 0), dtype=np.int64)
                npts = 1
            else:
                H = hom_space(ctx.m_module, ctx.n_module, LevelSpec.Gr).basis
                npts = F.q ** len(H)
            spent += npts
            if spent > budget:
                raise BudgetExceeded(f"chart enumeration needs more than {budget} points")
            bases.append((ctx, H))
    for ctx, H in bases:
        if H.shape[2] == 0:
            found.add(ctx.m_part)
            continue
        for c in itertools.product(range(F.q), repeat=len(H)):
            f = F.lincomb(c, H) if len(H) else np.zeros(H.shape[1:], dtype=np.int64)
            found.add(chart_to_subspace(ctx, f))
    return len(found)


def fixed_vectors(v: GMod, level: LevelSpec | str) -> Subspace:
    """Vectors killed by every level generator, in the trivial torus class."""
    level = LevelSpec.parse(level)
    F = v.field
    keys = torus_keys(v, level)
    if level.torus is None:
        zero_cols = np.arange(v.dim)
    else:
        z = torus_keys_zero(v, level)
        zero_cols = np.array([i for i, k in enumerate(keys) if k == z], dtype=np.int64)
    if len(zero_cols) == 0:
        return Subspace.zero(F, v.dim)
    E = np.zeros((len(zero_cols), v.dim), dtype=np.int64)
    E[np.arange(len(zero_cols)), zero_cols] = 1
    mats = [M[zero_cols] for _, M in v.level_generators(level)]
    if mats:
        from .exactlin import left_kernel

        K = left_kernel(F, np.concatenate(mats, axis=1)).basis
        E = F.matmul(K, E)
    return Subspace(F, v.dim, E)


def torus_keys_zero(v: GMod, level: LevelSpec):
    return (0,) * v.group.rank


def check_split_extension(v: GMod, w: Subspace, level: LevelSpec | str) -> bool:
    """For v/w trivial of dim 1: does the extension split over the level?

    It splits exactly when v has a level-fixed vector outside w.
    """
    level = LevelSpec.parse(level)
    if w.dim != v.dim - 1:
        raise ValueError("w must have codimension one")
    bad = submodule_violation(v, w, level)
    if bad is not None:
        raise ValueError(f"w is not a {level.value}-submodule (violates {bad})")
    F = v.field
    c = w.complement_basis()
    if level.torus is not None:
        W = v.weight_array()
        j = int(np.flatnonzero(c[0])[0])
        if torus_keys(v, level)[j] != torus_keys_zero(v, level):
            raise ValueError("quotient is not the trivial module")
    for _, M in v.level_generators(level):
        if w.coordinates(F.matmul(c, M)) is None:
            raise ValueError("quotient is not the trivial module")
    fx = fixed_vectors(v, level)
    return subspace_sum(fx, w).dim > w.dim
