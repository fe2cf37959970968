"""The D_r(lambda) pipeline: projective summands, stable decompositions, peeling.

D_r(lambda) = L(lambda0) (x) St_r with lambda0 = (p^r - 1) rho + w0 lambda.
Q_r(lambda) is located as the Gr-summand of D with simple head L(lambda) and
maximal dimension; it must occur exactly once.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .exactlin import FieldSpec, Subspace, intersect, subspace_sum
from .homlab import (
    DecompositionResult,
    InvariantViolation,
    decompose,
    head_multiplicities,
    hom_space,
    is_isomorphic,
    simple_head,
    simples,
)
from .modcore import GMod, LevelSpec, quotient_module, simple_module, steinberg, sub_module, tensor
from .rootdata import GroupData, Weight, fundamental_to_root, is_restricted, lambda_zero
from .summandvar import (
    SplitContext,
    check_conditions,
    find_stable_decomposition,
    make_context,
    submodule_violation,
)

REPORT_FORMAT = 1
MAX_DIM = 256
CACHE_ENV = "GRSUMMANDS_CACHE"
DEFAULT_CACHE = Path.home() / ".cache" / "grsummands"
SEARCH_LEVELS = (LevelSpec.GrT, LevelSpec.GrU, LevelSpec.GrB, LevelSpec.G)


class BudgetRefusal(RuntimeError):
    """The instance is larger than the configured budget."""


class MultiplicityError(InvariantViolation):
    """Q_r(lambda) does not occur exactly once in D_r(lambda)."""


# -- content-addressed store ---------------------------------------------------


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def content_key(obj) -> str:
    return hashlib.sha256(canonical_json(obj).encode()).hexdigest()


class Cache:
    """Directory of JSON documents named by the hash of their key.

    Writes go to a temporary file in the same directory followed by an atomic
    rename, so concurrent writers of the same key are harmless.
    """

    def __init__(self, root: str | Path | None = None):
        if root is None:
            root = os.environ.get(CACHE_ENV) or DEFAULT_CACHE
        self.root = Path(root)

    def path(self, key: dict) -> Path:
        h = content_key(key)
        return self.root / h[:2] / f"{h}.json"

    def get(self, key: dict):
        p = self.path(key)
        try:
            with open(p) as fh:
                doc = json.load(fh)
        except (OSError, ValueError):
            return None
        return doc.get("value") if doc.get("key") == key else None

    def put(self, key: dict, value) -> Path:
        p = self.path(key)
        p.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=p.parent, suffix=".tmp")
        try:
            with os.fdopen(fd, "w") as fh:
                fh.write(canonical_json({"key": key, "value": value}))
            os.replace(tmp, p)
        finally:
            if os.path.exists(tmp):
                os.unlink(tmp)
        return p


# -- D and Q ---------------------------------------------------------------------


def _check_lambda(g: GroupData, lam) -> Weight:
    lam = tuple(int(c) for c in lam)
    if not is_restricted(g, lam):
        raise ValueError(f"lambda={lam} is not a {g.pr}-restricted weight for {g.type}")
    return lam


def build_D(g: GroupData, lam: Weight, F: FieldSpec | None = None, max_dim: int | None = MAX_DIM) -> GMod:
    lam = _check_lambda(g, lam)
    L = simple_module(g, lambda_zero(g, lam), F)
    St = steinberg(g, L.field)
    dim = L.dim * St.dim
    if max_dim is not None and dim > max_dim:
        raise BudgetRefusal(f"dim D = {dim} exceeds the budget {max_dim}")
    return tensor(L, St).renamed(f"D{lam}")


@dataclass
class QData:
    """Q_r(lambda) located inside D_r(lambda)."""

    D: GMod
    decomposition: DecompositionResult
    index: int
    Q: GMod
    q_part: Subspace
    c_part: Subspace
    C: GMod | None
    multiplicity: int

    def context(self) -> SplitContext:
        return make_context(self.D, self.q_part, self.c_part, LevelSpec.Gr, check=False)


_Q_MEMO: dict = {}


def identify_Q(g: GroupData, lam: Weight, F: FieldSpec | None = None, seed: int = 0,
               max_dim: int | None = MAX_DIM) -> QData:
    lam = _check_lambda(g, lam)
    D = build_D(g, lam, F, max_dim)
    key = (g, lam, D.field, seed)
    if key in _Q_MEMO:
        return _Q_MEMO[key]
    dec = decompose(D, LevelSpec.Gr, seed)
    heads = [simple_head(s.module) for s in dec.summands]
    cands = [i for i, h in enumerate(heads) if h == lam]
    if not cands:
        raise MultiplicityError(f"no summand of D{lam} has simple head L{lam}")
    best = max(cands, key=lambda i: dec.summands[i].module.dim)
    cls = dec.classes[dec.class_of(best)]
    mult = len(cls)
    if mult != 1:
        raise MultiplicityError(f"Q{lam} occurs {mult} times in D{lam}")
    Fd = dec.field
    rest = [i for i in range(len(dec.summands)) if i != best]
    q_part = dec.summands[best].subspace
    rows = [dec.summands[i].embedding for i in rest]
    c_part = Subspace(Fd, D.dim, np.concatenate(rows) if rows else None)
    C = None
    if rest:
        C = sub_module(dec.ambient, c_part, LevelSpec.GrT)
    Q = dec.summands[best].module.renamed(f"Q{lam}")
    out = QData(dec.ambient, dec, best, Q, q_part, c_part, C, mult)
    _Q_MEMO[key] = out
    return out


def clear_memos() -> None:
    """Forget every in-process memo (modules, Q identifications); used for cold timings."""
    from .modcore import build

    _Q_MEMO.clear()
    for fn in (build._weyl_integral, build._simple_cached, build._baby_verma_cached):
        fn.cache_clear()


def q_dimensions(g: GroupData, F: FieldSpec | None = None, seed: int = 0) -> dict:
    from .rootdata import restricted_weights

    return {lam: identify_Q(g, lam, F, seed).Q.dim for lam in restricted_weights(g)}


# -- reports ---------------------------------------------------------------------


@dataclass
class DonkinReport:
    group: GroupData
    lam: Weight
    dims: tuple[int, int, int]
    multiplicity: int
    level_results: dict
    conditions: dict
    seed: int
    field: FieldSpec
    g_summand_highest_weight: Weight | None = None
    peel_results: dict | None = None
    structure: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "format": REPORT_FORMAT,
            "group": self.group.to_json(),
            "lambda": list(self.lam),
            "dims": {"D": self.dims[0], "Q": self.dims[1], "C": self.dims[2]},
            "multiplicity": self.multiplicity,
            "level_results": dict(self.level_results),
            "conditions": self.conditions,
            "g_summand_highest_weight": list(self.g_summand_highest_weight) if self.g_summand_highest_weight else None,
            "peel_results": self.peel_results,
            "structure": self.structure,
            "seed": self.seed,
            "field": self.field.to_json(),
            "negative_verdicts": f"'none' means not found over F_{self.field.q} with seed {self.seed}",
        }


def check_monotone(results: dict) -> None:
    """found at GrB or GrU => found at G => found at GrB => found at GrT."""
    f = {k: v == "found" for k, v in results.items()}
    rules = [("GrB", "G"), ("GrU", "G"), ("G", "GrB"), ("GrB", "GrT")]
    for a, b in rules:
        if a in f and b in f and f[a] and not f[b]:
            raise InvariantViolation(f"monotonicity broken: found at {a} but not at {b}")


def _highest_weight(g: GroupData, weights) -> Weight:
    return max(weights, key=lambda w: (sum(fundamental_to_root(g, w)), w))


def structure_check(qd: QData, seed: int = 0) -> dict:
    """Compare the Gr-grouping of D with the socle multiplicities.

    Each class of D's decomposition must be some Q(mu) occurring
    dim Hom(L(mu), D) times, with mu = lambda exactly once.
    """
    dec = qd.decomposition
    D = qd.D
    socm = {mu: hom_space(L, D, LevelSpec.Gr).dim for mu, L in simples(D).items()}
    got = {}
    for c in dec.classes:
        mu = simple_head(dec.summands[c[0]].module)
        if mu is None:
            raise InvariantViolation("a summand of D has a non-simple head")
        got[mu] = got.get(mu, 0) + len(c)
    expect = {mu: d for mu, d in socm.items() if d}
    if got != expect:
        raise InvariantViolation(f"decomposition classes {got} do not match socle multiplicities {expect}")
    return {"classes": {",".join(map(str, mu)): n for mu, n in sorted(got.items())}}


def donkin_check(g: GroupData, lam: Weight, F: FieldSpec | None = None, seed: int = 0,
                 max_dim: int | None = MAX_DIM, peel: bool = False, cache: Cache | None = None) -> DonkinReport:
    lam = _check_lambda(g, lam)
    build_D(g, lam, F, max_dim)  # budget refusals take precedence over cached results
    ckey = None
    if cache is not None:
        Fk = F or FieldSpec(g.p)
        ckey = {"kind": "donkin", "group": g.to_json(), "lambda": list(lam), "field": Fk.to_json(),
                "seed": seed, "peel": peel, "format": REPORT_FORMAT}
        hit = cache.get(ckey)
        if hit is not None:
            return report_from_json(hit)
    qd = identify_Q(g, lam, F, seed, max_dim)
    D, Q = qd.D, qd.Q
    cdim = qd.c_part.dim
    if D.dim != Q.dim + cdim:
        raise InvariantViolation("dim D != dim Q + dim C")
    structure = structure_check(qd, seed)
    if qd.C is not None:
        conditions = check_conditions(qd.context(), seed=seed)
        conds = conditions["conditions"]
        if conds["c4"] is not True:
            raise InvariantViolation("C has a summand isomorphic to Q")
    else:
        conds = {"c4": True, "c5": True}
    results = {}
    hw = None
    for lev in SEARCH_LEVELS:
        ctx = find_stable_decomposition(D, Q, lev, seed)
        results[lev.value] = "found" if ctx else "none"
        if lev == LevelSpec.G and ctx is not None:
            hw = _highest_weight(g, ctx.m_module.weights)
    check_monotone(results)
    rep = DonkinReport(g, lam, (D.dim, Q.dim, cdim), qd.multiplicity, results, conds, seed,
                       qd.decomposition.field, hw, None, structure)
    if peel:
        rep.peel_results = peel_check(g, lam, F, seed, max_dim, donkin=rep)
    if cache is not None:
        cache.put(ckey, rep.to_json())
    return rep


def report_from_json(d: dict) -> DonkinReport:
    hw = d.get("g_summand_highest_weight")
    return DonkinReport(GroupData.from_json(d["group"]), tuple(d["lambda"]),
                        (d["dims"]["D"], d["dims"]["Q"], d["dims"]["C"]), d["multiplicity"],
                        d["level_results"], d["conditions"], d["seed"], FieldSpec.from_json(d["field"]),
                        tuple(hw) if hw else None, d.get("peel_results"), d.get("structure", {}))


# -- peeling -------------------------------------------------------------------


def _kernel_of_maps(D: GMod, mus) -> Subspace:
    """Common kernel of all Gr-maps D -> L(mu), mu in mus."""
    F = D.field
    cols = [np.zeros((D.dim, 0), dtype=np.int64)]
    for mu, L in simples(D).items():
        if mu in mus:
            cols.extend(hom_space(D, L, LevelSpec.Gr).basis)
    from .exactlin import left_kernel

    return left_kernel(F, np.concatenate(cols, axis=1))


def _image_of_maps(D: GMod, mus) -> Subspace:
    F = D.field
    rows = [np.zeros((0, D.dim), dtype=np.int64)]
    for mu, L in simples(D).items():
        if mu in mus:
            rows.extend(hom_space(L, D, LevelSpec.Gr).basis)
    return Subspace(F, D.dim, np.concatenate(rows))


@dataclass
class Peeled:
    module: GMod
    context: SplitContext | None
    m_dim: int
    n_dim: int


def _peel(D: GMod, X: Subspace, Y: Subspace, m_part: Subspace, n_part: Subspace, name: str) -> Peeled:
    for s, nm in ((X, "top"), (Y, "bottom")):
        bad = submodule_violation(D, s, LevelSpec.G)
        if bad is not None:
            raise InvariantViolation(f"{name}: {nm} subspace is not a G-submodule (violates {bad})")
    Z = intersect(X, Y)
    top, Xb = sub_module(D, X, LevelSpec.G, return_basis=True)
    F = D.field

    def coords(s: Subspace) -> Subspace:
        from .exactlin import solve_left

        c = solve_left(F, Xb, s.basis)
        if c is None:
            raise InvariantViolation(f"{name}: subspace leaves the top module")
        return Subspace(F, X.dim, c)

    V, Cb = quotient_module(top, coords(Z), LevelSpec.G, return_basis=True)
    V = V.renamed(name)
    # images of the two parts in V (coordinates on the complement basis Cb)
    from .exactlin import inverse

    T = np.concatenate([coords(Z).basis, Cb]) if Z.dim else Cb
    Tinv = inverse(F, T)
    k = Z.dim

    def image(s: Subspace) -> Subspace:
        c = coords(s).basis
        return Subspace(F, V.dim, F.matmul(c, Tinv)[:, k:])

    mi, ni = image(intersect(m_part, X)), image(intersect(n_part, X))
    ctx = None
    if mi.dim + ni.dim == V.dim and V.dim:
        ctx = make_context(V, mi, ni, LevelSpec.Gr)
    return Peeled(V, ctx, mi.dim, ni.dim)


def build_peeled(g: GroupData, lam: Weight, F: FieldSpec | None = None, seed: int = 0,
                 max_dim: int | None = MAX_DIM) -> tuple[Peeled, Peeled]:
    """V1 = (Q + rad C)/soc C and V2 = (rad Q + C)/soc Q as G-modules.

    Q + rad C is the common kernel of the maps D -> L(mu), mu != lambda, and
    soc C the sum of the images of L(mu) -> D, mu != lambda; both are
    canonical G-submodules.  When C has simple summands the socle is not
    inside the radical part, so the quotient is taken by the intersection.
    """
    lam = _check_lambda(g, lam)
    qd = identify_Q(g, lam, F, seed, max_dim)
    D = qd.D
    mus = [mu for mu in simples(D) if mu != lam]
    X1 = _kernel_of_maps(D, mus)
    Y1 = _image_of_maps(D, mus)
    X2 = _kernel_of_maps(D, [lam])
    Y2 = _image_of_maps(D, [lam])
    V1 = _peel(D, X1, Y1, qd.q_part, qd.c_part, f"V1{lam}")
    V2 = _peel(D, X2, Y2, qd.q_part, qd.c_part, f"V2{lam}")
    return V1, V2


def _stable_side(P: Peeled, seed: int) -> str:
    """'found' if some part of the split is stable under U at level GrU."""
    if P.module.dim == 0:
        return "empty"
    if P.context is None:
        return "no-split"
    if P.m_dim == 0 or P.n_dim == 0:
        return "found"
    ctx = P.context
    for part in (ctx.m_module, ctx.n_module):
        if find_stable_decomposition(P.module, part, LevelSpec.GrU, seed) is not None:
            return "found"
    return "none"


def peel_check(g: GroupData, lam: Weight, F: FieldSpec | None = None, seed: int = 0,
               max_dim: int | None = MAX_DIM, donkin: DonkinReport | None = None) -> dict:
    lam = _check_lambda(g, lam)
    qd = identify_Q(g, lam, F, seed, max_dim)
    V1, V2 = build_peeled(g, lam, F, seed, max_dim)
    out = {}
    dctx = qd.context()
    d_found = "none"
    if qd.C is None:
        d_found = "found"
    else:
        for part in (qd.Q, qd.C):
            if find_stable_decomposition(qd.D, part, LevelSpec.GrU, seed) is not None:
                d_found = "found"
                break
    out["D"] = d_found
    out["V1"] = _stable_side(V1, seed)
    out["V2"] = _stable_side(V2, seed)
    out["dims"] = {"V1": V1.module.dim, "V2": V2.module.dim,
                   "M1": V1.m_dim, "N1": V1.n_dim, "M2": V2.m_dim, "N2": V2.n_dim}
    if donkin is None:
        donkin = donkin_check(g, lam, F, seed, max_dim)
    if any(out[k] == "found" for k in ("D", "V1", "V2")) and donkin.level_results.get("G") != "found":
        raise InvariantViolation("a U-stable peeled summand exists but no G-decomposition was found")
    return out
