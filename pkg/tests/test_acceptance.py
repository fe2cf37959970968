"""The ten acceptance criteria, each at its stated tolerance.

Every test records one PASS/FAIL line (printed in the terminal summary) and
then asserts.  Timed criteria start from cold in-process memo caches.
"""

import itertools
import json
import time

import numpy as np
import pytest

from grsummands.cli import JobSpec, run
from grsummands.donkin import (build_D, canonical_json, clear_memos, donkin_check, identify_Q, q_dimensions)
from grsummands.exactlin import FieldSpec, Subspace, inverse, rank
from grsummands.homlab import hom_space, is_isomorphic, multiplicity, twist_by_weyl
from grsummands.modcore import (baby_verma, direct_sum, induced_module, simple_module, steinberg, tau_twist,
                                tensor, weyl_module)
from grsummands.rootdata import GroupData, lambda_zero, restricted_weights
from grsummands.summandvar import (ChartError, DecompPoint, act_on_chart, chart_to_subspace, classes_disjoint,
                                   count_summands_bruteforce, cross_maps, find_stable_decomposition,
                                   is_nil_subspace, make_context, root_element, subspace_to_chart, torus_element,
                                   validate_point)

A1_PRIMES = (2, 3, 5)
SEARCH = ("GrT", "GrU", "GrB", "G")
# level verdicts of every stability search run here, checked together by criterion 6
LEVEL_RUNS: list[tuple[str, dict]] = []


def coord_context(M, N, check=True):
    v = direct_sum(M, N)
    eye = np.eye(v.dim, dtype=np.int64)
    return make_context(v, Subspace(v.field, v.dim, eye[:M.dim]), Subspace(v.field, v.dim, eye[M.dim:]),
                        check=check)


def small_pool(p, F, with_q=True):
    g = GroupData("A1", p)
    pool = [simple_module(g, (l,), F) for l in range(p)] + [baby_verma(g, (l,), F) for l in range(p)]
    if with_q:
        pool += [identify_Q(g, (l,)).Q.with_field(F) for l in range(p)]
    return pool


FIELDS = [(2, 1), (2, 2), (2, 3), (3, 1), (3, 2), (5, 1), (7, 1)]


def test_criterion_01_multiplicity_one(acceptance):
    clear_memos()
    t0 = time.perf_counter()
    bad = []
    n = 0
    for p in A1_PRIMES:
        g = GroupData("A1", p)
        for lam in restricted_weights(g):
            D = tensor(steinberg(g), simple_module(g, lambda_zero(g, lam)))
            m = multiplicity(D, identify_Q(g, lam).Q, "Gr")
            n += 1
            if m != 1:
                bad.append((p, lam, m))
    dt = time.perf_counter() - t0
    ok = not bad and dt < 10
    acceptance(1, "multiplicity one", ok, f"{n} weights, bad={bad}, {dt:.2f}s (< 10s)")
    assert not bad
    assert dt < 10


def test_criterion_02_q_dimension_oracle(acceptance):
    clear_memos()
    t0 = time.perf_counter()
    g = GroupData("A1", 3)
    qd = q_dimensions(g)
    dims = [qd[(0,)], qd[(1,)], qd[(2,)]]
    total = sum(simple_module(g, lam).dim * d for lam, d in qd.items())
    dt = time.perf_counter() - t0
    dims_ok = dims == [6, 6, 3]
    ok = dims_ok and total == 81 and dt < 5
    acceptance(2, "Q-dimension oracle", ok,
               f"dims={dims} (== [6, 6, 3]: {dims_ok}), sum dim L * dim Q = {total} (required 81), {dt:.2f}s")
    assert dims_ok
    assert dt < 5
    # as stated; 1*6 + 2*6 + 3*3 = 27 with the dimensions above (see the notes)
    assert total == 81


def test_criterion_03_donkin_positive(acceptance):
    clear_memos()
    t0 = time.perf_counter()
    missing = []
    n = 0
    for p in A1_PRIMES:
        g = GroupData("A1", p)
        for lam in restricted_weights(g):
            rep = donkin_check(g, lam)
            LEVEL_RUNS.append((f"donkin A1 p={p} {lam}", rep.level_results))
            n += 1
            if rep.level_results["G"] != "found":
                missing.append((p, lam))
    dt = time.perf_counter() - t0
    ok = not missing and dt < 30
    acceptance(3, "Donkin positive cases", ok, f"{n - len(missing)}/{n} found at G, {dt:.2f}s (< 30s)")
    assert not missing
    assert dt < 30


def _random_sum(rng, pool):
    k = int(rng.integers(1, 3))
    parts = [pool[int(i)] for i in rng.integers(0, len(pool), size=k)]
    return parts[0] if k == 1 else direct_sum(*parts)


def test_criterion_04_condition_equivalence(acceptance):
    rng = np.random.default_rng(2024)
    pools = {fe: small_pool(fe[0], FieldSpec(*fe), with_q=fe[0] <= 5) for fe in FIELDS}
    n = disagree = c4_false = tries = 0
    qs = set()
    while n < 150 and tries < 5000:
        tries += 1
        fe = FIELDS[int(rng.integers(0, len(FIELDS)))]
        pool = pools[fe]
        M, N = _random_sum(rng, pool), _random_sum(rng, pool)
        if hom_space(M, N, "Gr").dim + hom_space(N, M, "Gr").dim > 4:
            continue
        ctx = coord_context(M, N)
        F = ctx.field
        c4 = classes_disjoint(M, N)
        X = cross_maps(ctx)
        c5 = is_nil_subspace(np.array(X) if X else [], F, budget=F.q ** 4)
        n += 1
        qs.add(F.q)
        c4_false += not c4
        disagree += c4 != c5
    ok = n >= 100 and disagree == 0
    acceptance(4, "condition (5) vs disjointness (4)", ok,
               f"{n} instances over q in {sorted(qs)}, {c4_false} with shared classes, {disagree} disagreements")
    assert n >= 100
    assert disagree == 0


def _n_chart(ctx, w):
    """Route-2 N-side chart: w = rows of [g, 1] in the adapted basis."""
    F = ctx.field
    k = ctx.m_basis.shape[0]
    C = F.matmul(w.basis, inverse(F, ctx.change))
    X, Y = C[:, :k], C[:, k:]
    if rank(F, Y) < Y.shape[0]:
        raise ChartError("not in chart")
    return F.matmul(inverse(F, Y), X)


def test_criterion_05_charts(acceptance):
    rng = np.random.default_rng(7)
    # (a) roundtrips
    round_ok = rounds = 0
    for fe in FIELDS:
        pool = small_pool(fe[0], FieldSpec(*fe), with_q=False)
        for _ in range(150):
            M, N = _random_sum(rng, pool), _random_sum(rng, pool)
            ctx = coord_context(M, N, check=False)
            f = rng.integers(0, ctx.field.q, size=(M.dim, N.dim))
            rounds += 1
            round_ok += bool(np.array_equal(subspace_to_chart(ctx, chart_to_subspace(ctx, f)), f))
    # (b) two-route action agreement on decomposition points
    contexts = []
    for p in A1_PRIMES:
        g = GroupData("A1", p)
        for lam in restricted_weights(g):
            qd = identify_Q(g, lam)
            if qd.C is not None:
                contexts.append(qd.context())
    g3 = GroupData("A1", 3)
    contexts.append(coord_context(simple_module(g3, (1,)), baby_verma(g3, (1,))))
    contexts.append(coord_context(simple_module(g3, (0,)), baby_verma(g3, (0,))))
    pairs = agree = in_chart = 0
    for ctx in contexts:
        V, F = ctx.ambient, ctx.field
        Hmn = hom_space(ctx.m_module, ctx.n_module, "Gr")
        Hnm = hom_space(ctx.n_module, ctx.m_module, "Gr")
        elems = []
        roots = V.group.roots
        for kind in ("e", "f"):
            for t in range(1, F.q):
                elems.append(root_element(V, kind, roots[0], t))
        elems.append(torus_element(V, (int(rng.integers(1, F.q)),)))
        elems.append(F.matmul(root_element(V, "e", roots[0], 1), root_element(V, "f", roots[0], 1)))
        for gmat in elems:
            for _ in range(3):
                pt = DecompPoint(Hmn.random_element(rng) if Hmn.dim else np.zeros((ctx.m_module.dim, ctx.n_module.dim), np.int64),
                                 Hnm.random_element(rng) if Hnm.dim else np.zeros((ctx.n_module.dim, ctx.m_module.dim), np.int64))
                validate_point(ctx, pt)
                pairs += 1
                try:
                    new = act_on_chart(ctx, gmat, pt)
                except ChartError:
                    new = None
                W1 = chart_to_subspace(ctx, pt.f).image(gmat)
                W2 = Subspace(F, V.dim, F.add(ctx.n_basis, F.matmul(pt.g, ctx.m_basis))).image(gmat)
                try:
                    f2, g2 = subspace_to_chart(ctx, W1), _n_chart(ctx, W2)
                except ChartError:
                    f2 = g2 = None
                if new is None or f2 is None:
                    agree += new is None and f2 is None
                else:
                    in_chart += 1
                    agree += bool(np.array_equal(new.f, f2) and np.array_equal(new.g, g2))
    # (c) projective space count
    L1 = simple_module(g3, (1,))
    c13 = count_summands_bruteforce(direct_sum(L1, L1, L1), L1)
    # (d) count = q^dim Hom(M, N) on disjoint classes
    cands = []
    for fe in [(2, 1), (2, 2), (3, 1), (3, 2), (5, 1)]:
        F = FieldSpec(*fe)
        pool = small_pool(fe[0], F)
        for M, N in itertools.permutations(pool, 2):
            h = hom_space(M, N, "Gr").dim
            if h <= 2 and classes_disjoint(M, N):
                cands.append((h == 0, rng.random(), F, M, N, h))
    cands.sort(key=lambda c: c[:2])  # nonzero hom first, otherwise seeded order
    inst = inst_ok = nonzero = 0
    for _, _, F, M, N, h in cands[:40]:
        cnt = count_summands_bruteforce(direct_sum(M, N), M)
        inst += 1
        nonzero += h > 0
        inst_ok += cnt == F.q ** h
    ok = (rounds >= 1000 and round_ok == rounds and in_chart >= 100 and agree == pairs and c13 == 13
          and inst >= 20 and inst_ok == inst)
    acceptance(5, "chart/variety suite", ok,
               f"roundtrip {round_ok}/{rounds}; actions {agree}/{pairs} agree ({in_chart} in chart); "
               f"P^2(F_3) count {c13}; q^hom {inst_ok}/{inst} ({nonzero} with hom != 0)")
    assert rounds >= 1000 and round_ok == rounds
    assert in_chart >= 100 and agree == pairs
    assert c13 == 13
    assert inst >= 20 and inst_ok == inst


def test_criterion_07_twist_dichotomy(acceptance):
    clear_memos()
    t0 = time.perf_counter()
    fails = []
    for p in A1_PRIMES:
        g = GroupData("A1", p)
        for lam in restricted_weights(g):
            for nm, m in (("L", simple_module(g, lam)), ("Q", identify_Q(g, lam).Q)):
                if is_isomorphic(twist_by_weyl(m), m, "Gr").verdict is not True:
                    fails.append(f"{nm}{lam} p={p}")
    g = GroupData("A1", 3)
    z = {lam: is_isomorphic(twist_by_weyl(baby_verma(g, (lam,))), baby_verma(g, (lam,)), "Gr").verdict
         for lam in range(3)}
    if z != {0: False, 1: False, 2: True}:
        fails.append(f"baby Verma verdicts {z}")
    dt = time.perf_counter() - t0
    ok = not fails and dt < 5
    acceptance(7, "twist-stability dichotomy", ok, f"Z(0), Z(1), Z(2): {[z[i] for i in range(3)]}; "
               f"fails={fails}; {dt:.2f}s (< 5s)")
    assert not fails
    assert dt < 5


def test_criterion_08_split_extension(acceptance):
    from grsummands.homlab import socle
    from grsummands.summandvar import check_split_extension

    H = induced_module(GroupData("A1", 2), (2,))
    w = socle(H)
    at_g, at_t = check_split_extension(H, w, "G"), check_split_extension(H, w, "T")
    ok = w.dim == 2 and at_g is False and at_t is True
    acceptance(8, "extension lemma", ok, f"H(2), p=2, socle dim {w.dim}: G -> {at_g}, T -> {at_t}")
    assert ok


def test_criterion_09_tau_duality(acceptance):
    rng = np.random.default_rng(99)
    pool = []
    for p in (2, 3):
        g = GroupData("A1", p)
        mods = [simple_module(g, (l,)) for l in range(2 * p)] + [baby_verma(g, (l,)) for l in range(p)]
        mods += [weyl_module(g, (l,))[0] for l in range(1, 2 * p)] + [induced_module(g, (l,)) for l in range(1, 2 * p)]
        mods += [identify_Q(g, (l,)).Q for l in range(p)]
        mods += [tensor(mods[1], mods[p]), direct_sum(mods[0], mods[2 * p])]
        pool.append(mods)
    pairs = bad = nonzero = 0
    for _ in range(150):
        mods = pool[int(rng.integers(0, 2))]
        M, N = mods[int(rng.integers(0, len(mods)))], mods[int(rng.integers(0, len(mods)))]
        a, b = hom_space(M, N, "Gr").dim, hom_space(tau_twist(N), tau_twist(M), "Gr").dim
        pairs += 1
        nonzero += a > 0
        bad += a != b
    dfail = []
    for p in A1_PRIMES:
        g = GroupData("A1", p)
        for lam in restricted_weights(g):
            D = build_D(g, lam)
            if is_isomorphic(tau_twist(D), D, "G").verdict is not True:
                dfail.append((p, lam))
    ok = pairs >= 100 and bad == 0 and not dfail
    acceptance(9, "tau-duality", ok, f"{pairs - bad}/{pairs} hom pairs ({nonzero} nonzero); "
               f"tau(D) ~ D at G fails: {dfail}")
    assert pairs >= 100 and bad == 0
    assert not dfail


def test_criterion_10_frontier(acceptance):
    clear_memos()
    t0 = time.perf_counter()
    code, rep = run(JobSpec("donkin", {"type": "A2", "p": 2, "r": 1}, {"lambda": [0, 0], "peel": True},
                            cache=False))
    dt = time.perf_counter() - t0
    res = rep.get("result") or {}
    well = (code == 0 and rep["status"] == "completed" and res.get("dims", {}).get("D") == 64
            and set(res.get("level_results", {})) == set(SEARCH)
            and all(v in ("found", "none") for v in res["level_results"].values())
            and {"D", "V1", "V2"} <= set(res.get("peel_results") or {})
            and json.loads(canonical_json(rep)) == rep)
    if res:
        LEVEL_RUNS.append(("donkin A2 p=2 (0,0)", res["level_results"]))
    ok = well and dt < 600
    acceptance(10, "A2 frontier run", ok,
               f"dim D={res.get('dims', {}).get('D')}, levels={res.get('level_results')}, "
               f"peel={ {k: (res.get('peel_results') or {}).get(k) for k in ('D', 'V1', 'V2')} }, {dt:.1f}s (< 600s)")
    assert well
    assert dt < 600


def test_criterion_06_monotonicity(acceptance):
    """Runs last: it also audits the level searches of criteria 3 and 10."""
    # extra searches over small modules, at every level
    for p in (2, 3):
        g = GroupData("A1", p)
        mods = [(f"L{l}^2", direct_sum(simple_module(g, (l,)), simple_module(g, (l,))), simple_module(g, (l,)))
                for l in range(p)]
        mods += [(f"D{lam}", build_D(g, lam), identify_Q(g, lam).Q) for lam in restricted_weights(g)]
        L1 = simple_module(g, (1,))
        from grsummands.modcore import frobenius_twist

        mods.append(("L1 (x) L1^(1)", tensor(L1, frobenius_twist(L1)), L1))
        for nm, v, m in mods:
            res = {lv: "found" if find_stable_decomposition(v, m, lv) is not None else "none" for lv in SEARCH}
            LEVEL_RUNS.append((f"A1 p={p} {nm}", res))
    for r2 in ((2, (0,)), (2, (1,)), (3, (4,))):
        rep = donkin_check(GroupData("A1", r2[0], 2), r2[1])
        LEVEL_RUNS.append((f"donkin A1 p={r2[0]} r=2 {r2[1]}", rep.level_results))
    # CLI batch over the A1 grid: no job may exit with the invariant code
    codes = []
    for p in A1_PRIMES:
        for lam in restricted_weights(GroupData("A1", p)):
            code, rep = run(JobSpec("donkin", {"type": "A1", "p": p, "r": 1}, {"lambda": list(lam)}, cache=False))
            codes.append(code)
            if rep["result"]:
                LEVEL_RUNS.append((f"cli A1 p={p} {lam}", rep["result"]["level_results"]))
    violations = [nm for nm, res in LEVEL_RUNS
                  if (res.get("GrB") == "found" or res.get("GrU") == "found") and res.get("G") != "found"]
    exit4 = codes.count(4)
    ok = not violations and exit4 == 0 and len(LEVEL_RUNS) > 0
    acceptance(6, "monotonicity", ok, f"{len(LEVEL_RUNS)} level searches audited, {len(violations)} violations, "
               f"{exit4} exit-4 jobs")
    assert not violations
    assert exit4 == 0
