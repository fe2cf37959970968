import itertools

import numpy as np
import pytest

from grsummands.donkin import identify_Q
from grsummands.exactlin import FieldSpec, Subspace
from grsummands.homlab import hom_space, is_isomorphic, socle
from grsummands.modcore import (LevelSpec, baby_verma, direct_sum, frobenius_twist, induced_module,
                                simple_module, steinberg, sub_module, tensor, trivial_module)
from grsummands.rootdata import GroupData
from grsummands.summandvar import (BudgetExceeded, ChartError, DecompPoint, act_on_chart, check_conditions,
                                   check_split_extension, chart_to_subspace, classes_disjoint,
                                   count_summands_bruteforce, find_stable_decomposition, is_nil_subspace,
                                   is_submodule, is_summand, make_context, root_element, subspace_to_chart,
                                   submodule_violation, torus_element, transport_subspace, validate_point)

A1_2, A1_3 = GroupData("A1", 2), GroupData("A1", 3)


def coord_context(m, n, level="Gr"):
    v = direct_sum(m, n)
    eye = np.eye(v.dim, dtype=np.int64)
    return make_context(v, Subspace(v.field, v.dim, eye[:m.dim]), Subspace(v.field, v.dim, eye[m.dim:]), level)


def all_subspaces(F, n, k):
    """Every k-dim subspace of F^n, by enumerating RREF matrices."""
    q = F.q
    for piv in itertools.combinations(range(n), k):
        free = [(i, j) for i in range(k) for j in range(n) if j > piv[i] and j not in piv]
        for vals in itertools.product(range(q), repeat=len(free)):
            M = np.zeros((k, n), dtype=np.int64)
            for i, c in enumerate(piv):
                M[i, c] = 1
            for (i, j), x in zip(free, vals):
                M[i, j] = x
            yield Subspace(F, n, M, reduced=True)


def grassmann_count(v, m):
    """Summand subspaces of v that are Gr-isomorphic to m, by full Grassmannian enumeration."""
    n = 0
    for s in all_subspaces(v.field, v.dim, m.dim):
        if not is_submodule(v, s, "Gr") or not is_summand(v, s, "Gr")[0]:
            continue
        if is_isomorphic(sub_module(v, s), m, "Gr").verdict is True:
            n += 1
    return n


def test_count_projective_space():
    L1 = simple_module(A1_3, (1,))
    assert count_summands_bruteforce(direct_sum(L1, L1, L1), L1) == 13


def test_count_against_grassmannian():
    L1 = simple_module(A1_2, (1,))
    assert count_summands_bruteforce(direct_sum(L1, L1, L1), L1) == 7 == grassmann_count(direct_sum(L1, L1, L1), L1)
    L0, Z0 = simple_module(A1_3, (0,)), baby_verma(A1_3, (0,))
    v = direct_sum(L0, Z0)
    h = hom_space(L0, Z0, "Gr").dim
    assert h == 1
    assert count_summands_bruteforce(v, L0) == 3 ** h == grassmann_count(v, L0)


def test_count_self():
    Q = identify_Q(A1_3, (1,)).Q
    assert count_summands_bruteforce(Q, Q) == 1


def test_chart_basics():
    L0, Z0 = simple_module(A1_3, (0,)), baby_verma(A1_3, (0,))
    ctx = coord_context(L0, Z0)
    f0 = np.zeros((1, 3), dtype=np.int64)
    assert chart_to_subspace(ctx, f0) == ctx.m_part
    assert not subspace_to_chart(ctx, ctx.m_part).any()
    with pytest.raises(ChartError):
        subspace_to_chart(ctx, Subspace(ctx.field, 4, [[0, 1, 0, 0]]))
    # a non-intertwining graph is not a submodule
    bad = np.zeros((1, 3), dtype=np.int64)
    bad[0, [i for i, w in enumerate(ctx.n_module.weights) if w != (0,)][0]] = 1
    assert submodule_violation(ctx.ambient, chart_to_subspace(ctx, bad), "Gr") is not None
    with pytest.raises(ValueError):
        validate_point(ctx, DecompPoint(bad, np.zeros((3, 1), dtype=np.int64)))


def test_chart_roundtrip(rng):
    St = steinberg(A1_3)
    ctx = coord_context(tensor(St, St), simple_module(A1_3, (1,)))
    k, l = ctx.m_basis.shape[0], ctx.n_basis.shape[0]
    for _ in range(200):
        f = rng.integers(0, 3, size=(k, l))
        assert np.array_equal(subspace_to_chart(ctx, chart_to_subspace(ctx, f)), f)


def test_act_on_chart_identity_and_torus():
    L2 = simple_module(A1_3, (2,))
    qd = identify_Q(A1_3, (0,))
    ctx = qd.context()
    pt = DecompPoint(np.zeros((qd.Q.dim, qd.C.dim), dtype=np.int64), np.zeros((qd.C.dim, qd.Q.dim), dtype=np.int64))
    same = act_on_chart(ctx, np.eye(ctx.ambient.dim, dtype=np.int64), pt)
    assert not same.f.any() and not same.g.any()
    t = act_on_chart(ctx, torus_element(ctx.ambient, (2,)), pt)
    assert not t.f.any() and not t.g.any()
    assert ctx.ambient.dim == tensor(L2, L2).dim


def test_act_two_routes(rng):
    qd = identify_Q(A1_3, (0,))
    ctx = qd.context()
    V = ctx.ambient
    H = hom_space(ctx.m_module, ctx.n_module, "Gr")
    moved = 0
    for s in range(1, 3):
        g = root_element(V, "e", "alpha1", s)
        for _ in range(10):
            f = H.random_element(rng) if H.dim else rng.integers(0, 3, size=(qd.Q.dim, qd.C.dim))
            pt = DecompPoint(f, np.zeros((qd.C.dim, qd.Q.dim), dtype=np.int64))
            try:
                new = act_on_chart(ctx, g, pt)
            except ChartError:
                continue
            route2 = subspace_to_chart(ctx, transport_subspace(ctx, g, chart_to_subspace(ctx, f)))
            assert np.array_equal(new.f, route2)
            moved += bool((new.f != f).any())
    assert moved > 0


def test_socle_not_summand():
    Z = baby_verma(A1_3, (0,))
    s = socle(Z)
    assert is_submodule(Z, s, "Gr")
    assert is_summand(Z, s, "Gr") == (False, None)


def test_conditions():
    L1 = simple_module(A1_3, (1,))
    r = check_conditions(coord_context(L1, L1))
    assert r["conditions"] == {"c4": False, "c5": False}
    r = check_conditions(identify_Q(A1_3, (0,)).context())
    assert r["conditions"] == {"c4": True, "c5": True}
    assert classes_disjoint(simple_module(A1_3, (0,)), baby_verma(A1_3, (0,)))


def test_is_nil_subspace():
    F = FieldSpec(3)
    U = [np.triu(np.random.default_rng(i).integers(0, 3, (4, 4)), 1) for i in range(3)]
    assert is_nil_subspace(U, F)
    assert not is_nil_subspace(U + [np.eye(4, dtype=np.int64)], F)
    assert is_nil_subspace([], F)
    with pytest.raises(BudgetExceeded):
        is_nil_subspace(U * 4, F, budget=100)


def test_find_stable_l2_l2():
    L2 = simple_module(A1_3, (2,))
    ctx = find_stable_decomposition(tensor(L2, L2), identify_Q(A1_3, (0,)).Q, "G")
    assert ctx is not None and ctx.m_module.dim == 6


def test_find_stable_twisted_simple():
    L1 = simple_module(A1_2, (1,))
    v = tensor(L1, frobenius_twist(L1))
    assert find_stable_decomposition(v, L1, "G") is None
    assert find_stable_decomposition(v, L1, "GrT") is not None


def test_split_extension():
    g = A1_2
    H = induced_module(g, (2,))
    w = Subspace(H.field, 3, [[1 if wt != (0,) else 0 for wt in H.weights][i] * np.eye(3, dtype=np.int64)[i]
                              for i in range(3) if H.weights[i] != (0,)])
    assert w == socle(H)
    assert check_split_extension(H, w, "G") is False
    assert check_split_extension(H, w, "T") is True
    assert check_split_extension(H, w, "trivial") is True
    L = simple_module(GroupData("A1", 3), (2,))
    v = direct_sum(L, trivial_module(L.group))
    w = Subspace(v.field, 4, np.eye(4, dtype=np.int64)[:3])
    assert check_split_extension(v, w, "G") is True
