import galois
import numpy as np
import pytest

from grsummands.donkin import identify_Q
from grsummands.exactlin import FieldSpec, rank
from grsummands.homlab import (decompose, end_space, head_multiplicities, hom_space, is_homomorphism,
                               is_indecomposable, is_isomorphic, is_projective, multiplicity, radical,
                               simple_head, socle, socle_multiplicities, twist_by_weyl)
from grsummands.modcore import (LevelSpec, baby_verma, direct_sum, induced_module, simple_module, steinberg,
                                tensor, weyl_module)
from grsummands.rootdata import GroupData, lambda_zero, restricted_weights

A1_3 = GroupData("A1", 3)


def dense_hom_dim(a, b, level):
    """dim Hom by a dense kron solve: X with A_x X = X B_x for all generators, weights respected."""
    F = a.field
    GF = galois.GF(F.q)
    da, db = a.dim, b.dim
    ka = a.weight_classes(level)
    wa, wb = a.weight_array(), b.weight_array()
    rows = []
    labels = sorted({l for l, _ in a.level_generators(level)} | {l for l, _ in b.level_generators(level)})
    for lab in labels:
        kind, root, n = lab.split(":")
        A, B = a.gen(kind, root, int(n)), b.gen(kind, root, int(n))
        # vec(A X - X B), row-major X
        Mx = np.kron(A, np.eye(db, dtype=np.int64)) - np.kron(np.eye(da, dtype=np.int64), B.T)
        rows.append(Mx % F.p)
    lev = LevelSpec.parse(level)
    for i in range(da):
        for j in range(db):
            if lev.torus == "full":
                bad = not np.array_equal(wa[i], wb[j])
            elif lev.torus == "mod":
                bad = not np.array_equal(wa[i] % a.group.pr, wb[j] % a.group.pr)
            else:
                bad = False
            if bad:
                r = np.zeros(da * db, dtype=np.int64)
                r[i * db + j] = 1
                rows.append(r[None, :])
    if not rows:
        return da * db
    M = GF(np.concatenate(rows) % F.p)
    return da * db - int(np.linalg.matrix_rank(M))


def test_schur_and_multiples():
    L1, L2 = simple_module(A1_3, (1,)), simple_module(A1_3, (2,))
    assert hom_space(L1, L1, "Gr").dim == 1
    assert hom_space(L1, L2, "Gr").dim == 0
    assert hom_space(L1, direct_sum(L1, L1, L1), "Gr").dim == 3


@pytest.mark.parametrize("level", ["Gr", "GrT", "G", "GrB"])
def test_hom_against_dense(level):
    g = A1_3
    mods = [simple_module(g, (1,)), weyl_module(g, (2,))[0], induced_module(g, (3,)),
            tensor(simple_module(g, (1,)), simple_module(g, (1,)))]
    for a in mods:
        for b in mods:
            assert hom_space(a, b, level).dim == dense_hom_dim(a, b, level), (a, b)


def test_hom_gr_baby_verma_dense():
    g = A1_3
    mods = [baby_verma(g, (0,)), baby_verma(g, (1,)), simple_module(g, (0,)), simple_module(g, (4,))]
    for a in mods:
        for b in mods:
            assert hom_space(a, b, "Gr").dim == dense_hom_dim(a, b, "Gr")


def test_hom_basis_elements_are_homomorphisms():
    V = weyl_module(A1_3, (4,))[0]
    H = hom_space(V, V, "G")
    for X in H.basis:
        assert is_homomorphism(V, V, X, "G") is None
    bad = np.zeros((V.dim, V.dim), dtype=np.int64)
    bad[0, 1] = 1
    assert is_homomorphism(V, V, bad, "G") is not None


def test_decompose_multiple_copies():
    L1 = simple_module(A1_3, (1,))
    dec = decompose(direct_sum(L1, L1), "Gr")
    assert dec.dims == [2, 2] and dec.multiplicities() == [2]


def test_decompose_steinberg_square():
    St = steinberg(A1_3)
    dec = decompose(tensor(St, St), "G")
    assert sum(dec.dims) == 9


def test_decompose_l2_l2():
    L2 = simple_module(A1_3, (2,))
    dec = decompose(tensor(L2, L2), "Gr")
    assert sorted(dec.dims) == [3, 6]
    heads = {s.module.dim: simple_head(s.module) for s in dec.summands}
    assert heads == {6: (0,), 3: (2,)}
    six = next(s.module for s in dec.summands if s.module.dim == 6)
    assert is_projective(six, {(0,): 6, (1,): 6, (2,): 3})
    assert is_indecomposable(six)
    js = dec.to_json()
    assert js["level"] == "Gr" and sorted(c["dim"] for c in js["classes"]) == [3, 6]


def test_decompose_deterministic():
    D = identify_Q(GroupData("A1", 5), (1,)).D
    a, b = decompose(D, "Gr", seed=7), decompose(D, "Gr", seed=7)
    assert a.to_json() == b.to_json()


def test_summand_embeddings_reconstruct():
    D = identify_Q(GroupData("A1", 5), (0,)).D
    dec = decompose(D, "Gr")
    E = np.concatenate([s.embedding for s in dec.summands])
    assert rank(D.field, E) == D.dim


def test_iso_witness():
    g = GroupData("A1", 2)
    Z, St = baby_verma(g, (1,)), steinberg(g)
    res = is_isomorphic(Z, St, "Gr")
    assert res.verdict is True
    X = res.witness
    assert rank(Z.field, X) == Z.dim and is_homomorphism(Z, St, X, "Gr") is None
    assert is_isomorphic(simple_module(g, (0,)), simple_module(g, (1,)), "Gr").verdict is False


def test_socle_baby_verma():
    Z = baby_verma(A1_3, (0,))
    assert socle(Z).dim == 1
    nz = lambda d: {k: v for k, v in d.items() if v}  # noqa: E731
    assert nz(socle_multiplicities(Z)) == {(0,): 1}
    # head L(2(p-1) + w0 0) = L(4), which is L(1) over G_1
    assert nz(head_multiplicities(Z)) == {(1,): 1}
    assert radical(Z) == socle(Z)  # uniserial of length 2


def test_socle_simple_head_of_q():
    for lam in restricted_weights(A1_3):
        Q = identify_Q(A1_3, lam).Q
        assert simple_head(Q) == lam
        assert {k: v for k, v in socle_multiplicities(Q).items() if v} == {lam: 1}


@pytest.mark.parametrize("p", [2, 3])
def test_twist_by_weyl(p):
    g = GroupData("A1", p)
    St = steinberg(g)
    assert is_isomorphic(twist_by_weyl(St), St, "Gr").verdict is True
    for lam in restricted_weights(g):
        L = simple_module(g, lam)
        assert is_isomorphic(twist_by_weyl(L), L, "Gr").verdict is True
    assert is_isomorphic(twist_by_weyl(baby_verma(g, (0,))), baby_verma(g, (0,)), "Gr").verdict is False


def test_twist_by_weyl_a2():
    g = GroupData("A2", 2)
    L = simple_module(g, (1, 0))
    for i in (0, 1):
        T = twist_by_weyl(L, i)
        T.validate()
        assert is_isomorphic(T, L, "Gr").verdict is True


@pytest.mark.parametrize("p", [2, 3, 5])
def test_multiplicity_one(p):
    g = GroupData("A1", p)
    for lam in restricted_weights(g):
        D = tensor(steinberg(g), simple_module(g, lambda_zero(g, lam)))
        assert multiplicity(D, identify_Q(g, lam).Q, "Gr") == 1


def test_end_space_extension_field():
    F = FieldSpec(2, 2)
    L = simple_module(GroupData("A1", 2), (1,), F)
    E = end_space(direct_sum(L, L))
    assert E.dim == 4 and E.field == F
    assert sum(1 for _ in E.points(projective=True)) == (4 ** 4 - 1) // 3
