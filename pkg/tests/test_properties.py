"""Randomized properties over small modules."""

from collections import Counter

import numpy as np
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from grsummands.exactlin import FieldSpec, Subspace, rank
from grsummands.homlab import decompose, end_space, hom_space, is_isomorphic, socle
from grsummands.modcore import (baby_verma, direct_sum, dual, induced_module, simple_module, tau_twist, tensor,
                                weyl_module)
from grsummands.rootdata import GroupData
from grsummands.summandvar import chart_to_subspace, make_context, subspace_to_chart

SETTINGS = settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])


def _module(kind, g, lam):
    return {"L": lambda: simple_module(g, lam), "V": lambda: weyl_module(g, lam)[0],
            "H": lambda: induced_module(g, lam), "Z": lambda: baby_verma(g, lam)}[kind]()


@st.composite
def a1_module(draw, p=None):
    p = p or draw(st.sampled_from([2, 3]))
    g = GroupData("A1", p)
    kind = draw(st.sampled_from("LVHZ"))
    hi = p - 1 if kind == "Z" else 2 * p
    m = _module(kind, g, (draw(st.integers(0, hi)),))
    if draw(st.booleans()):
        k2 = draw(st.sampled_from("LZ"))
        m = direct_sum(m, _module(k2, g, (draw(st.integers(0, p - 1)),)))
    return m


@st.composite
def a1_pair(draw):
    p = draw(st.sampled_from([2, 3]))
    return draw(a1_module(p)), draw(a1_module(p))


@SETTINGS
@given(a1_pair())
def test_tau_duality_of_hom(pair):
    M, N = pair
    assert hom_space(M, N, "Gr").dim == hom_space(tau_twist(N), tau_twist(M), "Gr").dim


@SETTINGS
@given(a1_module(), a1_module())
def test_tensor_character(a, b):
    if a.group != b.group:
        return
    t = tensor(a, b)
    conv = Counter(tuple(x + y for x, y in zip(u, v)) for u in a.weights for v in b.weights)
    assert Counter(t.weights) == conv


@SETTINGS
@given(st.sampled_from([("A1", 2), ("A1", 3), ("A1", 5), ("A1", 7), ("A2", 2), ("A2", 3)]), st.data())
def test_simples_are_simple(gp, data):
    g = GroupData(*gp)
    lam = tuple(data.draw(st.integers(0, g.p - 1)) for _ in range(g.rank))
    L = simple_module(g, lam)
    assert socle(L).dim == L.dim
    assert end_space(L, "Gr").dim == 1


@SETTINGS
@given(a1_module())
def test_double_dual(m):
    assert is_isomorphic(dual(dual(m)), m, "Gr").verdict is True


@SETTINGS
@given(a1_module())
def test_decomposition_is_direct(m):
    dec = decompose(m, "Gr")
    E = np.concatenate([s.embedding for s in dec.summands])
    assert sum(dec.dims) == m.dim and rank(m.field, E) == m.dim


@SETTINGS
@given(a1_pair(), st.integers(0, 2 ** 32 - 1))
def test_chart_roundtrip(pair, seed):
    M, N = pair
    v = direct_sum(M, N)
    eye = np.eye(v.dim, dtype=np.int64)
    ctx = make_context(v, Subspace(v.field, v.dim, eye[:M.dim]), Subspace(v.field, v.dim, eye[M.dim:]))
    f = np.random.default_rng(seed).integers(0, v.field.q, size=(M.dim, N.dim))
    assert np.array_equal(subspace_to_chart(ctx, chart_to_subspace(ctx, f)), f)


@SETTINGS
@given(st.sampled_from([(2, 2), (3, 2), (2, 3)]), st.integers(0, 2))
def test_extension_field_hom_dims(fe, lam):
    """Hom dimensions do not change under extension of scalars."""
    p, e = fe
    g = GroupData("A1", p)
    lam = (lam % p,)
    a, b = baby_verma(g, lam), induced_module(g, (p,))
    F = FieldSpec(p, e)
    assert hom_space(a, b, "Gr").dim == hom_space(a.with_field(F), b.with_field(F), "Gr").dim
