import json
import math
import random

import pytest

from opkz import barratt_eccles as be
from opkz import complete_graph as cg
from opkz.exact_linalg import homology


def rand_ws(rng, r, n):
    mu = tuple(rng.randrange(n) for _ in cg.pairs(r))
    sigma = tuple(rng.sample(range(1, r + 1), r))
    return cg.WeightSystem(r, mu, sigma)


def rand_simplex(rng, r, d):
    perms = be.all_perms(r)
    s = [rng.choice(perms)]
    while len(s) < d + 1:
        w = rng.choice(perms)
        if w != s[-1]:
            s.append(w)
    return tuple(s)


def test_leq():
    rng = random.Random(0)
    for _ in range(100):
        a = rand_ws(rng, 3, 3)
        assert cg.leq(a, a)
        bigger = cg.WeightSystem(3, tuple(m + 1 for m in a.mu),
                                 tuple(rng.sample(range(1, 4), 3)))
        assert cg.leq(a, bigger)
    # equal weights, orientations differing on some pair: not comparable
    a = cg.WeightSystem(2, (1,), (1, 2))
    b = cg.WeightSystem(2, (1,), (2, 1))
    assert not cg.leq(a, b) and not cg.leq(b, a)


def test_figure_composite():
    alpha = cg.WeightSystem(3, (1, 2, 0), (1, 3, 2))
    beta = cg.WeightSystem(2, (0,), (2, 1))
    comp = cg.cg_compose(alpha, 2, beta)
    assert comp.weight(1, 2) == 1 and comp.weight(1, 3) == 1
    assert comp.weight(1, 4) == 2
    assert comp.weight(2, 3) == 0
    assert comp.weight(2, 4) == 0 and comp.weight(3, 4) == 0
    assert comp.sigma == (1, 4, 3, 2)


def test_unit_composition():
    rng = random.Random(1)
    unit = cg.unit_ws()
    for _ in range(50):
        a = rand_ws(rng, rng.randint(2, 4), 3)
        e = rng.randint(1, a.r)
        assert cg.cg_compose(a, e, unit) == a
        assert cg.cg_compose(unit, 1, a) == a


def test_composition_monotonicity():
    rng = random.Random(2)
    found = 0
    for _ in range(600):
        s, t = rng.randint(2, 3), rng.randint(2, 3)
        a, c = rand_ws(rng, s, 3), rand_ws(rng, s, 3)
        b, d = rand_ws(rng, t, 3), rand_ws(rng, t, 3)
        e = rng.randint(1, s)
        if cg.leq(a, c) and cg.leq(b, d):
            found += 1
            assert cg.leq(cg.cg_compose(a, e, b), cg.cg_compose(c, e, d))
    assert found > 10


def test_action():
    rng = random.Random(3)
    for _ in range(200):
        r = rng.randint(2, 4)
        k = rand_ws(rng, r, 3)
        ident = tuple(range(1, r + 1))
        assert cg.cg_act(ident, k) == k
        w = tuple(rng.sample(range(1, r + 1), r))
        assert cg.cg_act(w, k).degree() == k.degree()
        k2 = rand_ws(rng, r, 3)
        if cg.leq(k, k2):
            assert cg.leq(cg.cg_act(w, k), cg.cg_act(w, k2))
        v = tuple(rng.sample(range(1, r + 1), r))
        wv = tuple(w[v[i] - 1] for i in range(r))
        assert cg.cg_act(w, cg.cg_act(v, k)) == cg.cg_act(wv, k)


def test_complement():
    rng = random.Random(4)
    for _ in range(200):
        r, n = rng.randint(2, 4), rng.randint(1, 3)
        a, b = rand_ws(rng, r, n), rand_ws(rng, r, n)
        ca = cg.complement(a, n)
        assert ca.is_valid  # members of K_n have complements in K_n
        assert cg.complement(ca, n) == a
        assert cg.leq(a, b) == cg.leq(cg.complement(b, n), ca)
    # negative weights are representable and flagged
    deep = cg.complement(cg.WeightSystem(2, (3,), (1, 2)), 2)
    assert not deep.is_valid


def test_enumerate_kn_counts():
    assert len(cg.enumerate_kn(1, 3)) == 6
    assert len(cg.enumerate_kn(2, 3)) == 48
    for n, r in [(1, 2), (2, 2), (3, 2), (2, 3), (1, 4), (2, 4)]:
        expect = n ** (r * (r - 1) // 2) * math.factorial(r)
        assert len(cg.enumerate_kn(n, r)) == expect
    with pytest.raises(ValueError):
        cg.enumerate_kn(0, 2)


def test_kappa_functoriality():
    rng = random.Random(5)
    for _ in range(400):
        r = rng.randint(2, 4)
        s = rand_simplex(rng, r, rng.randint(0, 3))
        ks = cg.kappa(s)
        for face, _sg in be.face_boundary_terms(s):
            assert cg.leq(cg.kappa(face), ks)
        w = tuple(rng.sample(range(1, r + 1), r))
        sw = tuple(be.perm_mul(w, p) for p in s)
        assert cg.kappa(sw) == cg.cg_act(w, ks)
    for _ in range(200):
        su, sv = rng.randint(2, 3), 2
        u = rand_simplex(rng, su, rng.randint(0, 2))
        v = rand_simplex(rng, sv, rng.randint(0, 2))
        e = rng.randint(1, su)
        target = cg.cg_compose(cg.kappa(u), e, cg.kappa(v))
        for w, _sg in be.compose_simplices(u, e, v):
            assert cg.kappa(w) == target


def test_zero_cell():
    k0 = cg.WeightSystem(3, (0, 0, 0), (1, 2, 3))
    assert cg.e_cell_basis(k0, 1) == {0: [((1, 2, 3),)]}


def test_union_cells():
    for (n, r) in [(1, 3), (2, 3)]:
        union = cg.union_cells(n, r)
        full = be.enumerate_en(n, r)
        assert {d: set(v) for d, v in union.items()} == \
            {d: set(v) for d, v in full.items()}


def test_cell_closure_and_acyclicity():
    rng = random.Random(6)
    for k in cg.enumerate_kn(2, 2) + cg.enumerate_kn(2, 3):
        cell = cg.build_cell("E", 2, k)
        rep = homology(cell.complex, "Z")
        assert rep.groups == {0: (1, [])}, (k, rep.groups)
    for k in rng.sample(cg.enumerate_kn(3, 3), 10):
        cell = cg.build_cell("E", 3, k)
        assert homology(cell.complex, "Z").groups == {0: (1, [])}


def test_d_cell_monotonicity_and_closure():
    rng = random.Random(7)
    ks = cg.enumerate_kn(2, 3)
    for _ in range(40):
        a, b = rng.choice(ks), rng.choice(ks)
        if cg.leq(a, b):
            da, db = cg.d_cell_basis(2, a), cg.d_cell_basis(2, b)
            for d, v in da.items():
                assert set(v) <= set(db.get(d, ()))
    # build_cell validates closure under the dual differential
    cg.build_cell("D", 2, rng.choice(ks))


def test_latching():
    # kappa minimal in its orbit: latching object zero
    kmin = cg.WeightSystem(2, (0,), (1, 2))
    sub, incl = cg.latching(2, kmin)
    assert sub == {}
    # all weights n-1: the span of everything strictly below
    ktop = cg.WeightSystem(2, (1,), (1, 2))
    sub, incl = cg.latching(2, ktop)
    cell = cg.d_cell_basis(2, ktop)
    for d, simps in cell.items():
        expect = [s for s in simps if cg.lt(cg.kappa_dual(s, 2), ktop)]
        assert sub.get(d, []) == expect


def test_extended_latching_split_injective():
    rng = random.Random(8)
    for k in cg.enumerate_kn(2, 2):
        ok, detail = cg.extended_latching_split_injective(2, k)
        assert ok, (k, detail)
    for k in rng.sample(cg.enumerate_kn(2, 3), 12):
        ok, detail = cg.extended_latching_split_injective(2, k)
        assert ok, (k, detail)


def test_weight_system_json_roundtrip():
    k = cg.WeightSystem(4, (0, 2, 1, 1, 0, 1), (1, 3, 2, 4))
    obj = json.loads(cg.weight_systems_to_json([k]))[0]
    assert obj["r"] == 4 and obj["sigma"] == [1, 3, 2, 4]
    assert cg.WeightSystem.from_json_obj(obj) == k


def test_poset_edges_export():
    elems = cg.enumerate_kn(2, 2)
    edges = cg.poset_edges(elems)
    for (i, j) in edges:
        assert cg.leq(elems[i], elems[j]) and elems[i] != elems[j]
    # (0,id) < (1,sigma) for both sigma; nothing else among 4 elements
    assert len(edges) == 4


def test_k_operad_axioms():
    # exhaustive for n <= 2, r <= 3 slots; random beyond
    import itertools
    ws2 = cg.enumerate_kn(2, 2)
    for a in ws2:
        for b in ws2:
            for c in ws2:
                # nested associativity
                for i in (1, 2):
                    for k in (1, 2):
                        lhs = cg.cg_compose(cg.cg_compose(a, i, b), i + k - 1, c)
                        rhs = cg.cg_compose(a, i, cg.cg_compose(b, k, c))
                        assert lhs == rhs
                # parallel
                lhs = cg.cg_compose(cg.cg_compose(a, 1, b), b.r + 1, c)
                rhs = cg.cg_compose(cg.cg_compose(a, 2, c), 1, b)
                assert lhs == rhs
    # equivariance, exhaustive over Sigma_2 at n <= 2
    for a in ws2:
        for b in ws2:
            for e in (1, 2):
                for w in itertools.permutations((1, 2)):
                    lhs = cg.cg_compose(a, e, cg.cg_act(w, b))
                    rhs = cg.cg_act(cg.subst_perm((1, 2), e, w),
                                    cg.cg_compose(a, e, b))
                    assert lhs == rhs
    rng = random.Random(11)
    for _ in range(300):
        s, t, u = rng.randint(2, 3), rng.randint(2, 3), rng.randint(2, 3)
        a = rand_ws(rng, s, 3)
        b = rand_ws(rng, t, 3)
        c = rand_ws(rng, u, 3)
        i = rng.randint(1, s)
        k = rng.randint(1, t)
        assert cg.cg_compose(cg.cg_compose(a, i, b), i + k - 1, c) == \
            cg.cg_compose(a, i, cg.cg_compose(b, k, c))


def test_degree_function_properties():
    rng = random.Random(12)
    for _ in range(300):
        r = rng.randint(2, 4)
        a = rand_ws(rng, r, 3)
        w = tuple(rng.sample(range(1, r + 1), r))
        assert cg.cg_act(w, a).degree() == a.degree()
        b = rand_ws(rng, r, 3)
        if cg.lt(a, b):
            assert a.degree() < b.degree()
