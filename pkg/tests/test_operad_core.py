import itertools
import math
import random
from math import comb

import pytest

from opkz import barratt_eccles as be
from opkz import operad_core as oc
from opkz.complete_graph import subst_perm


LIE_ODD = """
gen lam 2 1 sym=+1
lam(lam(1,2),3) + lam(lam(2,3),1) + lam(lam(3,1),2)
"""


def lie_module():
    return oc.parse_presentation(LIE_ODD).module


def rand_tree(rng, F, r):
    shapes = [s for s in oc.reduced_tree_shapes(tuple(range(1, r + 1)))
              if all(F.M.dims(k) > 0 for k in oc.shape_slots(s))]
    shape = rng.choice(shapes)
    combo = [rng.randrange(F.M.dims(k)) for k in oc.shape_slots(shape)]
    it = iter(combo)

    def fill(s):
        if oc.is_leaf(s):
            return s
        return (next(it), tuple(fill(c) for c in s[1]))

    return fill(shape)


# -- trees

def test_tree_compose_figure():
    # a 3-leaf two-vertex tree composed at slot 2 with a 3-corolla gives the
    # 5-leaf tree with leaf sets {1,5} and {2,3,4}
    t1 = (7, ((9, (1, 3)), 2))
    t2 = (5, (1, 2, 3))
    assert oc.tree_compose_shape(t1, 2, t2) == \
        (7, ((9, (1, 5)), (5, (2, 3, 4))))


def test_graft_preserves_reducedness_and_canonicity():
    rng = random.Random(0)
    F = oc.FreeOperad(lie_module())
    for _ in range(100):
        t1 = rand_tree(rng, F, rng.randint(2, 3))
        t2 = rand_tree(rng, F, 2)
        e = rng.randint(1, len(oc.leaves(t1)))
        res, _sign = F.graft_tree(t1, e, t2)
        assert oc.is_canonical(res)
        assert all(k >= 2 for (k, _) in oc.tree_vertices(res))


def test_corolla_graft_smallest():
    F = oc.FreeOperad(lie_module())
    t, sign = F.graft_tree(F.corolla(2, 0), 1, F.corolla(3, 0) if False
                           else F.corolla(2, 0))
    assert t == (0, ((0, (1, 2)), 3)) and sign == 1


def test_shape_counts():
    shapes4 = list(oc.reduced_tree_shapes((1, 2, 3, 4)))
    assert sum(1 for s in shapes4 if oc.shape_weight(s) == 3) == 15
    for k in (3, 4):
        for t in range(2, k):
            count = sum(
                1 for s in oc.reduced_tree_shapes(tuple(range(1, k + 1)))
                if oc.shape_weight(s) == 2 and
                any(not oc.is_leaf(c) and len(oc.leaves(c)) == t
                    for c in s[1]))
            assert count == comb(k, t)


def test_free_component_weights():
    F = oc.FreeOperad(lie_module())
    # weight 1 at arity r: one corolla per generator basis element
    assert len(F.component(2, weight=1)) == 1
    assert F.component(3, weight=1) == []  # no arity-3 generators
    assert len(F.component(3, weight=2)) == 3
    assert len(F.component(4, weight=3)) == 15
    # brute-force cross-check of the full component count at arity 4
    assert len(F.component(4)) == 15


def test_canonicalize_idempotent_and_action_axiom():
    rng = random.Random(1)
    F = oc.FreeOperad(lie_module())
    for _ in range(150):
        r = rng.choice((3, 4))
        t = rand_tree(rng, F, r)
        assert F.canonicalize(t) == {t: 1}
        w = tuple(rng.sample(range(1, r + 1), r))
        v = tuple(rng.sample(range(1, r + 1), r))
        wv = tuple(w[v[i] - 1] for i in range(r))
        assert F.act(w, F.act(v, {t: 1})) == F.act(wv, {t: 1})


def test_free_operad_axioms_with_odd_labels():
    rng = random.Random(2)
    pres = oc.parse_presentation("gen lam 2 1 sym=+1\ngen mu 2 0 sym=+1")
    F = oc.FreeOperad(pres.module)
    for _ in range(250):
        a = {rand_tree(rng, F, 2): 1}
        b = {rand_tree(rng, F, 2): 1}
        c = {rand_tree(rng, F, 2): 1}
        i, k = rng.randint(1, 2), rng.randint(1, 2)
        assert F.graft(F.graft(a, i, b), i + k - 1, c) == \
            F.graft(a, i, F.graft(b, k, c))
        db = F.tree_degree(next(iter(b)))
        dc = F.tree_degree(next(iter(c)))
        sgn = -1 if (db % 2 and dc % 2) else 1
        lhs = F.graft(F.graft(a, 1, b), 3, c)
        rhs = {kk: sgn * v for kk, v in F.graft(F.graft(a, 2, c), 1, b).items()}
        assert lhs == rhs
    for _ in range(200):
        r1, r2 = rng.choice((2, 3)), rng.choice((2, 3))
        if r1 + r2 - 1 > 4:
            continue
        a, b = {rand_tree(rng, F, r1): 1}, {rand_tree(rng, F, r2): 1}
        e = rng.randint(1, r1)
        w = tuple(rng.sample(range(1, r2 + 1), r2))
        ws = tuple(rng.sample(range(1, r1 + 1), r1))
        assert F.graft(a, e, F.act(w, b)) == \
            F.act(subst_perm(tuple(range(1, r1 + 1)), e, w), F.graft(a, e, b))
        assert F.graft(F.act(ws, a), e, b) == \
            F.act(subst_perm(ws, e, tuple(range(1, r2 + 1))),
                  F.graft(a, oc.perm_inv(ws)[e - 1], b))


def test_evaluate_tree_matches_sharing_substitution():
    P3 = be.en_truncation(1, 3)

    class EModule:
        def dims(self, k):
            return P3.dim(k)

        def degree(self, k, idx):
            return P3.degree(k, idx)

        def act(self, k, w, idx):
            return P3.action[k][w][idx]

    F = oc.FreeOperad(EModule())
    idx2 = {s: i for i, (s, d) in enumerate(P3.basis[2])}
    idx3 = {s: i for i, (s, d) in enumerate(P3.basis[3])}
    for u in itertools.permutations((1, 2)):
        for v in itertools.permutations((1, 2)):
            # written order: root input 1 is the subtree on {2,3}
            raw = (idx2[(u,)], ((idx2[(v,)], (2, 3)), 1))
            acc = {}
            for t, c in F.canonicalize(raw).items():
                for kk, vv in oc.evaluate_tree(P3, t).items():
                    acc[kk] = acc.get(kk, 0) + c * vv
            direct = be.subst_perm_sharing(u, v, [None, 1], (2, 3))
            assert {k: v for k, v in acc.items() if v} == \
                {idx3[(direct,)]: 1}
            # canonical 2-vertex: standard composite
            t = (idx2[(u,)], (1, (idx2[(v,)], (2, 3))))
            assert oc.evaluate_tree(P3, t) == \
                {idx3[(be.subst_perm(u, 2, v),)]: 1}


def test_evaluate_corolla_and_equivariance():
    P = be.en_truncation(2, 3)

    class EModule:
        def dims(self, k):
            return P.dim(k)

        def degree(self, k, idx):
            return P.degree(k, idx)

        def act(self, k, w, idx):
            return P.action[k][w][idx]

    F = oc.FreeOperad(EModule())
    rng = random.Random(3)
    for _ in range(30):
        i = rng.randrange(P.dim(3))
        assert oc.evaluate_tree(P, (i, (1, 2, 3))) == {i: 1}
    for _ in range(60):
        t = rand_tree(rng, F, 3)
        w = tuple(rng.sample(range(1, 4), 3))
        lhs = {}
        for t2, c in F.act(w, {t: 1}).items():
            for k2, v in oc.evaluate_tree(P, t2).items():
                lhs[k2] = lhs.get(k2, 0) + c * v
        rhs = P.act_vec(3, w, oc.evaluate_tree(P, t))
        assert {k: v for k, v in lhs.items() if v} == rhs


# -- presentations

def test_parse_presentation_format():
    pres = oc.parse_presentation(oc.ASSOCIATIVE_PRESENTATION)
    assert pres.module.dims(2) == 2  # free generator spans Z[Sigma_2]
    assert len(pres.relations) == 1
    arity, chain = pres.relations[0]
    assert arity == 3 and len(chain) == 2
    with pytest.raises(ValueError):
        oc.parse_presentation("gen mu 2 0 sym=+1\nmu(1,1)")


def test_associative_quotient_ranks():
    pres = oc.parse_presentation(oc.ASSOCIATIVE_PRESENTATION)
    for r in (2, 3, 4):
        q = oc.QuotientComponent(pres, r)
        assert q.graded_ranks() == {0: math.factorial(r)}
        assert not q.has_torsion()


def test_gerstenhaber_quotient_ranks():
    # graded ranks match H_*(configuration spaces): the Poincare polynomial
    # (1+t)(1+2t)...(1+(r-1)t) in t = q^{n-1}
    for n in (2, 3):
        pres = oc.parse_presentation(oc.gerstenhaber_presentation(n))
        expected3 = {0: 1, n - 1: 3, 2 * (n - 1): 2}
        expected4 = {0: 1, n - 1: 6, 2 * (n - 1): 11, 3 * (n - 1): 6}
        assert oc.QuotientComponent(pres, 2).graded_ranks() == \
            {0: 1, n - 1: 1}
        assert oc.QuotientComponent(pres, 3).graded_ranks() == expected3
        q4 = oc.QuotientComponent(pres, 4)
        assert q4.graded_ranks() == expected4
        assert not q4.has_torsion()


def test_gerstenhaber_ranks_match_en_homology():
    # independent oracle: exact homology of the filtration layer
    from opkz.exact_linalg import homology
    for n in (2, 3):
        pres = oc.parse_presentation(oc.gerstenhaber_presentation(n))
        q = oc.QuotientComponent(pres, 3)
        rep = homology(be.en_chain_complex(n, 3), "Z")
        got = {d: b for d, (b, tor) in rep.groups.items() if b}
        assert got == q.graded_ranks()
        assert all(not tor for (_, tor) in rep.groups.values())


def test_quotient_reduction_and_section():
    pres = oc.parse_presentation(oc.ASSOCIATIVE_PRESENTATION)
    q = oc.QuotientComponent(pres, 3)
    for d in q.ranks:
        for j in range(q.ranks[d]):
            vec = q.section_vec(d, j)
            red = q.reduce(vec)
            assert red == {(d, j): 1}


def test_presentation_truncation_axioms():
    rng = random.Random(4)
    for text in (oc.ASSOCIATIVE_PRESENTATION, oc.gerstenhaber_presentation(2)):
        pres = oc.parse_presentation(text)
        P = oc.presentation_truncation(pres, 3)
        fails = oc.check_truncation_axioms(P, rng, samples=120)
        assert not fails, fails[:2]


def test_associative_truncation_is_regular_representation():
    pres = oc.parse_presentation(oc.ASSOCIATIVE_PRESENTATION)
    P = oc.presentation_truncation(pres, 3)
    assert P.dim(3) == 6
    # the action on A(3) permutes a basis up to sign (rank 6 = |Sigma_3|)
    for w, col in P.action[3].items():
        images = []
        for i in range(6):
            terms = col[i]
            assert len(terms) == 1 and abs(terms[0][1]) == 1
            images.append(terms[0][0])
        assert sorted(images) == list(range(6))


# -- suspension

def test_suspension_identity_and_involution():
    P = be.en_truncation(2, 3)
    assert oc.operadic_suspension(P, 0).basis == P.basis
    for k in (1, 2, -1, 3):
        Q = oc.operadic_suspension(oc.operadic_suspension(P, k), -k)
        assert Q.basis == P.basis and Q.diff == P.diff
        assert Q.comp == P.comp and Q.action == P.action


def test_suspension_degree_shift_and_axioms():
    P = be.en_truncation(2, 3)
    rng = random.Random(5)
    for k in (1, -2, 3):
        Q = oc.operadic_suspension(P, k)
        for r in (1, 2, 3):
            for (lab, d), (lab2, d2) in zip(P.basis[r], Q.basis[r]):
                assert d2 == d + k * (1 - r)
        assert not oc.check_truncation_axioms(Q, rng, samples=100)


def test_suspension_twists_action_by_signature():
    P = be.en_truncation(2, 2)
    Q = oc.operadic_suspension(P, 1)
    tau = (2, 1)
    for i in range(P.dim(2)):
        [(j, c)] = P.action[2][tau][i]
        [(j2, c2)] = Q.action[2][tau][i]
        assert j2 == j and c2 == -c


def test_quotient_torsion_reported_not_hidden():
    # doubling relation: the quotient of the free part at arity 3 acquires
    # 2-torsion, which is reported and blocks structure-matrix assembly
    pres = oc.parse_presentation(
        "gen mu 2 0 sym=+1\nmu(mu(1,2),3) + mu(mu(1,2),3)")
    q = oc.QuotientComponent(pres, 3)
    assert q.has_torsion()
    # the symmetric orbit of the doubled generator tree spans 2*(all three
    # 2-vertex trees): Z/2 on each
    assert q.torsion[0] == [2, 2, 2] and q.ranks[0] == 0
    with pytest.raises(ValueError, match="torsion"):
        oc.presentation_truncation(pres, 3)
    with pytest.raises(ValueError, match="torsion"):
        q.reduce({0: 1})
