"""The complete graph operad K and its cell structures.

Elements are oriented weight systems kappa = (mu, sigma): an integer weight
mu_ij for every pair i < j of vertices plus a permutation sigma giving every
edge an orientation.  K_n(r) is the subposet with all weights in [0, n).
The poset order, the partial composition products and the symmetric group
action make K an operad in posets.

Cells: E(kappa) is the span of permutation simplices w with kappa(w) <= kappa;
D_n(kappa) the span of dual basis elements s* with complement weight system
kappa_n*(s) <= kappa.  Latching objects are spans over strictly smaller dual
weight systems.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from functools import lru_cache

from .exact_linalg import (IntMatrix, ChainComplex, kernel_basis,
                           row_space_reduce, in_row_space, snf_divisors)


@lru_cache(maxsize=None)
def pairs(r):
    """Pairs (i, j), i < j, of {1..r} in lexicographic order."""
    return tuple((i, j) for i in range(1, r) for j in range(i + 1, r + 1))


@lru_cache(maxsize=None)
def pair_pos(r):
    return {p: k for k, p in enumerate(pairs(r))}


def restriction(w, i, j):
    """The permutation of {i, j} formed by the occurrences of i, j in w."""
    if not (1 <= i < j <= len(w)):
        raise ValueError(f"pair ({i},{j}) out of range for arity {len(w)}")
    return tuple(v for v in w if v == i or v == j)


def orientation_bit(w, i, j):
    # True when i occurs before j
    for v in w:
        if v == i:
            return True
        if v == j:
            return False
    raise ValueError("values not present")


@dataclass(frozen=True)
class WeightSystem:
    """Oriented weight system (mu, sigma) on the complete graph with r vertices.

    mu is a flat tuple indexed by pairs(r); sigma is the full permutation
    (its pair restrictions are derived, never stored).  Negative weights are
    representable; is_valid flags genuine members of K(r).
    """

    r: int
    mu: tuple
    sigma: tuple

    def __post_init__(self):
        if len(self.mu) != len(pairs(self.r)) or len(self.sigma) != self.r:
            raise ValueError("inconsistent weight system data")

    @property
    def is_valid(self):
        return all(m >= 0 for m in self.mu)

    def weight(self, i, j):
        return self.mu[pair_pos(self.r)[(i, j)]]

    def degree(self):
        return sum(self.mu)

    def level(self):
        """Least n with self in K_n(r)."""
        return max(self.mu) + 1 if self.mu else 1

    def to_json_obj(self):
        return {"r": self.r,
                "mu": [[i, j, self.weight(i, j)] for (i, j) in pairs(self.r)],
                "sigma": list(self.sigma)}

    @classmethod
    def from_json_obj(cls, obj):
        r = obj["r"]
        mu = [0] * len(pairs(r))
        for i, j, w in obj["mu"]:
            mu[pair_pos(r)[(i, j)]] = w
        return cls(r, tuple(mu), tuple(obj["sigma"]))


def leq(a, b):
    """Order relation: per pair, strictly smaller weight or equal weight with
    equal orientation."""
    if a.r != b.r:
        raise ValueError("arity mismatch")
    for k, (i, j) in enumerate(pairs(a.r)):
        if a.mu[k] < b.mu[k]:
            continue
        if a.mu[k] == b.mu[k] and \
                orientation_bit(a.sigma, i, j) == orientation_bit(b.sigma, i, j):
            continue
        return False
    return True


def lt(a, b):
    return a != b and leq(a, b)


def subst_perm(u, e, v):
    """Operadic substitution of permutations: plug v into slot e of u."""
    s, t = len(u), len(v)
    if not 1 <= e <= s:
        raise ValueError(f"invalid slot {e}")
    out = []
    for val in u:
        if val == e:
            out.extend(x + e - 1 for x in v)
        elif val > e:
            out.append(val + t - 1)
        else:
            out.append(val)
    return tuple(out)


def cg_compose(a, e, b):
    """Partial composition in K: plug b into the e-th vertex of a."""
    s, t = a.r, b.r
    if not 1 <= e <= s:
        raise ValueError(f"invalid slot {e}")
    r = s + t - 1

    def old_a(x):
        # inverse of the index shift on a's vertices
        return x if x < e else x - t + 1

    mu = []
    for (i, j) in pairs(r):
        ib = e <= i <= e + t - 1
        jb = e <= j <= e + t - 1
        if ib and jb:
            mu.append(b.weight(i - e + 1, j - e + 1))
        elif ib or jb:
            # one endpoint inside the substituted block: copy the a-edge to e
            o = old_a(j) if ib else old_a(i)
            mu.append(a.weight(min(e, o), max(e, o)))
        else:
            mu.append(a.weight(old_a(i), old_a(j)))
    sigma = subst_perm(a.sigma, e, b.sigma)
    return WeightSystem(r, tuple(mu), sigma)


def cg_act(w, k):
    """Action of a permutation on a weight system: relabel the vertices."""
    if len(w) != k.r:
        raise ValueError("arity mismatch")
    r = k.r
    winv = [0] * (r + 1)
    for x in range(r):
        winv[w[x]] = x + 1
    mu = []
    for (i, j) in pairs(r):
        a, b = winv[i], winv[j]
        mu.append(k.weight(min(a, b), max(a, b)))
    sigma = tuple(w[k.sigma[x] - 1] for x in range(r))
    return WeightSystem(r, tuple(mu), sigma)


def complement(k, n):
    """kappa* = (n-1-mu, sigma); an involution, order reversing."""
    return WeightSystem(k.r, tuple(n - 1 - m for m in k.mu), k.sigma)


def unit_ws():
    return WeightSystem(1, (), (1,))


def enumerate_kn(n, r):
    """All of K_n(r) in canonical order (weights then permutation, lex)."""
    if n < 1 or r < 1:
        raise ValueError("n >= 1 and r >= 1 required")
    npairs = len(pairs(r))
    out = []
    for mu in itertools.product(range(n), repeat=npairs):
        for sigma in itertools.permutations(range(1, r + 1)):
            out.append(WeightSystem(r, mu, sigma))
    return out


def kappa(simplex):
    """Oriented weight system of a permutation simplex: variation counts of
    the pair restrictions plus the last permutation."""
    r = len(simplex[0])
    mu = []
    for (i, j) in pairs(r):
        bits = [orientation_bit(w, i, j) for w in simplex]
        mu.append(sum(1 for a, b in zip(bits, bits[1:]) if a != b))
    return WeightSystem(r, tuple(mu), tuple(simplex[-1]))


def kappa_dual(simplex, n):
    return complement(kappa(simplex), n)


def poset_edges(elems):
    """All strict order relations among the given weight systems, as index
    pairs, for external visualization."""
    out = []
    for i, a in enumerate(elems):
        for j, b in enumerate(elems):
            if i != j and leq(a, b):
                out.append((i, j))
    return out


# ---------------------------------------------------------------------------
# cells
# ---------------------------------------------------------------------------

@dataclass
class Cell:
    """A subcomplex of E_n(r) (kind "E") or of its dual (kind "D").

    basis[d] lists the member simplices in degree d in ambient order;
    complex is the restricted chain complex; inclusion[d] the inclusion
    matrix into the ambient complex.
    """

    kind: str
    n: int
    kappa: WeightSystem
    basis: dict
    complex: ChainComplex
    inclusion: dict


def _ambient(n, r):
    from .barratt_eccles import enumerate_en
    return enumerate_en(n, r)


def e_cell_basis(k, n=None):
    """Simplices w with kappa(w) <= k, grouped by degree."""
    if n is None:
        n = max(1, k.level())
    amb = _ambient(n, k.r)
    out = {}
    for d, simps in amb.items():
        sel = [s for s in simps if leq(kappa(s), k)]
        if sel:
            out[d] = sel
    return out


def d_cell_basis(n, k):
    """Dual labels s for s in E_n(r) with complement weight system <= k."""
    amb = _ambient(n, k.r)
    out = {}
    for d, simps in amb.items():
        sel = [s for s in simps if leq(kappa_dual(s, n), k)]
        if sel:
            out[d] = sel
    return out


def build_cell(kind, n, k):
    """Assemble an E- or D-cell as a chain complex plus inclusion maps.

    Closure under the ambient differential is checked, not assumed.
    """
    from .barratt_eccles import enumerate_en, face_boundary_terms, dual_diff_terms
    amb = enumerate_en(n, k.r)
    amb_pos = {d: {s: i for i, s in enumerate(simps)} for d, simps in amb.items()}
    if kind == "E":
        basis = e_cell_basis(k, n)
        terms_of = face_boundary_terms      # degree d -> d-1
    elif kind == "D":
        basis = d_cell_basis(n, k)
        terms_of = lambda s, nn=n: dual_diff_terms(s, nn, k.r)
    else:
        raise ValueError("kind must be 'E' or 'D'")
    pos = {d: {s: i for i, s in enumerate(simps)} for d, simps in basis.items()}
    diff = {}
    if kind == "E":
        for d, simps in basis.items():
            if d - 1 not in basis and any(terms_of(s) for s in simps):
                pass
            ent = {}
            for j, s in enumerate(simps):
                for (face, sign) in terms_of(s):
                    if face not in pos.get(d - 1, {}):
                        raise ValueError("E-cell not closed under differential")
                    ent[(pos[d - 1][face], j)] = sign
            diff[d] = IntMatrix(len(basis.get(d - 1, ())), len(simps), ent)
    else:
        # dual differential raises the label degree by one; as a chain complex
        # we grade D-cells by label degree d and differentiate d -> d-1 on the
        # dual grading n(r-1) - d handled by the caller; here store the dual
        # boundary s* -> sum w* over w with s in delta(w), graded by codegree.
        for d, simps in basis.items():
            ent = {}
            for j, s in enumerate(simps):
                for (w, sign) in terms_of(s):
                    if w not in pos.get(d + 1, {}):
                        raise ValueError("D-cell not closed under differential")
                    ent[(pos[d + 1][w], j)] = sign
            # store as map in cohomological direction; complex built below
            diff[d] = ent
    if kind == "E":
        cx = ChainComplex({d: list(simps) for d, simps in basis.items()}, diff)
        cx.validate()
    else:
        # regrade by codegree c = (top degree bound) - d so the differential
        # decreases the grading, making a bona fide chain complex
        top = max(basis) if basis else 0
        cbasis = {top - d: list(simps) for d, simps in basis.items()}
        cdiff = {}
        for d, ent in diff.items():
            c = top - d
            rows = len(basis.get(d + 1, ()))
            cdiff[c] = IntMatrix(rows, len(basis[d]),
                                 {(i, j): v for (i, j), v in ent.items()})
        cx = ChainComplex(cbasis, cdiff)
        cx.validate()
    incl = {}
    for d, simps in basis.items():
        ent = {(amb_pos[d][s], j): 1 for j, s in enumerate(simps)}
        incl[d] = IntMatrix(len(amb[d]), len(simps), ent)
    return Cell(kind, n, k, basis, cx, incl)


def union_cells(n, r):
    """Union over kappa in K_n(r) of the E(kappa) bases.

    Every simplex w lies in E(kappa(w)), so the union is computed by grouping
    simplices by their own weight system and checking membership in K_n.
    """
    amb = _ambient(n, r)
    out = {}
    for d, simps in amb.items():
        members = []
        for s in simps:
            ks = kappa(s)
            if ks.is_valid and ks.level() <= n:
                members.append(s)
        if members:
            out[d] = members
    return out


def latching(n, k):
    """Latching object L D_n(kappa) = span of duals s* with complement
    strictly below kappa, together with its inclusion into D_n(kappa)."""
    cell = d_cell_basis(n, k)
    sub = {}
    for d, simps in cell.items():
        sel = [s for s in simps if lt(kappa_dual(s, n), k)]
        if sel:
            sub[d] = sel
    incl = {}
    for d, simps in sub.items():
        pos = {s: i for i, s in enumerate(cell[d])}
        incl[d] = IntMatrix(len(cell[d]), len(simps),
                            {(pos[s], j): 1 for j, s in enumerate(simps)})
    return sub, incl


def extended_latching_split_injective(n, k):
    """Split injectivity of D_{n-1}(kappa) (+)_{L D_{n-1}(kappa)} L D_n(kappa)
    -> D_n(kappa), degreewise over Z.

    The pushout is presented per degree as (A + B) / (c, -sigma* c); the check
    is that the induced map has saturated image and kernel exactly the
    relation lattice.
    """
    from .barratt_eccles import enumerate_en, sigma_star_on_label
    r = k.r
    tgt = d_cell_basis(n, k)
    a_basis = d_cell_basis(n - 1, k) if n >= 2 else {}
    la, _ = latching(n - 1, k) if n >= 2 else ({}, {})
    lb, _ = latching(n, k)
    ok = True
    detail = {}
    # grade by the dual degree: sigma* raises the simplex degree by r-1, so
    # label degree d at level n-1 pairs with label degree d+r-1 at level n
    degrees = sorted(set(tgt) | set(d + r - 1 for d in a_basis) | set(lb))
    for d in degrees:
        t_list = tgt.get(d, [])
        tpos = {s: i for i, s in enumerate(t_list)}
        a_list = a_basis.get(d - (r - 1), [])
        b_list = lb.get(d, [])
        cols = len(a_list) + len(b_list)
        if cols == 0:
            continue
        ent = {}
        for j, s in enumerate(a_list):
            for (w, c) in sigma_star_on_label(s, n):
                if w in tpos:
                    ent[(tpos[w], j)] = c
        for j, s in enumerate(b_list):
            ent[(tpos[s], len(a_list) + j)] = 1
        M = IntMatrix(len(t_list), cols, ent)
        # relation lattice: for c in L D_{n-1}(kappa): (c, -sigma* c)
        rel_rows = []
        apos = {s: i for i, s in enumerate(a_list)}
        bpos = {s: i for i, s in enumerate(b_list)}
        for s in la.get(d - (r - 1), []):
            row = {apos[s]: 1}
            for (w, c) in sigma_star_on_label(s, n):
                if w in bpos:
                    row[len(a_list) + bpos[w]] = -c
            rel_rows.append(row)
        ker = kernel_basis(M)
        piv_rel = row_space_reduce([dict(r) for r in rel_rows], cols)
        piv_ker = row_space_reduce(
            [{i: v for i, v in enumerate(vec) if v} for vec in ker], cols)
        kernel_eq = all(in_row_space(piv_rel, {i: v for i, v in enumerate(vec) if v})
                        for vec in ker) and \
            all(in_row_space(piv_ker, r) for r in rel_rows)
        saturated = all(v == 1 for v in snf_divisors(M))
        detail[d] = (kernel_eq, saturated)
        ok = ok and kernel_eq and saturated
    return ok, detail


def weight_systems_to_json(elems):
    return json.dumps([k.to_json_obj() for k in elems])
