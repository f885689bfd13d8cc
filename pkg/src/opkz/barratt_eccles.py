"""The Barratt-Eccles chain operad E and its little-cubes filtration E_n.

E(r) is spanned in degree d by non-degenerate simplices of permutations
(w_0, ..., w_d), w_j != w_{j+1}.  The differential is the alternating sum of
face deletions, with faces that become degenerate dropped.  The filtration
E_n(r) keeps the simplices whose pairwise variation counts mu_ij are all < n.
Composition is the substitution of permutations extended to simplices by the
shuffle (monotone lattice path) expansion.

Degree-0 structure: E_1 = the associative operad, E(r)_0 = Z[Sigma_r].
The sgn cochains, their cup powers, the suspension morphism sigma (cap
product with sgn) and its degreewise section live here as well.

Simplices are plain tuples of value-sequence tuples; chains are Chain objects
mapping simplices to nonzero integer coefficients.
"""

from __future__ import annotations

import itertools
import os
import threading
from functools import lru_cache

from .exact_linalg import IntMatrix, ChainComplex, ResourceCapError
from . import complete_graph as cg
from .operad_core import GradedOperadTruncation

DEFAULT_BASIS_CAP = int(os.environ.get("OPKZ_BASIS_CAP", "400000"))


def identity_perm(r):
    return tuple(range(1, r + 1))


def all_perms(r):
    return list(itertools.permutations(range(1, r + 1)))


def perm_mul(a, b):
    """a after b: (a*b)(x) = a(b(x))."""
    return tuple(a[b[x] - 1] for x in range(len(b)))


def perm_inv(a):
    out = [0] * len(a)
    for i, v in enumerate(a):
        out[v - 1] = i + 1
    return tuple(out)


def signature(seq):
    """Signature of a sequence that is a permutation of some index set."""
    inv = 0
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] > seq[j]:
                inv += 1
    return -1 if inv % 2 else 1


restriction = cg.restriction


def variation_count(simplex, i, j):
    """mu_ij: the number of variations of the pair restriction along the
    simplex."""
    bits = [cg.orientation_bit(w, i, j) for w in simplex]
    return sum(1 for a, b in zip(bits, bits[1:]) if a != b)


def is_nondegenerate(simplex):
    return all(a != b for a, b in zip(simplex, simplex[1:]))


def en_member(simplex, n):
    r = len(simplex[0])
    return all(variation_count(simplex, i, j) < n for (i, j) in cg.pairs(r))


def degree(simplex):
    return len(simplex) - 1


# ---------------------------------------------------------------------------
# chains
# ---------------------------------------------------------------------------

class Chain:
    """Integer chain in E(r): finite map simplex -> nonzero coefficient.

    All terms must share arity and degree; the zero chain carries a degree
    of None.
    """

    __slots__ = ("arity", "terms")

    def __init__(self, arity, terms=None):
        self.arity = arity
        self.terms = {}
        if terms:
            deg = None
            for s, c in terms.items():
                if c == 0:
                    continue
                if deg is None:
                    deg = len(s) - 1
                elif len(s) - 1 != deg:
                    raise ValueError("mixed degrees in chain")
                self.terms[s] = c

    @property
    def degree(self):
        for s in self.terms:
            return len(s) - 1
        return None

    def is_zero(self):
        return not self.terms

    def __eq__(self, other):
        return (isinstance(other, Chain) and self.arity == other.arity
                and self.terms == other.terms)

    def __repr__(self):
        return f"Chain(r={self.arity}, {len(self.terms)} terms, deg={self.degree})"

    def items(self):
        return sorted(self.terms.items())

    def add(self, other):
        if self.arity != other.arity:
            raise ValueError("arity mismatch")
        t = dict(self.terms)
        for s, c in other.terms.items():
            v = t.get(s, 0) + c
            if v:
                t[s] = v
            else:
                del t[s]
        return Chain(self.arity, t)

    def scale(self, c):
        if c == 0:
            return Chain(self.arity)
        return Chain(self.arity, {s: c * v for s, v in self.terms.items()})

    @classmethod
    def of(cls, simplex, coeff=1):
        return cls(len(simplex[0]), {tuple(map(tuple, simplex)): coeff})


def mu_simplex(d):
    """The alternating arity-2 simplex mu_d = (id, tau, id, ...)."""
    e, t = (1, 2), (2, 1)
    return tuple(e if k % 2 == 0 else t for k in range(d + 1))


def tau_mu_simplex(d):
    e, t = (1, 2), (2, 1)
    return tuple(t if k % 2 == 0 else e for k in range(d + 1))


def lam_cycle(n):
    """The cycle mu_{n-1} + (-1)^n tau mu_{n-1} spanning H_{n-1}(E_n(2))."""
    return Chain(2, {mu_simplex(n - 1): 1, tau_mu_simplex(n - 1): (-1) ** n})


# ---------------------------------------------------------------------------
# differential, symmetric action, composition
# ---------------------------------------------------------------------------

def face_boundary_terms(simplex):
    """Signed faces of a simplex, with degenerate faces dropped."""
    d = len(simplex) - 1
    if d == 0:
        return []
    out = []
    for i in range(d + 1):
        face = simplex[:i] + simplex[i + 1:]
        if 0 < i < d and simplex[i - 1] == simplex[i + 1]:
            continue
        out.append((face, -1 if i % 2 else 1))
    return out


def face_differential(chain):
    acc = {}
    for s, c in chain.terms.items():
        for face, sign in face_boundary_terms(s):
            v = acc.get(face, 0) + sign * c
            if v:
                acc[face] = v
            else:
                del acc[face]
    return Chain(chain.arity, acc)


def sym_act(w, chain):
    """Left action: compose every permutation of every simplex with w."""
    if len(w) != chain.arity:
        raise ValueError("arity mismatch")
    return Chain(chain.arity,
                 {tuple(perm_mul(w, p) for p in s): c
                  for s, c in chain.terms.items()})


def subst_perm(u, e, v):
    return cg.subst_perm(u, e, v)


def subst_perm_sharing(u, v, block_leaves, inner_sorted):
    """Substitution for an arbitrary input sharing.

    block_leaves[k] is the leaf carried by root input k+1 (None marks the
    inner slot); inner_sorted is the sorted leaf set of the inner vertex.
    """
    out = []
    for val in u:
        leaf = block_leaves[val - 1]
        if leaf is None:
            out.extend(inner_sorted[x - 1] for x in v)
        else:
            out.append(leaf)
    return tuple(out)


def _lattice_paths(m, l):
    """Monotone paths in the m x l grid with shuffle signs.

    Yields (pairs, sign): pairs is the staircase (a_0, b_0), ..., and sign is
    the parity of (vertical precedes horizontal) step pairs.
    """
    for hpos in itertools.combinations(range(m + l), m):
        hset = set(hpos)
        inv = 0
        pairs_list = [(0, 0)]
        a = b = 0
        for k in range(m + l):
            if k in hset:
                a += 1
            else:
                b += 1
                inv += sum(1 for h in hpos if h > k)
            pairs_list.append((a, b))
        yield pairs_list, (-1 if inv % 2 else 1)


def compose_simplices(u, e, v, sharing=None):
    """Shuffle expansion of the composite of two simplices.

    Returns a list of (simplex, sign).  With sharing=(block_leaves,
    inner_sorted) the substitution uses that input sharing instead of the
    standard contiguous one.
    """
    m, l = len(u) - 1, len(v) - 1
    if sharing is None:
        sub = lambda a, b: subst_perm(a, e, b)
    else:
        block_leaves, inner_sorted = sharing
        sub = lambda a, b: subst_perm_sharing(a, b, block_leaves, inner_sorted)
    out = []
    for pairs_list, sign in _lattice_paths(m, l):
        w = tuple(sub(u[a], v[b]) for (a, b) in pairs_list)
        out.append((w, sign))
    return out


def compose(cu, e, cv, sharing=None):
    """Bilinear extension of the lattice-path composite to chains."""
    s, t = cu.arity, cv.arity
    if sharing is None and not 1 <= e <= s:
        raise ValueError(f"invalid slot {e} for arity {s}")
    acc = {}
    for su, a in cu.terms.items():
        for sv, b in cv.terms.items():
            for w, sign in compose_simplices(su, e, sv, sharing):
                val = acc.get(w, 0) + sign * a * b
                if val:
                    acc[w] = val
                else:
                    del acc[w]
    return Chain(s + t - 1, acc)


# ---------------------------------------------------------------------------
# sgn cochains, suspension, section
# ---------------------------------------------------------------------------

def sgn_cochain(simplex):
    """sgn(w_0, ..., w_d): signature of the first-column sequence when it is
    a permutation of 1..r, else 0."""
    r = len(simplex[0])
    col = tuple(w[0] for w in simplex)
    if len(col) != r or sorted(col) != list(range(1, r + 1)):
        return 0
    return signature(col)


def cup(f, fdeg, g, gdeg):
    """Alexander-Whitney cup product of integer cochains."""
    def fg(simplex):
        d = len(simplex) - 1
        if d != fdeg + gdeg:
            return 0
        return f(simplex[:fdeg + 1]) * g(simplex[fdeg:])
    return fg


def sphere_action(m, r):
    """The cup power sgn^{cup m} on E(r), a cochain of degree m(r-1)."""
    if m < 1:
        raise ValueError("m >= 1 required")
    f, fdeg = sgn_cochain, r - 1
    for _ in range(m - 1):
        f, fdeg = cup(f, fdeg, sgn_cochain, r - 1), fdeg + r - 1
    return f, fdeg


def augmentation(chain):
    if chain.degree in (None, 0):
        return sum(chain.terms.values())
    return 0


def sigma_simplex(simplex):
    """Raw suspension on one simplex: sgn of the front (r-1)-face times the
    back face.  Returns (back_simplex, sign) or None."""
    r = len(simplex[0])
    d = len(simplex) - 1
    if d < r - 1:
        return None
    sign = sgn_cochain(simplex[:r])
    if sign == 0:
        return None
    return simplex[r - 1:], sign


def suspension_sigma(chain):
    """Cap product with sgn: E(r) -> E(r), dropping the degree by r-1.

    This is the underlying map of chain complexes; the desuspension
    bookkeeping (degree shift and signature twist of the action) is carried
    by the caller.
    """
    acc = {}
    for s, c in chain.terms.items():
        hit = sigma_simplex(s)
        if hit is None:
            continue
        w, sign = hit
        v = acc.get(w, 0) + sign * c
        if v:
            acc[w] = v
        else:
            del acc[w]
    return Chain(chain.arity, acc)


def section_t(simplex):
    """The degreewise section of sigma: prepend the prefix-reversal sequence
    t_1, ..., t_{r-1} built from the first permutation."""
    w0 = simplex[0]
    r = len(w0)
    pre = []
    for j in range(r - 1, 0, -1):
        pre.append(tuple(reversed(w0[:j + 1])) + w0[j + 1:])
    return tuple(pre) + tuple(simplex)


def section_signed(simplex):
    """(section simplex, sign) with sigma(section) = sign * simplex."""
    t = section_t(simplex)
    r = len(simplex[0])
    sign = sgn_cochain(t[:r])
    return t, sign


def section_chain(chain):
    """Module-level section S with sigma(S(x)) = x for every chain x."""
    acc = {}
    for s, c in chain.terms.items():
        t, sign = section_signed(s)
        acc[t] = acc.get(t, 0) + sign * c
    return Chain(chain.arity, {k: v for k, v in acc.items() if v})


# ---------------------------------------------------------------------------
# enumeration of E_n(r)
# ---------------------------------------------------------------------------

def simplex_text(simplex):
    """CLI-facing basis listing: one simplex as "perm|perm|perm"."""
    return "|".join("".join(str(v) for v in w) for w in simplex)


def parse_simplex_text(text):
    return tuple(tuple(int(ch) for ch in part) for part in text.split("|"))


def basis_listing(n, r):
    """All of E_n(r) as text lines, one simplex per line, by degree."""
    lines = []
    for d, simps in enumerate_en(n, r).items():
        for s in simps:
            lines.append(simplex_text(s))
    return "\n".join(lines) + "\n"


_enum_cache = {}
_enum_lock = threading.Lock()


def enumerate_en(n, r, cap=None):
    """Basis of E_n(r) grouped by degree, each degree in lexicographic order.

    Cached per (n, r); write-once behind a lock.  Raises ResourceCapError
    when the basis would exceed the element cap (the desk-scale guardrail).
    """
    if cap is None:
        cap = DEFAULT_BASIS_CAP
    key = (n, r)
    with _enum_lock:
        if key in _enum_cache:
            return _enum_cache[key]
    perms = all_perms(r)
    prs = cg.pairs(r)
    bits = {w: tuple(cg.orientation_bit(w, i, j) for (i, j) in prs)
            for w in perms}
    by_degree = {}
    count = 0
    stack = [((w,), bits[w], tuple([0] * len(prs))) for w in reversed(perms)]
    while stack:
        simplex, wb, mu = stack.pop()
        d = len(simplex) - 1
        by_degree.setdefault(d, []).append(simplex)
        count += 1
        if count > cap:
            raise ResourceCapError(
                f"E_{n}({r}) basis exceeds the cap of {cap} elements; "
                f"raise OPKZ_BASIS_CAP or --mem-cap to attempt it")
        for w2 in perms:
            if w2 == simplex[-1]:
                continue
            b2 = bits[w2]
            mu2 = list(mu)
            ok = True
            for k in range(len(prs)):
                if wb[k] != b2[k]:
                    mu2[k] += 1
                    if mu2[k] >= n:
                        ok = False
                        break
            if ok:
                stack.append((simplex + (w2,), b2, tuple(mu2)))
    out = {d: tuple(sorted(v)) for d, v in sorted(by_degree.items())}
    with _enum_lock:
        _enum_cache[key] = out
    return out


def enumerate_e_degree(r, d):
    """All non-degenerate d-simplices of the full operad E(r)."""
    perms = all_perms(r)
    out = [(w,) for w in perms]
    for _ in range(d):
        out = [s + (w,) for s in out for w in perms if w != s[-1]]
    return out


def en_chain_complex(n, r):
    """E_n(r) as a chain complex over its canonical basis."""
    basis = enumerate_en(n, r)
    pos = {d: {s: i for i, s in enumerate(v)} for d, v in basis.items()}
    diff = {}
    for d, simps in basis.items():
        if d == 0:
            continue
        ent = {}
        for j, s in enumerate(simps):
            for face, sign in face_boundary_terms(s):
                ent[(pos[d - 1][face], j)] = sign
        diff[d] = IntMatrix(len(basis[d - 1]), len(simps), ent)
    return ChainComplex({d: list(v) for d, v in basis.items()}, diff)


def dual_diff_terms(s, n, r):
    """Terms of the dual boundary on the label s: pairs (w, sign) over the
    simplices w in E_n(r) with s occurring in delta(w)."""
    table = _coface_table(n, r)
    return table.get(s, [])


@lru_cache(maxsize=None)
def _coface_table(n, r):
    basis = enumerate_en(n, r)
    table = {}
    for d, simps in basis.items():
        for w in simps:
            for face, sign in face_boundary_terms(w):
                table.setdefault(face, []).append((w, sign))
    return table


def sigma_star_on_label(s, n):
    """Transpose of the raw suspension: dual basis image of s* in level n.

    Returns the pairs (w, sign) over w in E_n(r) with sigma(w) = sign * s.
    """
    r = len(s[0])
    d = len(s) - 1
    basis = enumerate_en(n, r)
    out = []
    for w in basis.get(d + r - 1, ()):
        if w[r - 1:] == s:
            sign = sgn_cochain(w[:r])
            if sign:
                out.append((w, sign))
    return out


# ---------------------------------------------------------------------------
# structure matrices
# ---------------------------------------------------------------------------

def composition_matrix(n, s, e, t, cap=None):
    """The partial composition E_n(s) (x) E_n(t) -> E_n(s+t-1) as a matrix
    over the canonical bases; columns indexed by pairs (i, j) in row-major
    order.  Exportable through IntMatrix.to_triplet_text."""
    P = en_truncation(n, max(s + t - 1, 2), cap=cap)
    table = P.comp[(s, e, t)]
    rows = P.dim(s + t - 1)
    dim_t = P.dim(t)
    ent = {}
    for (i, j), terms in table.items():
        col = i * dim_t + j
        for (k, c) in terms:
            ent[(k, col)] = c
    return IntMatrix(rows, P.dim(s) * dim_t, ent)


def en_truncation(n, R, cap=None):
    """E_n as a GradedOperadTruncation up to arity R: bases, differentials,
    symmetric group actions and all in-range partial compositions.

    Cached per (n, R) and shared read-only; pass an explicit cap to build a
    fresh instance under a different guardrail.
    """
    if cap is None:
        return _en_truncation_cached(n, R)
    return _build_en_truncation(n, R, cap)


@lru_cache(maxsize=None)
def _en_truncation_cached(n, R):
    return _build_en_truncation(n, R, None)


def _build_en_truncation(n, R, cap):
    P = GradedOperadTruncation(R)
    index = {}
    for r in range(1, R + 1):
        if r == 1:
            P.basis[1] = [(((1,),), 0)]
            index[1] = {((1,),): 0}
            P.diff[1] = {}
            P.action[1] = {(1,): {0: [(0, 1)]}}
            continue
        basis = enumerate_en(n, r, cap=cap)
        flat = []
        for d in sorted(basis):
            flat.extend((s, d) for s in basis[d])
        P.basis[r] = flat
        index[r] = {s: i for i, (s, _) in enumerate(flat)}
        diff = {}
        for i, (s, d) in enumerate(flat):
            terms = [(index[r][f], sign) for f, sign in face_boundary_terms(s)]
            if terms:
                diff[i] = terms
        P.diff[r] = diff
        act = {}
        for w in all_perms(r):
            col = {}
            for i, (s, d) in enumerate(flat):
                s2 = tuple(perm_mul(w, p) for p in s)
                col[i] = [(index[r][s2], 1)]
            act[w] = col
        P.action[r] = act
    for s in range(1, R + 1):
        for t in range(1, R + 2 - s):
            r = s + t - 1
            if r > R or r < 1:
                continue
            for e in range(1, s + 1):
                table = {}
                for i, (su, du) in enumerate(P.basis[s]):
                    for j, (sv, dv) in enumerate(P.basis[t]):
                        terms = []
                        for w, sign in compose_simplices(su, e, sv):
                            terms.append((index[r][w], sign))
                        if terms:
                            table[(i, j)] = terms
                P.comp[(s, e, t)] = table
    return P
