"""Trees, free operads, operads by presentation, operadic suspension.

A labeled tree is a reduced rooted tree (every vertex of arity >= 2) with
leaves 1..r and vertices labeled by basis elements of a graded symmetric
module M.  Canonical form: children of every vertex are ordered by minimal
leaf; the tensor factor order is depth-first preorder.  All Koszul signs are
derived from that single convention: reordering graded factors contributes
the sign of the permutation weighted by degrees, and reordering the inputs
of a vertex acts on its label through the module action.

Trees are nested tuples: a leaf is an int, a vertex is (label_index,
children).  The arity of a vertex label is len(children).

Operads enter in two concrete forms: free operads F(M)(r) spanned by labeled
trees, and GradedOperadTruncation, an arity-truncated operad presented by
explicit basis lists and sparse structure maps (differential, symmetric
group action, partial compositions).  Presentation quotients (associative,
Gerstenhaber) and the operadic suspension produce the latter.
"""

from __future__ import annotations

import itertools
import re

from .exact_linalg import (IntMatrix, smith_normal_form, snf_divisors,
                           solve_integer)


# ---------------------------------------------------------------------------
# permutation helpers (value-sequence convention, 1-based)
# ---------------------------------------------------------------------------

def perm_mul(a, b):
    return tuple(a[b[x] - 1] for x in range(len(b)))


def perm_inv(a):
    out = [0] * len(a)
    for i, v in enumerate(a):
        out[v - 1] = i + 1
    return tuple(out)


def perm_parity(a):
    inv = sum(1 for i in range(len(a)) for j in range(i + 1, len(a))
              if a[i] > a[j])
    return -1 if inv % 2 else 1


def graded_sign(degs_old, new_order):
    """Koszul sign of reordering graded symbols.

    degs_old[i] is the degree of the symbol at old position i; new_order is
    the list of old positions in their new order.
    """
    sign = 1
    for i in range(len(new_order)):
        for j in range(i + 1, len(new_order)):
            if new_order[i] > new_order[j]:
                if degs_old[new_order[i]] % 2 and degs_old[new_order[j]] % 2:
                    sign = -sign
    return sign


# ---------------------------------------------------------------------------
# trees
# ---------------------------------------------------------------------------

def is_leaf(t):
    return isinstance(t, int)


def leaves(t):
    if is_leaf(t):
        return (t,)
    out = []
    for c in t[1]:
        out.extend(leaves(c))
    return tuple(out)


def min_leaf(t):
    return t if is_leaf(t) else min(leaves(t))


def tree_vertices(t):
    """DFS preorder list of (arity, label_index) pairs."""
    if is_leaf(t):
        return []
    out = [(len(t[1]), t[0])]
    for c in t[1]:
        out.extend(tree_vertices(c))
    return out


def tree_weight(t):
    return len(tree_vertices(t))


def is_canonical(t):
    if is_leaf(t):
        return True
    mins = [min_leaf(c) for c in t[1]]
    return mins == sorted(mins) and all(is_canonical(c) for c in t[1])


def relabel(t, f):
    if is_leaf(t):
        return f(t)
    return (t[0], tuple(relabel(c, f) for c in t[1]))


def tree_compose_shape(t1, e, t2):
    """Grafting of bare tree shapes: plug t2 into leaf e of t1, with the
    standard index shifts (t2 leaves j -> e+j-1, t1 leaves i > e -> i+t-1).
    Children stay ordered by minimal leaf, so the result is canonical when
    the inputs are."""
    t = len(leaves(t2))
    t2s = relabel(t2, lambda j: j + e - 1)
    def f(i):
        return i if i < e else i + t - 1
    def plug(u):
        if is_leaf(u):
            return t2s if u == e else f(u)
        return (u[0], tuple(plug(c) for c in u[1]))
    return plug(t1)


def reduced_tree_shapes(leafset):
    """All reduced tree shapes on the given leaf set, labels set to None.

    A shape on >= 2 leaves is a choice of a partition into >= 2 blocks
    (children of the root, ordered by minimal element); singleton blocks are
    leaves, larger blocks are shapes recursively.
    """
    leafset = tuple(sorted(leafset))
    if len(leafset) < 2:
        raise ValueError("need >= 2 leaves")
    out = []
    for part in _set_partitions(leafset):
        if len(part) < 2:
            continue
        part = sorted(part, key=min)
        child_options = []
        for block in part:
            if len(block) == 1:
                child_options.append([block[0]])
            else:
                child_options.append(list(reduced_tree_shapes(block)))
        for combo in itertools.product(*child_options):
            out.append((None, tuple(combo)))
    return out


def _set_partitions(items):
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in _set_partitions(rest):
        for i in range(len(part)):
            yield part[:i] + [(first,) + part[i]] + part[i + 1:]
        yield [(first,)] + part


# ---------------------------------------------------------------------------
# graded symmetric modules (generating objects of free operads)
# ---------------------------------------------------------------------------

class GeneratorModule:
    """Arity-2 generators with a symmetry rule: sym in {+1, -1, "free"}.

    A "free" generator spans a copy of Z[Sigma_2] (basis: g, tau g); a
    symmetric one spans Z with tau acting by the stated sign.
    """

    def __init__(self, generators):
        self.generators = list(generators)
        self._basis = []
        for gi, (name, arity, deg, sym) in enumerate(self.generators):
            if arity != 2:
                raise ValueError("only arity-2 generators are supported")
            if sym == "free":
                self._basis.append((gi, 0, deg, name))
                self._basis.append((gi, 1, deg, name + "~"))
            else:
                self._basis.append((gi, None, deg, name))

    def arities(self):
        return (2,)

    def dims(self, k):
        return len(self._basis) if k == 2 else 0

    def degree(self, k, idx):
        return self._basis[idx][2]

    def label(self, k, idx):
        return self._basis[idx][3]

    def index_of(self, name):
        for i, b in enumerate(self._basis):
            if b[3] == name:
                return i
        raise KeyError(name)

    def act(self, k, w, idx):
        if w == (1, 2):
            return [(idx, 1)]
        gi, tw, deg, name = self._basis[idx]
        sym = self.generators[gi][3]
        if sym == "free":
            other = idx + 1 if tw == 0 else idx - 1
            return [(other, 1)]
        return [(idx, 1 if sym == "+1" or sym == 1 else -1)]


# ---------------------------------------------------------------------------
# free operad chains
# ---------------------------------------------------------------------------

class FreeOperad:
    """Chains in the free operad F(M)(r) for a graded symmetric module M.

    M must provide dims(k), degree(k, idx), act(k, w, idx) -> [(idx, coeff)].
    Chains are dicts {canonical labeled tree: coefficient}.
    """

    def __init__(self, module):
        self.M = module

    def tree_degree(self, t):
        return sum(self.M.degree(k, i) for (k, i) in tree_vertices(t))

    # -- canonicalization ---------------------------------------------------

    def canonicalize(self, raw, coeff=1):
        """Chain equal to a raw tree whose children may be out of order.

        The Koszul sign compares the raw preorder of the vertices with their
        preorder after sorting; re-ordering the inputs of a vertex acts on
        its label through the module action.
        """
        annotated = self._annotate(raw, _Counter())
        old = tree_vertices(raw)
        degs = [self.M.degree(k, i) for (k, i) in old]
        shape, new_vertices = self._sort_annotated(annotated)
        order = [vid for (vid, _, _, _) in new_vertices]
        koszul = graded_sign(degs, order)
        per_vertex = []
        for (vid, k, idx, g) in new_vertices:
            per_vertex.append([(idx, 1)] if g == tuple(range(1, k + 1))
                              else self.M.act(k, g, idx))
        out = {}
        for combo in itertools.product(*per_vertex):
            c = coeff * koszul
            for (_, cc) in combo:
                c *= cc
            t = self._fill_labels(shape, iter(combo))
            if c:
                out[t] = out.get(t, 0) + c
        return {t: c for t, c in out.items() if c}

    def _annotate(self, t, counter):
        """Tag each vertex with its position in the raw preorder."""
        vid = counter.next()
        children = tuple(c if is_leaf(c) else self._annotate(c, counter)
                         for c in t[1])
        return (vid, t[0], children)

    def _sort_annotated(self, t):
        vid, idx, children = t
        k = len(children)
        entries = sorted((min_leaf(c if is_leaf(c) else self._strip(c)), pos, c)
                         for pos, c in enumerate(children, start=1))
        rho = tuple(pos for (_, pos, _) in entries)
        g = perm_inv(rho)
        new_children = []
        vertices = [(vid, k, idx, g)]
        for (_, _, c) in entries:
            if is_leaf(c):
                new_children.append(c)
            else:
                sub, sub_vertices = self._sort_annotated(c)
                new_children.append(sub)
                vertices.extend(sub_vertices)
        return (None, tuple(new_children)), vertices

    def _strip(self, t):
        vid, idx, children = t
        return (idx, tuple(c if is_leaf(c) else self._strip(c)
                           for c in children))

    def _fill_labels(self, shape, label_iter):
        idx, _ = next(label_iter)
        children = []
        for c in shape[1]:
            if is_leaf(c):
                children.append(c)
            else:
                children.append(self._fill_labels(c, label_iter))
        return (idx, tuple(children))

    # -- operations on chains ------------------------------------------------

    def act(self, w, chain):
        """Symmetric group action: relabel leaves through w, recanonicalize."""
        out = {}
        for t, c in chain.items():
            raw = relabel(t, lambda l: w[l - 1])
            for t2, c2 in self.canonicalize(raw, c).items():
                v = out.get(t2, 0) + c2
                if v:
                    out[t2] = v
                else:
                    del out[t2]
        return out

    def graft_tree(self, t1, e, t2):
        """Standard partial composite of canonical trees: (tree, sign).

        The sign interleaves the factors of t2 into t1's preorder at the
        position of leaf e.
        """
        if is_leaf(t1):
            raise ValueError("cannot graft into a bare leaf")
        res = tree_compose_shape(t1, e, t2)
        after = self._degrees_after_leaf(t1, e)
        d2 = self.tree_degree(t2) if not is_leaf(t2) else 0
        sign = -1 if (d2 % 2 and sum(after) % 2) else 1
        return res, sign

    def _degrees_after_leaf(self, t, e):
        """Degrees of the vertices strictly after leaf e in DFS preorder."""
        found = [False]
        out = []

        def walk(u):
            if is_leaf(u):
                if u == e:
                    found[0] = True
                return
            if found[0]:
                out.append(self.M.degree(len(u[1]), u[0]))
            else:
                out.append(None)
            for c in u[1]:
                walk(c)

        walk(t)
        return [d for d in out if d is not None]

    def graft(self, ch1, e, ch2):
        out = {}
        for t1, c1 in ch1.items():
            for t2, c2 in ch2.items():
                t, sign = self.graft_tree(t1, e, t2)
                v = out.get(t, 0) + sign * c1 * c2
                if v:
                    out[t] = v
                else:
                    del out[t]
        return out

    def corolla(self, r, idx):
        return (idx, tuple(range(1, r + 1)))

    # -- enumeration ----------------------------------------------------------

    def component(self, r, weight=None):
        """Canonical labeled trees on leaves 1..r, optionally of fixed vertex
        count.  F_0 is empty here (arity-r component of the unit is only
        nonzero for r = 1 and carries no tree)."""
        out = []
        for shape in sorted(reduced_tree_shapes(tuple(range(1, r + 1))),
                            key=_shape_key):
            if weight is not None and shape_weight(shape) != weight:
                continue
            slots = shape_slots(shape)
            ranges = [range(self.M.dims(k)) for k in slots]
            for combo in itertools.product(*ranges):
                it = iter(combo)
                out.append(self._fill(shape, it))
        return out

    def _fill(self, shape, it):
        if is_leaf(shape):
            return shape
        idx = next(it)
        return (idx, tuple(self._fill(c, it) for c in shape[1]))


def shape_weight(shape):
    if is_leaf(shape):
        return 0
    return 1 + sum(shape_weight(c) for c in shape[1])


def shape_slots(shape):
    if is_leaf(shape):
        return []
    out = [len(shape[1])]
    for c in shape[1]:
        out.extend(shape_slots(c))
    return out


class _Counter:
    def __init__(self):
        self.n = -1

    def next(self):
        self.n += 1
        return self.n


def _shape_key(shape):
    return repr(shape)


# ---------------------------------------------------------------------------
# arity-truncated operads with explicit structure maps
# ---------------------------------------------------------------------------

class GradedOperadTruncation:
    """Operad data up to a fixed arity bound R.

    basis[r]: ordered list of (label, degree); diff[r]: {col: [(row, c)]}
    for the internal differential; action[r]: {perm: {col: [(row, c)]}};
    comp[(s, e, t)]: {(i, j): [(k, c)]} for the partial composite of basis
    elements i in arity s and j in arity t at slot e.
    """

    def __init__(self, R):
        self.R = R
        self.basis = {}
        self.diff = {}
        self.action = {}
        self.comp = {}

    def dim(self, r):
        return len(self.basis.get(r, ()))

    def degree(self, r, i):
        return self.basis[r][i][1]

    def degrees(self, r):
        return [d for (_, d) in self.basis.get(r, ())]

    def by_degree(self, r):
        out = {}
        for i, (_, d) in enumerate(self.basis.get(r, ())):
            out.setdefault(d, []).append(i)
        return out

    def compose_vec(self, s, e, t, u, v):
        """Bilinear composite of sparse vectors u (arity s), v (arity t)."""
        table = self.comp[(s, e, t)]
        out = {}
        for i, a in u.items():
            for j, b in v.items():
                for k, c in table.get((i, j), ()):
                    w = out.get(k, 0) + a * b * c
                    if w:
                        out[k] = w
                    else:
                        del out[k]
        return out

    def act_vec(self, r, w, u):
        col = self.action[r][w]
        out = {}
        for i, a in u.items():
            for k, c in col[i]:
                v = out.get(k, 0) + a * c
                if v:
                    out[k] = v
                else:
                    del out[k]
        return out

    def diff_vec(self, r, u):
        table = self.diff.get(r, {})
        out = {}
        for i, a in u.items():
            for k, c in table.get(i, ()):
                v = out.get(k, 0) + a * c
                if v:
                    out[k] = v
                else:
                    del out[k]
        return out

    def chain_complex(self, r):
        from .exact_linalg import ChainComplex
        bd = self.by_degree(r)
        pos = {}
        for d, idxs in bd.items():
            for p, i in enumerate(idxs):
                pos[i] = (d, p)
        basis = {d: [self.basis[r][i][0] for i in idxs] for d, idxs in bd.items()}
        diff = {}
        for d, idxs in bd.items():
            ent = {}
            for p, i in enumerate(idxs):
                for (k, c) in self.diff.get(r, {}).get(i, ()):
                    dd, pp = pos[k]
                    if dd != d - 1:
                        raise ValueError("differential is not of degree -1")
                    ent[(pp, p)] = c
            if d - 1 in bd or ent:
                diff[d] = IntMatrix(len(bd.get(d - 1, ())), len(idxs), ent)
        return ChainComplex(basis, diff)


def suspension_step(P, down=False):
    """One operadic suspension Lambda (or its inverse): degree shift by
    +-(1-r) in arity r, signature twist of the action, Koszul signs on the
    compositions, global sign on the differential."""
    Q = GradedOperadTruncation(P.R)
    shift = -1 if down else 1
    for r, basis in P.basis.items():
        Q.basis[r] = [(lab, d + shift * (1 - r)) for (lab, d) in basis]
    for r in P.basis:
        sgn_r = -1 if (r - 1) % 2 else 1
        Q.diff[r] = {i: [(k, sgn_r * c) for (k, c) in terms]
                     for i, terms in P.diff.get(r, {}).items()}
        Q.action[r] = {}
        for w, col in P.action[r].items():
            s = perm_parity(w)
            Q.action[r][w] = {i: [(k, s * c) for (k, c) in terms]
                              for i, terms in col.items()}
    for (s, e, t), table in P.comp.items():
        out = {}
        for (i, j), terms in table.items():
            # sign uses the degree of the left factor in the unsuspended
            # source for Lambda, in the shifted target for Lambda^{-1}
            du = P.degree(s, i) + (shift * (1 - s) if down else 0)
            sgn = -1 if ((t - 1) % 2 and (e - 1 + du) % 2) else 1
            out[(i, j)] = [(k, sgn * c) for (k, c) in terms]
        Q.comp[(s, e, t)] = out
    return Q


def operadic_suspension(P, k):
    Q = P
    for _ in range(abs(k)):
        Q = suspension_step(Q, down=(k < 0))
    return Q


def evaluate_tree(P, tree, images=None, arity_of_leafset=None):
    """Evaluate a canonical labeled tree in a truncation P.

    Labels index P's bases directly; images, when given, maps (arity, idx)
    to a sparse vector in P(arity) replacing the label (same degree).
    Returns a sparse vector in P(r).
    """
    def value(node):
        # returns (sparse vec, sorted leaf tuple)
        k = len(node[1])
        idx = node[0]
        if images is None:
            val = {idx: 1}
        else:
            val = dict(images(k, idx))
        s_cur = k
        offset = 0
        blocks = []
        for pos, c in enumerate(node[1], start=1):
            if is_leaf(c):
                blocks.append((c,))
                continue
            sub, sub_leaves = value(c)
            t = len(sub_leaves)
            val = P.compose_vec(s_cur, pos + offset, t, val, sub)
            s_cur += t - 1
            offset += t - 1
            blocks.append(sub_leaves)
        leafs = tuple(sorted(x for b in blocks for x in b))
        rank = {l: i + 1 for i, l in enumerate(leafs)}
        psi = tuple(rank[x] for b in blocks for x in b)
        if psi != tuple(range(1, len(leafs) + 1)):
            val = P.act_vec(len(leafs), psi, val)
        return val, leafs

    v, lf = value(tree)
    return v


# ---------------------------------------------------------------------------
# presentations
# ---------------------------------------------------------------------------

class Presentation:
    def __init__(self, module, relations):
        self.module = module
        self.relations = relations  # list of (arity, chain over FreeOperad)


_GEN_RE = re.compile(r"^gen\s+(\w+)\s+(\d+)\s+(-?\d+)\s+sym=([+\-]?1|free)$")


def parse_presentation(text):
    """Declarative presentation format.

    Generator lines: "gen name arity degree sym=<+1|-1|free>".
    Relation lines: signed sums of tree expressions such as
    "mu(mu(1,2),3) - mu(1,mu(2,3))".
    """
    gens = []
    rel_lines = []
    for line in text.strip().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        m = _GEN_RE.match(line)
        if m:
            name, arity, deg, sym = m.groups()
            gens.append((name, int(arity), int(deg), sym if sym == "free" else
                         ("+1" if sym in ("1", "+1") else "-1")))
        else:
            rel_lines.append(line)
    module = GeneratorModule(gens)
    F = FreeOperad(module)
    relations = []
    for line in rel_lines:
        chain, arity = _parse_relation(line, module, F)
        relations.append((arity, chain))
    return Presentation(module, relations)


def _parse_relation(line, module, F):
    terms = _split_terms(line)
    total = {}
    arity = None
    for sign, expr in terms:
        raw, leafset = _parse_expr(expr, module)
        r = len(leafset)
        if sorted(leafset) != list(range(1, r + 1)):
            raise ValueError(f"leaves of {expr!r} are not 1..{r}")
        if arity is None:
            arity = r
        elif arity != r:
            raise ValueError("mixed arities in relation")
        for t, c in F.canonicalize(raw, sign).items():
            v = total.get(t, 0) + c
            if v:
                total[t] = v
            else:
                del total[t]
    return total, arity


def _split_terms(line):
    out = []
    i, n = 0, len(line)
    sign = 1
    while i < n:
        ch = line[i]
        if ch in "+-":
            sign = 1 if ch == "+" else -1
            i += 1
        elif ch.isspace():
            i += 1
        else:
            depth = 0
            j = i
            while j < n:
                if line[j] == "(":
                    depth += 1
                elif line[j] == ")":
                    depth -= 1
                elif line[j] in "+-" and depth == 0:
                    break
                j += 1
            out.append((sign, line[i:j].strip()))
            sign = 1
            i = j
    return out


def _parse_expr(expr, module):
    expr = expr.strip()
    if expr.isdigit():
        return int(expr), (int(expr),)
    m = re.match(r"^(\w+)\((.*)\)$", expr)
    if not m:
        raise ValueError(f"cannot parse {expr!r}")
    name, inner = m.groups()
    args = []
    depth = 0
    start = 0
    for i, ch in enumerate(inner):
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        elif ch == "," and depth == 0:
            args.append(inner[start:i])
            start = i + 1
    args.append(inner[start:])
    children = []
    leafset = []
    for a in args:
        sub, lf = _parse_expr(a, module)
        children.append(sub)
        leafset.extend(lf)
    return (module.index_of(name), tuple(children)), tuple(leafset)


ASSOCIATIVE_PRESENTATION = """
gen mu 2 0 sym=free
mu(mu(1,2),3) - mu(1,mu(2,3))
"""


def gerstenhaber_presentation(n):
    """Product of degree 0 and bracket of degree n-1 with associativity,
    Jacobi and distribution relations."""
    sym = "+1" if n % 2 == 0 else "-1"
    return f"""
gen mu 2 0 sym=+1
gen lam 2 {n - 1} sym={sym}
mu(mu(1,2),3) - mu(1,mu(2,3))
lam(lam(1,2),3) + lam(lam(2,3),1) + lam(lam(3,1),2)
lam(mu(1,2),3) - mu(lam(1,3),2) - mu(1,lam(2,3))
"""


def ideal_rows(pres, r):
    """Spanning set of the arity-r component of the operadic ideal generated
    by the relations, as chains in F(M)(r).

    Saturation: symmetric group orbits of the relations, closed under partial
    composition with generators on either side while the arity stays <= r.
    """
    F = FreeOperad(pres.module)
    by_arity = {}
    for arity, chain in pres.relations:
        by_arity.setdefault(arity, []).append(chain)
    if not by_arity:
        return []
    for a in range(min(by_arity), r + 1):
        # symmetric group orbit closure at this arity
        closed = []
        seen = set()
        frontier = list(by_arity.get(a, []))
        while frontier:
            ch = frontier.pop()
            if not ch:
                continue
            key = tuple(sorted(ch.items(), key=repr))
            if key in seen:
                continue
            seen.add(key)
            closed.append(ch)
            for w in itertools.permutations(range(1, a + 1)):
                frontier.append(F.act(w, ch))
        by_arity[a] = closed
        # grow by one arity: compose with generators on either side
        if a + 1 <= r:
            grown = by_arity.setdefault(a + 1, [])
            gens = [{F.corolla(2, gi): 1} for gi in range(pres.module.dims(2))]
            for ch in closed:
                for g in gens:
                    for e in range(1, a + 1):
                        grown.append(F.graft(ch, e, g))
                    for e in (1, 2):
                        grown.append(F.graft(g, e, ch))
    return by_arity.get(r, [])


class QuotientComponent:
    """One arity component of a presentation quotient, per degree.

    Exposes graded ranks and torsion, a representative basis (vectors in the
    free-operad tree basis), and a reduction map used to assemble structure
    matrices on the quotient.
    """

    def __init__(self, pres, r):
        self.pres = pres
        self.r = r
        F = FreeOperad(pres.module)
        self.F = F
        self.trees = F.component(r) if r >= 2 else []
        self.tree_pos = {t: i for i, t in enumerate(self.trees)}
        self.tree_deg = [F.tree_degree(t) for t in self.trees]
        rows_by_deg = {}
        for ch in ideal_rows(pres, r):
            if not ch:
                continue
            d = F.tree_degree(next(iter(ch)))
            vec = {}
            for t, c in ch.items():
                vec[self.tree_pos[t]] = c
            rows_by_deg.setdefault(d, []).append(vec)
        self.ranks = {}
        self.torsion = {}
        self._red = {}
        degs = sorted(set(self.tree_deg))
        for d in degs:
            cols = [i for i, dd in enumerate(self.tree_deg) if dd == d]
            cpos = {c: k for k, c in enumerate(cols)}
            rows = rows_by_deg.get(d, [])
            M = IntMatrix(len(rows), len(cols),
                          {(i, cpos[j]): v for i, row in enumerate(rows)
                           for j, v in row.items()})
            divs = snf_divisors(M)
            rank_ideal = len(divs)
            self.ranks[d] = len(cols) - rank_ideal
            self.torsion[d] = sorted(v for v in divs if v > 1)
            U, D, V = smith_normal_form(M)
            self._red[d] = (cols, cpos, V, rank_ideal, divs)

    def graded_ranks(self):
        return {d: k for d, k in sorted(self.ranks.items()) if k}

    def total_rank(self):
        return sum(self.ranks.values())

    def has_torsion(self):
        return any(self.torsion.values())

    def reduce(self, vec):
        """Quotient coordinates of a sparse vector over the tree basis.

        Requires the quotient to be torsion-free in the degrees touched.
        Coordinates are indexed (degree, j) over the free part.
        """
        by_deg = {}
        for i, v in vec.items():
            by_deg.setdefault(self.tree_deg[i], {})[i] = v
        out = {}
        for d, sub in by_deg.items():
            cols, cpos, V, rank_ideal, divs = self._red[d]
            if any(x > 1 for x in divs):
                raise ValueError("torsion in quotient; no canonical reduction")
            x = [0] * len(cols)
            for i, v in sub.items():
                x[cpos[i]] = v
            y = [0] * len(cols)
            for jj in range(len(cols)):
                acc = 0
                for ii in range(len(cols)):
                    if x[ii]:
                        acc += x[ii] * V[(ii, jj)]
                y[jj] = acc
            for j in range(rank_ideal, len(cols)):
                if y[j]:
                    out[(d, j - rank_ideal)] = y[j]
        return out

    def section_vec(self, d, j):
        """Tree-basis representative of quotient coordinate (d, j)."""
        cols, cpos, V, rank_ideal, divs = self._red[d]
        n = len(cols)
        # row (rank_ideal + j) of V^{-1}
        target = [0] * n
        target[rank_ideal + j] = 1
        Vt = V.transpose()
        status, xrow = solve_integer(Vt, target)
        if status != "solution":
            raise RuntimeError("unimodular solve failed")
        return {cols[i]: v for i, v in enumerate(xrow) if v}


def presentation_truncation(pres, R):
    """The quotient operad as a GradedOperadTruncation up to arity R.

    Torsion-free quotients only (checked); the differential is zero.
    """
    comps = {r: QuotientComponent(pres, r) for r in range(2, R + 1)}
    for r, q in comps.items():
        if q.has_torsion():
            raise ValueError(f"torsion in quotient at arity {r}: {q.torsion}")
    P = GradedOperadTruncation(R)
    F = FreeOperad(pres.module)
    P.basis[1] = [("1", 0)]
    P.diff[1] = {}
    P.action[1] = {(1,): {0: [(0, 1)]}}
    key_index = {}
    for r, q in comps.items():
        keys = sorted(k for d in q.ranks for k in
                      [(d, j) for j in range(q.ranks[d])])
        key_index[r] = {k: i for i, k in enumerate(keys)}
        P.basis[r] = [((r, k), k[0]) for k in keys]
        P.diff[r] = {}
    # sections as tree chains
    section = {}
    for r, q in comps.items():
        for k, i in key_index[r].items():
            vec = q.section_vec(*k)
            section[(r, i)] = {q.trees[c]: v for c, v in vec.items()}
    for r, q in comps.items():
        P.action[r] = {}
        for w in itertools.permutations(range(1, r + 1)):
            col = {}
            for i in range(P.dim(r)):
                acted = q.F.act(w, section[(r, i)])
                red = q.reduce({q.tree_pos[t]: c for t, c in acted.items()})
                col[i] = [(key_index[r][k], c) for k, c in sorted(red.items())]
            P.action[r][w] = col
    for s in range(1, R + 1):
        for t in range(1, R + 2 - s):
            r = s + t - 1
            if r > R:
                continue
            for e in range(1, s + 1):
                table = {}
                if s == 1 or t == 1:
                    other = t if s == 1 else s
                    if other == 1:
                        table[(0, 0)] = [(0, 1)]
                    else:
                        for i in range(P.dim(other)):
                            table[(0, i) if s == 1 else (i, 0)] = [(i, 1)]
                    P.comp[(s, e, t)] = table
                    continue
                qr = comps[r]
                for i in range(P.dim(s)):
                    for j in range(P.dim(t)):
                        gr = FreeOperad(pres.module).graft(
                            section[(s, i)], e, section[(t, j)])
                        red = qr.reduce({qr.tree_pos[tt]: c
                                         for tt, c in gr.items()})
                        terms = [(key_index[r][k], c)
                                 for k, c in sorted(red.items())]
                        if terms:
                            table[(i, j)] = terms
                P.comp[(s, e, t)] = table
    return P


# ---------------------------------------------------------------------------
# operad axiom checks
# ---------------------------------------------------------------------------

def check_truncation_axioms(P, rng, samples=200):
    """Sequential associativity, unit laws, equivariance and the chain-map
    property of the compositions, on random basis elements."""
    R = P.R
    failures = []

    def rand_idx(r):
        return rng.randrange(P.dim(r))

    for _ in range(samples):
        # nested associativity: (a o_i b) o_{i+k-1} c = a o_i (b o_k c)
        s = rng.randint(2, R - 1) if R >= 3 else 2
        t = rng.randint(2, R + 1 - s)
        rem = R + 1 - s - t + 1
        u = rng.randint(1, max(1, rem))
        if s + t + u - 2 > R:
            continue
        a, b, c = {rand_idx(s): 1}, {rand_idx(t): 1}, {rand_idx(u): 1}
        i = rng.randint(1, s)
        k = rng.randint(1, t)
        lhs = P.compose_vec(s + t - 1, i + k - 1, u,
                            P.compose_vec(s, i, t, a, b), c)
        rhs = P.compose_vec(s, i, t + u - 1, a, P.compose_vec(t, k, u, b, c))
        if lhs != rhs:
            failures.append(("nested", s, t, u, i, k, a, b, c))
    for _ in range(samples):
        # parallel associativity with the Koszul sign
        s = R - 1 if R >= 3 else 2
        if s < 2:
            break
        t = u = 2
        if s + t + u - 2 > R:
            s = R + 2 - t - u
        if s < 2:
            break
        a, b, c = {rand_idx(s): 1}, {rand_idx(t): 1}, {rand_idx(u): 1}
        if s < 2:
            continue
        i = rng.randint(1, s - 1)
        j = rng.randint(i + 1, s)
        lhs = P.compose_vec(s + t - 1, j + t - 1, u,
                            P.compose_vec(s, i, t, a, b), c)
        inner = P.compose_vec(s, j, u, a, c)
        rhs = P.compose_vec(s + u - 1, i, t, inner, b)
        db = P.degree(t, next(iter(b)))
        dc = P.degree(u, next(iter(c)))
        sgn = -1 if (db % 2 and dc % 2) else 1
        rhs = {k2: sgn * v for k2, v in rhs.items()}
        if lhs != rhs:
            failures.append(("parallel", s, t, u, i, j))
    for _ in range(samples):
        # units
        s = rng.randint(2, R)
        a = {rand_idx(s): 1}
        e = rng.randint(1, s)
        if P.compose_vec(s, e, 1, a, {0: 1}) != a:
            failures.append(("right unit", s, e, a))
        if P.compose_vec(1, 1, s, {0: 1}, a) != a:
            failures.append(("left unit", s, a))
    for _ in range(samples):
        # equivariance: a o_e (w b) = (1 o_e w)(a o_e b)
        # and (w a) o_e b = (w o_e 1)(a o_{w^{-1}(e)} b)
        s = rng.randint(2, R - 1)
        t = rng.randint(2, R + 1 - s)
        a, b = {rand_idx(s): 1}, {rand_idx(t): 1}
        e = rng.randint(1, s)
        wt = tuple(rng.sample(range(1, t + 1), t))
        ws = tuple(rng.sample(range(1, s + 1), s))
        from .complete_graph import subst_perm as _sp
        lhs = P.compose_vec(s, e, t, a, P.act_vec(t, wt, b))
        rhs = P.act_vec(s + t - 1, _sp(tuple(range(1, s + 1)), e, wt),
                        P.compose_vec(s, e, t, a, b))
        if lhs != rhs:
            failures.append(("equivariance right", s, t, e, wt))
        lhs = P.compose_vec(s, e, t, P.act_vec(s, ws, a), b)
        rhs = P.act_vec(s + t - 1, _sp(ws, e, tuple(range(1, t + 1))),
                        P.compose_vec(s, perm_inv(ws)[e - 1], t, a, b))
        if lhs != rhs:
            failures.append(("equivariance left", s, t, e, ws))
    for _ in range(samples):
        # chain map in each slot
        s = rng.randint(2, R - 1)
        t = rng.randint(2, R + 1 - s)
        a, b = {rand_idx(s): 1}, {rand_idx(t): 1}
        e = rng.randint(1, s)
        da = P.degree(s, next(iter(a)))
        lhs = P.diff_vec(s + t - 1, P.compose_vec(s, e, t, a, b))
        rhs = P.compose_vec(s, e, t, P.diff_vec(s, a), b)
        sgn = -1 if da % 2 else 1
        for k2, v in P.compose_vec(s, e, t, a, P.diff_vec(t, b)).items():
            w = rhs.get(k2, 0) + sgn * v
            if w:
                rhs[k2] = w
            else:
                del rhs[k2]
        if lhs != rhs:
            failures.append(("chain map", s, t, e, a, b))
    return failures
