"""Exact linear algebra over Z and F_p.

Sparse integer matrices with arbitrary-precision entries, Smith and Hermite
normal forms, exact linear solving with unsolvability certificates, saturated
kernel lattices, chain complexes and their homology (Betti numbers plus
torsion coefficients).  Everything downstream (simplex enumeration, cells,
cobar complexes, obstruction solving) reduces its verification to this module,
so the contract is: no floating point, deterministic output for a fixed input.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field


class ResourceCapError(RuntimeError):
    """Raised when a computation would exceed a configured size cap."""


# ---------------------------------------------------------------------------
# sparse integer matrices
# ---------------------------------------------------------------------------

class IntMatrix:
    """Immutable sparse matrix over Z.

    Entries are stored as a dict {(row, col): value} with no explicit zeros.
    Rows and columns are 0-indexed.
    """

    __slots__ = ("rows", "cols", "entries")

    def __init__(self, rows, cols, entries=None):
        self.rows = rows
        self.cols = cols
        ent = {}
        if entries:
            for (i, j), v in entries.items():
                if v == 0:
                    continue
                if not (0 <= i < rows and 0 <= j < cols):
                    raise IndexError(f"entry ({i},{j}) out of bounds {rows}x{cols}")
                ent[(i, j)] = v
        self.entries = ent

    @classmethod
    def identity(cls, n):
        return cls(n, n, {(i, i): 1 for i in range(n)})

    @classmethod
    def zero(cls, rows, cols):
        return cls(rows, cols)

    @classmethod
    def from_rows(cls, rows_list, cols=None):
        """Build from a list of dense rows (lists of ints)."""
        rows = len(rows_list)
        if cols is None:
            cols = len(rows_list[0]) if rows_list else 0
        ent = {}
        for i, row in enumerate(rows_list):
            for j, v in enumerate(row):
                if v:
                    ent[(i, j)] = v
        return cls(rows, cols, ent)

    def __getitem__(self, key):
        return self.entries.get(key, 0)

    def __eq__(self, other):
        return (isinstance(other, IntMatrix) and self.rows == other.rows
                and self.cols == other.cols and self.entries == other.entries)

    def __hash__(self):
        return hash((self.rows, self.cols, tuple(sorted(self.entries.items()))))

    def __repr__(self):
        return f"IntMatrix({self.rows}x{self.cols}, nnz={len(self.entries)})"

    def is_zero(self):
        return not self.entries

    def transpose(self):
        return IntMatrix(self.cols, self.rows,
                         {(j, i): v for (i, j), v in self.entries.items()})

    def scale(self, c):
        return IntMatrix(self.rows, self.cols,
                         {k: c * v for k, v in self.entries.items()})

    def add(self, other):
        if (self.rows, self.cols) != (other.rows, other.cols):
            raise ValueError("shape mismatch")
        ent = dict(self.entries)
        for k, v in other.entries.items():
            w = ent.get(k, 0) + v
            if w:
                ent[k] = w
            else:
                ent.pop(k, None)
        return IntMatrix(self.rows, self.cols, ent)

    def mul(self, other):
        if self.cols != other.rows:
            raise ValueError(f"shape mismatch {self.rows}x{self.cols} * "
                             f"{other.rows}x{other.cols}")
        rows_of_other = {}
        for (i, j), v in other.entries.items():
            rows_of_other.setdefault(i, []).append((j, v))
        acc = {}
        for (i, k), v in self.entries.items():
            for j, w in rows_of_other.get(k, ()):
                key = (i, j)
                s = acc.get(key, 0) + v * w
                if s:
                    acc[key] = s
                else:
                    del acc[key]
        return IntMatrix(self.rows, other.cols, acc)

    def apply(self, vec):
        """Matrix times a dense column vector (list of ints)."""
        if len(vec) != self.cols:
            raise ValueError("vector length mismatch")
        out = [0] * self.rows
        for (i, j), v in self.entries.items():
            if vec[j]:
                out[i] += v * vec[j]
        return out

    def column(self, j):
        return {i: v for (i, jj), v in self.entries.items() if jj == j}

    def dense_rows(self):
        out = [[0] * self.cols for _ in range(self.rows)]
        for (i, j), v in self.entries.items():
            out[i][j] = v
        return out

    def det_abs(self):
        """|det| of a square matrix, via fraction-free elimination."""
        if self.rows != self.cols:
            raise ValueError("not square")
        d, rank = _snf_divisors(self)
        if rank < self.rows:
            return 0
        p = 1
        for v in d:
            p *= v
        return abs(p)

    def row_dicts(self):
        rows = {}
        for (i, j), v in self.entries.items():
            rows.setdefault(i, {})[j] = v
        return rows

    # plain triplet text format: "rows cols\nr c v\n..."
    def to_triplet_text(self):
        lines = [f"{self.rows} {self.cols}"]
        for (i, j) in sorted(self.entries):
            lines.append(f"{i} {j} {self.entries[(i, j)]}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_triplet_text(cls, text):
        lines = [ln for ln in text.strip().splitlines() if ln.strip()]
        r, c = map(int, lines[0].split())
        ent = {}
        for ln in lines[1:]:
            i, j, v = ln.split()
            ent[(int(i), int(j))] = int(v)
        return cls(r, c, ent)


def stack_rows(mats):
    """Vertical concatenation of matrices with equal column counts."""
    cols = mats[0].cols
    ent = {}
    off = 0
    for m in mats:
        if m.cols != cols:
            raise ValueError("column mismatch in stack")
        for (i, j), v in m.entries.items():
            ent[(i + off, j)] = v
        off += m.rows
    return IntMatrix(off, cols, ent)


# ---------------------------------------------------------------------------
# Smith normal form
# ---------------------------------------------------------------------------

class _Sparse:
    """Mutable sparse workspace with row and column indexes."""

    __slots__ = ("rows", "cols", "row", "colidx")

    def __init__(self, mat):
        self.rows = mat.rows
        self.cols = mat.cols
        self.row = {}
        self.colidx = {}
        for (i, j), v in mat.entries.items():
            self.row.setdefault(i, {})[j] = v
            self.colidx.setdefault(j, set()).add(i)

    def set_entry(self, i, j, v):
        r = self.row.setdefault(i, {})
        if v:
            if j not in r:
                self.colidx.setdefault(j, set()).add(i)
            r[j] = v
        else:
            if j in r:
                del r[j]
                self.colidx[j].discard(i)

    def get(self, i, j):
        return self.row.get(i, {}).get(j, 0)

    def add_row(self, src, dst, c):
        # row[dst] += c * row[src]
        if c == 0:
            return
        for j, v in list(self.row.get(src, {}).items()):
            self.set_entry(dst, j, self.get(dst, j) + c * v)

    def add_col(self, src, dst, c):
        if c == 0:
            return
        for i in list(self.colidx.get(src, set())):
            v = self.get(i, src)
            self.set_entry(i, dst, self.get(i, dst) + c * v)

    def swap_rows(self, a, b):
        if a == b:
            return
        ra = self.row.get(a, {})
        rb = self.row.get(b, {})
        for j in set(ra) | set(rb):
            idx = self.colidx.setdefault(j, set())
            ina, inb = j in ra, j in rb
            if ina and not inb:
                idx.discard(a)
                idx.add(b)
            elif inb and not ina:
                idx.discard(b)
                idx.add(a)
        self.row[a], self.row[b] = rb, ra

    def swap_cols(self, a, b):
        if a == b:
            return
        ia = self.colidx.get(a, set())
        ib = self.colidx.get(b, set())
        for i in ia | ib:
            r = self.row[i]
            va, vb = r.get(a), r.get(b)
            if va is None:
                del r[b]
                r[a] = vb
            elif vb is None:
                del r[a]
                r[b] = va
            else:
                r[a], r[b] = vb, va
        self.colidx[a], self.colidx[b] = ib, ia

    def negate_row(self, i):
        for j in self.row.get(i, {}):
            self.row[i][j] = -self.row[i][j]

    def nonzero_in_block(self, k):
        for i in sorted(self.row):
            if i < k:
                continue
            for j in self.row[i]:
                if j >= k:
                    return True
        return False

    def pick_pivot(self, k):
        """Smallest |value| in the trailing block, ties by fewest fill then
        by (row, col) for determinism."""
        best = None
        for i in sorted(self.row):
            if i < k:
                continue
            for j, v in self.row[i].items():
                if j < k:
                    continue
                cost = (abs(v), len(self.row[i]) * len(self.colidx.get(j, ())), i, j)
                if best is None or cost < best[0]:
                    best = (cost, i, j)
                    if abs(v) == 1 and cost[1] <= 4:
                        return i, j
        return (best[1], best[2]) if best else None


def smith_normal_form(A, want_transforms=True):
    """Smith normal form U*A*V = D.

    Returns (U, D, V) with U, V unimodular and D diagonal with each diagonal
    entry dividing the next.  Deterministic: pivots are chosen by minimal
    absolute value, then minimal fill, then position.
    """
    w = _Sparse(A)
    m, n = A.rows, A.cols
    # transforms as row-op recordings
    U = _Sparse(IntMatrix.identity(m)) if want_transforms else None
    V = _Sparse(IntMatrix.identity(n)) if want_transforms else None

    k = 0
    limit = min(m, n)
    while k < limit:
        piv = w.pick_pivot(k)
        if piv is None:
            break
        pi, pj = piv
        w.swap_rows(k, pi)
        w.swap_cols(k, pj)
        if U is not None:
            U.swap_rows(k, pi)
            V.swap_cols(k, pj)
        while True:
            # clear column k below/above, then row k
            a = w.get(k, k)
            changed = False
            for i in sorted(w.colidx.get(k, set())):
                if i == k:
                    continue
                v = w.get(i, k)
                q = v // a
                if q:
                    w.add_row(k, i, -q)
                    if U is not None:
                        U.add_row(k, i, -q)
                    changed = True
                if w.get(i, k):
                    # remainder nonzero: swap up to make it the new pivot
                    w.swap_rows(k, i)
                    if U is not None:
                        U.swap_rows(k, i)
                    changed = True
                    break
            if changed:
                continue
            a = w.get(k, k)
            for j in sorted(set(w.row.get(k, {})) - {k}):
                v = w.get(k, j)
                q = v // a
                if q:
                    w.add_col(k, j, -q)
                    if V is not None:
                        V.add_col(k, j, -q)
                    changed = True
                if w.get(k, j):
                    w.swap_cols(k, j)
                    if V is not None:
                        V.swap_cols(k, j)
                    changed = True
                    break
            if not changed:
                break
        # ensure divisibility d_k | trailing entries
        a = w.get(k, k)
        bad = None
        for i in sorted(w.row):
            if i <= k:
                continue
            for j, v in sorted(w.row[i].items()):
                if j > k and v % a:
                    bad = (i, j)
                    break
            if bad:
                break
        if bad:
            w.add_row(bad[0], k, 1)
            if U is not None:
                U.add_row(bad[0], k, 1)
            continue
        if a < 0:
            w.negate_row(k)
            if U is not None:
                U.negate_row(k)
        k += 1

    D = IntMatrix(m, n, {(i, j): v for i, r in w.row.items()
                         for j, v in r.items()})
    if not want_transforms:
        return None, D, None
    Um = IntMatrix(m, m, {(i, j): v for i, r in U.row.items()
                          for j, v in r.items()})
    Vm = IntMatrix(n, n, {(i, j): v for i, r in V.row.items()
                          for j, v in r.items()})
    return Um, D, Vm


def _snf_divisors(A):
    """Diagonal of the SNF (positive divisors) and the rank, no transforms."""
    _, D, _ = smith_normal_form(A, want_transforms=False)
    divs = []
    for k in range(min(A.rows, A.cols)):
        v = D[(k, k)]
        if v == 0:
            break
        divs.append(abs(v))
    return divs, len(divs)


def snf_divisors(A):
    return _snf_divisors(A)[0]


def rank_z(A):
    return _snf_divisors(A)[1]


def rank_mod_p(A, p):
    """Rank of A over the prime field F_p by Gaussian elimination."""
    rows = []
    for i, r in A.row_dicts().items():
        rr = {j: v % p for j, v in r.items() if v % p}
        if rr:
            rows.append(rr)
    rank = 0
    pivots = {}
    for r in rows:
        r = dict(r)
        while r:
            j = min(r)
            if j in pivots:
                pr = pivots[j]
                c = (r[j] * pow(pr[j], p - 2, p)) % p
                for k, v in pr.items():
                    w = (r.get(k, 0) - c * v) % p
                    if w:
                        r[k] = w
                    else:
                        r.pop(k, None)
            else:
                pivots[j] = r
                rank += 1
                break
    return rank


def solve_integer(A, b):
    """Solve A x = b exactly over Z.

    Returns ("solution", x) or ("unsolvable", certificate) where the
    certificate is the SNF row-transform of b exhibiting a residue not
    divisible by the corresponding pivot (or nonzero past the rank).
    """
    if len(b) != A.rows:
        raise ValueError("dimension mismatch")
    U, D, V = smith_normal_form(A)
    c = U.apply(list(b))
    y = [0] * A.cols
    r = min(A.rows, A.cols)
    for k in range(r):
        d = D[(k, k)]
        if d == 0:
            break
        if c[k] % d:
            return "unsolvable", {"row": k, "pivot": d, "residue": c[k]}
        y[k] = c[k] // d
    for k in range(A.rows):
        if k < r and D[(k, k)] != 0:
            continue
        if c[k] != 0:
            return "unsolvable", {"row": k, "pivot": 0, "residue": c[k]}
    x = V.apply(y)
    return "solution", x


def kernel_basis(A):
    """A Z-basis of ker(A), automatically saturated.

    Returns a list of dense vectors of length A.cols.
    """
    _, D, V = smith_normal_form(A)
    r = 0
    for k in range(min(A.rows, A.cols)):
        if D[(k, k)] != 0:
            r += 1
        else:
            break
    basis = []
    for j in range(r, A.cols):
        basis.append([V[(i, j)] for i in range(A.cols)])
    return basis


def row_space_reduce(rows, ncols):
    """Integer row echelon (Hermite-style) reduction of a list of sparse rows.

    Rows are dicts {col: val}.  Returns (pivots, echelon) where pivots maps a
    column to its echelon row.  Used for lattice membership and quotients.
    """
    pivots = {}
    for r in rows:
        r = {j: v for j, v in r.items() if v}
        while r:
            j = min(r)
            if j in pivots:
                p = pivots[j]
                a, b = p[j], r[j]
                if b % a == 0:
                    q = b // a
                    for k, v in p.items():
                        w = r.get(k, 0) - q * v
                        if w:
                            r[k] = w
                        else:
                            r.pop(k, None)
                else:
                    # xgcd combine to shrink the pivot
                    g, x, y = _xgcd(a, b)
                    newp = {}
                    for k in set(p) | set(r):
                        w = x * p.get(k, 0) + y * r.get(k, 0)
                        if w:
                            newp[k] = w
                    qa, qb = a // g, b // g
                    newr = {}
                    for k in set(p) | set(r):
                        w = qa * r.get(k, 0) - qb * p.get(k, 0)
                        if w:
                            newr[k] = w
                    pivots[j] = newp
                    r = newr
            else:
                if r[j] < 0:
                    r = {k: -v for k, v in r.items()}
                pivots[j] = r
                break
    return pivots


def in_row_space(pivots, vec):
    """Whether a sparse vector lies in the integer row space given by pivots."""
    r = {j: v for j, v in vec.items() if v}
    while r:
        j = min(r)
        p = pivots.get(j)
        if p is None or r[j] % p[j]:
            return False
        q = r[j] // p[j]
        for k, v in p.items():
            w = r.get(k, 0) - q * v
            if w:
                r[k] = w
            else:
                r.pop(k, None)
    return True


def _xgcd(a, b):
    x0, x1, y0, y1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    if a < 0:
        a, x0, y0 = -a, -x0, -y0
    return a, x0, y0


# ---------------------------------------------------------------------------
# chain complexes and homology
# ---------------------------------------------------------------------------

@dataclass
class ChainComplex:
    """Degreewise based free Z-module with a differential of degree -1.

    basis[d] is the ordered list of basis labels in degree d; diff[d] is the
    matrix of the differential C_d -> C_{d-1} (rows indexed by basis[d-1],
    columns by basis[d]).  Degrees with no entry are zero.
    """

    basis: dict = field(default_factory=dict)
    diff: dict = field(default_factory=dict)

    def degrees(self):
        return sorted(self.basis)

    def dim(self, d):
        return len(self.basis.get(d, ()))

    def differential(self, d):
        if d in self.diff:
            return self.diff[d]
        return IntMatrix.zero(self.dim(d - 1), self.dim(d))

    def validate(self):
        """Check matrix shapes and the identity d o d = 0."""
        for d, m in self.diff.items():
            if m.rows != self.dim(d - 1) or m.cols != self.dim(d):
                raise ValueError(f"differential shape mismatch in degree {d}")
        for d in self.degrees():
            m1 = self.differential(d)
            m0 = self.differential(d - 1)
            if not m0.mul(m1).is_zero():
                raise ValueError(f"d^2 != 0 between degrees {d} and {d - 2}")
        return self

    def shuffled(self, perm_of_basis):
        """Same complex with basis order permuted per degree (for tests)."""
        basis = {}
        diff = {}
        for d, labels in self.basis.items():
            order = perm_of_basis(d, len(labels))
            basis[d] = [labels[i] for i in order]
        for d in self.basis:
            m = self.differential(d)
            src = perm_of_basis(d, self.dim(d))
            dst = perm_of_basis(d - 1, self.dim(d - 1))
            inv_dst = {v: k for k, v in enumerate(dst)}
            ent = {}
            for (i, j), v in m.entries.items():
                ent[(inv_dst[i], src.index(j))] = v
            diff[d] = IntMatrix(len(dst), len(src), ent)
        return ChainComplex(basis, diff)


@dataclass
class HomologyReport:
    """Per-degree homology: Betti number and sorted torsion coefficients."""

    ring: str
    groups: dict  # degree -> (betti, [t1, t2, ...]) with t1 | t2 | ...

    def betti(self, d):
        return self.groups.get(d, (0, []))[0]

    def torsion(self, d):
        return self.groups.get(d, (0, []))[1]

    def to_json_obj(self):
        return [{"degree": d, "betti": b, "torsion": list(t)}
                for d, (b, t) in sorted(self.groups.items())]

    def to_json(self):
        return json.dumps(self.to_json_obj())

    @classmethod
    def from_json(cls, text, ring="Z"):
        data = json.loads(text)
        return cls(ring, {e["degree"]: (e["betti"], list(e["torsion"]))
                          for e in data})

    def nonzero_degrees(self):
        return sorted(d for d, (b, t) in self.groups.items() if b or t)


def homology(C, ring="Z"):
    """Homology of a chain complex over Z or a prime field.

    Over Z the report carries (betti, torsion) per degree, computed from the
    Smith normal forms of consecutive differentials.  Over F_p ("F2", "F3",
    "Fp:<p>") it carries dimensions, computed from ranks of the matrices
    reduced mod p: one differential source of truth.
    """
    C.validate()
    p = _parse_ring(ring)
    groups = {}
    degs = C.degrees()
    if not degs:
        return HomologyReport(ring, {})
    lo, hi = degs[0], degs[-1]
    for d in range(lo, hi + 1):
        n = C.dim(d)
        if n == 0:
            continue
        dn = C.differential(d)
        dn1 = C.differential(d + 1)
        if p is None:
            r1 = rank_z(dn)
            divs = snf_divisors(dn1)
            r2 = len(divs)
            betti = n - r1 - r2
            torsion = [v for v in divs if v > 1]
            torsion.sort()
            if betti or torsion:
                groups[d] = (betti, torsion)
        else:
            r1 = rank_mod_p(dn, p)
            r2 = rank_mod_p(dn1, p)
            betti = n - r1 - r2
            if betti:
                groups[d] = (betti, [])
    return HomologyReport(ring, groups)


def _parse_ring(ring):
    if ring in ("Z", "ZZ"):
        return None
    if ring == "F2":
        return 2
    if ring == "F3":
        return 3
    if ring.startswith("Fp:"):
        p = int(ring.split(":", 1)[1])
        if p < 2 or any(p % q == 0 for q in range(2, int(p ** 0.5) + 1)):
            raise ValueError(f"not a prime: {p}")
        return p
    raise ValueError(f"unknown ring {ring!r}")


def subcomplex_kernel(f, C, Cp):
    """Kernel of a chain map f: C -> C' as a chain complex with inclusion.

    f is a dict degree -> IntMatrix (C_d -> C'_d).  The chain-map property is
    checked first.  The kernel basis per degree is a saturated Z-basis, so the
    restricted differential has exact integer coordinates.
    Returns (K, incl) with incl[d] the inclusion matrix K_d -> C_d.
    """
    degs = sorted(set(C.degrees()) | set(Cp.degrees()))
    fmats = {}
    for d in degs:
        m = f.get(d)
        if m is None:
            m = IntMatrix.zero(Cp.dim(d), C.dim(d))
        if m.rows != Cp.dim(d) or m.cols != C.dim(d):
            raise ValueError(f"chain map shape mismatch in degree {d}")
        fmats[d] = m
    for d in degs:
        lhs = fmats.get(d - 1, IntMatrix.zero(Cp.dim(d - 1), C.dim(d - 1))).mul(
            C.differential(d))
        rhs = Cp.differential(d).mul(fmats[d])
        if lhs.add(rhs.scale(-1)).entries:
            raise ValueError(f"not a chain map in degree {d}")

    kbasis = {}
    incl = {}
    for d in degs:
        if C.dim(d) == 0:
            continue
        vecs = kernel_basis(fmats[d])
        if not vecs:
            continue
        kbasis[d] = [("k", d, i) for i in range(len(vecs))]
        incl[d] = IntMatrix(C.dim(d), len(vecs),
                            {(i, j): v for j, vec in enumerate(vecs)
                             for i, v in enumerate(vec) if v})

    K = ChainComplex(basis=kbasis, diff={})
    for d in sorted(kbasis):
        if d - 1 not in kbasis:
            if not C.differential(d).mul(incl[d]).is_zero():
                raise ValueError("kernel not closed under differential")
            continue
        img = C.differential(d).mul(incl[d])
        # express image columns in the saturated kernel basis of degree d-1
        inc = incl[d - 1]
        ent = {}
        for j in range(img.cols):
            col = [img[(i, j)] for i in range(img.rows)]
            status, x = solve_integer(inc, col)
            if status != "solution":
                raise ValueError("kernel differential not integral")
            for i, v in enumerate(x):
                if v:
                    ent[(i, j)] = v
        K.diff[d] = IntMatrix(len(kbasis[d - 1]), len(kbasis[d]), ent)
    K.validate()
    return K, incl


def mapping_cone(f, C, Cp):
    """Mapping cone of a chain map f: C -> C'.

    Cone_d = C_{d-1} + C'_d with differential (-d_C, f + d_C').  The map f is
    a quasi-isomorphism iff the cone is acyclic.
    """
    degs = sorted(set(d + 1 for d in C.degrees()) | set(Cp.degrees()))
    basis = {}
    for d in degs:
        b = [("c", x) for x in C.basis.get(d - 1, [])] + \
            [("c'", x) for x in Cp.basis.get(d, [])]
        if b:
            basis[d] = b
    diff = {}
    for d in degs:
        nC, nCp = C.dim(d - 1), Cp.dim(d)
        mC, mCp = C.dim(d - 2), Cp.dim(d - 1)
        if nC + nCp == 0 or mC + mCp == 0:
            continue
        ent = {}
        dC = C.differential(d - 1)
        for (i, j), v in dC.entries.items():
            ent[(i, j)] = -v
        fm = f.get(d - 1, IntMatrix.zero(Cp.dim(d - 1), C.dim(d - 1)))
        for (i, j), v in fm.entries.items():
            ent[(mC + i, j)] = v
        dCp = Cp.differential(d)
        for (i, j), v in dCp.entries.items():
            ent[(mC + i, nC + j)] = v
        diff[d] = IntMatrix(mC + mCp, nC + nCp, ent)
    return ChainComplex(basis, diff)


def is_quasi_iso(f, C, Cp):
    cone = mapping_cone(f, C, Cp)
    rep = homology(cone, "Z")
    return not rep.nonzero_degrees()
