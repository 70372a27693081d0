"""Exact integer linear algebra: Hermite/Smith normal forms and lattices.

Everything here is arbitrary-precision and exact. Vectors are column vectors
represented as tuples of ints; matrices act on the left. No floats.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from math import gcd
from typing import Iterable, Optional, Sequence, Tuple

Vec = Tuple[int, ...]


def xgcd(a: int, b: int) -> Tuple[int, int, int]:
    """Extended gcd.

    Returns:
        (g, s, t) with g = gcd(a, b) >= 0 and s*a + t*b == g.
    """
    old_r, r = a, b
    old_s, s = 1, 0
    old_t, t = 0, 1
    while r != 0:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_s, s = s, old_s - q * s
        old_t, t = t, old_t - q * t
    if old_r < 0:
        old_r, old_s, old_t = -old_r, -old_s, -old_t
    return old_r, old_s, old_t


class IntMatrix:
    """Immutable integer matrix with explicit shape (degenerate shapes allowed)."""

    __slots__ = ("nrows", "ncols", "entries")

    def __init__(self, entries: Sequence[Sequence[int]], shape: Optional[Tuple[int, int]] = None):
        rows = tuple(tuple(int(x) for x in row) for row in entries)
        if shape is None:
            nrows = len(rows)
            if nrows == 0:
                raise ValueError("shape required for a matrix with no rows")
            ncols = len(rows[0])
        else:
            nrows, ncols = shape
            if len(rows) != nrows:
                raise ValueError("row count does not match shape")
        for row in rows:
            if len(row) != ncols:
                raise ValueError("ragged rows")
        object.__setattr__(self, "nrows", nrows)
        object.__setattr__(self, "ncols", ncols)
        object.__setattr__(self, "entries", rows)

    def __setattr__(self, name, value):
        raise AttributeError("IntMatrix is immutable")

    @staticmethod
    def identity(n: int) -> "IntMatrix":
        return IntMatrix(
            tuple(tuple(1 if i == j else 0 for j in range(n)) for i in range(n)),
            shape=(n, n),
        )

    @staticmethod
    def zeros(nrows: int, ncols: int) -> "IntMatrix":
        return IntMatrix(tuple((0,) * ncols for _ in range(nrows)), shape=(nrows, ncols))

    @staticmethod
    def from_cols(cols: Iterable[Sequence[int]], nrows: Optional[int] = None) -> "IntMatrix":
        cols = [tuple(int(x) for x in c) for c in cols]
        if nrows is None:
            if not cols:
                raise ValueError("nrows required for a matrix with no columns")
            nrows = len(cols[0])
        for c in cols:
            if len(c) != nrows:
                raise ValueError("column length mismatch")
        return IntMatrix(
            tuple(tuple(c[i] for c in cols) for i in range(nrows)),
            shape=(nrows, len(cols)),
        )

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, IntMatrix)
            and self.nrows == other.nrows
            and self.ncols == other.ncols
            and self.entries == other.entries
        )

    def __hash__(self) -> int:
        return hash((self.nrows, self.ncols, self.entries))

    def __repr__(self) -> str:
        return f"IntMatrix({list(map(list, self.entries))!r}, shape=({self.nrows}, {self.ncols}))"

    def __matmul__(self, other: "IntMatrix") -> "IntMatrix":
        if self.ncols != other.nrows:
            raise ValueError("shape mismatch in matrix product")
        ot = other.entries
        return IntMatrix(
            tuple(
                tuple(
                    sum(self.entries[i][k] * ot[k][j] for k in range(self.ncols))
                    for j in range(other.ncols)
                )
                for i in range(self.nrows)
            ),
            shape=(self.nrows, other.ncols),
        )

    def apply(self, v: Sequence[int]) -> Vec:
        """Matrix times column vector, over the integers."""
        if len(v) != self.ncols:
            raise ValueError("vector length mismatch")
        return tuple(sum(row[k] * v[k] for k in range(self.ncols)) for row in self.entries)

    def apply_frac(self, v: Sequence[Fraction]) -> Tuple[Fraction, ...]:
        if len(v) != self.ncols:
            raise ValueError("vector length mismatch")
        return tuple(sum((Fraction(row[k]) * v[k] for k in range(self.ncols)), Fraction(0)) for row in self.entries)

    def transpose(self) -> "IntMatrix":
        return IntMatrix(
            tuple(tuple(self.entries[i][j] for i in range(self.nrows)) for j in range(self.ncols)),
            shape=(self.ncols, self.nrows),
        )

    def col(self, j: int) -> Vec:
        return tuple(self.entries[i][j] for i in range(self.nrows))

    def columns(self) -> Tuple[Vec, ...]:
        return tuple(self.col(j) for j in range(self.ncols))

    def row(self, i: int) -> Vec:
        return self.entries[i]

    def det(self) -> int:
        """Determinant by fraction-free (Bareiss) elimination. Square only."""
        if self.nrows != self.ncols:
            raise ValueError("determinant of a non-square matrix")
        n = self.nrows
        if n == 0:
            return 1
        a = [list(row) for row in self.entries]
        sign = 1
        prev = 1
        for k in range(n - 1):
            if a[k][k] == 0:
                pivot = next((i for i in range(k + 1, n) if a[i][k] != 0), None)
                if pivot is None:
                    return 0
                a[k], a[pivot] = a[pivot], a[k]
                sign = -sign
            for i in range(k + 1, n):
                for j in range(k + 1, n):
                    # exact by Bareiss: prev divides the numerator
                    a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
                a[i][k] = 0
            prev = a[k][k]
        return sign * a[n - 1][n - 1]

    def is_unimodular(self) -> bool:
        return self.nrows == self.ncols and self.det() in (1, -1)


def _row_hnf(rows: Sequence[Sequence[int]], ncols: int) -> Tuple[list, list, list]:
    """Row-style Hermite form H = U*A; returns (H, U, pivot_columns) as lists."""
    m = len(rows)
    h = [list(r) for r in rows]
    u = [[1 if i == j else 0 for j in range(m)] for i in range(m)]
    piv_row = 0
    pivots = []
    for j in range(ncols):
        nz = [i for i in range(piv_row, m) if h[i][j] != 0]
        if not nz:
            continue
        i0 = nz[0]
        for i in nz[1:]:
            g, s, t = xgcd(h[i0][j], h[i][j])
            x0, x1 = h[i0][j] // g, h[i][j] // g
            r0h, r1h = h[i0], h[i]
            h[i0] = [s * p + t * q for p, q in zip(r0h, r1h)]
            h[i] = [x0 * q - x1 * p for p, q in zip(r0h, r1h)]
            r0u, r1u = u[i0], u[i]
            u[i0] = [s * p + t * q for p, q in zip(r0u, r1u)]
            u[i] = [x0 * q - x1 * p for p, q in zip(r0u, r1u)]
        if i0 != piv_row:
            h[i0], h[piv_row] = h[piv_row], h[i0]
            u[i0], u[piv_row] = u[piv_row], u[i0]
        if h[piv_row][j] < 0:
            h[piv_row] = [-x for x in h[piv_row]]
            u[piv_row] = [-x for x in u[piv_row]]
        p = h[piv_row][j]
        for i in range(piv_row):
            q = h[i][j] // p
            if q:
                h[i] = [a - q * b for a, b in zip(h[i], h[piv_row])]
                u[i] = [a - q * b for a, b in zip(u[i], u[piv_row])]
        pivots.append(j)
        piv_row += 1
    return h, u, pivots


@lru_cache(maxsize=65536)
def hnf(m: IntMatrix) -> Tuple[IntMatrix, IntMatrix]:
    """Column-style Hermite normal form.

    Returns:
        (h, u) with h == m @ u, u unimodular. Nonzero columns of h come first;
        each has a positive pivot (first nonzero entry, at a strictly
        increasing row), entries to the left of a pivot in its row lie in
        [0, pivot), and entries to the right are zero. The nonzero columns are
        the canonical basis of the column lattice of m.
    """
    ht_rows, ut_rows, _ = _row_hnf(m.transpose().entries, m.nrows)
    h = IntMatrix(ht_rows, shape=(m.ncols, m.nrows)).transpose()
    u = IntMatrix(ut_rows, shape=(m.ncols, m.ncols)).transpose()
    assert m @ u == h
    return h, u


def snf(m: IntMatrix) -> Tuple[IntMatrix, IntMatrix, IntMatrix]:
    """Smith normal form.

    Returns:
        (d, u, v) with d == u @ m @ v, u and v unimodular, d diagonal with
        nonnegative entries satisfying d[i] | d[i+1].
    """
    nr, nc = m.nrows, m.ncols
    d = [list(r) for r in m.entries]
    u = [[1 if i == j else 0 for j in range(nr)] for i in range(nr)]
    v = [[1 if i == j else 0 for j in range(nc)] for i in range(nc)]

    def swap_rows(i, j):
        d[i], d[j] = d[j], d[i]
        u[i], u[j] = u[j], u[i]

    def swap_cols(i, j):
        for row in d:
            row[i], row[j] = row[j], row[i]
        for row in v:
            row[i], row[j] = row[j], row[i]

    def addmul_row(dst, src, q):
        # row_dst += q * row_src
        d[dst] = [a + q * b for a, b in zip(d[dst], d[src])]
        u[dst] = [a + q * b for a, b in zip(u[dst], u[src])]

    def addmul_col(dst, src, q):
        for row in d:
            row[dst] += q * row[src]
        for row in v:
            row[dst] += q * row[src]

    t = 0
    while True:
        # locate a nonzero entry in the remaining block
        pos = None
        best = None
        for i in range(t, nr):
            for j in range(t, nc):
                x = abs(d[i][j])
                if x != 0 and (best is None or x < best):
                    best, pos = x, (i, j)
        if pos is None:
            break
        swap_rows(t, pos[0])
        swap_cols(t, pos[1])
        while True:
            # clear column t below the pivot
            dirty = False
            for i in range(t + 1, nr):
                if d[i][t] == 0:
                    continue
                q = d[i][t] // d[t][t]
                addmul_row(i, t, -q)
                if d[i][t] != 0:
                    # remainder became the smaller pivot candidate
                    swap_rows(t, i)
                    dirty = True
            if dirty:
                continue
            # clear row t to the right of the pivot
            for j in range(t + 1, nc):
                if d[t][j] == 0:
                    continue
                q = d[t][j] // d[t][t]
                addmul_col(j, t, -q)
                if d[t][j] != 0:
                    swap_cols(t, j)
                    dirty = True
            if not dirty and all(d[i][t] == 0 for i in range(t + 1, nr)):
                break
        # enforce divisibility of the remaining block by the pivot
        offender = None
        for i in range(t + 1, nr):
            for j in range(t + 1, nc):
                if d[i][j] % d[t][t] != 0:
                    offender = i
                    break
            if offender is not None:
                break
        if offender is not None:
            addmul_row(t, offender, 1)
            continue
        if d[t][t] < 0:
            d[t] = [-x for x in d[t]]
            u[t] = [-x for x in u[t]]
        t += 1

    dm = IntMatrix(d, shape=(nr, nc))
    um = IntMatrix(u, shape=(nr, nr))
    vm = IntMatrix(v, shape=(nc, nc))
    assert um @ m @ vm == dm
    return dm, um, vm


def invert_unimodular(m: IntMatrix) -> IntMatrix:
    """Exact inverse of a unimodular integer matrix."""
    n = m.nrows
    if m.ncols != n:
        raise ValueError("not square")
    if n == 0:
        return m
    det = m.det()
    if det not in (1, -1):
        raise ValueError("matrix is not unimodular")
    cols = []
    for j in range(n):
        e = tuple(1 if i == j else 0 for i in range(n))
        x = solve_frac(m, e)
        assert x is not None
        col = []
        for val in x:
            assert val.denominator == 1
            col.append(val.numerator)
        cols.append(tuple(col))
    return IntMatrix.from_cols(cols, nrows=n)


def kernel(m: IntMatrix) -> IntMatrix:
    """Basis of the integer kernel {x : m @ x == 0}, as columns (saturated)."""
    d, _, v = snf(m)
    rank = sum(1 for i in range(min(d.nrows, d.ncols)) if d.entries[i][i] != 0)
    cols = [v.col(j) for j in range(rank, m.ncols)]
    return IntMatrix.from_cols(cols, nrows=m.ncols)


def solve_int(m: IntMatrix, target: Sequence[int]) -> Optional[Vec]:
    """One integer solution of m @ x == target, or None.

    When the system is underdetermined this returns the solution with zero
    coefficients on the non-pivot columns of the Hermite form (deterministic).
    """
    if len(target) != m.nrows:
        raise ValueError("target length mismatch")
    h, u = hnf(m)
    y = [0] * m.ncols
    residual = list(int(x) for x in target)
    for j in range(m.ncols):
        p = next((i for i in range(m.nrows) if h.entries[i][j] != 0), None)
        if p is None:
            break
        q, r = divmod(residual[p], h.entries[p][j])
        if r != 0:
            return None
        if q:
            y[j] = q
            for i in range(m.nrows):
                residual[i] -= q * h.entries[i][j]
    if any(residual):
        return None
    return u.apply(y)


def solve_frac(m: IntMatrix, target: Sequence) -> Optional[Tuple[Fraction, ...]]:
    """One rational solution of m @ x == target, or None if inconsistent.

    Free variables are set to zero. Accepts int or Fraction entries in target.
    """
    nr, nc = m.nrows, m.ncols
    a = [[Fraction(m.entries[i][j]) for j in range(nc)] + [Fraction(target[i])] for i in range(nr)]
    piv_of_col = {}
    row = 0
    for j in range(nc):
        p = next((i for i in range(row, nr) if a[i][j] != 0), None)
        if p is None:
            continue
        a[row], a[p] = a[p], a[row]
        pivval = a[row][j]
        a[row] = [x / pivval for x in a[row]]
        for i in range(nr):
            if i != row and a[i][j] != 0:
                f = a[i][j]
                a[i] = [x - f * y for x, y in zip(a[i], a[row])]
        piv_of_col[j] = row
        row += 1
        if row == nr:
            break
    for i in range(row, nr):
        if a[i][nc] != 0:
            return None
    x = [Fraction(0)] * nc
    for j, r in piv_of_col.items():
        x[j] = a[r][nc]
    return tuple(x)


def primitive_vector(v: Sequence[int]) -> Vec:
    """Divide out the gcd of the entries. Errors on the zero vector."""
    g = 0
    for x in v:
        g = gcd(g, int(x))
    if g == 0:
        raise ValueError("zero vector has no primitive representative")
    return tuple(int(x) // g for x in v)


def primitive_direction(v: Sequence) -> Vec:
    """Primitive integer vector on the ray spanned by a rational vector."""
    fracs = [Fraction(x) for x in v]
    if all(f == 0 for f in fracs):
        raise ValueError("zero vector has no primitive representative")
    denom = 1
    for f in fracs:
        denom = denom * f.denominator // gcd(denom, f.denominator)
    ints = [int(f * denom) for f in fracs]
    return primitive_vector(ints)


def _is_canonical_basis(basis: IntMatrix) -> bool:
    # column HNF, positive pivots, reduced to the left, no zero columns
    last_pivot_row = -1
    for j in range(basis.ncols):
        p = next((i for i in range(basis.nrows) if basis.entries[i][j] != 0), None)
        if p is None or p <= last_pivot_row:
            return False
        if basis.entries[p][j] <= 0:
            return False
        for jj in range(basis.ncols):
            if jj < j and not (0 <= basis.entries[p][jj] < basis.entries[p][j]):
                return False
            if jj > j and basis.entries[p][jj] != 0:
                return False
        last_pivot_row = p
    return True


class Lattice:
    """A sublattice of Z^ambient_dim with canonical column-HNF basis.

    The basis has one column per lattice rank; rank 0 (the zero lattice) is a
    legal value. Equal lattices compare equal structurally.
    """

    __slots__ = ("ambient_dim", "basis")

    def __init__(self, ambient_dim: int, basis: IntMatrix):
        if basis.nrows != ambient_dim:
            raise ValueError("basis rows must match ambient dimension")
        if not _is_canonical_basis(basis):
            raise ValueError("basis is not in canonical column Hermite form")
        object.__setattr__(self, "ambient_dim", ambient_dim)
        object.__setattr__(self, "basis", basis)

    def __setattr__(self, name, value):
        raise AttributeError("Lattice is immutable")

    @staticmethod
    def standard(n: int) -> "Lattice":
        return Lattice(n, IntMatrix.identity(n))

    @staticmethod
    def zero(n: int) -> "Lattice":
        return Lattice(n, IntMatrix.zeros(n, 0))

    @staticmethod
    def from_generators(ambient_dim: int, vectors: Iterable[Sequence[int]]) -> "Lattice":
        cols = [tuple(int(x) for x in v) for v in vectors]
        for c in cols:
            if len(c) != ambient_dim:
                raise ValueError("generator length mismatch")
        if not cols:
            return Lattice.zero(ambient_dim)
        h, _ = hnf(IntMatrix.from_cols(cols, nrows=ambient_dim))
        keep = [h.col(j) for j in range(h.ncols) if any(h.col(j))]
        return Lattice(ambient_dim, IntMatrix.from_cols(keep, nrows=ambient_dim))

    @property
    def rank(self) -> int:
        return self.basis.ncols

    def is_full_rank(self) -> bool:
        return self.rank == self.ambient_dim

    def coords_of(self, v: Sequence[int]) -> Optional[Vec]:
        """Integer coordinates of v in this basis, or None if v is outside."""
        return solve_int(self.basis, v)

    def contains(self, v: Sequence[int]) -> bool:
        return self.coords_of(v) is not None

    def contains_lattice(self, other: "Lattice") -> bool:
        if other.ambient_dim != self.ambient_dim:
            raise ValueError("ambient dimension mismatch")
        return all(self.contains(other.basis.col(j)) for j in range(other.rank))

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Lattice)
            and self.ambient_dim == other.ambient_dim
            and self.basis == other.basis
        )

    def __hash__(self) -> int:
        return hash((self.ambient_dim, self.basis))

    def __repr__(self) -> str:
        return f"Lattice({self.ambient_dim}, cols={[list(c) for c in self.basis.columns()]!r})"


def lattice_sum(a: Lattice, b: Lattice) -> Lattice:
    if a.ambient_dim != b.ambient_dim:
        raise ValueError("ambient dimension mismatch")
    return Lattice.from_generators(a.ambient_dim, a.basis.columns() + b.basis.columns())


def lattice_intersection(a: Lattice, b: Lattice) -> Lattice:
    """Intersection of two sublattices of the same ambient Z^n."""
    if a.ambient_dim != b.ambient_dim:
        raise ValueError("ambient dimension mismatch")
    if a.rank == 0 or b.rank == 0:
        return Lattice.zero(a.ambient_dim)
    # x-parts of the kernel of [A | -B] give exactly {x : A x in B Z^s}
    stacked = IntMatrix(
        tuple(
            a.basis.entries[i] + tuple(-x for x in b.basis.entries[i])
            for i in range(a.ambient_dim)
        ),
        shape=(a.ambient_dim, a.rank + b.rank),
    )
    ker = kernel(stacked)
    gens = []
    for j in range(ker.ncols):
        coeffs = ker.col(j)[: a.rank]
        gens.append(a.basis.apply(coeffs))
    return Lattice.from_generators(a.ambient_dim, gens)


def lattice_image(m: IntMatrix, l: Lattice) -> Lattice:
    """Image of a lattice under an integer matrix, in the target ambient space.

    The zero image comes back as the rank-0 lattice, not an error.
    """
    if m.ncols != l.ambient_dim:
        raise ValueError("matrix does not act on this ambient space")
    return Lattice.from_generators(m.nrows, [m.apply(l.basis.col(j)) for j in range(l.rank)])


@lru_cache(maxsize=65536)
def saturate(l: Lattice, ambient: Lattice) -> Lattice:
    """Largest sublattice of `ambient` with the rational span of `l`.

    Requires l to be contained in ambient. The result has the rank of l.
    """
    if l.ambient_dim != ambient.ambient_dim:
        raise ValueError("ambient dimension mismatch")
    if l.rank == 0:
        return Lattice.zero(l.ambient_dim)
    # coordinates of l inside ambient
    coord_cols = []
    for j in range(l.rank):
        c = ambient.coords_of(l.basis.col(j))
        if c is None:
            raise ValueError("lattice is not contained in the ambient lattice")
        coord_cols.append(c)
    x = IntMatrix.from_cols(coord_cols, nrows=ambient.rank)
    d, u, _ = snf(x)
    rank = sum(1 for i in range(min(d.nrows, d.ncols)) if d.entries[i][i] != 0)
    u_inv = invert_unimodular(u)
    sat_coords = [u_inv.col(i) for i in range(rank)]
    return Lattice.from_generators(
        ambient.ambient_dim, [ambient.basis.apply(c) for c in sat_coords]
    )


def lattice_index(sub: Lattice, sup: Lattice) -> int:
    """Index [sup : sub] for full-rank-in-each-other lattices of equal rank."""
    if sub.ambient_dim != sup.ambient_dim:
        raise ValueError("ambient dimension mismatch")
    if sub.rank != sup.rank:
        raise ValueError("index is finite only for equal ranks")
    coord_cols = []
    for j in range(sub.rank):
        c = sup.coords_of(sub.basis.col(j))
        if c is None:
            raise ValueError("sublattice is not contained in the superlattice")
        coord_cols.append(c)
    if sub.rank == 0:
        return 1
    det = IntMatrix.from_cols(coord_cols, nrows=sup.rank).det()
    assert det != 0
    return abs(det)


def preimage_lattice(m: IntMatrix, l: Lattice, *, sat_kernel: bool = True) -> Lattice:
    """The lattice {x in Z^ncols : m @ x in l}.

    Always contains the integer kernel of m; sat_kernel is accepted for
    interface symmetry and has no effect (the kernel construction is already
    saturated).
    """
    if m.nrows != l.ambient_dim:
        raise ValueError("matrix target does not match lattice ambient")
    cols = tuple(m.col(j) for j in range(m.ncols)) + tuple(
        tuple(-x for x in l.basis.col(j)) for j in range(l.rank)
    )
    stacked = IntMatrix.from_cols(cols, nrows=m.nrows)
    ker = kernel(stacked)
    gens = [ker.col(j)[: m.ncols] for j in range(ker.ncols)]
    return Lattice.from_generators(m.ncols, gens)


def primitive_in_lattice(v: Sequence[int], lat: Lattice) -> Vec:
    """Primitive generator, within `lat`, of the ray through v.

    v must lie in lat; the result is the shortest lattice point on the ray.
    """
    coords = lat.coords_of(v)
    if coords is None:
        raise ValueError("vector is not a lattice point")
    return lat.basis.apply(primitive_vector(coords))
