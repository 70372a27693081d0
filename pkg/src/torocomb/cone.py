"""Strongly convex rational polyhedral cones.

A cone is stored with its own reference lattice and is full-dimensional
in that lattice's rational span (lower-dimensional constructions are
re-normalized by saturating the span).  Duality and facet enumeration
use the double description method in exact arithmetic; faces come with
saturated lattices and explicit inclusion matrices.
"""

from __future__ import annotations

import weakref
from fractions import Fraction

from . import config, lp
from .intlinalg import (
    IntMatrix,
    Lattice,
    kernel,
    primitive_direction,
    saturate,
    snf,
    solve_frac,
)

# Structurally equal cones share one instance (and hence the lazily
# computed face lattice and facet normals); entries vanish with their
# last outside reference.
_intern_table: "weakref.WeakValueDictionary" = weakref.WeakValueDictionary()


def _as_tuple(v):
    return tuple(int(x) if isinstance(x, int) else x for x in v)


def _primitive_ray_in_lattice(direction, lattice: Lattice):
    """Smallest nonzero lattice point on the ray through ``direction``."""
    prim = primitive_direction(direction)
    coords = solve_frac(lattice.basis, prim)
    if coords is None:
        raise ValueError(f"ray {direction} is not in the lattice span")
    scale = 1
    for c in coords:
        scale = scale * c.denominator // _gcd(scale, c.denominator)
    return tuple(scale * x for x in prim)


def _gcd(a, b):
    while b:
        a, b = b, a % b
    return abs(a)


def _rank_of_rows(rows) -> int:
    mat = [[Fraction(x) for x in row] for row in rows]
    rank = 0
    cols = len(mat[0]) if mat else 0
    for col in range(cols):
        piv = next((i for i in range(rank, len(mat)) if mat[i][col] != 0), None)
        if piv is None:
            continue
        mat[rank], mat[piv] = mat[piv], mat[rank]
        inv = mat[rank][col]
        mat[rank] = [x / inv for x in mat[rank]]
        for i in range(len(mat)):
            if i != rank and mat[i][col] != 0:
                f = mat[i][col]
                mat[i] = [x - f * y for x, y in zip(mat[i], mat[rank])]
        rank += 1
    return rank


# ---------------------------------------------------------------------------
# double description: extreme rays of {y : row . y >= 0}


def double_description(rows, dim):
    """Extreme rays of the halfspace cone ``{y in R^dim : r.y >= 0 for r in
    rows}``, which must be pointed and full-dimensional.  Returns primitive
    integer vectors sorted lexicographically."""
    if dim == 0:
        return ()
    rows = [tuple(r) for r in rows]
    # initial simplicial subsystem: a maximal independent subset
    chosen: list[int] = []
    basis_rows: list[tuple] = []
    for i, row in enumerate(rows):
        if len(chosen) == dim:
            break
        if _rank_of_rows(basis_rows + [row]) > len(chosen):
            chosen.append(i)
            basis_rows.append(row)
    if len(chosen) < dim:
        raise ValueError("halfspace cone is not pointed")
    m0 = IntMatrix(list(basis_rows))
    rays = []
    for j in range(dim):
        target = tuple(1 if i == j else 0 for i in range(dim))
        sol = solve_frac(m0, target)
        rays.append(primitive_direction(sol))
    processed = list(chosen)

    def tight_set(ray):
        return frozenset(i for i in processed if _dot_int(rows[i], ray) == 0)

    records = [(r, tight_set(r)) for r in rays]
    for t, row in enumerate(rows):
        if t in chosen:
            continue
        processed.append(t)
        vals = [_dot_int(row, r) for r, _ in records]
        pos = [k for k, v in enumerate(vals) if v > 0]
        neg = [k for k, v in enumerate(vals) if v < 0]
        zero = [k for k, v in enumerate(vals) if v == 0]
        if not neg:
            records = [(records[k][0], records[k][1] | ({t} if k in zero else frozenset()))
                       for k in range(len(records))]
            continue
        new_records = []
        for k in pos:
            new_records.append((records[k][0], records[k][1]))
        for k in zero:
            new_records.append((records[k][0], records[k][1] | {t}))
        config.charge(len(pos) * len(neg) + 1, "dual description steps")
        for p in pos:
            rp, zp = records[p]
            for n in neg:
                rn, zn = records[n]
                common = zp & zn
                adjacent = True
                for w in range(len(records)):
                    if w not in (p, n) and common <= records[w][1]:
                        adjacent = False
                        break
                if not adjacent:
                    continue
                combo = tuple(vals[p] * x - vals[n] * y for x, y in zip(rn, rp))
                combo = primitive_direction(combo)
                new_records.append((combo, None))
        records = [
            (r, z if z is not None else tight_set(r)) for r, z in new_records
        ]
    out = sorted(r for r, _ in records)
    for r in out:
        assert all(_dot_int(row, r) >= 0 for row in rows)
    assert len(set(out)) == len(out)
    return tuple(out)


def _dot_int(a, b):
    return sum(x * y for x, y in zip(a, b))


# ---------------------------------------------------------------------------
# the Cone type


class Face:
    """A face of a cone: ray indices into the parent, the face as a cone in
    its own coordinates, the inclusion into parent lattice coordinates, and
    the saturated face lattice in the parent's ambient space."""

    __slots__ = ("ray_indices", "cone", "inclusion", "lattice")

    def __init__(self, ray_indices, cone, inclusion, lattice):
        self.ray_indices = ray_indices
        self.cone = cone
        self.inclusion = inclusion
        self.lattice = lattice

    def __repr__(self):
        return f"Face(rays={self.ray_indices}, dim={self.cone.rank})"


class Cone:
    """Strongly convex rational polyhedral cone, full-dimensional in the
    rational span of its reference lattice."""

    __slots__ = (
        "ambient_dim",
        "rays",
        "lattice",
        "_local",
        "_normals",
        "_faces",
        "__weakref__",
    )

    def __init__(self, ambient_dim, rays, lattice, *, _trusted=False):
        if not _trusted:
            raise TypeError("use Cone.from_rays or Cone.zero")
        self.ambient_dim = ambient_dim
        self.rays = rays
        self.lattice = lattice
        self._local = None
        self._normals = None
        self._faces = None

    @staticmethod
    def _interned(cone: "Cone") -> "Cone":
        """One shared instance per structural value, so that the cached
        face lattices and facet normals survive reassembly of equal
        cones (the caches are value-determined, making sharing safe)."""
        return _intern_table.setdefault(cone.key(), cone)

    # -- constructors ------------------------------------------------------

    @staticmethod
    def zero(ambient_dim: int = 0) -> "Cone":
        return Cone._interned(
            Cone(ambient_dim, (), Lattice.zero(ambient_dim), _trusted=True)
        )

    @staticmethod
    def from_rays(ambient_dim, rays, lattice: Lattice | None = None) -> "Cone":
        """Normalize: rays made primitive in the cone's lattice, deduplicated,
        reduced to extreme rays, sorted lexicographically.  The lattice
        defaults to the saturation of the ray span in the standard lattice and
        must span the same subspace as the rays when supplied."""
        rays = [_as_tuple(r) for r in rays]
        for r in rays:
            if len(r) != ambient_dim:
                raise ValueError("ray dimension mismatch")
            if all(x == 0 for x in r):
                raise ValueError("zero vector is not a ray")
        if lattice is None:
            span = Lattice.from_generators(ambient_dim, rays)
            lattice = saturate(span, Lattice.standard(ambient_dim))
        elif lattice.ambient_dim != ambient_dim:
            raise ValueError("lattice ambient dimension mismatch")
        if not rays:
            if lattice.rank != 0:
                raise ValueError("no rays but nonzero lattice")
            return Cone._interned(Cone(ambient_dim, (), lattice, _trusted=True))
        prim = []
        for r in rays:
            p = _primitive_ray_in_lattice(r, lattice)
            if p not in prim:
                prim.append(p)
        # the rays must span the lattice's rational span (full-dimensional)
        if _rank_of_rows(prim) != lattice.rank:
            raise ValueError("rays do not span the lattice's rational span")
        if not _is_pointed(prim, ambient_dim):
            raise ValueError("cone is not strongly convex")
        extreme = _extreme_subset(prim, ambient_dim)
        return Cone._interned(
            Cone(ambient_dim, tuple(sorted(extreme)), lattice, _trusted=True)
        )

    # -- basic structure ---------------------------------------------------

    @property
    def rank(self) -> int:
        return self.lattice.rank

    @property
    def is_full_dim(self) -> bool:
        return self.rank == self.ambient_dim

    def local_rays(self):
        """Rays in lattice coordinates (full-dimensional there)."""
        if self._local is None:
            self._local = tuple(self.lattice.coords_of(r) for r in self.rays)
        return self._local

    def local_ray_matrix(self) -> IntMatrix:
        return IntMatrix.from_cols(list(self.local_rays()), nrows=self.rank)

    @property
    def facet_normals(self):
        """Primitive integer covectors in lattice coordinates; the cone is
        exactly ``{x : n.x >= 0 for all n}`` within its span."""
        if self._normals is None:
            if self.rank == 0:
                self._normals = ()
            else:
                self._normals = double_description(self.local_rays(), self.rank)
        return self._normals

    def dual(self) -> "Cone":
        """Dual cone in lattice coordinates: its rays are this cone's facet
        normals and vice versa (for cones given in standard position)."""
        if self.rank == 0:
            return Cone.zero(0)
        return Cone._interned(
            Cone(
                self.rank,
                self.facet_normals,
                Lattice.standard(self.rank),
                _trusted=True,
            )
        )

    # -- membership --------------------------------------------------------

    def local_coords(self, point):
        """Rational lattice coordinates of an ambient point, or None when the
        point is outside the lattice's span."""
        point = tuple(point)
        if len(point) != self.ambient_dim:
            raise ValueError("point dimension mismatch")
        if self.rank == 0:
            return () if all(x == 0 for x in point) else None
        return solve_frac(self.lattice.basis, point)

    def contains_point(self, point) -> bool:
        local = self.local_coords(point)
        if local is None:
            return False
        return all(_dot_frac(n, local) >= 0 for n in self.facet_normals)

    def contains_in_relative_interior(self, point) -> bool:
        local = self.local_coords(point)
        if local is None:
            return False
        return all(_dot_frac(n, local) > 0 for n in self.facet_normals)

    def contains_cone(self, other: "Cone") -> bool:
        return all(self.contains_point(r) for r in other.rays)

    def relative_interior_point(self):
        """The sum of the rays: an integer point interior to the cone."""
        return tuple(
            sum(r[i] for r in self.rays) for i in range(self.ambient_dim)
        )

    # -- faces -------------------------------------------------------------

    def faces(self):
        """All faces (zero face through the cone itself), canonically ordered
        by (dimension, ray index tuple).  Each face carries the saturated
        lattice N_face = lattice ∩ Span(face) and the inclusion matrix from
        face coordinates into this cone's lattice coordinates."""
        if self._faces is None:
            index_sets = {frozenset(range(len(self.rays)))}
            frontier = [frozenset(range(len(self.rays)))]
            local = self.local_rays()
            while frontier:
                nxt = []
                for fs in frontier:
                    for n in self.facet_normals:
                        cut = frozenset(
                            i for i in fs if _dot_int(n, local[i]) == 0
                        )
                        if cut not in index_sets:
                            index_sets.add(cut)
                            nxt.append(cut)
                frontier = nxt
            faces = []
            for fs in sorted(index_sets, key=lambda s: (len(s), tuple(sorted(s)))):
                faces.append(self._build_face(tuple(sorted(fs))))
            faces.sort(key=lambda f: (f.cone.rank, f.ray_indices))
            self._faces = tuple(faces)
        return self._faces

    def _build_face(self, ray_indices) -> Face:
        if not ray_indices:
            return Face(
                (),
                Cone.zero(0),
                IntMatrix.zeros(self.rank, 0),
                Lattice.zero(self.ambient_dim),
            )
        local = [self.local_rays()[i] for i in ray_indices]
        span = Lattice.from_generators(self.rank, local)
        sub = saturate(span, Lattice.standard(self.rank))
        face_rays = [sub.coords_of(r) for r in local]
        face_cone = Cone._interned(
            Cone(
                sub.rank,
                tuple(sorted(face_rays)),
                Lattice.standard(sub.rank),
                _trusted=True,
            )
        )
        ambient_basis = [
            self.lattice.basis.apply(sub.basis.col(j)) for j in range(sub.rank)
        ]
        return Face(
            ray_indices,
            face_cone,
            sub.basis,
            Lattice.from_generators(self.ambient_dim, ambient_basis),
        )

    def face_with_ray_indices(self, ray_indices) -> Face:
        key = tuple(sorted(ray_indices))
        for f in self.faces():
            if f.ray_indices == key:
                return f
        raise KeyError(f"no face with ray indices {key}")

    def minimal_face_indices(self, point):
        """Ray indices of the smallest face containing the point (which must
        lie in the cone)."""
        local = self.local_coords(point)
        if local is None:
            raise ValueError("point outside the cone's span")
        if any(_dot_frac(n, local) < 0 for n in self.facet_normals):
            raise ValueError("point outside the cone")
        tight = [n for n in self.facet_normals if _dot_frac(n, local) == 0]
        return tuple(
            i
            for i, r in enumerate(self.local_rays())
            if all(_dot_int(n, r) == 0 for n in tight)
        )

    # -- classification ----------------------------------------------------

    @property
    def is_simplicial(self) -> bool:
        return len(self.rays) == self.rank

    def multiplicity(self):
        """Index of the sublattice spanned by the rays in the cone's lattice
        (simplicial cones only; None otherwise).  1 for the zero cone."""
        if not self.is_simplicial:
            return None
        return abs(self.local_ray_matrix().det())

    @property
    def is_smooth(self) -> bool:
        return self.multiplicity() == 1

    def classify(self) -> dict:
        m = self.multiplicity()
        return {
            "simplicial": self.is_simplicial,
            "smooth": m == 1,
            "multiplicity": m,
        }

    # -- triangulation and volume -----------------------------------------

    def triangulation(self):
        """Pulling triangulation as tuples of ray indices (each of size rank);
        simplices have pairwise disjoint interiors and cover the cone."""
        if self.rank == 0:
            return ((),)
        if self.is_simplicial:
            return (tuple(range(len(self.rays))),)
        apex = 0  # rays are sorted, so ray 0 is the lexicographic minimum
        simplices = set()
        local = self.local_rays()
        for n in self.facet_normals:
            if _dot_int(n, local[apex]) == 0:
                continue
            facet_indices = tuple(
                i for i in range(len(self.rays)) if _dot_int(n, local[i]) == 0
            )
            facet = self.face_with_ray_indices(facet_indices)
            # map the facet cone's (lex-sorted) rays back to parent indices
            to_parent = []
            for fr in facet.cone.rays:
                p_local = tuple(facet.inclusion.apply(fr))
                to_parent.append(
                    next(i for i in facet_indices if local[i] == p_local)
                )
            for simplex in facet.cone.triangulation():
                simplices.add(
                    tuple(sorted((apex,) + tuple(to_parent[k] for k in simplex)))
                )
        return tuple(sorted(simplices))

    def normalized_volume(self):
        """Sum of |det| over a triangulation, in lattice coordinates; equals
        the multiplicity for simplicial cones."""
        local = self.local_rays()
        total = 0
        for simplex in self.triangulation():
            mat = IntMatrix.from_cols([local[i] for i in simplex], nrows=self.rank)
            total += abs(mat.det())
        return total

    # -- parallelepiped enumeration (resolution pivots) --------------------

    def fundamental_points(self):
        """Lattice points of the half-open fundamental parallelepiped of a
        simplicial cone, as (lattice-coordinate point, ray-coefficient tuple)
        pairs; exactly multiplicity() points, the origin included."""
        if not self.is_simplicial:
            raise ValueError("fundamental parallelepiped needs a simplicial cone")
        r = self.rank
        if r == 0:
            return (((), ()),)
        mat = self.local_ray_matrix()
        d, u, _v = snf(mat)
        mult = abs(mat.det())
        config.charge(mult, "parallelepiped points")
        uinv = _invert_via_solve(u)
        diag = [d.entries[i][i] for i in range(r)]
        points = []
        for residues in _product_ranges(diag):
            x0 = uinv.apply(residues)
            coeffs = solve_frac(mat, x0)
            reduced = tuple(c - _floor(c) for c in coeffs)
            point = tuple(
                sum(mat.entries[i][j] * reduced[j] for j in range(r))
                for i in range(r)
            )
            assert all(p.denominator == 1 for p in point)
            points.append((tuple(int(p) for p in point), reduced))
        assert len(points) == mult
        return tuple(sorted(points))

    # -- identity ----------------------------------------------------------

    def key(self):
        return (self.ambient_dim, self.rays, self.lattice)

    def __eq__(self, other):
        return isinstance(other, Cone) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        return f"Cone(dim={self.ambient_dim}, rank={self.rank}, rays={list(self.rays)})"


def _dot_frac(n, local):
    return sum((Fraction(a) * b for a, b in zip(n, local)), start=Fraction(0))


def _floor(f: Fraction) -> int:
    return f.numerator // f.denominator


def _product_ranges(diag):
    if not diag:
        yield ()
        return
    for rest in _product_ranges(diag[1:]):
        for x in range(diag[0]):
            yield (x,) + rest


def _invert_via_solve(u: IntMatrix) -> IntMatrix:
    cols = []
    n = u.nrows
    for j in range(n):
        target = tuple(1 if i == j else 0 for i in range(n))
        sol = solve_frac(u, target)
        assert sol is not None and all(x.denominator == 1 for x in sol)
        cols.append(tuple(int(x) for x in sol))
    return IntMatrix.from_cols(cols, nrows=n)


def _is_pointed(rays, dim) -> bool:
    """No nonzero nonnegative combination of the rays is zero."""
    if not rays:
        return True
    eqs = [
        (tuple(r[i] for r in rays), 0) for i in range(dim)
    ]
    eqs.append((tuple(1 for _ in rays), 1))
    ges = [
        (tuple(1 if j == k else 0 for j in range(len(rays))), 0)
        for k in range(len(rays))
    ]
    return lp.feasible(len(rays), eq=eqs, ge=ges) is None


def _in_nonneg_span(target, gens, dim) -> bool:
    if not gens:
        return all(x == 0 for x in target)
    eqs = [
        (tuple(g[i] for g in gens), target[i]) for i in range(dim)
    ]
    ges = [
        (tuple(1 if j == k else 0 for j in range(len(gens))), 0)
        for k in range(len(gens))
    ]
    return lp.feasible(len(gens), eq=eqs, ge=ges) is not None


def _extreme_subset(rays, dim):
    """Greedy removal of rays lying in the cone of the others; for pointed
    cones the result is the unique set of extreme rays."""
    current = list(rays)
    changed = True
    while changed:
        changed = False
        for k in range(len(current)):
            others = current[:k] + current[k + 1 :]
            if _in_nonneg_span(current[k], others, dim):
                current = others
                changed = True
                break
    return current


# ---------------------------------------------------------------------------
# cones from constraints, intersections


def cone_from_constraints(
    ambient_dim,
    equations=(),
    inequalities=(),
    ambient_lattice: Lattice | None = None,
) -> Cone:
    """The cone ``{x : e.x = 0 for e in equations, n.x >= 0 for n in
    inequalities}``, which must be strongly convex.  The result's lattice is
    the saturation of its span inside ``ambient_lattice`` (standard by
    default)."""
    if ambient_lattice is None:
        ambient_lattice = Lattice.standard(ambient_dim)
    eq_rows = [tuple(e) for e in equations]
    ineq_rows = [tuple(n) for n in inequalities]
    # solution space of the equations
    if eq_rows:
        basis = kernel(IntMatrix(list(eq_rows)))
        sub_dim = basis.ncols
        carrier = [basis.col(j) for j in range(sub_dim)]
    else:
        sub_dim = ambient_dim
        carrier = [
            tuple(1 if i == j else 0 for i in range(ambient_dim))
            for j in range(ambient_dim)
        ]
    while True:
        if sub_dim == 0:
            return Cone.from_rays(ambient_dim, [], Lattice.zero(ambient_dim))
        restricted = [
            tuple(_dot_int(n, c) for c in carrier) for n in ineq_rows
        ]
        restricted = [r for r in restricted if any(x != 0 for x in r)]
        if not restricted:
            raise ValueError("constraint cone contains a line")
        # implicit equalities: rows that cannot be strictly satisfied
        implicit = []
        ges = [(r, 0) for r in restricted]
        for k, row in enumerate(restricted):
            if lp.feasible(sub_dim, ge=ges, gt=[(row, 0)]) is None:
                implicit.append(row)
        if not implicit:
            break
        basis2 = kernel(IntMatrix(list(implicit)))
        carrier = [
            tuple(
                sum(carrier[i][a] * basis2.entries[i][j] for i in range(sub_dim))
                for a in range(ambient_dim)
            )
            for j in range(basis2.ncols)
        ]
        sub_dim = len(carrier)
    rays_local = double_description(restricted, sub_dim)
    rays = [
        tuple(
            sum(carrier[j][i] * y[j] for j in range(sub_dim))
            for i in range(ambient_dim)
        )
        for y in rays_local
    ]
    span = Lattice.from_generators(ambient_dim, rays)
    lat = saturate(span, ambient_lattice)
    return Cone.from_rays(ambient_dim, rays, lat)


def intersect_cones(a: Cone, b: Cone, ambient_lattice: Lattice | None = None) -> Cone:
    """Intersection of two cones in a common coordinate space, re-normalized
    with the saturated lattice of its span."""
    if a.ambient_dim != b.ambient_dim:
        raise ValueError("cones live in different spaces")
    dim = a.ambient_dim
    equations = []
    inequalities = []
    for c in (a, b):
        span_perp = kernel(IntMatrix([list(r) for r in _span_rows(c)]))
        # rows orthogonal to the span of c: e.x = 0 on c
        for j in range(span_perp.ncols):
            equations.append(span_perp.col(j))
        for n in c.facet_normals:
            # lift the lattice-coordinate normal to an ambient covector
            inequalities.append(_lift_normal(c, n))
    return cone_from_constraints(dim, equations, inequalities, ambient_lattice)


def _span_rows(c: Cone):
    """Rows spanning c's span as a subspace of the ambient (the lattice
    basis columns, transposed)."""
    if c.rank == 0:
        return [tuple(0 for _ in range(c.ambient_dim))]
    return [c.lattice.basis.col(j) for j in range(c.rank)]


def _lift_normal(c: Cone, n):
    """Ambient covector restricting to the lattice-coordinate covector n on
    c's span and vanishing on the orthogonal complement."""
    # solve basis^T . w = n for w using rational elimination, then clear
    # denominators; any solution works since membership also checks the span
    bt = c.lattice.basis.transpose()
    sol = solve_frac(bt, n)
    assert sol is not None and any(x != 0 for x in sol)
    return primitive_direction(sol)
