"""Brute-force reference implementations of the package's decidable
predicates, for differential testing and frozen example values.

Everything here is deliberately slow and obviously correct, and shares no
mathematical code with the fast paths: membership is decided by a
from-scratch Fourier-Motzkin elimination over ray coefficients, linear
systems by a local rational Gaussian elimination, lattice generation by a
local integer row echelon, and multiplicities by direct lattice-point
enumeration.  The only things taken from the rest of the package are the
data structures themselves and the step budget."""

from fractions import Fraction
from itertools import combinations_with_replacement, product

from . import config

__all__ = [
    "Box",
    "brute_convexity",
    "brute_membership",
    "brute_multiplicity",
    "brute_surjectivity",
]


class Box:
    """A coordinate bound for enumerations: all integer vectors with
    entries in ``[-radius, radius]``."""

    __slots__ = ("radius",)

    def __init__(self, radius):
        r = int(radius)
        if r < 1:
            raise ValueError(f"box radius must be at least 1, got {radius}")
        self.radius = r

    def points(self, dim):
        """All integer vectors of the given dimension inside the box."""
        span = range(-self.radius, self.radius + 1)
        return product(span, repeat=dim)

    def __repr__(self):
        return f"Box({self.radius})"


# ---------------------------------------------------------------------------
# local exact arithmetic helpers (no code shared with the fast paths)


def _dot(a, b):
    return sum(x * y for x, y in zip(a, b))


def _matvec(rows, v):
    """Rows of a matrix applied to a vector, over exact numbers."""
    return tuple(_dot(row, v) for row in rows)


def _feasible_nonneg(columns, target):
    """Whether ``sum_i lambda_i columns[i] = target`` has a solution with
    all ``lambda_i >= 0``, by Fourier-Motzkin elimination.

    Constraints are rows ``(coeffs, const)`` meaning
    ``coeffs . lambda + const >= 0``."""
    k = len(columns)
    n = len(target)
    constraints = []
    for i in range(k):
        row = [Fraction(0)] * k
        row[i] = Fraction(1)
        constraints.append((row, Fraction(0)))
    for j in range(n):
        row = [Fraction(columns[i][j]) for i in range(k)]
        t = Fraction(target[j])
        constraints.append((row, -t))
        constraints.append(([-x for x in row], t))
    for var in range(k):
        pos, neg, rest = [], [], []
        for coeffs, const in constraints:
            c = coeffs[var]
            if c > 0:
                pos.append((coeffs, const))
            elif c < 0:
                neg.append((coeffs, const))
            else:
                rest.append((coeffs, const))
        for pc, pconst in pos:
            for nc, nconst in neg:
                config.charge(1, "oracle elimination rows")
                a, b = pc[var], -nc[var]
                coeffs = [b * x + a * y for x, y in zip(pc, nc)]
                const = b * pconst + a * nconst
                if any(coeffs):
                    rest.append((coeffs, const))
                elif const < 0:
                    return False
        constraints = rest
    return all(const >= 0 for _coeffs, const in constraints)


def _solve_columns(columns, target):
    """The unique rational coefficient vector with
    ``sum_i t_i columns[i] = target``, or ``None`` if the system is
    inconsistent.  The columns must be linearly independent."""
    k = len(columns)
    n = len(target)
    rows = [
        [Fraction(columns[i][j]) for i in range(k)] + [Fraction(target[j])]
        for j in range(n)
    ]
    rank = 0
    pivots = []
    for col in range(k):
        piv = next((i for i in range(rank, n) if rows[i][col] != 0), None)
        if piv is None:
            raise ValueError("columns are linearly dependent")
        rows[rank], rows[piv] = rows[piv], rows[rank]
        lead = rows[rank][col]
        rows[rank] = [x / lead for x in rows[rank]]
        for i in range(n):
            if i != rank and rows[i][col] != 0:
                f = rows[i][col]
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[rank])]
        pivots.append(col)
        rank += 1
    for i in range(rank, n):
        if rows[i][k] != 0:
            return None
    return tuple(rows[i][k] for i in range(rank))


def _generates_standard(vectors, dim):
    """Whether the integer vectors generate all of ``Z^dim``, by a local
    integer row echelon (repeated Euclidean row reduction)."""
    rows = [list(v) for v in vectors if any(v)]
    for col in range(dim):
        carriers = [r for r in rows if r[col] != 0]
        while len(carriers) > 1:
            config.charge(1, "oracle echelon steps")
            carriers.sort(key=lambda r: abs(r[col]))
            small = carriers[0]
            for r in carriers[1:]:
                q = r[col] // small[col]
                for j in range(dim):
                    r[j] -= q * small[j]
            carriers = [r for r in carriers if r[col] != 0]
        if not carriers:
            return False
        pivot = carriers[0]
        if abs(pivot[col]) != 1:
            return False
        # every other row is already zero in this column; drop the pivot
        # and continue on the remaining rows (triangular index argument)
        rows = [r for r in rows if r is not pivot and any(r)]
    return True


# ---------------------------------------------------------------------------
# the oracles


def brute_membership(c, p, box):
    """Whether the cone contains the point: is some nonnegative rational
    combination of the rays equal to it?  Decided by Fourier-Motzkin
    elimination; exact regardless of the box, which is accepted only for
    the uniform oracle signature."""
    if not isinstance(box, Box):
        raise TypeError("wants a Box")
    if c.rank > 4:
        raise ValueError(
            f"rank {c.rank} is too large for the membership oracle (wants <= 4)"
        )
    point = tuple(int(x) for x in p)
    if len(point) != c.ambient_dim:
        raise ValueError(
            f"point has length {len(point)}, the cone lives in dimension "
            f"{c.ambient_dim}"
        )
    if not c.rays:
        return not any(point)
    return _feasible_nonneg(c.rays, point)


def brute_multiplicity(c):
    """The number of lattice points in the half-open fundamental
    parallelepiped of a simplicial cone's rays, by direct enumeration over
    the parallelepiped's bounding box."""
    rays = c.rays
    if len(rays) != c.rank:
        raise ValueError("the multiplicity oracle wants a simplicial cone")
    if c.rank > 3:
        raise ValueError(
            f"rank {c.rank} is too large for the multiplicity oracle (wants <= 3)"
        )
    if any(abs(x) > 6 for r in rays for x in r):
        raise ValueError(
            "ray entries larger than 6 in absolute value exceed the "
            "multiplicity oracle's enumeration budget"
        )
    if not rays:
        return 1
    n = c.ambient_dim
    lo = [sum(min(0, r[j]) for r in rays) for j in range(n)]
    hi = [sum(max(0, r[j]) for r in rays) for j in range(n)]
    count = 0
    for x in product(*(range(lo[j], hi[j] + 1) for j in range(n))):
        config.charge(1, "oracle enumeration points")
        t = _solve_columns(rays, x)
        if t is not None and all(0 <= ti < 1 for ti in t):
            count += 1
    return count


def brute_surjectivity(m, source, target, box):
    """Whether the matrix maps the source lattice onto the target lattice:
    the images of all source points in the box, written in target-lattice
    coordinates and reduced by a local integer echelon, generate
    everything.  Any box works: the images of the basis vectors already
    generate the image lattice."""
    if not isinstance(box, Box):
        raise TypeError("wants a Box")
    if source.rank > 3 or target.rank > 3:
        raise ValueError(
            f"ranks {source.rank} -> {target.rank} are too large for the "
            "surjectivity oracle (wants <= 3)"
        )
    src_cols = [source.basis.col(j) for j in range(source.rank)]
    tgt_cols = [target.basis.col(j) for j in range(target.rank)]
    images = []
    for coeffs in box.points(source.rank):
        config.charge(1, "oracle enumeration points")
        point = tuple(
            sum(col[j] * k for col, k in zip(src_cols, coeffs))
            for j in range(source.ambient_dim)
        )
        y = _matvec(m.entries, point)
        if not any(y):
            continue
        if not tgt_cols:
            return False
        t = _solve_columns(tgt_cols, y)
        if t is None or any(ti.denominator != 1 for ti in t):
            return False
        images.append(tuple(int(ti) for ti in t))
    if target.rank == 0:
        return True
    return _generates_standard(images, target.rank)


def _piece_data(p):
    """Per host cone id: list of (piece id, rays in host coordinates,
    functional), straight off the stored data."""
    s = p.subdivision
    hosts = {}
    for sid in sorted(p.functionals):
        host, emb = s.hosting[sid]
        cone = s.source.cone(sid)
        rays = tuple(_matvec(emb.entries, r) for r in cone.rays)
        hosts.setdefault(host, []).append((sid, rays, p.functionals[sid]))
    return hosts


def brute_convexity(p, box):
    """Whether the piecewise function is convex in the min convention and
    its pieces are maximal domains of linearity.

    Convexity: for all box lattice points ``x, y`` of a common host cone,
    the piecewise value satisfies ``psi(x + y) >= psi(x) + psi(y)`` (by
    positive homogeneity this is the midpoint inequality with denominator
    two).  Values come from piece membership decided by the oracle's own
    elimination, never from the fast evaluation path.  Maximality: a ray
    scan rejects two pieces of one host carrying the same functional."""
    if not isinstance(box, Box):
        raise TypeError("wants a Box")
    hosts = _piece_data(p)
    target = p.subdivision.target
    for host, pieces in hosts.items():
        n = target.cone(host).ambient_dim
        if n > 3:
            raise ValueError(
                f"host rank {n} is too large for the convexity oracle "
                "(wants <= 3)"
            )
        for i, (_sid_a, rays_a, f_a) in enumerate(pieces):
            for _sid_b, rays_b, f_b in pieces[i + 1 :]:
                config.charge(1, "oracle ray scans")
                if all(_dot(f_a, r) == _dot(f_b, r) for r in rays_a + rays_b):
                    return False

        cache = {}

        def value(x):
            if x not in cache:
                val = None
                for _sid, rays, functional in pieces:
                    if rays and _feasible_nonneg(rays, x):
                        val = _dot(functional, x)
                        break
                cache[x] = val
            return cache[x]

        members = [x for x in box.points(n) if value(x) is not None]
        for x, y in combinations_with_replacement(members, 2):
            config.charge(1, "oracle convexity pairs")
            z = tuple(a + b for a, b in zip(x, y))
            vz = value(z)
            if vz is None:
                raise RuntimeError(
                    "internal invariant violation: the pieces do not cover "
                    f"point {z} of host cone {host}"
                )
            if vz < value(x) + value(y):
                return False
    return True
