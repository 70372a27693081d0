"""Seeded random instance generator.

Everything here is deterministic given a seed: the same seed always
produces the same complexes, morphisms, and alterations, entry for
entry.  The default seed is a fixed constant recorded below so that the
self-test command and the acceptance suite exercise one reproducible
corpus; changing it is a deliberate, versioned event.

The generators only ever emit *valid* instances — each one is checked
against the structural validators before it is returned, and a
generation bug raises ``RuntimeError`` rather than leaking a broken
instance into a test run.
"""

import functools
import random

from .cone import Cone
from .complexes import (
    Complex,
    Subdivision,
    compose_subdivisions,
    identity_subdivision,
    import_fan,
    resolve,
    single_cone_complex,
    stellar_subdivision,
    validate_complex,
)
from .intlinalg import IntMatrix, Lattice, primitive_vector
from .morphism import (
    Alteration,
    ComplexMorphism,
    LatticeAlteration,
    base_change,
    identity_morphism,
    induced_morphism,
    trivial_lattice_alteration,
    validate_alteration,
    validate_lattice_alteration,
    validate_morphism,
)
from .plfun import PLFunction, from_divisor, validate_plfunction
from .reduction import kawamata_sublattice

__all__ = [
    "DEFAULT_SEED",
    "base_change_instances",
    "complex_corpus",
    "complete_fan_2d",
    "kawamata_instances",
    "morphism_corpus",
    "plfunction_instances",
    "random_complex",
    "random_fan_2d",
    "random_morphism",
    "random_points",
    "smooth_complex_corpus",
]

#: Fixed corpus seed.  Regenerating the corpus under a different seed is
#: a versioned event, not a per-run choice.
DEFAULT_SEED = 20260822

_MAX_ATTEMPTS = 200


def _rng(seed, tag, index):
    """An independent stream per (seed, purpose, instance index)."""
    return random.Random(f"{seed}:{tag}:{index}")


def _checked_complex(c: Complex) -> Complex:
    problems = validate_complex(c)
    if problems:
        raise RuntimeError(f"corpus produced an invalid complex: {problems}")
    return c


def _checked_morphism(f: ComplexMorphism) -> ComplexMorphism:
    problems = validate_morphism(f)
    if problems:
        raise RuntimeError(f"corpus produced an invalid morphism: {problems}")
    return f


# ---------------------------------------------------------------------------
# random vectors and cones


def random_points(rng, dim, radius=4, count=1):
    """``count`` random integer points with entries in [-radius, radius]."""
    return [
        tuple(rng.randint(-radius, radius) for _ in range(dim))
        for _ in range(count)
    ]


def _random_nonzero_vector(rng, dim, bound):
    for _ in range(_MAX_ATTEMPTS):
        v = tuple(rng.randint(-bound, bound) for _ in range(dim))
        if any(v):
            return v
    raise RuntimeError("could not draw a nonzero vector")


def _random_pointed_rays(rng, dim, bound, max_gens):
    """Generators of a full-dimensional strongly convex cone, by
    rejection: draw a few vectors, keep them if they span a pointed
    full-rank cone (checked by the cone constructor downstream)."""
    for _ in range(_MAX_ATTEMPTS):
        gens = [
            _random_nonzero_vector(rng, dim, bound)
            for _ in range(rng.randint(dim, max_gens))
        ]
        try:
            cone = Cone.from_rays(dim, gens)
        except ValueError:
            continue
        if cone.rank == dim:
            return cone.rays
    raise RuntimeError(f"could not draw a pointed full cone in rank {dim}")


# ---------------------------------------------------------------------------
# random fans in rank two


def _half(v):
    x, y = v
    return 0 if (y > 0 or (y == 0 and x > 0)) else 1


def _ray_cmp(a, b):
    if _half(a) != _half(b):
        return _half(a) - _half(b)
    cross = a[0] * b[1] - a[1] * b[0]
    return -1 if cross > 0 else (1 if cross < 0 else 0)


def _fan_from_directions(vectors):
    """A valid two-dimensional fan: sort primitive rays by angle, take
    consecutive pairs spanning less than a half turn as top cones, and
    keep uncovered rays as lone cones.  ``None`` when no direction
    survives."""
    rays = []
    for v in vectors:
        if v == (0, 0):
            continue
        p = primitive_vector(v)
        if p not in rays:
            rays.append(p)
    if not rays:
        return None
    rays.sort(key=functools.cmp_to_key(_ray_cmp))
    n = len(rays)
    cones = []
    covered = set()
    if n > 1:
        for i in range(n):
            j = (i + 1) % n
            if i == j:
                continue
            a, b = rays[i], rays[j]
            if a[0] * b[1] - a[1] * b[0] > 0:
                cones.append([i, j])
                covered.update([i, j])
    for i in range(n):
        if i not in covered:
            cones.append([i])
    return import_fan(2, rays, cones)


def random_fan_2d(rng, max_rays=6, bound=4):
    """A random two-dimensional fan with ray entries in [-bound, bound]."""
    for _ in range(_MAX_ATTEMPTS):
        vectors = [
            tuple(rng.randint(-bound, bound) for _ in range(2))
            for _ in range(rng.randint(2, max_rays))
        ]
        fan = _fan_from_directions(vectors)
        if fan is not None:
            return _checked_complex(fan)
    raise RuntimeError("could not draw a two-dimensional fan")


def complete_fan_2d(rng, max_rays=5, bound=4):
    """A random *complete* two-dimensional fan: every direction is
    covered.  Achieved by closing the drawn directions under negation,
    which forces every angular gap below a half turn."""
    for _ in range(_MAX_ATTEMPTS):
        vectors = [
            _random_nonzero_vector(rng, 2, bound)
            for _ in range(rng.randint(2, max_rays))
        ]
        lines = {primitive_vector(v) for v in vectors}
        lines |= {tuple(-x for x in v) for v in lines}
        if len(lines) < 4:
            continue
        fan = _fan_from_directions(sorted(lines))
        if fan is None:
            continue
        # complete iff no lone maximal ray remains
        if all(c.rank == 2 for i, c in enumerate(fan.cones) if not fan.maps_from(i)):
            return _checked_complex(fan)
    raise RuntimeError("could not draw a complete two-dimensional fan")


# ---------------------------------------------------------------------------
# random complexes in any rank


def _orthant_subfan(rng, rank, max_cones=4):
    """A fan made of a few random sign-orthants of Z^rank."""
    signs = []
    seen = set()
    for _ in range(rng.randint(1, max_cones)):
        s = tuple(rng.choice((1, -1)) for _ in range(rank))
        if s not in seen:
            seen.add(s)
            signs.append(s)
    rays = []
    index = {}
    cone_ray_sets = []
    for s in signs:
        ids = []
        for axis in range(rank):
            v = tuple(s[axis] if j == axis else 0 for j in range(rank))
            if v not in index:
                index[v] = len(rays)
                rays.append(v)
            ids.append(index[v])
        cone_ray_sets.append(ids)
    return _checked_complex(import_fan(rank, rays, cone_ray_sets))


def _refine(rng, c: Complex, steps, bound=4) -> Subdivision:
    """A random chain of stellar subdivisions of ``c``, as one
    subdivision.  Each step splits a random full-rank cone at a random
    interior point; steps whose new ray would leave [-bound, bound] or
    would not subdivide are skipped."""
    total = identity_subdivision(c)
    for _ in range(steps):
        current = total.source
        tops = [
            i
            for i, cone in enumerate(current.cones)
            if cone.rank == cone.ambient_dim and cone.rank >= 2
        ]
        if not tops:
            break
        cid = rng.choice(tops)
        cone = current.cone(cid)
        point = tuple(
            sum(rng.randint(1, 2) * r[j] for r in cone.rays)
            for j in range(cone.ambient_dim)
        )
        new_ray = primitive_vector(point)
        if any(abs(x) > bound for x in new_ray):
            continue
        try:
            step = stellar_subdivision(current, cid, point)
        except ValueError:
            continue
        total = compose_subdivisions(total, step)
    return total


def random_complex(rng, rank_cap=3, bound=4):
    """A random valid complex of rank at most ``rank_cap`` whose cones
    have ray entries in [-bound, bound]."""
    recipes = ["fan2d", "fan2d_refined", "single", "zero"]
    if rank_cap >= 3:
        recipes += ["single3", "orthants", "orthants_refined"]
    if rank_cap >= 4:
        recipes += ["single4", "orthants4"]
    kind = rng.choice(recipes)
    if kind == "zero":
        # the smallest interesting complexes: a ray, or two opposite rays
        if rng.random() < 0.5:
            return _checked_complex(single_cone_complex(1, [(1,)]))
        return _checked_complex(import_fan(1, [(1,), (-1,)], [[0], [1]]))
    if kind == "fan2d":
        return random_fan_2d(rng, bound=bound)
    if kind == "fan2d_refined":
        fan = random_fan_2d(rng, bound=bound)
        return _checked_complex(_refine(rng, fan, rng.randint(1, 2), bound).source)
    if kind == "single":
        rank = rng.randint(1, 2)
        rays = _random_pointed_rays(rng, rank, bound, rank + 2)
        return _checked_complex(single_cone_complex(rank, rays))
    if kind == "single3":
        rays = _random_pointed_rays(rng, 3, bound, 5)
        return _checked_complex(single_cone_complex(3, rays))
    if kind == "orthants":
        return _orthant_subfan(rng, 3)
    if kind == "orthants_refined":
        fan = _orthant_subfan(rng, 3)
        return _checked_complex(_refine(rng, fan, 1, bound).source)
    if kind == "single4":
        rays = _random_pointed_rays(rng, 4, 2, 5)
        return _checked_complex(single_cone_complex(4, rays))
    if kind == "orthants4":
        return _orthant_subfan(rng, 4, max_cones=2)
    raise RuntimeError(f"unknown recipe {kind}")


def complex_corpus(count=200, count_high_rank=20, seed=DEFAULT_SEED):
    """The complex corpus: ``count`` random complexes of rank at most
    three with ray entries in [-4, 4], followed by ``count_high_rank``
    rank-four cases (smaller entries, to keep desingularization fast)."""
    out = []
    for i in range(count):
        out.append(random_complex(_rng(seed, "complex", i), rank_cap=3))
    for i in range(count_high_rank):
        rng = _rng(seed, "complex4", i)
        kind = rng.choice(["single4", "orthants4", "orthants4_refined"])
        if kind == "single4":
            rays = _random_pointed_rays(rng, 4, 2, 5)
            out.append(_checked_complex(single_cone_complex(4, rays)))
        elif kind == "orthants4":
            out.append(_orthant_subfan(rng, 4, max_cones=2))
        else:
            fan = _orthant_subfan(rng, 4, max_cones=1)
            out.append(_checked_complex(_refine(rng, fan, 1, bound=2).source))
    return out


# ---------------------------------------------------------------------------
# random morphisms


def _subdivision_morphism(s: Subdivision, scale=1) -> ComplexMorphism:
    """The morphism underlying a subdivision (each piece embeds into its
    host), optionally composed with multiplication by ``scale``."""
    assigned = {}
    for sid, (tid, emb) in enumerate(s.hosting):
        m = emb
        if scale != 1:
            m = IntMatrix(
                [[scale * x for x in row] for row in emb.entries],
                shape=(emb.nrows, emb.ncols),
            )
        assigned[sid] = (tid, m)
    return induced_morphism(s.source, s.target, assigned)


def _scaling_morphism(c: Complex, k: int) -> ComplexMorphism:
    """Multiplication by ``k`` from a complex to itself."""
    assigned = {}
    for cid, cone in enumerate(c.cones):
        n = cone.ambient_dim
        entries = [[k if i == j else 0 for j in range(n)] for i in range(n)]
        assigned[cid] = (cid, IntMatrix(entries, shape=(n, n)))
    return induced_morphism(c, c, assigned)


def _escape_morphism(rng, target: Complex, rank_cap=3) -> ComplexMorphism:
    """A morphism from a small smooth orthant into one cone of
    ``target``: each source basis vector goes to a random nonnegative
    combination of the chosen cone's rays (zero allowed, so collapses
    onto faces and onto the origin occur)."""
    candidates = [i for i, cone in enumerate(target.cones) if cone.rank >= 1]
    tid = rng.choice(candidates)
    cone = target.cone(tid)
    r = rng.randint(1, rank_cap)
    source = single_cone_complex(
        r, [tuple(1 if j == i else 0 for j in range(r)) for i in range(r)]
    )
    cols = []
    for _ in range(r):
        coeffs = [rng.randint(0, 2) for _ in cone.rays]
        cols.append(
            tuple(
                sum(c * ray[j] for c, ray in zip(coeffs, cone.rays))
                for j in range(cone.ambient_dim)
            )
        )
    matrix = IntMatrix.from_cols(cols, nrows=cone.ambient_dim)
    top = next(
        sid for sid, sc in enumerate(source.cones) if sc.rank == r
    )
    return induced_morphism(source, target, {top: (tid, matrix)})


def _linear_map_morphism(rng, bound=2) -> ComplexMorphism:
    """A random linear map between two complete plane fans, kept only
    when every source cone lands inside a single target cone."""
    source = complete_fan_2d(rng)
    target = complete_fan_2d(rng)
    for _ in range(_MAX_ATTEMPTS):
        m = IntMatrix(
            [[rng.randint(-bound, bound) for _ in range(2)] for _ in range(2)]
        )
        assigned = {}
        ok = True
        for sid, cone in enumerate(source.cones):
            if cone.rank != 2:
                continue
            images = [m.apply(ray) for ray in cone.rays]
            host = None
            for tid, tc in enumerate(target.cones):
                if tc.rank == 2 and all(tc.contains_point(v) for v in images):
                    host = tid
                    break
            if host is None:
                ok = False
                break
            assigned[sid] = (host, m)
        if ok and assigned:
            try:
                return induced_morphism(source, target, assigned)
            except ValueError:
                continue
    # dense random maps rarely respect both fans; fall back to a scaling
    return _scaling_morphism(source, rng.choice((1, 2)))


def random_morphism(rng, rank_cap=3) -> ComplexMorphism:
    """A random valid morphism with source and target ranks at most
    ``rank_cap``.  The recipes cover identities, refinements, finite
    covers (global scaling), maps into single cones with collapses, and
    random linear maps between complete plane fans."""
    kind = rng.choice(
        [
            "identity",
            "refinement",
            "refinement",
            "scaling",
            "scaled_refinement",
            "escape",
            "escape",
            "escape",
            "linear",
        ]
    )
    if kind == "identity":
        return _checked_morphism(identity_morphism(random_complex(rng, rank_cap)))
    if kind == "refinement":
        base = random_complex(rng, rank_cap)
        s = _refine(rng, base, rng.randint(1, 2))
        return _checked_morphism(_subdivision_morphism(s))
    if kind == "scaling":
        return _checked_morphism(
            _scaling_morphism(random_complex(rng, rank_cap), rng.choice((2, 3)))
        )
    if kind == "scaled_refinement":
        base = random_complex(rng, rank_cap)
        s = _refine(rng, base, 1)
        return _checked_morphism(_subdivision_morphism(s, scale=rng.choice((2, 3))))
    if kind == "escape":
        return _checked_morphism(
            _escape_morphism(rng, random_complex(rng, rank_cap), rank_cap)
        )
    if kind == "linear":
        return _checked_morphism(_linear_map_morphism(rng))
    raise RuntimeError(f"unknown recipe {kind}")


def morphism_corpus(count=100, seed=DEFAULT_SEED, rank_cap=3):
    """``count`` random valid morphisms with ranks at most ``rank_cap``."""
    return [
        random_morphism(_rng(seed, "morphism", i), rank_cap)
        for i in range(count)
    ]


# ---------------------------------------------------------------------------
# smooth complexes and prescribed ray orders


def smooth_complex_corpus(count=50, seed=DEFAULT_SEED):
    """``count`` random non-singular complexes of rank at most three,
    obtained by desingularizing random complexes."""
    out = []
    i = 0
    while len(out) < count:
        rng = _rng(seed, "smooth", i)
        i += 1
        base = random_complex(rng, rank_cap=3)
        smooth = resolve(base, certify=False).source
        if not all(cone.is_smooth for cone in smooth.cones):
            raise RuntimeError("desingularization left a singular cone")
        out.append(smooth)
    return out


def kawamata_instances(count=50, seed=DEFAULT_SEED, max_order=4):
    """``(smooth complex, ray orders)`` pairs: each ray cone gets a
    random order in 1..max_order."""
    out = []
    for i, smooth in enumerate(smooth_complex_corpus(count, seed)):
        rng = _rng(seed, "orders", i)
        orders = {
            rid: rng.randint(1, max_order) for rid in smooth.ids_of_rank(1)
        }
        out.append((smooth, orders))
    return out


# ---------------------------------------------------------------------------
# alterations and base-change instances


def _global_scaling_lattices(c: Complex, k: int) -> LatticeAlteration:
    subs = {}
    for cid, cone in enumerate(c.cones):
        n = cone.ambient_dim
        if n == 0:
            continue
        subs[cid] = Lattice.from_generators(
            n, [tuple(k if i == j else 0 for j in range(n)) for i in range(n)]
        )
    return LatticeAlteration(c, subs)


def _random_alteration(rng, base: Complex) -> Alteration:
    """A random alteration of ``base``: an optional stellar refinement,
    then a lattice correction (trivial, a global scaling, or random ray
    orders when the refined complex is non-singular)."""
    if rng.random() < 0.6:
        sub = _refine(rng, base, rng.randint(1, 2))
    else:
        sub = identity_subdivision(base)
    refined = sub.source
    style = rng.choice(["trivial", "global", "orders"])
    if style == "orders" and all(cone.is_smooth for cone in refined.cones):
        orders = {
            rid: rng.randint(1, 3) for rid in refined.ids_of_rank(1)
        }
        lat = kawamata_sublattice(refined, orders)
    elif style == "global":
        lat = _global_scaling_lattices(refined, rng.choice((2, 3)))
    else:
        lat = trivial_lattice_alteration(refined)
    problems = validate_lattice_alteration(lat)
    if problems:
        raise RuntimeError(f"corpus produced an invalid lattice alteration: {problems}")
    a = Alteration(sub, lat)
    problems = validate_alteration(a)
    if problems:
        raise RuntimeError(f"corpus produced an invalid alteration: {problems}")
    return a


def base_change_instances(count=100, seed=DEFAULT_SEED):
    """``(morphism, first alteration, second alteration)`` triples: the
    first alteration lives on the morphism's target, the second on the
    result of applying the first, so the two can be composed and the
    base changes compared."""
    out = []
    i = 0
    while len(out) < count:
        rng = _rng(seed, "basechange", i)
        i += 1
        f = random_morphism(rng, rank_cap=3)
        a1 = _random_alteration(rng, f.target)
        mid = base_change(f, a1)
        a2 = _random_alteration(rng, mid.target)
        out.append((f, a1, a2))
    return out


# ---------------------------------------------------------------------------
# piecewise linear functions


def plfunction_instances(count=40, seed=DEFAULT_SEED):
    """``(subdivision, coefficients, function)`` triples on simplicial
    plane fans: random ray coefficients extended linearly piece by
    piece."""
    out = []
    i = 0
    while len(out) < count:
        rng = _rng(seed, "plfun", i)
        i += 1
        fan = random_fan_2d(rng)
        if not all(cone.is_simplicial for cone in fan.cones):
            continue
        if rng.random() < 0.7:
            s = _refine(rng, fan, rng.randint(1, 2))
        else:
            s = identity_subdivision(fan)
        if not all(cone.is_simplicial for cone in s.source.cones):
            continue
        coefficients = {
            rid: rng.randint(-3, 3) for rid in s.source.ids_of_rank(1)
        }
        p = from_divisor(s, coefficients)
        problems = validate_plfunction(p)
        if problems:
            raise RuntimeError(f"corpus produced an invalid function: {problems}")
        out.append((s, coefficients, p))
    return out
