"""Rational conical polyhedral complexes and their subdivisions.

A complex is an abstract gluing: a list of cones, each full-dimensional
in its own standard coordinate space, plus face maps (injective integer
matrices with saturated image lattices) satisfying

  * each face map sends rays to rays, onto a geometric face of the host;
  * per cone and geometric face, exactly one declared incoming map;
  * composition closure: declared maps compose to declared maps;
  * the zero cone is present exactly once.

Under these invariants any chain of identifications between two cones
factors through a single shared face, so pairwise intersections in the
glued space are automatically unions of shared faces; that condition is
structural here rather than checked pointwise.

Subdivisions are stored as per-source-cone hostings: the minimal target
cone containing the piece plus an embedding matrix whose column lattice
is saturated.  The assembler turns per-target-cone piece lists into a
glued source complex with canonical cell identities; stellar subdivision,
simplicialization and smooth resolution all build on it.
"""

from __future__ import annotations

import functools
from fractions import Fraction

from . import config, lp
from .cone import Cone
from .cone import intersect_cones as _intersect_cones
from .intlinalg import (
    IntMatrix,
    Lattice,
    lattice_index,
    primitive_vector,
    saturate,
    solve_int,
)


def _dot(a, b):
    return sum(x * y for x, y in zip(a, b))


def _vector_sum(vectors, dim):
    return tuple(sum(v[i] for v in vectors) for i in range(dim))


class FaceMap:
    """Declared inclusion of cone ``sub`` as a face of cone ``sup``."""

    __slots__ = ("sub", "sup", "matrix")

    def __init__(self, sub: int, sup: int, matrix: IntMatrix):
        self.sub = sub
        self.sup = sup
        self.matrix = matrix

    def key(self):
        return (self.sup, self.sub, self.matrix.entries)

    def __eq__(self, other):
        return isinstance(other, FaceMap) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        return f"FaceMap({self.sub} -> {self.sup})"


class Complex:
    """Cones glued along declared face maps."""

    __slots__ = ("cones", "face_maps", "name", "_incoming", "_zero_id")

    def __init__(self, cones, face_maps, name: str = ""):
        self.cones = tuple(cones)
        self.face_maps = tuple(sorted(face_maps, key=lambda m: m.key()))
        self.name = name
        self._incoming = None
        self._zero_id = None

    def cone(self, cid: int) -> Cone:
        return self.cones[cid]

    def __len__(self):
        return len(self.cones)

    def _index(self):
        """Per-cone lookup: geometric face ray-key -> (sub id, matrix).
        Raises on structural inconsistency; validate_complex reports the
        same problems without raising."""
        if self._incoming is None:
            incoming = [dict() for _ in self.cones]
            for fm in self.face_maps:
                sup = self.cone(fm.sup)
                ray_pos = {r: i for i, r in enumerate(sup.rays)}
                image = []
                for r in self.cone(fm.sub).rays:
                    v = tuple(fm.matrix.apply(r))
                    if v not in ray_pos:
                        raise ValueError(
                            f"face map {fm.sub}->{fm.sup} does not send rays to rays"
                        )
                    image.append(ray_pos[v])
                key = tuple(sorted(image))
                if key in incoming[fm.sup]:
                    raise ValueError(
                        f"two face maps into cone {fm.sup} share the face {key}"
                    )
                incoming[fm.sup][key] = (fm.sub, fm.matrix)
            self._incoming = incoming
        return self._incoming

    def incoming(self, cid: int) -> dict:
        return self._index()[cid]

    def face_cone_of(self, cid: int, ray_indices):
        """(sub id, matrix) of the declared cone at a geometric face of
        ``cid``; the cone itself with the identity for the full ray set."""
        key = tuple(sorted(ray_indices))
        cone = self.cone(cid)
        if len(key) == len(cone.rays):
            return cid, IntMatrix.identity(cone.ambient_dim)
        return self._index()[cid][key]

    @property
    def zero_id(self) -> int:
        if self._zero_id is None:
            ids = [i for i, c in enumerate(self.cones) if c.rank == 0]
            if len(ids) != 1:
                raise ValueError(
                    f"complex has {len(ids)} zero cones, wants exactly one"
                )
            self._zero_id = ids[0]
        return self._zero_id

    def maps_from(self, sub_id: int):
        return tuple(fm for fm in self.face_maps if fm.sub == sub_id)

    def max_rank(self) -> int:
        return max(c.rank for c in self.cones)

    def ids_of_rank(self, rank: int):
        return tuple(i for i, c in enumerate(self.cones) if c.rank == rank)

    def key(self):
        return (
            tuple(c.key() for c in self.cones),
            tuple(m.key() for m in self.face_maps),
        )

    def __eq__(self, other):
        return isinstance(other, Complex) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        return f"Complex({self.name or 'unnamed'}, {len(self.cones)} cones)"


# ---------------------------------------------------------------------------
# validation


def validate_complex(c: Complex) -> list:
    """All violated invariants with offending cone/face ids; empty = valid."""
    problems = []
    for i, cone in enumerate(c.cones):
        if not isinstance(cone, Cone):
            problems.append(f"cone {i}: not a cone value")
            continue
        if cone.ambient_dim != cone.rank:
            problems.append(f"cone {i}: not full-dimensional in its coordinates")
            continue
        if cone.lattice != Lattice.standard(cone.ambient_dim):
            problems.append(f"cone {i}: lattice is not the standard lattice")
        if tuple(sorted(cone.rays)) != cone.rays:
            problems.append(f"cone {i}: rays not canonically ordered")
        for r in cone.rays:
            if primitive_vector(r) != r:
                problems.append(f"cone {i}: ray {r} not primitive")
    if problems:
        return problems
    zero_ids = [i for i, cone in enumerate(c.cones) if cone.rank == 0]
    if len(zero_ids) != 1:
        problems.append(
            f"zero cone present {len(zero_ids)} times, wants exactly once"
        )
    incoming = [dict() for _ in c.cones]
    for fm in c.face_maps:
        tag = f"face map {fm.sub}->{fm.sup}"
        if not (0 <= fm.sub < len(c.cones) and 0 <= fm.sup < len(c.cones)):
            problems.append(f"{tag}: cone id out of range")
            continue
        sub, sup = c.cone(fm.sub), c.cone(fm.sup)
        if fm.matrix.nrows != sup.ambient_dim or fm.matrix.ncols != sub.ambient_dim:
            problems.append(f"{tag}: matrix shape mismatch")
            continue
        image_lattice = Lattice.from_generators(sup.ambient_dim, fm.matrix.columns())
        if image_lattice.rank != sub.ambient_dim:
            problems.append(f"{tag}: matrix not injective")
            continue
        sat = saturate(image_lattice, Lattice.standard(sup.ambient_dim))
        if image_lattice != sat:
            problems.append(
                f"{tag}: face lattice not saturated "
                f"(index {lattice_index(image_lattice, sat)})"
            )
            continue
        ray_pos = {r: k for k, r in enumerate(sup.rays)}
        image = []
        ok = True
        for r in sub.rays:
            v = tuple(fm.matrix.apply(r))
            if v not in ray_pos:
                problems.append(f"{tag}: ray image {v} is not a ray of the host")
                ok = False
                break
            image.append(ray_pos[v])
        if not ok:
            continue
        if len(set(image)) != len(image):
            problems.append(f"{tag}: distinct rays collapsed")
            continue
        key = tuple(sorted(image))
        if key not in {f.ray_indices for f in sup.faces()}:
            problems.append(
                f"{tag}: image ray set {key} is not a face of cone {fm.sup}"
            )
            continue
        if key in incoming[fm.sup]:
            problems.append(f"cone {fm.sup}: face {key} has two declared maps")
            continue
        incoming[fm.sup][key] = (fm.sub, fm.matrix)
    if problems:
        return problems
    for i, cone in enumerate(c.cones):
        for f in cone.faces():
            if len(f.ray_indices) == len(cone.rays):
                continue
            if f.ray_indices not in incoming[i]:
                problems.append(f"cone {i}: face {f.ray_indices} has no declared cone")
    if problems:
        return problems
    for fm in c.face_maps:
        delta = c.cone(fm.sub)
        sup_ray_pos = {r: k for k, r in enumerate(c.cone(fm.sup).rays)}
        for f in delta.faces():
            if len(f.ray_indices) == len(delta.rays):
                continue
            d, mu = incoming[fm.sub][f.ray_indices]
            composite = fm.matrix @ mu
            image = [sup_ray_pos.get(tuple(composite.apply(r))) for r in c.cone(d).rays]
            if None in image:
                problems.append(
                    f"maps {d}->{fm.sub}->{fm.sup} compose to something that "
                    "is not a face inclusion"
                )
                continue
            key = tuple(sorted(image))
            declared = incoming[fm.sup].get(key)
            if declared is None or declared[0] != d or declared[1] != composite:
                problems.append(
                    f"maps {d}->{fm.sub}->{fm.sup} do not compose to the "
                    f"declared map at face {key}"
                )
    return problems


# ---------------------------------------------------------------------------
# fans as complexes


def import_fan(ambient_rank: int, rays, cone_ray_sets, name: str = "fan") -> Complex:
    """Build a complex from a fan in one ambient lattice.  Each face's
    lattice becomes the saturation of its span; face maps record the
    induced inclusions.  Raises when two listed cones intersect in
    anything other than a common face."""
    prim = [primitive_vector(tuple(r)) for r in rays]
    ambient_cones = [
        Cone.from_rays(ambient_rank, [prim[i] for i in s]) for s in cone_ray_sets
    ]
    for i in range(len(ambient_cones)):
        for j in range(i + 1, len(ambient_cones)):
            a, b = ambient_cones[i], ambient_cones[j]
            inter = _intersect_cones(a, b)
            common = set(a.rays) & set(b.rays)
            key = frozenset(inter.rays)
            faces_a = {
                frozenset(a.rays[k] for k in f.ray_indices) for f in a.faces()
            }
            faces_b = {
                frozenset(b.rays[k] for k in f.ray_indices) for f in b.faces()
            }
            if not (set(inter.rays) <= common and key in faces_a and key in faces_b):
                raise ValueError(
                    f"listed cones {i} and {j} intersect outside a common face"
                )
    closure = {}
    for amb in ambient_cones:
        for f in amb.faces():
            fkey = tuple(sorted(amb.rays[k] for k in f.ray_indices))
            closure.setdefault(fkey, f.lattice)
    if () not in closure:
        closure[()] = Lattice.zero(ambient_rank)
    order = sorted(closure, key=lambda k: (len(k), k))
    ids = {k: i for i, k in enumerate(order)}
    abstract = []
    for k in order:
        lat = closure[k]
        if not k:
            abstract.append(Cone.zero(0))
            continue
        local = [lat.coords_of(r) for r in k]
        abstract.append(Cone.from_rays(lat.rank, local, Lattice.standard(lat.rank)))
    face_maps = []
    for k_sub in order:
        for k_sup in order:
            if k_sub == k_sup or not set(k_sub) <= set(k_sup):
                continue
            lat_sub, lat_sup = closure[k_sub], closure[k_sup]
            cols = [
                lat_sup.coords_of(lat_sub.basis.col(j)) for j in range(lat_sub.rank)
            ]
            matrix = IntMatrix.from_cols(cols, nrows=lat_sup.rank)
            face_maps.append(FaceMap(ids[k_sub], ids[k_sup], matrix))
    return Complex(abstract, face_maps, name=name)


def single_cone_complex(ambient_rank: int, rays, name: str = "") -> Complex:
    """The complex of one cone and all its faces."""
    return import_fan(
        ambient_rank, rays, [list(range(len(rays)))], name=name or "cone"
    )


# ---------------------------------------------------------------------------
# subdivisions


class Subdivision:
    """A refinement: per source cone, its minimal hosting target cone and
    the embedding matrix (with saturated column lattice)."""

    __slots__ = ("source", "target", "hosting", "certificate")

    def __init__(self, source: Complex, target: Complex, hosting, certificate=None):
        self.source = source
        self.target = target
        self.hosting = tuple(hosting)
        self.certificate = certificate

    def host_of(self, source_id: int):
        return self.hosting[source_id]

    def embedded_rays(self, source_id: int):
        """The source cone's rays in its host cone's coordinates."""
        _tid, emb = self.hosting[source_id]
        return tuple(tuple(emb.apply(r)) for r in self.source.cone(source_id).rays)

    def pieces_by_target(self) -> dict:
        """Full-rank source cone ids per hosting target cone id."""
        out = {t: [] for t in range(len(self.target.cones))}
        for sid, (tid, _e) in enumerate(self.hosting):
            if self.source.cone(sid).rank == self.target.cone(tid).rank:
                out[tid].append(sid)
        return out

    def is_identity(self) -> bool:
        return self.source == self.target and all(
            tid == sid
            and emb == IntMatrix.identity(self.source.cone(sid).ambient_dim)
            for sid, (tid, emb) in enumerate(self.hosting)
        )

    def key(self):
        return (
            self.source.key(),
            self.target.key(),
            tuple((t, e.entries) for t, e in self.hosting),
        )

    def __eq__(self, other):
        return isinstance(other, Subdivision) and self.key() == other.key()

    def __repr__(self):
        return (
            f"Subdivision({len(self.source.cones)} cones over "
            f"{len(self.target.cones)})"
        )


def identity_subdivision(c: Complex) -> Subdivision:
    hosting = [
        (i, IntMatrix.identity(c.cone(i).ambient_dim)) for i in range(len(c.cones))
    ]
    return Subdivision(c, c, hosting)


def _cell_key(target: Complex, tid: int, cell_rays):
    """Canonical identity of a cell inside target cone ``tid``: the declared
    cone of the minimal geometric face containing it plus the cell's rays in
    that cone's coordinates.  Returns (key, matrix of key-cone into tid)."""
    t_cone = target.cone(tid)
    total = _vector_sum(cell_rays, t_cone.ambient_dim)
    min_idx = t_cone.minimal_face_indices(total)
    d, m = target.face_cone_of(tid, min_idx)
    if d == tid:
        local = tuple(sorted(cell_rays))
    else:
        pulled = []
        for r in cell_rays:
            x = solve_int(m, r)
            assert x is not None, "cell ray escapes its minimal face lattice"
            pulled.append(x)
        local = tuple(sorted(pulled))
    return (d, local), m


@functools.lru_cache(maxsize=65536)
def _cell_geometry(nd: int, local_rays):
    """Abstract cone spanned by integer vectors in ``Z^nd`` plus the basis
    of their saturated span; depends only on the ray tuple, so repeated
    assemblies share the result (both parts are immutable)."""
    if not local_rays:
        return Cone.zero(0), IntMatrix.zeros(nd, 0)
    span = Lattice.from_generators(nd, local_rays)
    sub = saturate(span, Lattice.standard(nd))
    coords = [sub.coords_of(r) for r in local_rays]
    cone = Cone.from_rays(sub.rank, coords, Lattice.standard(sub.rank))
    return cone, sub.basis


def _cell_cone_and_embedding(target: Complex, key):
    """The abstract cone for a cell key, and its embedding into the key
    cone's coordinates (the saturated-span basis)."""
    d, local_rays = key
    return _cell_geometry(target.cone(d).ambient_dim, local_rays)


def assemble_subdivision(target: Complex, pieces) -> Subdivision:
    """Glue per-target-cone piece lists into a subdivision.

    ``pieces[tid]`` lists the full-rank pieces of target cone ``tid`` as
    cones in its coordinates; every target cone needs a list (a single
    entry, the cone itself, where nothing is subdivided).  Piece lists
    must be face-compatible: the cells induced on a declared face must
    coincide with that face's own pieces.  Cover (volume bookkeeping and
    interior disjointness) is checked by validate_subdivision, not here.
    """
    if len(pieces) != len(target.cones):
        raise ValueError("need a piece list for every target cone")
    target._index()
    cells = {}
    relations = {}
    for tid in range(len(target.cones)):
        t_cone = target.cone(tid)
        for piece in pieces[tid]:
            if (
                piece.ambient_dim != t_cone.ambient_dim
                or piece.rank != t_cone.rank
            ):
                raise ValueError(f"piece of cone {tid} is not full-dimensional")
            for r in piece.rays:
                if not t_cone.contains_point(r):
                    raise ValueError(f"piece of cone {tid} leaves the cone")
            config.charge(1, "assembled pieces")
            face_data = {}
            for f in piece.faces():
                cell_rays = tuple(piece.rays[i] for i in f.ray_indices)
                cell_key, m = _cell_key(target, tid, cell_rays)
                if cell_key not in cells:
                    cone, embed = _cell_cone_and_embedding(target, cell_key)
                    cells[cell_key] = {"cone": cone, "embed": embed}
                face_data[f.ray_indices] = (cell_key, m @ cells[cell_key]["embed"])
            for f in piece.faces():
                sup_key, t_f = face_data[f.ray_indices]
                sup_cone = cells[sup_key]["cone"]
                ray_pos = {r: i for i, r in enumerate(sup_cone.rays)}
                for g in piece.faces():
                    if g.ray_indices == f.ray_indices or not set(
                        g.ray_indices
                    ) <= set(f.ray_indices):
                        continue
                    sub_key, t_g = face_data[g.ray_indices]
                    inside = []
                    for i in g.ray_indices:
                        x = solve_int(t_f, piece.rays[i])
                        assert x is not None, "cell ray escapes the host lattice"
                        inside.append(ray_pos[x])
                    inside = tuple(sorted(inside))
                    cols = []
                    for j in range(t_g.ncols):
                        x = solve_int(t_f, t_g.col(j))
                        assert x is not None, "sub cell escapes the sup cell lattice"
                        cols.append(x)
                    matrix = IntMatrix.from_cols(cols, nrows=t_f.ncols)
                    rel_id = (sup_key, inside)
                    value = (sub_key, matrix)
                    if rel_id in relations:
                        assert relations[rel_id] == value, (
                            "inconsistent cell identification across hosts"
                        )
                    else:
                        relations[rel_id] = value
    # face compatibility: cells attributed to a cone with full rank there
    # must be exactly that cone's own listed pieces
    for delta in range(len(target.cones)):
        want = target.cone(delta).rank
        attributed = {
            k
            for k, rec in cells.items()
            if k[0] == delta and rec["cone"].rank == want
        }
        listed = set()
        for p in pieces[delta]:
            cell_key, _m = _cell_key(target, delta, tuple(p.rays))
            listed.add(cell_key)
        if attributed != listed:
            raise ValueError(f"piece lists are not face-compatible at cone {delta}")
    order = sorted(cells, key=lambda k: (cells[k]["cone"].rank, k[0], k[1]))
    ids = {k: i for i, k in enumerate(order)}
    face_maps = [
        FaceMap(ids[sub_key], ids[sup_key], matrix)
        for (sup_key, _inside), (sub_key, matrix) in relations.items()
    ]
    source = Complex(
        [cells[k]["cone"] for k in order],
        face_maps,
        name=f"{target.name}/refined" if target.name else "refined",
    )
    hosting = [(k[0], cells[k]["embed"]) for k in order]
    return Subdivision(source, target, hosting)


def truncated_volume(cone: Cone, ell) -> Fraction:
    """n! times the volume of ``cone`` cut by {ell <= 1}, for a cone
    full-dimensional in standard coordinates and a functional positive on
    the cone minus the origin.  Unlike the sum of ray determinants this
    quantity is additive over subdivisions, since all pieces share the
    one truncation."""
    total = Fraction(0)
    for simplex in sorted(cone.triangulation()):
        cols = [cone.rays[i] for i in simplex]
        denominator = 1
        for r in cols:
            value = _dot(ell, r)
            assert value > 0, "truncating functional not positive on a ray"
            denominator *= value
        m = IntMatrix.from_cols(cols, nrows=cone.ambient_dim)
        total += Fraction(abs(m.det()), denominator)
    return total


def validate_subdivision(s: Subdivision) -> list:
    """All violated subdivision invariants: hosting shapes, containment,
    saturated embeddings, minimal hosts, commutation with face maps, and
    the cover condition (truncated volumes add up, interiors pairwise
    disjoint)."""
    problems = []
    if len(s.hosting) != len(s.source.cones):
        return ["hosting list length does not match the source complex"]
    for sid, (tid, emb) in enumerate(s.hosting):
        tag = f"source cone {sid}"
        if not (0 <= tid < len(s.target.cones)):
            problems.append(f"{tag}: host id {tid} out of range")
            continue
        c = s.source.cone(sid)
        t = s.target.cone(tid)
        if emb.nrows != t.ambient_dim or emb.ncols != c.ambient_dim:
            problems.append(f"{tag}: embedding shape mismatch")
            continue
        embedded = [tuple(emb.apply(r)) for r in c.rays]
        if any(not t.contains_point(v) for v in embedded):
            problems.append(f"{tag}: leaves its host cone {tid}")
            continue
        col_lattice = Lattice.from_generators(t.ambient_dim, emb.columns())
        if col_lattice.rank != c.ambient_dim:
            problems.append(f"{tag}: embedding not injective")
            continue
        if col_lattice != saturate(col_lattice, Lattice.standard(t.ambient_dim)):
            problems.append(f"{tag}: embedded lattice not saturated in host {tid}")
            continue
        min_idx = t.minimal_face_indices(_vector_sum(embedded, t.ambient_dim))
        if len(min_idx) != len(t.rays):
            problems.append(f"{tag}: host {tid} is not minimal")
    if problems:
        return problems
    for fm in s.source.face_maps:
        tid_sub, emb_sub = s.hosting[fm.sub]
        tid_sup, emb_sup = s.hosting[fm.sup]
        composite = emb_sup @ fm.matrix
        t = s.target.cone(tid_sup)
        embedded = [tuple(composite.apply(r)) for r in s.source.cone(fm.sub).rays]
        min_idx = t.minimal_face_indices(_vector_sum(embedded, t.ambient_dim))
        d, m = s.target.face_cone_of(tid_sup, min_idx)
        if d != tid_sub:
            problems.append(
                f"hosting does not commute at source face map {fm.sub}->{fm.sup}: "
                f"face cone {d} vs host {tid_sub}"
            )
            continue
        if m @ emb_sub != composite:
            problems.append(
                f"hosting matrices do not commute at source face map "
                f"{fm.sub}->{fm.sup}"
            )
    by_target = s.pieces_by_target()
    for tid, t in enumerate(s.target.cones):
        piece_ids = by_target[tid]
        if t.rank == 0:
            if len(piece_ids) != 1:
                problems.append(
                    f"target zero cone hosts {len(piece_ids)} zero pieces"
                )
            continue
        embedded_pieces = []
        for sid in piece_ids:
            emb = s.hosting[sid][1]
            rays = [emb.apply(r) for r in s.source.cone(sid).rays]
            embedded_pieces.append(Cone.from_rays(t.ambient_dim, rays))
        ell = _vector_sum(t.facet_normals, t.ambient_dim)
        volume = sum(
            (truncated_volume(p, ell) for p in embedded_pieces), Fraction(0)
        )
        want = truncated_volume(t, ell)
        if volume != want:
            problems.append(
                f"cover volume mismatch at target cone {tid}: pieces give "
                f"{volume}, cone has {want}"
            )
        for i in range(len(embedded_pieces)):
            for j in range(i + 1, len(embedded_pieces)):
                strict = [
                    (n, 0)
                    for n in embedded_pieces[i].facet_normals
                    + embedded_pieces[j].facet_normals
                ]
                if lp.feasible(t.ambient_dim, gt=strict) is not None:
                    problems.append(
                        f"pieces {piece_ids[i]} and {piece_ids[j]} of target "
                        f"cone {tid} have overlapping interiors"
                    )
    return problems


def compose_subdivisions(outer: Subdivision, inner: Subdivision) -> Subdivision:
    """The composite refinement inner.source -> outer.target, with hosts
    re-minimalized so the result is again canonical."""
    if inner.target != outer.source:
        raise ValueError("subdivisions do not compose: middle complexes differ")
    hosting = []
    for sid in range(len(inner.source.cones)):
        mid_id, emb_inner = inner.hosting[sid]
        tid, emb_outer = outer.hosting[mid_id]
        emb = emb_outer @ emb_inner
        c = inner.source.cone(sid)
        t = outer.target.cone(tid)
        embedded = [tuple(emb.apply(r)) for r in c.rays]
        min_idx = t.minimal_face_indices(_vector_sum(embedded, t.ambient_dim))
        d, m = outer.target.face_cone_of(tid, min_idx)
        if d == tid:
            hosting.append((tid, emb))
        else:
            cols = []
            for j in range(emb.ncols):
                x = solve_int(m, emb.col(j))
                assert x is not None, "minimal host lattice does not absorb the piece"
                cols.append(x)
            hosting.append((d, IntMatrix.from_cols(cols, nrows=m.ncols)))
    return Subdivision(inner.source, outer.target, hosting)


# ---------------------------------------------------------------------------
# stellar subdivision


def stellar_subdivision(c: Complex, cone_id: int, point) -> Subdivision:
    """Global stellar subdivision at a primitive point of one cone.  Every
    cone containing the point's minimal face is star-subdivided; when that
    changes nothing (the point lies on a ray whose star is already conical)
    the identity subdivision is returned."""
    c._index()
    sigma = c.cone(cone_id)
    point = tuple(int(x) for x in point)
    if all(x == 0 for x in point):
        raise ValueError("cannot subdivide at the zero point")
    if primitive_vector(point) != point:
        raise ValueError("subdivision point must be primitive")
    min_idx = sigma.minimal_face_indices(point)
    d0, m0 = c.face_cone_of(cone_id, min_idx)
    if d0 == cone_id:
        p0 = point
    else:
        p0 = solve_int(m0, point)
        assert p0 is not None, "point escapes its minimal face lattice"
    affected = {d0: IntMatrix.identity(c.cone(d0).ambient_dim)}
    for fm in c.face_maps:
        if fm.sub == d0:
            if fm.sup in affected:
                raise ValueError(
                    f"cone {fm.sup} contains the point along two glued faces; "
                    "stellar subdivision is not supported there"
                )
            affected[fm.sup] = fm.matrix
    pieces = []
    trivial = True
    for tid in range(len(c.cones)):
        t = c.cone(tid)
        if tid not in affected:
            pieces.append([t])
            continue
        p = tuple(affected[tid].apply(p0))
        positive = [n for n in t.facet_normals if _dot(n, p) > 0]
        assert positive, "nonzero point with no positive facet normal"
        if len(positive) > 1:
            trivial = False
        plist = []
        for n in positive:
            rays = [r for r in t.rays if _dot(n, r) == 0]
            rays.append(p)
            plist.append(Cone.from_rays(t.ambient_dim, rays))
        pieces.append(plist)
    if trivial:
        return identity_subdivision(c)
    return assemble_subdivision(c, pieces)


# ---------------------------------------------------------------------------
# simplicialization and resolution


def _apex_ray_indices(cone: Cone):
    """Rays r such that the cone is r joined with the face spanned by the
    other rays; a cone is simplicial exactly when every ray is an apex."""
    out = []
    for i in range(len(cone.rays)):
        others = [cone.rays[j] for j in range(len(cone.rays)) if j != i]
        total = _vector_sum(others, cone.ambient_dim)
        if i not in cone.minimal_face_indices(total):
            out.append(i)
    return out


def _extend_refinement(total, cert, step, certify, center=None):
    """Compose one stellar ``step`` onto the running refinement ``total``,
    threading the projectivity certificate when requested.  Each stellar
    step carries a closed-form good function, and composites stay good
    under the epsilon-weighted sum, so no searching is needed here."""
    if not certify:
        return compose_subdivisions(total, step), None
    from . import plfun

    step_cert = plfun.stellar_certificate(step, center)
    cert = step_cert if cert is None else plfun.compose_certificates(cert, step_cert)
    return cert.plfunction.subdivision, cert


def _finish_refinement(total, cert, certify):
    if certify:
        from . import plfun

        if cert is None:
            cert = plfun.identity_certificate(total)
        total.certificate = cert
    return total


def simplicialize(c: Complex, certify: bool = True) -> Subdivision:
    """Refine until every cone is simplicial, by stellar subdivisions at
    existing rays only (no new rays).  Identity on simplicial complexes.
    With ``certify``, a projectivity certificate is attached."""
    total = identity_subdivision(c)
    cert = None
    while True:
        cur = total.source
        worst = None
        for cid, cone in enumerate(cur.cones):
            measure = len(cone.rays) - len(_apex_ray_indices(cone))
            if measure > 0 and (worst is None or measure > worst[0]):
                worst = (measure, cid)
        if worst is None:
            return _finish_refinement(total, cert, certify)
        config.charge(1, "simplicialization steps")
        _measure, cid = worst
        cone = cur.cone(cid)
        apexes = set(_apex_ray_indices(cone))
        ray_index = next(i for i in range(len(cone.rays)) if i not in apexes)
        step = stellar_subdivision(cur, cid, cone.rays[ray_index])
        assert not step.is_identity(), "stellar at a non-apex ray must refine"
        center = None
        if certify:
            # the subdividing point is an existing ray, so name its ray
            # cone in the refined complex for the certificate
            t_ray = cur.face_cone_of(cid, (ray_index,))[0]
            center = next(
                sid
                for sid in range(len(step.source.cones))
                if step.source.cone(sid).rank == 1
                and step.hosting[sid][0] == t_ray
            )
        total, cert = _extend_refinement(total, cert, step, certify, center)


def resolve(c: Complex, certify: bool = True) -> Subdivision:
    """Refine until every cone is smooth: simplicialize, then repeatedly
    star-subdivide a worst-multiplicity cone at a fundamental-domain point
    of smallest coefficient sum (ties broken lexicographically).  The
    multiplicity strictly drops in every subdivided cone, so the loop
    terminates.  With ``certify``, a projectivity certificate for the
    composite refinement is attached."""
    total = simplicialize(c, certify=certify)
    cert = total.certificate if certify else None
    while True:
        cur = total.source
        worst = None
        for cid, cone in enumerate(cur.cones):
            mult = cone.multiplicity()
            assert mult is not None, "resolution loop requires simplicial cones"
            if mult > 1 and (worst is None or mult > worst[0]):
                worst = (mult, cid)
        if worst is None:
            break
        config.charge(1, "resolution steps")
        _mult, cid = worst
        cone = cur.cone(cid)
        best = None
        for pt, coeffs in cone.fundamental_points():
            if all(x == 0 for x in pt):
                continue
            key = (sum(coeffs), pt)
            if best is None or key < best:
                best = key
        assert best is not None, "multiplicity > 1 cone without interior points"
        w = best[1]
        assert primitive_vector(w) == w, "minimal-sum fundamental point not primitive"
        step = stellar_subdivision(cur, cid, w)
        assert not step.is_identity()
        total, cert = _extend_refinement(total, cert, step, certify)
    return _finish_refinement(total, cert, certify)


# ---------------------------------------------------------------------------
# isomorphism of complexes


def complex_isomorphism(a: Complex, b: Complex):
    """A cone-id bijection identifying the two complexes (equal cones and
    equal face-map matrices), or None.  Candidates are pruned by iterated
    structural colors, then matched by backtracking."""
    if len(a.cones) != len(b.cones) or len(a.face_maps) != len(b.face_maps):
        return None

    def refine(colors, face_maps):
        out = []
        for i in range(len(colors)):
            inc = sorted(
                (fm.matrix.entries, colors[fm.sub]) for fm in face_maps if fm.sup == i
            )
            outg = sorted(
                (fm.matrix.entries, colors[fm.sup]) for fm in face_maps if fm.sub == i
            )
            out.append((colors[i], tuple(inc), tuple(outg)))
        return out

    colors_a = [c.key() for c in a.cones]
    colors_b = [c.key() for c in b.cones]
    for _ in range(len(a.cones)):
        interned = {}

        def intern(value):
            return interned.setdefault(value, len(interned))

        new_a = [intern(v) for v in refine(colors_a, a.face_maps)]
        new_b = [intern(v) for v in refine(colors_b, b.face_maps)]
        # refinement only ever splits color classes, so a stable class
        # count means the partition is stable
        if len(set(new_a) | set(new_b)) == len(set(colors_a) | set(colors_b)):
            colors_a, colors_b = new_a, new_b
            break
        colors_a, colors_b = new_a, new_b
    if sorted(colors_a) != sorted(colors_b):
        return None
    amaps = {}
    for fm in a.face_maps:
        amaps.setdefault((fm.sub, fm.sup), []).append(fm.matrix.entries)
    bmaps = {}
    for fm in b.face_maps:
        bmaps.setdefault((fm.sub, fm.sup), []).append(fm.matrix.entries)
    for v in amaps.values():
        v.sort()
    for v in bmaps.values():
        v.sort()
    order = sorted(range(len(a.cones)), key=lambda i: (colors_a[i], i))
    assignment = {}
    used = set()

    def consistent(i, j):
        if a.cone(i) != b.cone(j):
            return False
        pairs = list(assignment.items()) + [(i, j)]
        for k, fk in pairs:
            if amaps.get((i, k), []) != bmaps.get((j, fk), []):
                return False
            if amaps.get((k, i), []) != bmaps.get((fk, j), []):
                return False
        return True

    def search(pos):
        if pos == len(order):
            return True
        i = order[pos]
        for j in range(len(b.cones)):
            if j in used or colors_b[j] != colors_a[i]:
                continue
            if not consistent(i, j):
                continue
            assignment[i] = j
            used.add(j)
            if search(pos + 1):
                return True
            del assignment[i]
            used.remove(j)
        return False

    if search(0):
        return dict(assignment)
    return None
