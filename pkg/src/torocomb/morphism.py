"""Morphisms of complexes, alterations of the target, and base change.

A morphism assigns to every abstract cone of the source a target cone
and an integer matrix mapping its coordinates into that cone's
coordinates, compatibly with the declared face maps.  Assignments are
kept canonical: the named target cone is always the minimal one
containing the image.  On top of plain validity the module grades
morphisms on a ladder -- equidimensional, weakly semistable, semistable
-- and computes ray multiplicities and whether only the apex maps to the
apex.

An alteration of a complex is a subdivision followed by a per-cone
change of lattice (a finite-index sublattice on each cell, compatible
along faces).  ``base_change`` pulls a morphism back along an alteration
of its target: the source is refined by the preimages of the new cells
and its lattices are replaced by the preimages of the new target
lattices.  ``compose_alterations`` flattens a tower of two alterations
into one, and ``morphism_equivalence`` decides whether two morphisms
differ only by renaming cones and unimodular coordinate changes --
the natural equality after a base change, whose coordinates depend on
the construction path.
"""

from fractions import Fraction
from math import gcd

from . import config, lp
from .cone import Cone, cone_from_constraints
from .complexes import (
    Complex,
    FaceMap,
    Subdivision,
    assemble_subdivision,
    compose_subdivisions,
    identity_subdivision,
    validate_complex,
    validate_subdivision,
)
from .intlinalg import (
    IntMatrix,
    Lattice,
    invert_unimodular,
    kernel,
    lattice_image,
    lattice_index,
    lattice_intersection,
    preimage_lattice,
    primitive_direction,
    saturate,
    solve_frac,
    solve_int,
)
from .plfun import _solve_linear_values


def _as_matrix(m, nrows, ncols):
    if not isinstance(m, IntMatrix):
        m = IntMatrix([list(row) for row in m], shape=(nrows, ncols))
    if m.nrows != nrows or m.ncols != ncols:
        raise ValueError(
            f"matrix has shape {m.nrows}x{m.ncols}, expected {nrows}x{ncols}"
        )
    return m


def _vector_sum(vectors, dim):
    total = [0] * dim
    for v in vectors:
        for i, x in enumerate(v):
            total[i] += x
    return tuple(total)


class ComplexMorphism:
    """A map of complexes: per source cone a target cone id and an
    integer matrix from its coordinates into the target cone's
    coordinates.  ``assignment`` is a tuple of ``(target_id, matrix)``
    pairs indexed by source cone id; use :func:`validate_morphism` to
    check coherence."""

    __slots__ = ("source", "target", "assignment")

    def __init__(self, source: Complex, target: Complex, assignment):
        self.source = source
        self.target = target
        entries = []
        if len(assignment) != len(source.cones):
            raise ValueError(
                f"assignment covers {len(assignment)} cones, source has "
                f"{len(source.cones)}"
            )
        for sid, (tid, m) in enumerate(assignment):
            tid = int(tid)
            if not 0 <= tid < len(target.cones):
                raise ValueError(f"cone {sid}: target id {tid} out of range")
            m = _as_matrix(
                m,
                target.cone(tid).ambient_dim,
                source.cone(sid).ambient_dim,
            )
            entries.append((tid, m))
        self.assignment = tuple(entries)

    def assigned(self, sid: int):
        """The ``(target_id, matrix)`` pair of source cone ``sid``."""
        return self.assignment[sid]

    def key(self):
        return (
            self.source.key(),
            self.target.key(),
            tuple((tid, m.entries) for tid, m in self.assignment),
        )

    def __eq__(self, other):
        if not isinstance(other, ComplexMorphism):
            return NotImplemented
        return self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        return (
            f"ComplexMorphism({self.source!r} -> {self.target!r}, "
            f"{len(self.assignment)} assignments)"
        )


def identity_morphism(c: Complex) -> ComplexMorphism:
    """The identity of ``c``: every cone maps to itself by the identity
    matrix."""
    assignment = [
        (cid, IntMatrix.identity(cone.ambient_dim))
        for cid, cone in enumerate(c.cones)
    ]
    return ComplexMorphism(c, c, assignment)


def _canonicalize_assignment(source, target, sid, tid, m):
    """Shrink ``(tid, m)`` to the minimal target cone containing the
    image of source cone ``sid``."""
    sigma = source.cone(sid)
    tau = target.cone(tid)
    images = [tuple(m.apply(r)) for r in sigma.rays]
    for v in images:
        if not tau.contains_point(v):
            raise ValueError(
                f"cone {sid}: a ray maps to {v}, outside target cone {tid}"
            )
    idx = tau.minimal_face_indices(_vector_sum(images, tau.ambient_dim))
    if len(idx) == len(tau.rays):
        return tid, m
    face_id, face_matrix = target.face_cone_of(tid, idx)
    cols = []
    for j in range(m.ncols):
        y = solve_int(face_matrix, m.col(j))
        if y is None:
            raise ValueError(
                f"cone {sid}: image does not lie in the saturated lattice "
                f"of target cone {face_id}"
            )
        cols.append(y)
    face_dim = target.cone(face_id).ambient_dim
    return face_id, IntMatrix.from_cols(cols, nrows=face_dim)


def induced_morphism(source: Complex, target: Complex, assigned) -> ComplexMorphism:
    """Build a morphism from assignments on the maximal cones.

    ``assigned`` maps source cone ids to ``(target_id, matrix)`` pairs;
    it must cover at least every maximal cone, and the named target cone
    need not be minimal.  Every other cone inherits its assignment by
    composing a declared face map into an assigned cone, and every
    assignment is canonicalized to the minimal target cone containing
    the image.
    """
    raw = {}
    for sid, (tid, m) in assigned.items():
        sid = int(sid)
        if not 0 <= sid < len(source.cones):
            raise ValueError(f"assigned cone id {sid} out of range")
        tid = int(tid)
        if not 0 <= tid < len(target.cones):
            raise ValueError(f"cone {sid}: target id {tid} out of range")
        raw[sid] = (
            tid,
            _as_matrix(
                m,
                target.cone(tid).ambient_dim,
                source.cone(sid).ambient_dim,
            ),
        )
    resolved = {}

    def resolve(sid):
        if sid in resolved:
            return resolved[sid]
        if sid in raw:
            pair = raw[sid]
        else:
            pair = None
            for fm in source.maps_from(sid):
                try:
                    tid_sup, m_sup = resolve(fm.sup)
                except ValueError:
                    continue
                pair = (tid_sup, m_sup @ fm.matrix)
                break
            if pair is None:
                raise ValueError(
                    f"no assignment given or derivable for cone {sid}"
                )
        resolved[sid] = _canonicalize_assignment(
            source, target, sid, pair[0], pair[1]
        )
        return resolved[sid]

    order = sorted(
        range(len(source.cones)),
        key=lambda i: -source.cone(i).rank,
    )
    for sid in order:
        resolve(sid)
    return ComplexMorphism(
        source, target, [resolved[sid] for sid in range(len(source.cones))]
    )


def validate_morphism(f: ComplexMorphism) -> list:
    """Check coherence of a morphism; returns a list of problem strings,
    empty when valid.

    Checks: both complexes are valid; every ray image lies in the named
    target cone; the named target cone is minimal (canonical form); and
    for every declared source face map the two routes to the target
    agree, the target ids being related by the corresponding declared
    target face."""
    problems = [f"source complex: {p}" for p in validate_complex(f.source)]
    problems += [f"target complex: {p}" for p in validate_complex(f.target)]
    if problems:
        return problems
    src, tgt = f.source, f.target
    for sid, (tid, m) in enumerate(f.assignment):
        sigma = src.cone(sid)
        tau = tgt.cone(tid)
        images = [tuple(m.apply(r)) for r in sigma.rays]
        bad = False
        for v in images:
            if not tau.contains_point(v):
                problems.append(
                    f"cone {sid}: ray image {v} lies outside target cone {tid}"
                )
                bad = True
        if bad:
            continue
        idx = tau.minimal_face_indices(_vector_sum(images, tau.ambient_dim))
        if len(idx) != len(tau.rays):
            problems.append(
                f"cone {sid}: target cone {tid} is not minimal for the image"
            )
    if problems:
        return problems
    for fm in src.face_maps:
        tid_sub, m_sub = f.assignment[fm.sub]
        tid_sup, m_sup = f.assignment[fm.sup]
        composite = m_sup @ fm.matrix
        sigma_sub = src.cone(fm.sub)
        tau_sup = tgt.cone(tid_sup)
        images = [tuple(composite.apply(r)) for r in sigma_sub.rays]
        idx = tau_sup.minimal_face_indices(
            _vector_sum(images, tau_sup.ambient_dim)
        )
        face_id, face_matrix = tgt.face_cone_of(tid_sup, idx)
        if face_id != tid_sub:
            problems.append(
                f"face map {fm.sub}->{fm.sup}: the face is assigned to "
                f"target cone {tid_sub} but the composite lands in "
                f"target cone {face_id}"
            )
            continue
        if face_matrix @ m_sub != composite:
            problems.append(
                f"face map {fm.sub}->{fm.sup}: the two routes to target "
                f"cone {tid_sup} do not commute"
            )
    return problems


def image_cone(f: ComplexMorphism, sid: int) -> Cone:
    """The image of source cone ``sid`` as a cone in the coordinates of
    its assigned target cone."""
    tid, m = f.assignment[sid]
    tau = f.target.cone(tid)
    rays = []
    for r in f.source.cone(sid).rays:
        v = tuple(m.apply(r))
        if any(v):
            rays.append(v)
    if not rays:
        return Cone.zero(tau.ambient_dim)
    return Cone.from_rays(tau.ambient_dim, rays)


class MorphismReport:
    """Classification of a morphism.

    ``equidimensional``: the image of every cone is a cone of the
    target.  ``weakly_semistable``: additionally every lattice map is
    surjective onto its target cone's lattice and the target is
    non-singular.  ``semistable``: additionally the source is
    non-singular.  ``preimage_zero_trivial``: only the apex maps to the
    apex.  ``ray_multiplicities``: per source ray cone id, a pair
    ``(target_ray_id, k)`` when the ray maps onto ``k`` times the
    primitive ray of a target ray cone (``(zero_id, 0)`` when it
    collapses), else ``(None, g)`` with ``g`` the content of the image
    vector.  ``failing_witnesses``: ``(cone_id, reason)`` pairs backing
    every failed grade."""

    __slots__ = (
        "equidimensional",
        "weakly_semistable",
        "semistable",
        "preimage_zero_trivial",
        "ray_multiplicities",
        "failing_witnesses",
    )

    def __init__(
        self,
        equidimensional,
        weakly_semistable,
        semistable,
        preimage_zero_trivial,
        ray_multiplicities,
        failing_witnesses,
    ):
        if weakly_semistable and not equidimensional:
            raise ValueError(
                "a weakly semistable morphism must be equidimensional"
            )
        if semistable and not weakly_semistable:
            raise ValueError(
                "a semistable morphism must be weakly semistable"
            )
        self.equidimensional = bool(equidimensional)
        self.weakly_semistable = bool(weakly_semistable)
        self.semistable = bool(semistable)
        self.preimage_zero_trivial = bool(preimage_zero_trivial)
        self.ray_multiplicities = dict(ray_multiplicities)
        self.failing_witnesses = tuple(failing_witnesses)

    def __repr__(self):
        grade = (
            "semistable"
            if self.semistable
            else "weakly semistable"
            if self.weakly_semistable
            else "equidimensional"
            if self.equidimensional
            else "general"
        )
        return (
            f"MorphismReport({grade}, preimage_zero_trivial="
            f"{self.preimage_zero_trivial}, "
            f"{len(self.failing_witnesses)} witnesses)"
        )


def classify_morphism(f: ComplexMorphism) -> MorphismReport:
    """Grade a valid morphism on the ladder and compute ray
    multiplicities and apex-preimage triviality, with witnesses for
    every failure."""
    src, tgt = f.source, f.target
    witnesses = []

    equidimensional = True
    for sid, (tid, _m) in enumerate(f.assignment):
        if image_cone(f, sid) != tgt.cone(tid):
            equidimensional = False
            witnesses.append(
                (
                    sid,
                    f"image of cone {sid} is a proper subcone of its "
                    f"minimal target cone {tid}",
                )
            )

    surjective = True
    for sid, (tid, m) in enumerate(f.assignment):
        n_t = tgt.cone(tid).ambient_dim
        image_lat = lattice_image(m, Lattice.standard(m.ncols))
        if image_lat == Lattice.standard(n_t):
            continue
        surjective = False
        if image_lat.rank < n_t:
            witnesses.append(
                (
                    sid,
                    f"lattice map of cone {sid} onto target cone {tid} "
                    f"only reaches rank {image_lat.rank} of {n_t}",
                )
            )
        else:
            k = lattice_index(image_lat, Lattice.standard(n_t))
            witnesses.append(
                (
                    sid,
                    f"lattice map of cone {sid} onto target cone {tid} "
                    f"has index {k}",
                )
            )

    target_smooth = True
    for tid, cone in enumerate(tgt.cones):
        if not cone.is_smooth:
            target_smooth = False
            witnesses.append((tid, f"target cone {tid} is not smooth"))
    source_smooth = True
    for sid, cone in enumerate(src.cones):
        if not cone.is_smooth:
            source_smooth = False
            witnesses.append((sid, f"source cone {sid} is not smooth"))

    preimage_zero_trivial = True
    for sid, (tid, m) in enumerate(f.assignment):
        sigma = src.cone(sid)
        if sigma.rank == 0:
            continue
        n = sigma.ambient_dim
        equations = [(m.row(i), 0) for i in range(m.nrows)]
        normals = sigma.facet_normals
        at_least = [(nrm, 0) for nrm in normals]
        interior = tuple(
            sum(nrm[i] for nrm in normals) for i in range(n)
        )
        point = lp.feasible(
            n, eq=equations, ge=at_least, gt=[(interior, 0)]
        )
        if point is not None:
            preimage_zero_trivial = False
            witnesses.append(
                (sid, f"a nonzero point of cone {sid} maps to zero")
            )

    multiplicities = {}
    for sid in src.ids_of_rank(1):
        tid, m = f.assignment[sid]
        # the image of the primitive generator, as a multiple of the
        # target ray cone's primitive generator when there is one
        v = tuple(m.apply(src.cone(sid).rays[0]))
        if not any(v):
            multiplicities[sid] = (tid, 0)
        elif tgt.cone(tid).rank == 1:
            k = v[0] * tgt.cone(tid).rays[0][0]
            multiplicities[sid] = (tid, k)
        else:
            g = 0
            for x in v:
                g = gcd(g, abs(x))
            multiplicities[sid] = (None, g)

    weakly = equidimensional and surjective and target_smooth
    return MorphismReport(
        equidimensional,
        weakly,
        weakly and source_smooth,
        preimage_zero_trivial,
        multiplicities,
        witnesses,
    )


def check_lifting(
    f: ComplexMorphism, source_refinement: Subdivision, target_refinement: Subdivision
):
    """Whether ``f`` lifts to the given refinements: every cell of the
    refined source must map into a single cell of the refined target.
    Returns ``(ok, witnesses)`` where each witness is ``(cell_id,
    reason)`` for a source cell whose image crosses target cells."""
    if source_refinement.target != f.source:
        raise ValueError("source refinement does not refine the source")
    if target_refinement.target != f.target:
        raise ValueError("target refinement does not refine the target")
    tgt = f.target
    by_host = {}
    for cid, (host, emb) in enumerate(target_refinement.hosting):
        cell = target_refinement.source.cone(cid)
        if cell.rank == 0:
            geo = Cone.zero(tgt.cone(host).ambient_dim)
        else:
            geo = Cone.from_rays(
                tgt.cone(host).ambient_dim,
                [tuple(emb.apply(r)) for r in cell.rays],
            )
        by_host.setdefault(host, []).append((cid, geo))
    witnesses = []
    for cid, (host, emb) in enumerate(source_refinement.hosting):
        config.charge(1, "lifting checks")
        tid, m = f.assignment[host]
        composite = m @ emb
        cell = source_refinement.source.cone(cid)
        images = [tuple(composite.apply(r)) for r in cell.rays]
        nonzero = [v for v in images if any(v)]
        if not nonzero:
            continue
        tau = tgt.cone(tid)
        idx = tau.minimal_face_indices(
            _vector_sum(nonzero, tau.ambient_dim)
        )
        if len(idx) == len(tau.rays):
            face_id, points = tid, nonzero
        else:
            face_id, face_matrix = tgt.face_cone_of(tid, idx)
            points = []
            for v in nonzero:
                y = solve_int(face_matrix, v)
                assert y is not None, (
                    "image escapes the saturated lattice of its minimal face"
                )
                points.append(tuple(y))
        found = False
        for cell_id, geo in by_host.get(face_id, ()):
            if all(geo.contains_point(p) for p in points):
                found = True
                break
        if not found:
            witnesses.append(
                (
                    cid,
                    f"image of source cell {cid} crosses the cells of the "
                    f"refined target inside target cone {face_id}",
                )
            )
    return (not witnesses, witnesses)


class LatticeAlteration:
    """A finite-index sublattice on every cone of a base complex,
    face-compatible: along each declared face map the image of the
    face's sublattice is exactly the part of the cone's sublattice lying
    in the face's span."""

    __slots__ = ("base", "sublattices")

    def __init__(self, base: Complex, sublattices):
        self.base = base
        if isinstance(sublattices, dict):
            entries = []
            for cid, cone in enumerate(base.cones):
                entries.append(
                    sublattices.get(cid, Lattice.standard(cone.ambient_dim))
                )
        else:
            entries = list(sublattices)
        if len(entries) != len(base.cones):
            raise ValueError(
                f"{len(entries)} sublattices for {len(base.cones)} cones"
            )
        self.sublattices = tuple(entries)

    def is_trivial(self) -> bool:
        return all(
            l == Lattice.standard(cone.ambient_dim)
            for l, cone in zip(self.sublattices, self.base.cones)
        )

    def key(self):
        return (
            self.base.key(),
            tuple(l.basis.entries for l in self.sublattices),
        )

    def __eq__(self, other):
        if not isinstance(other, LatticeAlteration):
            return NotImplemented
        return self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        return (
            f"LatticeAlteration({self.base!r}, "
            f"{sum(not l == Lattice.standard(l.ambient_dim) for l in self.sublattices)}"
            f" proper sublattices)"
        )


def trivial_lattice_alteration(base: Complex) -> LatticeAlteration:
    """The identity change of lattices on ``base``."""
    return LatticeAlteration(base, {})


def validate_lattice_alteration(a: LatticeAlteration) -> list:
    """Check a lattice alteration; returns problem strings, empty when
    valid.  Each sublattice must be full rank in its cone's coordinates
    and the family must be face-compatible."""
    problems = []
    for cid, (l, cone) in enumerate(zip(a.sublattices, a.base.cones)):
        if l.ambient_dim != cone.ambient_dim:
            problems.append(
                f"cone {cid}: sublattice lives in dimension {l.ambient_dim}, "
                f"cone in {cone.ambient_dim}"
            )
        elif l.rank != cone.ambient_dim:
            problems.append(
                f"cone {cid}: sublattice has rank {l.rank} < "
                f"{cone.ambient_dim}, so infinite index"
            )
    if problems:
        return problems
    for fm in a.base.face_maps:
        n_sup = fm.matrix.nrows
        image = lattice_image(fm.matrix, a.sublattices[fm.sub])
        span_part = saturate(
            lattice_image(fm.matrix, Lattice.standard(fm.matrix.ncols)),
            Lattice.standard(n_sup),
        )
        expected = lattice_intersection(a.sublattices[fm.sup], span_part)
        if image != expected:
            problems.append(
                f"face map {fm.sub}->{fm.sup}: sublattices are not "
                f"face-compatible"
            )
    return problems


def altered_complex(a: LatticeAlteration):
    """The base complex re-expressed so every sublattice becomes the
    standard lattice of its cone.  Returns ``(complex, bases)`` where
    ``bases[cid]`` is the matrix taking new coordinates of cone ``cid``
    to old ones."""
    bases = tuple(l.basis for l in a.sublattices)
    new_cones = []
    for cid, cone in enumerate(a.base.cones):
        if cone.rank == 0:
            new_cones.append(Cone.zero(0))
            continue
        b = bases[cid]
        rays = []
        for r in cone.rays:
            x = solve_frac(b, r)
            if x is None:
                raise ValueError(
                    f"cone {cid}: sublattice does not span the cone's space"
                )
            scale = 1
            for c in x:
                scale = scale * c.denominator // gcd(scale, c.denominator)
            rays.append(tuple(int(c * scale) for c in x))
        new_cones.append(Cone.from_rays(cone.ambient_dim, rays))
    new_maps = []
    for fm in a.base.face_maps:
        b_sub, b_sup = bases[fm.sub], bases[fm.sup]
        cols = []
        for j in range(b_sub.ncols):
            y = solve_int(b_sup, fm.matrix.apply(b_sub.col(j)))
            if y is None:
                raise ValueError(
                    f"face map {fm.sub}->{fm.sup}: sublattices are not "
                    f"face-compatible"
                )
            cols.append(y)
        new_maps.append(
            FaceMap(
                fm.sub,
                fm.sup,
                IntMatrix.from_cols(cols, nrows=b_sup.ncols),
            )
        )
    name = a.base.name + "/altered" if a.base.name else "altered"
    return Complex(new_cones, new_maps, name=name), bases


class Alteration:
    """A subdivision of a base complex followed by a face-compatible
    change of lattices on the refined complex.  ``base`` is the original
    complex; ``result()`` is the altered complex together with the
    per-cone basis matrices back to the refined base's coordinates."""

    __slots__ = ("subdivision_part", "lattice_part")

    def __init__(self, subdivision_part: Subdivision, lattice_part: LatticeAlteration):
        if lattice_part.base != subdivision_part.source:
            raise ValueError(
                "the lattice part must live on the refined complex of the "
                "subdivision part"
            )
        self.subdivision_part = subdivision_part
        self.lattice_part = lattice_part

    @property
    def base(self) -> Complex:
        return self.subdivision_part.target

    def is_trivial(self) -> bool:
        return (
            self.subdivision_part.is_identity()
            and self.lattice_part.is_trivial()
        )

    def result(self):
        """``(complex, bases)``: the altered complex and per-cone bases
        into the refined base's coordinates."""
        return altered_complex(self.lattice_part)

    def key(self):
        return (self.subdivision_part.key(), self.lattice_part.key())

    def __eq__(self, other):
        if not isinstance(other, Alteration):
            return NotImplemented
        return self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        return (
            f"Alteration(base={self.base!r}, "
            f"{len(self.lattice_part.base.cones)} refined cones)"
        )


def identity_alteration(c: Complex) -> Alteration:
    """The trivial alteration of ``c``."""
    return Alteration(identity_subdivision(c), trivial_lattice_alteration(c))


def validate_alteration(a: Alteration) -> list:
    """Check both parts of an alteration; returns problem strings."""
    problems = [
        f"subdivision part: {p}"
        for p in validate_subdivision(a.subdivision_part)
    ]
    problems += [
        f"lattice part: {p}"
        for p in validate_lattice_alteration(a.lattice_part)
    ]
    return problems


def _cell_geometry(s: Subdivision):
    """Per cell of the refined complex: ``(host, embedding, cone)`` with
    the cone written in the host's coordinates; grouped by host id."""
    by_host = {}
    for cid, (host, emb) in enumerate(s.hosting):
        cell = s.source.cone(cid)
        n = s.target.cone(host).ambient_dim
        if cell.rank == 0:
            geo = Cone.zero(n)
        else:
            geo = Cone.from_rays(n, [tuple(emb.apply(r)) for r in cell.rays])
        by_host.setdefault(host, []).append((cid, emb, geo))
    return by_host


def _pullback_piece(sigma: Cone, m: IntMatrix, cell: Cone) -> Cone:
    """``sigma`` intersected with the preimage under ``m`` of ``cell``
    (given in the codomain's coordinates), as a cone in ``sigma``'s
    coordinates."""
    n = sigma.ambient_dim
    equations = []
    if cell.rank == 0:
        equations = [m.row(i) for i in range(m.nrows)]
    elif cell.rank < cell.ambient_dim:
        span_rows = IntMatrix(
            [list(cell.lattice.basis.col(j)) for j in range(cell.lattice.rank)],
            shape=(cell.lattice.rank, cell.ambient_dim),
        )
        perp = kernel(span_rows)
        for j in range(perp.ncols):
            w = perp.col(j)
            equations.append(
                tuple(
                    sum(w[i] * m.entries[i][k] for i in range(m.nrows))
                    for k in range(n)
                )
            )
    inequalities = [tuple(nrm) for nrm in sigma.facet_normals]
    if cell.rank > 0:
        basis_t = cell.lattice.basis.transpose()
        for nrm in cell.facet_normals:
            w = solve_frac(basis_t, nrm)
            w = primitive_direction(w)
            inequalities.append(
                tuple(
                    sum(w[i] * m.entries[i][k] for i in range(m.nrows))
                    for k in range(n)
                )
            )
    return cone_from_constraints(n, equations=equations, inequalities=inequalities)


def _subdivision_base_change(f: ComplexMorphism, s: Subdivision) -> ComplexMorphism:
    """Pull ``f`` back along a subdivision of its target: refine each
    source cone by the preimages of the cells and assign each piece to
    the unique minimal cell containing its image."""
    src, tgt = f.source, f.target
    refined = s.source
    cells_by_host = _cell_geometry(s)
    # cells lying inside each target cone, written in its coordinates
    cells_in = {}
    for tid in range(len(tgt.cones)):
        entries = list(cells_by_host.get(tid, ()))
        for face_id, face_matrix in tgt.incoming(tid).values():
            for cid, emb, _geo in cells_by_host.get(face_id, ()):
                cell = refined.cone(cid)
                n = tgt.cone(tid).ambient_dim
                lifted = face_matrix @ emb
                if cell.rank == 0:
                    geo = Cone.zero(n)
                else:
                    geo = Cone.from_rays(
                        n, [tuple(lifted.apply(r)) for r in cell.rays]
                    )
                entries.append((cid, lifted, geo))
        cells_in[tid] = entries

    pieces = []
    for sid, sigma in enumerate(src.cones):
        if sigma.rank == 0:
            pieces.append([sigma])
            continue
        tid, m = f.assignment[sid]
        seen = {}
        for _cid, _emb, geo in cells_in[tid]:
            config.charge(1, "base change pieces")
            piece = _pullback_piece(sigma, m, geo)
            if piece.rank == sigma.ambient_dim:
                seen.setdefault(piece.rays, piece)
        pieces.append([seen[k] for k in sorted(seen)])
    refinement = assemble_subdivision(src, pieces)
    problems = validate_subdivision(refinement)
    if problems:
        raise RuntimeError(
            "base change produced an invalid source refinement: "
            + problems[0]
        )

    new_source = refinement.source
    assignment = []
    for cid in range(len(new_source.cones)):
        cell = new_source.cone(cid)
        host, emb = refinement.hosting[cid]
        tid, m = f.assignment[host]
        composite = m @ emb
        images = [tuple(composite.apply(r)) for r in cell.rays]
        nonzero = [v for v in images if any(v)]
        if not nonzero:
            assignment.append(
                (refined.zero_id, IntMatrix.zeros(0, cell.ambient_dim))
            )
            continue
        tau = tgt.cone(tid)
        idx = tau.minimal_face_indices(_vector_sum(nonzero, tau.ambient_dim))
        if len(idx) == len(tau.rays):
            face_id, pulled = tid, composite
        else:
            face_id, face_matrix = tgt.face_cone_of(tid, idx)
            cols = []
            for j in range(composite.ncols):
                y = solve_int(face_matrix, composite.col(j))
                assert y is not None, (
                    "image escapes the saturated lattice of its minimal face"
                )
                cols.append(y)
            pulled = IntMatrix.from_cols(
                cols, nrows=tgt.cone(face_id).ambient_dim
            )
        points = [tuple(pulled.apply(r)) for r in cell.rays]
        candidates = []
        for target_cell, cell_emb, geo in cells_by_host.get(face_id, ()):
            if all(geo.contains_point(p) for p in points):
                candidates.append(
                    (refined.cone(target_cell).rank, target_cell, cell_emb)
                )
        assert candidates, "a piece escapes every cell of the refined target"
        candidates.sort(key=lambda t: (t[0], t[1]))
        best_rank = candidates[0][0]
        assert sum(1 for t in candidates if t[0] == best_rank) == 1, (
            "minimal containing cell is not unique"
        )
        _rank, target_cell, cell_emb = candidates[0]
        cols = []
        for j in range(pulled.ncols):
            y = solve_int(cell_emb, pulled.col(j))
            assert y is not None, (
                "image escapes the saturated lattice of its cell"
            )
            cols.append(y)
        assignment.append(
            (
                target_cell,
                IntMatrix.from_cols(
                    cols, nrows=refined.cone(target_cell).ambient_dim
                ),
            )
        )
    return ComplexMorphism(new_source, refined, assignment)


def _lattice_base_change(f: ComplexMorphism, a: LatticeAlteration) -> ComplexMorphism:
    """Pull ``f`` back along a change of lattices on its target: each
    source cone's lattice becomes the preimage of its target cone's
    sublattice, and both sides are re-expressed in the new lattices."""
    new_target, target_bases = altered_complex(a)
    src = f.source
    source_lattices = []
    for sid, (tid, m) in enumerate(f.assignment):
        source_lattices.append(preimage_lattice(m, a.sublattices[tid]))
    source_alteration = LatticeAlteration(src, source_lattices)
    new_source, source_bases = altered_complex(source_alteration)
    assignment = []
    for sid, (tid, m) in enumerate(f.assignment):
        sb, tb = source_bases[sid], target_bases[tid]
        cols = []
        for j in range(sb.ncols):
            y = solve_int(tb, m.apply(sb.col(j)))
            assert y is not None, (
                "the altered target lattice does not absorb the morphism"
            )
            cols.append(y)
        assignment.append((tid, IntMatrix.from_cols(cols, nrows=tb.ncols)))
    return ComplexMorphism(new_source, new_target, assignment)


def base_change(f: ComplexMorphism, a: Alteration) -> ComplexMorphism:
    """Pull a morphism back along an alteration of its target.

    The result's target is the altered complex; the result's source
    refines the original source by the preimages of the new cells and
    carries the preimage lattices.  Raises ``ValueError`` when the
    alteration's base is not the morphism's target and ``RuntimeError``
    when the construction fails to validate."""
    if a.base != f.target:
        raise ValueError("the alteration's base is not the morphism's target")
    g = f
    if not a.subdivision_part.is_identity():
        g = _subdivision_base_change(g, a.subdivision_part)
    if not a.lattice_part.is_trivial():
        if g.target != a.lattice_part.base:
            # after a subdivision stage the lattice part lives on the
            # refined complex, which is g.target by construction
            raise RuntimeError(
                "alteration stages do not chain: the lattice part does not "
                "live on the refined complex"
            )
        g = _lattice_base_change(g, a.lattice_part)
    if g is not f:
        problems = validate_morphism(g)
        if problems:
            raise RuntimeError(
                "base change produced an invalid morphism: " + problems[0]
            )
    return g


def compose_alterations(outer: Alteration, inner: Alteration) -> Alteration:
    """Flatten a tower: ``inner`` alters the result of ``outer``; the
    returned alteration of ``outer``'s base has the same effect as
    applying ``outer`` then ``inner``."""
    outer_result, outer_bases = outer.result()
    if inner.base != outer_result:
        raise ValueError(
            "the inner alteration does not live on the outer result"
        )
    if inner.is_trivial():
        return outer
    if outer.is_trivial():
        return inner
    s1 = outer.subdivision_part
    mid = s1.source
    s2 = inner.subdivision_part
    by_target = s2.pieces_by_target()
    pieces = []
    for cid in range(len(mid.cones)):
        cone = mid.cone(cid)
        if cone.rank == 0:
            pieces.append([cone])
            continue
        b = outer_bases[cid]
        plist = []
        for inner_cell in by_target.get(cid, ()):
            emb = s2.hosting[inner_cell][1]
            rays = [
                tuple(b.apply(emb.apply(r)))
                for r in s2.source.cone(inner_cell).rays
            ]
            plist.append(Cone.from_rays(cone.ambient_dim, rays))
        pieces.append(plist)
    s12 = assemble_subdivision(mid, pieces)
    total = compose_subdivisions(s1, s12)
    refined = s12.source

    # match each cell of the flattened refinement with the inner cell it
    # came from, by host and the set of primitive ray directions in the
    # outer result's coordinates
    match_index = {}
    for cid, (host, emb) in enumerate(s2.hosting):
        key = (
            host,
            frozenset(
                tuple(emb.apply(r)) for r in s2.source.cone(cid).rays
            ),
        )
        assert key not in match_index, "ambiguous cell correspondence"
        match_index[key] = cid
    lattices = []
    for cid in range(len(refined.cones)):
        cell = refined.cone(cid)
        host, emb = s12.hosting[cid]
        b = outer_bases[host]
        prims = []
        for r in cell.rays:
            w = solve_frac(b, emb.apply(r))
            prims.append(primitive_direction(w))
        inner_cell = match_index.get((host, frozenset(prims)))
        assert inner_cell is not None, (
            "no matching cell in the inner subdivision"
        )
        inner_lattice = inner.lattice_part.sublattices[inner_cell]
        inner_emb = s2.hosting[inner_cell][1]
        generators = []
        for j in range(inner_lattice.rank):
            w = b.apply(inner_emb.apply(inner_lattice.basis.col(j)))
            x = solve_int(emb, w)
            assert x is not None, (
                "the inner lattice escapes the flattened cell"
            )
            generators.append(x)
        lattices.append(
            Lattice.from_generators(cell.ambient_dim, generators)
        )
    composed = Alteration(total, LatticeAlteration(refined, lattices))
    problems = validate_alteration(composed)
    if problems:
        raise RuntimeError(
            "alteration composition failed to validate: " + problems[0]
        )
    return composed


def _shape_color(cone: Cone):
    return (
        cone.rank,
        len(cone.rays),
        cone.multiplicity(),
        cone.normalized_volume(),
        len(cone.facet_normals),
        tuple(sorted(len(f.ray_indices) for f in cone.faces())),
    )


def _joint_colors(a: Complex, b: Complex):
    """Stable matrix-free invariants of the cones of both complexes,
    interned jointly so colors are comparable across the two.  Returns
    ``(colors_a, colors_b)`` or ``None`` when the multisets differ."""
    interned = {}

    def intern(value):
        return interned.setdefault(value, len(interned))

    colors_a = [intern(_shape_color(c)) for c in a.cones]
    colors_b = [intern(_shape_color(c)) for c in b.cones]
    if sorted(colors_a) != sorted(colors_b):
        return None

    def refine(colors, complex_):
        incoming = {i: [] for i in range(len(colors))}
        outgoing = {i: [] for i in range(len(colors))}
        for fm in complex_.face_maps:
            incoming[fm.sup].append(colors[fm.sub])
            outgoing[fm.sub].append(colors[fm.sup])
        return [
            (
                colors[i],
                tuple(sorted(incoming[i])),
                tuple(sorted(outgoing[i])),
            )
            for i in range(len(colors))
        ]

    while True:
        interned = {}
        new_a = [intern(v) for v in refine(colors_a, a)]
        new_b = [intern(v) for v in refine(colors_b, b)]
        if sorted(new_a) != sorted(new_b):
            return None
        stable = len(set(new_a)) == len(set(colors_a)) and all(
            (new_a[i] == new_a[j]) == (colors_a[i] == colors_a[j])
            for i in range(len(new_a))
            for j in range(i + 1, len(new_a))
        )
        colors_a, colors_b = new_a, new_b
        if stable:
            return colors_a, colors_b


def _facet_matchings(a_facets, b_facets, perm):
    """All bijections between the two facet-map lists pairing maps whose
    sub cones correspond under ``perm``."""
    if not a_facets:
        yield []
        return
    (d, mu), rest = a_facets[0], a_facets[1:]
    for k, (d2, nu) in enumerate(b_facets):
        if perm[d] != d2:
            continue
        remaining = b_facets[:k] + b_facets[k + 1 :]
        for tail in _facet_matchings(rest, remaining, perm):
            yield [((d, mu), (d2, nu))] + tail


def _candidate_matrices(a: Complex, b: Complex, i: int, j: int, perm, mats):
    """Unimodular matrices ``g`` with ``g(cone_a(i)) = cone_b(j)`` that
    conjugate every declared incoming face map of ``i`` to the matching
    one of ``j``, given the already-fixed correspondence on lower
    cones."""
    ca, cb = a.cone(i), b.cone(j)
    n = ca.ambient_dim
    if n != cb.ambient_dim:
        return
    if n == 0:
        yield IntMatrix.identity(0)
        return
    if ca.rank == 1:
        sign = ca.rays[0][0] * cb.rays[0][0]
        yield IntMatrix([[sign]])
        return
    a_facets = [
        (fm.sub, fm.matrix)
        for fm in a.face_maps
        if fm.sup == i and a.cone(fm.sub).rank == ca.rank - 1
    ]
    b_facets = [
        (fm.sub, fm.matrix)
        for fm in b.face_maps
        if fm.sup == j and b.cone(fm.sub).rank == cb.rank - 1
    ]
    if len(a_facets) != len(b_facets):
        return
    b_incoming = b.incoming(j)
    a_incoming_maps = [fm for fm in a.face_maps if fm.sup == i]
    b_rays = list(cb.rays)
    seen = set()
    for matching in _facet_matchings(a_facets, b_facets, perm):
        config.charge(1, "equivalence search steps")
        vectors = []
        targets = []
        for (d, mu), (_d2, nu) in matching:
            rhs = nu @ mats[d]
            for k in range(mu.ncols):
                vectors.append(mu.col(k))
                targets.append(rhs.col(k))
        try:
            rows = []
            for r in range(n):
                sol = _solve_linear_values(
                    vectors, [Fraction(t[r]) for t in targets], n
                )
                rows.append(sol)
        except ValueError:
            continue
        if any(x.denominator != 1 for row in rows for x in row):
            continue
        g = IntMatrix([[int(x) for x in row] for row in rows])
        if g.entries in seen:
            continue
        seen.add(g.entries)
        if abs(g.det()) != 1:
            continue
        if sorted(tuple(g.apply(r)) for r in ca.rays) != b_rays:
            continue
        ok = True
        for fm in a_incoming_maps:
            partner_key = tuple(
                sorted(
                    b_rays.index(tuple(g.apply(fm.matrix.apply(r))))
                    for r in a.cone(fm.sub).rays
                )
            )
            partner = b_incoming.get(partner_key)
            if partner is None or partner[0] != perm[fm.sub]:
                ok = False
                break
            nu = partner[1]
            if nu @ mats[fm.sub] != g @ fm.matrix:
                ok = False
                break
        if ok:
            yield g


def complex_equivalences(a: Complex, b: Complex, extra=None):
    """Generate equivalences of two complexes: pairs ``(perm, mats)``
    with ``perm`` a cone bijection and ``mats[i]`` a unimodular matrix
    carrying cone ``i`` of ``a`` onto cone ``perm[i]`` of ``b`` so that
    all declared face maps correspond.  ``extra(i, j, g)`` may veto a
    pairing before it is committed."""
    if len(a.cones) != len(b.cones) or len(a.face_maps) != len(b.face_maps):
        return
    joint = _joint_colors(a, b)
    if joint is None:
        return
    colors_a, colors_b = joint
    order = sorted(
        range(len(a.cones)), key=lambda i: (a.cone(i).rank, colors_a[i], i)
    )
    perm = {}
    mats = {}
    used = set()

    def search(pos):
        if pos == len(order):
            yield dict(perm), dict(mats)
            return
        i = order[pos]
        for j in range(len(b.cones)):
            if j in used or colors_b[j] != colors_a[i]:
                continue
            for g in _candidate_matrices(a, b, i, j, perm, mats):
                if extra is not None and not extra(i, j, g):
                    continue
                perm[i] = j
                mats[i] = g
                used.add(j)
                yield from search(pos + 1)
                del perm[i]
                del mats[i]
                used.discard(j)

    yield from search(0)


def complexes_equivalent(a: Complex, b: Complex) -> bool:
    """Whether two complexes differ only by renaming cones and
    unimodular coordinate changes."""
    return next(complex_equivalences(a, b), None) is not None


def morphism_equivalence(f: ComplexMorphism, g: ComplexMorphism):
    """An identification of two morphisms up to renaming cones and
    unimodular coordinate changes on both sides, or ``None``.

    Returns a dict with ``source_map``/``source_bases`` and
    ``target_map``/``target_bases``; the bases satisfy, for every source
    cone ``i`` with targets ``t = f.assignment[i][0]`` and image ``j =
    source_map[i]``: ``g.assignment[j][1] @ source_bases[i] ==
    target_bases[t] @ f.assignment[i][1]``."""
    if len(f.source.cones) != len(g.source.cones):
        return None
    for target_map, target_bases in complex_equivalences(f.target, g.target):

        def compatible(i, j, gm):
            tid, m = f.assignment[i]
            tid2, m2 = g.assignment[j]
            if target_map[tid] != tid2:
                return False
            return m2 @ gm == target_bases[tid] @ m

        for source_map, source_bases in complex_equivalences(
            f.source, g.source, extra=compatible
        ):
            return {
                "source_map": source_map,
                "source_bases": source_bases,
                "target_map": target_map,
                "target_bases": target_bases,
            }
    return None


def morphisms_equivalent(f: ComplexMorphism, g: ComplexMorphism) -> bool:
    """Whether two morphisms agree up to renaming cones and unimodular
    coordinate changes on source and target."""
    return morphism_equivalence(f, g) is not None


def semistable_normal_form(f: ComplexMorphism, sid: int) -> dict:
    """The local monomial shape of a semistable morphism at cone ``sid``.

    In the ray coordinates of the cone and of its target cone the matrix
    has one standard basis vector or zero per column; the return value
    groups the cone's ray cone ids into one block per target ray cone
    (in the target's ray order) plus the collapsed rays under ``"zero"``.
    Raises ``ValueError`` unless the morphism is semistable."""
    report = classify_morphism(f)
    if not report.semistable:
        raise ValueError("the local normal form requires a semistable morphism")
    tid, m = f.assignment[sid]
    sigma = f.source.cone(sid)
    tau = f.target.cone(tid)
    if sigma.rank:
        local = m @ IntMatrix.from_cols(
            [list(r) for r in sigma.rays], nrows=sigma.ambient_dim
        )
    else:
        local = m
    if tau.rank:
        local = (
            invert_unimodular(
                IntMatrix.from_cols(
                    [list(r) for r in tau.rays], nrows=tau.ambient_dim
                )
            )
            @ local
        )
    blocks = {i: [] for i in range(len(tau.rays))}
    zero = []
    for k in range(local.ncols):
        col = tuple(local.col(k))
        ray_id = f.source.face_cone_of(sid, (k,))[0]
        support = [i for i, x in enumerate(col) if x]
        if not support:
            zero.append(ray_id)
        elif len(support) == 1 and col[support[0]] == 1:
            blocks[support[0]].append(ray_id)
        else:
            raise RuntimeError(
                f"internal invariant violation: semistable cone {sid} has "
                f"non-monomial ray column {col}"
            )
    return {
        "cone": sid,
        "target": tid,
        "blocks": tuple(
            (f.target.face_cone_of(tid, (i,))[0], tuple(sorted(blocks[i])))
            for i in range(len(tau.rays))
        ),
        "zero": tuple(sorted(zero)),
    }
