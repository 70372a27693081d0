"""Reduction pipeline for morphisms of rational conical complexes.

Two verified-construction stages improve a morphism by altering its base:

* :func:`equidimensional_reduction` refines the base so that every source
  cone maps *onto* a cone of the base.  The refinement is assembled from
  three certified steps — a simplicial refinement of the base, a
  hyperplane-arrangement refinement that separates all image cones, and a
  smooth resolution — and the result is re-verified from scratch.

* :func:`weak_semistable_alteration` keeps the base's cones and shrinks its
  lattices ray by ray, using the least common multiple of the multiplicities
  with which source rays cover each base ray.  After base change every
  surviving ray multiplicity is one and the induced lattice maps are
  surjective.

:func:`weak_semistable_pipeline` chains the two and re-derives the final
morphism by a single base change along the composed alteration.
:func:`kawamata_sublattice` builds the ray-wise sublattice alteration for
prescribed orders, and :func:`covering_lattice` enlarges a cone's lattice by
explicit generators.  Postconditions are checked on the actual output; a
contradiction raises :class:`PostconditionFailed` with a diagnostic dump.
"""

from fractions import Fraction
from math import lcm

from . import config
from .complexes import (
    Complex,
    Subdivision,
    assemble_subdivision,
    compose_subdivisions,
    identity_subdivision,
    resolve,
    simplicialize,
    validate_complex,
    validate_subdivision,
)
from .cone import Cone, cone_from_constraints
from .intlinalg import (
    IntMatrix,
    Lattice,
    kernel,
    lattice_image,
    lattice_intersection,
    lattice_sum,
    primitive_direction,
    solve_frac,
    solve_int,
)
from .morphism import (
    Alteration,
    ComplexMorphism,
    LatticeAlteration,
    base_change,
    classify_morphism,
    compose_alterations,
    identity_alteration,
    image_cone,
    trivial_lattice_alteration,
    validate_lattice_alteration,
    validate_morphism,
)
from .plfun import (
    CertificateNotFound,
    _solve_linear_values,
    certify_projective,
    compose_certificates,
    identity_certificate,
)

__all__ = [
    "PostconditionFailed",
    "ReductionResult",
    "covering_lattice",
    "equidimensional_reduction",
    "kawamata_sublattice",
    "weak_semistable_alteration",
    "weak_semistable_pipeline",
]


class PostconditionFailed(Exception):
    """A constructed reduction failed its from-scratch verification.

    The construction carries a mathematical argument for why it works; this
    error means the independent post-hoc check contradicted that argument,
    so the result must not be used.  ``diagnostic`` holds a dump of the
    offending classification."""

    def __init__(self, message, diagnostic=None):
        super().__init__(message)
        self.diagnostic = dict(diagnostic or {})


class ReductionResult:
    """Outcome of one reduction stage.

    Attributes:
        alteration: the :class:`~torocomb.morphism.Alteration` of the input
            morphism's base that was applied.
        reduced_morphism: the morphism after base change along it.
        certificates: projectivity certificates for the refinement steps of
            the subdivision part, in order of application (``None`` marks a
            step whose certificate search failed; see ``notes``).
        report: the :class:`~torocomb.morphism.MorphismReport` of the
            reduced morphism, computed from scratch.
        notes: human-readable remarks about the run.
    """

    __slots__ = ("alteration", "reduced_morphism", "certificates", "report", "notes")

    def __init__(self, alteration, reduced_morphism, certificates=(), report=None, notes=()):
        self.alteration = alteration
        self.reduced_morphism = reduced_morphism
        self.certificates = tuple(certificates)
        self.report = report
        self.notes = tuple(notes)

    def __repr__(self):
        parts = []
        if self.report is not None:
            for flag in ("equidimensional", "weakly_semistable", "semistable"):
                parts.append(f"{flag}={getattr(self.report, flag)}")
        trivial = "trivial" if self.alteration.is_trivial() else "nontrivial"
        return f"ReductionResult({trivial} alteration, {', '.join(parts)})"


def _diagnostic(f: ComplexMorphism, report, stage: str) -> dict:
    return {
        "stage": stage,
        "equidimensional": report.equidimensional,
        "weakly_semistable": report.weakly_semistable,
        "semistable": report.semistable,
        "witnesses": report.failing_witnesses,
        "source_cones": len(f.source.cones),
        "target_cones": len(f.target.cones),
    }


# ---------------------------------------------------------------------------
# equidimensional reduction


def _require_injectively_glued(c: Complex) -> None:
    """The base refinement transports functionals along the unique face
    inclusion of each face; a base gluing the same cone into a host twice
    has no unique inclusion, so it is rejected up front.  (Complexes built
    from fans never do this.)"""
    for cid in range(len(c.cones)):
        subs = set()
        for sub, _mat in c.incoming(cid).values():
            if sub in subs:
                raise ValueError(
                    f"cone {sub} is glued into cone {cid} along two different"
                    " faces; the base refinement needs an injectively glued"
                    " base"
                )
            subs.add(sub)


def _hyperplane_direction(v):
    """Canonical representative of the hyperplane ``v = 0``: primitive, with
    the first nonzero entry positive.  ``None`` for the zero vector."""
    if not any(v):
        return None
    w = primitive_direction(v)
    lead = next(x for x in w if x)
    if lead < 0:
        w = tuple(-x for x in w)
    return w


def _image_hyperplanes(f: ComplexMorphism):
    """Cutting data ``(target cone id, ambient functional)`` whose induced
    arrangement separates every image cone: the span equations and the
    lifted facet inequalities of each image, skipping images that already
    fill their assigned cone (their hyperplanes are cone facets, which any
    refinement respects)."""
    out = []
    seen = set()
    for sid in range(len(f.source.cones)):
        d, _m = f.assignment[sid]
        img = image_cone(f, sid)
        if img.rank == 0:
            continue
        if img == f.target.cone(d):
            continue
        n = img.ambient_dim
        if img.rank < n:
            span_rows = IntMatrix(
                [list(img.lattice.basis.col(j)) for j in range(img.lattice.rank)],
                shape=(img.lattice.rank, n),
            )
            perp = kernel(span_rows)
            for j in range(perp.ncols):
                w = _hyperplane_direction(perp.col(j))
                if w is not None and (d, w) not in seen:
                    seen.add((d, w))
                    out.append((d, w))
        basis_t = img.lattice.basis.transpose()
        for nrm in img.facet_normals:
            w = _hyperplane_direction(solve_frac(basis_t, nrm))
            if w is not None and (d, w) not in seen:
                seen.add((d, w))
                out.append((d, w))
    return out


def _transported_ray_values(tgt: Complex, s_simp: Subdivision, hyperplanes):
    """Each cutting functional as a value per ray of the simplicial
    refinement: its honest value at the ray's primitive generator when the
    ray lies in the functional's cone (reached along the unique declared
    face inclusion), zero elsewhere.  Interpolating these values over each
    simplicial cone extends the cut to the whole complex in a
    face-compatible way.  Rows are deduplicated up to scale."""
    t1 = s_simp.source
    ray_ids = tuple(t1.ids_of_rank(1))
    embedded = {}
    for rho in ray_ids:
        h, e = s_simp.host_of(rho)
        embedded[rho] = (h, tuple(e.apply(t1.cone(rho).rays[0])))
    incl_cache = {}
    rows = []
    seen = set()
    for d, w in hyperplanes:
        incl = incl_cache.get(d)
        if incl is None:
            incl = {sub: mat for sub, mat in tgt.incoming(d).values()}
            incl_cache[d] = incl
        vals = []
        for rho in ray_ids:
            h, u = embedded[rho]
            if h == d:
                vals.append(sum(a * b for a, b in zip(w, u)))
            elif h in incl:
                vals.append(
                    sum(a * b for a, b in zip(w, incl[h].apply(u)))
                )
            else:
                vals.append(0)
        row = _hyperplane_direction(vals)
        if row is not None and row not in seen:
            seen.add(row)
            rows.append(row)
    return ray_ids, rows


def _arrangement_refinement(t1: Complex, ray_ids, rows) -> Subdivision:
    """Split every cone of ``t1`` along the given ray-value functionals
    (restricted per cone by linear interpolation through the cone's rays)
    and assemble the pieces into a subdivision."""
    index_of = {rho: k for k, rho in enumerate(ray_ids)}
    pieces = []
    for cid in range(len(t1.cones)):
        cone = t1.cone(cid)
        n = cone.ambient_dim
        if cone.rank == 0:
            pieces.append([cone])
            continue
        own_rays = [t1.face_cone_of(cid, (i,))[0] for i in range(len(cone.rays))]
        cuts = []
        seen = set()
        for row in rows:
            values = [Fraction(row[index_of[rho]]) for rho in own_rays]
            if not any(values):
                continue
            w = _hyperplane_direction(_interpolate_on_rays(cone, values))
            if w is not None and w not in seen:
                seen.add(w)
                cuts.append(w)
        cells = [cone]
        for w in cuts:
            neg = tuple(-x for x in w)
            split = []
            for piece in cells:
                config.charge(1, "arrangement splitting")
                for side in (w, neg):
                    half = cone_from_constraints(
                        n, inequalities=list(piece.facet_normals) + [side]
                    )
                    if half.rank == n:
                        split.append(half)
            cells = split
        pieces.append(cells)
    return _assemble_checked(t1, pieces)


def _interpolate_on_rays(cone: Cone, values):
    """The unique linear functional on the (simplicial, full-dimensional)
    cone taking the given values at its primitive rays."""
    if len(cone.rays) != cone.ambient_dim:
        raise RuntimeError(
            "internal invariant violation: interpolation on a non-simplicial cone"
        )
    return _solve_linear_values(cone.rays, values, cone.ambient_dim)


def _assemble_checked(t1: Complex, pieces) -> Subdivision:
    s = assemble_subdivision(t1, pieces)
    problems = validate_subdivision(s)
    if problems:
        raise RuntimeError("internal invariant violation: " + problems[0])
    return s


def equidimensional_reduction(f: ComplexMorphism) -> ReductionResult:
    """Refine the base of ``f`` until the pulled-back morphism maps every
    source cone onto a cone of the (now smooth) base.

    If ``f`` is already equidimensional over a smooth base the alteration
    is the identity.  Otherwise the base is simplicialized, split along
    the span and facet hyperplanes of all image cones (transported over
    the whole base through its ray structure), and resolved; the source is
    pulled back along the composite.  Each refinement step carries a
    projectivity certificate; when the certificate search for the
    arrangement step fails, the refinement is still returned, uncertified,
    with a note.  The output is re-classified from scratch and
    :class:`PostconditionFailed` is raised on any contradiction."""
    problems = validate_morphism(f)
    if problems:
        raise ValueError("invalid morphism: " + problems[0])
    report0 = classify_morphism(f)
    if report0.equidimensional and all(c.is_smooth for c in f.target.cones):
        return ReductionResult(
            identity_alteration(f.target),
            f,
            (),
            report0,
            ("already equidimensional over a smooth base",),
        )
    _require_injectively_glued(f.target)
    notes = []
    s_simp = simplicialize(f.target, certify=True)
    ray_ids, rows = _transported_ray_values(
        f.target, s_simp, _image_hyperplanes(f)
    )
    s_arr = _arrangement_refinement(s_simp.source, ray_ids, rows)
    if s_arr.is_identity():
        arr_cert = identity_certificate(s_arr)
    else:
        try:
            arr_cert = certify_projective(s_arr)
        except CertificateNotFound as exc:
            arr_cert = None
            notes.append(
                "hyperplane-arrangement step left uncertified: " + str(exc)
            )
    s_res = resolve(s_arr.source, certify=True)
    total = compose_subdivisions(compose_subdivisions(s_simp, s_arr), s_res)
    certificates = (s_simp.certificate, arr_cert, s_res.certificate)
    if all(cert is not None for cert in certificates):
        total.certificate = compose_certificates(
            compose_certificates(s_simp.certificate, arr_cert),
            s_res.certificate,
        )
    a = Alteration(total, trivial_lattice_alteration(total.source))
    g = base_change(f, a)
    report = classify_morphism(g)
    rough = [cid for cid, c in enumerate(g.target.cones) if not c.is_smooth]
    if not report.equidimensional or rough:
        why = []
        if not report.equidimensional:
            why.append("the pulled-back morphism is not equidimensional")
        if rough:
            why.append(f"refined base cone {rough[0]} is not smooth")
        raise PostconditionFailed(
            "equidimensional reduction failed verification: " + "; ".join(why),
            diagnostic=_diagnostic(g, report, "equidimensional reduction"),
        )
    return ReductionResult(a, g, certificates, report, tuple(notes))


# ---------------------------------------------------------------------------
# lattice corrections


def _diagonal_sublattices(base: Complex, orders) -> LatticeAlteration:
    """The lattice alteration generated, on every cone of a smooth base, by
    the prescribed multiples of the cone's primitive rays.  Face-compatible
    by construction: on a smooth cone the scaled rays form a basis, and the
    sublattice's intersection with a face's span is spanned by the face's
    scaled rays."""
    sublattices = {}
    for cid in range(len(base.cones)):
        cone = base.cone(cid)
        if cone.rank == 0:
            continue
        gens = []
        for i in range(len(cone.rays)):
            rid = base.face_cone_of(cid, (i,))[0]
            gens.append(tuple(orders[rid] * x for x in cone.rays[i]))
        sublattices[cid] = Lattice.from_generators(cone.ambient_dim, gens)
    lat = LatticeAlteration(base, sublattices)
    problems = validate_lattice_alteration(lat)
    if problems:
        raise RuntimeError("internal invariant violation: " + problems[0])
    return lat


def _naive_comparison_note(f: ComplexMorphism, lat: LatticeAlteration) -> str:
    """Telemetry: compare the ray-wise correction with the naive choice
    (intersection, per base cone, of the images of the source lattices)."""
    naive = {}
    for sid in range(len(f.source.cones)):
        tid, m = f.assignment[sid]
        if f.target.cone(tid).rank == 0:
            continue
        img = lattice_image(m, Lattice.standard(m.ncols))
        cur = naive.get(tid)
        naive[tid] = img if cur is None else lattice_intersection(cur, img)
    finer = [
        cid
        for cid, sub in naive.items()
        if sub != lat.sublattices[cid]
    ]
    if finer:
        return (
            "the ray-wise correction is strictly finer than the naive "
            f"image-lattice intersection on cone {min(finer)} (the naive "
            "choice is not face-compatible in general)"
        )
    return (
        "the ray-wise correction agrees with the per-cone image-lattice "
        "intersections"
    )


def weak_semistable_alteration(f: ComplexMorphism) -> ReductionResult:
    """Shrink the base lattices of an equidimensional morphism over a
    smooth base so that the base change has surjective lattice maps and
    every surviving ray multiplicity equals one.

    On each base ray the new lattice is generated by ``m`` times the
    primitive generator, where ``m`` is the least common multiple of the
    multiplicities of all source rays covering that ray; on each cone the
    new lattice is spanned ray-wise.  The subdivision part is the
    identity.  The result is re-classified and must come out weakly
    semistable, else :class:`PostconditionFailed` is raised."""
    problems = validate_morphism(f)
    if problems:
        raise ValueError("invalid morphism: " + problems[0])
    report0 = classify_morphism(f)
    if not report0.equidimensional:
        raise ValueError(
            "the lattice correction needs an equidimensional morphism; "
            "run equidimensional_reduction first"
        )
    rough = [cid for cid, c in enumerate(f.target.cones) if not c.is_smooth]
    if rough:
        raise ValueError(
            f"the lattice correction needs a smooth base; cone {rough[0]} "
            "is singular"
        )
    orders = {rid: 1 for rid in f.target.ids_of_rank(1)}
    for sid, (tid, k) in report0.ray_multiplicities.items():
        if k:
            orders[tid] = lcm(orders[tid], k)
    lat = _diagonal_sublattices(f.target, orders)
    a = Alteration(identity_subdivision(f.target), lat)
    g = base_change(f, a)
    report = classify_morphism(g)
    if not report.weakly_semistable:
        raise PostconditionFailed(
            "the ray-wise lattice correction did not produce a weakly "
            "semistable morphism",
            diagnostic=_diagnostic(g, report, "lattice correction"),
        )
    notes = [_naive_comparison_note(f, lat)]
    if lat.is_trivial():
        notes.append("all multiplicities are one; the correction is trivial")
    return ReductionResult(a, g, (), report, tuple(notes))


def weak_semistable_pipeline(f: ComplexMorphism) -> ReductionResult:
    """Equidimensional reduction followed by the ray-wise lattice
    correction, returned as a single alteration of ``f``'s base.

    The reduced morphism is re-derived by one base change along the
    composed alteration and re-classified; it must be weakly semistable,
    else :class:`PostconditionFailed` is raised."""
    stage1 = equidimensional_reduction(f)
    stage2 = weak_semistable_alteration(stage1.reduced_morphism)
    combined = compose_alterations(stage1.alteration, stage2.alteration)
    g = base_change(f, combined)
    report = classify_morphism(g)
    if not report.weakly_semistable:
        raise PostconditionFailed(
            "the composed alteration did not produce a weakly semistable "
            "morphism",
            diagnostic=_diagnostic(g, report, "weak semistability pipeline"),
        )
    return ReductionResult(
        combined,
        g,
        stage1.certificates,
        report,
        stage1.notes + stage2.notes,
    )


# ---------------------------------------------------------------------------
# prescribed coverings


def kawamata_sublattice(base: Complex, ray_orders) -> LatticeAlteration:
    """The lattice alteration of a smooth base prescribing, for every ray,
    the order with which a covering is to branch along it: ray ``rid``'s
    lattice becomes ``ray_orders[rid]`` times its primitive generator, and
    each cone's lattice is spanned ray-wise.

    ``ray_orders`` must give a positive order for exactly the rank-one
    cones of ``base``."""
    problems = validate_complex(base)
    if problems:
        raise ValueError("invalid complex: " + problems[0])
    rough = [cid for cid, c in enumerate(base.cones) if not c.is_smooth]
    if rough:
        raise ValueError(f"cone {rough[0]} is not smooth")
    rays = set(base.ids_of_rank(1))
    orders = {}
    for rid, order in dict(ray_orders).items():
        if rid not in rays:
            raise ValueError(f"cone {rid} is not a ray cone")
        k = int(order)
        if k < 1:
            raise ValueError(f"order for ray cone {rid} must be positive")
        orders[rid] = k
    missing = rays - set(orders)
    if missing:
        raise ValueError(f"no order given for ray cone {min(missing)}")
    return _diagonal_sublattices(base, orders)


def covering_lattice(cone: Cone, generators, ambient_lattice: Lattice = None) -> Lattice:
    """Enlarge a cone's span lattice by explicit generators.

    The result is the sum of the cone's lattice (its saturated span
    intersected with ``ambient_lattice``, which defaults to the standard
    lattice) and the lattice generated by ``generators``.  Generators must
    lie in the ambient lattice; they need not lie in the cone's span, so
    the result can have larger rank than the cone."""
    n = cone.ambient_dim
    if ambient_lattice is None:
        ambient_lattice = Lattice.standard(n)
    if ambient_lattice.ambient_dim != n:
        raise ValueError(
            f"ambient lattice lives in dimension {ambient_lattice.ambient_dim}, "
            f"the cone in dimension {n}"
        )
    gens = []
    for g in generators:
        v = tuple(int(x) for x in g)
        if len(v) != n:
            raise ValueError(f"generator {v} has length {len(v)}, wants {n}")
        if solve_int(ambient_lattice.basis, v) is None:
            raise ValueError(f"generator {v} lies outside the ambient lattice")
        gens.append(v)
    base = lattice_intersection(ambient_lattice, cone.lattice)
    return lattice_sum(base, Lattice.from_generators(n, gens))
