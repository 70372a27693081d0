"""Piecewise-linear functions on refined complexes and projectivity
certificates.

A refinement is projective when some rational function psi on the
refined support is, within each host cone, the pointwise minimum of one
linear functional per full-rank piece, and the maximal domains where psi
is linear are exactly the pieces.  A ``PLFunction`` stores one rational
functional per piece in host-cone coordinates; a ``GoodnessCertificate``
adds, for every ordered pair of distinct pieces of a common host, a ray
of the second piece at which the first piece's functional strictly
exceeds psi, together with the positive margin.  Strictness is only ever
tested at rays: functionals are linear and every piece is generated by
its rays, so ray inequalities propagate to the whole piece.
"""

from fractions import Fraction

from . import config, lp
from .complexes import Subdivision, compose_subdivisions
from .intlinalg import solve_int


class CertificateNotFound(Exception):
    """No projectivity certificate exists (or the search failed); the
    ``witness`` attribute summarizes the failed conditions."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


def _dot(a, b):
    return sum(x * y for x, y in zip(a, b))


def _solve_linear_values(vectors, values, dim):
    """The unique rational row ``m`` with ``m . v_k = values[k]``.  The
    vectors must span the whole space and the conditions be consistent."""
    rows = [
        [Fraction(x) for x in v] + [Fraction(val)]
        for v, val in zip(vectors, values)
    ]
    rank = 0
    pivot_cols = []
    for c in range(dim):
        piv = next((i for i in range(rank, len(rows)) if rows[i][c] != 0), None)
        if piv is None:
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        lead = rows[rank][c]
        rows[rank] = [x / lead for x in rows[rank]]
        for i in range(len(rows)):
            if i != rank and rows[i][c] != 0:
                f = rows[i][c]
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[rank])]
        pivot_cols.append(c)
        rank += 1
        if rank == len(rows):
            break
    for i in range(rank, len(rows)):
        if rows[i][dim] != 0:
            raise ValueError("inconsistent linear conditions on a functional")
    if len(pivot_cols) < dim:
        raise ValueError("conditions do not determine the functional")
    m = [Fraction(0)] * dim
    for i, c in enumerate(pivot_cols):
        m[c] = rows[i][dim]
    return tuple(m)


def _piece_geometry(s: Subdivision) -> dict:
    """Per full-rank piece: (host id, rays in host coordinates, ray cone
    id of each ray)."""
    src = s.source
    out = {}
    for tid, sids in s.pieces_by_target().items():
        for sid in sids:
            _t, emb = s.hosting[sid]
            cone = src.cone(sid)
            rays = tuple(tuple(emb.apply(r)) for r in cone.rays)
            ray_ids = tuple(
                src.face_cone_of(sid, (k,))[0] for k in range(len(cone.rays))
            )
            out[sid] = (tid, rays, ray_ids)
    return out


def _host_groups(geom: dict) -> dict:
    """Host cone id -> sorted piece ids, for hosts with several pieces."""
    groups = {}
    for sid, (tid, _rays, _rids) in geom.items():
        groups.setdefault(tid, []).append(sid)
    return {t: sorted(ps) for t, ps in groups.items() if len(ps) > 1}


class PLFunction:
    """One rational linear functional per full-rank piece of a refinement,
    in the piece's host-cone coordinates.  The induced function on the
    refined support is the per-host pointwise minimum of the piece
    functionals."""

    __slots__ = ("subdivision", "functionals")

    def __init__(self, subdivision: Subdivision, functionals: dict):
        self.subdivision = subdivision
        self.functionals = {
            sid: tuple(Fraction(x) for x in m) for sid, m in functionals.items()
        }

    def ray_values(self) -> dict:
        """The function's value at every ray cone of the refined complex
        (validation checks that all pieces containing a ray agree)."""
        geom = _piece_geometry(self.subdivision)
        vals = {}
        for sid in sorted(geom):
            _tid, rays, ray_ids = geom[sid]
            m = self.functionals.get(sid)
            if m is None:
                continue
            for u, rho in zip(rays, ray_ids):
                vals.setdefault(rho, _dot(m, u))
        return vals

    def key(self):
        return (
            self.subdivision.key(),
            tuple(sorted(self.functionals.items())),
        )

    def __eq__(self, other):
        return isinstance(other, PLFunction) and self.key() == other.key()

    def __repr__(self):
        return f"PLFunction({len(self.functionals)} pieces)"


class GoodnessCertificate:
    """A good function plus, per ordered pair of distinct pieces in a
    common host, a ray of the second piece where the first piece's
    functional strictly exceeds the function, with its margin."""

    __slots__ = ("plfunction", "strictness_witnesses")

    def __init__(self, plfunction: PLFunction, strictness_witnesses: dict):
        self.plfunction = plfunction
        self.strictness_witnesses = {
            pair: (tuple(u), Fraction(margin))
            for pair, (u, margin) in strictness_witnesses.items()
        }

    def __repr__(self):
        return f"GoodnessCertificate({len(self.strictness_witnesses)} witnesses)"


def validate_plfunction(p: PLFunction) -> list:
    """Structural problems: functionals must cover exactly the full-rank
    pieces with host-sized rows, and all pieces sharing a ray must give it
    the same value (so the per-host minima glue to one function)."""
    problems = []
    geom = _piece_geometry(p.subdivision)
    if set(p.functionals) != set(geom):
        problems.append(
            "functionals must be given for exactly the full-rank pieces"
        )
        return problems
    for sid in sorted(geom):
        tid = geom[sid][0]
        n = p.subdivision.target.cone(tid).ambient_dim
        if len(p.functionals[sid]) != n:
            problems.append(
                f"functional of piece {sid} must have {n} coordinates"
            )
    if problems:
        return problems
    vals = {}
    for sid in sorted(geom):
        _tid, rays, ray_ids = geom[sid]
        m = p.functionals[sid]
        for u, rho in zip(rays, ray_ids):
            v = _dot(m, u)
            if rho in vals and vals[rho] != v:
                problems.append(
                    f"pieces disagree at shared ray {rho}: "
                    f"{vals[rho]} vs {v} from piece {sid}"
                )
            vals.setdefault(rho, v)
    return problems


def _strictness_scan(p: PLFunction, collect_witnesses: bool):
    """Within each host, check that every piece's functional strictly
    exceeds the minimum at every ray outside the piece.  Returns
    (problems, witnesses)."""
    geom = _piece_geometry(p.subdivision)
    problems = []
    witnesses = {}
    for tid, ps in sorted(_host_groups(geom).items()):
        coords = {}
        for sid in ps:
            _t, rays, rids = geom[sid]
            for u, rho in zip(rays, rids):
                coords.setdefault(rho, u)
        psi = {
            rho: min(_dot(p.functionals[sid], u) for sid in ps)
            for rho, u in coords.items()
        }
        for i in ps:
            rid_i = set(geom[i][2])
            m_i = p.functionals[i]
            for j in ps:
                if i == j:
                    continue
                found = None
                for u, rho in zip(geom[j][1], geom[j][2]):
                    if rho in rid_i:
                        continue
                    margin = _dot(m_i, u) - psi[rho]
                    if margin <= 0:
                        problems.append(
                            f"pieces {i} and {j} of host {tid} merge: the "
                            f"functional of {i} does not strictly exceed "
                            f"the minimum at ray {rho}"
                        )
                    elif found is None:
                        found = (u, margin)
                if collect_witnesses and found is not None:
                    witnesses[(i, j)] = found
    return problems, witnesses


def is_good(p: PLFunction):
    """Whether the function is, per host cone, a minimum of linear
    functionals whose maximal linearity domains are exactly the pieces;
    returns (flag, problem descriptions)."""
    problems = validate_plfunction(p)
    if problems:
        return False, problems
    problems, _w = _strictness_scan(p, False)
    return (not problems), problems


def certificate_from_plfunction(p: PLFunction) -> GoodnessCertificate:
    """Certificate with explicit strictness witnesses; raises
    ``CertificateNotFound`` when the function is not good."""
    problems = validate_plfunction(p)
    if not problems:
        problems, witnesses = _strictness_scan(p, True)
    if problems:
        raise CertificateNotFound("the function is not good", witness=problems)
    return GoodnessCertificate(p, witnesses)


def check_certificate(cert: GoodnessCertificate) -> list:
    """Re-verify a certificate from scratch: the function must be good and
    every stored witness must name a genuine outside ray with its exact
    positive margin, covering all ordered piece pairs per host."""
    p = cert.plfunction
    problems = validate_plfunction(p)
    if problems:
        return problems
    scan_problems, _expected = _strictness_scan(p, True)
    problems += scan_problems
    geom = _piece_geometry(p.subdivision)
    groups = _host_groups(geom)
    wanted = {
        (i, j) for ps in groups.values() for i in ps for j in ps if i != j
    }
    if set(cert.strictness_witnesses) != wanted:
        problems.append(
            "witnesses must cover exactly the ordered pairs of distinct "
            "pieces in a common host"
        )
        return problems
    for (i, j), (u, margin) in sorted(cert.strictness_witnesses.items()):
        tid = geom[i][0]
        rays_j, rids_j = geom[j][1], geom[j][2]
        if u not in rays_j:
            problems.append(f"witness for ({i}, {j}) is not a ray of piece {j}")
            continue
        rho = rids_j[rays_j.index(u)]
        if rho in set(geom[i][2]):
            problems.append(
                f"witness ray for ({i}, {j}) already belongs to piece {i}"
            )
            continue
        psi = min(_dot(p.functionals[k], u) for k in groups[tid])
        actual = _dot(p.functionals[i], u) - psi
        if margin <= 0 or actual != margin:
            problems.append(
                f"stored margin {margin} for ({i}, {j}) does not match the "
                f"recomputed strict excess {actual}"
            )
    return problems


def from_divisor(s: Subdivision, coefficients) -> PLFunction:
    """The function with value ``-coefficients[rho]`` at each ray cone
    ``rho`` of the refined complex, extended linearly on every piece.
    Requires a simplicial refined complex (ray values only determine the
    functionals on simplicial pieces) and a coefficient for every ray."""
    src = s.source
    for cone in src.cones:
        if not cone.is_simplicial:
            raise ValueError(
                "ray values only determine the function on simplicial pieces"
            )
    ray_cone_ids = [c for c, cone in enumerate(src.cones) if cone.rank == 1]
    missing = [r for r in ray_cone_ids if r not in coefficients]
    if missing:
        raise ValueError(f"missing coefficients for ray cones {missing}")
    geom = _piece_geometry(s)
    functionals = {}
    for sid, (tid, rays, rids) in geom.items():
        dim = s.target.cone(tid).ambient_dim
        values = [-Fraction(coefficients[rho]) for rho in rids]
        functionals[sid] = _solve_linear_values(rays, values, dim)
    return PLFunction(s, functionals)


def identity_certificate(s: Subdivision) -> GoodnessCertificate:
    """The zero function on an identity refinement: every host has a
    single piece, so goodness is immediate and no witnesses are needed."""
    if not s.is_identity():
        raise ValueError("identity certificate requires an identity refinement")
    functionals = {
        sid: (Fraction(0),) * s.source.cone(sid).ambient_dim
        for sid in range(len(s.source.cones))
    }
    return GoodnessCertificate(PLFunction(s, functionals), {})


def stellar_certificate(s: Subdivision, center=None) -> GoodnessCertificate:
    """Closed-form certificate for a single stellar refinement: the
    pulling function with value 1 at the subdividing ray and 0 at every
    other ray.  On a piece (facet * center) this is the facet's normal
    scaled to 1 at the center, so it vanishes exactly on the facet and is
    positive on the rest of the host — good with no search.

    ``center`` is the refined complex's ray cone at the subdivision
    point; when the point was not already a ray it is found automatically
    as the unique ray hosted inside a higher-rank cone."""
    if s.is_identity():
        return identity_certificate(s)
    src = s.source
    if center is None:
        new = [
            cid
            for cid, cone in enumerate(src.cones)
            if cone.rank == 1 and s.target.cone(s.hosting[cid][0]).rank > 1
        ]
        if len(new) != 1:
            raise ValueError(
                "cannot locate the subdivision point: expected exactly one "
                f"ray hosted inside a higher-rank cone, found {len(new)}"
            )
        center = new[0]
    elif src.cone(center).rank != 1:
        raise ValueError("the subdivision center must be a ray cone")
    geom = _piece_geometry(s)
    functionals = {}
    for sid, (tid, rays, rids) in geom.items():
        dim = s.target.cone(tid).ambient_dim
        if center not in rids:
            functionals[sid] = (Fraction(0),) * dim
            continue
        values = [Fraction(1 if rho == center else 0) for rho in rids]
        functionals[sid] = _solve_linear_values(rays, values, dim)
    return certificate_from_plfunction(PLFunction(s, functionals))


def certify_projective(s: Subdivision) -> GoodnessCertificate:
    """Search for a goodness certificate by exact linear programming over
    the piece functionals.  Continuity ties every piece functional to a
    shared value variable at each of its rays; across every wall (shared
    corank-one face) between two pieces of a host, the far functional
    must exceed the shared value by at least 1 at a ray off the wall (the
    margin is scale-free, and wall strictness propagates to all piece
    pairs along segment crossings).  Raises ``CertificateNotFound`` when the
    program is infeasible — the refinement is not projective."""
    if s.is_identity():
        return identity_certificate(s)
    src = s.source
    geom = _piece_geometry(s)
    piece_ids = sorted(geom)
    offsets = {}
    total = 0
    for sid in piece_ids:
        offsets[sid] = total
        total += s.target.cone(geom[sid][0]).ambient_dim
    ray_cone_ids = [c for c, cone in enumerate(src.cones) if cone.rank == 1]
    y_offset = {rho: total + k for k, rho in enumerate(ray_cone_ids)}
    total += len(ray_cone_ids)

    eqs = []
    for sid in piece_ids:
        _tid, rays, rids = geom[sid]
        base = offsets[sid]
        for u, rho in zip(rays, rids):
            row = [0] * total
            for c, x in enumerate(u):
                row[base + c] = x
            row[y_offset[rho]] -= 1
            eqs.append((tuple(row), 0))
    ges = []
    for tid, ps in sorted(_host_groups(geom).items()):
        n = s.target.cone(tid).ambient_dim
        for i in ps:
            rid_i = set(geom[i][2])
            for j in ps:
                if i == j:
                    continue
                rids_j = geom[j][2]
                shared = tuple(
                    k for k, rho in enumerate(rids_j) if rho in rid_i
                )
                fid, _m = src.face_cone_of(j, shared)
                if src.cone(fid).rank != n - 1:
                    continue
                k0 = next(k for k, rho in enumerate(rids_j) if rho not in rid_i)
                u, rho = geom[j][1][k0], rids_j[k0]
                row = [0] * total
                base = offsets[i]
                for c, x in enumerate(u):
                    row[base + c] = x
                row[y_offset[rho]] -= 1
                ges.append((tuple(row), 1))
    config.charge(1, "certificate searches")
    sol = lp.feasible(total, eq=eqs, ge=ges)
    if sol is None:
        raise CertificateNotFound(
            "no good function exists: the continuity-and-wall-strictness "
            "linear program is infeasible",
            witness={
                "variables": total,
                "continuity_constraints": len(eqs),
                "wall_constraints": len(ges),
            },
        )
    functionals = {}
    for sid in piece_ids:
        n = s.target.cone(geom[sid][0]).ambient_dim
        base = offsets[sid]
        functionals[sid] = tuple(sol[base + c] for c in range(n))
    return certificate_from_plfunction(PLFunction(s, functionals))


def compose_certificates(
    outer: GoodnessCertificate, inner: GoodnessCertificate
) -> GoodnessCertificate:
    """Certificate for the composite refinement, built as the outer
    function plus a small positive multiple of the inner function.  The
    multiplier is found by deterministic halving from 1; if 64 halvings do
    not succeed, fall back to the certificate search on the composite."""
    o_sub = outer.plfunction.subdivision
    i_sub = inner.plfunction.subdivision
    if i_sub.target != o_sub.source:
        raise ValueError("inner refinement must refine the outer source")
    if o_sub.is_identity():
        return inner
    if i_sub.is_identity():
        return outer
    comp = compose_subdivisions(o_sub, i_sub)
    geom = _piece_geometry(comp)
    base = {}
    bump = {}
    for sid, (tid, _rays, _rids) in geom.items():
        mid = i_sub.hosting[sid][0]
        tid_mid, emb_mid = o_sub.hosting[mid]
        assert tid_mid == tid, (
            "a full-rank composite piece must have the same host as its "
            "intermediate host cone"
        )
        n = comp.target.cone(tid).ambient_dim
        base[sid] = outer.plfunction.functionals[mid]
        m_in = inner.plfunction.functionals[sid]
        # transport the inner functional through the (unimodular) embedding
        # of the intermediate cone: w . emb_mid = m_in
        w = []
        for c in range(n):
            unit = tuple(1 if k == c else 0 for k in range(n))
            x = solve_int(emb_mid, unit)
            assert x is not None, "intermediate host must embed unimodularly"
            w.append(sum(Fraction(a) * b for a, b in zip(m_in, x)))
        bump[sid] = tuple(w)
    eps = Fraction(1)
    for _attempt in range(64):
        config.charge(1, "certificate searches")
        cand = PLFunction(
            comp,
            {
                sid: tuple(b + eps * v for b, v in zip(base[sid], bump[sid]))
                for sid in geom
            },
        )
        ok, _problems = is_good(cand)
        if ok:
            return certificate_from_plfunction(cand)
        eps /= 2
    return certify_projective(comp)
