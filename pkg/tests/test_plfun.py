"""Tests for piecewise-linear functions, goodness checking, and
projectivity certificates."""

from fractions import Fraction
from itertools import product

from hypothesis import given, settings, strategies as st

from conftest import fan_from_directions
from torocomb.complexes import (
    Cone,
    assemble_subdivision,
    compose_subdivisions,
    identity_subdivision,
    resolve,
    simplicialize,
    single_cone_complex,
    stellar_subdivision,
    validate_subdivision,
)
from torocomb.plfun import (
    CertificateNotFound,
    PLFunction,
    certificate_from_plfunction,
    certify_projective,
    check_certificate,
    compose_certificates,
    from_divisor,
    identity_certificate,
    is_good,
    stellar_certificate,
    validate_plfunction,
)


def top_id(c):
    ranks = [cone.rank for cone in c.cones]
    return ranks.index(max(ranks))


def orthant_complex():
    return single_cone_complex(2, [(1, 0), (0, 1)])


def source_ray_vector(s, sid, top):
    """A rank-one source cone's direction in the top target cone's
    coordinates (targets with a unique top cone only)."""
    tid, emb = s.hosting[sid]
    v = tuple(emb.apply(s.source.cone(sid).rays[0]))
    if tid == top:
        return v
    for fm in s.target.face_maps:
        if fm.sub == tid and fm.sup == top:
            return tuple(fm.matrix.apply(v))
    raise AssertionError("no face map into the top cone")


def ray_ids_by_vector(s):
    top = top_id(s.target)
    out = {}
    for sid, cone in enumerate(s.source.cones):
        if cone.rank == 1:
            out[source_ray_vector(s, sid, top)] = sid
    return out


def orthant_stellar():
    c = orthant_complex()
    return stellar_subdivision(c, top_id(c), (1, 1))


def piece_by_embedded_rays(s, rays):
    want = set(map(tuple, rays))
    for sid, cone in enumerate(s.source.cones):
        tid = s.hosting[sid][0]
        if cone.rank == s.target.cone(tid).rank:
            if set(s.embedded_rays(sid)) == want:
                return sid
    raise AssertionError(f"no piece with rays {rays}")


# ---------------------------------------------------------------------------
# building functions from ray coefficients


def test_from_divisor_value_convention():
    s = orthant_stellar()
    ids = ray_ids_by_vector(s)
    coeffs = {ids[(1, 0)]: 0, ids[(1, 1)]: 1, ids[(0, 1)]: 0}
    p = from_divisor(s, coeffs)
    assert validate_plfunction(p) == []
    # the function's value at a ray is minus its coefficient
    assert p.ray_values() == {
        ids[(1, 0)]: 0,
        ids[(1, 1)]: -1,
        ids[(0, 1)]: 0,
    }


def test_from_divisor_zero_coefficients():
    s = orthant_stellar()
    coeffs = {sid: 0 for sid, cone in enumerate(s.source.cones) if cone.rank == 1}
    p = from_divisor(s, coeffs)
    assert all(all(x == 0 for x in m) for m in p.functionals.values())


def test_from_divisor_on_identity_subdivision():
    c = single_cone_complex(2, [(1, 0), (1, 2)])
    s = identity_subdivision(c)
    coeffs = {sid: 3 for sid, cone in enumerate(c.cones) if cone.rank == 1}
    p = from_divisor(s, coeffs)
    assert validate_plfunction(p) == []
    assert set(p.ray_values().values()) == {-3}
    ok, _ = is_good(p)
    assert ok


def test_from_divisor_rejects_nonsimplicial():
    c = single_cone_complex(3, [(1, 0, 1), (0, 1, 1), (-1, 0, 1), (0, -1, 1)])
    s = identity_subdivision(c)
    coeffs = {sid: 0 for sid, cone in enumerate(c.cones) if cone.rank == 1}
    try:
        from_divisor(s, coeffs)
    except ValueError:
        pass
    else:
        raise AssertionError("accepted a non-simplicial complex")


def test_from_divisor_requires_all_rays():
    s = orthant_stellar()
    try:
        from_divisor(s, {})
    except ValueError as e:
        assert "missing" in str(e)
    else:
        raise AssertionError("accepted missing coefficients")


# ---------------------------------------------------------------------------
# goodness


def test_goodness_depends_on_coefficient_sign():
    s = orthant_stellar()
    ids = ray_ids_by_vector(s)
    # positive weight on the new ray pushes the value at (1,1) below the
    # interpolation of the corner values: the minimum is not attained on
    # the pieces, so the function is not good
    bad = from_divisor(s, {ids[(1, 0)]: 0, ids[(1, 1)]: 1, ids[(0, 1)]: 0})
    ok, problems = is_good(bad)
    assert not ok and problems
    # negative weight gives min(x, y): good, margins 1 at the far corners
    good = from_divisor(s, {ids[(1, 0)]: 0, ids[(1, 1)]: -1, ids[(0, 1)]: 0})
    ok, problems = is_good(good)
    assert ok and problems == []
    left = piece_by_embedded_rays(s, [(1, 0), (1, 1)])
    right = piece_by_embedded_rays(s, [(0, 1), (1, 1)])
    assert good.functionals[left] == (Fraction(0), Fraction(1))
    assert good.functionals[right] == (Fraction(1), Fraction(0))
    cert = certificate_from_plfunction(good)
    assert check_certificate(cert) == []
    assert cert.strictness_witnesses[(left, right)] == ((0, 1), Fraction(1))
    assert cert.strictness_witnesses[(right, left)] == ((1, 0), Fraction(1))


def test_zero_function_on_nontrivial_subdivision_not_good():
    s = orthant_stellar()
    coeffs = {sid: 0 for sid, cone in enumerate(s.source.cones) if cone.rank == 1}
    ok, problems = is_good(from_divisor(s, coeffs))
    assert not ok
    assert any("merge" in p for p in problems)


def test_identity_certificate_is_good():
    c = orthant_complex()
    cert = identity_certificate(identity_subdivision(c))
    assert check_certificate(cert) == []
    assert all(all(x == 0 for x in m) for m in cert.plfunction.functionals.values())
    assert cert.strictness_witnesses == {}


def test_goodness_invariant_under_global_linear_shift():
    s = orthant_stellar()
    ids = ray_ids_by_vector(s)
    p = from_divisor(s, {ids[(1, 0)]: 0, ids[(1, 1)]: -1, ids[(0, 1)]: 0})
    ell = (2, -3)
    top = top_id(s.target)
    shifted = {}
    for sid, m in p.functionals.items():
        tid = s.hosting[sid][0]
        if tid == top:
            ell_t = ell
        else:
            fm = next(
                f for f in s.target.face_maps if f.sub == tid and f.sup == top
            )
            cols = fm.matrix.columns()
            ell_t = tuple(sum(e * c for e, c in zip(ell, col)) for col in cols)
        shifted[sid] = tuple(a + b for a, b in zip(m, ell_t))
    q = PLFunction(s, shifted)
    assert validate_plfunction(q) == []
    ok, _ = is_good(q)
    assert ok


def test_validate_flags_broken_functions():
    s = orthant_stellar()
    ids = ray_ids_by_vector(s)
    p = from_divisor(s, {ids[(1, 0)]: 0, ids[(1, 1)]: -1, ids[(0, 1)]: 0})
    missing = dict(p.functionals)
    missing.pop(sorted(missing)[0])
    assert validate_plfunction(PLFunction(s, missing))
    wrong_len = dict(p.functionals)
    top_piece = max(wrong_len, key=lambda sid: len(wrong_len[sid]))
    wrong_len[top_piece] = wrong_len[top_piece] + (Fraction(1),)
    assert any(
        "coordinates" in msg for msg in validate_plfunction(PLFunction(s, wrong_len))
    )
    torn = dict(p.functionals)
    torn[top_piece] = tuple(x + 1 for x in torn[top_piece])
    assert any("disagree" in msg for msg in validate_plfunction(PLFunction(s, torn)))


# ---------------------------------------------------------------------------
# stellar certificates


def test_stellar_certificate_is_pulling_function():
    s = orthant_stellar()
    cert = stellar_certificate(s)
    assert check_certificate(cert) == []
    ids = ray_ids_by_vector(s)
    assert cert.plfunction.ray_values() == {
        ids[(1, 0)]: 0,
        ids[(1, 1)]: 1,
        ids[(0, 1)]: 0,
    }


def test_stellar_certificate_at_existing_ray():
    # simplicializing the cone over a square subdivides at an existing
    # ray; the pulling certificate needs the center named explicitly
    c = single_cone_complex(3, [(1, 0, 1), (0, 1, 1), (-1, 0, 1), (0, -1, 1)])
    s = simplicialize(c, certify=True)
    assert s.certificate is not None
    assert check_certificate(s.certificate) == []
    assert s.certificate.plfunction.subdivision == s


def test_stellar_certificate_on_deeper_face():
    c = single_cone_complex(3, [(1, 0, 0), (0, 1, 0), (0, 0, 1)])
    s = stellar_subdivision(c, top_id(c), (1, 1, 0))
    cert = stellar_certificate(s)
    assert check_certificate(cert) == []


# ---------------------------------------------------------------------------
# certificate search


def test_certify_identity_gives_zero_certificate():
    c = orthant_complex()
    cert = certify_projective(identity_subdivision(c))
    assert check_certificate(cert) == []
    assert all(all(x == 0 for x in m) for m in cert.plfunction.functionals.values())


def test_certify_stellar_subdivision():
    s = orthant_stellar()
    cert = certify_projective(s)
    assert check_certificate(cert) == []


def test_certify_three_piece_star():
    c = single_cone_complex(3, [(1, 0, 0), (0, 1, 0), (0, 0, 1)])
    s = stellar_subdivision(c, top_id(c), (1, 1, 1))
    cert = certify_projective(s)
    assert check_certificate(cert) == []


# ---------------------------------------------------------------------------
# the non-projective pinwheel


PINWHEEL_POINTS = {
    1: (1, 0, 0),
    2: (0, 1, 0),
    3: (0, 0, 1),
    4: (2, 1, 1),
    5: (1, 2, 1),
    6: (1, 1, 2),
}


def pinwheel_subdivision(twist):
    """The cone over a triangle with an inner concentric triangle, the
    band triangulated in rotational ("pinwheel") fashion.  Both rotation
    directions are classically non-projective."""
    c = single_cone_complex(3, [(1, 0, 0), (0, 1, 0), (0, 0, 1)])
    if twist:
        tris = [(1, 2, 4), (2, 4, 5), (2, 3, 5), (3, 5, 6), (1, 3, 6), (1, 4, 6), (4, 5, 6)]
    else:
        tris = [(1, 2, 5), (1, 4, 5), (2, 3, 6), (2, 5, 6), (1, 3, 4), (3, 4, 6), (4, 5, 6)]
    pieces = []
    for cone in c.cones:
        if cone.rank == 3:
            pieces.append(
                [Cone.from_rays(3, [PINWHEEL_POINTS[a] for a in t]) for t in tris]
            )
        else:
            pieces.append([cone])
    return assemble_subdivision(c, pieces)


def box_search_good(s, bound):
    """Bounded exhaustive search for a good function: any good function
    can be normalized (global linear shift, positive scaling) to vanish
    on the host's own rays with integer values at interior rays, so it
    suffices to scan those values.  Returns a witness assignment or None."""
    top = top_id(s.target)
    outer, inner = [], []
    for sid, cone in enumerate(s.source.cones):
        if cone.rank != 1:
            continue
        if s.target.cone(s.hosting[sid][0]).rank == 1:
            outer.append(sid)
        else:
            inner.append(sid)
    for values in product(range(-bound, bound + 1), repeat=len(inner)):
        coeffs = {sid: 0 for sid in outer}
        coeffs.update({sid: -v for sid, v in zip(inner, values)})
        ok, _ = is_good(from_divisor(s, coeffs))
        if ok:
            return values
    return None


def test_pinwheel_subdivisions_are_valid_but_not_projective():
    for twist in (False, True):
        s = pinwheel_subdivision(twist)
        assert validate_subdivision(s) == []
        try:
            certify_projective(s)
        except CertificateNotFound as e:
            assert e.witness["wall_constraints"] > 0
        else:
            raise AssertionError("certified a non-projective subdivision")
        # independent bounded search agrees: no good integer ray values
        assert box_search_good(s, 4) is None


def test_box_search_finds_certificate_for_star():
    c = single_cone_complex(3, [(1, 0, 0), (0, 1, 0), (0, 0, 1)])
    s = stellar_subdivision(c, top_id(c), (1, 1, 1))
    assert box_search_good(s, 2) is not None


# ---------------------------------------------------------------------------
# composition


def test_compose_identity_shortcuts():
    s = orthant_stellar()
    cert = stellar_certificate(s)
    idc_target = identity_certificate(identity_subdivision(s.target))
    idc_source = identity_certificate(identity_subdivision(s.source))
    assert compose_certificates(idc_target, cert) is cert
    assert compose_certificates(cert, idc_source) is cert


def test_compose_two_stellars():
    s1 = orthant_stellar()
    c1 = s1.source
    tops = [cid for cid, cone in enumerate(c1.cones) if cone.rank == 2]
    s2 = stellar_subdivision(c1, tops[0], tuple(
        a + b for a, b in zip(*c1.cone(tops[0]).rays)
    ))
    cert = compose_certificates(stellar_certificate(s1), stellar_certificate(s2))
    assert cert.plfunction.subdivision == compose_subdivisions(s1, s2)
    assert check_certificate(cert) == []


def test_compose_deep_stellar_chain():
    c = orthant_complex()
    total_cert = None
    cur = c
    for _step in range(5):
        tops = [cid for cid, cone in enumerate(cur.cones) if cone.rank == 2]
        cid = tops[0]
        point = tuple(a + b for a, b in zip(*cur.cone(cid).rays))
        step = stellar_subdivision(cur, cid, point)
        step_cert = stellar_certificate(step)
        total_cert = (
            step_cert
            if total_cert is None
            else compose_certificates(total_cert, step_cert)
        )
        cur = step.source
    assert check_certificate(total_cert) == []
    assert len(total_cert.plfunction.subdivision.source.cones) == len(cur.cones)


# ---------------------------------------------------------------------------
# pipeline integration


def test_resolve_attaches_valid_certificate():
    c = single_cone_complex(2, [(1, 0), (1, 2)])
    s = resolve(c)
    assert s.certificate is not None
    assert s.certificate.plfunction.subdivision == s
    assert check_certificate(s.certificate) == []


def test_resolve_smooth_input_identity_certificate():
    s = resolve(orthant_complex())
    assert s.is_identity()
    assert check_certificate(s.certificate) == []


def test_resolve_square_cone_certified():
    c = single_cone_complex(3, [(1, 0, 1), (0, 1, 1), (-1, 0, 1), (0, -1, 1)])
    s = resolve(c)
    assert all(cone.is_smooth for cone in s.source.cones)
    assert check_certificate(s.certificate) == []


vectors_2d = st.lists(
    st.tuples(st.integers(-3, 3), st.integers(-3, 3)),
    min_size=1,
    max_size=5,
)


@settings(max_examples=10, deadline=None)
@given(vectors_2d)
def test_resolve_certificates_on_random_fans(vectors):
    c = fan_from_directions(vectors)
    if c is None:
        return
    s = resolve(c)
    assert all(cone.is_smooth for cone in s.source.cones)
    assert check_certificate(s.certificate) == []
