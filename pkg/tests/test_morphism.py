"""Tests for morphisms of complexes, their classification ladder,
lattice alterations, base change, and equivalence up to unimodular
coordinate changes."""

import pytest
from hypothesis import given, settings, strategies as st

from conftest import fan_from_directions
from torocomb.complexes import (
    identity_subdivision,
    import_fan,
    single_cone_complex,
    stellar_subdivision,
    validate_complex,
)
from torocomb.cone import Cone
from torocomb.intlinalg import IntMatrix, Lattice
from torocomb.morphism import (
    Alteration,
    ComplexMorphism,
    LatticeAlteration,
    MorphismReport,
    altered_complex,
    base_change,
    check_lifting,
    classify_morphism,
    complex_equivalences,
    complexes_equivalent,
    compose_alterations,
    identity_alteration,
    identity_morphism,
    image_cone,
    induced_morphism,
    morphism_equivalence,
    morphisms_equivalent,
    semistable_normal_form,
    trivial_lattice_alteration,
    validate_alteration,
    validate_lattice_alteration,
    validate_morphism,
)


def orthant_complex():
    return single_cone_complex(2, [(1, 0), (0, 1)])


def line_complex():
    return single_cone_complex(1, [(1,)])


def top_id(c):
    ranks = [cone.rank for cone in c.cones]
    return ranks.index(max(ranks))


def ray_cone_id(c, tid, ray_index):
    return c.face_cone_of(tid, (ray_index,))[0]


def node_model():
    """Two coordinate rays mapping onto one ray, both with multiplicity
    one: the local shape of a one-parameter degeneration to a node."""
    src = orthant_complex()
    tgt = line_complex()
    f = induced_morphism(
        src, tgt, {top_id(src): (top_id(tgt), [[1, 1]])}
    )
    return src, tgt, f


# ---------------------------------------------------------------------------
# construction and validation


def test_identity_morphism_is_semistable():
    c = orthant_complex()
    f = identity_morphism(c)
    assert validate_morphism(f) == []
    r = classify_morphism(f)
    assert r.equidimensional
    assert r.weakly_semistable
    assert r.semistable
    assert r.preimage_zero_trivial
    assert r.failing_witnesses == ()
    for sid, (tid, k) in r.ray_multiplicities.items():
        assert tid == sid and k == 1


def test_constructor_rejects_malformed_assignments():
    src = line_complex()
    tgt = orthant_complex()
    zero_entry = (src.zero_id, IntMatrix.zeros(0, 0))
    with pytest.raises(ValueError):
        ComplexMorphism(src, tgt, [zero_entry])  # wrong length
    with pytest.raises(ValueError):
        ComplexMorphism(
            src, tgt, [(tgt.zero_id, IntMatrix.zeros(0, 0)), (99, [[1], [0]])]
        )
    with pytest.raises(ValueError):
        ComplexMorphism(
            src, tgt, [(tgt.zero_id, IntMatrix.zeros(0, 0)), (top_id(tgt), [[1]])]
        )  # wrong matrix shape


def test_validator_flags_non_minimal_target():
    src = line_complex()
    tgt = orthant_complex()
    rid = src.ids_of_rank(1)[0]
    assignment = [None, None]
    assignment[src.zero_id] = (tgt.zero_id, IntMatrix.zeros(0, 0))
    assignment[rid] = (top_id(tgt), [[0], [1]])
    f = ComplexMorphism(src, tgt, assignment)
    problems = validate_morphism(f)
    assert any("not minimal" in p for p in problems)


def test_validator_flags_image_escaping_target_cone():
    src = line_complex()
    tgt = orthant_complex()
    rid = src.ids_of_rank(1)[0]
    assignment = [None, None]
    assignment[src.zero_id] = (tgt.zero_id, IntMatrix.zeros(0, 0))
    assignment[rid] = (top_id(tgt), [[1], [-1]])
    f = ComplexMorphism(src, tgt, assignment)
    problems = validate_morphism(f)
    assert any("outside target cone" in p for p in problems)


def test_validator_flags_face_square_violation():
    src, tgt, f = node_model()
    tray = top_id(tgt)
    tampered = list(f.assignment)
    e2 = ray_cone_id(src, top_id(src), 0)
    tampered[e2] = (tray, IntMatrix([[2]]))
    g = ComplexMorphism(src, tgt, tampered)
    problems = validate_morphism(g)
    assert any("do not commute" in p for p in problems)


def test_induced_morphism_canonicalizes_to_minimal_cone():
    src = line_complex()
    tgt = orthant_complex()
    rid = src.ids_of_rank(1)[0]
    top = top_id(tgt)
    f = induced_morphism(src, tgt, {rid: (top, [[0], [1]])})
    assert validate_morphism(f) == []
    # the image is the ray at index 0 of the orthant's sorted rays (0,1)
    tid, m = f.assigned(rid)
    assert tid == ray_cone_id(tgt, top, 0)
    assert m.entries == ((1,),)


def test_induced_morphism_derives_face_assignments():
    src, tgt, f = node_model()
    assert validate_morphism(f) == []
    tray = top_id(tgt)
    for k in (0, 1):
        tid, m = f.assigned(ray_cone_id(src, top_id(src), k))
        assert tid == tray and m.entries == ((1,),)
    tid, m = f.assigned(src.zero_id)
    assert tid == tgt.zero_id and m.entries == ()


def test_induced_morphism_requires_coverage():
    src = orthant_complex()
    tgt = line_complex()
    with pytest.raises(ValueError, match="derivable"):
        induced_morphism(src, tgt, {})


# ---------------------------------------------------------------------------
# images and classification


def test_image_cone_of_identity_is_the_cone():
    c = orthant_complex()
    f = identity_morphism(c)
    top = top_id(c)
    assert image_cone(f, top) == c.cone(top)


def test_image_cone_collapse_and_extreme_rays():
    src, tgt, f = node_model()
    img = image_cone(f, top_id(src))
    assert img.rays == ((1,),)
    shear = induced_morphism(
        src, src, {top_id(src): (top_id(src), [[1, 1], [0, 1]])}
    )
    assert image_cone(shear, top_id(src)).rays == ((1, 0), (1, 1))


def test_classify_node_model():
    src, tgt, f = node_model()
    r = classify_morphism(f)
    assert r.semistable
    assert r.preimage_zero_trivial
    tray = top_id(tgt)
    assert r.ray_multiplicities == {
        ray_cone_id(src, top_id(src), 0): (tray, 1),
        ray_cone_id(src, top_id(src), 1): (tray, 1),
    }


def test_classify_ray_doubling():
    c = line_complex()
    rid = c.ids_of_rank(1)[0]
    f = induced_morphism(c, c, {rid: (rid, [[2]])})
    assert validate_morphism(f) == []
    r = classify_morphism(f)
    assert r.equidimensional
    assert not r.weakly_semistable
    assert not r.semistable
    assert r.ray_multiplicities == {rid: (rid, 2)}
    assert any("index 2" in reason for _cid, reason in r.failing_witnesses)


def test_classify_diagonal_escape_is_not_equidimensional():
    src = line_complex()
    tgt = orthant_complex()
    rid = src.ids_of_rank(1)[0]
    f = induced_morphism(src, tgt, {rid: (top_id(tgt), [[1], [1]])})
    assert validate_morphism(f) == []
    r = classify_morphism(f)
    assert not r.equidimensional
    assert not r.weakly_semistable
    assert r.ray_multiplicities == {rid: (None, 1)}


def test_classify_collapsing_axis():
    src = orthant_complex()
    tgt = line_complex()
    top = top_id(src)
    f = induced_morphism(src, tgt, {top: (top_id(tgt), [[0, 1]])})
    assert validate_morphism(f) == []
    r = classify_morphism(f)
    assert r.semistable
    assert not r.preimage_zero_trivial
    e2, e1 = ray_cone_id(src, top, 0), ray_cone_id(src, top, 1)
    assert r.ray_multiplicities[e2] == (top_id(tgt), 1)
    assert r.ray_multiplicities[e1] == (tgt.zero_id, 0)
    assert any(
        "maps to zero" in reason for _cid, reason in r.failing_witnesses
    )


def test_report_enforces_the_ladder():
    with pytest.raises(ValueError):
        MorphismReport(False, True, False, True, {}, ())
    with pytest.raises(ValueError):
        MorphismReport(True, False, True, True, {}, ())


# ---------------------------------------------------------------------------
# local normal form


def test_normal_form_of_node_model():
    src, tgt, f = node_model()
    top = top_id(src)
    nf = semistable_normal_form(f, top)
    tray = top_id(tgt)
    e2, e1 = ray_cone_id(src, top, 0), ray_cone_id(src, top, 1)
    assert nf["cone"] == top and nf["target"] == tray
    assert nf["blocks"] == ((tray, tuple(sorted((e2, e1)))),)
    assert nf["zero"] == ()


def test_normal_form_of_collapsing_axis():
    src = orthant_complex()
    tgt = line_complex()
    top = top_id(src)
    f = induced_morphism(src, tgt, {top: (top_id(tgt), [[0, 1]])})
    nf = semistable_normal_form(f, top)
    e2, e1 = ray_cone_id(src, top, 0), ray_cone_id(src, top, 1)
    assert nf["blocks"] == ((top_id(tgt), (e2,)),)
    assert nf["zero"] == (e1,)


def test_normal_form_of_identity_has_singleton_blocks():
    c = orthant_complex()
    f = identity_morphism(c)
    top = top_id(c)
    nf = semistable_normal_form(f, top)
    r0, r1 = ray_cone_id(c, top, 0), ray_cone_id(c, top, 1)
    assert nf["blocks"] == ((r0, (r0,)), (r1, (r1,)))
    assert nf["zero"] == ()


def test_normal_form_requires_semistability():
    c = line_complex()
    rid = c.ids_of_rank(1)[0]
    f = induced_morphism(c, c, {rid: (rid, [[2]])})
    with pytest.raises(ValueError, match="semistable"):
        semistable_normal_form(f, rid)


# ---------------------------------------------------------------------------
# lifting checks


def test_check_lifting_along_identities():
    c = orthant_complex()
    f = identity_morphism(c)
    ok, witnesses = check_lifting(
        f, identity_subdivision(c), identity_subdivision(c)
    )
    assert ok and witnesses == []


def test_check_lifting_with_refined_source_only():
    src, tgt, f = node_model()
    refinement = stellar_subdivision(src, top_id(src), (1, 1))
    ok, witnesses = check_lifting(f, refinement, identity_subdivision(tgt))
    assert ok and witnesses == []


def test_check_lifting_detects_crossing_and_is_fixed_by_refining():
    c = orthant_complex()
    f = identity_morphism(c)
    target_ref = stellar_subdivision(c, top_id(c), (1, 1))
    ok, witnesses = check_lifting(f, identity_subdivision(c), target_ref)
    assert not ok
    assert any("crosses" in reason for _cid, reason in witnesses)
    ok, witnesses = check_lifting(f, target_ref, target_ref)
    assert ok and witnesses == []


def test_check_lifting_rejects_foreign_refinements():
    c = orthant_complex()
    other = line_complex()
    f = identity_morphism(c)
    with pytest.raises(ValueError):
        check_lifting(f, identity_subdivision(other), identity_subdivision(c))


# ---------------------------------------------------------------------------
# lattice alterations


def diag_sublattices(c):
    """Index-six sublattice family on the orthant: 2Z on the first axis,
    3Z on the second."""
    top = top_id(c)
    return {
        top: Lattice.from_generators(2, [(2, 0), (0, 3)]),
        ray_cone_id(c, top, 0): Lattice.from_generators(1, [(3,)]),
        ray_cone_id(c, top, 1): Lattice.from_generators(1, [(2,)]),
    }


def test_validate_lattice_alteration_accepts_compatible_family():
    c = orthant_complex()
    a = LatticeAlteration(c, diag_sublattices(c))
    assert validate_lattice_alteration(a) == []


def test_validate_lattice_alteration_flags_incompatibility():
    c = orthant_complex()
    subs = diag_sublattices(c)
    subs[ray_cone_id(c, top_id(c), 1)] = Lattice.standard(1)
    a = LatticeAlteration(c, subs)
    problems = validate_lattice_alteration(a)
    assert any("face-compatible" in p for p in problems)


def test_validate_lattice_alteration_flags_infinite_index():
    c = line_complex()
    a = LatticeAlteration(
        c, {c.ids_of_rank(1)[0]: Lattice.from_generators(1, [])}
    )
    problems = validate_lattice_alteration(a)
    assert any("infinite index" in p for p in problems)


def test_altered_complex_restores_the_orthant():
    c = orthant_complex()
    a = LatticeAlteration(c, diag_sublattices(c))
    altered, bases = altered_complex(a)
    assert validate_complex(altered) == []
    top = top_id(c)
    assert altered.cone(top).rays == ((0, 1), (1, 0))
    assert altered.cone(top).is_smooth
    assert bases[top].entries == ((2, 0), (0, 3))
    # cone ids are preserved and the declared face maps are re-solved
    sub_id, matrix = altered.face_cone_of(top, (0,))
    assert sub_id == ray_cone_id(c, top, 0)
    assert matrix.entries == ((0,), (1,))


# ---------------------------------------------------------------------------
# base change


def test_base_change_along_trivial_alteration_is_the_morphism():
    src, tgt, f = node_model()
    g = base_change(f, identity_alteration(tgt))
    assert g is f


def test_base_change_rejects_foreign_base():
    src, tgt, f = node_model()
    with pytest.raises(ValueError, match="base"):
        base_change(f, identity_alteration(src))


def test_base_change_kills_ray_multiplicity():
    c = line_complex()
    rid = c.ids_of_rank(1)[0]
    f = induced_morphism(c, c, {rid: (rid, [[2]])})
    a = Alteration(
        identity_subdivision(c),
        LatticeAlteration(c, {rid: Lattice.from_generators(1, [(2,)])}),
    )
    assert validate_alteration(a) == []
    g = base_change(f, a)
    assert validate_morphism(g) == []
    # the target lattice is rescaled, the source is untouched
    assert g.source == c
    assert g.assigned(g.source.ids_of_rank(1)[0])[1].entries == ((1,),)
    r = classify_morphism(g)
    assert r.weakly_semistable
    assert r.ray_multiplicities == {rid: (rid, 1)}


def test_base_change_of_identity_along_stellar_refinement():
    c = orthant_complex()
    f = identity_morphism(c)
    sub = stellar_subdivision(c, top_id(c), (1, 1))
    a = Alteration(sub, trivial_lattice_alteration(sub.source))
    g = base_change(f, a)
    assert validate_morphism(g) == []
    assert len(g.source.cones) == 6
    assert g.target == sub.source
    assert g.source == g.target
    r = classify_morphism(g)
    assert r.semistable
    assert r.preimage_zero_trivial


def test_base_change_functoriality_up_to_equivalence():
    c = orthant_complex()
    top = top_id(c)
    f = induced_morphism(c, c, {top: (top, [[1, 1], [0, 1]])})
    assert validate_morphism(f) == []
    first = Alteration(
        stellar_subdivision(c, top, (1, 1)),
        trivial_lattice_alteration(stellar_subdivision(c, top, (1, 1)).source),
    )
    mid = first.result()[0]
    cell = next(
        cid
        for cid in mid.ids_of_rank(2)
        if mid.cone(cid).rays == ((1, 0), (1, 1))
    )
    inner_sub = stellar_subdivision(mid, cell, (2, 1))
    doubled = {
        cid: Lattice.from_generators(
            cone.ambient_dim,
            [
                tuple(2 if i == j else 0 for j in range(cone.ambient_dim))
                for i in range(cone.ambient_dim)
            ],
        )
        for cid, cone in enumerate(inner_sub.source.cones)
        if cone.ambient_dim
    }
    second = Alteration(
        inner_sub, LatticeAlteration(inner_sub.source, doubled)
    )
    assert validate_alteration(second) == []

    combined = compose_alterations(first, second)
    assert validate_alteration(combined) == []
    left = base_change(f, combined)
    right = base_change(base_change(f, first), second)
    assert validate_morphism(left) == []
    assert validate_morphism(right) == []
    identification = morphism_equivalence(left, right)
    assert identification is not None
    rl, rr = classify_morphism(left), classify_morphism(right)
    assert rl.equidimensional == rr.equidimensional
    assert rl.weakly_semistable == rr.weakly_semistable
    assert rl.semistable == rr.semistable
    assert rl.preimage_zero_trivial == rr.preimage_zero_trivial


def test_compose_alterations_shortcut_laws():
    c = orthant_complex()
    sub = stellar_subdivision(c, top_id(c), (1, 1))
    a = Alteration(sub, trivial_lattice_alteration(sub.source))
    result = a.result()[0]
    assert compose_alterations(a, identity_alteration(result)) is a
    b = Alteration(
        stellar_subdivision(c, top_id(c), (1, 2)),
        trivial_lattice_alteration(
            stellar_subdivision(c, top_id(c), (1, 2)).source
        ),
    )
    trivial = identity_alteration(c)
    assert compose_alterations(trivial, b) is b


# ---------------------------------------------------------------------------
# equivalence of complexes and morphisms


def test_unimodular_twists_are_equivalent():
    c1 = single_cone_complex(2, [(1, 0), (0, 1)])
    c2 = single_cone_complex(2, [(1, 0), (1, 1)])
    assert complexes_equivalent(c1, c2)
    perm, mats = next(complex_equivalences(c1, c2))
    top = top_id(c1)
    g = mats[top]
    assert abs(g.det()) == 1
    image = sorted(tuple(g.apply(r)) for r in c1.cone(top).rays)
    assert tuple(image) == c2.cone(perm[top]).rays


def test_multiplicity_obstructs_equivalence():
    c1 = single_cone_complex(2, [(1, 0), (0, 1)])
    c3 = single_cone_complex(2, [(1, 0), (1, 2)])
    assert not complexes_equivalent(c1, c3)


def test_morphism_equivalence_across_a_twist():
    src1 = single_cone_complex(2, [(1, 0), (0, 1)])
    tgt = line_complex()
    f = induced_morphism(
        src1, tgt, {top_id(src1): (top_id(tgt), [[1, 1]])}
    )
    src2 = single_cone_complex(2, [(1, 0), (1, 1)])
    g = induced_morphism(
        src2, tgt, {top_id(src2): (top_id(tgt), [[1, 0]])}
    )
    identification = morphism_equivalence(f, g)
    assert identification is not None
    i = top_id(src1)
    base = identification["source_bases"][i]
    tid, m = f.assigned(i)
    tid2, m2 = g.assigned(identification["source_map"][i])
    h = identification["target_bases"][tid]
    assert m2 @ base == h @ m


def test_morphism_equivalence_respects_multiplicities():
    src = orthant_complex()
    tgt = line_complex()
    f = induced_morphism(src, tgt, {top_id(src): (top_id(tgt), [[1, 1]])})
    g = induced_morphism(src, tgt, {top_id(src): (top_id(tgt), [[1, 2]])})
    assert not morphisms_equivalent(f, g)


# ---------------------------------------------------------------------------
# randomized properties


vectors_2d = st.lists(
    st.tuples(st.integers(-3, 3), st.integers(-3, 3)),
    min_size=1,
    max_size=6,
)


@settings(max_examples=20, deadline=None)
@given(vectors_2d)
def test_identity_morphisms_on_random_fans(vectors):
    c = fan_from_directions(vectors)
    if c is None:
        return
    f = identity_morphism(c)
    assert validate_morphism(f) == []
    r = classify_morphism(f)
    assert r.equidimensional
    assert r.preimage_zero_trivial
    assert r.weakly_semistable == all(cone.is_smooth for cone in c.cones)
    for sid, (tid, k) in r.ray_multiplicities.items():
        assert tid == sid and k == 1


@settings(max_examples=20, deadline=None)
@given(
    st.tuples(st.integers(-3, 3), st.integers(-3, 3)),
    st.tuples(st.integers(-3, 3), st.integers(-3, 3)),
    st.integers(-2, 2),
    st.integers(-2, 2),
)
def test_twisted_cones_stay_equivalent(v1, v2, a, b):
    if v1[0] * v2[1] - v1[1] * v2[0] == 0:
        return
    c1 = single_cone_complex(2, [v1, v2])
    shear = IntMatrix([[1, a], [0, 1]]) @ IntMatrix([[1, 0], [b, 1]])
    c2 = single_cone_complex(
        2, [tuple(shear.apply(v1)), tuple(shear.apply(v2))]
    )
    assert complexes_equivalent(c1, c2)
