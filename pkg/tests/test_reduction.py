"""Tests for the reduction pipeline: equidimensional reduction, the
ray-wise lattice correction, prescribed covering lattices, and the
combined weak-semistability pipeline."""

import pytest
from hypothesis import given, settings, strategies as st

from torocomb.cone import Cone
from torocomb.complexes import Complex, FaceMap, import_fan, validate_complex
from torocomb.intlinalg import (
    IntMatrix,
    Lattice,
    lattice_index,
    preimage_lattice,
)
from torocomb.morphism import (
    LatticeAlteration,
    altered_complex,
    base_change,
    classify_morphism,
    identity_morphism,
    induced_morphism,
    validate_alteration,
    validate_morphism,
)
from torocomb.plfun import check_certificate
from torocomb.reduction import (
    PostconditionFailed,
    ReductionResult,
    covering_lattice,
    equidimensional_reduction,
    kawamata_sublattice,
    weak_semistable_alteration,
    weak_semistable_pipeline,
)

from conftest import fan_from_directions


def top_id(c, rank):
    return next(i for i, cone in enumerate(c.cones) if cone.rank == rank)


def orthant_complex():
    return import_fan(2, [(1, 0), (0, 1)], [[0, 1]], name="orthant")


def ray_complex():
    return import_fan(1, [(1,)], [[0]], name="ray")


def node_model():
    """Both rays of the orthant folding onto one target ray, each with
    multiplicity one: the local shape of a degeneration to a node."""
    src = orthant_complex()
    tgt = ray_complex()
    return induced_morphism(
        src, tgt, {top_id(src, 2): (top_id(tgt, 1), IntMatrix([[1, 1]]))}
    )


def diagonal_escape():
    """A ray mapping into the interior of the 2-orthant."""
    src = ray_complex()
    tgt = orthant_complex()
    return induced_morphism(
        src, tgt, {top_id(src, 1): (top_id(tgt, 2), IntMatrix([[1], [1]]))}
    )


def smooth_base(result):
    return all(c.is_smooth for c in result.reduced_morphism.target.cones)


# ---------------------------------------------------------------------------
# equidimensional reduction


def test_equidimensional_reduction_identity_on_nice_input():
    f = node_model()
    res = equidimensional_reduction(f)
    assert res.alteration.is_trivial()
    assert res.reduced_morphism is f
    assert res.certificates == ()
    assert res.report.equidimensional
    assert "already equidimensional" in res.notes[0]


def test_equidimensional_reduction_diagonal_escape():
    f = diagonal_escape()
    assert not classify_morphism(f).equidimensional
    res = equidimensional_reduction(f)
    assert res.report.equidimensional
    assert smooth_base(res)
    assert not res.alteration.is_trivial()
    assert validate_alteration(res.alteration) == []
    # the refined base contains the diagonal ray
    s = res.alteration.subdivision_part
    t1 = s.source
    embedded = {
        tuple(s.host_of(rho)[1].apply(t1.cone(rho).rays[0]))
        for rho in t1.ids_of_rank(1)
        if s.host_of(rho)[0] == top_id(f.target, 2)
    }
    assert (1, 1) in embedded
    # every refinement step certified, and the composite checks out
    assert all(cert is not None for cert in res.certificates)
    assert s.certificate is not None
    assert check_certificate(s.certificate) == []


def test_equidimensional_reduction_rederives_by_base_change():
    f = diagonal_escape()
    res = equidimensional_reduction(f)
    again = base_change(f, res.alteration)
    assert again.key() == res.reduced_morphism.key()


def test_equidimensional_reduction_two_skew_rays_3d():
    src = import_fan(3, [(1, 1, 2), (2, 1, 1)], [[0], [1]], name="skew")
    tgt = import_fan(3, [(1, 0, 0), (0, 1, 0), (0, 0, 1)], [[0, 1, 2]])
    t = top_id(tgt, 3)
    rays = [i for i, c in enumerate(src.cones) if c.rank == 1]
    f = induced_morphism(
        src,
        tgt,
        {
            rays[0]: (t, IntMatrix([[1], [1], [2]])),
            rays[1]: (t, IntMatrix([[2], [1], [1]])),
        },
    )
    res = equidimensional_reduction(f)
    assert res.report.equidimensional
    assert smooth_base(res)
    assert all(cert is not None for cert in res.certificates)
    assert validate_morphism(res.reduced_morphism) == []


def test_equidimensional_reduction_resolves_singular_base():
    # already equidimensional, but the base is singular: the identity on a
    # skew fan must still be pulled back over a smooth refinement
    skew = import_fan(2, [(1, 0), (1, 2)], [[0, 1]], name="skew2")
    f = identity_morphism(skew)
    assert classify_morphism(f).equidimensional
    res = equidimensional_reduction(f)
    assert not res.alteration.is_trivial()
    assert res.report.equidimensional
    assert smooth_base(res)


def self_glued_complex():
    """One abstract ray glued into a 2-cone along both of its rays."""
    orthant = orthant_complex()
    zero = next(c for c in orthant.cones if c.rank == 0)
    ray = Cone.from_rays(1, [(1,)])
    top = next(c for c in orthant.cones if c.rank == 2)
    return Complex(
        (zero, ray, top),
        (
            FaceMap(0, 1, IntMatrix.zeros(1, 0)),
            FaceMap(0, 2, IntMatrix.zeros(2, 0)),
            FaceMap(1, 2, IntMatrix([[1], [0]])),
            FaceMap(1, 2, IntMatrix([[0], [1]])),
        ),
        name="self-glued",
    )


def test_equidimensional_reduction_rejects_self_glued_base():
    loop = self_glued_complex()
    assert validate_complex(loop) == []
    f = induced_morphism(
        ray_complex(), loop, {top_id(ray_complex(), 1): (2, IntMatrix([[1], [1]]))}
    )
    with pytest.raises(ValueError, match="injectively glued"):
        equidimensional_reduction(f)


# ---------------------------------------------------------------------------
# ray-wise lattice correction


def test_lattice_correction_trivial_on_semistable_input():
    f = node_model()
    res = weak_semistable_alteration(f)
    assert res.alteration.is_trivial()
    assert res.report.weakly_semistable
    assert any("trivial" in note for note in res.notes)


def test_lattice_correction_ray_doubling():
    c = ray_complex()
    t = top_id(c, 1)
    f = induced_morphism(c, c, {t: (t, IntMatrix([[2]]))})
    report = classify_morphism(f)
    assert report.equidimensional and not report.weakly_semistable
    assert "index 2" in " ".join(reason for _, reason in report.failing_witnesses)
    res = weak_semistable_alteration(f)
    assert res.alteration.lattice_part.sublattices[t] == Lattice.from_generators(
        1, [(2,)]
    )
    assert res.report.weakly_semistable
    # the doubled ray now generates the new lattice: multiplicity one
    assert all(k == 1 for _, k in res.report.ray_multiplicities.values())


def test_lattice_correction_takes_least_common_multiple():
    src = import_fan(1, [(1,), (-1,)], [[0], [1]], name="two-rays")
    tgt = ray_complex()
    t = top_id(tgt, 1)
    rays = [i for i, c in enumerate(src.cones) if c.rank == 1]
    by_dir = {src.cone(i).rays[0][0]: i for i in rays}
    f = induced_morphism(
        src,
        tgt,
        {by_dir[1]: (t, IntMatrix([[2]])), by_dir[-1]: (t, IntMatrix([[-3]]))},
    )
    mults = classify_morphism(f).ray_multiplicities
    assert sorted(k for _, k in mults.values()) == [2, 3]
    res = weak_semistable_alteration(f)
    assert res.alteration.lattice_part.sublattices[t] == Lattice.from_generators(
        1, [(6,)]
    )
    assert res.report.weakly_semistable
    assert all(k == 1 for _, k in res.report.ray_multiplicities.values())


def test_lattice_correction_finer_than_naive_intersection():
    # a top cone mapping isomorphically while a lone ray triples one of the
    # base rays: the naive per-cone image intersection on the top cone is
    # everything, but face-compatibility forces the ray-wise lattice
    src = import_fan(2, [(1, 0), (0, 1), (1, -1)], [[0, 1], [2]], name="mixed")
    tgt = orthant_complex()
    t = top_id(tgt, 2)
    src_top = top_id(src, 2)
    lone = next(
        i
        for i, c in enumerate(src.cones)
        if c.rank == 1 and i not in {fm.sub for fm in src.face_maps if fm.sup == src_top}
    )
    f = induced_morphism(
        src,
        tgt,
        {
            src_top: (t, IntMatrix([[1, 0], [0, 1]])),
            lone: (t, IntMatrix([[3], [0]])),
        },
    )
    res = weak_semistable_alteration(f)
    assert res.alteration.lattice_part.sublattices[t] == Lattice.from_generators(
        2, [(3, 0), (0, 1)]
    )
    assert res.report.weakly_semistable
    assert any("strictly finer" in note for note in res.notes)


def test_lattice_correction_matches_per_cone_preimages():
    # after base change each source cone carries exactly the preimage of
    # the corrected base lattice
    src = import_fan(1, [(1,), (-1,)], [[0], [1]], name="two-rays")
    tgt = ray_complex()
    t = top_id(tgt, 1)
    rays = [i for i, c in enumerate(src.cones) if c.rank == 1]
    by_dir = {src.cone(i).rays[0][0]: i for i in rays}
    assigned = {by_dir[1]: (t, IntMatrix([[2]])), by_dir[-1]: (t, IntMatrix([[-3]]))}
    f = induced_morphism(src, tgt, assigned)
    res = weak_semistable_alteration(f)
    expected = {
        sid: preimage_lattice(m, res.alteration.lattice_part.sublattices[tid])
        for sid, (tid, m) in assigned.items()
    }
    expected_src, _bases = altered_complex(LatticeAlteration(src, expected))
    assert expected_src.key() == res.reduced_morphism.source.key()


def test_lattice_correction_requires_equidimensional_input():
    with pytest.raises(ValueError, match="equidimensional"):
        weak_semistable_alteration(diagonal_escape())


def test_lattice_correction_requires_smooth_base():
    skew = import_fan(2, [(1, 0), (1, 2)], [[0, 1]], name="skew2")
    with pytest.raises(ValueError, match="smooth"):
        weak_semistable_alteration(identity_morphism(skew))


# ---------------------------------------------------------------------------
# the combined pipeline


def test_pipeline_trivial_on_semistable_input():
    f = node_model()
    res = weak_semistable_pipeline(f)
    assert res.alteration.is_trivial()
    assert res.report.weakly_semistable
    assert res.report.semistable


def test_pipeline_escape_with_doubling():
    src = ray_complex()
    tgt = orthant_complex()
    f = induced_morphism(
        src, tgt, {top_id(src, 1): (top_id(tgt, 2), IntMatrix([[2], [2]]))}
    )
    res = weak_semistable_pipeline(f)
    assert res.report.weakly_semistable
    assert smooth_base(res)
    assert validate_alteration(res.alteration) == []
    assert all(k == 1 for _, k in res.report.ray_multiplicities.values())
    again = base_change(f, res.alteration)
    assert again.key() == res.reduced_morphism.key()


def test_pipeline_combines_both_stages():
    # stage one must refine (the image escapes), stage two must correct
    # lattices (the doubled ray), and the combined alteration carries both
    src = ray_complex()
    tgt = orthant_complex()
    f = induced_morphism(
        src, tgt, {top_id(src, 1): (top_id(tgt, 2), IntMatrix([[2], [2]]))}
    )
    res = weak_semistable_pipeline(f)
    assert not res.alteration.subdivision_part.is_identity()
    assert not res.alteration.lattice_part.is_trivial()


vectors_2d = st.lists(
    st.tuples(
        st.integers(min_value=-3, max_value=3), st.integers(min_value=-3, max_value=3)
    ).filter(lambda v: v != (0, 0)),
    min_size=1,
    max_size=5,
)


@settings(max_examples=15, deadline=None)
@given(vectors_2d)
def test_pipeline_on_identity_of_random_fans(vectors):
    c = fan_from_directions(vectors)
    res = weak_semistable_pipeline(identity_morphism(c))
    assert res.report.weakly_semistable
    assert smooth_base(res)
    assert validate_morphism(res.reduced_morphism) == []


# ---------------------------------------------------------------------------
# prescribed covering lattices


def ray_by_direction(c, sup, v):
    """The declared ray cone of ``sup`` whose geometric direction is ``v``."""
    for sub, mat in c.incoming(sup).values():
        cone = c.cone(sub)
        if cone.rank == 1 and tuple(mat.apply(cone.rays[0])) == tuple(v):
            return sub
    raise AssertionError(f"no ray {v} in cone {sup}")


def test_kawamata_sublattice_orthant():
    c = orthant_complex()
    t = top_id(c, 2)
    e1 = ray_by_direction(c, t, (1, 0))
    e2 = ray_by_direction(c, t, (0, 1))
    lat = kawamata_sublattice(c, {e1: 2, e2: 3})
    assert lat.sublattices[t] == Lattice.from_generators(2, [(2, 0), (0, 3)])
    assert lattice_index(lat.sublattices[t], Lattice.standard(2)) == 6
    # the altered complex is again smooth, with the prescribed ray indices
    altered, bases = altered_complex(lat)
    assert all(cone.is_smooth for cone in altered.cones)
    assert sorted(abs(bases[rid].entries[0][0]) for rid in (e1, e2)) == [2, 3]


def test_kawamata_sublattice_all_ones_is_trivial():
    c = orthant_complex()
    orders = {rid: 1 for rid in c.ids_of_rank(1)}
    assert kawamata_sublattice(c, orders).is_trivial()


def test_kawamata_sublattice_face_compatible_across_shared_ray():
    c = import_fan(2, [(1, 0), (0, 1), (-1, 0)], [[0, 1], [1, 2]], name="half")
    orders = {rid: k for rid, k in zip(c.ids_of_rank(1), (2, 3, 5))}
    lat = kawamata_sublattice(c, orders)
    from torocomb.morphism import validate_lattice_alteration

    assert validate_lattice_alteration(lat) == []


def test_kawamata_sublattice_input_checks():
    c = orthant_complex()
    rays = list(c.ids_of_rank(1))
    with pytest.raises(ValueError, match="no order"):
        kawamata_sublattice(c, {rays[0]: 2})
    with pytest.raises(ValueError, match="positive"):
        kawamata_sublattice(c, {rays[0]: 0, rays[1]: 2})
    with pytest.raises(ValueError, match="not a ray cone"):
        kawamata_sublattice(c, {rays[0]: 1, rays[1]: 1, top_id(c, 2): 2})
    skew = import_fan(2, [(1, 0), (1, 2)], [[0, 1]], name="skew2")
    with pytest.raises(ValueError, match="not smooth"):
        kawamata_sublattice(skew, {rid: 1 for rid in skew.ids_of_rank(1)})


def test_covering_lattice_examples():
    tau = Cone.from_rays(2, [(0, 1)])
    assert covering_lattice(tau, []) == tau.lattice
    enlarged = covering_lattice(tau, [(2, 0)])
    assert enlarged == Lattice.from_generators(2, [(2, 0), (0, 1)])
    assert lattice_index(enlarged, Lattice.standard(2)) == 2
    assert covering_lattice(tau, [(1, 0)]) == Lattice.standard(2)


def test_covering_lattice_respects_ambient_lattice():
    tau = Cone.from_rays(2, [(0, 1)])
    even = Lattice.from_generators(2, [(2, 0), (0, 2)])
    with pytest.raises(ValueError, match="outside the ambient lattice"):
        covering_lattice(tau, [(1, 0)], ambient_lattice=even)
    got = covering_lattice(tau, [(2, 0)], ambient_lattice=even)
    assert got == Lattice.from_generators(2, [(2, 0), (0, 2)])


def test_covering_lattice_rejects_bad_lengths():
    tau = Cone.from_rays(2, [(0, 1)])
    with pytest.raises(ValueError, match="length"):
        covering_lattice(tau, [(1, 0, 0)])


# ---------------------------------------------------------------------------
# result and error types


def test_reduction_result_repr_mentions_flags():
    f = node_model()
    res = weak_semistable_pipeline(f)
    text = repr(res)
    assert "trivial" in text and "weakly_semistable=True" in text


def test_postcondition_failed_carries_diagnostic():
    err = PostconditionFailed("boom", diagnostic={"stage": "test"})
    assert err.diagnostic["stage"] == "test"
    assert isinstance(err, Exception)
