"""Tests for the brute-force oracles: frozen example values, input
guards, and small differential runs against the fast paths."""

import pytest
from hypothesis import assume, given, settings, strategies as st

from torocomb import config
from torocomb.cone import Cone
from torocomb.complexes import (
    identity_subdivision,
    single_cone_complex,
    stellar_subdivision,
)
from torocomb.intlinalg import IntMatrix, Lattice, lattice_image
from torocomb.oracle import (
    Box,
    brute_convexity,
    brute_membership,
    brute_multiplicity,
    brute_surjectivity,
)
from torocomb.plfun import PLFunction, from_divisor, is_good


def orthant_complex():
    return single_cone_complex(2, [(1, 0), (0, 1)])


def top_id(c):
    ranks = [cone.rank for cone in c.cones]
    return ranks.index(max(ranks))


def split_orthant():
    c = orthant_complex()
    return stellar_subdivision(c, top_id(c), (1, 1))


def ray_ids_by_vector(s):
    """Ray cone ids of the refined complex keyed by their direction in the
    (unique) top target cone's coordinates."""
    top = top_id(s.target)
    out = {}
    for sid in s.source.ids_of_rank(1):
        tid, emb = s.hosting[sid]
        v = tuple(emb.apply(s.source.cone(sid).rays[0]))
        if tid != top:
            fm = next(
                f for f in s.target.face_maps if f.sub == tid and f.sup == top
            )
            v = tuple(fm.matrix.apply(v))
        out[v] = sid
    return out


# ---------------------------------------------------------------------------
# Box


def test_box_validation_and_points():
    with pytest.raises(ValueError, match="radius"):
        Box(0)
    assert len(list(Box(2).points(2))) == 25
    assert list(Box(1).points(0)) == [()]


# ---------------------------------------------------------------------------
# membership


def test_membership_frozen_examples():
    b = Box(3)
    orthant = Cone.from_rays(2, [(1, 0), (0, 1)])
    assert brute_membership(orthant, (2, 3), b)
    assert not brute_membership(orthant, (-1, 1), b)
    skew = Cone.from_rays(2, [(1, 0), (1, 2)])
    assert not brute_membership(skew, (0, 1), b)


def test_membership_zero_cone_and_zero_point():
    b = Box(1)
    zero = Cone.zero(2)
    assert brute_membership(zero, (0, 0), b)
    assert not brute_membership(zero, (1, 0), b)
    assert brute_membership(Cone.from_rays(2, [(1, 0)]), (0, 0), b)


def test_membership_guards():
    c = Cone.from_rays(5, [tuple(1 if i == j else 0 for j in range(5)) for i in range(5)])
    with pytest.raises(ValueError, match="too large"):
        brute_membership(c, (1, 1, 1, 1, 1), Box(1))
    with pytest.raises(ValueError, match="length"):
        brute_membership(Cone.from_rays(2, [(1, 0)]), (1, 0, 0), Box(1))
    with pytest.raises(TypeError):
        brute_membership(Cone.from_rays(2, [(1, 0)]), (1, 0), 3)


vectors = st.lists(
    st.tuples(
        st.integers(min_value=-3, max_value=3), st.integers(min_value=-3, max_value=3)
    ).filter(lambda v: v != (0, 0)),
    min_size=1,
    max_size=4,
)
points_2d = st.tuples(
    st.integers(min_value=-4, max_value=4), st.integers(min_value=-4, max_value=4)
)


def pointed_cone(ambient, vs):
    """The cone on the vectors, or ``None`` when they are not pointed."""
    try:
        return Cone.from_rays(ambient, vs)
    except ValueError:
        return None


@settings(max_examples=60, deadline=None)
@given(vectors, points_2d)
def test_membership_agrees_with_fast_path(vs, p):
    c = pointed_cone(2, vs)
    assume(c is not None)
    assert brute_membership(c, p, Box(1)) == c.contains_point(p)


# ---------------------------------------------------------------------------
# multiplicity


def test_multiplicity_frozen_examples():
    assert brute_multiplicity(Cone.from_rays(2, [(1, 0), (0, 1)])) == 1
    assert brute_multiplicity(Cone.from_rays(2, [(1, 0), (1, 2)])) == 2
    assert (
        brute_multiplicity(Cone.from_rays(3, [(1, 0, 0), (0, 1, 0), (1, 1, 2)])) == 2
    )
    assert brute_multiplicity(Cone.zero(2)) == 1
    assert brute_multiplicity(Cone.from_rays(3, [(2, 3, 5)])) == 1


def test_multiplicity_counts_the_right_points():
    # the quadrant between (1,1) and (1,-1): points (0,0) and (1,0)
    assert brute_multiplicity(Cone.from_rays(2, [(1, 1), (1, -1)])) == 2
    # non-full-dimensional simplicial cone: index inside its span
    assert brute_multiplicity(Cone.from_rays(3, [(1, 1, 0), (1, -1, 0)])) == 2


def test_multiplicity_guards():
    square = Cone.from_rays(3, [(1, 0, 1), (0, 1, 1), (-1, 0, 1), (0, -1, 1)])
    assert not square.is_simplicial
    with pytest.raises(ValueError, match="simplicial"):
        brute_multiplicity(square)
    with pytest.raises(ValueError, match="too large"):
        brute_multiplicity(
            Cone.from_rays(4, [tuple(1 if i == j else 0 for j in range(4)) for i in range(4)])
        )
    with pytest.raises(ValueError, match="budget"):
        brute_multiplicity(Cone.from_rays(2, [(1, 0), (1, 7)]))


@settings(max_examples=60, deadline=None)
@given(vectors)
def test_multiplicity_agrees_with_fast_path(vs):
    c = pointed_cone(2, vs)
    assume(c is not None and c.is_simplicial)
    assert brute_multiplicity(c) == c.multiplicity()


def test_budget_exhaustion_raises():
    with config.scoped(10):
        with pytest.raises(config.BudgetExceeded):
            brute_multiplicity(Cone.from_rays(3, [(1, 0, 0), (0, 1, 0), (1, 1, 2)]))


# ---------------------------------------------------------------------------
# surjectivity


def test_surjectivity_frozen_examples():
    b = Box(2)
    z = Lattice.standard(1)
    assert brute_surjectivity(IntMatrix.identity(1), z, z, b)
    assert not brute_surjectivity(IntMatrix([[2]]), z, z, b)
    assert brute_surjectivity(IntMatrix([[2, 1]]), Lattice.standard(2), z, b)


def test_surjectivity_respects_sublattices():
    b = Box(2)
    two = Lattice.from_generators(1, [(2,)])
    # doubling surjects onto the doubled lattice
    assert brute_surjectivity(IntMatrix([[2]]), Lattice.standard(1), two, b)
    # the identity maps 2Z onto 2Z but not onto Z
    assert brute_surjectivity(IntMatrix.identity(1), two, two, b)
    assert not brute_surjectivity(IntMatrix.identity(1), two, Lattice.standard(1), b)
    # an image outside the target lattice cannot generate it
    assert not brute_surjectivity(IntMatrix.identity(1), Lattice.standard(1), two, b)


def test_surjectivity_zero_rank_edges():
    b = Box(1)
    zero = Lattice.zero(2)
    assert brute_surjectivity(IntMatrix.zeros(2, 2), Lattice.standard(2), zero, b)
    assert not brute_surjectivity(
        IntMatrix.identity(2), Lattice.standard(2), zero, b
    )
    assert not brute_surjectivity(IntMatrix.zeros(2, 2), zero, Lattice.standard(2), b)


def test_surjectivity_guards():
    big = Lattice.standard(4)
    with pytest.raises(ValueError, match="too large"):
        brute_surjectivity(IntMatrix.identity(4), big, big, Box(1))
    with pytest.raises(TypeError):
        brute_surjectivity(IntMatrix.identity(1), Lattice.standard(1), Lattice.standard(1), 2)


matrices_2x2 = st.tuples(
    st.integers(min_value=-3, max_value=3),
    st.integers(min_value=-3, max_value=3),
    st.integers(min_value=-3, max_value=3),
    st.integers(min_value=-3, max_value=3),
)


@settings(max_examples=60, deadline=None)
@given(matrices_2x2)
def test_surjectivity_agrees_with_fast_path(entries):
    a, b, c, d = entries
    m = IntMatrix([[a, b], [c, d]])
    source = Lattice.standard(2)
    target = Lattice.standard(2)
    fast = lattice_image(m, source) == target
    assert brute_surjectivity(m, source, target, Box(1)) == fast


# ---------------------------------------------------------------------------
# convexity


def split_functions(a, b, c):
    """The function on the split orthant with values a, b, c at the rays
    (1,0), (1,1), (0,1)."""
    s = split_orthant()
    ids = ray_ids_by_vector(s)
    return from_divisor(
        s, {ids[(1, 0)]: -a, ids[(1, 1)]: -b, ids[(0, 1)]: -c}
    )


def test_convexity_frozen_examples():
    box = Box(3)
    # min(x, y): values 0, 1, 0 at the rays
    assert brute_convexity(split_functions(0, 1, 0), box)
    # max(x, y) on the same pieces: violated at (1,0) + (0,1)
    assert not brute_convexity(split_functions(1, 1, 1), box)
    # a linear function on the unrefined orthant
    s = identity_subdivision(orthant_complex())
    ids = ray_ids_by_vector(s)
    linear = from_divisor(s, {ids[(1, 0)]: -2, ids[(0, 1)]: 3})
    assert brute_convexity(linear, box)


def test_convexity_rejects_merged_pieces():
    # x + y across the split diagonal: linear, so the two pieces are not
    # maximal domains of linearity
    assert not brute_convexity(split_functions(1, 2, 1), Box(3))


def test_convexity_guards():
    c4 = single_cone_complex(
        4, [tuple(1 if i == j else 0 for j in range(4)) for i in range(4)]
    )
    s = identity_subdivision(c4)
    piece = next(
        sid for sid in range(len(s.source.cones)) if s.source.cone(sid).rank == 4
    )
    p = PLFunction(s, {piece: (0, 0, 0, 0)})
    with pytest.raises(ValueError, match="too large"):
        brute_convexity(p, Box(1))
    with pytest.raises(TypeError):
        brute_convexity(split_functions(0, 1, 0), 3)


@settings(max_examples=40, deadline=None)
@given(
    st.integers(min_value=-3, max_value=3),
    st.integers(min_value=-3, max_value=3),
    st.integers(min_value=-3, max_value=3),
)
def test_convexity_agrees_with_is_good(a, b, c):
    p = split_functions(a, b, c)
    ok, _problems = is_good(p)
    assert brute_convexity(p, Box(3)) == ok
