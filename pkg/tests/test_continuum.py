import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from percoflow.capacity import Bernoulli, DiscreteTable, Exponential
from percoflow.continuum import (
    ConstantNu,
    L1Nu,
    PolyhedralCut,
    TableNu,
    convex_set_capacity_2d,
    flat_cut_bound,
    i_omega,
    is_separating,
    nu_from_dict,
    positivity,
    tilted_limit_2d,
)
from percoflow.config import unit_square
from percoflow.errors import ConfigError, GeometryError
from percoflow.geometry import BoundaryPatch, ConvexPolytope, Domain
from percoflow.lattice import SignedPermutation


def _norm(v):
    v = np.asarray(v, float)
    return 0.5 * np.abs(v).sum() + 0.3 * np.linalg.norm(v)


# samples of a norm, so the interpolated homogeneous extension is convex
_DIRS = [[1, 0], [np.cos(np.pi / 8), np.sin(np.pi / 8)], [1, 1]]
TABLE = TableNu(_DIRS, [_norm(np.asarray(d) / np.linalg.norm(d)) for d in _DIRS])


def test_flat_cut_constant(square):
    assert i_omega(PolyhedralCut.halfspace((1, 0), 0.5), square, ConstantNu(2.5)).value == pytest.approx(2.5)


def test_oblique_cut_l1_coarea(square):
    P = PolyhedralCut.halfspace((1, -0.4), 0.3)
    # L1 nu integrates |n_x| + |n_y|: projections of the cut onto both axes, 0.4 + 1
    assert i_omega(P, square, L1Nu(1)).value == pytest.approx(1.4, abs=1e-12)
    assert i_omega(P, square, ConstantNu(1)).value == pytest.approx(math.hypot(1, 0.4), abs=1e-12)


def test_bounded_polygon_cut(square):
    # a triangle around the left side, apex at (0.6, 0.5)
    tri = PolyhedralCut(ConvexPolytope([[-1, 0], [1, 1], [1, -1]], [0.5, 1.1, 0.1]))
    val = i_omega(tri, square, ConstantNu(1)).value
    assert val == pytest.approx(2 * math.hypot(0.5, 0.5), abs=1e-12)


def test_not_separating(square):
    with pytest.raises(GeometryError, match="not a separating"):
        i_omega(PolyhedralCut.halfspace((-1, 0), -0.5), square, ConstantNu(1))
    with pytest.raises(GeometryError):
        i_omega(PolyhedralCut.halfspace((1, 1), 1.0), square, ConstantNu(1))  # 45 degree line through (1/2, 1/2)
    assert not is_separating(PolyhedralCut.halfspace((1, 0), 1.0), square)


def test_non_transverse_rejected(lshape):
    with pytest.raises(GeometryError):
        i_omega(PolyhedralCut.halfspace((1, 0), 1.0), lshape, ConstantNu(1))


def test_cut_on_interior_wall():
    dom = Domain([ConvexPolytope.box([0, 0], [0.5, 1]), ConvexPolytope.box([0.5, 0], [1, 1])],
                 [BoundaryPatch(0, 0)], [BoundaryPatch(1, 2)]).validate()
    assert i_omega(PolyhedralCut.halfspace((1, 0), 0.5), dom, ConstantNu(1)).value == pytest.approx(1.0)
    assert i_omega(PolyhedralCut.halfspace((1, 0), 0.3), dom, ConstantNu(1)).value == pytest.approx(1.0)


def test_flat_cut_bound_examples(square, lshape):
    fc = flat_cut_bound(square, ConstantNu(1), (1, 0), offsets=[0.75, 0.25, 0.5])
    assert fc.value == pytest.approx(1.0) and fc.offset == 0.25
    assert all(v == pytest.approx(1.0) for _, v in fc.evaluated)
    fl = flat_cut_bound(lshape, ConstantNu(1), (1, 0))
    assert 1 < fl.offset < 2 and fl.value == pytest.approx(0.5)
    assert flat_cut_bound(square, ConstantNu(0), (1, 0)).value == 0.0
    with pytest.raises(GeometryError):
        flat_cut_bound(square, ConstantNu(1), (0, 1))


@pytest.mark.parametrize("nu", [ConstantNu(1.3), L1Nu(0.7), TABLE], ids=["const", "l1", "table"])
def test_flat_cut_bound_within_cross_sections(lshape, nu):
    fc = flat_cut_bound(lshape, nu, (1, 0), grid=32)
    lo, hi = nu.extremes(2)
    assert lo * 0.5 - 1e-9 <= fc.value <= hi * 1.0 + 1e-9


def test_positivity():
    assert positivity(Bernoulli(0.3, 1), 2) is False
    assert positivity(Exponential(1), 2) is True
    assert positivity(Bernoulli(0.5, 1), 2) is False
    assert positivity(DiscreteTable((0, 1), (0.5, 0.5)), 2) is False
    assert positivity(Bernoulli(0.8, 1), 3) is True
    with pytest.raises(ConfigError):
        positivity(Exponential(1), 4)
    assert positivity(Exponential(1), 4, {4: 0.16}) is True


@settings(max_examples=50)
@given(st.floats(0, 1), st.floats(0, 1))
def test_positivity_monotone(p, q):
    lo, hi = sorted((p, q))
    # lowering the atom at zero (raising p) never turns positivity off
    assert positivity(Bernoulli(hi, 1), 2) >= positivity(Bernoulli(lo, 1), 2)


def test_tilted_examples():
    assert tilted_limit_2d((0, 1), 0.0, TABLE) == pytest.approx(TABLE((0, 1)))
    assert tilted_limit_2d((0, 1), math.pi / 2, L1Nu(1)) == pytest.approx(1.0, abs=1e-9)
    for v in [(0, 1), (1, 1), (0.3, -2)]:
        for a in (0.1, 0.7, math.pi / 2):
            assert tilted_limit_2d(v, a, ConstantNu(1.7)) == pytest.approx(1.7, abs=1e-9)


def test_tilted_closed_form_l1():
    # v = (cos t, sin t) with a generous cone: the infimum sits on an axis direction
    t = 0.3
    v = (math.cos(t), math.sin(t))
    assert tilted_limit_2d(v, math.pi / 2, L1Nu(1)) == pytest.approx(1 / math.cos(t), abs=1e-9)
    # narrow cone that excludes the axis: best is at the cone edge
    a = 0.1
    w = t - a
    assert tilted_limit_2d(v, a, L1Nu(1)) == pytest.approx((math.cos(w) + math.sin(w)) / math.cos(a), abs=1e-9)


@settings(max_examples=20, deadline=None)
@given(st.floats(0, 2 * math.pi), st.floats(0, 1.5), st.floats(0, 1.5))
def test_tilted_nonincreasing(theta, a, b):
    v = (math.cos(theta), math.sin(theta))
    lo, hi = sorted((a, b))
    assert tilted_limit_2d(v, hi, TABLE) <= tilted_limit_2d(v, lo, TABLE) + 1e-9


def test_convex_set_capacity():
    sq = ConvexPolytope.box([0, 0], [1, 1])
    assert convex_set_capacity_2d(sq, ConstantNu(1)) == pytest.approx(4)
    assert convex_set_capacity_2d(sq, L1Nu(1)) == pytest.approx(4)
    assert convex_set_capacity_2d(ConvexPolytope.box([0, 0], [2, 2]), TABLE) == pytest.approx(
        2 * convex_set_capacity_2d(sq, TABLE))
    with pytest.raises(GeometryError):
        convex_set_capacity_2d(ConvexPolytope([[1, 0], [-1, 0], [0, 1], [0, -1]], [0, 0, 1, 0]), ConstantNu(1))


def test_table_symmetries():
    rng = np.random.default_rng(1)
    V = rng.normal(size=(200, 2))
    V /= np.linalg.norm(V, axis=1, keepdims=True)
    base = TABLE(V)
    for sym in SignedPermutation.all(2):
        assert np.allclose(TABLE(V @ sym.matrix.T), base, atol=1e-12)
    assert TABLE((1, 0)) == pytest.approx(0.8)
    assert TABLE((0, -1)) == pytest.approx(0.8)
    assert TABLE((1, 1)) == pytest.approx(_norm((1, 1)) / math.sqrt(2))
    assert np.all(base > 0)


def test_table_homogeneous_extension_convex():
    # nu_0 of a table built from a convex function stays midpoint convex
    rng = np.random.default_rng(2)
    W = rng.normal(size=(300, 2))
    U = rng.normal(size=(300, 2))
    for w, u in zip(W, U):
        assert TABLE.homogeneous(w + u) <= TABLE.homogeneous(w) + TABLE.homogeneous(u) + 1e-9


def test_table_3d():
    t = TableNu([[1, 0, 0], [1, 1, 0], [1, 1, 1]], [1.0, 1.3, 1.6])
    assert t((0, 0, -1)) == pytest.approx(1.0)
    assert t((0, 1, 1)) == pytest.approx(1.3)
    assert t((-1, 1, -1)) == pytest.approx(1.6)


def test_nu_dicts():
    assert nu_from_dict({"type": "constant", "value": 2})((1, 0)) == 2
    assert nu_from_dict({"type": "l1", "c": 2})((1, 1)) == pytest.approx(2 * math.sqrt(2))
    t = nu_from_dict(TABLE.to_dict())
    assert t((1, 1)) == pytest.approx(TABLE((1, 1)))
    with pytest.raises(ConfigError):
        nu_from_dict({"type": "spline"})


def _random_cut(rng, domain, right_x):
    """Random halfspace with the left side strictly inside and the right patch outside."""
    while True:
        th = rng.uniform(-1.2, 1.2)
        n = np.array([math.cos(th), math.sin(th)])
        left = max(n @ p for p in ([0, 0], [0, 1]))
        right = min(n @ p for p in right_x)
        if right - left > 1e-3:
            P = PolyhedralCut.halfspace(n, rng.uniform(left + 1e-4, right - 1e-4))
            if is_separating(P, domain):
                return P


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6))
def test_retriangulation_invariance(seed):
    square = unit_square()
    rng = np.random.default_rng(seed)
    P = _random_cut(rng, square, ([1, 0], [1, 1]))
    splits = [(rng.normal(size=2), rng.uniform(-0.5, 1.5)) for _ in range(rng.integers(1, 4))]
    for nu in (ConstantNu(1), L1Nu(1), TABLE):
        a = i_omega(P, square, nu).value
        b = i_omega(P, square, nu, splits=splits).value
        assert a == pytest.approx(b, abs=1e-9)
    total = i_omega(P, square, ConstantNu(1))
    assert total.value == pytest.approx(sum(p[2] for p in total.pieces), abs=1e-12)


def test_audit_pieces_sum(lshape):
    P = PolyhedralCut.halfspace((1, 0.2), 1.4)
    r = i_omega(P, lshape, TABLE)
    assert r.value == pytest.approx(sum(a * nu for _, _, a, _, nu in r.pieces), abs=1e-12)
    d = r.to_dict()
    assert d["value"] == r.value and len(d["pieces"]) == len(r.pieces)
