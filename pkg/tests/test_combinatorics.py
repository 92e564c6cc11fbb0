from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.polynomial import polynomial as npoly

from circfn import (BaseSpace, CriticalCircleRecord, ExtremalKind, IsolatedExtremumRecord, NormalForm, PieceKind,
                    Pole, Profile, Surface, SurfaceKind, TargetSpace, UsageError, ValidationError,
                    check_alternation, check_torus_parity, decompose, euler_audit, find_critical_points,
                    predicted_extrema, validate_membership)
from circfn.combinatorics import BoundaryMarker
from circfn.corpus import generate

MIN2 = CriticalCircleRecord(0.2, 0.0, 2, True, ExtremalKind.MIN)
MAX2 = CriticalCircleRecord(0.6, 1.0, 2, True, ExtremalKind.MAX)
INFL3 = CriticalCircleRecord(0.4, 0.5, 3, False, ExtremalKind.NONE)


def _poly_from_derivative_roots(roots_with_mult, lead=1.0):
    """Profile on [0,1] whose derivative is lead * prod (t - r)^m, built by numpy."""
    d = np.array([lead])
    for r, m in roots_with_mult:
        d = npoly.polymul(d, npoly.polypow([-r, 1.0], m))
    return Profile.polynomial(npoly.polyint(d))


def _nf(kind, profile, target=None):
    return NormalForm(Surface.of(kind, target), profile)


# -- decompose ------------------------------------------------------------------------------

def test_cylinder_two_critical_points_three_pieces():
    p = _poly_from_derivative_roots([(0.3, 1), (0.7, 1)])
    pieces = decompose(_nf("cylinder", p))
    assert [q.kind for q in pieces] == [PieceKind.CYLINDER] * 3
    assert [q.boundary_circles for q in pieces] == [(0,), (0, 1), (1,)]
    assert pieces[0].contains == (BoundaryMarker(0.0),) and pieces[-1].contains == (BoundaryMarker(1.0),)
    assert [q.index for q in pieces] == [0, 1, 2]


def test_torus_two_critical_points_two_cyclic_pieces():
    p = Profile.trigonometric([(1.0, 0.0, 2 * np.pi)], base=BaseSpace.CIRCLE)
    pieces = decompose(_nf("torus", p, TargetSpace.REAL))
    assert [q.kind for q in pieces] == [PieceKind.CYLINDER] * 2
    assert [q.boundary_circles for q in pieces] == [(0, 1), (1, 0)]
    assert pieces[0].base_interval[0] == pytest.approx(0.0, abs=1e-9)
    assert pieces[1].base_interval == pytest.approx((0.5, 1.0), abs=1e-9)


def test_torus_without_critical_circles_is_one_piece():
    p = Profile.identity(base=BaseSpace.CIRCLE, target=TargetSpace.CIRCLE)
    pieces = decompose(_nf("torus", p))
    assert len(pieces) == 1 and pieces[0].kind is PieceKind.TORUS
    assert euler_audit(pieces, Surface.of("torus"))


def test_sphere_one_critical_point_two_disks_each_with_one_extremum():
    # kappa' = (t - 1/2)^2 > 0 at both ends: one order-3 circle, min at south, max at north
    p = _poly_from_derivative_roots([(0.5, 2)], lead=1.0)
    pieces = decompose(_nf("sphere", p))
    assert [q.kind for q in pieces] == [PieceKind.DISK, PieceKind.DISK]
    assert [len(q.extrema) for q in pieces] == [1, 1]
    assert pieces[0].extrema[0] == IsolatedExtremumRecord(Pole.SOUTH, ExtremalKind.MIN)
    assert pieces[1].extrema[0] == IsolatedExtremumRecord(Pole.NORTH, ExtremalKind.MAX)
    assert euler_audit(pieces, Surface.of("sphere"))


def test_disk_has_exactly_one_disk_piece():
    p = _poly_from_derivative_roots([(0.3, 1), (0.7, 1)], lead=-1.0)
    pieces = decompose(_nf("disk", p))
    assert sum(q.kind is PieceKind.DISK for q in pieces) == 1 and pieces[0].kind is PieceKind.DISK
    assert pieces[0].extrema[0].kind is ExtremalKind.MAX  # kappa'(0) < 0
    assert sum(q.euler_characteristic for q in pieces) == 1
    assert euler_audit(pieces, Surface.of("disk"))


def test_decompose_rejects_invalid_profile():
    with pytest.raises(ValidationError):
        decompose(_nf("disk", Profile.polynomial([0, 0, 1.0])))


def test_decompose_json_shape():
    p = _poly_from_derivative_roots([(0.5, 1)])
    out = [q.to_json() for q in decompose(_nf("disk", p))]
    assert out[0]["kind"] == "disk_piece" and out[1]["kind"] == "cylinder_piece"
    assert out[1]["contains"] == [{"boundary": 1.0}]
    assert out[1]["boundary_circles"] == [0]


# -- parity and alternation -------------------------------------------------------------------

def test_parity_cosine_profile_is_even():
    p = Profile.trigonometric([(1.0, 0.0, 2 * np.pi)], base=BaseSpace.CIRCLE)
    recs = find_critical_points(p)
    assert len(recs) == 2 and check_torus_parity(recs, Surface.of("torus", "real"))


def test_parity_trivial_and_synthetic_odd():
    torus = Surface.of("torus")
    assert check_torus_parity([], torus)
    assert not check_torus_parity([MIN2, MAX2, CriticalCircleRecord(0.9, 0.0, 2, True, ExtremalKind.MIN)], torus)
    assert check_torus_parity([MIN2, INFL3, MAX2], torus)


def test_parity_on_wrong_surface_is_usage_error():
    with pytest.raises(UsageError):
        check_torus_parity([], Surface.of("cylinder"))


def test_alternation_examples():
    assert check_alternation([MIN2, MAX2])
    assert not check_alternation([MIN2, CriticalCircleRecord(0.5, 1.0, 2, True, ExtremalKind.MIN)])
    assert check_alternation([MIN2, MAX2, MIN2, MAX2], cyclic=True)
    # cyclic closure: Min, Max, Min wraps onto Min
    assert check_alternation([MIN2, MAX2, MIN2]) and not check_alternation([MIN2, MAX2, MIN2], cyclic=True)


def test_alternation_ignores_non_extremal_on_real_profile():
    # kappa' = -(t-.2)(t-.5)^2(t-.8): Min at .2, order 3 at .5, Max at .8
    p = _poly_from_derivative_roots([(0.2, 1), (0.5, 2), (0.8, 1)], lead=-1.0)
    recs = find_critical_points(p)
    assert [(r.extremal_kind, r.order) for r in recs] == [(ExtremalKind.MIN, 2), (ExtremalKind.NONE, 3),
                                                         (ExtremalKind.MAX, 2)]
    assert check_alternation(recs)


def test_predicted_extrema():
    assert predicted_extrema("cylinder")[0] == 0
    assert predicted_extrema("torus")[0] == 0
    assert predicted_extrema(Surface.of("disk"))[0] == 1
    assert predicted_extrema(SurfaceKind.SPHERE)[0] == 2


# -- membership --------------------------------------------------------------------------------

def test_membership_prime_cylinder():
    rep = validate_membership(_nf("cylinder", Profile.identity()))
    assert rep.valid and rep.records == [] and all(rep.checks.values())
    assert rep.checks["boundary_level_constancy"]


def test_membership_torus_synthetic_parity_violation():
    nf = _nf("torus", Profile.trigonometric([(1.0, 0.0, 2 * np.pi)], base=BaseSpace.CIRCLE), "real")
    rep = validate_membership(nf, [MIN2, INFL3, MAX2, CriticalCircleRecord(0.8, 0.0, 2, True, ExtremalKind.MIN)])
    assert not rep.valid and rep.checks["torus_parity"] is False
    assert any("torus parity" in r and "(3)" in r for _, r in rep.violations)


def test_membership_synthetic_alternation_violation():
    nf = _nf("cylinder", _poly_from_derivative_roots([(0.5, 1)]))
    rep = validate_membership(nf, [MIN2, CriticalCircleRecord(0.7, 0.0, 2, True, ExtremalKind.MIN)])
    assert rep.checks["alternation"] is False
    assert any("alternation" in r for _, r in rep.violations)


def test_membership_disk_square_violates_condition_b():
    rep = validate_membership(_nf("disk", Profile.polynomial([0, 0, 1.0])))
    assert not rep.valid and rep.checks["condition_B"] is False
    assert rep.checks["extremum_local_model"] is False
    assert any(b == 0.0 for b, _ in rep.violations)


# -- corpus-wide laws -------------------------------------------------------------------------

def _expected_pieces(kind: SurfaceKind, n: int) -> int:
    return max(n, 1) if kind is SurfaceKind.TORUS else n + 1


@pytest.mark.parametrize("kind", list(SurfaceKind))
def test_piece_count_law_on_200_profiles(kind):
    surface = Surface.of(kind)
    for m in generate(kind, 200, seed=7, with_diffeo=False):
        # construction truth: the member carries its critical points independently of detection
        pieces = decompose(m.nf)
        assert len(pieces) == _expected_pieces(kind, len(m.positions))
        assert euler_audit(pieces, surface)
        # the pieces tile the base in order
        assert pieces[0].base_interval[0] == pytest.approx(m.positions[0] if kind is SurfaceKind.TORUS
                                                            and m.positions else 0.0, abs=1e-6)
        for a, b in zip(pieces, pieces[1:]):
            assert a.base_interval[1] == pytest.approx(b.base_interval[0], abs=1e-12)


def test_parity_and_alternation_hold_on_corpus(corpus):
    for kind, members in corpus.items():
        for m in members:
            rep = validate_membership(m.nf)
            assert rep.valid, (kind, rep.violations)
            extremal = sum(1 for o in m.orders if o % 2 == 0)
            if kind is SurfaceKind.TORUS:
                assert rep.checks["torus_parity"] and extremal % 2 == 0


@given(st.lists(st.sampled_from([ExtremalKind.MIN, ExtremalKind.MAX]), min_size=1, max_size=9))
def test_parity_check_matches_count(kinds):
    recs = [CriticalCircleRecord(i / 10, 0.0, 2, True, k) for i, k in enumerate(kinds)]
    assert check_torus_parity(recs, Surface.of("torus")) == (len(kinds) % 2 == 0)
    alternating = all(a is not b for a, b in zip(kinds, kinds[1:]))
    assert check_alternation(recs) == alternating
