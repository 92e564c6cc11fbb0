from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from circfn import (BaseSpace, DiffeoChain, FiberShift, FlowMap, GapError, NormalForm, NotHFieldError,
                    NotNormalizedError, PolarPoint, Pole, PreconditionError, Profile, Surface, SurfaceKind,
                    TangentField, build_h_field, circle_action, conjugator_report, default_collar_radii,
                    evaluate_normal_form, first_return_time, hamiltonian_field, integrate_flow,
                    isotope_conjugator, normalize_period, scan_speed, shift_diffeo)
from circfn.corpus import generate
from circfn.model import constant_profile, surface_point

from oracles import rotate_closed_form


def _nf(kind, p):
    return NormalForm(Surface.of(kind, p.target), p)


def _sym(coeffs):
    return Profile.polynomial(coeffs, domain=(-1.0, 1.0))


def _const_field(g, base=BaseSpace.INTERVAL, normalized=False):
    return TangentField(constant_profile(g, base), normalized=normalized)


def _normalized(kind="cylinder"):
    p = Profile.identity(base=Surface.of(kind).base, target=Surface.of(kind).target)
    nf = _nf(kind, p)
    return normalize_period(build_h_field(nf, *default_collar_radii(nf)))


# -- Hamiltonian field ----------------------------------------------------------------------

def test_hamiltonian_square_reverses_across_the_middle():
    X = hamiltonian_field(_nf("cylinder", _sym([0, 0, 1.0])))
    t = np.linspace(-1, 1, 101)
    assert np.array_equal(X.speed((t + 1) / 2), -2 * t)
    assert X.speed(0.25) == 1.0 and X.speed(0.75) == -1.0


def test_hamiltonian_cube_keeps_its_direction():
    X = hamiltonian_field(_nf("cylinder", _sym([0, 0, 0, 1.0])))
    t = np.linspace(-1, 1, 101)
    assert np.allclose(X.speed((t + 1) / 2), -3 * t * t, rtol=0, atol=1e-15)
    assert X.speed(0.25) < 0 and X.speed(0.75) < 0


def test_hamiltonian_prime_is_minus_one():
    X = hamiltonian_field(_nf("cylinder", Profile.identity()))
    assert np.all(X.speed(np.linspace(0, 1, 11)) == -1.0)


# -- H-field ---------------------------------------------------------------------------------

@pytest.mark.parametrize("coeffs", [[0, 0, 1.0], [0, 0, 0, 1.0]])
def test_h_field_is_one_signed(coeffs):
    nf = _nf("cylinder", _sym(coeffs))
    F = build_h_field(nf, *default_collar_radii(nf))
    g = F.speed(np.linspace(0, 1, 1001))
    assert np.all(np.abs(g) > 1e-9) and len(set(np.sign(g))) == 1


def test_h_field_prime_torus_is_the_hamiltonian_field():
    nf = _nf("torus", Profile.identity(base=BaseSpace.CIRCLE, target="circle"))
    F, X = build_h_field(nf, 0.05, 0.1), hamiltonian_field(nf)
    b = np.linspace(0, 1, 101)
    assert np.array_equal(F.speed(b), X.speed(b))


def test_h_field_gap_error():
    nf = _nf("cylinder", _sym([0, 0, 1.0]))
    with pytest.raises(GapError):
        build_h_field(nf, 0.2, 0.3)  # the square's critical point sits 0.5 from each end; half of that is 0.25
    with pytest.raises(GapError):
        build_h_field(nf, 0.1, 0.05)


def test_raw_hamiltonian_sign_flips_exactly_at_extremal_circles(corpus):
    for kind in (SurfaceKind.CYLINDER, SurfaceKind.TORUS):
        for m in corpus[kind][:30]:
            X = hamiltonian_field(NormalForm(m.nf.surface, m.nf.profile))
            for x, n in zip(m.positions, m.orders):
                left, right = X.speed(np.array([x - 1e-3, x + 1e-3]) % 1.0)
                assert (np.sign(left) != np.sign(right)) == (n % 2 == 0)


# -- normalization ---------------------------------------------------------------------------

def test_normalize_negative_field():
    nf = _nf("cylinder", _sym([0, 0, 1.0]))
    F = build_h_field(nf, 0.05, 0.1)
    N = normalize_period(F)
    assert N.normalized and N.constant_speed == float(np.sign(F.speed(0.5)))


def test_normalize_rejects_vanishing_field():
    with pytest.raises(NotHFieldError):
        normalize_period(hamiltonian_field(_nf("cylinder", _sym([0, 0, 1.0]))))


def test_normalized_time_one_returns():
    N = _normalized()
    z, b = integrate_flow(N, (0.3, 0.7), 1.0)
    assert abs(z - 0.3) < 1e-9 and b == 0.7
    rng = np.random.default_rng(3)
    for z0, b0 in rng.random((100, 2)):
        assert abs(first_return_time(N, (z0, b0)) - 1.0) < 1e-9


def test_circle_action_needs_normalized_field():
    with pytest.raises(NotNormalizedError):
        circle_action(_const_field(-1.0))


# -- flows ------------------------------------------------------------------------------------

def test_flow_examples():
    z, b = integrate_flow(_const_field(-1.0), (0.25, 0.5), 0.5)
    assert abs(z - 0.75) < 1e-12 and b == 0.5
    F = hamiltonian_field(_nf("cylinder", Profile.polynomial([0, 0, 1.0])))  # g(b) = -2b
    z, b = integrate_flow(F, (0.0, 0.25), 1.0)
    assert abs(z - 0.5) < 1e-12 and b == 0.25
    z, b = integrate_flow(F, (0.4, 0.9), 0.0)
    assert z == 0.4 and b == 0.9


@given(st.floats(-3, 3), st.floats(0, 1, exclude_max=True), st.floats(0, 1), st.floats(-2, 2))
def test_integrator_matches_closed_form(g, z0, b0, t):
    F = _const_field(g)
    z, b = integrate_flow(F, (z0, b0), t)
    want = rotate_closed_form(z0, g, t)
    assert abs((z - want + 0.5) % 1.0 - 0.5) <= 1e-9 * max(1.0, abs(t))
    assert b == b0
    zc, _ = FlowMap(F, t).closed_form((z0, b0))
    assert abs((zc - want + 0.5) % 1.0 - 0.5) <= 1e-12


def test_polar_flow_is_a_rotation():
    N = _normalized("disk")
    pt = PolarPoint(np.array([0.03, -0.01]), np.array([0.0, 0.02]), Pole.CENTER)
    out = integrate_flow(N, pt, 0.25)
    # speed +-1: a quarter turn about the center
    s = N.constant_speed
    assert np.allclose(out.x, -s * pt.y, atol=1e-12) and np.allclose(out.y, s * pt.x, atol=1e-12)
    back = integrate_flow(N, pt, 1.0)
    assert np.allclose(back.x, pt.x, atol=1e-12) and np.allclose(back.y, pt.y, atol=1e-12)


# -- circle action ----------------------------------------------------------------------------

@pytest.mark.parametrize("kind", list(SurfaceKind))
def test_fixed_point_count_is_euler_characteristic(kind):
    psi = circle_action(_normalized(kind))
    assert len(psi.fixed_points()) == Surface.of(kind).euler_characteristic


def test_cylinder_action_is_standard_rotation():
    N = _normalized()
    psi = circle_action(N)
    z, b = psi((0.1, 0.4), 0.3)
    assert abs(z - (0.1 + 0.3 * N.constant_speed) % 1.0) < 1e-12 and b == 0.4
    assert psi.is_free_at((0.1, 0.4))


@given(st.floats(0, 1, exclude_max=True), st.floats(0, 1), st.floats(0, 1), st.floats(0, 1))
def test_action_composition(z0, b0, s, t):
    psi = circle_action(_normalized())
    lhs = psi(psi((z0, b0), s), t)
    rhs = psi((z0, b0), s + t)
    assert abs((lhs[0] - rhs[0] + 0.5) % 1.0 - 0.5) <= 1e-9


# -- tangency on corpus members ------------------------------------------------------------------

@pytest.mark.parametrize("kind", list(SurfaceKind))
def test_level_sets_preserved_along_h_field_flow(kind):
    rng = np.random.default_rng(11)
    surface = Surface.of(kind)
    for m in generate(kind, 10, seed=5):
        F = build_h_field(m.nf, *default_collar_radii(m.nf))
        z, b = rng.random(100), rng.random(100)
        for mask, pt in surface_point(surface, z, b):
            f0 = evaluate_normal_form(m.nf, pt)
            for t in (0.3, 1.7):
                f1 = evaluate_normal_form(m.nf, integrate_flow(F, pt, t))
                d = np.abs(f1 - f0)
                if surface.target.value == "circle":
                    d = np.abs((f1 - f0 + 0.5) % 1.0 - 0.5)
                assert np.max(d, initial=0.0) <= 1e-8


# -- shift diffeomorphisms ----------------------------------------------------------------------

def test_shift_zero_is_identity_and_half_is_half_turn():
    N = _const_field(1.0, normalized=True)
    z = np.linspace(0, 1, 9)[:-1]
    b = np.full_like(z, 0.3)
    assert np.allclose(shift_diffeo(N, constant_profile(0.0, BaseSpace.INTERVAL)).apply(z, b)[0], z)
    assert np.allclose(shift_diffeo(N, constant_profile(0.5, BaseSpace.INTERVAL)).apply(z, b)[0], (z + 0.5) % 1.0)


def test_shift_by_base_time_equals_flow():
    N = _normalized()
    sh = shift_diffeo(N, Profile.identity())
    rng = np.random.default_rng(4)
    for z0, b0 in rng.random((100, 2)):
        want, _ = integrate_flow(N, (z0, b0), b0)
        got, _ = sh.apply(z0, b0)
        assert abs((got - want + 0.5) % 1.0 - 0.5) < 1e-9


def test_shift_needs_constant_speed():
    F = hamiltonian_field(_nf("cylinder", Profile.polynomial([0, 0, 1.0])))
    with pytest.raises(NotNormalizedError):
        shift_diffeo(F, Profile.identity())


# -- conjugator isotopy --------------------------------------------------------------------------

def test_conjugator_constant_shift_whole_base_becomes_identity():
    N = _normalized()
    h = DiffeoChain((FiberShift(constant_profile(0.3, BaseSpace.INTERVAL)),))
    res = isotope_conjugator(h, N, [(0.0, 1.0)], [(0.0, 1.0)])
    z, b = np.meshgrid(np.linspace(0, 1, 17)[:-1], np.linspace(0, 1, 33))
    zt, bt = res.h_tilde.apply(z, b)
    assert np.max(np.abs((zt - z + 0.5) % 1.0 - 0.5)) < 1e-12 and np.array_equal(bt, b)


def test_conjugator_identity_stays_identity():
    N = _normalized()
    res = isotope_conjugator(DiffeoChain(), N, [(0.2, 0.6)], [(0.3, 0.5)])
    z, b = np.meshgrid(np.linspace(0, 1, 9)[:-1], np.linspace(0, 1, 21))
    for s in (0.0, 0.5, 1.0):
        zt, _ = res.isotopy(s).apply(z, b)
        assert np.max(np.abs((zt - z + 0.5) % 1.0 - 0.5)) < 1e-12


def test_conjugator_dehn_twist_windows():
    N = _normalized()
    h = DiffeoChain((FiberShift(Profile.identity()),))
    res = isotope_conjugator(h, N, [(0.0, 0.4)], [(0.0, 0.2)])
    z, b = np.meshgrid(np.linspace(0, 1, 9)[:-1], np.linspace(0, 1, 101))
    zt, _ = res.h_tilde.apply(z, b)
    zh, _ = h.apply(z, b)
    gap_id = np.abs((zt - z + 0.5) % 1.0 - 0.5)
    gap_h = np.abs((zt - zh + 0.5) % 1.0 - 0.5)
    assert np.all(gap_id[b <= 0.2] == 0.0)
    assert np.all(gap_h[b >= 0.4] == 0.0)
    rep = conjugator_report(res, h, N, samples=500)
    assert rep["identity_on_V"] == 0.0 and rep["equals_h_outside_U"] == 0.0 and rep["conjugation"] <= 1e-8
    z0, _ = res.isotopy(0.0).apply(z, b)
    assert np.max(np.abs((z0 - zh + 0.5) % 1.0 - 0.5)) < 1e-12


def test_conjugator_rejects_moving_fibers():
    from circfn import BaseReparam
    N = _normalized()
    h = DiffeoChain((BaseReparam(Profile.polynomial([0.0, 0.5, 0.5])),))
    with pytest.raises(PreconditionError):
        isotope_conjugator(h, N, [(0.2, 0.6)], [(0.3, 0.5)])


def test_conjugator_rejects_disagreeing_actions():
    N = _normalized()
    G = _const_field(-N.constant_speed, normalized=True)
    with pytest.raises(PreconditionError):
        isotope_conjugator(DiffeoChain(), N, [(0.2, 0.6)], [(0.3, 0.5)], G)


def test_scan_speed_shapes():
    b, g = scan_speed(_const_field(2.0), 100)
    assert b.shape == g.shape == (101,) and np.all(g == 2.0)
    b, g = scan_speed(_const_field(2.0, BaseSpace.CIRCLE), 100)
    assert b.shape == (100,)
