"""Fiber-tangent fields, their flows and the induced circle actions.

Symplectic conventions: ``dz ^ db`` in band coordinates (b measured in the
profile's source units) and ``(1/2) dx ^ dy`` in the polar charts, so the
Hamiltonian field of ``f`` is ``-df/db d/dz`` and the fiber direction
``d/dz`` reads ``2 pi (-y d/dx + x d/dy)`` near a pole.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import ceil
from typing import Callable, Sequence

import numpy as np

from .analysis import find_critical_points, validate_profile
from .bump import BumpFunction, Polarity
from .combinatorics import isolated_extrema
from .errors import GapError, NotHFieldError, NotNormalizedError, PreconditionError, ValidationError
from .model import (Collar, DiffeoChain, FiberShift, LocalizedShift, NormalForm, Point, PolarPoint, Pole,
                    SurfaceKind, TangentField, constant_profile)
from .profiles import BaseSpace, Profile

SCAN_POINTS = 10_000
FLOW_TOL = 1e-11        # target phase error of one RK4 integration
MIN_STEPS = 64
MAX_STEP = 0.01


# -- fields ----------------------------------------------------------------------

def hamiltonian_field(nf: NormalForm) -> TangentField:
    """``X_f = -f_b d/dz``; the base reparametrizations of h enter through 1/beta'."""
    p = nf.profile
    coeff = p.derivative(1).scaled(-1.0 / p.source_length)
    return TangentField(coeff, isolated_extrema(nf), chain=nf.diffeo, jacobian=bool(len(nf.diffeo)))


def _gaps(positions: Sequence[float], circle: bool) -> list[float]:
    xs = sorted(positions)
    if circle:
        if len(xs) == 1:
            return [1.0]
        return [b - a for a, b in zip(xs, xs[1:] + [xs[0] + 1.0])]
    cuts = [0.0] + xs + [1.0]
    return [b - a for a, b in zip(cuts, cuts[1:])]


def default_collar_radii(nf: NormalForm) -> tuple[float, float]:
    """Collar radii at 15% and 30% of the smallest gap between circles (and ends)."""
    records = find_critical_points(nf.profile)
    if not records:
        return 0.05, 0.1
    gap = min(_gaps([r.base_position for r in records], nf.profile.base is BaseSpace.CIRCLE))
    return 0.15 * gap, 0.3 * gap


def build_h_field(nf: NormalForm, v_radius: float, w_radius: float) -> TangentField:
    """H-field ``F = Y + Z`` with isolated singularities only.

    ``Y = alpha A X_f``: the Hamiltonian field damped to 0 on the inner
    collars ``V`` and multiplied by a sign that flips across every extremal
    circle (where ``X_f`` reverses).  ``Z = (1 - alpha) sign_i d/dz`` fills the
    collars with a constant fiber field pointing the same way as ``Y`` on
    ``W \\ V``.  Radii are in normalized base units.
    """
    report = validate_profile(nf.profile, nf.surface)
    if not report.valid:
        raise ValidationError("; ".join(r for _, r in report.violations))
    circle = nf.profile.base is BaseSpace.CIRCLE
    records = find_critical_points(nf.profile)
    X = hamiltonian_field(nf)
    if not records:
        return X
    gap = min(_gaps([r.base_position for r in records], circle))
    if not 0.0 < v_radius < w_radius < 0.5 * gap:
        raise GapError(f"need 0 < v < w < {0.5 * gap:.6g} (half the smallest gap), got v={v_radius}, w={w_radius}")
    breaks = [r.base_position for r in records if r.extremal]
    if circle and len(breaks) % 2:
        raise ValidationError("odd number of extremal circles on the torus")
    signs = [1]
    for _ in breaks:
        signs.append(-signs[-1])
    A = TangentField(X.coefficient, sign_breaks=tuple(breaks), signs=tuple(signs))
    collars = []
    for r in records:
        c = r.base_position
        probe = np.array([c - 0.5 * (v_radius + w_radius), c + 0.5 * (v_radius + w_radius)])
        g = A.model_speed(probe)
        if np.sign(g[0]) != np.sign(g[1]) or g[0] == 0:
            raise NotHFieldError(f"sign-corrected field is not codirectional around {c}")
        collars.append(Collar(c, v_radius, w_radius, int(np.sign(g[0]))))
    return TangentField(X.coefficient, X.singular_extrema, tuple(breaks), tuple(signs), tuple(collars),
                        nf.diffeo, X.jacobian, False)


def scan_speed(F: TangentField, n: int = SCAN_POINTS) -> tuple[np.ndarray, np.ndarray]:
    b = np.linspace(0.0, 1.0, n + 1)
    if F.periodic:
        b = b[:-1]
    return b, np.asarray(F.speed(b), dtype=float) * np.ones_like(b)


def normalize_period(F: TangentField, tol: float = 1e-9) -> TangentField:
    """Rescale F to the constant-speed field ``sign(g) d/dz`` (every orbit has period 1)."""
    _, g = scan_speed(F)
    if np.any(np.abs(g) <= tol * max(1.0, float(np.max(np.abs(g))))):
        raise NotHFieldError("field vanishes on the band")
    s = np.sign(g)
    if np.any(s != s[0]):
        raise NotHFieldError("field changes direction on the band")
    base = F.coefficient.base
    return TangentField(constant_profile(float(s[0]), base), F.singular_extrema, chain=DiffeoChain(),
                        jacobian=False, normalized=True)


# -- flows -------------------------------------------------------------------------

def _steps(time: float, omega: float, step: float | None) -> int:
    n = max(MIN_STEPS, ceil(abs(time) / (MAX_STEP if step is None else min(step, MAX_STEP))))
    if omega and time:
        n = max(n, ceil(((omega * abs(time)) ** 5 / (120.0 * FLOW_TOL)) ** 0.25))
    return n


def _rk4(rhs: Callable, y: np.ndarray, time: float, n: int) -> np.ndarray:
    h = time / n
    for _ in range(n):
        k1 = rhs(y)
        k2 = rhs(y + 0.5 * h * k1)
        k3 = rhs(y + 0.5 * h * k2)
        k4 = rhs(y + h * k3)
        y = y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return y


def integrate_flow(F: TangentField, start: Point, time: float, step: float | None = None) -> Point:
    """Fixed-step RK4 integration of F from ``start``; the base coordinate is held fixed."""
    if isinstance(start, PolarPoint):
        x0, y0 = np.asarray(start.x, dtype=float), np.asarray(start.y, dtype=float)
        _, b = start.to_band()
        g = np.asarray(F.speed(b), dtype=float) * np.ones_like(x0)
        w = 2 * np.pi * g
        n = _steps(time, float(np.max(np.abs(w))) if w.size else 0.0, step)
        state = np.stack([x0, y0]).astype(float)
        rhs = lambda s: np.stack([-w * s[1], w * s[0]])  # noqa: E731
        x1, y1 = _rk4(rhs, state, float(time), n)
        r0, r1 = np.hypot(x0, y0), np.hypot(x1, y1)
        fac = np.divide(r0, r1, out=np.ones_like(r0), where=r1 > 0)
        return PolarPoint(x1 * fac, y1 * fac, start.pole)
    z, b = start
    z, b = np.asarray(z, dtype=float), np.asarray(b, dtype=float)
    g = np.asarray(F.speed(b), dtype=float) * np.ones_like(z)
    n = _steps(time, 0.0, step)
    z1 = _rk4(lambda _z: g, z, float(time), n)
    return np.mod(z1, 1.0), b


@dataclass(frozen=True)
class FlowMap:
    field: TangentField
    time: float
    integrator_step: float = MAX_STEP

    def __call__(self, pt: Point) -> Point:
        return integrate_flow(self.field, pt, self.time, self.integrator_step)

    def closed_form(self, pt):
        """Exact band solution ``(z + t g(b), b)``; the self-test oracle for the integrator."""
        if isinstance(pt, PolarPoint):
            z, b = pt.to_band()
            z = np.mod(z + self.time * self.field.speed(b), 1.0)
            return PolarPoint.from_band(z, b, pt.pole)
        z, b = pt
        return np.mod(np.asarray(z) + self.time * self.field.speed(b), 1.0), np.asarray(b, dtype=float)


def _angle(pt: Point) -> np.ndarray:
    if isinstance(pt, PolarPoint):
        return pt.to_band()[0]
    return np.asarray(pt[0], dtype=float)


def first_return_time(F: TangentField, pt: Point, max_time: float = 8.0, dt: float = 1.0 / 64) -> float:
    """Time for the orbit through a single point to wind once around its fiber.

    The flow is stepped by ``dt``, the fiber angle unwrapped, and the first
    full turn located by linear interpolation of the unwrapped angle.
    """
    a0 = float(np.atleast_1d(_angle(pt))[0])
    total, t, cur, prev = 0.0, 0.0, pt, a0
    while t < max_time:
        cur = integrate_flow(F, cur, dt)
        a = float(np.atleast_1d(_angle(cur))[0])
        d = (a - prev + 0.5) % 1.0 - 0.5
        if abs(total + d) >= 1.0:
            return t + dt * (1.0 - abs(total)) / abs(d)
        total += d
        prev = a
        t += dt
    return np.inf


# -- circle actions -------------------------------------------------------------------

@dataclass(frozen=True)
class CircleAction:
    """``psi(x, s)``: the time-s flow of a period-1 field, s taken mod 1."""

    field: TangentField

    def __call__(self, pt: Point, s: float) -> Point:
        return integrate_flow(self.field, pt, float(s) % 1.0)

    def fixed_points(self) -> list[PolarPoint]:
        return [PolarPoint(0.0, 0.0, r.location) for r in self.field.singular_extrema]

    def is_free_at(self, pt: Point, samples: int = 16, tol: float = 1e-9) -> bool:
        """True when no ``s`` in a sample of (0, 1) fixes the point."""
        for s in (np.arange(1, samples) / samples):
            q = self(pt, s)
            if isinstance(pt, PolarPoint):
                d = np.hypot(np.asarray(q.x) - pt.x, np.asarray(q.y) - pt.y)
            else:
                d = np.abs((np.asarray(q[0]) - pt[0] + 0.5) % 1.0 - 0.5)
            if np.any(d <= tol):
                return False
        return True


def circle_action(F_norm: TangentField) -> CircleAction:
    if not F_norm.normalized:
        raise NotNormalizedError("circle action needs a period-normalized field")
    return CircleAction(F_norm)


def shift_diffeo(F: TangentField, t0: Profile) -> FiberShift:
    """Flow each fiber ``b`` for its own time ``t0(b)``: ``tau = t0 * g_norm``."""
    g = F.constant_speed
    if g is None:
        raise NotNormalizedError("shift along trajectories needs a constant-speed field")
    return FiberShift(t0.scaled(g))


# -- conjugator isotopy ------------------------------------------------------------------

@dataclass(frozen=True)
class ConjugatorResult:
    h_tilde: DiffeoChain
    element: LocalizedShift
    bump: BumpFunction

    def isotopy(self, s: float) -> DiffeoChain:
        """``H_s``: equals h at s = 0 and h_tilde at s = 1."""
        e = self.element
        return DiffeoChain((LocalizedShift(e.inner, e.bump, e.sign, e.nodes, e.values, float(s)),))

    def t0(self, b):
        return self.element.t0(b)


def _window_samples(windows, n: int) -> np.ndarray:
    pts = [np.linspace(a, b, n) for a, b in windows]
    return np.concatenate(pts) if pts else np.zeros(0)


def isotope_conjugator(h: DiffeoChain, F_norm: TangentField, U, V, G_norm: TangentField | None = None,
                       samples: int = 257, tol: float = 1e-9) -> ConjugatorResult:
    """Isotope ``h`` to ``h_tilde = F_{delta t0}^{-1} o h``: identity on V, unchanged off U.

    ``h`` conjugates the action of ``G_norm`` (default ``F_norm``) to that of
    ``F_norm``; on U both actions must agree and h must rotate each fiber in
    place, so its rotation angle there is the time ``t0`` to undo.
    """
    if not F_norm.normalized or (G_norm is not None and not G_norm.normalized):
        raise NotNormalizedError("conjugator needs period-normalized fields")
    periodic = F_norm.periodic
    bump = BumpFunction(tuple(tuple(w) for w in U), tuple(tuple(w) for w in V), Polarity.ONE_INSIDE, periodic)
    sign = int(np.sign(F_norm.constant_speed))
    bs = _window_samples(bump.support, samples)
    if G_norm is not None:
        gf, gg = F_norm.speed(bs), G_norm.speed(bs)
        if np.max(np.abs(np.asarray(gf) - np.asarray(gg))) > tol:
            raise PreconditionError("the two actions disagree on U")
    moved = h.base_map(bs)
    drift = np.abs(moved - bs)
    if periodic:
        drift = np.abs((drift + 0.5) % 1.0 - 0.5)
    if np.max(drift, initial=0.0) > tol:
        raise PreconditionError("h does not map the fibers in U to themselves")
    # h must act on each fiber in U as a rotation
    T = h.apply(np.zeros_like(bs), bs)[0]
    for z in (0.25, 0.5, 0.75):
        Tz = (h.apply(np.full_like(bs, z), bs)[0] - z) % 1.0
        d = np.abs((Tz - T + 0.5) % 1.0 - 0.5)
        if np.max(d, initial=0.0) > tol:
            raise PreconditionError("h is not a fiber rotation on U")
    nodes, values = [], []
    for a, b in bump.support:
        x = np.linspace(a, b, 4097)
        ang = h.apply(np.zeros_like(x), x)[0]
        nodes.append(x)
        values.append(np.unwrap(2 * np.pi * ang) / (2 * np.pi))
    nodes, values = np.concatenate(nodes), np.concatenate(values)
    elem = LocalizedShift(h, bump, sign, tuple(nodes.tolist()), tuple(values.tolist()), 1.0)
    return ConjugatorResult(DiffeoChain((elem,)), elem, bump)


def _fiber_gap(a, b) -> np.ndarray:
    return np.abs((np.asarray(a) - np.asarray(b) + 0.5) % 1.0 - 0.5)


def conjugator_report(res: ConjugatorResult, h: DiffeoChain, F_norm: TangentField,
                      G_norm: TangentField | None = None, samples: int = 257) -> dict:
    """Maximal deviations: from the identity on the closed plateau, from h off the support,
    and of ``h_tilde o psi_G(., s) = psi_F(h_tilde(.), s)`` on the transition band."""
    G_norm = F_norm if G_norm is None else G_norm
    bump = res.bump
    zz = np.linspace(0.0, 1.0, 9)[:-1]
    on_v = _window_samples(bump.plateau, samples)
    Z, B = np.meshgrid(zz, on_v)
    zt, bt = res.h_tilde.apply(Z, B)
    ident = float(max(np.max(_fiber_gap(zt, Z), initial=0.0), np.max(np.abs(bt - B), initial=0.0)))
    grid = np.linspace(0.0, 1.0, 4 * samples + 1)
    if F_norm.periodic:
        grid = grid[:-1]
    outside = grid[~res.element._in_support(grid)]
    Z, B = np.meshgrid(zz, outside)
    zt, bt = res.h_tilde.apply(Z, B)
    zh, bh = h.apply(Z, B)
    off = float(max(np.max(_fiber_gap(zt, zh), initial=0.0), np.max(np.abs(bt - bh), initial=0.0)))
    band = _window_samples(bump.support, samples)
    d = bump(band)
    band = band[(d > 0.0) & (d < 1.0)]
    Z, B = np.meshgrid(zz, band)
    worst = 0.0
    for s in (0.125, 0.3, 0.5, 0.9):
        left = res.h_tilde.apply(*integrate_flow(G_norm, (Z, B), s))
        right = integrate_flow(F_norm, res.h_tilde.apply(Z, B), s)
        worst = max(worst, float(np.max(_fiber_gap(left[0], right[0]), initial=0.0)),
                    float(np.max(np.abs(left[1] - right[1]), initial=0.0)))
    return {"identity_on_V": ident, "equals_h_outside_U": off, "conjugation": worst}
