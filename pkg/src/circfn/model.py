"""Core data model: surfaces, records, diffeomorphism chains, normal forms.

Points are given in band coordinates ``(z, b)``: ``z`` is the fiber angle in
turns (taken mod 1) and ``b`` is the normalized value of the prime function.
Disk and sphere points near an isolated extremum may instead be given in a
polar chart (:class:`PolarPoint`) where the prime function reads ``x^2 + y^2``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Union

import numpy as np

from .bump import BumpFunction, Polarity
from .errors import DomainError, ValidationError
from .profiles import BaseSpace, Profile, Segment, TargetSpace

POLAR_RADIUS2 = 0.1        # polar charts cover x^2 + y^2 <= 0.1
BAND_COLLAR = 0.05         # band charts on disk/sphere start at this distance from a pole
MONOTONE_SCAN = 10_000


class SurfaceKind(str, Enum):
    CYLINDER = "cylinder"
    TORUS = "torus"
    DISK = "disk"
    SPHERE = "sphere"


EULER_CHARACTERISTIC = {
    SurfaceKind.CYLINDER: 0,
    SurfaceKind.TORUS: 0,
    SurfaceKind.DISK: 1,
    SurfaceKind.SPHERE: 2,
}


def euler_characteristic(kind) -> int:
    return EULER_CHARACTERISTIC[SurfaceKind(kind)]


@dataclass(frozen=True)
class Surface:
    kind: SurfaceKind
    target: TargetSpace = TargetSpace.REAL
    base: BaseSpace | None = None

    def __post_init__(self):
        kind = SurfaceKind(self.kind)
        expected = BaseSpace.CIRCLE if kind is SurfaceKind.TORUS else BaseSpace.INTERVAL
        base = expected if self.base is None else BaseSpace(self.base)
        if base is not expected:
            raise ValidationError(f"{kind.value} requires a {expected.value} base")
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "target", TargetSpace(self.target))
        object.__setattr__(self, "base", base)

    @classmethod
    def of(cls, kind, target=None) -> "Surface":
        kind = SurfaceKind(kind)
        if target is None:
            target = TargetSpace.CIRCLE if kind is SurfaceKind.TORUS else TargetSpace.REAL
        return cls(kind, TargetSpace(target))

    @property
    def euler_characteristic(self) -> int:
        return EULER_CHARACTERISTIC[self.kind]

    @property
    def poles(self) -> tuple["Pole", ...]:
        if self.kind is SurfaceKind.DISK:
            return (Pole.CENTER,)
        if self.kind is SurfaceKind.SPHERE:
            return (Pole.SOUTH, Pole.NORTH)
        return ()

    def band_domain(self) -> tuple[float, float]:
        if self.kind is SurfaceKind.DISK:
            return (BAND_COLLAR, 1.0)
        if self.kind is SurfaceKind.SPHERE:
            return (BAND_COLLAR, 1.0 - BAND_COLLAR)
        return (0.0, 1.0)


# -- records -----------------------------------------------------------------

class ExtremalKind(str, Enum):
    MAX = "max"
    MIN = "min"
    NONE = "none"


class Pole(str, Enum):
    CENTER = "disk_center"
    SOUTH = "sphere_south"
    NORTH = "sphere_north"

    @property
    def base_value(self) -> float:
        return 1.0 if self is Pole.NORTH else 0.0


@dataclass(frozen=True)
class CriticalCircleRecord:
    base_position: float
    level: float
    order: int
    extremal: bool
    extremal_kind: ExtremalKind = ExtremalKind.NONE

    def __post_init__(self):
        object.__setattr__(self, "extremal_kind", ExtremalKind(self.extremal_kind))
        if self.order < 2:
            raise ValidationError("vanishing order of a critical circle is at least 2")
        if self.extremal != (self.order % 2 == 0):
            raise ValidationError("a circle is extremal exactly when its order is even")
        if (self.extremal_kind is ExtremalKind.NONE) == self.extremal:
            raise ValidationError("extremal kind must be Max/Min exactly for extremal circles")

    def to_json(self) -> dict:
        return {
            "base_position": self.base_position,
            "level": self.level,
            "order": self.order,
            "extremal": self.extremal,
            "extremal_kind": self.extremal_kind.value,
        }

    @classmethod
    def from_json(cls, d: dict) -> "CriticalCircleRecord":
        order = int(d["order"])
        return cls(float(d.get("base_position", 0.0)), float(d.get("level", 0.0)), order,
                   bool(d.get("extremal", order % 2 == 0)), ExtremalKind(d.get("extremal_kind", "none")))


@dataclass(frozen=True)
class IsolatedExtremumRecord:
    location: Pole
    kind: ExtremalKind

    def __post_init__(self):
        object.__setattr__(self, "location", Pole(self.location))
        object.__setattr__(self, "kind", ExtremalKind(self.kind))
        if self.kind is ExtremalKind.NONE:
            raise ValidationError("an isolated extremum is a Max or a Min")

    def to_json(self) -> dict:
        return {"location": self.location.value, "kind": self.kind.value}

    @classmethod
    def from_json(cls, d: dict) -> "IsolatedExtremumRecord":
        return cls(Pole(d["location"]), ExtremalKind(d["kind"]))


# -- points ------------------------------------------------------------------

@dataclass(frozen=True)
class PolarPoint:
    """Point in the Morse chart around a pole: prime function = x^2 + y^2 (or 1 - that)."""

    x: object
    y: object
    pole: Pole = Pole.CENTER

    def to_band(self):
        x, y = np.asarray(self.x, dtype=float), np.asarray(self.y, dtype=float)
        r2 = x * x + y * y
        z = np.mod(np.arctan2(y, x) / (2 * np.pi), 1.0)
        b = 1.0 - r2 if Pole(self.pole) is Pole.NORTH else r2
        return z, b

    @classmethod
    def from_band(cls, z, b, pole: Pole) -> "PolarPoint":
        z, b = np.asarray(z, dtype=float), np.asarray(b, dtype=float)
        r2 = 1.0 - b if Pole(pole) is Pole.NORTH else b
        r = np.sqrt(np.maximum(r2, 0.0))
        return cls(r * np.cos(2 * np.pi * z), r * np.sin(2 * np.pi * z), Pole(pole))


Point = Union[tuple, PolarPoint]


# -- monotone inversion ---------------------------------------------------------

def invert_monotone(beta: Profile, y, *, lo: float = 0.0, hi: float = 1.0, tol: float = 1e-15):
    """Solve ``beta.lift(t) = y`` for t in [lo, hi], beta strictly monotone there.

    Safeguarded Newton seeded from a lookup table; falls back to bisection
    whenever a Newton step leaves the current bracket.
    """
    y = np.atleast_1d(np.asarray(y, dtype=float))
    key = ("inv_table", lo, hi)
    if key not in beta._cache:
        tt = np.linspace(lo, hi, 4097)
        beta._cache[key] = (tt, beta.lift(tt))
    tt, vv = beta._cache[key]
    inc = vv[-1] > vv[0]
    vs, ts = (vv, tt) if inc else (vv[::-1], tt[::-1])
    k = np.clip(np.searchsorted(vs, y), 1, len(vs) - 1)
    a, b = ts[k - 1], ts[k]
    left, right = np.minimum(a, b), np.maximum(a, b)
    t = np.interp(y, vs, ts)
    for _ in range(80):
        f = beta.lift(t) - y
        d = beta.lift(t, 1)
        grow = (f > 0) if inc else (f < 0)
        right = np.where(grow, np.minimum(right, t), right)
        left = np.where(grow, left, np.maximum(left, t))
        with np.errstate(divide="ignore", invalid="ignore"):
            tn = t - f / d
        bad = ~np.isfinite(tn) | (tn < left) | (tn > right)
        tn = np.where(bad, 0.5 * (left + right), tn)
        done = np.max(np.abs(tn - t)) <= tol
        t = tn
        if done:
            break
    return t


# -- elementary diffeomorphisms --------------------------------------------------

def _as_arrays(z, b):
    return np.asarray(z, dtype=float), np.asarray(b, dtype=float)


@dataclass(frozen=True)
class FiberShift:
    """``(z, b) -> (z + tau(b), b)``: each fiber rotated by a base-dependent angle."""

    tau: Profile

    def apply(self, z, b):
        z, b = _as_arrays(z, b)
        return np.mod(z + self.tau.lift(b), 1.0), b

    def inverse(self) -> "FiberShift":
        return FiberShift(self.tau.scaled(-1.0))

    def base_map(self, b):
        return b

    def base_inverse(self, b):
        return b

    def base_jacobian(self, b):
        return np.ones_like(np.asarray(b, dtype=float))

    def to_json(self) -> dict:
        return {"variant": "fiber_shift", "tau": self.tau.to_json()}


@dataclass(frozen=True)
class FiberRotation:
    """``(z, b) -> (z + angle, b)`` with a constant angle in [0, 1)."""

    angle: float

    def __post_init__(self):
        object.__setattr__(self, "angle", float(self.angle) % 1.0)

    def apply(self, z, b):
        z, b = _as_arrays(z, b)
        return np.mod(z + self.angle, 1.0), b

    def inverse(self) -> "FiberRotation":
        return FiberRotation(-self.angle)

    def base_map(self, b):
        return b

    def base_inverse(self, b):
        return b

    def base_jacobian(self, b):
        return np.ones_like(np.asarray(b, dtype=float))

    def to_json(self) -> dict:
        return {"variant": "fiber_rotation", "angle": self.angle}


@dataclass(frozen=True)
class BaseReparam:
    """``(z, b) -> (z, beta(b))`` for a monotone bijection beta of the base.

    ``inverted`` marks the inverse map ``b -> beta^{-1}(b)`` (computed by
    safeguarded Newton, so the chain stays exactly representable).
    """

    beta: Profile
    orientation: int = 1
    inverted: bool = False

    def __post_init__(self):
        if self.orientation not in (1, -1):
            raise ValidationError("orientation must be +1 or -1")
        beta = self.beta
        if beta.base is BaseSpace.CIRCLE:
            if beta.degree != self.orientation:
                raise ValidationError("circle reparametrization must have degree equal to its orientation")
        else:
            ends = beta.lift(np.array([0.0, 1.0]))
            want = np.array([0.0, 1.0]) if self.orientation == 1 else np.array([1.0, 0.0])
            if np.max(np.abs(ends - want)) > 1e-12:
                raise ValidationError("interval reparametrization must map {0, 1} onto {0, 1}")
        t = np.linspace(0.0, 1.0, MONOTONE_SCAN + 1)
        d = beta.lift(t, 1) * self.orientation
        interior = d[1:-1] if beta.base is BaseSpace.INTERVAL else d
        if np.any(interior <= 0) or np.any(d < 0):
            raise ValidationError("base reparametrization is not a monotone bijection (derivative vanishes)")

    def _forward(self, b):
        if self.beta.base is BaseSpace.CIRCLE:
            return np.mod(self.beta.lift(b), 1.0)
        return self.beta.lift(b)

    def _backward(self, b):
        b = np.asarray(b, dtype=float)
        shape = b.shape
        b = np.atleast_1d(b)
        if self.beta.base is BaseSpace.CIRCLE:
            b0 = self.beta.lift(0.0)
            lo = min(b0, b0 + self.orientation)
            y = lo + np.mod(np.mod(b, 1.0) - lo, 1.0)
            t = invert_monotone(self.beta, y)
            return np.mod(t, 1.0).reshape(shape)
        return invert_monotone(self.beta, b).reshape(shape)

    def apply(self, z, b):
        z, b = _as_arrays(z, b)
        return z, (self._backward(b) if self.inverted else self._forward(b))

    def base_map(self, b):
        return self.apply(0.0 * np.asarray(b, dtype=float), b)[1]

    def base_inverse(self, b):
        b = np.asarray(b, dtype=float)
        return self._forward(b) if self.inverted else self._backward(b)

    def base_jacobian(self, b):
        b = np.asarray(b, dtype=float)
        if self.inverted:
            return 1.0 / self.beta.lift(self._backward(b), 1)
        return self.beta.lift(b, 1)

    def inverse(self) -> "BaseReparam":
        return BaseReparam(self.beta, self.orientation, not self.inverted)

    def to_json(self) -> dict:
        return {"variant": "base_reparam", "beta": self.beta.to_json(),
                "orientation": self.orientation, "inverted": self.inverted}


@dataclass(frozen=True)
class LocalizedShift:
    """Conjugator produced by the isotopy lemma.

    Off the support of ``bump`` it is exactly ``inner``.  On the support, where
    ``inner`` is the shift by time ``t0(b)`` along the normalized flow (speed
    ``sign``), it is the shift by ``(1 - progress * bump(b)) * t0(b)``.  At
    ``progress = 0`` this equals ``inner``; at ``progress = 1`` it is the
    identity on the plateau of ``bump``.  ``t0`` is measured from ``inner``
    itself and unwrapped against the reference table ``(nodes, values)``.
    """

    inner: "DiffeoChain"
    bump: BumpFunction
    sign: int
    nodes: tuple[float, ...]
    values: tuple[float, ...]
    progress: float = 1.0
    inverted: bool = False

    def _in_support(self, b):
        b = np.mod(b, 1.0) if self.bump.periodic else b
        m = np.zeros(b.shape, dtype=bool)
        shifts = (-1.0, 0.0, 1.0) if self.bump.periodic else (0.0,)
        for u0, u1 in self.bump.support:
            for k in shifts:
                m |= (b + k > u0) & (b + k < u1)
                if u0 <= 0.0:
                    m |= (b + k >= u0) & (b + k < u1)
                if u1 >= 1.0:
                    m |= (b + k > u0) & (b + k <= u1)
        return m

    def t0(self, b):
        b = np.atleast_1d(np.asarray(b, dtype=float))
        measured = self.inner.apply(np.zeros_like(b), b)[0]
        ref = np.interp(b, self.nodes, self.values)
        unwrapped = measured + np.round(ref - measured)
        return self.sign * unwrapped

    def apply(self, z, b):
        z, b = _as_arrays(z, b)
        shape = np.broadcast(z, b).shape
        z, b = np.broadcast_to(z, shape).ravel().copy(), np.broadcast_to(b, shape).ravel().copy()
        m = self._in_support(b)
        zo, bo = z.copy(), b.copy()
        if np.any(~m):
            other = self.inner.inverse() if self.inverted else self.inner
            zo[~m], bo[~m] = other.apply(z[~m], b[~m])
        if np.any(m):
            bm = b[m]
            delta = self.bump(bm)
            shift = (1.0 - self.progress * delta) * self.t0(bm) * self.sign
            zo[m] = np.mod(z[m] - shift if self.inverted else z[m] + shift, 1.0)
        return zo.reshape(shape), bo.reshape(shape)

    def _base(self, b, inverse: bool):
        b = np.atleast_1d(np.asarray(b, dtype=float))
        m = self._in_support(b)
        out = b.copy()
        if np.any(~m):
            out[~m] = self.inner.base_inverse(b[~m]) if inverse else self.inner.base_map(b[~m])
        return out

    def base_map(self, b):
        return self._base(b, self.inverted)

    def base_inverse(self, b):
        return self._base(b, not self.inverted)

    def base_jacobian(self, b):
        b = np.atleast_1d(np.asarray(b, dtype=float))
        m = self._in_support(b)
        out = np.ones_like(b)
        if np.any(~m):
            inner = self.inner.inverse() if self.inverted else self.inner
            out[~m] = inner.base_jacobian(b[~m])
        return out

    def inverse(self) -> "LocalizedShift":
        return LocalizedShift(self.inner, self.bump, self.sign, self.nodes, self.values, self.progress,
                              not self.inverted)

    def to_json(self) -> dict:
        return {"variant": "localized_shift", "inner": self.inner.to_json(), "bump": self.bump.to_json(),
                "sign": self.sign, "nodes": list(self.nodes), "values": list(self.values),
                "progress": self.progress, "inverted": self.inverted}


ElementaryDiffeo = Union[FiberShift, BaseReparam, FiberRotation, LocalizedShift]


def _element_from_json(d: dict) -> ElementaryDiffeo:
    v = d["variant"]
    if v == "fiber_shift":
        return FiberShift(Profile.from_json(d["tau"]))
    if v == "fiber_rotation":
        return FiberRotation(float(d["angle"]))
    if v == "base_reparam":
        return BaseReparam(Profile.from_json(d["beta"]), int(d.get("orientation", 1)), bool(d.get("inverted", False)))
    if v == "localized_shift":
        return LocalizedShift(DiffeoChain.from_json(d["inner"]), BumpFunction.from_json(d["bump"]), int(d["sign"]),
                              tuple(d["nodes"]), tuple(d["values"]), float(d.get("progress", 1.0)),
                              bool(d.get("inverted", False)))
    raise ValidationError(f"unknown diffeomorphism variant {v!r}")


@dataclass(frozen=True)
class DiffeoChain:
    """Composition of elementary fiber-preserving diffeomorphisms.

    Elements act in list order: ``[e1, e2]`` sends x to ``e2(e1(x))``.
    """

    elements: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "elements", tuple(self.elements))

    def __len__(self):
        return len(self.elements)

    def apply(self, z, b):
        z, b = _as_arrays(z, b)
        for e in self.elements:
            z, b = e.apply(z, b)
        return z, b

    def inverse(self) -> "DiffeoChain":
        return DiffeoChain(tuple(e.inverse() for e in reversed(self.elements)))

    def then(self, other: "DiffeoChain") -> "DiffeoChain":
        return DiffeoChain(self.elements + tuple(other.elements))

    def base_map(self, b):
        b = np.asarray(b, dtype=float)
        for e in self.elements:
            b = e.base_map(b)
        return b

    def base_inverse(self, b):
        b = np.asarray(b, dtype=float)
        for e in reversed(self.elements):
            b = e.base_inverse(b)
        return b

    def base_jacobian(self, b):
        """Derivative of the induced base map at model coordinate b."""
        b = np.asarray(b, dtype=float)
        jac = np.ones_like(b)
        for e in self.elements:
            jac = jac * e.base_jacobian(b)
            b = e.base_map(b)
        return jac

    def to_json(self) -> list:
        return [e.to_json() for e in self.elements]

    @classmethod
    def from_json(cls, items) -> "DiffeoChain":
        return cls(tuple(_element_from_json(d) for d in items or ()))


def chain_apply(chain: DiffeoChain, pt: Point):
    """Apply a chain to a band point ``(z, b)`` or a :class:`PolarPoint`."""
    if isinstance(pt, PolarPoint):
        z, b = pt.to_band()
        z, b = chain.apply(z, b)
        return PolarPoint.from_band(z, b, pt.pole)
    z, b = pt
    return chain.apply(z, b)


def chain_invert(chain: DiffeoChain) -> DiffeoChain:
    return chain.inverse()


# -- normal forms ------------------------------------------------------------------

@dataclass(frozen=True)
class NormalForm:
    """``f = kappa o f0 o h^{-1}`` on one of the four model surfaces."""

    surface: Surface
    profile: Profile
    diffeo: DiffeoChain = field(default_factory=DiffeoChain)

    def __post_init__(self):
        if self.profile.base is not self.surface.base:
            raise ValidationError("profile base does not match the surface")
        if self.profile.target is not self.surface.target:
            raise ValidationError("profile target does not match the surface")
        for e in self.diffeo.elements:
            if isinstance(e, BaseReparam):
                if e.beta.base is not self.surface.base:
                    raise ValidationError("base reparametrization lives on the wrong base")
                if self.surface.kind is SurfaceKind.DISK and e.orientation != 1:
                    raise ValidationError("a disk reparametrization must fix the center")

    def __call__(self, pt: Point):
        return evaluate_normal_form(self, pt)

    def to_json(self) -> dict:
        return {
            "surface": self.surface.kind.value,
            "target": self.surface.target.value,
            "profile": self.profile.to_json(),
            "diffeo": self.diffeo.to_json(),
        }

    @classmethod
    def from_json(cls, d: dict) -> "NormalForm":
        kind = SurfaceKind(d["surface"])
        profile = Profile.from_json(d["profile"])
        target = d.get("target", profile.target.value)
        return cls(Surface.of(kind, target), profile, DiffeoChain.from_json(d.get("diffeo", [])))


def _check_band(surface: Surface, b) -> None:
    if surface.kind is SurfaceKind.TORUS:
        return
    lo, hi = surface.band_domain()
    b = np.asarray(b, dtype=float)
    if np.any(b < lo - 1e-12) or np.any(b > hi + 1e-12) or not np.all(np.isfinite(b)):
        raise DomainError(f"band coordinate outside [{lo}, {hi}] on the {surface.kind.value}")


def to_band(surface: Surface, pt: Point):
    """Band coordinates of a point after chart-domain checks."""
    if isinstance(pt, PolarPoint):
        if Pole(pt.pole) not in surface.poles:
            raise DomainError(f"{Pole(pt.pole).value} chart does not exist on the {surface.kind.value}")
        x, y = np.asarray(pt.x, dtype=float), np.asarray(pt.y, dtype=float)
        if np.any(x * x + y * y > POLAR_RADIUS2 + 1e-12):
            raise DomainError("point outside the polar chart")
        return pt.to_band()
    z, b = pt
    z, b = np.asarray(z, dtype=float), np.asarray(b, dtype=float)
    _check_band(surface, b)
    if surface.kind is SurfaceKind.TORUS:
        b = np.mod(b, 1.0)
    return np.mod(z, 1.0), b


def evaluate_normal_form(nf: NormalForm, pt: Point):
    """Value of ``kappa(f0(h^{-1}(pt)))``; circle targets are reduced mod 1."""
    z, b = to_band(nf.surface, pt)
    _, b0 = nf.diffeo.inverse().apply(z, b)
    val = nf.profile(b0)
    return val


def surface_point(surface: Surface, z, b) -> list[tuple[np.ndarray, Point]]:
    """Split band coordinates into chart-valid pieces: the band, or a polar chart near a pole.

    Returns ``(mask, point)`` pairs covering every entry of ``b``; empty pieces are left out.
    """
    z, b = np.broadcast_arrays(np.asarray(z, dtype=float), np.asarray(b, dtype=float))
    if surface.kind is SurfaceKind.TORUS:
        return [(np.ones(b.shape, dtype=bool), (z, b))]
    lo, hi = surface.band_domain()
    out = []
    band = (b >= lo) & (b <= hi)
    if np.any(band):
        out.append((band, (z[band], b[band])))
    for pole in surface.poles:
        sel = (b > hi) if pole is Pole.NORTH else (b < lo)
        if np.any(sel):
            out.append((sel, PolarPoint.from_band(z[sel], b[sel], pole)))
    return out


def evaluate_on_surface(nf: NormalForm, z, b) -> np.ndarray:
    """``f`` at band coordinates anywhere on the surface, pole neighbourhoods included."""
    z, b = np.broadcast_arrays(np.asarray(z, dtype=float), np.asarray(b, dtype=float))
    out = np.empty(b.shape)
    for mask, pt in surface_point(nf.surface, z, b):
        if np.any(mask):
            out[mask] = evaluate_normal_form(nf, pt)
    return out


# -- tangent fields ------------------------------------------------------------------

@dataclass(frozen=True)
class Collar:
    """Nowhere-zero fiber field of fixed sign on a collar around a critical circle."""

    center: float
    inner: float
    outer: float
    sign: int

    def bump(self, periodic: bool) -> BumpFunction:
        c = self.center
        return BumpFunction(((c - self.outer, c + self.outer),), ((c - self.inner, c + self.inner),),
                            Polarity.ONE_INSIDE, periodic)

    def to_json(self) -> dict:
        return {"center": self.center, "inner": self.inner, "outer": self.outer, "sign": self.sign}

    @classmethod
    def from_json(cls, d: dict) -> "Collar":
        return cls(float(d["center"]), float(d["inner"]), float(d["outer"]), int(d["sign"]))


@dataclass(frozen=True)
class TangentField:
    """Fiber-tangent field ``g(b) d/dz`` assembled from closed-form parts.

    In model coordinates s the speed is ``alpha(s) A(s) c(s) + sum_i delta_i(s) sign_i``
    where ``c`` is ``coefficient``, ``A`` the piecewise-constant sign given by
    ``sign_breaks``/``signs``, ``delta_i`` the collar bumps and
    ``alpha = 1 - sum_i delta_i``.  The field is pushed forward through
    ``chain``; with ``jacobian`` set the speed is divided by the derivative
    of the induced base map (the Hamiltonian convention).
    """

    coefficient: Profile
    singular_extrema: tuple[IsolatedExtremumRecord, ...] = ()
    sign_breaks: tuple[float, ...] = ()
    signs: tuple[int, ...] = (1,)
    collars: tuple[Collar, ...] = ()
    chain: DiffeoChain = field(default_factory=DiffeoChain)
    jacobian: bool = False
    normalized: bool = False

    def __post_init__(self):
        object.__setattr__(self, "singular_extrema", tuple(self.singular_extrema))
        object.__setattr__(self, "sign_breaks", tuple(float(x) for x in self.sign_breaks))
        object.__setattr__(self, "signs", tuple(int(s) for s in self.signs))
        object.__setattr__(self, "collars", tuple(self.collars))
        if len(self.signs) != len(self.sign_breaks) + 1:
            raise ValidationError("need one sign per interval between sign breaks")

    @property
    def periodic(self) -> bool:
        return self.coefficient.base is BaseSpace.CIRCLE

    @property
    def constant_speed(self) -> float | None:
        """The speed when the field is a constant multiple of d/dz, else None."""
        c = self.coefficient
        if self.collars or self.sign_breaks or self.jacobian or len(c.segments) != 1:
            return None
        seg = c.segments[0]
        if seg.trig or len(seg.poly) != 1:
            return None
        return seg.poly[0] * self.signs[0]

    def model_speed(self, s):
        s = np.asarray(s, dtype=float)
        base = self.coefficient.lift(s)
        if self.sign_breaks:
            idx = np.searchsorted(np.asarray(self.sign_breaks), np.mod(s, 1.0) if self.periodic else s)
            base = base * np.asarray(self.signs)[idx]
        else:
            base = base * self.signs[0]
        if not self.collars:
            return base
        deltas = np.zeros_like(base)
        extra = np.zeros_like(base)
        for c in self.collars:
            d = c.bump(self.periodic)(s)
            deltas = deltas + d
            extra = extra + d * c.sign
        return (1.0 - deltas) * base + extra

    def speed(self, b):
        """Fiber speed g at surface base coordinate b."""
        b = np.asarray(b, dtype=float)
        const = self.constant_speed
        if const is not None:
            return np.full(b.shape, const) if b.ndim else const
        if not len(self.chain):
            return self.model_speed(b)
        s = self.chain.base_inverse(b)
        g = self.model_speed(s)
        if self.jacobian:
            g = g / self.chain.base_jacobian(s)
        return g

    def to_json(self) -> dict:
        return {
            "coefficient": self.coefficient.to_json(),
            "singular_extrema": [r.to_json() for r in self.singular_extrema],
            "sign_breaks": list(self.sign_breaks),
            "signs": list(self.signs),
            "collars": [c.to_json() for c in self.collars],
            "chain": self.chain.to_json(),
            "jacobian": self.jacobian,
            "normalized": self.normalized,
        }

    @classmethod
    def from_json(cls, d: dict) -> "TangentField":
        return cls(
            Profile.from_json(d["coefficient"]),
            tuple(IsolatedExtremumRecord.from_json(r) for r in d.get("singular_extrema", [])),
            tuple(d.get("sign_breaks", [])),
            tuple(d.get("signs", [1])),
            tuple(Collar.from_json(c) for c in d.get("collars", [])),
            DiffeoChain.from_json(d.get("chain", [])),
            bool(d.get("jacobian", False)),
            bool(d.get("normalized", False)),
        )


def constant_profile(value: float, base: BaseSpace) -> Profile:
    return Profile((Segment((0.0, 1.0), (float(value),)),), base, TargetSpace.REAL)
