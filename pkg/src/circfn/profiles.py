"""Piecewise polynomial / trigonometric functions on the normalized base.

A :class:`Profile` is the one-dimensional heart of a normal form: the function
applied to the value of the prime function.  Every segment carries its own
closed-form derivatives, so derivative queries are exact (never finite
differences).  The base is always normalized to ``[0, 1]`` (interval) or
``R/Z`` (circle); the original domain is remembered in ``source_domain``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

import numpy as np
from numpy.polynomial import polynomial as npoly

from .errors import ValidationError

KNOT_RTOL = 1e-7


class BaseSpace(str, Enum):
    INTERVAL = "interval"
    CIRCLE = "circle"


class TargetSpace(str, Enum):
    REAL = "real"
    CIRCLE = "circle"


def _trim(c: Sequence[float]) -> tuple[float, ...]:
    c = [float(x) for x in c]
    while len(c) > 1 and c[-1] == 0.0:
        c.pop()
    return tuple(c) if c else (0.0,)


@dataclass(frozen=True)
class Segment:
    """One piece ``poly(t - center) + sum(a cos(w (t-center)) + b sin(w (t-center)))``.

    ``poly`` holds ascending coefficients; ``trig`` holds ``(a, b, w)`` triples.
    """

    domain: tuple[float, float]
    poly: tuple[float, ...] = (0.0,)
    trig: tuple[tuple[float, float, float], ...] = ()
    center: float = 0.0

    def __post_init__(self):
        a, b = (float(x) for x in self.domain)
        if not b > a:
            raise ValidationError(f"segment domain [{a}, {b}] is empty")
        object.__setattr__(self, "domain", (a, b))
        object.__setattr__(self, "poly", _trim(self.poly))
        object.__setattr__(self, "trig", tuple((float(p), float(q), float(w)) for p, q, w in self.trig))
        object.__setattr__(self, "center", float(self.center))

    @property
    def kind(self) -> str:
        return "trig" if self.trig else "poly"

    @property
    def scale(self) -> float:
        """Largest coefficient once the variable is rescaled to the segment's reach."""
        rho = max(abs(self.domain[0] - self.center), abs(self.domain[1] - self.center), 1e-300)
        mags = [abs(c) * rho**k for k, c in enumerate(self.poly)]
        mags += [max(abs(p), abs(q)) for p, q, _ in self.trig]
        return max(mags) if mags else 0.0

    def evaluate(self, t, order: int = 0) -> np.ndarray:
        u = np.asarray(t, dtype=float) - self.center
        c = np.asarray(self.poly)
        if order:
            c = npoly.polyder(c, order) if len(c) > order else np.zeros(1)
        out = npoly.polyval(u, c)
        for p, q, w in self.trig:
            for _ in range(order):
                p, q = q * w, -p * w
            out = out + p * np.cos(w * u) + q * np.sin(w * u)
        return out

    def magnitude(self, t, order: int = 0) -> float:
        """Sum of absolute term sizes of the order-th derivative at t (condition scale)."""
        u = abs(float(t) - self.center)
        c = np.abs(np.asarray(self.poly))
        if order:
            c = npoly.polyder(c, order) if len(c) > order else np.zeros(1)
        out = float(npoly.polyval(u, c))
        for p, q, w in self.trig:
            out += (abs(p) + abs(q)) * abs(w) ** order
        return out

    def derivative(self, order: int = 1) -> "Segment":
        if order == 0:
            return self
        c = np.asarray(self.poly)
        c = npoly.polyder(c, order) if len(c) > order else np.zeros(1)
        trig = []
        for p, q, w in self.trig:
            for _ in range(order):
                p, q = q * w, -p * w
            trig.append((p, q, w))
        return Segment(self.domain, tuple(c), tuple(trig), self.center)

    def recentered(self, center: float) -> "Segment":
        """Same function written around a different expansion point."""
        d = self.center - center
        # u_old = u_new - d
        shift = np.polynomial.Polynomial(self.poly)(np.polynomial.Polynomial([-d, 1.0]))
        poly = shift.coef
        trig = []
        for p, q, w in self.trig:
            cw, sw = np.cos(w * d), np.sin(w * d)
            # cos(w(u - d)) = cos(wu)cw + sin(wu)sw ; sin(w(u - d)) = sin(wu)cw - cos(wu)sw
            trig.append((p * cw - q * sw, p * sw + q * cw, w))
        return Segment(self.domain, tuple(poly), tuple(trig), center)

    def restricted(self, a: float, b: float) -> "Segment":
        return Segment((a, b), self.poly, self.trig, self.center)

    def scaled(self, factor: float, offset: float = 0.0) -> "Segment":
        poly = [factor * c for c in self.poly]
        poly[0] += offset
        return Segment(self.domain, poly, tuple((factor * p, factor * q, w) for p, q, w in self.trig), self.center)

    def plus_poly(self, coeffs: Sequence[float], center: float) -> "Segment":
        """Add a polynomial given around ``center``; the result is expanded there."""
        # re-expanding a high-degree bump elsewhere cancels catastrophically,
        # so move the (usually low-degree) own polynomial instead
        base = self.recentered(center)
        coeffs = np.asarray(coeffs, dtype=float)
        n = max(len(coeffs), len(base.poly))
        poly = np.zeros(n)
        poly[: len(base.poly)] += base.poly
        poly[: len(coeffs)] += coeffs
        return Segment(self.domain, tuple(poly), base.trig, center)

    def pulled_back(self, alpha: float, beta: float, domain: tuple[float, float]) -> "Segment":
        """Substitute ``x = alpha * s + beta`` (source variable x, base variable s)."""
        center = (self.center - beta) / alpha
        poly = [c * alpha**k for k, c in enumerate(self.poly)]
        trig = tuple((p, q, w * alpha) for p, q, w in self.trig)
        return Segment(domain, poly, trig, center)

    def to_json(self) -> dict:
        d: dict = {"kind": self.kind, "domain": list(self.domain)}
        if self.trig:
            d["coeffs"] = [list(x) for x in self.trig]
            d["poly"] = list(self.poly)
        else:
            d["coeffs"] = list(self.poly)
        if self.center != 0.0:
            d["center"] = self.center
        return d

    @classmethod
    def from_json(cls, d: dict) -> "Segment":
        kind = d.get("kind", "poly")
        center = float(d.get("center", 0.0))
        if kind == "poly":
            return cls(tuple(d["domain"]), tuple(d["coeffs"]), (), center)
        if kind == "trig":
            return cls(tuple(d["domain"]), tuple(d.get("poly", (0.0,))), tuple(tuple(x) for x in d["coeffs"]), center)
        raise ValidationError(f"unknown segment kind {kind!r}")


@dataclass(frozen=True)
class Profile:
    """Piecewise closed-form function on the normalized base.

    For a circle target the segments describe a real lift; :meth:`__call__`
    reduces values mod 1 while :meth:`lift` returns the raw lift.
    """

    segments: tuple[Segment, ...]
    base: BaseSpace = BaseSpace.INTERVAL
    target: TargetSpace = TargetSpace.REAL
    max_derivative_order: int = 8
    source_domain: tuple[float, float] = (0.0, 1.0)
    _cache: dict = field(default_factory=dict, init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        segs = tuple(sorted(self.segments, key=lambda s: s.domain[0]))
        object.__setattr__(self, "segments", segs)
        object.__setattr__(self, "base", BaseSpace(self.base))
        object.__setattr__(self, "target", TargetSpace(self.target))
        object.__setattr__(self, "source_domain", tuple(float(x) for x in self.source_domain))
        if self.max_derivative_order < 0:
            raise ValidationError("max_derivative_order must be non-negative")
        if not segs:
            raise ValidationError("profile needs at least one segment")
        if abs(segs[0].domain[0]) > 1e-12 or abs(segs[-1].domain[1] - 1.0) > 1e-12:
            raise ValidationError("segments must cover the normalized base [0, 1]")
        for s, t in zip(segs, segs[1:]):
            if abs(s.domain[1] - t.domain[0]) > 1e-12:
                raise ValidationError(f"gap or overlap between segments at {s.domain[1]} / {t.domain[0]}")
        a, b = self.source_domain
        if not b > a:
            raise ValidationError("source domain must be a non-empty interval")
        self._check_joins()

    # -- construction -----------------------------------------------------
    @classmethod
    def polynomial(cls, coeffs: Sequence[float], *, domain=(0.0, 1.0), center: float = 0.0,
                   base=BaseSpace.INTERVAL, target=TargetSpace.REAL, max_derivative_order: int = 8) -> "Profile":
        """Single polynomial ``sum c_k (x - center)^k`` given on the source ``domain``."""
        return cls.from_source_segments([Segment(domain, coeffs, (), center)], domain=domain, base=base,
                                        target=target, max_derivative_order=max_derivative_order)

    @classmethod
    def trigonometric(cls, terms: Iterable[tuple[float, float, float]], poly: Sequence[float] = (0.0,), *,
                      domain=(0.0, 1.0), center: float = 0.0, base=BaseSpace.INTERVAL,
                      target=TargetSpace.REAL, max_derivative_order: int = 8) -> "Profile":
        return cls.from_source_segments([Segment(domain, poly, tuple(terms), center)], domain=domain, base=base,
                                        target=target, max_derivative_order=max_derivative_order)

    @classmethod
    def from_source_segments(cls, segments: Sequence[Segment], *, domain=(0.0, 1.0), base=BaseSpace.INTERVAL,
                             target=TargetSpace.REAL, max_derivative_order: int = 8) -> "Profile":
        """Ingest segments written in the source variable and normalize the base."""
        x0, x1 = (float(v) for v in domain)
        alpha, beta = x1 - x0, x0
        segs = []
        for s in segments:
            a, b = ((s.domain[0] - beta) / alpha, (s.domain[1] - beta) / alpha)
            a = 0.0 if abs(a) < 1e-15 else a
            b = 1.0 if abs(b - 1.0) < 1e-15 else b
            segs.append(s.pulled_back(alpha, beta, (a, b)))
        return cls(tuple(segs), base, target, max_derivative_order, (x0, x1))

    @classmethod
    def constant(cls, value: float, **kw) -> "Profile":
        return cls((Segment((0.0, 1.0), (value,)),), **kw)

    @classmethod
    def identity(cls, **kw) -> "Profile":
        return cls((Segment((0.0, 1.0), (0.0, 1.0)),), **kw)

    # -- coordinates --------------------------------------------------------
    @property
    def source_length(self) -> float:
        a, b = self.source_domain
        return b - a

    def to_source(self, s):
        return self.source_domain[0] + self.source_length * np.asarray(s, dtype=float)

    def from_source(self, x):
        return (np.asarray(x, dtype=float) - self.source_domain[0]) / self.source_length

    @property
    def knots(self) -> np.ndarray:
        if "knots" not in self._cache:
            self._cache["knots"] = np.array([s.domain[0] for s in self.segments[1:]])
        return self._cache["knots"]

    @property
    def scale(self) -> float:
        return max(s.scale for s in self.segments)

    def segment_at(self, t: float) -> Segment:
        t = float(np.mod(t, 1.0)) if self.base is BaseSpace.CIRCLE and not 0.0 <= t <= 1.0 else float(t)
        return self.segments[int(np.searchsorted(self.knots, t, side="right"))]

    # -- evaluation -------------------------------------------------------
    def _matrix(self, order: int):
        key = ("mat", order)
        if key not in self._cache:
            rows = []
            for s in self.segments:
                c = np.asarray(s.poly)
                rows.append(npoly.polyder(c, order) if len(c) > order else np.zeros(1))
            width = max(len(r) for r in rows)
            mat = np.zeros((len(rows), width))
            for i, r in enumerate(rows):
                mat[i, : len(r)] = r
            centers = np.array([s.center for s in self.segments])
            trig_idx = [i for i, s in enumerate(self.segments) if s.trig]
            self._cache[key] = (mat, centers, trig_idx)
        return self._cache[key]

    def _raw(self, t: np.ndarray, order: int) -> np.ndarray:
        mat, centers, trig_idx = self._matrix(order)
        idx = np.searchsorted(self.knots, t, side="right")
        u = t - centers[idx]
        coef = mat[idx]
        out = coef[:, -1].copy()
        for k in range(mat.shape[1] - 2, -1, -1):
            out = out * u + coef[:, k]
        for i in trig_idx:
            m = idx == i
            if np.any(m):
                seg = self.segments[i]
                trig_only = Segment(seg.domain, (0.0,), seg.trig, seg.center)
                out[m] += trig_only.evaluate(t[m], order)
        return out

    @property
    def degree(self) -> int:
        """Winding number of a circle-base profile (0 for real targets)."""
        if self.base is not BaseSpace.CIRCLE:
            return 0
        if "degree" not in self._cache:
            v = self._raw(np.array([0.0, 1.0]), 0)
            self._cache["degree"] = int(round(v[1] - v[0]))
        return self._cache["degree"]

    def lift(self, t, order: int = 0):
        """Raw (unreduced) values or exact derivatives of order ``order``."""
        arr = np.asarray(t, dtype=float)
        scalar = arr.ndim == 0
        t = np.atleast_1d(arr).astype(float).ravel()
        if self.base is BaseSpace.CIRCLE:
            k = np.floor(t)
            r = self._raw(t - k, order)
            if order == 0:
                r = r + self.degree * k
        else:
            r = self._raw(t, order)
        return float(r[0]) if scalar else r.reshape(np.shape(arr))

    def __call__(self, t, order: int = 0):
        v = self.lift(t, order)
        if order == 0 and self.target is TargetSpace.CIRCLE:
            return np.mod(v, 1.0) if isinstance(v, np.ndarray) else float(v % 1.0)
        return v

    def derivative(self, order: int = 1) -> "Profile":
        if order == 0:
            return self
        if order > self.max_derivative_order:
            raise ValidationError("derivative order exceeds max_derivative_order")
        return Profile(tuple(s.derivative(order) for s in self.segments), self.base, TargetSpace.REAL,
                       self.max_derivative_order - order, self.source_domain)

    # -- transformations ------------------------------------------------------
    def scaled(self, factor: float, offset: float = 0.0, target=None) -> "Profile":
        return Profile(tuple(s.scaled(factor, offset) for s in self.segments), self.base,
                       self.target if target is None else target, self.max_derivative_order, self.source_domain)

    def split_at(self, points: Iterable[float]) -> "Profile":
        """Same function with extra knots inserted (segments keep their formulas)."""
        segs = list(self.segments)
        for p in sorted(float(x) for x in points):
            out = []
            for s in segs:
                a, b = s.domain
                if a + 1e-14 < p < b - 1e-14:
                    out += [s.restricted(a, p), s.restricted(p, b)]
                else:
                    out.append(s)
            segs = out
        return Profile(tuple(segs), self.base, self.target, self.max_derivative_order, self.source_domain)

    # -- invariants ---------------------------------------------------------
    def _check_joins(self):
        k = self.max_derivative_order
        pairs = list(zip(self.segments, self.segments[1:]))
        wrap = self.base is BaseSpace.CIRCLE
        for j in range(k + 1):
            for s, t in pairs:
                x = s.domain[1]
                left, right = float(s.evaluate(x, j)), float(t.evaluate(x, j))
                mag = max(1.0, s.magnitude(x, j), t.magnitude(x, j))
                if abs(left - right) > KNOT_RTOL * mag:
                    raise ValidationError(f"segments do not join C^{j} at knot {x}: {left} vs {right}")
            if wrap:
                left = float(self.segments[-1].evaluate(1.0, j))
                right = float(self.segments[0].evaluate(0.0, j))
                gap = left - right
                if j == 0 and self.target is TargetSpace.CIRCLE:
                    gap -= round(gap)
                mag = max(1.0, self.segments[-1].magnitude(1.0, j), self.segments[0].magnitude(0.0, j))
                if abs(gap) > KNOT_RTOL * mag:
                    raise ValidationError(f"circle profile is not periodic in derivative {j}")

    # -- serialization --------------------------------------------------------
    def to_json(self) -> dict:
        d = {
            "pieces": [s.to_json() for s in self.segments],
            "base": self.base.value,
            "target": self.target.value,
            "max_derivative_order": self.max_derivative_order,
        }
        if self.source_domain != (0.0, 1.0):
            d["source_domain"] = list(self.source_domain)
        return d

    @classmethod
    def from_json(cls, d: dict) -> "Profile":
        return cls(
            tuple(Segment.from_json(p) for p in d["pieces"]),
            BaseSpace(d.get("base", "interval")),
            TargetSpace(d.get("target", "real")),
            int(d.get("max_derivative_order", 8)),
            tuple(d.get("source_domain", (0.0, 1.0))),
        )
