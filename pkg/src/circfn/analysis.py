"""One-dimensional analysis of profiles.

Critical points and their vanishing orders, the regularity conditions on a
profile, profile-level Morsification, even-function factorization and
equivalence of profiles with explicit witnesses.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from math import factorial

import numpy as np
from numpy.polynomial import polynomial as npoly

from .errors import FlatProfileError, MorsifyError, NotEvenError, ValidationError
from .model import CriticalCircleRecord, ExtremalKind, Surface, SurfaceKind, invert_monotone
from .profiles import BaseSpace, Profile, Segment, TargetSpace

SCAN_POINTS = 10_000
ZERO_TOL = 1e-9        # relative to profile scale: declared zero below this
NONZERO_TOL = 1e-6     # relative to profile scale: declared nonzero above this
ROOT_WIDTH = 1e-12
END_EXCLUSION = 1e-9
MERGE_RADIUS = 0.5 / SCAN_POINTS


# -- critical points ------------------------------------------------------------

def _bisect(fun, a, b, width: float = ROOT_WIDTH) -> float:
    fa = fun(a)
    if fa == 0.0:
        return a
    for _ in range(200):
        if b - a <= width:
            break
        m = 0.5 * (a + b)
        fm = fun(m)
        if fm == 0.0:
            return m
        if np.sign(fm) == np.sign(fa):
            a, fa = m, fm
        else:
            b = m
    return 0.5 * (a + b)


def _check_not_flat(p: Profile) -> None:
    for s in p.segments:
        d = s.derivative(1)
        if not d.trig and all(c == 0.0 for c in d.poly):
            raise FlatProfileError(f"profile is constant on [{s.domain[0]}, {s.domain[1]}]")


def vanishing_order(p: Profile, t0: float) -> int:
    """Index of the first derivative of ``p`` that does not vanish at ``t0``."""
    scale = max(p.scale, 1e-300)
    if abs(p.lift(t0, 1)) >= NONZERO_TOL * scale:
        raise ValidationError(f"t0={t0} is not a critical point")
    for n in range(2, p.max_derivative_order + 1):
        if abs(p.lift(t0, n)) >= NONZERO_TOL * scale:
            return n
    raise FlatProfileError(f"all derivatives up to order {p.max_derivative_order} vanish at {t0}")


def _sign_root(fun, t: float, lo: float, hi: float) -> float | None:
    for h in (2e-3, 2e-4, 2e-5, 2e-6):
        a, b = max(t - h, lo), min(t + h, hi)
        if np.sign(fun(a)) * np.sign(fun(b)) < 0:
            return _bisect(fun, a, b)
    return None


def _settle(p: Profile, t: float) -> tuple[float, int]:
    """Walk up the derivatives, moving t onto each sign-changing root nearby.

    A root of high multiplicity is smeared in floating point, while the root of
    the last vanishing derivative is simple and sharply located.
    """
    scale = max(p.scale, 1e-300)
    lo, hi = (-np.inf, np.inf) if p.base is BaseSpace.CIRCLE else (0.0, 1.0)
    for j in range(1, p.max_derivative_order):
        r = _sign_root(lambda x: p.lift(x, j), t, lo, hi)  # noqa: B023
        if r is not None and all(abs(p.lift(r, k)) < NONZERO_TOL * scale for k in range(1, j)):
            t = r
        if abs(p.lift(t, j + 1)) >= NONZERO_TOL * scale:
            # an even-multiplicity root of the j-th derivative cannot be bisected,
            # so look one derivative ahead before settling for order j+1
            r = _sign_root(lambda x: p.lift(x, j + 1), t, lo, hi)  # noqa: B023
            if r is not None and all(abs(p.lift(r, k)) < ZERO_TOL * scale for k in range(1, j + 1)):
                t = r
                continue
            return t, j + 1
    raise FlatProfileError(f"all derivatives up to order {p.max_derivative_order} vanish at {t}")


def _candidates(p: Profile) -> list[float]:
    scale = max(p.scale, 1e-300)
    circle = p.base is BaseSpace.CIRCLE
    t = np.linspace(0.0, 1.0, SCAN_POINTS + 1)
    if circle:
        t = t[:-1]
    d1, d2 = p.lift(t, 1), p.lift(t, 2)
    t_next = np.append(t[1:], 1.0) if circle else t[1:]
    d1n = np.append(d1[1:], d1[0]) if circle else d1[1:]
    d2n = np.append(d2[1:], d2[0]) if circle else d2[1:]
    t_cur = t if circle else t[:-1]
    d1c = d1 if circle else d1[:-1]
    d2c = d2 if circle else d2[:-1]

    f1 = lambda x: p.lift(x, 1)  # noqa: E731
    f2 = lambda x: p.lift(x, 2)  # noqa: E731
    out = [float(x) for x in t[d1 == 0.0]]
    for i in np.nonzero(np.sign(d1c) * np.sign(d1n) < 0)[0]:
        out.append(_bisect(f1, float(t_cur[i]), float(t_next[i])))
    # tangential roots of p': p'' changes sign and |p'| is tiny there
    cand2 = [float(x) for x in t[d2 == 0.0]]
    # a root of p' inside a cell keeps |p'| below h max|p''| at both cell ends
    bound = 2.0 * float(np.max(np.abs(d2))) / SCAN_POINTS + ZERO_TOL * scale
    near = np.minimum(np.abs(d1c), np.abs(d1n)) <= bound
    for i in np.nonzero((np.sign(d2c) * np.sign(d2n) < 0) & near)[0]:
        cand2.append(_bisect(f2, float(t_cur[i]), float(t_next[i])))
    for m in cand2:
        if abs(p.lift(m, 1)) < ZERO_TOL * scale:
            out.append(m)
    return out


def find_critical_points(p: Profile) -> list[CriticalCircleRecord]:
    """All interior critical points of ``p`` with order and extremal type, sorted by position."""
    if "critical_points" in p._cache:
        return list(p._cache["critical_points"])
    _check_not_flat(p)
    circle = p.base is BaseSpace.CIRCLE
    found: list[tuple[float, int]] = []
    for t in sorted(_candidates(p)):
        t, n = _settle(p, t)
        if circle:
            t = float(np.mod(t, 1.0))
            if t > 1.0 - 1e-13:
                t = 0.0
        elif t < END_EXCLUSION or t > 1.0 - END_EXCLUSION:
            continue
        # roots closer than half a scan cell cannot be told apart; keep the
        # representative that settled onto the highest vanishing derivative
        near = [i for i, (s, _) in enumerate(found)
                if min(abs(t - s), 1.0 - abs(t - s) if circle else np.inf) < MERGE_RADIUS]
        if near:
            i = near[0]
            if n > found[i][1]:
                found[i] = (t, n)
            continue
        found.append((t, n))
    records = []
    for t, n in sorted(found):
        even = n % 2 == 0
        kind = ExtremalKind.NONE
        if even:
            kind = ExtremalKind.MIN if p.lift(t, n) > 0 else ExtremalKind.MAX
        records.append(CriticalCircleRecord(t, float(p(t)), n, even, kind))
    p._cache["critical_points"] = tuple(records)
    return records


# -- conditions (A) and (B) ---------------------------------------------------------

@dataclass
class ValidityReport:
    condition_A: bool
    condition_B: bool
    violations: list[tuple[float | None, str]] = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return self.condition_A and self.condition_B

    def to_json(self) -> dict:
        return {
            "condition_A": self.condition_A,
            "condition_B": self.condition_B,
            "valid": self.valid,
            "violations": [{"base_position": b, "reason": r} for b, r in self.violations],
        }


def singular_ends(kind: SurfaceKind) -> tuple[tuple[float, str], ...]:
    """Base ends where the profile must be regular, with what lies over them."""
    kind = SurfaceKind(kind)
    if kind is SurfaceKind.CYLINDER:
        return ((0.0, "boundary of the surface"), (1.0, "boundary of the surface"))
    if kind is SurfaceKind.DISK:
        return ((0.0, "image of the Morse extremum at the disk center"), (1.0, "boundary of the surface"))
    if kind is SurfaceKind.SPHERE:
        return ((0.0, "image of the south Morse extremum"), (1.0, "image of the north Morse extremum"))
    return ()


def validate_profile(p: Profile, s: Surface) -> ValidityReport:
    """Check condition (A) (finitely many non-flat critical points) and (B) (regular at ends)."""
    violations: list[tuple[float | None, str]] = []
    a_ok = b_ok = True
    if p.base is not s.base:
        violations.append((None, f"profile base {p.base.value} does not match the {s.kind.value}"))
        return ValidityReport(False, False, violations)
    try:
        find_critical_points(p)
    except FlatProfileError as exc:
        a_ok = False
        violations.append((None, f"condition A: {exc}"))
    scale = max(p.scale, 1e-300)
    for end, what in singular_ends(s.kind):
        if abs(p.lift(end, 1)) < ZERO_TOL * scale:
            b_ok = False
            violations.append((end, f"condition B: critical point at the {what}"))
    return ValidityReport(a_ok, b_ok, violations)


# -- Morsification ------------------------------------------------------------------

def _flat_bump_poly(r: float, k: int, even: bool) -> np.ndarray:
    """Perturbation around u = 0 vanishing to order k+1 at u = +-r.

    Even case: u^2 (r^2-u^2)^(k+1) / r^(2k+2), a new nondegenerate minimum.
    Odd case: antiderivative of (r^2-u^2)^(k+1) (1 - lam u^2) with zero total
    mass, so the perturbation is flat at both ends and strictly increasing at 0.
    """
    base = npoly.polypow([r * r, 0.0, -1.0], k + 1)
    if even:
        return npoly.polymul([0.0, 0.0, 1.0], base) / r ** (2 * k + 2)
    i0 = npoly.polyval(r, npoly.polyint(base)) - npoly.polyval(-r, npoly.polyint(base))
    b2 = npoly.polymul([0.0, 0.0, 1.0], base)
    i2 = npoly.polyval(r, npoly.polyint(b2)) - npoly.polyval(-r, npoly.polyint(b2))
    lam = i0 / i2
    dphi = npoly.polymul(base, [1.0, 0.0, -lam])
    phi = npoly.polyint(dphi, lbnd=-r)
    return phi / r ** (2 * k + 2)


def _normalize_keep(keep, p: Profile) -> list[tuple[float, float]]:
    out = []
    for a, b in keep or ():
        a, b = float(a), float(b)
        if b < a:
            a, b = b, a
        out.append((a, b))
    return out


def _add_window(p: Profile, c: float, r: float, phi: np.ndarray) -> Profile:
    """``p + phi(s - c)`` on the window [c-r, c+r] (wrapping on a circle base)."""
    pieces = [(c - r, c + r, c)]
    if p.base is BaseSpace.CIRCLE:
        pieces = [(a + k, b + k, cc + k) for a, b, cc in pieces for k in (-1.0, 0.0, 1.0)]
    pieces = [(max(a, 0.0), min(b, 1.0), cc) for a, b, cc in pieces if b > 0.0 and a < 1.0]
    cuts = [x for a, b, _ in pieces for x in (a, b) if 0.0 < x < 1.0]
    q = p.split_at(cuts)
    segs = []
    for s in q.segments:
        mid = 0.5 * (s.domain[0] + s.domain[1])
        hit = [cc for a, b, cc in pieces if a <= mid <= b]
        segs.append(s.plus_poly(phi, hit[0]) if hit else s)
    return Profile(tuple(segs), p.base, p.target, p.max_derivative_order, p.source_domain)


def _dist(a: float, b: float, circle: bool) -> float:
    d = abs(a - b)
    return min(d, 1.0 - d) if circle else d


def morsify(p: Profile, keep=()) -> Profile:
    """Profile with only order-2 critical points, equal to ``p`` on the keep intervals.

    Each degenerate critical point gets a local polynomial perturbation that is
    flat to the profile's derivative order at the window ends.  Odd orders are
    removed; even orders become a single nondegenerate extremum of the same kind.
    """
    keep = _normalize_keep(keep, p)
    records = find_critical_points(p)
    circle = p.base is BaseSpace.CIRCLE
    for r in records:
        for a, b in keep:
            if a - 1e-12 <= r.base_position <= b + 1e-12:
                raise MorsifyError(f"keep interval [{a}, {b}] contains a critical point at {r.base_position}")
    degenerate = [r for r in records if r.order > 2]
    if not degenerate:
        return p
    k = p.max_derivative_order
    out = p
    for rec in degenerate:
        c = rec.base_position
        limits = [0.1]
        limits += [0.45 * _dist(c, o.base_position, circle) for o in records if o is not rec]
        for a, b in keep:
            if circle:
                gap = min(_dist(c, a, True), _dist(c, b, True))
            else:
                gap = min(abs(c - a), abs(c - b))
            limits.append(0.9 * gap)
        if not circle:
            limits += [0.9 * c, 0.9 * (1.0 - c)]
        radius = min(limits)
        if radius < 1e-3:
            raise MorsifyError(f"no room to regularize the critical point at {c}")
        n = rec.order
        even = n % 2 == 0
        phi = _flat_bump_poly(radius, k, even)
        lead = p.lift(c, n)
        sgn = 1.0 if lead > 0 else -1.0
        eps = 0.5 * abs(lead) / factorial(n) * radius ** (n - 2)
        for _ in range(80):
            trial = _add_window(out, c, radius, sgn * eps * phi)
            got = [x for x in find_critical_points(trial) if _dist(x.base_position, c, circle) < radius]
            if even and len(got) == 1 and got[0].order == 2 and got[0].extremal_kind is rec.extremal_kind:
                break
            if not even and not got:
                break
            eps *= 0.5
        else:
            raise MorsifyError(f"could not regularize the critical point at {c}")
        out = trial
    return out


# -- even-function factorization ----------------------------------------------------

def _source_eval(p: Profile, x):
    return p(p.from_source(x))


def _check_even(f: Profile, samples: int) -> float:
    a, b = f.source_domain
    if abs(a + b) > 1e-12 * max(1.0, abs(b)):
        raise NotEvenError(f"domain [{a}, {b}] is not symmetric about 0")
    x = np.linspace(0.0, b, max(samples, 2))
    fp, fm = _source_eval(f, x), _source_eval(f, -x)
    err = float(np.max(np.abs(fp - fm)))
    if err > 1e-12 * max(1.0, float(np.max(np.abs(fp)))):
        raise NotEvenError(f"function is not even (asymmetry {err:.3e})")
    return b


def whitney_factor(f_even: Profile, samples: int = 100) -> Profile:
    """``alpha`` on ``[0, eps^2]`` with ``alpha(x^2) = f_even(x)``."""
    eps = _check_even(f_even, samples)
    t1 = eps * eps
    segs = f_even.segments
    if len(segs) == 1 and not segs[0].trig:
        # exact: collect even powers of x around x = 0
        s0 = float(f_even.from_source(0.0))
        seg = segs[0].recentered(s0)
        scale_x = 1.0 / f_even.source_length
        cx = [c * scale_x**j for j, c in enumerate(seg.poly)]
        odd = max((abs(c) for c in cx[1::2]), default=0.0)
        if odd > 1e-12 * max(1.0, max(abs(c) for c in cx)):
            raise NotEvenError("odd coefficients do not vanish")
        return Profile.polynomial(cx[0::2], domain=(0.0, t1))
    fun = lambda t: _source_eval(f_even, np.sqrt(np.clip(t, 0.0, None)))  # noqa: E731
    check_t = np.linspace(0.0, t1, 4 * max(samples, 50) + 1)
    ref = fun(check_t)
    tol = 1e-12 * max(1.0, float(np.max(np.abs(ref))))
    best = None
    for deg in (8, 12, 16, 20, 24, 32, 40):
        cheb = np.polynomial.Chebyshev.interpolate(fun, deg, domain=[0.0, t1])
        # power series in y = (t - t1/2) / (t1/2), rescaled to (t - t1/2)
        power = np.polynomial.chebyshev.cheb2poly(cheb.coef)
        half = 0.5 * t1
        coeffs = power / half ** np.arange(len(power))
        alpha = Profile.polynomial(coeffs, domain=(0.0, t1), center=half)
        err = float(np.max(np.abs(_source_eval(alpha, check_t) - ref)))
        if best is None or err < best[0]:
            best = (err, alpha)
        if err <= tol:
            break
    return best[1]


def whitney_smoothness_probe(f_even: Profile, levels: int = 5) -> np.ndarray:
    """First and second divided differences of ``t -> f(sqrt t)`` at 0 on halving steps.

    Row j holds ``(D1, D2)`` for step ``h = eps^2 / 2^(j+2)``.  For a smooth
    factor both columns converge; a non-smooth one blows up.
    """
    eps = f_even.source_domain[1]
    out = np.zeros((levels, 2))
    for j in range(levels):
        h = eps * eps / 2 ** (j + 2)
        v0, v1, v2 = (_source_eval(f_even, np.sqrt(x)) for x in (0.0, h, 2 * h))
        out[j] = ((v1 - v0) / h, (v2 - 2 * v1 + v0) / (h * h))
    return out


# -- equivalence ----------------------------------------------------------------------

class EquivalenceMode(str, Enum):
    RIGHT = "right"
    LEFT_RIGHT = "left_right"
    TOPOLOGICAL = "topological"


@dataclass
class EquivalenceResult:
    equivalent: bool
    mode: EquivalenceMode
    reason: str = ""
    beta: Profile | None = None
    ell: Profile | None = None
    orientation: int = 1
    ell_orientation: int = 1
    max_error: float | None = None

    def __bool__(self) -> bool:
        return self.equivalent

    def to_json(self) -> dict:
        d = {"equivalent": self.equivalent, "mode": self.mode.value, "reason": self.reason}
        if self.equivalent:
            d.update({"orientation": self.orientation, "ell_orientation": self.ell_orientation,
                      "max_error": self.max_error, "beta": self.beta.to_json(), "ell": self.ell.to_json()})
        return d


VERIFY_POINTS = 1000
VERIFY_TOL = 1e-8
WITNESS_NODES = 2000


def _hermite_profile(x: np.ndarray, y: np.ndarray, dy: np.ndarray | None, *, base=BaseSpace.INTERVAL,
                     target=TargetSpace.REAL, source=(0.0, 1.0), degree: int = 0) -> Profile:
    """Monotone C^1 piecewise cubic through (x, y), as a Profile.

    Exact slopes are used where finite and inside the Fritsch-Carlson
    monotonicity region; elsewhere the PCHIP slope estimate replaces them.
    ``x`` is given in normalized base coordinates; for a circle base it may
    span ``[x0, x0 + 1]`` and is folded back with the lift rule.
    """
    from scipy.interpolate import CubicHermiteSpline, PchipInterpolator

    slopes = PchipInterpolator(x, y).derivative()(x)
    if base is BaseSpace.CIRCLE:
        slopes[0] = slopes[-1] = 0.5 * (slopes[0] + slopes[-1])
    if dy is not None:
        secant = np.diff(y) / np.diff(x)
        ok = np.isfinite(dy)
        # Fritsch-Carlson: slope shares the sign of adjacent secants and is at most 3x their size
        left = np.append(secant[:1], secant)
        right = np.append(secant, secant[-1:])
        bound = 3.0 * np.minimum(np.abs(left), np.abs(right))
        ok &= (np.sign(dy) == np.sign(left)) | (dy == 0)
        ok &= (np.sign(dy) == np.sign(right)) | (dy == 0)
        ok &= np.abs(dy) <= bound
        slopes = np.where(ok, dy, slopes)
        if base is BaseSpace.CIRCLE and slopes[0] != slopes[-1]:
            slopes[0] = slopes[-1] = 0.5 * (slopes[0] + slopes[-1])
    spline = CubicHermiteSpline(x, y, slopes)
    segs = []
    for i in range(len(x) - 1):
        c = spline.c[:, i][::-1]  # ascending in (t - x_i)
        a, b, cen = float(x[i]), float(x[i + 1]), float(x[i])
        off = 0.0
        if base is BaseSpace.CIRCLE and a >= 1.0 - 1e-15:
            a, b, cen, off = a - 1.0, b - 1.0, cen - 1.0, -float(degree)
        elif base is BaseSpace.CIRCLE and b <= 0.0 + 1e-15:
            a, b, cen, off = a + 1.0, b + 1.0, cen + 1.0, float(degree)
        coeffs = list(c)
        coeffs[0] += off
        segs.append(Segment((a, b), coeffs, (), cen))
    segs.sort(key=lambda s: s.domain[0])
    segs[0] = Segment((0.0, segs[0].domain[1]), segs[0].poly, (), segs[0].center)
    segs[-1] = Segment((segs[-1].domain[0], 1.0), segs[-1].poly, (), segs[-1].center)
    return Profile(tuple(segs), base, target, 1, source)


def _level_profile(v: np.ndarray, w: np.ndarray, dw: np.ndarray | None, target: TargetSpace) -> Profile:
    """Profile for a map of levels given on the source interval [v0, v1]."""
    v0, v1 = float(v[0]), float(v[-1])
    L = v1 - v0
    return _hermite_profile((v - v0) / L, w, None if dw is None else dw * L, target=target, source=(v0, v1))


def _apply_level(ell: Profile, v):
    return ell.lift(ell.from_source(v))


def _invert_level(ell: Profile, y):
    return ell.to_source(invert_monotone(ell, y))


def _identity_level(v0: float, v1: float, shift: float, target: TargetSpace) -> Profile:
    return Profile.polynomial([v0 + shift, 1.0], domain=(v0, v1), center=v0, target=target, max_derivative_order=1)


@dataclass
class _Alignment:
    tq: np.ndarray          # breakpoints on q's lifted base
    tp: np.ndarray          # matched breakpoints on p's lifted base
    vq: np.ndarray
    vp: np.ndarray
    orientation: int


def _alignments(p: Profile, q: Profile, rp, rq, allow_reverse: bool):
    circle = p.base is BaseSpace.CIRCLE
    xp = [r.base_position for r in rp]
    xq = [r.base_position for r in rq]
    n = len(xp)
    orients = (1, -1) if allow_reverse else (1,)
    for o in orients:
        if not circle:
            tq = np.array([0.0] + xq + [1.0])
            tp = np.array([0.0] + xp + [1.0]) if o == 1 else np.array([1.0] + xp[::-1] + [0.0])
            order = list(range(n)) if o == 1 else list(range(n))[::-1]
            yield o, order, tq, tp
            continue
        if n == 0:
            yield o, [], np.array([0.0, 1.0]), None
            continue
        for shift in range(n):
            idx = [(shift + o * i) % n for i in range(n)]
            lift = [xp[idx[0]]]
            for j in idx[1:]:
                x = xp[j]
                while o * (x - lift[-1]) <= 0:
                    x += o
                lift.append(x)
            tq = np.array(xq + [xq[0] + 1.0])
            tp = np.array(lift + [lift[0] + o])
            yield o, idx, tq, tp


def _pattern_ok(vp: np.ndarray, vq: np.ndarray, e: int, tol_p: float, tol_q: float) -> bool:
    dp = vp[:, None] - vp[None, :]
    dq = vq[:, None] - vq[None, :]
    sp = np.where(np.abs(dp) <= tol_p, 0, np.sign(dp))
    sq = np.where(np.abs(dq) <= tol_q, 0, np.sign(dq))
    return bool(np.all(sq == e * sp))


def _lap_inverse(p: Profile, a: float, b: float, w):
    lo, hi = min(a, b), max(a, b)
    return invert_monotone(p, w, lo=lo, hi=hi)


def _build_beta_from_ell(p, q, tq, tp, ell, circle, o):
    """beta on each lap: p_lap^{-1}(ell^{-1}(q(t)))."""
    xs, ys, ds = [], [], []
    for i in range(len(tq) - 1):
        a, b = tq[i], tq[i + 1]
        m = max(8, int(np.ceil(WITNESS_NODES * (b - a))))
        t = np.linspace(a, b, m + 1)
        w = _invert_level(ell, q.lift(t))
        lo, hi = sorted((p.lift(tp[i]), p.lift(tp[i + 1])))
        w = np.clip(w, lo, hi)
        beta = _lap_inverse(p, tp[i], tp[i + 1], w)
        beta[0], beta[-1] = tp[i], tp[i + 1]
        with np.errstate(divide="ignore", invalid="ignore"):
            dl = ell.lift(ell.from_source(w), 1) / ell.source_length
            d = q.lift(t, 1) / (dl * p.lift(beta, 1))
        sl = slice(0, None) if i == 0 else slice(1, None)
        xs.append(t[sl]), ys.append(beta[sl]), ds.append(d[sl])
    x, y, d = np.concatenate(xs), np.concatenate(ys), np.concatenate(ds)
    return _fold_beta(x, y, d, circle, o)


def _fold_beta(x, y, d, circle, o):
    if d is None:
        d = np.full(len(x), np.nan)
    if not circle:
        return _hermite_profile(x, y, d)
    # shift so the lifted domain starts in [0, 1) and contains the knot 1.0
    k = np.floor(x[0])
    x, y = x - k, y - k * o
    if not np.any(np.abs(x - 1.0) < 1e-15) and x[0] > 0.0:
        j = np.searchsorted(x, 1.0)
        xi = np.array([1.0])
        yi = np.interp(xi, x, y)
        x, y = np.insert(x, j, xi), np.insert(y, j, yi)
        d = np.insert(d, j, np.nan)
    return _hermite_profile(x, y, d, base=BaseSpace.CIRCLE, target=TargetSpace.CIRCLE, degree=o)


def _build_ell_from_beta(p, q, tq, tp, beta, circle, target):
    """ell on p's level range: q(beta^{-1}(p_lap^{-1}(v))) on the first lap covering v."""
    vp = p.lift(tp)
    v0, v1 = float(np.min(vp)), float(np.max(vp))
    v = np.linspace(v0, v1, WITNESS_NODES + 1)
    w = np.full_like(v, np.nan)
    dw = np.full_like(v, np.nan)
    for i in range(len(tp) - 1):
        lo, hi = sorted((p.lift(tp[i]), p.lift(tp[i + 1])))
        m = np.isnan(w) & (v >= lo - 1e-15) & (v <= hi + 1e-15)
        if not np.any(m) or hi - lo <= 0:
            continue
        s = _lap_inverse(p, tp[i], tp[i + 1], np.clip(v[m], lo, hi))
        t = _beta_inverse(beta, s, tq[i], tq[i + 1], circle)
        w[m] = q.lift(t)
        with np.errstate(divide="ignore", invalid="ignore"):
            dw[m] = q.lift(t, 1) / (beta.lift(t, 1) * p.lift(s, 1))
    if np.any(np.isnan(w)):
        return None
    step = np.sign(np.diff(w))
    if np.any(step == 0) or np.any(step != step[0]):
        return None
    return _level_profile(v, w, dw, target)


def _beta_inverse(beta: Profile, s, a, b, circle):
    lo, hi = min(a, b), max(a, b)
    return invert_monotone(beta, s, lo=lo, hi=hi)


def _verify(p, q, beta, ell, t0: float) -> float:
    t = t0 + (np.arange(VERIFY_POINTS) + 0.5) / VERIFY_POINTS
    lhs = q.lift(t)
    rhs = _apply_level(ell, p.lift(beta.lift(t)))
    if q.target is TargetSpace.CIRCLE:
        diff = np.mod(lhs - rhs + 0.5, 1.0) - 0.5
    else:
        diff = lhs - rhs
    return float(np.max(np.abs(diff)))


def profiles_equivalent(p: Profile, q: Profile, mode=EquivalenceMode.RIGHT, surface: Surface | None = None
                        ) -> EquivalenceResult:
    """Decide whether ``q = ell o p o beta`` with explicit, verified witnesses.

    Right mode fixes ``ell`` to the identity.  A positive answer is returned
    only after the witnesses reproduce ``q`` at sample points; a negative
    answer names the first invariant that differs.
    """
    mode = EquivalenceMode(mode)
    res = lambda ok, why, **kw: EquivalenceResult(ok, mode, why, **kw)  # noqa: E731
    if p.base is not q.base:
        return res(False, "base spaces differ")
    if p.target is not q.target:
        return res(False, "target spaces differ")
    circle = p.base is BaseSpace.CIRCLE
    rp, rq = find_critical_points(p), find_critical_points(q)
    if len(rp) != len(rq):
        return res(False, f"number of critical points differs ({len(rp)} vs {len(rq)})")
    allow_reverse = not (surface is not None and surface.kind is SurfaceKind.DISK)
    ell_orients = (1,) if mode is EquivalenceMode.RIGHT else (1, -1)
    tol_p = 1e-9 * max(1.0, p.scale)
    tol_q = 1e-9 * max(1.0, q.scale)
    reasons = []
    for o, idx, tq, tp in _alignments(p, q, rp, rq, allow_reverse):
        for e in ell_orients:
            if circle and p.target is TargetSpace.CIRCLE and q.degree != e * o * p.degree:
                reasons.append("degree differs")
                continue
            why = _match_records([rp[i] for i in idx], rq, mode, e)
            if why:
                reasons.append(why)
                continue
            if tp is None:  # circle base without critical points
                tp = _anchor(p, q, mode)
                tp = np.array([tp, tp + o])
            vp, vq = p.lift(tp), q.lift(tq)
            if mode is EquivalenceMode.RIGHT:
                shift = vq - vp
                if p.target is TargetSpace.CIRCLE:
                    shift = shift - np.round(shift[0])
                if np.max(np.abs(shift)) > tol_q:
                    reasons.append("critical levels differ")
                    continue
            elif not _pattern_ok(vp, vq, e, tol_p, tol_q):
                reasons.append("level order pattern differs")
                continue
            for beta, ell in _witnesses(p, q, tq, tp, vp, vq, mode, circle, o):
                if beta is None:
                    continue
                err = _verify(p, q, beta, ell, float(tq[0]))
                if err <= VERIFY_TOL * max(1.0, float(np.ptp(vq))):
                    return res(True, "witnesses verified", beta=beta, ell=ell, orientation=o,
                               ell_orientation=e, max_error=err)
                reasons.append(f"witness verification failed (error {err:.2e})")
    return res(False, reasons[0] if reasons else "no admissible matching of critical points")


def _anchor(p: Profile, q: Profile, mode: EquivalenceMode) -> float:
    if mode is not EquivalenceMode.RIGHT:
        return 0.0
    # solve p(s) = q(0) mod 1 for the anchor of a monotone circle profile
    target = q.lift(0.0)
    p0 = p.lift(0.0)
    lo, hi = sorted((p0, p0 + p.degree))
    y = lo + np.mod(target - lo, hi - lo)
    return float(invert_monotone(p, np.array([y]))[0])


def _match_records(rp, rq, mode, e) -> str:
    for i, (a, b) in enumerate(zip(rp, rq)):
        if a.extremal != b.extremal:
            return f"critical point {i}: extremal vs non-extremal"
        if a.extremal:
            want = a.extremal_kind if e == 1 else (
                ExtremalKind.MIN if a.extremal_kind is ExtremalKind.MAX else ExtremalKind.MAX)
            if b.extremal_kind is not want:
                return f"critical point {i}: extremal kinds differ"
        if mode is not EquivalenceMode.TOPOLOGICAL and a.order != b.order:
            return f"critical point {i}: vanishing orders differ ({a.order} vs {b.order})"
    return ""


def _witnesses(p, q, tq, tp, vp, vq, mode, circle, o):
    target = q.target
    if mode is not EquivalenceMode.RIGHT:
        # beta first: monotone interpolation of the matched breakpoints
        if np.allclose(tq, tp, atol=1e-12, rtol=0):
            beta = Profile.identity(base=p.base, target=TargetSpace.CIRCLE if circle else TargetSpace.REAL,
                                    max_derivative_order=1)
        else:
            beta = _fold_beta(tq, tp, None, circle, o) if len(tq) > 2 else \
                _fold_beta(np.linspace(tq[0], tq[-1], 3), np.linspace(tp[0], tp[-1], 3), None, circle, o)
        ell = _build_ell_from_beta(p, q, tq, tp, beta, circle, target)
        if ell is not None:
            yield beta, ell
    if mode is EquivalenceMode.RIGHT:
        v0, v1 = float(np.min(vp)), float(np.max(vp))
        shift = float(vq[0] - vp[0])
        ell = _identity_level(v0, v1, shift, target)
    else:
        order = np.argsort(vp)
        v, w = vp[order], vq[order]
        keep = np.append(np.diff(v) > 1e-12 * max(1.0, p.scale), True)
        v, w = v[keep], w[keep]
        if len(v) < 2:
            return
        ell = _level_profile(v, w, None, target)
    if np.allclose(tq, tp, atol=1e-12, rtol=0) and mode is EquivalenceMode.RIGHT and _same(p, q):
        yield Profile.identity(base=p.base, target=TargetSpace.CIRCLE if circle else TargetSpace.REAL,
                               max_derivative_order=1), ell
    yield _build_beta_from_ell(p, q, tq, tp, ell, circle, o), ell


def _same(p: Profile, q: Profile) -> bool:
    t = np.linspace(0.0, 1.0, 257)
    return bool(np.max(np.abs(p.lift(t) - q.lift(t))) <= 1e-12 * max(1.0, p.scale))
