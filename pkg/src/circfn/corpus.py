"""Seeded random corpus of valid normal forms.

Interval-base profiles are built from a prescribed derivative
``c * prod (s - t_i)^m_i`` so the critical points and their orders are known
by construction; torus profiles use ``c * prod sin(pi (x - t_i))^m_i``
expanded into a finite trigonometric sum.  The seed comes from the
``CIRCFN_SEED`` environment variable unless given explicitly.
"""
from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as npoly

from .analysis import validate_profile
from .model import (BaseReparam, DiffeoChain, FiberRotation, FiberShift, NormalForm, Surface, SurfaceKind)
from .profiles import BaseSpace, Profile, Segment, TargetSpace

MIN_SEPARATION = 0.15
END_MARGIN = 0.1
MAX_TOTAL_MULTIPLICITY = 6
SURFACE_SALT = {SurfaceKind.CYLINDER: 11, SurfaceKind.TORUS: 23, SurfaceKind.DISK: 37, SurfaceKind.SPHERE: 51}


def default_seed() -> int:
    return int(os.environ.get("CIRCFN_SEED", "0"))


@dataclass(frozen=True)
class CorpusMember:
    nf: NormalForm
    positions: tuple[float, ...]     # critical points in model coordinates
    orders: tuple[int, ...]


def _positions(rng, k: int, lo: float, hi: float, circle: bool) -> list[float] | None:
    for _ in range(200):
        xs = np.sort(rng.uniform(lo, hi, k))
        gaps = np.diff(xs)
        if circle and k > 1:
            gaps = np.append(gaps, xs[0] + 1.0 - xs[-1])
        if k < 2 or np.min(gaps) >= MIN_SEPARATION:
            return [float(x) for x in xs]
    return None


def _multiplicities(rng, k: int, even_total: bool) -> list[int] | None:
    for _ in range(100):
        m = [int(x) for x in rng.choice([1, 1, 1, 2, 2, 3, 4, 5], size=k)]
        if sum(m) <= MAX_TOTAL_MULTIPLICITY and (not even_total or sum(m) % 2 == 0):
            return m
    return None


def _well_conditioned(p: Profile, positions, circle: bool) -> bool:
    """Slope minima away from the critical points, and the end slopes, are not tiny.

    Near-critical dips of the slope would be indistinguishable from genuine
    odd-order circles on a finite grid.
    """
    s = np.linspace(0.0, 1.0, 4001)
    d = np.abs(p.lift(s, 1))
    floor = 0.05 * max(float(np.max(d)), 1e-300)
    if not circle and min(d[0], d[-1]) < floor:
        return False
    far = np.ones_like(s, dtype=bool)
    for t in positions:
        dist = np.abs(s - t)
        if circle:
            dist = np.minimum(dist, 1.0 - dist)
        far &= dist > 0.04
    dips = np.zeros_like(far)
    dips[1:-1] = (d[1:-1] <= d[:-2]) & (d[1:-1] <= d[2:])
    dips &= far
    return not np.any(d[dips] < floor)


def _interval_profile(rng) -> tuple[Profile, list[float], list[int]] | None:
    k = int(rng.choice([0, 1, 1, 2, 2, 3]))
    xs = _positions(rng, k, END_MARGIN, 1.0 - END_MARGIN, False)
    ms = _multiplicities(rng, k, False)
    if xs is None or ms is None:
        return None
    dp = np.array([1.0])
    for x, m in zip(xs, ms):
        dp = npoly.polymul(dp, npoly.polypow([0.5 - x, 1.0], m))  # (u - (x - 1/2))^m, u = s - 1/2
    u = np.linspace(-0.5, 0.5, 2001)
    dp = dp / np.max(np.abs(npoly.polyval(u, dp)))
    dp = dp * rng.uniform(0.5, 3.0) * rng.choice([-1.0, 1.0])
    coeffs = npoly.polyint(dp)
    coeffs[0] = rng.uniform(-1.0, 1.0)
    source = [(0.0, 1.0), (-1.0, 1.0), (0.0, 2.0), (-0.5, 0.5)][int(rng.integers(4))]
    seg = Segment((0.0, 1.0), tuple(coeffs), (), 0.5)
    p = Profile((seg,), BaseSpace.INTERVAL, TargetSpace.REAL, 8, source)
    if rng.random() < 0.3:
        p = p.split_at(rng.uniform(0.05, 0.95, int(rng.integers(1, 3))))
    return p, xs, [m + 1 for m in ms]


def _sine_product(xs, ms, c: float):
    """Trig terms of ``c * prod sin(pi (x - t_i))^m_i`` as (constant, [(p, q, w)])."""
    coef = {0: complex(c)}
    for t, m in zip(xs, ms):
        for _ in range(m):
            nxt: dict[int, complex] = {}
            a, b = np.exp(-1j * np.pi * t) / 2j, -np.exp(1j * np.pi * t) / 2j
            for k, v in coef.items():
                nxt[k + 1] = nxt.get(k + 1, 0) + v * a
                nxt[k - 1] = nxt.get(k - 1, 0) + v * b
            coef = nxt
    const = coef.get(0, 0).real
    terms = []
    for k in sorted(x for x in coef if x > 0):
        v = coef[k]
        terms.append((2 * v.real, -2 * v.imag, np.pi * k))
    return const, terms


def _torus_profile(rng) -> tuple[Profile, list[float], list[int]] | None:
    k = int(rng.choice([0, 1, 2, 2, 3, 4]))
    if k == 0:
        d = int(rng.choice([-2, -1, 1, 2]))
        eps = rng.uniform(0.0, 0.4) * abs(d) / (2 * np.pi)
        seg = Segment((0.0, 1.0), (rng.uniform(0, 1), float(d)), ((0.0, eps, 2 * np.pi),), 0.0)
        return Profile((seg,), BaseSpace.CIRCLE, TargetSpace.CIRCLE, 8), [], []
    xs = _positions(rng, k, 0.0, 1.0, True)
    ms = _multiplicities(rng, k, True)
    if xs is None or ms is None:
        return None
    const, terms = _sine_product(xs, ms, 1.0)
    big = max([abs(const)] + [max(abs(p), abs(q)) for p, q, _ in terms])
    if abs(const) > 1e-3 * big:
        d = float(rng.choice([-1, 1]))
        c = d / const
        target = TargetSpace.CIRCLE
    else:
        # zero-mean derivative: real-valued profile
        c = rng.uniform(0.5, 3.0) * rng.choice([-1.0, 1.0]) / big
        const = 0.0
        target = TargetSpace.REAL
    trig = [(-q * c / w, p * c / w, w) for p, q, w in terms]
    seg = Segment((0.0, 1.0), (rng.uniform(0, 1), const * c), tuple(trig), 0.0)
    p = Profile((seg,), BaseSpace.CIRCLE, target, 8)
    return p, xs, [m + 1 for m in ms]


def _zero_mean_torus(rng) -> tuple[Profile, list[float], list[int]] | None:
    """Real-target torus profile: move the last root until the derivative has zero mean."""
    k = int(rng.choice([2, 2, 3, 4]))
    xs = _positions(rng, k, 0.0, 1.0, True)
    ms = _multiplicities(rng, k, True)
    if xs is None or ms is None:
        return None
    lo_lim = xs[-2] + MIN_SEPARATION
    hi_lim = xs[0] + 1.0 - MIN_SEPARATION
    if hi_lim <= lo_lim:
        return None
    grid = np.linspace(lo_lim, hi_lim, 41)
    mean = np.array([_sine_product(xs[:-1] + [t], ms, 1.0)[0] for t in grid])
    idx = np.nonzero(np.sign(mean[:-1]) * np.sign(mean[1:]) <= 0)[0]
    if not len(idx):
        return None
    a, b = grid[idx[0]], grid[idx[0] + 1]
    fa = mean[idx[0]]
    for _ in range(60):
        m = 0.5 * (a + b)
        fm = _sine_product(xs[:-1] + [m], ms, 1.0)[0]
        if np.sign(fm) == np.sign(fa):
            a, fa = m, fm
        else:
            b = m
    xs = xs[:-1] + [float(0.5 * (a + b)) % 1.0]
    order = np.argsort(xs)
    xs, ms = [xs[i] for i in order], [ms[i] for i in order]
    const, terms = _sine_product(xs, ms, 1.0)
    big = max(max(abs(p), abs(q)) for p, q, _ in terms)
    c = rng.uniform(0.5, 3.0) * rng.choice([-1.0, 1.0]) / big
    trig = [(-q * c / w, p * c / w, w) for p, q, w in terms]
    seg = Segment((0.0, 1.0), (rng.uniform(0, 1),), tuple(trig), 0.0)
    return Profile((seg,), BaseSpace.CIRCLE, TargetSpace.REAL, 8), xs, [m + 1 for m in ms]


def random_chain(rng, surface: Surface, length: int | None = None) -> DiffeoChain:
    """Chain of up to five elementary diffeomorphisms mixing all three variants."""
    if length is None:
        length = int(rng.integers(0, 6))
    circle = surface.base is BaseSpace.CIRCLE
    els = []
    kinds = ["shift", "reparam", "rotation"]
    for i in range(length):
        kind = kinds[i] if i < 3 else kinds[int(rng.integers(3))]
        if kind == "rotation":
            els.append(FiberRotation(float(rng.uniform(0, 1))))
        elif kind == "shift":
            if circle:
                a, b = rng.uniform(-0.5, 0.5, 2)
                tau = Profile((Segment((0.0, 1.0), (float(rng.uniform(0, 1)),),
                                       ((float(a), float(b), 2 * np.pi),)),), BaseSpace.CIRCLE)
            else:
                tau = Profile.polynomial(rng.uniform(-1.0, 1.0, int(rng.integers(1, 4))))
            els.append(FiberShift(tau))
        else:
            a = float(rng.uniform(-0.5, 0.5))
            flip = surface.kind in (SurfaceKind.CYLINDER, SurfaceKind.SPHERE, SurfaceKind.TORUS) and rng.random() < 0.3
            o = -1 if flip else 1
            if circle:
                shift = float(rng.uniform(0, 1))
                seg = Segment((0.0, 1.0), (shift, float(o)), ((0.0, a / (2 * np.pi), 2 * np.pi),))
                beta = Profile((seg,), BaseSpace.CIRCLE, TargetSpace.CIRCLE)
            else:
                # s + a s (1 - s), or its mirror image
                coeffs = [0.0, 1.0 + a, -a] if o == 1 else [1.0, -(1.0 + a), a]
                beta = Profile.polynomial(coeffs)
            els.append(BaseReparam(beta, o))
    order = rng.permutation(len(els))
    return DiffeoChain(tuple(els[i] for i in order))


def generate(kind, n: int = 100, seed: int | None = None, with_diffeo: bool = True) -> list[CorpusMember]:
    """``n`` valid normal forms on one surface, deterministic in (kind, n, seed)."""
    kind = SurfaceKind(kind)
    seed = default_seed() if seed is None else seed
    rng = np.random.default_rng([seed, SURFACE_SALT[kind]])
    out: list[CorpusMember] = []
    while len(out) < n:
        if kind is SurfaceKind.TORUS:
            built = _zero_mean_torus(rng) if rng.random() < 0.4 else _torus_profile(rng)
        else:
            built = _interval_profile(rng)
        if built is None:
            continue
        p, xs, orders = built
        circle = p.base is BaseSpace.CIRCLE
        if not _well_conditioned(p, xs, circle):
            continue
        surface = Surface.of(kind, p.target)
        if not validate_profile(p, surface).valid:
            continue
        want = sorted(zip(xs, orders))
        chain = random_chain(rng, surface) if with_diffeo else DiffeoChain()
        out.append(CorpusMember(NormalForm(surface, p, chain), tuple(x for x, _ in want),
                                tuple(o for _, o in want)))
    return out


def full_corpus(n: int = 100, seed: int | None = None, with_diffeo: bool = True) -> dict[SurfaceKind, list[CorpusMember]]:
    return {k: generate(k, n, seed, with_diffeo) for k in SurfaceKind}
