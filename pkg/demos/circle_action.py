"""The period-1 circle action induced by the H-field of a sphere normal form.

Run: python3 demos/circle_action.py
"""
from __future__ import annotations

import numpy as np

from circfn import (build_h_field, circle_action, default_collar_radii, evaluate_on_surface, integrate_flow,
                    normalize_period)
from circfn.corpus import generate
from circfn.model import PolarPoint, surface_point


def flow(N, surface, z, b, s):
    z1, b1 = np.empty_like(z), np.empty_like(b)
    for mask, pt in surface_point(surface, z, b):
        q = integrate_flow(N, pt, s)
        z1[mask], b1[mask] = q.to_band() if isinstance(q, PolarPoint) else q
    return z1, b1


if __name__ == "__main__":
    m = next(m for m in generate("sphere", 20, seed=7) if len(m.positions) >= 2)
    nf = m.nf
    N = normalize_period(build_h_field(nf, *default_collar_radii(nf)))
    psi = circle_action(N)
    print(f"critical circles at {np.round(m.positions, 4).tolist()} with orders {m.orders}")
    print(f"fixed points: {[p.pole.value for p in psi.fixed_points()]} (Euler characteristic 2)")
    rng = np.random.default_rng(0)
    z = rng.random(6)
    b = np.array([0.01, 0.05, 0.3, 0.6, 0.95, 0.99])   # first two and last two sit in polar charts
    f0 = evaluate_on_surface(nf, z, b)
    for s in (0.25, 0.5, 1.0):
        zs, bs = flow(N, nf.surface, z, b, s)
        level = np.max(np.abs(evaluate_on_surface(nf, zs, bs) - f0))
        turn = np.max(np.abs((zs - z - s * N.constant_speed + 0.5) % 1.0 - 0.5))
        print(f"s = {s:4}: fiber angle moved by s (error {turn:.1e}), level change {level:.1e}")
