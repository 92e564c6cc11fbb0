"""Hamiltonian and H-fields for the profiles t^2 and t^3 on the cylinder.

Run: python3 demos/worked_examples.py
"""
from __future__ import annotations

import numpy as np

from circfn import (NormalForm, Profile, Surface, build_h_field, decompose, default_collar_radii,
                    find_critical_points, hamiltonian_field, normalize_period)


def show(name: str, coeffs) -> None:
    p = Profile.polynomial(coeffs, domain=(-1.0, 1.0))
    nf = NormalForm(Surface.of("cylinder"), p)
    t = np.array([-0.5, 0.0, 0.5])
    X = hamiltonian_field(nf)
    print(f"{name}: critical circles {[(r.base_position, r.order, r.extremal_kind.value) for r in find_critical_points(p)]}")
    print(f"  Hamiltonian coefficient at t = {t.tolist()}: {X.speed((t + 1) / 2).tolist()}")
    F = build_h_field(nf, *default_collar_radii(nf))
    g = F.speed(np.linspace(0, 1, 10_001))
    print(f"  H-field: min |g| = {np.min(np.abs(g)):.3f}, one-signed = {len(set(np.sign(g))) == 1}")
    print(f"  normalized speed: {normalize_period(F).constant_speed:+.0f}")
    for piece in decompose(nf):
        print(f"  piece {piece.index}: {piece.kind.value} over {piece.base_interval}")


if __name__ == "__main__":
    show("t^2", [0, 0, 1.0])
    show("t^3", [0, 0, 0, 1.0])
