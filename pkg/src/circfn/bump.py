"""Smooth steps and fiber-constant bump functions built from exp(-1/x)."""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

Interval = tuple[float, float]


def _e(x: np.ndarray, order: int = 0) -> np.ndarray:
    # exp(-1/x) for x > 0, zero otherwise, with its first two derivatives.
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    xp = x[pos]
    ex = np.exp(-1.0 / xp)
    if order == 0:
        out[pos] = ex
    elif order == 1:
        out[pos] = ex / xp**2
    elif order == 2:
        out[pos] = ex * (1.0 / xp**4 - 2.0 / xp**3)
    else:
        raise ValueError("only derivatives up to order 2 are coded")
    return out


def smoothstep(x, order: int = 0):
    """C-infinity step: 0 for x <= 0, 1 for x >= 1, strictly monotone between.

    ``order`` selects the value (0) or the first (1) / second (2) derivative.
    """
    x = np.asarray(x, dtype=float)
    a, b = _e(x), _e(1.0 - x)
    s = a + b
    if order == 0:
        out = np.where(x >= 1.0, 1.0, np.where(x <= 0.0, 0.0, a / np.where(s > 0, s, 1.0)))
        return out
    a1, c = _e(x, 1), _e(1.0 - x, 1)
    inside = (x > 0) & (x < 1)
    s_safe = np.where(inside, s, 1.0)
    num = a1 * b + a * c
    if order == 1:
        return np.where(inside, num / s_safe**2, 0.0)
    if order == 2:
        a2, c2 = _e(x, 2), _e(1.0 - x, 2)
        dnum = a2 * b - a * c2
        dden = 2.0 * s * (a1 - c)
        return np.where(inside, (dnum * s_safe**2 - num * dden) / s_safe**4, 0.0)
    raise ValueError("only derivatives up to order 2 are coded")


class Polarity(str, Enum):
    ONE_INSIDE = "one_inside_zero_outside"
    ZERO_INSIDE = "zero_inside_one_outside"


def _merge(intervals) -> list[Interval]:
    iv = sorted((float(a), float(b)) for a, b in intervals)
    out: list[list[float]] = []
    for a, b in iv:
        if b < a:
            raise ValueError(f"empty interval [{a}, {b}]")
        if out and a <= out[-1][1]:
            out[-1][1] = max(out[-1][1], b)
        else:
            out.append([a, b])
    return [(a, b) for a, b in out]


@dataclass(frozen=True)
class BumpFunction:
    """Bump on the base: equal to 1 on the plateau and 0 off the support.

    Windows are unions of base intervals.  On a circle base (``periodic``)
    intervals may be written in lifted form, e.g. ``(0.9, 1.1)``.  A support
    interval that reaches a base endpoint together with its plateau carries no
    ramp on that side.
    """

    support: tuple[Interval, ...]
    plateau: tuple[Interval, ...]
    polarity: Polarity = Polarity.ONE_INSIDE
    periodic: bool = False

    def __post_init__(self):
        sup = tuple(_merge(self.support))
        pla = tuple(_merge(self.plateau))
        for v0, v1 in pla:
            if not any(u0 <= v0 and v1 <= u1 for u0, u1 in sup):
                raise ValueError(f"plateau [{v0}, {v1}] is not inside the support")
        object.__setattr__(self, "support", sup)
        object.__setattr__(self, "plateau", pla)
        object.__setattr__(self, "polarity", Polarity(self.polarity))

    def _pieces(self):
        for u0, u1 in self.support:
            inner = [(a, b) for a, b in self.plateau if u0 <= a and b <= u1]
            if inner:
                v0, v1 = min(a for a, _ in inner), max(b for _, b in inner)
            else:
                # degenerate: bump without a plateau peaks at the midpoint
                v0 = v1 = 0.5 * (u0 + u1)
            yield u0, v0, v1, u1

    def _one_inside(self, b: np.ndarray, order: int) -> np.ndarray:
        out = np.zeros_like(b)
        shifts = (-1.0, 0.0, 1.0) if self.periodic else (0.0,)
        for u0, v0, v1, u1 in self._pieces():
            for k in shifts:
                x = b + k
                open_left = v0 <= u0
                open_right = v1 >= u1
                inside = ((x >= u0) if open_left else (x > u0)) & ((x <= u1) if open_right else (x < u1))
                if not np.any(inside):
                    continue
                if open_left:
                    lv, l1, l2 = np.ones_like(x), np.zeros_like(x), np.zeros_like(x)
                else:
                    w = v0 - u0
                    t = (x - u0) / w
                    lv, l1, l2 = smoothstep(t), smoothstep(t, 1) / w, smoothstep(t, 2) / w**2
                if open_right:
                    rv, r1, r2 = np.ones_like(x), np.zeros_like(x), np.zeros_like(x)
                else:
                    w = u1 - v1
                    t = (u1 - x) / w
                    rv, r1, r2 = smoothstep(t), -smoothstep(t, 1) / w, smoothstep(t, 2) / w**2
                if order == 0:
                    val = lv * rv
                elif order == 1:
                    val = l1 * rv + lv * r1
                else:
                    val = l2 * rv + 2 * l1 * r1 + lv * r2
                out = np.where(inside, val, out)
        return out

    def __call__(self, b, order: int = 0):
        b = np.asarray(b, dtype=float)
        scalar = b.ndim == 0
        b = np.atleast_1d(b)
        if self.periodic:
            b = np.mod(b, 1.0)
        val = self._one_inside(b, order)
        if self.polarity is Polarity.ZERO_INSIDE:
            val = (1.0 - val) if order == 0 else -val
        return float(val[0]) if scalar else val

    def to_json(self) -> dict:
        return {
            "support": [list(iv) for iv in self.support],
            "plateau": [list(iv) for iv in self.plateau],
            "polarity": self.polarity.value,
            "periodic": self.periodic,
        }

    @classmethod
    def from_json(cls, d: dict) -> "BumpFunction":
        return cls(
            support=tuple(tuple(iv) for iv in d["support"]),
            plateau=tuple(tuple(iv) for iv in d["plateau"]),
            polarity=Polarity(d.get("polarity", Polarity.ONE_INSIDE.value)),
            periodic=bool(d.get("periodic", False)),
        )
