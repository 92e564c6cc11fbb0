"""Independent grid oracle.

Samples a normal form on a fiber x base grid and locates critical circles
from the sampled values alone, with no access to the profile.  Used to
cross-check the analytic critical-point records.
"""
from __future__ import annotations

import io
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import AmbiguousLociError, UsageError
from .model import (CriticalCircleRecord, NormalForm, PolarPoint, Pole, Surface, SurfaceKind,
                    evaluate_normal_form)
from .profiles import BaseSpace, TargetSpace

MIN_RESOLUTION = 16
POLAR_SWITCH = 0.075     # cells closer than this to a pole are sampled in the polar chart
CLUSTER_GAP = 3          # candidate cells closer than this form one locus
MAX_CLUSTER = 8          # wider clusters mean the grid cannot separate the circles


@dataclass
class GridSample:
    surface: Surface
    resolution: tuple[int, int]          # (n_fiber, n_base)
    values: np.ndarray                   # shape (n_base, n_fiber)
    chart_tag: np.ndarray                # shape (n_base,), "band" or "polar"

    @property
    def base_centers(self) -> np.ndarray:
        n = self.resolution[1]
        return (np.arange(n) + 0.5) / n

    @property
    def fiber_centers(self) -> np.ndarray:
        n = self.resolution[0]
        return (np.arange(n) + 0.5) / n

    @property
    def spacing(self) -> float:
        return 1.0 / self.resolution[1]

    def header(self) -> dict:
        return {"surface": self.surface.kind.value, "target": self.surface.target.value,
                "resolution": list(self.resolution)}

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("# " + json.dumps(self.header()) + "\n")
        for j, b in enumerate(self.base_centers):
            row = ",".join(repr(float(v)) for v in self.values[j])
            buf.write(f"{repr(float(b))},{self.chart_tag[j]},{row}\n")
        return buf.getvalue()


def _chart_tags(surface: Surface, b: np.ndarray) -> np.ndarray:
    tags = np.full(b.shape, "band", dtype=object)
    if surface.kind in (SurfaceKind.DISK, SurfaceKind.SPHERE):
        tags[b < POLAR_SWITCH] = "polar"
    if surface.kind is SurfaceKind.SPHERE:
        tags[b > 1.0 - POLAR_SWITCH] = "polar"
    return tags


def sample_grid(nf: NormalForm, resolution, min_resolution: int = MIN_RESOLUTION) -> GridSample:
    """Values of ``nf`` at the cell centers of an ``n_fiber x n_base`` grid."""
    if np.isscalar(resolution):
        resolution = (int(resolution), int(resolution))
    n_fiber, n_base = (int(r) for r in resolution)
    if min(n_fiber, n_base) < min_resolution:
        raise UsageError(f"resolution must be at least {min_resolution} in each direction")
    s = nf.surface
    b = (np.arange(n_base) + 0.5) / n_base
    z = (np.arange(n_fiber) + 0.5) / n_fiber
    Z, B = np.meshgrid(z, b)
    tags = _chart_tags(s, b)
    values = np.empty(Z.shape)
    band = tags == "band"
    if np.any(band):
        values[band] = evaluate_normal_form(nf, (Z[band], B[band]))
    for pole, sel in ((Pole.CENTER if s.kind is SurfaceKind.DISK else Pole.SOUTH, b < 0.5),
                      (Pole.NORTH, b >= 0.5)):
        rows = (tags == "polar") & sel
        if not np.any(rows):
            continue
        pp = PolarPoint.from_band(Z[rows], B[rows], pole)
        values[rows] = evaluate_normal_form(nf, pp)
    if s.target is TargetSpace.CIRCLE:
        values = np.mod(values, 1.0)
    return GridSample(s, (n_fiber, n_base), values, tags)


@dataclass(frozen=True)
class Locus:
    position: float
    parity: str          # "even" (extremal) or "odd"

    def to_json(self) -> dict:
        return {"position": self.position, "parity": self.parity}


def _wrap(x):
    return (x + 0.5) % 1.0 - 0.5


def _fiber_average(g: GridSample) -> np.ndarray:
    v = g.values
    if g.surface.target is TargetSpace.CIRCLE:
        v = v - np.round(v - v[:, :1])
    return v.mean(axis=1)


def extract_critical_loci(g: GridSample) -> list[Locus]:
    """Critical circles seen in the base differences of the fiber-averaged values."""
    m = _fiber_average(g)
    n = len(m)
    circle_base = g.surface.base is BaseSpace.CIRCLE
    circle_target = g.surface.target is TargetSpace.CIRCLE
    if circle_base:
        d = np.append(np.diff(m), m[0] - m[-1])
    else:
        d = np.diff(m)
    if circle_target:
        d = _wrap(d)
    # d[j] lives at the midpoint between cells j and j+1
    mid = (np.arange(len(d)) + 1.0) / n
    h = 1.0 / n
    amp = max(float(np.ptp(m)), 1e-300) if not circle_target else max(float(np.max(np.abs(d))) * n, 1e-300)
    thr = 10.0 * h * h * max(1.0, amp)
    k = len(d)
    nxt = lambda j: (j + 1) % k if circle_base else j + 1  # noqa: E731
    last = k if circle_base else k - 1
    changes = [j for j in range(last) if d[j] * d[nxt(j)] < 0 or (d[j] == 0 and j > 0)]
    absd = np.abs(d)
    minima = []
    for j in range(k):
        if not circle_base and (j == 0 or j == k - 1):
            continue
        a, c = absd[(j - 1) % k], absd[(j + 1) % k]
        if absd[j] < a and absd[j] <= c and absd[j] < thr:
            minima.append(j)
    cand = sorted(set(changes) | set(minima))
    if not cand:
        return []
    clusters = [[cand[0]]]
    for j in cand[1:]:
        if j - clusters[-1][-1] <= CLUSTER_GAP:
            clusters[-1].append(j)
        else:
            clusters.append([j])
    if circle_base and len(clusters) > 1 and clusters[0][0] + k - clusters[-1][-1] <= CLUSTER_GAP:
        clusters[0] = clusters.pop() + clusters[0]
    loci = []
    for cl in clusters:
        span = (cl[-1] - cl[0]) % k if circle_base else cl[-1] - cl[0]
        if span > MAX_CLUSTER:
            raise AmbiguousLociError(f"critical behaviour spread over {span} cells near b={mid[cl[0]]:.4f}")
        lo, hi = cl[0] - 1, cl[-1] + 2
        if not circle_base:
            lo, hi = max(lo, 0), min(hi, k - 1)
        s_lo, s_hi = np.sign(d[lo % k]), np.sign(d[hi % k])
        flips = s_lo * s_hi < 0
        ch = [j for j in cl if j in changes]
        if flips:
            j = ch[len(ch) // 2] if ch else cl[len(cl) // 2]
            j1 = nxt(j)
            if d[j] != d[j1]:
                pos = mid[j] + h * d[j] / (d[j] - d[j1])
            else:
                pos = mid[j]
            loci.append(Locus(float(pos % 1.0 if circle_base else pos), "even"))
        else:
            mins = [j for j in cl if j in minima] or cl
            j = min(mins, key=lambda i: absd[i])
            ya, yb, yc = d[(j - 1) % k], d[j], d[(j + 1) % k]
            den = ya - 2 * yb + yc
            off = 0.5 * (ya - yc) / den if den != 0 else 0.0
            pos = mid[j] + h * float(np.clip(off, -1.0, 1.0))
            loci.append(Locus(float(pos % 1.0 if circle_base else pos), "odd"))
    return sorted(loci, key=lambda l: l.position)


@dataclass
class Comparison:
    passed: bool
    reason: str
    matches: list[tuple[Locus, CriticalCircleRecord, float]] = field(default_factory=list)
    cells: float = 0.0

    def to_json(self) -> dict:
        return {
            "passed": self.passed,
            "reason": self.reason,
            "matches": [{"grid": l.to_json(), "analytic": r.to_json(), "error_cells": e / self.cells}
                        for l, r, e in self.matches],
        }


def analytic_circles(nf: NormalForm, records=None) -> list[CriticalCircleRecord]:
    """Critical circles of ``nf`` with positions carried to surface coordinates by h."""
    from .analysis import find_critical_points

    recs = find_critical_points(nf.profile) if records is None else records
    out = []
    for r in recs:
        b = float(nf.diffeo.base_map(np.array([r.base_position]))[0])
        if nf.surface.base is BaseSpace.CIRCLE:
            b %= 1.0
        out.append(CriticalCircleRecord(b, r.level, r.order, r.extremal, r.extremal_kind))
    return sorted(out, key=lambda r: r.base_position)


def compare_with_analytic(g: GridSample, predicted, loci: list[Locus] | None = None) -> Comparison:
    """Greedy nearest matching of grid loci to predicted circles."""
    if loci is None:
        loci = extract_critical_loci(g)
    cell = g.spacing
    predicted = list(predicted)
    circle = g.surface.base is BaseSpace.CIRCLE
    if len(loci) != len(predicted):
        return Comparison(False, f"grid found {len(loci)} circles, analysis predicts {len(predicted)}", [], cell)
    pairs = []
    for i, l in enumerate(loci):
        for j, r in enumerate(predicted):
            d = abs(l.position - r.base_position)
            if circle:
                d = min(d, 1.0 - d)
            pairs.append((d, i, j))
    used_l, used_r, matches = set(), set(), []
    for d, i, j in sorted(pairs):
        if i in used_l or j in used_r:
            continue
        used_l.add(i), used_r.add(j)
        matches.append((loci[i], predicted[j], d))
    matches.sort(key=lambda m: m[1].base_position)
    for l, r, d in matches:
        if d > 2 * cell:
            return Comparison(False, f"position error {d / cell:.2f} cells at b={r.base_position:.6f}", matches, cell)
        want = "even" if r.extremal else "odd"
        if l.parity != want:
            return Comparison(False, f"parity mismatch at b={r.base_position:.6f}", matches, cell)
    return Comparison(True, "match", matches, cell)
