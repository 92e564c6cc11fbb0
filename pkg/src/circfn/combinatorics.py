"""Global combinatorics of a normal form.

Decomposition of the surface along its critical circles, the order of the
pieces, parity and alternation of extremal circles, and Euler bookkeeping.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence, Union

from .analysis import ValidityReport, find_critical_points, validate_profile
from .errors import UsageError, ValidationError
from .model import (CriticalCircleRecord, ExtremalKind, IsolatedExtremumRecord, NormalForm, Pole, Surface,
                    SurfaceKind)


class PieceKind(str, Enum):
    CYLINDER = "cylinder_piece"
    DISK = "disk_piece"
    # whole-surface pieces when there are no critical circles to cut along
    SPHERE = "sphere_piece"
    TORUS = "torus_piece"


PIECE_EULER = {PieceKind.CYLINDER: 0, PieceKind.DISK: 1, PieceKind.SPHERE: 2, PieceKind.TORUS: 0}


@dataclass(frozen=True)
class BoundaryMarker:
    """A boundary component of the surface, sitting over base coordinate ``end``."""

    end: float

    def to_json(self) -> dict:
        return {"boundary": self.end}


Marker = Union[IsolatedExtremumRecord, BoundaryMarker]


@dataclass(frozen=True)
class DecompositionPiece:
    index: int
    kind: PieceKind
    boundary_circles: tuple[int, ...] = ()
    contains: tuple[Marker, ...] = ()
    base_interval: tuple[float, float] = (0.0, 1.0)

    @property
    def euler_characteristic(self) -> int:
        return PIECE_EULER[self.kind]

    @property
    def extrema(self) -> tuple[IsolatedExtremumRecord, ...]:
        return tuple(m for m in self.contains if isinstance(m, IsolatedExtremumRecord))

    def to_json(self) -> dict:
        return {
            "index": self.index,
            "kind": self.kind.value,
            "boundary_circles": list(self.boundary_circles),
            "contains": [m.to_json() for m in self.contains],
            "base_interval": list(self.base_interval),
        }


def isolated_extrema(nf: NormalForm) -> tuple[IsolatedExtremumRecord, ...]:
    """Morse extrema over the poles; their type follows the sign of the profile slope there."""
    kind = nf.surface.kind
    p = nf.profile
    if kind is SurfaceKind.DISK:
        return (IsolatedExtremumRecord(Pole.CENTER, ExtremalKind.MIN if p.lift(0.0, 1) > 0 else ExtremalKind.MAX),)
    if kind is SurfaceKind.SPHERE:
        south = ExtremalKind.MIN if p.lift(0.0, 1) > 0 else ExtremalKind.MAX
        north = ExtremalKind.MAX if p.lift(1.0, 1) > 0 else ExtremalKind.MIN
        return (IsolatedExtremumRecord(Pole.SOUTH, south), IsolatedExtremumRecord(Pole.NORTH, north))
    return ()


def predicted_extrema(s: Surface | SurfaceKind | str) -> tuple[int, str]:
    kind = s.kind if isinstance(s, Surface) else SurfaceKind(s)
    if kind is SurfaceKind.DISK:
        return 1, "one Morse extremum (minimum or maximum) at the center"
    if kind is SurfaceKind.SPHERE:
        return 2, "two Morse extrema at the poles"
    return 0, "no isolated critical points"


def decompose(nf: NormalForm, records: Sequence[CriticalCircleRecord] | None = None) -> list[DecompositionPiece]:
    """Cut the surface along its critical circles, ordered from the base anchor 0."""
    report = validate_profile(nf.profile, nf.surface)
    if not report.valid:
        raise ValidationError("; ".join(r for _, r in report.violations))
    recs = list(find_critical_points(nf.profile) if records is None else records)
    xs = [r.base_position for r in recs]
    n = len(recs)
    kind = nf.surface.kind
    ext = isolated_extrema(nf)
    if kind is SurfaceKind.TORUS:
        if n == 0:
            return [DecompositionPiece(0, PieceKind.TORUS, (), (), (0.0, 1.0))]
        return [DecompositionPiece(i, PieceKind.CYLINDER, (i, (i + 1) % n), (),
                                   (xs[i], xs[(i + 1) % n] + (1.0 if i + 1 == n else 0.0)))
                for i in range(n)]
    cuts = [0.0] + xs + [1.0]
    pieces = []
    for i in range(n + 1):
        bounds = tuple(j for j in (i - 1, i) if 0 <= j < n)
        contains: list[Marker] = []
        first, last = i == 0, i == n
        if kind is SurfaceKind.CYLINDER:
            contains += [BoundaryMarker(0.0)] if first else []
            contains += [BoundaryMarker(1.0)] if last else []
            pk = PieceKind.CYLINDER
        elif kind is SurfaceKind.DISK:
            contains += [ext[0]] if first else []
            contains += [BoundaryMarker(1.0)] if last else []
            pk = PieceKind.DISK if first else PieceKind.CYLINDER
        else:
            contains += [ext[0]] if first else []
            contains += [ext[1]] if last else []
            pk = PieceKind.SPHERE if n == 0 else (PieceKind.DISK if first or last else PieceKind.CYLINDER)
        pieces.append(DecompositionPiece(i, pk, bounds, tuple(contains), (cuts[i], cuts[i + 1])))
    return pieces


def check_torus_parity(records: Sequence[CriticalCircleRecord], s: Surface) -> bool:
    """True iff the number of extremal circles is even (required on the torus)."""
    if s.kind is not SurfaceKind.TORUS:
        raise UsageError(f"parity check applies to the torus, not the {s.kind.value}")
    return sum(1 for r in records if r.extremal) % 2 == 0


def check_alternation(records: Sequence[CriticalCircleRecord], cyclic: bool = False) -> bool:
    """True iff extremal circles alternate Max/Min along the order (cyclically if asked)."""
    kinds = [r.extremal_kind for r in records if r.extremal]
    pairs = list(zip(kinds, kinds[1:]))
    if cyclic and len(kinds) > 1:
        pairs.append((kinds[-1], kinds[0]))
    return all(a is not b for a, b in pairs)


def euler_audit(pieces: Sequence[DecompositionPiece], s: Surface) -> bool:
    total = sum(p.euler_characteristic for p in pieces)
    n_ext = sum(len(p.extrema) for p in pieces)
    return total == s.euler_characteristic == n_ext


@dataclass
class MembershipReport:
    profile: ValidityReport
    checks: dict[str, bool] = field(default_factory=dict)
    violations: list[tuple[float | None, str]] = field(default_factory=list)
    records: list[CriticalCircleRecord] = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return all(self.checks.values()) and not self.violations

    def to_json(self) -> dict:
        return {
            "valid": self.valid,
            "checks": dict(self.checks),
            "violations": [{"base_position": b, "reason": r} for b, r in self.violations],
            "critical_circles": [r.to_json() for r in self.records],
        }


def validate_membership(nf: NormalForm, records: Sequence[CriticalCircleRecord] | None = None) -> MembershipReport:
    """Aggregate every class-membership check; ``records`` overrides the detected circles."""
    s = nf.surface
    prof = validate_profile(nf.profile, s)
    report = MembershipReport(prof, {"condition_A": prof.condition_A, "condition_B": prof.condition_B},
                              list(prof.violations))
    if records is None:
        try:
            records = find_critical_points(nf.profile)
        except Exception:  # flat profile: already reported under condition A
            records = []
    report.records = list(records)
    if s.kind is SurfaceKind.TORUS:
        ok = check_torus_parity(records, s)
        report.checks["torus_parity"] = ok
        if not ok:
            n = sum(1 for r in records if r.extremal)
            report.violations.append((None, f"torus parity: odd number ({n}) of extremal critical circles"))
    ok = check_alternation(sorted(records, key=lambda r: r.base_position), cyclic=s.kind is SurfaceKind.TORUS)
    report.checks["alternation"] = ok
    if not ok:
        report.violations.append((None, "alternation: two adjacent extremal circles of the same kind"))
    report.checks["boundary_level_constancy"] = True  # profile form is constant on every boundary fiber
    if s.kind in (SurfaceKind.DISK, SurfaceKind.SPHERE):
        report.checks["extremum_local_model"] = prof.condition_B
    if prof.valid:
        report.checks["euler"] = euler_audit(decompose(nf, records), s)
        if not report.checks["euler"]:
            report.violations.append((None, "euler characteristic bookkeeping failed"))
    return report
