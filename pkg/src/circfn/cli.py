"""``circfn`` command-line front end.

Every command reads a JSON document from ``--input`` (or stdin) and writes
JSON or CSV to stdout (or ``--output``).  Exit codes: 0 success or positive
decision, 2 validation failure or negative decision, 1 usage or I/O error.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import analysis, combinatorics, fields, oracle
from .corpus import default_seed
from .errors import (AmbiguousLociError, CircfnError, DomainError, FlatProfileError, GapError, MorsifyError,
                     NotEvenError, NotHFieldError, PreconditionError, UsageError, ValidationError)
from .model import (CriticalCircleRecord, DiffeoChain, NormalForm, PolarPoint, Surface, evaluate_on_surface,
                    surface_point)
from .profiles import Profile, TargetSpace

EXIT_OK, EXIT_USAGE, EXIT_NEGATIVE = 0, 1, 2
DEFAULT_SAMPLES = 1024
DEFAULT_RESOLUTION = 512
DEFAULT_TOLERANCE = 1e-9

# failures that are answers about the input rather than misuse of the tool
NEGATIVE = (ValidationError, FlatProfileError, GapError, NotHFieldError, PreconditionError, MorsifyError,
            NotEvenError, AmbiguousLociError)


class _Usage(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _Usage(message)


# -- I/O helpers ---------------------------------------------------------------------

def _read(args) -> dict:
    try:
        if args.input in (None, "-"):
            text = sys.stdin.read()
        else:
            with open(args.input, encoding="utf-8") as fh:
                text = fh.read()
    except OSError as exc:
        raise _Usage(f"cannot read input: {exc}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise _Usage(f"malformed JSON input: {exc.msg} at line {exc.lineno} column {exc.colno}") from None
    if not isinstance(data, dict):
        raise _Usage("malformed JSON input: expected an object at the top level")
    return data


def _dump(obj) -> str:
    return json.dumps(_plain(obj), indent=2, sort_keys=True) + "\n"


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, float) and not np.isfinite(obj):
        return None
    return obj


def _write(args, text: str) -> None:
    if args.output in (None, "-"):
        try:
            sys.stdout.write(text)
            sys.stdout.flush()
        except BrokenPipeError:  # reader went away, e.g. piped into head
            sys.stdout = open(os.devnull, "w")
        return
    try:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as exc:
        raise _Usage(f"cannot write output: {exc}") from None


def _profile_from(d: dict, args=None) -> Profile:
    if "pieces" in d:
        return Profile.from_json(d)
    if "profile" in d:
        return Profile.from_json(d["profile"])
    raise _Usage("input is neither a profile nor a normal form")


def _normal_form(d: dict, args) -> NormalForm:
    """NormalForm JSON, or a bare profile placed on ``--surface``."""
    try:
        if "profile" in d:
            if args.surface and "surface" not in d:
                d = dict(d, surface=args.surface)
            if "surface" not in d:
                raise _Usage("normal form needs a surface (in the input or via --surface)")
            return NormalForm.from_json(d)
        if "pieces" in d:
            if not args.surface:
                raise _Usage("a bare profile needs --surface")
            p = Profile.from_json(d)
            return NormalForm(Surface.of(args.surface, p.target), p)
    except (KeyError, TypeError) as exc:
        raise _Usage(f"malformed normal form: missing or bad field {exc}") from None
    raise _Usage("input is neither a profile nor a normal form")


def _records(d: dict):
    if "critical_circles" not in d:
        return None
    try:
        return [CriticalCircleRecord.from_json(r) for r in d["critical_circles"]]
    except (KeyError, TypeError) as exc:
        raise _Usage(f"malformed critical circle list: {exc}") from None


def _rng():
    return np.random.default_rng(default_seed())


# -- commands ------------------------------------------------------------------------

def cmd_validate(args):
    d = _read(args)
    nf = _normal_form(d, args)
    rep = combinatorics.validate_membership(nf, _records(d))
    out = rep.to_json()
    for b, reason in rep.violations:
        print(f"circfn: {reason}" + ("" if b is None else f" (b={b})"), file=sys.stderr)
    return out, EXIT_OK if rep.valid else EXIT_NEGATIVE


def cmd_analyze(args):
    nf = _normal_form(_read(args), args)
    recs = analysis.find_critical_points(nf.profile)
    if args.format == "json":
        return {"critical_circles": [r.to_json() for r in recs]}, EXIT_OK
    lines = [f"{'base_position':>22} {'level':>22} {'order':>5} {'extremal':>8} {'kind':>4}"]
    for r in recs:
        lines.append(f"{r.base_position:>22.15g} {r.level:>22.15g} {r.order:>5d} "
                     f"{str(r.extremal).lower():>8} {r.extremal_kind.value:>4}")
    return "\n".join(lines) + "\n", EXIT_OK


def cmd_decompose(args):
    nf = _normal_form(_read(args), args)
    pieces = combinatorics.decompose(nf)
    ok = combinatorics.euler_audit(pieces, nf.surface)
    code = EXIT_OK if ok else EXIT_NEGATIVE
    if args.format == "json":
        return {"pieces": [p.to_json() for p in pieces], "euler_audit": ok}, code
    lines = []
    for p in pieces:
        marks = " ".join(_marker(m) for m in p.contains) or "-"
        circles = ",".join(str(c) for c in p.boundary_circles) or "-"
        lines.append(f"{p.index} {p.kind.value} [{p.base_interval[0]:.12g}, {p.base_interval[1]:.12g}] "
                     f"circles={circles} contains={marks}")
    lines.append(f"euler_audit={'pass' if ok else 'fail'}")
    return "\n".join(lines) + "\n", code


def _marker(m) -> str:
    if isinstance(m, combinatorics.BoundaryMarker):
        return f"boundary@{m.end:g}"
    return f"{m.kind.value}@{m.location.value}"


def _h_field(nf: NormalForm, args):
    v, w = fields.default_collar_radii(nf)
    v = args.v_radius if args.v_radius is not None else v
    w = args.w_radius if args.w_radius is not None else w
    return fields.build_h_field(nf, v, w)


def cmd_field(args):
    nf = _normal_form(_read(args), args)
    F = _h_field(nf, args)
    if args.normalize:
        F = fields.normalize_period(F, args.tolerance)
    if args.format == "json":
        _, g = fields.scan_speed(F)
        return {"field": F.to_json(), "min_abs_speed": float(np.min(np.abs(g)))}, EXIT_OK
    b = np.linspace(0.0, 1.0, args.samples)
    g = np.asarray(F.speed(b), dtype=float) * np.ones_like(b)
    return _csv(("b", "g"), (b, g)), EXIT_OK


def _csv(header, columns) -> str:
    rows = [",".join(header)]
    for vals in zip(*(np.asarray(c).tolist() for c in columns)):
        rows.append(",".join(repr(v) for v in vals))
    return "\n".join(rows) + "\n"


def _start_points(nf: NormalForm, n: int):
    rng = _rng()
    z = rng.random(n)
    b = rng.random(n)
    return z, b


def _flow_points(F, nf, z, b, t):
    """Flow band coordinates for time t, passing through polar charts near poles."""
    z1, b1 = np.empty_like(z), np.empty_like(b)
    for mask, pt in surface_point(nf.surface, z, b):
        if not np.any(mask):
            continue
        q = fields.integrate_flow(F, pt, t)
        qz, qb = q.to_band() if isinstance(q, PolarPoint) else q
        z1[mask], b1[mask] = qz, qb
    return z1, b1


def _level_gap(nf, a, b):
    d = np.asarray(a) - np.asarray(b)
    if nf.surface.target is TargetSpace.CIRCLE:
        d = (d + 0.5) % 1.0 - 0.5
    return np.abs(d)


def cmd_flow(args):
    nf = _normal_form(_read(args), args)
    F = _h_field(nf, args)
    if args.normalize:
        F = fields.normalize_period(F)
    n = min(args.samples, args.points)
    z, b = _start_points(nf, n)
    f0 = evaluate_on_surface(nf, z, b)
    times = np.linspace(0.0, args.time, args.steps + 1)
    traj, drift = [(0.0, z, b)], 0.0
    for t0, t1 in zip(times, times[1:]):
        zc, bc = _flow_points(F, nf, traj[-1][1], traj[-1][2], t1 - t0)
        drift = max(drift, float(np.max(_level_gap(nf, evaluate_on_surface(nf, zc, bc), f0), initial=0.0)))
        traj.append((float(t1), zc, bc))
    ok = drift <= args.level_tolerance
    if not ok:
        print(f"circfn: level drift {drift:.3e} exceeds {args.level_tolerance:.1e}", file=sys.stderr)
    code = EXIT_OK if ok else EXIT_NEGATIVE
    if args.format == "json":
        return {"time": args.time, "max_level_drift": drift, "level_conserved": ok,
                "trajectories": [{"s": t, "z": zc, "b": bc} for t, zc, bc in traj]}, code
    cols = [[], [], [], []]
    for k in range(n):
        for t, zc, bc in traj:
            for c, v in zip(cols, (k, t, zc[k], bc[k])):
                c.append(v)
    return _csv(("trajectory", "s", "z", "b"), cols), code


def cmd_action_check(args):
    nf = _normal_form(_read(args), args)
    F = fields.normalize_period(_h_field(nf, args))
    act = fields.circle_action(F)
    n = min(args.samples, args.points)
    z, b = _start_points(nf, n)
    rng = _rng()
    s, t = rng.random(2)
    z1, b1 = _flow_points(F, nf, z, b, 1.0)
    period = float(np.max(np.abs((z1 - z + 0.5) % 1.0 - 0.5)))
    zs, bs = _flow_points(F, nf, z, b, s)
    zst, _ = _flow_points(F, nf, zs, bs, t)
    zc, _ = _flow_points(F, nf, z, b, (s + t) % 1.0)
    comp = float(np.max(np.abs((zst - zc + 0.5) % 1.0 - 0.5)))
    fixed = len(act.fixed_points())
    chi = nf.surface.euler_characteristic
    ok = period <= args.tolerance and comp <= args.tolerance and fixed == chi
    return {"period_error": period, "composition_error": comp, "fixed_points": fixed,
            "euler_characteristic": chi, "passed": ok}, EXIT_OK if ok else EXIT_NEGATIVE


def _windows(x, name):
    try:
        w = [(float(a), float(b)) for a, b in x]
    except (TypeError, ValueError):
        raise _Usage(f"{name} must be a list of [lo, hi] windows") from None
    return w


def cmd_conjugate(args):
    d = _read(args)
    if "normal_form" not in d or "h" not in d or "U" not in d or "V" not in d:
        raise _Usage("conjugate input needs normal_form, h, U and V")
    nf = _normal_form(d["normal_form"], args)
    h = DiffeoChain.from_json(d["h"])
    U, V = _windows(d["U"], "U"), _windows(d["V"], "V")
    F = fields.normalize_period(_h_field(nf, args))
    G = fields.TangentField.from_json(d["G"]) if "G" in d else None
    res = fields.isotope_conjugator(h, F, U, V, G, tol=args.tolerance)
    rep = fields.conjugator_report(res, h, F, G, args.samples)
    ok = rep["identity_on_V"] == 0.0 and rep["equals_h_outside_U"] == 0.0 and rep["conjugation"] <= 1e-8
    return {"h_tilde": res.h_tilde.to_json(), "checks": rep, "passed": ok}, EXIT_OK if ok else EXIT_NEGATIVE


def cmd_equiv(args):
    d = _read(args)
    if "first" not in d or "second" not in d:
        raise _Usage("equiv input needs 'first' and 'second' profiles")
    p, q = _profile_from(d["first"]), _profile_from(d["second"])
    surface = Surface.of(args.surface, p.target) if args.surface else None
    res = analysis.profiles_equivalent(p, q, args.mode, surface)
    return res.to_json(), EXIT_OK if res.equivalent else EXIT_NEGATIVE


def cmd_compose(args):
    nf = _normal_form(_read(args), args)
    rep = combinatorics.validate_membership(nf)
    if not rep.valid:
        for b, reason in rep.violations:
            print(f"circfn: {reason}" + ("" if b is None else f" (b={b})"), file=sys.stderr)
        return rep.to_json(), EXIT_NEGATIVE
    return nf.to_json(), EXIT_OK


def extract_profile_samples(nf: NormalForm, samples: int):
    """``kappa(s) = f(h(0, s))``: the composed function read along the transversal arc at fiber angle 0."""
    s = np.linspace(0.0, 1.0, samples)
    z, b = nf.diffeo.apply(np.zeros_like(s), s)
    return s, evaluate_on_surface(nf, z, b)


def cmd_extract(args):
    nf = _normal_form(_read(args), args)
    s, v = extract_profile_samples(nf, args.samples)
    err = float(np.max(_level_gap(nf, v, nf.profile(s)), initial=0.0))
    if args.format == "csv":
        rows = ["s,kappa"] + [f"{a!r},{c!r}" for a, c in zip(s.tolist(), v.tolist())]
        return "\n".join(rows) + "\n", EXIT_OK
    return {"samples": s, "values": v, "max_deviation": err}, EXIT_OK


def cmd_morsify(args):
    d = _read(args)
    keep = [tuple(w) for w in d.get("keep", [])]
    if "profile" in d or args.surface:
        nf = _normal_form(d, args)
        out = NormalForm(nf.surface, analysis.morsify(nf.profile, keep), nf.diffeo)
        return out.to_json(), EXIT_OK
    return analysis.morsify(_profile_from(d), keep).to_json(), EXIT_OK


def cmd_whitney(args):
    f = _profile_from(_read(args))
    alpha = analysis.whitney_factor(f, min(args.samples, 1000))
    x = np.linspace(0.0, f.source_domain[1], min(args.samples, 1000))
    err = float(np.max(np.abs(analysis._source_eval(alpha, x * x) - analysis._source_eval(f, x))))
    probe = analysis.whitney_smoothness_probe(f)
    ok = err <= args.tolerance
    return {"alpha": alpha.to_json(), "max_error": err, "probe": probe}, EXIT_OK if ok else EXIT_NEGATIVE


def cmd_oracle(args):
    nf = _normal_form(_read(args), args)
    g = oracle.sample_grid(nf, args.resolution)
    if args.grid_csv:
        try:
            with open(args.grid_csv, "w", encoding="utf-8") as fh:
                fh.write(g.to_csv())
        except OSError as exc:
            raise _Usage(f"cannot write grid: {exc}") from None
    cmp = oracle.compare_with_analytic(g, oracle.analytic_circles(nf))
    return dict(cmp.to_json(), grid=g.header()), EXIT_OK if cmp.passed else EXIT_NEGATIVE


COMMANDS = {
    "validate": (cmd_validate, "check class membership of a normal form"),
    "analyze": (cmd_analyze, "list critical circles of the profile"),
    "decompose": (cmd_decompose, "cut the surface along its critical circles"),
    "field": (cmd_field, "build the H-field"),
    "flow": (cmd_flow, "integrate the H-field from seeded start points"),
    "action-check": (cmd_action_check, "check the period-1 circle action"),
    "conjugate": (cmd_conjugate, "isotope a conjugating diffeomorphism to the identity on V"),
    "equiv": (cmd_equiv, "decide equivalence of two profiles"),
    "compose": (cmd_compose, "assemble and validate a normal form from its parts"),
    "extract": (cmd_extract, "recover the profile along the transversal arc"),
    "morsify": (cmd_morsify, "replace degenerate critical points by Morse ones"),
    "whitney": (cmd_whitney, "factor an even function through t = x^2"),
    "oracle": (cmd_oracle, "cross-check critical circles on a sampled grid"),
}


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--input", "-i", help="input JSON file (default: stdin)")
    common.add_argument("--output", "-o", help="output file (default: stdout)")
    common.add_argument("--surface", choices=["cylinder", "torus", "disk", "sphere"],
                        help="surface for a bare profile input")
    common.add_argument("--samples", type=int, default=DEFAULT_SAMPLES)
    common.add_argument("--resolution", type=int, default=DEFAULT_RESOLUTION)
    common.add_argument("--tolerance", type=float, default=DEFAULT_TOLERANCE)
    common.add_argument("--mode", default="right", choices=[m.value for m in analysis.EquivalenceMode])
    parser = _Parser(prog="circfn", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, (_, helptext) in COMMANDS.items():
        sp = sub.add_parser(name, parents=[common], help=helptext)
        if name in ("analyze", "decompose"):
            sp.add_argument("--format", choices=["table", "json"], default="table")
        if name == "extract":
            sp.add_argument("--format", choices=["json", "csv"], default="json")
        if name in ("field", "flow"):
            sp.add_argument("--format", choices=["csv", "json"], default="csv")
        if name in ("field", "flow", "action-check", "conjugate"):
            sp.add_argument("--v-radius", type=float, default=None, help="inner collar radius")
            sp.add_argument("--w-radius", type=float, default=None, help="outer collar radius")
        if name in ("field", "flow"):
            sp.add_argument("--normalize", action="store_true", help="rescale to period 1")
        if name in ("flow", "action-check"):
            sp.add_argument("--points", type=int, default=100, help="number of seeded start points")
        if name == "flow":
            sp.add_argument("--time", type=float, default=1.0)
            sp.add_argument("--steps", type=int, default=16, help="trajectory samples per start point")
            sp.add_argument("--level-tolerance", type=float, default=1e-8)
        if name == "oracle":
            sp.add_argument("--grid-csv", default=None, help="also write the sampled grid as CSV")
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.samples < 2 or args.resolution < 1 or args.tolerance <= 0:
            raise _Usage("--samples, --resolution and --tolerance must be positive")
        fn = COMMANDS[args.command][0]
        result, code = fn(args)
        _write(args, result if isinstance(result, str) else _dump(result))
        return code
    except _Usage as exc:
        print(f"circfn: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NEGATIVE as exc:
        print(f"circfn: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NEGATIVE
    except (UsageError, DomainError, ValueError, KeyError, TypeError) as exc:
        print(f"circfn: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CircfnError as exc:
        print(f"circfn: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NEGATIVE


if __name__ == "__main__":
    sys.exit(main())
