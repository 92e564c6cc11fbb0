"""Normal forms ``f = kappa o f0 o h^{-1}`` of saddle-free Morse-Bott functions.

The model surfaces are the cylinder, torus, disk and sphere, each fibered by
circles over a one-dimensional base.  A normal form is a profile ``kappa`` on
the base, the prime function ``f0`` and a fiber-preserving diffeomorphism
chain ``h``.
"""
from __future__ import annotations

from .analysis import (EquivalenceMode, EquivalenceResult, ValidityReport, find_critical_points, morsify,
                       profiles_equivalent, validate_profile, vanishing_order, whitney_factor,
                       whitney_smoothness_probe)
from .bump import BumpFunction, Polarity, smoothstep
from .combinatorics import (BoundaryMarker, DecompositionPiece, MembershipReport, PieceKind, check_alternation,
                            check_torus_parity, decompose, euler_audit, isolated_extrema, predicted_extrema,
                            validate_membership)
from .errors import (AmbiguousLociError, CircfnError, DomainError, FlatProfileError, GapError, MorsifyError,
                     NotEvenError, NotHFieldError, NotNormalizedError, PreconditionError, UsageError,
                     ValidationError)
from .fields import (CircleAction, ConjugatorResult, FlowMap, build_h_field, circle_action, conjugator_report,
                     default_collar_radii, first_return_time, hamiltonian_field, integrate_flow,
                     isotope_conjugator, normalize_period, scan_speed, shift_diffeo)
from .model import (BaseReparam, Collar, CriticalCircleRecord, DiffeoChain, ExtremalKind, FiberRotation,
                    FiberShift, IsolatedExtremumRecord, LocalizedShift, NormalForm, PolarPoint, Pole, Surface,
                    SurfaceKind, TangentField, chain_apply, chain_invert, evaluate_normal_form,
                    evaluate_on_surface, invert_monotone, to_band)
from .oracle import (Comparison, GridSample, Locus, analytic_circles, compare_with_analytic,
                     extract_critical_loci, sample_grid)
from .profiles import BaseSpace, Profile, Segment, TargetSpace

__version__ = "0.1.0"
