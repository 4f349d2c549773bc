"""Quantitative diagnostics of collapsing connected sums."""
from .bounds import BoundReport, LemmaFailure, TransplantReport, delta_bound, transplant, transplant_upper_bound
from .continuity import (ContinuityReport, SmoothApproxReport, continuity_check,
                         random_spd_perturbation, smooth_approx_check)
from .cutoff import (CutoffSpec, check_resolved, chi, chi_on_mesh, grad_chi_norm_sq_closed_form,
                     resolve_cutoff, vertex_distances)
from .extension import (ExtensionReport, ScalingReport, TraceDecayReport, boundary_trace,
                        harmonic_extension, scaling_identity_check, trace_decay)
from .oracles import reference_spectrum
from .sweep import (SweepError, SweepRecord, collapse_sweep, discretization_estimate,
                    final_gap_ok, first_factor_spectrum, gaps_non_increasing)

__all__ = [
    "BoundReport", "ContinuityReport", "CutoffSpec", "ExtensionReport", "LemmaFailure",
    "ScalingReport", "SmoothApproxReport", "SweepError", "SweepRecord", "TraceDecayReport",
    "TransplantReport", "boundary_trace", "check_resolved", "chi", "chi_on_mesh",
    "collapse_sweep", "continuity_check", "delta_bound", "discretization_estimate",
    "final_gap_ok", "first_factor_spectrum", "gaps_non_increasing",
    "grad_chi_norm_sq_closed_form", "harmonic_extension", "random_spd_perturbation",
    "reference_spectrum", "resolve_cutoff", "scaling_identity_check", "smooth_approx_check",
    "trace_decay", "transplant", "transplant_upper_bound", "vertex_distances",
]
