"""Spectral solver for structures of mixed-degree forms on the flat torus."""

from .ddj import DDJReport, SLSequenceReport, ddJ_check, sl_sequence_check, u_projectors
from .deform import (
    DeformationSeries,
    NotClosedPerturbation,
    Obstructed,
    closed_perturbation,
    deform,
    exp_series,
    residual_oracle,
)
from .fourier import (
    FourierCL1Field,
    FourierCL2Field,
    FourierField,
    FourierForm,
    TruncationTooSmall,
    apply_field,
    covector_wedge,
    dform,
    fourier_wedge,
    frequency_grid,
)
from .hodge import FrequencyHodge, HodgePackage, TopologicalReport, de_rham_hodge, hodge_package, topological_check
from .operators import BracketReport, ConjugatedD, bracket_check, conjugated_d, dorfman_formula, exp_apply, lie_derivative
from .period import NotClosed, exp_wedge, period, period_derivative
from .spin7 import CorrectionReport, asd_even_projector, spin7_correction, spin7_star

__all__ = [
    "DDJReport",
    "SLSequenceReport",
    "ddJ_check",
    "sl_sequence_check",
    "u_projectors",
    "DeformationSeries",
    "NotClosedPerturbation",
    "Obstructed",
    "closed_perturbation",
    "deform",
    "exp_series",
    "residual_oracle",
    "FourierCL1Field",
    "FourierCL2Field",
    "FourierField",
    "FourierForm",
    "TruncationTooSmall",
    "apply_field",
    "covector_wedge",
    "dform",
    "fourier_wedge",
    "frequency_grid",
    "FrequencyHodge",
    "HodgePackage",
    "TopologicalReport",
    "de_rham_hodge",
    "hodge_package",
    "topological_check",
    "BracketReport",
    "ConjugatedD",
    "bracket_check",
    "conjugated_d",
    "dorfman_formula",
    "exp_apply",
    "lie_derivative",
    "NotClosed",
    "exp_wedge",
    "period",
    "period_derivative",
    "CorrectionReport",
    "asd_even_projector",
    "spin7_correction",
    "spin7_star",
]
