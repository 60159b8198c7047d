"""Radial Kaehler-Ricci flow near an A1 orbifold point.

Eguchi-Hanson geometry and its correction series, the glued model flow,
a radial potential-flow solver and the experiments built on them.
"""
from .exceptions import (
    AccuracyError,
    DomainError,
    EvaluationError,
    ExtractionError,
    FitError,
    PositivityError,
    StepFailure,
)
from .geometry import (
    EguchiHansonProfile,
    FlatProfile,
    HyperbolicFlowProfile,
    MetricEigenvalues,
    eh_potential,
    exceptional_area_coefficient,
    hyperbolic_flow_potential,
    log_det,
    metric_from_profile,
    radial_laplacian,
    rescale_pullback,
)
from .series import CorrectionSeries, extract_source, f_eh, g1_closed_form, residual
from .model import GluedModelSpec, f_mod, model_eigenvalues, phi_mod
from .norms import WeightedNormSpec, weighted_holder_norm, weighted_sup_norm
from .evolve import EvolutionTrace, FlowState, SolverConfig, evolve, potential_flow_rhs, q_remainder, step
from .fits import BiLipschitzReport, DecayFit, bilipschitz_constant, decay_exponent_fit
from .config import RunConfig, load_config

__version__ = "0.1.0"
