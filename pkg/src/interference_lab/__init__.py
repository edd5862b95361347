"""Simulation toolkit for testing interference in network experiments."""

__version__ = "0.1.0"

from .designs import Bernoulli, ExplicitFinite, enumerate_design, parse_design, sample, sample_many
from .errors import (
    DataError,
    DegenerateWeightError,
    GenerationError,
    InterferenceLabError,
    NotARefinementError,
    UsageError,
)
from .exposure import ArbitraryNeighborhood, NoEffect, OwnTreatment, Stratified, Tabulated, make_spec
from .impossibility import (
    general_mixtures,
    mixture_error_sum,
    mixture_error_sum_exact,
    risk_lower_bound,
    sutva_mixtures,
    tv_profile,
)
from .lim_test import estimate_separation, fraction_moments, run_lim_test, threshold, unit_weights
from .models import ExposureOutcomeModel, LimModel, load_model
from .network import Network, gen_k_regular, load_network, read_network
from .refinement import check_refinement
from .risk import consistency_curve, rejection_rate, risk_profile
from .separation import lim_separation, refinement_separation_coeff, refinement_separation_exact
