"""Numerical search for the one-shot classical capacity of quantum channels.

Given a channel in Kraus form, the optimizer alternately updates the input
ensemble and the measurement (POVM) along analytic ascent directions of the
mutual information, mixing steepest ascent with Polak-Ribiere conjugate
gradients and a golden-section line search. Text import/export of problems
and reports lives in :mod:`qcap.formats`; the batch driver in :mod:`qcap.cli`.
"""

from . import errors
from .channels import (
    Ensemble,
    KrausChannel,
    Povm,
    adjoint_channel_apply,
    amplitude_damping_channel,
    apply_channel,
    depolarizing_channel,
    identity_channel,
    phase_damping_channel,
    random_channel,
    random_ensemble,
    random_povm,
    validate_channel,
)
from .formats import (
    ImportFile,
    parse_import,
    parse_matrix_literal,
    serialize_import,
    serialize_matrix_literal,
    serialize_output,
)
from .information import (
    JointDistribution,
    ensemble_ascent_direction,
    ensemble_directional_derivative,
    joint_distribution,
    mutual_information,
    povm_ascent_direction,
    povm_directional_derivative,
)
from .linesearch import Bracket, LineSearchConfig, bracket_maximum, golden_section_max, maximize
from .optimizer import (
    AscentMethod,
    IterationRecord,
    OptimizerConfig,
    RunReport,
    conjugate_gradient_state_update,
    multi_restart,
    optimize,
    reduce_povm,
    should_stop,
)

__all__ = [
    "AscentMethod",
    "Bracket",
    "Ensemble",
    "ImportFile",
    "IterationRecord",
    "JointDistribution",
    "KrausChannel",
    "LineSearchConfig",
    "OptimizerConfig",
    "Povm",
    "RunReport",
    "adjoint_channel_apply",
    "amplitude_damping_channel",
    "apply_channel",
    "bracket_maximum",
    "conjugate_gradient_state_update",
    "depolarizing_channel",
    "ensemble_ascent_direction",
    "ensemble_directional_derivative",
    "errors",
    "golden_section_max",
    "identity_channel",
    "joint_distribution",
    "maximize",
    "multi_restart",
    "mutual_information",
    "optimize",
    "parse_import",
    "parse_matrix_literal",
    "phase_damping_channel",
    "povm_ascent_direction",
    "povm_directional_derivative",
    "random_channel",
    "random_ensemble",
    "random_povm",
    "reduce_povm",
    "serialize_import",
    "serialize_matrix_literal",
    "serialize_output",
    "should_stop",
    "validate_channel",
]

__version__ = "0.1.0"
