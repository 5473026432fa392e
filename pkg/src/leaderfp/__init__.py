"""Numerical checks for Leader-type contractions on b-metric spaces."""

from __future__ import annotations

__version__ = "0.1.0"

from .bounds import (
    InvarianceIndex,
    RetractBound,
    invariance_index_constructive,
    invariance_index_empirical,
    retract_bound,
    verify_retract_bound,
    verify_uniform_convergence,
)
from .contraction import (
    Certificate,
    SelfMap,
    Witness,
    check_banach,
    check_boyd_wong,
    check_chen_condition,
    check_kirk_asymptotic,
    check_nonexpansive,
    continuity_probe,
    search_leader_params,
    search_meir_keeler_params,
    search_mk_leader_params,
)
from .control import (
    ControlFunction,
    ControlSequence,
    check_subcontractive,
    gap_infimum,
    right_usc_probe,
    tail_sup_bounded,
    uniform_convergence_check,
    usc_probe,
)
from .expression import parse_expression
from .gallery import get_instance, list_instances
from .metric import BMetricSpace, MetricKind, SampleSpec, check_metric_axioms, distance
from .picard import first_entry_index, fixed_point_residual, iterate, uniform_entry_profile
