"""Receding-horizon consensus toolkit for discrete-time linear multi-agent
systems over fixed directed graphs: closed-form protocol synthesis, spectral
and design-margin consensus checks, and lockstep closed-loop simulation."""

from .analysis import (
    ConditionMargin,
    ConsensusReport,
    ModeStability,
    ScalarModeThreshold,
    SufficiencyMargins,
    check_consensus_iff,
    check_sufficient_1d,
    check_sufficient_lti,
    disagreement_matrix,
    mode_matrix,
    theta_oracle,
    theta_root,
    theta_root_unscaled_d,
)
from .graph import (
    Digraph,
    Topology,
    build_topology,
    gamma_spectrum,
    has_spanning_tree,
    nonzero_gamma_spectrum,
)
from .protocol import (
    AgentController,
    GainSchedule,
    planned_inputs,
    rhc_control,
    solve_problem1_oracle,
    synthesize_gains,
)
from .riccati import (
    LinearSystem,
    RhcDesign,
    RiccatiTables,
    check_p_monotonicity,
    delta_weight_bound,
    is_controllable,
    rho_bar,
    solve_delta_recursion,
    solve_p_recursion,
    solve_tables,
)
from .sim import (
    SimConfig,
    Trajectory,
    detect_consensus,
    lockstep_message_harness,
    make_controllers,
    run_closed_loop,
)

__version__ = "0.1.0"

__all__ = [
    "AgentController",
    "ConditionMargin",
    "ConsensusReport",
    "Digraph",
    "GainSchedule",
    "LinearSystem",
    "ModeStability",
    "RhcDesign",
    "RiccatiTables",
    "ScalarModeThreshold",
    "SimConfig",
    "SufficiencyMargins",
    "Topology",
    "Trajectory",
    "build_topology",
    "check_consensus_iff",
    "check_p_monotonicity",
    "check_sufficient_1d",
    "check_sufficient_lti",
    "delta_weight_bound",
    "detect_consensus",
    "disagreement_matrix",
    "gamma_spectrum",
    "has_spanning_tree",
    "is_controllable",
    "lockstep_message_harness",
    "make_controllers",
    "mode_matrix",
    "nonzero_gamma_spectrum",
    "planned_inputs",
    "rhc_control",
    "rho_bar",
    "run_closed_loop",
    "solve_delta_recursion",
    "solve_p_recursion",
    "solve_problem1_oracle",
    "solve_tables",
    "synthesize_gains",
    "theta_oracle",
    "theta_root",
    "theta_root_unscaled_d",
]
