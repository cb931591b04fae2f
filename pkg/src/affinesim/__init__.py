"""Stress-based affine formation control for leader-follower agent teams.

The package covers the full pipeline: framework and leader-selection
checks, stress assembly and the universal-rigidity certificate, stress
synthesis, affine manoeuvre schedules, three discrete-time control laws
with their stability tests, a deterministic scenario engine, and file/CLI
front ends.
"""

__version__ = "0.1.0"

from .control import (
    LinearPlant,
    RiccatiSolution,
    SolverError,
    dynamic_law_stable,
    dynamic_leader_step,
    linear_step,
    local_control_input_dynamic,
    local_control_input_stationary,
    solve_mare,
    spectral_radius,
    stationary_disagreement_matrix,
    stationary_law_stable,
    stationary_leader_step,
    unit_circle_test,
)
from .engine import (
    CertificateError,
    RunResult,
    ScenarioSpec,
    TraceRecord,
    compare_forms,
    detect_convergence,
    disagreement,
    run_batch,
    run_scenario,
)
from .framework import (
    Configuration,
    Framework,
    Graph,
    LeaderPartition,
    LeaderSelectionReport,
    affine_span_dimension,
    is_k_connected,
    validate_leader_selection,
)
from .maneuvers import (
    AffineTransform,
    KINDS,
    ManoeuvreSchedule,
    ScheduleSegment,
    apply_affine,
    leader_waypoints,
    make_transform,
)
from .stress import (
    LocalizabilityError,
    RigidityCertificate,
    StressBlocks,
    StressMatrix,
    SynthesisError,
    assemble_stress,
    check_rigidity_certificate,
    follower_targets,
    min_eig_neg_ff,
    partition_stress,
    reassemble_stress,
    synthesize_stress,
    verify_equilibrium,
)

__all__ = [name for name in dir() if not name.startswith("_")]
