"""Deterministic discrete-time scenario engine.

Wires a framework, a stress matrix, a manoeuvre schedule and one of the
control laws into a step-by-step run with per-step trace records,
disagreement measurement against the instantaneous follower targets, and
convergence/divergence detection.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .control import (
    LinearPlant,
    check_period,
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
)
from .framework import Framework, LeaderPartition
from .maneuvers import ManoeuvreSchedule, leader_waypoints
from .stress import (
    RigidityCertificate,
    StressBlocks,
    StressMatrix,
    assemble_stress,
    check_rigidity_certificate,
    follower_targets,
    min_eig_neg_ff,
    partition_stress,
    synthesize_stress,
)

LAWS = ("stationary", "dynamic", "linear")
# A run aborts with the diverged flag once the disagreement norm passes this.
DIVERGENCE_LIMIT = 1e9
# Convergence is declared after this many consecutive in-tolerance records.
CONVERGENCE_WINDOW = 10


class CertificateError(RuntimeError):
    """Run refused: the stress failed the rigidity certificate."""

    def __init__(self, certificate: RigidityCertificate):
        self.certificate = certificate
        super().__init__(f"stress failed the rigidity certificate: {certificate}")


@dataclass(frozen=True)
class ScenarioSpec:
    """Complete, reproducible description of one simulation run.

    The framework's configuration is the reference the schedule transforms.
    weights=None requests stress synthesis (seeded by `seed`). The linear
    law additionally needs a plant whose state dimension equals d; its gain
    comes from the Riccati solver with weight matrix q_matrix (identity
    when omitted).
    """

    framework: Framework
    partition: LeaderPartition
    law: str
    T: float
    initial_followers: np.ndarray
    weights: dict | None = None
    schedule: ManoeuvreSchedule = ManoeuvreSchedule()
    budget: int = 2000
    tolerance: float = 1e-9
    seed: int = 0
    plant: LinearPlant | None = None
    q_matrix: np.ndarray | None = None
    epsilon: float = 0.0
    riccati_tol: float = 1e-10

    def __post_init__(self):
        if self.partition.n != self.framework.config.n:
            raise ValueError("partition does not match framework")
        if self.law not in LAWS:
            raise ValueError(f"unknown law {self.law!r}; expected one of {LAWS}")
        check_period(self.T)
        init = np.array(self.initial_followers, dtype=float)
        expected = (self.partition.n_followers, self.framework.config.d)
        if init.shape != expected:
            raise ValueError(f"initial follower positions must have shape {expected}")
        if not np.isfinite(init).all():
            raise ValueError("initial follower positions must be finite")
        init.setflags(write=False)
        object.__setattr__(self, "initial_followers", init)
        if self.budget < 1:
            raise ValueError("step budget must be at least 1")
        if not self.tolerance > 0.0:
            raise ValueError("convergence tolerance must be positive")
        if self.weights is not None:
            normalized = {}
            for key, value in self.weights.items():
                i, j = int(key[0]), int(key[1])
                normalized[(min(i, j), max(i, j))] = float(value)
            object.__setattr__(self, "weights", normalized)
        if self.law == "linear":
            if self.plant is None:
                raise ValueError("linear law requires a plant")
            if self.plant.m != self.framework.config.d:
                raise ValueError("plant state dimension must equal the ambient dimension")
            q = np.eye(self.plant.m) if self.q_matrix is None else np.array(self.q_matrix, dtype=float)
            q.setflags(write=False)
            object.__setattr__(self, "q_matrix", q)


@dataclass(frozen=True)
class TraceRecord:
    """State snapshot at step k, before the law fires for that step.

    x is the full stacked state in original agent order; x_f_star the
    follower target stack induced by the leader positions at k. converged
    and diverged are instantaneous per-record flags.
    """

    k: int
    x: np.ndarray
    x_f_star: np.ndarray
    delta_norm: float
    converged: bool
    diverged: bool


@dataclass(frozen=True)
class RunResult:
    """A finished run: trace, the stress it used, and outcome flags."""

    records: tuple
    weights: dict
    stress: StressMatrix
    blocks: StressBlocks
    certificate: RigidityCertificate
    stability_flags: dict
    converged_at: int | None
    diverged: bool
    budget_exhausted: bool

    @property
    def steps(self) -> int:
        return self.records[-1].k

    @property
    def final_delta(self) -> float:
        return self.records[-1].delta_norm

    def final_positions(self) -> np.ndarray:
        n = self.blocks.n_leaders + self.blocks.n_followers
        return self.records[-1].x.reshape(n, -1)


def disagreement(x_f, x_f_star) -> float:
    """Euclidean norm of the stacked follower tracking error."""
    a = np.asarray(x_f, dtype=float).ravel()
    b = np.asarray(x_f_star, dtype=float).ravel()
    if a.shape != b.shape:
        raise ValueError(f"stacks of lengths {a.size} and {b.size} do not match")
    return float(np.linalg.norm(a - b))


def detect_convergence(trace, tol: float, window: int = CONVERGENCE_WINDOW):
    """First index k with delta_norm <= tol on all of [k, k+window), else None.

    Accepts trace records or bare delta values.
    """
    if window < 1:
        raise ValueError("window must be at least 1")
    deltas = [r.delta_norm if isinstance(r, TraceRecord) else float(r) for r in trace]
    run = 0
    for k, delta in enumerate(deltas):
        run = run + 1 if delta <= tol else 0
        if run >= window:
            return k - window + 1
    return None


def _stability_flags(spec: ScenarioSpec, blocks: StressBlocks, gain_info=None) -> dict:
    if spec.law == "stationary":
        mu_min = min_eig_neg_ff(blocks)
        return {
            "law": "stationary",
            "T": spec.T,
            "mu_min": mu_min,
            "T_mu_min": spec.T * mu_min,
            "stable": stationary_law_stable(spec.T, mu_min),
            "spectral_radius": spectral_radius(stationary_disagreement_matrix(blocks, spec.T)),
        }
    if spec.law == "dynamic":
        return {
            "law": "dynamic",
            "T": spec.T,
            "decay_factor": abs(1.0 - spec.T),
            "stable": dynamic_law_stable(spec.T),
        }
    gain, solution = gain_info
    return {
        "law": "linear",
        "T": spec.T,
        "epsilon": spec.epsilon,
        "closed_loop_spectral_radius": spectral_radius(
            spec.plant.A + spec.plant.B @ gain
        ),
        "riccati_residual": solution.residual,
        "riccati_iterations": solution.iterations,
        "stable": True,
    }


def _resolve_stress(spec: ScenarioSpec):
    weights = spec.weights
    if weights is None:
        weights = synthesize_stress(spec.framework, seed=spec.seed)
    stress = assemble_stress(spec.framework.graph, weights)
    certificate = check_rigidity_certificate(stress, spec.framework)
    if not certificate.passed:
        raise CertificateError(certificate)
    return weights, stress, certificate


def _initial_state(spec: ScenarioSpec) -> np.ndarray:
    reference = spec.framework.config
    leaders_now, _ = leader_waypoints(spec.schedule, reference, spec.partition, 0)
    x = np.zeros((reference.n, reference.d))
    for row, agent in enumerate(spec.partition.leaders):
        x[agent - 1] = leaders_now[row]
    for row, agent in enumerate(spec.partition.followers):
        x[agent - 1] = spec.initial_followers[row]
    return x


def run_scenario(spec: ScenarioSpec) -> RunResult:
    """Execute a scenario to convergence, divergence, or budget exhaustion.

    The run is refused outright when the stress fails the rigidity
    certificate; a violated stability condition is only recorded in the
    stability flags, since boundary experiments need unstable runs to
    proceed. Convergence is declared after CONVERGENCE_WINDOW consecutive
    in-tolerance records, and never before the schedule has finished.
    """
    weights, stress, certificate = _resolve_stress(spec)
    blocks = partition_stress(stress, spec.partition)
    reference = spec.framework.config
    partition = spec.partition
    follower_rows = [i - 1 for i in partition.followers]
    leader_rows = [i - 1 for i in partition.leaders]

    gain_info = None
    if spec.law == "linear":
        solution = solve_mare(spec.plant, spec.q_matrix, tol=spec.riccati_tol)
        gain_info = (solution.K, solution)
    flags = _stability_flags(spec, blocks, gain_info)

    x = _initial_state(spec)
    records = []
    run_below_tol = 0
    converged_at = None
    diverged = False
    settle_after = spec.schedule.last_step()

    for k in range(spec.budget + 1):
        leaders_now, leaders_next = leader_waypoints(spec.schedule, reference, partition, k)
        x_l = x[leader_rows]
        targets = follower_targets(blocks, x_l.ravel())
        delta = disagreement(x[follower_rows].ravel(), targets)
        diverged = bool(delta > DIVERGENCE_LIMIT or not np.isfinite(delta))
        converged_now = bool(delta <= spec.tolerance)
        records.append(
            TraceRecord(
                k=k,
                x=x.ravel().copy(),
                x_f_star=targets.copy(),
                delta_norm=delta,
                converged=converged_now,
                diverged=diverged,
            )
        )
        if diverged:
            break
        if converged_now and k >= settle_after:
            run_below_tol += 1
            if run_below_tol >= CONVERGENCE_WINDOW:
                converged_at = k - CONVERGENCE_WINDOW + 1
                break
        else:
            run_below_tol = 0
        if k == spec.budget:
            break

        if spec.law == "stationary":
            x_f_next = stationary_leader_step(blocks, spec.T, x[follower_rows].ravel(), x_l.ravel())
            x = x.copy()
            x[follower_rows] = x_f_next.reshape(-1, reference.d)
            x[leader_rows] = leaders_next
        elif spec.law == "dynamic":
            x_f_next = dynamic_leader_step(
                blocks, spec.T, x[follower_rows].ravel(), x_l.ravel(), leaders_next.ravel()
            )
            x = x.copy()
            x[follower_rows] = x_f_next.reshape(-1, reference.d)
            x[leader_rows] = leaders_next
        else:
            x_next = linear_step(spec.plant, gain_info[0], spec.epsilon, stress, x.ravel())
            x = x_next.reshape(reference.n, reference.d)

    budget_exhausted = converged_at is None and not diverged
    return RunResult(
        records=tuple(records),
        weights=dict(weights),
        stress=stress,
        blocks=blocks,
        certificate=certificate,
        stability_flags=flags,
        converged_at=converged_at,
        diverged=diverged,
        budget_exhausted=budget_exhausted,
    )


def run_batch(specs, max_workers: int | None = None):
    """Run independent scenarios concurrently; results in input order."""
    specs = list(specs)
    if not specs:
        return []
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        return list(pool.map(run_scenario, specs))


def _neighbor_weights(framework: Framework, weights: dict) -> dict:
    table = {i: {} for i in range(1, framework.graph.n + 1)}
    for (i, j), w in weights.items():
        table[i][j] = w
        table[j][i] = w
    return table


def compare_forms(spec: ScenarioSpec) -> float:
    """Max deviation between the matrix-form run and per-agent updates.

    Replays the scenario stepping the global law, and at every step also
    advances each follower with its per-agent control input; returns the
    largest entrywise state difference seen. The dynamic per-agent form
    consumes neighbor states at k+1, which are read off the global solve.
    """
    if spec.law not in ("stationary", "dynamic"):
        raise ValueError("form comparison is defined for the stationary and dynamic laws")
    weights, stress, _ = _resolve_stress(spec)
    blocks = partition_stress(stress, spec.partition)
    reference = spec.framework.config
    partition = spec.partition
    follower_rows = [i - 1 for i in partition.followers]
    leader_rows = [i - 1 for i in partition.leaders]
    incident = _neighbor_weights(spec.framework, weights)

    x = _initial_state(spec)
    worst = 0.0
    run_below_tol = 0
    settle_after = spec.schedule.last_step()
    for k in range(spec.budget + 1):
        leaders_now, leaders_next = leader_waypoints(spec.schedule, reference, partition, k)
        x_l = x[leader_rows]
        targets = follower_targets(blocks, x_l.ravel())
        delta = disagreement(x[follower_rows].ravel(), targets)
        if delta > DIVERGENCE_LIMIT or not np.isfinite(delta):
            break
        if delta <= spec.tolerance and k >= settle_after:
            run_below_tol += 1
            if run_below_tol >= CONVERGENCE_WINDOW:
                break
        else:
            run_below_tol = 0
        if k == spec.budget:
            break

        if spec.law == "stationary":
            x_f_next = stationary_leader_step(blocks, spec.T, x[follower_rows].ravel(), x_l.ravel())
        else:
            x_f_next = dynamic_leader_step(
                blocks, spec.T, x[follower_rows].ravel(), x_l.ravel(), leaders_next.ravel()
            )
        x_next = x.copy()
        x_next[follower_rows] = x_f_next.reshape(-1, reference.d)
        x_next[leader_rows] = leaders_next

        for agent in partition.followers:
            states_now = {j: x[j - 1] for j in incident[agent]}
            if spec.law == "stationary":
                u = local_control_input_stationary(agent, x[agent - 1], states_now, incident[agent])
            else:
                states_next = {j: x_next[j - 1] for j in incident[agent]}
                u = local_control_input_dynamic(
                    agent, x[agent - 1], states_now, states_next, incident[agent], spec.T
                )
            per_agent = x[agent - 1] + spec.T * u
            worst = max(worst, float(np.abs(per_agent - x_next[agent - 1]).max()))
        x = x_next
    return worst
