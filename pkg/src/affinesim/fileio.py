"""File formats: framework, stress, weights, schedule and scenario JSON,
trace CSV, run summaries, and run manifests.

All numeric file output uses decimal round-trip formatting, so re-reading
a written file reproduces the exact binary64 values.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from . import __version__
from .control import LinearPlant
from .engine import RunResult, ScenarioSpec
from .framework import Configuration, Framework, Graph, LeaderPartition
from .maneuvers import ManoeuvreSchedule, ScheduleSegment
from .stress import StressMatrix

TRACE_HEADER = ("k", "agent_id", "coord_index", "value", "delta_norm", "converged", "diverged")


class ParseError(ValueError):
    """Input file is malformed: bad JSON, missing keys, or wrong shapes."""


def _load_json(path) -> dict:
    path = Path(path)
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"{path}: {exc}") from exc


def _require(data: dict, key: str, context: str):
    if not isinstance(data, dict) or key not in data:
        raise ParseError(f"{context}: missing required key {key!r}")
    return data[key]


def framework_from_dict(data: dict):
    """Build (Framework, LeaderPartition or None) from the framework mapping.

    Expected shape: {"d": int, "positions": [[...], ...], "edges": [[i, j],
    ...], "leaders": [i, ...]}; agent ids are 1-based, leaders optional.
    """
    d = int(_require(data, "d", "framework"))
    positions = _require(data, "positions", "framework")
    edges = _require(data, "edges", "framework")
    try:
        config = Configuration(positions)
        graph = Graph(len(config.positions), [tuple(e) for e in edges])
        framework = Framework(graph, config)
    except (ValueError, TypeError) as exc:
        raise ParseError(f"framework: {exc}") from exc
    if config.d != d:
        raise ParseError(f"framework: positions are {config.d}-dimensional, header says {d}")
    partition = None
    if data.get("leaders") is not None:
        try:
            partition = LeaderPartition.from_leaders(data["leaders"], config.n)
        except (ValueError, TypeError) as exc:
            raise ParseError(f"framework: {exc}") from exc
    return framework, partition


def framework_to_dict(framework: Framework, partition=None) -> dict:
    data = {
        "d": framework.config.d,
        "positions": framework.config.positions.tolist(),
        "edges": [list(e) for e in sorted(framework.graph.edges)],
    }
    if partition is not None:
        data["leaders"] = list(partition.leaders)
    return data


def load_framework(path):
    return framework_from_dict(_load_json(path))


def save_framework(framework: Framework, path, partition=None):
    with open(path, "w") as fh:
        json.dump(framework_to_dict(framework, partition), fh, indent=2)
        fh.write("\n")


def stress_from_dict(data: dict) -> StressMatrix:
    """Build a StressMatrix from {"n": int, "entries": [[...], ...]}."""
    n = int(_require(data, "n", "stress"))
    entries = _require(data, "entries", "stress")
    try:
        stress = StressMatrix(entries)
    except (ValueError, TypeError) as exc:
        raise ParseError(f"stress: {exc}") from exc
    if stress.n != n:
        raise ParseError(f"stress: entries are {stress.n}x{stress.n}, header says {n}")
    return stress


def load_stress(path) -> StressMatrix:
    return stress_from_dict(_load_json(path))


def save_stress(stress: StressMatrix, path):
    with open(path, "w") as fh:
        json.dump({"n": stress.n, "entries": stress.entries.tolist()}, fh, indent=2)
        fh.write("\n")


def weights_from_dict(data: dict) -> dict:
    """Build an edge -> weight mapping from {"edges": [[i, j, w], ...]}."""
    rows = _require(data, "edges", "weights")
    weights = {}
    for row in rows:
        if len(row) != 3:
            raise ParseError(f"weights: row {row!r} is not [i, j, w]")
        i, j, w = int(row[0]), int(row[1]), float(row[2])
        edge = (min(i, j), max(i, j))
        if edge in weights and weights[edge] != w:
            raise ParseError(f"weights: conflicting values for edge {edge}")
        weights[edge] = w
    return weights


def weights_to_dict(weights: dict) -> dict:
    rows = [[i, j, float(w)] for (i, j), w in sorted(weights.items())]
    return {"edges": rows}


def load_weights(path) -> dict:
    return weights_from_dict(_load_json(path))


def save_weights(weights: dict, path):
    with open(path, "w") as fh:
        json.dump(weights_to_dict(weights), fh, indent=2)
        fh.write("\n")


def schedule_from_dict(data: dict) -> ManoeuvreSchedule:
    """Build a ManoeuvreSchedule from {"segments": [{...}, ...]}."""
    segments = []
    for raw in _require(data, "segments", "schedule"):
        try:
            segments.append(
                ScheduleSegment(
                    k0=int(_require(raw, "k0", "schedule segment")),
                    k1=int(_require(raw, "k1", "schedule segment")),
                    kind=str(_require(raw, "kind", "schedule segment")),
                    params=dict(raw.get("params", {})),
                    interp=str(raw.get("interp", "hold")),
                )
            )
        except (ValueError, TypeError) as exc:
            raise ParseError(f"schedule: {exc}") from exc
    try:
        return ManoeuvreSchedule(tuple(segments))
    except ValueError as exc:
        raise ParseError(f"schedule: {exc}") from exc


def schedule_to_dict(schedule: ManoeuvreSchedule) -> dict:
    return {
        "segments": [
            {
                "k0": seg.k0,
                "k1": seg.k1,
                "kind": seg.kind,
                "params": dict(seg.params),
                "interp": seg.interp,
            }
            for seg in schedule.segments
        ]
    }


def load_schedule(path) -> ManoeuvreSchedule:
    return schedule_from_dict(_load_json(path))


def _resolve(value, base_dir: Path):
    """Inline mapping, or a path (relative to the referencing file)."""
    if isinstance(value, str):
        path = Path(value)
        if not path.is_absolute():
            path = base_dir / path
        return _load_json(path)
    return value


def scenario_from_dict(data: dict, base_dir=".") -> ScenarioSpec:
    """Build a ScenarioSpec from a scenario mapping.

    The framework, weights and schedule fields accept either inline
    mappings or path strings resolved against base_dir. Omitted weights
    request synthesis.
    """
    base_dir = Path(base_dir)
    framework, partition = framework_from_dict(
        _resolve(_require(data, "framework", "scenario"), base_dir)
    )
    if partition is None:
        raise ParseError("scenario: framework must declare leaders")
    law = str(_require(data, "law", "scenario"))
    initial = _require(data, "initial_followers", "scenario")

    weights = None
    if data.get("weights") is not None:
        weights = weights_from_dict(_resolve(data["weights"], base_dir))
    schedule = ManoeuvreSchedule()
    if data.get("schedule") is not None:
        schedule = schedule_from_dict(_resolve(data["schedule"], base_dir))

    plant = None
    q_matrix = None
    if data.get("plant") is not None:
        raw = _resolve(data["plant"], base_dir)
        try:
            plant = LinearPlant(_require(raw, "A", "plant"), _require(raw, "B", "plant"))
        except (ValueError, TypeError) as exc:
            raise ParseError(f"plant: {exc}") from exc
        if data.get("q") is not None:
            q_matrix = np.array(data["q"], dtype=float)

    try:
        return ScenarioSpec(
            framework=framework,
            partition=partition,
            law=law,
            T=float(data.get("T", 1.0)),
            initial_followers=initial,
            weights=weights,
            schedule=schedule,
            budget=int(data.get("budget", 2000)),
            tolerance=float(data.get("tolerance", 1e-9)),
            seed=int(data.get("seed", 0)),
            plant=plant,
            q_matrix=q_matrix,
            epsilon=float(data.get("epsilon", 0.0)),
            riccati_tol=float(data.get("riccati_tol", 1e-10)),
        )
    except (ValueError, TypeError) as exc:
        raise ParseError(f"scenario: {exc}") from exc


def scenario_to_dict(spec: ScenarioSpec) -> dict:
    """Fully-inline scenario mapping (no external file references)."""
    data = {
        "framework": framework_to_dict(spec.framework, spec.partition),
        "law": spec.law,
        "T": spec.T,
        "initial_followers": spec.initial_followers.tolist(),
        "weights": None if spec.weights is None else weights_to_dict(spec.weights),
        "schedule": schedule_to_dict(spec.schedule),
        "budget": spec.budget,
        "tolerance": spec.tolerance,
        "seed": spec.seed,
    }
    if spec.plant is not None:
        data["plant"] = {"A": spec.plant.A.tolist(), "B": spec.plant.B.tolist()}
        data["q"] = spec.q_matrix.tolist()
        data["epsilon"] = spec.epsilon
        data["riccati_tol"] = spec.riccati_tol
    return data


def load_scenario(path) -> ScenarioSpec:
    """Load a scenario or manifest file into a ScenarioSpec."""
    path = Path(path)
    data = _load_json(path)
    if "scenario" in data:
        return scenario_from_dict(_require(data, "scenario", "manifest"), path.parent)
    return scenario_from_dict(data, path.parent)


def manifest_dict(spec: ScenarioSpec, scenario_path, out_dir) -> dict:
    return {
        "kind": "run-manifest",
        "tool_version": __version__,
        "seed": spec.seed,
        "inputs": {"scenario": str(scenario_path)},
        "out_dir": str(out_dir),
        "scenario": scenario_to_dict(spec),
    }


def save_manifest(spec: ScenarioSpec, scenario_path, out_dir, path):
    with open(path, "w") as fh:
        json.dump(manifest_dict(spec, scenario_path, out_dir), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_matrix(path) -> np.ndarray:
    data = _load_json(path)
    if isinstance(data, dict):
        data = _require(data, "matrix", "matrix file")
    try:
        mat = np.array(data, dtype=float)
    except (ValueError, TypeError) as exc:
        raise ParseError(f"{path}: {exc}") from exc
    if mat.ndim == 1:
        mat = mat.reshape(1, -1) if mat.size else mat.reshape(0, 0)
    if mat.ndim != 2:
        raise ParseError(f"{path}: expected a 2-D array")
    return mat


def write_trace(records, n: int, d: int, path):
    """Write trace records to CSV, one row per (step, agent, coordinate)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRACE_HEADER)
        for rec in records:
            state = rec.x.reshape(n, d)
            flags = (int(rec.converged), int(rec.diverged))
            for agent in range(1, n + 1):
                for coord in range(d):
                    writer.writerow(
                        (
                            rec.k,
                            agent,
                            coord,
                            repr(float(state[agent - 1, coord])),
                            repr(float(rec.delta_norm)),
                            flags[0],
                            flags[1],
                        )
                    )


def read_trace(path):
    """Read back a trace CSV as a list of row tuples (strings preserved)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != TRACE_HEADER:
            raise ParseError(f"{path}: unexpected trace header {header}")
        return [tuple(row) for row in reader]


def _json_safe(value):
    if isinstance(value, dict):
        return {k: _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if np.isfinite(value) else repr(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.bool_,)):
        return bool(value)
    return value


def summary_dict(result: RunResult, partition: LeaderPartition, d: int) -> dict:
    final = result.records[-1].x.reshape(partition.n, d)
    return _json_safe(
        {
            "final_delta": result.final_delta,
            "steps": result.steps,
            "converged_at": result.converged_at,
            "theorem_flags": result.stability_flags,
            "diverged": result.diverged,
            "budget_exhausted": result.budget_exhausted,
            "final_followers": [final[i - 1].tolist() for i in partition.followers],
            "final_leaders": [final[i - 1].tolist() for i in partition.leaders],
        }
    )


def write_summary(result: RunResult, partition: LeaderPartition, d: int, path):
    with open(path, "w") as fh:
        json.dump(summary_dict(result, partition, d), fh, indent=2, sort_keys=True)
        fh.write("\n")
