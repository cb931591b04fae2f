"""Affine transforms of a reference configuration and step-indexed
manoeuvre schedules that drive the leader agents."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .framework import Configuration, LeaderPartition

KINDS = ("translation", "scaling", "rotation", "shear")
INTERPS = ("hold", "linear")


@dataclass(frozen=True)
class AffineTransform:
    """Pair (theta, b) acting on points as p -> theta @ p + b.

    theta may be any real d x d matrix, singular ones included; the target
    family the followers are steered through is the full affine image of
    the reference, not just its rigid motions.
    """

    theta: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        theta = np.array(self.theta, dtype=float)
        b = np.array(self.b, dtype=float)
        if theta.ndim != 2 or theta.shape[0] != theta.shape[1]:
            raise ValueError("theta must be square")
        if b.ndim != 1 or b.shape[0] != theta.shape[0]:
            raise ValueError("b must be a vector matching theta")
        if not (np.isfinite(theta).all() and np.isfinite(b).all()):
            raise ValueError("transform entries must be finite")
        theta.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "b", b)

    @property
    def d(self) -> int:
        return self.theta.shape[0]

    @classmethod
    def identity(cls, d: int) -> "AffineTransform":
        return cls(np.eye(d), np.zeros(d))

    def compose(self, inner: "AffineTransform") -> "AffineTransform":
        """Transform equivalent to applying inner first, then self."""
        if inner.d != self.d:
            raise ValueError("dimension mismatch in composition")
        return AffineTransform(self.theta @ inner.theta, self.theta @ inner.b + self.b)


def apply_affine(transform: AffineTransform, reference: Configuration) -> Configuration:
    """Image of a configuration under an affine transform."""
    if transform.d != reference.d:
        raise ValueError(
            f"transform is {transform.d}-dimensional but configuration is {reference.d}-dimensional"
        )
    return Configuration(reference.positions @ transform.theta.T + transform.b)


def make_transform(kind: str, params: dict, d: int, s: float) -> AffineTransform:
    """Interpolated manoeuvre transform at progress s in [0, 1].

    s=0 is the identity, s=1 the full parameter. Rotation interpolates the
    angle, the other kinds interpolate entries linearly. Rotation and shear
    act in a coordinate plane given by params["axes"] (0-based, default
    [0, 1]); shear axes are [target, source]: target += factor * source.
    """
    if not 0.0 <= s <= 1.0:
        raise ValueError(f"progress must lie in [0, 1], got {s}")
    if kind == "translation":
        v = np.asarray(params["v"], dtype=float)
        if v.shape != (d,):
            raise ValueError(f"translation vector must have length {d}")
        return AffineTransform(np.eye(d), s * v)
    if kind == "scaling":
        if "diag" in params:
            full = np.asarray(params["diag"], dtype=float)
            if full.shape != (d,):
                raise ValueError(f"scaling diagonal must have length {d}")
        else:
            full = float(params["c"]) * np.ones(d)
        return AffineTransform(np.diag(1.0 + s * (full - 1.0)), np.zeros(d))
    if kind in ("rotation", "shear"):
        a0, a1 = (int(a) for a in params.get("axes", (0, 1)))
        if not (0 <= a0 < d and 0 <= a1 < d) or a0 == a1:
            raise ValueError(f"axes ({a0}, {a1}) invalid for dimension {d}")
        theta = np.eye(d)
        if kind == "rotation":
            angle = s * float(params["angle"])
            theta[a0, a0] = np.cos(angle)
            theta[a1, a1] = np.cos(angle)
            theta[a0, a1] = -np.sin(angle)
            theta[a1, a0] = np.sin(angle)
        else:
            theta[a0, a1] = s * float(params["factor"])
        return AffineTransform(theta, np.zeros(d))
    raise ValueError(f"unknown manoeuvre kind {kind!r}")


@dataclass(frozen=True)
class ScheduleSegment:
    """One manoeuvre over steps [k0, k1].

    interp "hold" applies the full transform from k0 on; "linear" ramps the
    progress from 0 at k0 to 1 at k1. After k1 the segment stays at full
    progress.
    """

    k0: int
    k1: int
    kind: str
    params: dict = field(default_factory=dict)
    interp: str = "hold"

    def __post_init__(self):
        if self.k0 < 0 or self.k1 < self.k0:
            raise ValueError(f"need 0 <= k0 <= k1, got [{self.k0}, {self.k1}]")
        if self.kind not in KINDS:
            raise ValueError(f"unknown manoeuvre kind {self.kind!r}")
        if self.interp not in INTERPS:
            raise ValueError(f"unknown interpolation {self.interp!r}")

    def progress(self, k: int) -> float:
        if k < self.k0:
            return 0.0
        if self.interp == "hold" or self.k1 == self.k0:
            return 1.0
        return min(1.0, (k - self.k0) / (self.k1 - self.k0))


@dataclass(frozen=True)
class ManoeuvreSchedule:
    """Ordered, non-overlapping manoeuvre segments.

    Segments compose cumulatively: each acts on the formation already
    transformed by the segments before it. Before the first segment the
    transform is the identity (leaders sit at the reference); after the
    last segment the final transform holds.
    """

    segments: tuple = ()

    def __post_init__(self):
        segments = tuple(self.segments)
        for seg in segments:
            if not isinstance(seg, ScheduleSegment):
                raise TypeError("segments must be ScheduleSegment instances")
        for prev, cur in zip(segments, segments[1:]):
            if cur.k0 <= prev.k1:
                raise ValueError(
                    f"segments overlap: [{prev.k0}, {prev.k1}] then [{cur.k0}, {cur.k1}]"
                )
        object.__setattr__(self, "segments", segments)

    def transform_at(self, d: int, k: int) -> AffineTransform:
        """Cumulative transform in effect at step k."""
        if k < 0:
            raise ValueError("step index must be nonnegative")
        total = AffineTransform.identity(d)
        for seg in self.segments:
            if k < seg.k0:
                break
            total = make_transform(seg.kind, seg.params, d, seg.progress(k)).compose(total)
        return total

    def last_step(self) -> int:
        return self.segments[-1].k1 if self.segments else 0


def leader_waypoints(
    schedule: ManoeuvreSchedule,
    reference: Configuration,
    partition: LeaderPartition,
    k: int,
):
    """Leader positions at steps k and k+1 as a pair of (n_l, d) arrays.

    The dynamic law consumes both endpoints of the sampling interval, so
    the pair is produced together. Steps past the schedule hold the final
    transform, leaving the leaders stationary.
    """
    if k < 0:
        raise ValueError("step index must be nonnegative")
    if partition.n != reference.n:
        raise ValueError("partition does not match configuration")
    rows = [i - 1 for i in partition.leaders]
    now = apply_affine(schedule.transform_at(reference.d, k), reference)
    nxt = apply_affine(schedule.transform_at(reference.d, k + 1), reference)
    return now.positions[rows], nxt.positions[rows]
