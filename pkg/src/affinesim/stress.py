"""Stress matrices: assembly from edge weights, equilibrium verification,
the universal-rigidity certificate, leader/follower block partitioning,
follower-target computation, and a nullspace-search stress synthesizer."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .framework import (
    RANK_RTOL,
    Framework,
    Graph,
    LeaderPartition,
    affine_span_dimension,
    is_k_connected,
)

# A matrix is accepted as PSD when its smallest eigenvalue is above
# -PSD_ATOL * max(1, sigma_max).
PSD_ATOL = 1e-8
# Follower blocks with a worse 2-norm condition number are treated as singular.
COND_LIMIT = 1e12
# Row-sum slack, relative to the largest entry. Equilibrium stresses have
# exactly zero row sums; matrices transcribed from rounded decimal sources
# carry defects up to about the rounding quantum, which this admits.
ROW_SUM_SLACK = 1e-2


class LocalizabilityError(ValueError):
    """Follower stress block is singular or too ill-conditioned to invert."""


class SynthesisError(RuntimeError):
    """No positive-semidefinite stress of the required rank was found."""


@dataclass(frozen=True)
class StressMatrix:
    """Symmetric n x n stress matrix.

    Off-diagonal entries may take either sign (unlike a graph Laplacian);
    an equilibrium stress additionally has zero row sums and respects the
    graph sparsity. Assembly from edge weights guarantees both.
    """

    entries: np.ndarray

    def __post_init__(self):
        mat = np.array(self.entries, dtype=float)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1] or mat.shape[0] < 1:
            raise ValueError("stress matrix must be square and non-empty")
        if not np.isfinite(mat).all():
            raise ValueError("stress matrix must be finite")
        if not np.array_equal(mat, mat.T):
            raise ValueError("stress matrix must be symmetric")
        defect = np.abs(mat @ np.ones(mat.shape[0])).max()
        scale = max(1.0, np.abs(mat).max())
        if defect > ROW_SUM_SLACK * scale:
            raise ValueError(f"row sums deviate from zero by {defect:.3g}")
        mat.setflags(write=False)
        object.__setattr__(self, "entries", mat)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def row_sum_defect(self) -> float:
        return float(np.abs(self.entries @ np.ones(self.n)).max())


@dataclass(frozen=True)
class StressBlocks:
    """Leader/follower blocks of a stress matrix in leaders-first order."""

    ll: np.ndarray
    lf: np.ndarray
    fl: np.ndarray
    ff: np.ndarray

    def __post_init__(self):
        ll, lf, fl, ff = (np.array(b, dtype=float) for b in (self.ll, self.lf, self.fl, self.ff))
        n_l, n_f = ll.shape[0], ff.shape[0]
        if ll.shape != (n_l, n_l) or ff.shape != (n_f, n_f):
            raise ValueError("diagonal blocks must be square")
        if lf.shape != (n_l, n_f) or fl.shape != (n_f, n_l):
            raise ValueError("off-diagonal block shapes are inconsistent")
        if not np.array_equal(fl, lf.T):
            raise ValueError("follower-leader block must be the transpose of leader-follower")
        for b in (ll, lf, fl, ff):
            b.setflags(write=False)
        object.__setattr__(self, "ll", ll)
        object.__setattr__(self, "lf", lf)
        object.__setattr__(self, "fl", fl)
        object.__setattr__(self, "ff", ff)

    @property
    def n_leaders(self) -> int:
        return self.ll.shape[0]

    @property
    def n_followers(self) -> int:
        return self.ff.shape[0]

    def full(self) -> np.ndarray:
        """Reassembled matrix in leaders-first order."""
        return np.block([[self.ll, self.lf], [self.fl, self.ff]])


@dataclass(frozen=True)
class RigidityCertificate:
    """Outcome of the universal-rigidity check for a stress/framework pair."""

    rank: int
    expected_rank: int
    min_eigenvalue: float
    psd: bool
    connectivity_ok: bool
    passed: bool


def assemble_stress(graph: Graph, weights) -> StressMatrix:
    """Build a stress matrix from per-edge weights.

    Diagonal entries are the sums of incident weights, off-diagonal entries
    the negated weights, zero elsewhere, so row sums vanish by construction.
    Weights must be given for exactly the edges of the graph; providing both
    orientations of an edge is allowed only with identical values.
    """
    resolved = {}
    for key, value in weights.items():
        i, j = int(key[0]), int(key[1])
        edge = (min(i, j), max(i, j))
        if edge not in graph.edges:
            raise ValueError(f"weight given for non-edge ({i}, {j})")
        value = float(value)
        if edge in resolved and resolved[edge] != value:
            raise ValueError(f"asymmetric weights for edge {edge}")
        resolved[edge] = value
    missing = graph.edges - set(resolved)
    if missing:
        raise ValueError(f"missing weights for edges {sorted(missing)}")
    mat = np.zeros((graph.n, graph.n))
    for (i, j), w in sorted(resolved.items()):
        mat[i - 1, j - 1] = -w
        mat[j - 1, i - 1] = -w
        mat[i - 1, i - 1] += w
        mat[j - 1, j - 1] += w
    return StressMatrix(mat)


def verify_equilibrium(stress: StressMatrix, config) -> float:
    """Max-norm residual of the equilibrium condition at a configuration.

    Returns the largest entry of the stacked weighted position sums; an
    equilibrium stress for the configuration gives (near) zero.
    """
    if stress.n != config.n:
        raise ValueError(f"stress is {stress.n}x{stress.n} but configuration has {config.n} nodes")
    return float(np.abs(stress.entries @ config.positions).max())


def partition_stress(stress: StressMatrix, partition: LeaderPartition) -> StressBlocks:
    """Extract leader/follower blocks after reindexing leaders-first."""
    if partition.n != stress.n:
        raise ValueError("partition size does not match stress matrix")
    perm = [i - 1 for i in partition.order()]
    full = stress.entries[np.ix_(perm, perm)]
    n_l = partition.n_leaders
    return StressBlocks(
        ll=full[:n_l, :n_l],
        lf=full[:n_l, n_l:],
        fl=full[n_l:, :n_l],
        ff=full[n_l:, n_l:],
    )


def reassemble_stress(blocks: StressBlocks, partition: LeaderPartition) -> StressMatrix:
    """Inverse of partition_stress: blocks back to the original node order."""
    if partition.n != blocks.n_leaders + blocks.n_followers:
        raise ValueError("partition size does not match blocks")
    full = blocks.full()
    perm = [i - 1 for i in partition.order()]
    inverse = np.argsort(perm)
    return StressMatrix(full[np.ix_(inverse, inverse)])


def check_rigidity_certificate(stress: StressMatrix, framework: Framework) -> RigidityCertificate:
    """Universal-rigidity certificate: rank n-d-1, PSD, (d+1)-connected.

    The rank is numerical (eigenvalues below max(n, d) * sigma_max * 1e-10
    count as zero) and PSD allows a small negative floor scaled by the
    spectral radius.
    """
    if stress.n != framework.config.n:
        raise ValueError("stress size does not match framework")
    n, d = stress.n, framework.config.d
    if n < d + 2:
        raise ValueError(f"certificate needs n >= d+2 nodes, got n={n}, d={d}")
    eig = np.linalg.eigvalsh(stress.entries)
    scale = float(np.abs(eig).max())
    rank = int(np.sum(np.abs(eig) > max(n, d) * scale * RANK_RTOL)) if scale > 0 else 0
    min_eig = float(eig[0])
    psd = min_eig >= -PSD_ATOL * max(1.0, scale)
    connectivity_ok = is_k_connected(framework.graph, d + 1)
    expected = n - d - 1
    return RigidityCertificate(
        rank=rank,
        expected_rank=expected,
        min_eigenvalue=min_eig,
        psd=psd,
        connectivity_ok=connectivity_ok,
        passed=(rank == expected) and psd and connectivity_ok,
    )


def solve_follower_block(blocks: StressBlocks, rhs: np.ndarray) -> np.ndarray:
    """Solve ff_block @ X = rhs with a condition-number guard."""
    cond = np.linalg.cond(blocks.ff)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise LocalizabilityError(
            f"follower stress block is singular or near-singular (cond {cond:.3g}); "
            "the leader selection or stress is inadequate"
        )
    return np.linalg.solve(blocks.ff, rhs)


def follower_targets(blocks: StressBlocks, leader_targets) -> np.ndarray:
    """Follower target stack induced by the leader target stack.

    Solves ff_block @ F = -fl_block @ L columnwise per coordinate; the
    follower block must be well-conditioned for the targets to exist.
    """
    stack = np.asarray(leader_targets, dtype=float).ravel()
    n_l = blocks.n_leaders
    if n_l == 0 or stack.size % n_l != 0:
        raise ValueError(f"leader stack of length {stack.size} does not split over {n_l} leaders")
    d = stack.size // n_l
    leaders = stack.reshape(n_l, d)
    targets = -solve_follower_block(blocks, blocks.fl @ leaders)
    return targets.ravel()


def min_eig_neg_ff(blocks: StressBlocks) -> float:
    """Smallest eigenvalue of the negated follower block (mu_min)."""
    if not np.array_equal(blocks.ff, blocks.ff.T):
        raise ValueError("follower block must be symmetric")
    return float(np.linalg.eigvalsh(-blocks.ff)[0])


def equilibrium_constraint_matrix(framework: Framework):
    """Matrix mapping edge-weight vectors to stacked equilibrium residuals.

    Returns (edges, C) with edges sorted and C of shape (n*d, len(edges));
    weight vectors w with C @ w = 0 are exactly the equilibrium stresses.
    """
    pts = framework.config.positions
    d = framework.config.d
    edges = sorted(framework.graph.edges)
    C = np.zeros((framework.graph.n * d, len(edges)))
    for col, (i, j) in enumerate(edges):
        diff = pts[i - 1] - pts[j - 1]
        C[d * (i - 1) : d * i, col] = diff
        C[d * (j - 1) : d * j, col] = -diff
    return edges, C


def stress_basis(framework: Framework):
    """Orthonormal basis of the equilibrium-stress weight space.

    Returns (edges, basis) with basis of shape (len(edges), s); s may be 0.
    """
    edges, C = equilibrium_constraint_matrix(framework)
    m = len(edges)
    if m == 0:
        return edges, np.zeros((0, 0))
    _, sigma, vt = np.linalg.svd(C)
    tol = max(C.shape) * (sigma[0] if sigma.size else 0.0) * RANK_RTOL
    rank = int(np.sum(sigma > tol))
    return edges, vt[rank:].T.copy()


def synthesize_stress(framework: Framework, seed: int = 0, restarts: int = 20) -> dict:
    """Search the equilibrium-stress space for a certificate-passing stress.

    The weight space is the nullspace of the equilibrium constraint matrix;
    within it, coordinate ascent over unit-norm coefficient vectors maximizes
    the (d+2)-th smallest eigenvalue of the assembled matrix, which is
    positive exactly when the stress is PSD with the full allowed rank
    n-d-1. Restarts are seeded, so results are reproducible; the first
    restarts deterministically cover the +/- basis axes.

    Returns an edge -> weight mapping. Raises SynthesisError when the
    framework fails the structural preconditions, the stress space is
    trivial, or no restart certifies.
    """
    graph, config = framework.graph, framework.config
    n, d = graph.n, config.d
    if n < d + 2:
        raise SynthesisError(f"no valid certificate possible: n={n} < d+2={d + 2}")
    if not is_k_connected(graph, d + 1):
        raise SynthesisError(f"graph is not {d + 1}-connected")
    if affine_span_dimension(config.positions) != d:
        raise SynthesisError("configuration does not affinely span the ambient space")

    edges, basis = stress_basis(framework)
    s = basis.shape[1]
    if s == 0:
        raise SynthesisError("equilibrium-stress space is trivial (only the zero stress)")

    def objective(coeffs: np.ndarray) -> float:
        weights = basis @ coeffs
        mat = np.zeros((n, n))
        for col, (i, j) in enumerate(edges):
            w = weights[col]
            mat[i - 1, j - 1] -= w
            mat[j - 1, i - 1] -= w
            mat[i - 1, i - 1] += w
            mat[j - 1, j - 1] += w
        return float(np.linalg.eigvalsh(mat)[d + 1])

    rng = np.random.default_rng(seed)
    starts = []
    for axis in range(s):
        for sign in (1.0, -1.0):
            starts.append(sign * np.eye(s)[axis])
    while len(starts) < max(restarts, 2 * s):
        v = rng.normal(size=s)
        starts.append(v / np.linalg.norm(v))

    best_value = -np.inf
    best_coeffs = None
    for start in starts:
        coeffs = start.copy()
        value = objective(coeffs)
        step = 1.0
        while step > 1e-4:
            improved = False
            for axis in range(s):
                for sign in (1.0, -1.0):
                    trial = coeffs + sign * step * np.eye(s)[axis]
                    norm = np.linalg.norm(trial)
                    if norm < 1e-12:
                        continue
                    trial /= norm
                    trial_value = objective(trial)
                    if trial_value > value:
                        coeffs, value = trial, trial_value
                        improved = True
            if not improved:
                step /= 2.0
        if value > best_value:
            best_value, best_coeffs = value, coeffs

    if best_value <= 0.0:
        raise SynthesisError(
            f"search failed to certify: best spectral-gap objective {best_value:.3g} <= 0"
        )
    weights = dict(zip(edges, (basis @ best_coeffs).tolist()))
    certificate = check_rigidity_certificate(assemble_stress(graph, weights), framework)
    if not certificate.passed:
        raise SynthesisError(f"search result failed certification: {certificate}")
    return weights
