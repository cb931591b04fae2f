import numpy as np
import pytest

from affinesim import (
    Configuration,
    Framework,
    Graph,
    LeaderPartition,
    LocalizabilityError,
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
from affinesim.stress import stress_basis

from conftest import EDGES, EXACT_WEIGHTS, FOLLOWER_TARGETS, MU_MAX, MU_MIN


def test_assemble_matches_hand_blocks(exact_stress):
    # Spot-check entries against the defining weights.
    m = exact_stress.entries
    assert m[0, 1] == -0.292
    assert m[3, 4] == -0.5
    assert m[0, 4] == 0.0  # no edge between 1 and 5
    assert m[3, 3] == pytest.approx(1.292, abs=1e-12)
    assert m[4, 4] == pytest.approx(0.25, abs=1e-12)


def test_assemble_row_sums_vanish(graph):
    rng = np.random.default_rng(3)
    for _ in range(50):
        weights = {e: rng.normal() for e in EDGES}
        stress = assemble_stress(graph, weights)
        scale = max(1.0, np.abs(stress.entries).max())
        assert stress.row_sum_defect() <= 1e-12 * scale


def test_assemble_rejects_bad_weights(graph):
    with pytest.raises(ValueError):
        assemble_stress(graph, {(1, 5): 1.0, **EXACT_WEIGHTS})
    missing = dict(EXACT_WEIGHTS)
    del missing[(4, 5)]
    with pytest.raises(ValueError):
        assemble_stress(graph, missing)
    with pytest.raises(ValueError):
        assemble_stress(graph, {**EXACT_WEIGHTS, (5, 4): 0.7})
    # Same value under both orientations is fine.
    both = {**EXACT_WEIGHTS, (5, 4): 0.5}
    assert assemble_stress(graph, both).entries[3, 4] == -0.5


def test_stress_matrix_validation():
    with pytest.raises(ValueError):
        StressMatrix([[0.0, 1.0], [0.5, 0.0]])  # not symmetric
    with pytest.raises(ValueError):
        StressMatrix([[1.0, 0.0], [0.0, 1.0]])  # row sums far from zero
    with pytest.raises(ValueError):
        StressMatrix(np.ones((2, 3)))


def test_rounded_matrix_is_accepted(rounded_stress):
    # 3-decimal rounding leaves a small row-sum defect, within the slack.
    assert 0 < rounded_stress.row_sum_defect() <= 2e-3


def test_verify_equilibrium(exact_stress, rounded_stress, reference):
    assert verify_equilibrium(exact_stress, reference) <= 1e-12
    assert verify_equilibrium(rounded_stress, reference) <= 1e-3
    with pytest.raises(ValueError):
        verify_equilibrium(exact_stress, Configuration([(0, 0), (1, 1)]))


def test_partition_blocks(exact_stress, partition, blocks):
    np.testing.assert_allclose(blocks.ff, [[1.292, -0.5], [-0.5, 0.25]], atol=1e-12)
    np.testing.assert_allclose(
        blocks.fl, [[0.292, -0.542, -0.542], [0.0, 0.125, 0.125]], atol=1e-12
    )
    assert np.array_equal(blocks.fl, blocks.lf.T)
    rebuilt = reassemble_stress(blocks, partition)
    assert np.array_equal(rebuilt.entries, exact_stress.entries)


def test_partition_nontrivial_order(exact_stress):
    # Leaders need not be the lowest-numbered nodes.
    part = LeaderPartition.from_leaders([2, 4, 5], 5)
    blocks = partition_stress(exact_stress, part)
    rebuilt = reassemble_stress(blocks, part)
    assert np.array_equal(rebuilt.entries, exact_stress.entries)


def test_blocks_transpose_validation():
    with pytest.raises(ValueError):
        StressBlocks(ll=np.eye(2), lf=np.ones((2, 1)), fl=np.zeros((1, 2)), ff=np.eye(1))


def test_certificate_exact_stress(exact_stress, framework):
    cert = check_rigidity_certificate(exact_stress, framework)
    assert cert.rank == 2 == cert.expected_rank
    assert cert.min_eigenvalue >= -1e-8
    assert cert.psd and cert.connectivity_ok and cert.passed


def test_certificate_rounding_sensitivity(rounded_stress, framework):
    # Rounding to 3 decimals perturbs the spectrum enough to break the
    # strict rank/PSD checks.
    cert = check_rigidity_certificate(rounded_stress, framework)
    assert not cert.passed


def test_certificate_rejects_small_frameworks():
    g = Graph(3, [(1, 2), (1, 3), (2, 3)])
    fw = Framework(g, Configuration([(0, 0), (1, 0), (0, 1)]))
    stress = StressMatrix(np.zeros((3, 3)))
    with pytest.raises(ValueError):
        check_rigidity_certificate(stress, fw)


def test_follower_targets(blocks, reference):
    leaders = reference.positions[:3].ravel()
    targets = follower_targets(blocks, leaders)
    np.testing.assert_allclose(targets, np.ravel(FOLLOWER_TARGETS), atol=1e-12)


def test_follower_targets_singular_block():
    blocks = StressBlocks(
        ll=np.zeros((2, 2)), lf=np.ones((2, 1)), fl=np.ones((1, 2)), ff=np.zeros((1, 1))
    )
    with pytest.raises(LocalizabilityError):
        follower_targets(blocks, np.zeros(4))


def test_min_eig_neg_ff(blocks):
    assert min_eig_neg_ff(blocks) == pytest.approx(MU_MIN, abs=1e-12)
    eigs = np.linalg.eigvalsh(-blocks.ff)
    np.testing.assert_allclose(sorted(eigs), [MU_MIN, MU_MAX], atol=1e-12)


def test_stress_basis_dimensions(framework):
    edges, basis = stress_basis(framework)
    assert len(edges) == 9
    assert basis.shape == (9, 2)

    # Complete graph on 4 generic points in the plane: 1-dim stress space.
    k4 = Graph(4, [(i, j) for i in range(1, 5) for j in range(i + 1, 5)])
    config = Configuration([(0.0, 0.0), (3.0, 0.1), (-0.2, 3.0), (1.1, 0.9)])
    _, basis4 = stress_basis(Framework(k4, config))
    assert basis4.shape == (6, 1)


def test_synthesize_benchmark(framework, reference):
    weights = synthesize_stress(framework, seed=0)
    stress = assemble_stress(framework.graph, weights)
    assert verify_equilibrium(stress, reference) <= 1e-9
    assert check_rigidity_certificate(stress, framework).passed


def test_synthesize_deterministic(framework):
    w1 = synthesize_stress(framework, seed=12)
    w2 = synthesize_stress(framework, seed=12)
    assert w1 == w2


def test_synthesize_k4(framework):
    k4 = Graph(4, [(i, j) for i in range(1, 5) for j in range(i + 1, 5)])
    config = Configuration([(0.0, 0.0), (3.0, 0.1), (-0.2, 3.0), (1.1, 0.9)])
    fw = Framework(k4, config)
    weights = synthesize_stress(fw, seed=0)
    assert check_rigidity_certificate(assemble_stress(k4, weights), fw).passed


def test_synthesize_rejects_weak_graphs():
    path = Graph(4, [(1, 2), (2, 3), (3, 4)])
    fw = Framework(path, Configuration([(0, 0), (1, 0.2), (2, -0.1), (3, 0.3)]))
    with pytest.raises(SynthesisError):
        synthesize_stress(fw)

    tri = Graph(3, [(1, 2), (1, 3), (2, 3)])
    fw3 = Framework(tri, Configuration([(0, 0), (1, 0), (0, 1)]))
    with pytest.raises(SynthesisError):
        synthesize_stress(fw3)
