from __future__ import annotations

import numpy as np
import pytest

from rhconsensus import build_topology, gamma_spectrum, has_spanning_tree
from rhconsensus.errors import (
    NonBinaryEntryError,
    NonSquareError,
    SelfLoopError,
    ZeroInDegreeError,
)

from conftest import CASE1_ADJACENCY, CASE2_ADJACENCY

TWO_CYCLE = [[0, 1], [1, 0]]
DISJOINT_CYCLES = [
    [0, 1, 0, 0],
    [1, 0, 0, 0],
    [0, 0, 0, 1],
    [0, 0, 1, 0],
]


def test_case1_normalized_laplacian_matches_print():
    top = build_topology(CASE1_ADJACENCY)
    expected = np.array(
        [
            [1, -1 / 2, 0, 0, -1 / 2],
            [0, 1, -1, 0, 0],
            [0, 0, 1, -1, 0],
            [-1 / 2, 0, -1 / 2, 1, 0],
            [-1 / 3, -1 / 3, -1 / 3, 0, 1],
        ]
    )
    assert np.allclose(top.gamma, expected, atol=1e-15)
    assert np.array_equal(top.in_degrees, [2, 1, 1, 2, 3])


def test_case2_normalized_laplacian_matches_print():
    top = build_topology(CASE2_ADJACENCY)
    expected = np.array([[1, -1 / 2, -1 / 2], [0, 1, -1], [-1 / 2, -1 / 2, 1]])
    assert np.allclose(top.gamma, expected, atol=1e-15)


def test_two_cycle_normalized_laplacian():
    top = build_topology(TWO_CYCLE)
    assert np.array_equal(top.gamma, [[1, -1], [-1, 1]])


def test_validation_errors():
    with pytest.raises(NonSquareError):
        build_topology([[0, 1, 0], [1, 0, 0]])
    with pytest.raises(SelfLoopError):
        build_topology([[1, 1], [1, 0]])
    with pytest.raises(ZeroInDegreeError):
        build_topology([[0, 0, 1], [1, 0, 0], [0, 0, 0]])
    with pytest.raises(NonBinaryEntryError):
        build_topology([[0, 0.5], [1, 0]])


def test_topology_invariants_on_random_graphs():
    rng = np.random.default_rng(20240601)
    for _ in range(200):
        m = int(rng.integers(2, 9))
        adj = (rng.random((m, m)) < 0.4).astype(float)
        np.fill_diagonal(adj, 0.0)
        for i in range(m):
            if adj[i].sum() < 1:
                adj[i, (i + 1) % m] = 1.0
        top = build_topology(adj)
        assert np.allclose(top.a_tilde.sum(axis=1), 1.0, atol=1e-12)
        assert np.allclose(top.gamma @ np.ones(m), 0.0, atol=1e-12)
        assert np.allclose(top.gamma, np.eye(m) - top.a_tilde, atol=1e-15)
        assert np.allclose(top.laplacian, top.degree_matrix - adj, atol=1e-15)


def test_spanning_tree_case_studies():
    assert has_spanning_tree(build_topology(CASE1_ADJACENCY))
    assert has_spanning_tree(build_topology(CASE2_ADJACENCY))


def test_spanning_tree_disconnected_components():
    assert not has_spanning_tree(build_topology(DISJOINT_CYCLES))


def test_two_cycle_spectrum():
    spectrum = gamma_spectrum(build_topology(TWO_CYCLE))
    assert np.allclose(spectrum, [0.0, 2.0], atol=1e-15)


def test_case2_spectrum_double_eigenvalue():
    # characteristic polynomial in mu = 1 - lambda factors as (mu-1)(mu+1/2)^2,
    # so the spectrum is {0, 1.5, 1.5} with the 1.5 eigenvalue defective
    spectrum = gamma_spectrum(build_topology(CASE2_ADJACENCY))
    assert np.allclose(spectrum, [0.0, 1.5, 1.5], atol=1e-9)


def test_case1_spectrum_simple_zero():
    top = build_topology(CASE1_ADJACENCY)
    spectrum = gamma_spectrum(top)
    assert len(spectrum) == 5
    assert abs(spectrum[0]) <= 1e-12
    assert all(abs(z) > 1e-8 for z in spectrum[1:])
    # numpy's eigensolver sees the same multiset (all eigenvalues simple here)
    dense = sorted(np.linalg.eigvals(top.gamma), key=lambda z: (abs(z), z.real, z.imag))
    assert np.allclose(spectrum, dense, atol=1e-8)


def test_spectrum_invariant_under_relabeling():
    rng = np.random.default_rng(7)
    for _ in range(50):
        m = int(rng.integers(2, 8))
        adj = (rng.random((m, m)) < 0.5).astype(float)
        np.fill_diagonal(adj, 0.0)
        for i in range(m):
            if adj[i].sum() < 1:
                adj[i, (i + 1) % m] = 1.0
        perm = rng.permutation(m)
        relabeled = adj[np.ix_(perm, perm)]
        original = sorted(
            gamma_spectrum(build_topology(adj)), key=lambda z: (z.real, z.imag)
        )
        shuffled = sorted(
            gamma_spectrum(build_topology(relabeled)), key=lambda z: (z.real, z.imag)
        )
        assert np.allclose(original, shuffled, atol=1e-9)


def test_spectrum_size_always_m():
    rng = np.random.default_rng(11)
    for _ in range(30):
        m = int(rng.integers(2, 9))
        adj = (rng.random((m, m)) < 0.4).astype(float)
        np.fill_diagonal(adj, 0.0)
        for i in range(m):
            if adj[i].sum() < 1:
                adj[i, (i + 1) % m] = 1.0
        assert len(gamma_spectrum(build_topology(adj))) == m
