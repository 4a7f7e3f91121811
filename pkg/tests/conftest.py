from __future__ import annotations

import numpy as np
import pytest

from rhconsensus import LinearSystem, RhcDesign, build_topology

CASE1_ADJACENCY = [
    [0, 1, 0, 0, 1],
    [0, 0, 1, 0, 0],
    [0, 0, 0, 1, 0],
    [1, 0, 1, 0, 0],
    [1, 1, 1, 0, 0],
]

CASE2_ADJACENCY = [
    [0, 1, 1],
    [0, 0, 1],
    [1, 1, 0],
]


@pytest.fixture(scope="session")
def case1():
    system = LinearSystem(A=[[2.0]], B=[[1.0]])
    topology = build_topology(CASE1_ADJACENCY)
    design = RhcDesign(Q=[[2.0]], QN=[[6.0]], R=[[1.0]], horizon=3, bound_mode="paper")
    return system, topology, design


@pytest.fixture(scope="session")
def case2():
    system = LinearSystem(A=[[2.0, 0.0], [1.2, -1.0]], B=[[1.0], [1.0]])
    topology = build_topology(CASE2_ADJACENCY)
    design = RhcDesign(
        Q=np.diag([2.0, 2.0]),
        QN=np.diag([15.0, 20.0]),
        R=[[1.0]],
        horizon=10,
        bound_mode="paper",
    )
    return system, topology, design


def random_spanning_tree_adjacency(rng, m: int, extra_edge_prob: float = 0.3):
    """Adjacency whose information-flow graph is spanned from agent 0."""
    adj = np.zeros((m, m))
    for i in range(1, m):
        adj[i, int(rng.integers(0, i))] = 1.0
    adj[0, int(rng.integers(1, m))] = 1.0
    for i in range(m):
        for j in range(m):
            if i != j and rng.random() < extra_edge_prob:
                adj[i, j] = 1.0
    return adj


def random_controllable_system(rng, n: int, m: int, spectral_scale=None):
    while True:
        A = rng.normal(size=(n, n))
        if spectral_scale is not None:
            radius = max(1e-9, float(np.abs(np.linalg.eigvals(A)).max()))
            A *= spectral_scale / radius
        B = rng.normal(size=(n, m))
        ctrb = np.hstack([np.linalg.matrix_power(A, k) @ B for k in range(n)])
        if np.linalg.matrix_rank(ctrb) == n:
            return LinearSystem(A=A, B=B)


def random_spd(rng, n: int, scale: float = 1.0):
    x = rng.normal(size=(n, n))
    return scale * (x @ x.T + 0.1 * np.eye(n))


def random_design(rng, n: int, m: int, horizon=None, monotone: bool = True):
    q = random_spd(rng, n)
    qn = random_spd(rng, n)
    if monotone:
        qn = qn + (2.0 + 5.0 * rng.random()) * float(np.trace(q)) * np.eye(n)
    return RhcDesign(
        Q=q,
        QN=qn,
        R=random_spd(rng, m),
        horizon=int(rng.integers(1, 9)) if horizon is None else horizon,
    )
