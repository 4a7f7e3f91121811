"""Directed communication topology: degrees, Laplacians, and spectra.

Conventions: adjacency entry a_ij = 1 means agent i receives the state of
agent j, so information flows along the edge j -> i. Every agent must have
at least one in-neighbor (the per-agent input weight rule and the
row-normalized adjacency are undefined otherwise), and self-loops are
rejected.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import _polyroots
from .errors import (
    EigenFailureError,
    MethodDisagreementError,
    NonBinaryEntryError,
    NonSquareError,
    SelfLoopError,
    ZeroInDegreeError,
)

# Relative tolerance classifying an eigenvalue of Gamma as the zero mode.
TOL_ZERO = 1e-8


@dataclass(frozen=True)
class Digraph:
    """Validated 0/1 adjacency of a directed graph without self-loops."""

    adjacency: np.ndarray

    @property
    def size(self) -> int:
        return self.adjacency.shape[0]


@dataclass(frozen=True)
class Topology:
    """A digraph together with its derived degree and Laplacian matrices.

    Attributes:
        digraph: the validated adjacency wrapper.
        in_degrees: number of in-neighbors per agent.
        degree_matrix: diag(in_degrees).
        laplacian: L = D - A (integer entries).
        a_tilde: row-normalized adjacency, every row sums to 1.
        gamma: normalized Laplacian Gamma = D^-1 L = I - a_tilde.
    """

    digraph: Digraph
    in_degrees: np.ndarray
    degree_matrix: np.ndarray
    laplacian: np.ndarray
    a_tilde: np.ndarray
    gamma: np.ndarray

    @property
    def size(self) -> int:
        return self.digraph.size

    def in_neighbors(self, i: int) -> tuple[int, ...]:
        return tuple(int(j) for j in np.flatnonzero(self.digraph.adjacency[i]))


def _freeze(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def build_topology(adjacency) -> Topology:
    """Validate an adjacency matrix and derive the topology matrices.

    Args:
        adjacency: square array-like with entries in {0, 1}, zero diagonal,
            and at least one 1 per row.

    Raises:
        NonSquareError, SelfLoopError, NonBinaryEntryError, ZeroInDegreeError
    """
    adj = np.asarray(adjacency, dtype=float)
    if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
        raise NonSquareError(f"adjacency must be square, got shape {adj.shape}")
    m = adj.shape[0]
    if m < 2:
        raise NonSquareError("at least two agents are required")
    for i in range(m):
        for j in range(m):
            if adj[i, j] not in (0.0, 1.0):
                raise NonBinaryEntryError(i, j, adj[i, j])
        if adj[i, i] != 0.0:
            raise SelfLoopError(i)
    degrees = adj.sum(axis=1)
    for i in range(m):
        if degrees[i] < 1:
            raise ZeroInDegreeError(i)
    deg_matrix = np.diag(degrees)
    laplacian = deg_matrix - adj
    a_tilde = adj / degrees[:, None]
    gamma = np.eye(m) - a_tilde
    return Topology(
        digraph=Digraph(_freeze(adj)),
        in_degrees=_freeze(degrees.astype(int)),
        degree_matrix=_freeze(deg_matrix),
        laplacian=_freeze(laplacian),
        a_tilde=_freeze(a_tilde),
        gamma=_freeze(gamma),
    )


def _reachability_spanning_tree(adj: np.ndarray) -> bool:
    # information flows j -> i when a_ij = 1; node r spans if a DFS along
    # flow edges starting at r visits everyone
    m = adj.shape[0]
    successors = [np.flatnonzero(adj[:, j]) for j in range(m)]
    for root in range(m):
        seen = np.zeros(m, dtype=bool)
        stack = [root]
        seen[root] = True
        while stack:
            j = stack.pop()
            for i in successors[j]:
                if not seen[i]:
                    seen[i] = True
                    stack.append(int(i))
        if seen.all():
            return True
    return False


def _laplacian_zero_multiplicity(laplacian: np.ndarray) -> int:
    entries = [[Fraction(int(round(v))) for v in row] for row in laplacian]
    return _polyroots.zero_root_multiplicity(_polyroots.charpoly(entries))


def has_spanning_tree(topology: Topology) -> bool:
    """Whether some agent's state can propagate to every other agent.

    Computed by reachability search along information-flow edges and
    cross-checked against the algebraic multiplicity of the zero eigenvalue
    of the Laplacian (simple zero iff a spanning tree exists). The Laplacian
    has integer entries, so the multiplicity is counted exactly.

    Raises:
        MethodDisagreementError: the two tests disagree (internal error).
    """
    by_reach = _reachability_spanning_tree(topology.digraph.adjacency)
    by_spectrum = _laplacian_zero_multiplicity(topology.laplacian) == 1
    if by_reach != by_spectrum:
        raise MethodDisagreementError(
            f"reachability says {by_reach} but zero-eigenvalue multiplicity "
            f"says {by_spectrum}"
        )
    return by_reach


def _gamma_fractions(topology: Topology) -> list[list[Fraction]]:
    adj = topology.digraph.adjacency
    degs = topology.in_degrees
    m = topology.size
    rows = []
    for i in range(m):
        d = int(degs[i])
        rows.append(
            [
                Fraction(int(i == j)) - Fraction(int(round(adj[i, j])), d)
                for j in range(m)
            ]
        )
    return rows


def gamma_spectrum(topology: Topology) -> np.ndarray:
    """Eigenvalues of the normalized Laplacian, zero mode first.

    The characteristic polynomial is computed exactly over rationals and
    factored square-free, so repeated eigenvalues (the normalized Laplacian
    is frequently defective) are returned with exact multiplicity instead of
    the sqrt(eps)-wide clusters a float eigensolver produces. Output is
    sorted by modulus, ties broken by real then imaginary part.

    Raises:
        EigenFailureError: the root finder did not converge.
        MethodDisagreementError: zero-mode count contradicts the
            spanning-tree test.
    """
    try:
        pairs = _polyroots.roots_with_multiplicity(
            _polyroots.charpoly(_gamma_fractions(topology))
        )
    except np.linalg.LinAlgError as exc:  # pragma: no cover - defensive
        raise EigenFailureError(str(exc)) from exc
    values: list[complex] = []
    for root, mult in pairs:
        values.extend([root] * mult)
    values.sort(key=lambda z: (abs(z), z.real, z.imag))
    spectrum = np.array(values, dtype=complex)
    scale = max(1.0, float(np.abs(topology.laplacian).max()))
    n_zero = int(np.sum(np.abs(spectrum) <= TOL_ZERO * scale))
    if has_spanning_tree(topology) and n_zero != 1:
        raise MethodDisagreementError(
            f"spanning tree present but {n_zero} zero eigenvalues found"
        )
    return spectrum


def nonzero_gamma_spectrum(topology: Topology) -> np.ndarray:
    """The eigenvalues of Gamma with modulus above the zero tolerance."""
    spectrum = gamma_spectrum(topology)
    scale = max(1.0, float(np.abs(topology.laplacian).max()))
    return spectrum[np.abs(spectrum) > TOL_ZERO * scale]
