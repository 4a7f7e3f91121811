"""Consensus verdicts: the spectral iff test and the sufficient conditions.

Consensus holds iff the graph has a spanning tree and every matrix
A - BK + (lambda - 1) BG is Schur stable, where lambda runs over the nonzero
eigenvalues of the normalized Laplacian. The sufficient conditions trade that
per-mode eigencomputation for weight-design margins: a monotonicity margin on
the Riccati tables plus a per-mode positive definiteness margin (general
systems) or a quadratic-root threshold on the Delta bound (scalar systems).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .errors import (
    DimensionMismatchError,
    EigenFailureError,
    HeterogeneousWeightsError,
    MethodDisagreementError,
    NotScalarError,
    PreconditionViolatedError,
    UnstableUncoupledModeError,
)
from .graph import Topology, has_spanning_tree, nonzero_gamma_spectrum
from .protocol import GainSchedule, synthesize_gains
from .riccati import (
    LinearSystem,
    RhcDesign,
    check_p_monotonicity,
    delta_weight_bound,
    rho_bar,
    solve_delta_recursion,
    solve_p_recursion,
)


@dataclass(frozen=True)
class ModeStability:
    """One nonzero Laplacian eigenvalue and its closed-loop mode matrix."""

    lam: complex
    mode_matrix: np.ndarray
    radius: float


@dataclass(frozen=True)
class ConditionMargin:
    """Positive-definiteness margin of the design condition at one mode."""

    lam: complex
    lhs: np.ndarray
    min_eigenvalue: float


@dataclass(frozen=True)
class ScalarModeThreshold:
    """Quadratic-root threshold for one mode of a scalar system."""

    lam: complex
    c: float
    d: float
    theta: float


@dataclass(frozen=True)
class SufficiencyMargins:
    """Margins of the sufficient conditions; kind is "lti" or "scalar".

    The lti group carries the per-mode LHS matrices of the design condition;
    the scalar group carries the per-mode thresholds and the Delta bound
    value. Unused groups are None.
    """

    kind: str
    condition12_margin: float
    verdict: bool
    bound_mode: str
    xi: Optional[np.ndarray] = None
    y_weight: Optional[np.ndarray] = None
    m_bound: Optional[np.ndarray] = None
    condition13: tuple[ConditionMargin, ...] = ()
    alpha: Optional[float] = None
    a_c: Optional[float] = None
    mode_thresholds: tuple[ScalarModeThreshold, ...] = ()
    theta_min: Optional[float] = None
    bound_value: Optional[float] = None


@dataclass(frozen=True)
class ConsensusReport:
    """Outcome of the spectral iff test."""

    spanning_tree: bool
    modes: tuple[ModeStability, ...]
    max_radius: float
    verdict: bool
    margins: Optional[SufficiencyMargins] = None


def mode_matrix(system: LinearSystem, gains: GainSchedule, lam: complex) -> np.ndarray:
    """The per-mode closed-loop matrix A - BK + (lambda - 1) BG."""
    return (
        system.A
        - system.B @ gains.K_term
        + (lam - 1.0) * (system.B @ gains.G_term)
    )


def _spectral_radius(mat: np.ndarray) -> float:
    try:
        return float(np.abs(np.linalg.eigvals(mat)).max())
    except np.linalg.LinAlgError as exc:
        raise EigenFailureError(str(exc)) from exc


def _single_design(design: Union[RhcDesign, Sequence[RhcDesign]]) -> RhcDesign:
    if isinstance(design, RhcDesign):
        return design
    designs = list(design)
    first = designs[0]
    for other in designs[1:]:
        same = (
            np.array_equal(first.Q, other.Q)
            and np.array_equal(first.QN, other.QN)
            and np.array_equal(first.R, other.R)
            and first.horizon == other.horizon
        )
        if not same:
            raise HeterogeneousWeightsError(
                "the block-diagonal disagreement factorization requires "
                "identical weights for every agent"
            )
    return first


def check_consensus_iff(
    system: LinearSystem,
    topology: Topology,
    design: Union[RhcDesign, Sequence[RhcDesign]],
) -> ConsensusReport:
    """Necessary-and-sufficient consensus test.

    Verdict is true iff the topology has a spanning tree and every nonzero
    Laplacian eigenvalue's mode matrix has spectral radius strictly below 1.
    Radii are reported without any artificial margin so callers can apply
    their own.

    Raises:
        HeterogeneousWeightsError: a per-agent design sequence with
            non-identical weights was supplied.
    """
    shared = _single_design(design)
    gains = synthesize_gains(system, shared, degree=1)
    spanning = has_spanning_tree(topology)
    modes = []
    for lam in nonzero_gamma_spectrum(topology):
        mat = mode_matrix(system, gains, complex(lam))
        modes.append(
            ModeStability(lam=complex(lam), mode_matrix=mat, radius=_spectral_radius(mat))
        )
    max_radius = max(m.radius for m in modes)
    return ConsensusReport(
        spanning_tree=spanning,
        modes=tuple(modes),
        max_radius=max_radius,
        verdict=bool(spanning and max_radius < 1.0),
    )


def disagreement_matrix(
    system: LinearSystem, topology: Topology, gains: GainSchedule
) -> np.ndarray:
    """The stacked dynamics of the differences x_i - x_1, i = 2..M.

    Assembled with agent 1 (index 0) as the reference:
    A_delta = I (x) (A - BK) + (Lp + 1 a1') (x) (BG) - I (x) (BG),
    where Lp has unit diagonal and the negated normalized adjacency of
    agents 2..M off the diagonal, and a1 is agent 1's normalized adjacency
    row over agents 2..M. Its spectrum equals the multiset union of the
    per-mode matrices' spectra.
    """
    m_agents = topology.size
    a_tilde = topology.a_tilde
    if gains.K_term.shape[1] != system.n:
        raise DimensionMismatchError("gain dimension does not match the system")
    closed = system.A - system.B @ gains.K_term
    bg = system.B @ gains.G_term
    lp = np.eye(m_agents - 1) - a_tilde[1:, 1:]
    a1 = a_tilde[0, 1:]
    coupling = lp + np.outer(np.ones(m_agents - 1), a1)
    return (
        np.kron(np.eye(m_agents - 1), closed)
        + np.kron(coupling, bg)
        - np.kron(np.eye(m_agents - 1), bg)
    )


def check_sufficient_lti(
    system: LinearSystem,
    topology: Topology,
    design: RhcDesign,
    lambda_override: Optional[Sequence[complex]] = None,
) -> SufficiencyMargins:
    """Design-margin sufficient condition for general linear agents.

    Condition one is the smallest eigenvalue of QN - P(N-1). Condition two
    is, per nonzero mode lambda, positive definiteness of
    Q - X'X - |lambda - 1|^2 Y' M Y with X = B (R + B'P(1)B)^-1 B'P(1)(A-BK),
    Y = I + B (R + B'P(1)B)^-1 B', and M the Delta-sequence weight bound in
    the design's bound mode. lambda_override replaces the computed spectrum
    (reproduction of recorded case-study values only).

    Raises:
        MethodDisagreementError: the sufficient verdict is true while the
            iff test fails (internal inconsistency).
    """
    P = solve_p_recursion(system, design)
    margin12 = float(np.linalg.eigvalsh(design.QN - P[design.horizon - 1]).min())
    Delta = solve_delta_recursion(system, design, P)
    gram = design.R + system.B.T @ P[1] @ system.B
    k_term = np.linalg.solve(gram, system.B.T @ P[1] @ system.A)
    closed = system.A - system.B @ k_term
    proj = system.B @ np.linalg.solve(gram, system.B.T)
    x_mat = proj @ P[1] @ closed
    xi = x_mat.T @ x_mat
    y_weight = np.eye(system.n) + proj
    rho = rho_bar(system, design.R, P[1])
    m_bound = delta_weight_bound(rho, design)
    if lambda_override is not None:
        lams = [complex(l) for l in lambda_override]
    else:
        lams = [complex(l) for l in nonzero_gamma_spectrum(topology)]
    condition13 = []
    for lam in lams:
        lhs = design.Q - xi - abs(lam - 1.0) ** 2 * (y_weight.T @ m_bound @ y_weight)
        lhs = 0.5 * (lhs + lhs.T)
        condition13.append(
            ConditionMargin(
                lam=lam, lhs=lhs, min_eigenvalue=float(np.linalg.eigvalsh(lhs).min())
            )
        )
    verdict = bool(
        margin12 > 0 and all(c.min_eigenvalue > 0 for c in condition13)
    )
    margins = SufficiencyMargins(
        kind="lti",
        condition12_margin=margin12,
        verdict=verdict,
        bound_mode=design.bound_mode,
        xi=xi,
        y_weight=y_weight,
        m_bound=m_bound,
        condition13=tuple(condition13),
    )
    if verdict and lambda_override is None:
        if not check_consensus_iff(system, topology, design).verdict:
            raise MethodDisagreementError(
                "sufficient condition holds but the spectral iff test fails"
            )
    return margins


def theta_root(a: float, b: float, r: float, p1: float, lam: complex) -> float:
    """Largest admissible |Delta(1)| bound for one mode, closed form.

    Positive root of (c^2 + d^2) s^2 + 2 |a_c| c s + (a_c^2 - 1) = 0 with
    c = |1 - Re lam| b^2 / (r + b^2 p1) and d = |Im lam| b^2 / (r + b^2 p1);
    the coefficients are re-derived from the defining inequality, which pins
    this root to the bisection oracle. Infinite when the mode decouples
    (c = d = 0).

    Raises:
        PreconditionViolatedError: |a r| >= r + b^2 p1 (uncoupled mode not
            stabilized).
    """
    denom = r + b * b * p1
    a_c = a * r / denom
    if abs(a_c) >= 1.0:
        raise PreconditionViolatedError("uncoupled closed-loop mode is not stable")
    c = abs(1.0 - lam.real) * b * b / denom
    d = abs(lam.imag) * b * b / denom
    lead = c * c + d * d
    if lead == 0.0:
        return math.inf
    disc = (a_c * c) ** 2 + lead * (1.0 - a_c * a_c)
    return (-abs(a_c) * c + math.sqrt(disc)) / lead


def theta_root_unscaled_d(
    a: float, b: float, r: float, p1: float, lam: complex
) -> float:
    """Variant of theta_root with the d coefficient left unscaled by |a_c|.

    Kept solely for regression against recorded case-study thresholds, which
    were evaluated with this coefficient.
    """
    denom = r + b * b * p1
    a_c = a * r / denom
    if abs(a_c) >= 1.0:
        raise PreconditionViolatedError("uncoupled closed-loop mode is not stable")
    if a * r == 0.0:
        raise PreconditionViolatedError("variant requires a nonzero uncoupled mode")
    c = abs(1.0 - lam.real) * b * b / denom
    d = abs(lam.imag) * b * b / abs(a * r)
    lead = c * c + d * d
    if lead == 0.0:
        return math.inf
    disc = (a_c * c) ** 2 + lead * (1.0 - a_c * a_c)
    return (-abs(a_c) * c + math.sqrt(disc)) / lead


def theta_oracle(a: float, b: float, r: float, p1: float, lam: complex) -> float:
    """Bisection on the defining inequality; independent of theta_root.

    Finds the unique s >= 0 where (|ar| + |1 - Re lam| b^2 s)^2 +
    (Im lam)^2 b^4 s^2 reaches (r + b^2 p1)^2. The left side is monotone
    increasing, so plain bisection converges; the bracket is tightened far
    below the 1e-9 consistency tolerance.
    """
    denom = r + b * b * p1
    if abs(a * r) >= denom:
        raise PreconditionViolatedError("uncoupled closed-loop mode is not stable")
    c0 = abs(1.0 - lam.real) * b * b
    d0 = abs(lam.imag) * b * b
    if c0 == 0.0 and d0 == 0.0:
        return math.inf

    def excess(s: float) -> float:
        return (abs(a * r) + c0 * s) ** 2 + (d0 * s) ** 2 - denom * denom

    hi = 1.0
    while excess(hi) < 0.0:
        hi *= 2.0
    lo = 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if excess(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def check_sufficient_1d(
    system: LinearSystem, topology: Topology, design: RhcDesign
) -> SufficiencyMargins:
    """Sufficient condition specialized to one-dimensional agents.

    Computes the contraction a_c of the uncoupled closed loop, the per-mode
    thresholds theta, and compares the Delta bound (built from |a_c| in the
    design's bound mode) against the smallest threshold.

    Raises:
        NotScalarError: state or input dimension exceeds one.
        UnstableUncoupledModeError: |a_c| >= 1, contradicting a positive
            monotonicity margin upstream.
    """
    if system.n != 1 or system.m != 1:
        raise NotScalarError("scalar condition requires n = m = 1")
    a = float(system.A[0, 0])
    b = float(system.B[0, 0])
    r = float(design.R[0, 0])
    P = solve_p_recursion(system, design)
    margin12 = float(np.linalg.eigvalsh(design.QN - P[design.horizon - 1]).min())
    p1 = float(P[1][0, 0])
    denom = r + b * b * p1
    a_c = a * r / denom
    alpha = a_c
    if abs(a_c) >= 1.0:
        raise UnstableUncoupledModeError(
            f"|a_c| = {abs(a_c):.6f} >= 1; monotonicity must have failed upstream"
        )
    thresholds = []
    for lam in nonzero_gamma_spectrum(topology):
        lam = complex(lam)
        c = abs(1.0 - lam.real) * b * b / denom
        d = abs(lam.imag) * b * b / denom
        thresholds.append(
            ScalarModeThreshold(lam=lam, c=c, d=d, theta=theta_root(a, b, r, p1, lam))
        )
    theta_min = min(t.theta for t in thresholds)
    bound_value = float(delta_weight_bound(abs(alpha), design)[0, 0])
    verdict = bool(margin12 > 0 and bound_value < theta_min)
    margins = SufficiencyMargins(
        kind="scalar",
        condition12_margin=margin12,
        verdict=verdict,
        bound_mode=design.bound_mode,
        alpha=alpha,
        a_c=a_c,
        mode_thresholds=tuple(thresholds),
        theta_min=theta_min,
        bound_value=bound_value,
    )
    if verdict and not check_consensus_iff(system, topology, design).verdict:
        raise MethodDisagreementError(
            "scalar sufficient condition holds but the spectral iff test fails"
        )
    return margins
