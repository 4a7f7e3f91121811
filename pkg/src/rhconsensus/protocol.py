"""Gain synthesis and the per-step consensus control law.

The horizon-bottom gains are kept in the positive LQR convention,
K = (R + B'P(1)B)^-1 B'P(1) A and G = (R + B'P(1)B)^-1 B'Delta(1), and the
applied input is u_i = -sum_j a~_ij (K x_i + G x_j). The stage gains carry
the optimization problem's own sign and the 1/degree scaling induced by the
degree * R input weight; the two conventions describe the same control and
are pinned together numerically at synthesis time.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatchError,
    GainFormMismatchError,
    NeighborSetMismatchError,
    NotControllableError,
    SingularNormalEquationsError,
)
from .riccati import (
    LinearSystem,
    RhcDesign,
    is_controllable,
    solve_delta_recursion,
    solve_p_recursion,
)

GAIN_FORM_RTOL = 1e-10


@dataclass(frozen=True)
class GainSchedule:
    """Stage gains for the open-loop plan plus the horizon-bottom gains.

    K_stage[n], G_stage[n] (n = 0..N-1) are the per-neighbor gains of the
    optimal plan at prediction step n, including the 1/degree factor.
    K_term, G_term are the positive-convention gains used by the analysis
    and by the applied control law.
    """

    K_stage: tuple[np.ndarray, ...]
    G_stage: tuple[np.ndarray, ...]
    K_term: np.ndarray
    G_term: np.ndarray
    degree: int


@dataclass(frozen=True)
class AgentController:
    """One agent's view of the protocol: its neighbors and shared gains."""

    index: int
    neighbors: tuple[int, ...]
    a_tilde_row: np.ndarray
    gains: GainSchedule

    def __post_init__(self):
        row_sum = sum(self.a_tilde_row[j] for j in self.neighbors)
        if abs(row_sum - 1.0) > 1e-12:
            raise DimensionMismatchError(
                f"normalized adjacency row of agent {self.index} sums to {row_sum}"
            )


def _term_gains(system, R, P1, D1):
    gram = R + system.B.T @ P1 @ system.B
    k_term = np.linalg.solve(gram, system.B.T @ P1 @ system.A)
    g_term = np.linalg.solve(gram, system.B.T @ D1)
    return k_term, g_term


def synthesize_gains(
    system: LinearSystem, design: RhcDesign, degree: int
) -> GainSchedule:
    """Solve the backward recursions and assemble the gain schedule.

    Every stage gain is computed in both algebraic forms (push-through
    identity) and the forms must agree to 1e-10 relative, otherwise
    GainFormMismatchError is raised. The stage-0 gains are verified to
    reproduce the terminal gains up to the -1/degree factor.

    Raises:
        NotControllableError, GainFormMismatchError, SingularInnerMatrixError
    """
    if degree < 1:
        raise DimensionMismatchError("degree must be at least 1")
    if not is_controllable(system):
        raise NotControllableError("the (A, B) pair is not controllable")
    P = solve_p_recursion(system, design)
    Delta = solve_delta_recursion(system, design, P)
    A, B, R, N = system.A, system.B, design.R, design.horizon
    r_inv_bt = np.linalg.solve(R, B.T)
    k_stage, g_stage = [], []
    for n in range(N):
        p_next, d_next = P[n + 1], Delta[n + 1]
        gram = R + B.T @ p_next @ B
        k_completion = np.linalg.solve(gram, B.T @ p_next @ A)
        g_completion = np.linalg.solve(gram, B.T @ d_next)
        shrink = np.linalg.inv(np.eye(system.n) + p_next @ B @ r_inv_bt)
        k_push = r_inv_bt @ shrink @ p_next @ A
        g_push = r_inv_bt @ shrink @ d_next
        scale = 1.0 + max(np.abs(k_completion).max(), np.abs(g_completion).max())
        if (
            np.abs(k_completion - k_push).max() > GAIN_FORM_RTOL * scale
            or np.abs(g_completion - g_push).max() > GAIN_FORM_RTOL * scale
        ):
            raise GainFormMismatchError(
                f"stage {n}: push-through and completion forms disagree"
            )
        k_stage.append(-k_completion / degree)
        g_stage.append(-g_completion / degree)
    k_term, g_term = _term_gains(system, R, P[1], Delta[1])
    # stage-0 consistency: degree * stage gain must equal -terminal gain
    scale = 1.0 + max(np.abs(k_term).max(), np.abs(g_term).max())
    if (
        np.abs(degree * k_stage[0] + k_term).max() > GAIN_FORM_RTOL * scale
        or np.abs(degree * g_stage[0] + g_term).max() > GAIN_FORM_RTOL * scale
    ):
        raise GainFormMismatchError("stage-0 gains do not match the terminal gains")
    for arr in (k_term, g_term, *k_stage, *g_stage):
        arr.setflags(write=False)
    return GainSchedule(
        K_stage=tuple(k_stage),
        G_stage=tuple(g_stage),
        K_term=k_term,
        G_term=g_term,
        degree=degree,
    )


def rhc_control(
    x_i: np.ndarray,
    neighbors: list[tuple[int, np.ndarray]],
    controller: AgentController,
) -> np.ndarray:
    """The applied input u_i = -sum_j a~_ij (K x_i + G x_j).

    Args:
        x_i: own state, length-n vector.
        neighbors: one (index, state) pair per in-neighbor, matching the
            controller's neighbor set exactly.

    Raises:
        NeighborSetMismatchError, DimensionMismatchError
    """
    provided = tuple(j for j, _ in neighbors)
    if sorted(provided) != sorted(controller.neighbors) or len(set(provided)) != len(
        provided
    ):
        raise NeighborSetMismatchError(
            f"agent {controller.index} expected neighbors {controller.neighbors}, "
            f"got {provided}"
        )
    gains = controller.gains
    x_i = np.asarray(x_i, dtype=float)
    if x_i.shape != (gains.K_term.shape[1],):
        raise DimensionMismatchError(
            f"state must have length {gains.K_term.shape[1]}, got {x_i.shape}"
        )
    u = np.zeros(gains.K_term.shape[0])
    for j, x_j in neighbors:
        x_j = np.asarray(x_j, dtype=float)
        if x_j.shape != x_i.shape:
            raise DimensionMismatchError(f"neighbor {j} state has shape {x_j.shape}")
        u -= controller.a_tilde_row[j] * (gains.K_term @ x_i + gains.G_term @ x_j)
    return u


def solve_problem1_oracle(
    system: LinearSystem,
    design: RhcDesign,
    degree: int,
    x_i: np.ndarray,
    neighbor_states: list[np.ndarray],
) -> np.ndarray:
    """Exact finite-horizon minimizer by dense normal equations.

    Stacks the N-step prediction map and minimizes the strictly convex
    quadratic directly; independent of the gain recursions, this is the
    oracle the closed-form schedule is validated against.

    Returns:
        (N, m) array, one input per prediction step.
    """
    if len(neighbor_states) != degree:
        raise NeighborSetMismatchError(
            f"expected {degree} neighbor states, got {len(neighbor_states)}"
        )
    A, B = system.A, system.B
    n, m, N = system.n, system.m, design.horizon
    x_i = np.asarray(x_i, dtype=float).reshape(n)
    states = [np.asarray(s, dtype=float).reshape(n) for s in neighbor_states]
    # prediction of x(k+t|k), t = 1..N: x_t = A^t x_i + sum_s A^(t-1-s) B u_s
    powers = [np.eye(n)]
    for _ in range(N):
        powers.append(A @ powers[-1])
    phi = np.vstack([powers[t] for t in range(1, N + 1)])
    theta = np.zeros((N * n, N * m))
    for t in range(1, N + 1):
        for s in range(t):
            theta[(t - 1) * n : t * n, s * m : (s + 1) * m] = powers[t - 1 - s] @ B
    # stage weights degree*Q on x_1..x_(N-1), degree*QN on x_N; the n = 0
    # stage state cost is constant in the decision variables
    weight = np.zeros((N * n, N * n))
    for t in range(1, N):
        weight[(t - 1) * n : t * n, (t - 1) * n : t * n] = degree * design.Q
    weight[(N - 1) * n :, (N - 1) * n :] = degree * design.QN
    r_blk = np.kron(np.eye(N), degree * design.R)
    neighbor_sum = np.sum(states, axis=0) if states else np.zeros(n)
    # sum_j |x_t - x_j|^2_Q = degree * x'Qx - 2 x'Q sum_j x_j + const
    target = np.tile(neighbor_sum / degree, N)
    hessian = r_blk + theta.T @ weight @ theta
    rhs = -theta.T @ weight @ (phi @ x_i - target)
    try:
        stacked = np.linalg.solve(hessian, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularNormalEquationsError(
            "normal equations are singular; weights are corrupted"
        ) from exc
    return stacked.reshape(N, m)


def planned_inputs(
    system: LinearSystem,
    gains: GainSchedule,
    x_i: np.ndarray,
    neighbor_states: list[np.ndarray],
) -> np.ndarray:
    """Open-loop input plan from the gain schedule along its own prediction.

    Rolls the predicted state forward under the stage gains; elementwise
    equal to the oracle's minimizer.
    """
    N = len(gains.K_stage)
    x = np.asarray(x_i, dtype=float).reshape(system.n)
    states = [np.asarray(s, dtype=float).reshape(system.n) for s in neighbor_states]
    plan = np.zeros((N, system.m))
    for n in range(N):
        u = np.zeros(system.m)
        for x_j in states:
            u += gains.K_stage[n] @ x + gains.G_stage[n] @ x_j
        plan[n] = u
        x = system.A @ x + system.B @ u
    return plan
