"""Backward matrix recursions for the finite-horizon cost-to-go tables.

Two coupled sequences run backward from the horizon: P(n) follows a standard
difference Riccati equation and Delta(n) follows a companion affine recursion
that drives the neighbor-tracking gain. Both are decoupled from the network
because the per-agent input weight is degree * R, which cancels the neighbor
count in the recursion's inner inverse.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimensionMismatchError,
    EigenFailureError,
    LostPositivityError,
    PushThroughMismatchError,
    SingularInnerMatrixError,
)

TOL_RANK = 1e-10
PUSH_THROUGH_RTOL = 1e-10


def _as_matrix(value, rows=None, cols=None, name="matrix") -> np.ndarray:
    arr = np.atleast_2d(np.asarray(value, dtype=float))
    if rows is not None and arr.shape != (rows, cols):
        raise DimensionMismatchError(
            f"{name} must have shape {(rows, cols)}, got {arr.shape}"
        )
    return arr


def _pd_floor(mat: np.ndarray) -> float:
    return 1e-9 * (1.0 + abs(float(np.trace(mat))))


def _require_spd(mat: np.ndarray, name: str) -> np.ndarray:
    if not np.allclose(mat, mat.T, atol=1e-9 * (1.0 + np.abs(mat).max())):
        raise DimensionMismatchError(f"{name} must be symmetric")
    if np.linalg.eigvalsh(mat).min() <= _pd_floor(mat):
        raise DimensionMismatchError(f"{name} must be positive definite")
    return mat


@dataclass(frozen=True)
class LinearSystem:
    """The discrete-time agent model x(k+1) = A x(k) + B u(k)."""

    A: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        a = _as_matrix(self.A, name="A")
        if a.shape[0] != a.shape[1]:
            raise DimensionMismatchError(f"A must be square, got {a.shape}")
        b = np.asarray(self.B, dtype=float)
        if b.ndim == 1:
            b = b[:, None]
        if b.shape[0] != a.shape[0]:
            raise DimensionMismatchError(
                f"B must have {a.shape[0]} rows, got shape {b.shape}"
            )
        a.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "A", a)
        object.__setattr__(self, "B", b)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]


@dataclass(frozen=True)
class RhcDesign:
    """Weights and horizon of the per-agent finite-horizon problem.

    The per-agent input weight is degree * R, so R / degree is identical
    across agents; that is what reduces the coupled recursions to the
    network-free form solved here.

    bound_mode selects the stage-cost summation start of the Delta-sequence
    weight bound: "paper" keeps the literal l = 1 start, "corrected" includes
    the l = 0 term, which is required for the bound to dominate |Delta(1)|.
    """

    Q: np.ndarray
    QN: np.ndarray
    R: np.ndarray
    horizon: int
    bound_mode: str = "corrected"

    def __post_init__(self):
        q = _require_spd(_as_matrix(self.Q, name="Q"), "Q")
        qn = _require_spd(_as_matrix(self.QN, name="QN"), "QN")
        r = _require_spd(_as_matrix(self.R, name="R"), "R")
        if q.shape != qn.shape:
            raise DimensionMismatchError("Q and QN must have the same shape")
        if self.horizon < 1:
            raise DimensionMismatchError("horizon must be at least 1")
        if self.bound_mode not in ("paper", "corrected"):
            raise DimensionMismatchError(
                f"bound_mode must be 'paper' or 'corrected', got {self.bound_mode!r}"
            )
        for name, mat in (("Q", q), ("QN", qn), ("R", r)):
            mat.setflags(write=False)
            object.__setattr__(self, name, mat)

    def agent_input_weight(self, degree: int) -> np.ndarray:
        """The input weight of an agent with the given in-degree."""
        if degree < 1:
            raise DimensionMismatchError("degree must be at least 1")
        return degree * self.R


@dataclass(frozen=True)
class RiccatiTables:
    """The sequences P(n) and Delta(n), n = 0..N, stored forward-indexed."""

    P: tuple[np.ndarray, ...]
    Delta: tuple[np.ndarray, ...] = field(default=())

    @property
    def horizon(self) -> int:
        return len(self.P) - 1


def is_controllable(system: LinearSystem) -> bool:
    """Full row rank of [B, AB, ..., A^(n-1) B], judged by singular values."""
    blocks = []
    power = np.eye(system.n)
    for _ in range(system.n):
        blocks.append(power @ system.B)
        power = system.A @ power
    ctrb = np.hstack(blocks)
    svals = np.linalg.svd(ctrb, compute_uv=False)
    return bool(np.sum(svals > TOL_RANK * max(1.0, svals[0])) == system.n)


def _inner_solve(R: np.ndarray, B: np.ndarray, P_next: np.ndarray, rhs: np.ndarray):
    gram = R + B.T @ P_next @ B
    try:
        return np.linalg.solve(gram, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularInnerMatrixError(
            "R + B'PB is singular; input matrices are corrupted"
        ) from exc


def solve_p_recursion(system: LinearSystem, design: RhcDesign) -> tuple[np.ndarray, ...]:
    """Backward Riccati sweep P(N) = QN down to P(0).

    Each step evaluates both algebraic forms of the recursion, the
    (R + B'PB)^-1 completion and the push-through (I + PBR^-1B')^-1 form,
    and requires them to agree to 1e-10 relative; the first form (an m x m
    inverse) is kept, symmetrized, and checked for positive definiteness.
    """
    A, B = system.A, system.B
    Q, QN, R, N = design.Q, design.QN, design.R, design.horizon
    if Q.shape[0] != system.n:
        raise DimensionMismatchError("weight dimension does not match the system")
    if R.shape[0] != system.m:
        raise DimensionMismatchError("R dimension does not match the input")
    tables = [np.zeros((0, 0))] * (N + 1)
    tables[N] = QN
    r_inv_bt = np.linalg.solve(R, B.T)
    for n in range(N - 1, -1, -1):
        p_next = tables[n + 1]
        completion = A.T @ p_next @ A - A.T @ p_next @ B @ _inner_solve(
            R, B, p_next, B.T @ p_next @ A
        ) + Q
        try:
            push_through = (
                A.T
                @ np.linalg.solve(np.eye(system.n) + p_next @ B @ r_inv_bt, p_next)
                @ A
                + Q
            )
        except np.linalg.LinAlgError as exc:
            raise SingularInnerMatrixError(str(exc)) from exc
        scale = 1.0 + np.abs(completion).max()
        if np.abs(completion - push_through).max() > PUSH_THROUGH_RTOL * scale:
            raise PushThroughMismatchError(
                f"Riccati step {n}: algebraic forms disagree beyond tolerance"
            )
        p_n = 0.5 * (completion + completion.T)
        if np.linalg.eigvalsh(p_n).min() <= _pd_floor(p_n):
            raise LostPositivityError(f"P({n}) lost positive definiteness")
        p_n.setflags(write=False)
        tables[n] = p_n
    return tuple(tables)


def solve_delta_recursion(
    system: LinearSystem, design: RhcDesign, P: tuple[np.ndarray, ...]
) -> tuple[np.ndarray, ...]:
    """Companion affine sweep Delta(N) = -QN down to Delta(0).

    No symmetry is enforced; the sequence is generally non-symmetric.
    """
    A, B = system.A, system.B
    Q, QN, R, N = design.Q, design.QN, design.R, design.horizon
    if len(P) != N + 1:
        raise DimensionMismatchError("P sequence length does not match the horizon")
    r_inv_bt = np.linalg.solve(R, B.T)
    tables = [np.zeros((0, 0))] * (N + 1)
    tables[N] = -QN
    for n in range(N - 1, -1, -1):
        try:
            propagated = np.linalg.solve(
                np.eye(system.n) + P[n + 1] @ B @ r_inv_bt, tables[n + 1]
            )
        except np.linalg.LinAlgError as exc:
            raise SingularInnerMatrixError(str(exc)) from exc
        d_n = A.T @ propagated - Q
        d_n.setflags(write=False)
        tables[n] = d_n
    return tuple(tables)


def solve_tables(system: LinearSystem, design: RhcDesign) -> RiccatiTables:
    """Both backward sweeps packaged together."""
    P = solve_p_recursion(system, design)
    return RiccatiTables(P=P, Delta=solve_delta_recursion(system, design, P))


def check_p_monotonicity(P: tuple[np.ndarray, ...]) -> np.ndarray:
    """Smallest eigenvalue of P(n+1) - P(n) for n = 0..N-1.

    All margins positive certifies QN - P(N-1) > 0 and the strictly
    decreasing-backward chain P(N) > ... > P(1), which in turn makes the
    horizon-bottom state feedback stabilizing.
    """
    return np.array(
        [np.linalg.eigvalsh(P[n + 1] - P[n]).min() for n in range(len(P) - 1)]
    )


def rho_bar(system: LinearSystem, R: np.ndarray, P1: np.ndarray) -> float:
    """Spectral radius of A' (I + P(1) B R^-1 B')^-1.

    This equals the spectral radius of the closed loop A - BK at the
    horizon-bottom gain, and is the contraction factor of the Delta-sequence
    weight bound.
    """
    R = _as_matrix(R, name="R")
    try:
        mat = system.A.T @ np.linalg.inv(
            np.eye(system.n) + P1 @ system.B @ np.linalg.solve(R, system.B.T)
        )
        eig = np.linalg.eigvals(mat)
    except np.linalg.LinAlgError as exc:
        raise EigenFailureError(str(exc)) from exc
    return float(np.abs(eig).max())


def delta_weight_bound(rho: float, design: RhcDesign, index: int = 1) -> np.ndarray:
    """Weight-matrix bound on the Delta sequence at the given index.

    Returns rho^(N-index) QN + sum_l rho^l Q with the stage sum running from
    l = 1 ("paper" mode, the literal summation) or l = 0 ("corrected" mode,
    which includes the final recursion step's stage cost and actually
    dominates |Delta(index)|) up to N - index - 1.
    """
    if not 0 <= index <= design.horizon:
        raise DimensionMismatchError("index must lie in [0, N]")
    start = 1 if design.bound_mode == "paper" else 0
    expo = design.horizon - index
    bound = rho**expo * design.QN
    for l in range(start, expo):
        bound = bound + rho**l * design.Q
    return 0.5 * (bound + bound.T)
