"""Closed-loop execution under synchronous, reliable, zero-delay rounds.

Each round every agent reads each in-neighbor's current state exactly once,
computes its input, and all agents advance simultaneously. Two executors are
provided: a direct sequential loop, and a message-passing harness that models
agents as reactive processes with an explicit per-round delivery barrier.
Both produce bitwise-identical trajectories.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import (
    ControllerTopologyMismatchError,
    DimensionMismatchError,
    InvalidStepsError,
    MissingMessageError,
)
from .graph import Topology
from .protocol import AgentController, rhc_control
from .riccati import LinearSystem


@dataclass(frozen=True)
class SimConfig:
    """Initial states, run length, and the consensus detection thresholds.

    window is the number of trailing recorded steps that must stay below
    epsilon before consensus is declared.
    """

    x0: np.ndarray
    steps: int
    epsilon: float = 1e-6
    window: int = 1

    def __post_init__(self):
        x0 = np.atleast_2d(np.asarray(self.x0, dtype=float))
        if self.steps < 1:
            raise InvalidStepsError(f"steps must be >= 1, got {self.steps}")
        if self.epsilon <= 0:
            raise InvalidStepsError("epsilon must be positive")
        if not 0 <= self.window <= self.steps:
            raise InvalidStepsError("window must lie in [0, steps]")
        x0.setflags(write=False)
        object.__setattr__(self, "x0", x0)


@dataclass(frozen=True)
class Trajectory:
    """States x_i(k), inputs u_i(k), and the pairwise disagreement series."""

    states: np.ndarray  # (T+1, M, n)
    inputs: np.ndarray  # (T, M, m)
    disagreement: np.ndarray  # (T+1,)

    @property
    def steps(self) -> int:
        return self.inputs.shape[0]

    def pairwise_disagreement(self, k: int) -> np.ndarray:
        """Full matrix of ||x_i(k) - x_j(k)|| for diagnostics."""
        x = self.states[k]
        diff = x[:, None, :] - x[None, :, :]
        return np.linalg.norm(diff, axis=2)


def max_pairwise_distance(states: np.ndarray) -> float:
    diff = states[:, None, :] - states[None, :, :]
    return float(np.linalg.norm(diff, axis=2).max())


def _check_controllers(
    topology: Topology, controllers: Sequence[AgentController]
) -> None:
    if len(controllers) != topology.size:
        raise ControllerTopologyMismatchError(
            f"{len(controllers)} controllers for {topology.size} agents"
        )
    for i, ctrl in enumerate(controllers):
        if ctrl.index != i:
            raise ControllerTopologyMismatchError(
                f"controller at position {i} has index {ctrl.index}"
            )
        if ctrl.neighbors != topology.in_neighbors(i):
            raise ControllerTopologyMismatchError(
                f"agent {i}: controller neighbors {ctrl.neighbors} do not match "
                f"the topology {topology.in_neighbors(i)}"
            )


def _validate_x0(system: LinearSystem, topology: Topology, cfg: SimConfig) -> None:
    if cfg.x0.shape != (topology.size, system.n):
        raise DimensionMismatchError(
            f"x0 must have shape {(topology.size, system.n)}, got {cfg.x0.shape}"
        )


def run_closed_loop(
    system: LinearSystem,
    topology: Topology,
    controllers: Sequence[AgentController],
    cfg: SimConfig,
) -> Trajectory:
    """Direct synchronous execution; deterministic for fixed inputs."""
    _check_controllers(topology, controllers)
    _validate_x0(system, topology, cfg)
    m_agents, n, m_in, steps = topology.size, system.n, system.m, cfg.steps
    states = np.zeros((steps + 1, m_agents, n))
    inputs = np.zeros((steps, m_agents, m_in))
    states[0] = cfg.x0
    for k in range(steps):
        x = states[k]
        for i in range(m_agents):
            neighbor_states = [(j, x[j]) for j in controllers[i].neighbors]
            inputs[k, i] = rhc_control(x[i], neighbor_states, controllers[i])
        for i in range(m_agents):
            states[k + 1, i] = system.A @ x[i] + system.B @ inputs[k, i]
    disagreement = np.array(
        [max_pairwise_distance(states[k]) for k in range(steps + 1)]
    )
    return Trajectory(states=states, inputs=inputs, disagreement=disagreement)


def detect_consensus(
    trajectory: Trajectory, epsilon: float, window: int
) -> Optional[int]:
    """Smallest k* with d(k) <= epsilon for every recorded k in [k*, T].

    Requires at least `window` recorded trailing steps below epsilon, so
    k* <= T - window; returns None when no such step exists.
    """
    d = trajectory.disagreement
    total = len(d) - 1
    if window > total:
        raise InvalidStepsError("window exceeds the recorded horizon")
    k_star: Optional[int] = None
    for k in range(total, -1, -1):
        if d[k] <= epsilon:
            k_star = k
        else:
            break
    if k_star is None or total - k_star < window:
        return None
    return k_star


@dataclass(frozen=True)
class _Message:
    sender: int
    recipient: int
    round_index: int
    state: np.ndarray


class _AgentProcess:
    """A reactive agent: buffers one round of messages, then acts."""

    def __init__(self, controller: AgentController, x0: np.ndarray):
        self.controller = controller
        self.state = np.array(x0, dtype=float)
        self.inbox: dict[int, _Message] = {}

    def deliver(self, message: _Message) -> None:
        self.inbox[message.sender] = message

    def compute(self, round_index: int) -> np.ndarray:
        expected = self.controller.neighbors
        for j in expected:
            msg = self.inbox.get(j)
            if msg is None or msg.round_index != round_index:
                raise MissingMessageError(
                    f"agent {self.controller.index} round {round_index}: "
                    f"no message from neighbor {j}"
                )
        if len(self.inbox) != len(expected):
            raise MissingMessageError(
                f"agent {self.controller.index} round {round_index}: "
                f"unexpected senders {sorted(set(self.inbox) - set(expected))}"
            )
        neighbor_states = [(j, self.inbox[j].state) for j in expected]
        return rhc_control(self.state, neighbor_states, self.controller)

    def advance(self, system: LinearSystem, u: np.ndarray) -> None:
        self.state = system.A @ self.state + system.B @ u
        self.inbox.clear()


def lockstep_message_harness(
    system: LinearSystem,
    topology: Topology,
    controllers: Sequence[AgentController],
    cfg: SimConfig,
) -> Trajectory:
    """Message-passing execution with an explicit per-round barrier.

    Every round each agent emits its state to its out-neighbors over a
    reliable channel, waits for all expected messages (the barrier), then
    computes and advances. The arithmetic matches run_closed_loop operation
    for operation, so the trajectories are bitwise identical.
    """
    _check_controllers(topology, controllers)
    _validate_x0(system, topology, cfg)
    adjacency = topology.digraph.adjacency
    m_agents, steps = topology.size, cfg.steps
    processes = [
        _AgentProcess(controllers[i], cfg.x0[i]) for i in range(m_agents)
    ]
    states = np.zeros((steps + 1, m_agents, system.n))
    inputs = np.zeros((steps, m_agents, system.m))
    states[0] = cfg.x0
    for k in range(steps):
        # emission phase: j sends its state to every i with a_ij = 1
        for j in range(m_agents):
            payload = processes[j].state.copy()
            for i in range(m_agents):
                if adjacency[i, j] == 1.0:
                    processes[i].deliver(
                        _Message(sender=j, recipient=i, round_index=k, state=payload)
                    )
        # barrier + compute phase
        round_inputs = [processes[i].compute(k) for i in range(m_agents)]
        # simultaneous advance
        for i in range(m_agents):
            inputs[k, i] = round_inputs[i]
            processes[i].advance(system, round_inputs[i])
            states[k + 1, i] = processes[i].state
    disagreement = np.array(
        [max_pairwise_distance(states[k]) for k in range(steps + 1)]
    )
    return Trajectory(states=states, inputs=inputs, disagreement=disagreement)


def make_controllers(
    topology: Topology, gains_by_agent: Sequence
) -> tuple[AgentController, ...]:
    """One controller per agent from per-agent gain schedules."""
    if len(gains_by_agent) != topology.size:
        raise ControllerTopologyMismatchError(
            f"{len(gains_by_agent)} gain schedules for {topology.size} agents"
        )
    return tuple(
        AgentController(
            index=i,
            neighbors=topology.in_neighbors(i),
            a_tilde_row=topology.a_tilde[i],
            gains=gains_by_agent[i],
        )
        for i in range(topology.size)
    )
