"""Decentralized symmetric-ADMM agents with explicit message passing.

Each iteration runs two synchronized phases with a communication round after
each. In group 1 every agent finishes the previous dual half-step, proxes its
loss term, and advances the second dual block by the partial step r*beta; the
round-1 payload (a_i, u_i) carries exactly what neighbors need. Group 2
mirrors the structure on the constraint side with payload (b_i, v_i): the
half-step uses r*beta before its prox and the full step completes with beta
from the half-step base. Both prox calls use step 1/((2+tau)*beta), the value
the quadratic coefficient beta*(2+tau)/2 of the per-agent subproblem dictates.

Cross-agent information moves only inside RoundMessage objects: an agent's
update reads its own state plus weighted aggregates of delivered payloads,
never another agent's state, so the communication ledger reflects the true
protocol cost and locality is structural rather than by convention.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .graphs import MixingMatrix
from .problems import CompositeProblem
from .records import CommLedger, IterateRecord

__all__ = [
    "DsAdmmParams",
    "AgentState",
    "RoundMessage",
    "RunResult",
    "group1_update",
    "group2_update",
    "exchange_round1",
    "exchange_round2",
    "stacked_states",
    "run",
]


@dataclass(frozen=True)
class DsAdmmParams:
    """Penalty beta, partial dual step r in (0, 1], proximal coefficient tau.

    The second dual step s is hard-fixed at 1 by the protocol (the round-2
    payload b = 2*w1_full - w1_half encodes it); only the matrix-form oracle
    exposes a general s.
    """

    beta: float
    r: float = 0.99
    tau: float = 0.01

    def __post_init__(self) -> None:
        if self.beta <= 0:
            raise ValueError(f"beta must be positive, got {self.beta}")
        if not (0.0 < self.r <= 1.0):
            raise ValueError(f"r must be in (0, 1], got {self.r}")
        if self.tau <= 0:
            raise ValueError(f"tau must be positive, got {self.tau}")

    @property
    def prox_step(self) -> float:
        return 1.0 / ((2.0 + self.tau) * self.beta)


@dataclass
class AgentState:
    """One agent's variables plus its cached communication aggregates.

    w2 is stored at the half-step index (w2^(t-1/2) entering iteration t)
    because completing its full step needs the round-2 aggregate that only
    arrives at the end of the iteration. agg_v / agg_b cache round 2 of the
    previous iteration; agg_u / agg_a hold round 1 of the current one.
    """

    u: np.ndarray
    v: np.ndarray
    w1: np.ndarray
    w2_half: np.ndarray
    agg_v: np.ndarray
    agg_b: np.ndarray
    agg_u: np.ndarray | None = None
    agg_a: np.ndarray | None = None

    @classmethod
    def zeros(cls, d: int) -> "AgentState":
        return cls(
            u=np.zeros(d),
            v=np.zeros(d),
            w1=np.zeros(d),
            w2_half=np.zeros(d),
            agg_v=np.zeros(d),
            agg_b=np.zeros(d),
        )

    def w2_full(self, beta: float) -> np.ndarray:
        """Reconstruct the integer-indexed w2 from the stored half-step.

        This is the same expression the next group-1 phase computes; having it
        here lets verification compare against the matrix-form iterates
        without perturbing the protocol.
        """
        return self.w2_half - beta * (self.u - self.agg_v)


@dataclass(frozen=True)
class RoundMessage:
    """One transmission: round 1 carries (a_i, u_i), round 2 carries (b_i, v_i)."""

    sender: int
    round: int
    vec_ab: np.ndarray
    vec_uv: np.ndarray


def group1_update(
    state: AgentState, params: DsAdmmParams, f_i
) -> tuple[np.ndarray, np.ndarray]:
    """Finish w2's full step, prox the loss term, take w2's half step.

    Returns the round-1 payloads (a_i, u_i); the a payload is the linear
    extrapolation w2_half_new + (1/r)*(w2_half_new - w2_full), algebraically
    w2_full - (1+r)*beta*(u_new - agg_v).
    """
    beta, r, tau = params.beta, params.r, params.tau
    w2_full = state.w2_half - beta * (state.u - state.agg_v)
    arg = (state.agg_v + (1.0 + tau) * state.u) / (2.0 + tau) + (
        state.agg_b + w2_full
    ) / ((2.0 + tau) * beta)
    u_new = f_i.prox(arg, params.prox_step)
    w2_half_new = w2_full - r * beta * (u_new - state.agg_v)
    a_out = w2_half_new + (1.0 / r) * (w2_half_new - w2_full)
    state.u = u_new
    state.w2_half = w2_half_new
    return a_out, u_new


def group2_update(
    state: AgentState, params: DsAdmmParams, g_i
) -> tuple[np.ndarray, np.ndarray]:
    """Half-step w1, prox the regularizer, full-step w1 from the half-step base.

    Returns the round-2 payloads (b_i, v_i); b = 2*w1_new - w1_half encodes
    the unit second dual step.
    """
    beta, r, tau = params.beta, params.r, params.tau
    w1_half = state.w1 - r * beta * (state.agg_u - state.v)
    arg = (state.agg_u + (1.0 + tau) * state.v) / (2.0 + tau) - (
        w1_half + state.agg_a
    ) / ((2.0 + tau) * beta)
    v_new = g_i.prox(arg, params.prox_step)
    w1_new = w1_half - beta * (state.agg_u - v_new)
    b_out = 2.0 * w1_new - w1_half
    state.v = v_new
    state.w1 = w1_new
    return b_out, v_new


class _Network:
    """Delivery plan: per-agent neighbor weights read off the mixing matrix."""

    def __init__(self, mix: MixingMatrix):
        g = mix.graph
        self.n = g.n
        self.self_weight = [float(mix.w[i, i]) for i in range(g.n)]
        self.neighbor_weights = [
            [(j, float(mix.w[i, j])) for j in g.neighbors(i)] for i in range(g.n)
        ]
        self.round_scalars = 4 * g.n_edges  # times d: 2 vectors over 2|E| directed sends

    def deliver(self, messages: list[RoundMessage], i: int):
        """Messages agent i may read: its own plus its neighbors' (free self-link)."""
        own = messages[i]
        inbox = [messages[j] for j, _ in self.neighbor_weights[i]]
        return own, inbox

    def aggregate(self, messages: list[RoundMessage], i: int) -> tuple[np.ndarray, np.ndarray]:
        own, inbox = self.deliver(messages, i)
        agg_ab = self.self_weight[i] * own.vec_ab
        agg_uv = self.self_weight[i] * own.vec_uv
        for msg, (_, wij) in zip(inbox, self.neighbor_weights[i]):
            agg_ab = agg_ab + wij * msg.vec_ab
            agg_uv = agg_uv + wij * msg.vec_uv
        return agg_ab, agg_uv


def exchange_round1(
    states: list[AgentState],
    net: _Network,
    messages: list[RoundMessage],
    ledger: CommLedger,
    d: int,
) -> None:
    for i, state in enumerate(states):
        agg_a, agg_u = net.aggregate(messages, i)
        state.agg_a = agg_a
        state.agg_u = agg_u
    ledger.add_round(net.round_scalars * d)


def exchange_round2(
    states: list[AgentState],
    net: _Network,
    messages: list[RoundMessage],
    ledger: CommLedger,
    d: int,
) -> None:
    for i, state in enumerate(states):
        agg_b, agg_v = net.aggregate(messages, i)
        state.agg_b = agg_b
        state.agg_v = agg_v
    ledger.add_round(net.round_scalars * d)


def stacked_states(
    states: list[AgentState], beta: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Stacked (u, v, w1, w2_full) across agents, for oracle comparison."""
    u = np.concatenate([s.u for s in states])
    v = np.concatenate([s.v for s in states])
    w1 = np.concatenate([s.w1 for s in states])
    w2 = np.concatenate([s.w2_full(beta) for s in states])
    return u, v, w1, w2


@dataclass
class RunResult:
    records: list[IterateRecord]
    ledger: CommLedger
    states: list[AgentState]
    iterations: int
    params: DsAdmmParams

    def stacked(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        return stacked_states(self.states, self.params.beta)


def run(
    problem: CompositeProblem,
    mix: MixingMatrix,
    params: DsAdmmParams,
    max_iters: int = 2000,
    tol: float = 1e-10,
    f_star: float | None = None,
    kkt_fn=None,
    observer=None,
) -> RunResult:
    """Run the full protocol: group1 -> round1 -> group2 -> round2 per iteration.

    Records one IterateRecord per iteration (objective at the network average
    of u). Stops at max_iters, or at suboptimality <= tol when f_star is
    given, or at iterate movement ||z(t+1) - z(t)|| <= tol otherwise.

    kkt_fn, if given, maps the stacked (u, v, w1, w2) to a residual recorded
    per iteration (NaN otherwise). observer, if given, is called after every
    iteration with (t, states) and must not mutate anything — verification
    hooks use it to run the matrix-form oracle in lockstep.
    """
    if problem.n != mix.n:
        raise ValueError(f"problem has {problem.n} agents but graph has {mix.n}")
    n, d = problem.n, problem.d
    net = _Network(mix)
    states = [AgentState.zeros(d) for _ in range(n)]
    ledger = CommLedger()
    records: list[IterateRecord] = []
    prev_z: np.ndarray | None = None

    for t in range(max_iters):
        t0 = time.monotonic()
        msgs1 = []
        for i, state in enumerate(states):
            a_out, u_out = group1_update(state, params, problem.f[i])
            msgs1.append(RoundMessage(i, 1, a_out, u_out))
        exchange_round1(states, net, msgs1, ledger, d)

        msgs2 = []
        for i, state in enumerate(states):
            b_out, v_out = group2_update(state, params, problem.g[i])
            msgs2.append(RoundMessage(i, 2, b_out, v_out))
        exchange_round2(states, net, msgs2, ledger, d)
        ledger.close_iteration()

        u_stack = np.stack([s.u for s in states])
        u_bar = u_stack.mean(axis=0)
        consensus = float(np.max(np.linalg.norm(u_stack - u_bar, axis=1)))
        objective = problem.global_objective(u_bar)
        subopt = objective - f_star if f_star is not None else math.nan
        kkt = math.nan
        if kkt_fn is not None:
            kkt = float(kkt_fn(*stacked_states(states, params.beta)))
        wall_ms = (time.monotonic() - t0) * 1e3
        records.append(
            IterateRecord(
                iter=t + 1,
                comm_rounds_cum=ledger.rounds_total,
                scalars_cum=ledger.scalars_total,
                objective=objective,
                suboptimality=subopt,
                consensus_err=consensus,
                kkt_residual=kkt,
                wall_ms=wall_ms,
            )
        )
        if observer is not None:
            observer(t, states)

        if f_star is not None:
            if subopt <= tol:
                break
        else:
            z = np.concatenate([u_stack.ravel(), np.concatenate([s.v for s in states])])
            if prev_z is not None and float(np.linalg.norm(z - prev_z)) <= tol:
                break
            prev_z = z

    return RunResult(records, ledger, states, len(records), params)
