"""Proximal-gradient baselines over the same simulated network.

Two gradient-tracking style primal-dual methods run against the agent
protocol for communication-cost comparisons. Both keep one d-vector per
agent, apply the smooth local term by gradient and the nonsmooth one by
prox, and exchange exactly one d-vector with each neighbor per iteration,
so the per-iteration ledger is 2*d*|E| scalars against the agent
protocol's 8*d*|E|.

The splitting comes from CompositeProblem.split_for_baselines(): for the
Lasso the quadratic loss is the gradient part and the l1 term the prox
part; for the SVM the l2 regularizer is the gradient part and the
hinge-sum the prox part (same inner dual-ascent solver as everywhere
else, so the problem is never smoothed or reformulated).

Both methods start from zero iterates. The self-referencing first step of
each recursion is folded into the main loop (previous iterate defined
equal to the initial one), which changes nothing from a zero start but
makes every recorded iteration consume exactly one communication round.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .graphs import MixingMatrix
from .problems import CompositeProblem
from .prox import ProxError
from .records import CommLedger, IterateRecord

__all__ = [
    "BaselineParams",
    "BaselineResult",
    "BaselineDivergence",
    "pg_extra_run",
    "nids_run",
    "sweep_grid",
    "sweep_step",
    "SweepResult",
]

_DIVERGE_LIMIT = 1e12


class BaselineDivergence(RuntimeError):
    """Iterates blew past the divergence guard (step size too large)."""


@dataclass(frozen=True)
class BaselineParams:
    """Primal step size plus the algorithm tag it was tuned for."""

    step: float
    algorithm: str = "pgextra"

    def __post_init__(self) -> None:
        if not (self.step > 0.0 and math.isfinite(self.step)):
            raise ValueError(f"step must be positive and finite, got {self.step}")
        if self.algorithm not in ("pgextra", "nids"):
            raise ValueError(f"unknown baseline algorithm {self.algorithm!r}")


@dataclass
class BaselineResult:
    records: list[IterateRecord]
    ledger: CommLedger
    x: np.ndarray  # (n, d) final per-agent iterates
    iterations: int


def _grad_rows(terms, x: np.ndarray) -> np.ndarray:
    return np.stack([terms[i].gradient(x[i]) for i in range(x.shape[0])])


def _prox_rows(terms, z: np.ndarray, step: float) -> np.ndarray:
    return np.stack([terms[i].prox(z[i], step) for i in range(z.shape[0])])


def _guard(x: np.ndarray, algorithm: str, iteration: int) -> None:
    if not np.all(np.isfinite(x)) or float(np.max(np.abs(x))) > _DIVERGE_LIMIT:
        raise BaselineDivergence(
            f"{algorithm} diverged at iteration {iteration} (step size too large)"
        )


def _record(
    records: list[IterateRecord],
    ledger: CommLedger,
    problem: CompositeProblem,
    x: np.ndarray,
    f_star: float | None,
    t_start: float,
) -> IterateRecord:
    x_bar = x.mean(axis=0)
    obj = problem.global_objective(x_bar)
    sub = obj - f_star if f_star is not None else math.nan
    cons = float(np.max(np.linalg.norm(x - x_bar, axis=1)))
    rec = IterateRecord(
        iter=len(records) + 1,
        comm_rounds_cum=ledger.rounds_total,
        scalars_cum=ledger.scalars_total,
        objective=obj,
        suboptimality=sub,
        consensus_err=cons,
        kkt_residual=math.nan,
        wall_ms=(time.monotonic() - t_start) * 1e3,
    )
    records.append(rec)
    return rec


def _stop(rec: IterateRecord, movement: float, tol: float, f_star: float | None) -> bool:
    if f_star is not None:
        return rec.suboptimality <= tol
    return movement <= tol


def pg_extra_run(
    problem: CompositeProblem,
    mix: MixingMatrix,
    params: BaselineParams,
    max_iters: int = 2000,
    tol: float = 1e-10,
    f_star: float | None = None,
) -> BaselineResult:
    """PG-EXTRA: corrected gradient descent with the mixing pair W, (I+W)/2.

    State y accumulates w x(k) - (1/2)(I + W) x(k-1) - step * (grad(k) -
    grad(k-1)); each iterate is prox(y). The W x product is the single
    communication round; the previous product is cached, not re-sent.
    """
    smooth, proxable = problem.split_for_baselines()
    n, d = problem.n, problem.d
    w = mix.w
    step = params.step
    round_scalars = 2 * d * mix.graph.n_edges
    ledger = CommLedger()
    records: list[IterateRecord] = []
    t_start = time.monotonic()

    x_prev = np.zeros((n, d))
    g_prev = _grad_rows(smooth, x_prev)
    wx_prev = w @ x_prev
    ledger.add_round(round_scalars)
    y = wx_prev - step * g_prev
    x = _prox_rows(proxable, y, step)
    ledger.close_iteration()
    rec = _record(records, ledger, problem, x, f_star, t_start)
    if _stop(rec, float(np.linalg.norm(x - x_prev)), tol, f_star):
        return BaselineResult(records, ledger, x, 1)

    for k in range(2, max_iters + 1):
        g = _grad_rows(smooth, x)
        wx = w @ x
        ledger.add_round(round_scalars)
        y = y + wx - 0.5 * (x_prev + wx_prev) - step * (g - g_prev)
        x_next = _prox_rows(proxable, y, step)
        _guard(x_next, "pgextra", k)
        ledger.close_iteration()
        rec = _record(records, ledger, problem, x_next, f_star, t_start)
        movement = float(np.linalg.norm(x_next - x))
        x_prev, wx_prev, g_prev = x, wx, g
        x = x_next
        if _stop(rec, movement, tol, f_star):
            break
    return BaselineResult(records, ledger, x, len(records))


def nids_run(
    problem: CompositeProblem,
    mix: MixingMatrix,
    params: BaselineParams,
    max_iters: int = 2000,
    tol: float = 1e-10,
    f_star: float | None = None,
) -> BaselineResult:
    """NIDS: z(k+1) = z(k) - x(k) + (I+W)/2 applied to the extrapolated bundle.

    The bundle is 2 x(k) - x(k-1) - step * (grad(k) - grad(k-1)); mixing it is
    the single communication round of the iteration. From a zero start the
    folded first step reproduces the canonical x(1) = prox(x(0) - step*grad).
    """
    smooth, proxable = problem.split_for_baselines()
    n, d = problem.n, problem.d
    w_bar = 0.5 * (np.eye(mix.graph.n) + mix.w)
    step = params.step
    round_scalars = 2 * d * mix.graph.n_edges
    ledger = CommLedger()
    records: list[IterateRecord] = []
    t_start = time.monotonic()

    x = np.zeros((n, d))
    x_prev = x
    g = _grad_rows(smooth, x)
    g_prev = g
    z = x - step * g
    for k in range(1, max_iters + 1):
        bundle = 2.0 * x - x_prev - step * (g - g_prev)
        z = z - x + w_bar @ bundle
        ledger.add_round(round_scalars)
        x_next = _prox_rows(proxable, z, step)
        _guard(x_next, "nids", k)
        ledger.close_iteration()
        rec = _record(records, ledger, problem, x_next, f_star, t_start)
        movement = float(np.linalg.norm(x_next - x))
        x_prev, g_prev = x, g
        x = x_next
        g = _grad_rows(smooth, x)
        if _stop(rec, movement, tol, f_star):
            break
    return BaselineResult(records, ledger, x, len(records))


# ---------------------------------------------------------------------------
# step-size tuning


def sweep_grid() -> np.ndarray:
    """Default tuning grid: 13 logarithmic points spanning 1e-4 through 1e1."""
    return np.logspace(-4.0, 1.0, 13)


@dataclass
class SweepResult:
    """Outcome of a 1-D tuning sweep; rows are (value, iterations, scalars)."""

    best: float
    rows: list
    target: float

    def summary(self) -> str:
        lines = [f"sweep to suboptimality {self.target:g}:"]
        for value, iters, scalars in self.rows:
            shown = "-" if not math.isfinite(iters) else f"{int(iters)}"
            lines.append(f"  value {value:.6g}: iterations {shown}, scalars {scalars}")
        lines.append(f"  best: {self.best:.6g}")
        return "\n".join(lines)


def sweep_step(
    runner,
    grid=None,
    target: float = 1e-6,
    max_iters: int = 2000,
) -> SweepResult:
    """Pick the grid value whose run reaches the suboptimality target fastest.

    runner(value, max_iters, target) must return an object with .records and
    .ledger (a BaselineResult or the agent protocol's RunResult). Runs that
    diverge, break an inner prox solver, or fail to reach the target inside
    max_iters score +inf, so the argmin ignores them; ties go to the earlier
    grid point. Raises if no candidate converges.
    """
    if grid is None:
        grid = sweep_grid()
    rows = []
    best_value = None
    best_iters = math.inf
    for value in grid:
        try:
            result = runner(float(value), max_iters, target)
        except (BaselineDivergence, ProxError):
            rows.append((float(value), math.inf, 0))
            continue
        hit = next(
            (rec for rec in result.records if rec.suboptimality <= target), None
        )
        if hit is None:
            rows.append((float(value), math.inf, result.ledger.scalars_total))
            continue
        rows.append((float(value), hit.iter, hit.scalars_cum))
        if hit.iter < best_iters:
            best_iters = hit.iter
            best_value = float(value)
    if best_value is None:
        raise BaselineDivergence(
            f"no grid value reached suboptimality {target:g} within {max_iters} iterations"
        )
    return SweepResult(best_value, rows, target)
