"""Matrix-form replica of the decentralized protocol and its theory checks.

The oracle runs the same iteration as the agent simulator but as global
linear algebra over stacked nd-vectors, assembled two independent ways: the
blockwise route (the per-agent form the simulator mirrors) and the stacked
route (explicit constraint matrices A, B and a numerically completed square).
Agreement between the simulator and this module is the package's central
correctness property; the two assembly routes also cross-check each other.

On top of the replica sit the analysis objects: the constraint matrices
A = (Wt; I) and B = (I; Wt), the proximal metric Q = beta*((1+tau)I - Wt'Wt),
and the block matrices H, S, M, G of the convergence analysis, with
build-time verification of the algebraic identities H = S M^-1 and
G = S + S' - M'S.

The analysis family here is the sign-coherent one derived directly from the
subproblem optimality conditions, with the auxiliary point

    utilde = u(t+1),  vtilde = v(t+1),
    lamtilde = lam(t) - beta*(A u(t+1) - B v(t))      (note v(t), not v(t+1))

against which the prediction inequality holds exactly with

    S = [[Q, 0, 0], [0, Q + beta*B'B, r*B'], [0, B, I/beta]]
    M = [[I, 0, 0], [0, I, 0], [0, s*beta*B, (r+s)I]]

and H = S M^-1 comes out symmetric positive definite with off-diagonal
coupling +r/(r+1)*B' at s = 1. A commonly printed variant flips the sign of
every lambda-coupling block (equivalent to conjugating by diag(I, I, -I), so
all eigenvalue bounds agree) and pairs it with lamtilde built from v(t+1);
under that variant the correction identity w(t+1) = w(t) - M (w(t) -
wtilde(t)) holds only at r = 1 and the contraction inequality fails
numerically for every r. ``correction_matrix`` and ``make_wtilde`` expose
both conventions so the discrepancy stays demonstrable; everything else in
the module uses the coherent family, under which the identity is exact for
all r and s and the contraction holds with margins at rounding level.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dsadmm import DsAdmmParams, run, stacked_states
from .graphs import MixingMatrix, spectral_gap
from .problems import CompositeProblem

__all__ = [
    "GlobalMatrices",
    "GlobalIterate",
    "RateConstants",
    "build_matrices",
    "correction_matrix",
    "global_step",
    "global_step_stacked",
    "run_global",
    "h_norm",
    "g_norm",
    "weighted_norm_sq",
    "kkt_residual",
    "rate_constants",
    "check_lemma1",
    "check_contraction",
    "check_theorem1",
    "update_identity_residual",
    "lockstep_equivalence",
    "verification_report",
]


class MatrixCheckError(RuntimeError):
    """An analysis-matrix invariant failed at build time."""


@dataclass(eq=False)
class GlobalMatrices:
    """Dense analysis matrices for one (graph, d, params) configuration."""

    n: int
    d: int
    params: DsAdmmParams
    wt: np.ndarray  # nd x nd mixing, W kron I_d
    a: np.ndarray  # 2nd x nd, (Wt; I)
    b: np.ndarray  # 2nd x nd, (I; Wt)
    q: np.ndarray  # nd x nd proximal metric
    h: np.ndarray  # 4nd x 4nd contraction metric
    s: np.ndarray  # 4nd x 4nd (sign-repaired lower-left block)
    m: np.ndarray  # 4nd x 4nd printed correction matrix (exact at r = 1)
    g: np.ndarray  # 4nd x 4nd decrease metric

    @property
    def nd(self) -> int:
        return self.n * self.d


def correction_matrix(gm: GlobalMatrices, r: float, s: float, printed: bool = False) -> np.ndarray:
    """Correction matrix M of the update identity w(t+1) = w(t) - M (w(t) - wtilde(t)).

    The derived blocks (s*beta*B, (r+s)I) make the identity exact for all r
    and s when wtilde uses the coherent lamtilde (old-v form). printed=True
    gives the sign-flipped variant (-beta*B, (1+r)I), which pairs with the
    new-v lamtilde and is exact only at r = 1.
    """
    nd = gm.nd
    beta = gm.params.beta
    eye1 = np.eye(nd)
    eye2 = np.eye(2 * nd)
    z12 = np.zeros((nd, 2 * nd))
    if printed:
        low_v = -beta * gm.b
        low_l = (1.0 + r) * eye2
    else:
        low_v = s * beta * gm.b
        low_l = (r + s) * eye2
    return np.block(
        [
            [eye1, np.zeros((nd, nd)), z12],
            [np.zeros((nd, nd)), eye1, z12],
            [np.zeros((2 * nd, nd)), low_v, low_l],
        ]
    )


def build_matrices(mix: MixingMatrix, d: int, params: DsAdmmParams) -> GlobalMatrices:
    """Construct Wt, A, B, Q, H, S, M, G and verify their invariants.

    Checks: Q symmetric positive definite, H symmetric positive definite,
    G positive definite for r < 1 (positive semidefinite at r = 1), and the
    identities H = S M^-1, G = S + S' - M'S to 1e-10 elementwise.
    """
    n = mix.n
    beta, r, tau = params.beta, params.r, params.tau
    nd = n * d
    wt = np.kron(mix.w, np.eye(d))
    eye = np.eye(nd)
    a = np.vstack([wt, eye])
    b = np.vstack([eye, wt])
    q = beta * ((1.0 + tau) * eye - wt @ wt)
    q = 0.5 * (q + q.T)  # exact symmetry against rounding

    btb = b.T @ b
    z = np.zeros((nd, nd))
    z12 = np.zeros((nd, 2 * nd))
    eye2 = np.eye(2 * nd)
    h = np.block(
        [
            [q, z, z12],
            [z, q + (beta / (r + 1.0)) * btb, (r / (r + 1.0)) * b.T],
            [z12.T, (r / (r + 1.0)) * b, (1.0 / (beta * (r + 1.0))) * eye2],
        ]
    )
    s_mat = np.block(
        [
            [q, z, z12],
            [z, q + beta * btb, r * b.T],
            [z12.T, b, (1.0 / beta) * eye2],
        ]
    )
    g_mat = np.block(
        [
            [q, z, z12],
            [z, q, z12],
            [z12.T, np.zeros((2 * nd, nd)), ((1.0 - r) / beta) * eye2],
        ]
    )
    gm = GlobalMatrices(n, d, params, wt, a, b, q, h, s_mat, None, g_mat)  # type: ignore[arg-type]
    gm.m = correction_matrix(gm, r, 1.0)

    _verify_build(gm)
    return gm


def _verify_build(gm: GlobalMatrices) -> None:
    beta, r = gm.params.beta, gm.params.r
    if not np.allclose(gm.h, gm.h.T, rtol=0.0, atol=1e-12):
        raise MatrixCheckError("H is not symmetric")
    q_eigs = np.linalg.eigvalsh(gm.q)
    if q_eigs[0] <= 0.0:
        raise MatrixCheckError(f"Q is not positive definite (min eig {q_eigs[0]:.3e})")
    h_eigs = np.linalg.eigvalsh(gm.h)
    if h_eigs[0] <= -1e-12 * max(1.0, h_eigs[-1]):
        raise MatrixCheckError(f"H is not positive definite (min eig {h_eigs[0]:.3e})")
    g_eigs = np.linalg.eigvalsh(gm.g)
    floor = -1e-12 if r >= 1.0 else 0.0
    if g_eigs[0] <= floor:
        raise MatrixCheckError(f"G fails definiteness for r={r} (min eig {g_eigs[0]:.3e})")
    m_inv = np.linalg.inv(gm.m)
    res1 = float(np.max(np.abs(gm.h - gm.s @ m_inv)))
    res2 = float(np.max(np.abs(gm.g - (gm.s + gm.s.T - gm.m.T @ gm.s))))
    if res1 > 1e-10:
        raise MatrixCheckError(f"identity H = S M^-1 fails: max residual {res1:.3e}")
    if res2 > 1e-10:
        raise MatrixCheckError(f"identity G = S + S' - M'S fails: max residual {res2:.3e}")


@dataclass
class GlobalIterate:
    """Stacked iterate (u, v, lam) with lam = (w1, w2)."""

    u: np.ndarray
    v: np.ndarray
    lam: np.ndarray

    @classmethod
    def zeros(cls, nd: int) -> "GlobalIterate":
        return cls(np.zeros(nd), np.zeros(nd), np.zeros(2 * nd))

    @property
    def w1(self) -> np.ndarray:
        return self.lam[: self.u.shape[0]]

    @property
    def w2(self) -> np.ndarray:
        return self.lam[self.u.shape[0] :]

    @property
    def w(self) -> np.ndarray:
        return np.concatenate([self.u, self.v, self.lam])


def _blockwise_prox(terms, arg: np.ndarray, step: float, d: int) -> np.ndarray:
    out = np.empty_like(arg)
    for i, term in enumerate(terms):
        out[i * d : (i + 1) * d] = term.prox(arg[i * d : (i + 1) * d], step)
    return out


def global_step(
    it: GlobalIterate, gm: GlobalMatrices, f, g, s: float = 1.0
) -> GlobalIterate:
    """One iteration in the per-block assembly (what each agent computes).

    u-prox argument: (Wt w1 + w2 + beta(2 Wt v + (1+tau)u - Wt^2 u)) / (beta(2+tau));
    dual half-steps with r*beta; the v-prox mirrors it; full steps with s*beta.
    """
    beta, r, tau = gm.params.beta, gm.params.r, gm.params.tau
    wt = gm.wt
    d = gm.d
    step = 1.0 / ((2.0 + tau) * beta)
    u, v, w1, w2 = it.u, it.v, it.w1.copy(), it.w2.copy()

    c_u = wt @ w1 + w2 + beta * (2.0 * (wt @ v) + (1.0 + tau) * u - wt @ (wt @ u))
    u_new = _blockwise_prox(f, c_u * step, step, d)

    wtu = wt @ u_new
    w1h = w1 - r * beta * (wtu - v)
    w2h = w2 - r * beta * (u_new - wt @ v)

    c_v = beta * (2.0 * wtu + (1.0 + tau) * v - wt @ (wt @ v)) - (w1h + wt @ w2h)
    v_new = _blockwise_prox(g, c_v * step, step, d)

    w1n = w1h - s * beta * (wtu - v_new)
    w2n = w2h - s * beta * (u_new - wt @ v_new)
    return GlobalIterate(u_new, v_new, np.concatenate([w1n, w2n]))


def global_step_stacked(
    it: GlobalIterate, gm: GlobalMatrices, f, g, s: float = 1.0
) -> GlobalIterate:
    """One iteration assembled through the stacked constraint matrices.

    Literal form of the symmetric-ADMM subproblems: the quadratic coefficient
    beta*A'A + Q (resp. beta*B'B + Q) is completed numerically and verified to
    collapse to beta*(2+tau)*I, which is what makes the subproblems proxable.
    Cross-validates the per-block route; both must produce identical iterates
    up to rounding for any r, s.
    """
    beta, r, tau = gm.params.beta, gm.params.r, gm.params.tau
    a, b, q = gm.a, gm.b, gm.q
    d = gm.d
    nd = gm.nd
    coef = beta * (2.0 + tau)
    cu_mat = beta * (a.T @ a) + q
    if float(np.max(np.abs(cu_mat - coef * np.eye(nd)))) > 1e-8 * coef:
        raise MatrixCheckError("u-subproblem quadratic did not collapse to a multiple of I")
    step = 1.0 / coef
    lam = it.lam

    lin_u = a.T @ lam + beta * (a.T @ (b @ it.v)) + q @ it.u
    u_new = _blockwise_prox(f, lin_u * step, step, d)

    au = a @ u_new
    lam_h = lam - r * beta * (au - b @ it.v)

    lin_v = beta * (b.T @ au) + q @ it.v - b.T @ lam_h
    v_new = _blockwise_prox(g, lin_v * step, step, d)

    lam_new = lam_h - s * beta * (au - b @ v_new)
    return GlobalIterate(u_new, v_new, lam_new)


def run_global(
    problem: CompositeProblem,
    mix: MixingMatrix,
    params: DsAdmmParams,
    iters: int,
    s: float = 1.0,
    stacked: bool = False,
) -> list[GlobalIterate]:
    """Iterate the oracle from zero; returns [w(0), w(1), ..., w(iters)]."""
    gm = build_matrices(mix, problem.d, params)
    return run_global_from(gm, problem, iters, s=s, stacked=stacked)


def run_global_from(
    gm: GlobalMatrices,
    problem: CompositeProblem,
    iters: int,
    s: float = 1.0,
    stacked: bool = False,
) -> list[GlobalIterate]:
    step_fn = global_step_stacked if stacked else global_step
    traj = [GlobalIterate.zeros(gm.nd)]
    for _ in range(iters):
        traj.append(step_fn(traj[-1], gm, problem.f, problem.g, s=s))
    return traj


# ---------------------------------------------------------------------------
# weighted norms and KKT residual


def weighted_norm_sq(x: np.ndarray, mat: np.ndarray) -> float:
    """x' mat x with tiny negative results (above -1e-12) clamped to zero."""
    val = float(x @ (mat @ x))
    if val < -1e-12:
        raise MatrixCheckError(f"weighted norm square {val:.3e} below -1e-12")
    return max(val, 0.0)


def h_norm(x: np.ndarray, gm: GlobalMatrices) -> float:
    return math.sqrt(weighted_norm_sq(x, gm.h))


def g_norm(x: np.ndarray, gm: GlobalMatrices) -> float:
    return math.sqrt(weighted_norm_sq(x, gm.g))


def kkt_residual(
    gm: GlobalMatrices,
    f,
    g,
    u: np.ndarray,
    v: np.ndarray,
    w1: np.ndarray,
    w2: np.ndarray,
) -> float:
    """Distance from zero to the KKT mapping at (u, v, w1, w2).

    sqrt of dist(A'lam, df(u))^2 + dist(-B'lam, dg(v))^2 + ||Au - Bv||^2,
    using each term's exact subdifferential projection.
    """
    wt = gm.wt
    d = gm.d
    atl = wt @ w1 + w2
    btl = w1 + wt @ w2
    total = 0.0
    for i, fi in enumerate(f):
        sl = slice(i * d, (i + 1) * d)
        total += fi.subdiff_dist(u[sl], atl[sl]) ** 2
    for i, gi in enumerate(g):
        sl = slice(i * d, (i + 1) * d)
        total += gi.subdiff_dist(v[sl], -btl[sl]) ** 2
    feas = wt @ u - v
    feas2 = u - wt @ v
    total += float(feas @ feas) + float(feas2 @ feas2)
    return math.sqrt(total)


# ---------------------------------------------------------------------------
# rate constants and theory checks


@dataclass(frozen=True)
class RateConstants:
    """Constants of the linear-rate guarantee: contraction factor 1/(1+eps(c))."""

    rho: float
    phi: float
    delta: float
    theta: float

    def epsilon(self, c: float) -> float:
        return self.phi / (c * c * self.delta * self.theta)


def rate_constants(params: DsAdmmParams, rho: float) -> RateConstants:
    beta, r, tau = params.beta, params.r, params.tau
    if r >= 1.0:
        raise ValueError(f"linear-rate constants need r < 1, got r={r}")
    if not (0.0 < rho <= 1.0):
        raise ValueError(f"spectral gap must be in (0, 1], got {rho}")
    phi = min(2.0 * beta * rho, (1.0 - r) / beta)
    delta = max(
        6.0 * r * r + 2.0 / (beta * beta),
        12.0 * beta * beta + 4.0 + (tau * beta) ** 2,
        3.0 * (tau * beta) ** 2,
    )
    theta = (2.0 * r * r * beta * beta + 1.0) / (beta * (r + 1.0)) + (2.0 + tau - r) * beta
    return RateConstants(rho, phi, delta, theta)


@dataclass
class Lemma1Report:
    lam_max_h: float
    theta: float
    lam_min_g: float
    block_value: float  # min(beta*tau, (1-r)/beta): what G's blocks actually give
    stated_bound: float  # 2(1-r)rho, the claim as stated
    proof_bound: float  # phi, the claim the proof ends with
    passed: bool

    def summary(self) -> str:
        lines = [
            f"lambda_max(H) = {self.lam_max_h:.12g} <= theta = {self.theta:.12g}: "
            f"{'ok' if self.lam_max_h <= self.theta + 1e-8 else 'VIOLATED'}",
            f"lambda_min(G) = {self.lam_min_g:.12g}",
            f"  block formula min(beta*tau, (1-r)/beta) = {self.block_value:.12g} "
            f"(asserted, matches to 1e-10: "
            f"{'yes' if abs(self.lam_min_g - self.block_value) <= 1e-10 else 'NO'})",
            f"  stated lower bound 2(1-r)rho = {self.stated_bound:.12g} "
            f"({'holds' if self.lam_min_g >= self.stated_bound - 1e-12 else 'does not hold'}, reported only)",
            f"  proof lower bound phi = {self.proof_bound:.12g} "
            f"({'holds' if self.lam_min_g >= self.proof_bound - 1e-12 else 'does not hold'}, reported only)",
        ]
        return "\n".join(lines)


def check_lemma1(gm: GlobalMatrices, rate: RateConstants) -> Lemma1Report:
    """Assert lambda_max(H) <= theta and the exact block value of lambda_min(G).

    The two printed lower bounds on lambda_min(G) are reported but not
    asserted: G's diagonal blocks give exactly min(beta*tau, (1-r)/beta),
    which is typically far below 2*beta*rho for small tau.
    """
    lam_max_h = float(np.linalg.eigvalsh(gm.h)[-1])
    lam_min_g = float(np.linalg.eigvalsh(gm.g)[0])
    beta, r, tau = gm.params.beta, gm.params.r, gm.params.tau
    block_value = min(beta * tau, (1.0 - r) / beta)
    stated = 2.0 * (1.0 - r) * rate.rho
    passed = (lam_max_h <= rate.theta + 1e-8) and (abs(lam_min_g - block_value) <= 1e-10)
    return Lemma1Report(
        lam_max_h, rate.theta, lam_min_g, block_value, stated, rate.phi, passed
    )


def make_wtilde(
    cur: GlobalIterate, nxt: GlobalIterate, gm: GlobalMatrices, printed: bool = False
) -> GlobalIterate:
    """Auxiliary iterate of the analysis: (u(t+1), v(t+1), lamtilde).

    The coherent lamtilde is lam(t) - beta*(A u(t+1) - B v(t)); printed=True
    swaps in v(t+1), the variant under which the analysis identities degrade.
    """
    beta = gm.params.beta
    v_used = nxt.v if printed else cur.v
    lam_tilde = cur.lam - beta * (gm.a @ nxt.u - gm.b @ v_used)
    return GlobalIterate(nxt.u.copy(), nxt.v.copy(), lam_tilde)


@dataclass
class InequalityReport:
    """Per-iteration margins of a theory inequality; passed iff no violations."""

    name: str
    rows: list  # (t, lhs, rhs, ok)
    violations: int
    worst_margin: float  # min over t of rhs - lhs (negative means violated)

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def summary(self) -> str:
        return (
            f"{self.name}: {len(self.rows)} inequalities, "
            f"{self.violations} violations, worst margin {self.worst_margin:.3e}"
        )


def check_contraction(
    traj: list[GlobalIterate], gm: GlobalMatrices, w_ref: np.ndarray
) -> InequalityReport:
    """Fejer-type decrease in the H-norm against a solution point.

    For each t: ||w(t+1) - ref||_H^2 <= ||w(t) - ref||_H^2 - ||w(t) - wtilde(t)||_G^2
    with slack 1e-8 * (1 + LHS).
    """
    rows = []
    violations = 0
    worst = math.inf
    for t in range(len(traj) - 1):
        cur, nxt = traj[t], traj[t + 1]
        wtl = make_wtilde(cur, nxt, gm)
        lhs = weighted_norm_sq(nxt.w - w_ref, gm.h)
        decrease = weighted_norm_sq(cur.w - wtl.w, gm.g)
        rhs = weighted_norm_sq(cur.w - w_ref, gm.h) - decrease
        slack = 1e-8 * (1.0 + lhs)
        ok = lhs <= rhs + slack
        margin = rhs + slack - lhs
        rows.append((t, lhs, rhs, ok))
        worst = min(worst, margin)
        violations += 0 if ok else 1
    return InequalityReport("H-norm contraction", rows, violations, worst)


def check_theorem1(
    traj: list[GlobalIterate], gm: GlobalMatrices
) -> InequalityReport:
    """Sublinear bound on successive differences.

    ||w(t) - w(t+1)||^2 <= (1/(beta*tau*(t+1))) * ((1+r)/(1-r)) * C with
    C = ||w(1) - w(0)||_H^2 + ||v(1) - v(0)||_Q^2, relative slack 1e-8.
    """
    beta, r, tau = gm.params.beta, gm.params.r, gm.params.tau
    if len(traj) < 2:
        raise ValueError("need at least two iterates")
    if r >= 1.0:
        raise ValueError("bound requires r < 1")
    const = weighted_norm_sq(traj[1].w - traj[0].w, gm.h) + weighted_norm_sq(
        traj[1].v - traj[0].v, gm.q
    )
    factor = const * (1.0 + r) / (1.0 - r)
    rows = []
    violations = 0
    worst = math.inf
    for t in range(len(traj) - 1):
        diff = traj[t].w - traj[t + 1].w
        lhs = float(diff @ diff)
        bound = factor / (beta * tau * (t + 1))
        ok = lhs <= bound * (1.0 + 1e-8)
        rows.append((t, lhs, bound, ok))
        worst = min(worst, bound * (1.0 + 1e-8) - lhs)
        violations += 0 if ok else 1
    return InequalityReport("sublinear difference bound", rows, violations, worst)


def update_identity_residual(
    traj: list[GlobalIterate], gm: GlobalMatrices, printed: bool = False, s: float = 1.0
) -> float:
    """Max relative residual of w(t+1) = w(t) - M (w(t) - wtilde(t)) over a trajectory.

    Each M variant is paired with its own wtilde convention, so printed=True
    measures how far the sign-flipped family drifts from the actual iterates
    (zero at r = 1, large otherwise) while the default measures the coherent
    family (zero for all r, s up to rounding).
    """
    m = correction_matrix(gm, gm.params.r, s, printed=printed)
    worst = 0.0
    for t in range(len(traj) - 1):
        cur, nxt = traj[t], traj[t + 1]
        wtl = make_wtilde(cur, nxt, gm, printed=printed)
        pred = cur.w - m @ (cur.w - wtl.w)
        num = float(np.max(np.abs(nxt.w - pred)))
        den = 1.0 + float(np.max(np.abs(nxt.w)))
        worst = max(worst, num / den)
    return worst


# ---------------------------------------------------------------------------
# lockstep equivalence between the simulator and the oracle


@dataclass
class EquivalenceReport:
    """Per-iteration relative deviations between the two lanes."""

    rows: list  # (t, dev_u, dev_v, dev_w1, dev_w2)
    max_rel_dev: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.max_rel_dev <= self.tol

    def summary(self) -> str:
        return (
            f"lockstep equivalence over {len(self.rows)} iterations: "
            f"max relative deviation {self.max_rel_dev:.3e} "
            f"({'within' if self.passed else 'EXCEEDS'} tolerance {self.tol:.1e})"
        )


def _rel_dev(x: np.ndarray, ref: np.ndarray) -> float:
    return float(np.max(np.abs(x - ref))) / (1.0 + float(np.max(np.abs(ref))))


def lockstep_equivalence(
    problem: CompositeProblem,
    mix: MixingMatrix,
    params: DsAdmmParams,
    iters: int,
    tol: float | None = None,
):
    """Run simulator and oracle side by side; compare stacked iterates each iteration.

    Tolerance defaults to 1e-9, relaxed to 1e-6 when the problem contains an
    iterative inner prox (the hinge), whose finite tolerance perturbs the two
    lanes differently. Returns (report, oracle trajectory, simulator result).
    """
    if tol is None:
        tol = 1e-6 if problem.kind == "svm" else 1e-9
    gm = build_matrices(mix, problem.d, params)
    oracle_traj = [GlobalIterate.zeros(gm.nd)]
    rows = []

    def observer(t: int, states) -> None:
        oracle_traj.append(global_step(oracle_traj[-1], gm, problem.f, problem.g))
        u, v, w1, w2 = stacked_states(states, params.beta)
        it = oracle_traj[-1]
        rows.append(
            (
                t,
                _rel_dev(u, it.u),
                _rel_dev(v, it.v),
                _rel_dev(w1, it.w1),
                _rel_dev(w2, it.w2),
            )
        )

    result = run(problem, mix, params, max_iters=iters, tol=0.0, observer=observer)
    max_dev = max((max(row[1:]) for row in rows), default=0.0)
    return EquivalenceReport(rows, max_dev, tol), oracle_traj, result


# ---------------------------------------------------------------------------
# composite verification report


@dataclass
class VerificationReport:
    equivalence: EquivalenceReport
    contraction: InequalityReport
    sublinear: InequalityReport
    lemma1: Lemma1Report
    identity_printed: float
    identity_derived: float
    final_kkt: float
    passed: bool

    def text(self) -> str:
        lines = [
            "verification report",
            "===================",
            self.equivalence.summary(),
            self.contraction.summary(),
            self.sublinear.summary(),
            self.lemma1.summary(),
            f"update identity max relative residual: coherent M {self.identity_derived:.3e},"
            f" sign-flipped variant {self.identity_printed:.3e} (exact only at r = 1)",
            f"KKT residual at final oracle iterate: {self.final_kkt:.3e}",
            f"overall: {'PASS' if self.passed else 'FAIL'}",
        ]
        return "\n".join(lines)

    def csv_rows(self) -> list[dict]:
        rows = []
        for t, du, dv, dw1, dw2 in self.equivalence.rows:
            rows.append(
                {
                    "iter": t + 1,
                    "check": "equivalence",
                    "value": max(du, dv, dw1, dw2),
                    "bound": self.equivalence.tol,
                }
            )
        for t, lhs, rhs, _ok in self.contraction.rows:
            rows.append({"iter": t, "check": "contraction", "value": lhs, "bound": rhs})
        for t, lhs, bound, _ok in self.sublinear.rows:
            rows.append({"iter": t, "check": "sublinear", "value": lhs, "bound": bound})
        return rows


def verification_report(
    problem: CompositeProblem,
    mix: MixingMatrix,
    params: DsAdmmParams,
    iters: int = 200,
    ref_iters: int | None = None,
) -> VerificationReport:
    """Full verification pass at one configuration.

    Runs the lockstep equivalence for `iters` iterations, extends the oracle
    alone to `ref_iters` (default 10x) for a solution-point estimate, then
    evaluates every structural check against that trajectory.
    """
    if ref_iters is None:
        ref_iters = 10 * iters
    equiv, oracle_traj, _ = lockstep_equivalence(problem, mix, params, iters)
    gm = build_matrices(mix, problem.d, params)
    tail = list(oracle_traj)
    while len(tail) - 1 < ref_iters:
        tail.append(global_step(tail[-1], gm, problem.f, problem.g))
    w_ref = tail[-1].w

    contraction = check_contraction(oracle_traj, gm, w_ref)
    sublinear = check_theorem1(oracle_traj, gm)
    rate = rate_constants(params, spectral_gap(mix)) if params.r < 1.0 else None
    if rate is None:
        raise ValueError("verification requires r < 1")
    lemma1 = check_lemma1(gm, rate)
    res_printed = update_identity_residual(oracle_traj, gm, printed=True)
    res_derived = update_identity_residual(oracle_traj, gm, printed=False)
    fin = tail[-1]
    kkt = kkt_residual(gm, problem.f, problem.g, fin.u, fin.v, fin.w1, fin.w2)
    passed = (
        equiv.passed
        and contraction.passed
        and sublinear.passed
        and lemma1.passed
        and res_derived <= 1e-9
    )
    return VerificationReport(
        equiv, contraction, sublinear, lemma1, res_printed, res_derived, kkt, passed
    )
