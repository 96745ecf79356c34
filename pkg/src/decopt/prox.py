"""Proximal operators for every loss and regularizer the experiments use.

Each term h is exposed two ways: a plain function ``prox_*(v, step, ...)``
returning argmin_x h(x) + (1/(2*step))*||x - v||^2, and a ProxFn object that
additionally evaluates h and measures distances to its subdifferential (the
ingredient of KKT residuals). The closed forms are textbook; the one iterative
solver is the hinge-sum prox, a small box-constrained dual coordinate ascent.

Determinism contract: a prox call depends only on its arguments and the
owning object's construction-time seed. The hinge solver's sweep orders are
drawn from a fixed per-instance stream indexed by sweep number, so calling
prox twice with identical inputs gives bitwise-identical outputs no matter
what happened in between.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve

__all__ = [
    "ProxFn",
    "Zero",
    "L1Norm",
    "SquaredL2",
    "ElasticNet",
    "QuadraticLoss",
    "HingeSum",
    "prox_l1",
    "prox_sq_l2",
    "prox_elastic_net",
    "prox_quadratic_loss",
    "prox_hinge_sum",
]


class ProxError(RuntimeError):
    """Raised when an iterative prox subproblem fails to converge."""


# ---------------------------------------------------------------------------
# closed forms as plain functions


def prox_l1(v: np.ndarray, step: float, weight: float) -> np.ndarray:
    """Soft-thresholding: componentwise sign(v)*max(|v| - step*weight, 0)."""
    if step <= 0:
        raise ValueError(f"step must be positive, got {step}")
    t = step * weight
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


def prox_sq_l2(v: np.ndarray, step: float, weight: float) -> np.ndarray:
    """Prox of (weight/2)*||x||^2, a pure shrink: v / (1 + step*weight)."""
    if step <= 0:
        raise ValueError(f"step must be positive, got {step}")
    return v / (1.0 + step * weight)


def prox_elastic_net(v: np.ndarray, step: float, w1: float, w2: float) -> np.ndarray:
    """Prox of w1*||x||_1 + (w2/2)*||x||^2: soft-threshold then shrink."""
    return prox_l1(v, step, w1) / (1.0 + step * w2)


def prox_quadratic_loss(
    v: np.ndarray, step: float, a_mat: np.ndarray, b_vec: np.ndarray, scale: float
) -> np.ndarray:
    """Prox of (scale/2)*||A x - b||^2: solve (I + step*scale*A'A) x = v + step*scale*A'b.

    One-shot solve; :class:`QuadraticLoss` caches factorizations for repeated
    calls at a fixed step. An empty A means the zero function, whose prox is
    the identity.
    """
    if step <= 0:
        raise ValueError(f"step must be positive, got {step}")
    if a_mat.size == 0:
        return v.copy()
    c = step * scale
    d = v.shape[0]
    lhs = np.eye(d) + c * (a_mat.T @ a_mat)
    rhs = v + c * (a_mat.T @ b_vec)
    x = np.linalg.solve(lhs, rhs)
    _check_residual(lhs, x, rhs)
    return x


def _check_residual(lhs: np.ndarray, x: np.ndarray, rhs: np.ndarray) -> None:
    # relative residual: the system is SPD so a solve can only fail numerically
    res = float(np.linalg.norm(lhs @ x - rhs))
    if res > 1e-10 * max(1.0, float(np.linalg.norm(rhs))):
        raise ProxError(f"quadratic prox solve residual {res:.3e} too large")


def prox_hinge_sum(
    v: np.ndarray,
    step: float,
    rows: np.ndarray,
    labels: np.ndarray,
    scale: float,
    tol: float = 1e-10,
    seed: int = 0,
) -> np.ndarray:
    """Prox of scale * sum_j max(0, 1 - b_j a_j'x) by dual coordinate ascent.

    See :class:`HingeSum` for the solver; this builds a throwaway instance.
    """
    return HingeSum(rows, labels, scale, seed=seed, tol=tol).prox(v, step)


# ---------------------------------------------------------------------------
# ProxFn objects


class ProxFn:
    """A convex term h with value, prox, and subdifferential-distance queries.

    Subclasses implement:

    evaluate(x)
        h(x).
    prox(v, step)
        argmin_x h(x) + (1/(2*step))*||x - v||^2.
    subdiff_dist(x, y)
        Euclidean distance from y to the subdifferential of h at x; zero iff
        y is a subgradient. Used to assemble KKT residuals.

    gradient(x) is available only on differentiable terms and raises
    NotImplementedError otherwise.
    """

    def evaluate(self, x: np.ndarray) -> float:
        raise NotImplementedError

    def prox(self, v: np.ndarray, step: float) -> np.ndarray:
        raise NotImplementedError

    def subdiff_dist(self, x: np.ndarray, y: np.ndarray) -> float:
        raise NotImplementedError

    def gradient(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError(f"{type(self).__name__} is not differentiable")


@dataclass
class Zero(ProxFn):
    """The zero function; prox is the identity."""

    def evaluate(self, x: np.ndarray) -> float:
        return 0.0

    def prox(self, v: np.ndarray, step: float) -> np.ndarray:
        return v.copy()

    def subdiff_dist(self, x: np.ndarray, y: np.ndarray) -> float:
        return float(np.linalg.norm(y))

    def gradient(self, x: np.ndarray) -> np.ndarray:
        return np.zeros_like(x)


@dataclass
class L1Norm(ProxFn):
    """h(x) = weight * ||x||_1."""

    weight: float

    def evaluate(self, x: np.ndarray) -> float:
        return self.weight * float(np.abs(x).sum())

    def prox(self, v: np.ndarray, step: float) -> np.ndarray:
        return prox_l1(v, step, self.weight)

    def subdiff_dist(self, x: np.ndarray, y: np.ndarray) -> float:
        # at x_k != 0 the subdifferential is the point {w*sign(x_k)}; at
        # x_k == 0 it is the interval [-w, w], so the distance clips to it
        w = self.weight
        at_zero = x == 0.0
        dist = np.where(
            at_zero,
            np.maximum(np.abs(y) - w, 0.0),
            y - w * np.sign(x),
        )
        return float(np.linalg.norm(dist))


@dataclass
class SquaredL2(ProxFn):
    """h(x) = (weight/2) * ||x||_2^2."""

    weight: float

    def evaluate(self, x: np.ndarray) -> float:
        return 0.5 * self.weight * float(x @ x)

    def prox(self, v: np.ndarray, step: float) -> np.ndarray:
        return prox_sq_l2(v, step, self.weight)

    def subdiff_dist(self, x: np.ndarray, y: np.ndarray) -> float:
        return float(np.linalg.norm(y - self.weight * x))

    def gradient(self, x: np.ndarray) -> np.ndarray:
        return self.weight * x


@dataclass
class ElasticNet(ProxFn):
    """h(x) = w1 * ||x||_1 + (w2/2) * ||x||_2^2."""

    w1: float
    w2: float

    def evaluate(self, x: np.ndarray) -> float:
        return self.w1 * float(np.abs(x).sum()) + 0.5 * self.w2 * float(x @ x)

    def prox(self, v: np.ndarray, step: float) -> np.ndarray:
        return prox_elastic_net(v, step, self.w1, self.w2)

    def subdiff_dist(self, x: np.ndarray, y: np.ndarray) -> float:
        z = y - self.w2 * x
        at_zero = x == 0.0
        dist = np.where(
            at_zero,
            np.maximum(np.abs(z) - self.w1, 0.0),
            z - self.w1 * np.sign(x),
        )
        return float(np.linalg.norm(dist))


@dataclass(eq=False)
class QuadraticLoss(ProxFn):
    """h(x) = (scale/2) * ||A x - b||^2 with a per-step factorization cache.

    The prox solves the SPD system (I + step*scale*A'A) x = v + step*scale*A'b.
    DS-ADMM calls this at one fixed step for the whole run, so the Cholesky
    factor is computed once per distinct step value and reused; the cache must
    only be warmed before any concurrent use (single writer, then readers).
    """

    a_mat: np.ndarray
    b_vec: np.ndarray
    scale: float
    _ata: np.ndarray = field(init=False, repr=False)
    _atb: np.ndarray = field(init=False, repr=False)
    _chol: dict = field(init=False, repr=False, default_factory=dict)

    def __post_init__(self) -> None:
        self.a_mat = np.asarray(self.a_mat, dtype=float)
        self.b_vec = np.asarray(self.b_vec, dtype=float)
        if self.a_mat.ndim != 2:
            raise ValueError("a_mat must be 2-D (possibly with 0 rows)")
        if self.a_mat.shape[0] != self.b_vec.shape[0]:
            raise ValueError("a_mat and b_vec row counts differ")
        if self.scale <= 0:
            raise ValueError("scale must be positive")
        self._ata = self.a_mat.T @ self.a_mat
        self._atb = self.a_mat.T @ self.b_vec

    @property
    def m(self) -> int:
        return self.a_mat.shape[0]

    def evaluate(self, x: np.ndarray) -> float:
        if self.m == 0:
            return 0.0
        r = self.a_mat @ x - self.b_vec
        return 0.5 * self.scale * float(r @ r)

    def gradient(self, x: np.ndarray) -> np.ndarray:
        if self.m == 0:
            return np.zeros_like(x)
        return self.scale * (self._ata @ x - self._atb)

    def prox(self, v: np.ndarray, step: float) -> np.ndarray:
        if step <= 0:
            raise ValueError(f"step must be positive, got {step}")
        if self.m == 0:
            return v.copy()
        c = step * self.scale
        fac = self._chol.get(step)
        if fac is None:
            lhs = np.eye(v.shape[0]) + c * self._ata
            fac = (cho_factor(lhs), lhs)
            self._chol[step] = fac
        rhs = v + c * self._atb
        x = cho_solve(fac[0], rhs)
        _check_residual(fac[1], x, rhs)
        return x

    def subdiff_dist(self, x: np.ndarray, y: np.ndarray) -> float:
        return float(np.linalg.norm(y - self.gradient(x)))


@dataclass(eq=False)
class HingeSum(ProxFn):
    """h(x) = scale * sum_j max(0, 1 - b_j * a_j'x), solved in the dual.

    The prox subproblem is a tiny SVM with a proximal anchor. Its dual is a
    box-constrained concave quadratic over alpha_j in [0, scale*step] with
    primal recovery x = v + sum_j alpha_j b_j a_j, maximized by coordinate
    ascent: each coordinate update is the exact clip
    alpha_j <- clip(alpha_j + (1 - b_j a_j'x)/||a_j||^2, 0, box). Sweeps visit
    coordinates in a seeded random order (permutation k of the instance's
    fixed stream for sweep k) and stop when the largest single-coordinate dual
    change in a full sweep is at most tol. The cap of 10*m sweeps signals a
    tolerance too tight to certify rather than looping forever.

    margin_tol controls subdiff_dist only: sample margins within margin_tol of
    zero are treated as kinks (their subgradient coefficient ranges over
    [0, 1]); the reported distance is exact when no margin falls inside that
    band and otherwise errs low, which suits its role as a convergence metric.
    """

    rows: np.ndarray
    labels: np.ndarray
    scale: float
    seed: int | tuple = 0
    tol: float = 1e-10
    margin_tol: float = 1e-7
    _gram: list = field(init=False, repr=False)
    _sqn: list = field(init=False, repr=False)
    _active: list = field(init=False, repr=False)
    _perms: list = field(init=False, repr=False, default_factory=list)
    _perm_rng: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self.rows = np.asarray(self.rows, dtype=float)
        self.labels = np.asarray(self.labels, dtype=float)
        if self.rows.ndim != 2:
            raise ValueError("rows must be 2-D (possibly with 0 rows)")
        if self.rows.shape[0] != self.labels.shape[0]:
            raise ValueError("rows and labels counts differ")
        if self.m and not np.all(np.isin(self.labels, (-1.0, 1.0))):
            raise ValueError("hinge labels must be -1 or +1")
        if self.scale <= 0:
            raise ValueError("scale must be positive")
        signed = self.rows * self.labels[:, None]
        self._gram = (signed @ signed.T).tolist()
        self._sqn = [float(r @ r) for r in self.rows]
        self._active = [j for j in range(self.m) if self._sqn[j] > 0.0]
        key = self.seed if isinstance(self.seed, tuple) else (self.seed,)
        self._perm_rng = np.random.default_rng([int(k) for k in key])

    @property
    def m(self) -> int:
        return self.rows.shape[0]

    def evaluate(self, x: np.ndarray) -> float:
        if self.m == 0:
            return 0.0
        margins = 1.0 - self.labels * (self.rows @ x)
        return self.scale * float(np.maximum(margins, 0.0).sum())

    def _perm(self, k: int) -> list:
        # permutation k is the k-th draw of a fixed stream, so it is the same
        # whether it was first needed by this call or an earlier one
        while len(self._perms) <= k:
            self._perms.append(self._perm_rng.permutation(len(self._active)).tolist())
        return self._perms[k]

    def prox(self, v: np.ndarray, step: float) -> np.ndarray:
        x, _ = self.prox_with_duals(v, step)
        return x

    def prox_with_duals(
        self, v: np.ndarray, step: float, max_sweeps: int | None = None
    ) -> tuple[np.ndarray, np.ndarray]:
        if step <= 0:
            raise ValueError(f"step must be positive, got {step}")
        alpha = np.zeros(self.m)
        if not self._active:
            return v.copy(), alpha
        box = self.scale * step
        act = self._active
        gram, sqn = self._gram, self._sqn
        # margins of active samples at the current recovered primal; kept
        # incrementally (python floats: these loops dominate the run time)
        base = (1.0 - self.labels * (self.rows @ v)).tolist()
        marg = [base[j] for j in act]
        al = [0.0] * len(act)
        cap = 10 * self.m if max_sweeps is None else max_sweeps
        for sweep in range(cap):
            if sweep and sweep % 64 == 0:
                # refresh incremental margins from scratch to shed float drift
                for p, j in enumerate(act):
                    alpha[j] = al[p]
                xs = v + (alpha * self.labels) @ self.rows
                fresh = (1.0 - self.labels * (self.rows @ xs)).tolist()
                marg = [fresh[j] for j in act]
            max_delta = 0.0
            for p in self._perm(sweep):
                mj = marg[p]
                aj = al[p]
                nj = sqn[act[p]]
                new = aj + mj / nj
                if new < 0.0:
                    new = 0.0
                elif new > box:
                    new = box
                delta = new - aj
                if delta != 0.0:
                    al[p] = new
                    gj = gram[act[p]]
                    for q in range(len(act)):
                        marg[q] -= delta * gj[act[q]]
                    if delta < 0.0:
                        delta = -delta
                    if delta > max_delta:
                        max_delta = delta
            if max_delta <= self.tol:
                break
        else:
            raise ProxError(
                f"hinge prox: no convergence in {cap} sweeps "
                f"(last max coordinate change {max_delta:.3e}, tol {self.tol:.3e})"
            )
        for p, j in enumerate(act):
            alpha[j] = al[p]
        # reconstruct the primal from the duals directly; avoids accumulated
        # drift from the incremental updates
        x = v + (alpha * self.labels) @ self.rows
        return x, alpha

    def subdiff_dist(self, x: np.ndarray, y: np.ndarray) -> float:
        if self.m == 0:
            return float(np.linalg.norm(y))
        margins = 1.0 - self.labels * (self.rows @ x)
        signed = self.scale * (self.labels[:, None] * self.rows)
        firm = margins > self.margin_tol
        ties = np.abs(margins) <= self.margin_tol
        resid = y + signed[firm].sum(axis=0)
        t_cols = signed[ties]
        t_cols = t_cols[np.einsum("ij,ij->i", t_cols, t_cols) > 0.0]
        if t_cols.shape[0] == 0:
            return float(np.linalg.norm(resid))
        # distance to the segment sum: box-constrained least squares over the
        # tie coefficients, solved by projected coordinate descent
        k = t_cols.shape[0]
        nrm = np.einsum("ij,ij->i", t_cols, t_cols)
        mu = np.zeros(k)
        r = resid.copy()
        for _ in range(100 * k + 100):
            biggest = 0.0
            for j in range(k):
                new = mu[j] - float(t_cols[j] @ r) / nrm[j]
                new = min(max(new, 0.0), 1.0)
                delta = new - mu[j]
                if delta != 0.0:
                    mu[j] = new
                    r = r + delta * t_cols[j]
                    biggest = max(biggest, abs(delta))
            if biggest <= 1e-12:
                break
        return float(np.linalg.norm(r))
