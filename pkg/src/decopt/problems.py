"""Experiment problems: Lasso and hinge-loss SVM over partitioned data.

A Dataset is a list of sparse rows (index -> value) with labels; it can come
from a LIBSVM-format text file or a synthetic generator. partition_even deals
rows round-robin after a seeded shuffle, and make_lasso / make_svm wrap the
parts in per-agent proximal terms so that summing every agent's objective
reproduces the centralized objective exactly.

Centralized reference solutions are computed once per (problem, data, lambda)
and cached to a small text file: Lasso by accelerated proximal gradient with
adaptive restart, SVM by dual coordinate ascent (the same solver as the hinge
prox, pointed at the whole dataset). Suboptimality curves are measured against
these values, so they are solved far below the tolerances any experiment uses.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .prox import HingeSum, L1Norm, ProxFn, QuadraticLoss, SquaredL2, prox_l1

__all__ = [
    "Dataset",
    "CompositeProblem",
    "dataset_from_dense",
    "parse_libsvm",
    "partition_even",
    "make_lasso",
    "make_svm",
    "reference_solution",
]


class DataError(ValueError):
    """Malformed data file or inconsistent dataset."""


class SolverError(RuntimeError):
    """Reference solver failed to reach its tolerance within the cap."""


@dataclass(frozen=True)
class Dataset:
    """Sparse rows with labels; d is the feature-space dimension."""

    rows: tuple[dict, ...]
    labels: tuple[float, ...]
    d: int

    def __post_init__(self) -> None:
        if len(self.rows) != len(self.labels):
            raise DataError("row and label counts differ")
        for row in self.rows:
            for idx in row:
                if not (0 <= idx < self.d):
                    raise DataError(f"feature index {idx} outside [0, {self.d})")

    @property
    def m(self) -> int:
        return len(self.rows)

    def to_dense(self) -> tuple[np.ndarray, np.ndarray]:
        a = np.zeros((self.m, self.d))
        for k, row in enumerate(self.rows):
            for idx, val in row.items():
                a[k, idx] = val
        return a, np.asarray(self.labels, dtype=float)

    def content_hash(self) -> str:
        """Canonical content hash, independent of dict insertion order."""
        h = hashlib.sha256()
        h.update(f"d={self.d}\n".encode())
        for row, label in zip(self.rows, self.labels):
            items = ",".join(f"{i}:{v!r}" for i, v in sorted(row.items()))
            h.update(f"{label!r}|{items}\n".encode())
        return h.hexdigest()


def dataset_from_dense(a: np.ndarray, labels: np.ndarray) -> Dataset:
    """Wrap a dense (m, d) matrix and length-m label vector as a Dataset.

    Zeros are kept out of the sparse rows so the content hash is stable
    against dense round-trips.
    """
    a = np.asarray(a, dtype=float)
    labels = np.asarray(labels, dtype=float)
    if a.ndim != 2 or labels.shape != (a.shape[0],):
        raise DataError(f"shape mismatch: matrix {a.shape}, labels {labels.shape}")
    rows = tuple(
        {j: float(a[k, j]) for j in range(a.shape[1]) if a[k, j] != 0.0}
        for k in range(a.shape[0])
    )
    return Dataset(rows, tuple(float(y) for y in labels), a.shape[1])


def parse_libsvm(path: str | Path, classification: bool = False) -> Dataset:
    """Read LIBSVM text format: `label idx:val idx:val ...` per line.

    File indices are 1-based and stored 0-based. Blank lines are skipped.
    With classification=True, labels outside {-1, +1} are rejected.
    """
    rows: list[dict] = []
    labels: list[float] = []
    d = 0
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts:
                continue
            try:
                label = float(parts[0])
            except ValueError:
                raise DataError(f"{path}:{lineno}: bad label {parts[0]!r}") from None
            if classification and label not in (-1.0, 1.0):
                raise DataError(f"{path}:{lineno}: label {label} is not -1/+1")
            row: dict = {}
            for tok in parts[1:]:
                try:
                    idx_s, val_s = tok.split(":", 1)
                    idx = int(idx_s)
                    val = float(val_s)
                except ValueError:
                    raise DataError(f"{path}:{lineno}: bad feature {tok!r}") from None
                if idx < 1:
                    raise DataError(f"{path}:{lineno}: index {idx} is not 1-based")
                row[idx - 1] = val
                d = max(d, idx)
            rows.append(row)
            labels.append(label)
    return Dataset(tuple(rows), tuple(labels), d)


def partition_even(ds: Dataset, n: int, seed: int) -> list[Dataset]:
    """Shuffle rows by seed, deal round-robin into n parts (sizes differ by <= 1)."""
    if ds.m < n:
        raise DataError(f"cannot split {ds.m} rows among {n} agents")
    perm = np.random.default_rng(seed).permutation(ds.m)
    parts = []
    for i in range(n):
        take = perm[i::n]
        parts.append(
            Dataset(
                tuple(ds.rows[k] for k in take),
                tuple(ds.labels[k] for k in take),
                ds.d,
            )
        )
    return parts


@dataclass(eq=False)
class CompositeProblem:
    """n-agent composite objective F(x) = sum_i f_i(x) + g_i(x).

    kind is "lasso" (smooth f_i, nonsmooth g_i) or "svm" (nonsmooth f_i,
    smooth g_i); split_for_baselines returns (smooth, proximal) term lists in
    the order the proximal-gradient baselines consume them.
    """

    n: int
    d: int
    f: list[ProxFn]
    g: list[ProxFn]
    kind: str
    lam: float
    data_hash: str = ""

    def global_objective(self, x: np.ndarray) -> float:
        return float(
            sum(fi.evaluate(x) for fi in self.f) + sum(gi.evaluate(x) for gi in self.g)
        )

    def split_for_baselines(self) -> tuple[list[ProxFn], list[ProxFn]]:
        if self.kind == "lasso":
            return self.f, self.g
        if self.kind == "svm":
            return self.g, self.f
        raise ValueError(f"unknown problem kind {self.kind!r}")


def make_lasso(
    ds: Dataset, n: int, lam: float | None = None, seed: int = 0
) -> CompositeProblem:
    """Lasso split across n agents: f_i = (1/2m)||A_i x - b_i||^2, g_i = (lam/n)||x||_1.

    m is the total sample count, so the agent sum equals the centralized
    objective (1/2m)||Ax - b||^2 + lam*||x||_1. Default lam = 1/m.
    """
    parts = partition_even(ds, n, seed)
    m = ds.m
    if lam is None:
        lam = 1.0 / m
    f: list[ProxFn] = []
    for part in parts:
        a, b = part.to_dense()
        f.append(QuadraticLoss(a, b, scale=1.0 / m))
    g: list[ProxFn] = [L1Norm(lam / n) for _ in range(n)]
    return CompositeProblem(n, ds.d, f, g, "lasso", lam, ds.content_hash())


def make_svm(
    ds: Dataset,
    n: int,
    lam: float | None = None,
    seed: int = 0,
    hinge_tol: float = 1e-10,
) -> CompositeProblem:
    """SVM split across n agents: f_i = (1/m) sum of local hinges, g_i = (lam/2n)||x||^2.

    Labels must be -1/+1. Each agent's hinge prox solver gets its own seed
    stream derived from (seed, agent index) so runs are reproducible. Default
    lam = 1/m.
    """
    if not all(label in (-1.0, 1.0) for label in ds.labels):
        raise DataError("svm requires -1/+1 labels")
    parts = partition_even(ds, n, seed)
    m = ds.m
    if lam is None:
        lam = 1.0 / m
    f: list[ProxFn] = []
    for i, part in enumerate(parts):
        a, b = part.to_dense()
        f.append(HingeSum(a, b, scale=1.0 / m, seed=(seed, i), tol=hinge_tol))
    g: list[ProxFn] = [SquaredL2(lam / n) for _ in range(n)]
    return CompositeProblem(n, ds.d, f, g, "svm", lam, ds.content_hash())


# ---------------------------------------------------------------------------
# centralized reference solutions


def _stack_quadratic(problem: CompositeProblem) -> tuple[np.ndarray, np.ndarray]:
    mats = [fi.a_mat for fi in problem.f if fi.a_mat.shape[0] > 0]
    vecs = [fi.b_vec for fi in problem.f if fi.a_mat.shape[0] > 0]
    if not mats:
        return np.zeros((0, problem.d)), np.zeros(0)
    return np.vstack(mats), np.concatenate(vecs)


def _fista_lasso(problem: CompositeProblem, tol: float) -> np.ndarray:
    """Accelerated proximal gradient with adaptive restart on the stacked Lasso.

    Stops when the proximal-gradient-mapping norm at the iterate is <= tol.
    """
    a, b = _stack_quadratic(problem)
    m = sum(fi.a_mat.shape[0] for fi in problem.f)
    lam = problem.lam
    d = problem.d
    if a.shape[0] == 0:
        return np.zeros(d)
    ata = a.T @ a
    atb = a.T @ b
    lips = float(np.linalg.eigvalsh(ata)[-1]) / m
    if lips <= 0.0:
        return prox_l1(np.zeros(d), 1.0, lam)
    eta = 1.0 / lips

    def grad(x: np.ndarray) -> np.ndarray:
        return (ata @ x - atb) / m

    x = np.zeros(d)
    y = x.copy()
    t_mom = 1.0
    for _ in range(10**6):
        x_new = prox_l1(y - eta * grad(y), eta, lam)
        gmap = (x_new - prox_l1(x_new - eta * grad(x_new), eta, lam)) / eta
        if float(np.linalg.norm(gmap)) <= tol:
            return x_new
        if float((y - x_new) @ (x_new - x)) > 0.0:
            # momentum points uphill: restart (O'Donoghue-Candes test)
            t_mom = 1.0
            y = x_new
        else:
            t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t_mom * t_mom))
            y = x_new + ((t_mom - 1.0) / t_next) * (x_new - x)
            t_mom = t_next
        x = x_new
    raise SolverError(f"lasso reference: no convergence to {tol} in 1e6 iterations")


def _dual_svm(problem: CompositeProblem, tol: float) -> np.ndarray:
    """Centralized SVM by dual coordinate ascent.

    min (1/m) sum hinge + (lam/2)||x||^2 is exactly the hinge-sum prox at
    anchor 0 with step 1/lam, so the prox solver is reused with a raised sweep
    cap. The duality gap at the result bounds the objective error and is
    checked against the requested tolerance scale.
    """
    rows = np.vstack([fi.rows for fi in problem.f if fi.m > 0])
    labels = np.concatenate([fi.labels for fi in problem.f if fi.m > 0])
    m = rows.shape[0]
    lam = problem.lam
    hs = HingeSum(rows, labels, scale=1.0 / m, seed=(987654321,), tol=tol)
    step = 1.0 / lam
    x, alpha = hs.prox_with_duals(np.zeros(problem.d), step, max_sweeps=10**6)
    primal = hs.evaluate(x) + 0.5 * lam * float(x @ x)
    dual = lam * float(alpha.sum()) - 0.5 * lam * float(x @ x)
    gap = primal - dual
    if gap > 1e-9 * (1.0 + abs(primal)):
        raise SolverError(f"svm reference: duality gap {gap:.3e} too large")
    return x


def _cache_path(problem: CompositeProblem, cache_dir: str | Path) -> Path:
    key = hashlib.sha256(
        f"{problem.kind}|{problem.lam!r}|{problem.n}|{problem.data_hash}".encode()
    ).hexdigest()[:20]
    return Path(cache_dir) / f"ref-{key}.txt"


def _read_cache(path: Path, d: int) -> tuple[np.ndarray, float] | None:
    if not path.is_file():
        return None
    lines = path.read_text().strip().splitlines()
    if len(lines) != d + 2 or int(lines[0]) != d:
        return None
    x = np.array([float(s) for s in lines[1 : d + 1]])
    return x, float(lines[d + 1])


def _write_cache(path: Path, x: np.ndarray, f_star: float) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [str(x.shape[0])] + [repr(float(c)) for c in x] + [repr(f_star)]
    path.write_text("\n".join(lines) + "\n")


def reference_solution(
    problem: CompositeProblem,
    tol: float = 1e-12,
    cache_dir: str | Path | None = None,
) -> tuple[np.ndarray, float]:
    """High-precision centralized solution (x*, F*) for a supported problem.

    F* is evaluated through the problem's own per-agent sum so suboptimality
    measurements subtract exactly comparable quantities. With cache_dir set,
    the result round-trips through a text file (repr floats, so reloading is
    bitwise exact) keyed by dataset hash, lambda, and agent count.
    """
    cache = _cache_path(problem, cache_dir) if cache_dir is not None else None
    if cache is not None:
        hit = _read_cache(cache, problem.d)
        if hit is not None:
            return hit
    if problem.kind == "lasso":
        x = _fista_lasso(problem, tol)
    elif problem.kind == "svm":
        x = _dual_svm(problem, tol)
    else:
        raise ValueError(f"no reference solver for problem kind {problem.kind!r}")
    f_star = problem.global_objective(x)
    if cache is not None:
        _write_cache(cache, x, f_star)
    return x, f_star
