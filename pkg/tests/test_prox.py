"""Proximal operators: closed forms, the hinge dual solver, and shared laws.

The two generic laws every prox must satisfy:

subgradient optimality
    x = prox_h(v, step)  iff  (v - x)/step is a subgradient of h at x,
    checked through subdiff_dist.
firm nonexpansiveness
    ||prox(a) - prox(b)||^2 <= <prox(a) - prox(b), a - b>.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from decopt.prox import (
    ElasticNet,
    HingeSum,
    L1Norm,
    ProxError,
    QuadraticLoss,
    SquaredL2,
    Zero,
    prox_elastic_net,
    prox_hinge_sum,
    prox_l1,
    prox_quadratic_loss,
    prox_sq_l2,
)

RNG = np.random.default_rng(2024)


def _random_terms(d=6):
    rng = np.random.default_rng(515)
    a = rng.standard_normal((8, d))
    b = rng.standard_normal(8)
    rows = rng.standard_normal((5, d))
    labels = np.where(rng.random(5) < 0.5, 1.0, -1.0)
    return [
        Zero(),
        L1Norm(0.7),
        SquaredL2(1.3),
        ElasticNet(0.4, 0.9),
        QuadraticLoss(a, b, 0.5),
        HingeSum(rows, labels, 0.3, seed=(1, 2)),
    ]


class TestClosedForms:
    def test_l1_at_zero(self):
        assert np.array_equal(prox_l1(np.zeros(4), 1.0, 1.0), np.zeros(4))

    def test_l1_shrinks_by_threshold(self):
        assert np.array_equal(prox_l1(np.array([3.0]), 1.0, 1.0), np.array([2.0]))

    def test_l1_per_coordinate_threshold(self):
        out = prox_l1(np.array([-0.5, 4.0]), 2.0, 0.25)
        assert np.array_equal(out, np.array([0.0, 3.5]))

    def test_sq_l2_at_zero(self):
        assert np.array_equal(prox_sq_l2(np.zeros(3), 2.0, 1.0), np.zeros(3))

    def test_sq_l2_halves(self):
        assert np.array_equal(prox_sq_l2(np.array([2.0]), 1.0, 1.0), np.array([1.0]))

    def test_sq_l2_divides_by_three(self):
        out = prox_sq_l2(np.array([3.0, -6.0]), 0.5, 4.0)
        assert np.array_equal(out, np.array([1.0, -2.0]))

    def test_elastic_net_degenerates_to_l1(self):
        v = RNG.standard_normal(5)
        assert np.array_equal(prox_elastic_net(v, 1.3, 0.7, 0.0), prox_l1(v, 1.3, 0.7))

    def test_elastic_net_degenerates_to_sq_l2(self):
        v = RNG.standard_normal(5)
        assert np.array_equal(prox_elastic_net(v, 1.3, 0.0, 0.9), prox_sq_l2(v, 1.3, 0.9))

    def test_elastic_net_threshold_then_shrink(self):
        out = prox_elastic_net(np.array([3.0]), 1.0, 1.0, 1.0)
        assert np.allclose(out, [1.0], atol=1e-15)

    def test_quadratic_empty_system_is_identity(self):
        v = RNG.standard_normal(4)
        out = prox_quadratic_loss(v, 1.0, np.zeros((0, 4)), np.zeros(0), 1.0)
        assert np.array_equal(out, v)

    def test_quadratic_scalar(self):
        out = prox_quadratic_loss(
            np.array([2.0]), 1.0, np.array([[1.0]]), np.array([4.0]), 1.0
        )
        assert np.allclose(out, [3.0], atol=1e-12)

    def test_quadratic_normal_equation_residual(self):
        a = RNG.standard_normal((5, 3))
        b = RNG.standard_normal(5)
        v = RNG.standard_normal(3)
        step, scale = 0.7, 1.4
        x = prox_quadratic_loss(v, step, a, b, scale)
        residual = (x - v) / step + scale * a.T @ (a @ x - b)
        assert np.linalg.norm(residual) <= 1e-10

    def test_rejects_nonpositive_step(self):
        with pytest.raises(ValueError):
            prox_l1(np.ones(2), 0.0, 1.0)


class TestHingeSum:
    def test_no_samples_is_identity(self):
        v = RNG.standard_normal(3)
        out = prox_hinge_sum(v, 1.0, np.zeros((0, 3)), np.zeros(0), 1.0)
        assert np.array_equal(out, v)

    def test_inactive_hinge_keeps_point(self):
        out = prox_hinge_sum(
            np.array([3.0]), 1.0, np.array([[1.0]]), np.array([1.0]), 1.0
        )
        assert np.allclose(out, [3.0], atol=1e-12)

    def test_single_sample_against_grid(self):
        # 1-D brute force: minimize max(0, 1 - x) + (1/2)(x - 0)^2 over the grid
        grid = np.arange(-2.0, 2.0 + 1e-9, 1e-4)
        values = np.maximum(0.0, 1.0 - grid) + 0.5 * grid**2
        x_grid = grid[np.argmin(values)]
        out = prox_hinge_sum(
            np.array([0.0]), 1.0, np.array([[1.0]]), np.array([1.0]), 1.0
        )
        assert abs(out[0] - x_grid) <= 2e-4
        assert abs(out[0] - 1.0) <= 1e-10  # interior optimum has alpha = 1

    @pytest.mark.parametrize("case", range(5))
    def test_random_1d_against_grid(self, case):
        rng = np.random.default_rng(100 + case)
        rows = rng.standard_normal((4, 1))
        labels = np.where(rng.random(4) < 0.5, 1.0, -1.0)
        scale = 0.5 + rng.random()
        step = 0.3 + rng.random()
        v = rng.standard_normal(1)
        grid = np.arange(-4.0, 4.0 + 1e-9, 1e-4)
        hinge = scale * np.sum(
            np.maximum(0.0, 1.0 - labels[:, None] * (rows @ grid[None, :])), axis=0
        )
        total = hinge + (grid - v[0]) ** 2 / (2.0 * step)
        x_grid = grid[np.argmin(total)]
        out = prox_hinge_sum(v, step, rows, labels, scale)
        assert abs(out[0] - x_grid) <= 2e-4

    def test_dual_solution_reproducible_after_unrelated_calls(self):
        rows = RNG.standard_normal((6, 4))
        labels = np.where(RNG.random(6) < 0.5, 1.0, -1.0)
        v = RNG.standard_normal(4)
        first = HingeSum(rows, labels, 0.7, seed=(3, 1)).prox(v, 0.9)
        solver = HingeSum(rows, labels, 0.7, seed=(3, 1))
        solver.prox(RNG.standard_normal(4), 2.0)  # unrelated call in between
        second = solver.prox(v, 0.9)
        assert np.array_equal(first, second)

    def test_sweep_cap_exhaustion_raises(self):
        # two identical rows couple the duals, so one sweep cannot settle
        rows = np.array([[1.0], [1.0]])
        labels = np.array([1.0, 1.0])
        solver = HingeSum(rows, labels, 1.0, seed=(0, 0))
        with pytest.raises(ProxError, match="no convergence"):
            solver.prox_with_duals(np.array([0.0]), 1.0, max_sweeps=1)


class TestSubgradientOptimality:
    @pytest.mark.parametrize("term_idx", range(6))
    def test_prox_point_is_stationary(self, term_idx):
        term = _random_terms()[term_idx]
        rng = np.random.default_rng(7 + term_idx)
        for _ in range(50):
            v = 3.0 * rng.standard_normal(6)
            step = 10.0 ** rng.uniform(-2, 1)
            x = term.prox(v, step)
            # hinge optimality holds to its inner dual tolerance, not exactly
            tol = 1e-8 if not isinstance(term, HingeSum) else 1e-6
            assert term.subdiff_dist(x, (v - x) / step) <= tol


class TestFirmNonexpansiveness:
    @pytest.mark.parametrize("term_idx", range(6))
    def test_inner_product_dominates(self, term_idx):
        term = _random_terms()[term_idx]
        rng = np.random.default_rng(40 + term_idx)
        step = 0.8
        for _ in range(20):
            a = 2.0 * rng.standard_normal(6)
            b = 2.0 * rng.standard_normal(6)
            pa, pb = term.prox(a, step), term.prox(b, step)
            gap = float((pa - pb) @ (a - b)) - float((pa - pb) @ (pa - pb))
            assert gap >= -1e-8


class TestConvexityAlongSegments:
    @pytest.mark.parametrize("term_idx", range(6))
    def test_midpoint_inequality(self, term_idx):
        term = _random_terms()[term_idx]
        rng = np.random.default_rng(90 + term_idx)
        for _ in range(20):
            x = rng.standard_normal(6)
            y = rng.standard_normal(6)
            mid = term.evaluate((x + y) / 2.0)
            assert mid <= (term.evaluate(x) + term.evaluate(y)) / 2.0 + 1e-10


@given(
    v=st.lists(st.floats(-50, 50), min_size=1, max_size=8),
    step=st.floats(0.01, 10),
    weight=st.floats(0.0, 5),
)
@settings(max_examples=100, deadline=None)
def test_l1_prox_never_overshoots(v, step, weight):
    arr = np.asarray(v)
    out = prox_l1(arr, step, weight)
    assert np.all(np.abs(out) <= np.abs(arr) + 1e-12)
    assert np.all(out * arr >= 0.0)


@given(
    v=st.lists(st.floats(-50, 50), min_size=1, max_size=8),
    step=st.floats(0.01, 10),
    weight=st.floats(0.001, 5),
)
@settings(max_examples=100, deadline=None)
def test_sq_l2_prox_is_linear_shrink(v, step, weight):
    arr = np.asarray(v)
    out = prox_sq_l2(arr, step, weight)
    assert np.allclose(out * (1.0 + step * weight), arr, atol=1e-9, rtol=1e-12)
