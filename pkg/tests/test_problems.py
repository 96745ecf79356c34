"""Datasets, LIBSVM parsing, partitioning, problem builders, references."""

import numpy as np
import pytest

from decopt.experiment import synth_lasso, synth_svm
from decopt.problems import (
    DataError,
    Dataset,
    dataset_from_dense,
    make_lasso,
    make_svm,
    parse_libsvm,
    partition_even,
    reference_solution,
)


class TestParseLibsvm:
    def test_basic_line(self, tmp_path):
        f = tmp_path / "a.txt"
        f.write_text("+1 1:0.5 3:2\n")
        ds = parse_libsvm(f)
        assert ds.labels == (1.0,)
        assert ds.rows == ({0: 0.5, 2: 2.0},)
        assert ds.d == 3

    def test_multiple_rows_and_blank_lines(self, tmp_path):
        f = tmp_path / "a.txt"
        f.write_text("-1 2:1.5\n\n+1 1:1 4:-2\n")
        ds = parse_libsvm(f)
        assert ds.m == 2
        assert ds.d == 4
        assert ds.rows[1] == {0: 1.0, 3: -2.0}

    def test_empty_file_gives_zero_rows(self, tmp_path):
        f = tmp_path / "a.txt"
        f.write_text("")
        ds = parse_libsvm(f)
        assert ds.m == 0
        with pytest.raises(DataError):
            make_lasso(ds, 2)

    def test_bad_label_rejected(self, tmp_path):
        f = tmp_path / "a.txt"
        f.write_text("spam 1:1\n")
        with pytest.raises(DataError, match="bad label"):
            parse_libsvm(f)

    def test_bad_feature_token_rejected(self, tmp_path):
        f = tmp_path / "a.txt"
        f.write_text("+1 1:one\n")
        with pytest.raises(DataError, match="bad feature"):
            parse_libsvm(f)

    def test_zero_index_rejected(self, tmp_path):
        f = tmp_path / "a.txt"
        f.write_text("+1 0:1\n")
        with pytest.raises(DataError, match="1-based"):
            parse_libsvm(f)

    def test_classification_filter(self, tmp_path):
        f = tmp_path / "a.txt"
        f.write_text("2 1:1\n")
        parse_libsvm(f)  # fine as regression data
        with pytest.raises(DataError, match="-1/\\+1"):
            parse_libsvm(f, classification=True)


class TestDataset:
    def test_index_out_of_range(self):
        with pytest.raises(DataError):
            Dataset(({5: 1.0},), (1.0,), 3)

    def test_row_label_mismatch(self):
        with pytest.raises(DataError):
            Dataset(({0: 1.0},), (1.0, -1.0), 2)

    def test_dense_round_trip(self):
        rng = np.random.default_rng(4)
        a = rng.standard_normal((6, 3))
        a[a < 0] = 0.0  # sprinkle exact zeros
        labels = rng.standard_normal(6)
        ds = dataset_from_dense(a, labels)
        back_a, back_labels = ds.to_dense()
        assert np.array_equal(back_a, a)
        assert np.array_equal(back_labels, labels)

    def test_content_hash_ignores_dict_order(self):
        d1 = Dataset(({0: 1.0, 2: 3.0},), (1.0,), 3)
        d2 = Dataset(({2: 3.0, 0: 1.0},), (1.0,), 3)
        assert d1.content_hash() == d2.content_hash()

    def test_content_hash_detects_value_change(self):
        d1 = Dataset(({0: 1.0},), (1.0,), 2)
        d2 = Dataset(({0: 1.0 + 1e-12},), (1.0,), 2)
        assert d1.content_hash() != d2.content_hash()

    def test_from_dense_shape_mismatch(self):
        with pytest.raises(DataError, match="shape mismatch"):
            dataset_from_dense(np.zeros((3, 2)), np.zeros(4))


class TestPartition:
    def test_even_split(self):
        ds = dataset_from_dense(np.arange(20.0).reshape(10, 2), np.arange(10.0))
        parts = partition_even(ds, 5, seed=0)
        assert [p.m for p in parts] == [2, 2, 2, 2, 2]

    def test_remainder_goes_to_early_parts(self):
        ds = dataset_from_dense(np.arange(14.0).reshape(7, 2), np.arange(7.0))
        parts = partition_even(ds, 3, seed=0)
        assert sorted(p.m for p in parts) == [2, 2, 3]
        assert parts[0].m == 3

    def test_determinism(self):
        ds = dataset_from_dense(np.arange(24.0).reshape(12, 2), np.arange(12.0))
        a = partition_even(ds, 4, seed=3)
        b = partition_even(ds, 4, seed=3)
        assert all(x.rows == y.rows and x.labels == y.labels for x, y in zip(a, b))

    def test_rows_are_conserved(self):
        ds = dataset_from_dense(np.arange(22.0).reshape(11, 2), np.arange(11.0))
        parts = partition_even(ds, 4, seed=1)
        got = sorted(label for p in parts for label in p.labels)
        assert got == sorted(ds.labels)


class TestMakeLasso:
    def test_objective_sums_to_centralized(self):
        ds = synth_lasso(40, 6, seed=2)
        lam = 0.05
        problem = make_lasso(ds, 4, lam=lam, seed=0)
        a, b = ds.to_dense()
        rng = np.random.default_rng(0)
        for _ in range(5):
            x = rng.standard_normal(6)
            direct = float(
                np.sum((a @ x - b) ** 2) / (2 * ds.m) + lam * np.sum(np.abs(x))
            )
            assert problem.global_objective(x) == pytest.approx(direct, rel=1e-12)

    def test_default_lambda_is_one_over_m(self):
        ds = synth_lasso(200, 5, seed=0)
        problem = make_lasso(ds, 5, seed=0)
        assert problem.lam == pytest.approx(1.0 / 200)
        # the regularizer weight is split evenly, lam/n per agent
        assert problem.g[0].weight == pytest.approx(1.0 / (200 * 5))

    def test_objective_at_zero_is_mean_square_norm(self):
        ds = synth_lasso(30, 4, seed=1)
        _, b = ds.to_dense()
        problem = make_lasso(ds, 3, seed=0)
        assert problem.global_objective(np.zeros(4)) == pytest.approx(
            float(b @ b) / (2 * 30), rel=1e-12
        )

    def test_single_agent_is_centralized(self):
        ds = synth_lasso(25, 4, seed=3)
        problem = make_lasso(ds, 1, lam=0.1, seed=0)
        a, b = ds.to_dense()
        x = np.ones(4)
        direct = float(np.sum((a @ x - b) ** 2) / (2 * 25) + 0.1 * 4)
        assert problem.global_objective(x) == pytest.approx(direct, rel=1e-12)


class TestMakeSvm:
    def test_objective_at_zero_is_one(self):
        ds = synth_svm(60, 5, seed=4)
        problem = make_svm(ds, 6, seed=0)
        # every hinge at x = 0 is max(0, 1 - 0) = 1; averaged over m they sum to 1
        assert problem.global_objective(np.zeros(5)) == pytest.approx(1.0, rel=1e-12)

    def test_default_lambda(self):
        ds = synth_svm(300, 5, seed=4)
        problem = make_svm(ds, 6, seed=0)
        assert problem.lam == pytest.approx(1.0 / 300)
        assert problem.g[0].weight == pytest.approx(1.0 / (300 * 6))

    def test_correctly_classified_far_point_contributes_zero(self):
        ds = dataset_from_dense(np.array([[1.0, 0.0]]), np.array([1.0]))
        problem = make_svm(ds, 1, lam=1.0, seed=0)
        x = np.array([5.0, 0.0])  # margin 5, hinge 0; objective is pure l2 term
        assert problem.global_objective(x) == pytest.approx(0.5 * 25.0, rel=1e-12)

    def test_rejects_regression_labels(self):
        ds = dataset_from_dense(np.ones((3, 2)), np.array([1.0, 0.5, -1.0]))
        with pytest.raises(DataError, match="-1/\\+1"):
            make_svm(ds, 1)


class TestReferenceSolution:
    def test_huge_lambda_kills_lasso(self, ref_cache):
        ds = synth_lasso(30, 4, seed=5)
        a, b = ds.to_dense()
        lam = float(np.max(np.abs(a.T @ b)) / 30) * 2.0
        problem = make_lasso(ds, 3, lam=lam, seed=0)
        x_star, f_star = reference_solution(problem, cache_dir=ref_cache)
        assert np.allclose(x_star, 0.0, atol=1e-12)
        assert f_star == pytest.approx(float(b @ b) / (2 * 30), rel=1e-12)

    def test_one_dimensional_lasso_by_hand(self, ref_cache):
        ds = dataset_from_dense(np.array([[1.0]]), np.array([1.0]))
        problem = make_lasso(ds, 1, lam=0.5, seed=0)
        x_star, _ = reference_solution(problem, cache_dir=ref_cache)
        assert x_star[0] == pytest.approx(0.5, abs=1e-10)

    @pytest.mark.parametrize("kind", ["lasso", "svm"])
    def test_random_perturbations_never_improve(self, kind, ref_cache):
        if kind == "lasso":
            problem = make_lasso(synth_lasso(40, 5, seed=6), 4, seed=0)
        else:
            problem = make_svm(synth_svm(40, 5, seed=6), 4, lam=0.05, seed=0)
        x_star, f_star = reference_solution(problem, cache_dir=ref_cache)
        rng = np.random.default_rng(11)
        for _ in range(100):
            probe = x_star + 1e-3 * rng.standard_normal(5)
            assert problem.global_objective(probe) >= f_star - 1e-12

    def test_cache_round_trip(self, tmp_path):
        problem = make_lasso(synth_lasso(25, 4, seed=7), 2, seed=0)
        cache = str(tmp_path / "cache")
        x1, f1 = reference_solution(problem, cache_dir=cache)
        x2, f2 = reference_solution(problem, cache_dir=cache)
        assert np.array_equal(x1, x2)
        assert f1 == f2

    def test_cache_distinguishes_lambda(self, tmp_path):
        ds = synth_lasso(25, 4, seed=8)
        cache = str(tmp_path / "cache")
        _, f_a = reference_solution(make_lasso(ds, 2, lam=0.01, seed=0), cache_dir=cache)
        _, f_b = reference_solution(make_lasso(ds, 2, lam=0.5, seed=0), cache_dir=cache)
        assert f_a != f_b


class TestSyntheticGenerators:
    def test_lasso_determinism(self):
        a = synth_lasso(100, 20, seed=1)
        b = synth_lasso(100, 20, seed=1)
        assert a.content_hash() == b.content_hash()

    def test_svm_determinism(self):
        a = synth_svm(50, 8, seed=2)
        b = synth_svm(50, 8, seed=2)
        assert a.content_hash() == b.content_hash()

    def test_planted_support_recovered(self, ref_cache):
        ds = synth_lasso(200, 20, seed=9, noise=0.001)
        problem = make_lasso(ds, 1, lam=0.002, seed=0)
        x_star, _ = reference_solution(problem, cache_dir=ref_cache)
        # re-derive the planted vector the generator drew; assignment
        # evaluates its right-hand side before the subscript, so the
        # coefficient values come out of the stream before the permutation
        rng = np.random.default_rng(9)
        rng.standard_normal((200, 20))
        vals = rng.standard_normal(2)
        support = rng.permutation(20)[:2]
        planted = np.zeros(20)
        planted[support] = vals
        for j in support:
            assert np.sign(x_star[j]) == np.sign(planted[j])
            assert abs(x_star[j] - planted[j]) <= 0.05

    def test_zero_noise_small_lambda_approaches_least_squares(self, ref_cache):
        ds = synth_lasso(60, 6, seed=10, noise=0.0)
        a, b = ds.to_dense()
        ls = np.linalg.lstsq(a, b, rcond=None)[0]
        problem = make_lasso(ds, 1, lam=1e-9, seed=0)
        x_star, _ = reference_solution(problem, cache_dir=ref_cache)
        assert np.max(np.abs(x_star - ls)) <= 1e-5

    def test_svm_is_separable_with_margin(self):
        ds = synth_svm(80, 7, seed=11, margin=0.25)
        a, y = ds.to_dense()
        # some unit vector achieves signed margin 0.25 for every sample; the
        # generator's own separator is reconstructible from the seed
        rng = np.random.default_rng(11)
        w = rng.standard_normal(7)
        w /= np.linalg.norm(w)
        assert np.min(y * (a @ w)) == pytest.approx(0.25, abs=1e-12)

    def test_svm_scale_applies_to_margin(self):
        ds = synth_svm(30, 5, seed=12, margin=0.5, scale=0.2)
        a, y = ds.to_dense()
        rng = np.random.default_rng(12)
        w = rng.standard_normal(5)
        w /= np.linalg.norm(w)
        assert np.min(y * (a @ w)) == pytest.approx(0.1, abs=1e-12)

    def test_rejects_bad_sizes(self):
        with pytest.raises(ValueError):
            synth_lasso(0, 5, seed=0)
        with pytest.raises(ValueError):
            synth_svm(10, 5, seed=0, margin=-1.0)
