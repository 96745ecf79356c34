"""Shared fixtures: small problems, graphs, and a per-session reference cache."""

import pytest

from decopt.experiment import synth_lasso
from decopt.graphs import gen_erdos_renyi, metropolis_weights
from decopt.problems import make_lasso, reference_solution


@pytest.fixture(scope="session")
def ref_cache(tmp_path_factory):
    """One reference-solution cache for the whole run, so repeated fixtures
    pay the centralized solve once."""
    return str(tmp_path_factory.mktemp("refcache"))


@pytest.fixture(scope="session")
def small_mix():
    return metropolis_weights(gen_erdos_renyi(10, 0.5, seed=7))


@pytest.fixture(scope="session")
def small_lasso():
    """10 agents, d = 20, 100 samples, seed 1: the reference configuration."""
    return make_lasso(synth_lasso(100, 20, 1), 10, seed=1)


@pytest.fixture(scope="session")
def small_lasso_fstar(small_lasso, ref_cache):
    _, f_star = reference_solution(small_lasso, cache_dir=ref_cache)
    return f_star
