"""Shared fixtures: models trained once per test run via the canonical pipeline."""
import pytest

from cfstudy import datagen, tree
from cfstudy.game import GameConfig


def _train(experiment: int, depth: int):
    grid = datagen.generate_grid(experiment, replicates=1)
    balanced = datagen.smote_balance(grid, n_bins=10, k=5, seed=0)
    train_set, test_set = datagen.train_test_split(balanced, 0.2, seed=0)
    model = tree.fit_tree(train_set, max_depth=depth, min_samples_leaf=5)
    model.metrics = tree.evaluate(model, test_set)
    return model, test_set


@pytest.fixture(scope="session")
def exp1_trained():
    return _train(1, 7)


@pytest.fixture(scope="session")
def exp1_model(exp1_trained):
    return exp1_trained[0]


@pytest.fixture(scope="session")
def exp1_test_set(exp1_trained):
    return exp1_trained[1]


@pytest.fixture(scope="session")
def exp2_trained():
    return _train(2, 5)


@pytest.fixture(scope="session")
def exp2_model(exp2_trained):
    return exp2_trained[0]


@pytest.fixture(scope="session")
def exp2_test_set(exp2_trained):
    return exp2_trained[1]


@pytest.fixture(scope="session")
def exp1_game_config(exp1_model):
    return GameConfig(experiment=1, model=exp1_model)


@pytest.fixture(scope="session")
def exp2_game_config(exp2_model):
    return GameConfig(experiment=2, model=exp2_model)
