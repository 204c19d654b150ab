"""Gradient-boosted trees: derivatives, objective accounting, predictions.

The objective recount below replays the stored model round by round and
recomputes log loss plus the regularization charge with test-local code,
so an accounting slip in training cannot hide.
"""

import math

import numpy as np
import pytest

from pumpguard.domain import PARAMETERS, HealthLabel, ParameterKind
from pumpguard.errors import ValidationError
from pumpguard.models import (
    BoostedModel,
    Dataset,
    GbtConfig,
    predict_gbt,
    softmax,
    softmax_grad_hess,
    train_gbt,
)


def single_log_loss(scores, true_class):
    m = max(scores)
    return m + math.log(sum(math.exp(s - m) for s in scores)) - scores[true_class]


def three_blob_dataset(n, seed, spread=0.6):
    rng = np.random.default_rng(seed)
    third = n // 3
    sizes = [third, third, n - 2 * third]
    features, targets = [], []
    for label, center in enumerate((0.0, 3.0, 6.0)):
        features.append(rng.normal(center, spread, size=(sizes[label], 2)))
        targets += [label] * sizes[label]
    order = rng.permutation(n)
    return Dataset(
        features=np.vstack(features)[order],
        targets=np.array(targets, dtype=np.int8)[order],
        target_parameter=ParameterKind.TEMPERATURE,
        feature_parameters=tuple(PARAMETERS[:2]),
    )


def test_softmax_rows_are_distributions():
    rng = np.random.default_rng(1)
    p = softmax(rng.normal(0, 5, size=(40, 3)))
    assert np.all(p > 0)
    assert np.allclose(p.sum(axis=1), 1.0)


def test_grad_hess_hand_examples():
    g, h = softmax_grad_hess(np.zeros(3), 0)
    assert np.allclose(g, [-2 / 3, 1 / 3, 1 / 3])
    assert np.allclose(h, [2 / 9, 2 / 9, 2 / 9])
    # saturated scores: the model is already sure, gradient vanishes
    g, h = softmax_grad_hess(np.array([20.0, -20.0, -20.0]), 0)
    assert np.all(np.abs(g) < 1e-8)
    assert np.all(h >= 0)


def test_grad_hess_against_central_differences():
    # eps is larger for the hessian: the second difference divides by
    # eps^2, so 1e-5 would leave it dominated by float round-off.
    rng = np.random.default_rng(3)
    eps_g, eps_h = 1e-5, 1e-3
    for _ in range(100):
        scores = rng.normal(0.0, 1.5, size=3)
        true_class = int(rng.integers(0, 3))
        g, h = softmax_grad_hess(scores, true_class)
        for c in range(3):
            up, down = scores.copy(), scores.copy()
            up[c] += eps_g
            down[c] -= eps_g
            fd_g = (
                single_log_loss(up, true_class) - single_log_loss(down, true_class)
            ) / (2 * eps_g)
            up, down = scores.copy(), scores.copy()
            up[c] += eps_h
            down[c] -= eps_h
            fd_h = (
                single_log_loss(up, true_class)
                - 2 * single_log_loss(scores, true_class)
                + single_log_loss(down, true_class)
            ) / (eps_h * eps_h)
            assert abs(g[c] - fd_g) / max(abs(fd_g), 1e-12) < 1e-4
            assert abs(h[c] - fd_h) / max(abs(fd_h), 1e-12) < 1e-4


def test_zero_rounds_predicts_prior_class():
    data = three_blob_dataset(90, seed=4)
    # skew the priors so the answer is unambiguous
    skew = Dataset(
        features=data.features,
        targets=np.where(data.targets == 2, 1, data.targets).astype(np.int8),
        target_parameter=data.target_parameter,
        feature_parameters=data.feature_parameters,
    )
    model = train_gbt(skew, GbtConfig(n_rounds=0))
    assert model.rounds == ()
    assert len(model.objective_history) == 1
    majority = int(np.argmax(np.bincount(skew.targets, minlength=3)))
    preds = model.predict_many(data.features)
    assert np.all(preds == majority)


def test_separable_data_fits_exactly():
    data = three_blob_dataset(120, seed=7, spread=0.3)
    model = train_gbt(data, GbtConfig(n_rounds=10, max_depth=3))
    assert np.array_equal(model.predict_many(data.features), data.targets)


def test_root_only_tree_weight_matches_closed_form():
    data = three_blob_dataset(60, seed=9)
    config = GbtConfig(n_rounds=1, max_depth=0, reg_lambda=2.5)
    model = train_gbt(data, config)
    base = np.array(model.base_score)
    p = softmax(np.tile(base, (data.n, 1)))
    onehot = np.zeros((data.n, 3))
    onehot[np.arange(data.n), data.targets] = 1.0
    for c, tree in enumerate(model.rounds[0]):
        g_sum = float((p[:, c] - onehot[:, c]).sum())
        h_sum = float((p[:, c] * (1 - p[:, c])).sum())
        assert tree.is_stump_leaf
        assert tree.root.weight == pytest.approx(-g_sum / (h_sum + 2.5), rel=1e-12)


def recount_objective(model, data):
    """Replay the stored rounds and recompute log loss + charge per round."""
    config = model.config
    scores = np.tile(np.array(model.base_score), (data.n, 1))
    recount = [
        sum(single_log_loss(scores[i], int(data.targets[i])) for i in range(data.n))
    ]
    omega = 0.0
    for trees in model.rounds:
        for c, tree in enumerate(trees):
            scores[:, c] += config.learning_rate * tree.predict_many(data.features)
            for leaf in tree.leaves():
                deployed = config.learning_rate * leaf.weight
                omega += config.gamma + 0.5 * config.reg_lambda * deployed * deployed
        recount.append(
            sum(single_log_loss(scores[i], int(data.targets[i])) for i in range(data.n))
            + omega
        )
    return recount


def test_objective_recount_matches_history_and_decreases():
    # default config (gamma = 0): the per-round decrease guarantee applies
    data = three_blob_dataset(500, seed=11, spread=1.0)
    model = train_gbt(data, GbtConfig(n_rounds=25))
    recount = recount_objective(model, data)
    assert len(model.objective_history) == len(model.rounds) + 1
    for ours, theirs in zip(recount, model.objective_history):
        assert ours == pytest.approx(theirs, rel=1e-9)
    for earlier, later in zip(recount, recount[1:]):
        assert later <= earlier * (1 + 1e-9)


def test_objective_accounting_holds_with_gamma():
    # with gamma > 0 every leaf is charged; the history must still match
    # an independent recount even though monotonicity is no longer owed
    data = three_blob_dataset(200, seed=12, spread=1.0)
    model = train_gbt(data, GbtConfig(n_rounds=10, gamma=0.1))
    recount = recount_objective(model, data)
    for ours, theirs in zip(recount, model.objective_history):
        assert ours == pytest.approx(theirs, rel=1e-9)


def test_huge_gamma_blocks_every_split():
    data = three_blob_dataset(100, seed=13)
    model = train_gbt(data, GbtConfig(n_rounds=5, gamma=1e9))
    assert model.rounds
    for trees in model.rounds:
        assert all(t.is_stump_leaf for t in trees)


def test_prediction_consistency_and_ties():
    data = three_blob_dataset(150, seed=15)
    model = train_gbt(data, GbtConfig(n_rounds=8))
    points = np.random.default_rng(16).normal(3.0, 3.0, size=(200, 2))
    many = model.predict_many(points)
    assert np.array_equal(many, [predict_gbt(model, x).value for x in points])
    # no rounds and flat base scores: a three-way tie goes to Normal
    flat = BoostedModel(
        rounds=(),
        config=GbtConfig(n_rounds=0),
        base_score=(0.0, 0.0, 0.0),
        objective_history=(1.0,),
        n_features=2,
    )
    assert predict_gbt(flat, np.zeros(2)) is HealthLabel.NORMAL


def test_gbt_config_validation():
    with pytest.raises(ValidationError):
        GbtConfig(learning_rate=0.0)
    with pytest.raises(ValidationError):
        GbtConfig(learning_rate=1.5)
    with pytest.raises(ValidationError):
        GbtConfig(reg_lambda=-1.0)
    with pytest.raises(ValidationError):
        GbtConfig(n_rounds=-1)
