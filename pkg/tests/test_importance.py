import numpy as np

from dacml.features import FeatureMatrix
from dacml.models import (
    ModelSpec,
    feature_importance,
    train,
)
from dacml.models.importance import coefficient_importance, gedeon_importance
from dacml.models.linear import ElasticNetLogisticRegression
from dacml.models.neural import MlpClassifier


def test_glm_importance_is_normalized_coefficient_magnitude():
    est = ElasticNetLogisticRegression()
    est.coef_ = np.array([2.0, -4.0, 0.0])
    report = coefficient_importance(est, ("a", "b", "c"))
    assert report.relative == (0.5, 1.0, 0.0)
    assert report.method == "coefficient_magnitude"


def test_single_stump_importance_concentrates_on_split_feature():
    rng = np.random.default_rng(61)
    values = rng.normal(size=(40, 3))
    labels = values[:, 1] > 0
    matrix = FeatureMatrix("v1a", tuple(f"530330{i:05d}" for i in range(40)),
                           ("a", "b", "c"), values, labels)
    model = train(ModelSpec("GBM", {"ntrees": 1, "max_depth": 1, "min_rows": 1}), matrix)
    report = feature_importance(model)
    assert report.relative_of("b") == 1.0
    assert report.relative_of("a") == 0.0 and report.relative_of("c") == 0.0


def test_gedeon_dead_input_scores_zero():
    est = MlpClassifier(hidden=[3])
    est.coefs_ = [np.array([[1.0, -2.0, 0.5], [0.0, 0.0, 0.0]]),
                  np.array([[1.0], [0.5], [-0.25]])]
    est.intercepts_ = [np.zeros(3), np.zeros(1)]
    report = gedeon_importance(est, ("alive", "dead"))
    assert report.relative_of("dead") == 0.0
    assert report.relative_of("alive") == 1.0


def test_gedeon_two_hidden_layers_uses_both_weight_shares():
    est = MlpClassifier(hidden=[2, 2])
    W1 = np.array([[1.0, 0.0], [0.0, 1.0]])   # input i feeds hidden unit i only
    W2 = np.array([[1.0, 1.0], [0.0, 0.0]])   # second hidden unit of layer1 goes nowhere
    est.coefs_ = [W1, W2, np.array([[1.0], [1.0]])]
    est.intercepts_ = [np.zeros(2), np.zeros(2), np.zeros(1)]
    report = gedeon_importance(est, ("x", "y"))
    # x's hidden unit carries all of layer 2; y's carries nothing
    assert report.relative_of("x") == 1.0
    assert report.relative_of("y") == 0.0


def test_reports_cover_model_features_and_are_nonnegative():
    rng = np.random.default_rng(62)
    values = rng.normal(size=(60, 4))
    labels = (values[:, 0] + values[:, 3]) > 0
    matrix = FeatureMatrix("v1a", tuple(f"530330{i:05d}" for i in range(60)),
                           ("a", "b", "c", "d"), values, labels)
    for family, params in (("GBM", {"ntrees": 5, "max_depth": 3, "min_rows": 2}),
                           ("DRF", {"ntrees": 5}),
                           ("XRT", {"ntrees": 5}),
                           ("GLM", {"alpha": 0.0, "lambda": 0.01}),
                           ("MLP", {"hidden": [4], "epochs": 10})):
        model = train(ModelSpec(family, params, seed=2), matrix)
        report = feature_importance(model)
        assert report.feature_names == matrix.feature_names
        assert all(v >= 0 for v in report.raw)
        assert max(report.relative) == 1.0
        ranked = report.ranked()
        assert [r[2] for r in ranked] == sorted((r[2] for r in ranked), reverse=True)
