import numpy as np
import pytest

from dacml.errors import DataError
from dacml.features import FeatureMatrix, standardize
from dacml.models import ModelSpec, predict, train
from dacml.models.serialize import load_model, save_model


def _matrix(seed=70, n=50):
    rng = np.random.default_rng(seed)
    values = rng.normal(size=(n, 4))
    labels = (values[:, 0] - values[:, 2]) > 0
    return FeatureMatrix("v2b", tuple(f"530330{i:05d}" for i in range(n)),
                         ("a", "b", "c", "d"), values, labels)


@pytest.mark.parametrize("family,params", [
    ("GBM", {"ntrees": 6, "max_depth": 3, "min_rows": 2}),
    ("XGB", {"ntrees": 6, "max_depth": 3, "reg_alpha": 0.01, "reg_lambda": 0.5,
             "booster": "gbtree"}),
    ("DRF", {"ntrees": 4}),
    ("XRT", {"ntrees": 4}),
    ("GLM", {"alpha": [0.0], "lambda": 0.01}),
    ("MLP", {"hidden": [5], "epochs": 15}),
])
def test_round_trip_preserves_predictions_exactly(tmp_path, family, params):
    matrix = _matrix()
    train_m, _, stats = standardize(matrix)
    model = train(ModelSpec(family, params, seed=3), train_m, stats=stats)
    path = tmp_path / "model.json"
    save_model(model, path)
    loaded = load_model(path)
    assert loaded.spec == model.spec
    assert loaded.feature_names == model.feature_names
    np.testing.assert_array_equal(loaded.stats.mean, stats.mean)
    before = predict(model, train_m).prob
    after = predict(loaded, train_m).prob
    assert (before == after).all()


def test_resave_is_byte_identical(tmp_path):
    matrix = _matrix(seed=71)
    model = train(ModelSpec("GBM", {"ntrees": 4, "max_depth": 2, "min_rows": 2}, seed=1), matrix)
    first = tmp_path / "a.json"
    second = tmp_path / "b.json"
    save_model(model, first)
    save_model(load_model(first), second)
    assert first.read_bytes() == second.read_bytes()


def test_bad_files_are_data_errors(tmp_path):
    path = tmp_path / "junk.json"
    path.write_text("{not json")
    with pytest.raises(DataError):
        load_model(path)
    path.write_text('{"format": "something-else"}')
    with pytest.raises(DataError):
        load_model(path)
