"""The SGD trainer, gradient oracle, prediction, and model file."""
import numpy as np
import pytest
import scipy.sparse as sp

from bbmh.errors import ModelFormatError
from bbmh.learning import (
    Dataset,
    LinearModel,
    TrainConfig,
    accuracy,
    dataset_from_positions,
    load_model,
    logistic_gradient,
    logistic_gradient_check,
    objective,
    predict_labels,
    predict_margins,
    save_model,
    split_indices,
    train,
)


def two_point_dataset():
    labels = np.array([1, -1], dtype=np.int8)
    feats = sp.csr_matrix(np.array([[1.0, 0.0], [0.0, 1.0]]))
    return Dataset(labels, feats)


def random_dataset(n=60, dim=10, seed=0):
    rng = np.random.default_rng(seed)
    w_true = rng.normal(size=dim)
    x = rng.normal(size=(n, dim)) * (rng.random((n, dim)) < 0.5)
    y = np.where(x @ w_true + 0.3 * rng.normal(size=n) > 0, 1, -1).astype(np.int8)
    return Dataset(y, sp.csr_matrix(x))


def test_separable_two_points():
    ds = two_point_dataset()
    for loss in ("hinge", "logistic"):
        model = train(ds, loss, c=100.0)
        assert accuracy(model, ds) == 1.0


def test_objective_decreases_from_zero():
    ds = random_dataset()
    for loss in ("hinge", "logistic"):
        model = train(ds, loss, c=1.0)
        at_zero = objective(np.zeros(ds.dim), ds, loss, 1.0)
        at_end = objective(model.weights, ds, loss, 1.0)
        assert at_end < at_zero


def test_training_deterministic():
    ds = random_dataset()
    m1 = train(ds, "logistic", c=2.0, config=TrainConfig(seed=5))
    m2 = train(ds, "logistic", c=2.0, config=TrainConfig(seed=5))
    assert np.array_equal(m1.weights, m2.weights)


def test_validation_errors():
    ds = two_point_dataset()
    with pytest.raises(ValueError):
        train(ds, "hinge", c=0.0)
    with pytest.raises(ValueError):
        train(ds, "huber", c=1.0)
    empty = Dataset(np.array([], dtype=np.int8), sp.csr_matrix((0, 3)))
    with pytest.raises(ValueError):
        train(empty, "hinge", c=1.0)
    with pytest.raises(ValueError):
        Dataset(np.array([1, 2], dtype=np.int8), sp.csr_matrix(np.eye(2)))  # label 2


def test_predict_zero_weights_ties_positive():
    ds = two_point_dataset()
    model = LinearModel("hinge", 1.0, 0, np.zeros(2))
    preds = predict_labels(model, ds.features)
    assert preds.tolist() == [1, 1]
    assert accuracy(model, ds) == 0.5  # class balance of +1


def test_predict_dimension_mismatch():
    model = LinearModel("hinge", 1.0, 0, np.zeros(3))
    with pytest.raises(ValueError):
        predict_margins(model, sp.csr_matrix(np.eye(2)))


def test_logistic_gradient_check_random():
    ds = random_dataset(n=40, dim=10, seed=3)
    rng = np.random.default_rng(4)
    w = rng.normal(scale=0.5, size=10)
    assert logistic_gradient_check(w, ds, c=1.5, step=1e-5) < 1e-6


def test_logistic_gradient_symmetric_at_zero():
    """Balanced labels on mirrored rows: the data term at w = 0 is
    C * sum(-y * x) / 2 elementwise, and the check stays tight."""
    x = np.array([[1.0, 2.0], [-1.0, -2.0]])
    ds = Dataset(np.array([1, -1], dtype=np.int8), sp.csr_matrix(x))
    w = np.zeros(2)
    g = logistic_gradient(w, ds, c=3.0)
    rows = np.array([-1 * x[0], 1 * x[1]])
    want = 3.0 * rows.sum(axis=0) / 2
    assert np.allclose(g, want, atol=1e-12)
    assert logistic_gradient_check(w, ds, c=3.0) < 1e-6


def test_gradient_c_zero_is_regularizer_only():
    ds = random_dataset(n=20, dim=6, seed=8)
    w = np.linspace(-1, 1, 6)
    g = logistic_gradient(w, ds, c=0.0)
    assert np.array_equal(g, w)


def test_c_plateau_on_original_features():
    """Accuracy as a function of C flattens once C >= 1 (qualitative
    shape; exact values are solver-dependent)."""
    from bbmh.datasets import SyntheticConfig, generate_records

    cfg = SyntheticConfig(n_records=400, universe_size=1 << 14, tokens_per_record=120, seed=9)
    labels, records = generate_records(cfg)
    indptr = np.concatenate([[0], np.cumsum([r.size for r in records])])
    feats = sp.csr_matrix(
        (np.ones(indptr[-1]), np.concatenate(records), indptr),
        shape=(len(records), cfg.universe_size),
    )
    ds = Dataset(labels, feats)
    tr, te = split_indices(ds.n, 0.25, seed=2)
    accs = {}
    for c in (1.0, 10.0, 100.0):
        m = train(ds.subset(tr), "hinge", c)
        accs[c] = accuracy(m, ds.subset(te))
    vals = list(accs.values())
    assert max(vals) - min(vals) <= 0.02


def test_split_indices_partition():
    tr, te = split_indices(100, 0.2, seed=1)
    assert len(te) == 20 and len(tr) == 80
    assert np.array_equal(np.sort(np.concatenate([tr, te])), np.arange(100))
    tr2, te2 = split_indices(100, 0.2, seed=1)
    assert np.array_equal(te, te2)


def test_dataset_from_positions():
    positions = np.array([[0, 3], [1, 3]])
    labels = np.array([1, -1], dtype=np.int8)
    ds = dataset_from_positions(positions, 4, labels)
    dense = ds.features.toarray()
    assert dense.tolist() == [[1, 0, 0, 1], [0, 1, 0, 1]]


def test_model_file_roundtrip(tmp_path):
    ds = random_dataset()
    model = train(ds, "logistic", c=0.5, config=TrainConfig(seed=11))
    path = tmp_path / "m.txt"
    save_model(path, model)
    back = load_model(path)
    assert back.loss == "logistic" and back.c == 0.5 and back.seed == model.seed
    assert np.array_equal(back.weights, model.weights)  # repr round-trip is exact


def test_model_file_rejects_garbage(tmp_path):
    path = tmp_path / "junk.txt"
    path.write_text("not a model\n")
    with pytest.raises(ModelFormatError):
        load_model(path)
    path2 = tmp_path / "truncated.txt"
    ds = random_dataset()
    save_model(path2, train(ds, "hinge", 1.0))
    lines = path2.read_text().splitlines()
    path2.write_text("\n".join(lines[:-3]) + "\n")
    with pytest.raises(ModelFormatError):
        load_model(path2)
