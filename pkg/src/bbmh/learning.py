"""Linear classification on sparse features.

Minimizes 0.5 ||w||^2 + C * sum_i loss(y_i, <w, x_i>) for hinge or
logistic loss by minibatch subgradient descent with the step schedule
eta_t = 1 / (lambda (t + t0)), lambda = 1 / (C n). Iterates from the
tail half of training are averaged, the full objective is evaluated
once per epoch for the current point, the averaged point, and the zero
vector, and the best candidate seen is returned, so the reported
objective never exceeds the objective at w = 0.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
import scipy.sparse as sp
from scipy.special import expit

from .errors import ModelFormatError

LOSSES = ("hinge", "logistic")


@dataclass(frozen=True)
class Dataset:
    """Labeled sparse feature matrix; labels are +1 / -1."""

    labels: np.ndarray
    features: sp.csr_matrix

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int8)
        feats = sp.csr_matrix(self.features)
        if labels.ndim != 1 or labels.size != feats.shape[0]:
            raise ValueError(
                f"labels shape {labels.shape} does not match {feats.shape[0]} feature rows"
            )
        if labels.size and not np.isin(labels, (-1, 1)).all():
            raise ValueError("labels must be +1 or -1")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "features", feats)

    @property
    def n(self) -> int:
        return int(self.labels.size)

    @property
    def dim(self) -> int:
        return int(self.features.shape[1])

    def subset(self, idx: np.ndarray) -> "Dataset":
        return Dataset(self.labels[idx], self.features[idx])


def dataset_from_positions(positions: np.ndarray, dim: int, labels: np.ndarray) -> Dataset:
    """Rows of equal-length position lists (e.g. expanded signatures)
    into a binary CSR dataset."""
    positions = np.asarray(positions, dtype=np.int64)
    n, k = positions.shape
    indptr = np.arange(0, n * k + 1, k, dtype=np.int64)
    data = np.ones(n * k, dtype=np.float64)
    feats = sp.csr_matrix((data, positions.ravel(), indptr), shape=(n, dim))
    return Dataset(labels, feats)


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 40
    min_epochs: int = 5
    batch_size: int = 64
    step_offset: float = 2.0
    tol: float = 1e-4
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be >= 1")
        if not 1 <= self.min_epochs <= self.epochs:
            raise ValueError("need 1 <= min_epochs <= epochs")
        if self.tol < 0 or self.step_offset < 0:
            raise ValueError("tol and step_offset must be >= 0")


@dataclass(frozen=True)
class LinearModel:
    loss: str
    c: float
    seed: int
    weights: np.ndarray

    def __post_init__(self):
        if self.loss not in LOSSES:
            raise ValueError(f"loss must be one of {LOSSES}, got {self.loss!r}")
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 1:
            raise ValueError("weights must be one-dimensional")
        object.__setattr__(self, "weights", w)

    @property
    def dim(self) -> int:
        return int(self.weights.size)


def objective(weights: np.ndarray, dataset: Dataset, loss: str, c: float) -> float:
    """0.5 ||w||^2 + C * total loss over the dataset."""
    margins = dataset.features @ weights
    ym = dataset.labels * margins
    if loss == "hinge":
        total = np.maximum(0.0, 1.0 - ym).sum()
    elif loss == "logistic":
        total = np.logaddexp(0.0, -ym).sum()
    else:
        raise ValueError(f"loss must be one of {LOSSES}, got {loss!r}")
    return 0.5 * float(weights @ weights) + c * float(total)


def logistic_gradient(weights: np.ndarray, dataset: Dataset, c: float) -> np.ndarray:
    """Exact gradient of the logistic objective (any C >= 0)."""
    margins = dataset.features @ weights
    coef = dataset.labels * expit(-dataset.labels * margins)
    return weights - c * (dataset.features.T @ coef)


def logistic_gradient_check(
    weights: np.ndarray, dataset: Dataset, c: float, step: float = 1e-5
) -> float:
    """Max relative deviation between the analytic gradient and central
    finite differences (per coordinate, relative to a unit floor)."""
    analytic = logistic_gradient(weights, dataset, c)
    worst = 0.0
    w = np.asarray(weights, dtype=np.float64).copy()
    for i in range(w.size):
        orig = w[i]
        w[i] = orig + step
        hi = objective(w, dataset, "logistic", c)
        w[i] = orig - step
        lo = objective(w, dataset, "logistic", c)
        w[i] = orig
        fd = (hi - lo) / (2.0 * step)
        worst = max(worst, abs(analytic[i] - fd) / max(1.0, abs(fd)))
    return worst


def train(
    dataset: Dataset, loss: str = "hinge", c: float = 1.0, config: TrainConfig = TrainConfig()
) -> LinearModel:
    if loss not in LOSSES:
        raise ValueError(f"loss must be one of {LOSSES}, got {loss!r}")
    if not c > 0:
        raise ValueError(f"C must be positive, got {c}")
    n = dataset.n
    if n < 1:
        raise ValueError("cannot train on an empty dataset")
    rng = np.random.default_rng(config.seed)
    lam = 1.0 / (c * n)
    y = dataset.labels.astype(np.float64)
    x = dataset.features

    w = np.zeros(dataset.dim)
    best_w = w.copy()
    best_obj = objective(w, dataset, loss, c)

    avg = np.zeros_like(w)
    avg_count = 0
    total_steps = config.epochs * max(1, -(-n // config.batch_size))
    avg_start = total_steps // 2

    # Offset the 1/(lambda (t + t0)) schedule so the first data step moves
    # a margin by about one unit; without this, rows with large squared
    # norm (e.g. k-hot expanded signatures) make early steps diverge.
    max_sq = float(x.power(2).sum(axis=1).max()) if x.nnz else 1.0
    t0 = max(config.step_offset, c * n * max_sq / config.batch_size)

    t = 0
    prev_best = best_obj
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        for lo in range(0, n, config.batch_size):
            batch = order[lo : lo + config.batch_size]
            xb = x[batch]
            yb = y[batch]
            margins = xb @ w
            t += 1
            eta = 1.0 / (lam * (t + t0))
            w *= 1.0 - eta * lam
            if loss == "hinge":
                coef = np.where(yb * margins < 1.0, yb, 0.0)
            else:
                coef = yb * expit(-yb * margins)
            if np.any(coef):
                w += (eta / batch.size) * (xb.T @ coef)
            if t > avg_start:
                avg += w
                avg_count += 1
        for cand in (w, avg / avg_count if avg_count else w):
            obj = objective(cand, dataset, loss, c)
            if obj < best_obj:
                best_obj = obj
                best_w = cand.copy()
        if (
            epoch + 1 >= config.min_epochs
            and prev_best - best_obj < config.tol * max(1.0, abs(prev_best))
        ):
            break
        prev_best = best_obj
    return LinearModel(loss, c, config.seed, best_w)


def predict_margins(model: LinearModel, features: sp.spmatrix | np.ndarray) -> np.ndarray:
    if features.shape[1] != model.dim:
        raise ValueError(f"features have {features.shape[1]} columns, model has {model.dim}")
    return np.asarray(features @ model.weights).ravel()


def predict_labels(model: LinearModel, features) -> np.ndarray:
    """Signs of the margins; zero margins resolve to +1."""
    margins = predict_margins(model, features)
    return np.where(margins < 0.0, -1, 1).astype(np.int8)


def accuracy(model: LinearModel, dataset: Dataset) -> float:
    if dataset.n == 0:
        raise ValueError("accuracy over an empty dataset is undefined")
    return float(np.mean(predict_labels(model, dataset.features) == dataset.labels))


def split_indices(n: int, test_fraction: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic shuffled train/test split; both sides nonempty."""
    if not 0.0 < test_fraction < 1.0:
        raise ValueError(f"test_fraction must be in (0, 1), got {test_fraction}")
    n_test = int(round(n * test_fraction))
    n_test = min(max(n_test, 1), n - 1)
    order = np.random.default_rng(seed).permutation(n)
    return np.sort(order[n_test:]), np.sort(order[:n_test])


def save_model(path, model: LinearModel) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"loss {model.loss}\n")
        fh.write(f"c {model.c!r}\n")
        fh.write(f"dim {model.dim}\n")
        fh.write(f"seed {model.seed}\n")
        for v in model.weights:
            fh.write(f"{float(v)!r}\n")


def load_model(path) -> LinearModel:
    with open(path, encoding="ascii") as fh:
        header: dict[str, str] = {}
        for key in ("loss", "c", "dim", "seed"):
            line = fh.readline()
            parts = line.split()
            if len(parts) != 2 or parts[0] != key:
                raise ModelFormatError(f"{path}: expected header line '{key} <value>', got {line!r}")
            header[key] = parts[1]
        try:
            c = float(header["c"])
            dim = int(header["dim"])
            seed = int(header["seed"])
        except ValueError as exc:
            raise ModelFormatError(f"{path}: bad header value ({exc})") from exc
        weights = np.empty(dim)
        for i in range(dim):
            line = fh.readline()
            if not line:
                raise ModelFormatError(f"{path}: expected {dim} weights, file ended at {i}")
            try:
                weights[i] = float(line)
            except ValueError as exc:
                raise ModelFormatError(f"{path}: bad weight on line {5 + i} ({exc})") from exc
        if fh.readline().strip():
            raise ModelFormatError(f"{path}: trailing content after {dim} weights")
    return LinearModel(header["loss"], c, seed, weights)
