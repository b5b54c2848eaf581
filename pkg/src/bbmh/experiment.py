"""The end-to-end learning experiment: hash, truncate, expand, train,
and score over a (b, k) grid with repeated hashing seeds.

One 64-bit signature pass per repetition covers the whole grid: the
k-prefix of a max-k signature is itself a valid signature (permutations
are indexed), and truncation to each b reuses the same minima. The
train/test split uses its own seed so hashing is the only source of
variation across repetitions; original-feature rows therefore have a
single repetition and zero std by construction.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .hashing import SparseSet, build_family, derive_seed, minhash
from .learning import (
    Dataset,
    TrainConfig,
    accuracy,
    dataset_from_positions,
    split_indices,
    train,
)

DEFAULT_K_GRID = (30, 100, 200)
DEFAULT_B_GRID = (1, 2, 4, 8)
DEFAULT_C_GRID = (0.01, 0.1, 1.0, 10.0, 100.0)

REPORT_FIELDS = (
    "features",
    "loss",
    "b",
    "k",
    "c",
    "reps",
    "acc_mean",
    "acc_std",
    "status",
)


@dataclass(frozen=True)
class ExperimentConfig:
    k_values: tuple[int, ...] = DEFAULT_K_GRID
    b_values: tuple[int, ...] = DEFAULT_B_GRID
    losses: tuple[str, ...] = ("hinge", "logistic")
    c_values: tuple[float, ...] = DEFAULT_C_GRID
    repetitions: int = 20
    test_fraction: float = 0.2
    hash_seed: int = 1
    split_seed: int = 2
    trainer: TrainConfig = field(default_factory=TrainConfig)

    def __post_init__(self):
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        if not self.k_values or not self.b_values or not self.c_values:
            raise ValueError("k, b, and C grids must be nonempty")


def signature_pass(
    sets: list[SparseSet], k: int, universe_size: int, seed: int
) -> np.ndarray:
    """(n, k) matrix of 64-bit minima, one hashed-mode family."""
    family = build_family(seed, k, universe_size, mode="hashed")
    out = np.empty((len(sets), k), dtype=np.uint64)
    for i, s in enumerate(sets):
        out[i] = minhash(family, s).values
    return out


def expanded_dataset(z: np.ndarray, b: int, k: int, labels: np.ndarray) -> Dataset:
    """Truncate the k-prefix of the minima matrix to b bits and one-hot
    expand into a binary CSR dataset of dimension k * 2^b."""
    width = 1 << b
    vals = (z[:, :k] & np.uint64(width - 1)).astype(np.int64)
    positions = np.arange(k, dtype=np.int64) * width + (width - 1 - vals)
    return dataset_from_positions(positions, k * width, labels)


def run_experiment(dataset: Dataset, universe_size: int, config: ExperimentConfig) -> list[dict]:
    """Grid accuracies as report rows; a failed cell becomes a row with
    status "error:<reason>" and the run continues."""
    train_idx, test_idx = split_indices(dataset.n, config.test_fraction, config.split_seed)
    rows: list[dict] = []

    for loss in config.losses:
        for c in config.c_values:
            try:
                model = train(dataset.subset(train_idx), loss, c, config.trainer)
                acc = accuracy(model, dataset.subset(test_idx))
                rows.append(_row("original", loss, None, None, c, 1, acc, 0.0))
            except Exception as exc:  # a failed cell must not kill the run
                rows.append(_error_row("original", loss, None, None, c, exc))

    k_max = max(config.k_values)
    sets = [
        SparseSet(universe_size, dataset.features.indices[
            dataset.features.indptr[i] : dataset.features.indptr[i + 1]
        ].astype(np.int64))
        for i in range(dataset.n)
    ]
    cell_acc: dict[tuple[str, int, int, float], list[float]] = {
        (loss, b, k, c): []
        for loss in config.losses
        for b in config.b_values
        for k in config.k_values
        for c in config.c_values
    }
    for rep in range(config.repetitions):
        z = signature_pass(sets, k_max, universe_size, derive_seed(config.hash_seed, rep))
        for b in config.b_values:
            for k in config.k_values:
                hashed = expanded_dataset(z, b, k, dataset.labels)
                for loss in config.losses:
                    for c in config.c_values:
                        try:
                            model = train(hashed.subset(train_idx), loss, c, config.trainer)
                            cell_acc[(loss, b, k, c)].append(
                                accuracy(model, hashed.subset(test_idx))
                            )
                        except Exception as exc:
                            cell_acc[(loss, b, k, c)].append(float("nan"))
                            rows.append(_error_row("hashed", loss, b, k, c, exc))

    for loss in config.losses:
        for b in config.b_values:
            for k in config.k_values:
                for c in config.c_values:
                    accs = np.asarray(cell_acc[(loss, b, k, c)])
                    ok = accs[~np.isnan(accs)]
                    if ok.size:
                        std = float(ok.std(ddof=1)) if ok.size > 1 else 0.0
                        rows.append(
                            _row("hashed", loss, b, k, c, int(ok.size), float(ok.mean()), std)
                        )
    return rows


def best_over_c(rows: list[dict], features: str, loss: str,
                b: int | None = None, k: int | None = None) -> dict:
    """The highest-mean-accuracy row for one (features, loss, b, k) cell
    across the C grid. Mirrors how accuracies are compared: each feature
    representation gets its best penalty setting."""
    want_b = "" if b is None else b
    want_k = "" if k is None else k
    candidates = [
        r for r in rows
        if r["features"] == features and r["loss"] == loss
        and r["b"] == want_b and r["k"] == want_k and r["status"] == "ok"
    ]
    if not candidates:
        raise KeyError(f"no ok rows for {features}/{loss}/b={b}/k={k}")
    return max(candidates, key=lambda r: float(r["acc_mean"]))


def _row(features, loss, b, k, c, reps, mean, std) -> dict:
    return {
        "features": features,
        "loss": loss,
        "b": "" if b is None else b,
        "k": "" if k is None else k,
        "c": repr(float(c)),
        "reps": reps,
        "acc_mean": repr(float(mean)),
        "acc_std": repr(float(std)),
        "status": "ok",
    }


def _error_row(features, loss, b, k, c, exc) -> dict:
    row = _row(features, loss, b, k, c, 0, float("nan"), float("nan"))
    row["status"] = f"error:{type(exc).__name__}"
    return row


def write_report_csv(path, rows: list[dict]) -> None:
    with open(path, "w", newline="", encoding="ascii") as fh:
        writer = csv.DictWriter(fh, fieldnames=REPORT_FIELDS)
        writer.writeheader()
        writer.writerows(rows)
