"""Grid experiment wiring: signatures -> expansion -> training -> report."""
import csv

import numpy as np
import pytest
import scipy.sparse as sp

from bbmh.expansion import expand
from bbmh.experiment import (
    ExperimentConfig,
    best_over_c,
    expanded_dataset,
    run_experiment,
    signature_pass,
    write_report_csv,
    REPORT_FIELDS,
)
from bbmh.hashing import SparseSet, build_family, minhash, truncate_bits
from bbmh.learning import Dataset, TrainConfig


def toy_dataset(universe=512, n_per_class=8):
    """Identical token set within each class, disjoint across classes:
    any hashed representation separates it perfectly."""
    pos = np.arange(0, 40, dtype=np.int64)
    neg = np.arange(100, 140, dtype=np.int64)
    labels = np.array([1] * n_per_class + [-1] * n_per_class, dtype=np.int8)
    rows = [pos] * n_per_class + [neg] * n_per_class
    indptr = np.concatenate([[0], np.cumsum([r.size for r in rows])])
    feats = sp.csr_matrix(
        (np.ones(indptr[-1]), np.concatenate(rows), indptr), shape=(len(rows), universe)
    )
    return Dataset(labels, feats)


SMALL = ExperimentConfig(
    k_values=(8,),
    b_values=(2,),
    losses=("hinge",),
    c_values=(1.0,),
    repetitions=2,
    test_fraction=0.25,
    trainer=TrainConfig(epochs=40),
)


def test_expanded_dataset_matches_per_record_expansion():
    universe = 1 << 12
    rng = np.random.default_rng(0)
    sets = [SparseSet(universe, np.sort(rng.choice(universe, 30, replace=False))) for _ in range(6)]
    k, b = 12, 3
    z = signature_pass(sets, k, universe, seed=9)
    ds = expanded_dataset(z, b, k, np.ones(6, dtype=np.int8))
    family = build_family(9, k, universe, mode="hashed")
    for i, s in enumerate(sets):
        sig = truncate_bits(minhash(family, s), b)
        vec = expand(sig)
        row = ds.features.getrow(i)
        assert ds.dim == vec.dim
        assert np.array_equal(np.sort(row.indices), np.sort(vec.ones))


def test_prefix_reuse_smaller_k():
    """The k-prefix of a wider signature equals the signature built at
    that k directly (families index permutations by position)."""
    universe = 1 << 10
    s = SparseSet(universe, np.arange(17, 60, dtype=np.int64))
    full = signature_pass([s], 16, universe, seed=4)
    narrow = signature_pass([s], 5, universe, seed=4)
    assert np.array_equal(full[:, :5], narrow)


def test_toy_experiment_perfect_accuracy():
    ds = toy_dataset()
    rows = run_experiment(ds, 512, SMALL)
    originals = [r for r in rows if r["features"] == "original"]
    hashed = [r for r in rows if r["features"] == "hashed"]
    assert len(originals) == 1 and len(hashed) == 1
    assert all(r["status"] == "ok" for r in rows)
    assert float(originals[0]["acc_mean"]) == 1.0
    assert float(hashed[0]["acc_mean"]) == 1.0
    assert hashed[0]["reps"] == 2
    assert hashed[0]["b"] == 2 and hashed[0]["k"] == 8


def test_error_cell_isolated():
    """A bad C value poisons only its own rows; the rest still run."""
    ds = toy_dataset()
    cfg = ExperimentConfig(
        k_values=(8,),
        b_values=(2,),
        losses=("hinge",),
        c_values=(0.0, 1.0),
        repetitions=1,
        test_fraction=0.25,
        trainer=TrainConfig(epochs=20),
    )
    rows = run_experiment(ds, 512, cfg)
    bad = [r for r in rows if r["status"] != "ok"]
    good = [r for r in rows if r["status"] == "ok"]
    assert bad and good
    assert all(r["c"] == repr(0.0) or r["c"] == 0.0 for r in bad)
    assert all(r["status"].startswith("error:") for r in bad)


def test_best_over_c_selection():
    rows = [
        {"features": "hashed", "loss": "hinge", "b": 2, "k": 8, "c": "0.1",
         "reps": 2, "acc_mean": "0.91", "acc_std": "0.0", "status": "ok"},
        {"features": "hashed", "loss": "hinge", "b": 2, "k": 8, "c": "1.0",
         "reps": 2, "acc_mean": "0.95", "acc_std": "0.0", "status": "ok"},
        {"features": "hashed", "loss": "hinge", "b": 2, "k": 8, "c": "10.0",
         "reps": 2, "acc_mean": "0.99", "acc_std": "0.0", "status": "error:diverged"},
        {"features": "original", "loss": "hinge", "b": "", "k": "", "c": "1.0",
         "reps": 1, "acc_mean": "0.97", "acc_std": "0.0", "status": "ok"},
    ]
    best = best_over_c(rows, "hashed", "hinge", b=2, k=8)
    assert best["c"] == "1.0"  # error rows never win
    assert best_over_c(rows, "original", "hinge")["acc_mean"] == "0.97"
    with pytest.raises(KeyError):
        best_over_c(rows, "hashed", "logistic", b=2, k=8)


def test_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig(repetitions=0)
    with pytest.raises(ValueError):
        ExperimentConfig(k_values=())
    with pytest.raises(ValueError):
        ExperimentConfig(c_values=())


def test_report_csv_roundtrip(tmp_path):
    ds = toy_dataset()
    rows = run_experiment(ds, 512, SMALL)
    path = tmp_path / "report.csv"
    write_report_csv(path, rows)
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        assert tuple(reader.fieldnames) == REPORT_FIELDS
        back = list(reader)
    assert len(back) == len(rows)
    for got, want in zip(back, rows):
        assert got["features"] == want["features"]
        assert float(got["acc_mean"]) == float(want["acc_mean"])
