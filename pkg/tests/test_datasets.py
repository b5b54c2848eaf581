"""Sparse text parsing/writing and the synthetic corpus."""
import io

import numpy as np
import pytest

from bbmh.datasets import (
    SyntheticConfig,
    format_sparse_record,
    generate_records,
    load_dataset,
    parse_sparse_line,
    read_sparse_records,
    record_to_set,
    resemblance_of,
    write_sparse_records,
)
from bbmh.errors import DatasetFormatError


def test_parse_basic_line():
    label, idx, val = parse_sparse_line("+1 3:1 7:1\n")
    assert label == 1
    assert idx.tolist() == [3, 7]
    assert val.tolist() == [1.0, 1.0]


def test_parse_unlabeled_and_values():
    label, idx, val = parse_sparse_line("2:0.5 9:3")
    assert label is None
    assert idx.tolist() == [2, 9]
    assert val.tolist() == [0.5, 3.0]


def test_parse_comments_and_blanks():
    assert parse_sparse_line("# full comment\n") is None
    assert parse_sparse_line("   \n") is None
    label, idx, _ = parse_sparse_line("-1 0:1 # trailing\n")
    assert label == -1 and idx.tolist() == [0]


@pytest.mark.parametrize(
    "line",
    [
        "+2 1:1",          # bad label
        "+1 5:1 3:1",      # not ascending
        "+1 3:1 3:1",      # duplicate index
        "+1 -2:1",         # negative index
        "+1 3:x",          # non-numeric value
        "+1 3",            # missing colon after label
    ],
)
def test_parse_rejects_malformed(line):
    with pytest.raises(DatasetFormatError):
        parse_sparse_line(line)


def test_error_carries_line_number(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("+1 0:1\n+1 4:1 2:1\n")
    with pytest.raises(DatasetFormatError) as exc:
        list(read_sparse_records(path))
    assert "bad.txt:2:" in str(exc.value)


def test_binary_mode_rejects_other_values():
    src = io.StringIO("+1 0:1 1:2\n")
    with pytest.raises(DatasetFormatError) as exc:
        list(read_sparse_records(src, binary=True))
    assert "binary" in str(exc.value)


def test_empty_file_loads_empty_dataset(tmp_path):
    path = tmp_path / "empty.txt"
    path.write_text("")
    ds = load_dataset(path)
    assert ds.n == 0 and ds.dim == 0


def test_write_read_byte_identical(tmp_path):
    golden = "+1 0:1 5:1 9:1\n-1 2:0.5 5:3\n+1 1:1\n"
    src = tmp_path / "in.txt"
    src.write_text(golden)
    out = tmp_path / "out.txt"
    n = write_sparse_records(out, read_sparse_records(src))
    assert n == 3
    assert out.read_bytes() == golden.encode()


def test_format_integer_values_stay_integers():
    line = format_sparse_record(-1, np.array([1, 4]), np.array([1.0, 2.5]))
    assert line == "-1 1:1 4:2.5"


def test_load_dataset_dims(tmp_path):
    path = tmp_path / "d.txt"
    path.write_text("+1 0:1 7:1\n-1 3:1\n")
    ds = load_dataset(path)
    assert ds.dim == 8 and ds.n == 2
    ds16 = load_dataset(path, dim=16)
    assert ds16.dim == 16
    with pytest.raises(DatasetFormatError):
        load_dataset(path, dim=4)
    path2 = tmp_path / "unlabeled.txt"
    path2.write_text("0:1 7:1\n")
    with pytest.raises(DatasetFormatError):
        load_dataset(path2)


def test_record_to_set():
    s = record_to_set(np.array([4, 1], dtype=np.int64), 10)
    assert s.universe_size == 10
    assert s.indices.tolist() == [1, 4]


def test_synthetic_config_validation():
    with pytest.raises(ValueError):
        SyntheticConfig(within_resemblance=0.1, cross_resemblance=0.4)
    with pytest.raises(ValueError):
        SyntheticConfig(tokens_per_record=400, universe_size=64)
    with pytest.raises(ValueError):
        SyntheticConfig(label_noise=0.5)


def test_synthetic_resemblance_structure():
    """Pure same-class pairs resemble more than cross-class pairs, and
    both land near the configured targets."""
    cfg = SyntheticConfig(
        n_records=80,
        universe_size=1 << 16,
        tokens_per_record=500,
        within_resemblance=0.45,
        cross_resemblance=0.15,
        mixed_fraction=0.0,
        label_noise=0.0,
        seed=42,
    )
    labels, records = generate_records(cfg)
    assert labels.shape == (80,)
    assert set(np.unique(labels)) == {-1, 1}
    within, cross = [], []
    rng = np.random.default_rng(0)
    for _ in range(300):
        i, j = rng.choice(80, size=2, replace=False)
        r = resemblance_of(records[i], records[j])
        (within if labels[i] == labels[j] else cross).append(r)
    w, x = np.mean(within), np.mean(cross)
    assert w > x
    assert abs(w - cfg.within_resemblance) < 0.05
    assert abs(x - cfg.cross_resemblance) < 0.05


def test_synthetic_deterministic():
    cfg = SyntheticConfig(n_records=10, universe_size=1 << 14, tokens_per_record=100, seed=7)
    l1, r1 = generate_records(cfg)
    l2, r2 = generate_records(cfg)
    assert np.array_equal(l1, l2)
    assert all(np.array_equal(a, b) for a, b in zip(r1, r2))


def test_synthetic_records_sorted_unique():
    cfg = SyntheticConfig(n_records=6, universe_size=1 << 14, tokens_per_record=100, seed=3)
    _, records = generate_records(cfg)
    for rec in records:
        assert rec.size == 100
        assert np.all(np.diff(rec) > 0)
