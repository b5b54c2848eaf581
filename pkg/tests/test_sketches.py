"""Count-min, signed-sum, and random-projection sketches: estimator
bias/variance laws at unit-test scale plus the binary file format.

Monte-Carlo checks here use a few thousand seeds with 4-5 sigma bands;
the 1e4-seed runs at the documented tolerances live in the acceptance
suite.
"""
import math

import numpy as np
import pytest

from bbmh.errors import IncompatibleSketchError
from bbmh.sketches import (
    SignDistribution,
    SparseVector,
    cm_sketch,
    estimate_inner,
    expectation_cm,
    iter_sketch_file,
    pair_moments,
    read_sketch_file,
    rp_sketch,
    variance_cm,
    variance_cm_unbiased,
    variance_rp,
    variance_vw,
    vw_sketch,
    write_sketch_file,
)


def binary_pair(d=4096, f1=80, f2=60, a=30, seed=0):
    rng = np.random.default_rng(seed)
    union = rng.choice(d, size=f1 + f2 - a, replace=False)
    shared, only1, only2 = union[:a], union[a : f1], union[f1 :]
    v1 = SparseVector(d, np.sort(np.concatenate([shared, only1])), np.ones(f1))
    v2 = SparseVector(d, np.sort(np.concatenate([shared, only2])), np.ones(f2))
    return v1, v2


def test_sign_distribution_moments():
    """Moment contract E r = 0, E r^2 = 1, E r^3 = 0, E r^4 = s over
    1e6 stream values."""
    rng = np.random.default_rng(42)
    u = rng.random(1_000_000)
    for s in (1.0, 2.0, 3.0):
        vals = SignDistribution(s).values_from_uniform(u)
        m1, m2 = vals.mean(), (vals**2).mean()
        m3, m4 = (vals**3).mean(), (vals**4).mean()
        assert abs(m1) < 0.01 * math.sqrt(s)
        assert abs(m2 - 1.0) < 0.01
        assert abs(m3) < 0.01 * s
        assert abs(m4 - s) < 0.01 * s
    normal = SignDistribution(3.0, family="normal").values_from_uniform(u)
    assert abs(normal.mean()) < 0.01
    assert abs((normal**2).mean() - 1.0) < 0.01
    assert abs((normal**4).mean() - 3.0) < 0.03


def test_sign_distribution_validation():
    with pytest.raises(ValueError):
        SignDistribution(0.5)
    with pytest.raises(ValueError):
        SignDistribution(2.0, family="cauchy")
    with pytest.raises(ValueError):
        SignDistribution(2.0, family="normal")  # normal pins s = 3


def test_cm_single_nonzero():
    v = SparseVector(100, np.array([42]), np.array([2.5]))
    w = cm_sketch(v, 16, seed=9).coords
    assert np.count_nonzero(w) == 1
    assert w.sum() == pytest.approx(2.5)


def test_cm_mass_conservation():
    rng = np.random.default_rng(1)
    idx = np.sort(rng.choice(500, size=40, replace=False))
    vals = rng.normal(size=40)
    v = SparseVector(500, idx, vals)
    w = cm_sketch(v, 32, seed=2).coords
    assert w.sum() == pytest.approx(vals.sum(), rel=1e-12)


def test_cm_mean_formula_small_run():
    v1, v2 = binary_pair()
    k, runs = 50, 4000
    want = expectation_cm(v1, v2, k)
    f1, f2, a = 80, 60, 30
    assert want == pytest.approx(a + (f1 * f2 - a) / k)
    ests = np.array(
        [
            estimate_inner(cm_sketch(v1, k, seed), cm_sketch(v2, k, seed))
            for seed in range(runs)
        ]
    )
    se = math.sqrt(variance_cm(v1, v2, k) / runs)
    assert abs(ests.mean() - want) < 4 * se


def test_vw_zero_fraction():
    """s = 1, binary input with c nonzeros: expected zero fraction of
    the sketch is (1 - 1/k)^c."""
    d, c, k = 2048, 30, 500
    rng = np.random.default_rng(5)
    v = SparseVector(d, np.sort(rng.choice(d, size=c, replace=False)), np.ones(c))
    runs = 300
    frac = np.mean(
        [np.mean(vw_sketch(v, k, seed).coords == 0.0) for seed in range(runs)]
    )
    want = (1 - 1 / k) ** c
    # per-run fraction has std < sqrt(p(1-p)/k); 5 sigma over runs
    se = math.sqrt(want * (1 - want) / (k * runs))
    assert abs(frac - want) < 5 * se


def test_vw_sparsity_preserving():
    rng = np.random.default_rng(8)
    for trial in range(20):
        nnz = int(rng.integers(1, 60))
        idx = np.sort(rng.choice(1000, size=nnz, replace=False))
        v = SparseVector(1000, idx, rng.normal(size=nnz))
        for maker in (vw_sketch, cm_sketch):
            out = maker(v, 40, int(rng.integers(1 << 30)))
            assert np.count_nonzero(out.coords) <= nnz


def test_vw_disjoint_mean_zero():
    d = 4096
    v1 = SparseVector(d, np.arange(50), np.ones(50))
    v2 = SparseVector(d, np.arange(100, 150), np.ones(50))
    ests = np.array(
        [
            estimate_inner(vw_sketch(v1, 64, seed), vw_sketch(v2, 64, seed))
            for seed in range(3000)
        ]
    )
    se = math.sqrt(variance_vw(v1, v2, 64) / 3000)
    assert abs(ests.mean()) < 4 * se


def test_vw_self_inner_product():
    rng = np.random.default_rng(13)
    idx = np.sort(rng.choice(512, size=25, replace=False))
    vals = rng.normal(size=25)
    v = SparseVector(512, idx, vals)
    want = float(vals @ vals)
    ests = np.array(
        [estimate_inner(vw_sketch(v, 32, seed), vw_sketch(v, 32, seed)) for seed in range(3000)]
    )
    se = math.sqrt(variance_vw(v, v, 32) / 3000)
    assert abs(ests.mean() - want) < 4 * se


def test_rp_zero_vector():
    v = SparseVector(64, np.array([], dtype=np.int64), np.array([]))
    sk = rp_sketch(v, 8, seed=3)
    assert np.all(sk.coords == 0.0)
    other = rp_sketch(SparseVector(64, np.arange(5), np.ones(5)), 8, seed=3)
    assert estimate_inner(sk, other) == 0.0


def test_rp_variance_ordering():
    """(s - 3) term: s = 1 beats s = 3 whenever sum u1^2 u2^2 > 0.

    On near-uniform data the term is a sub-percent correction and no
    sane number of seeds resolves it empirically, so the analytic check
    runs on the binary pair while the Monte-Carlo check uses a spiky
    self-pair where sum u1^2 u2^2 is comparable to the product term.
    """
    v1, v2 = binary_pair()
    assert variance_rp(v1, v2, 100, s=1.0) < variance_rp(v1, v2, 100, s=3.0)

    idx = np.arange(6)
    spiky = SparseVector(64, idx, np.array([3.0, 0.3, 0.2, 0.2, 0.1, 0.1]))
    k, runs = 20, 4000
    by_s = {}
    for s in (1.0, 3.0):
        sign = SignDistribution(s)
        ests = np.array(
            [
                estimate_inner(rp_sketch(spiky, k, seed, sign), rp_sketch(spiky, k, seed, sign))
                for seed in range(runs)
            ]
        )
        by_s[s] = ests.var(ddof=1)
    assert by_s[1.0] < by_s[3.0]
    want_ratio = variance_rp(spiky, spiky, k, s=3.0) / variance_rp(spiky, spiky, k, s=1.0)
    assert want_ratio > 5  # the configuration really separates the laws
    assert by_s[3.0] / by_s[1.0] > want_ratio / 2


def test_vw_rp_variance_formulas_match_at_s1():
    """With s = 1 the two laws coincide for binary data."""
    v1, v2 = binary_pair()
    k = 100
    f1, f2, a = 80, 60, 30
    want = (f1 * f2 + a * a - 2 * a) / k
    assert variance_vw(v1, v2, k, s=1.0) == pytest.approx(want)
    assert variance_rp(v1, v2, k, s=1.0) == pytest.approx(want)


def test_cm_unbiased_correction():
    v1, v2 = binary_pair()
    k, runs = 50, 4000
    ests = np.empty(runs)
    for seed in range(runs):
        s1, s2 = cm_sketch(v1, k, seed), cm_sketch(v2, k, seed)
        ests[seed] = estimate_inner(s1, s2, estimator="cm_unbiased")
    se = math.sqrt(variance_cm_unbiased(v1, v2, k) / runs)
    assert abs(ests.mean() - 30.0) < 4 * se
    with pytest.raises(ValueError):
        estimate_inner(cm_sketch(v1, 1, 0), cm_sketch(v2, 1, 0), estimator="cm_unbiased")


def test_incompatible_sketches_rejected():
    v1, v2 = binary_pair()
    a = vw_sketch(v1, 32, seed=1)
    with pytest.raises(IncompatibleSketchError):
        estimate_inner(a, vw_sketch(v2, 64, seed=1))  # width
    with pytest.raises(IncompatibleSketchError):
        estimate_inner(a, vw_sketch(v2, 32, seed=2))  # seed
    with pytest.raises(IncompatibleSketchError):
        estimate_inner(a, cm_sketch(v2, 32, seed=1))  # kind
    with pytest.raises(IncompatibleSketchError):
        estimate_inner(a, vw_sketch(v2, 32, seed=1, sign=SignDistribution(2.0)))  # s


def test_pair_moments_values():
    v1, v2 = binary_pair()
    m = pair_moments(v1, v2)
    assert m["inner"] == 30.0
    assert m["sumsq1"] == 80.0
    assert m["sumsq2"] == 60.0
    assert m["sum_cross_sq"] == 30.0
    assert m["sum1"] == 80.0 and m["sum2"] == 60.0


def test_sketch_file_roundtrip(tmp_path):
    v1, v2 = binary_pair()
    rows = [vw_sketch(v1, 16, seed=4), vw_sketch(v2, 16, seed=4)]
    path = tmp_path / "two.skch"
    assert write_sketch_file(path, iter(rows)) == 2
    back = read_sketch_file(path)
    assert len(back) == 2
    for orig, rt in zip(rows, back):
        assert rt.kind == orig.kind and rt.k == orig.k and rt.seed == orig.seed
        assert rt.sign.s == orig.sign.s and rt.sign.family == orig.sign.family
        assert np.array_equal(rt.coords, orig.coords)
    streamed = list(iter_sketch_file(path))
    assert np.array_equal(streamed[1].coords, rows[1].coords)


def test_sketch_file_normal_family_flag(tmp_path):
    v1, _ = binary_pair()
    sk = rp_sketch(v1, 8, seed=2, sign=SignDistribution(3.0, family="normal"))
    path = tmp_path / "n.skch"
    write_sketch_file(path, [sk])
    (back,) = read_sketch_file(path)
    assert back.sign.family == "normal"
    assert back.sign.s == 3.0


def test_sketch_file_bad_magic(tmp_path):
    path = tmp_path / "bad.skch"
    path.write_bytes(b"XXXX" + bytes(30))
    with pytest.raises(ValueError):
        read_sketch_file(path)
