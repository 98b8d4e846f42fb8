import numpy as np
import pytest
from hypothesis import assume, given, strategies as st
from hypothesis.extra.numpy import arrays

from crmap.metrics import DEFAULT_GAMMAS, evaluate, inconsistency, inconsistent_error_fraction, pearson, roc_auc
from oracles import pairwise_auc

vec = arrays(float, 40, elements=st.floats(0, 1))


def test_inconsistency_examples():
    assert inconsistency([0.5, 0.1], [0.1, 0.2], 2) == pytest.approx(0.3)
    assert inconsistency([0, 0, 0], [0.1, 0.2, 0.0], 0.5) == 0.0
    e = np.array([0.2, 0.4, 0.1])
    assert inconsistency(e, [0.3, 0.3, 0.3], 0.0) == pytest.approx(e.sum())
    with pytest.raises(ValueError):
        inconsistency([0.1], [0.1, 0.2], 1.0)


def test_default_gammas():
    assert DEFAULT_GAMMAS == (0.5, 1.25, 2.0)


def test_perfect_estimate():
    t = np.array([0, 1, 1, 0, 1], float)
    r = evaluate(t, np.zeros(5), t)
    assert r.mae == 0 and r.auc == 1 and r.pcc is None
    assert all(v == 0 for v in r.inconsistency.values())


def test_constant_half():
    t = np.array([0, 1, 1, 0, 1], float)
    r = evaluate(np.full(5, 0.5), np.full(5, 0.5), t)
    assert r.mae == 0.5 and r.auc == 0.5


def test_auc_pairwise_oracle_100_instances():
    rng = np.random.default_rng(2)
    for _ in range(100):
        labels = rng.random(100) < 0.3
        labels[:2] = [True, False]
        scores = np.round(rng.random(100), 1)  # plenty of ties
        assert abs(roc_auc(labels, scores) - pairwise_auc(labels, scores)) < 1e-12


def test_auc_single_class_undefined():
    assert roc_auc([True, True], [0.1, 0.2]) is None


@given(vec, vec, st.floats(0.0, 3.0), st.floats(0.0, 3.0))
def test_inconsistency_monotone_in_gamma(e, s, g1, g2):
    lo, hi = sorted((g1, g2))
    assert inconsistency(e, s, hi) <= inconsistency(e, s, lo) + 1e-12


def test_inconsistency_monotone_100_instances():
    rng = np.random.default_rng(9)
    for _ in range(100):
        e, s = rng.random(50), rng.random(50)
        vals = [inconsistency(e, s, g) for g in np.linspace(0, 4, 17)]
        assert all(a >= b for a, b in zip(vals, vals[1:]))


# scores on a coarse grid, so the float transform below stays strictly increasing
@given(arrays(float, 30, elements=st.integers(0, 40).map(lambda i: i / 40)), st.integers(0, 2 ** 31))
def test_auc_monotone_transform_invariance(scores, seed):
    labels = np.random.default_rng(seed).random(30) < 0.5
    assume(0 < labels.sum() < 30)
    a = roc_auc(labels, scores)
    assert roc_auc(labels, np.exp(3 * scores) - 7) == pytest.approx(a, abs=1e-12)


def test_pcc_affine_invariance_100_instances():
    rng = np.random.default_rng(3)
    for _ in range(100):
        x, y = rng.random(60), rng.random(60)
        a, b = rng.uniform(0.1, 10, 2)
        c, d = rng.uniform(-5, 5, 2)
        assert abs(pearson(a * x + c, b * y + d) - pearson(x, y)) < 1e-12


def test_pcc_zero_variance_sentinel():
    assert pearson([1, 1, 1], [0.1, 0.2, 0.3]) is None
    assert pearson([0.1, 0.2, 0.3], [0.1, 0.2, 0.3]) == pytest.approx(1.0)


def test_inconsistent_fraction():
    e, s = np.array([0.5, 0.1, 0.4]), np.array([0.1, 0.2, 0.4])
    assert inconsistent_error_fraction(e, s, 1.25) == pytest.approx(0.5 / 1.0)
    assert inconsistent_error_fraction(np.zeros(3), s, 1.25) == 0.0


def test_evaluate_mask_and_rows():
    t = np.array([0, 1, 0, 1], float)
    mean = np.array([0.2, 0.6, 0.5, 0.9])
    std = np.array([0.1, 0.1, 0.5, 0.05])
    r = evaluate(mean, std, t, gammas=[0.5, 2], mask=np.array([True, True, False, True]))
    assert r.voxels_evaluated == 3 and r.voxel_filter == "updated"
    assert list(r.rows["voxel_id"]) == [0, 1, 3]
    assert r.mae == pytest.approx((0.2 + 0.4 + 0.1) / 3)
    assert np.allclose(r.rows["ic"], np.maximum(0, r.rows["abs_error"] - 0.5 * r.rows["std"]))
    assert set(r.inconsistency) == {0.5, 2.0}
    with pytest.raises(ValueError):
        evaluate(mean, std, t[:3])


@given(vec, vec, vec)
def test_report_ranges(mean, std, truth):
    r = evaluate(mean, std, (truth > 0.5).astype(float))
    assert 0 <= r.mae <= 1
    assert r.auc is None or 0 <= r.auc <= 1
    assert r.pcc is None or -1 <= r.pcc <= 1
    assert all(v >= 0 for v in r.inconsistency.values())
