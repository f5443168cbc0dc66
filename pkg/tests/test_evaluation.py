import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lqsvm.data import Dataset, separated_blobs, stratified_kfold
from lqsvm.evaluation import (
    CvFailedError,
    EvalReport,
    MethodConfig,
    accuracy,
    balanced_accuracy,
    confusion_matrix,
    fit_method,
    macro_f1,
    run_cv,
)
from lqsvm.falk import FalkParams, MajorityTrainer, QbsvmTrainer, QmsvmTrainer
from lqsvm.sampler import ExhaustiveSampler, SamplerConfig, SimulatedAnnealingSampler

sk_metrics = pytest.importorskip("sklearn.metrics")

HALF = ([0, 0, 0, 0], [0, 0, 1, 1])


# -- metric examples -------------------------------------------------------------------


def test_accuracy_examples():
    assert accuracy([0, 1, 2], [0, 1, 2]) == 1.0
    assert accuracy([1, 0], [0, 1]) == 0.0
    assert accuracy([0, 1, 1, 0], [0, 1, 1, 1]) == 0.75
    with pytest.raises(ValueError):
        accuracy([], [])
    with pytest.raises(ValueError):
        accuracy([0], [0, 1])


def test_balanced_accuracy_examples():
    assert balanced_accuracy(*HALF, 2) == 0.5
    assert balanced_accuracy([0, 1, 2], [0, 1, 2], 3) == 1.0
    # class 1 never occurs in the truth and is left out
    assert balanced_accuracy([0, 0], [0, 0], 2) == 1.0
    with pytest.raises(ValueError):
        balanced_accuracy([], [], 2)


def test_macro_f1_examples():
    assert macro_f1([0, 1, 2], [0, 1, 2], 3) == 1.0
    assert macro_f1(*HALF, 2) == pytest.approx(1 / 3, abs=1e-15)
    # class 2 appears nowhere and contributes nothing
    assert macro_f1([0, 1], [0, 1], 3) == 1.0
    with pytest.raises(ValueError):
        macro_f1([], [], 2)


def test_confusion_layout():
    cm = confusion_matrix([1, 1, 0], [0, 1, 0], 2)
    assert cm.tolist() == [[1, 1], [0, 1]]
    with pytest.raises(ValueError):
        confusion_matrix([2], [0], 2)


labels = st.lists(st.tuples(st.integers(0, 3), st.integers(0, 3)), min_size=1, max_size=60)


@settings(max_examples=200, deadline=None)
@given(labels)
def test_metrics_match_reference(pairs):
    p, t = (np.array(v) for v in zip(*pairs))
    assert accuracy(p, t) == pytest.approx(sk_metrics.accuracy_score(t, p), abs=1e-12)
    present = np.union1d(p, t)
    assert macro_f1(p, t, 4) == pytest.approx(
        sk_metrics.f1_score(t, p, labels=present, average="macro", zero_division=0), abs=1e-12)
    recalls = sk_metrics.recall_score(t, p, labels=np.unique(t), average=None, zero_division=0)
    assert balanced_accuracy(p, t, 4) == pytest.approx(recalls.mean(), abs=1e-12)
    for v in (accuracy(p, t), balanced_accuracy(p, t, 4), macro_f1(p, t, 4)):
        assert 0.0 <= v <= 1.0
    cm = confusion_matrix(p, t, 4)
    np.testing.assert_array_equal(cm.sum(axis=1), np.bincount(t, minlength=4))


# -- methods ----------------------------------------------------------------------------


def test_majority_method():
    d = Dataset(np.zeros((5, 1)), [1, 1, 0, 1, 0], 2)
    m = fit_method(MethodConfig("majority"), d, 0)
    assert m.predict(np.ones((3, 1))).tolist() == [1, 1, 1]


def test_unknown_method_kind():
    with pytest.raises(ValueError):
        fit_method(MethodConfig("forest"), separated_blobs(2, 10, 3.0, seed=0), 0)


def test_global_requires_svm_trainer():
    with pytest.raises(ValueError):
        fit_method(MethodConfig("global", MajorityTrainer()), separated_blobs(2, 10, 3.0, seed=0), 0)


def test_method_labels():
    s = ExhaustiveSampler()
    assert MethodConfig("majority").label == "majority"
    assert MethodConfig("local", QbsvmTrainer(s)).label == "local-qbsvm"
    assert MethodConfig("global", QmsvmTrainer(s), selection=True).label == "global-qmsvm-selected"
    assert MethodConfig("local", name="mine").label == "mine"


# -- cross-validation ------------------------------------------------------------------------


def test_majority_baseline_on_balanced_data():
    d = separated_blobs(3, 90, 3.0, seed=0)
    r = run_cv(d, MethodConfig("majority"), 5, seed=1)
    # every training part stays balanced, so the tie goes to class 0 in every fold
    assert r.accuracy == pytest.approx(1 / 3, abs=1e-12)


def test_identical_seeds_share_splits():
    d = separated_blobs(2, 40, 3.0, seed=0)
    a = run_cv(d, MethodConfig("majority"), 4, seed=7)
    b = run_cv(d, MethodConfig("local", MajorityTrainer(), FalkParams(k=8, k_prime=4)), 4, seed=7)
    np.testing.assert_array_equal(a.fold_of, b.fold_of)
    assert stratified_kfold(d, 4, 7) == stratified_kfold(d, 4, 7)


def test_leave_one_out():
    d = separated_blobs(2, 12, 3.0, seed=2)
    r = run_cv(d, MethodConfig("local", MajorityTrainer(), FalkParams(k=4, k_prime=2)), 12, seed=0)
    assert r.predictions.size == 12 and (r.predictions >= 0).all()
    assert sorted(r.fold_of.tolist()) == list(range(12))


def test_pooled_accuracy_and_bounds():
    d = separated_blobs(3, 61, 1.5, seed=3)
    r = run_cv(d, MethodConfig("local", MajorityTrainer(), FalkParams(k=6, k_prime=3)), 7, seed=0)
    cm = r.confusion
    assert r.accuracy == np.trace(cm) / cm.sum()
    np.testing.assert_array_equal(cm.sum(axis=1), np.bincount(d.labels, minlength=3))
    assert abs(r.accuracy - r.mean_fold_accuracy) <= d.class_count * r.folds / d.n


def test_cv_with_svm_trainers():
    d = separated_blobs(2, 40, 6.0, seed=4)
    tr = QbsvmTrainer(ExhaustiveSampler(keep=5), K=1, S=5)
    r = run_cv(d, MethodConfig("local", tr, FalkParams(k=8, k_prime=6)), 4, seed=0)
    assert r.accuracy >= 0.9
    assert all("centers" in s for s in r.fold_stats)
    g = run_cv(d, MethodConfig("global", tr, FalkParams(k=8, k_prime=6)), 4, seed=0)
    assert g.fold_stats[0]["slices"] == 4


def test_cv_global_qmsvm():
    d = separated_blobs(3, 45, 6.0, seed=5)
    sa = SimulatedAnnealingSampler(SamplerConfig(num_reads=50, sweeps_per_read=30))
    tr = QmsvmTrainer(sa, K=1, S=10)
    r = run_cv(d, MethodConfig("global", tr, FalkParams(k=9, k_prime=6)), 3, seed=0)
    assert r.fold_stats[0]["local_size"] == 9
    assert r.accuracy >= 0.8


def _failing_method():
    class Tr:
        kernel = None

        def fit(self, local, seed):
            raise RuntimeError("sampler unavailable")

    return MethodConfig("local", Tr(), FalkParams(k=4, k_prime=2))


def test_all_folds_failing_raises():
    d = separated_blobs(2, 20, 0.5, seed=0)
    with pytest.raises(CvFailedError) as info:
        run_cv(d, _failing_method(), 2, seed=0)
    assert isinstance(info.value.__cause__, Exception)


def test_partial_report(monkeypatch):
    import lqsvm.evaluation as ev

    d = separated_blobs(2, 30, 3.0, seed=1)
    real = ev.fit_method

    def flaky(cfg, train, seed):
        if seed == ev.derive_seed(0, 1):
            raise RuntimeError("fold down")
        return real(cfg, train, seed)

    monkeypatch.setattr(ev, "fit_method", flaky)
    r = run_cv(d, MethodConfig("majority"), 3, seed=0)
    assert r.partial and list(r.errors) == [1]
    assert (r.predictions[r.fold_of == 1] == -1).all()
    assert r.fold_accuracy[1] is None
    assert "error_fold_1: RuntimeError: fold down" in r.to_text()
    assert r.to_dict()["partial"] is True


def test_report_serialization_stable():
    d = separated_blobs(2, 30, 3.0, seed=2)
    r1 = run_cv(d, MethodConfig("majority"), 3, seed=5)
    r2 = run_cv(d, MethodConfig("majority"), 3, seed=5)
    assert r1.to_json() == r2.to_json() and r1.to_text() == r2.to_text()
    for line in r1.to_text().splitlines():
        assert ": " in line
    assert isinstance(r1, EvalReport)
