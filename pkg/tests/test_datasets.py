import csv
import json

import numpy as np
import pytest

from fddlab.datasets import (
    LabelAccessError,
    SampleDomain,
    disagreement,
    gaussian_shift,
    risk,
    threshold_domains,
    two_moons,
    write_csv,
    write_descriptor,
)
from fddlab.hypotheses import LossFunction, Threshold


@pytest.mark.parametrize("c", [0.0, 0.25, 0.4])
def test_threshold_laws_match_monte_carlo(c):
    pair = threshold_domains()
    h, h2 = Threshold(0.5), Threshold(c)
    rng = np.random.default_rng(0)
    for dom in (pair.source, pair.target):
        exact, _ = disagreement(h, h2, dom)
        x = dom.sample(100_000, rng)
        mc = np.mean(h.predict(x) != h2.predict(x))
        se = np.sqrt(max(exact * (1 - exact), 1e-12) / len(x))
        assert abs(mc - exact) <= 3 * se + 1e-12


def test_threshold_risks():
    pair = threshold_domains()
    assert risk(Threshold(0.5), pair.source) == 0.0
    assert risk(Threshold(0.25), pair.source) == pytest.approx(0.25)
    assert risk(Threshold(0.25), pair.target) == pytest.approx(0.125)


def test_blinded_pair_raises_on_labels():
    pair = two_moons(30, 64, 64, seed=1).blind()
    with pytest.raises(LabelAccessError):
        _ = pair.target.y
    _ = pair.source.y  # the source stays labeled
    with pytest.raises(LabelAccessError):
        _ = threshold_domains().blind().target.labeler


def test_blinded_and_oracle_agree_on_features():
    pair = two_moons(30, 64, 64, seed=1)
    blind = pair.blind()
    assert np.array_equal(pair.target.X, blind.target.X)
    h = Threshold(0.0)
    h2 = Threshold(0.5)
    assert disagreement(h, h2, threshold_domains().target) == disagreement(h, h2, threshold_domains().blind().target)


def test_two_moons_rotation_zero_is_same_law():
    pair = two_moons(0, 2000, 2000, noise=0.1, seed=0)
    assert np.allclose(pair.source.X.mean(0), pair.target.X.mean(0), atol=0.05)


def test_two_moons_noise_zero_on_arcs():
    pair = two_moons(0, 200, 200, noise=0.0, seed=0)
    X, y = pair.source.X, pair.source.y
    r0 = np.hypot(X[y == 0, 0], X[y == 0, 1])
    r1 = np.hypot(X[y == 1, 0] - 1, X[y == 1, 1] - 0.5)
    assert np.allclose(r0, 1) and np.allclose(r1, 1)


def test_two_moons_shift_hurts_linear_model():
    from sklearn.linear_model import LogisticRegression

    pair = two_moons(30, 512, 512, seed=0)
    clf = LogisticRegression().fit(pair.source.X, pair.source.y)
    assert clf.score(pair.target.X, pair.target.y) < clf.score(pair.source.X, pair.source.y)


def test_two_moons_validation_and_determinism():
    with pytest.raises(ValueError):
        two_moons(180)
    a, b = two_moons(30, 32, 32, seed=4), two_moons(30, 32, 32, seed=4)
    assert np.array_equal(a.target.X, b.target.X)


def test_gaussian_shift_meta():
    pair = gaussian_shift(dim=3, mean_shift=[1.0, 0.0, 2.0], n=10, m=10)
    assert pair.meta["feature_kl"] == pytest.approx(2.5)
    with pytest.raises(ValueError):
        gaussian_shift(dim=2, mean_shift=[1.0, 2.0, 3.0])


def test_sample_risk_with_score_loss():
    dom = SampleDomain(np.array([[0.0], [1.0]]), np.array([0, 1]))

    class Const:
        def score(self, X):
            return np.zeros(len(X))

        def predict(self, X):
            return np.zeros(len(X), dtype=int)

    assert risk(Const(), dom, LossFunction("bounded_sigmoid_disagreement")) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        risk(Const(), dom, LossFunction("surrogate_unbounded"))


def test_csv_dump_hides_blinded_labels(tmp_path):
    pair = two_moons(30, 5, 4, seed=0).blind()
    path = tmp_path / "d.csv"
    write_csv(pair, path)
    rows = list(csv.DictReader(open(path)))
    assert len(rows) == 9
    assert all(r["y"] == "" for r in rows if r["domain"] == "target")
    assert all(r["y"] in ("0", "1") for r in rows if r["domain"] == "source")
    with pytest.raises(ValueError):
        write_csv(threshold_domains(), path)
    write_descriptor(threshold_domains(), tmp_path / "t.json")
    desc = json.load(open(tmp_path / "t.json"))
    assert desc["target"]["interval"] == [0.0, 2.0]
