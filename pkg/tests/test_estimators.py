import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from treedyn.errors import ConfigError
from treedyn.estimators import FinitarityReporter, KakutaniClassifier, KoopmanEmbedding
from treedyn.measures import bernoulli, haar


def test_kakutani_classifier():
    clf = KakutaniClassifier(horizon=64).fit(haar())
    pred = clf.predict([haar(), bernoulli("1/4", "3/4"), ("1/2", "1/2")])
    assert list(pred) == ["Equivalent", "Orthogonal", "Equivalent"]
    assert clf.evidence([bernoulli("1/4", "3/4")]) == ["ClosedForm"]
    assert clone(clf).get_params() == {"horizon": 64, "log_threshold": clf.log_threshold}


def test_kakutani_unfitted():
    with pytest.raises(NotFittedError):
        KakutaniClassifier().predict([haar()])


def test_finitarity_reporter(G, B):
    rep = FinitarityReporter(measure=B, horizon=6).fit([G.evaluate("b"), G.evaluate("a")])
    assert rep.verdicts()[0] == (True, "ClosedForm")
    X = rep.transform([G.evaluate("b")])
    assert X.shape == (1, 6)
    assert np.all(X >= 0)


def test_koopman_embedding():
    emb = KoopmanEmbedding(group="grigorchuk", measure=("2/3", "1/3"), depth=3).fit()
    assert "a" in emb.matrices_ and "b" in emb.incompatible_
    Z = emb.transform(np.ones((2, 8)))
    assert np.allclose((Z ** 2).sum(axis=1), 1.0)
    assert emb.represent("a").shape == (8, 8)
    val, err = emb.coefficient("b", np.ones(8), np.ones(8))
    assert 0 < val <= 1 and err < 1e-12


def test_koopman_embedding_validates():
    emb = KoopmanEmbedding(depth=2).fit()
    with pytest.raises(ConfigError):
        emb.transform(np.ones((1, 5)))
    with pytest.raises(ConfigError):
        KoopmanEmbedding(group="nosuch").fit()
