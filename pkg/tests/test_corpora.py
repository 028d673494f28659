"""Synthetic corpus presets and worker accuracy profiles."""

import numpy as np
import pytest

from dqest.corpora import (
    AMT_PROFILE,
    HIGH_PROFILE,
    LOW_PROFILE,
    PROFILES,
    get_corpus,
    get_profile,
    synth_amt,
    synth_lowpred,
    synth_spam,
)
from dqest.errors import ValidationError


def test_spam_shape_and_prior():
    corpus = synth_spam()
    assert corpus.features.shape == (4601, 57)
    assert corpus.labels.shape == (4601,)
    assert set(np.unique(corpus.labels)) <= {0, 1}
    # positive prior close to the classic 39.4 percent
    assert abs(corpus.labels.mean() - 0.394) < 0.02


def test_amt_shape_and_prior():
    corpus = synth_amt()
    assert corpus.features.shape == (8000, 50)
    assert abs(corpus.labels.mean() - 0.126) < 0.02


def test_lowpred_shape_and_balance():
    corpus = synth_lowpred()
    assert corpus.features.shape == (4601, 50)
    assert abs(corpus.labels.mean() - 0.5) < 0.05


def test_presets_are_deterministic():
    a = synth_spam()
    b = synth_spam()
    assert np.array_equal(a.features, b.features)
    assert np.array_equal(a.labels, b.labels)
    assert np.array_equal(a.ids, b.ids)
    a = synth_lowpred()
    b = synth_lowpred()
    assert np.array_equal(a.features, b.features)
    assert np.array_equal(a.labels, b.labels)


def test_features_are_finite():
    for corpus in (synth_spam(), synth_amt(), synth_lowpred()):
        assert np.isfinite(corpus.features).all()


def test_get_corpus_resolves_presets():
    corpus = get_corpus("synth-spam")
    assert corpus.features.shape == (4601, 57)
    corpus = get_corpus("synth-amt")
    assert corpus.features.shape == (8000, 50)
    corpus = get_corpus("synth-lowpred")
    assert corpus.features.shape == (4601, 50)


def test_get_corpus_unknown_tag():
    with pytest.raises(ValidationError):
        get_corpus("no-such-preset")


def test_profiles():
    assert len(LOW_PROFILE) == 20
    assert len(HIGH_PROFILE) == 20
    assert len(AMT_PROFILE) == 40
    # low runs 0.61 .. 0.80 in steps of 0.01
    assert LOW_PROFILE[0] == pytest.approx(0.61)
    assert LOW_PROFILE[-1] == pytest.approx(0.80)
    steps = np.diff(np.asarray(LOW_PROFILE))
    assert np.allclose(steps, 0.01)
    # high runs 0.76 .. 0.95
    assert HIGH_PROFILE[0] == pytest.approx(0.76)
    assert HIGH_PROFILE[-1] == pytest.approx(0.95)
    for name in ("low", "high", "amt"):
        prof = get_profile(name)
        assert prof == PROFILES[name]
        assert all(0.5 < g <= 1.0 for g in prof)


def test_get_profile_unknown():
    with pytest.raises(ValidationError):
        get_profile("medium")
