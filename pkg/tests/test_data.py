"""Data containers, pool assembly, loaders, and sampling utilities."""

import numpy as np
import pytest

from dqest.data import (
    Corpus,
    GroundTruthPool,
    WorkerDecisionSet,
    build_bow,
    build_pool,
    load_corpus,
    partition_workers,
    percentile_threshold,
    sample_ground_truth,
)
from dqest.errors import DataFormatError, ValidationError
from helpers import make_cohort


def _tiny_corpus(n=10, d=3, seed=0):
    rng = np.random.default_rng(seed)
    feats = rng.normal(size=(n, d))
    labels = rng.integers(0, 2, size=n).astype(np.int8)
    return Corpus(features=feats, labels=labels, ids=np.arange(n, dtype=np.int64))


class TestContainers:
    def test_corpus_accessors(self):
        corpus = _tiny_corpus(n=7, d=4)
        assert len(corpus) == 7
        assert corpus.n_features == 4
        inst = corpus.instance(3)
        assert inst.id == 3
        assert inst.true_label == corpus.labels[3]
        assert np.array_equal(inst.features, corpus.features[3])

    def test_worker_accessors(self):
        rng = np.random.default_rng(1)
        (worker,) = make_cohort(rng, accuracies=(0.8,) * 1 + (0.9,))[:1]
        assert worker.n == 24
        assert worker.t == 0
        flagged = sample_ground_truth(worker, 5, np.random.default_rng(2))
        assert flagged.t == 5
        rec = flagged.record(0)
        assert rec.instance.id == worker.instance_ids[0]
        assert rec.decision == worker.decisions[0]
        recs = list(flagged.records())
        assert len(recs) == flagged.n
        assert sum(r.gt_known for r in recs) == 5


class TestBuildPool:
    def test_collects_flagged_records(self):
        rng = np.random.default_rng(7)
        workers = make_cohort(rng, accuracies=(0.7, 0.8, 0.9), t=4)
        pool = build_pool(workers)
        assert len(pool) == 12
        assert pool.exclusive is False
        for w in workers:
            mask = pool.origins == w.worker_id
            assert mask.sum() == 4
            assert set(pool.instance_ids[mask]) <= set(w.instance_ids)
        # pool labels agree with the owning worker's truth
        for i in range(len(pool)):
            w = workers[pool.origins[i]]
            row = int(np.where(w.instance_ids == pool.instance_ids[i])[0][0])
            assert pool.labels[i] == w.true_labels[row]

    def test_skips_unflagged_workers(self):
        rng = np.random.default_rng(8)
        workers = make_cohort(rng, accuracies=(0.7, 0.8, 0.9), t=3)
        workers[1] = sample_ground_truth(workers[1], 2, rng)
        bare = WorkerDecisionSet(
            worker_id=workers[2].worker_id,
            instance_ids=workers[2].instance_ids,
            features=workers[2].features,
            true_labels=workers[2].true_labels,
            decisions=workers[2].decisions,
            gt_known=np.zeros(workers[2].n, dtype=bool),
        )
        pool = build_pool([workers[0], workers[1], bare])
        assert len(pool) == 5
        assert set(pool.origins) == {0, 1}

    def test_flagged_without_label_raises(self):
        rng = np.random.default_rng(9)
        (worker, other) = make_cohort(rng, accuracies=(0.7, 0.8), t=3)
        labels = worker.true_labels.copy()
        labels[worker.gt_known] = -1
        broken = WorkerDecisionSet(
            worker_id=worker.worker_id,
            instance_ids=worker.instance_ids,
            features=worker.features,
            true_labels=labels,
            decisions=worker.decisions,
            gt_known=worker.gt_known,
        )
        with pytest.raises(ValidationError):
            build_pool([broken, other])

    def test_empty_pool(self):
        rng = np.random.default_rng(10)
        workers = make_cohort(rng, accuracies=(0.7, 0.8), t=0)
        pool = build_pool(workers)
        assert len(pool) == 0
        assert pool.features.shape == (0, workers[0].features.shape[1])


class TestPartition:
    def test_sizes_and_disjointness(self):
        corpus = _tiny_corpus(n=23, d=2)
        parts = partition_workers(corpus, 4, np.random.default_rng(0))
        assert len(parts) == 4
        assert all(len(p) == 5 for p in parts)  # floor(23 / 4)
        flat = np.concatenate(parts)
        assert len(set(flat.tolist())) == len(flat)
        assert set(flat.tolist()) <= set(range(23))

    def test_deterministic_by_seed(self):
        corpus = _tiny_corpus(n=30, d=2)
        a = partition_workers(corpus, 3, np.random.default_rng(5))
        b = partition_workers(corpus, 3, np.random.default_rng(5))
        for x, y in zip(a, b):
            assert np.array_equal(x, y)
        c = partition_workers(corpus, 3, np.random.default_rng(6))
        assert any(not np.array_equal(x, y) for x, y in zip(a, c))

    def test_domain(self):
        corpus = _tiny_corpus(n=6)
        with pytest.raises(ValidationError):
            partition_workers(corpus, 1, 0)
        with pytest.raises(ValidationError):
            partition_workers(corpus, 7, 0)


class TestSampleGroundTruth:
    def test_exact_count_and_fresh_mask(self):
        rng = np.random.default_rng(11)
        (worker, _) = make_cohort(rng, accuracies=(0.7, 0.8), t=6)
        old = worker.gt_known.copy()
        resampled = sample_ground_truth(worker, 2, np.random.default_rng(3))
        assert resampled.t == 2
        # prior flags discarded, not unioned
        assert not np.array_equal(resampled.gt_known, old)
        assert resampled.gt_known.sum() == 2
        # original untouched
        assert np.array_equal(worker.gt_known, old)

    def test_decisions_unchanged(self):
        rng = np.random.default_rng(12)
        (worker, _) = make_cohort(rng, accuracies=(0.6, 0.8))
        flagged = sample_ground_truth(worker, worker.n, np.random.default_rng(0))
        assert np.array_equal(flagged.decisions, worker.decisions)
        assert flagged.t == worker.n

    def test_domain(self):
        rng = np.random.default_rng(13)
        (worker, _) = make_cohort(rng, accuracies=(0.7, 0.8))
        with pytest.raises(ValidationError):
            sample_ground_truth(worker, 0, 0)
        with pytest.raises(ValidationError):
            sample_ground_truth(worker, worker.n + 1, 0)

    def test_missing_truth_raises(self):
        rng = np.random.default_rng(14)
        (worker, _) = make_cohort(rng, accuracies=(0.7, 0.8))
        labels = np.full(worker.n, -1, dtype=np.int8)
        blind = WorkerDecisionSet(
            worker_id=worker.worker_id,
            instance_ids=worker.instance_ids,
            features=worker.features,
            true_labels=labels,
            decisions=worker.decisions,
            gt_known=np.zeros(worker.n, dtype=bool),
        )
        with pytest.raises(ValidationError):
            sample_ground_truth(blind, 3, 0)


class TestPercentileThreshold:
    def test_nearest_rank(self):
        feats = np.arange(10, dtype=np.float64).reshape(10, 1)
        corpus = Corpus(
            features=feats,
            labels=np.zeros(10, dtype=np.int8),
            ids=np.arange(10, dtype=np.int64),
        )
        # ceil(0.9 * 10) = 9 -> ninth smallest value
        assert percentile_threshold(corpus, 0, 0.9) == 8.0
        assert percentile_threshold(corpus, 0, 0.05) == 0.0
        assert percentile_threshold(corpus, 0, 0.55) == 5.0

    def test_unsorted_input(self):
        feats = np.array([[5.0], [1.0], [9.0], [3.0]])
        corpus = Corpus(
            features=feats,
            labels=np.zeros(4, dtype=np.int8),
            ids=np.arange(4, dtype=np.int64),
        )
        assert percentile_threshold(corpus, 0, 0.5) == 3.0

    def test_domain(self):
        corpus = _tiny_corpus(n=5, d=2)
        with pytest.raises(ValidationError):
            percentile_threshold(corpus, 0, 0.0)
        with pytest.raises(ValidationError):
            percentile_threshold(corpus, 0, 1.0)
        with pytest.raises(ValidationError):
            percentile_threshold(corpus, 2, 0.5)

    def test_constant_feature_warns(self, caplog):
        feats = np.ones((6, 1))
        corpus = Corpus(
            features=feats,
            labels=np.zeros(6, dtype=np.int8),
            ids=np.arange(6, dtype=np.int64),
        )
        with caplog.at_level("WARNING"):
            thr = percentile_threshold(corpus, 0, 0.9)
        assert thr == 1.0
        assert any("constant" in rec.message for rec in caplog.records)


class TestCsvCorpus:
    def _write(self, tmp_path, text, name="c.csv"):
        path = tmp_path / name
        path.write_text(text, encoding="utf8")
        return str(path)

    def test_roundtrip(self, tmp_path):
        path = self._write(
            tmp_path,
            "f0,f1,label\n0.5,-1.25,1\n2.0,0.0,0\n1.5,3.5,1\n",
        )
        corpus = load_corpus(path)
        assert len(corpus) == 3
        assert corpus.n_features == 2
        assert np.array_equal(corpus.labels, np.array([1, 0, 1], dtype=np.int8))
        assert corpus.features[0, 1] == -1.25

    def test_header_errors(self, tmp_path):
        with pytest.raises(DataFormatError):
            load_corpus(self._write(tmp_path, ""))
        with pytest.raises(DataFormatError):
            load_corpus(self._write(tmp_path, "f0,f1,target\n1,2,0\n"))
        with pytest.raises(DataFormatError):
            load_corpus(self._write(tmp_path, "x,y,label\n1,2,0\n"))

    def test_row_errors(self, tmp_path):
        with pytest.raises(DataFormatError):
            load_corpus(self._write(tmp_path, "f0,label\n1.0\n"))
        with pytest.raises(DataFormatError):
            load_corpus(self._write(tmp_path, "f0,label\nabc,1\n"))
        with pytest.raises(ValidationError):
            load_corpus(self._write(tmp_path, "f0,label\n1.0,2\n"))
        with pytest.raises(ValidationError):
            load_corpus(self._write(tmp_path, "f0,label\nnan,1\n"))

    def test_unknown_format(self, tmp_path):
        path = self._write(tmp_path, "f0,label\n1,0\n")
        with pytest.raises(ValidationError):
            load_corpus(path, format="parquet")


class TestBow:
    def test_presence_indicators(self):
        docs = [
            ("the cat sat", 0),
            ("the dog sat sat", 1),
            ("a cat", 0),
        ]
        corpus = build_bow(docs, vocabulary_size=3)
        assert len(corpus) == 3
        assert corpus.n_features == 3
        # top-3 by count: "sat" (3), "cat" (2), "the" (2); ties lexicographic
        assert set(np.unique(corpus.features)) <= {0.0, 1.0}
        # repeated token still yields a presence bit, not a count
        assert corpus.features.max() == 1.0
        assert np.array_equal(corpus.labels, np.array([0, 1, 0], dtype=np.int8))

    def test_vocab_cap_and_tiebreak(self):
        docs = [("b a", 0), ("b c", 1)]
        # counts: b=2, a=1, c=1; cap 2 keeps b plus the lexicographically
        # smaller of the tied pair
        corpus = build_bow(docs, vocabulary_size=2)
        assert corpus.n_features == 2
        # doc 0 contains both kept tokens ("b", "a"); doc 1 only "b"
        assert corpus.features[0].sum() == 2.0
        assert corpus.features[1].sum() == 1.0

    def test_tokenization_lowercase_alnum(self):
        docs = [("Hello, WORLD! 42x", 1), ("hello world", 0)]
        corpus = build_bow(docs, vocabulary_size=10)
        # "Hello" and "hello" collapse; punctuation splits tokens
        assert corpus.n_features == 3  # hello, world, 42x
        assert np.array_equal(corpus.features[0], np.ones(3))

    def test_domain(self):
        with pytest.raises(ValidationError):
            build_bow([], 5)
        with pytest.raises(ValidationError):
            build_bow([("x", 0)], 0)
        with pytest.raises(ValidationError):
            build_bow([("x", 2)], 5)


class TestTextLoader:
    def test_text_format(self, tmp_path):
        path = tmp_path / "docs.txt"
        path.write_text("1\tspam offer now\n0\tmeeting at noon\n", encoding="utf8")
        corpus = load_corpus(str(path), format="text", vocabulary_size=10)
        assert len(corpus) == 2
        assert np.array_equal(corpus.labels, np.array([1, 0], dtype=np.int8))

    def test_text_errors(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("no tab here\n", encoding="utf8")
        with pytest.raises(DataFormatError):
            load_corpus(str(path), format="text")
        path.write_text("7\tsome text\n", encoding="utf8")
        with pytest.raises(ValidationError):
            load_corpus(str(path), format="text")
