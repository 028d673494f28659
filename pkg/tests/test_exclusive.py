"""Exclusive-pool MDE: share assignment and training augmentation."""

import numpy as np
import pytest

from dqest.data import GroundTruthPool
from dqest.errors import ValidationError
from dqest.exclusive import assign_shares, fit_mde_exclusive, mde_exclusive
from dqest.learners import ClassifierConfig
from dqest.mde import MdeConfig, assess_worker
from helpers import make_cohort, make_exclusive_pool


def _setup(seed=0, accuracies=(0.85, 0.75), n=30, pool_size=12):
    rng = np.random.default_rng(seed)
    concept = rng.normal(size=4)
    workers = make_cohort(rng, accuracies=accuracies, n=n, t=0, concept=concept)
    pool = make_exclusive_pool(rng, size=pool_size, concept=concept)
    return workers, pool


class TestAssignShares:
    def test_balanced_even(self):
        workers, pool = _setup(pool_size=10)
        shares = assign_shares(pool, workers, np.random.default_rng(1))
        assert [len(s) for s in shares] == [5, 5]

    def test_balanced_uneven(self):
        rng = np.random.default_rng(2)
        workers = make_cohort(rng, accuracies=(0.7, 0.8, 0.9), t=0)
        pool = make_exclusive_pool(rng, size=10)
        shares = assign_shares(pool, workers, np.random.default_rng(3))
        assert sorted(len(s) for s in shares) == [3, 3, 4]
        assert max(len(s) for s in shares) - min(len(s) for s in shares) <= 1

    def test_partition_property(self):
        workers, pool = _setup(pool_size=17)
        shares = assign_shares(pool, workers, np.random.default_rng(4))
        flat = np.concatenate(shares)
        assert sorted(flat.tolist()) == list(range(17))
        for s in shares:
            assert np.array_equal(s, np.sort(s))

    def test_empty_pool(self):
        workers, pool = _setup()
        empty = GroundTruthPool(
            instance_ids=pool.instance_ids[:0],
            features=pool.features[:0],
            labels=pool.labels[:0],
            origins=pool.origins[:0],
            exclusive=True,
        )
        with pytest.raises(ValidationError):
            assign_shares(empty, workers, 0)

    def test_deterministic(self):
        workers, pool = _setup(pool_size=15)
        a = assign_shares(pool, workers, np.random.default_rng(5))
        b = assign_shares(pool, workers, np.random.default_rng(5))
        for x, y in zip(a, b):
            assert np.array_equal(x, y)


class TestFitExclusive:
    def test_needs_two_workers(self):
        workers, pool = _setup()
        with pytest.raises(ValidationError):
            fit_mde_exclusive(
                workers[:1], pool, MdeConfig(), ClassifierConfig(), 0
            )

    def test_pool_must_be_exclusive(self):
        workers, pool = _setup()
        shared = GroundTruthPool(
            instance_ids=pool.instance_ids,
            features=pool.features,
            labels=pool.labels,
            origins=pool.origins,
            exclusive=False,
        )
        with pytest.raises(ValidationError):
            fit_mde_exclusive(workers, shared, MdeConfig(), ClassifierConfig(), 0)

    def test_overlap_rejected(self):
        workers, pool = _setup()
        overlapping = GroundTruthPool(
            instance_ids=np.concatenate(
                [pool.instance_ids[:-1], workers[0].instance_ids[:1]]
            ),
            features=pool.features,
            labels=pool.labels,
            origins=pool.origins,
            exclusive=True,
        )
        with pytest.raises(ValidationError):
            fit_mde_exclusive(
                workers, overlapping, MdeConfig(), ClassifierConfig(), 0
            )

    def test_origins_rewritten_to_recipients(self):
        workers, pool = _setup(pool_size=10)
        model = fit_mde_exclusive(
            workers,
            pool,
            MdeConfig(c=2, n=11, intv=0.05),
            ClassifierConfig(tree_count=10),
            np.random.default_rng(6),
        )
        origin = model.bank.training_origin
        pool_ids = pool.instance_ids.tolist()
        assert all(iid in origin for iid in pool_ids)
        recipients = [origin[iid] for iid in pool_ids]
        counts = {wid: recipients.count(wid) for wid in (0, 1)}
        assert counts == {0: 5, 1: 5}


class TestMdeExclusive:
    def test_estimates_shape_and_bounds(self):
        workers, pool = _setup(pool_size=14)
        ests = mde_exclusive(
            workers,
            pool,
            MdeConfig(c=2, n=11, intv=0.05),
            ClassifierConfig(tree_count=10),
            rng=7,
        )
        assert len(ests) == 2
        assert all(0.5 <= v <= 1.0 for v in ests)

    def test_assesses_original_workers(self):
        workers, pool = _setup(pool_size=14)
        mde_config = MdeConfig(c=2, n=11, intv=0.05)
        clf_config = ClassifierConfig(tree_count=10)
        ests = mde_exclusive(workers, pool, mde_config, clf_config, rng=9)
        model = fit_mde_exclusive(workers, pool, mde_config, clf_config, 9)
        expect = [assess_worker(model, w) for w in workers]
        assert ests == expect

    def test_deterministic(self):
        workers, pool = _setup(pool_size=14)
        kwargs = dict(
            mde_config=MdeConfig(c=2, n=11, intv=0.05),
            classifier_config=ClassifierConfig(tree_count=10),
        )
        assert mde_exclusive(workers, pool, rng=3, **kwargs) == mde_exclusive(
            workers, pool, rng=3, **kwargs
        )

    @pytest.mark.parametrize("seed", [30, 31, 32, 33])
    def test_ranking_tracks_accuracy(self, seed):
        rng = np.random.default_rng(seed)
        concept = rng.normal(size=4)
        workers = make_cohort(
            rng, accuracies=(0.95, 0.9, 0.55), n=60, d=4, t=0, concept=concept
        )
        pool = make_exclusive_pool(rng, size=30, concept=concept)
        ests = mde_exclusive(
            workers,
            pool,
            MdeConfig(c=3, n=21, intv=0.025),
            ClassifierConfig(tree_count=25, seed=2),
            rng=11,
        )
        assert ests[0] > ests[2]
        assert ests[1] > ests[2]
