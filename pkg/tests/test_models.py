"""Model family tests: similarity scoring, pair building, training.

The pair builder is checked against brute-force enumeration, and the joint
encoder+head gradient against finite differences of the pair loss.
"""

import itertools

import numpy as np
import pytest

from siamstream import models, nn
from siamstream.errors import InsufficientDataError, NoPredictionError
from siamstream.memory import MultiQueue


def fresh_siamese(dim=2, hidden=(8, 8), seed=0):
    return models.init_siamese(dim, hidden, seed=seed)


def filled_memory(data, k, cap):
    mq = MultiQueue(k, cap)
    for x, y in data:
        mq.append(np.asarray(x, dtype=float), y)
    return mq


class TestPairSimilarity:
    def test_symmetric(self):
        m = fresh_siamese()
        a, b = np.array([1.0, 2.0]), np.array([-0.5, 3.0])
        assert models.pair_similarity(m, a, b) == pytest.approx(models.pair_similarity(m, b, a), abs=1e-12)

    def test_identical_inputs_score_half_on_fresh_model(self):
        # zero embedding difference and zero head bias meet at sigmoid(0)
        m = fresh_siamese()
        x = np.array([0.3, -1.2])
        assert models.pair_similarity(m, x, x) == pytest.approx(0.5, abs=1e-12)

    def test_open_interval(self):
        m = fresh_siamese(seed=3)
        rng = np.random.default_rng(0)
        for _ in range(20):
            s = models.pair_similarity(m, rng.normal(size=2), rng.normal(size=2))
            assert 0.0 < s < 1.0


class TestSiamesePrediction:
    def test_all_empty_raises(self):
        m = fresh_siamese()
        mq = MultiQueue(3, 2)
        with pytest.raises(NoPredictionError):
            models.siamese_predict(m, mq, np.zeros(2))

    def test_single_nonempty_queue_wins(self):
        m = fresh_siamese()
        mq = filled_memory([((1.0, 1.0), 2)], 3, 2)
        predicted, means = models.siamese_predict(m, mq, np.zeros(2))
        assert predicted == 2
        assert set(means) == {2}

    def test_means_match_pairwise_scores(self):
        m = fresh_siamese(seed=5)
        data = [((0.0, 0.0), 1), ((1.0, 0.5), 1), ((4.0, 4.0), 2), ((5.0, 3.0), 2)]
        mq = filled_memory(data, 2, 3)
        x = np.array([0.5, 0.2])
        _, means = models.siamese_predict(m, mq, x)
        for c in (1, 2):
            expected = np.mean([models.pair_similarity(m, x, np.asarray(v))
                                for v, y in data if y == c])
            assert means[c] == pytest.approx(expected, abs=1e-12)

    def test_tie_breaks_to_smallest_class(self):
        m = fresh_siamese()
        m.head.weights[0][:] = 0.0  # all similarities collapse to 0.5
        mq = filled_memory([((0.0, 1.0), 1), ((2.0, 2.0), 2), ((3.0, 3.0), 3)], 3, 2)
        predicted, means = models.siamese_predict(m, mq, np.ones(2))
        assert predicted == 1
        assert means[1] == means[2] == means[3] == pytest.approx(0.5)

    def test_criterion_is_max_similarity_in_predicted_queue(self):
        m = fresh_siamese(seed=9)
        data = [((0.0, 0.0), 1), ((1.0, 0.5), 1), ((0.2, 0.1), 1), ((4.0, 4.0), 2)]
        mq = filled_memory(data, 2, 3)
        x = np.array([0.4, 0.3])
        v = models.siamese_criterion(m, mq, x, 1)
        expected = max(models.pair_similarity(m, x, np.asarray(vv)) for vv, y in data if y == 1)
        assert v == pytest.approx(expected, abs=1e-12)

    def test_criterion_empty_queue_raises(self):
        m = fresh_siamese()
        mq = filled_memory([((1.0, 1.0), 1)], 2, 2)
        with pytest.raises(NoPredictionError):
            models.siamese_criterion(m, mq, np.zeros(2), 2)

    def test_embedding_cache_tracks_training(self):
        # scores must change after training even though embeddings are cached
        m = fresh_siamese(seed=2)
        data = [((0.0, 0.0), 1), ((0.5, 0.5), 1), ((5.0, 5.0), 2), ((5.5, 4.5), 2)]
        mq = filled_memory(data, 2, 2)
        x = np.array([0.1, 0.1])
        before = models.siamese_predict(m, mq, x)[1]
        models.siamese_train(m, mq, batch_size=8, seed=0)
        after = models.siamese_predict(m, mq, x)[1]
        assert before != after


def brute_force_pairs(mq):
    items = [(tuple(map(float, x)), y) for x, y in mq.snapshot()]
    pos, neg = set(), set()
    for (xa, ya), (xb, yb) in itertools.combinations(items, 2):
        pair = frozenset((xa, xb)) if xa != xb else (xa, xb)
        (pos if ya == yb else neg).add(pair)
    return pos, neg


def batch_pair_sets(batch):
    pos, neg = set(), set()
    for l, r, y in zip(batch.left, batch.right, batch.labels):
        tl, tr = tuple(map(float, l)), tuple(map(float, r))
        pair = frozenset((tl, tr)) if tl != tr else (tl, tr)
        (pos if y == 1.0 else neg).add(pair)
    return pos, neg


class TestBuildPairs:
    def test_counts_two_classes_two_each(self):
        mq = filled_memory([((0.0, 0.0), 1), ((1.0, 0.0), 1), ((0.0, 1.0), 2), ((1.0, 1.0), 2)], 2, 2)
        batch = models.build_pairs(mq, seed=0)
        assert int(batch.labels.sum()) == 2
        assert len(batch) == 4

    def test_counts_full_ten_by_ten(self):
        rng = np.random.default_rng(1)
        mq = MultiQueue(10, 10)
        for c in range(1, 11):
            for _ in range(10):
                mq.append(rng.normal(size=2), c)
        batch = models.build_pairs(mq, seed=0)
        assert int(batch.labels.sum()) == 450
        assert len(batch) == 900

    def test_single_example_raises(self):
        mq = filled_memory([((1.0, 1.0), 1)], 2, 2)
        with pytest.raises(InsufficientDataError):
            models.build_pairs(mq, seed=0)

    def test_no_positives_raises(self):
        mq = filled_memory([((1.0, 1.0), 1), ((2.0, 2.0), 2)], 2, 2)
        with pytest.raises(InsufficientDataError):
            models.build_pairs(mq, seed=0)

    def test_no_negatives_raises(self):
        mq = filled_memory([((1.0, 1.0), 1), ((2.0, 2.0), 1)], 2, 2)
        with pytest.raises(InsufficientDataError):
            models.build_pairs(mq, seed=0)

    def test_deterministic_given_seed(self):
        rng = np.random.default_rng(3)
        mq = MultiQueue(3, 4)
        for c in (1, 1, 1, 2, 2, 3, 3, 3, 3):
            mq.append(rng.normal(size=2), c)
        a = models.build_pairs(mq, seed=7)
        b = models.build_pairs(mq, seed=7)
        assert np.array_equal(a.left, b.left) and np.array_equal(a.right, b.right)

    def test_against_brute_force(self):
        # positives equal the full same-class enumeration whenever negatives
        # are plentiful; when negatives are the scarce side the positives are
        # a downsampled subset instead. Sides always end up balanced.
        rng = np.random.default_rng(99)
        checked_equal = 0
        for trial in range(200):
            k = int(rng.integers(2, 5))
            cap = int(rng.integers(2, 6))
            mq = MultiQueue(k, cap)
            counts = rng.integers(0, cap + 1, size=k)
            if (counts >= 2).sum() == 0 or (counts > 0).sum() < 2:
                counts[:2] = (2, 1)
            for c in range(k):
                for _ in range(int(counts[c])):
                    mq.append(rng.normal(size=2), c + 1)
            batch = models.build_pairs(mq, rng)
            got_pos, got_neg = batch_pair_sets(batch)
            ref_pos, ref_neg = brute_force_pairs(mq)
            n_pos = int(batch.labels.sum())
            assert n_pos == len(batch) - n_pos  # balanced
            assert got_neg <= ref_neg
            assert got_pos <= ref_pos
            if len(ref_neg) >= len(ref_pos):
                assert got_pos == ref_pos
                checked_equal += 1
        assert checked_equal > 100  # the equality branch dominates the sweep


class TestSiameseTraining:
    def separable_memory(self, seed=0):
        rng = np.random.default_rng(seed)
        mq = MultiQueue(3, 3)
        centers = {1: (0.0, 0.0), 2: (8.0, 0.0), 3: (0.0, 8.0)}
        for c, (cx, cy) in centers.items():
            for _ in range(3):
                mq.append(np.array([cx, cy]) + rng.normal(0.0, 0.3, size=2), c)
        return mq, centers

    def test_returns_pre_update_cost(self):
        m = fresh_siamese(seed=1)
        mq, _ = self.separable_memory()
        batch = models.build_pairs(mq, np.random.default_rng(42))
        expected = models.pair_cost(m, batch)
        got = models.siamese_train(m, mq, batch_size=8, seed=42)
        assert got == pytest.approx(expected, abs=1e-12)

    def test_identical_seeds_identical_parameters(self):
        mq, _ = self.separable_memory()
        nets = [fresh_siamese(seed=4) for _ in range(2)]
        for m in nets:
            models.siamese_train(m, mq, batch_size=8, seed=13)
        for wa, wb in zip(nets[0].encoder.weights, nets[1].encoder.weights):
            assert np.array_equal(wa, wb)
        assert np.array_equal(nets[0].head.weights[0], nets[1].head.weights[0])

    def test_cost_driven_down(self):
        m = fresh_siamese(seed=2)
        mq, _ = self.separable_memory()
        first = models.siamese_train(m, mq, batch_size=8, seed=0)
        cost = first
        for i in range(200):
            cost = models.siamese_train(m, mq, batch_size=8, seed=i + 1)
        assert cost < 0.1 < first

    def test_heldout_classification_converges(self):
        m = fresh_siamese(seed=6)
        mq, centers = self.separable_memory(seed=1)
        rng = np.random.default_rng(5)
        heldout = [(np.array(cxy) + rng.normal(0.0, 0.3, size=2), c)
                   for c, cxy in centers.items() for _ in range(10)]
        for i in range(300):
            models.siamese_train(m, mq, batch_size=8, seed=i)
            if all(models.siamese_predict(m, mq, x)[0] == y for x, y in heldout):
                break
        assert all(models.siamese_predict(m, mq, x)[0] == y for x, y in heldout)

    def test_joint_gradient_matches_finite_differences(self):
        m = fresh_siamese(dim=3, hidden=(5,), seed=11)
        rng = np.random.default_rng(2)
        left = rng.normal(size=(6, 3))
        right = rng.normal(size=(6, 3))
        labels = rng.integers(0, 2, size=6).astype(float)

        def total_cost():
            return models.pair_cost(m, models.PairBatch(left, right, labels))

        enc_grads, head_grads = models.pair_gradients(m, left, right, labels)
        h = 1e-6
        worst = 0.0
        for net, grads in ((m.encoder, enc_grads), (m.head, head_grads)):
            for i in range(len(net.weights)):
                for arr, g in ((net.weights[i], grads[i][0]), (net.biases[i], grads[i][1])):
                    for idx in np.ndindex(arr.shape):
                        arr[idx] += h
                        up = total_cost()
                        arr[idx] -= 2 * h
                        down = total_cost()
                        arr[idx] += h
                        fd = (up - down) / (2 * h)
                        denom = max(abs(fd), abs(g[idx]), 1e-4)
                        worst = max(worst, abs(fd - g[idx]) / denom)
        assert worst < 1e-4


class TestStandardModel:
    def test_probabilities_and_confidence(self):
        m = models.init_standard(2, 4, (8,), seed=0)
        c, p, h = models.standard_predict(m, np.array([0.3, -0.7]))
        assert p.shape == (4,)
        assert p.sum() == pytest.approx(1.0, abs=1e-9)
        assert h == pytest.approx(p.max())
        assert c == int(np.argmax(p)) + 1

    def test_uniform_tie_predicts_class_one(self):
        m = models.init_standard(2, 4, (8,), seed=0)
        m.net.weights[-1][:] = 0.0
        m.net.biases[-1][:] = 0.0
        c, p, h = models.standard_predict(m, np.array([1.0, 2.0]))
        assert c == 1
        assert h == pytest.approx(0.25)

    def test_train_one_reports_pre_update_cost(self):
        m = models.init_standard(2, 3, (8,), seed=1)
        x = np.array([0.5, 0.5])
        _, p, _ = models.standard_predict(m, x)
        expected = -np.log(p[1])
        assert models.standard_train_one(m, x, 2) == pytest.approx(expected, abs=1e-9)

    def test_train_on_memory_pre_update_cost_and_progress(self):
        m = models.init_standard(2, 2, (8,), seed=3)
        mq = filled_memory([((0.0, 0.0), 1), ((0.1, 0.2), 1), ((5.0, 5.0), 2), ((5.2, 4.8), 2)], 2, 3)
        x, labels = mq.stacked()
        expected = nn.loss(nn.CATEGORICAL, nn.forward(m.net, x).output, nn.one_hot(labels, 2))
        got = models.standard_train_on_memory(m, mq, batch_size=4, seed=0)
        assert got == pytest.approx(expected, abs=1e-12)
        cost = got
        for i in range(150):
            cost = models.standard_train_on_memory(m, mq, batch_size=4, seed=i + 1)
        assert cost < 0.1

    def test_train_on_empty_memory_raises(self):
        m = models.init_standard(2, 2, (8,), seed=0)
        with pytest.raises(InsufficientDataError):
            models.standard_train_on_memory(m, MultiQueue(2, 3), batch_size=4, seed=0)


class TestInputSpaceCriterion:
    def test_parallel_vector_scores_one(self):
        mq = filled_memory([((1.0, 0.0), 1)], 2, 2)
        assert models.input_space_criterion(mq, np.array([2.0, 0.0]), 1) == pytest.approx(1.0)

    def test_opposite_scores_zero_orthogonal_half(self):
        mq = filled_memory([((1.0, 0.0), 1)], 2, 2)
        assert models.input_space_criterion(mq, np.array([-3.0, 0.0]), 1) == pytest.approx(0.0)
        assert models.input_space_criterion(mq, np.array([0.0, 1.0]), 1) == pytest.approx(0.5)

    def test_takes_max_over_queue(self):
        mq = filled_memory([((1.0, 0.0), 1), ((0.0, 1.0), 1)], 2, 3)
        v = models.input_space_criterion(mq, np.array([1.0, 0.2]), 1)
        expected = (1.0 / np.sqrt(1.04) + 1.0) / 2.0
        assert v == pytest.approx(expected, abs=1e-12)

    def test_zero_norm_query_scores_half(self):
        mq = filled_memory([((1.0, 0.0), 1)], 2, 2)
        assert models.input_space_criterion(mq, np.zeros(2), 1) == pytest.approx(0.5)

    def test_zero_norm_stored_contributes_zero_similarity(self):
        mq = filled_memory([((0.0, 0.0), 1)], 2, 2)
        assert models.input_space_criterion(mq, np.array([1.0, 1.0]), 1) == pytest.approx(0.5)

    def test_empty_queue_raises(self):
        mq = filled_memory([((1.0, 0.0), 1)], 2, 2)
        with pytest.raises(NoPredictionError):
            models.input_space_criterion(mq, np.ones(2), 2)
