import numpy as np
import pytest

from upliftrank.data import Partition, rank_by_scores
from upliftrank.errors import ConfigError, MetricDomainError
from upliftrank.evaluation import auuc, spec_from_label
from upliftrank.gbrt import GbrtConfig, Loss
from upliftrank.lambdamart import (LambdaConfig, compute_lambdas,
                                   predict_scores, train)
from upliftrank.metrics import MetricKind, Query, swap_delta
from upliftrank.relevance import RelevanceScheme
from upliftrank.simulate import ScenarioSpec, simulate

JOINT_REL = spec_from_label("joint-rel")


def make_query(rels, cutoff=None):
    rels = np.asarray(rels, dtype=float)
    n = rels.size
    return Query("q", np.zeros((n, 1)), rels,
                 cutoff=n if cutoff is None else cutoff)


def lam_config(metric=MetricKind.PCG, **kw):
    return LambdaConfig(metric=metric,
                        gbrt=GbrtConfig(loss=Loss.EXTERNAL_GRADIENTS), **kw)


def frozen_pairwise_objective(query, scores, config):
    """Smoothed pairwise cost with swap deltas frozen at the current
    ranking; the trainer's lambdas are its negative gradient."""
    n = len(query)
    order = np.argsort(-scores, kind="stable")
    pos = np.empty(n, dtype=int)
    pos[order] = np.arange(n)
    ranked_rels = query.relevance[order]
    k = min(max(query.cutoff, 1), n)
    pairs = []
    for a in range(n):
        for b in range(n):
            if query.relevance[a] > query.relevance[b]:
                delta = swap_delta(config.metric, ranked_rels,
                                   int(pos[a]), int(pos[b]), k, n=n,
                                   form=config.dcg_form)
                pairs.append((a, b, delta))

    def objective(s):
        total = 0.0
        for a, b, delta in pairs:
            total += delta * np.log1p(np.exp(-config.sigma * (s[a] - s[b])))
        return total

    return objective


class TestComputeLambdas:
    def test_equal_relevance_all_zero(self):
        q = make_query([1.0, 1.0, 1.0])
        batch = compute_lambdas([q], [np.array([0.3, 0.2, 0.1])],
                                lam_config())
        assert np.allclose(batch.lambdas[0], 0.0)
        assert np.allclose(batch.weights[0], 0.0)

    def test_two_item_closed_form(self):
        # equal scores: rho = 1/2; swap cost 1 -> lambdas +-0.5
        q = make_query([1.0, 0.0])
        batch = compute_lambdas([q], [np.zeros(2)], lam_config())
        assert batch.lambdas[0] == pytest.approx([0.5, -0.5])
        assert batch.weights[0] == pytest.approx([0.25, 0.25])

    def test_pair_antisymmetry(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            n = int(rng.integers(2, 30))
            q = make_query(rng.integers(0, 3, size=n).astype(float))
            batch = compute_lambdas([q], [rng.normal(size=n)], lam_config())
            assert abs(batch.lambdas[0].sum()) < 1e-12

    @pytest.mark.parametrize("metric", [MetricKind.PCG, MetricKind.DCG1,
                                        MetricKind.DCG2, MetricKind.NDCG,
                                        MetricKind.MAP])
    def test_finite_difference_oracle(self, metric):
        rng = np.random.default_rng(1)
        for _ in range(20):
            n = int(rng.integers(2, 10))
            if metric is MetricKind.MAP:
                rels = rng.integers(0, 2, size=n).astype(float)
            else:
                rels = rng.integers(0, 3, size=n).astype(float)
            cutoff = int(rng.integers(1, n + 1))
            q = make_query(rels, cutoff=cutoff)
            scores = rng.normal(size=n)
            config = lam_config(metric=metric)
            batch = compute_lambdas([q], [scores], config)
            objective = frozen_pairwise_objective(q, scores, config)
            eps = 1e-6
            for i in range(n):
                up = scores.copy()
                up[i] += eps
                down = scores.copy()
                down[i] -= eps
                fd = -(objective(up) - objective(down)) / (2 * eps)
                assert batch.lambdas[0][i] == pytest.approx(fd, abs=1e-4)

    def test_full_pairs_matches_restricted(self):
        rng = np.random.default_rng(2)
        for metric in (MetricKind.PCG, MetricKind.MAP):
            for _ in range(10):
                n = int(rng.integers(3, 20))
                rels = rng.integers(0, 2, size=n).astype(float)
                q = make_query(rels, cutoff=int(rng.integers(1, n + 1)))
                scores = rng.normal(size=n)
                a = compute_lambdas([q], [scores], lam_config(metric))
                b = compute_lambdas([q], [scores],
                                    lam_config(metric, full_pairs=True))
                assert np.allclose(a.lambdas[0], b.lambdas[0], atol=1e-12)

    def test_outside_window_items_idle(self):
        # item 2's only unequal-relevance partner is item 1; both sit past
        # the cutoff, so their swap cost and hence its lambda vanish
        rels = np.array([0.0, 1.0, 0.0])
        scores = np.array([5.0, 4.0, 3.0])  # ranking = identity
        q = make_query(rels, cutoff=1)
        batch = compute_lambdas([q], [scores], lam_config(MetricKind.PCG))
        assert batch.lambdas[0][2] == 0.0
        assert batch.lambdas[0][0] != 0.0  # in-window pair still active

    def test_ndcg_degenerate_ideal_gives_no_gradient(self):
        q = make_query([-1.0, 0.0, -1.0])
        batch = compute_lambdas([q], [np.array([0.2, 0.1, 0.0])],
                                lam_config(MetricKind.NDCG))
        assert np.allclose(batch.lambdas[0], 0.0)

    def test_map_requires_binary(self):
        q = make_query([2.0, 0.0])
        with pytest.raises(MetricDomainError):
            compute_lambdas([q], [np.zeros(2)], lam_config(MetricKind.MAP))

    def test_config_validation(self):
        with pytest.raises(ConfigError):
            lam_config(cutoff_fraction=0.0).validate()
        with pytest.raises(ConfigError):
            LambdaConfig(gbrt=GbrtConfig(loss=Loss.LOGISTIC)).validate()


def tiny_sim(seed, n=120):
    return simulate(ScenarioSpec(n, n, seed=seed), Partition.JOINT)


def tiny_train_config(cutoff=1.0, trees=60):
    return LambdaConfig(
        metric=MetricKind.PCG, cutoff_fraction=cutoff,
        gbrt=GbrtConfig(n_trees=trees, learning_rate=0.1, max_leaves=8,
                        min_instances_per_leaf=5,
                        loss=Loss.EXTERNAL_GRADIENTS))


class TestTrain:
    def test_improves_over_constant_scores(self):
        ranked = tiny_sim(seed=3)
        ds = ranked.dataset
        model = train(ds, RelevanceScheme.REL, Partition.JOINT,
                      tiny_train_config())
        trained = auuc(rank_by_scores(ds, predict_scores(model, ds),
                                      Partition.JOINT), JOINT_REL).auuc
        constant = auuc(rank_by_scores(ds, np.zeros(len(ds)),
                                       Partition.JOINT), JOINT_REL).auuc
        assert trained > constant

    def test_separate_partition_trains(self):
        ranked = tiny_sim(seed=4)
        ds = ranked.dataset
        model = train(ds, RelevanceScheme.ABS1, Partition.SEPARATE,
                      tiny_train_config(trees=30))
        scores = predict_scores(model, ds)
        assert np.isfinite(scores).all()
        assert scores.std() > 0  # it learned something

    def test_zero_variance_features_stay_constant(self):
        ranked = tiny_sim(seed=5)
        ds = ranked.dataset
        flat = type(ds)(np.zeros((len(ds), 1)), ds.y, ds.t)
        model = train(flat, RelevanceScheme.REL, Partition.JOINT,
                      tiny_train_config(trees=20))
        scores = predict_scores(model, flat)
        assert np.allclose(scores, scores[0])

    def test_deterministic(self):
        ranked = tiny_sim(seed=6)
        ds = ranked.dataset
        a = train(ds, RelevanceScheme.REL, Partition.JOINT,
                  tiny_train_config(trees=15))
        b = train(ds, RelevanceScheme.REL, Partition.JOINT,
                  tiny_train_config(trees=15))
        assert np.array_equal(predict_scores(a, ds), predict_scores(b, ds))

    def test_monotone_transform_keeps_auuc(self):
        ranked = tiny_sim(seed=7)
        ds = ranked.dataset
        model = train(ds, RelevanceScheme.REL, Partition.JOINT,
                      tiny_train_config(trees=15))
        scores = predict_scores(model, ds)
        a = auuc(rank_by_scores(ds, scores, Partition.JOINT), JOINT_REL)
        b = auuc(rank_by_scores(ds, 10 * scores + 3, Partition.JOINT),
                 JOINT_REL)
        assert a.auuc == pytest.approx(b.auuc, abs=1e-12)

    def test_trace_callback_reports_rounds(self):
        ranked = tiny_sim(seed=8, n=60)
        ds = ranked.dataset
        rounds = []
        train(ds, RelevanceScheme.REL, Partition.JOINT,
              tiny_train_config(trees=10),
              trace_callback=lambda r, v: rounds.append((r, v)))
        assert [r for r, _ in rounds] == list(range(10))
        assert all(np.isfinite(v) for _, v in rounds)
