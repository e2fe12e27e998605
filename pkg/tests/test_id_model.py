import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from povgraph.graph_core import AttributedGraph, make_complete_graph
from povgraph.id_model import (
    IdHyperparams,
    IdModelState,
    Scheduler,
    aggregate,
    detect,
    forward,
    gradients,
    init_state,
    loss,
    neighborhoods,
    score,
    train,
)
from povgraph.pov_engine import NodeDistribution, PovConfig, compute_pov

from conftest import k3_graph, path3_graph


def pov_for(g, m=2, theta=0.0):
    return compute_pov(g, NodeDistribution.uniform(g.num_nodes), PovConfig(m=m, theta=theta))


class TestNeighborhoods:
    def test_k3_m2_full(self):
        nbrs = neighborhoods(pov_for(k3_graph(), m=2).pov)
        for v in range(3):
            assert sorted(nbrs.neighbors(v).tolist()) == [0, 1, 2]

    def test_path_graph_m1_no_self(self):
        nbrs = neighborhoods(pov_for(path3_graph(), m=1).pov)
        assert nbrs.neighbors(0).tolist() == [1]

    def test_isolated_node_gets_self(self):
        g = AttributedGraph(3, np.array([[0, 1]]), np.zeros((3, 1)))
        nbrs = neighborhoods(pov_for(g, m=2).pov)
        assert nbrs.neighbors(2).tolist() == [2]

    def test_m_ge_2_includes_self(self):
        for g in (k3_graph(), path3_graph(), make_complete_graph(5)):
            nbrs = neighborhoods(pov_for(g, m=2).pov)
            for v in range(g.num_nodes):
                assert v in nbrs.neighbors(v)


class TestAggregate:
    def test_constant_rows_fixed(self):
        nbrs = neighborhoods(pov_for(k3_graph(), m=2).pov)
        h = np.tile(np.array([3.0, -1.0]), (3, 1))
        assert np.allclose(aggregate(h, nbrs), h)

    def test_two_node_mean(self):
        nbrs = neighborhoods(pov_for(make_complete_graph(2), m=2).pov)
        h = np.array([[0.0], [2.0]])
        out = aggregate(h, nbrs)
        assert np.allclose(out[0], [1.0])

    def test_k3_m2_is_column_mean(self):
        g = k3_graph()
        nbrs = neighborhoods(pov_for(g, m=2).pov)
        x = np.array([[1.0, 0.0], [0.0, 2.0], [5.0, -1.0]])
        out = aggregate(x, nbrs)
        assert np.allclose(out, np.tile(x.mean(axis=0), (3, 1)))

    def test_weighted_mode_uses_pov_values(self):
        g = path3_graph()
        res = pov_for(g, m=2)
        nbrs = neighborhoods(res.pov)
        x = np.array([[1.0], [2.0], [4.0]])
        got = aggregate(x, nbrs, weighted=True)
        want = res.pov.to_dense() @ x
        assert np.allclose(got, want)
        assert not np.allclose(got, aggregate(x, nbrs))


class TestForward:
    def test_zero_parameters_give_zero(self):
        g = k3_graph()
        nbrs = neighborhoods(pov_for(g).pov)
        state = IdModelState(
            np.zeros((3, 2)), np.zeros(2), np.zeros((2, 3)), np.zeros(3)
        )
        _, xhat = forward(g.features, state, nbrs)
        assert np.all(xhat == 0)

    def test_identity_network_double_aggregation(self):
        # d == h, identity weights, zero biases: xhat = mean(mean(x))
        g = k3_graph()
        x = np.array([[1.0, 2.0, 0.0], [0.0, 1.0, 1.0], [3.0, 0.0, 2.0]])
        g = AttributedGraph(3, g.edges, x)
        nbrs = neighborhoods(pov_for(g, m=2).pov)
        state = IdModelState(np.eye(3), np.zeros(3), np.eye(3), np.zeros(3))
        _, xhat = forward(x, state, nbrs)
        mean_op = np.tile(np.full(3, 1 / 3), (3, 1))
        # relu is inactive here because the aggregated values are nonnegative
        want = mean_op @ np.maximum(mean_op @ x, 0.0)
        assert np.allclose(xhat, want, atol=1e-12)

    def test_no_dropout_deterministic(self):
        g = k3_graph()
        nbrs = neighborhoods(pov_for(g).pov)
        state = init_state(3, 4, seed=0)
        _, a = forward(g.features, state, nbrs)
        _, b = forward(g.features, state, nbrs)
        assert np.array_equal(a, b)


class TestLoss:
    def test_zero_at_perfect_reconstruction(self):
        x = np.ones((4, 2))
        assert loss(x, x) == 0.0

    def test_three_four_five(self):
        assert loss(np.array([[3.0, 4.0]]), np.array([[0.0, 0.0]])) == 5.0

    def test_additivity(self):
        x = np.array([[1.0, 0.0], [0.0, 1.0]])
        xhat = np.zeros((2, 2))
        assert loss(x, xhat) == 2.0


class TestGradients:
    def test_matches_central_differences(self):
        rng = np.random.Generator(np.random.PCG64(55))
        g = make_complete_graph(6, features=rng.normal(size=(6, 4)))
        nbrs = neighborhoods(pov_for(g, m=2, theta=0.5).pov)
        state = init_state(4, 3, seed=5)
        mask = (rng.random((6, 3)) >= 0.4) / 0.6
        _, grads = gradients(g.features, state, nbrs, dropout_mask=mask)
        params = [
            state.enc_weight.copy(),
            state.enc_bias.copy(),
            state.dec_weight.copy(),
            state.dec_bias.copy(),
        ]
        eps = 1e-6
        for k, p in enumerate(params):
            it = np.nditer(p, flags=["multi_index"])
            for _ in it:
                idx = it.multi_index
                bumped = [q.copy() for q in params]
                bumped[k][idx] += eps
                lp = gradients(
                    g.features, IdModelState(*bumped), nbrs, dropout_mask=mask
                )[0]
                bumped[k][idx] -= 2 * eps
                lm = gradients(
                    g.features, IdModelState(*bumped), nbrs, dropout_mask=mask
                )[0]
                numeric = (lp - lm) / (2 * eps)
                rel = abs(numeric - grads[k][idx]) / max(abs(numeric), 1e-8)
                assert rel < 1e-5


class TestTrain:
    def test_zero_epochs_returns_init(self):
        g = make_complete_graph(4, features=np.random.default_rng(1).normal(size=(4, 3)))
        pov = pov_for(g)
        hp = IdHyperparams(hidden_channels=2, epochs=0, gamma=1.0, lambda_=0.0, seed=9)
        state = train(g, pov, hp)
        want = init_state(3, 2, seed=9)
        assert np.array_equal(state.enc_weight, want.enc_weight)
        assert np.array_equal(state.dec_bias, want.dec_bias)

    def test_training_reduces_loss(self):
        rng = np.random.Generator(np.random.PCG64(2))
        g = make_complete_graph(8, features=rng.normal(size=(8, 5)))
        pov = pov_for(g, m=2)
        hp = IdHyperparams(
            hidden_channels=4, learning_rate=1e-2, epochs=120,
            gamma=1.0, lambda_=0.0, seed=3,
        )
        nbrs = neighborhoods(pov.pov)
        init = init_state(5, 4, seed=3)
        _, xhat0 = forward(g.features, init, nbrs)
        trained = train(g, pov, hp)
        _, xhat1 = forward(g.features, trained, nbrs)
        assert loss(g.features, xhat1) < loss(g.features, xhat0)

    def test_scheduler_applies_at_step_boundaries(self):
        # decay multiplies the rate every `step` epochs: a 2-epoch run is
        # untouched by step=2, a 3-epoch run diverges at the boundary
        rng = np.random.Generator(np.random.PCG64(4))
        g = make_complete_graph(5, features=rng.normal(size=(5, 3)))
        pov = pov_for(g)
        base = dict(hidden_channels=2, learning_rate=1e-2, gamma=1.0, lambda_=0.0, seed=0)
        sched = Scheduler(step=2, factor=0.5)
        plain2 = train(g, pov, IdHyperparams(epochs=2, **base))
        decayed2 = train(g, pov, IdHyperparams(epochs=2, scheduler=sched, **base))
        assert np.array_equal(plain2.enc_weight, decayed2.enc_weight)
        plain3 = train(g, pov, IdHyperparams(epochs=3, **base))
        decayed3 = train(g, pov, IdHyperparams(epochs=3, scheduler=sched, **base))
        assert not np.array_equal(plain3.enc_weight, decayed3.enc_weight)

    def test_nonfinite_loss_names_epoch(self):
        rng = np.random.Generator(np.random.PCG64(6))
        g = make_complete_graph(4, features=rng.normal(size=(4, 3)))
        pov = pov_for(g)
        hp = IdHyperparams(
            hidden_channels=2, learning_rate=1e200, epochs=5,
            gamma=1.0, lambda_=0.0, seed=0,
        )
        with pytest.raises(FloatingPointError, match="epoch"):
            train(g, pov, hp)

    def test_hyperparam_validation(self):
        with pytest.raises(ValueError, match="gamma \\+ lambda"):
            IdHyperparams(hidden_channels=2, gamma=0.0, lambda_=0.0)
        with pytest.raises(ValueError, match="dropout"):
            IdHyperparams(hidden_channels=2, dropout=1.0)


class TestScore:
    def test_perfect_reconstruction_local_only(self):
        x = np.ones((3, 2))
        s = score(x, x, np.zeros(2), gamma=1.0, lambda_=0.0)
        assert np.all(s == 0)

    def test_gamma_zero_isolates_global_term(self):
        x = np.zeros((2, 2))
        xhat = np.array([[1.0, 1.0], [0.0, 0.0]])
        mg = np.array([2.0, 2.0])
        s = score(x, xhat, mg, gamma=0.0, lambda_=2.0)
        assert np.allclose(s, [2 * 2.0, 2 * 4.0])

    def test_frozen_arithmetic(self):
        s = score(
            np.array([[1.0, 1.0]]),
            np.array([[0.0, 0.0]]),
            np.array([2.0, 2.0]),
            gamma=1.0,
            lambda_=1.0,
        )
        assert s.tolist() == [6.0]

    @given(
        st.floats(0.0, 5.0),
        st.floats(0.0, 5.0),
        st.integers(0, 10**6),
    )
    @settings(max_examples=40, deadline=None)
    def test_decomposition(self, gamma, lambda_, seed):
        rng = np.random.Generator(np.random.PCG64(seed))
        x = rng.normal(size=(4, 3))
        xhat = rng.normal(size=(4, 3))
        mg = rng.normal(size=3)
        combined = score(x, xhat, mg, gamma, lambda_)
        local = score(x, xhat, mg, 1.0, 0.0)
        global_ = score(x, xhat, mg, 0.0, 1.0)
        assert np.allclose(combined, gamma * local + lambda_ * global_, atol=1e-12)

    def test_scaling_preserves_ranking(self):
        rng = np.random.Generator(np.random.PCG64(77))
        x = rng.normal(size=(6, 3))
        xhat = rng.normal(size=(6, 3))
        mg = rng.normal(size=3)
        s1 = score(x, xhat, mg, 0.3, 0.7)
        s2 = score(x, xhat, mg, 0.3 * 4.5, 0.7 * 4.5)
        assert np.array_equal(np.argsort(s1), np.argsort(s2))


class TestDetect:
    def planted(self):
        feats = np.tile(np.array([1.0, 2.0, 3.0]), (10, 1))
        feats[4] += np.array([5.0, -4.0, 6.0])
        labels = np.zeros(10, dtype=np.int8)
        labels[4] = 1
        return AttributedGraph(
            10, make_complete_graph(10).edges, feats, labels=labels
        )

    def test_planted_outlier_ranks_first(self):
        hp = IdHyperparams(
            hidden_channels=4, learning_rate=1e-2, epochs=150,
            gamma=1.0, lambda_=0.0, seed=0,
        )
        report = detect(self.planted(), PovConfig(m=2, theta=0.0), hp)
        assert int(np.argmax(report.scores)) == 4

    def test_deterministic_under_seed(self):
        hp = IdHyperparams(
            hidden_channels=3, dropout=0.5, learning_rate=1e-2, epochs=30,
            gamma=0.5, lambda_=0.5, seed=13,
        )
        a = detect(self.planted(), PovConfig(m=2, theta=1.0), hp)
        b = detect(self.planted(), PovConfig(m=2, theta=1.0), hp)
        assert np.array_equal(a.scores, b.scores)
        assert np.array_equal(a.reconstruction, b.reconstruction)

    def test_scores_nonnegative(self):
        hp = IdHyperparams(hidden_channels=3, epochs=10, gamma=0.4, lambda_=0.6)
        report = detect(self.planted(), PovConfig(m=2, theta=0.5), hp)
        assert np.all(report.scores >= 0)
