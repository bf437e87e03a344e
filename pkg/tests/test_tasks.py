"""Tests for the environment-to-learner adapter layer."""

import numpy as np
import pytest

from srlkit.colayers import RankingSpace, TopKSpace
from srlkit.envs import dap, gspp, smsp
from srlkit.agents import ScoreActor
from srlkit.tasks import (
    DapTask,
    GsppTask,
    SeededInstance,
    SmspTask,
    build_task,
    collect_episode,
    discounted_future_returns,
    evaluate_rollout,
)


def small_gspp():
    return GsppTask.from_data_seed(0, rows=5, cols=5, episode_len=6)


def small_dap():
    return DapTask.from_data_seed(0, episode_len=8)


class TestBuildTask:
    def test_dispatch(self):
        assert isinstance(build_task("smsp", 0, {"n_jobs": 6}), SmspTask)
        assert isinstance(build_task("dap", 0, {"episode_len": 8}), DapTask)
        assert isinstance(build_task("gspp", 0, {"rows": 5, "cols": 5}), GsppTask)

    def test_unknown_environment(self):
        with pytest.raises(ValueError, match="unknown environment"):
            build_task("blackjack", 0, {})

    def test_env_params_applied(self):
        task = build_task("gspp", 0, {"rows": 7, "cols": 9, "episode_len": 11})
        assert (task.params.rows, task.params.cols) == (7, 9)
        assert task.params.episode_len == 11

    def test_hidden_models_fixed_by_data_seed(self):
        a = DapTask.from_data_seed(5)
        b = DapTask.from_data_seed(5)
        c = DapTask.from_data_seed(6)
        assert np.array_equal(a.params.phi, b.params.phi)
        assert not np.array_equal(a.params.phi, c.params.phi)


class TestInstances:
    def test_seeds_deterministic_and_distinct(self):
        task = small_gspp()
        a = task.generate_instances(4, "train", data_seed=1)
        b = task.generate_instances(4, "train", data_seed=1)
        assert a == b
        seeds = {(i.gen_seed, i.dyn_seed) for i in a}
        assert len(seeds) == 4

    def test_splits_do_not_overlap(self):
        task = small_gspp()
        train = task.generate_instances(10, "train", data_seed=1)
        test = task.generate_instances(10, "test", data_seed=1)
        assert not set(train) & set(test)

    def test_initial_state_rebuilds(self):
        task = small_dap()
        inst = task.generate_instances(1, "train", data_seed=3)[0]
        s1 = task.initial_state(inst)
        s2 = task.initial_state(inst)
        assert np.array_equal(s1.features, s2.features)
        assert np.array_equal(s1.prices, s2.prices)


class TestSmspTask:
    def test_layer_is_ranking(self):
        task = SmspTask(n_jobs=4)
        assert task.space == RankingSpace(n=4)
        action = task.layer(np.array([0.1, 0.5, 0.3, -1.0]), None)
        assert action.tolist() == [2.0, 4.0, 3.0, 1.0]

    def test_step_reward_is_negative_total_completion(self):
        task = SmspTask(n_jobs=3)
        inst = smsp.SmspInstance(
            release=np.zeros(3), processing=np.array([2, 1, 3], dtype=np.int64)
        )
        ranks = smsp.sequence_to_ranks(np.array([1, 0, 2]))
        _, reward, terminal = task.step(inst, ranks, None)
        assert terminal
        assert reward == -smsp.total_completion(inst, np.array([1, 0, 2]))

    def test_exact_critic_matches_objective(self):
        task = SmspTask(n_jobs=5)
        rng = np.random.default_rng(0)
        inst = smsp.smsp_generate(5, rng)
        critic = task.make_critics(rng)
        ranks = task.expert(inst)
        seq = smsp.ranks_to_sequence(ranks)
        assert critic.q_value(inst, ranks) == -smsp.total_completion(inst, seq)

    def test_expert_and_greedy_return_rank_vectors(self):
        task = SmspTask(n_jobs=6)
        inst = smsp.smsp_generate(6, np.random.default_rng(1))
        for action in (task.expert(inst), task.greedy(inst)):
            assert sorted(action.tolist()) == [1, 2, 3, 4, 5, 6]


class TestDapTask:
    def test_layer_is_topk(self):
        task = small_dap()
        assert task.space == TopKSpace(n=20, k=4)
        action = task.layer(np.arange(20.0), None)
        assert np.flatnonzero(action).tolist() == [16, 17, 18, 19]

    def test_critic_feature_shapes(self):
        task = small_dap()
        state = task.initial_state(task.generate_instances(1, "train", 0)[0])
        action = task.greedy(state)
        assert task._reward_head_features(state, action).shape == (1, 24)
        assert task._return_head_features(state, action).shape == (1, 220)

    def test_reward_head_uses_selected_items_in_index_order(self):
        task = small_dap()
        state = task.initial_state(task.generate_instances(1, "train", 0)[0])
        action = np.zeros(20)
        action[[3, 11]] = 1.0
        action[[17, 5]] = 1.0
        row = task._reward_head_features(state, action)[0]
        first = row[:6]
        assert np.array_equal(first[:4], state.features[3])
        assert first[4] == state.prices[3] / 10.0

    def test_make_critics_head_counts(self):
        task = small_dap()
        rng = np.random.default_rng(0)
        assert len(task.make_critics(rng).heads) == 2
        assert len(task.make_critics(rng, for_ppo=True).heads) == 1
        assert task.make_critics(rng).combine == "sum"

    def test_critic_update_trains_both_heads(self):
        from srlkit.agents import ReplayBuffer, Transition

        task = small_dap()
        rng = np.random.default_rng(0)
        critics = task.make_critics(rng)
        inst = task.generate_instances(1, "train", 0)[0]
        state = task.initial_state(inst)
        replay = ReplayBuffer(100)
        transitions = []
        dyn = task.rollout_rng(inst)
        while not state.terminal:
            action = task.greedy(state)
            nxt, reward, terminal = task.step(state, action, dyn)
            t = Transition(state, action, reward, None if terminal else nxt, terminal)
            replay.push(t)
            transitions.append(t)
            state = nxt
        returns = discounted_future_returns([t.reward for t in transitions], 0.9)
        loss = task.critic_update(
            critics,
            replay=replay,
            last_episode=(transitions, returns),
            batch_size=4,
            gamma=0.9,
            lr=1e-3,
            rng=np.random.default_rng(1),
            next_action_fn=task.greedy,
        )
        assert np.isfinite(loss) and loss > 0
        assert critics.heads[0].online.step == 1
        assert critics.heads[1].online.step == 1


class TestGsppTask:
    def test_layer_projects_positive_scores(self):
        task = small_gspp()
        state = task.initial_state(task.generate_instances(1, "train", 0)[0])
        theta = np.abs(np.random.default_rng(0).normal(size=25)) + 0.5
        action = task.layer(theta, state)
        gspp.gspp_validate_action(state, action)

    def test_actor_scores_are_nonpositive(self):
        task = small_gspp()
        state = task.initial_state(task.generate_instances(1, "train", 0)[0])
        actor = ScoreActor(spec=task.actor_spec, observe_fn=task.observe, layer_fn=task.layer)
        params = actor.init(np.random.default_rng(0))
        assert np.all(actor.scores(params, state) <= 0.0)

    def test_make_critics_two_mean_heads(self):
        task = small_gspp()
        critics = task.make_critics(np.random.default_rng(0))
        assert len(critics.heads) == 2
        assert critics.combine == "mean"

    def test_expert_not_worse_than_greedy_per_episode(self):
        task = small_gspp()
        for inst in task.generate_instances(5, "train", 0):
            e = evaluate_rollout(task, task.expert, inst)
            g = evaluate_rollout(task, task.greedy, inst)
            assert e >= g - 1e-9


class TestRollouts:
    def test_evaluate_rollout_is_repeatable(self):
        task = small_dap()
        inst = task.generate_instances(1, "test", 0)[0]
        a = evaluate_rollout(task, task.greedy, inst)
        b = evaluate_rollout(task, task.greedy, inst)
        assert a == b

    def test_policies_face_identical_dynamics(self):
        # With a deterministic environment stream keyed on the instance,
        # two identical policies see exactly the same draws.
        task = small_dap()
        inst = task.generate_instances(1, "test", 1)[0]
        rewards = []
        for _ in range(2):
            state = task.initial_state(inst)
            dyn = task.rollout_rng(inst)
            total = 0.0
            while not state.terminal:
                state, r, _ = task.step(state, task.greedy(state), dyn)
                total += r
            rewards.append(total)
        assert rewards[0] == rewards[1]

    def test_collect_episode_length_and_total(self):
        task = small_gspp()
        inst = task.generate_instances(1, "train", 0)[0]
        actor = ScoreActor(spec=task.actor_spec, observe_fn=task.observe, layer_fn=task.layer)
        params = actor.init(np.random.default_rng(0))
        total, transitions = collect_episode(
            task, actor, params, inst, 0.0,
            dyn_rng=np.random.default_rng(1), noise_rng=np.random.default_rng(2),
        )
        assert len(transitions) == task.params.episode_len
        assert total == pytest.approx(sum(t.reward for t in transitions))
        assert transitions[-1].terminal
        assert transitions[-1].next_state is None
        assert all(not t.terminal for t in transitions[:-1])

    def test_collect_episode_zero_noise_matches_deterministic(self):
        task = small_gspp()
        inst = task.generate_instances(1, "train", 3)[0]
        actor = ScoreActor(spec=task.actor_spec, observe_fn=task.observe, layer_fn=task.layer)
        params = actor.init(np.random.default_rng(0))
        total, _ = collect_episode(
            task, actor, params, inst, 0.0,
            dyn_rng=task.rollout_rng(inst), noise_rng=np.random.default_rng(2),
        )
        direct = evaluate_rollout(task, lambda s: actor.action(params, s), inst)
        assert total == pytest.approx(direct)

    def test_collect_episode_records_policy_context(self):
        task = small_dap()
        inst = task.generate_instances(1, "train", 0)[0]
        actor = ScoreActor(spec=task.actor_spec, observe_fn=task.observe, layer_fn=task.layer)
        params = actor.init(np.random.default_rng(0))
        _, transitions = collect_episode(
            task, actor, params, inst, 0.3,
            dyn_rng=np.random.default_rng(1), noise_rng=np.random.default_rng(2),
            record_policy=True,
        )
        for t in transitions:
            assert t.theta is not None and t.eta is not None
            assert t.det_action is not None
            assert not np.array_equal(t.eta, t.theta)
            assert np.array_equal(task.layer(t.eta, t.state), t.action)

    def test_static_episode_is_one_step(self):
        task = SmspTask(n_jobs=5)
        inst = task.generate_instances(1, "train", 0)[0]
        actor = ScoreActor(spec=task.actor_spec, observe_fn=task.observe, layer_fn=task.layer)
        params = actor.init(np.random.default_rng(0))
        _, transitions = collect_episode(
            task, actor, params, inst, 0.0,
            dyn_rng=task.rollout_rng(inst), noise_rng=np.random.default_rng(2),
        )
        assert len(transitions) == 1


class TestReturns:
    def test_hand_case(self):
        ret = discounted_future_returns([1.0, 2.0, 3.0], 0.5)
        assert ret.tolist() == [2.0 * 0.5 + 3.0 * 0.25, 3.0 * 0.5, 0.0]

    def test_last_entry_zero_and_empty(self):
        assert discounted_future_returns([5.0], 0.9).tolist() == [0.0]
        assert discounted_future_returns([], 0.9).size == 0

    def test_gamma_one_is_future_sum(self):
        ret = discounted_future_returns([1.0, 1.0, 1.0, 1.0], 1.0)
        assert ret.tolist() == [3.0, 2.0, 1.0, 0.0]
