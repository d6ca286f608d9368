"""Baselines: UDR resampling semantics, ensemble averaging, and P2PDRL
peer regularization with its decoupling contract."""

from __future__ import annotations

import time

import numpy as np
import pytest

from _helpers import central_diff, const_policy, max_rel_err, tiny_policy, tiny_value
from didor.baselines import (
    EnsemblePolicy,
    P2PConfig,
    ensemble_action,
    train_p2pdrl,
    train_udr,
)
from didor.domain import DomainDistribution, builtin_distribution, nominal_domain
from didor.envs import task_config
from didor.net import GradBuffer, flatten_arrays, gaussian_log_prob, param_arrays
from didor.ppo import PPOConfig, RolloutBatch, ppo_update, train_ppo
from didor.seeding import derive_seed, stream

TOY_PPO = PPOConfig(n_envs=2, steps_per_env=40, iterations=3, update_epochs=2,
                    minibatch_size=32)


def toy_task():
    return task_config("cartpole", max_steps=30)


def strip_wall(curve):
    return [{k: v for k, v in r.items() if k != "wall_ms"} for r in curve]


# --- UDR -----------------------------------------------------------------------

def test_udr_draws_fresh_domains_every_iteration():
    dist = builtin_distribution("cartpole")
    _, _, curve = train_udr(dist, 3, toy_task(), TOY_PPO, seed=1)
    per_iter = [tuple(rec["domains"]) for rec in curve]
    assert len(set(per_iter)) == 3  # fresh draws each iteration
    for fps in per_iter:
        assert len(set(fps)) == TOY_PPO.n_envs  # fresh draw per env too


def test_udr_scale_zero_degenerates_to_fixed_domain_training():
    dist = builtin_distribution("cartpole")
    zero = DomainDistribution(dist.task, dist.specs, scale=0.0)
    nominal = nominal_domain(dist)
    _, _, udr_curve = train_udr(zero, 3, toy_task(), TOY_PPO, seed=2)
    _, _, fixed_curve = train_ppo(nominal, toy_task(), TOY_PPO, seed=2, iterations=3)
    assert strip_wall(udr_curve) == strip_wall(fixed_curve)


def test_udr_requires_a_positive_budget():
    with pytest.raises(ValueError):
        train_udr(builtin_distribution("cartpole"), 0, toy_task(), TOY_PPO, seed=3)


def test_udr_budget_parity_accounting():
    # UDR gets as many iterations as all teachers combined, so its env-step
    # budget equals the teacher stage's within one iteration's worth
    n_teachers, teacher_iters = 4, 10
    udr_iters = n_teachers * teacher_iters
    teacher_steps = n_teachers * teacher_iters * TOY_PPO.n_envs * TOY_PPO.steps_per_env
    udr_steps = udr_iters * TOY_PPO.n_envs * TOY_PPO.steps_per_env
    assert abs(udr_steps - teacher_steps) <= TOY_PPO.n_envs * TOY_PPO.steps_per_env


# --- ensemble ---------------------------------------------------------------------

def test_ensemble_of_identical_members_equals_single():
    member = tiny_policy(5, 1, seed=10)
    ens = EnsemblePolicy([member, member.copy(), member.copy()])
    obs = stream(11, "o").normal(0, 1, (7, 5))
    assert np.allclose(ensemble_action(ens, obs), member.predict(obs), atol=1e-15)


def test_ensemble_opposite_means_cancel_exactly():
    up = const_policy(5, 1, mean=0.75)
    down = const_policy(5, 1, mean=-0.75)
    ens = EnsemblePolicy([up, down])
    obs = stream(12, "o").normal(0, 1, (9, 5))
    assert (ensemble_action(ens, obs) == 0.0).all()


def test_ensemble_averages_three_members():
    members = [const_policy(4, 1, mean=m) for m in (1.0, 2.0, 6.0)]
    ens = EnsemblePolicy(members)
    assert ensemble_action(ens, np.zeros(4))[0] == pytest.approx(3.0, abs=1e-15)


def test_ensemble_permutation_invariant():
    members = [tiny_policy(4, 1, seed=20 + k) for k in range(3)]
    obs = stream(21, "o").normal(0, 1, (5, 4))
    a = ensemble_action(EnsemblePolicy(members), obs)
    b = ensemble_action(EnsemblePolicy(members[::-1]), obs)
    assert np.allclose(a, b, atol=1e-15)


def test_ensemble_validation():
    with pytest.raises(ValueError):
        EnsemblePolicy([])
    with pytest.raises(ValueError):
        EnsemblePolicy([tiny_policy(4, 1, seed=1), tiny_policy(5, 1, seed=2)])


def test_ensemble_latency_grows_with_member_count():
    member = tiny_policy(5, 1, seed=22)
    obs = np.zeros(5)

    def probe(policy_like, reps=300):
        times = []
        for _ in range(reps):
            t0 = time.perf_counter()
            if isinstance(policy_like, EnsemblePolicy):
                ensemble_action(policy_like, obs)
            else:
                policy_like.predict(obs)
            times.append(time.perf_counter() - t0)
        return float(np.median(times))

    t1 = probe(member)
    t4 = probe(EnsemblePolicy([member.copy() for _ in range(4)]))
    assert t4 > t1  # 4x the forward passes cannot be faster


# --- P2PDRL ------------------------------------------------------------------------

def test_p2p_config_validation():
    with pytest.raises(ValueError):
        P2PConfig(workers=1)
    with pytest.raises(ValueError):
        P2PConfig(workers=2, alpha=-0.1)


def test_p2p_alpha_zero_reproduces_solo_worker_bitwise():
    dist = builtin_distribution("cartpole")
    cfg = P2PConfig(workers=2, alpha=0.0, ppo=TOY_PPO)
    result = train_p2pdrl(dist, cfg, toy_task(), seed=30)
    for k in range(2):
        solo_policy, _, solo_curve = train_ppo(
            dist, toy_task(), TOY_PPO, derive_seed(30, "worker", k), domain_mode="shared"
        )
        assert (flatten_arrays(param_arrays(result.policies[k]))
                == flatten_arrays(param_arrays(solo_policy))).all()
        assert strip_wall(result.curves[k]) == strip_wall(solo_curve)


def test_p2p_identical_workers_start_with_zero_regularizer():
    policy = tiny_policy(5, 1, seed=31)
    obs = stream(32, "o").normal(0, 1, (6, 5))
    from didor.net import gaussian_kl

    kl = gaussian_kl(policy.forward(obs), policy.copy().forward(obs))
    assert (kl == 0.0).all()


def test_p2p_draws_fresh_shared_domain_each_iteration():
    dist = builtin_distribution("cartpole")
    cfg = P2PConfig(workers=2, alpha=0.01, ppo=TOY_PPO)
    result = train_p2pdrl(dist, cfg, toy_task(), seed=33)
    assert result.resident_policies == 2
    for curve in result.curves:
        per_iter = [tuple(rec["domains"]) for rec in curve]
        assert len(set(per_iter)) == len(per_iter)  # fresh each iteration
        for fps in per_iter:
            assert len(set(fps)) == 1  # one shared domain across the worker's envs


def test_peer_regularizer_gradient_matches_finite_differences():
    # ppo_update's peer term: alpha/(K-1) * sum_j mean KL(peer_j || self)
    policy = tiny_policy(4, 1, seed=40)
    peers = [tiny_policy(4, 1, seed=41), tiny_policy(4, 1, seed=42)]
    value = tiny_value(4, seed=40)
    rng = stream(43, "batch")
    n = 24
    obs = rng.normal(0, 1, (n, 4))
    mean, std = policy.forward(obs)
    actions = mean + std * rng.standard_normal(mean.shape)
    logp = gaussian_log_prob(mean, std, actions)
    adv = np.zeros(n)  # kill the PPO term; only the regularizer has gradient
    batch = RolloutBatch(obs=obs, actions=actions, rewards=adv, log_probs=logp,
                         values=adv, dones=adv, advantages=adv, returns=adv,
                         domain_ids=np.zeros(n, int), domain_fingerprints=[],
                         episode_returns=[], partial_returns=[])
    alpha = 0.7

    from didor.net import gaussian_kl

    def reg_loss():
        mq, sq = policy.forward(obs)
        return float(sum(
            alpha / len(peers) * np.mean(gaussian_kl(p.forward(obs), (mq, sq)))
            for p in peers
        ))

    numeric = central_diff(reg_loss, param_arrays(policy))
    # one full-batch minibatch, one epoch, lr 0 keeps params fixed while the
    # gradient lands in the buffer
    cfg = PPOConfig(n_envs=1, steps_per_env=n, minibatch_size=n, update_epochs=1,
                    lr=1e-300)
    buf = GradBuffer(policy)
    captured = {}

    import didor.ppo as ppo_mod

    orig = ppo_mod.adam_update

    def capture(params, grads, lr, **kw):
        if params is policy and "g" not in captured:
            captured["g"] = flatten_arrays(grads.grads).copy()
        return orig(params, grads, lr, **kw)

    ppo_mod.adam_update = capture
    try:
        ppo_update(policy, value, batch, cfg, stream(44, "u"), buf, GradBuffer(value),
                   peers=peers, peer_alpha=alpha)
    finally:
        ppo_mod.adam_update = orig
    assert max_rel_err(captured["g"], numeric) < 1e-4
