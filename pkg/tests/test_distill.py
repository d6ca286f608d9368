"""Distillation: loss values and gradients, teacher freezing, domain
freezing, and the end-to-end pipeline at toy scale."""

from __future__ import annotations

import numpy as np
import pytest

from _helpers import central_diff, const_policy, max_rel_err, tiny_policy
from didor.distill import (
    DistillConfig,
    TeacherRecord,
    collect_student_rollouts,
    distill,
    distillation_loss,
    run_didor,
    train_teachers,
)
from didor.domain import builtin_distribution, nominal_domain, sample_domain
from didor.envs import task_config
from didor.net import GradBuffer, flatten_arrays, init_policy, param_arrays
from didor.ppo import PPOConfig, train_ppo
from didor.seeding import derive_seed, stream

TOY_PPO = PPOConfig(n_envs=2, steps_per_env=40, iterations=2, update_epochs=2,
                    minibatch_size=32)


def toy_task():
    return task_config("cartpole", max_steps=30)


def test_loss_zero_when_student_equals_single_teacher():
    teacher = tiny_policy(5, 1, seed=1)
    student = teacher.copy()
    obs = stream(2, "o").normal(0, 1, (40, 5))
    loss, _ = distillation_loss(student, [teacher], [obs])
    assert loss == 0.0


def test_loss_sums_over_identical_teachers():
    teacher = tiny_policy(5, 1, seed=3)
    student = tiny_policy(5, 1, seed=4)
    obs = stream(5, "o").normal(0, 1, (30, 5))
    single, _ = distillation_loss(student, [teacher], [obs])
    triple, _ = distillation_loss(student, [teacher] * 3, [obs] * 3)
    assert triple == pytest.approx(3.0 * single, rel=1e-12)


def test_loss_constant_one_dimensional_case():
    # teacher N(1,1), student N(0,1): per-state KL is 0.5 on any states
    teacher = const_policy(5, 1, mean=1.0)
    student = const_policy(5, 1, mean=0.0)
    obs = stream(6, "o").normal(0, 2, (17, 5))
    loss, _, state_kls = distillation_loss(student, [teacher], [obs],
                                           return_state_kls=True)
    assert loss == pytest.approx(0.5, abs=1e-12)
    assert np.allclose(state_kls, 0.5)


def test_loss_gradients_match_finite_differences():
    teachers = [tiny_policy(4, 2, seed=10 + k) for k in range(2)]
    student = tiny_policy(4, 2, seed=20)
    rng = stream(7, "o")
    rollouts = [rng.normal(0, 1, (12, 4)) for _ in range(2)]
    buf = GradBuffer(student)
    loss, _ = distillation_loss(student, teachers, rollouts, buf=buf)
    analytic = flatten_arrays(buf.grads)
    numeric = central_diff(
        lambda: distillation_loss(student, teachers, rollouts)[0],
        param_arrays(student),
    )
    assert max_rel_err(analytic, numeric) < 1e-4


def test_loss_leaves_teachers_untouched_and_nonnegative():
    teachers = [tiny_policy(3, 1, seed=30 + k) for k in range(3)]
    before = [flatten_arrays(param_arrays(t)).copy() for t in teachers]
    student = tiny_policy(3, 1, seed=40)
    rng = stream(8, "o")
    rollouts = [rng.normal(0, 1, (10, 3)) for _ in range(3)]
    buf = GradBuffer(student)
    loss, _ = distillation_loss(student, teachers, rollouts, buf=buf)
    assert loss >= 0.0
    for t, b in zip(teachers, before):
        assert (flatten_arrays(param_arrays(t)) == b).all()


def test_collect_student_rollouts_shapes_and_divergence_tagging():
    tc = toy_task()
    student = init_policy(5, 1, stream(50, "s"))
    doms = [nominal_domain(builtin_distribution("cartpole"))] * 3
    rollouts = collect_student_rollouts(student, doms, tc, steps=25, seed=51)
    assert len(rollouts) == 3
    assert all(r.shape == (25, 5) for r in rollouts)


def test_collect_identical_domains_and_seeds_give_identical_sets():
    tc = toy_task()
    student = tiny_policy(5, 1, seed=52)
    dom = nominal_domain(builtin_distribution("cartpole"))
    rollouts = collect_student_rollouts(student, [dom, dom], tc, steps=30, seed=0,
                                        per_teacher_seeds=[77, 77])
    assert (rollouts[0] == rollouts[1]).all()
    distinct = collect_student_rollouts(student, [dom, dom], tc, steps=30, seed=0,
                                        per_teacher_seeds=[77, 78])
    assert not (distinct[0] == distinct[1]).all()


def test_student_visits_different_states_than_its_teachers():
    # on-policy property: the student's visited states are its own
    tc = toy_task()
    dist = builtin_distribution("cartpole")
    teachers = train_teachers(dist, 1, tc, TOY_PPO, seed=53)
    student = init_policy(5, 1, stream(54, "s"))
    s_obs = collect_student_rollouts(student, teachers.domains, tc, 40, seed=55)[0]
    t_policy, _, _ = train_ppo(teachers.domains[0], tc, TOY_PPO, seed=56)
    t_obs = collect_student_rollouts(t_policy, teachers.domains, tc, 40, seed=55)[0]
    shared = {tuple(row) for row in np.round(s_obs, 6)} & {
        tuple(row) for row in np.round(t_obs, 6)
    }
    assert len(shared) < len(s_obs)


def test_train_teachers_single_equals_fixed_domain_ppo():
    tc = toy_task()
    dist = builtin_distribution("cartpole")
    seed = 60
    ts = train_teachers(dist, 1, tc, TOY_PPO, seed=seed)
    dom = sample_domain(dist, stream(seed, "teacher-domains"))
    assert dom.values == ts.domains[0].values
    policy, _, curve = train_ppo(dom, tc, TOY_PPO, derive_seed(seed, "teacher", 0))
    assert (flatten_arrays(param_arrays(policy))
            == flatten_arrays(param_arrays(ts.teachers[0].policy))).all()
    strip = lambda c: [{k: v for k, v in r.items() if k != "wall_ms"} for r in c]
    assert strip(curve) == strip(ts.teachers[0].curve)


def test_train_teachers_produces_distinct_domains_and_curves():
    tc = toy_task()
    ts = train_teachers(builtin_distribution("cartpole"), 4, tc, TOY_PPO, seed=61)
    fps = [d.fingerprint() for d in ts.domains]
    assert len(set(fps)) == 4
    assert all(len(t.curve) == TOY_PPO.iterations for t in ts.teachers)


def test_teacher_return_floor_flags_without_dropping():
    tc = toy_task()
    ts = train_teachers(builtin_distribution("cartpole"), 2, tc, TOY_PPO, seed=62,
                        return_floor=1e9)
    assert len(ts) == 2
    assert all(t.flagged for t in ts.teachers)


def test_distill_zero_iterations_leaves_student_unchanged():
    tc = toy_task()
    ts = train_teachers(builtin_distribution("cartpole"), 1, tc, TOY_PPO, seed=63)
    student = init_policy(5, 1, stream(64, "s"))
    before = flatten_arrays(param_arrays(student)).copy()
    cfg = DistillConfig(n_teachers=1, iterations=0, epochs=2, steps_per_teacher=20)
    student, curve = distill(student, ts, cfg, tc, seed=65)
    assert (flatten_arrays(param_arrays(student)) == before).all()
    assert curve == []


def test_distill_deterministic_freezes_domains_and_teachers():
    tc = toy_task()
    ts = train_teachers(builtin_distribution("cartpole"), 2, tc, TOY_PPO, seed=66)
    teacher_params = [flatten_arrays(param_arrays(t.policy)).copy() for t in ts.teachers]
    cfg = DistillConfig(n_teachers=2, iterations=3, epochs=2, steps_per_teacher=30)
    s1, c1 = distill(init_policy(5, 1, stream(67, "s")), ts, cfg, tc, seed=68)
    s2, c2 = distill(init_policy(5, 1, stream(67, "s")), ts, cfg, tc, seed=68)
    assert (flatten_arrays(param_arrays(s1)) == flatten_arrays(param_arrays(s2))).all()
    strip = lambda c: [{k: v for k, v in r.items() if k != "wall_ms"} for r in c]
    assert strip(c1) == strip(c2)
    # teacher domains are frozen across iterations; teachers bit-identical
    fps = {tuple(rec["domains"]) for rec in c1}
    assert len(fps) == 1
    for t, before in zip(ts.teachers, teacher_params):
        assert (flatten_arrays(param_arrays(t.policy)) == before).all()


def test_distill_reduces_loss_on_toy_problem():
    tc = toy_task()
    ts = train_teachers(builtin_distribution("cartpole"), 2, tc, TOY_PPO, seed=69)
    cfg = DistillConfig(n_teachers=2, iterations=6, epochs=6, steps_per_teacher=60,
                        lr=3e-3)
    _, curve = distill(init_policy(5, 1, stream(70, "s")), ts, cfg, tc, seed=71)
    assert curve[-1]["median_state_kl"] < curve[0]["median_state_kl"]


def test_teacher_record_load_from_disk(tmp_path):
    from didor.persist import save_policy

    policy = tiny_policy(5, 1, seed=72)
    path = tmp_path / "t.policy.json"
    save_policy(policy, path)
    rec = TeacherRecord(policy=None, domain=nominal_domain(builtin_distribution("cartpole")),
                        curve=[], policy_path=str(path))
    loaded = rec.load()
    obs = stream(73, "o").normal(0, 1, (5, 5))
    assert (loaded.predict(obs) == policy.predict(obs)).all()


def test_run_didor_bundle_round_trips(tmp_path):
    from didor.persist import load_policy, read_json, read_jsonl

    tc = toy_task()
    dist = builtin_distribution("cartpole")
    cfg = DistillConfig(n_teachers=2, iterations=2, epochs=2, steps_per_teacher=30)
    out = tmp_path / "bundle"
    result = run_didor(dist, tc, TOY_PPO, cfg, master_seed=74, out_dir=str(out))
    assert result.student.obs_dim == result.teachers.teachers[0].policy.obs_dim
    assert result.student.act_dim == result.teachers.teachers[0].policy.act_dim
    student = load_policy(out / "student.policy.json")
    obs = stream(75, "o").normal(0, 1, (20, 5))
    assert (student.predict(obs) == result.student.predict(obs)).all()
    domains = read_json(out / "domains.json")
    assert len(domains["teacher_domains"]) == 2
    assert domains["dist_fingerprint"] == dist.fingerprint()
    assert len(read_jsonl(out / "distill.curve.jsonl")) == 2
    assert len(read_jsonl(out / "teacher_0.curve.jsonl")) == TOY_PPO.iterations


def test_run_didor_low_memory_mode(tmp_path):
    tc = toy_task()
    cfg = DistillConfig(n_teachers=2, iterations=1, epochs=1, steps_per_teacher=20,
                        low_memory=True)
    result = run_didor(builtin_distribution("cartpole"), tc, TOY_PPO, cfg,
                       master_seed=76, out_dir=str(tmp_path / "b"))
    assert all(t.policy is None for t in result.teachers.teachers)
    assert all(t.policy_path for t in result.teachers.teachers)
