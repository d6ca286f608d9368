"""Teacher training on frozen sampled domains and on-policy multi-teacher
distillation into a single student.

The procedure: sample one domain per teacher (once — the domains never
change afterwards), train each teacher with PPO on its own domain, then
repeatedly roll the student out in every teacher domain and descend the
summed KL(teacher || student) over the visited states. Teachers are
frozen throughout distillation; only the student's parameters move.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .domain import DomainDistribution, DomainParams, sample_domain
from .envs import ACT_DIM, TaskConfig, VecEnv
from .errors import SimulationDiverged
from .net import (
    GaussianPolicy,
    GradBuffer,
    adam_update,
    gaussian_kl_grads_wrt_q,
    init_policy,
    mlp_backward,
)
from .persist import load_policy
from .ppo import PPOConfig, train_ppo
from .seeding import derive_seed, stream


@dataclass(frozen=True)
class DistillConfig:
    n_teachers: int = 4
    iterations: int = 20  # student rollout/update rounds
    epochs: int = 10  # gradient epochs per round (full batch)
    steps_per_teacher: int = 2400
    lr: float = 1e-2
    teacher_return_floor: float = 0.0  # teachers finishing below are flagged
    low_memory: bool = False  # reload teachers from disk one at a time

    def __post_init__(self):
        if self.n_teachers < 1 or self.iterations < 0 or self.epochs < 1:
            raise ValueError("n_teachers >= 1, iterations >= 0, epochs >= 1 required")
        if self.steps_per_teacher < 1 or self.lr <= 0:
            raise ValueError("steps_per_teacher >= 1 and lr > 0 required")


@dataclass
class TeacherRecord:
    policy: GaussianPolicy | None
    domain: DomainParams
    curve: list
    flagged: bool = False
    policy_path: str | None = None

    def load(self) -> GaussianPolicy:
        if self.policy is not None:
            return self.policy
        if self.policy_path is None:
            raise ValueError("teacher has neither in-memory policy nor a file path")
        return load_policy(self.policy_path)


@dataclass
class TeacherSet:
    teachers: list
    dist_fingerprint: str

    def __post_init__(self):
        if len(self.teachers) < 1:
            raise ValueError("at least one teacher required")
        dims = {(t.policy.obs_dim, t.policy.act_dim) for t in self.teachers if t.policy}
        if len(dims) > 1:
            raise ValueError(f"teachers disagree on dimensions: {sorted(dims)}")

    def __len__(self) -> int:
        return len(self.teachers)

    @property
    def domains(self) -> list:
        return [t.domain for t in self.teachers]


def train_teachers(dist: DomainDistribution, n: int, task_cfg: TaskConfig,
                   ppo_cfg: PPOConfig, seed: int, iterations: int | None = None,
                   return_floor: float = 0.0) -> TeacherSet:
    """Sample n domains once, then train one PPO expert per domain.

    Teachers get independent derived seeds and are trained in index order
    (the loop is embarrassingly parallel; sequential order keeps the
    output deterministic). A teacher whose final mean return falls below
    ``return_floor`` is flagged in its record, not dropped.
    """
    if n < 1:
        raise ValueError("need at least one teacher")
    dom_rng = stream(seed, "teacher-domains")
    domains = [sample_domain(dist, dom_rng) for _ in range(n)]
    teachers = []
    for k in range(n):
        policy, _, curve = train_ppo(
            domains[k], task_cfg, ppo_cfg, derive_seed(seed, "teacher", k),
            iterations=iterations,
        )
        final = curve[-1]["mean_return"] if curve else 0.0
        teachers.append(
            TeacherRecord(policy=policy, domain=domains[k], curve=curve,
                          flagged=bool(final < return_floor))
        )
    return TeacherSet(teachers=teachers, dist_fingerprint=dist.fingerprint())


def collect_student_rollouts(student: GaussianPolicy, domains, task_cfg: TaskConfig,
                             steps: int, seed: int,
                             per_teacher_seeds: list | None = None) -> list:
    """Roll the (stochastic) student for ``steps`` transitions in every
    teacher domain; returns one observation array per domain.

    Domain n uses the private stream (seed, "env", n) unless explicit
    per-teacher seeds are given. Divergence is tagged with the teacher
    index.
    """
    n = len(domains)
    if per_teacher_seeds is None:
        rngs = [stream(seed, "env", k) for k in range(n)]
    else:
        if len(per_teacher_seeds) != n:
            raise ValueError("one seed per teacher domain required")
        rngs = [stream(s, "env") for s in per_teacher_seeds]
    venv = VecEnv(task_cfg, domains, rngs)
    if student.obs_dim != task_cfg.obs_dim:
        raise ValueError(
            f"student obs_dim {student.obs_dim} does not match task obs_dim {task_cfg.obs_dim}"
        )
    obs = venv.reset_all()
    buf = np.empty((steps, n, task_cfg.obs_dim))
    act_dim = student.act_dim
    for t in range(steps):
        buf[t] = obs
        mean, std = student.forward(obs)
        noise = np.stack([rngs[k].standard_normal(act_dim) for k in range(n)])
        actions = mean + std * noise
        step = venv.step(actions[:, 0])
        obs = step.obs
        if step.diverged.any():
            bad = int(np.flatnonzero(step.diverged)[0])
            raise SimulationDiverged(
                f"student rollout diverged in teacher domain {bad}",
                domain_id=domains[bad].fingerprint(),
            )
    return [buf[:, k] for k in range(n)]


def distillation_loss(student: GaussianPolicy, teachers, rollouts,
                      buf: GradBuffer | None = None, return_state_kls: bool = False):
    """Sum over teachers of the mean per-state KL(teacher || student) on
    that teacher's rollout states; gradients flow to the student only.

    ``teachers`` may be GaussianPolicy objects or TeacherRecord entries
    (records are loaded one at a time, honoring the low-memory contract).
    """
    if len(teachers) != len(rollouts):
        raise ValueError("one rollout set per teacher required")
    total = 0.0
    state_kls = []
    for teacher, obs in zip(teachers, rollouts):
        t_policy = teacher.load() if isinstance(teacher, TeacherRecord) else teacher
        mp, sp = t_policy.forward(obs)
        mq, sq, cache = student.forward_cached(obs)
        kl, dmu_q, dls_q = gaussian_kl_grads_wrt_q((mp, sp), (mq, sq))
        total += float(np.mean(kl))
        if return_state_kls:
            state_kls.append(kl)
        if buf is not None:
            s = obs.shape[0]
            dws, dbs, _ = mlp_backward(student.mean_net, cache, dmu_q / s)
            buf.add_mlp(dws, dbs)
            buf.grads[-1] += np.sum(dls_q, axis=0) / s
    if return_state_kls:
        return total, buf, np.concatenate(state_kls)
    return total, buf


def distill(student: GaussianPolicy, teachers: TeacherSet, cfg: DistillConfig,
            task_cfg: TaskConfig, seed: int):
    """Alternate student rollouts in all teacher domains with full-batch
    KL-descent epochs; returns the student and a per-iteration curve.

    The curve records the median per-state KL measured on each
    iteration's fresh rollouts before that iteration's updates, which is
    the on-policy progress signal.
    """
    teacher_list = teachers.teachers
    domains = teachers.domains
    buf = GradBuffer(student)
    curve = []
    for i in range(cfg.iterations):
        t0 = time.perf_counter()
        rollouts = collect_student_rollouts(
            student, domains, task_cfg, cfg.steps_per_teacher, derive_seed(seed, "rollout", i)
        )
        loss_pre, _, state_kls = distillation_loss(
            student, teacher_list, rollouts, buf=None, return_state_kls=True
        )
        loss = loss_pre
        for e in range(cfg.epochs):
            loss, _ = distillation_loss(student, teacher_list, rollouts, buf=buf)
            if not np.isfinite(loss):
                raise ValueError(f"non-finite distillation loss at iteration {i} epoch {e}")
            adam_update(student, buf, cfg.lr)
        curve.append({
            "iter": i,
            "loss": loss_pre,
            "loss_post": loss,
            "median_state_kl": float(np.median(state_kls)),
            "wall_ms": (time.perf_counter() - t0) * 1e3,
            "domains": [d.fingerprint() for d in domains],
        })
    return student, curve


@dataclass
class DidorResult:
    student: GaussianPolicy
    teachers: TeacherSet
    distill_curve: list
    files: list = field(default_factory=list)


def run_didor(dist: DomainDistribution, task_cfg: TaskConfig, ppo_cfg: PPOConfig,
              cfg: DistillConfig, master_seed: int, out_dir=None,
              teacher_iterations: int | None = None) -> DidorResult:
    """Full pipeline: train N teachers, distill them into a fresh student.

    With ``out_dir`` set, persists teacher/student policies, learning
    curves, and the frozen domains (the caller owns config.json and the
    manifest). Stage seeds derive from the master seed by documented
    roles.
    """
    from . import persist  # local import keeps module load light

    teachers = train_teachers(
        dist, cfg.n_teachers, task_cfg, ppo_cfg, derive_seed(master_seed, "teachers"),
        iterations=teacher_iterations, return_floor=cfg.teacher_return_floor,
    )
    student = init_policy(task_cfg.obs_dim, ACT_DIM, stream(master_seed, "init/student"))

    files = []
    if out_dir is not None:
        import os

        os.makedirs(out_dir, exist_ok=True)
        for k, rec in enumerate(teachers.teachers):
            ppath = f"teacher_{k}.policy.json"
            persist.save_policy(
                rec.policy, f"{out_dir}/{ppath}",
                meta={"seed": int(master_seed), "task": task_cfg.task, "method": "didor",
                      "role": f"teacher_{k}", "flagged": rec.flagged,
                      "domain_fingerprint": rec.domain.fingerprint(), "created": None},
            )
            persist.write_jsonl(f"{out_dir}/teacher_{k}.curve.jsonl", rec.curve)
            rec.policy_path = f"{out_dir}/{ppath}"
            files += [ppath, f"teacher_{k}.curve.jsonl"]
        persist.write_json(
            f"{out_dir}/domains.json",
            {
                "dist_fingerprint": teachers.dist_fingerprint,
                "teacher_domains": [
                    {"fingerprint": d.fingerprint(), "values": d.values}
                    for d in teachers.domains
                ],
            },
        )
        files.append("domains.json")
        if cfg.low_memory:
            for rec in teachers.teachers:
                rec.policy = None

    student, curve = distill(student, teachers, cfg, task_cfg, derive_seed(master_seed, "distill"))

    if out_dir is not None:
        persist.save_policy(
            student, f"{out_dir}/student.policy.json",
            meta={"seed": int(master_seed), "task": task_cfg.task, "method": "didor",
                  "role": "student", "created": None},
        )
        persist.write_jsonl(f"{out_dir}/distill.curve.jsonl", curve)
        files += ["student.policy.json", "distill.curve.jsonl"]
    return DidorResult(student=student, teachers=teachers, distill_curve=curve, files=files)
