"""The three comparison methods: uniform domain randomization, teacher-
ensemble action averaging, and peer-to-peer distillation (P2PDRL).

UDR resamples fresh domains for every parallel env at every iteration.
The ensemble skips distillation entirely and averages the teachers' mean
actions at query time. P2PDRL trains K workers simultaneously, each on a
freshly drawn domain per iteration, with every worker's PPO loss
regularized toward its peers' action distributions; all K policies are
resident at once, which is the memory cost DiDoR avoids.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from .domain import DomainDistribution
from .envs import ACT_DIM, TaskConfig, VecEnv
from .net import GaussianPolicy, GradBuffer, init_policy, init_value
from .ppo import PPOConfig, collect_rollouts, curve_record, ppo_update, resolve_domains, train_ppo
from .seeding import derive_seed, stream


def train_udr(dist: DomainDistribution, total_iterations: int, task_cfg: TaskConfig,
              ppo_cfg: PPOConfig, seed: int):
    """One policy, fresh domain draws for every env at every iteration.

    ``total_iterations`` is normally set to n_teachers x teacher
    iterations so the env-step budget matches a full teacher set.
    """
    if total_iterations < 1:
        raise ValueError("total_iterations must be >= 1")
    return train_ppo(dist, task_cfg, ppo_cfg, seed, domain_mode="per_env",
                     iterations=total_iterations)


@dataclass
class EnsemblePolicy:
    """Teacher ensemble queried by averaging member mean actions."""

    members: list
    combine: str = "mean-of-means"

    def __post_init__(self):
        if len(self.members) < 1:
            raise ValueError("ensemble needs at least one member")
        if self.combine != "mean-of-means":
            raise ValueError(f"unknown combine rule {self.combine!r}")
        dims = {(m.obs_dim, m.act_dim) for m in self.members}
        if len(dims) > 1:
            raise ValueError(f"ensemble members disagree on dimensions: {sorted(dims)}")

    @property
    def obs_dim(self) -> int:
        return self.members[0].obs_dim

    @property
    def act_dim(self) -> int:
        return self.members[0].act_dim

    def predict(self, obs):
        return ensemble_action(self, obs)


def ensemble_action(ens: EnsemblePolicy, obs):
    """Arithmetic mean of the members' mean actions (no sampling)."""
    out = ens.members[0].predict(obs).copy()
    for m in ens.members[1:]:
        out += m.predict(obs)
    return out / len(ens.members)


@dataclass(frozen=True)
class P2PConfig:
    workers: int = 4
    alpha: float = 0.05
    ppo: PPOConfig = field(default_factory=PPOConfig)

    def __post_init__(self):
        if self.workers < 2:
            raise ValueError("P2PDRL needs at least 2 workers")
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")


@dataclass
class P2PResult:
    policy: GaussianPolicy  # worker 0 (workers are exchangeable by construction)
    policies: list
    curves: list
    resident_policies: int


def train_p2pdrl(dist: DomainDistribution, cfg: P2PConfig, task_cfg: TaskConfig,
                 seed: int) -> P2PResult:
    """K simultaneous workers; per iteration each draws one fresh domain,
    collects rollouts, then updates in worker order on its PPO loss plus
    alpha / (K-1) * sum of KL(peer || self) over its own states.

    Worker k's randomness derives entirely from (seed, "worker", k), so a
    worker with alpha = 0 reproduces a solo shared-domain train_ppo run
    under the same derived seed bit for bit.
    """
    ppo_cfg = cfg.ppo
    K = cfg.workers
    worker_seeds = [derive_seed(seed, "worker", k) for k in range(K)]
    policies = []
    values = []
    pbufs, vbufs = [], []
    for ws in worker_seeds:
        policies.append(init_policy(task_cfg.obs_dim, ACT_DIM, stream(ws, "init/policy")))
        values.append(init_value(task_cfg.obs_dim, stream(ws, "init/value")))
        pbufs.append(GradBuffer(policies[-1]))
        vbufs.append(GradBuffer(values[-1]))

    def env_factory(domains, rngs):
        return VecEnv(task_cfg, domains, rngs)

    curves = [[] for _ in range(K)]
    for it in range(ppo_cfg.iterations):
        t0 = time.perf_counter()
        batches = []
        for k in range(K):  # collection is independent per worker
            domains = resolve_domains(dist, ppo_cfg.n_envs, "shared",
                                      stream(worker_seeds[k], "domains", it))
            batches.append(
                collect_rollouts(policies[k], values[k], env_factory, domains, ppo_cfg,
                                 derive_seed(worker_seeds[k], "collect", it))
            )
        for k in range(K):  # updates are sequential in worker order
            peers = [policies[j] for j in range(K) if j != k]
            _, _, diag = ppo_update(
                policies[k], values[k], batches[k], ppo_cfg,
                stream(worker_seeds[k], "update", it), pbufs[k], vbufs[k],
                peers=peers, peer_alpha=cfg.alpha,
            )
            curves[k].append(curve_record(it, batches[k], diag, t0))
    return P2PResult(policy=policies[0], policies=policies, curves=curves,
                     resident_policies=K)
