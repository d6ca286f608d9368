"""On-policy trainer: parallel rollout collection, GAE, clipped PPO update
with approximate-KL early stopping.

All randomness flows through streams derived from an integer seed (see
seeding.py): per-env streams feed initial states and action noise, a
per-iteration domain stream feeds resampling modes, and a per-iteration
update stream feeds minibatch shuffles. Fixed-domain runs never touch the
domain stream, so a degenerate (scale-0) resampling run reproduces a
fixed-domain run bit for bit.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .domain import DomainDistribution, DomainParams, sample_domain
from .envs import ACT_DIM, TaskConfig, VecEnv
from .errors import SimulationDiverged
from .net import (
    GaussianPolicy,
    GradBuffer,
    ValueNet,
    adam_update,
    gaussian_entropy,
    gaussian_kl_grads_wrt_q,
    gaussian_log_prob,
    init_policy,
    init_value,
    mlp_backward,
)
from .seeding import derive_seed, stream


@dataclass(frozen=True)
class PPOConfig:
    gamma: float = 0.99
    lam: float = 0.97
    clip: float = 0.1
    kl_stop: float = 0.05
    lr: float = 1e-3
    n_envs: int = 8
    steps_per_env: int = 1200
    iterations: int = 40
    update_epochs: int = 10
    minibatch_size: int = 512
    vf_coef: float = 0.5
    entropy_coef: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError(f"gamma must be in (0, 1], got {self.gamma}")
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError(f"lam must be in [0, 1], got {self.lam}")
        if not self.clip > 0:
            raise ValueError(f"clip must be > 0, got {self.clip}")
        if not self.kl_stop > 0:
            raise ValueError(f"kl_stop must be > 0, got {self.kl_stop}")
        if self.lr <= 0 or self.n_envs < 1 or self.steps_per_env < 1:
            raise ValueError("lr, n_envs, steps_per_env must be positive")
        if self.iterations < 0 or self.update_epochs < 1 or self.minibatch_size < 1:
            raise ValueError("iterations >= 0; update_epochs, minibatch_size >= 1")


@dataclass
class Trajectory:
    """One episode or truncated segment from a single env instance."""

    obs: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    log_probs: np.ndarray
    values: np.ndarray
    dones: np.ndarray
    bootstrap: float
    domain_id: int


@dataclass
class RolloutBatch:
    """Concatenated trajectories (env-index order) with GAE post-processing."""

    obs: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    log_probs: np.ndarray
    values: np.ndarray
    dones: np.ndarray
    advantages: np.ndarray
    returns: np.ndarray
    domain_ids: np.ndarray
    domain_fingerprints: list
    episode_returns: list
    partial_returns: list

    def __len__(self) -> int:
        return self.obs.shape[0]

    def mean_return(self) -> float:
        """Mean undiscounted return of episodes completed in the window
        (falls back to partial episodes if none completed)."""
        pool = self.episode_returns or self.partial_returns
        return float(np.mean(pool))


def compute_gae(rewards, values, dones, bootstrap, gamma: float, lam: float):
    """Generalized advantage estimation with episode masking.

    delta_t = r_t + gamma * v_{t+1} * (1 -done_t) - v_t, with the value
    after the last step given by ``bootstrap``; advantages accumulate as
    A_t = delta_t + gamma * lam * (1 - done_t) * A_{t+1}. Returns-to-go
    targets are A + v.
    """
    rewards = np.asarray(rewards, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    dones = np.asarray(dones, dtype=np.float64)
    if not rewards.shape == values.shape == dones.shape:
        raise ValueError("rewards, values, dones must have equal shapes")
    T = rewards.shape[0]
    next_values = np.concatenate([values[1:], [float(bootstrap)]])
    deltas = rewards + gamma * next_values * (1.0 - dones) - values
    advantages = np.empty(T)
    acc = 0.0
    for t in range(T - 1, -1, -1):
        acc = deltas[t] + gamma * lam * (1.0 - dones[t]) * acc
        advantages[t] = acc
    return advantages, advantages + values


def collect_rollouts(policy: GaussianPolicy, value: ValueNet, env_factory, domains,
                     cfg: PPOConfig, seed: int) -> RolloutBatch:
    """Roll the stochastic policy for steps_per_env transitions in each of
    len(domains) parallel env instances.

    Env instance e draws its initial-state and action noise from the
    private stream (seed, "env", e), so results are independent of batch
    scheduling. Log-probs are recorded under the collecting policy
    snapshot. A diverged simulation raises with the offending domain
    attached.
    """
    n = len(domains)
    if n < 1:
        raise ValueError("at least one domain required")
    rngs = [stream(seed, "env", e) for e in range(n)]
    venv = env_factory(domains, rngs)
    if policy.obs_dim != venv.cfg.obs_dim:
        raise ValueError(
            f"policy obs_dim {policy.obs_dim} does not match task obs_dim {venv.cfg.obs_dim}"
        )

    T = cfg.steps_per_env
    act_dim = policy.act_dim
    obs_buf = np.empty((T, n, venv.cfg.obs_dim))
    act_buf = np.empty((T, n, act_dim))
    rew_buf = np.empty((T, n))
    logp_buf = np.empty((T, n))
    val_buf = np.empty((T, n))
    done_buf = np.zeros((T, n))
    term_buf = np.zeros((T, n))
    fin_buf = np.empty((T, n, venv.cfg.obs_dim))

    obs = venv.reset_all()
    ep_return = np.zeros(n)
    episode_returns: list = []
    for t in range(T):
        mean, std = policy.forward(obs)
        noise = np.stack([rngs[e].standard_normal(act_dim) for e in range(n)])
        actions = mean + std * noise
        logp = gaussian_log_prob(mean, std, actions)
        vals = value.value(obs)
        out = venv.step(actions[:, 0])
        if out.diverged.any():
            bad = int(np.flatnonzero(out.diverged)[0])
            raise SimulationDiverged(
                f"simulation diverged in env {bad}", state=None,
                domain_id=domains[bad].fingerprint(),
            )
        obs_buf[t] = obs
        act_buf[t] = actions
        rew_buf[t] = rewards = out.reward
        logp_buf[t] = logp
        val_buf[t] = vals
        done_buf[t] = out.done
        term_buf[t] = out.terminal
        fin_buf[t] = out.final_obs
        ep_return += rewards
        for e in np.flatnonzero(out.done):
            episode_returns.append(float(ep_return[e]))
            ep_return[e] = 0.0
        obs = out.obs
    window_bootstrap = value.value(obs)

    # per-trajectory GAE: a physical termination masks the tail value, a
    # bare step-limit truncation bootstraps from the pre-reset state, and
    # the collection-window edge bootstraps from the current state
    truncated = (done_buf > 0) & (term_buf == 0)
    trunc_values = np.zeros((T, n))
    if truncated.any():
        trunc_values[truncated] = value.value(fin_buf[truncated])

    advantages = np.empty((T, n))
    returns = np.empty((T, n))
    for e in range(n):
        start = 0
        for t in range(T):
            if done_buf[t, e] or t == T - 1:
                seg = slice(start, t + 1)
                seg_dones = np.zeros(t + 1 - start)
                if term_buf[t, e]:
                    seg_dones[-1] = 1.0
                    boot = 0.0
                elif done_buf[t, e]:
                    boot = trunc_values[t, e]
                else:
                    boot = window_bootstrap[e]
                advantages[seg, e], returns[seg, e] = compute_gae(
                    rew_buf[seg, e], val_buf[seg, e], seg_dones, boot,
                    cfg.gamma, cfg.lam,
                )
                start = t + 1

    # env-index-major concatenation
    def flat(a):
        return np.concatenate([a[:, e] for e in range(n)], axis=0)

    adv = flat(advantages)
    std_a = adv.std()
    adv = (adv - adv.mean()) / (std_a if std_a > 0 else 1.0)
    partial = [float(r) for r in ep_return if r > 0.0]
    return RolloutBatch(
        obs=flat(obs_buf),
        actions=flat(act_buf),
        rewards=flat(rew_buf),
        log_probs=flat(logp_buf),
        values=flat(val_buf),
        dones=flat(done_buf),
        advantages=adv,
        returns=flat(returns),
        domain_ids=np.repeat(np.arange(n), T),
        domain_fingerprints=[d.fingerprint() for d in domains],
        episode_returns=episode_returns,
        partial_returns=partial,
    )


def surrogate_loss(policy: GaussianPolicy, obs, actions, old_log_probs, advantages,
                   clip: float):
    """Clipped PPO objective (as a loss, i.e. negated) and its gradients
    w.r.t. the policy mean output and log-std."""
    mean, std, cache = policy.forward_cached(obs)
    logp = gaussian_log_prob(mean, std, actions)
    ratio = np.exp(logp - old_log_probs)
    surr1 = ratio * advantages
    surr2 = np.clip(ratio, 1.0 - clip, 1.0 + clip) * advantages
    loss = -float(np.mean(np.minimum(surr1, surr2)))

    m = obs.shape[0] if obs.ndim > 1 else 1
    active = surr1 <= surr2  # gradient flows only through the unclipped branch
    dlogp = np.where(active, -advantages * ratio, 0.0) / m
    z = (actions - mean) / std
    dmean = dlogp[:, None] * (z / std)
    dlog_std = np.sum(dlogp[:, None] * (z * z - 1.0), axis=0)
    return loss, cache, dmean, dlog_std


def ppo_update(policy: GaussianPolicy, value: ValueNet, batch: RolloutBatch,
               cfg: PPOConfig, rng: np.random.Generator,
               policy_buf: GradBuffer | None = None, value_buf: GradBuffer | None = None,
               peers: list | None = None, peer_alpha: float = 0.0):
    """Up to update_epochs of shuffled-minibatch ascent on the clipped
    surrogate, with squared-error value regression; epochs stop early once
    the batch-mean approximate KL(old || new) exceeds kl_stop.

    When ``peers`` is given, each minibatch's policy loss additionally
    carries peer_alpha / (K-1) * sum_j mean-state KL(peer_j || self)
    (peer parameters are frozen for the duration of the update).

    A non-finite loss or gradient aborts the update: parameters and
    optimizer state are restored to their pre-update values and the
    diagnostics carry ``aborted``.
    """
    policy_buf = policy_buf if policy_buf is not None else GradBuffer(policy)
    value_buf = value_buf if value_buf is not None else GradBuffer(value)

    snap = (
        policy.copy(), value.copy(),
        [m.copy() for m in policy_buf.m], [v.copy() for v in policy_buf.v], policy_buf.t,
        [m.copy() for m in value_buf.m], [v.copy() for v in value_buf.v], value_buf.t,
    )

    def _abort(reason: str):
        policy_restored, value_restored = snap[0], snap[1]
        for dst, src in zip(policy.mean_net.weights, policy_restored.mean_net.weights):
            dst[...] = src
        for dst, src in zip(policy.mean_net.biases, policy_restored.mean_net.biases):
            dst[...] = src
        policy.log_std[...] = policy_restored.log_std
        for dst, src in zip(value.net.weights, value_restored.net.weights):
            dst[...] = src
        for dst, src in zip(value.net.biases, value_restored.net.biases):
            dst[...] = src
        for dst, src in zip(policy_buf.m, snap[2]):
            dst[...] = src
        for dst, src in zip(policy_buf.v, snap[3]):
            dst[...] = src
        policy_buf.t = snap[4]
        policy_buf.zero()
        for dst, src in zip(value_buf.m, snap[5]):
            dst[...] = src
        for dst, src in zip(value_buf.v, snap[6]):
            dst[...] = src
        value_buf.t = snap[7]
        value_buf.zero()
        diag = _diagnostics(policy, value, batch, cfg, epochs_run=0)
        diag["aborted"] = reason
        return policy, value, diag

    n = len(batch)
    peer_forward = None
    if peers:
        frozen = [p.copy() for p in peers]
        coef = peer_alpha / max(len(frozen), 1)

        def peer_forward(obs_mb):
            return [(p.forward(obs_mb)) for p in frozen]

    epochs_run = 0
    kl = 0.0
    epoch_kls = []
    for _ in range(cfg.update_epochs):
        perm = rng.permutation(n)
        for start in range(0, n, cfg.minibatch_size):
            mb = perm[start:start + cfg.minibatch_size]
            obs_mb = batch.obs[mb]
            m = len(mb)

            loss_pi, cache, dmean, dlog_std = surrogate_loss(
                policy, obs_mb, batch.actions[mb], batch.log_probs[mb],
                batch.advantages[mb], cfg.clip,
            )
            if cfg.entropy_coef:
                # loss -= coef * entropy; d entropy / d log_std = 1 per dim
                loss_pi -= cfg.entropy_coef * float(gaussian_entropy(np.exp(policy.log_std)))
                dlog_std = dlog_std - cfg.entropy_coef
            if peer_forward is not None:
                mean_q, std_q = policy.forward(obs_mb)
                for mp, sp in peer_forward(obs_mb):
                    kl_states, dmu_q, dls_q = gaussian_kl_grads_wrt_q((mp, sp), (mean_q, std_q))
                    loss_pi += coef * float(np.mean(kl_states))
                    dmean = dmean + (coef / m) * dmu_q
                    dlog_std = dlog_std + (coef / m) * np.sum(dls_q, axis=0)

            v_mb, v_cache = value.value_cached(obs_mb)
            err = v_mb - batch.returns[mb]
            loss_v = cfg.vf_coef * float(np.mean(err * err))
            if not np.isfinite(loss_pi + loss_v):
                return _abort(f"non-finite loss (policy {loss_pi}, value {loss_v})")

            dws, dbs, _ = mlp_backward(policy.mean_net, cache, dmean)
            policy_buf.add_mlp(dws, dbs)
            policy_buf.grads[-1] += dlog_std
            dv = (cfg.vf_coef * 2.0 / m) * err
            vws, vbs, _ = mlp_backward(value.net, v_cache, dv[:, None])
            value_buf.add_mlp(vws, vbs)
            try:
                adam_update(policy, policy_buf, cfg.lr)
                adam_update(value, value_buf, cfg.lr)
            except ValueError as exc:
                return _abort(str(exc))

        epochs_run += 1
        new_logp = gaussian_log_prob(*policy.forward(batch.obs), batch.actions)
        kl = float(np.mean(batch.log_probs - new_logp))
        epoch_kls.append(kl)
        if kl > cfg.kl_stop:
            break

    diag = _diagnostics(policy, value, batch, cfg, epochs_run)
    diag["kl"] = kl
    diag["epoch_kls"] = epoch_kls
    return policy, value, diag


def _diagnostics(policy, value, batch, cfg, epochs_run):
    mean, std = policy.forward(batch.obs)
    logp = gaussian_log_prob(mean, std, batch.actions)
    ratio = np.exp(logp - batch.log_probs)
    surr = np.minimum(ratio * batch.advantages,
                      np.clip(ratio, 1.0 - cfg.clip, 1.0 + cfg.clip) * batch.advantages)
    v = value.value(batch.obs)
    return {
        "policy_loss": -float(np.mean(surr)),
        "value_loss": float(np.mean((v - batch.returns) ** 2)),
        "kl": float(np.mean(batch.log_probs - logp)),
        "entropy": float(gaussian_entropy(np.exp(policy.log_std))),
        "epochs": epochs_run,
    }


def resolve_domains(domain, n_envs: int, mode: str, rng: np.random.Generator) -> list:
    """Domain set for one iteration.

    fixed: the given DomainParams in every env. per_env: a fresh draw per
    env (uniform-domain-randomization semantics). shared: one fresh draw
    used by every env (peer-worker semantics).
    """
    if mode == "fixed":
        return [domain] * n_envs
    if mode == "per_env":
        return [sample_domain(domain, rng) for _ in range(n_envs)]
    if mode == "shared":
        d = sample_domain(domain, rng)
        return [d] * n_envs
    raise ValueError(f"unknown domain mode {mode!r}")


def train_ppo(domain, task_cfg: TaskConfig, cfg: PPOConfig, seed: int,
              domain_mode: str | None = None, iterations: int | None = None,
              policy: GaussianPolicy | None = None, value: ValueNet | None = None):
    """Iterations of (collect, update) on a fixed domain (DomainParams) or
    with per-iteration resampling (DomainDistribution).

    Returns (policy, value, curve); curve holds one record per iteration
    with the mean undiscounted return, loss diagnostics, wall time, and
    the fingerprints of the domains the iteration trained on.
    """
    if domain_mode is None:
        domain_mode = "fixed" if isinstance(domain, DomainParams) else "per_env"
    if domain_mode != "fixed" and not isinstance(domain, DomainDistribution):
        raise ValueError("resampling modes need a DomainDistribution")
    if domain_mode == "fixed" and not isinstance(domain, DomainParams):
        raise ValueError("fixed mode needs DomainParams")

    if policy is None:
        policy = init_policy(task_cfg.obs_dim, ACT_DIM, stream(seed, "init/policy"))
    if value is None:
        value = init_value(task_cfg.obs_dim, stream(seed, "init/value"))
    policy_buf = GradBuffer(policy)
    value_buf = GradBuffer(value)

    def env_factory(domains, rngs):
        return VecEnv(task_cfg, domains, rngs)

    curve = []
    total = cfg.iterations if iterations is None else iterations
    for it in range(total):
        t0 = time.perf_counter()
        domains = resolve_domains(domain, cfg.n_envs, domain_mode, stream(seed, "domains", it))
        try:
            batch = collect_rollouts(policy, value, env_factory, domains, cfg,
                                     derive_seed(seed, "collect", it))
            _, _, diag = ppo_update(policy, value, batch, cfg, stream(seed, "update", it),
                                    policy_buf, value_buf)
        except SimulationDiverged as exc:
            raise SimulationDiverged(
                f"iteration {it}: {exc}", state=exc.state, domain_id=exc.domain_id
            ) from exc
        curve.append(curve_record(it, batch, diag, t0))
    return policy, value, curve


def curve_record(it: int, batch: RolloutBatch, diag: dict, t0: float) -> dict:
    """One learning-curve JSONL record (wall_ms is the only field exempt
    from bit-for-bit reproducibility)."""
    record = {
        "iter": it,
        "mean_return": batch.mean_return(),
        "policy_loss": diag["policy_loss"],
        "value_loss": diag["value_loss"],
        "kl": diag["kl"],
        "entropy": diag["entropy"],
        "wall_ms": (time.perf_counter() - t0) * 1e3,
        "domains": batch.domain_fingerprints,
    }
    if "aborted" in diag:
        record["aborted"] = diag["aborted"]
    return record
