"""Evaluation protocol: deterministic (mean-action) rollouts across domain
grids, per-domain return distributions, summary statistics, and
cross-method comparison tables.

Returns are undiscounted sums of per-step rewards (the discount applies
only inside the training objective). A diverged rollout scores 0 with a
flag rather than aborting the grid; 0 is a strict lower bound because
rewards are positive.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .baselines import EnsemblePolicy, ensemble_action
from .envs import TaskConfig, VecEnv
from .errors import ProtocolMismatch
from .persist import config_hash
from .seeding import stream


def mean_action(policy_like, obs):
    """Deterministic action for evaluation: the policy mean, or the
    ensemble's mean of means."""
    if isinstance(policy_like, EnsemblePolicy):
        return ensemble_action(policy_like, obs)
    return policy_like.predict(obs)


@dataclass
class EvalReport:
    method: str
    seed: int
    task: str
    protocol: dict  # n_domains, n_rollouts, test_scale
    entries: list  # per domain: {domain, fingerprint, returns, diverged}
    latency_ms: dict

    def protocol_fingerprint(self) -> str:
        return config_hash({
            "task": self.task,
            "protocol": self.protocol,
            "domains": [e["fingerprint"] for e in self.entries],
        })

    def pooled_returns(self) -> np.ndarray:
        return np.concatenate([np.asarray(e["returns"]) for e in self.entries])


def evaluate_policy(policy_like, domains, task_cfg: TaskConfig, n_rollouts: int,
                    seed: int, method: str = "", policy_seed: int = 0,
                    test_scale: float | None = None) -> EvalReport:
    """n_rollouts episodes per domain with independent initial states.

    Rollout r in domain d draws its initial state from the private
    stream (seed, "eval", d, r); stepping itself is deterministic, so
    report variance stems only from initial states and domains. Per-
    action latency is measured separately on single-observation forward
    passes (the figure that matters for a control loop).
    """
    if policy_like.obs_dim != task_cfg.obs_dim:
        raise ValueError(
            f"policy obs_dim {policy_like.obs_dim} does not match task obs_dim "
            f"{task_cfg.obs_dim}"
        )
    entries = []
    for d, domain in enumerate(domains):
        rngs = [stream(seed, "eval", d, r) for r in range(n_rollouts)]
        venv = VecEnv(task_cfg, [domain] * n_rollouts, rngs)
        obs = venv.reset_all()
        returns = np.zeros(n_rollouts)
        finished = np.zeros(n_rollouts, dtype=bool)
        diverged_flag = np.zeros(n_rollouts, dtype=bool)
        for _ in range(task_cfg.max_steps):
            actions = mean_action(policy_like, obs)
            out = venv.step(actions[:, 0])
            obs = out.obs
            active = ~finished
            returns += np.where(active, out.reward, 0.0)
            diverged_flag |= out.diverged & active
            finished |= out.done
            if finished.all():
                break
        returns[diverged_flag] = 0.0
        entries.append({
            "domain": d,
            "fingerprint": domain.fingerprint(),
            "returns": [float(r) for r in returns],
            "diverged": [bool(f) for f in diverged_flag],
        })

    probe = np.zeros(task_cfg.obs_dim)
    times = []
    for _ in range(100):
        t0 = time.perf_counter()
        mean_action(policy_like, probe)
        times.append((time.perf_counter() - t0) * 1e3)
    latency = {"mean_ms": float(np.mean(times)), "max_ms": float(np.max(times))}

    protocol = {"n_domains": len(domains), "n_rollouts": int(n_rollouts)}
    if test_scale is not None:
        protocol["test_scale"] = float(test_scale)
    return EvalReport(method=method, seed=int(policy_seed), task=task_cfg.task,
                      protocol=protocol, entries=entries, latency_ms=latency)


@dataclass
class SummaryStats:
    median: float
    q1: float
    q3: float
    min: float
    max: float
    mean: float
    per_domain_median: list

    def as_dict(self) -> dict:
        return {
            "median": self.median, "q1": self.q1, "q3": self.q3,
            "min": self.min, "max": self.max, "mean": self.mean,
            "per_domain_median": self.per_domain_median,
        }


def summarize(report: EvalReport) -> SummaryStats:
    """Pooled and per-domain order statistics; quantiles use linear
    interpolation (so {1,2,3,4} has median 2.5)."""
    if not report.entries:
        raise ValueError("cannot summarize an empty report")
    pooled = report.pooled_returns()
    if pooled.size == 0:
        raise ValueError("cannot summarize a report with no returns")
    q1, med, q3 = np.quantile(pooled, [0.25, 0.5, 0.75], method="linear")
    return SummaryStats(
        median=float(med), q1=float(q1), q3=float(q3),
        min=float(pooled.min()), max=float(pooled.max()), mean=float(pooled.mean()),
        per_domain_median=[float(np.quantile(np.asarray(e["returns"]), 0.5, method="linear"))
                           for e in report.entries],
    )


def compare_methods(reports: list) -> dict:
    """Aligned per-method summary rows plus the per-seed median breakdown.

    All reports must share the protocol fingerprint (same task, same
    protocol, same domain grid); mixing grids is an error that names both
    fingerprints.
    """
    if not reports:
        raise ValueError("no reports to compare")
    fp0 = reports[0].protocol_fingerprint()
    for rep in reports[1:]:
        fp = rep.protocol_fingerprint()
        if fp != fp0:
            raise ProtocolMismatch(
                f"incompatible evaluation protocols: {fp0} vs {fp}"
            )
    by_method: dict = {}
    for rep in reports:
        by_method.setdefault(rep.method, []).append(rep)
    rows = []
    for method in sorted(by_method):
        group = by_method[method]
        pooled = np.concatenate([r.pooled_returns() for r in group])
        q1, med, q3 = np.quantile(pooled, [0.25, 0.5, 0.75], method="linear")
        rows.append({
            "method": method,
            "n_policies": len(group),
            "median": float(med), "q1": float(q1), "q3": float(q3),
            "min": float(pooled.min()), "max": float(pooled.max()),
            "mean": float(pooled.mean()),
            "per_seed_median": {
                str(r.seed): float(np.quantile(r.pooled_returns(), 0.5, method="linear"))
                for r in group
            },
        })
    return {"protocol_fingerprint": fp0, "protocol": reports[0].protocol, "rows": rows}


# --- wire formats ----------------------------------------------------------------

def report_to_jsonl_records(report: EvalReport) -> list:
    return [
        {
            "method": report.method,
            "seed": report.seed,
            "task": report.task,
            "protocol": report.protocol,
            "domain": e["domain"],
            "fingerprint": e["fingerprint"],
            "returns": e["returns"],
            "diverged": e["diverged"],
        }
        for e in report.entries
    ]


def report_from_jsonl_records(records: list) -> EvalReport:
    if not records:
        raise ValueError("empty evaluation record set")
    head = records[0]
    entries = [
        {"domain": r["domain"], "fingerprint": r["fingerprint"],
         "returns": r["returns"], "diverged": r["diverged"]}
        for r in records
    ]
    return EvalReport(method=head["method"], seed=head["seed"], task=head["task"],
                      protocol=head["protocol"], entries=entries,
                      latency_ms={"mean_ms": 0.0, "max_ms": 0.0})


def report_csv_rows(report: EvalReport) -> list:
    rows = []
    for e in report.entries:
        for r, ret in enumerate(e["returns"]):
            rows.append((report.method, report.seed, e["domain"], r, ret))
    return rows
