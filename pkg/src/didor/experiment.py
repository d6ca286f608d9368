"""Experiment runner: config parsing/validation, method dispatch, bundle
persistence, evaluation, and report export.

A config is a JSON document; unknown keys are rejected anywhere in it,
and validation failures name the offending field (with its line in the
file when it can be located). The ``desk`` profile gives fast defaults;
``paper`` reproduces the published training hyper-parameters (48 envs,
8000-step rollouts at 500 Hz, 40 iterations, 16 teachers, ...).
"""

from __future__ import annotations

import dataclasses
import datetime
import json
import os
from dataclasses import dataclass
from pathlib import Path

from . import __version__
from .baselines import EnsemblePolicy, P2PConfig, train_p2pdrl, train_udr
from .distill import DistillConfig, run_didor, train_teachers
from .domain import (
    DomainDistribution,
    DomainParams,
    builtin_distribution,
    from_json_dict,
    load_distribution,
    widen,
)
from .envs import TaskConfig, task_config
from .errors import ConfigError
from .evaluate import (
    evaluate_policy,
    report_csv_rows,
    report_from_jsonl_records,
    report_to_jsonl_records,
    summarize,
)
from .persist import (
    build_manifest,
    config_hash,
    load_policy,
    read_json,
    read_jsonl,
    save_policy,
    write_json,
    write_jsonl,
    write_manifest,
)
from .ppo import PPOConfig
from .seeding import derive_seed

METHODS = ("didor", "udr", "ensemble", "p2pdrl")

_TOP_KEYS = {"task", "method", "profile", "master_seed", "out_dir", "domain",
             "env", "ppo", "distill", "p2p", "eval", "udr"}

_PROFILE_DEFAULTS = {
    "desk": {
        "env": {"dt": 0.01, "max_steps": 600},
        "ppo": {"iterations": 150, "n_envs": 8, "steps_per_env": 1200, "lr": 1e-3},
        "distill": {"n_teachers": 4, "iterations": 20, "epochs": 10,
                    "steps_per_teacher": 2400, "lr": 1e-2},
        "p2p": {"alpha": 0.05},
        "eval": {"n_domains": 16, "n_rollouts": 10, "test_scale": 1.5},
    },
    "paper": {
        "env": {"dt": 0.002, "max_steps": 8000},
        "ppo": {"iterations": 40, "n_envs": 48, "steps_per_env": 8000, "lr": 1e-3},
        "distill": {"n_teachers": 16, "iterations": 20, "epochs": 10,
                    "steps_per_teacher": 8000, "lr": 1e-2},
        "p2p": {"alpha": 0.05},
        "eval": {"n_domains": 32, "n_rollouts": 100, "test_scale": 1.5},
    },
}

_ENV_KEYS = {"dt", "max_steps", "action_limit", "q_weights", "r_weight",
             "init_noise_std", "start_upright"}
_PPO_KEYS = {f.name for f in dataclasses.fields(PPOConfig)}
_DISTILL_KEYS = {f.name for f in dataclasses.fields(DistillConfig)}
_P2P_KEYS = {"workers", "alpha"}
_EVAL_KEYS = {"n_domains", "n_rollouts", "test_scale"}
_UDR_KEYS = {"total_iterations"}


@dataclass
class ExperimentConfig:
    task: str
    method: str
    profile: str
    master_seed: int
    out_dir: str
    dist: DomainDistribution
    task_cfg: TaskConfig
    ppo: PPOConfig
    distill: DistillConfig
    p2p_workers: int
    p2p_alpha: float
    eval_protocol: dict
    udr_iterations: int
    doc: dict  # resolved raw document (what config.json records)

    @property
    def hash(self) -> str:
        return config_hash(self.doc)


class _ConfigContext:
    """Carries the raw text so errors can point at the offending line."""

    def __init__(self, text: str):
        self.lines = text.splitlines()

    def fail(self, field: str, message: str):
        needle = f'"{field.split(".")[-1]}"'
        for i, line in enumerate(self.lines, start=1):
            if needle in line:
                raise ConfigError(f"{field}: {message} (line {i})")
        raise ConfigError(f"{field}: {message}")


def _check_keys(ctx: _ConfigContext, section: str, doc: dict, allowed: set):
    if not isinstance(doc, dict):
        ctx.fail(section, f"must be an object, got {type(doc).__name__}")
    for key in doc:
        if key not in allowed:
            ctx.fail(f"{section}.{key}" if section else key, "unknown key")


def load_config(path, seed_override: int | None = None, out_override: str | None = None,
                profile_override: str | None = None) -> ExperimentConfig:
    """Parse, default-fill, and validate an experiment config file."""
    text = Path(path).read_text(encoding="utf-8")
    ctx = _ConfigContext(text)
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    _check_keys(ctx, "", doc, _TOP_KEYS)

    task = doc.get("task")
    if task not in ("cartpole", "furuta"):
        ctx.fail("task", f"must be 'cartpole' or 'furuta', got {task!r}")
    method = doc.get("method")
    if method not in METHODS:
        ctx.fail("method", f"must be one of {METHODS}, got {method!r}")
    profile = profile_override or doc.get("profile", "desk")
    if profile not in _PROFILE_DEFAULTS:
        ctx.fail("profile", f"must be 'desk' or 'paper', got {profile!r}")
    defaults = _PROFILE_DEFAULTS[profile]

    if seed_override is not None:
        master_seed = int(seed_override)
    elif "master_seed" in doc:
        if not isinstance(doc["master_seed"], int):
            ctx.fail("master_seed", "must be an integer")
        master_seed = doc["master_seed"]
    else:
        ctx.fail("master_seed", "required (set it in the config or pass --seed)")
    if not 0 <= master_seed < 2**64:
        ctx.fail("master_seed", "must fit in 64 bits")

    out_dir = out_override or doc.get("out_dir") or f"runs/{method}-{task}-{master_seed}"

    domain_doc = doc.get("domain")
    if domain_doc is None:
        dist = builtin_distribution(task)
    elif isinstance(domain_doc, dict) and "file" in domain_doc:
        ref = Path(domain_doc["file"])
        if not ref.exists():
            ctx.fail("domain.file", f"referenced file does not exist: {ref}")
        dist = load_distribution(ref)
    else:
        try:
            dist = from_json_dict(domain_doc)
        except (ConfigError, TypeError, ValueError) as exc:
            ctx.fail("domain", str(exc))
    if dist.task != task:
        ctx.fail("domain", f"distribution is for task {dist.task!r}, experiment is {task!r}")

    def section(name, allowed):
        sec = doc.get(name, {})
        _check_keys(ctx, name, sec, allowed)
        merged = dict(defaults.get(name, {}))
        merged.update(sec)
        return merged

    env_kw = section("env", _ENV_KEYS)
    try:
        task_cfg = task_config(task, profile=profile, **{
            k: (tuple(v) if k == "q_weights" else v) for k, v in env_kw.items()
            if k not in ("dt", "max_steps")
        }, dt=env_kw["dt"], max_steps=env_kw["max_steps"])
    except ConfigError as exc:
        ctx.fail("env", str(exc))

    ppo_kw = section("ppo", _PPO_KEYS)
    try:
        ppo_cfg = PPOConfig(**ppo_kw)
    except (ValueError, TypeError) as exc:
        ctx.fail("ppo", str(exc))

    distill_kw = section("distill", _DISTILL_KEYS)
    try:
        distill_cfg = DistillConfig(**distill_kw)
    except (ValueError, TypeError) as exc:
        ctx.fail("distill", str(exc))

    p2p_kw = section("p2p", _P2P_KEYS)
    p2p_workers = int(p2p_kw.get("workers", 4 if task == "cartpole" else 2))
    p2p_alpha = float(p2p_kw.get("alpha", 0.05))
    if method == "p2pdrl":
        try:
            P2PConfig(workers=p2p_workers, alpha=p2p_alpha, ppo=ppo_cfg)
        except ValueError as exc:
            ctx.fail("p2p", str(exc))

    eval_kw = section("eval", _EVAL_KEYS)
    if int(eval_kw["n_domains"]) < 1 or int(eval_kw["n_rollouts"]) < 1:
        ctx.fail("eval", "n_domains and n_rollouts must be >= 1")
    if not float(eval_kw["test_scale"]) > 0:
        ctx.fail("eval.test_scale", "must be > 0")

    udr_kw = section("udr", _UDR_KEYS)
    udr_iterations = int(
        udr_kw.get("total_iterations", distill_cfg.n_teachers * ppo_cfg.iterations)
    )
    if udr_iterations < 1:
        ctx.fail("udr.total_iterations", "must be >= 1")

    # out_dir is run placement, not experiment identity: leaving it out keeps
    # config.json and the config hash byte-identical across relocated reruns
    resolved = {
        "task": task, "method": method, "profile": profile,
        "master_seed": master_seed,
        "domain": domain_doc if domain_doc is not None else {"builtin": task},
        "env": env_kw, "ppo": ppo_kw, "distill": distill_kw,
        "p2p": {"workers": p2p_workers, "alpha": p2p_alpha},
        "eval": eval_kw, "udr": {"total_iterations": udr_iterations},
    }
    return ExperimentConfig(
        task=task, method=method, profile=profile, master_seed=master_seed,
        out_dir=out_dir, dist=dist, task_cfg=task_cfg, ppo=ppo_cfg,
        distill=distill_cfg, p2p_workers=p2p_workers, p2p_alpha=p2p_alpha,
        eval_protocol={k: eval_kw[k] for k in ("n_domains", "n_rollouts", "test_scale")},
        udr_iterations=udr_iterations, doc=resolved,
    )


# --- training stage -----------------------------------------------------------------

def _policy_meta(cfg: ExperimentConfig, role: str) -> dict:
    # created is deliberately null: policy files must be byte-identical
    # across reruns; wall-clock provenance lives in the manifest.
    return {"seed": cfg.master_seed, "task": cfg.task, "method": cfg.method,
            "role": role, "created": None}


def _bundle_files(out_dir) -> list:
    return sorted(
        p.name for p in Path(out_dir).iterdir()
        if p.is_file() and p.name != "manifest.json"
    )


def run_training(cfg: ExperimentConfig) -> list:
    """Train per the config's method and persist the bundle artifacts.

    Returns the list of files written (relative to the bundle dir).
    """
    out = Path(cfg.out_dir)
    os.makedirs(out, exist_ok=True)
    write_json(out / "config.json", cfg.doc)
    seeds = {"teachers": derive_seed(cfg.master_seed, "teachers"),
             "distill": derive_seed(cfg.master_seed, "distill"),
             "train": derive_seed(cfg.master_seed, "train"),
             "eval": derive_seed(cfg.master_seed, "eval")}

    if cfg.method == "didor":
        run_didor(cfg.dist, cfg.task_cfg, cfg.ppo, cfg.distill, cfg.master_seed,
                  out_dir=str(out))
    elif cfg.method == "udr":
        policy, _, curve = train_udr(cfg.dist, cfg.udr_iterations, cfg.task_cfg,
                                     cfg.ppo, seeds["train"])
        save_policy(policy, out / "policy.json", meta=_policy_meta(cfg, "udr"))
        write_jsonl(out / "curve.jsonl", curve)
    elif cfg.method == "ensemble":
        teachers = train_teachers(cfg.dist, cfg.distill.n_teachers, cfg.task_cfg,
                                  cfg.ppo, seeds["teachers"],
                                  return_floor=cfg.distill.teacher_return_floor)
        members = []
        for k, rec in enumerate(teachers.teachers):
            name = f"teacher_{k}.policy.json"
            save_policy(rec.policy, out / name, meta=_policy_meta(cfg, f"teacher_{k}"))
            write_jsonl(out / f"teacher_{k}.curve.jsonl", rec.curve)
            members.append(name)
        write_json(out / "ensemble.json", {"members": members, "combine": "mean-of-means"})
        write_json(out / "domains.json", {
            "dist_fingerprint": teachers.dist_fingerprint,
            "teacher_domains": [
                {"fingerprint": d.fingerprint(), "values": d.values} for d in teachers.domains
            ],
        })
    elif cfg.method == "p2pdrl":
        result = train_p2pdrl(cfg.dist, P2PConfig(cfg.p2p_workers, cfg.p2p_alpha, cfg.ppo),
                              cfg.task_cfg, seeds["train"])
        save_policy(result.policy, out / "policy.json", meta=_policy_meta(cfg, "worker_0"))
        for k, curve in enumerate(result.curves):
            write_jsonl(out / f"worker_{k}.curve.jsonl", curve)
    else:  # pragma: no cover - load_config rejects unknown methods
        raise ConfigError(f"unknown method {cfg.method!r}")

    files = _bundle_files(out)
    manifest = build_manifest(out, cfg.hash, __version__, cfg.master_seed, seeds, files,
                              status="complete", created=_now())
    manifest["method"] = cfg.method
    if cfg.method == "p2pdrl":
        manifest["resident_policies"] = cfg.p2p_workers
    write_manifest(out, manifest)
    return files


def _now() -> str:
    return datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")


# --- evaluation stage ----------------------------------------------------------------

def _load_policy_like(cfg: ExperimentConfig):
    out = Path(cfg.out_dir)
    if cfg.method == "didor":
        return load_policy(out / "student.policy.json")
    if cfg.method == "ensemble":
        doc = read_json(out / "ensemble.json")
        return EnsemblePolicy([load_policy(out / m) for m in doc["members"]])
    return load_policy(out / "policy.json")


def _teacher_domains(cfg: ExperimentConfig) -> list:
    doc = read_json(Path(cfg.out_dir) / "domains.json")
    domains = [DomainParams(d["values"]) for d in doc["teacher_domains"]]
    for d, rec in zip(domains, doc["teacher_domains"]):
        if d.fingerprint() != rec["fingerprint"]:
            raise ConfigError(f"teacher domain fingerprint mismatch in {cfg.out_dir}")
    return domains


def run_evaluation(cfg: ExperimentConfig) -> list:
    """Evaluate the bundle's policy on its panels and persist the reports.

    didor/ensemble bundles get a teacher-domain panel (the exact frozen
    training domains) plus the unseen panel; every method gets the unseen
    panel, drawn from the widened distribution with an evaluation-only
    seed stream.
    """
    out = Path(cfg.out_dir)
    policy_like = _load_policy_like(cfg)
    if policy_like.obs_dim != cfg.task_cfg.obs_dim:
        raise ConfigError(
            f"bundle policy obs_dim {policy_like.obs_dim} does not match task "
            f"{cfg.task!r} obs_dim {cfg.task_cfg.obs_dim}"
        )
    proto = cfg.eval_protocol
    eval_seed = derive_seed(cfg.master_seed, "eval")
    panels = {}
    if cfg.method in ("didor", "ensemble"):
        panels["teacher"] = _teacher_domains(cfg)
    from .seeding import stream as _stream

    test_dist = widen(cfg.dist, proto["test_scale"])
    dom_rng = _stream(cfg.master_seed, "eval-domains")
    from .domain import sample_domain

    panels["unseen"] = [sample_domain(test_dist, dom_rng) for _ in range(proto["n_domains"])]

    written = []
    for panel, domains in panels.items():
        report = evaluate_policy(
            policy_like, domains, cfg.task_cfg, proto["n_rollouts"],
            derive_seed(eval_seed, f"panel/{panel}"), method=cfg.method,
            policy_seed=cfg.master_seed,
            test_scale=proto["test_scale"] if panel == "unseen" else None,
        )
        write_jsonl(out / f"eval_{panel}.report.jsonl", report_to_jsonl_records(report))
        write_json(out / f"eval_{panel}.summary.json", {
            "method": cfg.method, "seed": cfg.master_seed, "panel": panel,
            "stats": summarize(report).as_dict(), "latency_ms": report.latency_ms,
            "protocol_fingerprint": report.protocol_fingerprint(),
        })
        written += [f"eval_{panel}.report.jsonl", f"eval_{panel}.summary.json"]

    manifest = read_json(out / "manifest.json")
    manifest = build_manifest(out, cfg.hash, __version__, cfg.master_seed,
                              manifest.get("stage_seeds", {}), _bundle_files(out),
                              status="complete", created=_now())
    manifest["method"] = cfg.method
    write_manifest(out, manifest)
    return written


# --- export stage ----------------------------------------------------------------------

def export_report(cfg_or_dir, fmt: str = "csv") -> list:
    """Export a bundle's evaluation reports to CSV (or pass-through JSONL).

    CSV columns: method,seed,domain,rollout,return — one row per rollout.
    Deterministic bytes for a given bundle. Errors if the bundle holds no
    evaluation reports.
    """
    out = Path(cfg_or_dir.out_dir if isinstance(cfg_or_dir, ExperimentConfig) else cfg_or_dir)
    if fmt not in ("csv", "jsonl"):
        raise ConfigError(f"unknown export format {fmt!r}")
    report_files = sorted(out.glob("eval_*.report.jsonl"))
    if not report_files:
        raise ConfigError(f"{out}: no evaluation reports to export (run `didor eval` first)")
    written = []
    for rf in report_files:
        panel = rf.name[len("eval_"):-len(".report.jsonl")]
        records = read_jsonl(rf)
        report = report_from_jsonl_records(records)
        if fmt == "jsonl":
            dst = out / f"returns_{panel}.jsonl"
            write_jsonl(dst, records)
        else:
            dst = out / f"returns_{panel}.csv"
            rows = report_csv_rows(report)
            with open(dst, "w", encoding="utf-8") as fh:
                fh.write("method,seed,domain,rollout,return\n")
                for method, seed, domain, rollout, ret in rows:
                    fh.write(f"{method},{seed},{domain},{rollout},{ret!r}\n")
        written.append(dst.name)
    return written


# --- top-level dispatch ------------------------------------------------------------------

def run_experiment(config_path, seed_override=None, out_override=None,
                   profile_override=None, stage: str = "train") -> int:
    """Run one stage for a config file; returns the process exit code
    (0 ok, 1 runtime failure, 2 invalid config)."""
    try:
        cfg = load_config(config_path, seed_override, out_override, profile_override)
    except ConfigError as exc:
        print(f"invalid config: {exc}")
        return 2
    try:
        if stage == "train":
            run_training(cfg)
        elif stage == "eval":
            run_evaluation(cfg)
        elif stage == "export":
            export_report(cfg)
        else:
            raise ConfigError(f"unknown stage {stage!r}")
    except ConfigError as exc:
        print(f"invalid config: {exc}")
        return 2
    except Exception as exc:  # noqa: BLE001 - report stage and mark bundle
        out = Path(cfg.out_dir)
        if out.is_dir() and stage == "train":
            try:
                manifest = build_manifest(
                    out, cfg.hash, __version__, cfg.master_seed, {},
                    _bundle_files(out), status="incomplete", created=_now(),
                )
                manifest["method"] = cfg.method
                manifest["error"] = f"{stage}: {exc}"
                write_manifest(out, manifest)
            except OSError:
                pass
        print(f"stage {stage!r} failed: {exc}")
        return 1
    return 0
