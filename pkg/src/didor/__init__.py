"""Distilling domain-randomized teacher policies into one robust student,
with UDR / teacher-ensemble / P2PDRL baselines and a sim-to-sim
evaluation protocol, on self-contained cart-pole and Furuta-pendulum
swing-up simulators."""

__version__ = "0.1.0"

from .baselines import EnsemblePolicy, P2PConfig, ensemble_action, train_p2pdrl, train_udr
from .distill import (
    DistillConfig,
    TeacherSet,
    collect_student_rollouts,
    distill,
    distillation_loss,
    run_didor,
    train_teachers,
)
from .domain import (
    DomainDistribution,
    DomainParams,
    ParamSpec,
    builtin_distribution,
    nominal_domain,
    sample_domain,
    widen,
)
from .envs import Env, EnvState, StepResult, TaskConfig, reset_env, rk4_step, step_env, task_config
from .errors import ConfigError, IntegrityError, ProtocolMismatch, SimulationDiverged
from .evaluate import EvalReport, SummaryStats, compare_methods, evaluate_policy, summarize
from .net import (
    GaussianPolicy,
    GradBuffer,
    MLPParams,
    ValueNet,
    adam_update,
    gaussian_entropy,
    gaussian_kl,
    gaussian_log_prob,
    init_policy,
    init_value,
    policy_forward,
)
from .persist import load_policy, save_policy, verify_bundle
from .ppo import PPOConfig, RolloutBatch, collect_rollouts, compute_gae, ppo_update, train_ppo
from .seeding import derive_seed, stream

from .estimators import UDR, DiDoR, P2PDRL, TeacherEnsemble  # isort: skip (imports the above)
