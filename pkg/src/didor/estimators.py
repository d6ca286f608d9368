"""Estimator-style wrappers: fit on a domain distribution, predict actions.

These are thin facades over the functional training pipeline so the
methods compose with sklearn-style tooling: constructor arguments are
stored verbatim, ``get_params``/``set_params`` follow the sklearn
contract, ``fit`` trains and sets trailing-underscore attributes, and
``predict`` maps observations to deterministic actions.
"""

from __future__ import annotations

import inspect

from .baselines import EnsemblePolicy, P2PConfig, train_p2pdrl, train_udr
from .distill import DistillConfig, run_didor, train_teachers
from .domain import builtin_distribution
from .envs import task_config
from .experiment import _PROFILE_DEFAULTS
from .ppo import PPOConfig
from .seeding import derive_seed
from .validation import as_float_array


class BaseTrainer:
    """get_params/set_params over the constructor signature, sklearn-style."""

    @classmethod
    def _param_names(cls) -> list:
        sig = inspect.signature(cls.__init__)
        return [p.name for p in sig.parameters.values() if p.name != "self"]

    def get_params(self, deep: bool = True) -> dict:
        return {name: getattr(self, name) for name in self._param_names()}

    def set_params(self, **params) -> "BaseTrainer":
        valid = set(self._param_names())
        for key, value in params.items():
            if key not in valid:
                raise ValueError(f"invalid parameter {key!r} for {type(self).__name__}")
            setattr(self, key, value)
        return self

    def _resolve(self):
        defaults = _PROFILE_DEFAULTS[self.profile]
        ppo_kw = dict(defaults["ppo"])
        ppo_kw.update({k: v for k, v in (self.ppo_options or {}).items()})
        distill_kw = dict(defaults["distill"])
        for key in ("n_teachers", "iterations", "epochs", "steps_per_teacher", "lr"):
            value = getattr(self, key, None)
            if value is not None:
                distill_kw[key] = value
        task_cfg = task_config(self.task, profile=self.profile, **(self.env_options or {}))
        return task_cfg, PPOConfig(**ppo_kw), DistillConfig(**distill_kw)

    def _dist(self, dist):
        return builtin_distribution(self.task) if dist is None else dist

    def _check_fitted(self):
        if getattr(self, "policy_", None) is None:
            raise RuntimeError(f"{type(self).__name__} is not fitted yet; call fit first")

    def predict(self, obs):
        """Deterministic action(s) for observation(s)."""
        self._check_fitted()
        return self.policy_.predict(as_float_array(obs, "obs", self.policy_.obs_dim))


class DiDoR(BaseTrainer):
    """Train teachers on frozen sampled domains, distill into one student."""

    def __init__(self, task="cartpole", profile="desk", n_teachers=None, iterations=None,
                 epochs=None, steps_per_teacher=None, lr=None, ppo_options=None,
                 env_options=None, random_state=0):
        self.task = task
        self.profile = profile
        self.n_teachers = n_teachers
        self.iterations = iterations
        self.epochs = epochs
        self.steps_per_teacher = steps_per_teacher
        self.lr = lr
        self.ppo_options = ppo_options
        self.env_options = env_options
        self.random_state = random_state

    def fit(self, dist=None):
        task_cfg, ppo_cfg, distill_cfg = self._resolve()
        result = run_didor(self._dist(dist), task_cfg, ppo_cfg, distill_cfg,
                           int(self.random_state))
        self.policy_ = result.student
        self.teachers_ = result.teachers
        self.distill_curve_ = result.distill_curve
        return self


class UDR(BaseTrainer):
    """Uniform domain randomization: fresh domains every iteration."""

    def __init__(self, task="cartpole", profile="desk", total_iterations=None,
                 ppo_options=None, env_options=None, random_state=0):
        self.task = task
        self.profile = profile
        self.total_iterations = total_iterations
        self.ppo_options = ppo_options
        self.env_options = env_options
        self.random_state = random_state

    def fit(self, dist=None):
        task_cfg, ppo_cfg, distill_cfg = self._resolve()
        total = self.total_iterations or distill_cfg.n_teachers * ppo_cfg.iterations
        policy, value, curve = train_udr(self._dist(dist), total, task_cfg, ppo_cfg,
                                         derive_seed(int(self.random_state), "train"))
        self.policy_ = policy
        self.value_ = value
        self.curve_ = curve
        return self


class P2PDRL(BaseTrainer):
    """Peer-regularized workers on fresh domains; worker 0 is the output."""

    def __init__(self, task="cartpole", profile="desk", workers=None, alpha=0.05,
                 ppo_options=None, env_options=None, random_state=0):
        self.task = task
        self.profile = profile
        self.workers = workers
        self.alpha = alpha
        self.ppo_options = ppo_options
        self.env_options = env_options
        self.random_state = random_state

    def fit(self, dist=None):
        task_cfg, ppo_cfg, _ = self._resolve()
        workers = self.workers if self.workers is not None else (
            4 if self.task == "cartpole" else 2
        )
        cfg = P2PConfig(workers=workers, alpha=self.alpha, ppo=ppo_cfg)
        result = train_p2pdrl(self._dist(dist), cfg, task_cfg,
                              derive_seed(int(self.random_state), "train"))
        self.policy_ = result.policy
        self.policies_ = result.policies
        self.curves_ = result.curves
        return self


class TeacherEnsemble(BaseTrainer):
    """DiDoR without the distillation step: average the teachers' actions."""

    def __init__(self, task="cartpole", profile="desk", n_teachers=None,
                 ppo_options=None, env_options=None, random_state=0):
        self.task = task
        self.profile = profile
        self.n_teachers = n_teachers
        self.ppo_options = ppo_options
        self.env_options = env_options
        self.random_state = random_state

    def fit(self, dist=None):
        task_cfg, ppo_cfg, distill_cfg = self._resolve()
        teachers = train_teachers(self._dist(dist), distill_cfg.n_teachers, task_cfg,
                                  ppo_cfg, derive_seed(int(self.random_state), "teachers"))
        self.teachers_ = teachers
        self.policy_ = EnsemblePolicy([t.policy for t in teachers.teachers])
        return self
