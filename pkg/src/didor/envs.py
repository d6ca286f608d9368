"""Randomized-dynamics simulators: cart-pole and Furuta swing-up-and-balance.

Angle convention for both platforms: the pendulum coordinate is 0 hanging
straight down and the upright target sits at |angle| = pi. Dynamics are the
canonical rigid-body models for the Quanser-style devices the built-in
parameter tables describe, integrated with classical RK4.

Sampled domains can be numerically stiff (the pole viscous-friction range
reaches damping rates of hundreds per second), so each control interval dt
is integrated with n internal RK4 substeps. n comes from a closed-form
stiffness bound of the domain's damping/inertia ratios — a function of
(task, params, dt) only, never of state or batch composition — which keeps
stepping deterministic and leaves undamped systems at exactly one
classical RK4 step.

State layout (vectors of length 4):
    cart-pole:  (x [m], theta [rad], xdot [m/s], thetadot [rad/s])
    furuta:     (theta_r [rad], theta_p [rad], and their rates)

The scalar action is motor voltage, clamped to the task's limit. Reward is
exp(-(e^T Q e + R u^2)) with e the error to the upright target, bounded in
(0, 1].
"""

from __future__ import annotations

import math
from collections import namedtuple
from dataclasses import dataclass

import numpy as np

from .domain import REQUIRED_PARAMS, DomainParams
from .errors import ConfigError, SimulationDiverged

OBS_DIM = {"cartpole": 5, "furuta": 6}
ACT_DIM = 1

_TINY = np.finfo(np.float64).tiny

SUBSTEP_TARGET = 1.2  # max damping-rate * substep allowed (RK4 real-axis bound is 2.785)
SUBSTEP_CAP = 100


# --- generic integration -----------------------------------------------------

def rk4_step(f, y, dt: float):
    """One classical 4th-order Runge-Kutta step of y' = f(y)."""
    k1 = f(y)
    k2 = f(y + (0.5 * dt) * k1)
    k3 = f(y + (0.5 * dt) * k2)
    k4 = f(y + dt * k3)
    out = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(out)):
        raise SimulationDiverged("non-finite state after RK4 step", state=out)
    return out


def wrap_angle(w):
    """Wrap to (-pi, pi]."""
    return np.pi - np.mod(np.pi - np.asarray(w), 2.0 * np.pi)


# --- dynamics ----------------------------------------------------------------

def cartpole_deriv(state, volts, P):
    """Cart-pole accelerations for the linear-servo cart model.

    The drive force comes from a DC motor through a gearbox and pinion:
    F = eta_g K_g eta_m k_m (V r_mp - K_g k_m xdot) / (R_m r_mp^2).
    ``pole_length`` is the pivot-to-center-of-mass distance (half the
    full pole), so the pole's inertia about the pivot is (4/3) m l^2.
    Broadcasts over leading dimensions of ``state``/``volts``; parameter
    values may be scalars or arrays of the batch shape.
    """
    th, xd, thd = state[..., 1], state[..., 2], state[..., 3]
    g = P["gravity"]
    m_c = P["cart_mass"]
    m_p = P["pole_mass"]
    l_p = P["pole_length"]
    r_mp = P["pinion_radius"]
    K_g = P["gear_ratio"]
    eta_g = P["gearbox_efficiency"]
    eta_m = P["motor_efficiency"]
    J_m = P["motor_inertia"]
    k_m = P["motor_torque_constant"]
    R_m = P["motor_resistance"]
    B_eq = P["cart_damping"]
    B_p = P["pole_damping"]
    mu_c = P["cart_friction"]

    sin_th = np.sin(th)
    cos_th = np.cos(th)
    force = eta_g * K_g * eta_m * k_m * (volts * r_mp - K_g * k_m * xd) / (R_m * r_mp**2)
    normal = (m_c + m_p) * g

    a11 = m_c + m_p + eta_g * K_g**2 * J_m / r_mp**2
    a12 = m_p * l_p * cos_th
    a22 = (4.0 / 3.0) * m_p * l_p**2
    rhs1 = m_p * l_p * sin_th * thd**2 + force - B_eq * xd - mu_c * np.sign(xd) * normal
    rhs2 = -m_p * g * l_p * sin_th - B_p * thd

    det = a11 * a22 - a12 * a12
    xdd = (a22 * rhs1 - a12 * rhs2) / det
    thdd = (a11 * rhs2 - a12 * rhs1) / det
    return np.stack([xd, thd, xdd, thdd], axis=-1)


def furuta_deriv(state, volts, P):
    """Furuta-pendulum accelerations for the standard rigid-body model.

    Mass matrix (q = (theta_r, theta_p), s/c = sin/cos theta_p):
        M11 = J_r + m_p l_r^2 + (m_p l_p^2 / 4) s^2
        M12 = (m_p l_r l_p / 2) c
        M22 = J_p + m_p l_p^2 / 4
    with rod inertias J_r = m_r l_r^2 / 3 and J_p = m_p l_p^2 / 12
    (``pend_pole_length`` is the full pendulum length; its center of
    mass sits at l_p / 2). Coriolis/centrifugal and gravity terms follow
    from this Lagrangian, so the undamped unforced flow conserves
    E = 0.5 qd^T M qd - m_p g (l_p / 2) cos theta_p.
    Motor torque on the arm: tau = k_m (V - k_m theta_r_dot) / R_m.
    """
    thp = state[..., 1]
    thrd, thpd = state[..., 2], state[..., 3]
    g = P["gravity"]
    m_p = P["pend_pole_mass"]
    m_r = P["rot_pole_mass"]
    l_p = P["pend_pole_length"]
    l_r = P["rot_pole_length"]
    d_p = P["pend_pole_damping"]
    d_r = P["rot_pole_damping"]
    R_m = P["motor_resistance"]
    k_m = P["motor_constant"]

    s = np.sin(thp)
    c = np.cos(thp)
    J_r = m_r * l_r**2 / 3.0
    J_p = m_p * l_p**2 / 12.0
    a = 0.25 * m_p * l_p**2
    b = 0.5 * m_p * l_r * l_p

    m11 = J_r + m_p * l_r**2 + a * s**2
    m12 = b * c
    m22 = J_p + a
    tau = k_m * (volts - k_m * thrd) / R_m
    rhs1 = tau - d_r * thrd - 2.0 * a * s * c * thrd * thpd + b * s * thpd**2
    rhs2 = -d_p * thpd + a * s * c * thrd**2 - 0.5 * m_p * g * l_p * s

    det = m11 * m22 - m12 * m12
    thrdd = (m22 * rhs1 - m12 * rhs2) / det
    thpdd = (m11 * rhs2 - m12 * rhs1) / det
    return np.stack([thrd, thpd, thrdd, thpdd], axis=-1)


DYNAMICS = {"cartpole": cartpole_deriv, "furuta": furuta_deriv}


def stiffness_substeps(task: str, P, dt: float, target: float = SUBSTEP_TARGET,
                       cap: int = SUBSTEP_CAP) -> int:
    """Internal RK4 substeps needed to integrate dt stably for this domain.

    Bounds the fastest damping rate as max_i D_i * max_theta (M^-1)_ii
    from the viscous coefficients (including motor back-EMF) and the
    mass-matrix extremes; n = ceil(dt * rate / target). Undamped domains
    give n = 1. Rates beyond the cap are left to diverge (and be flagged)
    rather than stall the simulation.
    """
    if task == "cartpole":
        a11 = (P["cart_mass"] + P["pole_mass"]
               + P["gearbox_efficiency"] * P["gear_ratio"] ** 2 * P["motor_inertia"]
               / P["pinion_radius"] ** 2)
        a22 = (4.0 / 3.0) * P["pole_mass"] * P["pole_length"] ** 2
        a12m = P["pole_mass"] * P["pole_length"]
        det_min = a11 * a22 - a12m * a12m
        back_emf = (P["gearbox_efficiency"] * P["motor_efficiency"]
                    * (P["gear_ratio"] * P["motor_torque_constant"]) ** 2
                    / (P["motor_resistance"] * P["pinion_radius"] ** 2))
        d_fast = max(
            (P["cart_damping"] + back_emf) * a22,
            P["pole_damping"] * a11,
        )
    else:
        j0 = (P["rot_pole_mass"] * P["rot_pole_length"] ** 2 / 3.0
              + P["pend_pole_mass"] * P["rot_pole_length"] ** 2)
        a = 0.25 * P["pend_pole_mass"] * P["pend_pole_length"] ** 2
        m22 = P["pend_pole_mass"] * P["pend_pole_length"] ** 2 / 12.0 + a
        b = 0.5 * P["pend_pole_mass"] * P["rot_pole_length"] * P["pend_pole_length"]
        det_min = j0 * m22 - b * b
        back_emf = P["motor_constant"] ** 2 / P["motor_resistance"]
        d_fast = max(
            (P["rot_pole_damping"] + back_emf) * m22,
            P["pend_pole_damping"] * (j0 + a),
        )
    if det_min <= 0:
        return cap
    rate = d_fast / det_min
    if rate * dt <= target:
        return 1
    return min(cap, math.ceil(rate * dt / target))


# --- task configuration and core types ----------------------------------------

@dataclass(frozen=True)
class TaskConfig:
    """Simulation settings independent of the sampled physical constants."""

    task: str
    dt: float
    max_steps: int
    action_limit: float
    q_weights: tuple = (0.2, 0.2, 0.002, 0.002)
    r_weight: float = 0.001
    init_noise_std: float = 0.05
    start_upright: bool = False

    def __post_init__(self):
        if self.task not in DYNAMICS:
            raise ConfigError(f"unknown task {self.task!r}")
        if not self.dt > 0:
            raise ConfigError(f"dt must be > 0, got {self.dt}")
        if not self.max_steps > 0:
            raise ConfigError(f"max_steps must be > 0, got {self.max_steps}")
        if not self.action_limit > 0:
            raise ConfigError(f"action_limit must be > 0, got {self.action_limit}")
        if len(self.q_weights) != 4 or any(w < 0 for w in self.q_weights):
            raise ConfigError("q_weights must be 4 nonnegative entries")
        if self.r_weight < 0:
            raise ConfigError("r_weight must be >= 0")
        object.__setattr__(self, "q_weights", tuple(float(w) for w in self.q_weights))

    @property
    def obs_dim(self) -> int:
        return OBS_DIM[self.task]


_ACTION_LIMITS = {"cartpole": 8.0, "furuta": 4.0}
_PROFILES = {"desk": {"dt": 0.01, "max_steps": 600}, "paper": {"dt": 0.002, "max_steps": 8000}}


def task_config(task: str, profile: str = "desk", **overrides) -> TaskConfig:
    """Default TaskConfig for a task at desk or paper scale."""
    if profile not in _PROFILES:
        raise ConfigError(f"unknown profile {profile!r}")
    kw = dict(_PROFILES[profile])
    kw["action_limit"] = _ACTION_LIMITS[task]
    kw.update(overrides)
    return TaskConfig(task=task, **kw)


@dataclass
class EnvState:
    q: np.ndarray  # generalized coordinates, length 2
    qd: np.ndarray  # generalized velocities, length 2
    t: int = 0


@dataclass
class StepResult:
    obs: np.ndarray
    reward: float
    done: bool
    state: EnvState


def _require_params(task: str, params: DomainParams) -> None:
    for name in REQUIRED_PARAMS[task]:
        if name not in params.values:
            raise ConfigError(f"missing domain parameter {name!r} for task {task!r}")


def observe(task: str, q, qd):
    """Observation vector(s) from coordinates; angles enter as sin/cos pairs."""
    q = np.asarray(q)
    qd = np.asarray(qd)
    if task == "cartpole":
        parts = [q[..., 0], np.sin(q[..., 1]), np.cos(q[..., 1]), qd[..., 0], qd[..., 1]]
    else:
        parts = [
            np.sin(q[..., 0]),
            np.cos(q[..., 0]),
            np.sin(q[..., 1]),
            np.cos(q[..., 1]),
            qd[..., 0],
            qd[..., 1],
        ]
    return np.stack(parts, axis=-1)


def upright_error(task: str, q, qd):
    """Error vector to the upright target: (position/arm angle, wrapped
    pendulum-angle error, both velocities)."""
    q = np.asarray(q)
    qd = np.asarray(qd)
    ang_err = wrap_angle(q[..., 1] - np.pi)
    return np.stack([q[..., 0], ang_err, qd[..., 0], qd[..., 1]], axis=-1)


def reward_fn(task: str, q, qd, u, q_weights, r_weight):
    e = upright_error(task, q, qd)
    qw = np.asarray(q_weights)
    with np.errstate(over="ignore", under="ignore"):
        cost = np.sum(qw * e * e, axis=-1) + r_weight * np.asarray(u) ** 2
        return np.maximum(np.exp(-cost), _TINY)


def reset_env(cfg: TaskConfig, params: DomainParams, rng: np.random.Generator):
    """Start a fresh episode near the hanging (or upright) equilibrium.

    Each coordinate and velocity is independently perturbed by
    N(0, init_noise_std); the step counter starts at 0.
    """
    _require_params(cfg.task, params)
    center = np.array([0.0, np.pi if cfg.start_upright else 0.0])
    noise = rng.normal(0.0, cfg.init_noise_std, size=4)
    state = EnvState(q=center + noise[:2], qd=noise[2:].copy(), t=0)
    return state, observe(cfg.task, state.q, state.qd)


def step_env(state: EnvState, action: float, cfg: TaskConfig, params: DomainParams) -> StepResult:
    """Advance one control interval dt under the clamped voltage ``action``
    (internally substepped per the domain's stiffness)."""
    _require_params(cfg.task, params)
    u = float(np.clip(action, -cfg.action_limit, cfg.action_limit))
    # reward is a function of the current state and the applied action
    reward = float(reward_fn(cfg.task, state.q, state.qd, u, cfg.q_weights, cfg.r_weight))
    deriv = DYNAMICS[cfg.task]
    n = stiffness_substeps(cfg.task, params.values, cfg.dt)
    h = cfg.dt / n
    y = np.concatenate([state.q, state.qd])
    for _ in range(n):
        y = rk4_step(lambda s: deriv(s, u, params.values), y, h)
    q, qd = y[:2], y[2:]
    t_next = state.t + 1
    done = t_next >= cfg.max_steps
    if cfg.task == "cartpole" and abs(q[0]) > 0.5 * params["rail_length"]:
        done = True
    new_state = EnvState(q=q, qd=qd, t=t_next)
    return StepResult(obs=observe(cfg.task, q, qd), reward=reward, done=bool(done), state=new_state)


class Env:
    """Stateful single-instance wrapper around reset_env/step_env.

    Owns a private random stream for its initial states; instances are
    independent and may run concurrently.
    """

    def __init__(self, cfg: TaskConfig, params: DomainParams, rng: np.random.Generator):
        _require_params(cfg.task, params)
        self.cfg = cfg
        self.params = params
        self.rng = rng
        self.state: EnvState | None = None

    def reset(self) -> np.ndarray:
        self.state, obs = reset_env(self.cfg, self.params, self.rng)
        return obs

    def step(self, action: float) -> StepResult:
        result = step_env(self.state, action, self.cfg, self.params)
        self.state = result.state
        return result


def _cartpole_consts(P: dict) -> dict:
    return {
        "fv": P["gearbox_efficiency"] * P["gear_ratio"] * P["motor_efficiency"]
        * P["motor_torque_constant"] / (P["motor_resistance"] * P["pinion_radius"]),
        "fb": P["gearbox_efficiency"] * P["motor_efficiency"]
        * (P["gear_ratio"] * P["motor_torque_constant"]) ** 2
        / (P["motor_resistance"] * P["pinion_radius"] ** 2),
        "a11": P["cart_mass"] + P["pole_mass"]
        + P["gearbox_efficiency"] * P["gear_ratio"] ** 2 * P["motor_inertia"]
        / P["pinion_radius"] ** 2,
        "a22": (4.0 / 3.0) * P["pole_mass"] * P["pole_length"] ** 2,
        "ml": P["pole_mass"] * P["pole_length"],
        "mgl": P["pole_mass"] * P["gravity"] * P["pole_length"],
        "beq": P["cart_damping"],
        "bp": P["pole_damping"],
        "mun": P["cart_friction"] * (P["cart_mass"] + P["pole_mass"]) * P["gravity"],
    }


def _cartpole_fast(y, u, C):
    th = y[:, 1]
    xd = y[:, 2]
    thd = y[:, 3]
    s = np.sin(th)
    c = np.cos(th)
    a12 = C["ml"] * c
    rhs1 = C["ml"] * s * thd * thd + C["fv"] * u - C["fb"] * xd - C["beq"] * xd \
        - C["mun"] * np.sign(xd)
    rhs2 = -C["mgl"] * s - C["bp"] * thd
    det = C["a11"] * C["a22"] - a12 * a12
    out = np.empty_like(y)
    out[:, 0] = xd
    out[:, 1] = thd
    out[:, 2] = (C["a22"] * rhs1 - a12 * rhs2) / det
    out[:, 3] = (C["a11"] * rhs2 - a12 * rhs1) / det
    return out


def _furuta_consts(P: dict) -> dict:
    a = 0.25 * P["pend_pole_mass"] * P["pend_pole_length"] ** 2
    return {
        "j0": P["rot_pole_mass"] * P["rot_pole_length"] ** 2 / 3.0
        + P["pend_pole_mass"] * P["rot_pole_length"] ** 2,
        "a": a,
        "b": 0.5 * P["pend_pole_mass"] * P["rot_pole_length"] * P["pend_pole_length"],
        "m22": P["pend_pole_mass"] * P["pend_pole_length"] ** 2 / 12.0 + a,
        "g2": 0.5 * P["pend_pole_mass"] * P["gravity"] * P["pend_pole_length"],
        "dr": P["rot_pole_damping"],
        "dp": P["pend_pole_damping"],
        "tv": P["motor_constant"] / P["motor_resistance"],
        "tb": P["motor_constant"] ** 2 / P["motor_resistance"],
    }


def _furuta_fast(y, u, C):
    thp = y[:, 1]
    thrd = y[:, 2]
    thpd = y[:, 3]
    s = np.sin(thp)
    c = np.cos(thp)
    m11 = C["j0"] + C["a"] * s * s
    m12 = C["b"] * c
    rhs1 = C["tv"] * u - C["tb"] * thrd - C["dr"] * thrd \
        - 2.0 * C["a"] * s * c * thrd * thpd + C["b"] * s * thpd * thpd
    rhs2 = -C["dp"] * thpd + C["a"] * s * c * thrd * thrd - C["g2"] * s
    det = m11 * C["m22"] - m12 * m12
    out = np.empty_like(y)
    out[:, 0] = thrd
    out[:, 1] = thpd
    out[:, 2] = (C["m22"] * rhs1 - m12 * rhs2) / det
    out[:, 3] = (m11 * rhs2 - m12 * rhs1) / det
    return out


_FAST = {"cartpole": (_cartpole_consts, _cartpole_fast), "furuta": (_furuta_consts, _furuta_fast)}

# one batched transition: ``done`` ends the episode (any reason);
# ``terminal`` marks physical termination (bounds violation, divergence) as
# opposed to a bare step-limit truncation; ``final_obs`` is the pre-reset
# observation, which truncated trajectories need for value bootstrapping
StepBatch = namedtuple("StepBatch", "obs reward done terminal diverged final_obs")


class VecEnv:
    """Fixed batch of independent env instances stepped in lockstep.

    Each instance has its own domain parameters, stiffness-derived
    substep count, and private random stream; per-instance results are
    bit-identical regardless of how the batch loop is scheduled because
    streams never mix. ``step`` auto-resets finished instances so
    collection windows can span episodes.
    """

    def __init__(self, cfg: TaskConfig, domains, rngs):
        if len(domains) != len(rngs):
            raise ValueError("one rng stream per domain instance required")
        for d in domains:
            _require_params(cfg.task, d)
        self.cfg = cfg
        self.domains = list(domains)
        self.rngs = list(rngs)
        self.n = len(domains)
        P = {
            name: np.array([d[name] for d in domains], dtype=np.float64)
            for name in REQUIRED_PARAMS[cfg.task]
        }
        consts, fast = _FAST[cfg.task]
        self._C = consts(P)
        self._fast = fast
        if cfg.task == "cartpole":
            self._half_rail = 0.5 * P["rail_length"]
        self._qw = np.asarray(cfg.q_weights)
        subs = np.array([stiffness_substeps(cfg.task, d.values, cfg.dt) for d in domains])
        self._subs = subs
        self._h = cfg.dt / subs
        self._n_sub = int(subs.max())
        self._uniform_subs = bool((subs == subs[0]).all())
        self.y = np.zeros((self.n, 4))
        self.t = np.zeros(self.n, dtype=np.int64)

    def _reset_row(self, i: int) -> None:
        center = np.pi if self.cfg.start_upright else 0.0
        noise = self.rngs[i].normal(0.0, self.cfg.init_noise_std, size=4)
        self.y[i, 0] = noise[0]
        self.y[i, 1] = center + noise[1]
        self.y[i, 2:] = noise[2:]
        self.t[i] = 0

    def reset_all(self) -> np.ndarray:
        for i in range(self.n):
            self._reset_row(i)
        return self.observe()

    def observe(self) -> np.ndarray:
        return observe(self.cfg.task, self.y[:, :2], self.y[:, 2:])

    def _integrate(self, y, u):
        h = self._h[:, None]
        f = self._fast
        C = self._C
        # overflow here is how divergence manifests; it is detected and
        # flagged by the caller, not a numerical error to warn about
        with np.errstate(over="ignore", invalid="ignore"):
            for k in range(self._n_sub):
                k1 = f(y, u, C)
                k2 = f(y + (0.5 * h) * k1, u, C)
                k3 = f(y + (0.5 * h) * k2, u, C)
                k4 = f(y + h * k3, u, C)
                y_new = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
                if self._uniform_subs:
                    y = y_new
                else:
                    y = np.where((k < self._subs)[:, None], y_new, y)
        return y

    def step(self, actions, autoreset: bool = True) -> StepBatch:
        """Advance every instance one control interval.

        ``obs`` is the post-step observation (post-reset for instances
        that finished); ``final_obs`` is the same state before any reset.
        Diverged rows are reported done+terminal and reset; callers
        decide whether divergence is an error.
        """
        u = np.clip(np.asarray(actions, dtype=np.float64).reshape(self.n),
                    -self.cfg.action_limit, self.cfg.action_limit)
        # reward is a function of the current (pre-step) state and the action
        reward = reward_fn(self.cfg.task, self.y[:, :2], self.y[:, 2:], u,
                           self._qw, self.cfg.r_weight)
        y_next = self._integrate(self.y, u)

        diverged = ~np.isfinite(y_next).all(axis=1)
        if diverged.any():
            y_next[diverged] = 0.0  # placeholder; rows get reset below
        self.y = y_next
        self.t += 1

        terminal = diverged.copy()
        if self.cfg.task == "cartpole":
            terminal |= np.abs(self.y[:, 0]) > self._half_rail
        done = terminal | (self.t >= self.cfg.max_steps)

        final_obs = self.observe()
        if autoreset and done.any():
            for i in np.flatnonzero(done):
                self._reset_row(i)
            obs = self.observe()
        else:
            obs = final_obs
        return StepBatch(obs, reward, done, terminal, diverged, final_obs)
