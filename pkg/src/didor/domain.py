"""Parametric distributions over physical constants and sampled domain instances.

A domain is the set of physical constants that parameterize one simulator
instance. Distributions are per-parameter (normal or uniform) with an
optional hard floor applied after sampling so masses, lengths, and the
like stay strictly positive. The two built-in distributions for the
cart-pole and Furuta-pendulum platforms ship as data files.
"""

from __future__ import annotations

import hashlib
import importlib.resources
import json
import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError

TASKS = ("cartpole", "furuta")

# Parameter names each task's dynamics require, in data-file order.
REQUIRED_PARAMS = {
    "cartpole": (
        "gravity",
        "cart_mass",
        "pole_mass",
        "pole_length",
        "rail_length",
        "pinion_radius",
        "gear_ratio",
        "gearbox_efficiency",
        "motor_efficiency",
        "motor_inertia",
        "motor_torque_constant",
        "motor_resistance",
        "cart_damping",
        "pole_damping",
        "cart_friction",
    ),
    "furuta": (
        "gravity",
        "pend_pole_mass",
        "rot_pole_mass",
        "pend_pole_length",
        "rot_pole_length",
        "pend_pole_damping",
        "rot_pole_damping",
        "motor_resistance",
        "motor_constant",
    ),
}


@dataclass(frozen=True)
class ParamSpec:
    """Marginal distribution of one physical constant.

    For kind "normal", a is the mean and b the standard deviation; for
    kind "uniform", a and b are the lower and upper bounds. ``floor`` is
    a hard lower clip applied after sampling.
    """

    name: str
    kind: str
    a: float
    b: float
    floor: float | None = None

    def __post_init__(self):
        if self.kind not in ("normal", "uniform"):
            raise ConfigError(f"param {self.name!r}: unknown kind {self.kind!r}")
        if not (math.isfinite(self.a) and math.isfinite(self.b)):
            raise ConfigError(f"param {self.name!r}: non-finite bounds")
        if self.kind == "normal" and not self.b > 0:
            raise ConfigError(f"param {self.name!r}: normal std must be > 0, got {self.b}")
        if self.kind == "uniform" and not self.a < self.b:
            raise ConfigError(f"param {self.name!r}: uniform needs a < b, got [{self.a}, {self.b}]")
        if self.floor is not None and not math.isfinite(self.floor):
            raise ConfigError(f"param {self.name!r}: floor must be finite")


@dataclass(frozen=True)
class DomainDistribution:
    """Joint (independent-marginal) distribution over a task's constants.

    ``scale`` multiplies every normal std and every uniform half-width
    about its midpoint; scale 0 is the degenerate point distribution at
    the nominal domain.
    """

    task: str
    specs: tuple[ParamSpec, ...]
    scale: float = 1.0

    def __post_init__(self):
        if self.task not in TASKS:
            raise ConfigError(f"unknown task {self.task!r}")
        object.__setattr__(self, "specs", tuple(self.specs))
        names = [s.name for s in self.specs]
        if len(set(names)) != len(names):
            raise ConfigError("duplicate parameter names in distribution")
        missing = [n for n in REQUIRED_PARAMS[self.task] if n not in names]
        if missing:
            raise ConfigError(f"distribution for {self.task!r} missing parameters: {missing}")
        if not (math.isfinite(self.scale) and self.scale >= 0):
            raise ConfigError(f"scale must be finite and >= 0, got {self.scale}")

    def fingerprint(self) -> str:
        return _fingerprint(to_json_dict(self))


@dataclass(frozen=True)
class DomainParams:
    """One concrete draw of physical constants, keyed by parameter name."""

    values: dict

    def __post_init__(self):
        for name, v in self.values.items():
            if not math.isfinite(v):
                raise ConfigError(f"domain parameter {name!r} is not finite: {v}")

    def __getitem__(self, name: str) -> float:
        return self.values[name]

    def fingerprint(self) -> str:
        return _fingerprint(self.values)


def _fingerprint(obj) -> str:
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def _draw(spec: ParamSpec, scale: float, rng: np.random.Generator) -> float:
    if spec.kind == "normal":
        x = rng.normal(spec.a, spec.b * scale)
    else:
        mid = 0.5 * (spec.a + spec.b)
        half = 0.5 * (spec.b - spec.a) * scale
        x = rng.uniform(mid - half, mid + half)
    if spec.floor is not None:
        x = max(x, spec.floor)
    return float(x)


def sample_domain(dist: DomainDistribution, rng: np.random.Generator) -> DomainParams:
    """Draw one domain instance; one value per spec, floors applied last."""
    return DomainParams({s.name: _draw(s, dist.scale, rng) for s in dist.specs})


def nominal_domain(dist: DomainDistribution) -> DomainParams:
    """Deterministic reference domain: normal means and uniform midpoints."""
    values = {}
    for s in dist.specs:
        x = s.a if s.kind == "normal" else 0.5 * (s.a + s.b)
        if s.floor is not None:
            x = max(x, s.floor)
        values[s.name] = float(x)
    return DomainParams(values)


def widen(dist: DomainDistribution, factor: float) -> DomainDistribution:
    """Scale the distribution's spread by ``factor`` (> 0); input unchanged."""
    if not (isinstance(factor, (int, float)) and math.isfinite(factor) and factor > 0):
        raise ValueError(f"widen factor must be finite and > 0, got {factor}")
    return replace(dist, scale=dist.scale * factor)


# --- JSON wire format -------------------------------------------------------

def to_json_dict(dist: DomainDistribution) -> dict:
    return {
        "task": dist.task,
        "scale": dist.scale,
        "specs": [
            {"name": s.name, "kind": s.kind, "a": s.a, "b": s.b, "floor": s.floor}
            for s in dist.specs
        ],
    }


def from_json_dict(doc: dict) -> DomainDistribution:
    try:
        specs = []
        for row in doc["specs"]:
            a, b = float(row["a"]), float(row["b"])
            # Tolerate reversed uniform bounds (a printed typo in one source
            # table); normalize by sorting.
            if row["kind"] == "uniform" and a > b:
                a, b = b, a
            floor = row.get("floor")
            specs.append(
                ParamSpec(
                    name=row["name"],
                    kind=row["kind"],
                    a=a,
                    b=b,
                    floor=None if floor is None else float(floor),
                )
            )
        return DomainDistribution(task=doc["task"], specs=tuple(specs), scale=float(doc["scale"]))
    except KeyError as exc:
        raise ConfigError(f"domain distribution document missing key {exc}") from exc


def load_distribution(path) -> DomainDistribution:
    with open(path, "r", encoding="utf-8") as fh:
        return from_json_dict(json.load(fh))


def save_distribution(dist: DomainDistribution, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(to_json_dict(dist), fh, indent=2)
        fh.write("\n")


def builtin_distribution(task: str) -> DomainDistribution:
    """The shipped distribution for ``task`` (cartpole or furuta)."""
    if task not in TASKS:
        raise ConfigError(f"unknown task {task!r}")
    ref = importlib.resources.files("didor.data").joinpath(f"{task}.json")
    return from_json_dict(json.loads(ref.read_text(encoding="utf-8")))
