"""Versioned JSON experiment configuration."""

from __future__ import annotations

import dataclasses
import hashlib
import inspect
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import checks as _checks
from .errors import ConfigError, ParameterError
from .flow import FlowConfig
from .warped import MIN_GRID

SCHEMA_VERSION = 1
FAMILIES = ("round", "sin_cubed_perturbation", "dumbbell", "berger")
FAMILY_ALIASES = {"sin_cubed": "sin_cubed_perturbation"}
CHECK_NAMES = ("max_principle", "extinction_bound", "scalar_evolution", "harnack",
               "rm_le_scalar", "distance_distortion")
DEFAULT_CHECKS = {
    "max_principle": {"tol": 1e-3},
    "extinction_bound": {"tol": 1e-3},
    "rm_le_scalar": {"rel": 1e-8},
}
# keys of each check's keyword arguments that are tolerances (must be positive)
_TOL_KEYS = ("tol", "rel", "norm_tol", "ineq_tol")
_FLOW_KEYS = {f.name for f in dataclasses.fields(FlowConfig)} - {"extra_times", "lemma_checkpoints"}
SEED_MAX = 2 ** 64 - 1
EXECUTION_KEYS = ("output_dir", "workers")


@dataclass(frozen=True)
class ExperimentConfig:
    """All knobs of an experiment.

    ``eps`` is the sweep axis: the perturbation size for ``sin_cubed_perturbation``,
    the neck depth for ``dumbbell`` and the anisotropy of the third eigenvalue
    for ``berger``.  The ``round`` family ignores it and has one member.
    """

    seed: int
    n: int = 3
    family: str = "round"
    eps: tuple = (0.0,)
    lambdas: tuple = (1.0, 1.0, 1.0)
    grid: int = 512
    flow: dict = field(default_factory=dict)
    checks: dict = field(default_factory=lambda: {k: dict(v) for k, v in DEFAULT_CHECKS.items()})
    pinch_checkpoint: float = 0.05
    barrier: dict = field(default_factory=lambda: {"t2": 0.1, "sharpness": 0.45,
                                                   "cadence": 2.5e-4})
    output_dir: str = "out"
    workers: int = 1
    schema_version: int = SCHEMA_VERSION

    def __post_init__(self):
        if self.schema_version != SCHEMA_VERSION:
            raise ConfigError(f"unsupported schema_version {self.schema_version}")
        if isinstance(self.seed, bool) or not isinstance(self.seed, (int, np.integer)) \
                or not 0 <= int(self.seed) <= SEED_MAX:
            raise ConfigError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")
        object.__setattr__(self, "seed", int(self.seed))
        fam = FAMILY_ALIASES.get(self.family, self.family)
        if fam not in FAMILIES:
            raise ConfigError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        object.__setattr__(self, "family", fam)
        if not isinstance(self.n, int) or self.n < 3:
            raise ConfigError(f"n must be an integer >= 3, got {self.n!r}")
        if fam == "berger" and self.n != 3:
            raise ConfigError("the berger family exists for n = 3 only")
        if not isinstance(self.grid, int) or self.grid < MIN_GRID:
            raise ConfigError(f"grid must be an integer >= {MIN_GRID}, got {self.grid!r}")
        try:
            eps = tuple(float(e) for e in self.eps)
            lam = tuple(float(x) for x in self.lambdas)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"eps and lambdas must be numeric lists: {exc}") from exc
        if not all(np.isfinite(eps)) or list(eps) != sorted(eps):
            raise ConfigError("eps grid must be finite and sorted ascending")
        if len(lam) != 3 or not all(np.isfinite(lam)) or min(lam) <= 0:
            raise ConfigError("lambdas must be three positive numbers")
        object.__setattr__(self, "eps", eps)
        object.__setattr__(self, "lambdas", lam)
        unknown = set(self.flow) - _FLOW_KEYS
        if unknown:
            raise ConfigError(f"unknown flow keys {sorted(unknown)}")
        try:
            self.flow_config()
        except ParameterError as exc:
            raise ConfigError(f"invalid flow settings: {exc}") from exc
        for name, params in self.checks.items():
            if name not in CHECK_NAMES:
                raise ConfigError(f"unknown check {name!r}; expected one of {CHECK_NAMES}")
            if not isinstance(params, dict):
                raise ConfigError(f"parameters of check {name!r} must be an object")
            allowed = set(inspect.signature(getattr(_checks, f"check_{name}")).parameters) - {"trace"}
            if set(params) - allowed:
                raise ConfigError(f"unknown parameters {sorted(set(params) - allowed)} for check "
                                  f"{name!r}; expected a subset of {sorted(allowed)}")
            for k, v in params.items():
                if k in _TOL_KEYS and not (isinstance(v, (int, float)) and v > 0):
                    raise ConfigError(f"tolerance {name}.{k} must be positive, got {v!r}")
        if not (self.pinch_checkpoint > 0):
            raise ConfigError("pinch_checkpoint must be positive")
        b = self.barrier
        unknown = set(b) - {"t2", "sharpness", "cadence"}
        if unknown:
            raise ConfigError(f"unknown barrier keys {sorted(unknown)}")
        for k in ("t2", "sharpness", "cadence"):
            if k in b and not (isinstance(b[k], (int, float)) and b[k] > 0):
                raise ConfigError(f"barrier.{k} must be positive")
        if not isinstance(self.workers, int) or self.workers < 1:
            raise ConfigError("workers must be a positive integer")

    # ------------------------------------------------------------------ io

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        if not isinstance(d, dict):
            raise ConfigError("configuration must be a JSON object")
        if "seed" not in d:
            raise ConfigError("configuration must set 'seed'")
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ConfigError(f"unknown configuration keys {sorted(unknown)}")
        d = dict(d)
        if "checks" in d and isinstance(d["checks"], list):
            d["checks"] = {k: dict(DEFAULT_CHECKS.get(k, {})) for k in d["checks"]}
        if "barrier" in d:
            d["barrier"] = {**cls.__dataclass_fields__["barrier"].default_factory(), **d["barrier"]}
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
        return cls.from_dict(d)

    def with_overrides(self, **kw) -> "ExperimentConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        return dataclasses.replace(self, **kw) if kw else self

    def to_dict(self, results_only: bool = False) -> dict:
        """All fields with defaults filled in.

        ``results_only`` drops the settings that cannot change any result
        (output location and worker count).
        """
        d = dataclasses.asdict(self)
        d["eps"] = list(self.eps)
        d["lambdas"] = list(self.lambdas)
        if results_only:
            for k in EXECUTION_KEYS:
                d.pop(k)
        return d

    def canonical_json(self) -> str:
        """Compact sorted JSON of the result-relevant settings."""
        return json.dumps(self.to_dict(results_only=True), sort_keys=True, separators=(",", ":"))

    def sha256(self) -> str:
        return hashlib.sha256(self.canonical_json().encode("utf-8")).hexdigest()

    # ------------------------------------------------------------ derived

    def flow_config(self, extra_times: tuple = ()) -> FlowConfig:
        return FlowConfig(**self.flow, extra_times=tuple(extra_times))

    def member_seed(self, index: int) -> int:
        """Independent per-member seed derived from the experiment seed."""
        ss = np.random.SeedSequence([self.seed, int(index)])
        return int(ss.generate_state(1, dtype=np.uint32)[0])
