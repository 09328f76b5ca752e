"""Experiment configuration: nested blocks, YAML round-trip and a stable digest.

Schema (all blocks optional, defaults shown in the dataclasses)::

    model:      {d, L, boundary, coupling, distribution: {kind, ...}}
    ids:        {side, realizations, max_knots, first_index}
    window:     {E0, kind: count|alpha|interval, count, alpha, interval}
    statistics: {<name>: {<options>}, ...}
    two_scale:  {beta, beta_prime, ell, ell_prime, tol, boundary, margin}
    ensemble:   {realizations, master_seed, workers, first_index}
    output:     directory (optional)
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, List, Optional

import yaml

from ..hamiltonian import Boundary, DisorderConfig, SmoothBump, Uniform

__all__ = [
    "ConfigError",
    "STATISTICS",
    "ModelBlock",
    "IdsBlock",
    "WindowBlock",
    "TwoScaleBlock",
    "EnsembleBlock",
    "ExperimentConfig",
    "load_config",
]

IDS_FIRST_INDEX = 1 << 32

# statistic name -> accepted option keys
STATISTICS: Dict[str, tuple] = {
    "spectrum": ("realization",),
    "centers": ("realization", "stretch", "window"),
    "dls": ("window", "x_max", "x_points", "realizations", "drop_edge"),
    "dls_macroscopic": ("J", "J_mass", "x_max", "x_points", "realizations", "drop_edge"),
    "dcs": ("window", "x_max", "x_points", "realizations"),
    "poisson": ("intervals", "realizations", "alpha", "control"),
    "independence": ("separation", "length", "realizations"),
    "ldp": ("window", "delta", "realizations"),
    "wegner_minami": ("widths", "rho", "realizations"),
    "two_scale": ("window", "realizations", "compare_ell_prime"),
    "bernoulli": ("N_ell", "realizations", "allowance"),
}


class ConfigError(ValueError):
    pass


def _check_keys(block: str, data: dict, allowed) -> None:
    extra = set(data) - set(allowed)
    if extra:
        raise ConfigError(f"unknown key(s) in '{block}': {sorted(extra)}")


@dataclass(frozen=True)
class ModelBlock:
    d: int = 1
    L: int = 100
    boundary: str = "periodic"
    coupling: float = 1.0
    distribution: Dict[str, Any] = field(default_factory=lambda: {"kind": "uniform", "lo": -1.0, "hi": 1.0})

    def __post_init__(self):
        try:
            Boundary.coerce(self.boundary)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if self.d < 1 or self.L < 1:
            raise ConfigError("model.d and model.L must be positive")
        self.make_distribution()

    def make_distribution(self):
        spec = dict(self.distribution)
        kind = spec.pop("kind", "uniform")
        try:
            if kind == "uniform":
                return Uniform(**spec)
            if kind in ("bump", "smooth_bump"):
                return SmoothBump(**spec)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad distribution parameters: {exc}") from None
        raise ConfigError(f"unknown distribution kind '{kind}' (use 'uniform' or 'bump')")

    def disorder(self, master_seed: int) -> DisorderConfig:
        return DisorderConfig(self.make_distribution(), float(self.coupling), int(master_seed))


@dataclass(frozen=True)
class IdsBlock:
    side: int = 200
    realizations: int = 100
    max_knots: int = 20000
    first_index: int = IDS_FIRST_INDEX

    def __post_init__(self):
        if self.side < 1 or self.realizations < 1 or self.max_knots < 2:
            raise ConfigError("ids.side, ids.realizations must be >= 1 and ids.max_knots >= 2")


@dataclass(frozen=True)
class WindowBlock:
    """Energy window around ``E0``.

    ``count``: IDS mass ``count / |Lambda|`` (expected eigenvalues per box).
    ``alpha``: IDS mass ``2 |Lambda|^-alpha``.
    ``interval``: fixed energies ``[a, b]``.
    """

    E0: float = 0.0
    kind: str = "count"
    count: Optional[float] = 100.0
    alpha: Optional[float] = None
    interval: Optional[List[float]] = None

    def __post_init__(self):
        if self.kind not in ("count", "alpha", "interval"):
            raise ConfigError(f"window.kind must be count, alpha or interval, not '{self.kind}'")
        if self.kind == "alpha" and not (self.alpha is not None and 0 < self.alpha < 1):
            raise ConfigError("window.alpha must lie in (0, 1)")
        if self.kind == "count" and not (self.count is not None and self.count > 0):
            raise ConfigError("window.count must be positive")
        if self.kind == "interval":
            if self.interval is None or len(self.interval) != 2 or not self.interval[0] <= self.interval[1]:
                raise ConfigError("window.interval must be [a, b] with a <= b")

    @classmethod
    def from_any(cls, data) -> "WindowBlock":
        if isinstance(data, WindowBlock):
            return data
        _check_keys("window", data, [f.name for f in fields(cls)])
        return cls(**data)


@dataclass(frozen=True)
class TwoScaleBlock:
    beta: Optional[float] = None
    beta_prime: Optional[float] = None
    ell: Optional[int] = None
    ell_prime: Optional[int] = None
    tol: float = 1e-6
    boundary: str = "periodic"
    margin: Optional[float] = None

    def __post_init__(self):
        explicit = self.ell is not None and self.ell_prime is not None
        exponents = self.beta is not None and self.beta_prime is not None
        if not (explicit or exponents):
            raise ConfigError("two_scale needs (ell, ell_prime) or (beta, beta_prime)")
        if not self.tol > 0:
            raise ConfigError("two_scale.tol must be positive")
        try:
            Boundary.coerce(self.boundary)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None


@dataclass(frozen=True)
class EnsembleBlock:
    realizations: int = 10
    master_seed: int = 0
    workers: int = 1
    first_index: int = 0

    def __post_init__(self):
        if self.realizations < 1 or self.workers < 1:
            raise ConfigError("ensemble.realizations and ensemble.workers must be >= 1")


_BLOCKS = {
    "model": ModelBlock,
    "ids": IdsBlock,
    "window": WindowBlock,
    "two_scale": TwoScaleBlock,
    "ensemble": EnsembleBlock,
}


@dataclass(frozen=True)
class ExperimentConfig:
    model: ModelBlock = field(default_factory=ModelBlock)
    ids: IdsBlock = field(default_factory=IdsBlock)
    window: WindowBlock = field(default_factory=WindowBlock)
    statistics: Dict[str, Dict[str, Any]] = field(default_factory=dict)
    two_scale: Optional[TwoScaleBlock] = None
    ensemble: EnsembleBlock = field(default_factory=EnsembleBlock)
    output: Optional[str] = None

    def __post_init__(self):
        for name, opts in self.statistics.items():
            if name not in STATISTICS:
                raise ConfigError(f"unknown statistic '{name}'; choose from {sorted(STATISTICS)}")
            if not isinstance(opts, dict):
                raise ConfigError(f"options of statistic '{name}' must be a mapping")
            _check_keys(f"statistics.{name}", opts, STATISTICS[name])
            if "window" in opts:
                WindowBlock.from_any(opts["window"])
        if any(s in self.statistics for s in ("two_scale", "bernoulli")) and self.two_scale is None:
            raise ConfigError("two_scale / bernoulli statistics need a two_scale block")

    # serialization -------------------------------------------------------

    def to_dict(self) -> dict:
        out = asdict(self)
        if out["two_scale"] is None:
            del out["two_scale"]
        if out["output"] is None:
            del out["output"]
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a mapping at top level")
        _check_keys("config", data, list(_BLOCKS) + ["statistics", "output"])
        kw: Dict[str, Any] = {}
        for name, block in _BLOCKS.items():
            if data.get(name) is None:
                continue
            raw = data[name]
            if not isinstance(raw, dict):
                raise ConfigError(f"'{name}' must be a mapping")
            _check_keys(name, raw, [f.name for f in fields(block)])
            try:
                kw[name] = block(**raw)
            except TypeError as exc:
                raise ConfigError(f"bad '{name}' block: {exc}") from None
        stats = data.get("statistics") or {}
        if isinstance(stats, list):
            stats = {s: {} for s in stats}
        kw["statistics"] = {k: dict(v or {}) for k, v in stats.items()}
        if data.get("output") is not None:
            kw["output"] = str(data["output"])
        return cls(**kw)

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=True, default_flow_style=None)

    @classmethod
    def from_yaml(cls, text: str) -> "ExperimentConfig":
        try:
            data = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise ConfigError(f"unreadable config: {exc}") from None
        return cls.from_dict(data or {})

    def digest(self) -> str:
        """sha256 of the canonical JSON form, excluding execution-only settings.

        Worker count and output directory do not change any emitted number,
        so they are left out; key order never matters.
        """
        data = self.to_dict()
        data["ensemble"].pop("workers", None)
        data.pop("output", None)
        return hashlib.sha256(json.dumps(data, sort_keys=True).encode()).hexdigest()

    def replace(self, **changes) -> "ExperimentConfig":
        """Copy with top-level fields or ``block__field`` entries changed."""
        data = self.to_dict()
        for key, value in changes.items():
            if "__" in key:
                block, name = key.split("__", 1)
                data.setdefault(block, {})[name] = value
            else:
                data[key] = value
        return ExperimentConfig.from_dict(data)


def load_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return ExperimentConfig.from_yaml(text)
