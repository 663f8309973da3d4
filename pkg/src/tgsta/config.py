"""Run configuration: flat YAML presets plus command-line overrides."""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from .ansatz import Ansatz
from .errors import ConfigError
from .grid import SpatialGrid, make_grid
from .ramps import TrapSpec

SCENARIOS = ("fig1", "fig2", "fig3", "fig4", "fig5", "custom")
DEFAULT_GRID = (-24.0, 24.0, 2048)


@dataclass
class RunConfig:
    scenario: str = "custom"
    N: int = 10
    N_values: list = field(default_factory=list)
    gamma: float = 0.0
    gamma_values: list = field(default_factory=list)
    omega0_sq: float = 1.0
    omegaf_sq: float = 10.0
    t_f: list = field(default_factory=lambda: [1.0])
    ramps: list = field(default_factory=lambda: ["sta", "ref"])
    ansatz: str = "tf"
    reference_ansatz: str = "tf"
    models: list = field(default_factory=lambda: ["tg", "mf"])
    grid: tuple = DEFAULT_GRID
    dt: float | None = None
    out: str = "runs"
    seed: int = 0
    threads: int = 1
    snapshot_every: int = 0

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"unknown scenario {self.scenario!r}; choose from {SCENARIOS}")
        try:
            self.gamma, self.omega0_sq, self.omegaf_sq = (
                float(self.gamma), float(self.omega0_sq), float(self.omegaf_sq))
            self.t_f = [float(t) for t in _as_list(self.t_f)]
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"non-numeric physical parameter: {exc}") from exc
        if any(b <= a for a, b in zip(self.t_f, self.t_f[1:])):
            raise ConfigError(f"t_f grid must be strictly increasing, got {self.t_f}")
        for t in self.t_f:
            TrapSpec(self.omega0_sq, self.omegaf_sq, self.gamma, t)
        self.N_values = [int(n) for n in _as_list(self.N_values)]
        self.gamma_values = [float(g) for g in _as_list(self.gamma_values)]
        self.ramps = [str(r).lower() for r in _as_list(self.ramps)]
        self.models = [str(m).lower() for m in _as_list(self.models)]
        if int(self.N) < 1:
            raise ConfigError(f"N must be >= 1, got {self.N}")
        self.N = int(self.N)
        Ansatz.parse(self.ansatz)
        Ansatz.parse(self.reference_ansatz)
        self.grid = tuple(self.grid)
        self.make_grid()
        if self.dt is not None:
            self.dt = float(self.dt)
            if not self.dt > 0:
                raise ConfigError(f"dt must be positive, got {self.dt}")
        self.threads, self.seed = int(self.threads), int(self.seed)
        self.snapshot_every = int(self.snapshot_every)
        if self.snapshot_every < 0:
            raise ConfigError("snapshot_every must be >= 0")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")

    def make_grid(self) -> SpatialGrid:
        x0, x1, n = self.grid
        return make_grid(float(x0), float(x1), int(n))

    def trap(self, t_f: float, gamma: float | None = None) -> TrapSpec:
        return TrapSpec(self.omega0_sq, self.omegaf_sq, self.gamma if gamma is None else gamma, t_f)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["grid"] = list(self.grid)
        return d


def _as_list(value):
    if value is None:
        return []
    if isinstance(value, (list, tuple, np.ndarray)):
        return list(value)
    return [value]


def parse_value(key: str, raw):
    """Interpret special string forms used in presets and --set overrides.

    ``logspace(a, b, n)`` and ``range(a, b, step)`` (inclusive of b) expand to
    lists; ``sqrt(x)`` evaluates; ``x0,x1,n`` is accepted for ``grid``.
    """
    if isinstance(raw, str):
        text = raw.strip()
        if text.startswith("logspace(") and text.endswith(")"):
            a, b, n = (float(v) for v in text[9:-1].split(","))
            return [float(v) for v in np.geomspace(a, b, int(n))]
        if text.startswith("range(") and text.endswith(")"):
            parts = [int(v) for v in text[6:-1].split(",")]
            a, b = parts[0], parts[1]
            step = parts[2] if len(parts) > 2 else 1
            return list(range(a, b + 1, step))
        if key == "grid":
            parts = text.split(",")
            if len(parts) != 3:
                raise ConfigError(f"grid must be XMIN,XMAX,N, got {raw!r}")
            return (float(parts[0]), float(parts[1]), int(parts[2]))
        if "," in text:
            return [parse_value(key, v) for v in text.split(",")]
        if text.startswith("sqrt(") and text.endswith(")"):
            return math.sqrt(float(text[5:-1]))
        try:
            return yaml.safe_load(text)
        except yaml.YAMLError:
            return text
    if isinstance(raw, list):
        return [parse_value(key, v) if isinstance(v, str) else v for v in raw]
    return raw


def preset_path(name: str) -> Path:
    return Path(str(resources.files("tgsta") / "presets" / f"{name}.yaml"))


def load_config(path=None, overrides: dict | None = None) -> RunConfig:
    data = {}
    if path is not None:
        p = Path(path)
        if not p.exists():
            candidate = preset_path(str(path))
            if not candidate.exists():
                raise ConfigError(f"config file {path!r} not found (and no preset of that name)")
            p = candidate
        try:
            loaded = yaml.safe_load(p.read_text()) or {}
        except yaml.YAMLError as exc:
            raise ConfigError(f"cannot parse {p}: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ConfigError(f"{p} must hold a flat key-value mapping")
        data.update(loaded)
    data.update(overrides or {})
    known = {f.name for f in dataclasses.fields(RunConfig)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    parsed = {k: parse_value(k, v) for k, v in data.items()}
    try:
        return RunConfig(**parsed)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc
