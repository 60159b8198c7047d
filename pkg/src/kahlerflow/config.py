"""Run configuration: plain-text ``key = value`` files with flag overrides.

Blank lines and ``#`` comments are ignored.  Every field is validated by
building the objects it feeds (model spec, solver config, norm spec) before
any computation starts.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, fields
from pathlib import Path

from .evolve import SolverConfig
from .exceptions import DomainError
from .model import GluedModelSpec
from .norms import WeightedNormSpec
from .series import MAX_ORDER

__all__ = ["RunConfig", "parse_config_text", "load_config"]


@dataclass(frozen=True)
class RunConfig:
    # model
    b: float = 1.0
    a: float = 0.25
    k: int = 1
    delta: float = 1.0
    mode: str = "hyperbolic"
    # flow runs
    T: float = 1e3
    t_end: float = 1e5
    nodes: int = 2048
    rho_floor: float = 0.0  # 0 selects 1e-3 / t_end
    newton_tol: float = 1e-10
    dt_ratio: float = 1e-3
    max_newton: int = 20
    samples_per_octave: int = 2
    # theorem 2
    theorem2_k: int = 4
    # series / model tables
    eta_min: float = 1e-3
    eta_max: float = 50.0
    eta_points: int = 200
    t: float = 100.0
    rho_points: int = 200
    # weighted norms
    pair_budget: int = 1000
    holder: bool = True
    decades: int = 6
    # stability
    epsilon: float = 1e-2
    seed: int = 0

    def __post_init__(self):
        self.validate()

    def validate(self):
        if not 0 <= self.k <= MAX_ORDER:
            raise DomainError(f"k must lie in [0, {MAX_ORDER}]")
        if not 4 <= self.theorem2_k <= MAX_ORDER:
            raise DomainError(f"theorem2_k must lie in [4, {MAX_ORDER}]")
        self.model_spec()
        self.solver_config()
        WeightedNormSpec(pair_budget=self.pair_budget, seed=self.seed)
        if not 0 < self.T < self.t_end:
            raise DomainError("need 0 < T < t_end")
        if self.nodes < 16:
            raise DomainError("nodes must be >= 16")
        if self.rho_floor < 0 or (self.rho_floor and self.rho_floor >= self.delta ** 2):
            raise DomainError("rho_floor must be 0 (auto) or in (0, delta^2)")
        if not 0 < self.eta_min < self.eta_max:
            raise DomainError("need 0 < eta_min < eta_max")
        if self.eta_points < 2 or self.rho_points < 2 or self.decades < 1:
            raise DomainError("table sizes must be >= 2 and decades >= 1")
        if not self.t > 0:
            raise DomainError("t must be positive")
        if not self.epsilon > 0:
            raise DomainError("epsilon must be positive")
        if self.seed < 0:
            raise DomainError("seed must be nonnegative")

    def model_spec(self, **override) -> GluedModelSpec:
        kw = dict(b=self.b, a=self.a, k=self.k, delta=self.delta, mode=self.mode)
        kw.update(override)
        return GluedModelSpec(**kw)

    def solver_config(self) -> SolverConfig:
        return SolverConfig(
            newton_tol=self.newton_tol,
            dt_ratio=self.dt_ratio,
            max_newton=self.max_newton,
            nodes=self.nodes,
            rho_floor=self.rho_floor or None,
            samples_per_octave=self.samples_per_octave,
        )

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self):
        return dataclasses.asdict(self)

    def to_text(self):
        return "".join(f"{k} = {v}\n" for k, v in self.to_dict().items())


_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _coerce(key, raw):
    kind = _TYPES[key]
    raw = raw.strip()
    try:
        if kind == "bool":
            low = raw.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if kind == "int":
            value = float(raw)
            if value != int(value):
                raise ValueError(raw)
            return int(value)
        if kind == "float":
            return float(raw)
        return raw
    except ValueError:
        raise DomainError(f"bad value for {key}: {raw!r}") from None


def parse_config_text(text, source="<config>"):
    """Parse ``key = value`` lines into a dict of typed values."""
    out = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DomainError(f"{source}:{n}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _TYPES:
            raise DomainError(f"{source}:{n}: unknown key {key!r}")
        out[key] = _coerce(key, value)
    return out


def load_config(path=None, overrides=None) -> RunConfig:
    """Defaults, then the file at ``path``, then ``overrides`` (None skipped)."""
    values = {}
    if path is not None:
        p = Path(path)
        try:
            text = p.read_text()
        except OSError as exc:
            raise DomainError(f"cannot read config {p}: {exc}") from None
        values.update(parse_config_text(text, str(p)))
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key not in _TYPES:
            raise DomainError(f"unknown key {key!r}")
        values[key] = _coerce(key, str(value)) if isinstance(value, str) else value
    return RunConfig(**values)
