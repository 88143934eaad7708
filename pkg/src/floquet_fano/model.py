"""Model parameters, drive-derived quantities, and replica-band bookkeeping.

The system is a two-level Fano-Anderson chain: a 1D tight-binding continuum
with on-site energy e0 and band half-width beta, two discrete levels A and B
coupled to site 0 with strengths gA and gB, and a cosine drive of amplitude
alpha and angular frequency omega acting on level A only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import (
    ConfigError,
    NegativeCouplingError,
    NonPositiveBandError,
    NonPositiveFrequencyError,
    UnknownKeyError,
)

WEAK_COUPLING_RATIO = 0.2


@dataclass(frozen=True)
class ModelConfig:
    e0: float
    beta: float
    eA: float
    eB: float
    gA: float
    gB: float
    omega: float
    alpha: float

    @classmethod
    def from_chi(cls, e0, beta, eA, eB, gA, gB, omega, chi):
        """Build a config from the dimensionless drive strength chi = alpha/omega."""
        return cls(e0, beta, eA, eB, gA, gB, omega, chi * omega)

    @property
    def chi(self) -> float:
        return self.alpha / self.omega

    @property
    def period(self) -> float:
        return 2.0 * math.pi / self.omega

    @property
    def weak_coupling_advisory(self) -> bool:
        """True when either coupling leaves the weak-coupling regime g/beta <= 0.2."""
        return (self.gA / self.beta > WEAK_COUPLING_RATIO
                or self.gB / self.beta > WEAK_COUPLING_RATIO)

    @property
    def band(self) -> tuple[float, float]:
        return (self.e0 - self.beta, self.e0 + self.beta)


@dataclass(frozen=True)
class DriveDerived:
    chi: float
    period: float


@dataclass(frozen=True)
class ReplicaBand:
    """The n-th drive-shifted copy of the continuum band."""
    n: int
    lower: float
    upper: float

    def contains(self, energy: float) -> bool:
        return self.lower <= energy <= self.upper

    def edge_distance(self, energy: float) -> float:
        """Absolute distance to the nearest band edge (0 inside at an edge)."""
        if self.contains(energy):
            return min(energy - self.lower, self.upper - energy)
        return min(abs(energy - self.lower), abs(energy - self.upper))


def validate(config: ModelConfig) -> ModelConfig:
    """Check invariants and return the config (raises ConfigError subclasses)."""
    if not (config.beta > 0.0):
        raise NonPositiveBandError(f"beta must be positive, got {config.beta}")
    if not (config.omega > 0.0):
        raise NonPositiveFrequencyError(f"omega must be positive, got {config.omega}")
    if config.gA < 0.0 or config.gB < 0.0:
        raise NegativeCouplingError(f"couplings must be >= 0, got gA={config.gA}, gB={config.gB}")
    return config


def drive_derived(config: ModelConfig) -> DriveDerived:
    return DriveDerived(chi=config.chi, period=config.period)


def replica_band(config: ModelConfig, n: int) -> ReplicaBand:
    return ReplicaBand(
        n=n,
        lower=config.e0 - config.beta + n * config.omega,
        upper=config.e0 + config.beta + n * config.omega,
    )


@dataclass(frozen=True)
class LevelReport:
    """Replica-band membership of one discrete level over channels |n| <= N."""
    level: str
    energy: float
    inside: tuple[int, ...]        # channels whose replica band contains the level
    nearest_n: int                 # channel with the closest band edge
    edge_distance: float           # absolute energy distance to that edge

    @property
    def in_any_replica(self) -> bool:
        return bool(self.inside)


def classify_levels(config: ModelConfig, n_max: int) -> dict[str, LevelReport]:
    """Report replica membership of levels A and B for channels n in [-N, N]."""
    reports = {}
    for name, energy in (("A", config.eA), ("B", config.eB)):
        inside = []
        nearest_n = 0
        nearest_d = math.inf
        for n in range(-n_max, n_max + 1):
            band = replica_band(config, n)
            if band.contains(energy):
                inside.append(n)
            d = band.edge_distance(energy)
            if d < nearest_d:
                nearest_d = d
                nearest_n = n
        reports[name] = LevelReport(
            level=name,
            energy=energy,
            inside=tuple(inside),
            nearest_n=nearest_n,
            edge_distance=nearest_d,
        )
    return reports


# --- configuration file parsing -------------------------------------------

MODEL_KEYS = {"e0", "beta", "eA", "eB", "gA", "gB", "omega", "alpha", "chi"}
EVOLUTION_KEYS = {"M", "w", "gamma0", "p", "dt", "t_max", "stride", "initial", "preset"}
SOLVER_KEYS = {"variant", "seed_re", "seed_im", "tol", "max_iter", "N", "guard",
               "quad_tol", "quad_points"}

_MODEL_DEFAULTS = {"e0": 0.0, "beta": 1.0}


def parse_config_text(text: str) -> tuple[ModelConfig, dict, dict]:
    """Parse a flat key=value config; returns (model, evolution keys, solver keys).

    Exactly one of `alpha` / `chi` may be given. Unknown keys raise.
    """
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected key=value, got {line!r}")
        key, value = (part.strip() for part in stripped.split("=", 1))
        if key not in MODEL_KEYS | EVOLUTION_KEYS | SOLVER_KEYS:
            raise UnknownKeyError(f"line {lineno}: unknown key {key!r}")
        if key in raw:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        raw[key] = value

    model_raw = {k: v for k, v in raw.items() if k in MODEL_KEYS}
    if "alpha" in model_raw and "chi" in model_raw:
        raise ConfigError("specify either alpha or chi, not both")

    try:
        values = dict(_MODEL_DEFAULTS)
        values.update({k: float(v) for k, v in model_raw.items() if k != "chi"})
        chi = float(model_raw["chi"]) if "chi" in model_raw else None
    except ValueError as exc:
        raise ConfigError(f"non-numeric model value: {exc}") from exc

    required = {"eA", "eB", "gA", "gB", "omega"}
    missing = required - set(values)
    if missing:
        raise ConfigError(f"missing required keys: {sorted(missing)}")
    if chi is not None:
        values["alpha"] = chi * values["omega"]
    elif "alpha" not in values:
        raise ConfigError("missing drive amplitude: give alpha or chi")

    config = validate(ModelConfig(**values))
    evolution = {k: v for k, v in raw.items() if k in EVOLUTION_KEYS}
    solver = {k: v for k, v in raw.items() if k in SOLVER_KEYS}
    return config, evolution, solver


def parse_config_file(path) -> tuple[ModelConfig, dict, dict]:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config_text(fh.read())
