"""Experiment configuration: schema, defaults, YAML loading, seed derivation.

A single YAML file declares the whole experiment.  Every numeric default below
is part of the shipped calibration: the process parameters and grid window
were chosen so the computed stability map shows several lobes and contains
stable, Hopf-unstable and period-doubling-unstable regions.

Seed policy: one master seed fans out to per-stage, per-item seeds through a
counter-based derivation (``derive_seed``), so any single artifact can be
regenerated in isolation.
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict
from typing import Optional

import numpy as np
import yaml

from .milling import ProcessParams, SimConfig
from .stability import GridSpec

# Stage identifiers for seed derivation.
SEED_NOISE = 1
SEED_SPLIT = 2

TWO_CLASS = "two_class"
THREE_CLASS = "three_class"
PROBLEMS = (TWO_CLASS, THREE_CLASS)
EMBEDDING_POLICIES = ("per_series", "median", "fixed")
NOISELESS = "none"


def derive_seed(master_seed: int, *path: int) -> int:
    """Deterministic 32-bit seed for one (stage, index, ...) path."""
    seq = np.random.SeedSequence([int(master_seed)] + [int(p) for p in path])
    return int(seq.generate_state(1)[0])


def variant_name(snr_db) -> str:
    return NOISELESS if snr_db is None else f"snr{snr_db:g}"


@dataclass(frozen=True)
class StabilityConfig:
    discretization_order: int = 320
    hopf_tolerance: float = 1e-6

    def __post_init__(self):
        if self.discretization_order < 20:
            raise ValueError("discretization_order must be >= 20")
        if self.hopf_tolerance < 0:
            raise ValueError("hopf_tolerance must be non-negative")


@dataclass(frozen=True)
class EmbeddingConfig:
    policy: str = "per_series"
    max_delay: int = 32
    delay: Optional[int] = None
    dimension: Optional[int] = None
    entropy_order: int = 3
    prominence: float = 0.01

    def __post_init__(self):
        if self.policy not in EMBEDDING_POLICIES:
            raise ValueError(f"policy must be one of {EMBEDDING_POLICIES}")
        if self.policy == "fixed" and (self.delay is None or self.dimension is None):
            raise ValueError("fixed embedding policy needs explicit delay and dimension")
        if self.max_delay < 2:
            raise ValueError("max_delay must be >= 2")


@dataclass(frozen=True)
class PersistenceConfig:
    max_points: int = 80
    max_dim: int = 2
    threshold: Optional[float] = None

    def __post_init__(self):
        if self.max_points < 2:
            raise ValueError("max_points must be >= 2")
        if self.max_dim not in (0, 1, 2):
            raise ValueError("max_dim must be 0, 1 or 2")


@dataclass(frozen=True)
class FeaturizationConfig:
    methods: tuple = ("carlsson", "template")
    template_mesh_size: tuple = (5, 5)
    template_padding: float = 0.05
    carlsson_sweep: bool = True
    include_h0: bool = False

    def __post_init__(self):
        object.__setattr__(self, "methods", tuple(self.methods))
        object.__setattr__(self, "template_mesh_size", tuple(self.template_mesh_size))
        for m in self.methods:
            if m not in ("carlsson", "template"):
                raise ValueError(f"unknown featurization method {m!r}")
        if len(self.template_mesh_size) != 2 or min(self.template_mesh_size) < 2:
            raise ValueError("template_mesh_size must be two integers >= 2")


@dataclass(frozen=True)
class ClassifyConfig:
    algorithms: tuple = ("svm", "logistic", "random_forest", "gradient_boost")
    train_fraction: float = 0.67
    repeats: int = 10
    problems: tuple = (TWO_CLASS,)

    def __post_init__(self):
        object.__setattr__(self, "algorithms", tuple(self.algorithms))
        object.__setattr__(self, "problems", tuple(self.problems))
        for p in self.problems:
            if p not in PROBLEMS:
                raise ValueError(f"unknown problem {p!r}; expected one of {PROBLEMS}")
        if not 0 < self.train_fraction < 1:
            raise ValueError("train_fraction must lie in (0, 1)")
        if self.repeats < 1:
            raise ValueError("repeats must be positive")


DEFAULT_PROCESS = dict(
    modal_mass=0.03993,            # kg
    natural_frequency=5792.8,      # rad/s (922 Hz tool mode)
    damping_ratio=0.05,
    tangential_coefficient=6.0e8,  # N/m^2
    normal_coefficient_ratio=1.0 / 3.0,
    teeth_count=4,
    radial_immersion=0.25,
    milling_mode="down",
    feed_per_tooth=1.0e-4,         # m
)

DEFAULT_GRID = dict(
    speed_range=(6000.0, 14000.0),  # rpm
    depth_range=(0.0005, 0.005),    # m
    speed_count=30,
    depth_count=30,
)


@dataclass(frozen=True)
class ExperimentConfig:
    process: ProcessParams
    grid: GridSpec
    sim: SimConfig = field(default_factory=SimConfig)
    stability: StabilityConfig = field(default_factory=StabilityConfig)
    noise_levels: tuple = (20.0, 25.0, 30.0)
    embedding: EmbeddingConfig = field(default_factory=EmbeddingConfig)
    persistence: PersistenceConfig = field(default_factory=PersistenceConfig)
    featurization: FeaturizationConfig = field(default_factory=FeaturizationConfig)
    classify: ClassifyConfig = field(default_factory=ClassifyConfig)
    master_seed: int = 20220214

    def __post_init__(self):
        object.__setattr__(self, "noise_levels",
                           tuple(float(s) for s in self.noise_levels))

    def variants(self) -> list:
        """Dataset variants: the noiseless one plus one per SNR level."""
        return [None] + list(self.noise_levels)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["process"] = asdict(self.process)
        out["grid"] = asdict(self.grid)
        out["sim"] = asdict(self.sim)
        return out


def default_config(**overrides) -> ExperimentConfig:
    process = ProcessParams(**DEFAULT_PROCESS)
    grid = GridSpec(**DEFAULT_GRID)
    return ExperimentConfig(process=process, grid=grid, **overrides)


_SECTION_KEYS = {
    "process", "grid", "sim", "stability", "noise_levels", "embedding",
    "persistence", "featurization", "classify", "master_seed",
}


def config_from_dict(raw: dict) -> ExperimentConfig:
    """Build a validated config from a (possibly partial) plain dictionary."""
    unknown = set(raw) - _SECTION_KEYS
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")

    def section(name, cls, defaults=None):
        data = dict(defaults or {})
        data.update(raw.get(name) or {})
        known = cls.__dataclass_fields__
        bad = set(data) - set(known)
        if bad:
            raise ValueError(f"unknown keys in '{name}': {sorted(bad)}")
        for key in ("speed_range", "depth_range"):
            if key in data and isinstance(data[key], list):
                data[key] = tuple(data[key])
        return cls(**data)

    process = section("process", ProcessParams, DEFAULT_PROCESS)
    grid = section("grid", GridSpec, DEFAULT_GRID)
    sim = section("sim", SimConfig)
    stability = section("stability", StabilityConfig)
    embedding = section("embedding", EmbeddingConfig)
    persistence = section("persistence", PersistenceConfig)
    featurization = section("featurization", FeaturizationConfig)
    classify = section("classify", ClassifyConfig)
    noise_levels = raw.get("noise_levels", (20.0, 25.0, 30.0))
    if noise_levels is None:
        noise_levels = ()
    master_seed = int(raw.get("master_seed", 20220214))
    return ExperimentConfig(
        process=process, grid=grid, sim=sim, stability=stability,
        noise_levels=tuple(noise_levels), embedding=embedding,
        persistence=persistence, featurization=featurization,
        classify=classify, master_seed=master_seed,
    )


def load_config(path) -> ExperimentConfig:
    """Load and validate a YAML experiment config; missing keys use defaults."""
    with open(path) as fh:
        raw = yaml.safe_load(fh) or {}
    if not isinstance(raw, dict):
        raise ValueError("config file must hold a mapping")
    return config_from_dict(raw)
