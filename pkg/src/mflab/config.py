"""Experiment configuration: a flat key = value text format plus named presets.

Schema (one `key = value` per line, `#` starts a comment, keys match the
ExperimentConfig fields):

    name          run label, used in summaries            (str)
    sites         lattice sites L >= 2                    (int)
    n_particles   particle number N >= 2                  (int)
    h_preset      one-body operator: laplacian | zero     (str)
    v_preset      pair potential: bounded | spiky | coulomb-like | zero
    v_lambda      coulomb-like strength                   (float)
    v_delta       coulomb-like regularizer                (float)
    v_spike       spiky bump height                       (float)
    scenario      product | near-product | mixture        (str)
    rank          one-particle rank for product data      (int, default L)
    epsilon       near-product mixing weight in [0, 1]    (float)
    seed          RNG seed; fixes the run bit for bit     (int)
    dt            time step                               (float)
    t_final       final time, t_final/dt integral         (float)
    sample_stride sampling stride in steps                (int)
    k_values      marginal orders, comma separated        (ints)
    tol           base certification tolerance            (float)
    out_dir       output directory                        (str)
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from pathlib import Path

from .errors import UsageError
from .linalg import LIFTED_DIM_BUDGET, NBODY_DIM_BUDGET

V_PRESETS = ("bounded", "spiky", "coulomb-like", "zero")
H_PRESETS = ("laplacian", "zero")
SCENARIOS = ("product", "near-product", "mixture")


@dataclass(frozen=True)
class ExperimentConfig:
    name: str = "run"
    sites: int = 4
    n_particles: int = 3
    h_preset: str = "laplacian"
    v_preset: str = "bounded"
    v_lambda: float = 1.0
    v_delta: float = 0.5
    v_spike: float = 1.0
    scenario: str = "product"
    rank: int | None = None
    epsilon: float = 0.1
    seed: int = 2024
    dt: float = 1e-3
    t_final: float = 1.0
    sample_stride: int = 10
    k_values: tuple[int, ...] = (1, 2)
    tol: float = 1e-8
    out_dir: str = "mflab-out"

    def __post_init__(self):
        if self.n_particles < 2:
            raise UsageError("n_particles must be at least 2")
        if self.sites < 2:
            raise UsageError("sites must be at least 2")
        nbody_dim = self.sites**self.n_particles
        if nbody_dim > NBODY_DIM_BUDGET:
            raise UsageError(
                f"sites^n_particles = {nbody_dim} exceeds the budget {NBODY_DIM_BUDGET}"
            )
        lifted_dim = (self.sites * self.sites) ** self.n_particles
        if lifted_dim > LIFTED_DIM_BUDGET:
            raise UsageError(
                f"lifted dimension {lifted_dim} exceeds the budget {LIFTED_DIM_BUDGET}"
            )
        if self.h_preset not in H_PRESETS:
            raise UsageError(f"unknown h_preset {self.h_preset!r}; choose from {H_PRESETS}")
        if self.v_preset not in V_PRESETS:
            raise UsageError(f"unknown v_preset {self.v_preset!r}; choose from {V_PRESETS}")
        if self.scenario not in SCENARIOS:
            raise UsageError(f"unknown scenario {self.scenario!r}; choose from {SCENARIOS}")
        if self.rank is not None and not 1 <= self.rank <= self.sites:
            raise UsageError(f"rank {self.rank} outside 1..{self.sites}")
        if not 0.0 <= self.epsilon <= 1.0:
            raise UsageError(f"epsilon {self.epsilon} outside [0, 1]")
        if self.dt <= 0 or self.t_final < 0:
            raise UsageError("need dt > 0 and t_final >= 0")
        steps = self.t_final / self.dt
        if abs(steps - round(steps)) > 1e-9:
            raise UsageError(f"t_final/dt = {steps} is not an integer")
        if self.sample_stride < 1:
            raise UsageError("sample_stride must be >= 1")
        ks = tuple(sorted(set(int(k) for k in self.k_values)))
        if not ks or ks[0] < 1 or ks[-1] > self.n_particles:
            raise UsageError(f"k_values {self.k_values} outside 1..{self.n_particles}")
        object.__setattr__(self, "k_values", ks)
        if self.tol <= 0:
            raise UsageError("tol must be positive")


PRESETS: dict[str, dict] = {
    "smoke": dict(name="smoke", sites=2, n_particles=2, t_final=0.1, dt=1e-3,
                  sample_stride=10, v_preset="bounded", scenario="product"),
    "paper-check": dict(name="paper-check", sites=4, n_particles=3, t_final=1.0,
                        dt=1e-3, sample_stride=10, v_preset="bounded",
                        scenario="product"),
    "coulomb-check": dict(name="coulomb-check", sites=4, n_particles=3, t_final=1.0,
                          dt=1e-3, sample_stride=10, v_preset="coulomb-like",
                          scenario="product"),
    "near-product": dict(name="near-product", sites=4, n_particles=3, t_final=1.0,
                         dt=1e-3, sample_stride=10, v_preset="bounded",
                         scenario="near-product", epsilon=0.1),
}

_FIELD_TYPES = {f.name: f for f in fields(ExperimentConfig)}


def _parse_value(key: str, raw: str):
    raw = raw.strip()
    if key in ("name", "h_preset", "v_preset", "scenario", "out_dir"):
        return raw
    if key == "k_values":
        return tuple(int(part) for part in raw.replace(",", " ").split())
    if key == "rank":
        return None if raw.lower() in ("none", "") else int(raw)
    if key in ("sites", "n_particles", "seed", "sample_stride"):
        return int(raw)
    if key in ("v_lambda", "v_delta", "v_spike", "epsilon", "dt", "t_final", "tol"):
        return float(raw)
    raise UsageError(f"unknown config key {key!r}")


def parse_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    if not path.is_file():
        raise UsageError(f"config file {path} not found")
    values: dict = {}
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected 'key = value'")
        key, raw = (part.strip() for part in line.split("=", 1))
        if key not in _FIELD_TYPES:
            raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
        try:
            values[key] = _parse_value(key, raw)
        except ValueError as exc:
            raise UsageError(f"{path}:{lineno}: bad value for {key}: {exc}") from exc
    values.setdefault("name", path.stem)
    return ExperimentConfig(**values)


def resolve_config(spec: str) -> ExperimentConfig:
    """A preset name or a path to a config file."""
    if spec in PRESETS:
        return ExperimentConfig(**PRESETS[spec])
    return parse_config(spec)


def apply_overrides(config: ExperimentConfig, *, seed=None, out_dir=None, dt=None,
                    t_final=None, k_values=None, tol=None) -> ExperimentConfig:
    updates = {}
    if seed is not None:
        updates["seed"] = int(seed)
    if out_dir is not None:
        updates["out_dir"] = str(out_dir)
    if dt is not None:
        updates["dt"] = float(dt)
    if t_final is not None:
        updates["t_final"] = float(t_final)
    if k_values is not None:
        updates["k_values"] = tuple(int(k) for k in k_values)
    if tol is not None:
        updates["tol"] = float(tol)
    return replace(config, **updates) if updates else config


def config_as_dict(config: ExperimentConfig) -> dict:
    return {
        f.name: (list(v) if isinstance(v := getattr(config, f.name), tuple) else v)
        for f in fields(ExperimentConfig)
    }
