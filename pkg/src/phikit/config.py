"""Run configuration: a JSON document with fixed keys (unknown keys are rejected)."""
from __future__ import annotations

import copy
import json
from dataclasses import asdict, dataclass, field, fields

from .errors import ConfigError
from .lp import DEFAULT_EDGES

__all__ = ["EXPERIMENTS", "DEFAULT_TOLERANCES", "GridConfig", "SmallGridConfig", "CounterexampleConfig",
           "RunConfig", "load_config", "parse_grid_overrides"]

EXPERIMENTS = (
    "lp-check",
    "reconstruct",
    "norms",
    "adp",
    "lemma-checks",
    "kernel-synth",
    "t1",
    "paraproduct",
    "decomposition",
    "sharpness",
    "counterexample",
)

DEFAULT_TOLERANCES = {
    "partition": 1e-10,
    "reconstruction": 1e-8,
    "pairing": 1e-8,
    "riesz_identity": 1e-12,
    "refinement": 0.05,
    "truncation_growth": 0.10,
    "kernel_relative": 0.02,
    "calibration_residual": 0.05,
    "zero_kernel": 1e-9,
    "paraproduct_diagonal": 1e-12,
    "t1_reproduction": 1e-6,
    "t1_transpose": 1e-9,
    "stabilization": 1e-9,
    "decomposition": 1e-8,
    "sharpness_slope": 0.05,
    "growth_slope_low": 0.4,
    "growth_slope_high": 0.6,
}


def _strict(cls, data, where: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: expected an object, got {type(data).__name__}")
    names = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ConfigError(f"{where}: unknown key(s) {', '.join(unknown)}")
    return cls(**data)


@dataclass
class GridConfig:
    n: int = 2
    L: float = 64.0
    N: int = 256

    def validate(self, where="grid"):
        if not isinstance(self.n, int) or self.n < 1:
            raise ConfigError(f"{where}.n: need a positive integer")
        if not isinstance(self.N, int) or self.N < 4 or self.N & (self.N - 1):
            raise ConfigError(f"{where}.N: need a power of two >= 4")
        if not float(self.L) > 0:
            raise ConfigError(f"{where}.L: need a positive box side")
        self.L = float(self.L)


@dataclass
class SmallGridConfig:
    """Grid and scale range for experiments that probe operators column by column."""

    L: float = 16.0
    N: int = 64
    nu_min: int = 0
    nu_max: int = 2

    def validate(self, where="small_grid"):
        GridConfig(2, self.L, self.N).validate(where)
        self.L = float(self.L)
        if self.nu_max < self.nu_min:
            raise ConfigError(f"{where}: nu_max < nu_min")


@dataclass
class CounterexampleConfig:
    periods: int = 64
    dense_N: int = 2048
    Ns: list = field(default_factory=lambda: [1, 2, 4, 8, 16])
    radius: float = 0.045
    ta_periods: int = 16
    ta_N: int = 128

    def validate(self, where="counterexample"):
        if not self.Ns or any((not isinstance(v, int)) or v < 1 for v in self.Ns):
            raise ConfigError(f"{where}.Ns: need positive integers")
        if not self.radius > 0:
            raise ConfigError(f"{where}.radius: need a positive radius")
        for k in ("periods", "dense_N", "ta_periods", "ta_N"):
            if not isinstance(getattr(self, k), int) or getattr(self, k) < 1:
                raise ConfigError(f"{where}.{k}: need a positive integer")


@dataclass
class RunConfig:
    grid: GridConfig = field(default_factory=GridConfig)
    edges: list = field(default_factory=lambda: list(DEFAULT_EDGES))
    counterexample_mode: bool = False
    lattice: dict = field(default_factory=lambda: {"nu_min": None, "nu_max": None})
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    seed: int = 0
    experiments: list = field(default_factory=lambda: list(EXPERIMENTS))
    out: str | None = None
    small_grid: SmallGridConfig = field(default_factory=SmallGridConfig)
    kernel_grid_N: int = 1024
    counterexample: CounterexampleConfig = field(default_factory=CounterexampleConfig)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        data = copy.deepcopy(data)
        if not isinstance(data, dict):
            raise ConfigError("config: expected an object")
        names = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - names)
        if unknown:
            raise ConfigError(f"config: unknown key(s) {', '.join(unknown)}")
        if "grid" in data:
            data["grid"] = _strict(GridConfig, data["grid"], "grid")
        if "small_grid" in data:
            data["small_grid"] = _strict(SmallGridConfig, data["small_grid"], "small_grid")
        if "counterexample" in data:
            data["counterexample"] = _strict(CounterexampleConfig, data["counterexample"], "counterexample")
        if "tolerances" in data:
            tol = data["tolerances"]
            if not isinstance(tol, dict):
                raise ConfigError("tolerances: expected an object")
            bad = sorted(set(tol) - set(DEFAULT_TOLERANCES))
            if bad:
                raise ConfigError(f"tolerances: unknown key(s) {', '.join(bad)}")
            data["tolerances"] = {**DEFAULT_TOLERANCES, **tol}
        if "lattice" in data:
            lat = data["lattice"]
            if not isinstance(lat, dict):
                raise ConfigError("lattice: expected an object")
            bad = sorted(set(lat) - {"nu_min", "nu_max"})
            if bad:
                raise ConfigError(f"lattice: unknown key(s) {', '.join(bad)}")
            data["lattice"] = {"nu_min": lat.get("nu_min"), "nu_max": lat.get("nu_max")}
        cfg = cls(**data)
        cfg.validate()
        return cfg

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def validate(self) -> "RunConfig":
        self.grid.validate()
        self.small_grid.validate()
        self.counterexample.validate()
        if len(self.edges) != 4 or not all(isinstance(e, (int, float)) for e in self.edges):
            raise ConfigError("edges: need four numbers r0 < r1 <= r2 < r3")
        self.edges = [float(e) for e in self.edges]
        if not isinstance(self.counterexample_mode, bool):
            raise ConfigError("counterexample_mode: need true or false")
        for k, v in self.tolerances.items():
            if not isinstance(v, (int, float)) or not v > 0:
                raise ConfigError(f"tolerances.{k}: need a positive number")
        if self.tolerances["growth_slope_low"] >= self.tolerances["growth_slope_high"]:
            raise ConfigError("tolerances.growth_slope_low: must be below growth_slope_high")
        unknown = [e for e in self.experiments if e not in EXPERIMENTS]
        if unknown:
            raise ConfigError(f"experiments: unknown experiment(s) {', '.join(unknown)}")
        if len(set(self.experiments)) != len(self.experiments):
            raise ConfigError("experiments: duplicates")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigError("seed: need a non-negative integer")
        lat = self.lattice
        for k in ("nu_min", "nu_max"):
            if lat[k] is not None and not isinstance(lat[k], int):
                raise ConfigError(f"lattice.{k}: need an integer or null")
        if (lat["nu_min"] is None) != (lat["nu_max"] is None):
            raise ConfigError("lattice: give both nu_min and nu_max or neither")
        if not isinstance(self.kernel_grid_N, int) or self.kernel_grid_N < self.grid.N:
            raise ConfigError("kernel_grid_N: need an integer >= grid.N")
        return self


def load_config(path) -> RunConfig:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"config: cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config: {path} is not valid JSON ({exc})") from exc
    return RunConfig.from_dict(data)


def parse_grid_overrides(text: str) -> dict:
    """``"N=128,L=32"`` -> ``{"N": 128, "L": 32.0}``."""
    out = {}
    for part in filter(None, (p.strip() for p in text.split(","))):
        key, sep, val = part.partition("=")
        key = key.strip()
        if not sep or key not in ("n", "L", "N"):
            raise ConfigError(f"grid-overrides: cannot parse {part!r} (keys n, L, N)")
        try:
            out[key] = float(val) if key == "L" else int(val)
        except ValueError as exc:
            raise ConfigError(f"grid-overrides: bad value in {part!r}") from exc
    return out
