"""Case configuration: defaults, file parsing, and domain construction."""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import ConfigurationError
from .geometry import Circle, DomainSpec, Obstacle, Star, default_bc_policy

CASES = ("dvd", "dvd-split", "obstacles2d", "spheres3d", "custom")
DISCRETIZATIONS = ("hybrid", "pure-regular", "pure-scattered")

# Per-case defaults: spacing, physics, and thermal boundary values.
# h_s defaults to h_s_ratio * h_r so overriding h_r keeps the grading.
_CASE_DEFAULTS = {
    "dvd": dict(h_r=0.0398, h_s_ratio=1.0, delta_h=4.0, Ra=1e6, Pr=0.71,
                t_cold=-0.5, t_hot=0.5, t_init=0.0, t_end=0.15),
    "dvd-split": dict(h_r=0.0398, h_s_ratio=1.0, delta_h=4.0, Ra=1e6, Pr=0.71,
                      t_cold=-0.5, t_hot=0.5, t_init=0.0, t_end=0.15),
    "obstacles2d": dict(h_r=0.01, h_s_ratio=1 / 3, delta_h=4.0, Ra=1e6, Pr=0.71,
                        t_cold=0.0, t_hot=1.0, t_init=0.0, t_end=0.15),
    "spheres3d": dict(h_r=0.025, h_s_ratio=0.5, delta_h=4.0, Ra=1e4, Pr=0.71,
                      t_cold=0.0, t_hot=1.0, t_init=0.0, t_end=1.0),
    "custom": dict(h_r=0.05, h_s_ratio=1.0, delta_h=4.0, Ra=1e6, Pr=0.71,
                   t_cold=-0.5, t_hot=0.5, t_init=0.0, t_end=0.15),
}


@dataclass
class CaseConfig:
    case: str = "dvd"
    discretization: str = "hybrid"
    h_r: float = None
    h_s: float = None
    delta_h: float = None
    Ra: float = None
    Pr: float = None
    t_cold: float = None
    t_hot: float = None
    t_init: float = None
    t_end: float = None
    rng_seed: int = 2
    split_orientation: str = "horizontal"
    dim: int = None
    out_dir: str = "out"
    save_fields: bool = True
    # solver controls
    poisson_tol: float = 1e-8
    poisson_maxiter: int = 2000
    steady_tol: float = 1e-6
    nu_window: int = 40
    nu_stride: int = 20
    # obstacle layout (obstacles2d)
    n_obstacles: int = 4
    obstacle_mean_radius: float = 0.1
    obstacle_amplitude: float = 0.025
    obstacle_lobes: int = 5
    # obstacle layout (spheres3d)
    n_spheres: int = 4
    sphere_radius_min: float = 0.08
    sphere_radius_max: float = 0.15

    def __post_init__(self):
        if self.case not in CASES:
            raise ConfigurationError(f"unknown case {self.case!r}; expected one of {CASES}")
        if self.discretization not in DISCRETIZATIONS:
            raise ConfigurationError(
                f"unknown discretization {self.discretization!r}; expected one of {DISCRETIZATIONS}")
        defaults = _CASE_DEFAULTS[self.case]
        for key, value in defaults.items():
            if key != "h_s_ratio" and getattr(self, key) is None:
                setattr(self, key, value)
        if self.h_s is None:
            self.h_s = self.h_r * defaults["h_s_ratio"]
        if self.dim is None:
            self.dim = 3 if self.case == "spheres3d" else 2
        self._validate()

    def _validate(self):
        if self.case == "spheres3d" and self.dim != 3:
            raise ConfigurationError("spheres3d requires a 3D box")
        if self.case in ("dvd", "dvd-split", "obstacles2d") and self.dim != 2:
            raise ConfigurationError(f"{self.case} requires a 2D box")
        if self.delta_h < 0:
            raise ConfigurationError("delta_h must be non-negative")
        if self.h_r <= 0 or self.h_s <= 0:
            raise ConfigurationError("spacings must be positive")
        if self.h_s > self.h_r:
            raise ConfigurationError("h_s must not exceed h_r")
        if self.Ra <= 0 or self.Pr <= 0:
            raise ConfigurationError("Ra and Pr must be positive")
        if self.t_end <= 0:
            raise ConfigurationError("t_end must be positive")
        if self.split_orientation not in ("horizontal", "vertical"):
            raise ConfigurationError("split_orientation must be horizontal or vertical")
        if not 0 < self.poisson_tol < 1:
            raise ConfigurationError("poisson_tol must lie in (0, 1)")

    def with_overrides(self, **kwargs) -> "CaseConfig":
        if "h_r" in kwargs and "h_s" not in kwargs:
            kwargs["h_s"] = None  # re-derive from the case's h_s/h_r ratio
        return replace(self, **kwargs)

    def bc_policy(self, spec: DomainSpec):
        """Temperature BC assignment by boundary origin tag."""
        if self.case in ("dvd", "dvd-split"):
            cold, hot = self.t_cold, self.t_hot

            def policy(origin, position):
                if origin == "wall:x-":
                    return ("dirichlet", cold)
                if origin == "wall:x+":
                    return ("dirichlet", hot)
                return ("neumann", 0.0)

            return policy
        return default_bc_policy(spec)

    def cold_origins(self, spec: DomainSpec) -> set[str]:
        """Origin tags of the cold boundary used for the Nusselt average."""
        if self.case in ("dvd", "dvd-split"):
            return {"wall:x-"}
        cold = {f"obstacle:{i}" for i, obs in enumerate(spec.obstacles)
                if obs.temperature is not None and obs.temperature == self.t_cold}
        if not cold:
            raise ConfigurationError("no cold boundary found for the Nusselt average")
        return cold


def _place_obstacles(config: CaseConfig) -> tuple[Obstacle, ...]:
    """Random non-overlapping obstacle layout, deterministic in rng_seed."""
    rng = np.random.default_rng(config.rng_seed)
    min_gap = 2 * config.h_s
    obstacles: list[Obstacle] = []
    if config.case == "obstacles2d":
        count = config.n_obstacles
        reach = config.obstacle_mean_radius + config.obstacle_amplitude
    else:
        count = config.n_spheres
        reach = config.sphere_radius_max
    wall_margin = reach + max(0.1, 4 * min_gap)
    dim = config.dim
    for k in range(count):
        temperature = config.t_cold if k % 2 == 0 else config.t_hot
        for attempt in range(10_000):
            center = tuple(rng.uniform(wall_margin, 1.0 - wall_margin, size=dim))
            if config.case == "obstacles2d":
                shape = Star(center, config.obstacle_mean_radius, config.obstacle_amplitude,
                             config.obstacle_lobes, phase=float(rng.uniform(0, 2 * np.pi)))
            else:
                shape = Circle(center, float(rng.uniform(config.sphere_radius_min,
                                                         config.sphere_radius_max)))
            candidate = Obstacle(shape, temperature)
            trial = DomainSpec(np.zeros(dim), np.ones(dim), tuple(obstacles) + (candidate,))
            try:
                trial.validate_clearances(min_gap)
            except ConfigurationError:
                continue
            obstacles.append(candidate)
            break
        else:
            raise ConfigurationError(
                f"could not place obstacle {k} after 10000 attempts (seed {config.rng_seed})")
    return tuple(obstacles)


def build_domain(config: CaseConfig) -> DomainSpec:
    """Unit box, plus the case's obstacle layout where applicable."""
    dim = config.dim
    if config.case in ("dvd", "dvd-split", "custom"):
        return DomainSpec(np.zeros(dim), np.ones(dim))
    spec = DomainSpec(np.zeros(dim), np.ones(dim), _place_obstacles(config))
    spec.validate_clearances(2 * config.h_s)
    return spec


# Config-file schema: section -> {key: converter}.
_BOOL = {"true": True, "false": False, "1": True, "0": False, "yes": True, "no": False}


def _to_bool(s: str) -> bool:
    try:
        return _BOOL[s.strip().lower()]
    except KeyError:
        raise ValueError(f"not a boolean: {s!r}")


_SCHEMA = {
    "case": {
        "name": str, "discretization": str, "h_r": float, "h_s": float, "delta_h": float,
        "ra": float, "pr": float, "t_cold": float, "t_hot": float, "t_init": float,
        "t_end": float, "rng_seed": int, "split_orientation": str, "out_dir": str,
        "save_fields": _to_bool,
    },
    "solver": {
        "poisson_tol": float, "poisson_maxiter": int, "steady_tol": float,
        "nu_window": int, "nu_stride": int,
    },
    "obstacles2d": {
        "count": int, "mean_radius": float, "amplitude": float, "lobes": int,
    },
    "spheres3d": {
        "count": int, "radius_min": float, "radius_max": float,
    },
}

_KEY_MAP = {
    ("case", "name"): "case",
    ("case", "ra"): "Ra",
    ("case", "pr"): "Pr",
    ("obstacles2d", "count"): "n_obstacles",
    ("obstacles2d", "mean_radius"): "obstacle_mean_radius",
    ("obstacles2d", "amplitude"): "obstacle_amplitude",
    ("obstacles2d", "lobes"): "obstacle_lobes",
    ("spheres3d", "count"): "n_spheres",
    ("spheres3d", "radius_min"): "sphere_radius_min",
    ("spheres3d", "radius_max"): "sphere_radius_max",
}


def parse_config(path) -> CaseConfig:
    """Read a key=value config file with case-scoped sections into a CaseConfig.

    Unknown sections or keys are rejected; value conversion errors report the
    offending section and key.
    """
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"config file not found: {path}")
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read(path)
    except configparser.Error as exc:
        raise ConfigurationError(f"{path}: {exc}") from exc

    kwargs = {}
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigurationError(
                f"{path}: unknown section [{section}]; expected one of {sorted(_SCHEMA)}")
        for key, raw in parser.items(section):
            if key not in _SCHEMA[section]:
                raise ConfigurationError(f"{path}: unknown key '{key}' in section [{section}]")
            try:
                value = _SCHEMA[section][key](raw)
            except ValueError as exc:
                raise ConfigurationError(f"{path}: bad value for [{section}] {key}: {exc}") from exc
            kwargs[_KEY_MAP.get((section, key), key)] = value
    try:
        return CaseConfig(**kwargs)
    except ConfigurationError as exc:
        raise ConfigurationError(f"{path}: {exc}") from exc
