"""Run configuration and scenario presets."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict, replace


@dataclass
class SimConfig:
    """Physics, grid, stepping and monitoring parameters for one scenario.

    sigma admissibility follows the standing hypothesis: any sigma > 0 for
    d <= 4 and sigma < 4/(d-4) for d >= 5.  coupling scales the nonlinear
    term; 0 gives the free (linear) flow.
    """

    d: int = 4
    sigma: float = 1.0
    mu: float = 0.0
    coupling: float = 1.0

    n_r: int = 256
    r_max: float = 12.0
    n_z: int = 256
    z_max: float = 12.0

    R_list: tuple = (4.0, 8.0, 16.0)

    dt0: float = 1e-3
    dt_min: float = 1e-9
    dt_max: float = 5e-3
    t_end: float = 1.0
    snapshot_interval: float = 1e-2
    step_tol: float = 1e-7          # per-step splitting-energy drift triggering dt halving

    mass_tol: float = 1e-6
    energy_tol: float = 1e-5
    growth_factor: float = 1e3

    chi: float = 1.0                # Theorem-1 mu<0 constant; placeholder, see reports
    ic_family: str = "gaussian"     # gaussian | ring | ground_state_perturbation
    ic_params: dict = field(default_factory=lambda: {"A": 1.0, "w": 1.0})
    seed: int = 0

    field_stride: int = 10          # store full fields every k-th snapshot
    field_cap: int = 200
    out_dir: str = "out"
    quiet: bool = False

    def validate(self) -> None:
        errs = []
        if self.d < 3:
            errs.append(f"d={self.d}: need d >= 3")
        if self.sigma <= 0:
            errs.append(f"sigma={self.sigma}: need sigma > 0")
        if self.d >= 5 and self.sigma >= 4.0 / (self.d - 4):
            errs.append(f"sigma={self.sigma}: need sigma < 4/(d-4) = {4.0/(self.d-4):.4g} for d={self.d}")
        if not (self.dt_min < self.dt0 <= self.dt_max):
            errs.append(f"need dt_min < dt0 <= dt_max (got {self.dt_min}, {self.dt0}, {self.dt_max})")
        for name in ("mass_tol", "energy_tol", "step_tol", "snapshot_interval", "growth_factor"):
            if getattr(self, name) <= 0:
                errs.append(f"{name} must be positive")
        if self.n_z % 2 != 0:
            errs.append(f"n_z={self.n_z} must be even")
        if errs:
            raise ValueError("invalid config:\n  " + "\n  ".join(errs))

    @property
    def s_c(self) -> float:
        return self.d / 2.0 - 2.0 / self.sigma

    def to_json(self, path) -> None:
        d = asdict(self)
        d["R_list"] = list(self.R_list)
        with open(path, "w") as f:
            json.dump(d, f, indent=2, sort_keys=True)
            f.write("\n")

    @classmethod
    def from_json(cls, path) -> "SimConfig":
        with open(path) as f:
            data = json.load(f)
        return cls.from_dict(data)

    @classmethod
    def from_dict(cls, data: dict) -> "SimConfig":
        known = {f.name for f in cls.__dataclass_fields__.values()}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        if "R_list" in data:
            data = dict(data)
            data["R_list"] = tuple(data["R_list"])
        cfg = cls(**data)
        cfg.validate()
        return cfg


_PRESETS: dict[str, dict] = {
    # mass-critical negative-energy collapse (d=4, sigma=1, mu=0)
    "mc-neg-energy": dict(
        d=4, sigma=1.0, mu=0.0,
        n_r=512, r_max=12.0, n_z=512, z_max=12.0,
        R_list=(4.0, 8.0, 16.0),
        dt0=2e-4, dt_min=1e-9, dt_max=1e-3, t_end=4.0,
        snapshot_interval=2e-3, step_tol=3e-7,
        mass_tol=1e-5, energy_tol=2e-2, growth_factor=1e3,
        ic_family="gaussian", ic_params={"A": 7.0, "w": 1.0},
    ),
    # free flow sanity: unitary evolution, machine-level conservation
    "linear-sanity": dict(
        d=4, sigma=1.0, mu=0.0, coupling=0.0,
        n_r=128, r_max=12.0, n_z=128, z_max=12.0,
        R_list=(2.0, 4.0, 8.0),
        dt0=1e-3, dt_min=1e-3, dt_max=1e-3, t_end=1.0,
        snapshot_interval=1e-2, step_tol=1.0,
        mass_tol=1e-9, energy_tol=1e-4,
        ic_family="gaussian", ic_params={"A": 1.0, "w": 1.5},
    ),
    # mass-supercritical with positive mu and negative energy (d=5, sigma=1)
    "supercritical-mu-pos": dict(
        d=5, sigma=1.0, mu=1.0,
        n_r=256, r_max=10.0, n_z=256, z_max=10.0,
        R_list=(4.0, 8.0, 16.0),
        dt0=1e-4, dt_min=1e-10, dt_max=5e-4, t_end=2.0,
        snapshot_interval=1e-3, step_tol=3e-7,
        mass_tol=1e-5, energy_tol=2e-2, growth_factor=1e3,
        ic_family="gaussian", ic_params={"A": 12.0, "w": 1.0},
    ),
    # mass-supercritical mu=0 with E >= 0 datum satisfying the threshold clause
    "supercritical-threshold": dict(
        d=5, sigma=1.0, mu=0.0,
        n_r=256, r_max=10.0, n_z=256, z_max=10.0,
        R_list=(4.0, 8.0, 16.0),
        dt0=1e-4, dt_min=1e-10, dt_max=5e-4, t_end=2.0,
        snapshot_interval=2e-3, step_tol=3e-7,
        mass_tol=1e-5, energy_tol=2e-2, growth_factor=1e3,
        ic_family="ground_state_perturbation", ic_params={"eps": 0.05},
    ),
    # small-amplitude run that stays smooth over a long horizon
    "subthreshold": dict(
        d=4, sigma=1.0, mu=0.0,
        n_r=128, r_max=12.0, n_z=128, z_max=12.0,
        R_list=(4.0, 8.0),
        dt0=2e-3, dt_min=1e-8, dt_max=1e-2, t_end=10.0,
        snapshot_interval=5e-2, step_tol=1e-7,
        mass_tol=1e-6, energy_tol=1e-5,
        ic_family="gaussian", ic_params={"A": 0.1, "w": 1.0},
    ),
    # no evolution: run every inequality verifier on randomized fields
    "inequality-suite": dict(
        d=4, sigma=1.0, mu=0.0,
        n_r=128, r_max=10.0, n_z=128, z_max=10.0,
        R_list=(2.0, 4.0, 8.0),
        t_end=0.0, dt0=1e-3, dt_max=1e-3, snapshot_interval=1.0,
        ic_family="gaussian", ic_params={"A": 1.0, "w": 1.0},
    ),
}


def preset_names() -> list[str]:
    return sorted(_PRESETS)


def preset(name: str) -> SimConfig:
    """Fully populated SimConfig for a documented scenario preset."""
    if name not in _PRESETS:
        raise KeyError(f"unknown preset {name!r}; available: {', '.join(preset_names())}")
    cfg = SimConfig(**_PRESETS[name])
    cfg.validate()
    return cfg
