"""Flat `section.key = value` run configuration.

Every key has a documented default, so an empty config is valid
(background run).  Unknown keys, unparsable values and out-of-range
values raise ConfigError carrying the line number.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

from .errors import ConfigError
from .initdata import ProfileSpec
from .model import GasParams
from .solver import BreakdownCriteria, Grid, TimeControls

_DEF = {
    "gas.Cv": 1.0, "gas.R": 0.4, "gas.mu": 1.0, "gas.tau2": 0.1,
    "gas.kappa0": 1.0, "gas.Zk": 0.1, "gas.Zalpha": 1.0, "gas.sigma": 2.0,
    "grid.xmin": -20.0, "grid.xmax": 20.0, "grid.N": 400,
    "time.t_end": 1.0, "time.cfl": 0.45, "time.dt_floor": 1e-10,
    "time.snapshot_every": 100,
    "init.kind": "background", "init.M": 4.0, "init.L": 1.0,
    "init.rho_eps": 0.0, "init.theta_eps": 0.0, "init.bump_width": 2.0,
    "init.eps": 1e-3,
    "breakdown.grad_threshold": 100.0, "breakdown.theta_min": 1e-3,
    "breakdown.rho_min": 1e-3, "breakdown.amplification": 1e6,
    "run.mode": "relaxed", "run.order": 1, "run.out": "out",
    "limit.taus": "0.1,0.05,0.025,0.0125",
}

_INT_KEYS = {"grid.N", "time.snapshot_every", "run.order"}
_STR_KEYS = {"init.kind", "run.mode", "run.out", "limit.taus"}

_CHOICES = {
    "init.kind": ("background", "sideris", "small_data"),
    "run.mode": ("relaxed", "classical"),
}


@dataclass
class RunConfig:
    gas: GasParams
    grid: Grid
    time: TimeControls
    breakdown: BreakdownCriteria
    init_kind: str
    M: float
    L: float
    rho_eps: float
    theta_eps: float
    bump_width: float
    eps: float
    mode: str
    order: int
    outdir: str
    limit_taus: list = dc_field(default_factory=list)
    raw: dict = dc_field(default_factory=dict)

    def init_specs(self) -> dict:
        """Per-variable ProfileSpecs for initdata.build_initial_field."""
        specs = {}
        if self.init_kind == "sideris":
            specs["u"] = ProfileSpec("sideris_velocity", self.L, self.M)
            if self.rho_eps != 0.0:
                specs["rho"] = ProfileSpec("density_bump", self.rho_eps,
                                           self.M, self.bump_width)
            if self.theta_eps != 0.0:
                specs["theta"] = ProfileSpec("temperature_bump", self.theta_eps,
                                             self.M, self.bump_width)
        return specs


def _coerce(key: str, text: str, lineno: int):
    if key in _STR_KEYS:
        val = text
        if key in _CHOICES and val not in _CHOICES[key]:
            raise ConfigError(f"line {lineno}: {key} must be one of "
                              f"{_CHOICES[key]}, got {val!r}")
        return val
    try:
        if key in _INT_KEYS:
            return int(text)
        return float(text)
    except ValueError:
        raise ConfigError(f"line {lineno}: cannot parse value {text!r} "
                          f"for key {key}") from None


def _check_ranges(values: dict, lines: dict):
    def err(key, msg):
        where = f"line {lines[key]}: " if key in lines else ""
        raise ConfigError(f"{where}{key} {msg}")

    positive = ("gas.Cv", "gas.R", "gas.mu", "gas.tau2", "gas.kappa0",
                "gas.Zk", "gas.sigma", "time.t_end", "time.dt_floor",
                "breakdown.grad_threshold", "breakdown.theta_min",
                "breakdown.rho_min", "breakdown.amplification",
                "init.bump_width")
    for key in positive:
        if not values[key] > 0.0:
            err(key, "must be > 0")
    if not (1.0 <= values["gas.Zalpha"] < 2.0):
        err("gas.Zalpha", "must lie in [1, 2)")
    gamma = 1.0 + values["gas.R"] / values["gas.Cv"]
    if not (1.0 < gamma < 3.0):
        err("gas.R", f"gives gamma={gamma}, must lie in (1, 3)")
    if values["grid.N"] < 16:
        err("grid.N", "must be >= 16")
    if not values["grid.xmax"] > values["grid.xmin"]:
        err("grid.xmax", "must exceed grid.xmin")
    if not (0.0 < values["time.cfl"] <= 1.0):
        err("time.cfl", "must lie in (0, 1]")
    if values["time.snapshot_every"] < 1:
        err("time.snapshot_every", "must be >= 1")
    if values["run.order"] not in (1, 2):
        err("run.order", "must be 1 or 2")
    if values["init.kind"] == "sideris" and values["init.M"] < 4.0:
        err("init.M", "must be >= 4 for sideris data")
    if values["init.eps"] < 0.0:
        err("init.eps", "must be >= 0")


def parse_config(text: str) -> RunConfig:
    values = dict(_DEF)
    lines: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', "
                              f"got {raw!r}")
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if key not in _DEF:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if not val:
            raise ConfigError(f"line {lineno}: missing value for key {key!r}")
        values[key] = _coerce(key, val, lineno)
        lines[key] = lineno

    _check_ranges(values, lines)

    try:
        taus = [float(s) for s in str(values["limit.taus"]).split(",") if s.strip()]
    except ValueError:
        raise ConfigError("limit.taus must be a comma-separated float list") from None
    if any(tau <= 0.0 for tau in taus):
        raise ConfigError("limit.taus entries must be > 0")

    gas = GasParams(Cv=values["gas.Cv"], R=values["gas.R"], mu=values["gas.mu"],
                    tau2=values["gas.tau2"], kappa0=values["gas.kappa0"],
                    Zk=values["gas.Zk"], Zalpha=values["gas.Zalpha"],
                    sigma_bound=values["gas.sigma"])
    grid = Grid(values["grid.xmin"], values["grid.xmax"], values["grid.N"])
    time = TimeControls(t_end=values["time.t_end"], cfl=values["time.cfl"],
                        dt_floor=values["time.dt_floor"],
                        snapshot_every=values["time.snapshot_every"])
    breakdown = BreakdownCriteria(
        grad_threshold=values["breakdown.grad_threshold"],
        theta_min=values["breakdown.theta_min"],
        rho_min=values["breakdown.rho_min"],
        amplification_factor=values["breakdown.amplification"])
    return RunConfig(gas=gas, grid=grid, time=time, breakdown=breakdown,
                     init_kind=values["init.kind"], M=values["init.M"],
                     L=values["init.L"], rho_eps=values["init.rho_eps"],
                     theta_eps=values["init.theta_eps"],
                     bump_width=values["init.bump_width"],
                     eps=values["init.eps"], mode=values["run.mode"],
                     order=values["run.order"], outdir=values["run.out"],
                     limit_taus=taus, raw=values)


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
