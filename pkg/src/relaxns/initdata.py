"""Initial fields: the explicit piecewise-cosine large-data velocity
profile, smooth density/temperature bumps, and small-data perturbations.

All generated fields equal the constant background (1, 0, 1, 0, 0)
exactly outside (-M, M).
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from . import functionals
from .errors import ConfigError
from .model import GasParams, PrimitiveState

PROFILE_KINDS = ("background", "sideris_velocity", "density_bump",
                 "temperature_bump", "gaussian_small")


@dataclass
class ProfileSpec:
    kind: str = "background"
    amplitude: float = 0.0     # L for sideris_velocity, epsilon for bumps
    M: float = 4.0             # support half-width of the data family
    width: float = 2.0         # bump support half-width (must be < M)

    def __post_init__(self):
        if self.kind not in PROFILE_KINDS:
            raise ConfigError(f"unknown profile kind {self.kind!r}")
        if self.kind == "sideris_velocity" and self.M < 4.0:
            raise ConfigError("sideris_velocity requires M >= 4")
        if not np.isfinite(self.amplitude):
            raise ConfigError("profile amplitude must be finite")
        if self.kind in ("density_bump", "temperature_bump", "gaussian_small") \
                and not self.width < self.M:
            raise ConfigError("bump support must lie strictly inside (-M, M)")


def sideris_u0(x, L: float, M: float):
    """Odd, C^1, piecewise-cosine velocity of amplitude L supported in
    (-M, M), with plateaus +-L on (1, M-1] and [-(M-1), -1)."""
    if M < 4.0:
        raise ConfigError("sideris_u0 requires M >= 4")
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    pieces = [
        (x <= -M, lambda x: np.zeros_like(x)),
        ((x > -M) & (x <= -M + 1.0),
         lambda x: 0.5 * L * np.cos(np.pi * (x + M)) - 0.5 * L),
        ((x > -M + 1.0) & (x <= -1.0), lambda x: np.full_like(x, -L)),
        ((x > -1.0) & (x <= 1.0), lambda x: L * np.cos(0.5 * np.pi * (x - 1.0))),
        ((x > 1.0) & (x <= M - 1.0), lambda x: np.full_like(x, L)),
        ((x > M - 1.0) & (x <= M),
         lambda x: 0.5 * L * np.cos(np.pi * (x - M + 1.0)) + 0.5 * L),
        (x > M, lambda x: np.zeros_like(x)),
    ]
    out = np.zeros_like(x)
    for mask, f in pieces:
        out[mask] = f(x[mask])
    return float(out[0]) if scalar else out


def u0_moment_and_norm(L: float, M: float) -> tuple[float, float]:
    """Closed forms of int(x*u0) dx and int(u0^2) dx."""
    if M < 4.0:
        raise ConfigError("requires M >= 4")
    moment = 2.0 * L * (0.5 * M * M - 0.5 * M - 0.25 + 3.0 / np.pi ** 2)
    norm_sq = (2.0 * M - 2.25) * L * L
    return moment, norm_sq


def spline_bump(s):
    """Cubic B-spline bump: C^2, supported on (-2, 2), max value 1 at 0."""
    s = np.abs(np.asarray(s, dtype=float))
    out = np.zeros_like(s)
    inner = s <= 1.0
    mid = (s > 1.0) & (s < 2.0)
    out[inner] = 2.0 / 3.0 - s[inner] ** 2 + 0.5 * s[inner] ** 3
    out[mid] = (2.0 - s[mid]) ** 3 / 6.0
    return 1.5 * out


def _profile_values(spec: ProfileSpec, x: np.ndarray, base: float) -> np.ndarray:
    if spec.kind == "background":
        return np.full_like(x, base)
    if spec.kind == "sideris_velocity":
        return base + sideris_u0(x, spec.amplitude, spec.M)
    if spec.kind in ("density_bump", "temperature_bump", "gaussian_small"):
        return base + spec.amplitude * spline_bump(2.0 * x / spec.width)
    raise ConfigError(f"unknown profile kind {spec.kind!r}")


@dataclass
class AdmissibilityReport:
    min_rho: float
    min_theta: float
    support_radius: float
    G0: float
    H0: float
    I0: float
    junctions_c1: bool = True
    notes: list = dc_field(default_factory=list)


def _sideris_junctions_c1(L: float, M: float, htol: float = 1e-7) -> bool:
    """One-sided values and first derivatives match at all six junctions."""
    h = 1e-7
    for xj in (-M, -M + 1.0, -1.0, 1.0, M - 1.0, M):
        vm = sideris_u0(np.array([xj - h]), L, M)[0]
        vp = sideris_u0(np.array([xj + h]), L, M)[0]
        if abs(vp - vm) > 10.0 * max(1.0, abs(L)) * h * np.pi:
            return False
        dm = (sideris_u0(np.array([xj]), L, M)[0]
              - sideris_u0(np.array([xj - h]), L, M)[0]) / h
        dp = (sideris_u0(np.array([xj + h]), L, M)[0]
              - sideris_u0(np.array([xj]), L, M)[0]) / h
        if abs(dp - dm) > 100.0 * max(1.0, abs(L)) * h * np.pi ** 2 + 1e-6 * abs(L):
            return False
    return True


def build_initial_field(specs: dict, grid, params: GasParams
                        ) -> tuple[PrimitiveState, AdmissibilityReport]:
    """Sample per-variable profiles at cell centers (midpoint sampling).

    `specs` maps variable names ('rho', 'u', 'theta', 'q', 'S') to
    ProfileSpec; missing variables default to background.  Raises
    ConfigError on positivity violation.
    """
    x = grid.centers
    bases = {"rho": 1.0, "u": 0.0, "theta": 1.0, "q": 0.0, "S": 0.0}
    vals = {}
    M = 4.0
    for name, base in bases.items():
        spec = specs.get(name, ProfileSpec("background"))
        M = max(M, spec.M if spec.kind != "background" else 0.0)
        vals[name] = _profile_values(spec, x, base)
    field = PrimitiveState(rho=vals["rho"], u=vals["u"], theta=vals["theta"],
                           q=vals["q"], S=vals["S"])
    min_rho = float(np.min(field.rho))
    min_theta = float(np.min(field.theta))
    if min_rho <= 0.0 or min_theta <= 0.0:
        raise ConfigError(f"initial field not admissible: min rho0={min_rho}, "
                          f"min theta0={min_theta}")
    junc = True
    uspec = specs.get("u")
    if uspec is not None and uspec.kind == "sideris_velocity":
        junc = _sideris_junctions_c1(uspec.amplitude, uspec.M)
    report = AdmissibilityReport(
        min_rho=min_rho, min_theta=min_theta,
        support_radius=functionals.support_radius(field, grid),
        G0=functionals.energy_G(field, grid, params),
        H0=functionals.H0_functional(field, grid, params),
        I0=functionals.I0_functional(field, grid, params),
        junctions_c1=junc,
    )
    return field, report


def small_data_field(epsilon: float, grid) -> PrimitiveState:
    """C^2 compact perturbation of size epsilon supported in (-2, 2):
    rho0 = theta0 = 1 + eps*b, u0 = eps*b, q0 = S0 = 0."""
    if epsilon < 0.0:
        raise ConfigError("epsilon must be >= 0")
    b = spline_bump(grid.centers)
    return PrimitiveState(rho=1.0 + epsilon * b, u=epsilon * b,
                          theta=1.0 + epsilon * b,
                          q=np.zeros(grid.N), S=np.zeros(grid.N))


def background_field(grid) -> PrimitiveState:
    z = np.zeros(grid.N)
    return PrimitiveState(rho=np.ones(grid.N), u=z.copy(),
                          theta=np.ones(grid.N), q=z.copy(), S=z.copy())
