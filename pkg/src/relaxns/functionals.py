"""Diagnostics monitored during a run.

Covers the weighted momentum functional F(t), the conserved energy excess
G(t), the entropy/energy balance residuals, the support radius of the
perturbation, and the Riccati blow-up bookkeeping (c2, c3, K(t), T*,
thresholds AS1/AS3).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import model
from .errors import ConfigError
from .model import GasParams, PrimitiveState

SERIES_COLUMNS = ("t", "F", "G", "kinetic", "Fdot_rhs", "entropy_total",
                  "dissipation_rate", "dissipation_cum", "support_radius",
                  "max_grad_u", "min_theta", "min_rho", "dt")


@dataclass
class FunctionalSeries:
    """Per-step time series of all monitored functionals."""

    rows: list = field(default_factory=list)
    # state integral of the energy identity (left side without the
    # cumulative dissipation); kept out of the CSV columns.
    state_integral: list = field(default_factory=list)

    def append(self, row: dict, state_integral: float):
        self.rows.append(tuple(row[c] for c in SERIES_COLUMNS))
        self.state_integral.append(state_integral)

    def column(self, name: str) -> np.ndarray:
        i = SERIES_COLUMNS.index(name)
        return np.array([r[i] for r in self.rows])

    def __len__(self):
        return len(self.rows)

    def write_csv(self, path):
        with open(path, "w") as fh:
            fh.write(",".join(SERIES_COLUMNS) + "\n")
            for r in self.rows:
                fh.write(",".join(f"{v:.17g}" for v in r) + "\n")


def _deviation_from_background(field_: PrimitiveState) -> np.ndarray:
    rho, u, theta, q, S = field_.as_arrays()
    return np.max(np.abs(np.stack([rho - 1.0, u, theta - 1.0, q, S])), axis=0)


def _warn_if_boundary_touched(field_: PrimitiveState, tol: float = 1e-10):
    dev = _deviation_from_background(field_)
    if dev[0] > tol or dev[-1] > tol:
        warnings.warn("perturbation reaches the domain boundary; "
                      "integral functionals are no longer meaningful",
                      stacklevel=3)


def moment_F(field_: PrimitiveState, grid, params: GasParams) -> float:
    """F(t) = int(rho*u*x) dx - tau2 * int(rho*S) dx (midpoint rule)."""
    _warn_if_boundary_touched(field_)
    rho, u, _, _, S = field_.as_arrays()
    x = grid.centers
    return float(np.sum(rho * u * x - params.tau2 * rho * S) * grid.dx)


def energy_G(field_: PrimitiveState, grid, params: GasParams) -> float:
    """G(t) = int(E - Ebar) dx with Ebar = Cv."""
    _warn_if_boundary_touched(field_)
    E = model.total_energy(field_, params)
    return float(np.sum(E - params.Cv) * grid.dx)


def kinetic_integral(field_: PrimitiveState, grid) -> float:
    rho, u, _, _, _ = field_.as_arrays()
    return float(np.sum(rho * u * u) * grid.dx)


def entropy_total(field_: PrimitiveState, grid, params: GasParams) -> float:
    rho = np.asarray(field_.rho)
    return float(np.sum(rho * model.entropy(field_, params)) * grid.dx)


def dissipation_rate(field_: PrimitiveState, grid, params: GasParams) -> float:
    """int( q^2/(kappa*theta^2) + S^2/(mu*theta) ) dx  >= 0."""
    _, _, theta, q, S = field_.as_arrays()
    integrand = q * q / (params.kappa0 * theta * theta) + S * S / (params.mu * theta)
    return float(np.sum(integrand) * grid.dx)


def _relative_entropy_integrand(rho, theta, q, S, params: GasParams):
    """Integrand of the energy-identity state functional without kinetic
    energy: Cv*rho*(theta - ln theta - 1) + R*(rho ln rho - rho + 1)
    + rho*(a + (Z/theta)'/2)*q^2 + tau2*rho*S^2/(2 mu)."""
    acoef = (model.a_of_theta(theta, params)
             + 0.5 * model.z_over_theta_prime(theta, params))
    return (params.Cv * rho * (theta - np.log(theta) - 1.0)
            + params.R * (rho * np.log(rho) - rho + 1.0)
            + rho * acoef * q * q
            + 0.5 * params.tau2 / params.mu * rho * S * S)


def H0_functional(init_field: PrimitiveState, grid, params: GasParams) -> float:
    """Initial relative-entropy functional (no kinetic term); the S0^2 term
    is unweighted by rho0, as printed."""
    rho, _, theta, q, S = init_field.as_arrays()
    acoef = (model.a_of_theta(theta, params)
             + 0.5 * model.z_over_theta_prime(theta, params))
    integrand = (params.Cv * rho * (theta - np.log(theta) - 1.0)
                 + params.R * (rho * np.log(rho) - rho + 1.0)
                 + rho * acoef * q * q
                 + 0.5 * params.tau2 / params.mu * S * S)
    return float(np.sum(integrand) * grid.dx)


def energy_state_integral(field_: PrimitiveState, grid, params: GasParams) -> float:
    """Left-side state integral of the energy identity (relative entropy
    plus kinetic energy)."""
    rho, u, theta, q, S = field_.as_arrays()
    integrand = (_relative_entropy_integrand(rho, theta, q, S, params)
                 + 0.5 * rho * u * u)
    return float(np.sum(integrand) * grid.dx)


def I0_functional(init_field: PrimitiveState, grid, params: GasParams) -> float:
    """I0 = state integral at t=0, so the identity residual vanishes there."""
    return energy_state_integral(init_field, grid, params)


def energy_identity_residual(series: FunctionalSeries) -> np.ndarray:
    """residual(t) = state_integral(t) + dissipation_cum(t) - I0."""
    st = np.asarray(series.state_integral)
    return st + series.column("dissipation_cum") - st[0]


def entropy_identity_residual(series: FunctionalSeries) -> np.ndarray:
    """residual(t) = entropy_total(t) - entropy_total(0) - dissipation_cum(t)."""
    et = series.column("entropy_total")
    return et - et[0] - series.column("dissipation_cum")


def entropy_balance_residual(field_a: PrimitiveState, field_b: PrimitiveState,
                             dt: float, grid, params: GasParams) -> float:
    """Per-step residual d/dt int(rho*eta) - int(dissipation) at midpoint
    (trapezoidal); boundary entropy flux vanishes for compact data."""
    d_eta = (entropy_total(field_b, grid, params)
             - entropy_total(field_a, grid, params)) / dt
    rate = 0.5 * (dissipation_rate(field_a, grid, params)
                  + dissipation_rate(field_b, grid, params))
    return d_eta - rate


def support_radius(field_: PrimitiveState, grid, tol: float = 1e-12) -> float:
    """Largest |x_i| where the field deviates from background by more
    than tol in any component; 0 if none."""
    dev = _deviation_from_background(field_)
    mask = dev > tol
    if not np.any(mask):
        return 0.0
    return float(np.max(np.abs(grid.centers[mask])))


# ---------------------------------------------------------------------------
# Riccati machinery
# ---------------------------------------------------------------------------

@dataclass
class RiccatiData:
    c2: float
    c3: float
    F0: float
    H0: float
    u0_l2sq: float
    gamma: float
    mu: float
    tau2: float
    M: float
    sigma: float
    max_rho0: float

    @property
    def Kconst(self) -> float:
        """H0 + max(rho0)/2 * ||u0||^2 factor of K(t)."""
        return self.H0 + 0.5 * self.max_rho0 * self.u0_l2sq

    def K(self, t):
        return ((3.0 - self.gamma) * self.mu * self.tau2
                / (self.M + self.sigma * np.asarray(t)) ** 2
                + self.gamma - 1.0) * self.Kconst

    @property
    def Tstar(self) -> float:
        """Blow-up time of the K-free comparison ODE; finite iff
        F0 > 4*c2/c3."""
        thr = 4.0 * self.c2 / self.c3
        if self.F0 <= thr:
            return math.inf
        return (1.0 / self.c2) * ((1.0 - thr / self.F0) ** -0.5 - 1.0)


def riccati_constants(params: GasParams, init_field: PrimitiveState, grid,
                      M: float) -> RiccatiData:
    gamma = params.gamma()
    if not (1.0 < gamma < 3.0):
        raise ConfigError("gamma must lie in (1, 3)")
    rho0, u0 = np.asarray(init_field.rho), np.asarray(init_field.u)
    max_rho0 = float(rho0.max())
    sigma = params.sigma_bound
    return RiccatiData(
        c2=sigma / M,
        c3=(3.0 - gamma) / (8.0 * max_rho0 * M ** 3),
        F0=moment_F(init_field, grid, params),
        H0=H0_functional(init_field, grid, params),
        u0_l2sq=float(np.sum(u0 * u0) * grid.dx),
        gamma=gamma, mu=params.mu, tau2=params.tau2,
        M=M, sigma=sigma, max_rho0=max_rho0,
    )


@dataclass
class ThresholdReport:
    AS1: bool
    AS3: bool
    as1_threshold: float     # 32*sigma*max_rho0*M^2/(3-gamma) = 4 c2/c3
    as1_margin: float        # F0 - threshold
    as3_lhs: float
    as3_rhs: float           # 128*sigma^2*max_rho0*M/(3-gamma) = 16 c2^2/c3
    as3_margin: float
    identity_ok: bool        # 16 c2^2/c3 equals the closed-form AS3 rhs


def check_thresholds(ric: RiccatiData) -> ThresholdReport:
    as1_thr = 32.0 * ric.sigma * ric.max_rho0 * ric.M ** 2 / (3.0 - ric.gamma)
    as3_lhs = 4.0 * ((3.0 - ric.gamma) * ric.mu * ric.tau2 / ric.M ** 2
                     + ric.gamma - 1.0) * ric.Kconst
    as3_rhs = 128.0 * ric.sigma ** 2 * ric.max_rho0 * ric.M / (3.0 - ric.gamma)
    ident = 16.0 * ric.c2 ** 2 / ric.c3
    return ThresholdReport(
        AS1=ric.F0 > as1_thr,
        AS3=as3_lhs <= as3_rhs,
        as1_threshold=as1_thr,
        as1_margin=ric.F0 - as1_thr,
        as3_lhs=as3_lhs,
        as3_rhs=as3_rhs,
        as3_margin=as3_rhs - as3_lhs,
        identity_ok=abs(ident - as3_rhs) <= 1e-12 * abs(as3_rhs),
    )


def riccati_closed_form(ric: RiccatiData, t) -> np.ndarray:
    """K-free comparison solution: 1/y = 1/F0 - c3/(4 c2)*(1-(1+c2 t)^-2)."""
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore"):
        # F0 = 0 (background data) degenerates to the zero trajectory
        inv = np.divide(1.0, ric.F0) \
            - ric.c3 / (4.0 * ric.c2) * (1.0 - (1.0 + ric.c2 * t) ** -2)
        y = np.where(inv > 0.0, 1.0 / np.where(inv > 0.0, inv, 1.0), np.inf)
    return np.where(np.isinf(inv), 0.0, y)


def riccati_ode_solve(ric: RiccatiData, t_end: float, dt: float,
                      include_K: bool = False, blowup_cap: float = 1e12):
    """RK4 on the comparison ODE y' = (c3/2)(1+c2 t)^-3 y^2 - K(t),
    y(0)=F0.  The factor c3/2 is the post-bootstrap coefficient that the
    blow-up threshold 4*c2/c3 and T* correspond to.  K defaults to 0
    (the pure comparison trajectory).  Returns (t array, y array,
    blowup_time or None): integration stops once y exceeds blowup_cap.
    """
    def rhs(t, y):
        v = 0.5 * ric.c3 * (1.0 + ric.c2 * t) ** -3 * y * y
        if include_K:
            v -= ric.K(t)
        return v

    ts = [0.0]
    ys = [ric.F0]
    t, y = 0.0, ric.F0
    nmax = int(math.ceil(t_end / dt)) + 1
    for _ in range(nmax):
        if t >= t_end:
            break
        h = min(dt, t_end - t)
        k1 = rhs(t, y)
        k2 = rhs(t + 0.5 * h, y + 0.5 * h * k1)
        k3 = rhs(t + 0.5 * h, y + 0.5 * h * k2)
        k4 = rhs(t + h, y + h * k3)
        y = y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        t = t + h
        ts.append(t)
        ys.append(y)
        if not np.isfinite(y) or y > blowup_cap:
            return np.array(ts), np.array(ys), t
    return np.array(ts), np.array(ys), None


def lower_bound_412(ric: RiccatiData, t) -> np.ndarray:
    """F(t) >= 4 c2 (1 + c2 t)^2 / c3 while AS1/AS3 hold."""
    t = np.asarray(t, dtype=float)
    return 4.0 * ric.c2 * (1.0 + ric.c2 * t) ** 2 / ric.c3


@dataclass
class FprimeCheck:
    t_mid: np.ndarray
    margin: np.ndarray          # dF/dt - lower-bound right-hand side
    F: np.ndarray
    y_riccati: np.ndarray       # comparison trajectory at series times
    bound_412: np.ndarray


def fprime_lowerbound_check(series: FunctionalSeries, ric: RiccatiData) -> FprimeCheck:
    """Discrete check of F' >= (3-gamma)/2 * kinetic - (gamma-1)*Kconst
    at step midpoints, plus the two F(t) lower bounds."""
    t = series.column("t")
    F = series.column("F")
    Fdot_rhs = series.column("Fdot_rhs")
    t_mid = 0.5 * (t[1:] + t[:-1])
    dFdt = np.diff(F) / np.diff(t)
    rhs_mid = 0.5 * (Fdot_rhs[1:] + Fdot_rhs[:-1])
    y = riccati_closed_form(ric, t)
    return FprimeCheck(t_mid=t_mid, margin=dFdt - rhs_mid, F=F,
                       y_riccati=y, bound_412=lower_bound_412(ric, t))
