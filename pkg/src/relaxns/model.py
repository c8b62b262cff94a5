"""Thermodynamic closure for the relaxed compressible flow model.

Ideal gas pressure p = R*rho*theta, internal energy carrying a heat-flux
contribution,

    e(theta, q) = Cv*theta + a(theta)*q^2,
    a(theta)    = Z(theta)/theta - Z'(theta)/2,
    Z(theta)    = k*theta^alpha,   1 <= alpha < 2, k > 0,

and total energy per unit length

    E = rho*u^2/2 + tau2*rho*S^2/(2*mu) + rho*e(theta, q).

All functions are numpy-vectorized: scalar in -> float out, array in ->
array out.  Temperature/density positivity violations raise DomainError
(on direct calls) or BreakdownError (when inverting the energy), never
silent clamping.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import BreakdownError, ConfigError, DomainError

BACKGROUND = (1.0, 0.0, 1.0, 0.0, 0.0)  # (rho, u, theta, q, S)


@dataclass(frozen=True)
class GasParams:
    """Closure constants plus the assumed propagation-speed bound."""

    Cv: float = 1.0       # heat capacity at constant volume
    R: float = 0.4        # gas constant
    mu: float = 1.0       # viscosity
    tau2: float = 0.1     # stress relaxation time
    kappa0: float = 1.0   # heat conductivity (constant)
    Zk: float = 0.1       # coefficient k in Z = k*theta^alpha
    Zalpha: float = 1.0   # exponent alpha in [1, 2)
    sigma_bound: float = 2.0  # assumed propagation speed

    def __post_init__(self):
        for name in ("Cv", "R", "mu", "tau2", "kappa0", "Zk", "sigma_bound"):
            if not getattr(self, name) > 0.0:
                raise ConfigError(f"GasParams.{name} must be > 0")
        if not (1.0 <= self.Zalpha < 2.0):
            raise ConfigError("GasParams.Zalpha must lie in [1, 2)")
        g = self.gamma()
        if not (1.0 < g < 3.0):
            raise ConfigError(f"gamma = 1 + R/Cv = {g} must lie in (1, 3)")

    def gamma(self) -> float:
        return 1.0 + self.R / self.Cv

    def with_tau(self, tau: float) -> "GasParams":
        """Both relaxation times scaled to tau (tau1 via Zk, at theta=1)."""
        return replace(self, tau2=tau, Zk=tau / self.kappa0)


@dataclass
class PrimitiveState:
    """Pointwise unknowns (rho, u, theta, q, S); fields may be scalars or
    same-shaped arrays (a whole grid field)."""

    rho: np.ndarray | float
    u: np.ndarray | float
    theta: np.ndarray | float
    q: np.ndarray | float
    S: np.ndarray | float

    def copy(self) -> "PrimitiveState":
        return PrimitiveState(*(np.array(f, dtype=float, copy=True)
                                for f in (self.rho, self.u, self.theta, self.q, self.S)))

    def as_arrays(self):
        return (np.asarray(self.rho, dtype=float), np.asarray(self.u, dtype=float),
                np.asarray(self.theta, dtype=float), np.asarray(self.q, dtype=float),
                np.asarray(self.S, dtype=float))


@dataclass
class ConservedState:
    """Cell averages of (rho, rho*u, E, rho*q, rho*S)."""

    rho: np.ndarray | float
    mom: np.ndarray | float
    Etot: np.ndarray | float
    w: np.ndarray | float   # rho*q
    z: np.ndarray | float   # rho*S


def background_state() -> PrimitiveState:
    return PrimitiveState(*BACKGROUND)


def _require_positive(value, name: str):
    if np.any(np.asarray(value) <= 0.0):
        raise DomainError(f"{name} must be positive")


def Z(theta, params: GasParams):
    _require_positive(theta, "theta")
    return params.Zk * np.asarray(theta, dtype=float) ** params.Zalpha


def Zprime(theta, params: GasParams):
    _require_positive(theta, "theta")
    th = np.asarray(theta, dtype=float)
    return params.Zk * params.Zalpha * th ** (params.Zalpha - 1.0)


def a_of_theta(theta, params: GasParams):
    # Z/theta - Z'/2 = k*theta^(alpha-1)*(1 - alpha/2)
    _require_positive(theta, "theta")
    th = np.asarray(theta, dtype=float)
    return params.Zk * (1.0 - 0.5 * params.Zalpha) * th ** (params.Zalpha - 1.0)


def a_prime(theta, params: GasParams):
    _require_positive(theta, "theta")
    th = np.asarray(theta, dtype=float)
    al = params.Zalpha
    return params.Zk * (al - 1.0) * (1.0 - 0.5 * al) * th ** (al - 2.0)


def z_over_theta_prime(theta, params: GasParams):
    """(Z(theta)/theta)' = k*(alpha-1)*theta^(alpha-2)."""
    _require_positive(theta, "theta")
    th = np.asarray(theta, dtype=float)
    return params.Zk * (params.Zalpha - 1.0) * th ** (params.Zalpha - 2.0)


def tau1(theta, params: GasParams):
    """Heat-flux relaxation time tau1(theta) = Z(theta)*kappa0."""
    return Z(theta, params) * params.kappa0


def pressure(rho, theta, params: GasParams):
    _require_positive(rho, "rho")
    _require_positive(theta, "theta")
    return params.R * np.asarray(rho, dtype=float) * np.asarray(theta, dtype=float)


def internal_energy(theta, q, params: GasParams):
    return params.Cv * np.asarray(theta, dtype=float) + a_of_theta(theta, params) * np.asarray(q) ** 2


def e_theta(theta, q, params: GasParams):
    return params.Cv + a_prime(theta, params) * np.asarray(q) ** 2


def total_energy(state: PrimitiveState, params: GasParams):
    rho, u, theta, q, S = state.as_arrays()
    _require_positive(rho, "rho")
    return (0.5 * rho * u * u
            + 0.5 * params.tau2 / params.mu * rho * S * S
            + rho * internal_energy(theta, q, params))


def entropy(state: PrimitiveState, params: GasParams):
    """Physical entropy Cv*ln(theta) - R*ln(rho) - (Z/(2 theta))' q^2."""
    rho, _, theta, q, _ = state.as_arrays()
    _require_positive(rho, "rho")
    _require_positive(theta, "theta")
    qcoef = 0.5 * params.Zk * (params.Zalpha - 1.0) * theta ** (params.Zalpha - 2.0)
    return params.Cv * np.log(theta) - params.R * np.log(rho) - qcoef * q * q


def theta_from_energy(rho, u, q, S, Etot, params: GasParams,
                      rtol: float = 1e-13, maxiter: int = 100):
    """Invert E = rho*u^2/2 + tau2*rho*S^2/(2 mu) + rho*e(theta,q) for theta.

    e(theta, q) is increasing and concave in theta, so the root is unique;
    Newton is safeguarded by a bisection bracket [lo, e_spec/Cv] because a
    plain Newton step from above a concave root can overshoot below zero.
    Raises BreakdownError when the residual internal energy is nonpositive.
    """
    rho = np.asarray(rho, dtype=float)
    u = np.asarray(u, dtype=float)
    q = np.asarray(q, dtype=float)
    S = np.asarray(S, dtype=float)
    Etot = np.asarray(Etot, dtype=float)
    scalar = Etot.ndim == 0

    _require_positive(rho, "rho")
    e_res = Etot - 0.5 * rho * u * u - 0.5 * params.tau2 / params.mu * rho * S * S
    if not np.all(np.isfinite(e_res)) or np.any(e_res <= 0.0):
        raise BreakdownError("nonpositive residual internal energy in theta inversion")
    e_spec = e_res / rho

    hi = e_spec / params.Cv + 0.0  # upper bound since a(theta)*q^2 >= 0
    hi = np.atleast_1d(np.array(hi, dtype=float, copy=True))
    lo = np.full_like(hi, 1e-300)  # f(0+) = a(0+)q^2 - e_spec < 0
    th = hi.copy()
    tol = np.atleast_1d(rtol * np.maximum(1.0, np.abs(Etot)))
    q2 = np.atleast_1d(q * q) + np.zeros_like(hi)
    e_spec1 = np.atleast_1d(e_spec) + np.zeros_like(hi)
    rho1 = np.atleast_1d(rho) + np.zeros_like(hi)
    for _ in range(maxiter):
        f = params.Cv * th + a_of_theta(th, params) * q2 - e_spec1
        if np.all(np.abs(rho1 * f) <= tol):
            break
        hi = np.where(f > 0.0, th, hi)
        lo = np.where(f <= 0.0, th, lo)
        newton = th - f / (params.Cv + a_prime(th, params) * q2)
        mid = 0.5 * (lo + hi)
        th = np.where((newton > lo) & (newton < hi), newton, mid)
    else:
        raise BreakdownError("theta inversion did not converge")
    th = th.reshape(np.shape(e_spec))
    return float(th) if scalar else th


def prim_to_cons(state: PrimitiveState, params: GasParams) -> ConservedState:
    rho, u, theta, q, S = state.as_arrays()
    return ConservedState(rho=rho.copy(), mom=rho * u,
                          Etot=total_energy(state, params),
                          w=rho * q, z=rho * S)


def cons_to_prim(cons: ConservedState, params: GasParams) -> PrimitiveState:
    rho = np.asarray(cons.rho, dtype=float)
    _require_positive(rho, "rho")
    u = np.asarray(cons.mom, dtype=float) / rho
    q = np.asarray(cons.w, dtype=float) / rho
    S = np.asarray(cons.z, dtype=float) / rho
    theta = theta_from_energy(rho, u, q, S, cons.Etot, params)
    return PrimitiveState(rho=rho.copy(), u=u, theta=theta, q=q, S=S)


@dataclass
class Assumption31Report:
    theta_grid: np.ndarray
    a_positive: np.ndarray
    a_prime_nonneg: np.ndarray
    z_ratio_nonneg: np.ndarray

    @property
    def all_ok(self) -> bool:
        return bool(np.all(self.a_positive) and np.all(self.a_prime_nonneg)
                    and np.all(self.z_ratio_nonneg))


def check_assumption31_raw(theta_grid, k: float, alpha: float) -> Assumption31Report:
    """Pointwise admissibility check for the family Z = k*theta^alpha,
    accepting out-of-family (k, alpha) so failures can be reported."""
    th = np.asarray(theta_grid, dtype=float)
    _require_positive(th, "theta_grid")
    a = k * (1.0 - 0.5 * alpha) * th ** (alpha - 1.0)
    ap = k * (alpha - 1.0) * (1.0 - 0.5 * alpha) * th ** (alpha - 2.0)
    zr = k * (alpha - 1.0) * th ** (alpha - 2.0)
    return Assumption31Report(theta_grid=th, a_positive=a > 0.0,
                              a_prime_nonneg=ap >= 0.0, z_ratio_nonneg=0.5 * zr >= 0.0)


def check_assumption31(params: GasParams, theta_grid) -> Assumption31Report:
    return check_assumption31_raw(theta_grid, params.Zk, params.Zalpha)
