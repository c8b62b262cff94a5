"""Symmetric quasilinear form A0*U_t + A1*U_x + B*U = F and its speeds.

U = (rho, u, theta, q, S).  A0 is diagonal positive, A1 symmetric, so the
characteristic speeds are the (real) eigenvalues of
D^{-1/2} A1 D^{-1/2} with D = diag(A0); they drive the CFL condition and
the finite-propagation-speed diagnostics.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import model
from .errors import DomainError
from .model import GasParams, PrimitiveState

NVARS = 5


@dataclass
class QuasilinearMatrices:
    A0: np.ndarray      # (5,) diagonal entries
    A1: np.ndarray      # (5, 5) symmetric
    Bdiag: np.ndarray   # (5,) diagonal entries
    source: np.ndarray  # (5,) right-hand side, only the theta row nonzero


def _check_admissible(state: PrimitiveState):
    rho, u, theta, q, S = state.as_arrays()
    if np.any(rho <= 0.0) or np.any(theta <= 0.0):
        raise DomainError("inadmissible state: rho and theta must be positive")
    if not all(np.all(np.isfinite(f)) for f in (rho, u, theta, q, S)):
        raise DomainError("inadmissible state: non-finite entry")


def _assemble_stacked(rho, u, theta, q, S, params: GasParams):
    """Vectorized A0 diagonals (n,5) and A1 matrices (n,5,5)."""
    R, mu, tau2 = params.R, params.mu, params.tau2
    Zv = model.Z(theta, params)
    av = model.a_of_theta(theta, params)
    eth = model.e_theta(theta, q, params)

    n = rho.shape[0]
    A0 = np.empty((n, NVARS))
    A0[:, 0] = R * theta / rho
    A0[:, 1] = rho
    A0[:, 2] = rho * eth / theta
    A0[:, 3] = Zv * rho           # tau1*rho/kappa = Z*rho
    A0[:, 4] = tau2 * rho / mu

    A1 = np.zeros((n, NVARS, NVARS))
    A1[:, 0, 0] = R * theta / rho * u
    A1[:, 0, 1] = A1[:, 1, 0] = R * theta
    A1[:, 1, 1] = rho * u
    A1[:, 1, 2] = A1[:, 2, 1] = R * rho
    A1[:, 1, 4] = A1[:, 4, 1] = -1.0
    A1[:, 2, 2] = rho * u * eth / theta - 2.0 * av * q / (theta * Zv)
    A1[:, 2, 3] = A1[:, 3, 2] = 1.0 / theta
    A1[:, 3, 3] = Zv * rho * u
    A1[:, 4, 4] = tau2 * rho * u / mu
    return A0, A1


def assemble(state: PrimitiveState, params: GasParams) -> QuasilinearMatrices:
    """Quasilinear matrices at a single state, entries exactly as printed."""
    _check_admissible(state)
    rho, u, theta, q, S = (np.atleast_1d(f) for f in state.as_arrays())
    A0, A1 = _assemble_stacked(rho, u, theta, q, S, params)

    t1 = model.tau1(theta, params)
    av = model.a_of_theta(theta, params)
    Bdiag = np.array([0.0, 0.0, 0.0,
                      float(1.0 / (params.kappa0 * theta[0])),
                      1.0 / params.mu])
    # theta-row source of the theta equation divided by theta:
    # relaxation dissipation heats the gas.
    src3 = 2.0 * av[0] * q[0] ** 2 / (t1[0] * theta[0]) + S[0] ** 2 / (params.mu * theta[0])
    source = np.array([0.0, 0.0, src3, 0.0, 0.0])
    return QuasilinearMatrices(A0=A0[0], A1=A1[0], Bdiag=Bdiag, source=source)


def _speeds_stacked(rho, u, theta, q, S, params: GasParams) -> np.ndarray:
    """(n, 5) sorted characteristic speeds via symmetric congruence."""
    A0, A1 = _assemble_stacked(rho, u, theta, q, S, params)
    dinv = 1.0 / np.sqrt(A0)
    M = A1 * dinv[:, :, None] * dinv[:, None, :]
    return np.linalg.eigvalsh(M)


def char_speeds(state: PrimitiveState, params: GasParams) -> np.ndarray:
    """The 5 generalized eigenvalues of lambda*A0 = A1, sorted ascending."""
    _check_admissible(state)
    rho, u, theta, q, S = (np.atleast_1d(f) for f in state.as_arrays())
    return _speeds_stacked(rho, u, theta, q, S, params)[0]


def speeds_field(field: PrimitiveState, params: GasParams) -> np.ndarray:
    """Per-cell sorted characteristic speeds, shape (N, 5)."""
    _check_admissible(field)
    return _speeds_stacked(*field.as_arrays(), params)


def max_abs_speed_per_cell(field: PrimitiveState, params: GasParams) -> np.ndarray:
    lam = speeds_field(field, params)
    return np.abs(lam).max(axis=1)


def max_speed(field: PrimitiveState, params: GasParams) -> float:
    """Max |characteristic speed| over all cells of the field."""
    return float(max_abs_speed_per_cell(field, params).max())


@dataclass
class StructureReport:
    a0_positive: bool
    a1_symmetric: bool
    b_nonneg: bool
    source_matches: bool

    @property
    def all_ok(self) -> bool:
        return self.a0_positive and self.a1_symmetric and self.b_nonneg and self.source_matches


def verify_structure(state: PrimitiveState, params: GasParams) -> StructureReport:
    m = assemble(state, params)
    rho, u, theta, q, S = state.as_arrays()
    src_expected = (2.0 * model.a_of_theta(theta, params) * q ** 2
                    / (model.tau1(theta, params) * theta)
                    + S ** 2 / (params.mu * theta))
    return StructureReport(
        a0_positive=bool(np.all(m.A0 > 0.0)),
        a1_symmetric=bool(np.array_equal(m.A1, m.A1.T)),
        b_nonneg=bool(np.all(m.Bdiag >= 0.0)),
        source_matches=bool(np.isclose(m.source[2], float(src_expected),
                                       rtol=1e-14, atol=0.0)),
    )
