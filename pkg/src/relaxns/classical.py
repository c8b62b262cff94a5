"""Classical (zero-relaxation) Navier-Stokes-Fourier reference solver.

Same transport kernel idea as the relaxed solver, but with algebraic
closures S = mu*u_x and q = -kappa*theta_x entering the fluxes through
central differences.  Used for the large-data contrast (no blow-up) and
for measuring the relaxation limit.
"""

from __future__ import annotations

import numpy as np

from . import functionals, solver
from .errors import BreakdownError
from .model import GasParams, PrimitiveState
from .solver import (BreakdownCriteria, BreakdownEvent, Grid, RunResult,
                     RunStatus, TimeControls)

DIFFUSIVE_SAFETY = 0.4  # below the explicit-stability bound 0.5


def _theta_of(U: np.ndarray, params: GasParams) -> np.ndarray:
    rho, mom, E = U
    e = (E - 0.5 * mom * mom / rho) / rho
    if np.any(e <= 0.0) or not np.all(np.isfinite(e)):
        raise BreakdownError("nonpositive internal energy in classical solver")
    return e / params.Cv


def _classical_prim(U: np.ndarray, params: GasParams, dx: float) -> PrimitiveState:
    """Primitive field with the algebraic q, S filled in for diagnostics."""
    rho = U[0]
    u = U[1] / rho
    theta = _theta_of(U, params)
    q = -params.kappa0 * np.gradient(theta, dx, edge_order=2)
    S = params.mu * np.gradient(u, dx, edge_order=2)
    return PrimitiveState(rho=rho.copy(), u=u, theta=theta, q=q, S=S)


def _sound_speed(theta, params: GasParams):
    gamma = params.gamma()
    return np.sqrt(gamma * params.R * theta)


def _euler_flux(rho, u, theta, E, params: GasParams):
    p = params.R * rho * theta
    return np.stack([rho * u, rho * u * u + p, u * (E + p)])


def _background_U3(params: GasParams, n: int) -> np.ndarray:
    U = np.zeros((3, n))
    U[0] = 1.0
    U[2] = params.Cv
    return U


def classical_step(U: np.ndarray, dt: float, dx: float, params: GasParams,
                   order: int = 1) -> np.ndarray:
    n = U.shape[1]
    Ug = _background_U3(params, n + 2 * solver.NGHOST)
    Ug[:, solver.NGHOST:solver.NGHOST + n] = U
    rho_g = Ug[0]
    u_g = Ug[1] / rho_g
    th_g = _theta_of(Ug, params)
    if order == 1:
        rL, uL, thL = rho_g[1:-2], u_g[1:-2], th_g[1:-2]
        rR, uR, thR = rho_g[2:-1], u_g[2:-1], th_g[2:-1]
    else:
        # primitive-variable minmod reconstruction keeps faces admissible
        faces = []
        for v in (rho_g, u_g, th_g):
            slope = solver._minmod(v[1:-1] - v[:-2], v[2:] - v[1:-1])
            faces.append(((v[1:-1] + 0.5 * slope)[:-1],
                          (v[1:-1] - 0.5 * slope)[1:]))
        (rL, rR), (uL, uR), (thL, thR) = faces
    EL = 0.5 * rL * uL * uL + rL * params.Cv * thL
    ER = 0.5 * rR * uR * uR + rR * params.Cv * thR
    UL = np.stack([rL, rL * uL, EL])
    UR = np.stack([rR, rR * uR, ER])
    lam = np.maximum(np.abs(uL) + _sound_speed(thL, params),
                     np.abs(uR) + _sound_speed(thR, params))
    F = 0.5 * (_euler_flux(rL, uL, thL, EL, params)
               + _euler_flux(rR, uR, thR, ER, params)) - 0.5 * lam * (UR - UL)

    # diffusive interface fluxes from the cell-centered ghost field
    uLc, uRc = u_g[1:-2], u_g[2:-1]
    thLc, thRc = th_g[1:-2], th_g[2:-1]
    S_if = params.mu * (uRc - uLc) / dx
    q_if = -params.kappa0 * (thRc - thLc) / dx
    u_if = 0.5 * (uLc + uRc)
    F[1] -= S_if
    F[2] += q_if - S_if * u_if
    return U - dt / dx * (F[:, 1:] - F[:, :-1])


def classical_dt(U: np.ndarray, controls: TimeControls, grid: Grid,
                 params: GasParams, t: float) -> tuple[float, float]:
    rho = U[0]
    u = U[1] / rho
    theta = _theta_of(U, params)
    smax = float(np.max(np.abs(u) + _sound_speed(theta, params)))
    dt_adv = controls.cfl * grid.dx / max(smax, solver.EPS_SPEED)
    dt_diff = (DIFFUSIVE_SAFETY * grid.dx ** 2 * float(np.min(rho))
               * min(1.0 / params.mu, params.Cv / params.kappa0))
    return min(dt_adv, dt_diff, controls.t_end - t), smax


def _sample_classical(series: functionals.FunctionalSeries,
                      field: PrimitiveState, grid: Grid, params: GasParams,
                      t: float, dt: float, fdot_const: float,
                      diss_prev: float, diss_cum: float,
                      support_tol: float = 1e-12) -> tuple[float, float]:
    rho, u, theta, q, S = field.as_arrays()
    x = grid.centers
    dx = grid.dx
    kin = float(np.sum(rho * u * u) * dx)
    rate = float(np.sum(q * q / (params.kappa0 * theta * theta)
                        + S * S / (params.mu * theta)) * dx)
    if len(series):
        diss_cum += 0.5 * (diss_prev + rate) * dt
    E = 0.5 * rho * u * u + rho * params.Cv * theta
    eta = params.Cv * np.log(theta) - params.R * np.log(rho)
    gamma = params.gamma()
    dev = np.max(np.abs(np.stack([rho - 1.0, u, theta - 1.0])), axis=0)
    mask = dev > support_tol
    row = {
        "t": t,
        "F": float(np.sum(rho * u * x) * dx),  # tau2 = 0: no stress term
        "G": float(np.sum(E - params.Cv) * dx),
        "kinetic": kin,
        "Fdot_rhs": 0.5 * (3.0 - gamma) * kin - (gamma - 1.0) * fdot_const,
        "entropy_total": float(np.sum(rho * eta) * dx),
        "dissipation_rate": rate,
        "dissipation_cum": diss_cum,
        "support_radius": float(np.max(np.abs(x[mask]))) if np.any(mask) else 0.0,
        "max_grad_u": float(np.max(np.abs(np.gradient(u, dx, edge_order=2)))),
        "min_theta": float(np.min(theta)),
        "min_rho": float(np.min(rho)),
        "dt": dt,
    }
    state_int = float(np.sum(params.Cv * rho * (theta - np.log(theta) - 1.0)
                             + params.R * (rho * np.log(rho) - rho + 1.0)
                             + 0.5 * rho * u * u) * dx)
    series.append(row, state_int)
    return rate, diss_cum


def run_classical(initial_field: PrimitiveState, grid: Grid, params: GasParams,
                  controls: TimeControls, criteria: BreakdownCriteria,
                  order: int = 1) -> RunResult:
    """Advance the classical system; q0/S0 of the initial field are
    ignored (they are not state variables here)."""
    rho0, u0, th0, _, _ = initial_field.as_arrays()
    E0 = 0.5 * rho0 * u0 * u0 + rho0 * params.Cv * th0
    U = np.stack([rho0.copy(), rho0 * u0, E0])

    fdot_const = (float(np.sum(params.Cv * rho0 * (th0 - np.log(th0) - 1.0)
                               + params.R * (rho0 * np.log(rho0) - rho0 + 1.0))
                        * grid.dx)
                  + 0.5 * float(rho0.max()) * float(np.sum(u0 * u0) * grid.dx))

    series = functionals.FunctionalSeries()
    field = _classical_prim(U, params, grid.dx)
    dev0 = float(np.max(np.abs(np.stack([rho0 - 1.0, u0, th0 - 1.0]))))
    support_tol = max(1e-12, 0.01 * dev0)
    gu0 = float(np.max(np.abs(np.gradient(u0, grid.dx, edge_order=2))))
    gth0 = float(np.max(np.abs(np.gradient(th0, grid.dx, edge_order=2))))
    initial_max_grad = max(gu0, gth0)

    t, sigma_num = 0.0, 0.0
    diss_prev, diss_cum = 0.0, 0.0
    snapshots = [(0.0, field.copy())]
    diss_prev, diss_cum = _sample_classical(series, field, grid, params, t,
                                            0.0, fdot_const, diss_prev,
                                            diss_cum, support_tol)
    nstep = 0
    while t < controls.t_end - 1e-14 * max(1.0, controls.t_end):
        try:
            dt, smax = classical_dt(U, controls, grid, params, t)
            sigma_num = max(sigma_num, smax)
            if dt < controls.dt_floor:
                return RunResult(RunStatus.DT_FLOOR_HIT, t, None, None,
                                 series, snapshots, sigma_num)
            U = classical_step(U, dt, grid.dx, params, order)
            field = _classical_prim(U, params, grid.dx)
        except BreakdownError as exc:
            ev = BreakdownEvent(t, float("nan"), "positivity", float("nan"))
            return RunResult(RunStatus.BREAKDOWN, t, t, ev, series, snapshots,
                             sigma_num, message=str(exc))
        t += dt
        nstep += 1
        diss_prev, diss_cum = _sample_classical(series, field, grid, params,
                                                t, dt, fdot_const, diss_prev,
                                                diss_cum, support_tol)
        if nstep % controls.snapshot_every == 0:
            snapshots.append((t, field.copy()))
        event = solver.detect_breakdown(field, criteria, initial_max_grad,
                                        grid, t)
        if event is not None:
            snapshots.append((t, field.copy()))
            return RunResult(RunStatus.BREAKDOWN, t, t, event, series,
                             snapshots, sigma_num)
    if snapshots[-1][0] != t:
        snapshots.append((t, field.copy()))
    return RunResult(RunStatus.COMPLETED, t, None, None, series, snapshots,
                     sigma_num)


def l1_distance(field_a: PrimitiveState, field_b: PrimitiveState,
                grid: Grid) -> float:
    """L1 distance over (rho, u, theta)."""
    d = 0.0
    for fa, fb in ((field_a.rho, field_b.rho), (field_a.u, field_b.u),
                   (field_a.theta, field_b.theta)):
        d += float(np.sum(np.abs(np.asarray(fa) - np.asarray(fb))) * grid.dx)
    return d


def relaxation_limit_study(initial_field: PrimitiveState, grid: Grid,
                           params: GasParams, controls: TimeControls,
                           criteria: BreakdownCriteria, tau_list,
                           order: int = 1):
    """L1 gap at t_end between the relaxed solution (both relaxation times
    scaled to tau) and the classical one, per tau, plus the empirical
    convergence order fitted on successive pairs."""
    res_classical = run_classical(initial_field, grid, params, controls,
                                  criteria, order)
    if res_classical.status is not RunStatus.COMPLETED:
        raise RuntimeError("classical reference run did not complete")
    ref = res_classical.snapshots[-1][1]

    rows = []
    for tau in tau_list:
        p_tau = params.with_tau(float(tau))
        res = solver.run(initial_field, grid, p_tau, controls, criteria, order)
        if res.status is not RunStatus.COMPLETED:
            raise RuntimeError(f"relaxed run at tau={tau} did not complete "
                               f"({res.status.value})")
        rows.append((float(tau), l1_distance(res.snapshots[-1][1], ref, grid)))

    orders = []
    for (tau_a, gap_a), (tau_b, gap_b) in zip(rows, rows[1:]):
        if gap_a > 0.0 and gap_b > 0.0:
            orders.append(np.log(gap_a / gap_b) / np.log(tau_a / tau_b))
    return rows, orders
