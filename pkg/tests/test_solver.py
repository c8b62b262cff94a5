"""Time-stepper tests: ghosts, fluxes, exact relaxation substep against an
RK4 oracle, fixed point, conservation, breakdown detection, convergence."""

import numpy as np
import pytest

from relaxns import hyperbolic, initdata, model, solver
from relaxns.model import GasParams, PrimitiveState
from relaxns.solver import BreakdownCriteria, Grid, TimeControls


def small_field(grid, eps=1e-2):
    return initdata.small_data_field(eps, grid)


def test_fill_ghosts():
    p = GasParams()
    grid = Grid(-4.0, 4.0, 32)
    f = small_field(grid)
    U = solver._prim_to_U(f, p)
    Ug = solver.fill_ghosts(U, p)
    assert Ug.shape == (5, 32 + 4)
    bg = np.array([1.0, 0.0, p.Cv, 0.0, 0.0])
    for j in (0, 1, -2, -1):
        assert np.array_equal(Ug[:, j], bg)
    assert np.array_equal(Ug[:, 2:-2], U)  # interior untouched


def test_hyperbolic_flux_no_jump():
    p = GasParams()
    # L = R = background: flux is the physical flux (0, p, 0, 0, 0)
    bgU = solver._prim_to_U(PrimitiveState(*(np.array([v]) for v in model.BACKGROUND)), p)
    F = solver.hyperbolic_flux(bgU, bgU, p)
    assert np.allclose(F[:, 0], [0.0, p.R, 0.0, 0.0, 0.0], atol=1e-15)

    st = PrimitiveState(np.array([1.3]), np.array([0.7]), np.array([1.9]),
                        np.array([0.2]), np.array([-0.4]))
    U = solver._prim_to_U(st, p)
    F = solver.hyperbolic_flux(U, U, p)
    assert np.allclose(F, solver._physical_flux(st, p), rtol=1e-14)


def test_hyperbolic_flux_dissipation_term():
    p = GasParams()
    d = 1e-3
    L = PrimitiveState(np.array([1.0]), np.array([-d]), np.array([1.0]),
                       np.array([0.0]), np.array([0.0]))
    R = PrimitiveState(np.array([1.0]), np.array([+d]), np.array([1.0]),
                       np.array([0.0]), np.array([0.0]))
    UL, UR = solver._prim_to_U(L, p), solver._prim_to_U(R, p)
    F = solver.hyperbolic_flux(UL, UR, p)
    lam = max(hyperbolic.max_speed(L, p), hyperbolic.max_speed(R, p))
    expected = 0.5 * (solver._physical_flux(L, p) + solver._physical_flux(R, p)) \
        - 0.5 * lam * (UR - UL)
    assert np.allclose(F, expected, rtol=1e-13, atol=1e-16)


def test_relaxation_substep_uniform_decay():
    # no gradients: q_eq = S_eq = 0, exact exponential decay
    p = GasParams()
    grid = Grid(-4.0, 4.0, 64)
    n = grid.N
    f = PrimitiveState(rho=np.full(n, 1.5), u=np.zeros(n),
                       theta=np.full(n, 2.0), q=np.full(n, 0.3),
                       S=np.full(n, -0.2))
    dt = 0.07
    out = solver.relaxation_substep(f, dt, grid.dx, p)
    t1 = float(model.tau1(2.0, p)) * 1.5
    # theta is re-solved from fixed E, so the decay factor uses the old theta
    assert np.allclose(out.q, 0.3 * np.exp(-dt / t1), rtol=1e-13)
    assert np.allclose(out.S, -0.2 * np.exp(-dt / (p.tau2 * 1.5)), rtol=1e-13)
    # total energy untouched
    E0 = model.total_energy(f, p)
    E1 = model.total_energy(out, p)
    assert np.allclose(E1, E0, rtol=1e-12)


def test_relaxation_substep_equilibrium_limit():
    # tau -> 0: q -> -kappa theta_x, S -> mu u_x
    p = GasParams().with_tau(1e-12)
    grid = Grid(-4.0, 4.0, 128)
    f = small_field(grid, 5e-3)
    out = solver.relaxation_substep(f, 0.1, grid.dx, p)
    th_x = np.gradient(np.asarray(f.theta), grid.dx, edge_order=2)
    u_x = np.gradient(np.asarray(f.u), grid.dx, edge_order=2)
    assert np.allclose(out.q, -p.kappa0 * th_x, atol=1e-12)
    assert np.allclose(out.S, p.mu * u_x, atol=1e-12)


def test_relaxation_substep_vs_rk4_oracle():
    # single cell, frozen coefficients: integrate the linear relaxation ODEs
    # with 1000 RK4 substeps and compare
    p = GasParams(Zk=0.3, Zalpha=1.4)
    rho, theta = 1.7, 1.3
    q0, S0 = 0.8, -0.5
    q_eq, S_eq = 0.25, 0.1   # stand-ins for the frozen -kappa*theta_x, mu*u_x
    dt = 0.05
    t1 = float(model.tau1(theta, p)) * rho
    t2 = p.tau2 * rho

    def rk4(y0, yeq, tau):
        y, h = y0, dt / 1000.0
        rhs = lambda y: -(y - yeq) / tau
        for _ in range(1000):
            k1 = rhs(y)
            k2 = rhs(y + 0.5 * h * k1)
            k3 = rhs(y + 0.5 * h * k2)
            k4 = rhs(y + h * k3)
            y += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        return y

    q_exact = q_eq + (q0 - q_eq) * np.exp(-dt / t1)
    S_exact = S_eq + (S0 - S_eq) * np.exp(-dt / t2)
    assert rk4(q0, q_eq, t1) == pytest.approx(q_exact, rel=1e-10)
    assert rk4(S0, S_eq, t2) == pytest.approx(S_exact, rel=1e-10)


def test_step_background_fixed_point():
    p = GasParams()
    grid = Grid(-4.0, 4.0, 64)
    f = initdata.background_field(grid)
    for order in (1, 2):
        out = solver.step(f, 0.01, grid, p, order)
        for name in ("rho", "u", "theta", "q", "S"):
            assert np.array_equal(np.asarray(getattr(out, name)),
                                  np.asarray(getattr(f, name)))


def _coarsen(a):
    return 0.5 * (a[0::2] + a[1::2])


def test_step_self_convergence():
    # Richardson: L1 gap between N and 2N solutions at fixed t shrinks with
    # order >= 0.8 (first-order transport)
    p = GasParams()
    crit = BreakdownCriteria()
    sols = {}
    for N in (100, 200, 400):
        grid = Grid(-8.0, 8.0, N)
        res = solver.run(small_field(grid), grid, p, TimeControls(t_end=0.5),
                         crit, order=1)
        assert res.status is solver.RunStatus.COMPLETED
        sols[N] = np.asarray(res.snapshots[-1][1].u)
    e1 = np.mean(np.abs(sols[100] - _coarsen(sols[200])))
    e2 = np.mean(np.abs(sols[200] - _coarsen(sols[400])))
    assert np.log2(e1 / e2) >= 0.8


def test_compute_dt():
    p = GasParams()
    grid = Grid(-4.0, 4.0, 64)
    f = initdata.background_field(grid)
    ctrl = TimeControls(t_end=10.0, cfl=0.5)
    dt, smax, dt_cfl = solver.compute_dt(f, ctrl, grid, p, 0.0)
    lam = np.max(np.abs(hyperbolic.char_speeds(model.background_state(), p)))
    assert smax == pytest.approx(lam, rel=1e-13)
    assert dt == pytest.approx(0.5 * grid.dx / lam, rel=1e-13)
    # end-of-run cap does not trip the floor test
    dt, smax, dt_cfl = solver.compute_dt(f, ctrl, grid, p, 10.0 - 1e-13)
    assert dt == pytest.approx(1e-13, rel=1e-3)
    assert dt_cfl > 1e-6


def test_detect_breakdown():
    p = GasParams()
    grid = Grid(-4.0, 4.0, 3200)  # dx fine enough to resolve the ramp below
    crit = BreakdownCriteria(grad_threshold=50.0)
    bg = initdata.background_field(grid)
    assert solver.detect_breakdown(bg, crit, 1.0, grid, 0.0) is None

    f = bg.copy()
    f.u[1000] = np.nan
    ev = solver.detect_breakdown(f, crit, 1.0, grid, 0.3)
    assert ev is not None and ev.kind == "nonfinite"

    f = bg.copy()
    f.rho[10] = 1e-6
    ev = solver.detect_breakdown(f, crit, 1.0, grid, 0.3)
    assert ev is not None and ev.kind == "positivity"

    # steepening ramp: max |u_x| = 1/delta analytically
    delta = 0.01
    f = bg.copy()
    f.u = np.tanh(grid.centers / delta)
    ev = solver.detect_breakdown(f, crit, 1.0, grid, 0.5)
    assert ev is not None and ev.kind == "gradient"
    assert abs(ev.x) <= 2 * grid.dx
    assert ev.value <= 1.0 / delta + 1.0

    f = bg.copy()
    f.u = 1e-4 * np.sin(grid.centers)
    ev = solver.detect_breakdown(f, BreakdownCriteria(amplification_factor=2.0),
                                 1e-12, grid, 0.1)
    assert ev is not None and ev.kind == "amplification"


def test_run_background():
    p = GasParams()
    grid = Grid(-4.0, 4.0, 64)
    res = solver.run(initdata.background_field(grid), grid, p,
                     TimeControls(t_end=0.2), BreakdownCriteria())
    assert res.status is solver.RunStatus.COMPLETED
    assert res.t_final == pytest.approx(0.2, rel=1e-12)
    for col in ("F", "G", "kinetic", "entropy_total", "dissipation_rate",
                "support_radius", "max_grad_u"):
        assert np.allclose(res.series.column(col), 0.0, atol=1e-14)


def test_run_conservation():
    # mass, momentum and energy sums move only through the two boundary
    # fluxes, which cancel for background boundaries
    p = GasParams()
    grid = Grid(-10.0, 10.0, 200)
    f0 = small_field(grid)
    res = solver.run(f0, grid, p, TimeControls(t_end=1.0, snapshot_every=20),
                     BreakdownCriteria(), order=1)
    assert res.status is solver.RunStatus.COMPLETED
    U0 = solver._prim_to_U(f0, p)
    sums0 = U0.sum(axis=1) * grid.dx
    for t, snap in res.snapshots:
        U = solver._prim_to_U(snap, p)
        sums = U.sum(axis=1) * grid.dx
        # rho, rho*u, E are in exact conservation form
        assert np.allclose(sums[:3], sums0[:3], rtol=1e-12, atol=1e-13)


def test_run_order2_positivity_at_large_amplitude():
    # primitive-variable reconstruction keeps faces admissible even for
    # strong velocity data; run a few steps without a domain error
    p = GasParams(sigma_bound=20.0)
    grid = Grid(-10.0, 10.0, 400)
    f0, _ = initdata.build_initial_field(
        {"u": initdata.ProfileSpec("sideris_velocity", 10.0, 4.0)}, grid, p)
    res = solver.run(f0, grid, p, TimeControls(t_end=0.005),
                     BreakdownCriteria(grad_threshold=1e6), order=2)
    assert res.status is solver.RunStatus.COMPLETED


def test_snapshot_csv_round_trip(tmp_path):
    grid = Grid(-4.0, 4.0, 64)
    f = small_field(grid, 3e-3)
    path = tmp_path / "snap.csv"
    solver.write_snapshot_csv(path, grid, f)
    x, back = solver.read_snapshot_csv(path)
    assert np.allclose(x, grid.centers, rtol=1e-15)
    for name in ("rho", "u", "theta", "q", "S"):
        assert np.allclose(np.asarray(getattr(back, name)),
                           np.asarray(getattr(f, name)), rtol=1e-15, atol=1e-300)


def test_grid_validation():
    with pytest.raises(ValueError):
        Grid(-1.0, 1.0, 8)
    with pytest.raises(ValueError):
        Grid(1.0, -1.0, 64)
    with pytest.raises(ValueError):
        TimeControls(t_end=1.0, cfl=1.5)
    with pytest.raises(ValueError):
        BreakdownCriteria(grad_threshold=-1.0)
