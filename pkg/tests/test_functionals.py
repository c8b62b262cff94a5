"""Diagnostics tests: F, G, H0, identity residuals, support radius, and
the Riccati constants/ODE machinery."""

import numpy as np
import pytest
from scipy.integrate import quad

from relaxns import functionals, initdata, model, solver
from relaxns.model import GasParams, PrimitiveState
from relaxns.solver import BreakdownCriteria, Grid, TimeControls


def sideris_field(grid, L, M, params):
    field, _ = initdata.build_initial_field(
        {"u": initdata.ProfileSpec("sideris_velocity", L, M)}, grid, params)
    return field


def test_moment_F():
    p = GasParams()
    grid = Grid(-5.0, 5.0, 2000)
    assert functionals.moment_F(initdata.background_field(grid), grid, p) == 0.0

    f = sideris_field(grid, 1.0, 4.0, p)
    F = functionals.moment_F(f, grid, p)
    # adaptive quadrature oracle for int x*u0 dx
    pieces = [-4.0, -3.0, -1.0, 1.0, 3.0, 4.0]
    oracle = sum(quad(lambda x: x * initdata.sideris_u0(x, 1.0, 4.0), a, b,
                      epsabs=1e-13)[0] for a, b in zip(pieces, pieces[1:]))
    assert F == pytest.approx(oracle, rel=2e-5)
    assert F == pytest.approx(12.1079, abs=2e-4)

    # constant S on the support subtracts tau2 * int rho S
    f.S = np.where(np.abs(grid.centers) <= 4.0, 1.0, 0.0)
    assert functionals.moment_F(f, grid, p) == pytest.approx(oracle - 0.1 * 8.0,
                                                             rel=2e-4)


def test_energy_G():
    p = GasParams()
    grid = Grid(-5.0, 5.0, 2000)
    assert functionals.energy_G(initdata.background_field(grid), grid, p) == 0.0
    f = sideris_field(grid, 1.0, 4.0, p)
    assert functionals.energy_G(f, grid, p) == pytest.approx(0.5 * 5.75, rel=2e-5)


def test_boundary_warning():
    p = GasParams()
    grid = Grid(-5.0, 5.0, 100)
    f = initdata.background_field(grid)
    f.u[0] = 1e-3   # perturbation sits on the boundary cell
    with pytest.warns(UserWarning):
        functionals.moment_F(f, grid, p)


def test_H0_functional():
    p = GasParams()
    grid = Grid(-5.0, 5.0, 4000)
    assert functionals.H0_functional(initdata.background_field(grid), grid, p) == 0.0

    # theta = 1 + eps on (-1, 1): H0 = 2*Cv*(eps - ln(1+eps)) ~ Cv*eps^2
    eps = 1e-3
    f = initdata.background_field(grid)
    f.theta = np.where(np.abs(grid.centers) < 1.0, 1.0 + eps, 1.0)
    H0 = functionals.H0_functional(f, grid, p)
    assert H0 == pytest.approx(2.0 * p.Cv * (eps - np.log1p(eps)), rel=1e-10)
    assert H0 == pytest.approx(p.Cv * eps ** 2, rel=1e-3)  # Taylor, O(eps^3) off

    # q = 1 on a support of length 2, alpha=1, k=1: integrand is a+0 = 1/2
    p1 = GasParams(Zk=1.0, Zalpha=1.0)
    f = initdata.background_field(grid)
    f.q = np.where(np.abs(grid.centers) < 1.0, 1.0, 0.0)
    assert functionals.H0_functional(f, grid, p1) == pytest.approx(1.0, rel=1e-12)


def test_identity_residuals_background_run():
    p = GasParams()
    grid = Grid(-4.0, 4.0, 64)
    res = solver.run(initdata.background_field(grid), grid, p,
                     TimeControls(t_end=0.2), BreakdownCriteria())
    assert np.allclose(functionals.energy_identity_residual(res.series), 0.0,
                       atol=1e-14)
    assert np.allclose(functionals.entropy_identity_residual(res.series), 0.0,
                       atol=1e-14)
    # residual(0) = 0 holds by construction on any run
    res2 = solver.run(initdata.small_data_field(1e-2, grid), grid, p,
                      TimeControls(t_end=0.05), BreakdownCriteria())
    assert functionals.energy_identity_residual(res2.series)[0] == 0.0


def test_entropy_balance_residual_relaxation():
    # uniform rho/theta with decaying q: the per-step residual shrinks at
    # O(dt) as the step is refined
    p = GasParams()
    grid = Grid(-4.0, 4.0, 128)
    n = grid.N
    f = PrimitiveState(rho=np.ones(n), u=np.zeros(n), theta=np.full(n, 1.5),
                       q=np.full(n, 0.2), S=np.zeros(n))
    resids = []
    for dt in (0.02, 0.01, 0.005):
        f2 = solver.relaxation_substep(f, dt, grid.dx, p)
        resids.append(abs(functionals.entropy_balance_residual(f, f2, dt, grid, p)))
    orders = [np.log2(resids[i] / resids[i + 1]) for i in range(2)]
    assert min(orders) >= 0.8


def test_support_radius():
    grid = Grid(-6.0, 6.0, 600)
    assert functionals.support_radius(initdata.background_field(grid), grid) == 0.0
    p = GasParams()
    f = sideris_field(grid, 1.0, 4.0, p)
    assert functionals.support_radius(f, grid, 1e-12) == pytest.approx(4.0, abs=grid.dx)


def test_riccati_constants_worked_values():
    p = GasParams(Cv=1.0, R=0.4, sigma_bound=2.0)   # gamma = 1.4
    grid = Grid(-5.0, 5.0, 400)
    f = sideris_field(grid, 1.0, 4.0, p)
    ric = functionals.riccati_constants(p, f, grid, 4.0)
    assert ric.c2 == pytest.approx(0.5, abs=1e-15)
    assert ric.c3 == pytest.approx(0.003125, abs=1e-15)
    assert ric.c3 == pytest.approx(1.6 / 512.0, abs=1e-18)

    # F0 = 1280 gives the closed-form blow-up time 2(sqrt(2)-1)
    ric2 = functionals.RiccatiData(c2=0.5, c3=0.003125, F0=1280.0, H0=0.0,
                                   u0_l2sq=0.0, gamma=1.4, mu=1.0, tau2=0.1,
                                   M=4.0, sigma=2.0, max_rho0=1.0)
    assert 4.0 * ric2.c2 / ric2.c3 == pytest.approx(640.0, abs=1e-12)
    assert ric2.Tstar == pytest.approx(2.0 * (np.sqrt(2.0) - 1.0), rel=1e-12)
    # boundary case F0 = 4 c2/c3 exactly
    ric3 = functionals.RiccatiData(c2=0.5, c3=0.003125, F0=640.0, H0=0.0,
                                   u0_l2sq=0.0, gamma=1.4, mu=1.0, tau2=0.1,
                                   M=4.0, sigma=2.0, max_rho0=1.0)
    assert ric3.Tstar == np.inf


def test_check_thresholds_worked_values():
    ric = functionals.RiccatiData(c2=0.5, c3=0.003125, F0=1280.0, H0=0.0,
                                  u0_l2sq=0.0, gamma=1.4, mu=1.0, tau2=0.1,
                                  M=4.0, sigma=2.0, max_rho0=1.0)
    thr = functionals.check_thresholds(ric)
    assert thr.as1_threshold == pytest.approx(640.0, abs=1e-12)
    assert thr.as3_rhs == pytest.approx(1280.0, abs=1e-12)
    assert thr.identity_ok   # 16 c2^2/c3 equals the closed-form AS3 rhs
    assert thr.AS1
    assert abs(16.0 * ric.c2 ** 2 / ric.c3 - thr.as3_rhs) <= 1e-12 * thr.as3_rhs


def test_riccati_ode_matches_closed_form():
    ric = functionals.RiccatiData(c2=0.5, c3=0.003125, F0=1280.0, H0=0.0,
                                  u0_l2sq=0.0, gamma=1.4, mu=1.0, tau2=0.1,
                                  M=4.0, sigma=2.0, max_rho0=1.0)
    Ts = ric.Tstar
    ts, ys, tb = functionals.riccati_ode_solve(ric, 0.8 * Ts, Ts / 5000.0)
    assert tb is None
    y_cf = functionals.riccati_closed_form(ric, ts)
    assert np.max(np.abs(ys - y_cf) / np.abs(y_cf)) <= 1e-8

    ts, ys, tb = functionals.riccati_ode_solve(ric, 2.0 * Ts, Ts / 5000.0)
    assert tb is not None
    assert abs(tb - Ts) / Ts <= 0.01


def test_riccati_ode_bounded_below_threshold():
    ric = functionals.RiccatiData(c2=0.5, c3=0.003125, F0=600.0, H0=0.0,
                                  u0_l2sq=0.0, gamma=1.4, mu=1.0, tau2=0.1,
                                  M=4.0, sigma=2.0, max_rho0=1.0)
    assert ric.Tstar == np.inf
    ts, ys, tb = functionals.riccati_ode_solve(ric, 100.0, 0.01)
    assert tb is None
    # the closed form saturates at (1/F0 - c3/(4 c2))^(-1)
    cap = 1.0 / (1.0 / ric.F0 - ric.c3 / (4.0 * ric.c2))
    assert np.all(ys <= cap * (1.0 + 1e-9))


def test_K_function():
    ric = functionals.RiccatiData(c2=0.5, c3=0.003125, F0=100.0, H0=2.0,
                                  u0_l2sq=3.0, gamma=1.4, mu=1.0, tau2=0.1,
                                  M=4.0, sigma=2.0, max_rho0=1.5)
    kc = 2.0 + 0.5 * 1.5 * 3.0
    assert ric.Kconst == pytest.approx(kc, rel=1e-15)
    t = 1.3
    expected = ((3.0 - 1.4) * 1.0 * 0.1 / (4.0 + 2.0 * t) ** 2 + 0.4) * kc
    assert float(ric.K(t)) == pytest.approx(expected, rel=1e-14)


def test_fprime_lowerbound_check_background():
    p = GasParams()
    grid = Grid(-4.0, 4.0, 64)
    res = solver.run(initdata.background_field(grid), grid, p,
                     TimeControls(t_end=0.1), BreakdownCriteria())
    ric = functionals.riccati_constants(p, res.snapshots[0][1], grid, 4.0)
    chk = functionals.fprime_lowerbound_check(res.series, ric)
    assert np.allclose(chk.margin, 0.0, atol=1e-13)
    assert np.allclose(chk.F, 0.0, atol=1e-14)


def test_series_csv_round_trip(tmp_path):
    p = GasParams()
    grid = Grid(-4.0, 4.0, 64)
    res = solver.run(initdata.small_data_field(1e-3, grid), grid, p,
                     TimeControls(t_end=0.1), BreakdownCriteria())
    path = tmp_path / "series.csv"
    res.series.write_csv(path)
    data = np.genfromtxt(path, delimiter=",", names=True)
    assert list(data.dtype.names) == list(functionals.SERIES_COLUMNS)
    assert np.allclose(data["G"], res.series.column("G"), rtol=1e-15)
    assert np.all(np.diff(data["t"]) > 0.0)
