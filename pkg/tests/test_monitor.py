import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nozzleflow.errors import AdmissibilityError
from nozzleflow.fields import FieldState, Grid
from nozzleflow.gas import GasModel, Mode
from nozzleflow.geometry import (Constant, admissibility_threshold, derive_a,
                                 expmonotone_with_a0_l1, laval_with_a0_l1)
from nozzleflow.initial import bump, constant
from nozzleflow.monitor import (build_controls, build_controls_isentropic,
                                build_controls_isothermal, check_bounds, constraint_set,
                                density_floor_check, minimal_c0, modified_invariants)
from nozzleflow.solver import MollifierSpec, SolverConfig, mollify_initial, run

ISO = GasModel.isothermal()


def _setup(g, geom, n=400, peak=2.0):
    grid = Grid(*geom.domain, n)
    cfg = SolverConfig(epsilon=0.05)
    raw = bump(grid, (1.0, 0.0), (peak, 0.2), 0.0, 1.5)
    return grid, mollify_initial(raw, MollifierSpec(), g, cfg, grid.dx)


def test_M0_equals_C0_for_gamma_five_thirds():
    g = GasModel.isentropic(5.0 / 3.0)
    geom = laval_with_a0_l1(0.2, (-10, 10))
    grid, init = _setup(g, geom)
    c = build_controls_isentropic(geom, g, init, 0.05, grid)
    assert c.M0 == pytest.approx(c.C0, rel=1e-14)
    assert np.allclose(c.b, c.M0 * geom.a0(grid.nodes))


def test_zero_geometry_gives_flat_controls():
    g = GasModel.isentropic(1.4)
    geom = derive_a(Constant(1.0), (-5, 5))
    grid, init = _setup(g, geom)
    c = build_controls(geom, g, init, 0.05, grid)
    assert np.all(c.b == 0) and c.b_prime_sup == 0
    assert np.all(c.phi(3.0) == c.C0) and np.all(c.psi(3.0) == c.C0)
    ci = build_controls(geom, ISO, init, 0.05, grid)
    assert np.all(ci.phi(1.0) == ci.M) and np.all(ci.psi(1.0) == ci.M)


@pytest.mark.parametrize("gamma", [1.2, 1.5, 5.0 / 3.0, 2.0, 2.5])
def test_source_bound_identity(gamma):
    theta = (gamma - 1) / 2
    for C0 in (0.3, 1.0, 7.5):
        M0 = C0 * (3 * theta**2 + theta) / (1 - theta)
        src = constraint_set(theta, C0, M0, 0.0)["bounds"]["source"]
        assert src == pytest.approx((1 - theta) / (1 + theta), abs=1e-12)


@pytest.mark.parametrize("gamma", [1.5, 5.0 / 3.0, 2.0])
def test_threshold_geometry_satisfies_constraints(gamma):
    g = GasModel.isentropic(gamma)
    geom = laval_with_a0_l1(admissibility_threshold(g), (-10, 10))
    grid, init = _setup(g, geom)
    c = build_controls_isentropic(geom, g, init, 0.05, grid)
    assert all(c.constraints["satisfied"].values())
    assert c.C0 >= minimal_c0(g.theta, geom.a0_l1)
    for name, bound in c.constraints["bounds"].items():
        assert bound - geom.a0_l1 >= -1e-12 * bound, name


def test_unlifted_small_C0_names_failing_bound():
    g = GasModel.isentropic(1.5)
    geom = laval_with_a0_l1(0.8 * admissibility_threshold(g), (-10, 10))
    grid, init = _setup(g, geom, peak=1.2)
    with pytest.raises(AdmissibilityError, match="coupling"):
        build_controls_isentropic(geom, g, init, 0.05, grid, lift_c0=False)
    c = build_controls_isentropic(geom, g, init, 0.05, grid)
    assert c.constraints["c0_lifted"]


def test_isothermal_tails_and_limit():
    geom = expmonotone_with_a0_l1(0.4, (-18, 18))
    grid, init = _setup(ISO, geom)
    c = build_controls_isothermal(geom, init, 0.05, grid)
    t = 0.7
    tt = 2 * 0.05 * c.b_prime_sup * t
    assert c.phi(t)[-1] == pytest.approx(c.M + 2 * c.b_l1 + tt, rel=1e-12)
    assert c.psi(t)[-1] == pytest.approx(c.M + tt, rel=1e-12)
    diff = 2 * c.b_right - 2 * c.b_left
    assert np.argmax(diff) == 0 and diff.max() == pytest.approx(2 * c.b_l1, rel=1e-12)
    assert c.b_l1 == pytest.approx(geom.a0_l1, rel=1e-5)
    big = expmonotone_with_a0_l1(0.6, (-18, 18))
    with pytest.raises(AdmissibilityError):
        build_controls_isothermal(big, init, 0.05, grid)


@pytest.mark.parametrize("kind", ["laval", "expmonotone"])
@pytest.mark.parametrize("g", [GasModel.isentropic(5.0 / 3.0), ISO], ids=["isentropic", "isothermal"])
def test_phi_plus_psi_flat_and_slopes(g, kind):
    if kind == "laval":
        geom = laval_with_a0_l1(0.3, (-10, 10))
    else:
        geom = expmonotone_with_a0_l1(0.3, (-18, 18))
    errs = []
    for n in (400, 800):
        grid, init = _setup(g, geom, n=n)
        c = build_controls(geom, g, init, 0.05, grid)
        for t in (0.0, 1.0, 4.0):
            s = c.phi(t) + c.psi(t)
            assert np.ptp(s) <= 1e-12
            expect = 2 * c.level + 2 * c.time_term(t) + c.weight * c.b_l1
            assert s[0] == pytest.approx(expect, rel=1e-13)
        x = grid.nodes
        dphi = np.gradient(c.phi(1.0), grid.dx)
        dpsi = np.gradient(c.psi(1.0), grid.dx)
        # |a| has a V at the Laval throat; a0 rounds it only on its own sample
        # scale, so slopes there converge at first order
        keep = np.abs(x) > 0.3 if kind == "laval" else np.ones_like(x, dtype=bool)
        keep[[0, -1]] = False
        errs.append(max(np.max(np.abs(dphi - c.weight * c.b)[keep]),
                        np.max(np.abs(dpsi + c.weight * c.b)[keep])))
    assert errs[0] / errs[1] > 3.5


@settings(max_examples=25, deadline=None)
@given(st.floats(0.0, 20.0), st.floats(0.0, 20.0))
def test_controls_nondecreasing_in_time(t1, t2):
    g = GasModel.isentropic(2.0)
    geom = laval_with_a0_l1(0.2, (-10, 10))
    grid, init = _setup(g, geom, n=200)
    c = build_controls(geom, g, init, 0.05, grid)
    lo, hi = sorted((t1, t2))
    assert np.all(c.phi(hi) >= c.phi(lo)) and np.all(c.psi(hi) >= c.psi(lo))


def test_initial_state_is_strictly_inside():
    g = GasModel.isentropic(1.4)
    geom = laval_with_a0_l1(0.2, (-10, 10))
    grid, init = _setup(g, geom)
    c = build_controls(geom, g, init, 0.05, grid)
    margin = 1e-6  # the absolute part of the C0 margin
    wbar, zbar = modified_invariants(init, c, g)
    assert wbar.max() <= -margin and zbar.min() >= margin
    assert check_bounds(init, c, g, tol=0.0).passed


def test_constant_state_invariants_flat():
    g = GasModel.isentropic(1.4)
    geom = derive_a(Constant(1.0), (-5, 5))
    grid = Grid(-5, 5, 100)
    s = constant(grid, 1.3, 0.2)
    c = build_controls(geom, g, s, 0.05, grid)
    for t in (0.0, 2.0):
        wbar, zbar = modified_invariants(FieldState(t, s.density, s.momentum), c, g)
        assert np.ptp(wbar) == 0.0 and np.ptp(zbar) == 0.0


def test_floor_check_examples():
    grid = Grid(-1, 1, 100)
    cfg = SolverConfig(epsilon=0.05)
    x = grid.nodes
    raw = FieldState(0, np.where(np.abs(x) < 0.2, 0.0, 1.0), np.zeros(100))
    lo, ok = density_floor_check(raw.density, Mode.ISENTROPIC)
    assert lo == 0.0 and not ok
    moll = mollify_initial(raw, MollifierSpec(), GasModel.isentropic(1.4), cfg, grid.dx)
    lo, ok = density_floor_check(moll.density, Mode.ISENTROPIC)
    assert ok and lo >= 0.05 - 1e-14
    assert density_floor_check([1e-3, 2.0], Mode.ISOTHERMAL, 1e-3)[1]
    assert not density_floor_check([0.9e-3, 2.0], Mode.ISOTHERMAL, 1e-3)[1]


def test_inflated_geometry_report_is_well_formed():
    g = GasModel.isentropic(2.0)
    geom = laval_with_a0_l1(3 * admissibility_threshold(g), (-10, 10))
    grid, init = _setup(g, geom, n=200)
    c = build_controls(geom, g, init, 0.05, grid, override=True)
    assert not all(c.constraints["satisfied"].values())
    trace = run(init, g, geom, c, SolverConfig(epsilon=0.05, t_end=0.5, snapshot_stride=50), grid,
                override=True)
    for rep in trace.reports:
        d = rep.to_dict()
        assert {"t", "max_wbar", "min_zbar", "min_density", "max_abs_u", "pass",
                "violations"} <= set(d)
        assert d["pass"] == (not d["violations"])
        assert len(d["violations"]) <= 5 * 20


def test_violation_listing():
    g = GasModel.isentropic(1.4)
    geom = derive_a(Constant(1.0), (-5, 5))
    grid = Grid(-5, 5, 100)
    s = constant(grid, 1.0, 0.0)
    c = build_controls(geom, g, s, 0.05, grid)
    hot = FieldState(0.0, s.density, np.where(np.abs(grid.nodes) < 1, 3.0, 0.0))
    rep = check_bounds(hot, c, g, tol=1e-3)
    assert not rep.passed
    names = {v[1] for v in rep.violations}
    assert "wbar" in names
    nodes = [v[0] for v in rep.violations if v[1] == "wbar"]
    assert all(abs(grid.nodes[i]) < 1 for i in nodes)


def test_tolerance_shrinks_with_grid():
    g = GasModel.isentropic(5.0 / 3.0)
    geom = laval_with_a0_l1(0.2, (-10, 10))
    tols = []
    for n in (200, 400, 800):
        grid, init = _setup(g, geom, n=n)
        c = build_controls(geom, g, init, 0.05, grid)
        trace = run(init, g, geom, c, SolverConfig(epsilon=0.05, t_end=0.2, snapshot_stride=100),
                    grid)
        assert trace.passed
        tols.append(trace.meta["tol"])
    orders = np.log2(np.array(tols[:-1]) / np.array(tols[1:]))
    assert np.all(orders >= 1.0 - 1e-9)


@pytest.mark.parametrize("gamma", [1.5, 5.0 / 3.0, 2.0])
def test_max_w_plateau_is_time_uniform(gamma):
    """Once max_x w is carried by a constant far-field state it no longer moves:
    max w at T equals max w at T/2 within 1e-6."""
    from nozzleflow.gas import to_riemann
    from nozzleflow.initial import riemann_step
    g = GasModel.isentropic(gamma)
    geom = laval_with_a0_l1(0.8 * admissibility_threshold(g), (-20, 20))
    grid = Grid(-20, 20, 512)
    cfg = SolverConfig(epsilon=0.05, t_end=10.0, snapshot_dt=1.0)
    raw = riemann_step(grid, (1.0, 0.0), (2.0, 0.0), 0.0)
    init = mollify_initial(raw, MollifierSpec(), g, cfg, grid.dx)
    trace = run(init, g, geom, build_controls(geom, g, init, 0.05, grid), cfg, grid)
    assert trace.passed
    w_max = [to_riemann(g, s.density, s.momentum)[0].max() for s in trace.snapshots]
    assert trace.times[5] == 5.0
    assert abs(w_max[-1] - w_max[5]) <= 1e-6
