from pathlib import Path

import numpy as np
import pytest

from nozzleflow.errors import ConfigError, DomainError
from nozzleflow.fields import Grid
from nozzleflow.gas import GasModel
from nozzleflow.geometry import Constant, derive_a
from nozzleflow.initial import bump
from nozzleflow.maxprinciple import (SYNTHETIC_PASSING, VIOLATORS, ParabolicSystemSpec,
                                     barrier_lambda, check_C1_C2, const, integrate_system,
                                     nozzle_preset, parse_scenario, rst_coefficients,
                                     run_corpus, synthetic_preset)
from nozzleflow.monitor import build_controls_isentropic
from nozzleflow.solver import MollifierSpec, SolverConfig, mollify_initial

CORPUS = Path(__file__).resolve().parents[1] / "configs" / "max_principle"
GRID = Grid(-6.0, 6.0, 256)


def test_heat_preserves_signs():
    spec = synthetic_preset("heat", GRID)
    trace, rep = integrate_system(spec)
    assert rep.preserved and rep.max_p <= 0.0 and rep.min_q >= 0.0
    assert len(trace.times) == 101


def test_R1_violator_grows_like_t():
    spec = synthetic_preset("violate-R1", GRID)
    trace, rep = integrate_system(spec)
    # p_t = eps p_xx + 1 with p0 = 0 has p = t
    for t, p in zip(trace.times, trace.p):
        assert np.allclose(p, t, atol=1e-12)
    assert not rep.preserved
    x, t, comp = rep.first_violation
    assert comp == "p"
    # first snapshot with t > tol
    assert t == min(s for s in trace.times if s > rep.tol)


@pytest.mark.parametrize("name", VIOLATORS)
def test_violators_fail_both_routes(name):
    spec = synthetic_preset(name, GRID)
    cond = check_C1_C2(spec)
    _, rep = integrate_system(spec)
    assert not cond.passed and not rep.preserved and rep.first_violation is not None
    tag = name.split("-")[1]
    failing = cond.worst_c1 if tag.startswith("a") else cond.worst_c2
    assert failing[0] == tag
    # exactly one condition is violated
    assert cond.c1_pass != cond.c2_pass


@pytest.mark.parametrize("name", SYNTHETIC_PASSING)
def test_synthetic_passing(name):
    spec = synthetic_preset(name, GRID)
    assert check_C1_C2(spec).passed
    assert integrate_system(spec)[1].preserved


def test_c1_worst_value_for_constant_a12():
    spec = ParabolicSystemSpec("c", 0.1, GRID, 1.0, -np.ones(256), np.ones(256),
                               a12=const(-1.0), a21=const(-1.0))
    rep = check_C1_C2(spec)
    assert rep.c1_pass and rep.worst_c1[-1] == -1.0
    assert rep.samples == 64 * 9 * 9 * 5 * 5


def test_initial_sign_check():
    with pytest.raises(ConfigError):
        ParabolicSystemSpec("bad", 0.1, GRID, 1.0, np.full(256, 0.1), np.ones(256))


def _state(g, geom, n=400):
    grid = Grid(*geom.domain, n)
    raw = bump(grid, (1.0, 0.0), (2.0, 0.3), 0.0, 2.0)
    return grid, mollify_initial(raw, MollifierSpec(), g, SolverConfig(epsilon=0.05), grid.dx)


def test_zero_geometry_leaves_curvature_terms():
    g = GasModel.isentropic(1.4)
    th = g.theta
    geom = derive_a(Constant(1.0), (-8, 8))
    grid, s = _state(g, geom)
    c = build_controls_isentropic(geom, g, s, 0.05, grid)
    spec = rst_coefficients(s, c, g, geom, 0.05, 1.0)
    x = grid.nodes
    rho_th = s.density**th
    sx = np.gradient(rho_th, grid.dx)
    # on p = 0 the reconstruction gives rho^theta = (phi + psi - q)/2; choose q accordingly
    q = c.phi(0.0) + c.psi(0.0) - 2 * rho_th
    zeros = np.zeros_like(x)
    args = (x, 0.0, zeros, q, sx, -sx)  # (rho^theta)_x = (p_x - q_x)/2
    assert np.all(spec.a12(*args) == 0) and np.all(spec.a21(*args) == 0)
    rho_x = np.gradient(s.density, grid.dx)
    direct = 0.05 * th * (th + 1) * s.density ** (th - 2) * (sx / (th * s.density ** (th - 1))) ** 2
    assert np.allclose(-spec.R1(*args), direct, rtol=1e-12, atol=1e-300)
    assert np.allclose(spec.R2(*args), direct, rtol=1e-12, atol=1e-300)
    assert np.all(spec.R1(*args) <= 0)
    assert np.max(np.abs(direct - 0.05 * th * (th + 1) * s.density ** (th - 2) * rho_x**2)) \
        <= 1e-2 * direct.max()


def test_far_field_R1_reduces_to_time_term():
    """Where a, b, b' vanish and the gradients are zero, R1 = -eps sup|b'| <= 0."""
    from nozzleflow.geometry import laval_with_a0_l1
    g = GasModel.isentropic(5.0 / 3.0)
    geom = laval_with_a0_l1(0.2, (-18, 18))
    grid, s = _state(g, geom, n=576)
    c = build_controls_isentropic(geom, g, s, 0.05, grid)
    spec = rst_coefficients(s, c, g, geom, 0.05, 1.0)
    x = np.array([-18.0, 18.0])
    assert np.max(np.abs(geom.a(x))) < 1e-100 and np.max(np.abs(c.b[[0, -1]])) < 1e-100
    z = np.zeros(2)
    vals = spec.R1(x, 0.5, z, 0.5 * spec.q_max(x, 0.5), z, z)
    assert np.allclose(vals, -0.05 * c.b_prime_sup, rtol=1e-12, atol=1e-100)
    assert c.b_prime_sup > 0


def test_isothermal_transform_rejected():
    iso = GasModel.isothermal()
    geom = derive_a(Constant(1.0), (-4, 4))
    grid, s = _state(GasModel.isentropic(1.4), geom, n=64)
    with pytest.raises(DomainError):
        rst_coefficients(s, None, iso, geom, 0.05, 1.0)


@pytest.mark.parametrize("gamma", [1.5, 5.0 / 3.0, 2.0])
@pytest.mark.parametrize("geometry", ["laval", "expmonotone"])
def test_nozzle_admissible_passes(gamma, geometry):
    spec = nozzle_preset(gamma, geometry)
    assert check_C1_C2(spec).passed
    _, rep = integrate_system(spec)
    assert rep.preserved
    b = barrier_lambda(spec, integrate_system(spec)[0])
    assert b["dominates"] and b["Lambda"] > 0


@pytest.mark.parametrize("gamma", [1.5, 5.0 / 3.0, 2.0])
@pytest.mark.parametrize("geometry", ["laval", "expmonotone"])
def test_nozzle_inflated_three_times_fails_with_witness(gamma, geometry):
    spec = nozzle_preset(gamma, geometry, a0_fraction=3 * 0.8)
    rep = check_C1_C2(spec)
    assert not rep.passed
    witness = rep.worst_c1 if not rep.c1_pass else rep.worst_c2
    name, x, t = witness[:3]
    assert name in ("a12", "a21", "R1", "R2") and -18 <= x <= 18 and 0 <= t <= 1
    assert witness[-1] > 0 if name != "R2" else witness[-1] < 0


def test_corpus():
    files = sorted(CORPUS.glob("*.scn"))
    assert len(files) >= 12
    kinds = [parse_scenario(f)["kind"] for f in files]
    assert kinds.count("nozzle") >= 6 and kinds.count("synthetic") >= 8
    results = run_corpus(CORPUS)
    assert all(r.ok for r in results), [r.name for r in results if not r.ok]
    for r in results:
        if r.expect == "violate":
            assert not r.signs.preserved and r.signs.first_violation is not None
        else:
            assert r.conditions.passed and r.signs.preserved


def test_scenario_parse_errors(tmp_path):
    f = tmp_path / "x.scn"
    f.write_text("kind = synthetic\npreset = heat\n")
    with pytest.raises(ConfigError, match="expect"):
        parse_scenario(f)
    f.write_text("kind = synthetic\nexpect = maybe\n")
    with pytest.raises(ConfigError):
        parse_scenario(f)
    f.write_text("kind synthetic\n")
    with pytest.raises(ConfigError):
        parse_scenario(f)
    with pytest.raises(ConfigError):
        run_corpus(tmp_path / "empty")
