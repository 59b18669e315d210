import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ocpstab import (BlowUpError, LinearOCPParams, SingularPropagationError, assemble_ie, assemble_mp,
                     derive_constants, eval_analytic, gamma, grid_from_dt, make_grid, propagate, propagation_ie,
                     propagation_mp, solve_bvp)
from ocpstab.hbvp import control_hamiltonian, linear_control_problem
from ocpstab.linear import PropagationForm, discrete_residuals

BASE = LinearOCPParams(m=1, b=1, a=1, v_o=0, v_t=20, T=10, alpha=0.1)


def test_assemble_mp_examples():
    c = assemble_mp(LinearOCPParams(m=1, b=1, alpha=1), 0.1)
    assert (c.p, c.q, c.s) == pytest.approx((21, -19, 1), rel=1e-14)
    assert assemble_mp(LinearOCPParams(m=1, b=1, alpha=1), 2.0).q == 0.0
    c = assemble_mp(LinearOCPParams(m=2, b=0.5, alpha=0.25), 0.5)
    assert (c.p, c.q, c.s) == pytest.approx((4.25, -3.75, 1), rel=1e-14)
    assert c.p - c.q == pytest.approx(4 / 0.5)


def test_assemble_ie_example():
    c = assemble_ie(LinearOCPParams(m=1, b=1, alpha=1), 0.1)
    assert (c.p, c.q, c.r, c.s) == pytest.approx((11, -9, 10, 1), rel=1e-14)
    assert c.s + c.p * c.q == pytest.approx(-98, rel=1e-14)
    assert c.p - c.q == pytest.approx(2 * c.r)


def test_propagation_mp_example():
    p = LinearOCPParams(m=1, b=1, alpha=1)
    c = assemble_mp(p, 0.1)
    assert c.s + c.p * c.q == pytest.approx(-398, rel=1e-14)
    form = propagation_mp(p, 0.1)
    assert np.all(np.isfinite(form.transition))


def _params_at_gamma_dt(x, dt, m=1.0, b=1.0):
    # alpha giving gamma*dt == x
    g = x / dt
    return LinearOCPParams(m=m, b=b, alpha=1.0 / (m * m * g * g - b * b))


def test_propagation_singular_points():
    with pytest.raises(SingularPropagationError) as err:
        propagation_mp(_params_at_gamma_dt(2.0, 0.1), 0.1)
    assert err.value.gamma_dt == pytest.approx(2.0)
    with pytest.raises(SingularPropagationError):
        propagation_ie(_params_at_gamma_dt(1.0, 0.1), 0.1)


admissible = st.tuples(st.floats(0.1, 10), st.floats(0.01, 10), st.floats(1e-4, 10), st.floats(1e-3, 1.0))


@settings(max_examples=50, deadline=None)
@given(admissible)
def test_ie_eigenvalues_match_formula(draw):
    m, b, alpha, dt = draw
    p = LinearOCPParams(m=m, b=b, alpha=alpha)
    x = gamma(p) * dt
    if abs(x - 1) < 1e-3:
        return
    got = np.sort(np.linalg.eigvals(propagation_ie(p, dt).transition).real)
    want = np.sort([1 / (1 + x), 1 / (1 - x)])
    np.testing.assert_allclose(got, want, atol=1e-10 * max(1, np.max(np.abs(want))))


@settings(max_examples=50, deadline=None)
@given(admissible)
def test_mp_eigenvalues_match_formula(draw):
    m, b, alpha, dt = draw
    p = LinearOCPParams(m=m, b=b, alpha=alpha)
    x = gamma(p) * dt
    if abs(x - 2) < 1e-3:
        return
    got = np.sort(np.linalg.eigvals(propagation_mp(p, dt).transition).real)
    want = np.sort([(2 + x) / (2 - x), (2 - x) / (2 + x)])
    np.testing.assert_allclose(got, want, atol=1e-10 * max(1, np.max(np.abs(want))))


def test_propagate_identity_and_fixed_point():
    ident = PropagationForm(np.eye(2), np.zeros(2), "mp")
    z = propagate(ident, [3.0, -1.0], 5)
    assert np.all(z == [3.0, -1.0])
    form = propagation_mp(BASE, 0.1)
    zs = form.fixed_point()
    z = propagate(form, zs, 20)
    np.testing.assert_allclose(z, np.tile(zs, (21, 1)), rtol=1e-8)


def test_propagate_reports_blowup_step():
    form = PropagationForm(np.diag([1e100, 0.5]), np.zeros(2), "mp")
    with pytest.raises(BlowUpError) as err:
        propagate(form, [1.0, 1.0], 10)
    assert err.value.step == 4
    assert err.value.partial.shape == (4, 2)


@pytest.mark.parametrize("scheme", ["mp", "ie"])
@pytest.mark.parametrize("alpha", [1e-3, 1e-1, 1.0])
def test_bvp_satisfies_discrete_equations(scheme, alpha):
    p = BASE.with_alpha(alpha)
    tr = solve_bvp(p, make_grid(10, 100), scheme)
    assert tr.v[0] == p.v_o and tr.lam[-1] == 0.0
    res = discrete_residuals(tr, p, scheme)
    scale = max(np.max(np.abs(tr.v)), np.max(np.abs(tr.lam))) / tr.grid.dt
    assert np.max(np.abs(res[:, :2])) < 1e-10 * scale
    # control stationarity holds at every node and stage
    assert np.max(np.abs(res[:, 2])) < 1e-10 * np.max(np.abs(tr.u))
    np.testing.assert_allclose(tr.u, -tr.lam / (p.alpha * p.m), rtol=1e-15)


@pytest.mark.parametrize("scheme, prop", [("mp", propagation_mp), ("ie", propagation_ie)])
def test_bvp_consistent_with_recurrence(scheme, prop):
    tr = solve_bvp(BASE, make_grid(10, 100), scheme)
    form = prop(BASE, 0.1)
    z = np.column_stack([tr.v, tr.lam])
    pred = z[:-1] @ form.transition.T + form.affine
    scale = np.max(np.abs(z))
    assert np.max(np.abs(pred - z[1:])) < 1e-9 * scale


def test_bvp_stays_well_posed_when_propagation_is_unstable():
    # rho(A) = 4 here; forward shooting would lose ~0.6 digits per step
    p = BASE.with_alpha(1e-4)
    tr = solve_bvp(p, make_grid(10, 100), "mp")
    assert np.all(np.isfinite(tr.v))
    res = discrete_residuals(tr, p, "mp")
    assert np.max(np.abs(res[:, :2])) < 1e-10 * np.max(np.abs(tr.lam)) / 0.1


@pytest.mark.parametrize("scheme, order", [("mp", 2), ("ie", 1)])
def test_convergence_order(scheme, order):
    sol = derive_constants(BASE)
    errs = []
    for dt in (0.1, 0.05, 0.025, 0.0125):
        g = grid_from_dt(10, dt)
        v, _, _ = eval_analytic(sol, BASE, g.times)
        errs.append(np.max(np.abs(solve_bvp(BASE, g, scheme).v - v)))
    ratios = np.array(errs[:-1]) / np.array(errs[1:])
    np.testing.assert_allclose(ratios, 2 ** order, rtol=0.2)


def test_mp_conserves_quadratic_hamiltonian():
    # the mid-point rule keeps quadratic invariants of affine systems exactly,
    # so the nodal Hamiltonian only drifts by round-off
    cp = linear_control_problem(BASE)
    tr = solve_bvp(BASE, make_grid(10, 200), "mp")
    H = np.array([control_hamiltonian(tr.v[n], tr.u[n], tr.lam[n], cp) for n in range(201)])
    assert np.max(np.abs(H - H[0])) < 1e-11 * np.max(np.abs(H))

