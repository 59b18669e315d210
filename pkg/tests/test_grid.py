import numpy as np
import pytest
from hypothesis import given, strategies as st

from ocpstab import ConfigurationError, ContractViolation, Scheme, interpolated_node, make_grid
from ocpstab.grid import ScalarTrajectory, VectorTrajectory, grid_from_dt


@pytest.mark.parametrize("T, N, dt", [(10, 100, 0.1), (1, 2, 0.5), (4, 20, 0.2)])
def test_make_grid_step(T, N, dt):
    g = make_grid(T, N)
    assert g.dt == pytest.approx(dt, rel=1e-15)
    assert g.times[-1] == T
    assert len(g.times) == N + 1


@pytest.mark.parametrize("T, N", [(0, 10), (-1, 10), (1, 1), (1, 0), (1, 2.5), (float("nan"), 3)])
def test_make_grid_rejects(T, N):
    with pytest.raises(ConfigurationError):
        make_grid(T, N)


def test_grid_nodes_reproducible():
    a, b = make_grid(10, 100).times, make_grid(10, 100).times
    assert np.array_equal(a, b)


def test_grid_from_dt_rounding_rule():
    assert grid_from_dt(10, 0.1).N == 100
    assert grid_from_dt(4, 0.2).N == 20
    with pytest.raises(ConfigurationError):
        grid_from_dt(10, 0.3)
    with pytest.raises(ConfigurationError):
        grid_from_dt(10, -0.1)


@given(T=st.floats(1e-3, 1e4), N=st.integers(2, 5000))
def test_grid_invariants(T, N):
    g = make_grid(T, N)
    t = g.times
    assert np.all(np.diff(t) > 0)
    assert abs(t[-1] - T) <= 1e-12 * T
    assert abs(g.N * g.dt - T) <= 1e-12 * T


def test_scheme_constructors():
    assert Scheme.implicit_euler().tau == 0.0
    assert Scheme.midpoint().tau == 0.5
    assert Scheme.parse("MP").tau == 0.5
    assert Scheme.parse("ie").tau == 0.0
    assert Scheme.parse(0.25).tau == 0.25
    for bad in (-0.1, 0.6, "explicit"):
        with pytest.raises(ConfigurationError):
            Scheme.parse(bad)


@pytest.mark.parametrize("seq, n, tau, expected", [
    ([1, 3], 1, 0.5, 2.0),
    ([1, 3], 1, 0.0, 3.0),
    ([0, 4, 8], 2, 0.25, 7.0),
])
def test_interpolated_node(seq, n, tau, expected):
    assert interpolated_node(seq, n, tau) == expected


@pytest.mark.parametrize("n", [0, 2, -1])
def test_interpolated_node_out_of_range(n):
    with pytest.raises(ContractViolation):
        interpolated_node([1.0, 2.0], n, 0.5)


@given(st.floats(-1e6, 1e6), st.floats(-1e6, 1e6))
def test_interpolated_node_endpoints(x0, x1):
    assert interpolated_node([x0, x1], 1, 0.0) == x1
    assert interpolated_node([x0, x1], 1, 0.5) == 0.5 * (x0 + x1)


def test_interpolated_node_on_vectors():
    seq = np.array([[0.0, 2.0], [4.0, 6.0]])
    np.testing.assert_array_equal(interpolated_node(seq, 1, 0.5), [2.0, 4.0])


def test_trajectories_are_immutable_and_checked():
    g = make_grid(1, 2)
    tr = ScalarTrajectory([0, 1, 2], [1, 1, 0], [3, 3, 3], g)
    with pytest.raises(ValueError):
        tr.v[0] = 5.0
    with pytest.raises(ContractViolation):
        ScalarTrajectory([0, 1], [1, 1, 0], [3, 3, 3], g)
    vt = VectorTrajectory(np.zeros((3, 2)), np.ones((3, 2)), np.zeros(3), g)
    assert (vt.n_x, vt.n_u) == (2, 1)
    back = VectorTrajectory.from_flat(vt.flat(), g, 2, 1)
    np.testing.assert_array_equal(back.lam, vt.lam)
    with pytest.raises(ContractViolation):
        VectorTrajectory(np.zeros((3, 2)), np.ones((3, 3)), np.zeros(3), g)
