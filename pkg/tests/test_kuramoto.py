from __future__ import annotations

import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from syncaction.graph import Network, PerturbationSpec, build_topology
from syncaction.kuramoto import (NumericBlowupError, PhaseState, amplitude_ratio,
                                 effective_coupling, integrate_step, kuramoto_derivative,
                                 order_parameter, order_parameter_series, path_sum_coupling,
                                 simulate)

from oracles import kuramoto_rhs_direct, path_sum_bruteforce, rk4_reference


def pair(x=1.0, omega=(0.0, 0.0)):
    return Network(np.array(omega, float), np.array([[0.0, x], [x, 0.0]]))


# ------------------------------------------------------------ derivative

def test_derivative_pair():
    d = kuramoto_derivative(PhaseState(np.array([0.0, math.pi / 2])), pair())
    np.testing.assert_allclose(d, [1.0, -1.0], atol=1e-15)


def test_derivative_equal_phases():
    net = build_topology("complete", 5, 3.0, ("normal", 0, 1), seed=1)
    d = kuramoto_derivative(np.full(5, 0.7), net)
    np.testing.assert_array_equal(d, net.omega)


def test_derivative_uncoupled():
    net = Network(np.array([0.5, -1.0, 2.0]), np.zeros((3, 3)))
    d = kuramoto_derivative(np.array([0.1, 2.0, 4.0]), net)
    np.testing.assert_array_equal(d, net.omega)


def test_derivative_dimension_mismatch():
    with pytest.raises(ValueError):
        kuramoto_derivative(np.zeros(3), pair())


@given(st.integers(1, 7).flatmap(lambda n: st.tuples(
    arrays(float, n, elements=st.floats(-10, 10)),
    arrays(float, n, elements=st.floats(-3, 3)),
    arrays(float, (n, n), elements=st.floats(0, 5)))))
def test_derivative_matches_direct_sum(args):
    theta, omega, X = args
    np.fill_diagonal(X, 0.0)
    got = kuramoto_derivative(theta, Network(omega, X))
    np.testing.assert_allclose(got, kuramoto_rhs_direct(theta, omega, X), atol=1e-9)


@given(st.integers(2, 7).flatmap(lambda n: st.tuples(
    arrays(float, n, elements=st.floats(-10, 10)),
    arrays(float, n, elements=st.floats(-3, 3)),
    arrays(float, (n, n), elements=st.floats(0, 5)))),
    st.floats(-20, 20))
def test_rotational_invariance(args, c):
    theta, omega, X = args
    np.fill_diagonal(X, 0.0)
    net = Network(omega, X)
    d0 = kuramoto_derivative(theta, net)
    d1 = kuramoto_derivative(theta + c, net)
    np.testing.assert_allclose(d1, d0, atol=1e-9)
    op0, op1 = order_parameter(theta), order_parameter(theta + c)
    assert op1.r == pytest.approx(op0.r, abs=1e-12)
    if op0.r > 1e-6:
        diff = (op1.psi - op0.psi - c) % (2 * math.pi)
        assert min(diff, 2 * math.pi - diff) < 1e-8


@given(st.integers(2, 8).flatmap(lambda n: st.tuples(
    arrays(float, n, elements=st.floats(-10, 10)),
    arrays(float, n, elements=st.floats(-3, 3)),
    arrays(float, (n, n), elements=st.floats(0, 5)))))
def test_symmetric_coupling_conserves_sum(args):
    theta, omega, X = args
    X = np.triu(X, 1)
    X = X + X.T
    d = kuramoto_derivative(theta, Network(omega, X))
    assert d.sum() == pytest.approx(omega.sum(), abs=1e-9)


# ------------------------------------------------------------ integration

def test_euler_linear_drift():
    net = Network(np.array([1.0, 2.0]), np.zeros((2, 2)))
    s = integrate_step(PhaseState(np.zeros(2)), net, 0.1, "euler")
    np.testing.assert_array_equal(s.theta, [0.1, 0.2])
    assert s.t == pytest.approx(0.1)


def test_integrate_step_rejects_bad_dt():
    with pytest.raises(ValueError):
        integrate_step(PhaseState(np.zeros(2)), pair(), 0.0)
    with pytest.raises(ValueError):
        integrate_step(PhaseState(np.zeros(2)), pair(), 0.1, "leapfrog")


def test_numeric_blowup():
    net = Network(np.zeros(3), np.full((3, 3), 1e308) * (1 - np.eye(3)))
    with pytest.raises(NumericBlowupError, match="dt"):
        integrate_step(PhaseState(np.array([0.0, math.pi / 2, math.pi / 2])), net, 0.1)
    with pytest.raises(NumericBlowupError):
        simulate(net, np.array([0.0, math.pi / 2, math.pi / 2]), 0.1, 1.0)


def test_mean_phase_conserved_pair():
    net = pair(1.3, (0.4, -0.4))
    run = simulate(net, np.array([0.9, -0.9]), 0.01, 20.0)
    assert np.max(np.abs(run.thetas.mean(axis=1))) < 1e-12


def test_rk4_step_matches_reference():
    net = build_topology("complete", 4, 1.5, ("normal", 0, 1), seed=5)
    th0 = np.array([0.1, 1.0, 2.5, -1.0])
    got = integrate_step(PhaseState(th0), net, 0.05, "rk4").theta
    np.testing.assert_allclose(got, rk4_reference(th0, net.omega, net.coupling, 0.05, 1), atol=1e-13)


def test_convergence_orders():
    net = build_topology("complete", 3, 2.0, ("normal", 0, 1), seed=2)
    th0 = np.array([0.0, 2.0, 4.0])
    T = 2.0
    ref = simulate(net, th0, 1e-4, T).thetas[-1]
    err = {}
    for method in ("euler", "rk4"):
        err[method] = [np.max(np.abs(simulate(net, th0, dt, T, method).thetas[-1] - ref))
                       for dt in (0.04, 0.02)]
    ratio_rk4 = err["rk4"][0] / err["rk4"][1]
    ratio_euler = err["euler"][0] / err["euler"][1]
    assert 12.0 < ratio_rk4 < 20.0
    assert 1.7 < ratio_euler < 2.3


def test_simulate_grid_and_record_every():
    net = pair(1.0, (0.2, -0.1))
    full = simulate(net, np.array([0.0, 1.0]), 0.01, 1.0)
    thin = simulate(net, np.array([0.0, 1.0]), 0.01, 1.0, record_every=10)
    assert full.thetas.shape == (101, 2) and thin.thetas.shape == (11, 2)
    np.testing.assert_array_equal(thin.thetas, full.thetas[::10])
    np.testing.assert_allclose(thin.times, np.linspace(0, 1, 11), atol=1e-12)
    np.testing.assert_array_equal(full.theta_dots[0], kuramoto_derivative(full.thetas[0], net))


def test_simulate_deterministic():
    net = build_topology("complete", 10, 4.0, ("normal", 0, 1), seed=0, mean_field=True)
    th0 = np.random.default_rng(0).uniform(0, 2 * np.pi, 10)
    a = simulate(net, th0, 0.01, 5.0)
    b = simulate(net, th0, 0.01, 5.0)
    assert a.thetas.tobytes() == b.thetas.tobytes()


def test_simulate_perturbation_timing():
    net = build_topology("complete", 4, 1.0, 0.0)
    spec = PerturbationSpec(0.123, "frequency-shift", node=1, delta_omega=1.0)
    run = simulate(net, np.zeros(4), 0.01, 1.0, perturbations=[spec])
    (applied, t_applied), = run.applied
    assert applied is spec
    assert 0.123 <= t_applied <= 0.123 + 0.01 + 1e-12
    first, new_net = run.segments[1]
    assert run.times[first - 1] == pytest.approx(t_applied)
    assert new_net.omega[1] == 1.0 and run.network_at(0).omega[1] == 0.0
    # node 1 drifts only after the shift
    assert run.thetas[first - 1, 1] == 0.0 and run.thetas[-1, 1] > 0.0
    late = PerturbationSpec(5.0, "node-silence", node=0)
    assert simulate(net, np.zeros(4), 0.01, 1.0, perturbations=[late]).applied == []


def test_uncoupled_no_sustained_growth():
    n = 100
    net = Network(np.linspace(-2, 2, n), np.zeros((n, n)))
    th0 = np.random.default_rng(3).uniform(0, 2 * np.pi, n)
    run = simulate(net, th0, 0.05, 200.0, record_every=4)
    r, _ = order_parameter_series(run.thetas)
    baseline = math.sqrt(math.pi) / (2 * math.sqrt(n))
    assert r[len(r) // 2:].mean() <= baseline + 3 / math.sqrt(n)


def test_strong_coupling_locks():
    net = build_topology("complete", 50, 10.0, ("normal", 0, 1), seed=0, mean_field=True)
    th0 = np.random.default_rng(0).uniform(0, 2 * np.pi, 50)
    run = simulate(net, th0, 0.01, 30.0, record_every=5)
    r, _ = order_parameter_series(run.thetas)
    assert r[len(r) // 2:].min() > 0.95


# ------------------------------------------------------------ order parameter

@pytest.mark.parametrize("c", [0.0, 1.3, -1.0, 7.0])
def test_order_parameter_coherent(c):
    op = order_parameter(np.full(6, c))
    assert op.r == pytest.approx(1.0, abs=1e-15)
    assert op.psi == pytest.approx(c % (2 * math.pi), abs=1e-12)
    assert 0 <= op.psi < 2 * math.pi


def test_order_parameter_quadrature():
    assert order_parameter(np.arange(4) * math.pi / 2).r == pytest.approx(0.0, abs=1e-12)


def test_order_parameter_pair():
    op = order_parameter(np.array([0.0, math.pi / 2]))
    assert op.r == pytest.approx(math.cos(math.pi / 4), abs=1e-12)
    assert op.psi == pytest.approx(math.pi / 4, abs=1e-12)


@given(arrays(float, st.integers(1, 20), elements=st.floats(-100, 100)))
def test_order_parameter_bounds(theta):
    op = order_parameter(theta)
    assert 0.0 <= op.r <= 1.0 and 0.0 <= op.psi < 2 * math.pi


# ------------------------------------------------------------ effective coupling

def path3():
    X = np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], dtype=float)
    return Network(np.zeros(3), X)


def test_effective_coupling_examples():
    net = build_topology("ring", 6, 1.5, 0.0, k=2)
    assert effective_coupling(net, 2, contributions=np.ones(6)) == pytest.approx(net.strengths()[2])
    iso = Network(np.zeros(3), np.array([[0, 0, 0], [1, 0, 0], [1, 0, 0]], float))
    assert effective_coupling(iso, 0, contributions=np.ones(3)) == 0.0
    assert effective_coupling(path3(), 1, contributions=np.array([0.5, 0.25, 0.125])) == 0.625


def test_effective_coupling_default_profile():
    net = path3()
    theta = np.array([0.3, 1.0, 2.0])
    got = effective_coupling(net, 1, j=1, theta=theta)
    assert got == pytest.approx(math.sin(0.3 - 1.0) + math.sin(2.0 - 1.0))
    with pytest.raises(IndexError):
        effective_coupling(net, 5, contributions=np.ones(3))
    with pytest.raises(ValueError):
        effective_coupling(net, 1)


# ------------------------------------------------------------ path sums

def test_path_sum_examples():
    edge = Network(np.zeros(2), np.array([[0, 0.5], [0.5, 0]]))
    assert path_sum_coupling(edge, 0, 1, max_len=1) == 0.5
    tri = build_topology("complete", 3, 1.0, 0.0)
    assert path_sum_coupling(tri, 0, 1, max_len=2) == 2.0
    disc = Network(np.zeros(3), np.array([[0, 1, 0], [1, 0, 0], [0, 0, 0]], float))
    assert path_sum_coupling(disc, 0, 2) == 0.0


def test_path_sum_same_node_warns():
    with pytest.warns(RuntimeWarning):
        assert path_sum_coupling(build_topology("complete", 3, 1.0, 0.0), 1, 1) == 0.0


def test_path_sum_direction():
    # 0 -> 1 exists (1 listens to 0) but not 1 -> 0
    X = np.zeros((2, 2))
    X[1, 0] = 0.7
    net = Network(np.zeros(2), X)
    assert path_sum_coupling(net, 0, 1) == 0.7
    assert path_sum_coupling(net, 1, 0) == 0.0


def test_path_sum_phase_factor_hook():
    tri = build_topology("complete", 3, 1.0, 0.0)
    got = path_sum_coupling(tri, 0, 1, max_len=2, phase_factor=lambda p: 0.5 if len(p) > 2 else 1.0)
    assert got == 1.5


@given(st.integers(2, 6).flatmap(lambda n: st.tuples(
    st.just(n), arrays(float, (n, n), elements=st.sampled_from([0.0, 0.0, 0.3, 1.0, 1.7])),
    st.integers(0, n - 1), st.integers(0, n - 1), st.integers(1, 5))))
def test_path_sum_matches_bruteforce(args):
    n, X, a, b, max_len = args
    np.fill_diagonal(X, 0.0)
    if a == b:
        return
    got = path_sum_coupling(Network(np.zeros(n), X), a, b, max_len)
    assert got == pytest.approx(path_sum_bruteforce(X, a, b, max_len), abs=1e-12)


# ------------------------------------------------------------ amplitude ratio

def test_amplitude_ratio_frozen():
    net = build_topology("complete", 3, 1.0, 0.0)
    assert amplitude_ratio(net, np.full((50, 3), 0.4), 0, 1) == 0.0


def test_amplitude_ratio_sinusoid():
    t = np.linspace(0, 2 * np.pi, 1000, endpoint=False)
    net = Network(np.ones(2), np.zeros((2, 2)))
    thetas = np.column_stack([t, t])
    assert amplitude_ratio(net, thetas, 0, 1, strength=1.0) == pytest.approx(1 / math.sqrt(2), abs=1e-12)
    with pytest.raises(ZeroDivisionError):
        amplitude_ratio(net, thetas, 0, 1)


def test_amplitude_ratio_scaling():
    net = build_topology("ring", 5, 1.0, ("normal", 0, 1), seed=1, k=1)
    run = simulate(net, np.random.default_rng(1).uniform(0, 6, 5), 0.01, 5.0)
    a = amplitude_ratio(net, run.thetas, 0, 2)
    b = amplitude_ratio(net.replace(coupling=2 * net.coupling), run.thetas, 0, 2)
    assert b == pytest.approx(a / 2, rel=1e-14)
