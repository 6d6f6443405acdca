import numpy as np
import pytest

from slidim import odeint
from slidim.odeint import EventSpec, integrate_batch


def descent(u):
    return np.broadcast_to(np.array([0.0, 0.0, -1.0]), u.shape)


def harmonic(u):
    return np.stack([u[:, 1], -u[:, 0], np.zeros(u.shape[0])], axis=1)


def test_event_localized_below_tolerance():
    ev = EventSpec(lambda u: u[:, 2])
    res = integrate_batch(descent, np.array([[0.0, 0.0, 1.0]]), 10.0, [ev])
    assert res.status[0] == odeint.EVENT
    assert abs(res.t[0] - 1.0) < 1e-11
    assert abs(res.u[0, 2]) < 1e-12


def test_harmonic_accuracy_and_winding():
    # clockwise rotation: winding accumulates one negative turn
    res = integrate_batch(harmonic, np.array([[1.0, 0.0, 0.0]]), 2 * np.pi,
                          winding=(np.zeros(3), np.eye(3)[0], np.eye(3)[1]))
    assert res.status[0] == odeint.TIMEOUT
    assert np.linalg.norm(res.u[0] - [1, 0, 0]) < 5e-10
    assert res.winding[0] / (2 * np.pi) == pytest.approx(-1.0, abs=1e-9)


def test_departure_excludes_trivial_root():
    # z(t) = t - t^2/2 starts on the event surface and returns at t = 2
    def f(u):
        return np.stack([u[:, 1], -np.ones(u.shape[0]), np.zeros(u.shape[0])], axis=1)

    ev = EventSpec(lambda u: u[:, 0])
    res = integrate_batch(f, np.array([[0.0, 1.0, 0.0]]), 10.0, [ev])
    assert res.status[0] == odeint.EVENT
    assert res.t[0] == pytest.approx(2.0, abs=1e-11)


def test_timeout_and_domain_exit():
    res = integrate_batch(descent, np.array([[0.0, 0.0, 1.0]]), 0.5, [])
    assert res.status[0] == odeint.TIMEOUT
    box = (np.array([-1.0, -1.0, 0.2]), np.array([1.0, 1.0, 2.0]))
    res = integrate_batch(descent, np.array([[0.0, 0.0, 1.0]]), 10.0, [], domain=box)
    assert res.status[0] == odeint.DOMAIN_EXIT


def test_batch_matches_scalar_runs():
    # rows evolve independently; only BLAS reduction order may differ by
    # batch shape, so agreement is to the ulp level
    ev = EventSpec(lambda u: u[:, 2])
    starts = np.array([[0.0, 0.0, 1.0], [0.2, -0.1, 0.5], [1.0, 2.0, 2.5]])
    batch = integrate_batch(descent, starts, 10.0, [ev])
    for k, u0 in enumerate(starts):
        one = integrate_batch(descent, u0[None, :], 10.0, [ev])
        assert one.steps[0] == batch.steps[k]
        assert abs(one.t[0] - batch.t[k]) < 1e-13
        assert np.abs(one.u[0] - batch.u[k]).max() < 1e-13


def test_same_shape_runs_are_bit_identical():
    ev = EventSpec(lambda u: u[:, 2])
    starts = np.array([[0.0, 0.0, 1.0], [0.2, -0.1, 0.5]])
    a = integrate_batch(descent, starts, 10.0, [ev])
    b = integrate_batch(descent, starts, 10.0, [ev])
    assert np.array_equal(a.t, b.t)
    assert np.array_equal(a.u, b.u)


def test_row_args_carry_per_trajectory_constants():
    def f(u, args):
        out = np.zeros_like(u)
        out[:, 2] = -args[:, 0]
        return out

    ev = EventSpec(lambda u: u[:, 2])
    rates = np.array([[1.0], [2.0], [4.0]])
    res = integrate_batch(f, np.tile([0.0, 0.0, 1.0], (3, 1)), 10.0, [ev],
                          row_args=rates)
    assert np.allclose(res.t, [1.0, 0.5, 0.25], atol=1e-10)


def test_event_direction_filter():
    # oscillator crosses x = 0 downward first when started at the top
    ev_up = EventSpec(lambda u: u[:, 0], direction=+1)
    ev_dn = EventSpec(lambda u: u[:, 0], direction=-1)
    u0 = np.array([[1.0, 0.0, 0.0]])
    up = integrate_batch(harmonic, u0, 10.0, [ev_up])
    dn = integrate_batch(harmonic, u0, 10.0, [ev_dn])
    assert dn.t[0] < up.t[0]
    assert dn.t[0] == pytest.approx(np.pi / 2, abs=1e-9)
    assert up.t[0] == pytest.approx(3 * np.pi / 2, abs=1e-9)


def test_records_monotone_times():
    res = integrate_batch(harmonic, np.array([[1.0, 0.0, 0.0]]), 3.0, [],
                          record=True)
    times = [t for t, _ in res.samples[0]]
    assert all(b > a for a, b in zip(times, times[1:]))
