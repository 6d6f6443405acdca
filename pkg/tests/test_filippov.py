import numpy as np
import pytest

from slidim.errors import (DegenerateTangency, NoConvergence, NoHit,
                           NonUniqueForward, OffManifold)
from slidim.filippov import (EscapePolicy, FoldBoundary, Mode, Region,
                             SectionStop, TerminalEvent, TimeStop,
                             classify_region, classify_tangency,
                             filippov_trajectory, find_pseudo_equilibrium,
                             flow_sliding, flow_to_manifold, lie_derivative,
                             lie_pair, make_system, second_lie_derivative,
                             sliding_field)
from slidim.expressions import parse_field


def canonical(al=0.3, be=1.0):
    """Linear focus on the sliding plane with fold line x = 1."""
    return make_system("al*x - be*y, be*x + al*y, x - 1", "0, 0, 1", "z",
                       params={"al": al, "be": be})


def test_lie_derivative_trivials():
    s = make_system("0, 0, 1", "1, 2, 3", "z")
    assert lie_derivative(s.X, s.g, [4.0, 5.0, 6.0]) == 1.0
    s2 = make_system("1, 2, 3", "0, 0, 1", "x + y + z")
    assert lie_derivative(s2.X, s2.g, [0.3, 0.4, 0.5]) == 6.0


def test_lie_derivative_vanishes_at_fold():
    s = canonical()
    assert abs(lie_derivative(s.X, s.g, [1.0, 0.7, 0.0])) < 1e-12


def test_classify_region_cases():
    s = canonical()
    assert classify_region(s, [0.0, 0.0, 0.0]) == Region.SLIDING
    assert classify_region(s, [2.0, 0.0, 0.0]) == Region.CROSSING
    assert classify_region(s, [1.0, 0.2, 0.0]) == Region.TANGENCY_X
    with pytest.raises(OffManifold):
        classify_region(s, [0.0, 0.0, 0.5])


def test_classify_region_scale_invariant():
    plain = canonical()
    scaled = make_system("3*(al*x - be*y), 3*(be*x + al*y), 3*(x - 1)",
                         "0, 0, 5", "z", params={"al": 0.3, "be": 1.0})
    for pt in ([0.5, -0.2, 0.0], [1.7, 0.1, 0.0], [1.0, 0.4, 0.0]):
        assert classify_region(plain, pt) == classify_region(scaled, pt)


def test_escaping_region_with_downward_y():
    s = make_system("al*x - be*y, be*x + al*y, x - 1", "0, 0, -1", "z",
                    params={"al": 0.3, "be": 1.0})
    assert classify_region(s, [2.0, 0.0, 0.0]) == Region.ESCAPING
    assert classify_region(s, [0.0, 0.0, 0.0]) == Region.CROSSING


def test_sliding_field_closed_form():
    # g=z, Y=(0,0,1), X=(a,b,c) with c<0: sliding field (a,b,0)/(1-c)
    s = make_system("0.7, -0.4, -2", "0, 0, 1", "z")
    zt = sliding_field(s, np.array([0.0, 0.0, 0.0]))
    assert np.allclose(zt, np.array([0.7, -0.4, 0.0]) / 3.0, atol=1e-15)


def test_sliding_field_balanced_combination():
    # Xg = -Yg != 0 forces the midpoint combination (X + Y)/2
    s = make_system("2, 3, -1", "5, -1, 1", "z")
    zt = sliding_field(s, np.zeros(3))
    assert np.allclose(zt, [3.5, 1.0, 0.0], atol=1e-15)


def test_sliding_field_tangency_invariant():
    s = make_system("y + 0.2*x, -x + z, -(1 + x^2)", "sin(x), cos(y), 2 + z",
                    "z - 0.1*x^2 + 0.05*y")
    rng = np.random.default_rng(3)
    for _ in range(20):
        x, y = rng.uniform(-1, 1, 2)
        z = 0.1 * x ** 2 - 0.05 * y
        u = np.array([x, y, z])
        if classify_region(s, u) not in (Region.SLIDING, Region.ESCAPING):
            continue
        zt = sliding_field(s, u)
        _, grad = s.g.value_and_gradient(u)
        rel = abs(np.dot(zt, grad)) / (np.linalg.norm(zt) * np.linalg.norm(grad))
        assert rel < 1e-12


def test_classify_tangency_visible_and_invisible():
    vis = make_system("1, 0, x", "0, 0, 1", "z")
    lab = classify_tangency(vis, [0.0, 0.5, 0.0])
    assert lab.field == "X" and lab.visible and lab.regular and lab.boundary == "s"
    assert lab.second_lie == pytest.approx(1.0)
    inv = make_system("-1, 0, x", "0, 0, 1", "z")
    lab = classify_tangency(inv, [0.0, 0.5, 0.0])
    assert not lab.visible
    assert lab.second_lie == pytest.approx(-1.0)


def test_classify_tangency_degenerate():
    s = make_system("0, 1, x", "0, 0, 1", "z")  # X^2g = 0 on the fold
    with pytest.raises(DegenerateTangency):
        classify_tangency(s, [0.0, 0.0, 0.0])


def test_second_lie_matches_finite_differences():
    s = make_system("y, -x + 0.3*z, x - 1 + 0.2*(z*exp(-z))", "0, 0, 1",
                    "z - 0.1*x^2")
    u = np.array([0.4, -0.3, 0.1 * 0.16])
    val = float(second_lie_derivative(s.X, s.g, u))
    h = 1e-6

    def xg(pt):
        return float(lie_derivative(s.X, s.g, pt))

    grad_fd = np.array([(xg(u + h * e) - xg(u - h * e)) / (2 * h)
                        for e in np.eye(3)])
    want = float(np.dot(s.X(u), grad_fd))
    assert val == pytest.approx(want, rel=1e-6)


def test_pseudo_equilibrium_focus():
    s = canonical(al=0.25, be=1.0)
    pe = find_pseudo_equilibrium(s, [0.05, -0.04, 0.0])
    assert np.linalg.norm(pe.point) < 1e-9
    # in-chart eigenvalues are (al +- i be)/2 for this system
    assert pe.eigenvalues[0].real == pytest.approx(0.125, abs=1e-5)
    assert abs(pe.eigenvalues[0].imag) == pytest.approx(0.5, abs=1e-5)
    assert pe.is_focus and pe.is_pseudo_saddle_focus


def test_pseudo_equilibrium_node_rejected():
    s = make_system("x, 2*y, x - 1", "0, 0, 1", "z")
    pe = find_pseudo_equilibrium(s, [0.03, 0.02, 0.0])
    assert not pe.is_focus
    assert not pe.is_pseudo_saddle_focus


def test_pseudo_equilibrium_no_convergence():
    s = make_system("1, 1, x - 1", "0, 0, 1", "z")  # sliding field never vanishes
    with pytest.raises(NoConvergence):
        find_pseudo_equilibrium(s, [0.0, 0.0, 0.0])


def test_pseudo_equilibrium_center_not_hyperbolic():
    from slidim.errors import NotHyperbolic
    s = make_system("-y, x, x - 1", "0, 0, 1", "z")  # pure rotation on M
    with pytest.raises(NotHyperbolic):
        find_pseudo_equilibrium(s, [0.02, -0.01, 0.0])


def test_lie_derivative_nonfinite():
    from slidim.errors import NonFinite
    s = make_system("exp(x), 0, 1", "0, 0, 1", "z")
    with pytest.raises(NonFinite):
        lie_derivative(s.X, s.g, [1e4, 0.0, 0.0])


def test_flow_to_manifold_linear_descent():
    s = make_system("0, 0, 1", "0, 0, -1", "z")
    seg = flow_to_manifold(s.Y, s.g, [0.0, 0.0, 1.0], 10.0, mode=Mode.FLOW_Y)
    assert seg.terminal_event == TerminalEvent.MANIFOLD_HIT
    assert seg.t_end == pytest.approx(1.0, abs=1e-11)
    assert np.linalg.norm(seg.u_end) < 1e-11


def test_flow_to_manifold_matches_matrix_exponential():
    # affine field u' = A u + b with closed-form flow as the oracle
    a_mat = np.array([[0.0, 1.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 0.0, -0.5]])
    b = np.array([0.0, 0.0, -0.2])
    sys_ = make_system("y, -x, -0.5*z - 0.2", "0, 0, 1", "z")
    u0 = np.array([0.3, -0.2, 1.0])

    evals, vecs = np.linalg.eig(a_mat)
    shift = np.linalg.solve(a_mat, b)
    coef = np.linalg.solve(vecs, u0 + shift)

    def exact(t):
        return np.real(vecs @ (coef * np.exp(evals * t))) - shift

    lo, hi = 0.0, 10.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if exact(mid)[2] > 0:
            lo = mid
        else:
            hi = mid
    t_star = 0.5 * (lo + hi)

    seg = flow_to_manifold(sys_.X, sys_.g, u0, 10.0)
    assert abs(seg.t_end - t_star) < 1e-9
    assert np.linalg.norm(seg.u_end - exact(t_star)) < 1e-9


def test_flow_from_visible_fold_departs():
    s = canonical()
    seg = flow_to_manifold(s.X, s.g, [1.0, 0.0, 0.0], 10.0)
    assert seg.t_end > 1e-4  # strictly away from the trivial root


def test_flow_to_manifold_no_hit():
    s = make_system("0, 0, 1", "0, 0, 1", "z")
    with pytest.raises(NoHit):
        flow_to_manifold(s.X, s.g, [0.0, 0.0, 1.0], 5.0)


def test_flow_sliding_backward_contracts():
    s = canonical()
    seg = flow_sliding(s, [0.9, 0.0, 0.0], TimeStop(20.0), direction="backward",
                       winding_center=[0.0, 0.0, 0.0])
    d = [np.linalg.norm(u) for _, u in seg.samples]
    assert d[-1] < 0.05 * d[0]
    assert max(abs(float(s.g(u))) for _, u in seg.samples) <= s.tol.manifold


def test_flow_sliding_reaches_fold():
    s = canonical()
    seg = flow_sliding(s, [0.05, 0.0, 0.0], FoldBoundary())
    assert seg.terminal_event == TerminalEvent.FOLD_HIT
    assert seg.u_end[0] == pytest.approx(1.0, abs=1e-9)


def test_flow_sliding_time_reversal():
    s = canonical()
    start = np.array([0.3, 0.1, 0.0])
    fwd = flow_sliding(s, start, TimeStop(5.0))
    back = flow_sliding(s, fwd.u_end, TimeStop(5.0), direction="backward")
    assert np.linalg.norm(back.u_end - start) < 1e-8


def test_flow_sliding_zero_length_on_section():
    s = canonical()
    seg = flow_sliding(s, [0.5, 0.2, 0.0],
                       SectionStop(lambda pts: pts[:, 0] - 0.5))
    assert len(seg.samples) == 1
    assert seg.terminal_event == TerminalEvent.SECTION_HIT


def test_trajectory_flight_then_slide():
    s = canonical()
    segs = filippov_trajectory(s, [0.2, 0.1, 0.5], 3.0)
    assert [g.mode for g in segs] == [Mode.FLOW_X, Mode.FLOW_SLIDING]
    assert segs[0].terminal_event == TerminalEvent.MANIFOLD_HIT
    times = [t for g in segs for t, _ in g.samples]
    assert all(b >= a for a, b in zip(times, times[1:]))


def test_trajectory_crossing_concatenates():
    s = canonical()
    segs = filippov_trajectory(s, [1.5, 0.0, -0.2], 0.5)
    assert [g.mode for g in segs] == [Mode.FLOW_Y, Mode.FLOW_X]
    assert Mode.FLOW_SLIDING not in {g.mode for g in segs}


def test_trajectory_escaping_needs_policy():
    s = make_system("al*x - be*y, be*x + al*y, x - 1", "0, 0, -1", "z",
                    params={"al": 0.3, "be": 1.0})
    with pytest.raises(NonUniqueForward):
        filippov_trajectory(s, [2.0, 0.0, 0.0], 1.0)
    segs = filippov_trajectory(s, [2.0, 0.0, 0.0], 0.5,
                               escaping_policy=EscapePolicy.FOLLOW_X)
    assert segs[0].mode == Mode.FLOW_X


def test_trajectory_slide_exits_through_visible_fold():
    s = canonical()
    segs = filippov_trajectory(s, [0.3, 0.0, 0.0], 40.0)
    modes = [g.mode for g in segs]
    assert modes[0] == Mode.FLOW_SLIDING
    assert Mode.FLOW_X in modes[1:]
