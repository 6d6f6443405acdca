import numpy as np
import pytest

from slidim import cifs
from slidim.errors import (CertificateFailure, ConditionViolated,
                           DegenerateSystem, EquivalenceFailure,
                           InsufficientMaps, NoRootInUnitInterval,
                           ParameterInfeasible, TailDiverges)

LN2_LN3 = np.log(2) / np.log(3)
LN3_LN4 = np.log(3) / np.log(4)


# --- Moran equations ------------------------------------------------------------


@pytest.mark.parametrize("k,c,want", [
    (2, 1 / 3, LN2_LN3),
    (3, 1 / 4, LN3_LN4),
    (5, 1 / 5, 1.0),
])
def test_moran_equal_ratio_closed_forms(k, c, want):
    s, t = cifs.moran_bounds(cifs.equal_ratio_system(k, c))
    assert s == pytest.approx(want, abs=1e-10)
    assert t == pytest.approx(want, abs=1e-10)


def test_moran_single_map_is_zero():
    sys_ = cifs.IfsSystem([cifs._affine_map(-0.5, 0.0, "only")])
    assert cifs.moran_bounds(sys_) == (0.0, 0.0)


def test_moran_residual_tightness():
    sys_ = cifs.make_geometric_model(0.5, 3.0, 1, 6)
    s, t = cifs.moran_bounds(sys_)
    bs = np.array([m.b for m in sys_.maps])
    assert abs(np.sum(bs ** s) - 1) < 1e-12
    assert abs(np.sum(np.array([m.c for m in sys_.maps]) ** t) - 1) < 1e-12


def test_zero_lower_bound_rejected():
    with pytest.raises(DegenerateSystem):
        cifs.ContractionMap(lambda x: 0.5 * x, (-0.5, 0.5), 0.0, 0.5, tag="bad")


def test_dimension_positive_witness():
    out = cifs.dimension_positive(cifs.middle_thirds())
    assert out["lower_bound"] == pytest.approx(LN2_LN3, abs=1e-12)
    assert not out["capped"]


def test_dimension_positive_capped_near_one():
    # claimed lower bounds near 1 push the two-map formula above the
    # ambient dimension; the report caps at 1 and keeps the raw value
    def mk(lo, hi, tag):
        base = cifs._affine_map(lo, hi, tag)
        return cifs.ContractionMap(base.eval, base.image, 0.9, 0.95,
                                   deriv=base.deriv, tag=tag)
    out = cifs.dimension_positive(cifs.IfsSystem([mk(-1.0, -0.1, "a"),
                                                  mk(0.1, 1.0, "b")]))
    assert out["capped"] and out["lower_bound"] == 1.0 and out["raw"] > 1


def test_dimension_positive_needs_two_maps():
    with pytest.raises(InsufficientMaps):
        cifs.dimension_positive(cifs.IfsSystem([cifs._affine_map(-0.5, 0.0, "x")]))


def test_dimension_sup_monotone_convergence():
    sys_ = cifs.make_geometric_model(1.0, 4.0, 1, 12)
    sched = cifs.dimension_sup(sys_)
    lowers = [s for _, s in sched]
    assert all(b >= a - 1e-13 for a, b in zip(lowers, lowers[1:]))
    assert abs(lowers[-1] - cifs.pressure_root(sys_)) < 1e-4


def test_dimension_sup_single_entry():
    sys_ = cifs.middle_thirds()
    sched = cifs.dimension_sup(sys_, schedule=[1])
    assert sched == [(1, 0.0)]


# --- pressure -------------------------------------------------------------------


def test_pressure_root_two_map_equals_moran():
    sys_ = cifs.equal_ratio_system(2, 1 / 3)
    assert cifs.pressure_root(sys_) == pytest.approx(LN2_LN3, abs=1e-10)


def test_pressure_root_geometric_closed_form():
    sys_ = cifs.make_geometric_model(1.0, 4.0, 1, 10)
    assert cifs.pressure_root(sys_) == pytest.approx(LN3_LN4, abs=1e-10)


def test_pressure_strictly_decreasing_and_unbounded():
    sys_ = cifs.make_geometric_model(1.0, 4.0, 1, 6)
    ts = np.linspace(0.05, 1.0, 12)
    vals = [cifs.pressure(sys_, t) for t in ts]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert cifs.pressure(sys_, 1e-4) > 1e3  # tail makes P blow up at 0+


def test_pressure_no_root_when_p1_too_big():
    sys_ = cifs.equal_ratio_system(5, 0.2)  # P(1) = 1 exactly
    with pytest.raises(NoRootInUnitInterval):
        cifs.pressure_root(sys_)


def test_tail_diverges():
    tail = cifs.TailModel(a=1.0, lam=0.9, i_start=2)
    with pytest.raises(TailDiverges):
        tail.pressure(0.5)


def test_geometric_tail_matches_series():
    tail = cifs.TailModel(a=4.0, lam=4.0, i_start=5)  # maps 4^-i for i >= 5
    t = 0.63
    direct = 2 * sum((4.0 ** -i) ** t for i in range(5, 400))
    assert tail.pressure(t) == pytest.approx(direct, rel=1e-12)


# --- covers, scaffolds, words -----------------------------------------------------


def test_middle_thirds_cover_arithmetic():
    mt = cifs.middle_thirds()
    c1 = cifs.attractor_iterate(mt, 1)
    assert np.allclose(c1.intervals, [[-1, -1 / 3], [1 / 3, 1]])
    c2 = cifs.attractor_iterate(mt, 2)
    widths = c2.intervals[:, 1] - c2.intervals[:, 0]
    assert len(widths) == 4 and np.allclose(widths, 2 / 9)
    for k in range(1, 9):
        cov = cifs.attractor_iterate(mt, k)
        assert cov.total_length == pytest.approx((2 / 3) ** k * 2, rel=1e-12)


def test_cover_nesting():
    sys_ = cifs.make_geometric_model(0.5, 3.0, 1, 3)
    parent = cifs.attractor_iterate(sys_, 3)
    child = cifs.attractor_iterate(sys_, 4)
    mids = 0.5 * (child.intervals[:, 0] + child.intervals[:, 1])
    idx = np.searchsorted(parent.intervals[:, 0], mids, side="right") - 1
    assert np.all(mids <= parent.intervals[idx, 1])
    assert np.all(mids >= parent.intervals[idx, 0])


def test_cover_self_similarity_recursion():
    mt = cifs.middle_thirds()
    lvl3 = cifs.attractor_iterate(mt, 3)
    lvl2 = cifs.attractor_iterate(mt, 2)
    rebuilt = np.concatenate([cifs._map_interval_batch(m, lvl2.intervals)
                              for m in mt.maps])
    rebuilt = rebuilt[np.argsort(rebuilt[:, 0])]
    assert np.abs(rebuilt - lvl3.intervals).max() < 1e-14


def test_word_route_matches_recursion():
    for sys_ in (cifs.middle_thirds(), cifs.make_geometric_model(0.5, 3.0, 1, 2)):
        for k in (1, 2, 3, 4):
            a = cifs.word_intervals(sys_, k)
            b = cifs.attractor_iterate(sys_, k).intervals
            assert np.abs(a - b).max() < 1e-14


def test_cover_budget_overflow_flag():
    sys_ = cifs.equal_ratio_system(10, 0.05)
    cov = cifs.attractor_iterate(sys_, 9, budget=10 ** 4)
    assert cov.truncated and cov.level < 9


def test_scaffold_levels():
    mt = cifs.middle_thirds()
    s0 = cifs.closure_scaffold(mt, 0.0, 0)
    assert np.array_equal(s0.points, [0.0])
    s1 = cifs.closure_scaffold(mt, 0.0, 1)
    assert np.allclose(sorted(s1.points), [-2 / 3, 0.0, 2 / 3])
    assert sorted(s1.word_lengths.tolist()) == [0, 1, 1]


def test_scaffold_points_inside_ancestor_covers():
    sys_ = cifs.make_geometric_model(1.0, 4.0, 1, 2)
    scaffold = cifs.closure_scaffold(sys_, 0.0, 5)
    covers = {k: cifs.attractor_iterate(sys_, k) for k in range(1, 6)}
    for pt, wl in zip(scaffold.points, scaffold.word_lengths):
        for j in range(1, int(wl) + 1):
            assert covers[j].contains(np.array([pt]))[0]


# --- conditions ----------------------------------------------------------------------


def test_conditions_pass_on_middle_thirds():
    rep = cifs.check_conditions(cifs.middle_thirds())
    assert rep.passed
    assert rep.details["C5"]["density_constant"] == 0.5
    assert rep.details["C6"]["constant"] == 0.0  # affine maps


def test_conditions_overlap_violates_c3():
    maps = [cifs._affine_map(-1.0, 0.1, "a"), cifs._affine_map(0.0, 1.0, "b")]
    with pytest.raises(ConditionViolated) as err:
        cifs.check_conditions(cifs.IfsSystem(maps, validate=False))
    assert err.value.condition == "C3"


def test_conditions_missing_derivative_violates_c4():
    m = cifs._affine_map(-0.5, 0.0, "a")
    bare = cifs.ContractionMap(m.eval, m.image, m.b, m.c, deriv=None, tag="a")
    with pytest.raises(ConditionViolated) as err:
        cifs.check_conditions(cifs.IfsSystem([bare]))
    assert err.value.condition == "C4"


# --- forward/backward equivalence -------------------------------------------------------


def test_fixture_equivalence_exact():
    mt = cifs.middle_thirds()
    pi = cifs.piecewise_expanding(mt)
    rep = cifs.verify_forward_backward(pi, mt, 3, n_points=4000)
    assert rep.agreement == 1.0
    assert rep.n_used > 3000


def test_word_image_point_survives_k_steps():
    mt = cifs.middle_thirds()
    pi = cifs.piecewise_expanding(mt)
    x = 0.1234
    for m in (mt.maps[0], mt.maps[1], mt.maps[0]):
        x = float(m.eval(np.array([x]))[0])
    pt = np.array([x])
    for _ in range(3):
        assert cifs.attractor_iterate(mt, 1).contains(pt)[0]
        pt, ok = pi(pt)
        assert ok.all()


def test_gap_point_fails_immediately():
    mt = cifs.middle_thirds()
    assert not cifs.attractor_iterate(mt, 1).contains(np.array([0.0]))[0]


def test_equivalence_failure_on_wrong_map():
    mt = cifs.middle_thirds()
    broken = lambda pts: (np.clip(pts * 0.5, -1, 1), np.ones(pts.shape, dtype=bool))
    with pytest.raises(EquivalenceFailure):
        cifs.verify_forward_backward(broken, mt, 3, n_points=2000)


# --- Cantor certificate -------------------------------------------------------------------


def test_cantor_middle_thirds_passes():
    mt = cifs.middle_thirds()
    covers = [cifs.attractor_iterate(mt, k) for k in range(1, 13)]
    cert = cifs.cantor_certify(covers, cifs.closure_scaffold(mt, 0.0, 8))
    assert cert.passed and cert.depth == 12
    assert cert.clauses["i"]["max_ratio"] == pytest.approx(2 / 3, rel=1e-12)
    # middle-thirds gap between neighbors is one third of the parent width
    assert cert.clauses["iii"]["min_gap"] == pytest.approx(2 / 3 ** 12, rel=1e-9)
    cert.require()


def test_cantor_single_map_fails_perfectness():
    solo = cifs.IfsSystem([cifs._affine_map(-0.9, -0.2, "m")])
    covers = [cifs.attractor_iterate(solo, k) for k in range(1, 5)]
    cert = cifs.cantor_certify(covers, cifs.closure_scaffold(solo, -0.5, 3),
                               q_coord=-0.5)
    assert not cert.clauses["ii"]["passed"]
    with pytest.raises(CertificateFailure):
        cert.require()


def test_cantor_geometric_decay_factor():
    sys_ = cifs.make_geometric_model(1.0, 4.0, 1, 2)
    covers = [cifs.attractor_iterate(sys_, k) for k in range(1, 10)]
    cert = cifs.cantor_certify(covers, cifs.closure_scaffold(sys_, 0.0, 8))
    assert cert.passed
    sum_c = sum(m.c for m in sys_.maps)
    assert cert.clauses["i"]["max_ratio"] == pytest.approx(sum_c, rel=1e-2)


# --- fixtures ---------------------------------------------------------------------------------


def test_geometric_model_infeasible_parameters():
    with pytest.raises(ParameterInfeasible):
        cifs.make_geometric_model(1.0, 0.9, 1, 3)
    with pytest.raises(ParameterInfeasible):
        cifs.make_geometric_model(5.0, 4.0, 1, 1)  # ratio above 1
    with pytest.raises(ParameterInfeasible):
        cifs.make_geometric_model(1.0, 1.2, 1, 30)  # images cannot fit


def test_geometric_two_map_instance_moran():
    sys_ = cifs.make_geometric_model(1.0, 4.0, 2, 2)
    s, t = cifs.moran_bounds(sys_)
    want = np.log(2) / np.log(16)
    assert s == pytest.approx(want, abs=1e-12)
    assert t == pytest.approx(want, abs=1e-12)


def test_dimension_report_bracket():
    sys_ = cifs.make_geometric_model(1.0, 4.0, 1, 10)
    rep = cifs.dimension_report(sys_)
    assert 0 < rep.moran_lower <= rep.pressure_root <= rep.moran_upper + 1e-9 < 1 + 1e-9
