import math

import numpy as np
import pytest

from oracles import dh_brute, link_fk, rot_x, rot_y, rot_z, mat3
from tendonhand.errors import JointLimitError, UnsupportedGeometryError
from tendonhand.hand_model import JointLimits, JointState
from tendonhand.kinematics import (
    IkOptions,
    fk_consistency_report,
    fk_dh,
    fk_planar,
    fk_planar_batch,
    ik_planar,
    jacobian,
    rolling_flexion,
    sample_workspace,
    thumb_cmc_orient,
    track_trajectory,
)

# frozen from tests/oracles.py
LINK_FROZEN = {
    (0, 0): (181.5, 0.0),
    (90, 0): (71.33630944789017, 144.33630944789016),
    (90, 90): (30.314324843376106, 81.00015173118997),
    (30, 45): (128.24784614633234, 87.59268275761966),
}
DH_FROZEN = {
    (90, 0): (58.60838738653235, 149.6083873865323),
    (30, 45): (107.35654521301315, 103.79163690731603),
    (90, 90): (-3.470476488671311, 56.67071693317727),
}
GAP_FROZEN = {(90, 0): 13.776603565143226, (90, 90): 41.63333038127823, (30, 45): 26.435819832766082}
# exhaustive 0.5 deg search: (distance, mcp, pip)
IK_GRID_FROZEN = {
    (500, 0): (318.5, 0.0, 0.0),
    (0, 200): (78.04937118103801, 90.0, 26.5),
    (-60, 100): (85.48715378466163, 90.0, 68.5),
    (40, -30): (105.61111938452505, 0.0, 90.0),
    (120, 160): (32.62282437046106, 73.0, 0.0),
}


def st(m, p):
    return JointState.from_degrees(m, p)


def test_rolling_flexion_doubles():
    assert rolling_flexion(0.3, 5, 5) == 0.6
    with pytest.raises(UnsupportedGeometryError):
        rolling_flexion(0.3, 5, 4)


@pytest.mark.parametrize("angles", sorted(LINK_FROZEN))
def test_fk_planar_frozen(schedule, angles):
    p = fk_planar(schedule, st(*angles))
    assert p.x == pytest.approx(LINK_FROZEN[angles][0], abs=1e-9)
    assert p.y == pytest.approx(LINK_FROZEN[angles][1], abs=1e-9)


@pytest.mark.parametrize("angles", sorted(DH_FROZEN))
def test_fk_dh_frozen(spec, angles):
    p = fk_dh(spec.dh_chain, st(*angles))
    assert (p.x, p.y) == pytest.approx(DH_FROZEN[angles], abs=1e-9)


def test_dh_matches_brute_force_grid(spec):
    for m in range(0, 91, 15):
        for p in range(0, 91, 15):
            q = fk_dh(spec.dh_chain, st(m, p))
            assert (q.x, q.y) == pytest.approx(dh_brute(m, p), abs=1e-9)


def test_zero_pose_reach(spec, schedule):
    assert fk_planar(schedule, st(0, 0)) == pytest.approx((181.5, 0.0), abs=1e-9)
    assert fk_dh(spec.dh_chain, st(0, 0)) == pytest.approx((181.5, 0.0), abs=1e-9)
    assert schedule.reach == pytest.approx(181.5, abs=1e-12)


def test_out_of_limit_rejected(schedule):
    with pytest.raises(JointLimitError) as exc:
        fk_planar(schedule, st(95, 0))
    assert exc.value.joint.lower() == "mcp"
    assert "95" in str(exc.value)
    fk_planar(schedule, st(95, 0), limits=None)


def test_uncoupled_state_rejected(schedule):
    with pytest.raises(ValueError):
        fk_planar(schedule, JointState(0.1, 0.2, 0.0, coupled=False))


def test_batch_matches_scalar(schedule):
    m = np.radians([0, 20, 70])
    p = np.radians([10, 45, 90])
    pts = fk_planar_batch(schedule, m, p)
    for k in range(3):
        q = fk_planar(schedule, JointState.coupled_from(m[k], p[k]))
        assert pts[k] == pytest.approx(q, abs=1e-12)


@pytest.mark.parametrize("angles", sorted(GAP_FROZEN))
def test_consistency_gap_pinned(angles):
    r = fk_consistency_report(st(*angles))
    assert r.gap == pytest.approx(GAP_FROZEN[angles], abs=1e-9)


def test_consistency_zero_at_neutral():
    assert fk_consistency_report(st(0, 0)).gap == pytest.approx(0.0, abs=1e-9)


def test_jacobian_central_differences(schedule):
    rng = np.random.default_rng(11)
    h = 1e-6
    worst = 0.0
    for m, p in rng.uniform(0, math.pi / 2, size=(1000, 2)):
        J = jacobian(schedule, JointState.coupled_from(m, p))
        fd = np.empty((2, 2))
        fd[:, 0] = (fk_planar_batch(schedule, m + h, p) - fk_planar_batch(schedule, m - h, p)) / (2 * h)
        fd[:, 1] = (fk_planar_batch(schedule, m, p + h) - fk_planar_batch(schedule, m, p - h)) / (2 * h)
        worst = max(worst, float(np.abs(J - fd).max()))
    assert worst <= 1e-4


def test_ik_round_trip(schedule):
    rng = np.random.default_rng(5)
    for m, p in rng.uniform(0, 90, size=(100, 2)):
        target = fk_planar(schedule, st(m, p))
        r = ik_planar(schedule, target)
        assert not r.unreached
        assert r.residual <= 1e-3
        got = fk_planar(schedule, r.state)
        assert math.hypot(got.x - target.x, got.y - target.y) <= 1e-3
        assert r.state.theta_dip == (2 / 3) * r.state.theta_pip


@pytest.mark.parametrize("target", sorted(IK_GRID_FROZEN))
def test_ik_unreachable_matches_grid(schedule, target):
    dist, m, p = IK_GRID_FROZEN[target]
    r = ik_planar(schedule, target)
    assert r.unreached
    assert math.degrees(r.state.theta_mcp) == pytest.approx(m, abs=0.5)
    assert math.degrees(r.state.theta_pip) == pytest.approx(p, abs=0.5)
    assert r.residual <= dist + 1e-9


def test_ik_respects_custom_limits(spec, schedule):
    limits = dict(spec.limits)
    limits["mcp"] = JointLimits(0.0, math.radians(30))
    r = ik_planar(schedule, fk_planar(schedule, st(60, 20)), limits=limits)
    assert r.unreached
    assert r.state.theta_mcp <= math.radians(30) + 1e-12


def test_ik_rejects_bad_input(schedule):
    with pytest.raises(ValueError):
        ik_planar(schedule, (float("nan"), 0))
    with pytest.raises(ValueError):
        ik_planar(schedule, (1, 2), opts=IkOptions(max_iterations=0))


def test_track_zero_noise_repeatability_exact(schedule):
    pts = [fk_planar(schedule, st(a, b)) for a, b in ((10, 10), (40, 20), (20, 60))]
    res = track_trajectory(schedule, pts, repeats=10, noise_deg=0.0, seed=3)
    assert res.repeatability == 0.0
    assert res.max_abs_mean_error <= 1e-3
    assert res.unreached_points == 0
    assert len(res.records) == 30


def test_track_noise_is_seeded(schedule):
    pts = [fk_planar(schedule, st(a, a)) for a in (10, 30, 50)]
    a = track_trajectory(schedule, pts, repeats=5, noise_deg=2.0, seed=7)
    b = track_trajectory(schedule, pts, repeats=5, noise_deg=2.0, seed=7)
    c = track_trajectory(schedule, pts, repeats=5, noise_deg=2.0, seed=8)
    assert a == b
    assert a.repeatability > 0
    assert a.repeatability != c.repeatability


def test_track_flags_unreachable(schedule):
    res = track_trajectory(schedule, [fk_planar(schedule, st(20, 20)), (500, 0)])
    assert res.unreached_points == 1
    assert [r.unreached for r in res.records] == [False, True]


def test_thumb_orientation_order():
    a = (0.3, -0.4, 0.5)
    R = thumb_cmc_orient(a)
    ref = mat3(mat3(rot_x(a[0]), rot_y(a[1])), rot_z(a[2]))
    assert np.allclose(R, ref, atol=1e-12)
    assert np.allclose(thumb_cmc_orient((0, 0, 0)), np.eye(3))


def test_thumb_limits():
    thumb_cmc_orient([math.radians(55)] * 3)
    with pytest.raises(JointLimitError):
        thumb_cmc_orient((math.radians(56), 0, 0))


def test_workspace_counts(schedule):
    assert sample_workspace(schedule, grid_step=math.pi / 2).count == 4
    ws = sample_workspace(schedule, grid_step=math.radians(1))
    assert ws.count == 8281
    assert ws.max_radius == pytest.approx(181.5, abs=1e-9)
    assert tuple(ws.angles[1]) == pytest.approx((0.0, math.radians(1)))


def test_workspace_grid_matches_oracle(schedule):
    ws = sample_workspace(schedule, grid_step=math.radians(5))
    assert ws.count == 19 * 19
    for (m, p), (x, y) in zip(np.degrees(ws.angles), ws.points):
        ex, ey = link_fk(m, p)
        assert abs(x - ex) <= 1e-9 and abs(y - ey) <= 1e-9


def test_workspace_rejects_bad_step(schedule):
    with pytest.raises(ValueError):
        sample_workspace(schedule, grid_step=0)
