"""Finger and thumb kinematics.

The link schedule (a sum of ``length * (cos phi, sin phi)`` terms) is the
canonical forward model of a finger.  The DH chain is evaluated separately
and the two are compared by :func:`fk_consistency_report`; they agree only
at the extended pose.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, NamedTuple, Sequence

import numpy as np
from scipy.spatial.transform import Rotation

from .errors import UnsupportedGeometryError
from .hand_model import (
    DEFAULT_LIMITS,
    DhRow,
    JointLimits,
    JointState,
    LinkSchedule,
    ThumbSpec,
    check_state,
    default_hand_spec,
)

ACTIVE_JOINTS = ("mcp", "pip")


class PlanarPose(NamedTuple):
    x: float
    y: float


def rolling_flexion(theta: float, r1: float, r2: float) -> float:
    """Flexion of the upper phalanx for a centre-line rotation ``theta``.

    Only the equal-radii rolling pair is supported, for which the phalanx
    turns through twice the centre-line angle.
    """
    if r1 <= 0 or r2 <= 0:
        raise ValueError("rolling radii must be positive")
    if not math.isclose(r1, r2, rel_tol=1e-12):
        raise UnsupportedGeometryError(
            f"rolling pair with unequal radii r1={r1:g}, r2={r2:g} is not supported")
    return 2.0 * theta


def _require_coupled(state: JointState) -> None:
    if not state.coupled:
        raise ValueError("link schedule assumes the PIP-DIP coupling; pass a coupled JointState")


def _phases(schedule: LinkSchedule, mcp, pip):
    c = schedule.coeff_matrix(ACTIVE_JOINTS)
    return np.multiply.outer(mcp, c[:, 0]) + np.multiply.outer(pip, c[:, 1])


def fk_planar_batch(schedule: LinkSchedule, mcp, pip) -> np.ndarray:
    """Vectorised forward kinematics; returns ``(..., 2)`` fingertip positions (mm).

    No limit checking is done here.
    """
    phi = _phases(schedule, np.asarray(mcp, float), np.asarray(pip, float))
    lengths = schedule.lengths
    return np.stack([np.cos(phi) @ lengths, np.sin(phi) @ lengths], axis=-1)


def fk_planar(schedule: LinkSchedule, state: JointState,
              limits: Mapping[str, JointLimits] | None = DEFAULT_LIMITS) -> PlanarPose:
    _require_coupled(state)
    if limits is not None:
        check_state(state, limits)
    x = y = 0.0
    for term in schedule.terms:
        phi = float(term.coeff("mcp")) * state.theta_mcp + float(term.coeff("pip")) * state.theta_pip
        x += term.length * math.cos(phi)
        y += term.length * math.sin(phi)
    return PlanarPose(x, y)


def dh_transform(a: float, alpha: float, d: float, theta: float) -> np.ndarray:
    """Standard DH link transform ``Rz(theta) Tz(d) Tx(a) Rx(alpha)``."""
    ct, st = math.cos(theta), math.sin(theta)
    ca, sa = math.cos(alpha), math.sin(alpha)
    return np.array([
        [ct, -st * ca, st * sa, a * ct],
        [st, ct * ca, -ct * sa, a * st],
        [0.0, sa, ca, d],
        [0.0, 0.0, 0.0, 1.0],
    ])


def fk_dh(chain: Sequence[DhRow], state: JointState,
          limits: Mapping[str, JointLimits] | None = DEFAULT_LIMITS) -> PlanarPose:
    """End-frame origin of a DH chain, projected on the finger plane."""
    if limits is not None:
        check_state(state, limits)
    angles = state.as_dict()
    T = np.eye(4)
    for row in chain:
        T = T @ dh_transform(row.a, row.alpha, row.d, row.theta(angles))
    return PlanarPose(float(T[0, 3]), float(T[1, 3]))


@dataclass(frozen=True)
class ConsistencyReport:
    state: JointState
    link_pose: PlanarPose
    dh_pose: PlanarPose
    gap: float


def fk_consistency_report(state: JointState, schedule: LinkSchedule | None = None,
                          chain: Sequence[DhRow] | None = None) -> ConsistencyReport:
    """Evaluate both forward models at ``state``; disagreement is reported, never raised."""
    if schedule is None or chain is None:
        spec = default_hand_spec()
        schedule = schedule or spec.link_schedule
        chain = chain or spec.dh_chain
    p = fk_planar(schedule, state, limits=None)
    q = fk_dh(chain, state, limits=None)
    return ConsistencyReport(state, p, q, math.hypot(p.x - q.x, p.y - q.y))


def jacobian(schedule: LinkSchedule, state: JointState) -> np.ndarray:
    """Analytic 2x2 Jacobian of the fingertip w.r.t. (MCP, PIP), mm/rad."""
    c = schedule.coeff_matrix(ACTIVE_JOINTS)
    phi = c @ np.array([state.theta_mcp, state.theta_pip])
    lengths = schedule.lengths
    J = np.empty((2, 2))
    J[0] = (-lengths * np.sin(phi)) @ c
    J[1] = (lengths * np.cos(phi)) @ c
    return J


def _jacobian_raw(schedule: LinkSchedule, theta: np.ndarray) -> np.ndarray:
    return jacobian(schedule, JointState.coupled_from(theta[0], theta[1]))


# --------------------------------------------------------------------------
# inverse kinematics
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class IkOptions:
    tolerance: float = 1e-3         # mm
    max_iterations: int = 200
    damping: float = 1.0            # mm^2
    restarts: bool = True


@dataclass(frozen=True)
class IkResult:
    state: JointState
    residual: float
    iterations: int
    unreached: bool


def _finger_limits(limits: Mapping[str, JointLimits] | None):
    limits = DEFAULT_LIMITS if limits is None else limits
    lo = np.array([limits[j].min for j in ACTIVE_JOINTS])
    hi = np.array([limits[j].max for j in ACTIVE_JOINTS])
    return lo, hi


def _dls(schedule, target, theta, lo, hi, opts, budget):
    lam = opts.damping
    pos = fk_planar_batch(schedule, theta[0], theta[1])
    err = target - pos
    res = float(np.hypot(*err))
    it = 0
    while it < budget and res > opts.tolerance:
        it += 1
        J = _jacobian_raw(schedule, theta)
        step = J.T @ np.linalg.solve(J @ J.T + lam * np.eye(2), err)
        # joints pinned at a limit and pushed outward drop out of the step
        pinned = ((theta <= lo) & (step < 0)) | ((theta >= hi) & (step > 0))
        if pinned.any() and not pinned.all():
            Jf = J[:, ~pinned]
            step = np.zeros(2)
            step[~pinned] = np.linalg.solve(Jf.T @ Jf + lam * np.eye(Jf.shape[1]), Jf.T @ err)
        cand = np.clip(theta + step, lo, hi)
        cerr = target - fk_planar_batch(schedule, cand[0], cand[1])
        cres = float(np.hypot(*cerr))
        if cres < res:
            theta, err, res = cand, cerr, cres
            lam *= 0.5
        else:
            lam *= 2.0
            if lam > 1e12:
                # no admissible descent left: constrained minimum
                break
    return theta, res, it


def ik_planar(schedule: LinkSchedule, target, limits: Mapping[str, JointLimits] | None = None,
              opts: IkOptions = IkOptions(), seed: JointState | None = None) -> IkResult:
    """Damped least-squares IK with the joints clamped to their limits every step.

    Never raises for an unreachable target: the best state found is returned
    with ``unreached=True``.
    """
    if opts.max_iterations < 1:
        raise ValueError("max_iterations must be >= 1")
    target = np.asarray(target, dtype=float)
    if target.shape != (2,) or not np.all(np.isfinite(target)):
        raise ValueError("target must be a finite (x, y) pair")
    lo, hi = _finger_limits(limits)
    if seed is None:
        start = 0.5 * (lo + hi)
    else:
        start = np.clip([seed.theta_mcp, seed.theta_pip], lo, hi)

    seeds = [start]
    if opts.restarts:
        for fm in (0.0, 0.5, 1.0):
            for fp in (0.0, 0.5, 1.0):
                s = lo + np.array([fm, fp]) * (hi - lo)
                if not np.array_equal(s, start):
                    seeds.append(s)

    best_theta, best_res, total = None, math.inf, 0
    for s in seeds:
        theta, res, it = _dls(schedule, target, np.array(s, float), lo, hi, opts,
                              opts.max_iterations)
        total += it
        if res < best_res:
            best_theta, best_res = theta, res
        if best_res <= opts.tolerance:
            break
    state = JointState.coupled_from(float(best_theta[0]), float(best_theta[1]))
    return IkResult(state, best_res, total, best_res > opts.tolerance)


# --------------------------------------------------------------------------
# trajectory harness
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class TrackRecord:
    repeat: int
    point: int
    target: PlanarPose
    achieved: PlanarPose
    error: float
    theta_mcp: float
    theta_pip: float
    unreached: bool


@dataclass(frozen=True)
class TrackResult:
    records: tuple[TrackRecord, ...]
    max_abs_mean_error: float
    repeatability: float
    max_error: float
    unreached_points: int


def track_trajectory(schedule: LinkSchedule, waypoints: Sequence, opts: IkOptions = IkOptions(),
                     limits: Mapping[str, JointLimits] | None = None, repeats: int = 1,
                     noise_deg: float = 0.0, seed: int = 0) -> TrackResult:
    """Follow ``waypoints`` with warm-started IK and score the result.

    Each repeat re-executes the solved joint trajectory with Gaussian joint
    noise of standard deviation ``noise_deg``.  The summary reports the
    largest distance between a target and the mean achieved point, and the
    mean distance of each repeat from that mean point (repeatability).
    """
    if len(waypoints) < 1:
        raise ValueError("need at least one waypoint")
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    lo, hi = _finger_limits(limits)
    targets = np.asarray(waypoints, dtype=float).reshape(-1, 2)

    solutions = []
    prev = None
    for t in targets:
        r = ik_planar(schedule, t, limits, opts, seed=prev)
        solutions.append(r)
        prev = r.state
    thetas = np.array([[r.state.theta_mcp, r.state.theta_pip] for r in solutions])

    rng = np.random.default_rng(seed)
    sigma = math.radians(noise_deg)
    achieved = np.empty((repeats, len(targets), 2))
    executed = np.empty_like(achieved)
    for k in range(repeats):
        th = thetas
        if sigma > 0:
            th = np.clip(thetas + rng.normal(0.0, sigma, thetas.shape), lo, hi)
        executed[k] = th
        achieved[k] = fk_planar_batch(schedule, th[:, 0], th[:, 1])

    errors = np.linalg.norm(achieved - targets, axis=-1)
    # centre on the first repeat so identical repeats give exactly zero spread
    centre = achieved[0] + (achieved - achieved[0]).mean(axis=0)
    mean_err = np.linalg.norm(centre - targets, axis=-1)
    spread = np.linalg.norm(achieved - centre, axis=-1)

    records = []
    for k in range(repeats):
        for i, t in enumerate(targets):
            records.append(TrackRecord(
                k, i, PlanarPose(*t), PlanarPose(*achieved[k, i]), float(errors[k, i]),
                float(executed[k, i, 0]), float(executed[k, i, 1]), solutions[i].unreached))
    return TrackResult(tuple(records), float(mean_err.max()), float(spread.mean()),
                       float(errors.max()), sum(r.unreached for r in solutions))


# --------------------------------------------------------------------------
# thumb and workspace
# --------------------------------------------------------------------------

THUMB_AXES = ("flexion", "abduction", "axial")


def thumb_cmc_orient(angles: Sequence[float], spec: ThumbSpec | None = None) -> np.ndarray:
    """Orientation of the thumb metacarpal on its ball joint.

    Rotations are applied flexion, then abduction, then axial rotation, each
    about the already-rotated frame: ``R = Rx(flexion) Ry(abduction) Rz(axial)``.
    """
    spec = spec or default_hand_spec().thumb
    angles = [float(a) for a in angles]
    if len(angles) != 3:
        raise ValueError("expected three CMC angles (flexion, abduction, axial)")
    for name, a, lim in zip(THUMB_AXES, angles, spec.cmc_limits):
        lim.check(f"thumb CMC {name}", a)
    return Rotation.from_euler("XYZ", angles).as_matrix()


@dataclass(frozen=True)
class WorkspaceSample:
    angles: np.ndarray = field(repr=False)     # (N, 2) rad, MCP outer loop
    points: np.ndarray = field(repr=False)     # (N, 2) mm
    min_radius: float = 0.0
    max_radius: float = 0.0

    @property
    def count(self) -> int:
        return len(self.points)

    @property
    def poses(self) -> list[PlanarPose]:
        return [PlanarPose(float(x), float(y)) for x, y in self.points]


def _axis_grid(lim: JointLimits, step: float) -> np.ndarray:
    n = int(math.floor(lim.width / step + 1e-9)) + 1
    return lim.min + step * np.arange(n)


def sample_workspace(schedule: LinkSchedule, limits: Mapping[str, JointLimits] | None = None,
                     grid_step: float = math.radians(1.0)) -> WorkspaceSample:
    """Forward kinematics over a regular grid of the (MCP, PIP) limit box."""
    if not grid_step > 0:
        raise ValueError("grid_step must be > 0")
    limits = DEFAULT_LIMITS if limits is None else limits
    gm = _axis_grid(limits["mcp"], grid_step)
    gp = _axis_grid(limits["pip"], grid_step)
    M, P = np.meshgrid(gm, gp, indexing="ij")
    angles = np.column_stack([M.ravel(), P.ravel()])
    pts = fk_planar_batch(schedule, angles[:, 0], angles[:, 1])
    r = np.hypot(pts[:, 0], pts[:, 1])
    return WorkspaceSample(angles, pts, float(r.min()), float(r.max()))
