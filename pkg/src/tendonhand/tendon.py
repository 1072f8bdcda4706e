"""Tendon excursion over constant-radius routing.

A tendon wrapped at radius ``r`` over a joint that turns by ``theta`` pays
out ``r * theta`` of length; a route is the signed sum over the joints it
crosses.  Inverting a set of routes is a linear solve.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import SpecValidationError, UnderdeterminedError
from .hand_model import DEFAULT_LIMITS, DIP_PER_PIP, JointLimits, JointState, TendonRoute


def _angles(state) -> Mapping[str, float]:
    return state.as_dict() if isinstance(state, JointState) else state


def excursion(route: TendonRoute, state: JointState | Mapping[str, float]) -> float:
    """Tendon length change (mm) of ``route`` at ``state``; zero at the zero pose."""
    angles = _angles(state)
    total = 0.0
    for seg in route.segments:
        if seg.joint not in angles:
            raise SpecValidationError(f"tendon.{route.name.value}",
                                      f"route crosses joint {seg.joint!r} absent from the state")
        total += seg.sign * seg.radius * angles[seg.joint]
    return total


def coupling_ratio(rr_pip: float, rr_dip: float) -> float:
    """PIP:DIP angle ratio enforced by a closed coupling tendon.

    Equal arc lengths ``rr_pip * theta_pip == rr_dip * theta_dip`` give
    ``theta_pip / theta_dip == rr_dip / rr_pip``; radii 2 and 3 give 1.5 (3:2).
    """
    if rr_pip <= 0 or rr_dip <= 0:
        raise ValueError("routing radii must be positive")
    return rr_dip / rr_pip


def route_matrix(routes: Sequence[TendonRoute], joints: Sequence[str] | None = None):
    """Linear map from joint angles to route excursions, plus the joint order."""
    if joints is None:
        joints = []
        for r in routes:
            for j in r.joints:
                if j not in joints:
                    joints.append(j)
    A = np.zeros((len(routes), len(joints)))
    for i, r in enumerate(routes):
        for seg in r.segments:
            A[i, joints.index(seg.joint)] += seg.sign * seg.radius
    return A, list(joints)


@dataclass(frozen=True)
class TendonSolve:
    state: JointState | dict[str, float]
    clamped: bool
    violations: tuple[str, ...]


def angles_from_excursions(routes: Sequence[TendonRoute], excursions: Sequence[float],
                           limits: Mapping[str, JointLimits] | None = DEFAULT_LIMITS,
                           coupled: bool = True) -> TendonSolve:
    """Solve for the joint angles that produce ``excursions``.

    The routes must pin every joint they cross (square, full-rank system).
    For finger routes the result is a :class:`JointState`; with ``coupled``
    and no route crossing the DIP, the DIP follows at 2/3 of the PIP.  Other
    joint sets come back as a plain ``{joint: angle}`` dict.  Angles outside
    ``limits`` are clamped and listed in ``violations``.
    """
    A, joints = route_matrix(routes)
    b = np.asarray(excursions, dtype=float)
    if b.shape != (len(routes),):
        raise ValueError(f"expected {len(routes)} excursions, got {b.size}")
    rank = np.linalg.matrix_rank(A)
    if rank < len(joints):
        # joints that take part in a null-space direction are unconstrained
        _, s, vt = np.linalg.svd(A)
        null = vt[rank:]
        free = [j for k, j in enumerate(joints) if np.any(np.abs(null[:, k]) > 1e-9)]
        raise UnderdeterminedError(free)
    if len(routes) != len(joints):
        raise ValueError(f"{len(routes)} routes over {len(joints)} joints: system is not square")
    theta = dict(zip(joints, np.linalg.solve(A, b)))

    violations, clamped = [], False
    limits = limits or {}
    for j, a in theta.items():
        if j in limits and not limits[j].contains(a):
            violations.append(j)
            theta[j] = limits[j].clamp(a)
            clamped = True

    if set(joints) <= {"mcp", "pip", "dip"}:
        mcp = float(theta.get("mcp", 0.0))
        pip = float(theta.get("pip", 0.0))
        if coupled and "dip" not in theta:
            state = JointState.coupled_from(mcp, pip)
        else:
            dip = float(theta.get("dip", 0.0))
            is_coupled = dip == float(DIP_PER_PIP) * pip
            state = JointState(mcp, pip, dip, is_coupled)
        return TendonSolve(state, clamped, tuple(violations))
    return TendonSolve({j: float(a) for j, a in theta.items()}, clamped, tuple(violations))


def excursion_table(routes: Sequence[TendonRoute], states: Sequence[JointState]) -> list[dict]:
    rows = []
    for st in states:
        row = {"theta_mcp_deg": math.degrees(st.theta_mcp),
               "theta_pip_deg": math.degrees(st.theta_pip),
               "theta_dip_deg": math.degrees(st.theta_dip)}
        for r in routes:
            row[f"{r.name.value}_mm"] = excursion(r, st)
        rows.append(row)
    return rows
