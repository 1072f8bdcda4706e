"""Palm model: CMC range checks, metacarpal-arch folding, compression curve
and marker-based metacarpal flexion."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from scipy.spatial.transform import Rotation

from .errors import DegenerateGeometryError, DomainError, SpecParseError
from .hand_model import CmcJoint, CompressionCurve, PalmGeometry, default_hand_spec

CMC_AXES = ("flexion", "abduction", "axial")
WIDTH_METACARPALS = (1, 2, 3, 4)     # zero-based: second to fifth


def _default_cmc() -> tuple[CmcJoint, ...]:
    return default_hand_spec().cmc


@dataclass(frozen=True)
class RomCheck:
    ok: bool
    violations: tuple[str, ...] = ()


def cmc_rom_check(joint_index: int, angles: Mapping[str, float],
                  cmc: Sequence[CmcJoint] | None = None) -> RomCheck:
    """Check CMC axis angles (rad) against the limits of joint 1..5.

    Axes absent from ``angles`` are taken as zero.
    """
    if joint_index not in (1, 2, 3, 4, 5):
        raise ValueError(f"CMC joint index must be 1..5, got {joint_index}")
    unknown = set(angles) - set(CMC_AXES)
    if unknown:
        raise ValueError(f"unknown CMC axis: {sorted(unknown)[0]}")
    joint = (cmc or _default_cmc())[joint_index - 1]
    violations = []
    for axis, lim in joint.axis_limits().items():
        a = float(angles.get(axis, 0.0))
        if not lim.contains(a):
            violations.append(
                f"CMC{joint_index} {axis} {math.degrees(a):g} deg outside "
                f"[{math.degrees(lim.min):g}, {math.degrees(lim.max):g}] deg ({joint.kind.value})")
    return RomCheck(not violations, tuple(violations))


# --------------------------------------------------------------------------
# arch folding
# --------------------------------------------------------------------------

def cmc_axis(tilt: float) -> np.ndarray:
    """Unit flexion axis in the palm plane, turned ``tilt`` from transverse toward proximal."""
    return np.array([math.cos(tilt), -math.sin(tilt), 0.0])


def metacarpal_heads(geom: PalmGeometry, flexion: Sequence[float]) -> np.ndarray:
    """Distal-head positions (5, 3) with each metacarpal flexed about its CMC axis."""
    heads = np.empty((5, 3))
    for i in range(5):
        base = np.asarray(geom.base_positions[i])
        shaft = np.array([0.0, geom.lengths[i], 0.0])
        rot = Rotation.from_rotvec(cmc_axis(geom.neutral_tilts[i]) * flexion[i])
        heads[i] = base + rot.apply(shaft)
    return heads


def palm_width(heads: np.ndarray) -> float:
    """Transverse span of the second-to-fifth heads projected on the palm plane."""
    x = heads[list(WIDTH_METACARPALS), 0]
    return float(x.max() - x.min())


def arch_deformation(theta4: float, theta5: float, geom: PalmGeometry | None = None,
                     cmc: Sequence[CmcJoint] | None = None) -> float:
    """Percent narrowing of the palm when the fourth and fifth metacarpals flex."""
    spec = None
    if geom is None or cmc is None:
        spec = default_hand_spec()
    geom = geom or spec.palm
    cmc = cmc or spec.cmc
    cmc[3].flexion_limits.check("CMC4 flexion", theta4)
    cmc[4].flexion_limits.check("CMC5 flexion", theta5)
    w0 = palm_width(metacarpal_heads(geom, [0.0] * 5))
    w = palm_width(metacarpal_heads(geom, [0.0, 0.0, 0.0, theta4, theta5]))
    return (w0 - w) / w0 * 100.0


# --------------------------------------------------------------------------
# compression
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ForceResult:
    force: float      # N
    clamped: bool     # displacement beyond the last anchor


def compression_force(displacement: float, curve: CompressionCurve | None = None) -> ForceResult:
    if displacement < 0:
        raise DomainError(f"displacement must be >= 0, got {displacement:g}")
    curve = curve or default_hand_spec().compression
    xs = [a[0] for a in curve.anchors]
    fs = [a[1] for a in curve.anchors]
    for x, f in curve.anchors:
        if displacement == x:
            return ForceResult(f, False)
    return ForceResult(float(np.interp(displacement, xs, fs)), displacement > xs[-1])


# --------------------------------------------------------------------------
# marker-based flexion
# --------------------------------------------------------------------------

@dataclass
class MarkerSet:
    """Labelled 3-D marker positions (mm), grouped by tracked body."""
    bodies: dict[str, np.ndarray] = field(default_factory=dict)
    labels: dict[str, list[str]] = field(default_factory=dict)

    def add(self, body: str, label: str, xyz) -> None:
        pts = self.bodies.get(body)
        row = np.asarray(xyz, dtype=float).reshape(1, 3)
        self.bodies[body] = row if pts is None else np.vstack([pts, row])
        self.labels.setdefault(body, []).append(label)

    def transformed(self, rotation: np.ndarray, translation) -> "MarkerSet":
        t = np.asarray(translation, float)
        return MarkerSet({b: p @ np.asarray(rotation).T + t for b, p in self.bodies.items()},
                         {b: list(l) for b, l in self.labels.items()})


def read_markers_csv(path: str | Path) -> MarkerSet:
    """Read a ``body,label,x_mm,y_mm,z_mm`` marker file."""
    ms = MarkerSet()
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        need = {"body", "label", "x_mm", "y_mm", "z_mm"}
        if reader.fieldnames is None or not need <= set(reader.fieldnames):
            raise SpecParseError(f"{path}: header must contain {', '.join(sorted(need))}")
        for line, row in enumerate(reader, start=2):
            try:
                xyz = [float(row["x_mm"]), float(row["y_mm"]), float(row["z_mm"])]
            except (TypeError, ValueError):
                raise SpecParseError(f"{path}:{line}: bad marker coordinates") from None
            ms.add(row["body"].strip(), row["label"].strip(), xyz)
    return ms


def _principal(points: np.ndarray):
    centred = points - points.mean(axis=0)
    _, s, vt = np.linalg.svd(centred)
    return s, vt


def fit_plane_normal(points: np.ndarray) -> np.ndarray:
    if len(points) < 3:
        raise DegenerateGeometryError("a reference plane needs at least three markers")
    s, vt = _principal(points)
    if s[1] <= 1e-9 * max(s[0], 1.0):
        raise DegenerateGeometryError("reference markers are collinear")
    return vt[2]


def principal_direction(points: np.ndarray) -> np.ndarray:
    if len(points) < 2:
        raise DegenerateGeometryError("a body direction needs at least two markers")
    s, vt = _principal(points)
    s1 = s[1] if len(s) > 1 else 0.0
    if s[0] <= 1e-9 or s[0] - s1 <= 1e-9 * s[0]:
        raise DegenerateGeometryError("marker spread has no dominant direction")
    return vt[0]


def flexion_from_markers(markers: MarkerSet, reference: str = "3") -> dict[str, float]:
    """Flexion (deg) of each tracked body relative to the reference-body plane.

    The reference plane is fitted to the reference body's markers; each
    other body's long axis is its largest-variance direction.  The angle is
    reported as a magnitude (flexion toward the palm is positive).
    """
    if reference not in markers.bodies:
        raise DegenerateGeometryError(f"no markers for reference body {reference!r}")
    normal = fit_plane_normal(markers.bodies[reference])
    out = {}
    for body in sorted(markers.bodies):
        if body == reference:
            continue
        d = principal_direction(markers.bodies[body])
        out[body] = math.degrees(math.asin(min(1.0, abs(float(np.dot(d, normal))))))
    return out
