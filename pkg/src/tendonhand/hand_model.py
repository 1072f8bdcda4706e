"""Domain types, default parameters and the hand-spec file format.

Every quantity is stored in millimetres and radians.  The JSON hand-spec
file uses millimetres and degrees, with the unit carried in each key name
(``_mm``, ``_deg``, ``_pct``).  Keys beginning with ``_`` are comments and
are ignored by the loader.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from .errors import JointLimitError, SpecParseError, SpecValidationError

SPEC_VERSION = 1
FINGERS = ("index", "middle", "ring", "little")
FINGER_JOINTS = ("mcp", "pip", "dip")
THUMB_JOINTS = ("thumb_ip", "thumb_mcp", "cmc_flexion", "cmc_abduction", "cmc_axial")

# PIP:DIP = 3:2 synchronised motion.
DIP_PER_PIP = Fraction(2, 3)

RADIUS_RATIO_RTOL = 1e-9
_LIMIT_ATOL = 1e-12


# --------------------------------------------------------------------------
# finger geometry
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SegmentDims:
    """Phalanx lengths of one finger (mm)."""
    tip_dip: float
    dip_pip: float
    pip_mcp: float


def segment_ratios(dims: SegmentDims) -> tuple[float, float]:
    """Return ``(pip_mcp / dip_pip, dip_pip / tip_dip)``."""
    return dims.pip_mcp / dims.dip_pip, dims.dip_pip / dims.tip_dip


@dataclass(frozen=True)
class RollingJointGeom:
    r1: float          # outer rolling radius, lower cylinder (mm)
    r2: float          # outer rolling radius, upper cylinder (mm)
    rr1: float         # inner tendon-winding radius, lower (mm)
    rr2: float         # inner tendon-winding radius, upper (mm)
    rho_wire: float    # Nitinol bend radius across this joint (mm)


@dataclass(frozen=True)
class JointLimits:
    min: float
    max: float

    @classmethod
    def deg(cls, lo: float, hi: float) -> "JointLimits":
        return cls(math.radians(lo), math.radians(hi))

    @property
    def width(self) -> float:
        return self.max - self.min

    def contains(self, angle: float, atol: float = _LIMIT_ATOL) -> bool:
        return self.min - atol <= angle <= self.max + atol

    def clamp(self, angle: float) -> float:
        return min(max(angle, self.min), self.max)

    def check(self, joint: str, angle: float) -> None:
        if not self.contains(angle):
            raise JointLimitError(joint, math.degrees(angle),
                                  math.degrees(self.min), math.degrees(self.max))


ZERO_LIMITS = JointLimits(0.0, 0.0)


@dataclass(frozen=True)
class JointState:
    """Finger joint angles (rad).

    A coupled state always carries ``theta_dip == 2/3 * theta_pip``; build
    one with :meth:`coupled_from`.
    """
    theta_mcp: float
    theta_pip: float
    theta_dip: float
    coupled: bool = True

    def __post_init__(self):
        if self.coupled and self.theta_dip != float(DIP_PER_PIP) * self.theta_pip:
            raise ValueError("coupled JointState requires theta_dip == 2/3 * theta_pip")

    @classmethod
    def coupled_from(cls, theta_mcp: float, theta_pip: float) -> "JointState":
        return cls(float(theta_mcp), float(theta_pip),
                   float(DIP_PER_PIP) * float(theta_pip), True)

    @classmethod
    def from_degrees(cls, mcp_deg: float, pip_deg: float) -> "JointState":
        return cls.coupled_from(math.radians(mcp_deg), math.radians(pip_deg))

    def as_dict(self) -> dict[str, float]:
        return {"mcp": self.theta_mcp, "pip": self.theta_pip, "dip": self.theta_dip}


def check_state(state: JointState, limits: Mapping[str, JointLimits]) -> None:
    """Raise :class:`JointLimitError` naming the first joint out of range."""
    for joint, angle in state.as_dict().items():
        if joint in limits:
            limits[joint].check(joint.upper(), angle)


# --------------------------------------------------------------------------
# CMC joints and thumb
# --------------------------------------------------------------------------

class CmcKind(str, Enum):
    BALL = "ball"
    FIXED = "fixed"
    ROLLING = "rolling"


@dataclass(frozen=True)
class CmcJoint:
    kind: CmcKind
    flexion_limits: JointLimits
    abduction_limits: JointLimits
    axial_limits: JointLimits = ZERO_LIMITS

    def axis_limits(self) -> dict[str, JointLimits]:
        return {"flexion": self.flexion_limits,
                "abduction": self.abduction_limits,
                "axial": self.axial_limits}


@dataclass(frozen=True)
class ThumbSpec:
    cmc_limits: tuple[JointLimits, JointLimits, JointLimits]  # flexion, abduction, axial
    segment_lengths: tuple[float, float] | None = None        # MCP-IP, IP-tip (mm)
    ip_coupling_ratio: float = 1.0


# --------------------------------------------------------------------------
# kinematic chains
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class LinkTerm:
    """One ``length * (cos phi, sin phi)`` term; ``phi`` is linear in the joints."""
    length: float
    angle_coeffs: Mapping[str, Fraction] = field(default_factory=dict)

    def coeff(self, joint: str) -> Fraction:
        return self.angle_coeffs.get(joint, Fraction(0))


@dataclass(frozen=True)
class LinkSchedule:
    terms: tuple[LinkTerm, ...]

    @property
    def lengths(self) -> np.ndarray:
        return np.array([t.length for t in self.terms], dtype=float)

    def coeff_matrix(self, joints=("mcp", "pip")) -> np.ndarray:
        return np.array([[float(t.coeff(j)) for j in joints] for t in self.terms])

    @property
    def reach(self) -> float:
        return float(sum(t.length for t in self.terms))


@dataclass(frozen=True)
class DhRow:
    a: float
    alpha: float
    d: float
    theta_coeffs: Mapping[str, Fraction] = field(default_factory=dict)
    theta_offset: float = 0.0

    def theta(self, angles: Mapping[str, float]) -> float:
        return self.theta_offset + sum(float(c) * angles[j] for j, c in self.theta_coeffs.items())


# --------------------------------------------------------------------------
# Nitinol
# --------------------------------------------------------------------------

class WireConfiguration(str, Enum):
    FIXED_FREE = "fixed_free"
    CROSSED = "crossed"


@dataclass(frozen=True)
class NitinolWire:
    d: float = 0.584
    rho: float = 20.0
    configuration: WireConfiguration = WireConfiguration.FIXED_FREE
    count: int = 1
    # strain amplitude (%) used for the strain-life lookup of this joint
    fatigue_strain_pct: float | None = None


@dataclass(frozen=True)
class MaterialModel:
    """Bilinear superelastic law: linear to the plateau, then flat.

    ``plateau_onset_strain`` must equal ``plateau_stress / e_austenite``
    so that the curve is continuous.
    """
    e_austenite: float            # MPa
    plateau_onset_strain: float
    plateau_stress: float         # MPa
    elastic_limit_strain: float = 0.06
    moment_shape_factor: float = 2.0 / 3.0

    @classmethod
    def from_modulus(cls, e_austenite: float, plateau_stress: float, **kw) -> "MaterialModel":
        return cls(e_austenite, plateau_stress / e_austenite, plateau_stress, **kw)


@dataclass(frozen=True)
class StrainLifeTable:
    anchors: tuple[tuple[float, float], ...]   # (strain amplitude %, cycles), ascending strain


@dataclass(frozen=True)
class NitinolSpec:
    nominal_d: float
    material: MaterialModel
    wires: Mapping[str, NitinolWire]
    strain_life: StrainLifeTable


# --------------------------------------------------------------------------
# tendons
# --------------------------------------------------------------------------

class TendonName(str, Enum):
    FLEXION = "flexion"
    LUMBRICAL = "lumbrical"
    COUPLING_PIP_DIP = "coupling_pip_dip"
    OPPOSITION = "opposition"
    ADDUCTION = "adduction"
    ABDUCTION = "abduction"


@dataclass(frozen=True)
class TendonSegment:
    joint: str
    radius: float
    sign: int = 1      # +1 flexor side, -1 extensor side


@dataclass(frozen=True)
class TendonRoute:
    name: TendonName
    segments: tuple[TendonSegment, ...]

    @property
    def joints(self) -> tuple[str, ...]:
        return tuple(s.joint for s in self.segments)


# --------------------------------------------------------------------------
# palm
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class PalmGeometry:
    """Carpal arch in the neutral pose.

    Frame: x transverse (radial to ulnar), y distal along the fingers, z
    palmar.  The neutral palm plane is ``z = 0``.  Metacarpals 2-5 point
    along +y; ``neutral_tilts`` (rad) set how far each CMC flexion axis is
    turned from the transverse axis, which is what lets flexion fold the
    ulnar heads toward the radial side.
    """
    base_positions: tuple[tuple[float, float, float], ...]   # five, mm
    lengths: tuple[float, ...]                               # five, mm
    neutral_tilts: tuple[float, ...]                         # five, rad


@dataclass(frozen=True)
class CompressionCurve:
    anchors: tuple[tuple[float, float], ...]   # (displacement mm, force N)


# --------------------------------------------------------------------------
# aggregate
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class HandSpec:
    fingers: Mapping[str, SegmentDims]
    joints: Mapping[str, RollingJointGeom]
    limits: Mapping[str, JointLimits]
    link_schedule: LinkSchedule
    dh_chain: tuple[DhRow, ...]
    thumb: ThumbSpec
    cmc: tuple[CmcJoint, ...]
    nitinol: NitinolSpec
    finger_tendons: tuple[TendonRoute, ...]
    thumb_tendons: tuple[TendonRoute, ...]
    palm: PalmGeometry
    compression: CompressionCurve


# --------------------------------------------------------------------------
# defaults (file units)
# --------------------------------------------------------------------------

DEFAULTS: dict[str, Any] = {
    "spec_version": SPEC_VERSION,
    "fingers": {
        "index": {"tip_dip_mm": 19.92, "dip_pip_mm": 24.43, "pip_mcp_mm": 45.44},
        "middle": {"tip_dip_mm": 20.26, "dip_pip_mm": 27.47, "pip_mcp_mm": 47.26},
        "ring": {"tip_dip_mm": 19.70, "dip_pip_mm": 25.21, "pip_mcp_mm": 42.87},
        "little": {"tip_dip_mm": 18.44, "dip_pip_mm": 19.43, "pip_mcp_mm": 37.12},
    },
    "joints": {
        # rolling radii are placeholders; equal outer radii, inner radii set
        # the 2:3 PIP:DIP winding pair of the coupling tendon
        "mcp": {"min_deg": 0.0, "max_deg": 90.0, "r1_mm": 6.0, "r2_mm": 6.0,
                "rr1_mm": 4.0, "rr2_mm": 4.0, "rho_wire_mm": 20.0},
        "pip": {"min_deg": 0.0, "max_deg": 90.0, "r1_mm": 5.0, "r2_mm": 5.0,
                "rr1_mm": 2.0, "rr2_mm": 2.0, "rho_wire_mm": 18.0},
        "dip": {"min_deg": 0.0, "max_deg": 60.0, "r1_mm": 4.0, "r2_mm": 4.0,
                "rr1_mm": 3.0, "rr2_mm": 3.0, "rho_wire_mm": 15.0},
    },
    "link_schedule": [
        {"length_mm": 13.0, "mcp": "0", "pip": "0"},
        {"length_mm": 82.5, "mcp": "1/2", "pip": "0"},
        {"length_mm": 32.261, "mcp": "1", "pip": "0"},
        {"length_mm": 12.0, "mcp": "1", "pip": "1/2"},
        {"length_mm": 17.478, "mcp": "1", "pip": "1"},
        {"length_mm": 8.0, "mcp": "1", "pip": "4/3"},
        {"length_mm": 16.261, "mcp": "1", "pip": "5/3"},
    ],
    "dh_chain": [
        {"a_mm": a, "alpha_deg": 0.0, "d_mm": 0.0, "theta_mcp": m, "theta_pip": p,
         "theta_offset_deg": 0.0}
        for a, m, p in [
            (0.0, "0", "0"), (13.0, "0", "0"), (64.5, "1/2", "0"), (18.0, "1/2", "0"),
            (32.261, "0", "1/2"), (12.0, "0", "1/2"), (17.478, "0", "1/3"),
            (8.0, "0", "1/3"), (16.261, "0", "0"),
        ]
    ],
    "thumb": {
        "cmc_flexion_limit_deg": 55.0,
        "cmc_abduction_limit_deg": 55.0,
        "cmc_axial_limit_deg": 55.0,
        "ip_coupling_ratio": 1.0,
    },
    "cmc": {
        "1": {"kind": "ball", "flexion_min_deg": -55.0, "flexion_max_deg": 55.0,
              "abduction_min_deg": -55.0, "abduction_max_deg": 55.0,
              "axial_min_deg": -55.0, "axial_max_deg": 55.0},
        "2": {"kind": "fixed"},
        "3": {"kind": "fixed"},
        "4": {"kind": "rolling", "flexion_min_deg": 0.0, "flexion_max_deg": 10.0},
        "5": {"kind": "rolling", "flexion_min_deg": 0.0, "flexion_max_deg": 44.0},
    },
    "nitinol": {
        "nominal_wire_d_mm": 0.584,
        # fitted to reference FEA stress points by scripts/fit_material.py
        "material": {"e_austenite_mpa": 35148.514851485146, "plateau_stress_mpa": 412.5,
                     "elastic_limit_strain_pct": 6.0, "moment_shape_factor": 2.0 / 3.0},
        "wires": {
            "dip": {"d_mm": 0.58, "count": 1, "configuration": "fixed_free",
                    "fatigue_strain_pct": 0.65},
            "pip": {"d_mm": 0.58, "count": 1, "configuration": "fixed_free",
                    "fatigue_strain_pct": 0.86},
            "mcp": {"d_mm": 0.58, "count": 2, "configuration": "fixed_free",
                    "fatigue_strain_pct": 0.81},
        },
        "strain_life": [
            {"strain_pct": 0.65, "cycles": 5.3e4},
            {"strain_pct": 0.81, "cycles": 1.8e4},
            {"strain_pct": 0.86, "cycles": 1.2e4},
        ],
    },
    "tendons": {
        "finger": [
            {"name": "flexion", "segments": [{"joint": "pip", "radius_mm": 2.0, "sign": 1}]},
            {"name": "lumbrical", "segments": [{"joint": "mcp", "radius_mm": 4.0, "sign": 1}]},
            {"name": "coupling_pip_dip", "segments": [
                {"joint": "pip", "radius_mm": 2.0, "sign": 1},
                {"joint": "dip", "radius_mm": 3.0, "sign": -1}]},
        ],
        "thumb": [
            {"name": "flexion", "segments": [{"joint": "thumb_ip", "radius_mm": 2.0, "sign": 1}]},
            {"name": "lumbrical", "segments": [{"joint": "thumb_mcp", "radius_mm": 4.0, "sign": 1}]},
            {"name": "opposition", "segments": [
                {"joint": "cmc_flexion", "radius_mm": 5.0, "sign": 1},
                {"joint": "cmc_axial", "radius_mm": 5.0, "sign": 1}]},
            {"name": "adduction", "segments": [{"joint": "cmc_abduction", "radius_mm": 5.0, "sign": -1}]},
            {"name": "abduction", "segments": [{"joint": "cmc_abduction", "radius_mm": 5.0, "sign": 1}]},
        ],
    },
    "palm": {
        "metacarpals": {
            "1": {"base_mm": [-22.0, -8.0, 10.0], "length_mm": 46.0, "neutral_tilt_deg": 40.0},
            "2": {"base_mm": [-12.0, 0.0, 0.0], "length_mm": 68.0, "neutral_tilt_deg": 0.0},
            "3": {"base_mm": [0.0, 0.0, 2.0], "length_mm": 65.0, "neutral_tilt_deg": 0.0},
            "4": {"base_mm": [12.0, -2.0, 2.0], "length_mm": 58.0, "neutral_tilt_deg": 5.0},
            "5": {"base_mm": [22.0, -6.0, 0.0], "length_mm": 53.0, "neutral_tilt_deg": 12.5},
        },
        "compression_curve": [
            {"displacement_mm": 0.0, "force_n": 0.0},
            {"displacement_mm": 18.0, "force_n": 32.0},
        ],
    },
}


DEFAULT_LIMITS: dict[str, JointLimits] = {
    j: JointLimits.deg(DEFAULTS["joints"][j]["min_deg"], DEFAULTS["joints"][j]["max_deg"])
    for j in FINGER_JOINTS
}


# --------------------------------------------------------------------------
# parsing
# --------------------------------------------------------------------------

class _Section:
    """Dict view that records consumed keys so leftovers can be rejected."""

    def __init__(self, data: Any, path: str, defaults: Mapping[str, Any] | None = None):
        if not isinstance(data, Mapping):
            raise SpecValidationError(path or "<root>", "expected an object")
        self.data = data
        self.path = path
        self.defaults = defaults or {}
        self.used: set[str] = set()

    def _p(self, key: str) -> str:
        return f"{self.path}.{key}" if self.path else key

    def raw(self, key: str, required: bool = False) -> Any:
        self.used.add(key)
        if key in self.data:
            return self.data[key]
        if key in self.defaults:
            return self.defaults[key]
        if required:
            raise SpecValidationError(self._p(key), "missing required field")
        return None

    def number(self, key: str, *, positive: bool = False, nonneg: bool = False,
               default: float | None = None) -> float:
        v = self.raw(key)
        if v is None:
            if default is None:
                raise SpecValidationError(self._p(key), "missing required field")
            v = default
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise SpecValidationError(self._p(key), f"expected a number, got {v!r}")
        v = float(v)
        if not math.isfinite(v):
            raise SpecValidationError(self._p(key), "must be finite")
        if positive and v <= 0:
            raise SpecValidationError(self._p(key), f"must be > 0, got {v:g}")
        if nonneg and v < 0:
            raise SpecValidationError(self._p(key), f"must be >= 0, got {v:g}")
        return v

    def sub(self, key: str) -> "_Section":
        d = self.defaults.get(key, {}) if isinstance(self.defaults, Mapping) else {}
        v = self.data.get(key, {})
        self.used.add(key)
        if v is None:
            v = {}
        return _Section(v, self._p(key), d)

    def finish(self) -> None:
        extra = [k for k in self.data if k not in self.used and not str(k).startswith("_")]
        if extra:
            raise SpecValidationError(self._p(sorted(extra)[0]), "unknown field")


def _fraction(value: Any, path: str) -> Fraction:
    try:
        if isinstance(value, bool):
            raise ValueError
        if isinstance(value, float):
            return Fraction(value).limit_denominator(10**6)
        return Fraction(value)
    except (ValueError, TypeError, ZeroDivisionError):
        raise SpecValidationError(path, f"expected a rational coefficient, got {value!r}") from None


def _list(sec: _Section, key: str) -> list:
    v = sec.raw(key)
    if not isinstance(v, list) or not v:
        raise SpecValidationError(sec._p(key), "expected a non-empty list")
    return v


def _limits(sec: _Section, prefix: str, path: str) -> JointLimits:
    lo = sec.number(f"{prefix}min_deg", default=0.0)
    hi = sec.number(f"{prefix}max_deg", default=0.0)
    if lo > hi:
        raise SpecValidationError(f"{path}.{prefix}max_deg", f"min {lo:g} > max {hi:g}")
    return JointLimits.deg(lo, hi)


def _parse_fingers(sec: _Section) -> dict[str, SegmentDims]:
    out = {}
    for name in FINGERS:
        f = sec.sub(name)
        out[name] = SegmentDims(f.number("tip_dip_mm", positive=True),
                                f.number("dip_pip_mm", positive=True),
                                f.number("pip_mcp_mm", positive=True))
        f.finish()
    sec.finish()
    return out


def _parse_joints(sec: _Section):
    geoms, limits = {}, {}
    for name in FINGER_JOINTS:
        j = sec.sub(name)
        g = RollingJointGeom(j.number("r1_mm", positive=True), j.number("r2_mm", positive=True),
                             j.number("rr1_mm", positive=True), j.number("rr2_mm", positive=True),
                             j.number("rho_wire_mm", positive=True))
        outer, inner = g.r1 / g.r2, g.rr1 / g.rr2
        if not math.isclose(outer, inner, rel_tol=RADIUS_RATIO_RTOL, abs_tol=0.0):
            raise SpecValidationError(
                j._p("rr2_mm"),
                f"outer radius ratio r1/r2={outer:g} must equal inner ratio rr1/rr2={inner:g}")
        geoms[name] = g
        limits[name] = _limits(j, "", j.path)
        j.finish()
    sec.finish()
    return geoms, limits


def _parse_schedule(sec: _Section) -> LinkSchedule:
    terms = []
    for i, row in enumerate(_list(sec, "link_schedule")):
        r = _Section(row, f"link_schedule[{i}]")
        length = r.number("length_mm", nonneg=True)
        coeffs = {}
        for j in ("mcp", "pip"):
            c = _fraction(r.raw(j) if r.raw(j) is not None else 0, r._p(j))
            if c:
                coeffs[j] = c
        terms.append(LinkTerm(length, coeffs))
        r.finish()
    return LinkSchedule(tuple(terms))


def _parse_dh(sec: _Section) -> tuple[DhRow, ...]:
    rows = []
    for i, row in enumerate(_list(sec, "dh_chain")):
        r = _Section(row, f"dh_chain[{i}]")
        coeffs = {}
        for j in ("mcp", "pip"):
            v = r.raw(f"theta_{j}")
            c = _fraction(v if v is not None else 0, r._p(f"theta_{j}"))
            if c:
                coeffs[j] = c
        rows.append(DhRow(r.number("a_mm", default=0.0),
                          math.radians(r.number("alpha_deg", default=0.0)),
                          r.number("d_mm", default=0.0), coeffs,
                          math.radians(r.number("theta_offset_deg", default=0.0))))
        r.finish()
    return tuple(rows)


def _parse_thumb(sec: _Section) -> ThumbSpec:
    lims = tuple(JointLimits.deg(-v, v) for v in (
        sec.number("cmc_flexion_limit_deg", nonneg=True),
        sec.number("cmc_abduction_limit_deg", nonneg=True),
        sec.number("cmc_axial_limit_deg", nonneg=True)))
    seg = sec.raw("segment_lengths_mm")
    lengths = None
    if seg is not None:
        s = _Section(seg, sec._p("segment_lengths_mm"))
        lengths = (s.number("mcp_ip_mm", positive=True), s.number("ip_tip_mm", positive=True))
        s.finish()
    ratio = sec.number("ip_coupling_ratio", positive=True)
    sec.finish()
    return ThumbSpec(lims, lengths, ratio)


def _parse_cmc(sec: _Section) -> tuple[CmcJoint, ...]:
    out = []
    for idx in ("1", "2", "3", "4", "5"):
        c = sec.sub(idx)
        kind_raw = c.raw("kind", required=True)
        try:
            kind = CmcKind(kind_raw)
        except ValueError:
            raise SpecValidationError(c._p("kind"), f"unknown CMC kind {kind_raw!r}") from None
        fl = _limits(c, "flexion_", c.path)
        ab = _limits(c, "abduction_", c.path)
        ax = _limits(c, "axial_", c.path)
        if kind is CmcKind.FIXED:
            for name, lim in (("flexion", fl), ("abduction", ab), ("axial", ax)):
                if lim.width != 0.0 or lim.min != 0.0:
                    raise SpecValidationError(c._p(f"{name}_max_deg"),
                                              "fixed CMC joint must have zero-width limits")
        elif kind is CmcKind.ROLLING and ax.width != 0.0:
            raise SpecValidationError(c._p("axial_max_deg"),
                                      "only a ball CMC joint may rotate axially")
        if idx == "5" and not (28.0 - 1e-9 <= math.degrees(fl.max) <= 44.0 + 1e-9):
            raise SpecValidationError(c._p("flexion_max_deg"),
                                      "fifth CMC flexion limit must lie in 28-44 deg")
        out.append(CmcJoint(kind, fl, ab, ax))
        c.finish()
    sec.finish()
    return tuple(out)


def _parse_nitinol(sec: _Section, joints: Mapping[str, RollingJointGeom]) -> NitinolSpec:
    nominal = sec.number("nominal_wire_d_mm", positive=True)
    m = sec.sub("material")
    e = m.number("e_austenite_mpa", positive=True)
    plateau = m.number("plateau_stress_mpa", positive=True)
    onset_given = m.raw("plateau_onset_strain_pct")
    onset = plateau / e
    if onset_given is not None:
        onset_f = m.number("plateau_onset_strain_pct", positive=True) / 100.0
        if not math.isclose(onset_f, onset, rel_tol=1e-9):
            raise SpecValidationError(m._p("plateau_onset_strain_pct"),
                                      "stress-strain law must be continuous: "
                                      "E * onset strain must equal plateau stress")
    limit = m.number("elastic_limit_strain_pct", positive=True) / 100.0
    if onset >= limit:
        raise SpecValidationError(m._p("elastic_limit_strain_pct"),
                                  "plateau onset strain must be below the elastic limit")
    material = MaterialModel(e, onset, plateau, limit, m.number("moment_shape_factor", positive=True))
    m.finish()

    w = sec.sub("wires")
    wires = {}
    for name in FINGER_JOINTS:
        s = w.sub(name)
        cfg_raw = s.raw("configuration") or "fixed_free"
        try:
            cfg = WireConfiguration(cfg_raw)
        except ValueError:
            raise SpecValidationError(s._p("configuration"), f"unknown configuration {cfg_raw!r}") from None
        count = s.raw("count")
        count = 1 if count is None else count
        if isinstance(count, bool) or not isinstance(count, int) or count < 1:
            raise SpecValidationError(s._p("count"), "must be a positive integer")
        fs = s.raw("fatigue_strain_pct")
        wires[name] = NitinolWire(
            s.number("d_mm", positive=True, default=nominal), joints[name].rho_wire, cfg, count,
            None if fs is None else s.number("fatigue_strain_pct", positive=True))
        s.finish()
    w.finish()

    anchors = []
    for i, row in enumerate(_list(sec, "strain_life")):
        r = _Section(row, f"{sec.path}.strain_life[{i}]")
        anchors.append((r.number("strain_pct", positive=True), r.number("cycles", positive=True)))
        r.finish()
    _check_strain_life(anchors, sec._p("strain_life"))
    sec.finish()
    return NitinolSpec(nominal, material, wires, StrainLifeTable(tuple(anchors)))


def _check_strain_life(anchors, path: str) -> None:
    if len(anchors) < 2:
        raise SpecValidationError(path, "need at least two anchors")
    for (s0, n0), (s1, n1) in zip(anchors, anchors[1:]):
        if not s1 > s0:
            raise SpecValidationError(path, "anchors must be sorted by increasing strain")
        if not n1 < n0:
            raise SpecValidationError(path, "cycles must strictly decrease with strain")


def _parse_routes(items: list, path: str, joints: tuple[str, ...]) -> tuple[TendonRoute, ...]:
    routes = []
    for i, item in enumerate(items):
        r = _Section(item, f"{path}[{i}]")
        name_raw = r.raw("name", required=True)
        try:
            name = TendonName(name_raw)
        except ValueError:
            raise SpecValidationError(r._p("name"), f"unknown tendon {name_raw!r}") from None
        segs = []
        for k, seg in enumerate(_list(r, "segments")):
            s = _Section(seg, f"{r.path}.segments[{k}]")
            joint = s.raw("joint", required=True)
            if joint not in joints:
                raise SpecValidationError(s._p("joint"),
                                          f"unknown joint {joint!r}; expected one of {', '.join(joints)}")
            sign = s.raw("sign")
            sign = 1 if sign is None else sign
            if sign not in (1, -1) or isinstance(sign, bool):
                raise SpecValidationError(s._p("sign"), "sign must be +1 or -1")
            segs.append(TendonSegment(joint, s.number("radius_mm", positive=True), int(sign)))
            s.finish()
        routes.append(TendonRoute(name, tuple(segs)))
        r.finish()
    return tuple(routes)


def _parse_tendons(sec: _Section):
    finger = _parse_routes(_list(sec, "finger"), sec._p("finger"), FINGER_JOINTS)
    thumb = _parse_routes(_list(sec, "thumb"), sec._p("thumb"), THUMB_JOINTS)
    sec.finish()
    return finger, thumb


def _parse_palm(sec: _Section):
    mc = sec.sub("metacarpals")
    bases, lengths, tilts = [], [], []
    for idx in ("1", "2", "3", "4", "5"):
        s = mc.sub(idx)
        b = s.raw("base_mm", required=True)
        if (not isinstance(b, list) or len(b) != 3
                or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in b)):
            raise SpecValidationError(s._p("base_mm"), "expected [x, y, z]")
        bases.append(tuple(float(v) for v in b))
        lengths.append(s.number("length_mm", positive=True))
        tilts.append(math.radians(s.number("neutral_tilt_deg")))
        s.finish()
    mc.finish()
    pts = np.asarray(bases)
    if np.linalg.matrix_rank(pts - pts.mean(axis=0), tol=1e-9) < 2:
        raise SpecValidationError(mc.path, "metacarpal base positions are collinear")

    anchors = []
    for i, row in enumerate(_list(sec, "compression_curve")):
        r = _Section(row, f"{sec.path}.compression_curve[{i}]")
        anchors.append((r.number("displacement_mm", nonneg=True), r.number("force_n", nonneg=True)))
        r.finish()
    cpath = sec._p("compression_curve")
    if anchors[0] != (0.0, 0.0):
        raise SpecValidationError(cpath, "curve must start at (0, 0)")
    for (x0, f0), (x1, f1) in zip(anchors, anchors[1:]):
        if not x1 > x0:
            raise SpecValidationError(cpath, "displacements must strictly increase")
        if f1 < f0:
            raise SpecValidationError(cpath, "force must be nondecreasing")
    if len(anchors) < 2:
        raise SpecValidationError(cpath, "need at least two anchors")
    sec.finish()
    return PalmGeometry(tuple(bases), tuple(lengths), tuple(tilts)), CompressionCurve(tuple(anchors))


def parse_hand_spec(data: Mapping[str, Any]) -> HandSpec:
    """Validate a decoded hand-spec document, filling absent fields with defaults."""
    root = _Section(data, "", DEFAULTS)
    version = root.raw("spec_version")
    if version != SPEC_VERSION:
        raise SpecValidationError("spec_version", f"unsupported version {version!r}")
    fingers = _parse_fingers(root.sub("fingers"))
    joints, limits = _parse_joints(root.sub("joints"))
    schedule = _parse_schedule(root)
    dh = _parse_dh(root)
    thumb = _parse_thumb(root.sub("thumb"))
    cmc = _parse_cmc(root.sub("cmc"))
    nitinol = _parse_nitinol(root.sub("nitinol"), joints)
    finger_t, thumb_t = _parse_tendons(root.sub("tendons"))
    palm, curve = _parse_palm(root.sub("palm"))
    root.finish()
    return HandSpec(fingers, joints, limits, schedule, dh, thumb, cmc, nitinol,
                    finger_t, thumb_t, palm, curve)


def load_hand_spec(path: str | Path | None = None) -> HandSpec:
    """Load and validate a hand-spec JSON file.

    ``None`` or an empty file yields the default hand.
    """
    if path is None:
        return parse_hand_spec({})
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise SpecParseError(f"{path}: {exc.strerror}") from exc
    if not text.strip():
        return parse_hand_spec({})
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecParseError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    return parse_hand_spec(data)


def default_hand_spec() -> HandSpec:
    return parse_hand_spec({})


# --------------------------------------------------------------------------
# serialisation
# --------------------------------------------------------------------------

def _deg(rad: float) -> float:
    return round(math.degrees(rad), 12)


def _frac_str(c: Fraction) -> str:
    return str(c)


def _lim(prefix: str, lim: JointLimits) -> dict[str, float]:
    return {f"{prefix}min_deg": _deg(lim.min), f"{prefix}max_deg": _deg(lim.max)}


def hand_spec_to_dict(spec: HandSpec) -> dict[str, Any]:
    """Inverse of :func:`parse_hand_spec`; emits every field explicitly."""
    thumb: dict[str, Any] = {
        "cmc_flexion_limit_deg": _deg(spec.thumb.cmc_limits[0].max),
        "cmc_abduction_limit_deg": _deg(spec.thumb.cmc_limits[1].max),
        "cmc_axial_limit_deg": _deg(spec.thumb.cmc_limits[2].max),
        "ip_coupling_ratio": spec.thumb.ip_coupling_ratio,
    }
    if spec.thumb.segment_lengths is not None:
        thumb["segment_lengths_mm"] = {"mcp_ip_mm": spec.thumb.segment_lengths[0],
                                       "ip_tip_mm": spec.thumb.segment_lengths[1]}
    mat = spec.nitinol.material

    def routes(rs):
        return [{"name": r.name.value,
                 "segments": [{"joint": s.joint, "radius_mm": s.radius, "sign": s.sign}
                              for s in r.segments]} for r in rs]

    return {
        "spec_version": SPEC_VERSION,
        "fingers": {n: {"tip_dip_mm": d.tip_dip, "dip_pip_mm": d.dip_pip, "pip_mcp_mm": d.pip_mcp}
                    for n, d in spec.fingers.items()},
        "joints": {n: {**_lim("", spec.limits[n]), "r1_mm": g.r1, "r2_mm": g.r2,
                       "rr1_mm": g.rr1, "rr2_mm": g.rr2, "rho_wire_mm": g.rho_wire}
                   for n, g in spec.joints.items()},
        "link_schedule": [{"length_mm": t.length, "mcp": _frac_str(t.coeff("mcp")),
                           "pip": _frac_str(t.coeff("pip"))} for t in spec.link_schedule.terms],
        "dh_chain": [{"a_mm": r.a, "alpha_deg": _deg(r.alpha), "d_mm": r.d,
                      "theta_mcp": _frac_str(r.theta_coeffs.get("mcp", Fraction(0))),
                      "theta_pip": _frac_str(r.theta_coeffs.get("pip", Fraction(0))),
                      "theta_offset_deg": _deg(r.theta_offset)} for r in spec.dh_chain],
        "thumb": thumb,
        "cmc": {str(i + 1): {"kind": c.kind.value, **_lim("flexion_", c.flexion_limits),
                             **_lim("abduction_", c.abduction_limits),
                             **_lim("axial_", c.axial_limits)}
                for i, c in enumerate(spec.cmc)},
        "nitinol": {
            "nominal_wire_d_mm": spec.nitinol.nominal_d,
            "material": {"e_austenite_mpa": mat.e_austenite,
                         "plateau_stress_mpa": mat.plateau_stress,
                         "elastic_limit_strain_pct": round(mat.elastic_limit_strain * 100.0, 12),
                         "moment_shape_factor": mat.moment_shape_factor},
            "wires": {n: {"d_mm": w.d, "count": w.count, "configuration": w.configuration.value,
                          **({} if w.fatigue_strain_pct is None
                             else {"fatigue_strain_pct": w.fatigue_strain_pct})}
                      for n, w in spec.nitinol.wires.items()},
            "strain_life": [{"strain_pct": s, "cycles": n} for s, n in spec.nitinol.strain_life.anchors],
        },
        "tendons": {"finger": routes(spec.finger_tendons), "thumb": routes(spec.thumb_tendons)},
        "palm": {
            "metacarpals": {str(i + 1): {"base_mm": list(spec.palm.base_positions[i]),
                                         "length_mm": spec.palm.lengths[i],
                                         "neutral_tilt_deg": _deg(spec.palm.neutral_tilts[i])}
                            for i in range(5)},
            "compression_curve": [{"displacement_mm": x, "force_n": f}
                                  for x, f in spec.compression.anchors],
        },
    }


def dump_hand_spec(spec: HandSpec, path: str | Path) -> None:
    Path(path).write_text(json.dumps(hand_spec_to_dict(spec), indent=2) + "\n", encoding="utf-8")
