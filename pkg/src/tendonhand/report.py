"""Whole-hand summary tables and their CSV/JSON rendering."""

from __future__ import annotations

import csv
import io
import json
import math
from typing import Any, Iterable, Sequence

from .hand_model import CmcKind, HandSpec, JointState, segment_ratios
from .kinematics import fk_consistency_report, sample_workspace
from .nitinol import joint_report

SCHEMA = 1

CONSISTENCY_STATES_DEG = ((0, 0), (30, 45), (45, 45), (60, 30), (90, 0), (0, 90), (90, 90))


def deg(rad: float) -> float:
    return round(math.degrees(rad), 10) + 0.0


def fmt(v: Any) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v + 0.0)
    return str(v)


def to_csv(rows: Sequence[dict], columns: Sequence[str] | None = None) -> str:
    """Comma-separated, header row, LF line endings."""
    columns = list(columns or (rows[0].keys() if rows else []))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([fmt(r.get(c)) for c in columns])
    return buf.getvalue()


def to_json(obj: Any) -> str:
    return json.dumps(obj, indent=2, sort_keys=False) + "\n"


def cmc_rom_label(joint) -> str:
    if joint.kind is CmcKind.FIXED:
        return "Fixed"
    if joint.kind is CmcKind.BALL:
        return f"RO({deg(joint.axial_limits.max):g}°)"
    return f"FL({deg(joint.flexion_limits.max):g}°)"


def consistency_rows(spec: HandSpec, states_deg: Iterable = CONSISTENCY_STATES_DEG) -> list[dict]:
    rows = []
    for m, p in states_deg:
        r = fk_consistency_report(JointState.from_degrees(m, p), spec.link_schedule, spec.dh_chain)
        rows.append({"theta_mcp_deg": float(m), "theta_pip_deg": float(p),
                     "link_x_mm": r.link_pose.x, "link_y_mm": r.link_pose.y,
                     "dh_x_mm": r.dh_pose.x, "dh_y_mm": r.dh_pose.y, "gap_mm": r.gap})
    return rows


def build_report(spec: HandSpec, workspace_step_deg: float = 1.0) -> dict:
    segments = []
    for name, d in spec.fingers.items():
        r32, r21 = segment_ratios(d)
        segments.append({"finger": name, "tip_dip_mm": d.tip_dip, "dip_pip_mm": d.dip_pip,
                         "pip_mcp_mm": d.pip_mcp, "ratio_32": r32, "ratio_21": r21,
                         "ratio_32_2dp": round(r32, 2), "ratio_21_2dp": round(r21, 2)})
    rom = [{"joint": j.upper(), "min_deg": deg(l.min), "max_deg": deg(l.max)}
           for j, l in spec.limits.items()]
    cmc = []
    for i, c in enumerate(spec.cmc, start=1):
        cmc.append({"joint": i, "kind": c.kind.value, "rom": cmc_rom_label(c),
                    **{f"{ax}_{end}_deg": deg(getattr(lim, end))
                       for ax, lim in c.axis_limits().items() for end in ("min", "max")}})
    ws = sample_workspace(spec.link_schedule, spec.limits, math.radians(workspace_step_deg))
    mat = spec.nitinol.material
    return {
        "schema": SCHEMA,
        "segments": segments,
        "rom": rom,
        "cmc": cmc,
        "nitinol": {
            "material": {"e_austenite_mpa": mat.e_austenite, "plateau_stress_mpa": mat.plateau_stress,
                         "plateau_onset_strain_pct": mat.plateau_onset_strain * 100.0,
                         "elastic_limit_strain_pct": mat.elastic_limit_strain * 100.0,
                         "moment_shape_factor": mat.moment_shape_factor},
            "joints": joint_report(spec),
            "strain_life": [{"strain_pct": s, "cycles": n} for s, n in spec.nitinol.strain_life.anchors],
        },
        "workspace": {"grid_step_deg": workspace_step_deg, "count": ws.count,
                      "min_radius_mm": ws.min_radius, "max_radius_mm": ws.max_radius,
                      "reach_mm": spec.link_schedule.reach},
        "fk_consistency": consistency_rows(spec),
    }
