"""Batch command-line front end.

Angles are given in degrees and lengths in millimetres.  Each subcommand
prints its main table or summary to stdout; with ``--out DIR`` it also
writes its files there together with a ``manifest.json``.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from pathlib import Path

from . import __version__
from .errors import HandError
from .hand_model import HandSpec, JointState, load_hand_spec
from .kinematics import (
    IkOptions,
    fk_consistency_report,
    fk_planar,
    ik_planar,
    sample_workspace,
    track_trajectory,
)
from .nitinol import bundle_study, joint_report
from .palm import arch_deformation, cmc_rom_check, compression_force, flexion_from_markers, read_markers_csv
from .report import SCHEMA, build_report, consistency_rows, deg, to_csv, to_json
from .tendon import excursion_table

TRACK_COLUMNS = ["target_x_mm", "target_y_mm", "x_mm", "y_mm", "err_mm",
                 "theta_mcp_deg", "theta_pip_deg", "repeat", "point", "unreached"]
NITINOL_COLUMNS = ["joint", "d_mm", "rho_mm", "strain_pct", "stress_mpa", "moment_nmm",
                   "life_cycles", "elastic_ok"]


class UsageError(Exception):
    pass


def _g(v: float) -> str:
    return f"{v + 0.0:.10g}"


class Run:
    """Collects outputs of one invocation and writes them with a manifest."""

    def __init__(self, args, name: str):
        self.args = args
        self.name = name
        self.out = Path(args.out) if args.out else None
        self.files: dict[str, str] = {}
        self.inputs: list[str] = []

    def add(self, filename: str, text: str) -> None:
        self.files[filename] = text

    def finish(self, options: dict) -> None:
        if self.out is None:
            return
        self.out.mkdir(parents=True, exist_ok=True)
        for fn, text in self.files.items():
            with open(self.out / fn, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
        manifest = {
            "schema": SCHEMA,
            "subcommand": self.name,
            "config_path": str(Path(self.args.spec).resolve()) if self.args.spec else None,
            "inputs": [str(Path(p).resolve()) for p in self.inputs],
            "outputs": sorted(self.files),
            "options": options,
            "seed": self.args.seed,
            "tool_version": __version__,
        }
        with open(self.out / "manifest.json", "w", encoding="utf-8", newline="\n") as fh:
            fh.write(to_json(manifest))


def _spec(args) -> HandSpec:
    return load_hand_spec(args.spec)


def _grid(lo: float, hi: float, step: float) -> list[float]:
    if step <= 0:
        raise UsageError("step must be > 0")
    n = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return [lo + i * step for i in range(n)]


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------

def cmd_fk(args) -> int:
    spec = _spec(args)
    state = JointState.from_degrees(args.mcp, args.pip)
    pose = fk_planar(spec.link_schedule, state, spec.limits)
    line = f"x_mm={_g(pose.x)} y_mm={_g(pose.y)}"
    row = {"theta_mcp_deg": args.mcp, "theta_pip_deg": args.pip,
           "theta_dip_deg": deg(state.theta_dip), "x_mm": pose.x, "y_mm": pose.y}
    if args.consistency:
        rep = fk_consistency_report(state, spec.link_schedule, spec.dh_chain)
        line += f" dh_x_mm={_g(rep.dh_pose.x)} dh_y_mm={_g(rep.dh_pose.y)} gap_mm={_g(rep.gap)}"
        row.update(dh_x_mm=rep.dh_pose.x, dh_y_mm=rep.dh_pose.y, gap_mm=rep.gap)
    print(line)
    run = Run(args, "fk")
    run.add("fk.csv", to_csv([row]))
    run.finish({"mcp_deg": args.mcp, "pip_deg": args.pip, "consistency": args.consistency})
    return 0


def _ik_opts(args) -> IkOptions:
    if args.max_iter < 1:
        raise UsageError("--max-iter must be >= 1")
    return IkOptions(tolerance=args.tolerance, max_iterations=args.max_iter, damping=args.damping)


def cmd_ik(args) -> int:
    spec = _spec(args)
    res = ik_planar(spec.link_schedule, (args.x, args.y), spec.limits, _ik_opts(args))
    s = res.state
    print(f"theta_mcp_deg={_g(math.degrees(s.theta_mcp))} theta_pip_deg={_g(math.degrees(s.theta_pip))} "
          f"theta_dip_deg={_g(math.degrees(s.theta_dip))} residual_mm={_g(res.residual)} "
          f"iterations={res.iterations} unreached={'true' if res.unreached else 'false'}")
    run = Run(args, "ik")
    run.add("ik.csv", to_csv([{
        "target_x_mm": args.x, "target_y_mm": args.y,
        "theta_mcp_deg": math.degrees(s.theta_mcp), "theta_pip_deg": math.degrees(s.theta_pip),
        "theta_dip_deg": math.degrees(s.theta_dip), "residual_mm": res.residual,
        "iterations": res.iterations, "unreached": res.unreached}]))
    run.finish({"x_mm": args.x, "y_mm": args.y, "tolerance_mm": args.tolerance,
                "max_iter": args.max_iter, "damping_mm2": args.damping})
    return 0


def read_waypoints(path: str) -> list[tuple[float, float]]:
    """Read an ``x_mm,y_mm`` CSV (header optional)."""
    pts = []
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"{path}: {exc.strerror}") from None
    with fh:
        for line, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            if line == 1 and [c.strip() for c in row[:2]] == ["x_mm", "y_mm"]:
                continue
            try:
                if len(row) != 2:
                    raise ValueError
                x, y = float(row[0]), float(row[1])
                if not (math.isfinite(x) and math.isfinite(y)):
                    raise ValueError
            except ValueError:
                raise HandError(f"{path}:{line}: malformed waypoint row {','.join(row)!r}") from None
            pts.append((x, y))
    if not pts:
        raise UsageError(f"{path}: no waypoints")
    return pts


def cmd_track(args) -> int:
    spec = _spec(args)
    pts = read_waypoints(args.waypoints)
    if args.repeats < 1:
        raise UsageError("--repeats must be >= 1")
    if args.noise_deg < 0:
        raise UsageError("--noise-deg must be >= 0")
    res = track_trajectory(spec.link_schedule, pts, _ik_opts(args), spec.limits,
                           repeats=args.repeats, noise_deg=args.noise_deg, seed=args.seed)
    rows = [{"target_x_mm": r.target.x, "target_y_mm": r.target.y, "x_mm": r.achieved.x,
             "y_mm": r.achieved.y, "err_mm": r.error, "theta_mcp_deg": math.degrees(r.theta_mcp),
             "theta_pip_deg": math.degrees(r.theta_pip), "repeat": r.repeat, "point": r.point,
             "unreached": r.unreached} for r in res.records]
    summary = {"schema": SCHEMA, "points": len(pts), "repeats": args.repeats,
               "noise_deg": args.noise_deg, "seed": args.seed,
               "max_abs_mean_err_mm": res.max_abs_mean_error,
               "repeatability_mm": res.repeatability, "max_err_mm": res.max_error,
               "unreached_points": res.unreached_points}
    print(to_json(summary), end="")
    run = Run(args, "track")
    run.inputs.append(args.waypoints)
    run.add("track.csv", to_csv(rows, TRACK_COLUMNS))
    run.add("track_summary.json", to_json(summary))
    run.finish({"repeats": args.repeats, "noise_deg": args.noise_deg,
                "tolerance_mm": args.tolerance, "max_iter": args.max_iter, "damping_mm2": args.damping})
    return 0


def cmd_workspace(args) -> int:
    spec = _spec(args)
    if args.step_deg <= 0:
        raise UsageError("--step-deg must be > 0")
    ws = sample_workspace(spec.link_schedule, spec.limits, math.radians(args.step_deg))
    rows = [{"x_mm": float(p[0]), "y_mm": float(p[1]), "theta_mcp_deg": math.degrees(a[0]),
             "theta_pip_deg": math.degrees(a[1])} for p, a in zip(ws.points, ws.angles)]
    summary = {"schema": SCHEMA, "grid_step_deg": args.step_deg, "count": ws.count,
               "min_radius_mm": ws.min_radius, "max_radius_mm": ws.max_radius,
               "reach_mm": spec.link_schedule.reach}
    print(to_json(summary), end="")
    run = Run(args, "workspace")
    run.add("workspace.csv", to_csv(rows, ["x_mm", "y_mm", "theta_mcp_deg", "theta_pip_deg"]))
    run.add("workspace_summary.json", to_json(summary))
    run.finish({"step_deg": args.step_deg})
    return 0


def cmd_tendon(args) -> int:
    spec = _spec(args)
    mcp = _grid(0.0, deg(spec.limits["mcp"].max), args.step_deg)
    pip = _grid(0.0, deg(spec.limits["pip"].max), args.step_deg)
    states = [JointState.from_degrees(m, p) for m in mcp for p in pip]
    text = to_csv(excursion_table(spec.finger_tendons, states))
    print(text, end="")
    run = Run(args, "tendon")
    run.add("tendon.csv", text)
    run.finish({"step_deg": args.step_deg})
    return 0


def cmd_nitinol(args) -> int:
    spec = _spec(args)
    if args.bundle_max < 1:
        raise UsageError("--bundle-max must be >= 1")
    text = to_csv(joint_report(spec), NITINOL_COLUMNS)
    print(text, end="")
    run = Run(args, "nitinol")
    run.add("nitinol.csv", text)
    run.add("nitinol_bundle.csv", to_csv(bundle_study(spec, args.bundle_max)))
    run.finish({"bundle_max": args.bundle_max})
    return 0


def cmd_palm(args) -> int:
    spec = _spec(args)
    t4 = _grid(0.0, deg(spec.cmc[3].flexion_limits.max), args.step_deg)
    t5 = _grid(0.0, deg(spec.cmc[4].flexion_limits.max), args.step_deg)
    rows = [{"theta4_deg": a, "theta5_deg": b,
             "deformation_pct": arch_deformation(math.radians(a), math.radians(b), spec.palm, spec.cmc)}
            for a in t4 for b in t5]
    text = to_csv(rows)
    print(text, end="")
    run = Run(args, "palm")
    run.add("palm_deformation.csv", text)
    last = spec.compression.anchors[-1][0]
    comp = []
    for x in _grid(0.0, last, args.compression_step_mm):
        f = compression_force(x, spec.compression)
        comp.append({"displacement_mm": x, "force_n": f.force, "clamped": f.clamped})
    run.add("palm_compression.csv", to_csv(comp))
    if args.markers:
        run.inputs.append(args.markers)
        flex = flexion_from_markers(read_markers_csv(args.markers), args.reference)
        run.add("palm_flexion.csv", to_csv([{"body": b, "flexion_deg": v} for b, v in flex.items()]))
        for b, v in flex.items():
            print(f"body={b} flexion_deg={_g(v)}", file=sys.stderr)
    run.finish({"step_deg": args.step_deg, "compression_step_mm": args.compression_step_mm,
                "reference": args.reference})
    return 0


def cmd_rom_check(args) -> int:
    spec = _spec(args)
    angles = {"flexion": math.radians(args.flexion_deg),
              "abduction": math.radians(args.abduction_deg),
              "axial": math.radians(args.axial_deg)}
    res = cmc_rom_check(args.joint, angles, spec.cmc)
    print(f"ok={'true' if res.ok else 'false'}")
    for v in res.violations:
        print(f"violation: {v}")
    run = Run(args, "rom-check")
    run.add("rom_check.csv", to_csv([{"joint": args.joint, "flexion_deg": args.flexion_deg,
                                      "abduction_deg": args.abduction_deg,
                                      "axial_deg": args.axial_deg, "ok": res.ok,
                                      "violations": "; ".join(res.violations)}]))
    run.finish({"joint": args.joint, "flexion_deg": args.flexion_deg,
                "abduction_deg": args.abduction_deg, "axial_deg": args.axial_deg})
    return 0


def cmd_report(args) -> int:
    spec = _spec(args)
    rep = build_report(spec, args.workspace_step_deg)
    text = to_json(rep)
    print(text, end="")
    run = Run(args, "report")
    run.add("report.json", text)
    run.add("fk_consistency.csv", to_csv(consistency_rows(spec)))
    run.finish({"workspace_step_deg": args.workspace_step_deg})
    return 0


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------

def _ik_args(p):
    p.add_argument("--tolerance", type=float, default=1e-3, help="IK residual tolerance (mm)")
    p.add_argument("--max-iter", type=int, default=200, help="IK iterations per seed")
    p.add_argument("--damping", type=float, default=1.0, help="initial DLS damping (mm^2)")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--spec", default=argparse.SUPPRESS, help="hand-spec JSON file")
    common.add_argument("--out", default=argparse.SUPPRESS, help="output directory")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="RNG seed")

    parser = argparse.ArgumentParser(prog="tendonhand", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--spec", default=None, help="hand-spec JSON file (default: built-in hand)")
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument("--seed", type=int, default=0, help="RNG seed for stochastic options")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fk", parents=[common], help="fingertip position for MCP/PIP angles")
    p.add_argument("--mcp", type=float, default=0.0, help="MCP angle (deg)")
    p.add_argument("--pip", type=float, default=0.0, help="PIP angle (deg); DIP follows at 2/3")
    p.add_argument("--consistency", action="store_true", help="also evaluate the DH chain")
    p.set_defaults(func=cmd_fk)

    p = sub.add_parser("ik", parents=[common], help="joint angles for a fingertip target")
    p.add_argument("--x", type=float, required=True, help="target x (mm)")
    p.add_argument("--y", type=float, required=True, help="target y (mm)")
    _ik_args(p)
    p.set_defaults(func=cmd_ik)

    p = sub.add_parser("track", parents=[common], help="track a waypoint file")
    p.add_argument("--waypoints", required=True, help="CSV of x_mm,y_mm")
    p.add_argument("--repeats", type=int, default=10)
    p.add_argument("--noise-deg", type=float, default=0.0, help="joint noise std dev (deg)")
    _ik_args(p)
    p.set_defaults(func=cmd_track)

    p = sub.add_parser("workspace", parents=[common], help="sample the fingertip workspace")
    p.add_argument("--step-deg", type=float, default=1.0)
    p.set_defaults(func=cmd_workspace)

    p = sub.add_parser("tendon", parents=[common], help="tendon excursion table over a pose sweep")
    p.add_argument("--step-deg", type=float, default=15.0)
    p.set_defaults(func=cmd_tendon)

    p = sub.add_parser("nitinol", parents=[common], help="return-wire strain, moment and life")
    p.add_argument("--bundle-max", type=int, default=8, help="largest bundle size studied")
    p.set_defaults(func=cmd_nitinol)

    p = sub.add_parser("palm", parents=[common], help="palm deformation, compression and markers")
    p.add_argument("--step-deg", type=float, default=2.0)
    p.add_argument("--compression-step-mm", type=float, default=3.0)
    p.add_argument("--markers", help="marker CSV (body,label,x_mm,y_mm,z_mm)")
    p.add_argument("--reference", default="3", help="body defining the reference plane")
    p.set_defaults(func=cmd_palm)

    p = sub.add_parser("rom-check", parents=[common], help="check CMC angles against limits")
    p.add_argument("--joint", type=int, required=True, choices=range(1, 6))
    p.add_argument("--flexion-deg", type=float, default=0.0)
    p.add_argument("--abduction-deg", type=float, default=0.0)
    p.add_argument("--axial-deg", type=float, default=0.0)
    p.set_defaults(func=cmd_rom_check)

    p = sub.add_parser("report", parents=[common], help="full hand report (JSON)")
    p.add_argument("--workspace-step-deg", type=float, default=1.0)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return 2
    except (HandError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
