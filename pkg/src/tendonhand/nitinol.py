"""Superelastic Nitinol return wires.

Bending strain of a wire of diameter ``d`` bent to radius ``rho`` is
``d / (2 rho)``.  Stress follows a bilinear law (linear, then a flat
plateau), the restoring moment follows elastic beam theory capped at a
plateau moment, and fatigue life is interpolated log-log between
strain-life anchors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DomainError
from .hand_model import HandSpec, MaterialModel, NitinolWire, StrainLifeTable

FATIGUE_WINDOW = (0.5, 2.0)


def bending_strain(d: float, rho: float) -> float:
    if d <= 0 or rho <= 0:
        raise DomainError("wire diameter and bend radius must be positive")
    return d / (2.0 * rho)


def second_moment(d: float) -> float:
    """Area moment of a solid round section, mm^4."""
    return math.pi * d ** 4 / 64.0


@dataclass(frozen=True)
class StressResult:
    stress: float        # MPa
    inelastic: bool      # strain beyond the recoverable limit


def stress(strain: float, mat: MaterialModel) -> StressResult:
    if strain < 0:
        raise DomainError(f"strain must be >= 0, got {strain:g}")
    if strain >= mat.plateau_onset_strain:
        s = mat.plateau_stress
    else:
        s = mat.e_austenite * strain
    return StressResult(s, strain > mat.elastic_limit_strain)


@dataclass(frozen=True)
class ElasticCheck:
    ok: bool
    margin: float        # elastic limit minus bending strain
    strain: float


def elastic_check(d: float, rho: float, mat: MaterialModel) -> ElasticCheck:
    eps = bending_strain(d, rho)
    return ElasticCheck(eps <= mat.elastic_limit_strain, mat.elastic_limit_strain - eps, eps)


@dataclass(frozen=True)
class MomentResult:
    moment: float        # N*mm, after the plateau cap
    uncapped: float      # N*mm, E*I/rho
    capped: bool


def plateau_moment(d: float, mat: MaterialModel) -> float:
    """Moment ceiling once the section has transformed onto the plateau.

    ``moment_shape_factor`` is the ratio of elastic to plastic-analogue
    section modulus, so the ceiling is ``plateau_stress * Z_elastic / factor``.
    """
    z_elastic = second_moment(d) / (d / 2.0)
    return mat.plateau_stress * z_elastic / mat.moment_shape_factor


def restoring_moment(d: float, rho: float, mat: MaterialModel) -> MomentResult:
    if d <= 0 or rho <= 0:
        raise DomainError("wire diameter and bend radius must be positive")
    m = mat.e_austenite * second_moment(d) / rho
    cap = plateau_moment(d, mat)
    if m > cap:
        return MomentResult(cap, m, True)
    return MomentResult(m, m, False)


def wire_moment(wire: NitinolWire, mat: MaterialModel) -> MomentResult:
    """Moment of a joint's wire set; parallel or crossed wires simply add."""
    r = restoring_moment(wire.d, wire.rho, mat)
    return MomentResult(wire.count * r.moment, wire.count * r.uncapped, r.capped)


@dataclass(frozen=True)
class FatigueResult:
    cycles: float
    extrapolated: bool


def fatigue_life(strain_pct: float, table: StrainLifeTable) -> FatigueResult:
    """Cycles to failure at a strain amplitude given in percent.

    Log-log linear between anchors and along the end segments out to
    ``[0.5 * first, 2 * last]``.  Outside that window the strain is clamped
    to the window edge.  Anything off the anchor range is flagged.
    """
    if not strain_pct > 0:
        raise DomainError(f"strain amplitude must be > 0, got {strain_pct:g}")
    strains = [a[0] for a in table.anchors]
    cycles = [a[1] for a in table.anchors]
    for s, n in table.anchors:
        if math.isclose(strain_pct, s, rel_tol=1e-12):
            return FatigueResult(n, False)
    lo, hi = strains[0] * FATIGUE_WINDOW[0], strains[-1] * FATIGUE_WINDOW[1]
    extrapolated = not strains[0] <= strain_pct <= strains[-1]
    x = math.log(min(max(strain_pct, lo), hi))
    ls, ln = np.log(strains), np.log(cycles)
    k = int(np.clip(np.searchsorted(ls, x) - 1, 0, len(ls) - 2))
    t = (x - ls[k]) / (ls[k + 1] - ls[k])
    return FatigueResult(float(math.exp(ln[k] + t * (ln[k + 1] - ln[k]))), extrapolated)


@dataclass(frozen=True)
class BundleResult:
    n: int
    d_each: float
    strain_factor: float
    life_gain: float | None


def bundle_redesign(d_single: float, n: int, strain_pct: float | None = None,
                    table: StrainLifeTable | None = None) -> BundleResult:
    """Replace one wire by ``n`` thinner wires of the same total bending stiffness.

    ``n * I(d_each) == I(d_single)`` gives ``d_each = d_single * n**-0.25``;
    bending strain scales by the same factor.  With a joint strain amplitude
    and a strain-life table, ``life_gain`` is the ratio of bundle life to
    single-wire life.
    """
    if n < 1:
        raise ValueError("bundle needs at least one wire")
    factor = 1.0 if n == 1 else n ** -0.25
    gain = None
    if strain_pct is not None and table is not None:
        gain = (fatigue_life(strain_pct * factor, table).cycles
                / fatigue_life(strain_pct, table).cycles)
    return BundleResult(n, d_single * factor, factor, gain)


# --------------------------------------------------------------------------
# material fit
# --------------------------------------------------------------------------

def _sse(strains, stresses, e, plateau):
    model = np.minimum(e * strains, plateau)
    return float(np.sum((model - stresses) ** 2))


def fit_bilinear(strains: Sequence[float], stresses: Sequence[float], **kw) -> MaterialModel:
    """Least-squares continuous bilinear law through (strain, stress) points.

    For each split of the sorted points into a linear head and a plateau
    tail the two parameters decouple (slope through the origin, mean of the
    tail); splits whose onset lands outside their interval are replaced by
    fits with the onset pinned on a data point.
    """
    eps = np.asarray(strains, float)
    sig = np.asarray(stresses, float)
    order = np.argsort(eps)
    eps, sig = eps[order], sig[order]
    n = len(eps)
    if n < 2:
        raise ValueError("need at least two points")
    candidates = []
    for k in range(1, n):
        e = float(np.dot(sig[:k], eps[:k]) / np.dot(eps[:k], eps[:k]))
        p = float(sig[k:].mean())
        if eps[k - 1] <= p / e <= eps[k]:
            candidates.append((e, p))
    for onset in eps:
        m = np.minimum(eps, onset)
        e = float(np.dot(sig, m) / np.dot(m, m))
        candidates.append((e, e * onset))
    e, p = min(candidates, key=lambda c: _sse(eps, sig, *c))
    return MaterialModel.from_modulus(e, p, **kw)


# --------------------------------------------------------------------------
# reports
# --------------------------------------------------------------------------

JOINT_ORDER = ("dip", "pip", "mcp")


def joint_report(spec: HandSpec) -> list[dict]:
    """One row per finger joint: strain, stress, moment, life and elastic check."""
    mat = spec.nitinol.material
    rows = []
    for name in JOINT_ORDER:
        w = spec.nitinol.wires[name]
        eps = bending_strain(w.d, w.rho)
        life_strain = w.fatigue_strain_pct if w.fatigue_strain_pct is not None else eps * 100.0
        life = fatigue_life(life_strain, spec.nitinol.strain_life)
        st = stress(eps, mat)
        mom = wire_moment(w, mat)
        chk = elastic_check(w.d, w.rho, mat)
        rows.append({
            "joint": name, "d_mm": w.d, "rho_mm": w.rho, "wire_count": w.count,
            "strain_pct": eps * 100.0, "stress_mpa": st.stress, "moment_nmm": mom.moment,
            "moment_capped": mom.capped, "fatigue_strain_pct": life_strain,
            "life_cycles": life.cycles, "life_extrapolated": life.extrapolated,
            "elastic_ok": chk.ok, "elastic_margin_pct": chk.margin * 100.0,
            "inelastic": st.inelastic,
        })
    return rows


def bundle_study(spec: HandSpec, n_max: int) -> list[dict]:
    mat = spec.nitinol.material
    rows = []
    for name in JOINT_ORDER:
        w = spec.nitinol.wires[name]
        eps_pct = w.fatigue_strain_pct if w.fatigue_strain_pct is not None else bending_strain(w.d, w.rho) * 100
        base = restoring_moment(w.d, w.rho, mat).uncapped
        for n in range(1, n_max + 1):
            b = bundle_redesign(w.d, n, eps_pct, spec.nitinol.strain_life)
            each = restoring_moment(b.d_each, w.rho, mat).uncapped
            rows.append({
                "joint": name, "n": n, "d_each_mm": b.d_each, "strain_factor": b.strain_factor,
                "strain_pct": eps_pct * b.strain_factor,
                "life_cycles": fatigue_life(eps_pct * b.strain_factor, spec.nitinol.strain_life).cycles,
                "life_gain": b.life_gain, "moment_ratio": n * each / base,
            })
    return rows
