"""Blow-up surrogates: boundary L2 growth and finite-radius classification.

S(r) = (r^-1 int_{dB_r} u^2)^(1/2) measures the trace amplitude; S(r)/r^2
is the quadratic-scaling ratio whose finite-r trend stands in for the
behaviour of u(r x)/r^2.  Classification is reported as a trend over the
sampled radii, never as a limit claim.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from .field import CircleTrace, ScalarField, integrate_circle, trace_on_circle
from .monotonicity import phi

CASE1 = "case1"
CASE3 = "case3"
INCONCLUSIVE = "inconclusive"


class DegenerateTrace(RuntimeError):
    """Trace amplitude too small to normalize."""


@dataclass
class BlowupThresholds:
    """Calibration constants for the finite-radius classifier.

    delta_phi is 0.05*|phi(r_max)| with an absolute floor; trend_slack is
    the relative tolerance on the S(r)/r^2 endpoint comparison.
    """

    delta_phi_rel: float = 0.05
    delta_phi_abs: float = 1e-3
    trend_slack: float = 0.05
    s_floor: float = 1e-12


@dataclass
class BlowupReport:
    """Per-radius blow-up diagnostics plus the trend classification."""

    radii: np.ndarray
    s_values: np.ndarray
    ratios: np.ndarray  # S(r) / r^2
    traces: list[CircleTrace]
    mode_fractions: dict[int, np.ndarray]
    classification: str
    phi_min_r: float
    phi_max_r: float
    delta_phi: float
    thresholds: BlowupThresholds = dc_field(default_factory=BlowupThresholds)


def s_norm(u: ScalarField, r: float) -> float:
    """Boundary L2 amplitude (r^-1 int_{dB_r} u^2)^(1/2)."""
    return math.sqrt(max(integrate_circle(u.apply(np.square), r) / r, 0.0))


def blowup_profile(u: ScalarField, r: float, m: int = 256) -> CircleTrace:
    """Trace of u on dB_r divided by S(r); unit L2(dB_1) norm by construction."""
    s = s_norm(u, r)
    scale = float(np.max(np.abs(u.values)))
    if s <= BlowupThresholds().s_floor * max(scale, 1.0):
        raise DegenerateTrace(f"S({r:g}) = {s:.3e} is too small to normalize the trace")
    tr = trace_on_circle(u, r, m)
    return CircleTrace(
        radius=tr.radius,
        angles=tr.angles,
        samples=tr.samples / s,
        a=tr.a / s,
        b=tr.b / s,
    )


def classify(u: ScalarField, radii, thresholds: BlowupThresholds | None = None) -> str:
    """Trend classification over the sampled radii.

    case1: phi(r_min) clearly negative and S(r)/r^2 does not decay toward
    the origin (quadratic growth surrogate; a flat ratio counts).
    case3: phi(r_min) within delta of zero and S(r)/r^2 decaying toward the
    origin (degeneracy surrogate).  Anything else is inconclusive.
    """
    if thresholds is None:
        thresholds = BlowupThresholds()
    radii = np.asarray(sorted(radii), dtype=float)
    if len(radii) < 2:
        raise ValueError("classification needs at least two radii")
    phi_min = phi(u, float(radii[0]))
    phi_max = phi(u, float(radii[-1]))
    delta = max(thresholds.delta_phi_rel * abs(phi_max), thresholds.delta_phi_abs)
    ratio_small = s_norm(u, float(radii[0])) / radii[0] ** 2
    ratio_large = s_norm(u, float(radii[-1])) / radii[-1] ** 2
    growing_inward = ratio_small >= ratio_large * (1.0 - thresholds.trend_slack)
    decaying_inward = ratio_small < ratio_large * (1.0 - thresholds.trend_slack)
    if phi_min < -delta and growing_inward:
        return CASE1
    if abs(phi_min) <= delta and decaying_inward:
        return CASE3
    return INCONCLUSIVE


def blowup_report(u: ScalarField, radii, thresholds: BlowupThresholds | None = None,
                  m: int = 256, modes: tuple[int, ...] = (2, 4)) -> BlowupReport:
    """Assemble S, normalized traces, mode energies, and the classification."""
    if thresholds is None:
        thresholds = BlowupThresholds()
    radii = np.asarray(sorted(radii), dtype=float)
    s_values = np.array([s_norm(u, float(r)) for r in radii])
    traces = [blowup_profile(u, float(r), m) for r in radii]
    fractions = {
        ell: np.array([tr.mode_energy_fraction(ell) for tr in traces]) for ell in modes
    }
    phi_min = phi(u, float(radii[0]))
    phi_max = phi(u, float(radii[-1]))
    delta = max(thresholds.delta_phi_rel * abs(phi_max), thresholds.delta_phi_abs)
    return BlowupReport(
        radii=radii,
        s_values=s_values,
        ratios=s_values / radii**2,
        traces=traces,
        mode_fractions=fractions,
        classification=classify(u, radii, thresholds),
        phi_min_r=phi_min,
        phi_max_r=phi_max,
        delta_phi=delta,
        thresholds=thresholds,
    )


def write_blowup_csv(report: BlowupReport, path) -> None:
    """One row per radius: r, S, S/r^2, normalized a0..a8, b1..b8, fractions."""
    n_modes = len(report.traces[0].a) - 1
    cols = ["r", "s", "s_over_r2"]
    cols += [f"a{l}" for l in range(n_modes + 1)]
    cols += [f"b{l}" for l in range(1, n_modes + 1)]
    cols += [f"mode{ell}_energy_fraction" for ell in sorted(report.mode_fractions)]
    rows = []
    for n, r in enumerate(report.radii):
        tr = report.traces[n]
        row = [r, report.s_values[n], report.ratios[n]]
        row += list(tr.a)
        row += list(tr.b[1:])
        row += [report.mode_fractions[ell][n] for ell in sorted(report.mode_fractions)]
        rows.append(row)
    np.savetxt(path, np.asarray(rows), delimiter=",", header=",".join(cols),
               comments="", fmt="%.17g")
