"""Command line driver for reproducible experiments and standalone analyses.

Each experiment writes every artifact it produced plus a JSON manifest that
records all parameters (defaults included), a content hash of the inputs,
the headline numbers, and the outcome of each built-in check.  A manifest
is written even when the solver fails, and `rerun` replays any manifest
and compares the fresh headline numbers against the recorded ones.

Exit codes: 0 success, 2 bad parameters, 3 solver failure, 4 headline
check failure.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
import time
from dataclasses import dataclass, asdict
from pathlib import Path

import numpy as np

from .blowup import CASE1, CASE3, blowup_report, write_blowup_csv
from .field import ScalarField, eval_origin, read_field_csv
from .freeboundary import (
    crossing_angles,
    extract_zero_set,
    fit_arcs_at_origin,
    write_arcs_json,
    write_levelset_csv,
)
from .mesh import SymmetryGroup, build_sector_grid, reflect_to_disk
from .monotonicity import (
    energy_bound_integral,
    find_threshold,
    mc_energy_bound,
    phi_profile,
    threshold_scan,
    write_profile_csv,
)
from .poisson import SolverError
from .semilinear import (
    ContinuationConfig,
    FixedPointError,
    export_solution,
    solve_fixed_point,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_SOLVER = 3
EXIT_CHECKS = 4

TRACE_SAMPLES = 256
DEG = 180.0 / math.pi


# --- manifest plumbing ---------------------------------------------------


def _jsonable(obj):
    """Coerce numpy containers and scalars into plain JSON types."""
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def _content_hash(experiment: str, parameters: dict) -> str:
    blob = json.dumps({"experiment": experiment, "parameters": _jsonable(parameters)},
                      sort_keys=True).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()


@dataclass
class RunManifest:
    """Everything needed to replay a run and audit its outcome."""

    experiment: str
    parameters: dict
    content_hash: str
    outputs: list
    headline: dict
    checks: list
    status: str  # "ok" | "check_failure" | "solver_failure"
    failure: dict | None = None
    runtime_seconds: float | None = None

    @property
    def exit_code(self) -> int:
        return {"ok": EXIT_OK, "check_failure": EXIT_CHECKS}.get(self.status, EXIT_SOLVER)

    def write(self, out_dir) -> Path:
        path = Path(out_dir) / "manifest.json"
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(_jsonable(asdict(self)), fh, indent=2)
        return path

    @staticmethod
    def load(path) -> "RunManifest":
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
        raw.pop("exit_code", None)
        return RunManifest(**raw)


class _Checks:
    """Accumulates named pass/fail records for the manifest."""

    def __init__(self):
        self.records = []

    def add(self, name: str, passed: bool, detail: str) -> bool:
        self.records.append({"name": name, "passed": bool(passed), "detail": detail})
        return bool(passed)

    @property
    def all_passed(self) -> bool:
        return all(r["passed"] for r in self.records)


def _status(checks: _Checks) -> str:
    return "ok" if checks.all_passed else "check_failure"


def _print_checks(manifest: RunManifest) -> None:
    for rec in manifest.checks:
        mark = "pass" if rec["passed"] else "FAIL"
        print(f"  [{mark}] {rec['name']}: {rec['detail']}")
    print(f"status: {manifest.status}")


# --- shared experiment scaffolding ---------------------------------------


def _default_phi_radii(n_r: int, lo: float = 0.25, hi: float = 0.8) -> list:
    """Sampling ladder for the monotonicity profile, tied to the grid step."""
    step = 4.0 / n_r
    return [lo + n * step for n in range(int((hi - lo) / step + 1e-9) + 1)]


DEFAULT_BLOWUP_RADII = [0.05, 0.1, 0.15, 0.2, 0.25, 0.3]
DEFAULT_ARC_RADII = [0.05 + 0.025 * n for n in range(11)]  # 0.05 .. 0.30


def _solve(k: int, g_arc, g_label: str, p: dict):
    grid = build_sector_grid(k, p["n_r"], p["n_phi"])
    config = ContinuationConfig(
        eps_start=p["eps_start"],
        eps_min=p["eps_min"],
        eps_ratio=p["eps_ratio"],
        newton_tol=p["newton_tol"],
    )
    return solve_fixed_point(grid, g_arc, config, g_label=g_label)


def _failure_manifest(experiment: str, p: dict, out_dir, exc, t0: float) -> RunManifest:
    if isinstance(exc, FixedPointError):
        stage = exc.stage
        failure = {
            "kind": "continuation_stage",
            "eps": stage.eps,
            "iterations": stage.iterations,
            "residual": stage.residual,
            "reason": stage.reason,
        }
    else:
        failure = {"kind": type(exc).__name__, "reason": str(exc)}
    manifest = RunManifest(
        experiment=experiment,
        parameters=p,
        content_hash=_content_hash(experiment, p),
        outputs=[],
        headline={},
        checks=[],
        status="solver_failure",
        failure=failure,
    )
    manifest.runtime_seconds = time.perf_counter() - t0
    manifest.write(out_dir)
    return manifest


def _circular_gap_to(targets_deg, angle_deg: float) -> float:
    """Smallest angular distance in degrees from angle_deg to the target set."""
    return min(abs((angle_deg - t + 180.0) % 360.0 - 180.0) for t in targets_deg)


# --- experiments ---------------------------------------------------------


def run_cross(M: float = 40.0, n_r: int = 256, n_phi: int = 256,
              eps_min: float = 0.0125, out_dir="runs/cross", *,
              eps_start: float = 0.2, eps_ratio: float = 0.5,
              newton_tol: float = 1e-10, phi_radii=None, blowup_radii=None,
              arc_radii=None) -> RunManifest:
    """Quarter-plane data M cos(2 phi), expected to produce a cross pattern.

    Solves on the k = 2 sector, extends to the disk, and emits the full
    artifact set with headline checks on the sign and trend of the scaled
    energy, the blow-up classification, and the arc geometry at the origin.
    """
    if M <= 0:
        raise ValueError(f"M must be positive, got {M}")
    p = {
        "k": 2, "M": float(M), "n_r": int(n_r), "n_phi": int(n_phi),
        "eps_start": float(eps_start), "eps_ratio": float(eps_ratio),
        "eps_min": float(eps_min), "newton_tol": float(newton_tol),
        "phi_radii": list(phi_radii) if phi_radii is not None else _default_phi_radii(n_r),
        "blowup_radii": list(blowup_radii) if blowup_radii is not None else list(DEFAULT_BLOWUP_RADII),
        "arc_radii": list(arc_radii) if arc_radii is not None else list(DEFAULT_ARC_RADII),
        "trace_samples": TRACE_SAMPLES,
        "backend": "direct",
    }
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    try:
        sol = _solve(2, lambda phi: M * np.cos(2.0 * phi), f"{M:g}*cos(2*phi)", p)
    except (FixedPointError, SolverError) as exc:
        return _failure_manifest("cross", p, out, exc, t0)

    disk = reflect_to_disk(sol.u, SymmetryGroup(2))
    outputs = [Path(f).name for f in export_solution(sol, out)]

    prof = phi_profile(disk, p["phi_radii"])
    write_profile_csv(prof, out / "phi_profile.csv")
    outputs.append("phi_profile.csv")

    report = blowup_report(disk, p["blowup_radii"], m=TRACE_SAMPLES)
    write_blowup_csv(report, out / "blowup.csv")
    outputs.append("blowup.csv")

    levelset = extract_zero_set(disk, circle_radii=p["blowup_radii"])
    write_levelset_csv(levelset, out / "fb.csv")
    outputs.append("fb.csv")
    arcs = fit_arcs_at_origin(levelset, p["arc_radii"])
    write_arcs_json(arcs, out / "arcs.json")
    outputs.append("arcs.json")

    origin_value = eval_origin(sol.u)
    # tolerance for the monotone trend, two percent of the window increment
    r_lo, r_hi = 0.25, 0.75
    sampled = list(prof.radii)
    window_ok = any(abs(r - r_lo) < 1e-12 for r in sampled) and any(
        abs(r - r_hi) < 1e-12 for r in sampled)
    if window_ok:
        phi_lo = prof.phi_values[np.argmin(np.abs(prof.radii - r_lo))]
        phi_hi = prof.phi_values[np.argmin(np.abs(prof.radii - r_hi))]
        trend_tol = max(0.02 * abs(phi_hi - phi_lo), 1e-3)
    else:
        trend_tol = max(0.02 * abs(prof.phi_values[-1] - prof.phi_values[0]), 1e-3)

    arc_angles_deg = list(np.degrees(arcs.limit_angles))
    diag_targets = [45.0, 135.0, 225.0, 315.0]
    worst_arc_dev = (max(_circular_gap_to(diag_targets, a) for a in arc_angles_deg)
                     if len(arc_angles_deg) == 4 else float("inf"))

    checks = _Checks()
    checks.add("converged", sol.converged and abs(origin_value) <= 1e-8,
               f"final eps {sol.eps:g}, u(0) = {origin_value:.3e}")
    checks.add("kappa_bracket", 0.0 < sol.kappa < 0.26, f"kappa = {sol.kappa:.6f}")
    checks.add("phi_negative", float(np.max(prof.phi_values)) < 0.0,
               f"max phi over window = {np.max(prof.phi_values):.4f}")
    checks.add("phi_nondecreasing", prof.min_increment() >= -trend_tol,
               f"min increment = {prof.min_increment():.3e}, tolerance {trend_tol:.3e}")
    checks.add("classification_case1", report.classification == CASE1,
               f"classified {report.classification}")
    checks.add("mode2_dominant", float(report.mode_fractions[2][0]) >= 0.9,
               f"mode-2 energy fraction at r={report.radii[0]:g} is "
               f"{report.mode_fractions[2][0]:.4f}")
    checks.add("four_diagonal_arcs",
               len(arc_angles_deg) == 4 and worst_arc_dev <= 5.0,
               f"{len(arc_angles_deg)} arcs, worst deviation {worst_arc_dev:.2f} deg")

    headline = {
        "kappa": sol.kappa,
        "eps_final": sol.eps,
        "origin_value": origin_value,
        "pde_residual": sol.pde_residual,
        "phi_radii": list(prof.radii),
        "phi_values": list(prof.phi_values),
        "min_phi_increment": prof.min_increment(),
        "classification": report.classification,
        "s_over_r2": list(report.ratios),
        "mode2_fraction": list(report.mode_fractions[2]),
        "arc_angles_deg": arc_angles_deg,
        "worst_arc_deviation_deg": worst_arc_dev,
        "n_polylines": len(levelset.polylines),
    }
    manifest = RunManifest(
        experiment="cross",
        parameters=p,
        content_hash=_content_hash("cross", p),
        outputs=outputs,
        headline=_jsonable(headline),
        checks=checks.records,
        status=_status(checks),
    )
    manifest.runtime_seconds = time.perf_counter() - t0
    manifest.write(out)
    return manifest


def run_asterisk(n_r: int = 256, n_phi: int = 256, eps_min: float = 0.0125,
                 out_dir="runs/asterisk", *, eps_start: float = 0.2,
                 eps_ratio: float = 0.5, newton_tol: float = 1e-10,
                 phi_radii=None, blowup_radii=None) -> RunManifest:
    """Eighth-sector data cos(4 phi), the second-order degenerate candidate.

    Solves on the k = 4 sector with its 8-fold extension and checks for
    exact annihilation of mode 2, the decay trend of S/r^2 toward the
    origin, and the resulting classification.
    """
    p = {
        "k": 4, "n_r": int(n_r), "n_phi": int(n_phi),
        "eps_start": float(eps_start), "eps_ratio": float(eps_ratio),
        "eps_min": float(eps_min), "newton_tol": float(newton_tol),
        "phi_radii": list(phi_radii) if phi_radii is not None else _default_phi_radii(n_r),
        "blowup_radii": list(blowup_radii) if blowup_radii is not None else list(DEFAULT_BLOWUP_RADII),
        "invariance_radii": [0.9, 0.8, 0.7, 0.6, 0.5],
        "trace_samples": TRACE_SAMPLES,
        "backend": "direct",
    }
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    try:
        sol = _solve(4, lambda phi: np.cos(4.0 * phi), "cos(4*phi)", p)
    except (FixedPointError, SolverError) as exc:
        return _failure_manifest("asterisk", p, out, exc, t0)

    disk = reflect_to_disk(sol.u, SymmetryGroup(4))
    outputs = [Path(f).name for f in export_solution(sol, out)]

    prof = phi_profile(disk, p["phi_radii"])
    write_profile_csv(prof, out / "phi_profile.csv")
    outputs.append("phi_profile.csv")

    report = blowup_report(disk, p["blowup_radii"], m=TRACE_SAMPLES)
    write_blowup_csv(report, out / "blowup.csv")
    outputs.append("blowup.csv")

    levelset = extract_zero_set(disk, circle_radii=p["blowup_radii"])
    write_levelset_csv(levelset, out / "fb.csv")
    outputs.append("fb.csv")

    # the zero set may not reach the sampling window near the origin, so
    # the arc fit degrades gracefully into a recorded note
    arcs_payload = None
    try:
        arcs = fit_arcs_at_origin(levelset, DEFAULT_ARC_RADII)
        write_arcs_json(arcs, out / "arcs.json")
        arcs_payload = list(np.degrees(arcs.limit_angles))
    except ValueError as exc:
        with open(out / "arcs.json", "w", encoding="utf-8") as fh:
            json.dump({"limit_angles_deg": [], "note": str(exc)}, fh, indent=2)
    outputs.append("arcs.json")

    mode2_max = max(
        float(np.max(np.abs([tr.a[2], tr.b[2]]))) for tr in report.traces)

    # symmetry of the zero crossings, tested on the outermost circle that
    # the petals actually cut: the solution is invariant under quarter
    # turns and under reflection across the sector edges (the data
    # cos(4 phi) changes sign under an eighth turn, so that is excluded)
    invariance_r = None
    gap_dev = float("inf")
    n_crossings = 0
    for r_try in p["invariance_radii"]:
        angles = crossing_angles(disk, r_try)
        if len(angles) >= 8 and len(angles) % 4 == 0:
            invariance_r = r_try
            n_crossings = len(angles)
            gaps = np.diff(np.append(angles, angles[0] + 2.0 * math.pi))
            rot_dev = float(np.max(np.abs(gaps - np.roll(gaps, -(len(angles) // 4)))))
            reflected = np.sort((-angles) % (2.0 * math.pi))
            refl_dev = float(np.max(np.abs(
                (reflected - angles + math.pi) % (2.0 * math.pi) - math.pi)))
            gap_dev = max(rot_dev, refl_dev)
            break

    ratios = report.ratios
    idx_005 = int(np.argmin(np.abs(report.radii - 0.05)))
    idx_02 = int(np.argmin(np.abs(report.radii - 0.2)))

    checks = _Checks()
    origin_value = eval_origin(sol.u)
    checks.add("converged", sol.converged and abs(origin_value) <= 1e-8,
               f"final eps {sol.eps:g}, u(0) = {origin_value:.3e}")
    checks.add("mode2_annihilated", mode2_max <= 1e-10,
               f"max |a2|,|b2| over radii = {mode2_max:.3e}")
    checks.add("s_ratio_decay", float(ratios[idx_005]) < float(ratios[idx_02]),
               f"S/r^2 at 0.05 is {ratios[idx_005]:.4f}, at 0.2 is {ratios[idx_02]:.4f}")
    checks.add("classification_case3", report.classification == CASE3,
               f"classified {report.classification}")
    checks.add("crossings_dihedral_symmetry",
               invariance_r is not None and gap_dev <= 1e-8,
               f"radius {invariance_r}, {n_crossings} crossings, quarter-turn "
               f"and reflection deviation {gap_dev:.2e} rad")

    headline = {
        "kappa": sol.kappa,
        "eps_final": sol.eps,
        "origin_value": origin_value,
        "pde_residual": sol.pde_residual,
        "phi_radii": list(prof.radii),
        "phi_values": list(prof.phi_values),
        "classification": report.classification,
        "s_over_r2": list(ratios),
        "mode2_max": mode2_max,
        "mode4_fraction": list(report.mode_fractions[4]),
        "invariance_radius": invariance_r,
        "crossing_gap_deviation": gap_dev if math.isfinite(gap_dev) else None,
        "arc_angles_deg": arcs_payload,
        "n_polylines": len(levelset.polylines),
    }
    manifest = RunManifest(
        experiment="asterisk",
        parameters=p,
        content_hash=_content_hash("asterisk", p),
        outputs=outputs,
        headline=_jsonable(headline),
        checks=checks.records,
        status=_status(checks),
    )
    manifest.runtime_seconds = time.perf_counter() - t0
    manifest.write(out)
    return manifest


def run_threshold_scan(M_values, C1: float = 0.5, out_dir="runs/scan", *,
                       n_r: int = 1024, n_phi: int = 1024,
                       mc_samples: int = 1_000_000, mc_seed: int = 0,
                       bisect_tol: float = 1e-6) -> RunManifest:
    """Scan the boundary amplitude M in the sign test for the energy bound.

    Writes one row per M with the quadrature value, refines the first sign
    change by bisection, and cross-checks the endpoints of the scan by
    Monte Carlo.
    """
    M_values = [float(m) for m in M_values]
    if not M_values:
        raise ValueError("M_values must be nonempty")
    if C1 <= 0:
        raise ValueError(f"C1 must be positive, got {C1}")
    p = {
        "M_values": M_values, "C1": float(C1), "n_r": int(n_r),
        "n_phi": int(n_phi), "mc_samples": int(mc_samples),
        "mc_seed": int(mc_seed), "bisect_tol": float(bisect_tol),
    }
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()

    Ms, values = threshold_scan(M_values, C1, n_r=n_r, n_phi=n_phi)
    rows = np.column_stack([Ms, values])
    np.savetxt(out / "threshold_scan.csv", rows, delimiter=",",
               header="M,energy_bound", comments="", fmt="%.17g")

    m_star = None
    sign_change = next(
        (n for n in range(len(values) - 1) if values[n] > 0 >= values[n + 1]), None)
    if sign_change is not None:
        m_star = find_threshold(C1, float(Ms[sign_change]), float(Ms[sign_change + 1]),
                                tol=bisect_tol, n_r=n_r, n_phi=n_phi)

    mc_rows = []
    for m_chk in {Ms[0], Ms[-1]}:
        quad = float(values[list(Ms).index(m_chk)])
        mc = mc_energy_bound(float(m_chk), C1, samples=mc_samples, seed=mc_seed)
        mc_rows.append({"M": float(m_chk), "quadrature": quad, "monte_carlo": mc})

    scale = math.pi * C1 * C1
    checks = _Checks()
    checks.add("scan_nonincreasing", bool(np.all(np.diff(values) <= 1e-12)),
               "values nonincreasing in M")
    if max(M_values) >= 4.0 * C1:
        checks.add("negative_tail_found", bool(np.any(values < 0.0)),
                   f"min value {np.min(values):.6f}")
    mc_dev = max(abs(r["quadrature"] - r["monte_carlo"]) /
                 max(abs(r["quadrature"]), scale) for r in mc_rows)
    checks.add("monte_carlo_agreement", mc_dev <= 0.01,
               f"worst relative deviation {mc_dev:.4%}")

    headline = {
        "M_values": list(Ms),
        "energy_bound_values": list(values),
        "m_star": m_star,
        "monte_carlo": mc_rows,
    }
    manifest = RunManifest(
        experiment="scan",
        parameters=p,
        content_hash=_content_hash("scan", p),
        outputs=["threshold_scan.csv"],
        headline=_jsonable(headline),
        checks=checks.records,
        status=_status(checks),
    )
    manifest.runtime_seconds = time.perf_counter() - t0
    manifest.write(out)
    return manifest


def run_solve(k: int, M: float = 1.0, n_r: int = 256, n_phi: int = 256,
              eps_min: float = 0.0125, out_dir="runs/solve", *,
              eps_start: float = 0.2, eps_ratio: float = 0.5,
              newton_tol: float = 1e-10) -> RunManifest:
    """Generic single solve with arc data M cos(k phi), artifacts only."""
    p = {
        "k": int(k), "M": float(M), "n_r": int(n_r), "n_phi": int(n_phi),
        "eps_start": float(eps_start), "eps_ratio": float(eps_ratio),
        "eps_min": float(eps_min), "newton_tol": float(newton_tol),
        "backend": "direct",
    }
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    try:
        sol = _solve(k, lambda phi: M * np.cos(k * phi), f"{M:g}*cos({k}*phi)", p)
    except (FixedPointError, SolverError) as exc:
        return _failure_manifest("solve", p, out, exc, t0)
    outputs = [Path(f).name for f in export_solution(sol, out)]
    origin_value = eval_origin(sol.u)
    checks = _Checks()
    checks.add("converged", sol.converged and abs(origin_value) <= 1e-8,
               f"final eps {sol.eps:g}, u(0) = {origin_value:.3e}")
    headline = {
        "kappa": sol.kappa,
        "eps_final": sol.eps,
        "origin_value": origin_value,
        "pde_residual": sol.pde_residual,
    }
    manifest = RunManifest(
        experiment="solve",
        parameters=p,
        content_hash=_content_hash("solve", p),
        outputs=outputs,
        headline=_jsonable(headline),
        checks=checks.records,
        status=_status(checks),
    )
    manifest.runtime_seconds = time.perf_counter() - t0
    manifest.write(out)
    return manifest


# --- rerun ---------------------------------------------------------------


def rerun_manifest(manifest_path, out_dir=None) -> tuple[RunManifest, bool]:
    """Replay a recorded run and compare headline numbers for equality.

    With the direct backend the comparison is exact, down to the last bit
    of every float, because the replay consumes only manifest parameters.
    """
    stored = RunManifest.load(manifest_path)
    out = Path(out_dir) if out_dir else Path(manifest_path).parent / "rerun"
    p = stored.parameters
    if stored.experiment == "cross":
        fresh = run_cross(p["M"], p["n_r"], p["n_phi"], p["eps_min"], out,
                          eps_start=p["eps_start"], eps_ratio=p["eps_ratio"],
                          newton_tol=p["newton_tol"], phi_radii=p["phi_radii"],
                          blowup_radii=p["blowup_radii"], arc_radii=p["arc_radii"])
    elif stored.experiment == "asterisk":
        fresh = run_asterisk(p["n_r"], p["n_phi"], p["eps_min"], out,
                             eps_start=p["eps_start"], eps_ratio=p["eps_ratio"],
                             newton_tol=p["newton_tol"], phi_radii=p["phi_radii"],
                             blowup_radii=p["blowup_radii"])
    elif stored.experiment == "scan":
        fresh = run_threshold_scan(p["M_values"], p["C1"], out, n_r=p["n_r"],
                                   n_phi=p["n_phi"], mc_samples=p["mc_samples"],
                                   mc_seed=p["mc_seed"], bisect_tol=p["bisect_tol"])
    elif stored.experiment == "solve":
        fresh = run_solve(p["k"], p["M"], p["n_r"], p["n_phi"], p["eps_min"], out,
                          eps_start=p["eps_start"], eps_ratio=p["eps_ratio"],
                          newton_tol=p["newton_tol"])
    else:
        raise ValueError(f"unknown experiment in manifest: {stored.experiment!r}")
    same = json.dumps(stored.headline, sort_keys=True) == json.dumps(
        fresh.headline, sort_keys=True)
    return fresh, same


# --- argument parsing ----------------------------------------------------


def _radii_list(text: str) -> list:
    try:
        return [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad radii list {text!r}") from exc


def _add_solver_flags(sp, with_m: bool):
    if with_m:
        sp.add_argument("--M", type=float, default=40.0, help="arc data amplitude")
    sp.add_argument("--nr", type=int, default=256, help="radial cells")
    sp.add_argument("--nphi", type=int, default=256, help="angular cells per sector")
    sp.add_argument("--eps-min", type=float, default=0.0125, help="final smoothing width")
    sp.add_argument("--eps-start", type=float, default=0.2, help="initial smoothing width")
    sp.add_argument("--eps-ratio", type=float, default=0.5, help="width shrink factor per stage")
    sp.add_argument("--tol", type=float, default=1e-10, help="Newton residual tolerance")
    sp.add_argument("--out", default=None, help="output directory")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="unstablefb",
        description="Experiments and analyses for the unstable obstacle-type "
                    "problem on the unit disk.")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("cross", help="boundary data M cos(2 phi) on the quarter sector")
    _add_solver_flags(sp, with_m=True)
    sp.add_argument("--radii", type=_radii_list, default=None,
                    help="comma list of radii for the scaled-energy profile")

    sp = sub.add_parser("asterisk", help="boundary data cos(4 phi) on the eighth sector")
    _add_solver_flags(sp, with_m=False)
    sp.add_argument("--radii", type=_radii_list, default=None,
                    help="comma list of radii for the scaled-energy profile")

    sp = sub.add_parser("scan", help="energy bound sign scan over M")
    sp.add_argument("--M-list", type=_radii_list, required=True,
                    help="comma list of M values")
    sp.add_argument("--C1", type=float, default=0.5)
    sp.add_argument("--nr", type=int, default=1024)
    sp.add_argument("--nphi", type=int, default=1024)
    sp.add_argument("--mc-samples", type=int, default=1_000_000)
    sp.add_argument("--mc-seed", type=int, default=0)
    sp.add_argument("--out", default=None)

    sp = sub.add_parser("solve", help="single solve with arc data M cos(k phi)")
    sp.add_argument("--k", type=int, required=True, help="sector count parameter")
    _add_solver_flags(sp, with_m=True)

    for name, help_text in (
        ("phi", "scaled-energy profile of an exported field"),
        ("blowup", "circle traces and classification of an exported field"),
        ("fb", "zero set and origin arcs of an exported field"),
    ):
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("field", help="field CSV produced by a solve")
        sp.add_argument("--radii", type=_radii_list, default=None)
        sp.add_argument("--out", default=None, help="output file or directory")

    sp = sub.add_parser("rerun", help="replay a manifest and compare headline numbers")
    sp.add_argument("manifest", help="path to manifest.json")
    sp.add_argument("--out", default=None, help="directory for the replayed run")

    return parser


# --- command handlers ----------------------------------------------------


def _cmd_cross(args) -> int:
    manifest = run_cross(args.M, args.nr, args.nphi, args.eps_min,
                         args.out or "runs/cross", eps_start=args.eps_start,
                         eps_ratio=args.eps_ratio, newton_tol=args.tol,
                         phi_radii=args.radii)
    _print_checks(manifest)
    return manifest.exit_code


def _cmd_asterisk(args) -> int:
    manifest = run_asterisk(args.nr, args.nphi, args.eps_min,
                            args.out or "runs/asterisk", eps_start=args.eps_start,
                            eps_ratio=args.eps_ratio, newton_tol=args.tol,
                            phi_radii=args.radii)
    _print_checks(manifest)
    return manifest.exit_code


def _cmd_scan(args) -> int:
    manifest = run_threshold_scan(args.M_list, args.C1, args.out or "runs/scan",
                                  n_r=args.nr, n_phi=args.nphi,
                                  mc_samples=args.mc_samples, mc_seed=args.mc_seed)
    _print_checks(manifest)
    if manifest.headline.get("m_star") is not None:
        print(f"threshold M* = {manifest.headline['m_star']:.6f}")
    return manifest.exit_code


def _cmd_solve(args) -> int:
    manifest = run_solve(args.k, args.M, args.nr, args.nphi, args.eps_min,
                         args.out or "runs/solve", eps_start=args.eps_start,
                         eps_ratio=args.eps_ratio, newton_tol=args.tol)
    _print_checks(manifest)
    return manifest.exit_code


def _cmd_phi(args) -> int:
    field = read_field_csv(args.field)
    radii = args.radii or _default_phi_radii(field.grid.n_r)
    prof = phi_profile(field, radii)
    out = Path(args.out or "phi_profile.csv")
    write_profile_csv(prof, out)
    print(f"wrote {out} ({len(radii)} radii, min increment "
          f"{prof.min_increment():.3e})")
    return EXIT_OK


def _cmd_blowup(args) -> int:
    field = read_field_csv(args.field)
    radii = args.radii or DEFAULT_BLOWUP_RADII
    report = blowup_report(field, radii, m=TRACE_SAMPLES)
    out = Path(args.out or "blowup.csv")
    write_blowup_csv(report, out)
    print(f"wrote {out}; classification {report.classification}")
    return EXIT_OK


def _cmd_fb(args) -> int:
    field = read_field_csv(args.field)
    radii = args.radii or DEFAULT_ARC_RADII
    levelset = extract_zero_set(field, circle_radii=radii)
    out_dir = Path(args.out or ".")
    out_dir.mkdir(parents=True, exist_ok=True)
    write_levelset_csv(levelset, out_dir / "fb.csv")
    wrote = [str(out_dir / "fb.csv")]
    try:
        arcs = fit_arcs_at_origin(levelset, radii)
        write_arcs_json(arcs, out_dir / "arcs.json")
        wrote.append(str(out_dir / "arcs.json"))
        angles = ", ".join(f"{a:.2f}" for a in np.degrees(arcs.limit_angles))
        print(f"wrote {', '.join(wrote)}; limit angles [deg]: {angles}")
    except ValueError as exc:
        print(f"wrote {wrote[0]}; arc fit skipped ({exc})")
    return EXIT_OK


def _cmd_rerun(args) -> int:
    fresh, same = rerun_manifest(args.manifest, args.out)
    _print_checks(fresh)
    print("headline comparison:", "identical" if same else "DIFFERS")
    if not same:
        return EXIT_CHECKS
    return fresh.exit_code


_HANDLERS = {
    "cross": _cmd_cross,
    "asterisk": _cmd_asterisk,
    "scan": _cmd_scan,
    "solve": _cmd_solve,
    "phi": _cmd_phi,
    "blowup": _cmd_blowup,
    "fb": _cmd_fb,
    "rerun": _cmd_rerun,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FixedPointError, SolverError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
