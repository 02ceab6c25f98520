"""Zero level set extraction and free-boundary arc geometry.

Marching squares runs on the logical (r, phi) grid of the symmetric disk
extension (nodes are cell centers, periodic in phi, nothing below the
innermost ring).  Crossing points are linear interpolations along grid
edges, shared exactly between neighbouring quads, so polylines chain
without seams.  Saddle quads are resolved by the sign of the corner
average, which keeps the extraction deterministic.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from .field import ScalarField, as_disk, sample_circle
TWO_PI = 2.0 * math.pi


@dataclass
class LevelSet:
    """Polylines of {u = 0} plus crossing angles on requested circles."""

    polylines: list[np.ndarray]
    lengths: list[float]
    circle_angles: dict[float, np.ndarray]
    disk: ScalarField = dc_field(repr=False)


def crossing_angles(u: ScalarField, r: float, m: int = 2048) -> np.ndarray:
    """Angles where the circle trace changes sign, by linear interpolation.

    The count is even for any sign-changing periodic trace.
    """
    angles, vals = sample_circle(u, r, m)
    step = TWO_PI / m
    inside = vals > 0.0
    flips = np.nonzero(inside != np.roll(inside, -1))[0]
    out = []
    for s in flips:
        v0 = vals[s]
        v1 = vals[(s + 1) % m]
        t = v0 / (v0 - v1)
        out.append((angles[s] + t * step) % TWO_PI)
    return np.sort(np.asarray(out))


def _march(disk: ScalarField) -> tuple[list[np.ndarray], list[float]]:
    vals = disk.values
    g = disk.grid
    n_r, n_phi = g.shape
    r_nodes = g.r
    phi_nodes = g.phi

    edge_point: dict[tuple, tuple[float, float]] = {}

    def cross_r(i, j):
        """Crossing on the radial edge (i,j)-(i+1,j), logical coords."""
        key = ("r", i, j)
        if key not in edge_point:
            v0, v1 = vals[i, j], vals[i + 1, j]
            t = v0 / (v0 - v1)
            edge_point[key] = (r_nodes[i] + t * g.dr, phi_nodes[j])
        return key

    def cross_a(i, j):
        """Crossing on the angular edge (i,j)-(i,j+1 mod n)."""
        key = ("a", i, j)
        if key not in edge_point:
            v0, v1 = vals[i, j], vals[i, (j + 1) % n_phi]
            t = v0 / (v0 - v1)
            edge_point[key] = (r_nodes[i], phi_nodes[j] + t * g.dphi)
        return key

    inside = vals > 0.0
    segments: list[tuple[tuple, tuple]] = []
    for i in range(n_r - 1):
        for j in range(n_phi):
            jn = (j + 1) % n_phi
            s00, s10 = inside[i, j], inside[i + 1, j]
            s01, s11 = inside[i, jn], inside[i + 1, jn]
            if s00 == s10 == s01 == s11:
                continue
            edges = []
            if s00 != s10:
                edges.append(cross_r(i, j))
            if s01 != s11:
                edges.append(cross_r(i, jn))
            if s00 != s01:
                edges.append(cross_a(i, j))
            if s10 != s11:
                edges.append(cross_a(i + 1, j))
            if len(edges) == 2:
                segments.append((edges[0], edges[1]))
            elif len(edges) == 4:
                # saddle: corner average picks which diagonal the set hugs
                center_in = vals[i, j] + vals[i + 1, j] + vals[i, jn] + vals[i + 1, jn] > 0.0
                left, right = cross_r(i, j), cross_r(i, jn)
                bottom, top = cross_a(i, j), cross_a(i + 1, j)
                if center_in == s00:
                    segments.append((left, top))
                    segments.append((bottom, right))
                else:
                    segments.append((left, bottom))
                    segments.append((top, right))

    # chain segments into polylines by shared edges
    adjacency: dict[tuple, list[int]] = {}
    for sid, (e1, e2) in enumerate(segments):
        adjacency.setdefault(e1, []).append(sid)
        adjacency.setdefault(e2, []).append(sid)

    used = [False] * len(segments)

    def walk(start_edge) -> list[tuple]:
        chain = [start_edge]
        edge = start_edge
        while True:
            nxt = [s for s in adjacency[edge] if not used[s]]
            if not nxt:
                break
            sid = nxt[0]
            used[sid] = True
            e1, e2 = segments[sid]
            edge = e2 if e1 == edge else e1
            chain.append(edge)
            if edge == start_edge:
                break
        return chain

    chains: list[list[tuple]] = []
    open_edges = [e for e, sids in adjacency.items() if len(sids) == 1]
    for e in open_edges:
        if any(not used[s] for s in adjacency[e]):
            chains.append(walk(e))
    for sid in range(len(segments)):
        if not used[sid]:
            used[sid] = True
            e1, e2 = segments[sid]
            chain = walk(e2)
            chains.append([e1] + chain)

    polylines: list[np.ndarray] = []
    lengths: list[float] = []
    for chain in chains:
        pts = np.array(
            [
                (rp * math.cos(ph), rp * math.sin(ph))
                for rp, ph in (edge_point[e] for e in chain)
            ]
        )
        polylines.append(pts)
        lengths.append(float(np.sum(np.hypot(*np.diff(pts, axis=0).T))) if len(pts) > 1 else 0.0)
    return polylines, lengths


def extract_zero_set(u: ScalarField, circle_radii=()) -> LevelSet:
    """March the zero set of the symmetric disk extension of u."""
    disk = as_disk(u)
    polylines, lengths = _march(disk)
    angles = {float(r): crossing_angles(disk, float(r)) for r in circle_radii}
    return LevelSet(polylines=polylines, lengths=lengths, circle_angles=angles, disk=disk)


@dataclass
class ArcFit:
    """Free-boundary rays near the origin, tracked over shrinking circles."""

    radii: np.ndarray
    angle_table: np.ndarray  # (n_arcs, n_radii), radians, row per arc
    limit_angles: np.ndarray  # radians, extrapolated to r = 0, sorted
    gaps: np.ndarray  # consecutive differences of limit angles (radians)
    topology_change: bool


def _circular_match(prev: np.ndarray, new: np.ndarray, cap: float) -> np.ndarray | None:
    """Match each previous angle to the nearest new one within cap, injectively."""
    if len(prev) != len(new):
        return None
    out = np.empty(len(prev))
    taken = set()
    for n, th in enumerate(prev):
        d = np.abs((new - th + math.pi) % TWO_PI - math.pi)
        order = np.argsort(d)
        pick = next((int(c) for c in order if int(c) not in taken), None)
        if pick is None or d[pick] > cap:
            return None
        taken.add(pick)
        out[n] = new[pick]
    return out


def fit_arcs_at_origin(ls: LevelSet, radii) -> ArcFit:
    """Track crossing angles over decreasing radii and extrapolate to r = 0.

    Arcs are matched by angle continuity with a cap of half the minimal
    angular gap; a count change or failed match sets topology_change and
    truncates the tracked window at the largest consistent radii.
    """
    radii = np.asarray(sorted(radii, reverse=True), dtype=float)
    if len(radii) < 2:
        raise ValueError("need at least two radii to extrapolate arcs")
    base = crossing_angles(ls.disk, float(radii[0]))
    if len(base) == 0:
        raise ValueError(f"no zero crossings on the circle r={radii[0]:g}")
    gaps = np.diff(np.append(base, base[0] + TWO_PI))
    cap = 0.5 * float(np.min(gaps))

    rows = [base]
    used = [radii[0]]
    topology_change = False
    prev = base
    for r in radii[1:]:
        new = crossing_angles(ls.disk, float(r))
        matched = _circular_match(prev, new, cap)
        if matched is None:
            topology_change = True
            break
        rows.append(matched)
        used.append(r)
        prev = matched
    used = np.asarray(used)
    # unwrap each arc around its first sample so the linear fit is smooth
    table = np.asarray(rows).T
    ref = table[:, :1]
    table = ref + (table - ref + math.pi) % TWO_PI - math.pi

    if len(used) >= 2:
        coeff = np.polyfit(used, table.T, 1)
        limits = coeff[1] % TWO_PI
    else:
        limits = table[:, 0] % TWO_PI
    order = np.argsort(limits)
    limits = limits[order]
    table = table[order]
    arc_gaps = np.diff(np.append(limits, limits[0] + TWO_PI))
    return ArcFit(
        radii=used,
        angle_table=table % TWO_PI,
        limit_angles=limits,
        gaps=arc_gaps,
        topology_change=topology_change,
    )


def write_levelset_csv(ls: LevelSet, path) -> None:
    """Columns polyline, vertex, x, y."""
    rows = []
    for pid, pts in enumerate(ls.polylines):
        for vid, (x, y) in enumerate(pts):
            rows.append([pid, vid, x, y])
    if not rows:
        rows = np.empty((0, 4))
    np.savetxt(path, np.asarray(rows), delimiter=",", header="polyline,vertex,x,y",
               comments="", fmt="%.17g")


def write_arcs_json(fit: ArcFit, path) -> None:
    payload = {
        "radii": fit.radii.tolist(),
        "angles_deg": np.degrees(fit.angle_table).tolist(),
        "limit_angles_deg": np.degrees(fit.limit_angles).tolist(),
        "gaps_deg": np.degrees(fit.gaps).tolist(),
        "topology_change": fit.topology_change,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
