"""Regularized fixed-point solver for Delta u = -f_eps(u) with u(0) = 0.

The unknown is the pair (u, kappa): u solves the semilinear problem with
arc data g - kappa, and the scalar shift kappa is adjusted so the
extrapolated origin value of u vanishes.  Each Newton step solves the
bordered system

    [ A - diag(area * f_eps'(u))   b1 ] [du     ]   [ -R1 ]
    [ e                            0  ] [dkappa ] = [ -R2 ]

by block elimination (two sparse solves with the (1,1) block).  The (1,1)
block may be indefinite; that is the expected instability of the problem,
not an error, so the solves use a direct factorization.
"""
from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field as dc_field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .field import ScalarField, eval_origin, origin_weight_vector, write_field_csv, write_field_vtk
from .mesh import PolarGrid
from .poisson import DiscreteLaplacian, assemble, solve as poisson_solve


# --- smoothed indicator --------------------------------------------------


def _smoothstep(s: np.ndarray) -> np.ndarray:
    s = np.clip(s, 0.0, 1.0)
    return s * s * s * (10.0 + s * (-15.0 + 6.0 * s))


def _smoothstep_prime(s: np.ndarray) -> np.ndarray:
    inside = (s > 0.0) & (s < 1.0)
    sc = np.where(inside, s, 0.0)
    return np.where(inside, 30.0 * sc * sc * (1.0 - sc) ** 2, 0.0)


def f_eps(z, eps: float):
    """C^2 monotone surrogate for the indicator of {z > 0}.

    Equals 1 for z >= 0 and 0 for z <= -eps; in between it is the quintic
    smoothstep of z/eps + 1.  Pointwise nonincreasing in eps, always above
    the sharp indicator.
    """
    if eps <= 0.0:
        raise ValueError(f"regularization width must be positive, got {eps}")
    z = np.asarray(z, dtype=float)
    out = _smoothstep(z / eps + 1.0)
    return out if out.ndim else float(out)


def f_eps_prime(z, eps: float):
    """Derivative of f_eps; bounded by (15/8)/eps, zero outside (-eps, 0)."""
    if eps <= 0.0:
        raise ValueError(f"regularization width must be positive, got {eps}")
    z = np.asarray(z, dtype=float)
    out = _smoothstep_prime(z / eps + 1.0) / eps
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class SmoothedHeaviside:
    """Smoothed indicator at a fixed width, with its derivative."""

    eps: float

    def __post_init__(self):
        if self.eps <= 0.0:
            raise ValueError(f"regularization width must be positive, got {self.eps}")

    def __call__(self, z):
        return f_eps(z, self.eps)

    def derivative(self, z):
        return f_eps_prime(z, self.eps)

    @property
    def derivative_bound(self) -> float:
        return 1.875 / self.eps


# --- configuration and results -------------------------------------------


@dataclass
class ContinuationConfig:
    """Schedule and Newton parameters for the eps continuation."""

    eps_start: float = 0.2
    eps_min: float = 0.0125
    eps_ratio: float = 0.5
    newton_tol: float = 1e-10
    max_newton: int = 40
    armijo_c: float = 1e-4
    armijo_shrink: float = 0.5
    max_backtracks: int = 30
    eps_floor_cells: float = 2.0

    def __post_init__(self):
        if not (0.0 < self.eps_min <= self.eps_start):
            raise ValueError("need 0 < eps_min <= eps_start")
        if not (0.0 < self.eps_ratio < 1.0):
            raise ValueError("eps_ratio must lie in (0, 1)")

    def schedule(self) -> list[float]:
        """Geometric ladder from eps_start down to exactly eps_min."""
        eps = [self.eps_start]
        while eps[-1] > self.eps_min * (1.0 + 1e-12):
            eps.append(max(eps[-1] * self.eps_ratio, self.eps_min))
        return eps


@dataclass
class Solution:
    """Converged solution of the regularized constrained problem."""

    u: ScalarField
    kappa: float
    eps: float
    pde_residual: float
    origin_residual: float
    newton_iters: list[int]
    eps_schedule: list[float]
    k: int
    g_values: np.ndarray
    g_label: str = ""
    transition_measures: list[float] = dc_field(default_factory=list)
    converged: bool = True


class StageFailed(RuntimeError):
    """Newton failed to converge at one continuation stage."""

    def __init__(self, eps: float, iterations: int, residual: float, reason: str):
        super().__init__(
            f"stage eps={eps:g} failed after {iterations} iterations"
            f" (residual {residual:.3e}): {reason}"
        )
        self.eps = eps
        self.iterations = iterations
        self.residual = residual
        self.reason = reason


class FixedPointError(RuntimeError):
    """Continuation aborted; carries the last converged stage if any."""

    def __init__(self, stage: StageFailed, partial: Solution | None):
        super().__init__(str(stage))
        self.stage = stage
        self.partial = partial


# --- residual and Newton machinery ----------------------------------------


def _residual(lap: DiscreteLaplacian, e: np.ndarray, u: np.ndarray, kappa: float,
              g: np.ndarray, eps: float) -> tuple[np.ndarray, float]:
    """Finite-volume residual R1 (area-weighted) and origin residual R2."""
    r1 = lap.matrix @ u - lap.areas * f_eps(u, eps) - lap.lift(g - kappa)
    r2 = float(e @ u)
    return r1, r2


def initial_guess(grid: PolarGrid, g_arc, lap: DiscreteLaplacian | None = None
                  ) -> tuple[ScalarField, float]:
    """Linear predictor: solve Delta u = -1 with u = g - kappa, u(0) = 0.

    Linear in (u, kappa), so two Poisson solves suffice: one with the raw
    arc data and one propagating a unit arc shift.
    """
    if lap is None:
        lap = assemble(grid)
    g = g_arc(grid.phi) if callable(g_arc) else np.asarray(g_arc, dtype=float)
    u_g = poisson_solve(lap, F=-1.0, g_arc=g, backend="direct")
    u_shift = poisson_solve(lap, F=0.0, g_arc=-np.ones(grid.n_phi), backend="direct")
    # u = u_g + kappa * u_shift; pick kappa so the origin value vanishes
    denom = eval_origin(u_shift)
    kappa = -eval_origin(u_g) / denom
    u0 = ScalarField(grid, u_g.values + kappa * u_shift.values)
    return u0, float(kappa)


def newton_stage(
    lap: DiscreteLaplacian,
    u: np.ndarray,
    kappa: float,
    eps: float,
    g: np.ndarray,
    config: ContinuationConfig,
) -> tuple[np.ndarray, float, int, float, float]:
    """Damped bordered Newton at fixed eps from the given iterate.

    Returns (u, kappa, iterations, pde_residual, origin_residual).
    Idempotent: an already-converged iterate returns with 0 iterations.
    """
    grid = lap.grid
    if eps < config.eps_floor_cells * grid.dr:
        raise ValueError(
            f"eps={eps:g} below the resolution floor "
            f"{config.eps_floor_cells:g}*dr={config.eps_floor_cells * grid.dr:g}"
        )
    e = origin_weight_vector(grid)
    b1 = lap.lift(np.ones(grid.n_phi))
    tol = config.newton_tol

    def merit(r1, r2):
        # area-normalized so PDE and origin parts carry comparable units
        return float(np.dot(r1 / lap.areas, r1 / lap.areas) + r2 * r2)

    r1, r2 = _residual(lap, e, u, kappa, g, eps)
    for it in range(config.max_newton + 1):
        if max(float(np.max(np.abs(r1))), abs(r2)) <= tol:
            return u, kappa, it, float(np.max(np.abs(r1))), abs(r2)
        if it == config.max_newton:
            break
        J = lap.matrix - sp.diags(lap.areas * f_eps_prime(u, eps), format="csc")
        try:
            lu = spla.splu(J)
        except RuntimeError as exc:
            raise StageFailed(eps, it, float(np.max(np.abs(r1))),
                              f"Jacobian factorization failed: {exc}") from exc
        w1 = lu.solve(r1)
        w2 = lu.solve(b1)
        denom = float(e @ w2)
        if not np.isfinite(denom) or abs(denom) < 1e-300:
            raise StageFailed(eps, it, float(np.max(np.abs(r1))),
                              "bordered elimination denominator vanished")
        dkappa = (r2 - float(e @ w1)) / denom
        du = -w1 - dkappa * w2

        m0 = merit(r1, r2)
        lam = 1.0
        accepted = False
        for _ in range(config.max_backtracks):
            u_try = u + lam * du
            k_try = kappa + lam * dkappa
            r1_try, r2_try = _residual(lap, e, u_try, k_try, g, eps)
            if merit(r1_try, r2_try) <= (1.0 - 2.0 * config.armijo_c * lam) * m0:
                u, kappa, r1, r2 = u_try, k_try, r1_try, r2_try
                accepted = True
                break
            lam *= config.armijo_shrink
        if not accepted:
            raise StageFailed(eps, it, float(np.max(np.abs(r1))), "line search stalled")
    raise StageFailed(eps, config.max_newton, float(np.max(np.abs(r1))),
                      "iteration cap reached")


def solve_fixed_point(grid: PolarGrid, g_arc, config: ContinuationConfig | None = None,
                      g_label: str = "") -> Solution:
    """Continuation in eps with warm-started bordered Newton stages.

    Deterministic: identical inputs produce bit-identical solutions (all
    linear solves are direct factorizations).
    """
    if config is None:
        config = ContinuationConfig()
    if grid.periodic or grid.spec is None:
        raise ValueError("solve_fixed_point needs a sector grid")
    schedule = config.schedule()
    if schedule[-1] < config.eps_floor_cells * grid.dr:
        raise ValueError(
            f"eps_min={schedule[-1]:g} below the resolution floor "
            f"{config.eps_floor_cells * grid.dr:g} of a {grid.n_r}x{grid.n_phi} grid"
        )
    lap = assemble(grid)
    g = g_arc(grid.phi) if callable(g_arc) else np.asarray(g_arc, dtype=float)
    u_field, kappa = initial_guess(grid, g, lap)
    u = u_field.values.ravel()

    iters: list[int] = []
    trans: list[float] = []
    pde_res = origin_res = math.inf
    last_good: Solution | None = None
    for eps in schedule:
        try:
            u, kappa, n_it, pde_res, origin_res = newton_stage(lap, u, kappa, eps, g, config)
        except StageFailed as exc:
            raise FixedPointError(exc, last_good) from exc
        iters.append(n_it)
        trans.append(transition_measure(ScalarField(grid, u.reshape(grid.shape)), eps))
        last_good = Solution(
            u=ScalarField(grid, u.reshape(grid.shape).copy()),
            kappa=float(kappa),
            eps=eps,
            pde_residual=pde_res,
            origin_residual=origin_res,
            newton_iters=list(iters),
            eps_schedule=schedule[: len(iters)],
            k=grid.spec.k,
            g_values=np.asarray(g, dtype=float),
            g_label=g_label,
            transition_measures=list(trans),
        )
    assert last_good is not None
    return last_good


def transition_measure(u: ScalarField, eps: float) -> float:
    """Full-disk area of the smoothing zone {|u| <= eps}."""
    g = u.grid
    inside = (np.abs(u.values) <= eps).astype(float)
    return float((inside.sum(axis=1) * g.cell_areas).sum() * g.multiplicity)


def residual_check(sol: Solution, lap: DiscreteLaplacian | None = None) -> tuple[float, float]:
    """(max-norm finite-volume residual, area of the transition zone)."""
    grid = sol.u.grid
    if lap is None:
        lap = assemble(grid)
    e = origin_weight_vector(grid)
    r1, _ = _residual(lap, e, sol.u.values.ravel(), sol.kappa, sol.g_values, sol.eps)
    return float(np.max(np.abs(r1))), transition_measure(sol.u, sol.eps)


def export_solution(sol: Solution, out_dir, basename: str = "solution") -> list[str]:
    """Write field CSV + VTK and a JSON sidecar; returns the paths."""
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, f"{basename}.csv")
    vtk_path = os.path.join(out_dir, f"{basename}.vtk")
    json_path = os.path.join(out_dir, f"{basename}.json")
    write_field_csv(sol.u, csv_path)
    write_field_vtk(sol.u, vtk_path)
    sidecar = {
        "k": sol.k,
        "n_r": sol.u.grid.n_r,
        "n_phi": sol.u.grid.n_phi,
        "g_label": sol.g_label,
        "kappa": sol.kappa,
        "eps": sol.eps,
        "eps_schedule": sol.eps_schedule,
        "newton_iters": sol.newton_iters,
        "pde_residual": sol.pde_residual,
        "origin_residual": sol.origin_residual,
        "transition_measures": sol.transition_measures,
        "converged": sol.converged,
    }
    with open(json_path, "w", encoding="utf-8") as fh:
        json.dump(sidecar, fh, indent=2)
    return [csv_path, vtk_path, json_path]
