"""Explicit forward-Euler evolution of u_t = tr(A(grad u) D2 u) - H(x, t, grad u).

Monotone under the CFL bound dt <= sigma * h_min^2 / (2 n Lambda), where
Lambda bounds the largest diffusion eigenvalue actually used in the step.
Snapshots are captured exactly at requested times; runs are deterministic.

Singular-gradient policy
------------------------
Nodes whose discrete gradient magnitude falls at or below the floor (the
spec's ``grad_floor``; for families with an unbounded-at-zero prefactor the
floor defaults to the grid-tied ``eps_num``) are evaluated through the
family's eps_num-regularized form instead of the raw one. One exception, in
one dimension only: families whose diffusion coefficient is constant in the
gradient (growth exponent p' = 2, i.e. normalized-type and the infinity
Laplacian) use that constant at singular nodes, which is the exact
one-dimensional reduction of the operator. The regularized form would put an
O(h) defect at isolated critical points and destroy the scheme's second-order
convergence there.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

from .errors import BlowUpError, BudgetExceededError, CflViolationError
from .grid import (
    Boundary,
    GridSpec,
    ScalarField,
    gradient_arrays,
    hessian_arrays,
    interior_mask,
)
from .operators import (
    Family,
    HamiltonianSpec,
    OperatorSpec,
    rank_one_coeff_arrays,
    rank_one_coeffs,
)


@dataclass(frozen=True)
class SolverControls:
    cfl_sigma: float = 0.5
    grad_clamp: Optional[float] = None      # None: 2x max initial gradient, floored at 1
    snapshot_times: tuple[float, ...] = ()  # empty: capture at T only
    eps_num: Optional[float] = None         # None: min grid spacing
    max_steps: int = 20_000_000

    def __post_init__(self):
        if not (0.0 < self.cfl_sigma <= 1.0):
            raise ValueError("cfl_sigma must lie in (0, 1]")
        if self.grad_clamp is not None and self.grad_clamp <= 0:
            raise ValueError("grad_clamp must be > 0")
        if self.eps_num is not None and self.eps_num < 0:
            raise ValueError("eps_num must be >= 0")
        ts = tuple(float(t) for t in self.snapshot_times)
        if any(b < a for a, b in zip(ts, ts[1:])):
            raise ValueError("snapshot_times must be sorted")
        object.__setattr__(self, "snapshot_times", ts)


@dataclass(frozen=True)
class Problem:
    """Cauchy-Dirichlet (or periodic) problem for one family member.

    ``initial`` maps spatial coordinates to u(x, 0); ``dirichlet`` maps
    coordinates plus time to the boundary trace and is required (and only
    used) on Dirichlet grids. Both must agree at t = 0 on the boundary.
    """

    spec: OperatorSpec
    grid: GridSpec
    initial: Callable
    T: float
    ham: HamiltonianSpec = HamiltonianSpec()
    dirichlet: Optional[Callable] = None
    controls: SolverControls = dc_field(default_factory=SolverControls)

    def __post_init__(self):
        if self.T < 0:
            raise ValueError("T must be >= 0")
        if any(t < 0 or t > self.T for t in self.controls.snapshot_times):
            raise ValueError("snapshot times must lie within [0, T]")
        if self.grid.boundary is Boundary.DIRICHLET:
            if self.dirichlet is None:
                raise ValueError("Dirichlet grids need boundary data")
            self._check_compatibility()

    def _check_compatibility(self):
        meshes = self.grid.meshes()
        u0 = np.broadcast_to(np.asarray(self.initial(*meshes), float), self.grid.shape)
        g0 = np.broadcast_to(np.asarray(self.dirichlet(*meshes, 0.0), float), self.grid.shape)
        edge = ~interior_mask(self.grid)
        scale = 1.0 + np.max(np.abs(u0))
        if np.max(np.abs(u0[edge] - g0[edge])) > 1e-9 * scale:
            raise ValueError("initial and Dirichlet data disagree at t = 0 on the boundary")

    def initial_field(self) -> ScalarField:
        return ScalarField.from_function(self.grid, self.initial, 0.0)


@dataclass(frozen=True)
class SolveStats:
    steps: int
    min_dt: float
    overshoot: float
    final_time: float


@dataclass(frozen=True)
class SolveResult:
    snapshots: list
    stats: SolveStats


def _eps_num(problem: Problem) -> float:
    if problem.controls.eps_num is not None:
        return problem.controls.eps_num
    return min(problem.grid.spacing)


@lru_cache(maxsize=256)
def _derived_clamp(problem: Problem) -> float:
    if problem.controls.grad_clamp is not None:
        return problem.controls.grad_clamp
    f = problem.initial_field()
    mask = interior_mask(problem.grid)
    r2 = sum(g * g for g in gradient_arrays(f))
    lip = math.sqrt(float(np.max(r2[mask]))) if np.any(mask) else 0.0
    return max(2.0 * lip, 1.0)


def _regularized_arrays(p, p_prime, eps, r2):
    w = r2 + eps * eps
    s = w ** ((p_prime - 2.0) / 2.0)
    return s, s * (p - 2.0) * r2 / w


def _proxy_arrays(spec: OperatorSpec, eps_num: float, r2: np.ndarray):
    """The family's eps_num-regularized coefficients (defined at r2 = 0)."""
    if eps_num <= 0.0:
        raise ValueError("eps_num = 0 cannot regularize singular-gradient nodes")
    if spec.family in (Family.BIASED_INFINITY, Family.BIASED_INFINITY_REGULARIZED):
        w = r2 + eps_num * eps_num
        return np.full_like(r2, eps_num), r2 / w
    return _regularized_arrays(spec.p, spec.growth_exponent, eps_num, r2)


def _effective_coeffs(problem: Problem, r2_raw: np.ndarray):
    """Per-node (s, c) actually used by the scheme, plus the clamped r2.

    Applies the gradient clamp (growth exponent > 2 only) and the
    singular-gradient policy described in the module docstring.
    """
    spec = problem.spec
    r2 = r2_raw
    if spec.growth_exponent > 2.0:
        cl = _derived_clamp(problem)
        r2 = np.minimum(r2_raw, cl * cl)

    if spec.everywhere_defined:
        s, c = rank_one_coeff_arrays(spec, r2)
        return s, c, r2

    eps_num = _eps_num(problem)
    floor = spec.grad_floor
    if floor == 0.0 and spec.growth_exponent < 2.0:
        floor = eps_num
    sing = r2 <= floor * floor if floor > 0.0 else r2 == 0.0
    safe = np.where(sing, 1.0, r2)
    s, c = rank_one_coeff_arrays(spec, safe)
    if np.any(sing):
        if problem.grid.dim == 1 and spec.growth_exponent == 2.0:
            s0, c0 = rank_one_coeffs(spec, 1.0)  # constant 1D coefficient
            s = np.where(sing, s0 + c0, s)
            c = np.where(sing, 0.0, c)
        else:
            sp, cp = _proxy_arrays(spec, eps_num, r2)
            s = np.where(sing, sp, s)
            c = np.where(sing, cp, c)
    return s, c, r2


def _stage(problem: Problem, fld: ScalarField):
    grads = gradient_arrays(fld)
    r2_raw = grads[0] * grads[0]
    for g in grads[1:]:
        r2_raw = r2_raw + g * g
    s, c, _ = _effective_coeffs(problem, r2_raw)
    mask = interior_mask(problem.grid)
    lam_nodes = s + np.maximum(c, 0.0)
    lam = float(np.max(lam_nodes[mask]))
    h_min = min(problem.grid.spacing)
    dt_max = problem.controls.cfl_sigma * h_min * h_min / (
        2.0 * problem.grid.dim * max(lam, 1.0)
    )
    return grads, r2_raw, s, c, mask, dt_max


def cfl_dt(problem: Problem, fld: ScalarField) -> float:
    """Stable time step for the current field (same coefficients as ``step``)."""
    if fld.grid != problem.grid:
        raise ValueError("field is not on the problem's grid")
    return _stage(problem, fld)[-1]


def _advance(problem: Problem, fld: ScalarField, stage, dt: float) -> ScalarField:
    grads, r2_raw, s, c, mask, _ = stage
    hess = hessian_arrays(fld)
    if problem.grid.dim == 1:
        diff = (s + c) * hess[(0, 0)]
    else:
        r2_safe = np.where(r2_raw > 0.0, r2_raw, 1.0)
        gx, gy = grads
        quad = (
            gx * gx * hess[(0, 0)]
            + 2.0 * gx * gy * hess[(0, 1)]
            + gy * gy * hess[(1, 1)]
        ) / r2_safe
        diff = s * (hess[(0, 0)] + hess[(1, 1)]) + c * quad
    rhs = diff
    ham = problem.ham
    if not ham.is_zero:
        h_arr = np.zeros_like(rhs)
        if ham.a != 0.0:
            h_arr -= ham.a * np.sqrt(r2_raw + ham.eps2 * ham.eps2)
        if ham.source is not None:
            h_arr = h_arr - np.asarray(ham.source(*problem.grid.meshes(), fld.time), float)
        rhs = rhs - h_arr

    t_new = fld.time + dt
    if problem.grid.boundary is Boundary.PERIODIC:
        new_vals = fld.values + dt * rhs
    else:
        new_vals = fld.values + dt * np.where(mask, rhs, 0.0)
        g_vals = np.broadcast_to(
            np.asarray(problem.dirichlet(*problem.grid.meshes(), t_new), float),
            problem.grid.shape,
        )
        new_vals = np.where(mask, new_vals, g_vals)
    if not np.all(np.isfinite(new_vals)):
        bad = np.argwhere(~np.isfinite(new_vals))[0]
        raise BlowUpError(tuple(int(i) for i in bad), t_new)
    return ScalarField(problem.grid, new_vals, t_new)


def step(fld: ScalarField, problem: Problem, dt: float) -> ScalarField:
    """One forward-Euler step; rejects dt above the stability bound."""
    if fld.grid != problem.grid:
        raise ValueError("field is not on the problem's grid")
    if dt <= 0:
        raise ValueError("dt must be > 0")
    if fld.time + dt > problem.T + 1e-9 * max(dt, problem.T, 1.0):
        raise ValueError(f"step past the horizon: t = {fld.time:.6g}, T = {problem.T:.6g}")
    stage = _stage(problem, fld)
    if dt > stage[-1] * (1.0 + 1e-9):
        raise CflViolationError(f"dt = {dt:.3e} exceeds CFL bound {stage[-1]:.3e}")
    return _advance(problem, fld, stage, dt)


def solve(problem: Problem, dt_override: Optional[float] = None) -> SolveResult:
    """March from t = 0 to T, capturing snapshots exactly at requested times.

    With ``dt_override`` the step is fixed (still clipped at capture times and
    checked against CFL each step), which keeps parameter sweeps aligned in
    time.
    """
    requested = problem.controls.snapshot_times or (problem.T,)
    requested = tuple(sorted(set(requested)))
    targets = tuple(sorted(set(requested + (problem.T,))))
    fld = problem.initial_field()
    snapshots = []
    data_lo = float(np.min(fld.values))
    data_hi = float(np.max(fld.values))
    edge = None
    if problem.grid.boundary is Boundary.DIRICHLET:
        edge = ~interior_mask(problem.grid)
    overshoot = 0.0
    steps = 0
    min_dt = math.inf
    if targets and targets[0] == 0.0:
        if 0.0 in requested:
            snapshots.append(fld)
        targets = targets[1:]
    t_eps = 1e-12 * max(1.0, problem.T)
    for t_target in targets:
        while fld.time < t_target - t_eps:
            stage = _stage(problem, fld)
            dt_max = stage[-1]
            dt = dt_max if dt_override is None else dt_override
            if dt > dt_max * (1.0 + 1e-9):
                raise CflViolationError(
                    f"fixed dt = {dt:.3e} exceeds CFL bound {dt_max:.3e} at t = {fld.time:.6g}"
                )
            hit = dt >= t_target - fld.time - t_eps
            if hit:
                dt = t_target - fld.time
            fld = _advance(problem, fld, stage, dt)
            if hit:
                fld = ScalarField(problem.grid, fld.values, t_target)
            steps += 1
            min_dt = min(min_dt, dt)
            if steps > problem.controls.max_steps:
                raise BudgetExceededError(
                    f"horizon T = {problem.T} unreachable within {problem.controls.max_steps} steps"
                )
            if edge is not None:
                data_lo = min(data_lo, float(np.min(fld.values[edge])))
                data_hi = max(data_hi, float(np.max(fld.values[edge])))
            overshoot = max(
                overshoot,
                float(np.max(fld.values)) - data_hi,
                data_lo - float(np.min(fld.values)),
                0.0,
            )
        if t_target in requested:
            snapshots.append(fld)
    stats = SolveStats(
        steps=steps,
        min_dt=min_dt if steps else 0.0,
        overshoot=overshoot,
        final_time=fld.time,
    )
    return SolveResult(snapshots=snapshots, stats=stats)
