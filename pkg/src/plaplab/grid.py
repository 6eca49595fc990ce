"""Uniform 1D/2D grids, grid functions, difference stencils, norms, and CSV io.

Periodic grids store N nodes per axis (spacing (b-a)/N, the right endpoint
wraps to the left); Dirichlet grids store both endpoints (spacing
(b-a)/(N-1)). Fields are immutable once constructed.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Callable

import numpy as np

from .errors import GridMismatchError


class Boundary(Enum):
    PERIODIC = "periodic"
    DIRICHLET = "dirichlet"


@dataclass(frozen=True)
class GridSpec:
    dim: int
    extent: tuple[tuple[float, float], ...]
    resolution: tuple[int, ...]
    boundary: Boundary

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError("dim must be 1 or 2")
        object.__setattr__(self, "extent", tuple((float(a), float(b)) for a, b in self.extent))
        object.__setattr__(self, "resolution", tuple(int(n) for n in self.resolution))
        if len(self.extent) != self.dim or len(self.resolution) != self.dim:
            raise ValueError("extent/resolution must have one entry per axis")
        for (a, b), n in zip(self.extent, self.resolution):
            if not b > a:
                raise ValueError(f"empty extent [{a}, {b}]")
            if n < 8:
                raise ValueError("resolution must be >= 8 nodes per axis")

    @staticmethod
    def line(a: float, b: float, n: int, boundary: Boundary) -> "GridSpec":
        return GridSpec(1, ((a, b),), (n,), boundary)

    @staticmethod
    def box(extent, resolution, boundary: Boundary) -> "GridSpec":
        return GridSpec(2, tuple(extent), tuple(resolution), boundary)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.resolution

    @property
    def spacing(self) -> tuple[float, ...]:
        div = 0 if self.boundary is Boundary.PERIODIC else 1
        return tuple((b - a) / (n - div) for (a, b), n in zip(self.extent, self.resolution))

    def axis_coords(self, axis: int) -> np.ndarray:
        (a, _), n = self.extent[axis], self.resolution[axis]
        h = self.spacing[axis]
        return a + h * np.arange(n)

    def meshes(self) -> tuple[np.ndarray, ...]:
        """Coordinate arrays of full ``shape`` (indexing='ij'); cached, read-only."""
        return _cached_meshes(self)

    def refine(self) -> "GridSpec":
        """Halve the spacing keeping node positions nested."""
        if self.boundary is Boundary.PERIODIC:
            res = tuple(2 * n for n in self.resolution)
        else:
            res = tuple(2 * n - 1 for n in self.resolution)
        return GridSpec(self.dim, self.extent, res, self.boundary)


@lru_cache(maxsize=128)
def _cached_meshes(grid: GridSpec) -> tuple[np.ndarray, ...]:
    axes = [grid.axis_coords(k) for k in range(grid.dim)]
    if grid.dim == 1:
        out = (axes[0],)
    else:
        out = tuple(np.meshgrid(*axes, indexing="ij"))
    for arr in out:
        arr.flags.writeable = False
    return out


@dataclass(frozen=True)
class ScalarField:
    grid: GridSpec
    values: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.grid.shape:
            raise ValueError(f"values shape {v.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        if self.time < 0:
            raise ValueError("time must be >= 0")
        v = v.copy()
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @staticmethod
    def from_function(grid: GridSpec, fn: Callable, time: float = 0.0) -> "ScalarField":
        vals = np.asarray(fn(*grid.meshes()), dtype=float)
        vals = np.broadcast_to(vals, grid.shape)
        return ScalarField(grid, vals, time)


def _shifted(values: np.ndarray, axis: int, offset: int, boundary: Boundary) -> np.ndarray:
    """values[i + offset] along ``axis``; edge rows are clamped in Dirichlet
    mode (they are only read at boundary nodes, which stencils never own)."""
    if boundary is Boundary.PERIODIC:
        return np.roll(values, -offset, axis=axis)
    pad = min(abs(offset), values.shape[axis] - 1)
    if offset > 0:
        sl = [slice(None)] * values.ndim
        sl[axis] = slice(pad, None)
        edge = [slice(None)] * values.ndim
        edge[axis] = slice(-1, None)
        tail = np.repeat(values[tuple(edge)], pad, axis=axis)
        return np.concatenate([values[tuple(sl)], tail], axis=axis)
    sl = [slice(None)] * values.ndim
    sl[axis] = slice(None, values.shape[axis] - pad)
    edge = [slice(None)] * values.ndim
    edge[axis] = slice(0, 1)
    head = np.repeat(values[tuple(edge)], pad, axis=axis)
    return np.concatenate([head, values[tuple(sl)]], axis=axis)


def gradient_arrays(field: ScalarField) -> list[np.ndarray]:
    """Central-difference gradient components on the full node set.

    Dirichlet boundary entries are not meaningful and are masked off by
    callers via ``interior_mask``.
    """
    g = field.grid
    out = []
    for ax in range(g.dim):
        h = g.spacing[ax]
        fa = _shifted(field.values, ax, +1, g.boundary)
        fb = _shifted(field.values, ax, -1, g.boundary)
        out.append((fa - fb) / (2.0 * h))
    return out


def hessian_arrays(field: ScalarField) -> dict[tuple[int, int], np.ndarray]:
    """Second-difference Hessian entries keyed by (i, j) with i <= j."""
    g = field.grid
    out: dict[tuple[int, int], np.ndarray] = {}
    for ax in range(g.dim):
        h = g.spacing[ax]
        fa = _shifted(field.values, ax, +1, g.boundary)
        fb = _shifted(field.values, ax, -1, g.boundary)
        out[(ax, ax)] = (fa - 2.0 * field.values + fb) / (h * h)
    if g.dim == 2:
        hx, hy = g.spacing
        fpp = _shifted(_shifted(field.values, 0, +1, g.boundary), 1, +1, g.boundary)
        fmm = _shifted(_shifted(field.values, 0, -1, g.boundary), 1, -1, g.boundary)
        fpm = _shifted(_shifted(field.values, 0, +1, g.boundary), 1, -1, g.boundary)
        fmp = _shifted(_shifted(field.values, 0, -1, g.boundary), 1, +1, g.boundary)
        out[(0, 1)] = (fpp + fmm - fpm - fmp) / (4.0 * hx * hy)
    return out


def interior_mask(grid: GridSpec) -> np.ndarray:
    """True where stencil updates apply (everywhere on periodic grids)."""
    if grid.boundary is Boundary.PERIODIC:
        return np.ones(grid.shape, dtype=bool)
    mask = np.zeros(grid.shape, dtype=bool)
    sl = tuple(slice(1, -1) for _ in range(grid.dim))
    mask[sl] = True
    return mask


def _check_node(field: ScalarField, node) -> tuple[int, ...]:
    idx = (node,) if np.isscalar(node) else tuple(int(i) for i in node)
    if len(idx) != field.grid.dim:
        raise ValueError("node index dimensionality mismatch")
    for i, n in zip(idx, field.grid.shape):
        if not (0 <= i < n):
            raise ValueError(f"node {idx} outside grid {field.grid.shape}")
    if field.grid.boundary is Boundary.DIRICHLET:
        if any(i == 0 or i == n - 1 for i, n in zip(idx, field.grid.shape)):
            raise ValueError(f"no interior stencil at Dirichlet boundary node {idx}")
    return idx


def gradient(field: ScalarField, node) -> np.ndarray:
    """Central-difference gradient at one node; exact for affine fields."""
    idx = _check_node(field, node)
    return np.array([comp[idx] for comp in gradient_arrays(field)])


def hessian(field: ScalarField, node) -> np.ndarray:
    """Symmetric second-difference Hessian at one node; exact for quadratics."""
    idx = _check_node(field, node)
    entries = hessian_arrays(field)
    d = field.grid.dim
    out = np.zeros((d, d))
    for (i, j), arr in entries.items():
        out[i, j] = arr[idx]
        out[j, i] = arr[idx]
    return out


def sup_norm(field: ScalarField) -> float:
    return float(np.max(np.abs(field.values)))


def sup_diff(f: ScalarField, g: ScalarField) -> float:
    if f.grid != g.grid:
        raise GridMismatchError("sup_diff requires identical grids")
    return float(np.max(np.abs(f.values - g.values)))


def restrict_to(fine: ScalarField, coarse_grid: GridSpec) -> ScalarField:
    """Restrict a once-refined field back onto its parent grid's nodes."""
    if coarse_grid.refine() != fine.grid:
        raise GridMismatchError("fine grid is not the refinement of the coarse grid")
    sl = tuple(slice(None, None, 2) for _ in range(fine.grid.dim))
    return ScalarField(coarse_grid, fine.values[sl], fine.time)


# -- persistence --------------------------------------------------------------

_FMT = "%.17g"


def save_field(field: ScalarField, path) -> None:
    """Dump as CSV: a grid-describing header line, then values row-major."""
    g = field.grid
    extent = ";".join(_FMT % a + "," + _FMT % b for a, b in g.extent)
    res = ",".join(str(n) for n in g.resolution)
    header = (
        f"# grid dim={g.dim} extent={extent} N={res} "
        f"boundary={g.boundary.value} time={_FMT % field.time}"
    )
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for v in field.values.ravel(order="C"):
            fh.write(_FMT % v + "\n")


def load_field(path) -> ScalarField:
    with open(path) as fh:
        header = fh.readline().strip()
        body = [line.strip() for line in fh if line.strip()]
    if not header.startswith("# grid "):
        raise ValueError(f"not a field file: {path}")
    kv = {}
    for token in header[len("# grid "):].split():
        key, _, val = token.partition("=")
        kv[key] = val
    dim = int(kv["dim"])
    extent = tuple(tuple(float(x) for x in pair.split(",")) for pair in kv["extent"].split(";"))
    res = tuple(int(x) for x in kv["N"].split(","))
    grid = GridSpec(dim, extent, res, Boundary(kv["boundary"]))
    values = np.array([float(x) for x in body]).reshape(grid.shape, order="C")
    return ScalarField(grid, values, float(kv["time"]))
