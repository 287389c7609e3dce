"""Deployment geometry: waveguides on the ceiling, candidate taps, obstacles, floor grid.

Coordinates: x runs along the waveguides (0 .. x_len), y across them
(-y_len/2 .. +y_len/2), z up. Waveguides hang at z = height, receivers sit
at z = 0. Line of sight between a tap and a grid center is decided by exact
segment/cuboid intersection (slab method, closed sets), so the visibility
tensor of a layout is bit-for-bit reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Touching an obstacle face or edge counts as blocked; slab bounds are padded
# by this absolute tolerance so exact grazing contacts land inside.
SLAB_TOL = 1e-12


class GeometryError(ValueError):
    """A deployment description violates a structural constraint."""


@dataclass(frozen=True)
class Region:
    """Rectangular service area with the waveguide mounting height."""

    x_len: float
    y_len: float
    height: float

    def __post_init__(self) -> None:
        if not (self.x_len > 0 and self.y_len > 0 and self.height > 0):
            raise GeometryError("region x_len, y_len and height must all be positive")


@dataclass(frozen=True)
class WaveguideLayout:
    """Parallel waveguides, uniformly spaced across y at a common height."""

    count: int
    spacing: float
    height: float

    def __post_init__(self) -> None:
        if self.count < 2:
            raise GeometryError("need at least two waveguides")
        if not (self.spacing > 0 and self.height > 0):
            raise GeometryError("waveguide spacing and height must be positive")

    @classmethod
    def uniform(cls, region: Region, count: int) -> "WaveguideLayout":
        if count < 2:
            raise GeometryError("need at least two waveguides")
        return cls(count=count, spacing=region.y_len / (count - 1), height=region.height)

    def y_positions(self) -> np.ndarray:
        """Waveguide y coordinates, first at -y_len/2, last at +y_len/2.

        Computed in the centered form (n - (count-1)/2) * spacing so mirror
        pairs negate exactly in floating point.
        """
        n = np.arange(self.count, dtype=float)
        return (n - (self.count - 1) / 2.0) * self.spacing

    def feed_points(self) -> np.ndarray:
        """(count, 3) feed coordinates at x = 0."""
        y = self.y_positions()
        out = np.zeros((self.count, 3))
        out[:, 1] = y
        out[:, 2] = self.height
        return out


@dataclass(frozen=True)
class CandidateGrid:
    """Per-waveguide candidate tap x coordinates, shape (waveguides, taps)."""

    x_taps: np.ndarray

    def __post_init__(self) -> None:
        x = np.asarray(self.x_taps, dtype=float)
        if x.ndim != 2 or x.shape[1] < 1:
            raise GeometryError("x_taps must be a 2-D array with at least one tap per waveguide")
        if x.shape[1] > 1 and not np.all(np.diff(x, axis=1) > 0):
            raise GeometryError("tap x coordinates must be strictly increasing per waveguide")
        object.__setattr__(self, "x_taps", x)

    @classmethod
    def uniform(cls, region: Region, n_waveguides: int, count: int) -> "CandidateGrid":
        """Cell-centered taps x_m = (m + 1/2) * x_len / count, same on every waveguide."""
        if count < 1:
            raise GeometryError("need at least one candidate tap per waveguide")
        x = (np.arange(count, dtype=float) + 0.5) * (region.x_len / count)
        return cls(x_taps=np.tile(x, (n_waveguides, 1)))

    @property
    def count(self) -> int:
        return int(self.x_taps.shape[1])


@dataclass(frozen=True)
class Blockage:
    """Axis-aligned cuboid obstacle standing on the floor."""

    x_min: float
    x_max: float
    y_min: float
    y_max: float
    height: float

    def __post_init__(self) -> None:
        if not self.x_min < self.x_max:
            raise GeometryError("blockage needs x_min < x_max")
        if not self.y_min < self.y_max:
            raise GeometryError("blockage needs y_min < y_max")
        if not self.height > 0:
            raise GeometryError("blockage height must be positive")


@dataclass(frozen=True)
class GridSpec:
    """Uniform evaluation grid of cell centers over the region floor."""

    nx: int
    ny: int
    cell_x: float
    cell_y: float

    def __post_init__(self) -> None:
        if self.nx < 1 or self.ny < 1:
            raise GeometryError("grid needs at least one cell per axis")
        if not (self.cell_x > 0 and self.cell_y > 0):
            raise GeometryError("grid cell sizes must be positive")

    @classmethod
    def from_region(cls, region: Region, nx: int, ny: int) -> "GridSpec":
        if nx < 1 or ny < 1:
            raise GeometryError("grid needs at least one cell per axis")
        return cls(nx=nx, ny=ny, cell_x=region.x_len / nx, cell_y=region.y_len / ny)

    def x_centers(self) -> np.ndarray:
        return (np.arange(self.nx, dtype=float) + 0.5) * self.cell_x

    def y_centers(self) -> np.ndarray:
        # centered form: exact +/- mirror pairs in floating point
        v = np.arange(self.ny, dtype=float)
        return (v + 0.5 - self.ny / 2.0) * self.cell_y


@dataclass(frozen=True)
class VisibilityMap:
    """los[n, m, u, v]: tap (n, m) sees grid (u, v); valid[u, v]: center outside footprints."""

    los: np.ndarray
    valid: np.ndarray


def candidate_position(wg: int, tap: int, layout: WaveguideLayout, taps: CandidateGrid) -> np.ndarray:
    """3-D position of candidate tap `tap` on waveguide `wg` (0-based indices)."""
    n_wg, n_tap = taps.x_taps.shape
    if not 0 <= wg < min(n_wg, layout.count):
        raise GeometryError(f"waveguide index {wg} out of range [0, {layout.count})")
    if not 0 <= tap < n_tap:
        raise GeometryError(f"tap index {tap} out of range [0, {n_tap})")
    y = layout.y_positions()[wg]
    return np.array([taps.x_taps[wg, tap], y, layout.height])


def _slab_blocked(
    sx: float,
    sy: float,
    sz: float,
    ex: np.ndarray,
    ey: np.ndarray,
    ez: np.ndarray,
    blk: Blockage,
) -> np.ndarray:
    """Closed-set segment/cuboid intersection test, vectorized over endpoints."""
    t_lo = np.zeros(np.broadcast(ex, ey, ez).shape)
    t_hi = np.ones_like(t_lo)
    bounds = (
        (sx, ex, blk.x_min - SLAB_TOL, blk.x_max + SLAB_TOL),
        (sy, ey, blk.y_min - SLAB_TOL, blk.y_max + SLAB_TOL),
        (sz, ez, -SLAB_TOL, blk.height + SLAB_TOL),
    )
    for start, end, lo, hi in bounds:
        d = np.asarray(end, dtype=float) - start
        with np.errstate(divide="ignore", invalid="ignore"):
            t1 = (lo - start) / d
            t2 = (hi - start) / d
        ax_lo = np.minimum(t1, t2)
        ax_hi = np.maximum(t1, t2)
        parallel = d == 0.0
        if np.any(parallel):
            inside = (start >= lo) & (start <= hi)
            ax_lo = np.where(parallel, np.where(inside, -np.inf, np.inf), ax_lo)
            ax_hi = np.where(parallel, np.where(inside, np.inf, -np.inf), ax_hi)
        t_lo = np.maximum(t_lo, ax_lo)
        t_hi = np.minimum(t_hi, ax_hi)
    return t_lo <= t_hi


def segment_blocked(p_start, p_end, blockage: Blockage) -> bool:
    """True when the closed segment intersects the closed cuboid (grazing counts)."""
    p0 = np.asarray(p_start, dtype=float)
    p1 = np.asarray(p_end, dtype=float)
    if p0.shape != (3,) or p1.shape != (3,):
        raise GeometryError("segment endpoints must be 3-D points")
    hit = _slab_blocked(p0[0], p0[1], p0[2], p1[:1], p1[1:2], p1[2:3], blockage)
    return bool(hit[0])


def compute_visibility(
    layout: WaveguideLayout,
    taps: CandidateGrid,
    blockages: tuple[Blockage, ...] | list[Blockage],
    grid: GridSpec,
) -> VisibilityMap:
    """Evaluate the full tap-to-grid visibility tensor and the footprint mask.

    los[n, m, u, v] is False when any obstacle intersects the segment from
    tap (n, m) down to grid center (u, v); an empty obstacle list gives an
    all-ones tensor. valid[u, v] is False exactly when the center lies inside
    some obstacle footprint (closed intervals).
    """
    n_wg, n_tap = taps.x_taps.shape
    if layout.count != n_wg:
        raise GeometryError("candidate grid row count must match the number of waveguides")
    gx = grid.x_centers()
    gy = grid.y_centers()
    ex = np.repeat(gx, grid.ny)
    ey = np.tile(gy, grid.nx)
    ez = np.zeros_like(ex)
    y_wg = layout.y_positions()

    los = np.ones((n_wg, n_tap, grid.nx, grid.ny), dtype=bool)
    valid = np.ones((grid.nx, grid.ny), dtype=bool)
    for blk in blockages:
        if not blk.height < layout.height:
            raise GeometryError("blockage height must stay below the waveguide height")
        for n in range(n_wg):
            for m in range(n_tap):
                hit = _slab_blocked(taps.x_taps[n, m], y_wg[n], layout.height, ex, ey, ez, blk)
                los[n, m] &= ~hit.reshape(grid.nx, grid.ny)
        inside = (
            (gx[:, None] >= blk.x_min)
            & (gx[:, None] <= blk.x_max)
            & (gy[None, :] >= blk.y_min)
            & (gy[None, :] <= blk.y_max)
        )
        valid &= ~inside
    return VisibilityMap(los=los, valid=valid)
