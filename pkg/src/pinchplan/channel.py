"""Free-space channel model and the precomputed per-grid average-gain tensor.

Each tap-to-grid link combines a deterministic line-of-sight ray (blocked or
not, per the visibility tensor) with a sum of Rayleigh-faded scatter clusters.
Under maximum-ratio transmission the per-grid average SNR has the closed form

    snr(u, v) = snr_scale * sum_n gains[n, m_n, u, v]

with gains[n, m, u, v] = (los * los_ref_gain + nlos_power) / dist_sq, which is
what `precompute_gain_map` tabulates once per scenario. All power quantities
are linear here; dB conversions live at the IO boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .geometry import Blockage, CandidateGrid, GeometryError, GridSpec, Region, VisibilityMap, WaveguideLayout

C_LIGHT = 299_792_458.0  # m/s, exact


def db_to_linear(value_db: float) -> float:
    return 10.0 ** (value_db / 10.0)


def linear_to_db(value: float) -> float:
    return 10.0 * math.log10(value)


def dbm_to_watt(value_dbm: float) -> float:
    return 10.0 ** ((value_dbm - 30.0) / 10.0)


@dataclass(frozen=True)
class ChannelParams:
    """Carrier, power and scatter parameters with the derived link constants.

    Attributes
    ----------
    freq_hz : carrier frequency.
    tx_power_w, noise_power_w : transmit power and noise power, linear watts.
    cluster_powers : per-cluster average scatter gains (dimensionless, sum to
        the total NLoS power).
    n_eff : effective refractive index of the waveguide dielectric.
    """

    freq_hz: float
    tx_power_w: float
    noise_power_w: float
    cluster_powers: tuple[float, ...]
    n_eff: float = 1.4

    def __post_init__(self) -> None:
        if not self.freq_hz > 0:
            raise ValueError("carrier frequency must be positive")
        if not (self.tx_power_w > 0 and self.noise_power_w > 0):
            raise ValueError("transmit and noise powers must be positive")
        if self.n_eff < 1.0:
            raise ValueError("effective refractive index must be >= 1")
        powers = tuple(float(p) for p in self.cluster_powers)
        if len(powers) < 1 or any(p < 0 for p in powers):
            raise ValueError("cluster powers must be a non-empty list of non-negative gains")
        object.__setattr__(self, "cluster_powers", powers)

    @classmethod
    def from_db(
        cls,
        freq_hz: float,
        tx_power_dbm: float,
        noise_dbm: float,
        nlos_db: float,
        n_clusters: int = 4,
        n_eff: float = 1.4,
    ) -> "ChannelParams":
        """Build from the usual dB inputs, splitting NLoS power into equal clusters."""
        if n_clusters < 1:
            raise ValueError("need at least one scatter cluster")
        total = db_to_linear(nlos_db)
        return cls(
            freq_hz=freq_hz,
            tx_power_w=dbm_to_watt(tx_power_dbm),
            noise_power_w=dbm_to_watt(noise_dbm),
            cluster_powers=tuple([total / n_clusters] * n_clusters),
            n_eff=n_eff,
        )

    @property
    def wavelength(self) -> float:
        return C_LIGHT / self.freq_hz

    @property
    def guide_wavelength(self) -> float:
        return self.wavelength / self.n_eff

    @property
    def los_ref_gain(self) -> float:
        """Free-space power gain at 1 m, (wavelength / 4 pi)^2."""
        return (self.wavelength / (4.0 * math.pi)) ** 2

    @property
    def nlos_power(self) -> float:
        return sum(self.cluster_powers)

    @property
    def snr_scale(self) -> float:
        """Transmit SNR tx_power / noise_power."""
        return self.tx_power_w / self.noise_power_w

    def with_power_w(self, tx_power_w: float) -> "ChannelParams":
        return replace(self, tx_power_w=tx_power_w)


@dataclass(frozen=True)
class GainMap:
    """Per-tap-per-grid average channel gains with their squared distances."""

    gains: np.ndarray  # (waveguides, taps, nx, ny)
    dist_sq: np.ndarray  # same shape
    valid: np.ndarray  # (nx, ny) bool

    @property
    def n_waveguides(self) -> int:
        return int(self.gains.shape[0])

    @property
    def n_taps(self) -> int:
        return int(self.gains.shape[1])


def distance_sq(
    wg: int,
    tap: int,
    u: int,
    v: int,
    layout: WaveguideLayout,
    taps: CandidateGrid,
    grid: GridSpec,
) -> float:
    """Squared tap-to-grid-center distance (indices 0-based)."""
    if not (0 <= u < grid.nx and 0 <= v < grid.ny):
        raise GeometryError(f"grid index ({u}, {v}) out of range")
    x_tap = taps.x_taps[wg, tap]
    y_wg = layout.y_positions()[wg]
    dx = grid.x_centers()[u] - x_tap
    dy = grid.y_centers()[v] - y_wg
    return float(dx * dx + dy * dy + layout.height**2)


def avg_gain(los_flag, dist_sq_val, params: ChannelParams):
    """Average channel power gain (los * los_ref_gain + nlos_power) / dist_sq."""
    d2 = np.asarray(dist_sq_val, dtype=float)
    if np.any(d2 <= 0):
        raise ValueError("squared distance must be positive")
    los = np.asarray(los_flag, dtype=float)
    return (los * params.los_ref_gain + params.nlos_power) / d2


def precompute_gain_map(
    layout: WaveguideLayout,
    taps: CandidateGrid,
    grid: GridSpec,
    vis: VisibilityMap,
    params: ChannelParams,
) -> GainMap:
    """Tabulate average gains for every (waveguide, tap, grid) triple."""
    n_wg, n_tap = taps.x_taps.shape
    if vis.los.shape != (n_wg, n_tap, grid.nx, grid.ny):
        raise ValueError("visibility tensor shape does not match layout/taps/grid")
    dx = grid.x_centers()[None, None, :, None] - taps.x_taps[:, :, None, None]
    dy = grid.y_centers()[None, None, None, :] - layout.y_positions()[:, None, None, None]
    d2 = dx * dx + dy * dy + layout.height**2
    gains = (vis.los * params.los_ref_gain + params.nlos_power) / d2
    return GainMap(gains=gains, dist_sq=d2, valid=vis.valid.copy())


def _selection_array(selected, gain_map: GainMap) -> np.ndarray:
    sel = np.asarray(selected, dtype=int)
    if sel.shape != (gain_map.n_waveguides,):
        raise ValueError(
            f"selection must pick one tap per waveguide ({gain_map.n_waveguides} entries)"
        )
    if np.any(sel < 0) or np.any(sel >= gain_map.n_taps):
        raise ValueError(f"tap indices must lie in [0, {gain_map.n_taps})")
    return sel


def avg_snr(selected, gain_map: GainMap, params: ChannelParams) -> np.ndarray:
    """Per-grid average SNR field for one tap selection (one tap per waveguide)."""
    sel = _selection_array(selected, gain_map)
    total = gain_map.gains[np.arange(len(sel)), sel].sum(axis=0)
    return params.snr_scale * total


def sample_instantaneous_snr(
    selected,
    layout: WaveguideLayout,
    taps: CandidateGrid,
    grid: GridSpec,
    vis: VisibilityMap,
    params: ChannelParams,
    seed: int,
    n_samples: int = 1,
) -> np.ndarray:
    """Draw instantaneous post-beamforming SNR fields, shape (n_samples, nx, ny).

    Per sample and per waveguide the active tap's channel is the deterministic
    LoS ray (zeroed when blocked) plus one circularly-symmetric complex
    Gaussian per scatter cluster with variance cluster_power / dist_sq.
    Maximum-ratio transmission makes the SNR snr_scale * sum_n |h_n|^2.
    Same seed, same arguments: bit-identical output.
    """
    if n_samples < 1:
        raise ValueError("need at least one sample")
    sel = np.asarray(selected, dtype=int)
    if sel.shape != (layout.count,):
        raise ValueError(f"selection must pick one tap per waveguide ({layout.count} entries)")
    n_grid = grid.nx * grid.ny

    x_sel = taps.x_taps[np.arange(layout.count), sel]  # (N,)
    dx = grid.x_centers()[None, :, None] - x_sel[:, None, None]
    dy = grid.y_centers()[None, None, :] - layout.y_positions()[:, None, None]
    dist = np.sqrt(dx * dx + dy * dy + layout.height**2).reshape(layout.count, n_grid)
    los_mask = vis.los[np.arange(layout.count), sel].reshape(layout.count, n_grid)

    phase = (
        -2.0 * np.pi / params.wavelength * dist
        + 2.0 * np.pi / params.guide_wavelength * x_sel[:, None]
    )
    h_los = np.where(los_mask, math.sqrt(params.los_ref_gain) * np.exp(1j * phase) / dist, 0.0)

    cluster_std = np.sqrt(np.asarray(params.cluster_powers) / 2.0)  # per real/imag part
    rng = np.random.default_rng(seed)
    out = np.empty((n_samples, n_grid))
    # chunk the sample axis so the draw buffer stays modest
    chunk = max(1, min(n_samples, int(4e6 // max(1, layout.count * len(cluster_std) * n_grid)) + 1))
    start = 0
    while start < n_samples:
        stop = min(start + chunk, n_samples)
        shape = (stop - start, layout.count, len(cluster_std), n_grid)
        draws = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
        scatter = (draws * cluster_std[None, None, :, None]).sum(axis=2) / dist[None, :, :]
        h = h_los[None, :, :] + scatter
        out[start:stop] = params.snr_scale * (np.abs(h) ** 2).sum(axis=1)
        start = stop
    return out.reshape(n_samples, grid.nx, grid.ny)


def fixed_array_gain_map(
    region: Region,
    blockages: tuple[Blockage, ...] | list[Blockage],
    grid: GridSpec,
    params: ChannelParams,
    n_elements: int,
) -> GainMap:
    """Gain map of the conventional baseline: a half-wavelength-spaced array.

    n_elements antennas sit at the region center (x_len/2, 0, height), spread
    along y at wavelength/2 spacing. There is nothing to select, so the map
    has a single tap per element and the baseline field is
    avg_snr([0]*n_elements, ...).
    """
    if n_elements < 1:
        raise ValueError("need at least one array element")
    e = np.arange(n_elements, dtype=float)
    y_el = (e - (n_elements - 1) / 2.0) * (params.wavelength / 2.0)
    x_el = np.full(n_elements, region.x_len / 2.0)

    gx = grid.x_centers()
    gy = grid.y_centers()
    from .geometry import _slab_blocked  # same closed-set test as the tap tensor

    ex = np.repeat(gx, grid.ny)
    ey = np.tile(gy, grid.nx)
    ez = np.zeros_like(ex)
    los = np.ones((n_elements, 1, grid.nx, grid.ny), dtype=bool)
    valid = np.ones((grid.nx, grid.ny), dtype=bool)
    for blk in blockages:
        for k in range(n_elements):
            hit = _slab_blocked(x_el[k], y_el[k], region.height, ex, ey, ez, blk)
            los[k, 0] &= ~hit.reshape(grid.nx, grid.ny)
        inside = (
            (gx[:, None] >= blk.x_min)
            & (gx[:, None] <= blk.x_max)
            & (gy[None, :] >= blk.y_min)
            & (gy[None, :] <= blk.y_max)
        )
        valid &= ~inside

    dx = gx[None, :, None] - x_el[:, None, None]
    dy = gy[None, None, :] - y_el[:, None, None]
    d2 = (dx * dx + dy * dy + region.height**2)[:, None, :, :]
    gains = (los * params.los_ref_gain + params.nlos_power) / d2
    return GainMap(gains=gains, dist_sq=d2, valid=valid)
