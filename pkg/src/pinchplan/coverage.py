"""Threshold-coverage activation planning over a precomputed gain map.

The planner picks one active tap per waveguide to maximize the number of
valid grid cells whose average SNR clears a threshold. The selection problem
embeds maximum coverage (so it is NP-hard in general); the workhorse is a
coordinate ascent with a closed-form single-waveguide update, backed by an
exhaustive enumerator for small instances, an LP-file emitter for external
MILP solvers, and an encoder that maps abstract max-coverage instances onto
gain maps for cross-checks.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, IO

import numpy as np

from .channel import ChannelParams, GainMap, avg_snr

# A field value this close (relatively) below the threshold still counts as
# covered, so closed comparisons survive float roundoff.
COVERAGE_SLACK = 1e-12

DEFAULT_ENUM_BUDGET = 1_000_000
DEFAULT_MAX_SWEEPS = 50


class BudgetError(RuntimeError):
    """An exhaustive enumeration would exceed its activation budget."""


@dataclass(frozen=True)
class Activation:
    """One active tap per waveguide, stored as 0-based tap indices."""

    selected: tuple[int, ...]

    def __post_init__(self) -> None:
        sel = tuple(int(m) for m in self.selected)
        if len(sel) == 0 or any(m < 0 for m in sel):
            raise ValueError("activation needs one non-negative tap index per waveguide")
        object.__setattr__(self, "selected", sel)

    @classmethod
    def centered(cls, n_waveguides: int, n_taps: int) -> "Activation":
        """Middle tap on every waveguide (ceil(n_taps/2) in 1-based terms)."""
        return cls(selected=tuple([(n_taps - 1) // 2] * n_waveguides))

    @classmethod
    def from_one_based(cls, indices) -> "Activation":
        return cls(selected=tuple(int(m) - 1 for m in indices))

    def one_based(self) -> list[int]:
        return [m + 1 for m in self.selected]

    def as_array(self) -> np.ndarray:
        return np.asarray(self.selected, dtype=int)


@dataclass
class CoverageResult:
    activation: Activation
    covered_count: int
    coverage_fraction: float
    snr_field: np.ndarray
    threshold: float
    sweeps_used: int
    method: str


def _check_threshold(threshold: float) -> None:
    if not threshold > 0:
        raise ValueError("SNR threshold must be positive")


def _covered(field: np.ndarray, threshold: float) -> np.ndarray:
    return field >= threshold * (1.0 - COVERAGE_SLACK)


def coverage_count(selected, gain_map: GainMap, params: ChannelParams, threshold: float) -> int:
    """Number of valid grid cells whose average SNR reaches the threshold."""
    _check_threshold(threshold)
    field = avg_snr(selected, gain_map, params)
    return int(np.count_nonzero(_covered(field, threshold) & gain_map.valid))


def residual_snr(selected, wg: int, gain_map: GainMap, params: ChannelParams) -> np.ndarray:
    """Average-SNR field with waveguide `wg`'s contribution removed."""
    sel = np.asarray(selected, dtype=int)
    if not 0 <= wg < gain_map.n_waveguides:
        raise ValueError(f"waveguide index {wg} out of range [0, {gain_map.n_waveguides})")
    field = avg_snr(sel, gain_map, params)
    return field - params.snr_scale * gain_map.gains[wg, sel[wg]]


def best_candidate(
    wg: int,
    residual_field: np.ndarray,
    gain_map: GainMap,
    params: ChannelParams,
    threshold: float,
) -> int:
    """Tap on `wg` maximizing covered cells given the other waveguides' field.

    Ties go to the larger total positive margin above the threshold, then to
    the smallest tap index.
    """
    _check_threshold(threshold)
    resid = residual_field[gain_map.valid]
    gains = params.snr_scale * gain_map.gains[wg][:, gain_map.valid]
    m, _, _ = _best_tap(resid, gains, threshold)
    return m


def _best_tap(resid_v: np.ndarray, gains_v: np.ndarray, threshold: float):
    """(tap, count, margin) over candidate fields resid_v + gains_v[m]."""
    thr_eff = threshold * (1.0 - COVERAGE_SLACK)
    best = None
    for m in range(gains_v.shape[0]):
        cand = resid_v + gains_v[m]
        count = int(np.count_nonzero(cand >= thr_eff))
        margin = float(np.maximum(cand - threshold, 0.0).sum())
        if best is None or count > best[1] or (count == best[1] and margin > best[2]):
            best = (m, count, margin)
    return best


def _ascent_once(
    sel0: tuple[int, ...],
    gains_v: np.ndarray,
    threshold: float,
    max_sweeps: int,
    on_update: Callable[[int, int, int], None] | None,
) -> tuple[list[int], int]:
    n_wg = gains_v.shape[0]
    sel = list(sel0)
    field_v = gains_v[np.arange(n_wg), sel].sum(axis=0)
    sweeps_used = 0
    for _ in range(max_sweeps):
        sweeps_used += 1
        changed = False
        for n in range(n_wg):
            resid_v = field_v - gains_v[n, sel[n]]
            m, count, _ = _best_tap(resid_v, gains_v[n], threshold)
            if m != sel[n]:
                sel[n] = m
                changed = True
            field_v = resid_v + gains_v[n, m]
            if on_update is not None:
                on_update(n, m, count)
        if not changed:
            break
    return sel, sweeps_used


def coordinate_ascent(
    initial: Activation,
    gain_map: GainMap,
    params: ChannelParams,
    threshold: float,
    max_sweeps: int = DEFAULT_MAX_SWEEPS,
    on_update: Callable[[int, int, int], None] | None = None,
    restarts: int = 1,
    seed: int = 0,
) -> CoverageResult:
    """Sweep the waveguides, re-picking each tap against the others' field.

    Every update maximizes the covered count (margin, then smallest index, on
    ties), so the count never decreases. A run stops after a sweep that
    changes nothing, or after `max_sweeps` sweeps; the cap only matters under
    pathological floating-point tie cycles. With `restarts` > 1 additional
    runs start from seeded uniform selections and the best final count wins
    (first winner kept on ties). `on_update(wg, tap, count)` is invoked after
    every single-waveguide update when given.
    """
    _check_threshold(threshold)
    if max_sweeps < 1:
        raise ValueError("max_sweeps must be at least 1")
    if restarts < 1:
        raise ValueError("restarts must be at least 1")
    n_valid = int(np.count_nonzero(gain_map.valid))
    if n_valid == 0:
        raise ValueError("no valid grid cells to cover")
    n_wg, n_tap = gain_map.n_waveguides, gain_map.n_taps
    sel0 = _selection(initial, n_wg, n_tap)

    gains_v = params.snr_scale * gain_map.gains[:, :, gain_map.valid]  # (N, M, V)
    thr_eff = threshold * (1.0 - COVERAGE_SLACK)

    rng = np.random.default_rng(seed)
    best = None  # (count, sel, sweeps)
    for r in range(restarts):
        start = sel0 if r == 0 else tuple(int(m) for m in rng.integers(0, n_tap, size=n_wg))
        sel, sweeps_used = _ascent_once(start, gains_v, threshold, max_sweeps, on_update)
        field_v = gains_v[np.arange(n_wg), sel].sum(axis=0)
        count = int(np.count_nonzero(field_v >= thr_eff))
        if best is None or count > best[0]:
            best = (count, sel, sweeps_used)

    _, sel, sweeps_used = best
    act = Activation(selected=tuple(sel))
    field = avg_snr(act.as_array(), gain_map, params)
    covered = int(np.count_nonzero(_covered(field, threshold) & gain_map.valid))
    return CoverageResult(
        activation=act,
        covered_count=covered,
        coverage_fraction=covered / n_valid,
        snr_field=field,
        threshold=threshold,
        sweeps_used=sweeps_used,
        method="coordinate_ascent",
    )


def _selection(initial: Activation, n_wg: int, n_tap: int) -> tuple[int, ...]:
    sel = initial.selected
    if len(sel) != n_wg:
        raise ValueError(f"activation must pick one tap per waveguide ({n_wg} entries)")
    if any(m >= n_tap for m in sel):
        raise ValueError(f"tap indices must lie in [0, {n_tap})")
    return sel


def check_enum_budget(n_waveguides: int, n_taps: int, budget: int) -> int:
    """Total activation count n_taps**n_waveguides, or BudgetError beyond budget."""
    total = n_taps**n_waveguides
    if total > budget:
        raise BudgetError(
            f"exhaustive search needs {total} activations "
            f"({n_taps}^{n_waveguides}), over the budget of {budget}"
        )
    return total


def _enumerate_fields(gains_v: np.ndarray):
    """Yield (selection tuple, summed field) over all activations, lexicographic."""
    n_wg, n_tap, _ = gains_v.shape

    def rec(n: int, base: np.ndarray):
        if n == n_wg:
            yield (), base
            return
        for m in range(n_tap):
            for tail, field in rec(n + 1, base + gains_v[n, m]):
                yield (m, *tail), field

    yield from rec(0, np.zeros(gains_v.shape[2]))


def exact_enumerate(
    gain_map: GainMap,
    params: ChannelParams,
    threshold: float,
    budget: int = DEFAULT_ENUM_BUDGET,
) -> CoverageResult:
    """Exhaustively maximize the covered count (lexicographically smallest argmax)."""
    _check_threshold(threshold)
    n_valid = int(np.count_nonzero(gain_map.valid))
    if n_valid == 0:
        raise ValueError("no valid grid cells to cover")
    check_enum_budget(gain_map.n_waveguides, gain_map.n_taps, budget)

    gains_v = params.snr_scale * gain_map.gains[:, :, gain_map.valid]
    thr_eff = threshold * (1.0 - COVERAGE_SLACK)
    best_sel, best_count = None, -1
    for sel, field in _enumerate_fields(gains_v):
        count = int(np.count_nonzero(field >= thr_eff))
        if count > best_count:
            best_sel, best_count = sel, count

    act = Activation(selected=best_sel)
    field = avg_snr(act.as_array(), gain_map, params)
    covered = int(np.count_nonzero(_covered(field, threshold) & gain_map.valid))
    return CoverageResult(
        activation=act,
        covered_count=covered,
        coverage_fraction=covered / n_valid,
        snr_field=field,
        threshold=threshold,
        sweeps_used=0,
        method="exact",
    )


def _lp_terms(parts: list[str], per_line: int = 6) -> list[str]:
    lines = []
    for i in range(0, len(parts), per_line):
        lines.append(" ".join(parts[i : i + per_line]))
    return lines


def emit_milp(
    gain_map: GainMap,
    params: ChannelParams,
    threshold: float,
    out: str | IO[str],
) -> None:
    """Write the coverage selection problem as an LP-format MILP file.

    Binary a_<wg>_<tap> pick the taps (exactly one per waveguide), binary
    c_<u>_<v> mark covered cells; each valid cell contributes one linking row
    sum_nm snr_scale*gain * a_n_m - threshold * c_u_v >= 0 (no big-M needed
    since the threshold itself scales the indicator). Names are 1-based.
    Coefficients carry 17 significant digits so parsing the file back
    reproduces them bit-exactly. UTF-8, LF line endings.
    """
    _check_threshold(threshold)
    if isinstance(out, str):
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            emit_milp(gain_map, params, threshold, fh)
        return

    n_wg, n_tap = gain_map.n_waveguides, gain_map.n_taps
    rho = params.snr_scale
    valid_idx = np.argwhere(gain_map.valid)

    w = out.write
    w("\\ tap-activation coverage MILP\n")
    w("Maximize\n")
    cell_vars = [f"c_{u + 1}_{v + 1}" for u, v in valid_idx]
    obj = [cell_vars[0]] + [f"+ {name}" for name in cell_vars[1:]]
    for line in _lp_terms(["covered:"] + obj, per_line=8):
        w(f" {line}\n")
    w("Subject To\n")
    for (u, v), cvar in zip(valid_idx, cell_vars):
        parts = [f"snr_{u + 1}_{v + 1}:"]
        for n in range(n_wg):
            for m in range(n_tap):
                parts.append(f"+ {rho * gain_map.gains[n, m, u, v]:.17g} a_{n + 1}_{m + 1}")
        parts.append(f"- {threshold:.17g} {cvar}")
        parts.append(">= 0")
        for line in _lp_terms(parts, per_line=4):
            w(f" {line}\n")
    for n in range(n_wg):
        parts = [f"pick_{n + 1}:", f"a_{n + 1}_1"]
        parts += [f"+ a_{n + 1}_{m + 1}" for m in range(1, n_tap)]
        parts.append("= 1")
        for line in _lp_terms(parts, per_line=8):
            w(f" {line}\n")
    w("Binaries\n")
    tap_vars = [f"a_{n + 1}_{m + 1}" for n in range(n_wg) for m in range(n_tap)]
    for line in _lp_terms(tap_vars + cell_vars, per_line=10):
        w(f" {line}\n")
    w("End\n")


@dataclass(frozen=True)
class MaxCoverInstance:
    """Abstract maximum-coverage instance: pick `budget` subsets, cover elements.

    Elements are 1-based labels 1..n_elements.
    """

    n_elements: int
    subsets: tuple[frozenset[int], ...]
    budget: int

    def __post_init__(self) -> None:
        if self.n_elements < 1:
            raise ValueError("need at least one element")
        subsets = tuple(frozenset(int(e) for e in s) for s in self.subsets)
        if len(subsets) < 1:
            raise ValueError("need at least one subset")
        for s in subsets:
            if any(not 1 <= e <= self.n_elements for e in s):
                raise ValueError(f"subset elements must lie in [1, {self.n_elements}]")
        if not 1 <= self.budget <= len(subsets):
            raise ValueError("budget must lie in [1, number of subsets]")
        object.__setattr__(self, "subsets", subsets)


def encode_max_cover(
    instance: MaxCoverInstance, threshold: float
) -> tuple[GainMap, ChannelParams]:
    """Encode a max-coverage instance as a gain map with unit SNR scale.

    One synthetic waveguide per budget slot, one tap per subset, one grid
    cell per element; a tap contributes exactly `threshold` to the cells of
    its subset, so a cell is covered iff some chosen subset contains it and
    the optimal covered counts of the two problems coincide.
    """
    _check_threshold(threshold)
    k, j, g = instance.budget, len(instance.subsets), instance.n_elements
    gains = np.zeros((k, j, g, 1))
    for m, s in enumerate(instance.subsets):
        for e in s:
            gains[:, m, e - 1, 0] = threshold
    gain_map = GainMap(
        gains=gains,
        dist_sq=np.ones_like(gains),
        valid=np.ones((g, 1), dtype=bool),
    )
    params = ChannelParams(
        freq_hz=1e9,
        tx_power_w=1.0,
        noise_power_w=1.0,
        cluster_powers=(0.0,),
        n_eff=1.0,
    )
    return gain_map, params
