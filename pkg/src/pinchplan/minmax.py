"""Worst-grid (max-min) activation planning via bisection on the SNR target.

For a target t the total deficit sum_cells max(t - snr, 0) is zero exactly
when every valid cell reaches t, so feasibility of a target reduces to
driving the deficit to zero. A coordinate-descent heuristic does that cheaply
(and soundly: it reports feasible only with a zero-deficit certificate,
never the other way around); bisection over t then brackets the best
achievable worst-grid SNR. Exhaustive variants serve as ground truth on
small instances.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelParams, GainMap, avg_snr
from .coverage import (
    Activation,
    DEFAULT_ENUM_BUDGET,
    DEFAULT_MAX_SWEEPS,
    check_enum_budget,
    _enumerate_fields,
    _selection,
)

DEFAULT_EPS_T = 1e-3  # linear-SNR bracket width at which bisection stops
DEFAULT_FEAS_RESTARTS = 16  # descent starts per feasibility check (first = caller's initial)


@dataclass
class MinMaxResult:
    activation: Activation
    t_star: float  # achieved worst-grid average SNR, recomputed at return
    bisection_iters: int
    feasibility_evals: int
    exact: bool
    snr_field: np.ndarray


def _require_valid(gain_map: GainMap) -> None:
    if not np.any(gain_map.valid):
        raise ValueError("no valid grid cells")


def worst_grid_snr(selected, gain_map: GainMap, params: ChannelParams) -> float:
    """Minimum average SNR over the valid grid cells."""
    _require_valid(gain_map)
    field = avg_snr(selected, gain_map, params)
    return float(field[gain_map.valid].min())


def total_deficit(selected, gain_map: GainMap, params: ChannelParams, target: float) -> float:
    """sum over valid cells of max(target - snr, 0); zero iff target is met."""
    if target < 0:
        raise ValueError("SNR target must be non-negative")
    _require_valid(gain_map)
    field = avg_snr(selected, gain_map, params)
    return float(np.maximum(target - field[gain_map.valid], 0.0).sum())


def _deficit_descent(target: float, gains_v: np.ndarray, sel: list, max_sweeps: int) -> float:
    """Coordinate descent on the total deficit, mutating `sel`; returns the final deficit.

    Each single-waveguide update picks the tap minimizing the updated total
    deficit (ties: smaller worst single-cell deficit, then smallest index),
    so the deficit never increases. Stops on a zero deficit, a sweep with no
    strict deficit decrease, or `max_sweeps` sweeps.
    """
    n_wg, n_tap = gains_v.shape[0], gains_v.shape[1]
    field_v = gains_v[np.arange(n_wg), sel].sum(axis=0)
    deficit = float(np.maximum(target - field_v, 0.0).sum())
    if deficit == 0.0:
        return 0.0

    for _ in range(max_sweeps):
        improved = False
        for n in range(n_wg):
            resid_v = field_v - gains_v[n, sel[n]]
            best = None
            for m in range(n_tap):
                gap = np.maximum(target - (resid_v + gains_v[n, m]), 0.0)
                key = (float(gap.sum()), float(gap.max()))
                if best is None or key < best[1]:
                    best = (m, key)
            m, (new_deficit, _) = best
            sel[n] = m
            field_v = resid_v + gains_v[n, m]
            if new_deficit < deficit:
                improved = True
            deficit = new_deficit
            if deficit == 0.0:
                return 0.0
        if not improved:
            break
    return deficit


def deficit_feasibility(
    target: float,
    gain_map: GainMap,
    params: ChannelParams,
    initial: Activation,
    max_sweeps: int = DEFAULT_MAX_SWEEPS,
    restarts: int = DEFAULT_FEAS_RESTARTS,
    seed: int = 0,
) -> tuple[bool, Activation]:
    """Try to meet `target` everywhere by coordinate descent on the deficit.

    Runs up to `restarts` descents: the first from `initial`, the rest from
    seeded uniform selections. Returns (True, activation) as soon as one
    reaches a zero deficit, which certifies the target outright, so a True
    verdict is always sound no matter how the starts were chosen; otherwise
    (False, activation) with the lowest-deficit end state, which may be
    conservative.
    """
    if target < 0:
        raise ValueError("SNR target must be non-negative")
    if max_sweeps < 1:
        raise ValueError("max_sweeps must be at least 1")
    if restarts < 1:
        raise ValueError("restarts must be at least 1")
    _require_valid(gain_map)
    n_wg, n_tap = gain_map.n_waveguides, gain_map.n_taps
    gains_v = params.snr_scale * gain_map.gains[:, :, gain_map.valid]  # (N, M, V)

    rng = np.random.default_rng(seed)
    best_deficit, best_sel = np.inf, None
    for start in range(restarts):
        if start == 0:
            sel = list(_selection(initial, n_wg, n_tap))
        else:
            sel = [int(m) for m in rng.integers(0, n_tap, n_wg)]
        deficit = _deficit_descent(target, gains_v, sel, max_sweeps)
        if deficit == 0.0:
            return True, Activation(selected=tuple(sel))
        if deficit < best_deficit:
            best_deficit, best_sel = deficit, tuple(sel)
    return False, Activation(selected=best_sel)


def maxmin_upper_bound(gain_map: GainMap, params: ChannelParams) -> float:
    """Upper bound on any activation's worst-grid SNR: each cell takes its best taps."""
    _require_valid(gain_map)
    best_per_wg = gain_map.gains.max(axis=1)  # (N, nx, ny)
    envelope = params.snr_scale * best_per_wg.sum(axis=0)
    return float(envelope[gain_map.valid].min())


def _exact_feasible(
    target: float,
    gain_map: GainMap,
    params: ChannelParams,
    budget: int,
) -> tuple[bool, Activation | None]:
    """Exhaustive feasibility: first activation (lexicographic) meeting target."""
    check_enum_budget(gain_map.n_waveguides, gain_map.n_taps, budget)
    gains_v = params.snr_scale * gain_map.gains[:, :, gain_map.valid]
    for sel, field in _enumerate_fields(gains_v):
        if field.min() >= target:
            return True, Activation(selected=sel)
    return False, None


def bisection_maxmin(
    gain_map: GainMap,
    params: ChannelParams,
    eps_t: float = DEFAULT_EPS_T,
    initial: Activation | None = None,
    max_sweeps: int = DEFAULT_MAX_SWEEPS,
    exact_feasibility: bool = False,
    budget: int = DEFAULT_ENUM_BUDGET,
    restarts: int = DEFAULT_FEAS_RESTARTS,
    seed: int = 0,
) -> MinMaxResult:
    """Bisect the worst-grid SNR target, returning the last certified activation.

    The bracket starts at [0, per-cell best-tap envelope minimum] and halves
    until its width is at most eps_t (linear SNR), so the iteration count is
    bounded by ceil(log2(t_max / eps_t)). Each feasibility check runs
    `restarts` deficit descents, warm-starting from the last feasible
    activation; with exact_feasibility=True it instead enumerates
    exhaustively (budget-guarded) and brackets the true optimum to eps_t.
    """
    if not eps_t > 0:
        raise ValueError("eps_t must be positive")
    _require_valid(gain_map)
    if initial is None:
        initial = Activation.centered(gain_map.n_waveguides, gain_map.n_taps)
    else:
        _selection(initial, gain_map.n_waveguides, gain_map.n_taps)
    if exact_feasibility:
        check_enum_budget(gain_map.n_waveguides, gain_map.n_taps, budget)

    # any activation meets target 0, so the initial selection starts certified
    best = initial
    t_lo, t_hi = 0.0, maxmin_upper_bound(gain_map, params)
    iters = 0
    evals = 0
    while t_hi - t_lo > eps_t:
        t_mid = 0.5 * (t_lo + t_hi)
        if exact_feasibility:
            ok, found = _exact_feasible(t_mid, gain_map, params, budget)
        else:
            ok, found = deficit_feasibility(
                t_mid, gain_map, params, best, max_sweeps, restarts, seed + iters
            )
        iters += 1
        evals += 1
        if ok:
            best = found
            t_lo = t_mid
        else:
            t_hi = t_mid

    return MinMaxResult(
        activation=best,
        t_star=worst_grid_snr(best.as_array(), gain_map, params),
        bisection_iters=iters,
        feasibility_evals=evals,
        exact=False,
        snr_field=avg_snr(best.as_array(), gain_map, params),
    )


def exact_maxmin(
    gain_map: GainMap,
    params: ChannelParams,
    budget: int = DEFAULT_ENUM_BUDGET,
) -> MinMaxResult:
    """Exhaustively maximize the worst-grid SNR (lexicographically smallest argmax)."""
    _require_valid(gain_map)
    total = check_enum_budget(gain_map.n_waveguides, gain_map.n_taps, budget)
    gains_v = params.snr_scale * gain_map.gains[:, :, gain_map.valid]
    best_sel, best_val = None, -np.inf
    for sel, field in _enumerate_fields(gains_v):
        worst = field.min()
        if worst > best_val:
            best_sel, best_val = sel, worst

    act = Activation(selected=best_sel)
    return MinMaxResult(
        activation=act,
        t_star=worst_grid_snr(act.as_array(), gain_map, params),
        bisection_iters=0,
        feasibility_evals=total,
        exact=True,
        snr_field=avg_snr(act.as_array(), gain_map, params),
    )
