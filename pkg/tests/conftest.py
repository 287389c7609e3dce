"""Shared builders and independent oracles for the test suite."""

from __future__ import annotations

from itertools import combinations, product

import numpy as np

from pinchplan import Activation, avg_snr, scenario_from_dict


def scenario_dict(
    *,
    x_len=80.0,
    y_len=30.0,
    height=10.0,
    waveguides=2,
    taps=3,
    blockages=None,
    nx=8,
    ny=6,
    freq_hz=28.0e9,
    tx_power_dbm=40.0,
    noise_dbm=-70.0,
    nlos_db=-60.0,
    seed=0,
):
    cfg = {
        "version": 1,
        "region": {"x_len": x_len, "y_len": y_len, "height": height},
        "waveguides": waveguides,
        "taps": {"count": taps},
        "grid": {"nx": nx, "ny": ny},
        "channel": {
            "freq_hz": freq_hz,
            "tx_power_dbm": tx_power_dbm,
            "noise_dbm": noise_dbm,
            "nlos_db": nlos_db,
        },
        "solver": {"seed": seed},
    }
    if blockages is not None:
        cfg["blockages"] = blockages
    return cfg


def random_blockage(rng, x_len, y_len, max_height):
    # stay a margin inside the region so rounded bounds always validate
    x0 = rng.uniform(0.001, 0.75 * x_len)
    w = rng.uniform(0.05, 0.25) * x_len
    y0 = rng.uniform(-0.5 * y_len + 0.001, 0.25 * y_len)
    d = rng.uniform(0.1, 0.35) * y_len
    return {
        "x_min": round(x0, 6),
        "x_max": round(min(x0 + w, x_len - 0.001), 6),
        "y_min": round(y0, 6),
        "y_max": round(min(y0 + d, 0.5 * y_len - 0.001), 6),
        "height": round(rng.uniform(0.3, 0.9) * max_height, 6),
    }


def random_scenario(rng, *, waveguides=None, taps=None, nx=None, ny=None, k_max=2):
    """Small randomized scenario; redraws until at least one grid cell is valid."""
    while True:
        x_len = round(rng.uniform(40.0, 120.0), 6)
        y_len = round(rng.uniform(20.0, 60.0), 6)
        n = waveguides if waveguides is not None else int(rng.integers(2, 4))
        cfg = scenario_dict(
            x_len=x_len,
            y_len=y_len,
            waveguides=n,
            taps=taps if taps is not None else int(rng.integers(2, 4)),
            nx=nx if nx is not None else int(rng.integers(4, 11)),
            ny=ny if ny is not None else int(rng.integers(3, 11)),
            freq_hz=float(rng.uniform(6.0, 30.0)) * 1e9,
            tx_power_dbm=float(rng.uniform(25.0, 40.0)),
            noise_dbm=float(rng.uniform(-90.0, -60.0)),
            nlos_db=float(rng.uniform(-70.0, -50.0)),
            blockages=[
                random_blockage(rng, x_len, y_len, 10.0)
                for _ in range(int(rng.integers(0, k_max + 1)))
            ],
        )
        scn = scenario_from_dict(cfg)
        if np.count_nonzero(scn.visibility().valid) > 0:
            return scn


def segment_box_distance(start, end, lo, hi, iters=200):
    """Min distance from segment to box, by ternary search on a convex profile.

    Independent of the production slab test: relies only on the fact that the
    distance from a moving point to a convex set is convex along the line.
    """
    start = np.asarray(start, dtype=float)
    end = np.asarray(end, dtype=float)
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)

    def dist(t):
        p = start + t * (end - start)
        gap = np.maximum(np.maximum(lo - p, p - hi), 0.0)
        return float(np.sqrt((gap * gap).sum()))

    a, b = 0.0, 1.0
    for _ in range(iters):
        m1 = a + (b - a) / 3.0
        m2 = b - (b - a) / 3.0
        if dist(m1) <= dist(m2):
            b = m2
        else:
            a = m1
    return dist(0.5 * (a + b))


def brute_max_cover(universe_size, subsets, budget):
    """Exhaustive Maximum-Coverage optimum over all budget-sized picks."""
    best = 0
    for pick in combinations(range(len(subsets)), budget):
        union = set()
        for j in pick:
            union |= subsets[j]
        best = max(best, len(union))
    return best


def all_activation_fields(gain_map, params):
    """Yield (selection tuple, snr field) for every one-hot activation.

    Recomputes each field from scratch through avg_snr, so it cross-checks
    the incremental sums used by the production enumerators.
    """
    n, m = gain_map.n_waveguides, gain_map.n_taps
    for sel in product(range(m), repeat=n):
        yield sel, avg_snr(np.array(sel), gain_map, params)


def brute_best_coverage(gain_map, params, threshold):
    """(best count, lexicographically smallest argmax selection)."""
    valid = gain_map.valid
    slack = threshold * (1.0 - 1e-12)
    best_count, best_sel = -1, None
    for sel, field in all_activation_fields(gain_map, params):
        count = int(np.count_nonzero((field >= slack) & valid))
        if count > best_count:
            best_count, best_sel = count, sel
    return best_count, Activation(best_sel)


def brute_best_worst(gain_map, params):
    """(best worst-grid SNR, lexicographically smallest argmax selection)."""
    valid = gain_map.valid
    best_val, best_sel = -np.inf, None
    for sel, field in all_activation_fields(gain_map, params):
        worst = float(field[valid].min())
        if worst > best_val:
            best_val, best_sel = worst, sel
    return best_val, Activation(best_sel)


def envelope_quantile(gain_map, params, q):
    """Quantile of the per-cell best-achievable SNR over valid cells."""
    env = params.snr_scale * gain_map.gains.max(axis=1).sum(axis=0)
    return float(np.quantile(env[gain_map.valid], q))
