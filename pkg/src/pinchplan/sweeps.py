"""Figure-style sweeps over the three planning methods, plus run summaries.

Methods: "optimized" (re-solved per operating point), "random" (uniform
activations averaged over seeded draws, mean and sample std reported) and
"fixed" (the centered half-wavelength array). All sweep outputs are pure
functions of (scenario, seed), so reruns are byte-identical.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .channel import avg_snr, db_to_linear, linear_to_db
from .coverage import Activation, CoverageResult, coordinate_ascent, coverage_count, exact_enumerate
from .minmax import MinMaxResult, bisection_maxmin, worst_grid_snr
from .scenario import Scenario, random_activation

N_RANDOM_DRAWS = 20

METHODS = ("optimized", "random", "fixed")


def derived_seeds(base_seed: int, count: int) -> list[int]:
    """Deterministic child seeds for repeated baseline draws."""
    return [int(s) for s in np.random.SeedSequence(base_seed).generate_state(count)]


@dataclass
class RunSummary:
    """What a CLI run did: inputs digest, method, headline numbers, activation.

    `wall_time_s` is kept in memory and reported on the console but excluded
    from the serialized file so identical runs write identical bytes.
    """

    digest: str
    method: str
    objective: dict
    activation: list[int] | None
    seed: int | None
    tool_version: str = __version__
    wall_time_s: float | None = None

    def to_json(self) -> str:
        doc = {
            "activation": self.activation,
            "digest": self.digest,
            "method": self.method,
            "objective": self.objective,
            "seed": self.seed,
            "tool_version": self.tool_version,
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"


@dataclass
class SweepTable:
    """Column-oriented sweep results; `columns` maps name -> list of values."""

    axis: str
    columns: dict[str, list] = field(default_factory=dict)

    def write_csv(self, path) -> None:
        names = [self.axis] + [k for k in self.columns if k != self.axis]
        cols = [self.columns[k] for k in names]
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(",".join(names) + "\n")
            for row in zip(*cols):
                fh.write(",".join(_cell(v) for v in row) + "\n")


def _cell(value) -> str:
    if isinstance(value, float):
        return f"{value:.12g}"
    return str(value)


def _validate_methods(methods) -> tuple[str, ...]:
    chosen = tuple(methods)
    unknown = [m for m in chosen if m not in METHODS]
    if unknown:
        raise ValueError(f"unknown method(s) {unknown}; expected a subset of {METHODS}")
    if not chosen:
        raise ValueError("need at least one method")
    return chosen


def threshold_sweep(
    scenario: Scenario,
    thresholds_db,
    methods=METHODS,
    exact: bool = False,
    n_random: int = N_RANDOM_DRAWS,
    seed: int | None = None,
) -> SweepTable:
    """Coverage fraction of each method at each threshold (dB, ascending).

    The optimized activation is re-solved at every threshold; random draws
    are shared across thresholds (the activations do not depend on the
    threshold), as is the fixed-array field.
    """
    thresholds_db = [float(t) for t in thresholds_db]
    if not thresholds_db:
        raise ValueError("threshold list must not be empty")
    if any(b <= a for a, b in zip(thresholds_db, thresholds_db[1:])):
        raise ValueError("threshold list must be strictly ascending")
    methods = _validate_methods(methods)
    base_seed = scenario.solver.seed if seed is None else seed

    params = scenario.params
    gm = scenario.gain_map()
    n_valid = int(np.count_nonzero(gm.valid))
    if n_valid == 0:
        raise ValueError("no valid grid cells")

    table = SweepTable(axis="threshold_db", columns={"threshold_db": thresholds_db})
    if "optimized" in methods:
        fractions, activations = [], []
        for thr_db in thresholds_db:
            thr = db_to_linear(thr_db)
            if exact:
                res: CoverageResult = exact_enumerate(gm, params, thr)
            else:
                res = coordinate_ascent(
                    Activation.centered(gm.n_waveguides, gm.n_taps),
                    gm,
                    params,
                    thr,
                    max_sweeps=scenario.solver.max_sweeps,
                )
            fractions.append(res.coverage_fraction)
            activations.append(res.activation)
        table.columns["optimized"] = fractions
        table.columns["optimized_activation"] = [
            "|".join(str(i) for i in a.one_based()) for a in activations
        ]
    if "random" in methods:
        draws = [random_activation(scenario, s) for s in derived_seeds(base_seed, n_random)]
        means, stds = [], []
        for thr_db in thresholds_db:
            thr = db_to_linear(thr_db)
            fr = np.array(
                [coverage_count(a.as_array(), gm, params, thr) / n_valid for a in draws]
            )
            means.append(float(fr.mean()))
            stds.append(float(fr.std(ddof=1)) if n_random > 1 else 0.0)
        table.columns["random_mean"] = means
        table.columns["random_std"] = stds
    if "fixed" in methods:
        fgm = scenario.fixed_array_map(params)
        fsel = np.zeros(scenario.layout.count, dtype=int)
        fracs = [
            coverage_count(fsel, fgm, params, db_to_linear(t)) / n_valid for t in thresholds_db
        ]
        table.columns["fixed"] = fracs
    return table


def power_sweep(
    scenario: Scenario,
    powers_dbm,
    methods=METHODS,
    n_random: int = N_RANDOM_DRAWS,
    seed: int | None = None,
    exact: bool = False,
) -> tuple[SweepTable, MinMaxResult | None]:
    """Worst-grid SNR (dB) of each method versus transmit power.

    The optimized activation is solved once at the scenario's own power and
    reused: a power change scales every average SNR by the same factor, so
    the argmax never moves. Worst-grid dB values are recomputed per power.
    """
    powers_dbm = [float(p) for p in powers_dbm]
    if not powers_dbm:
        raise ValueError("power list must not be empty")
    methods = _validate_methods(methods)
    base_seed = scenario.solver.seed if seed is None else seed

    gm = scenario.gain_map()
    params0 = scenario.params
    table = SweepTable(axis="tx_power_dbm", columns={"tx_power_dbm": powers_dbm})

    minmax_res = None
    per_power_params = [scenario.with_power_dbm(p).params for p in powers_dbm]
    if "optimized" in methods:
        if exact:
            from .minmax import exact_maxmin

            minmax_res = exact_maxmin(gm, params0)
        else:
            minmax_res = bisection_maxmin(
                gm,
                params0,
                eps_t=scenario.solver.eps_t,
                initial=Activation.centered(gm.n_waveguides, gm.n_taps),
                max_sweeps=scenario.solver.max_sweeps,
            )
        sel = minmax_res.activation.as_array()
        table.columns["optimized_db"] = [
            linear_to_db(worst_grid_snr(sel, gm, p)) for p in per_power_params
        ]
        table.columns["optimized_activation"] = [
            "|".join(str(i) for i in minmax_res.activation.one_based())
        ] * len(powers_dbm)
    if "random" in methods:
        draws = [random_activation(scenario, s) for s in derived_seeds(base_seed, n_random)]
        means, stds = [], []
        for p in per_power_params:
            worsts_db = np.array(
                [linear_to_db(worst_grid_snr(a.as_array(), gm, p)) for a in draws]
            )
            means.append(float(worsts_db.mean()))
            stds.append(float(worsts_db.std(ddof=1)) if n_random > 1 else 0.0)
        table.columns["random_mean_db"] = means
        table.columns["random_std_db"] = stds
    if "fixed" in methods:
        # element gains carry no transmit power, so one map serves every P
        fgm = scenario.fixed_array_map(params0)
        fsel = np.zeros(scenario.layout.count, dtype=int)
        table.columns["fixed_db"] = [
            linear_to_db(worst_grid_snr(fsel, fgm, p)) for p in per_power_params
        ]
    return table, minmax_res


def baseline_stats(scenario: Scenario, n_random: int = N_RANDOM_DRAWS, seed: int | None = None) -> dict:
    """Fixed-array and random-activation reference numbers at scenario defaults."""
    base_seed = scenario.solver.seed if seed is None else seed
    params = scenario.params
    gm = scenario.gain_map()
    n_valid = int(np.count_nonzero(gm.valid))
    thr = scenario.threshold_linear

    fgm = scenario.fixed_array_map(params)
    fsel = np.zeros(scenario.layout.count, dtype=int)
    fixed_field = avg_snr(fsel, fgm, params)

    draws = [random_activation(scenario, s) for s in derived_seeds(base_seed, n_random)]
    rand_cov = np.array([coverage_count(a.as_array(), gm, params, thr) / n_valid for a in draws])
    rand_worst_db = np.array(
        [linear_to_db(worst_grid_snr(a.as_array(), gm, params)) for a in draws]
    )
    return {
        "threshold_db": scenario.solver.threshold_db,
        "fixed_coverage": coverage_count(fsel, fgm, params, thr) / n_valid,
        "fixed_worst_db": linear_to_db(float(fixed_field[fgm.valid].min())),
        "random_coverage_mean": float(rand_cov.mean()),
        "random_coverage_std": float(rand_cov.std(ddof=1)) if n_random > 1 else 0.0,
        "random_worst_db_mean": float(rand_worst_db.mean()),
        "random_worst_db_std": float(rand_worst_db.std(ddof=1)) if n_random > 1 else 0.0,
        "n_random": n_random,
    }
