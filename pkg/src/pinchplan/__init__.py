"""Blockage-aware average-SNR maps and tap-activation planning for waveguide antennas.

Workflow: describe a deployment in a scenario JSON file, precompute the
per-tap per-grid average-gain tensor (geometry decides line of sight once,
offline), then plan the one-tap-per-waveguide activation either for
threshold coverage or for the worst grid, and export fields/sweeps.
"""

__version__ = "0.1.0"

from .geometry import (
    Blockage,
    CandidateGrid,
    GeometryError,
    GridSpec,
    Region,
    VisibilityMap,
    WaveguideLayout,
    candidate_position,
    compute_visibility,
    segment_blocked,
)
from .channel import (
    C_LIGHT,
    ChannelParams,
    GainMap,
    avg_gain,
    avg_snr,
    db_to_linear,
    dbm_to_watt,
    distance_sq,
    fixed_array_gain_map,
    linear_to_db,
    precompute_gain_map,
    sample_instantaneous_snr,
)
from .coverage import (
    Activation,
    BudgetError,
    CoverageResult,
    MaxCoverInstance,
    best_candidate,
    coordinate_ascent,
    coverage_count,
    emit_milp,
    encode_max_cover,
    exact_enumerate,
    residual_snr,
)
from .minmax import (
    MinMaxResult,
    bisection_maxmin,
    deficit_feasibility,
    exact_maxmin,
    maxmin_upper_bound,
    total_deficit,
    worst_grid_snr,
)
from .scenario import (
    Scenario,
    ScenarioError,
    bundled_scenario_names,
    load_bundled,
    load_scenario,
    random_activation,
    scenario_from_dict,
)
from .mapio import export_map, read_map_csv
from .sweeps import RunSummary, SweepTable, baseline_stats, derived_seeds, power_sweep, threshold_sweep

__all__ = [
    "__version__",
    "Activation",
    "Blockage",
    "BudgetError",
    "C_LIGHT",
    "CandidateGrid",
    "ChannelParams",
    "CoverageResult",
    "GainMap",
    "GeometryError",
    "GridSpec",
    "MaxCoverInstance",
    "MinMaxResult",
    "Region",
    "RunSummary",
    "Scenario",
    "ScenarioError",
    "SweepTable",
    "VisibilityMap",
    "WaveguideLayout",
    "avg_gain",
    "avg_snr",
    "baseline_stats",
    "best_candidate",
    "bisection_maxmin",
    "bundled_scenario_names",
    "candidate_position",
    "compute_visibility",
    "coordinate_ascent",
    "coverage_count",
    "db_to_linear",
    "dbm_to_watt",
    "deficit_feasibility",
    "derived_seeds",
    "distance_sq",
    "emit_milp",
    "encode_max_cover",
    "exact_enumerate",
    "exact_maxmin",
    "export_map",
    "fixed_array_gain_map",
    "linear_to_db",
    "load_bundled",
    "load_scenario",
    "maxmin_upper_bound",
    "power_sweep",
    "precompute_gain_map",
    "random_activation",
    "read_map_csv",
    "residual_snr",
    "sample_instantaneous_snr",
    "scenario_from_dict",
    "segment_blocked",
    "threshold_sweep",
    "total_deficit",
    "worst_grid_snr",
]
