"""Scenario files: one JSON document describing a deployment end to end.

Schema (version 1; dB quantities are converted to linear once, at load):

    {
      "version": 1,
      "region":     {"x_len": 200.0, "y_len": 60.0, "height": 10.0},
      "waveguides": 4,
      "taps":       {"count": 10},            // or {"x": [[...], ...]} per waveguide
      "blockages":  [{"x_min": 10.0, "x_max": 18.0,
                      "y_min": 0.0, "y_max": 20.0, "height": 6.0}, ...],
      "grid":       {"nx": 400, "ny": 120},
      "channel":    {"freq_hz": 28.0e9, "tx_power_dbm": 40.0, "noise_dbm": -70.0,
                     "nlos_db": -60.0, "n_clusters": 4, "n_eff": 1.4},
      "solver":     {"threshold_db": 18.0, "eps_t": 1.0e-3, "max_sweeps": 50, "seed": 0}
    }

Optional keys and their defaults: "blockages" ([]), "channel.n_clusters" (4),
"channel.n_eff" (1.4), "solver" and each of its fields (values above). Every
applied default is recorded on the loaded scenario. Unknown keys are
rejected. Saving writes the normalized form (explicit tap coordinates), and
load -> save -> load reproduces every value exactly.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path

import numpy as np

from .channel import ChannelParams, GainMap, db_to_linear, fixed_array_gain_map, precompute_gain_map
from .coverage import Activation
from .geometry import (
    Blockage,
    CandidateGrid,
    GeometryError,
    GridSpec,
    Region,
    VisibilityMap,
    WaveguideLayout,
    compute_visibility,
)

SCHEMA_VERSION = 1

_SOLVER_DEFAULTS = {"threshold_db": 18.0, "eps_t": 1e-3, "max_sweeps": 50, "seed": 0}


class ScenarioError(ValueError):
    """A scenario file cannot be parsed or violates a constraint."""


@dataclass(frozen=True)
class ChannelSpec:
    """Raw channel inputs as given in the file (dB units preserved for IO)."""

    freq_hz: float
    tx_power_dbm: float
    noise_dbm: float
    nlos_db: float
    n_clusters: int = 4
    n_eff: float = 1.4

    def to_params(self) -> ChannelParams:
        return ChannelParams.from_db(
            freq_hz=self.freq_hz,
            tx_power_dbm=self.tx_power_dbm,
            noise_dbm=self.noise_dbm,
            nlos_db=self.nlos_db,
            n_clusters=self.n_clusters,
            n_eff=self.n_eff,
        )


@dataclass(frozen=True)
class SolverDefaults:
    threshold_db: float = 18.0
    eps_t: float = 1e-3
    max_sweeps: int = 50
    seed: int = 0


@dataclass(frozen=True)
class Scenario:
    region: Region
    layout: WaveguideLayout
    taps: CandidateGrid
    blockages: tuple[Blockage, ...]
    grid: GridSpec
    channel: ChannelSpec
    solver: SolverDefaults
    applied_defaults: tuple[str, ...] = ()

    @property
    def params(self) -> ChannelParams:
        return self.channel.to_params()

    @property
    def threshold_linear(self) -> float:
        return db_to_linear(self.solver.threshold_db)

    def visibility(self) -> VisibilityMap:
        return compute_visibility(self.layout, self.taps, self.blockages, self.grid)

    def gain_map(self, vis: VisibilityMap | None = None) -> GainMap:
        if vis is None:
            vis = self.visibility()
        return precompute_gain_map(self.layout, self.taps, self.grid, vis, self.params)

    def fixed_array_map(self, params: ChannelParams | None = None) -> GainMap:
        return fixed_array_gain_map(
            self.region, self.blockages, self.grid, params or self.params, self.layout.count
        )

    def with_grid_scale(self, factor: float) -> "Scenario":
        """Same deployment on a grid rescaled by `factor` per axis (at least 1x1)."""
        if not factor > 0:
            raise ScenarioError("grid scale factor must be positive")
        nx = max(1, round(self.grid.nx * factor))
        ny = max(1, round(self.grid.ny * factor))
        return replace(self, grid=GridSpec.from_region(self.region, nx, ny))

    def with_power_dbm(self, tx_power_dbm: float) -> "Scenario":
        return replace(self, channel=replace(self.channel, tx_power_dbm=tx_power_dbm))

    def with_nlos_db(self, nlos_db: float) -> "Scenario":
        return replace(self, channel=replace(self.channel, nlos_db=nlos_db))

    def to_dict(self) -> dict:
        """Normalized JSON-ready form (explicit tap coordinates)."""
        return {
            "version": SCHEMA_VERSION,
            "region": {
                "x_len": self.region.x_len,
                "y_len": self.region.y_len,
                "height": self.region.height,
            },
            "waveguides": self.layout.count,
            "taps": {"x": [[float(x) for x in row] for row in self.taps.x_taps]},
            "blockages": [
                {
                    "x_min": b.x_min,
                    "x_max": b.x_max,
                    "y_min": b.y_min,
                    "y_max": b.y_max,
                    "height": b.height,
                }
                for b in self.blockages
            ],
            "grid": {"nx": self.grid.nx, "ny": self.grid.ny},
            "channel": {
                "freq_hz": self.channel.freq_hz,
                "tx_power_dbm": self.channel.tx_power_dbm,
                "noise_dbm": self.channel.noise_dbm,
                "nlos_db": self.channel.nlos_db,
                "n_clusters": self.channel.n_clusters,
                "n_eff": self.channel.n_eff,
            },
            "solver": {
                "threshold_db": self.solver.threshold_db,
                "eps_t": self.solver.eps_t,
                "max_sweeps": self.solver.max_sweeps,
                "seed": self.solver.seed,
            },
        }

    def digest(self) -> str:
        """Content hash of the normalized scenario; independent of file key order."""
        canon = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode("utf-8")).hexdigest()

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def _check_keys(section: dict, path: str, required: set[str], optional: set[str] = frozenset()):
    unknown = set(section) - required - optional
    if unknown:
        raise ScenarioError(f"unknown key(s) in {path}: {', '.join(sorted(unknown))}")
    missing = required - set(section)
    if missing:
        raise ScenarioError(f"missing key(s) in {path}: {', '.join(sorted(missing))}")


def _number(section: dict, key: str, path: str) -> float:
    val = section[key]
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ScenarioError(f"{path}.{key} must be a number")
    return float(val)


def _integer(section: dict, key: str, path: str) -> int:
    val = section[key]
    if isinstance(val, bool) or not isinstance(val, int):
        raise ScenarioError(f"{path}.{key} must be an integer")
    return val


def scenario_from_dict(doc: dict) -> Scenario:
    if not isinstance(doc, dict):
        raise ScenarioError("scenario document must be a JSON object")
    _check_keys(
        doc,
        "scenario",
        required={"version", "region", "waveguides", "taps", "grid", "channel"},
        optional={"blockages", "solver"},
    )
    if doc["version"] != SCHEMA_VERSION:
        raise ScenarioError(f"unsupported scenario version {doc['version']!r} (expected {SCHEMA_VERSION})")
    applied: list[str] = []

    reg = doc["region"]
    _check_keys(reg, "region", {"x_len", "y_len", "height"})
    try:
        region = Region(
            x_len=_number(reg, "x_len", "region"),
            y_len=_number(reg, "y_len", "region"),
            height=_number(reg, "height", "region"),
        )
    except GeometryError as exc:
        raise ScenarioError(str(exc)) from exc

    n_wg = _integer(doc, "waveguides", "scenario")
    if n_wg < 2:
        raise ScenarioError("waveguides must be at least 2")
    layout = WaveguideLayout.uniform(region, n_wg)

    taps_doc = doc["taps"]
    if not isinstance(taps_doc, dict):
        raise ScenarioError("taps must be an object with 'count' or 'x'")
    if set(taps_doc) == {"count"}:
        count = _integer(taps_doc, "count", "taps")
        if count < 1:
            raise ScenarioError("taps.count must be at least 1")
        taps = CandidateGrid.uniform(region, n_wg, count)
    elif set(taps_doc) == {"x"}:
        rows = taps_doc["x"]
        if not isinstance(rows, list) or len(rows) != n_wg:
            raise ScenarioError(f"taps.x must list tap coordinates for each of the {n_wg} waveguides")
        try:
            taps = CandidateGrid(x_taps=np.asarray(rows, dtype=float))
        except (GeometryError, ValueError) as exc:
            raise ScenarioError(f"taps.x invalid: {exc}") from exc
        if np.any(taps.x_taps < 0) or np.any(taps.x_taps > region.x_len):
            raise ScenarioError("tap x coordinates must lie within [0, region.x_len]")
    else:
        raise ScenarioError("taps must contain exactly one of 'count' or 'x'")

    blockages: list[Blockage] = []
    if "blockages" in doc:
        blk_docs = doc["blockages"]
        if not isinstance(blk_docs, list):
            raise ScenarioError("blockages must be a list")
        for i, b in enumerate(blk_docs):
            path = f"blockages[{i}]"
            _check_keys(b, path, {"x_min", "x_max", "y_min", "y_max", "height"})
            try:
                blk = Blockage(
                    x_min=_number(b, "x_min", path),
                    x_max=_number(b, "x_max", path),
                    y_min=_number(b, "y_min", path),
                    y_max=_number(b, "y_max", path),
                    height=_number(b, "height", path),
                )
            except GeometryError as exc:
                raise ScenarioError(f"{path}: {exc}") from exc
            half = region.y_len / 2.0
            if blk.y_min < -half or blk.y_max > half:
                raise ScenarioError(f"{path}: y extent must lie within [-{half}, {half}]")
            if not blk.height < region.height:
                raise ScenarioError(f"{path}: height must be strictly below the waveguide height")
            blockages.append(blk)
    else:
        applied.append("blockages")

    grid_doc = doc["grid"]
    _check_keys(grid_doc, "grid", {"nx", "ny"})
    nx = _integer(grid_doc, "nx", "grid")
    ny = _integer(grid_doc, "ny", "grid")
    try:
        grid = GridSpec.from_region(region, nx, ny)
    except GeometryError as exc:
        raise ScenarioError(str(exc)) from exc

    ch = doc["channel"]
    _check_keys(
        ch,
        "channel",
        required={"freq_hz", "tx_power_dbm", "noise_dbm", "nlos_db"},
        optional={"n_clusters", "n_eff"},
    )
    if "n_clusters" in ch:
        n_clusters = _integer(ch, "n_clusters", "channel")
        if n_clusters < 1:
            raise ScenarioError("channel.n_clusters must be at least 1")
    else:
        n_clusters = 4
        applied.append("channel.n_clusters")
    if "n_eff" in ch:
        n_eff = _number(ch, "n_eff", "channel")
        if n_eff < 1.0:
            raise ScenarioError("channel.n_eff must be at least 1")
    else:
        n_eff = 1.4
        applied.append("channel.n_eff")
    channel = ChannelSpec(
        freq_hz=_number(ch, "freq_hz", "channel"),
        tx_power_dbm=_number(ch, "tx_power_dbm", "channel"),
        noise_dbm=_number(ch, "noise_dbm", "channel"),
        nlos_db=_number(ch, "nlos_db", "channel"),
        n_clusters=n_clusters,
        n_eff=n_eff,
    )
    if channel.freq_hz <= 0:
        raise ScenarioError("channel.freq_hz must be positive")

    solver_doc = doc.get("solver", {})
    if not isinstance(solver_doc, dict):
        raise ScenarioError("solver must be an object")
    _check_keys(solver_doc, "solver", set(), set(_SOLVER_DEFAULTS))
    solver_vals = {}
    for key, default in _SOLVER_DEFAULTS.items():
        if key in solver_doc:
            if key in ("max_sweeps", "seed"):
                solver_vals[key] = _integer(solver_doc, key, "solver")
            else:
                solver_vals[key] = _number(solver_doc, key, "solver")
        else:
            solver_vals[key] = default
            applied.append(f"solver.{key}")
    solver = SolverDefaults(**solver_vals)
    if not solver.eps_t > 0:
        raise ScenarioError("solver.eps_t must be positive")
    if solver.max_sweeps < 1:
        raise ScenarioError("solver.max_sweeps must be at least 1")
    if solver.seed < 0:
        raise ScenarioError("solver.seed must be non-negative")

    return Scenario(
        region=region,
        layout=layout,
        taps=taps,
        blockages=tuple(blockages),
        grid=grid,
        channel=channel,
        solver=solver,
        applied_defaults=tuple(applied),
    )


def load_scenario(path: str | Path) -> Scenario:
    """Load and validate a scenario file; errors carry line/column for bad JSON."""
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(
            f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}"
        ) from exc
    return scenario_from_dict(doc)


def bundled_scenario_names() -> list[str]:
    data = resources.files("pinchplan").joinpath("data")
    return sorted(p.name[: -len(".json")] for p in data.iterdir() if p.name.endswith(".json"))


def load_bundled(name: str = "table1") -> Scenario:
    """Load a scenario shipped with the package (see bundled_scenario_names())."""
    res = resources.files("pinchplan").joinpath(f"data/{name}.json")
    try:
        text = res.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ScenarioError(
            f"no bundled scenario named {name!r}; available: {', '.join(bundled_scenario_names())}"
        ) from None
    return scenario_from_dict(json.loads(text))


def random_activation(scenario: Scenario, seed: int) -> Activation:
    """Uniform independent tap draw per waveguide; same seed, same activation."""
    rng = np.random.default_rng(seed)
    sel = rng.integers(0, scenario.taps.count, size=scenario.layout.count)
    return Activation(selected=tuple(int(m) for m in sel))
