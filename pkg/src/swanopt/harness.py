"""Experiment runner: config ingestion, seeded Monte Carlo sweeps, CSV output.

Configs are flat ``key = value`` text files (``#`` starts a comment); every
key has a default matching the standard evaluation setup, unknown keys are
rejected. Powers cross this boundary in dBm and are converted to watts
before any computation.

Paired-seed discipline: realization r draws its users from the stream
(master_seed, r), so every scheme at every sweep point sees the identical
user set for a given r, and runs reproduce byte-identical CSV output.

Resampling policy: when a user projection falls outside the waveguide
extent (possible while sweeping the segment count below region_x / L), the
bound schemes redraw the whole realization from the same stream until all
projections are inside, and the redraw count is recorded in the sidecar
metadata; optimizer schemes keep the original draw, which they handle fine.
"""

import hashlib
import json
import warnings
from dataclasses import dataclass, fields, replace

import numpy as np

from .bound import exact_amplitude_bound, sum_rate_bound
from .geometry import (
    SPEED_OF_LIGHT_M_S,
    SystemParams,
    WaveguideLayout,
    build_centered_layout,
    dbm_to_watts,
    sample_users,
)
from .optimize import GreedyTrace, full_sa_baseline, greedy_hssa_type1, greedy_hssa_type2

TOOL_VERSION = "0.1.0"

SCHEMES = ("bound-exact", "bound-integral", "full-sa-1", "full-sa-2", "hssa-1", "hssa-2")
_BOUND_SCHEMES = frozenset({"bound-exact", "bound-integral"})
_GREEDY_SCHEMES = frozenset({"hssa-1", "hssa-2"})

CSV_HEADER = "sweep_var,sweep_value,scheme,mean_rate_bps_hz,std_rate,n_real,seed"
TRACE_CSV_HEADER = "scheme,level,segment,position,phases,rate,degenerate,best"


@dataclass(frozen=True)
class ExperimentConfig:
    """Resolved experiment settings; defaults follow the standard setup."""

    carrier_freq_hz: float = 28e9
    n_eff: float = 1.4
    kappa_db_per_m: float = 0.0
    min_spacing_wavelengths: float = 0.5
    min_spacing_m: float | None = None
    height_m: float = 3.0
    noise_dbm: float = -90.0
    segment_length_m: float = 1.0
    num_segments: int | None = None
    segment_sweep: tuple[int, ...] | None = None
    num_users: int | None = None
    user_sweep: tuple[int, ...] | None = None
    region_x_m: float = 20.0
    region_y_m: float = 20.0
    tx_power_dbm: float = 10.0
    grid_points: int = 1000
    ao_tol: float = 1e-8
    ao_max_iter: int = 100
    realizations: int = 50
    master_seed: int = 0
    schemes: tuple[str, ...] = SCHEMES
    output: str | None = None

    def __post_init__(self):
        if self.realizations < 1:
            raise ValueError("realizations must be at least 1")
        if self.grid_points < 2:
            raise ValueError("grid_points must be at least 2")
        if not self.schemes:
            raise ValueError("schemes must be nonempty")
        unknown = [s for s in self.schemes if s not in SCHEMES]
        if unknown:
            raise ValueError(f"unknown schemes: {unknown}; valid: {list(SCHEMES)}")
        for name in ("segment_sweep", "user_sweep"):
            sweep = getattr(self, name)
            if sweep is not None:
                if len(sweep) == 0:
                    raise ValueError(f"{name} must be nonempty")
                if any(v < 1 for v in sweep):
                    raise ValueError(f"{name} values must be at least 1")
        if self.min_spacing_m is not None and self.min_spacing_m <= 0:
            raise ValueError("min_spacing_m must be positive")
        if self.min_spacing_wavelengths <= 0:
            raise ValueError("min_spacing_wavelengths must be positive")

    @classmethod
    def from_dict(cls, values: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(values) - known)
        if unknown:
            raise ValueError(f"unknown config keys: {unknown}")
        if "min_spacing_m" in values and "min_spacing_wavelengths" in values:
            raise ValueError("give min_spacing_m or min_spacing_wavelengths, not both")
        return cls(**values)

    @classmethod
    def from_text(cls, text: str) -> "ExperimentConfig":
        return cls.from_dict(_parse_config_text(text))

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        with open(path, "r", encoding="utf-8") as handle:
            return cls.from_text(handle.read())

    def system_params(self) -> SystemParams:
        if self.min_spacing_m is not None:
            spacing = self.min_spacing_m
        else:
            spacing = self.min_spacing_wavelengths * SPEED_OF_LIGHT_M_S / self.carrier_freq_hz
        return SystemParams(
            carrier_freq_hz=self.carrier_freq_hz,
            n_eff=self.n_eff,
            noise_power_w=dbm_to_watts(self.noise_dbm),
            kappa_db_per_m=self.kappa_db_per_m,
            min_spacing_m=spacing,
        )

    def layout_for(self, num_segments: int) -> WaveguideLayout:
        return build_centered_layout(num_segments, self.segment_length_m, self.height_m)

    @property
    def tx_power_w(self) -> float:
        return dbm_to_watts(self.tx_power_dbm)

    def canonical_text(self) -> str:
        lines = []
        for f in fields(self):
            value = getattr(self, f.name)
            if value is None:
                continue
            if isinstance(value, tuple):
                rendered = ",".join(str(v) for v in value)
            elif isinstance(value, float):
                rendered = format(value, ".17g")
            else:
                rendered = str(value)
            lines.append(f"{f.name} = {rendered}")
        return "\n".join(lines) + "\n"

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_text().encode("utf-8")).hexdigest()


_INT_KEYS = {"num_segments", "num_users", "grid_points", "ao_max_iter", "realizations", "master_seed"}
_FLOAT_KEYS = {
    "carrier_freq_hz", "n_eff", "kappa_db_per_m", "min_spacing_wavelengths", "min_spacing_m",
    "height_m", "noise_dbm", "segment_length_m", "region_x_m", "region_y_m", "tx_power_dbm", "ao_tol",
}
_INT_LIST_KEYS = {"segment_sweep", "user_sweep"}
_STR_LIST_KEYS = {"schemes"}
_STR_KEYS = {"output"}


def _parse_config_text(text: str) -> dict:
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected 'key = value', got {raw!r}")
        key, _, rendered = line.partition("=")
        key = key.strip()
        rendered = rendered.strip()
        if key in values:
            raise ValueError(f"config line {lineno}: duplicate key {key!r}")
        if key in _INT_KEYS:
            values[key] = int(rendered)
        elif key in _FLOAT_KEYS:
            values[key] = float(rendered)
        elif key in _INT_LIST_KEYS:
            values[key] = tuple(int(v.strip()) for v in rendered.split(",") if v.strip())
        elif key in _STR_LIST_KEYS:
            values[key] = tuple(v.strip() for v in rendered.split(",") if v.strip())
        elif key in _STR_KEYS:
            values[key] = rendered
        else:
            raise ValueError(f"config line {lineno}: unknown key {key!r}")
    return values


@dataclass(frozen=True)
class SweepRow:
    sweep_var: str
    sweep_value: int
    scheme: str
    mean_rate: float
    std_rate: float
    n_real: int
    seed: int


@dataclass(frozen=True)
class SweepResult:
    sweep_var: str
    rows: tuple[SweepRow, ...]
    resample_counts: dict
    config_hash: str

    def row(self, sweep_value: int, scheme: str) -> SweepRow:
        for r in self.rows:
            if r.sweep_value == sweep_value and r.scheme == scheme:
                return r
        raise KeyError((sweep_value, scheme))

    def means(self, scheme: str) -> np.ndarray:
        return np.array([r.mean_rate for r in self.rows if r.scheme == scheme])


def _fmt(value: float) -> str:
    return format(value, ".17g")


def sweep_csv_text(result: SweepResult) -> str:
    lines = [CSV_HEADER]
    for r in result.rows:
        lines.append(
            f"{r.sweep_var},{r.sweep_value},{r.scheme},{_fmt(r.mean_rate)},{_fmt(r.std_rate)},{r.n_real},{r.seed}"
        )
    return "\n".join(lines) + "\n"


def sidecar_text(result: SweepResult) -> str:
    payload = {
        "tool_version": TOOL_VERSION,
        "config_sha256": result.config_hash,
        "sweep_var": result.sweep_var,
        "resample_counts": {str(k): v for k, v in sorted(result.resample_counts.items())},
    }
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def write_sweep_result(result: SweepResult, path) -> None:
    """Write the CSV (LF endings, 17 significant digits) plus a metadata sidecar."""
    with open(path, "w", encoding="utf-8", newline="") as handle:
        handle.write(sweep_csv_text(result))
    with open(f"{path}.meta.json", "w", encoding="utf-8", newline="") as handle:
        handle.write(sidecar_text(result))


def _draw_realization(config: ExperimentConfig, num_users: int, realization: int, extent=None):
    """Draw the users for one realization; returns (users, bound_users, redraws)."""
    rng = np.random.default_rng([config.master_seed, realization])
    users = sample_users(num_users, config.region_x_m, config.region_y_m, config.tx_power_w, rng)
    if extent is None:
        return users, users, 0
    lo, hi = extent
    bound_users = users
    redraws = 0
    while np.any(bound_users.x < lo) or np.any(bound_users.x > hi):
        bound_users = sample_users(num_users, config.region_x_m, config.region_y_m, config.tx_power_w, rng)
        redraws += 1
    return users, bound_users, redraws


def _scheme_rate(scheme: str, users, layout, params, config: ExperimentConfig) -> float:
    if scheme == "bound-exact":
        return exact_amplitude_bound(users, layout, params)
    if scheme == "bound-integral":
        return sum_rate_bound(users, layout, params)
    if scheme == "hssa-1":
        return greedy_hssa_type1(users, layout, params, config.grid_points).best_rate
    if scheme == "hssa-2":
        return greedy_hssa_type2(users, layout, params, config.grid_points,
                                 tol=config.ao_tol, max_iter=config.ao_max_iter).best_rate
    if scheme == "full-sa-1":
        return full_sa_baseline(users, layout, params, config.grid_points, "type1",
                                tol=config.ao_tol, max_sweeps=config.ao_max_iter)[1]
    if scheme == "full-sa-2":
        return full_sa_baseline(users, layout, params, config.grid_points, "type2",
                                tol=config.ao_tol, max_sweeps=config.ao_max_iter)[1]
    raise ValueError(f"unknown scheme {scheme!r}")


def _run_sweep(config: ExperimentConfig, sweep_var: str, points) -> SweepResult:
    params = config.system_params()
    needs_bound_users = any(s in _BOUND_SCHEMES for s in config.schemes)
    rows = []
    resample_counts = {}
    for value, num_segments, num_users in points:
        layout = config.layout_for(num_segments)
        coverage = layout.extent[1] - layout.extent[0]
        if coverage < config.region_x_m * (1 - 1e-12):
            warnings.warn(
                f"waveguide coverage {coverage:.6g} m is narrower than the "
                f"{config.region_x_m:.6g} m user region; bound schemes resample "
                "out-of-extent realizations",
                RuntimeWarning,
                stacklevel=2,
            )
        rates = {scheme: np.empty(config.realizations) for scheme in config.schemes}
        redrawn = 0
        for r in range(config.realizations):
            extent = layout.extent if needs_bound_users else None
            users, bound_users, redraws = _draw_realization(config, num_users, r, extent)
            redrawn += redraws
            for scheme in config.schemes:
                chosen = bound_users if scheme in _BOUND_SCHEMES else users
                rates[scheme][r] = _scheme_rate(scheme, chosen, layout, params, config)
        resample_counts[value] = redrawn
        for scheme in config.schemes:
            vals = rates[scheme]
            std = float(np.std(vals, ddof=1)) if config.realizations > 1 else 0.0
            rows.append(SweepRow(sweep_var, value, scheme, float(np.mean(vals)), std,
                                 config.realizations, config.master_seed))
    return SweepResult(sweep_var, tuple(rows), resample_counts, config.config_hash())


def run_bound_sweep(config: ExperimentConfig) -> SweepResult:
    """Evaluate the analytical bounds (plus any other requested schemes) over a segment sweep."""
    if not any(s in _BOUND_SCHEMES for s in config.schemes):
        raise ValueError("bound sweep needs bound-exact and/or bound-integral in schemes")
    return run_segment_sweep(config)


def run_segment_sweep(config: ExperimentConfig) -> SweepResult:
    """Evaluate every requested scheme at each segment count of the sweep."""
    if not config.segment_sweep:
        raise ValueError("segment_sweep must be set")
    if config.num_users is None:
        raise ValueError("num_users must be set for a segment sweep")
    points = [(m, m, config.num_users) for m in config.segment_sweep]
    return _run_sweep(config, "M", points)


def run_user_sweep(config: ExperimentConfig) -> SweepResult:
    """Evaluate every requested scheme at each user count, segment count fixed."""
    if not config.user_sweep:
        raise ValueError("user_sweep must be set")
    if config.num_segments is None:
        raise ValueError("num_segments must be set for a user sweep")
    points = [(k, config.num_segments, k) for k in config.user_sweep]
    return _run_sweep(config, "K", points)


def run_single(config: ExperimentConfig) -> dict[str, GreedyTrace]:
    """Run the greedy schemes once (realization 0) and return their full traces."""
    if config.num_segments is None or config.num_users is None:
        raise ValueError("single run needs num_segments and num_users")
    greedy = [s for s in config.schemes if s in _GREEDY_SCHEMES]
    if not greedy:
        raise ValueError("single run needs hssa-1 and/or hssa-2 in schemes")
    params = config.system_params()
    layout = config.layout_for(config.num_segments)
    users, _, _ = _draw_realization(config, config.num_users, 0)
    traces = {}
    for scheme in greedy:
        if scheme == "hssa-1":
            traces[scheme] = greedy_hssa_type1(users, layout, params, config.grid_points)
        else:
            traces[scheme] = greedy_hssa_type2(users, layout, params, config.grid_points,
                                               tol=config.ao_tol, max_iter=config.ao_max_iter)
    return traces


def trace_csv_text(traces: dict[str, GreedyTrace]) -> str:
    """Per-level dump of greedy traces; the best stored level is flagged."""
    lines = [TRACE_CSV_HEADER]
    for scheme in sorted(traces):
        trace = traces[scheme]
        best_level = trace.best_level
        for lvl in trace.levels:
            segment = "" if lvl.segment is None else str(lvl.segment)
            position = "" if lvl.position is None else _fmt(lvl.position)
            phases = ";".join(f"{m}:{_fmt(lvl.placement.phases[m])}" for m in lvl.placement.active)
            lines.append(
                f"{scheme},{lvl.level},{segment},{position},{phases},{_fmt(lvl.rate)},"
                f"{int(lvl.degenerate)},{int(lvl.level == best_level)}"
            )
    return "\n".join(lines) + "\n"


def write_trace_result(traces: dict[str, GreedyTrace], config: ExperimentConfig, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        handle.write(trace_csv_text(traces))
    payload = {
        "tool_version": TOOL_VERSION,
        "config_sha256": config.config_hash(),
        "sweep_var": "single",
        "resample_counts": {},
    }
    with open(f"{path}.meta.json", "w", encoding="utf-8", newline="") as handle:
        handle.write(json.dumps(payload, sort_keys=True, indent=2) + "\n")


def apply_overrides(config: ExperimentConfig, seed=None, realizations=None, output=None) -> ExperimentConfig:
    """CLI-flag overrides on top of a parsed config."""
    updates = {}
    if seed is not None:
        updates["master_seed"] = seed
    if realizations is not None:
        updates["realizations"] = realizations
    if output is not None:
        updates["output"] = output
    return replace(config, **updates) if updates else config
