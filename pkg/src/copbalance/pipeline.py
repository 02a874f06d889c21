"""End-to-end orchestration: record text in, identified mapping, deviation
series, zone occupancy, simulation and tuning results out.

This layer is what the service endpoints (and through them the CLI) call;
it knows nothing about HTTP or files except for rendering CSV/JSON-ready
structures.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import control, ingest, phase, plant, zones
from .errors import ConfigError, TooFewSamples


@dataclass(frozen=True)
class AnalyzeOptions:
    cop_source: str = "auto"
    filter_cutoff_hz: float | None = ingest.DEFAULT_CUTOFF_HZ
    filter_order: int = ingest.DEFAULT_FILTER_ORDER
    min_load_n: float = ingest.DEFAULT_MIN_LOAD_N
    distance_metric: str = "curve"  # curve | points
    bounds: zones.ZoneBounds = field(default_factory=zones.ZoneBounds)

    def __post_init__(self):
        if self.distance_metric not in ("curve", "points"):
            raise ConfigError(
                f"distance metric must be 'curve' or 'points', "
                f"got {self.distance_metric!r}"
            )
        if self.cop_source not in ("auto", "recorded", "wrench"):
            raise ConfigError(f"unknown COP source {self.cop_source!r}")


@dataclass(frozen=True)
class AnalysisResult:
    trial: ingest.Trial
    trajectory: phase.PhaseTrajectory
    poincare: phase.PoincareSet
    conic: phase.ConicMap
    distances: np.ndarray
    foot_frame: np.ndarray
    occupancy: dict[zones.ZoneLabel, float]
    options: AnalyzeOptions

    def occupancy_by_short(self) -> dict[str, float]:
        return {label.short: frac for label, frac in self.occupancy.items()}

    def trajectory_csv(self) -> str:
        lines = ["t,copx,copy"]
        dt = self.trajectory.dt
        for i, (x, y) in enumerate(self.trajectory.points):
            lines.append(f"{float(i * dt)!r},{float(x)!r},{float(y)!r}")
        return "\n".join(lines) + "\n"

    def distances_csv(self) -> str:
        lines = ["t,d"]
        dt = self.trajectory.dt
        for i, d in enumerate(self.distances):
            lines.append(f"{float(i * dt)!r},{float(d)!r}")
        return "\n".join(lines) + "\n"

    def occupancy_csv(self) -> str:
        lines = ["zone,fraction"]
        for label, frac in self.occupancy.items():
            lines.append(f"{label.short},{float(frac)!r}")
        return "\n".join(lines) + "\n"

    def summary_text(self) -> str:
        t = self.trial
        occ = self.occupancy_by_short()
        a, b, c, d, e, f = self.conic.coeffs
        lines = [
            f"trial {t.id}: {len(t.samples)} samples at {t.sample_rate:g} Hz "
            f"({t.duration:g} s)",
            f"mapping ({self.conic.kind}): {a:+.4f} x^2 {b:+.4f} xy "
            f"{c:+.4f} y^2 {d:+.4f} x {e:+.4f} y {f:+.4f} = 0",
            f"deviation ({self.options.distance_metric}): mean "
            f"{float(np.mean(self.distances)):.4f} cm, max "
            f"{float(np.max(self.distances)):.4f} cm",
            "occupancy: " + "  ".join(f"{k}={occ[k]:.4f}" for k in
                                      ("HP", "LP", "UD", "US")),
        ]
        return "\n".join(lines)


def analyze_record(text: str | bytes, options: AnalyzeOptions | None = None,
                   sidecar_text: str | None = None) -> AnalysisResult:
    """Full identification pass over one record: parse, filter, build the
    phase trajectory, extract the five characteristic points, fit the
    conic, measure per-sample deviations, and classify zone occupancy."""
    options = options or AnalyzeOptions()
    trial = ingest.parse_trial(text)
    if sidecar_text is not None:
        trial = ingest.with_sidecar(
            trial, ingest.parse_metadata_sidecar(sidecar_text))
    cop = ingest.filtered_cop(
        trial, source=options.cop_source, cutoff=options.filter_cutoff_hz,
        order=options.filter_order, min_load=options.min_load_n,
    )
    if len(cop) < 2:
        raise TooFewSamples(
            f"trial {trial.id!r} has {len(cop)} usable COP samples"
        )
    trajectory = phase.trajectory_from_cop(cop, trial.sample_rate)
    poincare = phase.extract_poincare_points(trajectory)
    conic = phase.fit_conic(poincare)
    distances = phase.distance_series(
        trajectory.points, conic, metric=options.distance_metric,
        poincare=poincare,
    )
    foot_frame = zones.to_foot_frame(trajectory, options.bounds)
    occupancy = zones.occupancy(foot_frame, options.bounds)
    return AnalysisResult(
        trial=trial, trajectory=trajectory, poincare=poincare, conic=conic,
        distances=distances, foot_frame=foot_frame, occupancy=occupancy,
        options=options,
    )


@dataclass(frozen=True)
class SimulateOptions:
    duration_s: float = 30.0
    seed: int = 7
    pulses: tuple[plant.DisturbancePulse, ...] = (
        plant.DisturbancePulse(5.0, 0.2, 15.0),
    )
    params: plant.PlantParams = field(default_factory=plant.PlantParams)
    gains: control.PidGains = control.PAPER_GAINS
    fuzzy: control.FuzzyConfig = field(
        default_factory=control.default_fuzzy_config)
    u_max: float = control.DEFAULT_U_MAX
    windup_limit: float = control.DEFAULT_WINDUP_LIMIT
    interior_is_safe: bool = True
    control_enabled: bool = True
    conic: phase.ConicMap = field(default_factory=plant.default_reference_map)
    bounds: zones.ZoneBounds = field(default_factory=zones.ZoneBounds)

    def __post_init__(self):
        if self.duration_s <= 0:
            raise ConfigError("sim duration must be positive")
        for p in self.pulses:
            if p.duration <= 0:
                raise ConfigError("pulse duration must be positive")
            if p.t_start < 0 or p.t_end > self.duration_s:
                raise ConfigError("pulses must lie within the run")


def simulate(options: SimulateOptions | None = None) -> plant.SimTrace:
    options = options or SimulateOptions()
    return plant.run_closed_loop(
        options.params, options.conic, options.fuzzy, options.gains,
        disturbance_profile=options.pulses, duration=options.duration_s,
        seed=options.seed, control_enabled=options.control_enabled,
        u_max=options.u_max, windup_limit=options.windup_limit,
        interior_is_safe=options.interior_is_safe, bounds=options.bounds,
    )


@dataclass(frozen=True)
class TuneOptions:
    plant_name: str = "third-order"  # third-order | first-order
    kp_min: float = 0.5
    kp_max: float = 20.0
    horizon_s: float = 60.0
    dt_s: float = 1e-3
    preset: str | None = None  # "paper" skips the tuner

    def __post_init__(self):
        if self.plant_name not in ("third-order", "first-order"):
            raise ConfigError(f"unknown tuning plant {self.plant_name!r}")
        if self.preset not in (None, "paper"):
            raise ConfigError(f"unknown gain preset {self.preset!r}")
        if not 0 < self.kp_min < self.kp_max:
            raise ConfigError("need 0 < kp_min < kp_max")
        if self.horizon_s <= 0 or self.dt_s <= 0:
            raise ConfigError("horizon and dt must be positive")


def tune(options: TuneOptions | None = None) -> dict:
    """Gains dict with provenance: either the shipped preset or an
    ultimate-cycle tuning run against a benchmark loop."""
    options = options or TuneOptions()
    if options.preset == "paper":
        g = control.PAPER_GAINS
        return {"kp": g.kp, "ki": g.ki, "kd": g.kd,
                "ultimate_gain": None, "ultimate_period_s": None,
                "source": "preset:paper"}
    if options.plant_name == "third-order":
        loop = control.third_order_benchmark(options.horizon_s, options.dt_s)
    else:
        loop = control.first_order_benchmark(options.horizon_s, options.dt_s)
    zn = control.tune_ziegler_nichols(
        loop, kp_range=(options.kp_min, options.kp_max),
        sim_horizon=options.horizon_s, dt=options.dt_s,
    )
    return {"kp": zn.gains.kp, "ki": zn.gains.ki, "kd": zn.gains.kd,
            "ultimate_gain": zn.ultimate_gain,
            "ultimate_period_s": zn.ultimate_period,
            "source": f"ziegler-nichols:{options.plant_name}"}


def compose_report(analysis: dict | None = None, simulation: dict | None = None,
                   tuning: dict | None = None) -> str:
    """Readable consolidation of previously produced summaries."""
    sections = []
    if analysis:
        occ = analysis.get("occupancy", {})
        lines = ["== analysis =="]
        if "trial_id" in analysis:
            lines.append(f"trial: {analysis['trial_id']} "
                         f"({analysis.get('samples', '?')} samples at "
                         f"{analysis.get('sample_rate_hz', '?')} Hz)")
        if occ:
            lines.append("occupancy: " + "  ".join(
                f"{k}={float(v):.4f}" for k, v in occ.items()))
        if "d_mean_cm" in analysis:
            lines.append(f"deviation: mean {analysis['d_mean_cm']:.4f} cm, "
                         f"max {analysis['d_max_cm']:.4f} cm")
        sections.append("\n".join(lines))
    if simulation:
        lines = ["== simulation =="]
        lines.append(f"episodes: {simulation.get('episode_count')}"
                     f" (first activation at {simulation.get('first_activation_s')} s)")
        lines.append(f"active fraction: {simulation.get('active_fraction')}")
        rec = simulation.get("recovery_times_s")
        if rec is not None:
            lines.append(f"recovery times: {rec}")
        if simulation.get("fell"):
            lines.append(f"FELL at t={simulation.get('fall_time_s')} s")
        else:
            lines.append("no fall")
        sections.append("\n".join(lines))
    if tuning:
        lines = ["== tuning =="]
        lines.append(f"gains: kp={tuning.get('kp')} ki={tuning.get('ki')} "
                     f"kd={tuning.get('kd')}")
        if tuning.get("ultimate_gain") is not None:
            lines.append(f"ultimate gain {tuning['ultimate_gain']:.4f}, "
                         f"period {tuning['ultimate_period_s']:.4f} s")
        lines.append(f"source: {tuning.get('source')}")
        sections.append("\n".join(lines))
    if not sections:
        return "nothing to report\n"
    return "\n\n".join(sections) + "\n"
