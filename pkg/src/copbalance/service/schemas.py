"""Pydantic request/response models for the analysis service."""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, Field


class ZoneBoundsModel(BaseModel):
    foot_length_cm: float = 20.0
    center_frac: float = 0.47
    d1_hp: float = 0.16
    d2_hp: float = 0.07
    d1_lp: float = 0.57
    d2_lp: float = 0.43
    d1_ud: float = 0.97
    d2_ud: float = 0.59


class GainsModel(BaseModel):
    kp: float = 0.87
    ki: float = 1.0
    kd: float = 0.93


class AnalyzeRequest(BaseModel):
    record_text: str
    sidecar_text: Optional[str] = None
    cop_source: Literal["auto", "recorded", "wrench"] = "auto"
    filter_cutoff_hz: Optional[float] = 10.0
    filter_order: int = 4
    min_load_n: float = 10.0
    distance_metric: Literal["curve", "points"] = "curve"
    zones: ZoneBoundsModel = Field(default_factory=ZoneBoundsModel)
    include_series: bool = True

    model_config = {
        "json_schema_extra": {
            "examples": [{
                "record_text": "# id: SYN10BDS\n0.00 0.0 0.0 700.0 "
                               "0.0 0.0 0.0 0.1 -0.2\n...",
                "filter_cutoff_hz": None,
            }]
        }
    }


class ConicModel(BaseModel):
    a: float
    b: float
    c: float
    d: float
    e: float
    f: float
    kind: str
    normalization: str


class PoincareModel(BaseModel):
    p_xmax: list[float]
    p_ymax: list[float]
    p_xmin: list[float]
    p_ymin: list[float]
    p_origin: list[float]


class AnalyzeResponse(BaseModel):
    trial_id: str
    sample_rate_hz: float
    samples: int
    duration_s: float
    poincare: PoincareModel
    conic: ConicModel
    occupancy: dict[str, float]
    d_mean_cm: float
    d_max_cm: float
    summary: str
    trajectory_csv: Optional[str] = None
    distances_csv: Optional[str] = None
    occupancy_csv: Optional[str] = None


class PulseModel(BaseModel):
    t_start_s: float
    duration_s: float = Field(gt=0)
    torque_nm: float


class PlantModel(BaseModel):
    mass_kg: float = 70.0
    com_height_m: float = 1.0
    inertia: Optional[float] = None
    damping: float = 2.5
    torque_per_intensity: float = 60.0
    gravity: float = 9.81
    dt_s: float = 0.01
    cop_y_amplitude_cm: float = 0.0
    cop_y_freq_hz: float = 0.3
    noise_std_cm: float = 0.0


class MapModel(BaseModel):
    """Reference mapping: a centered ellipse or explicit conic coefficients."""

    kind: Literal["ellipse", "conic"] = "ellipse"
    semi_x_cm: float = 0.5
    semi_y_cm: float = 0.25
    center: tuple[float, float] = (0.0, 0.0)
    angle_rad: float = 0.0
    coefficients: Optional[list[float]] = None


class FuzzyModel(BaseModel):
    """Trapezoid vertices for the standard two-rule gate plus its
    activation threshold."""

    small: list[float] = [0.0, 0.0, 0.04, 0.06]
    big: list[float] = [0.04, 0.06, 1.0, 1.0]
    inactive: list[float] = [0.0, 0.0, 0.2, 0.5]
    active: list[float] = [0.5, 0.8, 1.0, 1.0]
    threshold: float = 0.5


class SimulateRequest(BaseModel):
    duration_s: float = Field(default=30.0, gt=0)
    seed: int = 7
    pulses: list[PulseModel] = Field(
        default_factory=lambda: [PulseModel(t_start_s=5.0, duration_s=0.2,
                                            torque_nm=15.0)]
    )
    plant: PlantModel = Field(default_factory=PlantModel)
    gains: GainsModel = Field(default_factory=GainsModel)
    fuzzy: FuzzyModel = Field(default_factory=FuzzyModel)
    u_max: float = 1.0
    windup_limit: float = 10.0
    interior_is_safe: bool = True
    control_enabled: bool = True
    map: MapModel = Field(default_factory=MapModel)
    zones: ZoneBoundsModel = Field(default_factory=ZoneBoundsModel)
    include_trace: bool = True


class SimulateResponse(BaseModel):
    samples: int
    duration_s: float
    episode_count: int
    first_activation_s: Optional[float]
    active_fraction: float
    u_peak: float
    recovery_times_s: list[Optional[float]]
    fell: bool
    fall_time_s: Optional[float]
    trace_csv: Optional[str] = None


class TuneRequest(BaseModel):
    plant: Literal["third-order", "first-order"] = "third-order"
    kp_min: float = 0.5
    kp_max: float = 20.0
    horizon_s: float = 60.0
    dt_s: float = 1e-3
    preset: Optional[Literal["paper"]] = None


class TuneResponse(BaseModel):
    kp: float
    ki: float
    kd: float
    ultimate_gain: Optional[float]
    ultimate_period_s: Optional[float]
    source: str


class ReportRequest(BaseModel):
    analysis: Optional[dict] = None
    simulation: Optional[dict] = None
    tuning: Optional[dict] = None


class ReportResponse(BaseModel):
    text: str


class HealthResponse(BaseModel):
    status: str
    version: str


class ErrorBody(BaseModel):
    error: str
    detail: str
    category: str
