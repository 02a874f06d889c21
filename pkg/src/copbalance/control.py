"""The intermittent controller: a one-input Mamdani fuzzy gate on the
deviation ``d``, a parallel PID acting on ``d`` as its error, and
ultimate-cycle autotuning.

The gate and the PID are deliberately separable: ``fuzzy_evaluate`` turns a
deviation into an activation level in [0, 1], ``gated_step`` applies the
threshold and runs the PID only while the gate is open, and
``intermittent_step`` feeds the gate from the distance between a COP point
and the identified conic mapping.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import NoDecayMeasurement, NoRuleFires, NoUltimateGain
from .phase import ConicMap, distance_to_conic, exterior_distance

FUZZY_GRID_POINTS = 1001

# Stimulation-intensity saturation and integral windup bound.
DEFAULT_U_MAX = 1.0
DEFAULT_WINDUP_LIMIT = 10.0


@dataclass(frozen=True)
class Trapezoid:
    """Normalized trapezoidal membership function with vertices a<=b<=c<=d
    (membership rises on [a, b], is 1 on [b, c], falls on [c, d])."""

    a: float
    b: float
    c: float
    d: float

    def __post_init__(self):
        if not self.a <= self.b <= self.c <= self.d:
            raise ValueError(
                f"trapezoid vertices must be non-decreasing, got "
                f"({self.a}, {self.b}, {self.c}, {self.d})"
            )

    def membership(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        if self.b > self.a:
            rising = (x >= self.a) & (x < self.b)
            out[rising] = (x[rising] - self.a) / (self.b - self.a)
        flat = (x >= self.b) & (x <= self.c)
        out[flat] = 1.0
        if self.d > self.c:
            falling = (x > self.c) & (x <= self.d)
            out[falling] = (self.d - x[falling]) / (self.d - self.c)
        return out if out.ndim else float(out)


@dataclass(frozen=True)
class FuzzyConfig:
    """Mamdani inference configuration: min implication, max aggregation,
    centroid defuzzification on a fixed grid."""

    input_sets: dict[str, Trapezoid]
    output_sets: dict[str, Trapezoid]
    rules: tuple[tuple[str, str], ...]
    activation_threshold: float = 0.5
    input_universe: tuple[float, float] = (0.0, 1.0)
    output_universe: tuple[float, float] = (0.0, 1.0)
    grid_points: int = FUZZY_GRID_POINTS

    def __post_init__(self):
        for in_name, out_name in self.rules:
            if in_name not in self.input_sets:
                raise ValueError(f"rule references unknown input set {in_name!r}")
            if out_name not in self.output_sets:
                raise ValueError(f"rule references unknown output set {out_name!r}")
        if not self.rules:
            raise ValueError("at least one rule is required")


def default_fuzzy_config(activation_threshold: float = 0.5) -> FuzzyConfig:
    """Two-set, two-rule gate with the small/big crossover engineered at
    d = 0.05 cm: below it the output centroid stays under 0.5, above it the
    centroid exceeds 0.5."""
    return fuzzy_config_from_vertices(activation_threshold=activation_threshold)


def fuzzy_config_from_vertices(
    small=(0.0, 0.0, 0.04, 0.06),
    big=(0.04, 0.06, 1.0, 1.0),
    inactive=(0.0, 0.0, 0.2, 0.5),
    active=(0.5, 0.8, 1.0, 1.0),
    activation_threshold: float = 0.5,
) -> FuzzyConfig:
    """The standard two-rule gate (small -> inactive, big -> active) with
    configurable trapezoid vertices."""
    return FuzzyConfig(
        input_sets={"small": Trapezoid(*small), "big": Trapezoid(*big)},
        output_sets={"inactive": Trapezoid(*inactive),
                     "active": Trapezoid(*active)},
        rules=(("small", "inactive"), ("big", "active")),
        activation_threshold=activation_threshold,
    )


def fuzzy_evaluate(d: float, cfg: FuzzyConfig) -> float:
    """Crisp activation level for deviation ``d``.

    Each rule clips its output set at the input membership of ``d`` (min);
    the clipped sets are aggregated by max and the centroid of the result
    is integrated on the configured grid.  Deviations beyond the input
    universe clamp to its upper edge.
    """
    if d < 0:
        raise ValueError(f"deviation must be non-negative, got {d}")
    lo, hi = cfg.input_universe
    x = min(max(d, lo), hi)
    grid = np.linspace(*cfg.output_universe, cfg.grid_points)
    aggregate = np.zeros_like(grid)
    any_fired = False
    for in_name, out_name in cfg.rules:
        weight = float(cfg.input_sets[in_name].membership(np.array(x)))
        if weight <= 0.0:
            continue
        any_fired = True
        clipped = np.minimum(weight, cfg.output_sets[out_name].membership(grid))
        aggregate = np.maximum(aggregate, clipped)
    if not any_fired:
        raise NoRuleFires(f"no rule fires for d={d}; membership functions "
                          "do not cover the input universe")
    area = np.trapezoid(aggregate, grid)
    if area <= 0.0:
        raise NoRuleFires("aggregated output has zero area")
    return float(np.trapezoid(aggregate * grid, grid) / area)


# --- PID --------------------------------------------------------------------

@dataclass(frozen=True)
class PidGains:
    kp: float
    ki: float
    kd: float

    def __post_init__(self):
        if min(self.kp, self.ki, self.kd) < 0:
            raise ValueError("PID gains must be non-negative")


# Gains the source controller arrived at for its (unstated) plant; shipped
# as the default preset.
PAPER_GAINS = PidGains(kp=0.87, ki=1.0, kd=0.93)


@dataclass(frozen=True)
class PidState:
    integral: float = 0.0
    prev_error: float = 0.0
    initialized: bool = False


PID_RESET = PidState()


def pid_step(state: PidState, error: float, dt: float, gains: PidGains,
             windup_limit: float = DEFAULT_WINDUP_LIMIT) -> tuple[float, PidState]:
    """One step of the parallel-form discrete PID: rectangular integration,
    backward-difference derivative (zero on the first step after a reset),
    integral clamped to +/- windup_limit."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    integral = state.integral + error * dt
    integral = max(-windup_limit, min(windup_limit, integral))
    derivative = (error - state.prev_error) / dt if state.initialized else 0.0
    u = gains.kp * error + gains.ki * integral + gains.kd * derivative
    return u, PidState(integral=integral, prev_error=error, initialized=True)


@dataclass(frozen=True)
class ControllerState:
    active: bool = False
    pid: PidState = PID_RESET
    last_d: float = 0.0


def gated_step(d: float, cfg: FuzzyConfig, gains: PidGains,
               state: ControllerState, dt: float,
               u_max: float = DEFAULT_U_MAX,
               windup_limit: float = DEFAULT_WINDUP_LIMIT,
               ) -> tuple[float, ControllerState]:
    """Fuzzy-gated PID on a precomputed deviation ``d``.

    While the gate output stays at or below the activation threshold the
    command is exactly zero and the PID state is held at reset, so no
    charge leaks across inactive stretches.
    """
    y = fuzzy_evaluate(d, cfg)
    if y <= cfg.activation_threshold:
        return 0.0, ControllerState(active=False, pid=PID_RESET, last_d=d)
    u, pid = pid_step(state.pid, d, dt, gains, windup_limit=windup_limit)
    u = min(max(u, 0.0), u_max)
    return u, ControllerState(active=True, pid=pid, last_d=d)


def intermittent_step(p, conic: ConicMap, cfg: FuzzyConfig, gains: PidGains,
                      state: ControllerState, dt: float,
                      u_max: float = DEFAULT_U_MAX,
                      windup_limit: float = DEFAULT_WINDUP_LIMIT,
                      interior_is_safe: bool = True,
                      ) -> tuple[float, ControllerState]:
    """One controller step for a COP point against the identified mapping.

    ``interior_is_safe`` treats the bounded interior of an elliptical
    mapping as zero deviation (the normal sway region); with it disabled,
    ``d`` is the plain distance to the curve.
    """
    if interior_is_safe:
        d = exterior_distance(np.asarray(p, dtype=float), conic)
    else:
        d = distance_to_conic(np.asarray(p, dtype=float), conic)
    return gated_step(d, cfg, gains, state, dt,
                      u_max=u_max, windup_limit=windup_limit)


# --- Ziegler-Nichols ultimate-cycle tuning ------------------------------------

@dataclass(frozen=True)
class ZnTuning:
    gains: PidGains
    ultimate_gain: float
    ultimate_period: float


# half-cycle amplitudes needed to certify five full sustained cycles
_CERTIFY_HALF_CYCLES = 11


def _oscillation_profile(errors: np.ndarray, dt: float):
    """(decay ratio, period, half-cycle count) of an error trace, or None
    when the trace has too few zero crossings to call it oscillatory.

    The decay ratio is the geometric-mean peak-amplitude ratio between
    same-sign half-cycles over (up to) the final five cycles.
    """
    e = np.asarray(errors, dtype=float)
    signs = np.sign(e)
    signs[signs == 0] = 1.0
    crossings = np.flatnonzero(np.diff(signs))
    if len(crossings) < 4:
        return None
    # amplitude of each half-cycle between consecutive crossings
    amps = []
    for i in range(len(crossings) - 1):
        seg = np.abs(e[crossings[i]: crossings[i + 1] + 1])
        amps.append(float(seg.max()))
    tail = np.array(amps[-_CERTIFY_HALF_CYCLES:])
    # same-sign peaks are two half-cycles apart
    ratios = tail[2:] / tail[:-2]
    ratios = ratios[np.isfinite(ratios) & (ratios > 0)]
    if len(ratios) == 0:
        return None
    decay = float(np.exp(np.mean(np.log(ratios))))
    # consecutive crossings are half periods
    xs = crossings[-_CERTIFY_HALF_CYCLES:]
    period = 2.0 * float(np.mean(np.diff(xs))) * dt
    return decay, period, len(amps)


def tune_ziegler_nichols(plant: Callable[[float], np.ndarray],
                         kp_range: tuple[float, float],
                         sim_horizon: float,
                         dt: float,
                         decay_band: tuple[float, float] = (0.95, 1.05),
                         max_bisections: int = 60) -> ZnTuning:
    """Classical ultimate-cycle tuning against a closed-loop callback.

    ``plant(kp)`` must return the error trace of the loop under pure
    proportional gain ``kp``, sampled at ``dt`` over ``sim_horizon``.  The
    ultimate gain is the smallest gain whose final five cycles neither
    decay nor grow (peak-amplitude ratio within ``decay_band``), found by
    bisection; the ultimate period comes from zero-crossing spacing.
    Returns kp = 0.6 Ku, ki = kp / (Tu / 2), kd = kp * Tu / 8.
    """
    lo, hi = kp_range
    if not 0 < lo < hi:
        raise ValueError("kp_range must satisfy 0 < lo < hi")

    def measure(kp: float):
        return _oscillation_profile(np.asarray(plant(kp), dtype=float), dt)

    prof_hi = measure(hi)
    if prof_hi is None or prof_hi[0] <= decay_band[0]:
        raise NoUltimateGain(
            f"no gain in ({lo}, {hi}) produces growing or sustained "
            "oscillation; the loop cannot be ultimate-cycle tuned"
        )
    prof_lo = measure(lo)
    if prof_lo is not None and prof_lo[0] >= decay_band[1]:
        raise NoUltimateGain(
            f"oscillation already grows at the lower bound kp={lo}; the "
            "ultimate gain lies below the search range"
        )

    ku, tu, cycles = hi, prof_hi[1], prof_hi[2]
    for _ in range(max_bisections):
        mid = 0.5 * (lo + hi)
        prof = measure(mid)
        if prof is not None and decay_band[0] <= prof[0] <= decay_band[1]:
            ku, tu, cycles = mid, prof[1], prof[2]
            break
        if prof is None or prof[0] < 1.0:
            lo = mid
        else:
            hi = mid
            ku, tu, cycles = mid, prof[1], prof[2]
        if (hi - lo) <= 1e-9 * hi:
            break

    if cycles < _CERTIFY_HALF_CYCLES:
        raise NoDecayMeasurement(
            f"only {cycles} half-cycles at kp={ku:.4g}; the horizon is too "
            "short to certify five sustained cycles"
        )
    kp = 0.6 * ku
    ki = kp / (tu / 2.0)
    kd = kp * (tu / 8.0)
    return ZnTuning(gains=PidGains(kp=kp, ki=ki, kd=kd),
                    ultimate_gain=ku, ultimate_period=tu)


# --- benchmark loops for the tuner -------------------------------------------

def third_order_benchmark(sim_horizon: float = 60.0,
                          dt: float = 1e-3) -> Callable[[float], np.ndarray]:
    """Closed-loop error callback for the plant 1/(s(s+1)(s+2)) under unit
    step reference: ultimate gain 6, ultimate period 2*pi/sqrt(2)."""
    from scipy import signal as sps

    t = np.arange(0.0, sim_horizon, dt)

    def run(kp: float) -> np.ndarray:
        system = sps.TransferFunction([kp], [1.0, 3.0, 2.0, kp])
        _, y = sps.step(system, T=t, N=len(t))
        return 1.0 - y

    return run


def first_order_benchmark(sim_horizon: float = 60.0,
                          dt: float = 1e-3) -> Callable[[float], np.ndarray]:
    """Closed-loop error callback for 1/(s+1): never oscillates under pure
    proportional control."""
    from scipy import signal as sps

    t = np.arange(0.0, sim_horizon, dt)

    def run(kp: float) -> np.ndarray:
        system = sps.TransferFunction([kp], [1.0, 1.0 + kp])
        _, y = sps.step(system, T=t, N=len(t))
        return 1.0 - y

    return run
