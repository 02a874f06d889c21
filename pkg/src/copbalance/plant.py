"""Single-link inverted-pendulum standing plant and closed-loop simulation.

The plant is a sagittal-plane pendulum about the ankle,

    I * theta'' = m g h sin(theta) - c * theta' - sign(theta) * k * u + tau_d

actuated by a non-negative stimulation intensity ``u`` whose torque always
opposes the current lean, with additive ankle-torque disturbances.  The
measured COP_x is the quasi-static ankle-torque reading tau/(m g) = h
sin(theta) (the controller's own transient contribution is neglected);
COP_y is an optional zero-mean oscillation since the plant has no
medial-lateral dynamics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import zones
from .control import (
    DEFAULT_U_MAX,
    DEFAULT_WINDUP_LIMIT,
    ControllerState,
    FuzzyConfig,
    PidGains,
    gated_step,
)
from .errors import Fall
from .phase import ConicMap, distance_to_conic, exterior_distance


@dataclass(frozen=True)
class PlantParams:
    mass: float = 70.0              # kg
    com_height: float = 1.0         # m
    inertia: float | None = None    # kg m^2, defaults to mass * com_height^2
    viscous_damping: float = 2.5    # N m s / rad
    torque_per_intensity: float = 60.0  # N m per stimulation unit
    gravity: float = 9.81           # m / s^2
    dt: float = 0.01                # s
    cop_y_amplitude: float = 0.0    # cm
    cop_y_freq_hz: float = 0.3
    noise_std: float = 0.0          # cm, optional COP sensor noise

    def __post_init__(self):
        if self.inertia is None:
            object.__setattr__(self, "inertia", self.mass * self.com_height ** 2)
        for name in ("mass", "com_height", "inertia", "viscous_damping",
                     "torque_per_intensity", "gravity", "dt"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class SimState:
    theta: float = 0.0  # rad, anterior-posterior lean
    omega: float = 0.0  # rad/s
    t: float = 0.0      # s


def _accel(theta: float, omega: float, u: float, disturbance: float,
           p: PlantParams) -> float:
    torque = (p.mass * p.gravity * p.com_height * math.sin(theta)
              - p.viscous_damping * omega
              - math.copysign(1.0, theta) * (theta != 0.0) * p.torque_per_intensity * u
              + disturbance)
    return torque / p.inertia


def step_plant(s: SimState, u: float, disturbance: float, p: PlantParams,
               substeps: int = 1) -> SimState:
    """Advance one control interval of length ``p.dt`` with ``substeps``
    classical RK4 sub-steps (u and disturbance held constant).

    Raises Fall when the post-step lean reaches +/- pi/2.
    """
    h = p.dt / substeps
    theta, omega = s.theta, s.omega
    for _ in range(substeps):
        k1t = omega
        k1w = _accel(theta, omega, u, disturbance, p)
        k2t = omega + 0.5 * h * k1w
        k2w = _accel(theta + 0.5 * h * k1t, omega + 0.5 * h * k1w, u, disturbance, p)
        k3t = omega + 0.5 * h * k2w
        k3w = _accel(theta + 0.5 * h * k2t, omega + 0.5 * h * k2w, u, disturbance, p)
        k4t = omega + h * k3w
        k4w = _accel(theta + h * k3t, omega + h * k3w, u, disturbance, p)
        theta += h / 6.0 * (k1t + 2 * k2t + 2 * k3t + k4t)
        omega += h / 6.0 * (k1w + 2 * k2w + 2 * k3w + k4w)
    t = s.t + p.dt
    if not math.isfinite(theta) or abs(theta) >= math.pi / 2:
        raise Fall(t, theta)
    return SimState(theta=theta, omega=omega, t=t)


def cop_of_state(s: SimState, u: float, p: PlantParams) -> np.ndarray:
    """Measured COP in cm for the current state.

    COP_x is the quasi-static ankle-torque reading: at balance the ankle
    torque equals the gravity torque m g h sin(theta), so COP_x =
    h sin(theta) (meters -> cm); it is independent of mass and, in this
    approximation, of the momentary stimulation ``u``.  COP_y oscillates
    with the configured amplitude (zero by default: the plant is
    sagittal-plane only).
    """
    cop_x = 100.0 * p.com_height * math.sin(s.theta)
    cop_y = p.cop_y_amplitude * math.sin(2.0 * math.pi * p.cop_y_freq_hz * s.t)
    return np.array([cop_x, cop_y])


@dataclass(frozen=True)
class DisturbancePulse:
    t_start: float
    duration: float
    torque: float  # N m

    @property
    def t_end(self) -> float:
        return self.t_start + self.duration


def disturbance_at(t: float, profile: tuple[DisturbancePulse, ...]) -> float:
    return sum(p.torque for p in profile if p.t_start <= t < p.t_end)


ZONE_SHORT = {int(z): z.short for z in zones.ZoneLabel}


@dataclass
class SimTrace:
    """Time-aligned closed-loop record: COP, deviation, stimulation state,
    command, and stability zone per sample.

    ``active`` marks samples where stimulation was actually applied
    (u > 0), so ``u == 0`` exactly on every inactive sample.
    """

    t: np.ndarray
    cop: np.ndarray          # (N, 2) cm
    d: np.ndarray            # cm
    active: np.ndarray       # bool
    u: np.ndarray
    zone: np.ndarray         # int, zones.ZoneLabel values
    fell: bool = False
    fall_time: float | None = None
    pulses: tuple[DisturbancePulse, ...] = ()

    def __len__(self) -> int:
        return len(self.t)

    def episodes(self) -> list[tuple[float, float]]:
        """(start, end) times of maximal contiguous active stretches."""
        if len(self) == 0:
            return []
        active = np.asarray(self.active, dtype=bool)
        edges = np.flatnonzero(np.diff(active.astype(int)))
        starts = list(edges[active[edges + 1]] + 1)
        ends = list(edges[~active[edges + 1]] + 1)
        if active[0]:
            starts.insert(0, 0)
        if active[-1]:
            ends.append(len(active))
        return [(float(self.t[s]), float(self.t[e - 1])) for s, e in zip(starts, ends)]

    def recovery_times(self) -> list[float | None]:
        """Per pulse: seconds from pulse end until the gate first closes
        again with the COP back in the high-preference zone, counted after
        the activation the pulse provoked.  0.0 when the pulse never
        activated the controller, None when it never recovered."""
        out = []
        hp = int(zones.ZoneLabel.HIGH_PREFERENCE)
        for pulse in self.pulses:
            act_idx = np.flatnonzero(self.active & (self.t >= pulse.t_start))
            if len(act_idx) == 0:
                out.append(0.0)
                continue
            ok = ~self.active & (self.zone == hp)
            ok[: act_idx[0] + 1] = False
            idx = np.flatnonzero(ok)
            out.append(float(self.t[idx[0]] - pulse.t_end) if len(idx) else None)
        return out

    def summary(self) -> dict:
        eps = self.episodes()
        return {
            "samples": len(self),
            "duration_s": float(self.t[-1]) if len(self) else 0.0,
            "episode_count": len(eps),
            "first_activation_s": eps[0][0] if eps else None,
            "active_fraction": float(np.mean(self.active)) if len(self) else 0.0,
            "u_peak": float(self.u.max()) if len(self) else 0.0,
            "recovery_times_s": self.recovery_times(),
            "fell": self.fell,
            "fall_time_s": self.fall_time,
        }

    def to_dict(self) -> dict:
        """Column-oriented JSON-ready form of the trace."""
        return {
            "t": [float(v) for v in self.t],
            "copx": [float(v) for v in self.cop[:, 0]],
            "copy": [float(v) for v in self.cop[:, 1]],
            "d": [float(v) for v in self.d],
            "active": [bool(v) for v in self.active],
            "u": [float(v) for v in self.u],
            "zone": [ZONE_SHORT[int(z)] for z in self.zone],
        }

    def to_csv_text(self) -> str:
        lines = ["t,copx,copy,d,active,u,zone"]
        for i in range(len(self)):
            lines.append(
                f"{float(self.t[i])!r},{float(self.cop[i, 0])!r},"
                f"{float(self.cop[i, 1])!r},{float(self.d[i])!r},"
                f"{int(self.active[i])},{float(self.u[i])!r},"
                f"{ZONE_SHORT[int(self.zone[i])]}"
            )
        return "\n".join(lines) + "\n"


def default_reference_map() -> ConicMap:
    """Built-in reference mapping when no trial is supplied: a small
    origin-centered sway ellipse."""
    return ConicMap.from_ellipse(center=(0.0, 0.0), semi_axes=(0.5, 0.25))


def run_closed_loop(p: PlantParams, conic: ConicMap, cfg: FuzzyConfig,
                    gains: PidGains,
                    disturbance_profile=(),
                    duration: float = 30.0,
                    seed: int = 0,
                    initial: SimState = SimState(),
                    control_enabled: bool = True,
                    u_max: float = DEFAULT_U_MAX,
                    windup_limit: float = DEFAULT_WINDUP_LIMIT,
                    interior_is_safe: bool = True,
                    bounds: zones.ZoneBounds | None = None,
                    substeps: int = 1) -> SimTrace:
    """Simulate the intermittent controller against the standing plant.

    Per step: measure COP, gauge its deviation from the reference conic,
    gate/actuate, then integrate the plant one interval.  Deterministic for
    a given seed (the seed only drives the optional COP sensor noise).  On
    a fall the trace up to the fall is returned with ``fell`` set.
    """
    if duration <= 0:
        raise ValueError("duration must be positive")
    pulses = tuple(
        d if isinstance(d, DisturbancePulse) else DisturbancePulse(*d)
        for d in disturbance_profile
    )
    for pulse in pulses:
        if pulse.t_start < 0 or pulse.t_end > duration:
            raise ValueError("disturbance pulses must lie within the run")
    bounds = bounds or zones.ZoneBounds()
    rng = np.random.default_rng(seed)
    n = int(round(duration / p.dt))
    if n < 1:
        raise ValueError("duration is shorter than one control interval")
    t = np.empty(n)
    cop = np.empty((n, 2))
    dev = np.empty(n)
    active = np.zeros(n, dtype=bool)
    u_arr = np.zeros(n)
    zone = np.empty(n, dtype=int)

    state = initial
    ctrl = ControllerState()
    fell = False
    fall_time = None
    steps_done = 0
    for i in range(n):
        measured = cop_of_state(state, float(u_arr[i - 1]) if i else 0.0, p)
        if p.noise_std > 0:
            measured = measured + rng.normal(0.0, p.noise_std, size=2)
        if interior_is_safe:
            d = exterior_distance(measured, conic)
        else:
            d = distance_to_conic(measured, conic)
        if control_enabled:
            u, ctrl = gated_step(d, cfg, gains, ctrl, p.dt,
                                 u_max=u_max, windup_limit=windup_limit)
        else:
            u, ctrl = 0.0, ControllerState(active=False, last_d=d)
        t[i] = state.t
        cop[i] = measured
        dev[i] = d
        active[i] = u > 0.0
        u_arr[i] = u
        zone[i] = zones.classify_many(measured[None, :] + bounds.center, bounds)[0]
        steps_done = i + 1
        try:
            state = step_plant(state, u, disturbance_at(state.t, pulses), p,
                               substeps=substeps)
        except Fall as exc:
            fell = True
            fall_time = exc.time
            break

    sl = slice(0, steps_done)
    return SimTrace(
        t=t[sl], cop=cop[sl], d=dev[sl], active=active[sl], u=u_arr[sl],
        zone=zone[sl], fell=fell, fall_time=fall_time, pulses=pulses,
    )
