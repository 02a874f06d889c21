"""Synthetic trial generators used for fixtures, demos, and tests.

Both generators emit complete records (wrench columns consistent with the
COP columns, so the recorded and derived COP channels agree) and are
deterministic for a given seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .phase import ConicMap
from .zones import ZoneBounds, ZoneLabel

_PLATE_FZ_N = 700.0


def _rows(times: np.ndarray, cop: np.ndarray, meta: dict[str, str]) -> str:
    """Record text with wrench columns back-derived from the COP."""
    lines = [f"# {k}: {v}" for k, v in meta.items()]
    my = -cop[:, 0] * _PLATE_FZ_N / 100.0
    mx = cop[:, 1] * _PLATE_FZ_N / 100.0
    for i, t in enumerate(times):
        lines.append(
            f"{t:.2f} 0.0 0.0 {_PLATE_FZ_N:.1f} "
            f"{float(mx[i])!r} {float(my[i])!r} 0.0 "
            f"{float(cop[i, 0])!r} {float(cop[i, 1])!r}"
        )
    return "\n".join(lines) + "\n"


def _rotated_ellipse_extremes(center, a, b, phi):
    """Exact axis-extreme points of a rotated ellipse, as
    (xmax, ymax, xmin, ymin) points."""
    cx, cy = center

    def at(t):
        return np.array([
            cx + a * math.cos(phi) * math.cos(t) - b * math.sin(phi) * math.sin(t),
            cy + a * math.sin(phi) * math.cos(t) + b * math.cos(phi) * math.sin(t),
        ])

    tx = math.atan2(-b * math.sin(phi), a * math.cos(phi))
    ty = math.atan2(b * math.cos(phi), a * math.sin(phi))
    x1, x2 = at(tx), at(tx + math.pi)
    y1, y2 = at(ty), at(ty + math.pi)
    xmax, xmin = (x1, x2) if x1[0] >= x2[0] else (x2, x1)
    ymax, ymin = (y1, y2) if y1[1] >= y2[1] else (y2, y1)
    return xmax, ymax, xmin, ymin


@dataclass(frozen=True)
class EllipseFixture:
    text: str
    conic: ConicMap  # generating conic in the mean-centered frame


def ellipse_trial(sample_rate: float = 100.0,
                  offset: tuple[float, float] = (3.0, -1.0)) -> EllipseFixture:
    """A trace whose five characteristic points lie exactly on a known
    ellipse, so the identification pipeline must recover that ellipse.

    The generating ellipse passes through the trace's mean point (the
    frame origin after centering); the trace consists of the ellipse's
    four axis extremes, a slightly shrunk arc sweep between them, and a
    zero-spread balancing cluster that pins the sample mean onto the curve
    without creating new extremes.
    """
    a, b, phi = 1.0, 0.5, 0.4
    t0 = 2.2  # ellipse parameter mapped onto the frame origin
    rot = np.array([[math.cos(phi), -math.sin(phi)],
                    [math.sin(phi), math.cos(phi)]])
    center = -(rot @ np.array([a * math.cos(t0), b * math.sin(t0)]))
    conic = ConicMap.from_ellipse(center=tuple(center), semi_axes=(a, b), angle=phi)
    if abs(float(conic.evaluate((0.0, 0.0)))) > 1e-9:
        raise AssertionError("construction broken: origin not on the ellipse")

    xmax, ymax, xmin, ymin = _rotated_ellipse_extremes(center, a, b, phi)

    # arc sweep, shrunk toward the ellipse center so it sets no extremes
    t_arc = np.linspace(0.0, 2.0 * math.pi, 120, endpoint=False)
    arc = center + 0.97 * (
        np.column_stack([a * np.cos(t_arc), b * np.sin(t_arc)]) @ rot.T
    )

    # interleave the exact extremes at their parameter positions
    t_ext = {}
    t_ext["xmax"] = math.atan2(-b * math.sin(phi), a * math.cos(phi))
    t_ext["ymax"] = math.atan2(b * math.cos(phi), a * math.sin(phi))
    t_ext["xmin"] = t_ext["xmax"] + math.pi
    t_ext["ymin"] = t_ext["ymax"] + math.pi
    ext_pts = {"xmax": xmax, "ymax": ymax, "xmin": xmin, "ymin": ymin}
    entries = list(zip(t_arc, arc))
    for name, t in t_ext.items():
        entries.append((t % (2.0 * math.pi), ext_pts[name]))
    entries.sort(key=lambda item: item[0])
    loop = np.array([p for _, p in entries])

    # balancing cluster: k points averaging -s/k, laid out in zero-sum pairs
    s = loop.sum(axis=0)
    k = 600
    q = -s / k
    half = np.array([0.02, 0.006])
    cluster = np.vstack([q + half, q - half] * (k // 2))
    pts = np.vstack([loop, cluster])

    if not np.allclose(pts.mean(axis=0), 0.0, atol=1e-12):
        raise AssertionError("construction broken: sample mean off origin")
    hi, lo = pts.max(axis=0), pts.min(axis=0)
    if not (hi[0] == xmax[0] and hi[1] == ymax[1]
            and lo[0] == xmin[0] and lo[1] == ymin[1]):
        raise AssertionError("construction broken: injected extremes displaced")

    times = np.arange(len(pts)) / sample_rate
    meta = {
        "id": "SYN10BDS",
        "vision": "open",
        "surface": "firm",
        "note": "synthetic ellipse fixture",
    }
    return EllipseFixture(text=_rows(times, pts + np.asarray(offset), meta),
                          conic=conic)


def quiet_stance_trial(duration_s: float = 60.0, sample_rate: float = 100.0,
                       seed: int = 20240901,
                       bounds: ZoneBounds | None = None,
                       confinement: float = 0.9,
                       offset: tuple[float, float] = (2.5, 0.8)) -> str:
    """A band-limited pseudo-sway trace confined within ``confinement``
    times the high-preference ellipse (after mean-centering and foot-frame
    registration)."""
    bounds = bounds or ZoneBounds()
    rng = np.random.default_rng(seed)
    n = int(round(duration_s * sample_rate))
    t = np.arange(n) / sample_rate
    freqs = np.array([0.06, 0.11, 0.19, 0.31])

    def sway(scale: float) -> np.ndarray:
        amps = scale * rng.uniform(0.3, 1.0, size=len(freqs))
        phases = rng.uniform(0.0, 2.0 * math.pi, size=len(freqs))
        out = np.zeros(n)
        for amp, f, ph in zip(amps, freqs, phases):
            out += amp * np.sin(2.0 * math.pi * f * t + ph)
        return out

    hp_x, hp_y = bounds.semi_axes_cm(ZoneLabel.HIGH_PREFERENCE)
    cop = np.column_stack([sway(hp_x), sway(hp_y)])
    cop -= cop.mean(axis=0)
    xn = cop[:, 0] / hp_x
    yn = cop[:, 1] / hp_y
    max_form = float(np.max(xn * xn + yn * yn))
    cop *= confinement * 0.999 / math.sqrt(max_form)

    meta = {
        "id": "SYN20BDS",
        "vision": "open",
        "surface": "firm",
        "sample_rate": f"{sample_rate:g}",
        "note": "synthetic quiet-stance fixture",
    }
    return _rows(t, cop + np.asarray(offset), meta)
