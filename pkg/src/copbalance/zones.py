"""Nested elliptical stability zones on the foot sole.

Three concentric ellipse boundaries (high preference, low preference,
undesirable) share a center on the foot midline at a fixed fraction of
foot length; everything beyond the outermost boundary is unstable.  The
semi-axes are dimensionless fractions of foot length, the long axis along
the anterior-posterior (x) direction.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import EmptySeries
from .phase import PhaseTrajectory


class ZoneLabel(enum.IntEnum):
    """Nested zones ordered inside-out."""

    HIGH_PREFERENCE = 0
    LOW_PREFERENCE = 1
    UNDESIRABLE = 2
    UNSTABLE = 3

    @property
    def short(self) -> str:
        return ("HP", "LP", "UD", "US")[self.value]


@dataclass(frozen=True)
class ZoneBounds:
    """Zone-boundary geometry.

    ``d1_*`` are semi-axes along x (anterior-posterior) and ``d2_*`` along
    y (medial-lateral), as fractions of ``foot_length``.  The zone center
    sits at ``center_frac * foot_length`` from the heel on the midline.
    """

    foot_length: float = 20.0
    center_frac: float = 0.47
    d1_hp: float = 0.16
    d2_hp: float = 0.07
    d1_lp: float = 0.57
    d2_lp: float = 0.43
    d1_ud: float = 0.97
    d2_ud: float = 0.59

    def __post_init__(self):
        if self.foot_length <= 0:
            raise ValueError("foot_length must be positive")
        if not 0.0 < self.center_frac < 1.0:
            raise ValueError("center_frac must lie in (0, 1)")
        if not 0.0 < self.d1_hp < self.d1_lp < self.d1_ud:
            raise ValueError("d1 semi-axes must be positive and strictly nested")
        if not 0.0 < self.d2_hp < self.d2_lp < self.d2_ud:
            raise ValueError("d2 semi-axes must be positive and strictly nested")
        for d1, d2 in ((self.d1_hp, self.d2_hp), (self.d1_lp, self.d2_lp),
                       (self.d1_ud, self.d2_ud)):
            if d2 >= d1:
                raise ValueError(
                    "each boundary's medial-lateral semi-axis must be "
                    "smaller than its anterior-posterior semi-axis"
                )

    @property
    def center(self) -> np.ndarray:
        return np.array([self.center_frac * self.foot_length, 0.0])

    def semi_axes_cm(self, label: ZoneLabel) -> tuple[float, float]:
        """Absolute (x, y) semi-axes in cm of a zone boundary."""
        d1, d2 = {
            ZoneLabel.HIGH_PREFERENCE: (self.d1_hp, self.d2_hp),
            ZoneLabel.LOW_PREFERENCE: (self.d1_lp, self.d2_lp),
            ZoneLabel.UNDESIRABLE: (self.d1_ud, self.d2_ud),
        }[label]
        return d1 * self.foot_length, d2 * self.foot_length

    def to_dict(self) -> dict:
        return {
            "foot_length_cm": self.foot_length,
            "center_frac": self.center_frac,
            "d1_hp": self.d1_hp, "d2_hp": self.d2_hp,
            "d1_lp": self.d1_lp, "d2_lp": self.d2_lp,
            "d1_ud": self.d1_ud, "d2_ud": self.d2_ud,
        }


def _normalized_forms(points: np.ndarray, b: ZoneBounds) -> np.ndarray:
    """(N, 3) quadratic forms of the three boundaries; < 1 means inside."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    xn = (pts[:, 0] - b.center_frac * b.foot_length) / b.foot_length
    yn = pts[:, 1] / b.foot_length
    forms = np.empty((len(pts), 3))
    for i, (d1, d2) in enumerate(((b.d1_hp, b.d2_hp), (b.d1_lp, b.d2_lp),
                                  (b.d1_ud, b.d2_ud))):
        forms[:, i] = (xn / d1) ** 2 + (yn / d2) ** 2
    return forms


def classify_many(points: np.ndarray, b: ZoneBounds) -> np.ndarray:
    """Zone index per point (vectorized form of classify)."""
    forms = _normalized_forms(points, b)
    inside = forms < 1.0
    labels = np.full(len(forms), int(ZoneLabel.UNSTABLE))
    labels[inside[:, 2]] = int(ZoneLabel.UNDESIRABLE)
    labels[inside[:, 1]] = int(ZoneLabel.LOW_PREFERENCE)
    labels[inside[:, 0]] = int(ZoneLabel.HIGH_PREFERENCE)
    return labels


def classify(p, b: ZoneBounds) -> ZoneLabel:
    """Zone of a foot-frame COP point (cm).

    Strictly inside a boundary (quadratic form < 1) gets the inner label;
    points exactly on a boundary belong to the outer zone.
    """
    return ZoneLabel(int(classify_many(np.asarray(p, dtype=float).reshape(1, 2), b)[0]))


def occupancy(points: np.ndarray, b: ZoneBounds) -> dict[ZoneLabel, float]:
    """Fraction of samples in each zone; fractions sum to one."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.size == 0:
        raise EmptySeries("occupancy of an empty COP series is undefined")
    labels = classify_many(pts, b)
    total = len(labels)
    return {
        label: int(np.sum(labels == int(label))) / total
        for label in ZoneLabel
    }


def to_foot_frame(traj: PhaseTrajectory | np.ndarray, b: ZoneBounds) -> np.ndarray:
    """Translate a mean-centered COP series so the trial mean sits at the
    zone center (the dataset has no foot registration, so the mean sway
    point is identified with the zone center)."""
    pts = traj.points if isinstance(traj, PhaseTrajectory) else \
        np.asarray(traj, dtype=float)
    return np.atleast_2d(pts) + b.center
