"""Phase-space construction, extremal-point mapping identification, and
distances to the identified second-degree curve.

The "phase space" here is the plane of (COP_x, COP_y) pairs of a trial,
mean-centered so that the origin is the trial's mean sway point.  Five
characteristic points (the four axis extremes plus the origin) determine a
unique conic section, which serves as the reference mapping the controller
measures deviations from.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable

import numpy as np

from .errors import (
    DegenerateConfiguration,
    DegenerateTrajectory,
    EmptyLocus,
    TooFewSamples,
)

CONIC_NORMALIZATION = "unit Euclidean norm, first nonzero coefficient positive"

# Coefficients this small (after unit normalization) are treated as zero.
_COEFF_TOL = 1e-12


@dataclass(frozen=True)
class PhaseTrajectory:
    """Mean-centered COP trace in cm, sampled every ``dt`` seconds."""

    points: np.ndarray
    dt: float

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ValueError("trajectory points must be an (N, 2) array")
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class PoincareSet:
    """The five characteristic points: axis extremes plus the origin."""

    p_xmax: tuple[float, float]
    p_ymax: tuple[float, float]
    p_xmin: tuple[float, float]
    p_ymin: tuple[float, float]
    p_origin: tuple[float, float] = (0.0, 0.0)

    def as_array(self) -> np.ndarray:
        return np.array(
            [self.p_xmax, self.p_ymax, self.p_xmin, self.p_ymin, self.p_origin],
            dtype=float,
        )

    def to_dict(self) -> dict:
        return {
            "p_xmax": list(self.p_xmax),
            "p_ymax": list(self.p_ymax),
            "p_xmin": list(self.p_xmin),
            "p_ymin": list(self.p_ymin),
            "p_origin": list(self.p_origin),
        }


@dataclass(frozen=True)
class ConicMap:
    """Homogeneous coefficients (a, b, c, d, e, f) of
    ``a x^2 + b xy + c y^2 + d x + e y + f = 0``, unit norm, first nonzero
    coefficient positive."""

    coeffs: tuple[float, float, float, float, float, float]

    @classmethod
    def from_coefficients(cls, raw: Iterable[float]) -> "ConicMap":
        v = np.asarray(tuple(raw), dtype=float)
        if v.shape != (6,):
            raise ValueError("a conic needs exactly six coefficients")
        norm = float(np.linalg.norm(v))
        if norm == 0.0 or not np.all(np.isfinite(v)):
            raise DegenerateConfiguration("conic coefficients are zero or non-finite")
        v = v / norm
        if np.all(np.abs(v[:5]) <= _COEFF_TOL):
            raise DegenerateConfiguration(
                "conic has no quadratic or linear part (only the constant term)"
            )
        for c in v:
            if abs(c) > _COEFF_TOL:
                if c < 0:
                    v = -v
                break
        v = v + 0.0  # clear negative zeros
        return cls(tuple(float(c) for c in v))

    @classmethod
    def from_ellipse(
        cls,
        center: tuple[float, float] = (0.0, 0.0),
        semi_axes: tuple[float, float] = (1.0, 1.0),
        angle: float = 0.0,
    ) -> "ConicMap":
        """Conic of the ellipse with the given center, semi-axes, and
        rotation of the first axis from +x (radians)."""
        ax, ay = semi_axes
        if ax <= 0 or ay <= 0:
            raise ValueError("semi-axes must be positive")
        ca, sa = math.cos(angle), math.sin(angle)
        # u = R^T (p - c); u0^2/ax^2 + u1^2/ay^2 - 1 = 0
        m = np.diag([1.0 / ax**2, 1.0 / ay**2])
        rot = np.array([[ca, -sa], [sa, ca]])
        q = rot @ m @ rot.T
        cx, cy = center
        a = q[0, 0]
        b = 2.0 * q[0, 1]
        c = q[1, 1]
        d = -2.0 * q[0, 0] * cx - 2.0 * q[0, 1] * cy
        e = -2.0 * q[1, 1] * cy - 2.0 * q[0, 1] * cx
        f = q[0, 0] * cx**2 + 2.0 * q[0, 1] * cx * cy + q[1, 1] * cy**2 - 1.0
        return cls.from_coefficients((a, b, c, d, e, f))

    @property
    def a(self): return self.coeffs[0]
    @property
    def b(self): return self.coeffs[1]
    @property
    def c(self): return self.coeffs[2]
    @property
    def d(self): return self.coeffs[3]
    @property
    def e(self): return self.coeffs[4]
    @property
    def f(self): return self.coeffs[5]

    def evaluate(self, points) -> np.ndarray:
        """Residual of the conic equation at the given point(s)."""
        p = np.atleast_2d(np.asarray(points, dtype=float))
        x, y = p[:, 0], p[:, 1]
        a, b, c, d, e, f = self.coeffs
        out = a * x * x + b * x * y + c * y * y + d * x + e * y + f
        return out if out.size > 1 else float(out[0])

    def gradient(self, point) -> np.ndarray:
        x, y = float(point[0]), float(point[1])
        a, b, c, d, e, f = self.coeffs
        return np.array([2 * a * x + b * y + d, b * x + 2 * c * y + e])

    @property
    def kind(self) -> str:
        """One of ``ellipse``, ``imaginary-ellipse``, ``point``,
        ``parabola``, ``hyperbola``, ``degenerate``."""
        return _classify(self)

    def to_dict(self) -> dict:
        a, b, c, d, e, f = self.coeffs
        return {
            "a": a, "b": b, "c": c, "d": d, "e": e, "f": f,
            "normalization": CONIC_NORMALIZATION,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ConicMap":
        return cls.from_coefficients(data[k] for k in "abcdef")


@dataclass(frozen=True)
class LogisticParams:
    """Control parameter and initial value of the quadratic recurrence
    x_{n+1} = r x_n (1 - x_n)."""

    r: float
    x0: float

    def __post_init__(self):
        if not 0.0 <= self.r <= 4.0:
            raise ValueError(f"r must lie in [0, 4], got {self.r}")
        if not 0.0 <= self.x0 <= 1.0:
            raise ValueError(f"x0 must lie in [0, 1], got {self.x0}")


def logistic_iterate(params: LogisticParams, n: int) -> np.ndarray:
    """Forward-iterate the quadratic map, returning x_0 .. x_n inclusive."""
    if n < 0:
        raise ValueError("n must be >= 0")
    out = np.empty(n + 1)
    out[0] = params.x0
    x = params.x0
    for i in range(1, n + 1):
        x = params.r * x * (1.0 - x)
        out[i] = x
    return out


# --- trajectory and extremal points -----------------------------------------

def trajectory_from_cop(cop: np.ndarray, sample_rate: float) -> PhaseTrajectory:
    """Mean-center a raw (N, 2) COP series and wrap it as a trajectory."""
    cop = np.asarray(cop, dtype=float)
    if cop.ndim != 2 or cop.shape[1] != 2 or len(cop) < 2:
        raise TooFewSamples(f"need at least 2 COP samples, got {cop.shape}")
    if not np.all(np.isfinite(cop)):
        raise TooFewSamples("COP series contains non-finite samples")
    centered = cop - cop.mean(axis=0)
    return PhaseTrajectory(points=centered, dt=1.0 / sample_rate)


def build_trajectory(trial, source: str = "auto", min_load: float = 10.0) -> PhaseTrajectory:
    """Mean-centered phase trajectory of a trial's COP.

    ``source`` selects the COP channel: ``recorded`` uses the record's COP
    columns, ``wrench`` derives COP from force/moment, ``auto`` prefers the
    recorded channel sample by sample.  Samples with no usable COP (absent
    channel, unloaded plate) are dropped.
    """
    from .ingest import cop_series

    cop = cop_series(trial, source=source, min_load=min_load)
    if len(cop) < 2:
        raise TooFewSamples(
            f"trial {trial.id!r} has {len(cop)} usable COP samples (need >= 2)"
        )
    return trajectory_from_cop(cop, trial.sample_rate)


def extract_poincare_points(traj: PhaseTrajectory, tol: float = 1e-9) -> PoincareSet:
    """The axis-extreme points of the trajectory plus the origin.

    Ties at an extremum resolve to the earliest sample.
    """
    pts = traj.points
    x, y = pts[:, 0], pts[:, 1]
    if (x.max() - x.min()) <= tol or (y.max() - y.min()) <= tol:
        raise DegenerateTrajectory(
            "trajectory extent below tolerance on at least one axis"
        )
    return PoincareSet(
        p_xmax=tuple(pts[int(np.argmax(x))]),
        p_ymax=tuple(pts[int(np.argmax(y))]),
        p_xmin=tuple(pts[int(np.argmin(x))]),
        p_ymin=tuple(pts[int(np.argmin(y))]),
        p_origin=(0.0, 0.0),
    )


def fit_conic(points) -> ConicMap:
    """Exactly-determined conic through five points.

    The coefficient vector spans the null space of the 5x6 design matrix
    with rows (x^2, xy, y^2, x, y, 1); a rank below 5 means the points do
    not pin down a unique conic.
    """
    if isinstance(points, PoincareSet):
        pts = points.as_array()
    else:
        pts = np.asarray(points, dtype=float)
    if pts.shape != (5, 2):
        raise ValueError(f"expected five 2-D points, got array of shape {pts.shape}")
    x, y = pts[:, 0], pts[:, 1]
    design = np.column_stack([x * x, x * y, y * y, x, y, np.ones_like(x)])
    _, s, vt = np.linalg.svd(design)
    if s[4] <= 1e-10 * max(s[0], 1.0):
        raise DegenerateConfiguration(
            "five points are rank deficient; conic not uniquely determined"
        )
    return ConicMap.from_coefficients(vt[-1])


# --- conic geometry ----------------------------------------------------------

def _classify(conic: ConicMap) -> str:
    a, b, c, d, e, f = conic.coeffs
    mat = np.array([[a, b / 2, d / 2], [b / 2, c, e / 2], [d / 2, e / 2, f]])
    det3 = float(np.linalg.det(mat))
    det2 = a * c - b * b / 4.0
    if abs(det3) < 1e-12:
        if det2 > 1e-12:
            # zero-radius ellipse: the real locus is a single point
            return "point"
        return "degenerate"
    if det2 > 1e-12:
        # real iff det3 has the opposite sign of the trace of the 2x2 block
        return "ellipse" if det3 * (a + c) < 0 else "imaginary-ellipse"
    if det2 < -1e-12:
        return "hyperbola"
    return "parabola"


@lru_cache(maxsize=512)
def _ellipse_geometry(conic: ConicMap):
    """(center, semi_axes, rotation matrix) of a real ellipse, the center of
    a point conic, or None when the conic is not ellipse-like."""
    a, b, c, d, e, f = conic.coeffs
    det2 = a * c - b * b / 4.0
    if det2 <= 1e-12:
        return None
    a33 = np.array([[a, b / 2], [b / 2, c]])
    center = np.linalg.solve(2.0 * a33, [-d, -e])
    g_center = float(conic.evaluate(center))
    lam, vecs = np.linalg.eigh(a33)
    ratios = -g_center / lam
    if g_center == 0.0 or np.all(np.abs(ratios) < 1e-16):
        return center, np.zeros(2), vecs
    if np.any(ratios <= 0):
        return None
    return center, np.sqrt(ratios), vecs


def _ellipse_points(conic: ConicMap, n: int) -> np.ndarray:
    geom = _ellipse_geometry(conic)
    center, semi, vecs = geom
    theta = np.linspace(0.0, 2.0 * np.pi, n, endpoint=False)
    local = np.column_stack([semi[0] * np.cos(theta), semi[1] * np.sin(theta)])
    return center + local @ vecs.T


def _nearest_on_ellipse(p: np.ndarray, conic: ConicMap, seeds: int, max_iter: int,
                        tol: float) -> float:
    center, semi, vecs = _ellipse_geometry(conic)
    if np.all(semi == 0.0):
        return float(np.linalg.norm(p - center))
    # work in the ellipse's axis frame
    q = vecs.T @ (p - center)
    ax, ay = semi
    theta = np.linspace(0.0, 2.0 * np.pi, seeds, endpoint=False)

    def dist2(t):
        return (ax * np.cos(t) - q[0]) ** 2 + (ay * np.sin(t) - q[1]) ** 2

    d2 = dist2(theta)
    order = np.argsort(d2)[:4]
    best = math.sqrt(float(d2.min()))
    for idx in order:
        t = float(theta[idx])
        for _ in range(max_iter):
            ct, st = math.cos(t), math.sin(t)
            rx, ry = ax * ct - q[0], ay * st - q[1]
            g1 = -rx * ax * st + ry * ay * ct        # 0.5 d/dt dist2
            g2 = -rx * ax * ct - ry * ay * st + (ax * st) ** 2 + (ay * ct) ** 2
            if g2 <= 0:
                break
            step = g1 / g2
            step = max(-0.5, min(0.5, step))
            t -= step
            if abs(step) * max(ax, ay) < tol * 1e-3:
                break
        best = min(best, math.sqrt(float(dist2(t))))
    return best


def _nearest_on_ellipse_batch(pts: np.ndarray, conic: ConicMap,
                              seeds: int = 256, max_iter: int = 50,
                              tol: float = 1e-6, refine: int = 4) -> np.ndarray:
    """Vectorized form of the ellipse nearest-point search: one seed sweep
    and Newton refinement for a whole (N, 2) probe array at once.

    Matches the scalar path to round-off; used by distance_series where
    per-sample calls would dominate the analysis runtime.
    """
    center, semi, vecs = _ellipse_geometry(conic)
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    if np.all(semi == 0.0):
        return np.linalg.norm(pts - center, axis=1)
    q = (pts - center) @ vecs
    ax, ay = semi
    theta = np.linspace(0.0, 2.0 * np.pi, seeds, endpoint=False)
    ex = ax * np.cos(theta)
    ey = ay * np.sin(theta)
    qx = q[:, 0:1]
    qy = q[:, 1:2]
    d2 = (qx - ex) ** 2 + (qy - ey) ** 2
    seed_best = d2.min(axis=1)

    k = min(refine, seeds)
    idx = np.argpartition(d2, k - 1, axis=1)[:, :k]
    t = theta[idx]
    stop = tol * 1e-3 / max(ax, ay)
    for _ in range(max_iter):
        ct, st = np.cos(t), np.sin(t)
        rx = ax * ct - qx
        ry = ay * st - qy
        g1 = -rx * ax * st + ry * ay * ct
        g2 = -rx * ax * ct - ry * ay * st + (ax * st) ** 2 + (ay * ct) ** 2
        step = np.clip(np.divide(g1, g2, out=np.zeros_like(g1),
                                 where=g2 > 0), -0.5, 0.5)
        t -= step
        if np.max(np.abs(step)) < stop:
            break
    refined = (ax * np.cos(t) - qx) ** 2 + (ay * np.sin(t) - qy) ** 2
    return np.sqrt(np.minimum(seed_best, refined.min(axis=1)))


def _locus_seed_points(p: np.ndarray, conic: ConicMap, half_width: float,
                       n: int) -> np.ndarray:
    """Sample real locus points by solving the conic, one coordinate at a
    time, on a grid of lines through a box around ``p``."""
    a, b, c, d, e, f = conic.coeffs
    found = []
    xs = np.linspace(p[0] - half_width, p[0] + half_width, n)
    ys = np.linspace(p[1] - half_width, p[1] + half_width, n)
    # solve c y^2 + (b x + e) y + (a x^2 + d x + f) = 0 for each x
    for fixed, aa, bb, cc, axis in (
        (xs, c, b * xs + e, a * xs * xs + d * xs + f, 0),
        (ys, a, b * ys + d, c * ys * ys + e * ys + f, 1),
    ):
        if abs(aa) > _COEFF_TOL:
            disc = bb * bb - 4.0 * aa * cc
            ok = disc >= 0
            root = np.sqrt(disc[ok])
            for sign in (1.0, -1.0):
                sol = (-bb[ok] + sign * root) / (2.0 * aa)
                pts = np.column_stack([fixed[ok], sol]) if axis == 0 else \
                    np.column_stack([sol, fixed[ok]])
                found.append(pts)
        else:
            ok = np.abs(bb) > _COEFF_TOL
            sol = -cc[ok] / bb[ok]
            pts = np.column_stack([fixed[ok], sol]) if axis == 0 else \
                np.column_stack([sol, fixed[ok]])
            found.append(pts)
    if not found:
        return np.empty((0, 2))
    return np.vstack(found)


def _lagrange_refine_batch(pts: np.ndarray, q0: np.ndarray, conic: ConicMap,
                           max_iter: int) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized Newton on the nearest-point stationarity system for many
    (probe, seed) pairs at once; returns refined points and a mask of
    candidates that actually landed on the curve.

    The Jacobian [[1+2a lam, b lam, gx], [b lam, 1+2c lam, gy],
    [gx, gy, 0]] is symmetric, so each step is a closed-form adjugate
    solve instead of a stacked LAPACK call.
    """
    a, b, c, _, _, _ = conic.coeffs
    px, py = pts[:, 0], pts[:, 1]
    x, y = q0[:, 0].copy(), q0[:, 1].copy()

    def grads(x, y):
        return (2 * a * x + b * y + conic.coeffs[3],
                b * x + 2 * c * y + conic.coeffs[4])

    gx, gy = grads(x, y)
    gn2 = gx * gx + gy * gy
    lam = np.divide(-(x - px) * gx - (y - py) * gy, gn2,
                    out=np.zeros_like(gn2), where=gn2 > 0)
    for _ in range(max_iter):
        gx, gy = grads(x, y)
        g = conic.evaluate(np.column_stack([x, y]))
        r0 = x - px + lam * gx
        r1 = y - py + lam * gy
        aa = 1.0 + 2.0 * a * lam
        bb = b * lam
        cc = 1.0 + 2.0 * c * lam
        det = -aa * gy * gy + 2.0 * bb * gx * gy - cc * gx * gx
        ok = np.abs(det) > 1e-300
        inv_det = np.divide(1.0, det, out=np.zeros_like(det), where=ok)
        # adjugate of the symmetric Jacobian (third diagonal entry is 0)
        s0 = (-gy * gy * r0 + gx * gy * r1 + (bb * gy - cc * gx) * g) * inv_det
        s1 = (gx * gy * r0 - gx * gx * r1 + (bb * gx - aa * gy) * g) * inv_det
        s2 = ((bb * gy - cc * gx) * r0 + (bb * gx - aa * gy) * r1
              + (aa * cc - bb * bb) * g) * inv_det
        x = x - s0
        y = y - s1
        lam = lam - s2
        bad = ~np.isfinite(x) | ~np.isfinite(y) | ~np.isfinite(lam)
        if bad.any():
            x[bad], y[bad], lam[bad] = q0[bad, 0], q0[bad, 1], 0.0
        if max(np.max(np.abs(s0[ok]), initial=0.0),
               np.max(np.abs(s1[ok]), initial=0.0)) < 1e-12:
            break
    residual = np.abs(conic.evaluate(np.column_stack([x, y])))
    valid = np.isfinite(residual) & (residual < 1e-7)
    return np.column_stack([x, y]), valid


def _distance_batch_general(pts: np.ndarray, conic: ConicMap,
                            seeds: int, max_iter: int) -> np.ndarray | None:
    """Distances from many probes to a non-elliptical conic: one shared
    locus sampling over the probes' bounding box, then batched Newton on
    the best candidates per probe.  None when the shared box finds no real
    locus points (the caller falls back to the per-probe search)."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    margin = 8.0 * (1.0 + float(np.max(np.linalg.norm(pts, axis=1))))
    lo = pts.min(axis=0) - margin
    hi = pts.max(axis=0) + margin
    box_center = 0.5 * (lo + hi)
    half_width = 0.5 * float(np.max(hi - lo))
    locus = _locus_seed_points(box_center, conic, half_width, 2 * seeds)
    if len(locus) == 0:
        return None
    locus = locus[np.all(np.isfinite(locus), axis=1)]
    if len(locus) == 0:
        return None

    k = 6
    out = np.empty(len(pts))
    chunk_size = max(1, 4_000_000 // max(len(locus), 1))
    for start in range(0, len(pts), chunk_size):
        chunk = pts[start:start + chunk_size]
        d2 = ((chunk ** 2).sum(axis=1)[:, None]
              - 2.0 * chunk @ locus.T + (locus ** 2).sum(axis=1)[None, :])
        best_seed = np.sqrt(np.maximum(d2.min(axis=1), 0.0))
        take = min(k, len(locus))
        idx = np.argpartition(d2, take - 1, axis=1)[:, :take]
        rep = np.repeat(chunk, take, axis=0)
        cand = locus[idx.ravel()]
        refined, valid = _lagrange_refine_batch(rep, cand, conic, max_iter)
        dist = np.linalg.norm(refined - rep, axis=1)
        dist[~valid] = np.inf
        out[start:start + len(chunk)] = np.minimum(
            best_seed, dist.reshape(len(chunk), take).min(axis=1))
    return out


def _refine_lagrange(p: np.ndarray, conic: ConicMap, q0: np.ndarray,
                     max_iter: int, tol: float) -> np.ndarray | None:
    """Newton iteration on the stationarity system of constrained nearest
    point: (q - p) + lam * grad g(q) = 0, g(q) = 0."""
    a, b, c, _, _, _ = conic.coeffs
    q = q0.astype(float).copy()
    grad = conic.gradient(q)
    gnorm2 = float(grad @ grad)
    if gnorm2 == 0.0:
        return None
    lam = -float((q - p) @ grad) / gnorm2
    z = np.array([q[0], q[1], lam])
    for _ in range(max_iter):
        grad = conic.gradient(z[:2])
        g = float(conic.evaluate(z[:2]))
        r = np.array([
            z[0] - p[0] + z[2] * grad[0],
            z[1] - p[1] + z[2] * grad[1],
            g,
        ])
        jac = np.array([
            [1.0 + 2.0 * a * z[2], b * z[2], grad[0]],
            [b * z[2], 1.0 + 2.0 * c * z[2], grad[1]],
            [grad[0], grad[1], 0.0],
        ])
        try:
            step = np.linalg.solve(jac, r)
        except np.linalg.LinAlgError:
            return None
        z -= step
        if not np.all(np.isfinite(z)):
            return None
        if np.linalg.norm(step[:2]) < tol * 1e-3:
            break
    if abs(float(conic.evaluate(z[:2]))) > 1e-7:
        return None
    return z[:2]


def distance_to_conic(p, conic: ConicMap, tol: float = 1e-6,
                      seeds: int = 256, max_iter: int = 50) -> float:
    """Minimum Euclidean distance from ``p`` to the conic's real locus.

    Ellipses get a parametric seed sweep; other conic types are seeded from
    a line-by-line solve over an expanding box around the probe.  Both paths
    finish with Newton refinement of the stationarity conditions.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    p = np.asarray(p, dtype=float).reshape(2)
    kind = conic.kind
    if kind == "imaginary-ellipse":
        raise EmptyLocus("conic has no real points")
    if kind in ("ellipse", "point"):
        geom = _ellipse_geometry(conic)
        if geom is not None:
            return _nearest_on_ellipse(p, conic, seeds, max_iter, tol)

    half_width = 8.0 * (1.0 + float(np.linalg.norm(p)))
    for _ in range(3):
        locus = _locus_seed_points(p, conic, half_width, seeds)
        if len(locus):
            break
        half_width *= 8.0
    else:
        raise EmptyLocus("no real points found near the probe")

    dists = np.linalg.norm(locus - p, axis=1)
    best = float(dists.min())
    for idx in np.argsort(dists)[:8]:
        refined = _refine_lagrange(p, conic, locus[idx], max_iter, tol)
        if refined is not None:
            best = min(best, float(np.linalg.norm(refined - p)))
    return best


def exterior_distance(p, conic: ConicMap, tol: float = 1e-6) -> float:
    """Distance to the conic, counting the bounded interior of a real
    ellipse as zero.

    The sway mapping bounds the normal operating region; only excursions
    outside it are deviations.  Conics without a bounded interior fall back
    to the plain locus distance.
    """
    p = np.asarray(p, dtype=float).reshape(2)
    if conic.kind == "ellipse":
        center, _, _ = _ellipse_geometry(conic)
        g_p = float(conic.evaluate(p))
        g_c = float(conic.evaluate(center))
        if g_p == 0.0 or g_p * g_c > 0.0:
            return 0.0
    return distance_to_conic(p, conic, tol=tol)


def distance_to_point_set(p, points: PoincareSet | np.ndarray) -> float:
    """Euclidean distance from ``p`` to the nearest of the mapped points.

    Alternative deviation metric: nearest of the five identified points
    rather than nearest point of the fitted curve.
    """
    pts = points.as_array() if isinstance(points, PoincareSet) else \
        np.asarray(points, dtype=float)
    p = np.asarray(p, dtype=float).reshape(2)
    return float(np.linalg.norm(pts - p, axis=1).min())


def distance_series(points: np.ndarray, conic: ConicMap,
                    metric: str = "curve",
                    poincare: PoincareSet | None = None,
                    tol: float = 1e-6) -> np.ndarray:
    """Per-sample deviation of a COP series from the identified mapping."""
    pts = np.asarray(points, dtype=float)
    if metric == "curve":
        kind = conic.kind
        if kind in ("ellipse", "point") and \
                _ellipse_geometry(conic) is not None:
            return _nearest_on_ellipse_batch(pts, conic, tol=tol)
        if kind in ("hyperbola", "parabola", "degenerate"):
            batch = _distance_batch_general(pts, conic, seeds=256,
                                            max_iter=50)
            if batch is not None:
                return batch
        return np.array([distance_to_conic(q, conic, tol=tol) for q in pts])
    if metric == "points":
        if poincare is None:
            raise ValueError("metric='points' needs the extracted point set")
        ref = poincare.as_array()
        diff = pts[:, None, :] - ref[None, :, :]
        return np.linalg.norm(diff, axis=2).min(axis=1)
    raise ValueError(f"unknown distance metric {metric!r}")
