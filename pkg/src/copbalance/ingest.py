"""Force-platform trial ingestion.

Record format (UTF-8 text): header lines ``# key: value`` followed by data
rows ``t fx fy fz mx my mz [copx copy]``, whitespace- or comma-delimited.
Units: seconds, newtons, newton-meters, centimeters.  The two COP columns
are optional; when absent the COP is derived from the wrench.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import signal

from .errors import (
    CutoffOutOfRange,
    MalformedHeader,
    MalformedRow,
    NoLoad,
    NonMonotonicTime,
    NonUniformSampling,
    RowArity,
)

# Max deviation from uniform sample spacing, seconds.
TIME_TOLERANCE = 1e-6

# Default zero-phase Butterworth settings.  The source dataset's documented
# 0.1 Hz cutoff would remove nearly all sway content, so the default is a
# conventional 10 Hz; pass cutoff=0.1 to reproduce the documented value.
DEFAULT_CUTOFF_HZ = 10.0
DOCUMENTED_CUTOFF_HZ = 0.1
DEFAULT_FILTER_ORDER = 4

DEFAULT_MIN_LOAD_N = 10.0

_WRENCH_COLUMNS = 7   # t fx fy fz mx my mz
_FULL_COLUMNS = 9     # ... copx copy


@dataclass(frozen=True)
class WrenchSample:
    """One force-platform sample: force/moment wrench plus optional COP."""

    t: float
    f: tuple[float, float, float]
    m: tuple[float, float, float]
    cop: tuple[float, float] | None = None


@dataclass(frozen=True)
class Trial:
    """One recording: ordered samples plus subject/condition metadata."""

    id: str
    sample_rate: float
    samples: tuple[WrenchSample, ...]
    meta: dict[str, str] = field(default_factory=dict)

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate

    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.samples])

    def recorded_cop(self) -> np.ndarray:
        """(N, 2) recorded COP in cm, NaN rows where the channel is absent."""
        out = np.full((len(self.samples), 2), np.nan)
        for i, s in enumerate(self.samples):
            if s.cop is not None:
                out[i] = s.cop
        return out


def parse_trial(raw: bytes | str) -> Trial:
    """Parse a record into a Trial.

    The sample rate is measured from the time column (single-sample records
    must carry a ``sample_rate`` header).  Header values are kept verbatim
    in ``meta``; the ``id`` key names the trial.
    """
    text = raw.decode("utf-8") if isinstance(raw, bytes) else raw
    meta: dict[str, str] = {}
    rows: list[list[float]] = []
    arity: int | None = None

    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("#"):
            body = stripped[1:].strip()
            if ":" not in body:
                raise MalformedHeader(
                    f"line {lineno}: header must be '# key: value', got {stripped!r}"
                )
            key, _, value = body.partition(":")
            if not key.strip():
                raise MalformedHeader(f"line {lineno}: empty header key")
            meta[key.strip()] = value.strip()
            continue
        tokens = stripped.replace(",", " ").split()
        if arity is None:
            if len(tokens) not in (_WRENCH_COLUMNS, _FULL_COLUMNS):
                raise RowArity(lineno, f"{_WRENCH_COLUMNS} or {_FULL_COLUMNS}",
                               len(tokens))
            arity = len(tokens)
        elif len(tokens) != arity:
            raise RowArity(lineno, arity, len(tokens))
        try:
            rows.append([float(tok) for tok in tokens])
        except ValueError as exc:
            raise MalformedRow(f"line {lineno}: {exc}") from None

    if not rows:
        raise MalformedHeader("record contains no data rows")

    t = np.array([r[0] for r in rows])
    if len(t) > 1:
        dt = np.diff(t)
        if np.any(dt < -TIME_TOLERANCE):
            bad = int(np.argmax(dt < -TIME_TOLERANCE)) + 2
            raise NonMonotonicTime(f"time decreases at data row {bad}")
        mean_dt = float(t[-1] - t[0]) / (len(t) - 1)
        if mean_dt <= 0:
            raise NonMonotonicTime("time column does not advance")
        if np.any(np.abs(dt - mean_dt) > TIME_TOLERANCE):
            raise NonUniformSampling(
                f"sample spacing varies by more than {TIME_TOLERANCE} s"
            )
        sample_rate = 1.0 / mean_dt
    else:
        if "sample_rate" not in meta:
            raise MalformedHeader(
                "single-row record needs a 'sample_rate' header"
            )
        sample_rate = float(meta["sample_rate"])
        if sample_rate <= 0:
            raise MalformedHeader("sample_rate must be positive")

    samples = []
    for r in rows:
        cop = None
        if arity == _FULL_COLUMNS and np.isfinite(r[7]) and np.isfinite(r[8]):
            cop = (r[7], r[8])
        samples.append(WrenchSample(
            t=r[0], f=(r[1], r[2], r[3]), m=(r[4], r[5], r[6]), cop=cop,
        ))

    return Trial(
        id=meta.get("id", "unknown"),
        sample_rate=sample_rate,
        samples=tuple(samples),
        meta=meta,
    )


def parse_metadata_sidecar(text: str) -> dict[str, str]:
    """BDSinfo-style sidecar: one ``key: value`` (or ``key = value``) pair
    per line, values kept as opaque strings."""
    out: dict[str, str] = {}
    for line in text.splitlines():
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        sep = ":" if ":" in stripped else "="
        if sep not in stripped:
            raise MalformedHeader(
                f"sidecar line is not 'key: value': {stripped!r}"
            )
        key, _, value = stripped.partition(sep)
        out[key.strip()] = value.strip()
    return out


def with_sidecar(trial: Trial, sidecar: dict[str, str]) -> Trial:
    """Trial with sidecar fields merged in (record header wins on clashes)."""
    return Trial(id=trial.id, sample_rate=trial.sample_rate,
                 samples=trial.samples, meta={**sidecar, **trial.meta})


def serialize_trial(trial: Trial) -> str:
    """Inverse of parse_trial; floats are written so they round-trip exactly."""
    lines = []
    if "id" not in trial.meta and trial.id != "unknown":
        lines.append(f"# id: {trial.id}")
    if "sample_rate" not in trial.meta and len(trial.samples) == 1:
        lines.append(f"# sample_rate: {trial.sample_rate!r}")
    for key, value in trial.meta.items():
        lines.append(f"# {key}: {value}")
    with_cop = any(s.cop is not None for s in trial.samples)
    for s in trial.samples:
        fields = [s.t, *s.f, *s.m]
        if with_cop:
            fields += list(s.cop) if s.cop is not None else [float("nan")] * 2
        lines.append(" ".join(repr(float(v)) for v in fields))
    return "\n".join(lines) + "\n"


def cop_from_wrench(sample: WrenchSample,
                    min_load: float = DEFAULT_MIN_LOAD_N) -> np.ndarray:
    """COP in cm from the force/moment wrench, plate origin at the sensor
    center: cop_x = -my/fz, cop_y = mx/fz (meters, converted to cm)."""
    fz = sample.f[2]
    if abs(fz) < min_load:
        raise NoLoad(f"|fz| = {abs(fz):.3g} N below min_load {min_load} N")
    return np.array([-sample.m[1] / fz * 100.0, sample.m[0] / fz * 100.0])


def cop_series(trial: Trial, source: str = "auto",
               min_load: float = DEFAULT_MIN_LOAD_N) -> np.ndarray:
    """(N, 2) COP series in cm.  ``source`` is ``recorded``, ``wrench``, or
    ``auto`` (recorded where present, wrench otherwise).  Samples with no
    usable COP are dropped."""
    if source not in ("auto", "recorded", "wrench"):
        raise ValueError(f"unknown COP source {source!r}")
    out = []
    for s in trial.samples:
        if source in ("auto", "recorded") and s.cop is not None:
            out.append(s.cop)
            continue
        if source in ("auto", "wrench"):
            try:
                out.append(cop_from_wrench(s, min_load=min_load))
            except NoLoad:
                continue
    return np.array(out, dtype=float).reshape(-1, 2)


def lowpass(values, sample_rate: float, cutoff: float,
            order: int = DEFAULT_FILTER_ORDER) -> np.ndarray:
    """Zero-phase Butterworth low-pass (forward-backward, so the quoted
    order applies to each pass)."""
    if not 0.0 < cutoff < sample_rate / 2.0:
        raise CutoffOutOfRange(
            f"cutoff {cutoff} Hz outside (0, {sample_rate / 2}) Hz"
        )
    if order not in (2, 4):
        raise ValueError(f"filter order must be 2 or 4, got {order}")
    b, a = signal.butter(order, cutoff, btype="low", fs=sample_rate)
    return signal.filtfilt(b, a, np.asarray(values, dtype=float))


def filtered_cop(trial: Trial, source: str = "auto",
                 cutoff: float | None = DEFAULT_CUTOFF_HZ,
                 order: int = DEFAULT_FILTER_ORDER,
                 min_load: float = DEFAULT_MIN_LOAD_N) -> np.ndarray:
    """COP series with each axis low-pass filtered (cutoff=None disables)."""
    cop = cop_series(trial, source=source, min_load=min_load)
    if cutoff is None or len(cop) < 2:
        return cop
    return np.column_stack([
        lowpass(cop[:, 0], trial.sample_rate, cutoff, order),
        lowpass(cop[:, 1], trial.sample_rate, cutoff, order),
    ])
