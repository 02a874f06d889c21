"""Exception types shared across the package.

Every error carries a ``category`` used by the service and CLI to map
failures onto HTTP statuses / exit codes:

* ``config``  - bad options, unusable configuration (CLI exit 2)
* ``data``    - unparseable or degenerate input data (CLI exit 3)
* ``runtime`` - a computation that ran but could not produce a result
  (CLI exit 4)
"""


class BalanceError(Exception):
    category = "data"


class ConfigError(BalanceError):
    category = "config"


# --- ingest ---------------------------------------------------------------

class MalformedHeader(BalanceError):
    """Record header line is not of the form ``# key: value``."""


class RowArity(BalanceError):
    """A data row has the wrong number of columns."""

    def __init__(self, line_number: int, expected, got: int):
        self.line_number = line_number
        self.expected = expected
        self.got = got
        super().__init__(
            f"line {line_number}: expected {expected} columns, got {got}"
        )


class MalformedRow(BalanceError):
    """A data row contains a token that is not a number."""


class NonMonotonicTime(BalanceError):
    """Time column decreases between consecutive rows."""


class NonUniformSampling(BalanceError):
    """Sample spacing deviates from the trial's rate by more than 1e-6 s."""


class NoLoad(BalanceError):
    """Vertical force too small to derive a center of pressure."""


class CutoffOutOfRange(ConfigError):
    """Low-pass cutoff outside (0, Nyquist)."""


# --- phase ----------------------------------------------------------------

class TooFewSamples(BalanceError):
    """Trajectory construction needs at least two valid COP samples."""


class DegenerateTrajectory(BalanceError):
    """Trajectory has no extent on one or both axes."""


class DegenerateConfiguration(BalanceError):
    """Five points do not determine a unique conic (design matrix rank < 5)."""


class EmptyLocus(BalanceError):
    """The conic has no real points, so no distance is defined."""


# --- control --------------------------------------------------------------

class NoRuleFires(BalanceError):
    """All rule activations are zero; the fuzzy config is inconsistent."""


class NoUltimateGain(BalanceError):
    category = "runtime"


class NoDecayMeasurement(BalanceError):
    category = "runtime"


# --- zones ----------------------------------------------------------------

class EmptySeries(BalanceError):
    """Occupancy requested on an empty COP series."""


# --- plant ----------------------------------------------------------------

class Fall(BalanceError):
    """Lean angle reached +/- pi/2; the simulated stance collapsed."""

    category = "runtime"

    def __init__(self, time: float, theta: float):
        self.time = time
        self.theta = theta
        super().__init__(f"fall at t={time:.3f} s (theta={theta:.3f} rad)")
