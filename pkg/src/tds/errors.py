"""Error types shared across the library."""


class TdsError(Exception):
    """Base class for all library errors."""


class SingularPivot(TdsError):
    """A forward-elimination pivot fell below the pivot floor."""


class SingularCorrection(TdsError):
    """The rank-1 cyclic correction denominator is numerically zero."""


class SingularMatrix(TdsError):
    """Dense factorization failed; the system is singular."""


class SingularPair(TdsError):
    """A cross-boundary 2x2 system has a near-zero determinant."""


class TruncationUnsafe(TdsError):
    """A dropped coupling exceeds the configured truncation threshold.

    Carries the offending magnitude so callers can decide whether to
    retry with a larger subdomain or accept a weaker error bound.
    """

    def __init__(self, max_dropped, threshold):
        self.max_dropped = float(max_dropped)
        self.threshold = float(threshold)
        super().__init__(
            f"dropped coupling magnitude {self.max_dropped:.3e} exceeds "
            f"threshold {self.threshold:.3e}; subdomains are too small for "
            f"the dominance strength"
        )


class NotDominantWarning(UserWarning):
    """The system is not strictly diagonally dominant."""


class DivisibilityError(TdsError):
    """Transverse line count is not divisible by the group width."""


class OutOfBounds(TdsError):
    """A grid index lies outside the layout extents."""


class NoNeighbor(TdsError):
    """A rank tried to communicate across a missing topology edge."""


class TagMismatch(TdsError):
    """A received message carries an unexpected kind or epoch tag."""


class RankPanic(TdsError):
    """One or more rank bodies raised; wraps the per-rank exceptions."""

    def __init__(self, failures):
        self.failures = dict(failures)
        detail = "; ".join(f"rank {r}: {e!r}" for r, e in sorted(self.failures.items()))
        super().__init__(f"{len(self.failures)} rank(s) failed: {detail}")


class ConfigError(TdsError):
    """Invalid benchmark or command-line configuration."""
