"""Core value types: tridiagonal systems, right-hand-side batches, partitions.

A tridiagonal system is stored as three coefficient arrays

        | b_1  c_1            a_1 |
        | a_2  b_2  c_2           |
    A = |      a_3  b_3  c_3      |
        |        ...  ...  ...    |
        | c_n            a_n  b_n |

where the corner entries a_1 (row 1, column n) and c_n (row n, column 1)
are meaningful only when the system is periodic.
"""

from dataclasses import dataclass, field

import numpy as np


def _as_float_vector(values, name, n=None):
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if n is not None and arr.shape[0] != n:
        raise ValueError(f"{name} has length {arr.shape[0]}, expected {n}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


@dataclass(frozen=True)
class TridiagonalSystem:
    """Immutable tridiagonal (optionally cyclic) coefficient matrix."""

    lower: np.ndarray
    diag: np.ndarray
    upper: np.ndarray
    periodic: bool = False

    def __post_init__(self):
        diag = _as_float_vector(self.diag, "diag")
        n = diag.shape[0]
        if n < 3:
            raise ValueError(f"system size must be at least 3, got {n}")
        if np.any(diag == 0.0):
            raise ValueError("diagonal entries must be nonzero")
        lower = _as_float_vector(self.lower, "lower", n)
        upper = _as_float_vector(self.upper, "upper", n)
        for name, arr in (("lower", lower), ("diag", diag), ("upper", upper)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n(self):
        return self.diag.shape[0]

    def effective_lower(self):
        """Lower couplings with the unused corner zeroed for open systems."""
        if self.periodic:
            return self.lower
        a = self.lower.copy()
        a[0] = 0.0
        return a

    def effective_upper(self):
        """Upper couplings with the unused corner zeroed for open systems."""
        if self.periodic:
            return self.upper
        c = self.upper.copy()
        c[-1] = 0.0
        return c

    def dense(self):
        """Materialize the full n-by-n matrix, including cyclic corners."""
        a = self.effective_lower()
        c = self.effective_upper()
        mat = np.diag(self.diag)
        mat += np.diag(a[1:], -1)
        mat += np.diag(c[:-1], 1)
        if self.periodic:
            mat[0, -1] += a[0]
            mat[-1, 0] += c[-1]
        return mat


@dataclass(frozen=True)
class RhsBatch:
    """A batch of m independent right-hand sides over one shared system."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.ndim == 1:
            arr = arr[np.newaxis, :]
        if arr.ndim != 2:
            raise ValueError(f"values must be 2d (m, n), got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"empty batch shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("values contain non-finite entries")
        arr = np.ascontiguousarray(arr)
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def m(self):
        return self.values.shape[0]

    @property
    def n(self):
        return self.values.shape[1]


@dataclass(frozen=True)
class SubdomainPartition:
    """Contiguous split of n rows into P subdomains, each at least 4 rows.

    P=1 is accepted as the degenerate single-subdomain case; the
    distributed solvers treat it by delegating to the serial path.
    """

    local_sizes: tuple = field()

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.local_sizes)
        if len(sizes) < 1:
            raise ValueError("partition needs at least one subdomain")
        if any(s < 4 for s in sizes):
            raise ValueError(f"every subdomain needs at least 4 rows, got {sizes}")
        object.__setattr__(self, "local_sizes", sizes)

    @property
    def rank_count(self):
        return len(self.local_sizes)

    @property
    def n(self):
        return sum(self.local_sizes)

    def offsets(self):
        """Start row of each subdomain."""
        out = [0]
        for s in self.local_sizes[:-1]:
            out.append(out[-1] + s)
        return tuple(out)

    @staticmethod
    def balanced(n, rank_count):
        """Split n rows into rank_count nearly equal subdomains."""
        if rank_count < 1:
            raise ValueError("rank_count must be positive")
        base, extra = divmod(n, rank_count)
        sizes = [base + (1 if k < extra else 0) for k in range(rank_count)]
        return SubdomainPartition(tuple(sizes))


def is_diagonally_dominant(sys):
    """Strict row dominance |b_i| > |a_i| + |c_i|, corners included if cyclic."""
    return dominance_margin(sys) > 0.0


def dominance_margin(sys):
    """min over rows of |b_i| - |a_i| - |c_i| (the slack of strict dominance)."""
    a = sys.effective_lower()
    c = sys.effective_upper()
    return float(np.min(np.abs(sys.diag) - np.abs(a) - np.abs(c)))
