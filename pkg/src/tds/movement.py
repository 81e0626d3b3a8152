"""Logical data-movement model for solver and transport kernels.

Counts are whole-field traversals per kernel call: how many times a
field-sized array is read (R), written without being read (W), or both
read and written (RW). Byte traffic follows from the traversal count;
on write-allocate caches a pure write still costs a read of the target
line, so W counts double there.

The catalogs below hold the per-point counts for the solver kernels
(standard and cached-coefficient variants) and the per-call counts for
the transport-equation pipeline on the two platform models.
"""

from dataclasses import dataclass

import numpy as np

BYTES_PER_VALUE = 8


@dataclass(frozen=True)
class KernelMovement:
    """Field traversals of one kernel call, plus rough per-point work."""

    reads: int
    writes: int
    read_writes: int
    flops: int = 0

    def traversals(self, write_allocate=False):
        write_cost = 2 if write_allocate else 1
        return self.reads + write_cost * self.writes + 2 * self.read_writes

    def bytes_per_point(self, write_allocate=False):
        return BYTES_PER_VALUE * self.traversals(write_allocate)


@dataclass(frozen=True)
class PhaseMovement:
    """One solver phase with its standard and cached-coefficient counts.

    The cached variant keeps the preprocessed coefficient arrays
    resident (small enough for cache at the batch sizes of interest),
    dropping their traversals from the per-solve cost.
    """

    phase: str
    standard: KernelMovement
    cached: KernelMovement

    def pick(self, cached=False):
        return self.cached if cached else self.standard


SOLVER_MOVEMENT = {
    "thomas": (
        PhaseMovement("solve", KernelMovement(1, 1, 1, 14), KernelMovement(1, 1, 0, 14)),
    ),
    "periodic_thomas": (
        PhaseMovement("solve", KernelMovement(1, 1, 2, 16), KernelMovement(1, 1, 0, 16)),
    ),
    "distd2": (
        PhaseMovement("decoupling", KernelMovement(1, 1, 1, 14), KernelMovement(1, 1, 0, 14)),
        PhaseMovement("substitution", KernelMovement(0, 0, 1, 4), KernelMovement(0, 0, 1, 4)),
    ),
    # The subdomain algorithms share DistD2's elimination + substitution
    # shape; their logical per-point counts are taken as identical.
    "modified_thomas": (
        PhaseMovement("decoupling", KernelMovement(1, 1, 1, 14), KernelMovement(1, 1, 0, 14)),
        PhaseMovement("substitution", KernelMovement(0, 0, 1, 4), KernelMovement(0, 0, 1, 4)),
    ),
    "pdd": (
        PhaseMovement("decoupling", KernelMovement(1, 1, 1, 14), KernelMovement(1, 1, 0, 14)),
        PhaseMovement("substitution", KernelMovement(0, 0, 1, 4), KernelMovement(0, 0, 1, 4)),
    ),
}

# Memory-bound reference kernels for calibrating achievable bandwidth.
STREAM_COPY = KernelMovement(1, 1, 0, 0)
SCALE_IN_PLACE = KernelMovement(0, 0, 1, 1)

# Transport-equation pipeline, per-call counts and call counts for one
# full right-hand-side evaluation. The fused model keeps intermediate
# derivatives in registers (wider reads, no coefficient reuse pass);
# the blocked model reuses cached coefficients (fewer read-writes) but
# pays write-allocate on stores.
TRANSPORT_FUSED = {
    "offdiag": (KernelMovement(6, 4, 3), 6),
    "diag": (KernelMovement(5, 4, 3), 3),
    "reorder": (KernelMovement(1, 1, 0), 6),
    "accumulate": (KernelMovement(1, 0, 1), 6),
}
TRANSPORT_BLOCKED = {
    "offdiag": (KernelMovement(5, 3, 1), 6),
    "diag": (KernelMovement(4, 3, 1), 3),
    "reorder": (KernelMovement(1, 1, 0), 6),
    "accumulate": (KernelMovement(1, 0, 1), 6),
}


def solver_bytes_per_point(solver, write_allocate=True, cached=False):
    """Logical bytes moved per grid point for one solve."""
    phases = SOLVER_MOVEMENT[solver]
    return sum(p.pick(cached).bytes_per_point(write_allocate) for p in phases)


@dataclass
class LedgerEntry:
    name: str
    category: str
    movement: KernelMovement
    calls: int = 0


class MovementLedger:
    """Accumulates kernel calls and derives traversal/byte totals.

    write_allocate applies the store-allocates-a-read-line multiplier
    to every pure write when totalling.
    """

    def __init__(self, write_allocate=False):
        self.write_allocate = write_allocate
        self.entries = {}

    def record(self, name, category, movement, calls=1):
        entry = self.entries.get(name)
        if entry is None:
            entry = LedgerEntry(name, category, movement)
            self.entries[name] = entry
        elif entry.movement != movement or entry.category != category:
            raise ValueError(f"conflicting movement for kernel {name!r}")
        entry.calls += calls

    def call_count(self, name):
        entry = self.entries.get(name)
        return 0 if entry is None else entry.calls

    def traversals(self, category=None):
        return sum(
            e.calls * e.movement.traversals(self.write_allocate)
            for e in self.entries.values()
            if category is None or e.category == category
        )

    def fraction(self, category):
        total = self.traversals()
        if total == 0:
            return 0.0
        return self.traversals(category) / total

    def totals(self):
        reads = sum(e.calls * e.movement.reads for e in self.entries.values())
        writes = sum(e.calls * e.movement.writes for e in self.entries.values())
        rws = sum(e.calls * e.movement.read_writes for e in self.entries.values())
        return {"reads": reads, "writes": writes, "read_writes": rws,
                "traversals": self.traversals()}


def catalog_ledger(catalog, write_allocate):
    """Ledger prefilled from a (movement, calls) catalog."""
    ledger = MovementLedger(write_allocate)
    for name, (movement, calls) in catalog.items():
        ledger.record(name, name, movement, calls)
    return ledger


def measured_bandwidth(bytes_moved, runtime_s):
    """Achieved bandwidth in bytes/s; NaN when the run was too fast to time."""
    if runtime_s <= 0:
        return float("nan")
    return bytes_moved / runtime_s


def percent_of_peak(achieved_bytes_per_s, peak_bytes_per_s):
    if peak_bytes_per_s <= 0:
        return float("nan")
    return 100.0 * achieved_bytes_per_s / peak_bytes_per_s


def stream_copy_bandwidth(points, repeats=5):
    """Measured copy bandwidth over a points-sized buffer, bytes/s."""
    import time

    src = np.random.default_rng(0).random(points)
    dst = np.empty_like(src)
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        np.copyto(dst, src)
        best = min(best, time.perf_counter() - t0)
    moved = STREAM_COPY.bytes_per_point() * points
    return measured_bandwidth(moved, best)
