"""In-process distributed-memory simulation: ranks, neighbor messages.

Ranks form a path (open) or ring (cyclic) and may only talk to their
immediate neighbors. Each directed edge carries a FIFO queue with one
sender and one receiver, so message order is fully determined by the
protocol and runs replay deterministically. The same interface could be
backed by a real message-passing runtime without touching solver code.
"""

import queue
import threading
from dataclasses import dataclass, field

import numpy as np

from .errors import NoNeighbor, RankPanic, TagMismatch

# Message kinds: Halo*/Boundary* are the two solver rounds (named for the
# side of the receiver they fill); Gather/Scatter serve the testing-only
# relay collectives.
HALO_LOW = "halo_low"
HALO_HIGH = "halo_high"
BOUNDARY_LOW = "boundary_low"
BOUNDARY_HIGH = "boundary_high"
GATHER = "gather"
SCATTER = "scatter"

RECV_TIMEOUT = 60.0


@dataclass(frozen=True)
class NeighborMessage:
    kind: str
    payload: np.ndarray
    tag: int


@dataclass
class RankContext:
    """Per-rank view of the topology plus message accounting."""

    rank_id: int
    rank_count: int
    cyclic: bool
    messages_sent: int = 0
    bytes_sent: int = 0
    exchange_rounds: int = 0
    epoch: int = 0
    _from_prev: queue.Queue = field(default_factory=queue.Queue, repr=False)
    _from_next: queue.Queue = field(default_factory=queue.Queue, repr=False)
    _prev: "RankContext" = field(default=None, repr=False)
    _next: "RankContext" = field(default=None, repr=False)

    @property
    def has_prev(self):
        return self._prev is not None

    @property
    def has_next(self):
        return self._next is not None

    def begin_solve(self):
        self.epoch += 1
        return self.epoch

    def send_prev(self, kind, payload, tag):
        if self._prev is None:
            raise NoNeighbor(f"rank {self.rank_id} has no previous neighbor")
        payload = np.ascontiguousarray(payload, dtype=np.float64)
        self._prev._from_next.put(NeighborMessage(kind, payload, tag))
        self.messages_sent += 1
        self.bytes_sent += payload.nbytes

    def send_next(self, kind, payload, tag):
        if self._next is None:
            raise NoNeighbor(f"rank {self.rank_id} has no next neighbor")
        payload = np.ascontiguousarray(payload, dtype=np.float64)
        self._next._from_prev.put(NeighborMessage(kind, payload, tag))
        self.messages_sent += 1
        self.bytes_sent += payload.nbytes

    def _recv(self, inbox, expect_kind, expect_tag, side):
        if (side == "prev" and not self.has_prev) or (side == "next" and not self.has_next):
            raise NoNeighbor(f"rank {self.rank_id} has no {side} neighbor")
        try:
            msg = inbox.get(timeout=RECV_TIMEOUT)
        except queue.Empty:
            raise TimeoutError(
                f"rank {self.rank_id} timed out waiting for {expect_kind} from {side}"
            ) from None
        if msg.kind != expect_kind or (expect_tag is not None and msg.tag != expect_tag):
            raise TagMismatch(
                f"rank {self.rank_id} expected {expect_kind}/tag {expect_tag}, "
                f"got {msg.kind}/tag {msg.tag}"
            )
        return msg.payload

    def recv_prev(self, expect_kind, expect_tag=None):
        return self._recv(self._from_prev, expect_kind, expect_tag, "prev")

    def recv_next(self, expect_kind, expect_tag=None):
        return self._recv(self._from_next, expect_kind, expect_tag, "next")


def spawn_ranks(rank_count, cyclic, body):
    """Run `body(ctx)` on every rank; return the per-rank results.

    Rank bodies run on their own threads (a single rank runs inline).
    Exceptions are collected and re-raised together as RankPanic.
    """
    if rank_count < 1:
        raise ValueError("rank_count must be positive")
    contexts = [RankContext(r, rank_count, cyclic) for r in range(rank_count)]
    if rank_count > 1:
        for r, ctx in enumerate(contexts):
            if r > 0 or cyclic:
                ctx._prev = contexts[(r - 1) % rank_count]
            if r < rank_count - 1 or cyclic:
                ctx._next = contexts[(r + 1) % rank_count]
    if rank_count == 1:
        return [body(contexts[0])]

    results = [None] * rank_count
    failures = {}

    def runner(r):
        try:
            results[r] = body(contexts[r])
        except BaseException as exc:  # noqa: BLE001 - aggregated below
            failures[r] = exc

    threads = [threading.Thread(target=runner, args=(r,)) for r in range(rank_count)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    if failures:
        raise RankPanic(failures)
    return results


def exchange_halo(ctx, local, depth, tag=None):
    """One neighbor round filling both halo sides of a position-sliced field.

    `local` has positions on its second-to-last or given axis layout
    (n_groups, n_loc, sz). Returns (low, high): the previous rank's last
    `depth` positions and the next rank's first `depth` positions, or
    None on open edges.
    """
    if depth == 0:
        return None, None
    n_loc = local.shape[1]
    if depth > n_loc:
        raise ValueError(f"halo depth {depth} exceeds local size {n_loc}")
    tag = ctx.epoch if tag is None else tag
    if ctx.has_next:
        ctx.send_next(HALO_LOW, local[:, n_loc - depth:, :], tag)
    if ctx.has_prev:
        ctx.send_prev(HALO_HIGH, local[:, :depth, :], tag)
    low = high = None
    expected = (local.shape[0], depth, local.shape[2])
    if ctx.has_prev:
        low = ctx.recv_prev(HALO_LOW, tag)
        if low.shape != expected:
            raise ValueError(f"halo payload shape {low.shape}, expected {expected}")
    if ctx.has_next:
        high = ctx.recv_next(HALO_HIGH, tag)
        if high.shape != expected:
            raise ValueError(f"halo payload shape {high.shape}, expected {expected}")
    ctx.exchange_rounds += 1
    return low, high


def exchange_boundary(ctx, first_row, last_row, tag=None):
    """One neighbor round swapping the edge rows of the decoupled stage.

    Sends this rank's first row toward prev and last row toward next;
    returns (prev_last, next_first), None on open edges.
    """
    tag = ctx.epoch if tag is None else tag
    if ctx.has_next:
        ctx.send_next(BOUNDARY_LOW, last_row, tag)
    if ctx.has_prev:
        ctx.send_prev(BOUNDARY_HIGH, first_row, tag)
    prev_last = next_first = None
    if ctx.has_prev:
        prev_last = ctx.recv_prev(BOUNDARY_LOW, tag)
    if ctx.has_next:
        next_first = ctx.recv_next(BOUNDARY_HIGH, tag)
    ctx.exchange_rounds += 1
    return prev_last, next_first


def gather_to_root(ctx, local):
    """Concatenate position-sliced arrays at rank 0 via a neighbor chain.

    Testing-only collective: rank k waits for the stacked slices of all
    higher ranks, prepends its own, and relays toward rank 0. Only ever
    talks to immediate neighbors. Returns the full array at rank 0 and
    None elsewhere.
    """
    local = np.ascontiguousarray(local, dtype=np.float64)
    if ctx.rank_count == 1:
        return local.copy()
    acc = local
    if ctx.rank_id < ctx.rank_count - 1:
        tail = ctx.recv_next(GATHER, ctx.epoch)
        acc = np.concatenate([local, tail], axis=1)
    if ctx.rank_id > 0:
        ctx.send_prev(GATHER, acc, ctx.epoch)
        return None
    return acc


def scatter_from_root(ctx, full, local_sizes):
    """Inverse of gather_to_root: peel position slices off along the chain.

    Rank 0 holds the full array (positions on axis 1); every other rank
    passes `full=None` and receives its slice from the relay.
    """
    m_local = local_sizes[ctx.rank_id]
    if ctx.rank_count == 1:
        return np.ascontiguousarray(full, dtype=np.float64)
    if ctx.rank_id == 0:
        remainder = full
    else:
        remainder = ctx.recv_prev(SCATTER, ctx.epoch)
    if ctx.rank_id < ctx.rank_count - 1:
        ctx.send_next(SCATTER, remainder[:, m_local:], ctx.epoch)
    return np.ascontiguousarray(remainder[:, :m_local])
