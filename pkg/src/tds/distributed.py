"""Distributed batched tridiagonal solver with neighbor-only coupling.

The solve happens in four stages, all operating on `sz`-grouped batches:

  1. preprocess (once per operator): two-sided elimination of the local
     coefficient block, producing per-row multipliers and the couplings
     of every local row to the subdomain's first/last unknowns. The
     couplings that would tie one subdomain boundary to the other decay
     below rounding for diagonally dominant systems and are dropped
     (their magnitudes are recorded).
  2. decoupling (per solve): builds the right-hand side from a width-5
     stencil of the input field and runs the same forward/backward
     sweeps on it, fused into a single pass over the data.
  3. boundary stage (per solve): each pair of neighboring ranks swaps
     one row of intermediate values and solves an independent 2x2
     system for the subdomain edge unknowns; both sides compute the
     identical result from the same exchanged values.
  4. substitution (per solve): interior unknowns follow from the edge
     values in one data pass.

A full solve needs exactly two neighbor message rounds: the depth-2
halo for the stencil, and the boundary row swap.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from . import transport
from .errors import NotDominantWarning, SingularPair, SingularPivot
from .serial import PAIR_DET_FLOOR, PIVOT_FLOOR, periodic_thomas_solve, thomas_solve
from .system import (
    RhsBatch,
    SubdomainPartition,
    TridiagonalSystem,
    is_diagonally_dominant,
)

HALO_DEPTH = 2


@dataclass(frozen=True)
class DistCoeffs:
    """Preprocessed per-row solver coefficients for one subdomain.

    s_a[j], s_c[j] couple row j to the subdomain's first/last unknown
    for interior j; s_a[0] couples to the previous rank's last unknown
    and s_c[-1] to the next rank's first unknown. r, f, w hold the
    right-hand-side multipliers of the decoupling sweeps. dropped_first
    and dropped_last record the magnitudes of the two couplings the
    elimination discards.
    """

    s_a: np.ndarray
    s_c: np.ndarray
    w: np.ndarray
    f: np.ndarray
    r: np.ndarray
    n_loc: int
    cyclic_global: bool
    position: str
    dropped_first: float
    dropped_last: float

    @property
    def max_dropped(self):
        return max(self.dropped_first, self.dropped_last)


@dataclass(frozen=True)
class StencilCoeffs:
    """Per-row width-5 right-hand-side weights, offsets -2..+2."""

    c: np.ndarray
    halo_depth: int = HALO_DEPTH

    def __post_init__(self):
        arr = np.ascontiguousarray(self.c, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[1] != 5:
            raise ValueError(f"stencil must be (n, 5), got {arr.shape}")
        object.__setattr__(self, "c", arr)

    @property
    def n(self):
        return self.c.shape[0]


@dataclass(frozen=True)
class BoundaryPair:
    """Inputs of one cross-boundary 2x2 solve.

    d_last_local / d_first_remote are the decoupled intermediate values
    on either side of the boundary; s_c_last / s_a_first_remote the
    matching kept couplings.
    """

    d_last_local: np.ndarray
    d_first_remote: np.ndarray
    s_c_last: float
    s_a_first_remote: float


@dataclass(frozen=True)
class PairCoeffs:
    """Cached neighbor couplings, exchanged once at preprocess time."""

    prev_s_c_last: float | None
    next_s_a_first: float | None


def identity_stencil(n):
    """Stencil that reproduces the input row: solve A u = d directly."""
    c = np.zeros((n, 5))
    c[:, 2] = 1.0
    return StencilCoeffs(c)


def local_slice(sys, part, rank_id):
    """Extract rank `rank_id`'s coefficient block, external couplings included.

    In the returned system, lower[0] couples to the previous rank's last
    unknown and upper[-1] to the next rank's first (zero on open edges).
    """
    off = part.offsets()[rank_id]
    m = part.local_sizes[rank_id]
    a = sys.effective_lower()[off:off + m].copy()
    c = sys.effective_upper()[off:off + m].copy()
    if rank_id == 0:
        a[0] = sys.lower[0] if sys.periodic else 0.0
    if rank_id == part.rank_count - 1:
        c[-1] = sys.upper[-1] if sys.periodic else 0.0
    return TridiagonalSystem(a, sys.diag[off:off + m].copy(), c, periodic=False)


def rank_position(rank_id, rank_count):
    if rank_id == 0:
        return "first"
    if rank_id == rank_count - 1:
        return "last"
    return "interior"


def preprocess(local_sys, position, cyclic, pivot_floor=PIVOT_FLOOR,
               warn_not_dominant=True):
    """Eliminate the local coefficient block once per distinct operator.

    Same two-sided elimination as the serial subdomain algorithms, kept
    separate from the right-hand side: the sweeps record, per row, the
    forward pivot inverse (f), the raw lower coupling (r), and the
    backward multiplier (w), so solves replay them on right-hand sides
    only. The tiny couplings of row 1 to the local last unknown and of
    row n to the local first unknown are dropped here; their magnitudes
    are retained for reporting.
    """
    a, b, c = local_sys.lower, local_sys.diag, local_sys.upper
    m = local_sys.n
    if m < 4:
        raise ValueError(f"local block needs at least 4 rows, got {m}")
    if warn_not_dominant and not is_diagonally_dominant(local_sys):
        warnings.warn("local block is not strictly diagonally dominant",
                      NotDominantWarning, stacklevel=2)

    sa = np.empty(m)
    sc = np.empty(m)
    w = np.zeros(m)
    f = np.empty(m)
    r = np.empty(m)
    for j in (0, 1):
        sa[j] = a[j] / b[j]
        sc[j] = c[j] / b[j]
        w[j] = sc[j]
        f[j] = 1.0 / b[j]
        r[j] = 1.0 / b[j]
    for j in range(2, m):
        denom = b[j] - a[j] * sc[j - 1]
        if abs(denom) <= pivot_floor:
            raise SingularPivot(f"pivot {denom:.3e} at local row {j + 1}")
        f[j] = 1.0 / denom
        r[j] = a[j]
        sa[j] = -a[j] * sa[j - 1] * f[j]
        sc[j] = c[j] * f[j]
    for j in range(m - 3, 0, -1):
        w[j] = sc[j]
        sa[j] = sa[j] - sc[j] * sa[j + 1]
        sc[j] = -sc[j] * sc[j + 1]
    closure = 1.0 - sc[0] * sa[1]
    if abs(closure) <= pivot_floor:
        raise SingularPivot(f"closure pivot {closure:.3e}")
    f[0] = 1.0 / closure
    sa[0] = f[0] * sa[0]
    sc[0] = -f[0] * sc[0] * sc[1]

    dropped_first = abs(sc[0])
    dropped_last = abs(sa[m - 1])
    sc[0] = 0.0
    sa[m - 1] = 0.0
    return DistCoeffs(sa, sc, w, f, r, m, bool(cyclic), position,
                      dropped_first, dropped_last)


# One shared per-row kernel expression for both the fused and the
# two-step paths, so their equality is exact rather than approximate.

def _stencil_row(u_ext, row, j):
    win = u_ext[j:j + 5]
    return (((row[0] * win[0] + row[1] * win[1]) + row[2] * win[2])
            + row[3] * win[3]) + row[4] * win[4]


def _scale_row(rhs, r_j):
    return rhs * r_j


def _forward_row(d_prev, rhs, f_j, r_j):
    return (rhs - r_j * d_prev) * f_j


def _backward_row(d_j, w_j, d_next):
    return d_j - w_j * d_next


def _closure_row(d_0, f_0, w_0, d_1):
    return (d_0 - w_0 * d_1) * f_0


def build_rhs_row(u_window, stencil_row):
    """Width-5 weighted sum for a single row; u_window is (5, ...)."""
    return _stencil_row(np.asarray(u_window, dtype=np.float64),
                        np.asarray(stencil_row, dtype=np.float64), 0)


def build_rhs(u_ext, stencil):
    """Apply the stencil to a halo-extended block: (m+4, ...) -> (m, ...)."""
    m = u_ext.shape[0] - 4
    d = np.empty((m,) + u_ext.shape[1:])
    for j in range(m):
        d[j] = _stencil_row(u_ext, stencil.c[j], j)
    return d


def decouple_unfused(d_rhs, coeffs):
    """Forward/backward sweeps over an already-built right-hand side."""
    m = coeffs.n_loc
    w, f, r = coeffs.w, coeffs.f, coeffs.r
    d = np.empty_like(d_rhs)
    d[0] = _scale_row(d_rhs[0], r[0])
    d[1] = _scale_row(d_rhs[1], r[1])
    for j in range(2, m):
        d[j] = _forward_row(d[j - 1], d_rhs[j], f[j], r[j])
    for j in range(m - 3, 0, -1):
        d[j] = _backward_row(d[j], w[j], d[j + 1])
    d[0] = _closure_row(d[0], f[0], w[0], d[1])
    return d


def decouple_fused(u_ext, coeffs, stencil):
    """Stencil evaluation and forward sweep in one pass, then backward.

    u_ext carries two halo positions on each side: shape (m+4, ...).
    Bit-identical to build_rhs followed by decouple_unfused because both
    paths share the per-row kernel expressions.
    """
    m = coeffs.n_loc
    if u_ext.shape[0] != m + 4:
        raise ValueError(f"expected {m + 4} positions incl. halo, got {u_ext.shape[0]}")
    w, f, r = coeffs.w, coeffs.f, coeffs.r
    d = np.empty((m,) + u_ext.shape[1:])
    d[0] = _scale_row(_stencil_row(u_ext, stencil.c[0], 0), r[0])
    d[1] = _scale_row(_stencil_row(u_ext, stencil.c[1], 1), r[1])
    for j in range(2, m):
        d[j] = _forward_row(d[j - 1], _stencil_row(u_ext, stencil.c[j], j), f[j], r[j])
    for j in range(m - 3, 0, -1):
        d[j] = _backward_row(d[j], w[j], d[j + 1])
    d[0] = _closure_row(d[0], f[0], w[0], d[1])
    return d


def solve_boundary_pair(pair):
    """Cramer solve of one decoupled 2x2 boundary system.

        u_last + s_c_last * u_first          = d_last
        s_a_first * u_last + u_first         = d_first

    Both neighbor ranks evaluate this from identical exchanged values,
    so the two sides agree bit-for-bit.
    """
    det = 1.0 - pair.s_c_last * pair.s_a_first_remote
    if abs(det) < PAIR_DET_FLOOR:
        raise SingularPair(f"boundary determinant {det:.3e}")
    u_last = (pair.d_last_local - pair.s_c_last * pair.d_first_remote) / det
    u_first = (pair.d_first_remote - pair.s_a_first_remote * pair.d_last_local) / det
    return u_last, u_first


def substitute(d, coeffs, u_start, u_end):
    """Recover interior unknowns from the decoupled intermediate values."""
    m = coeffs.n_loc
    out = d.copy()
    out[0] = u_start
    shape = (m - 2,) + (1,) * (d.ndim - 1)
    out[1:m - 1] -= (coeffs.s_a[1:m - 1].reshape(shape) * u_start[np.newaxis]
                     + coeffs.s_c[1:m - 1].reshape(shape) * u_end[np.newaxis])
    out[m - 1] = u_end
    return out


def share_pair_coeffs(ctx, coeffs):
    """One-time neighbor exchange of the boundary couplings.

    The couplings are solve-invariant, so they travel once here instead
    of with every solve's boundary row.
    """
    tag = ctx.epoch
    if ctx.has_prev:
        ctx.send_prev(transport.BOUNDARY_HIGH, np.array([coeffs.s_a[0]]), tag)
    if ctx.has_next:
        ctx.send_next(transport.BOUNDARY_LOW, np.array([coeffs.s_c[-1]]), tag)
    prev_sc = next_sa = None
    if ctx.has_prev:
        prev_sc = float(ctx.recv_prev(transport.BOUNDARY_LOW, tag)[0])
    if ctx.has_next:
        next_sa = float(ctx.recv_next(transport.BOUNDARY_HIGH, tag)[0])
    return PairCoeffs(prev_sc, next_sa)


def distd2_solve(ctx, local_values, coeffs, stencil, pair_coeffs):
    """Run one distributed solve on this rank's (n_groups, n_loc, sz) block.

    Exactly two neighbor rounds: the depth-2 halo exchange for the
    stencil and the boundary row exchange for the 2x2 stage.
    """
    ctx.begin_solve()
    groups, m, sz = local_values.shape
    low, high = exchange_field_halo(ctx, local_values, stencil.halo_depth)

    lanes = groups * sz
    u_ext = np.empty((m + 2 * stencil.halo_depth, lanes))
    u_ext[:stencil.halo_depth] = 0.0 if low is None else _lanes(low)
    u_ext[stencil.halo_depth:stencil.halo_depth + m] = _lanes(local_values)
    u_ext[stencil.halo_depth + m:] = 0.0 if high is None else _lanes(high)

    d = decouple_fused(u_ext, coeffs, stencil)

    prev_last, next_first = transport.exchange_boundary(
        ctx, d[0].reshape(groups, sz), d[m - 1].reshape(groups, sz))

    if prev_last is None:
        u_start = d[0]
    else:
        _, u_start = solve_boundary_pair(BoundaryPair(
            d_last_local=prev_last.reshape(-1),
            d_first_remote=d[0],
            s_c_last=pair_coeffs.prev_s_c_last,
            s_a_first_remote=coeffs.s_a[0]))
    if next_first is None:
        u_end = d[m - 1]
    else:
        u_end, _ = solve_boundary_pair(BoundaryPair(
            d_last_local=d[m - 1],
            d_first_remote=next_first.reshape(-1),
            s_c_last=coeffs.s_c[-1],
            s_a_first_remote=pair_coeffs.next_s_a_first))

    u = substitute(d, coeffs, u_start, u_end)
    return u.reshape(m, groups, sz).transpose(1, 0, 2).copy()


def exchange_field_halo(ctx, local_values, depth):
    """Depth-limited halo exchange of a grouped field block."""
    return transport.exchange_halo(ctx, local_values, depth)


def _lanes(block):
    """(n_groups, n, sz) -> (n, n_groups*sz), position-major lanes."""
    groups, n, sz = block.shape
    return np.ascontiguousarray(block.transpose(1, 0, 2)).reshape(n, groups * sz)


def _serial_reference_solve(sys, field_values, stencil):
    """Single-subdomain path: stencil then one serial solve of the batch."""
    groups, n, sz = field_values.shape
    u = _lanes(field_values)
    pad = stencil.halo_depth
    u_ext = np.empty((n + 2 * pad, u.shape[1]))
    if sys.periodic:
        u_ext[:pad] = u[n - pad:]
        u_ext[pad + n:] = u[:pad]
    else:
        u_ext[:pad] = 0.0
        u_ext[pad + n:] = 0.0
    u_ext[pad:pad + n] = u
    rhs = RhsBatch(build_rhs(u_ext, stencil).T)
    solver = periodic_thomas_solve if sys.periodic else thomas_solve
    sol = solver(sys, rhs).values.T
    return sol.reshape(n, groups, sz).transpose(1, 0, 2).copy()


def run_distd2(sys, field_values, part=None, stencil=None, rank_count=None,
               warn_not_dominant=True, audit=None):
    """Solve A u = stencil(field) across subdomains; returns matching shape.

    field_values is an (n_groups, n, sz) block over the full domain.
    With one subdomain the stencil is applied directly and the batch is
    handed to the matching serial solver. `audit`, if given, is a dict
    that receives message-accounting totals.
    """
    groups, n, sz = field_values.shape
    if part is None:
        if rank_count is None:
            rank_count = 1
        part = SubdomainPartition.balanced(n, rank_count)
    if part.n != n:
        raise ValueError(f"partition covers {part.n} positions, field has {n}")
    if stencil is None:
        stencil = identity_stencil(n)

    if part.rank_count == 1:
        return _serial_reference_solve(sys, field_values, stencil)

    offsets = part.offsets()
    sizes = part.local_sizes

    def body(ctx):
        k = ctx.rank_id
        off, m = offsets[k], sizes[k]
        local_sys = local_slice(sys, part, k)
        coeffs = preprocess(local_sys, rank_position(k, part.rank_count),
                            sys.periodic, warn_not_dominant=warn_not_dominant)
        pair_coeffs = share_pair_coeffs(ctx, coeffs)
        local_stencil = StencilCoeffs(stencil.c[off:off + m], stencil.halo_depth)
        rounds_before = ctx.exchange_rounds
        local_u = distd2_solve(ctx, field_values[:, off:off + m, :],
                               coeffs, local_stencil, pair_coeffs)
        stats = {
            "rounds": ctx.exchange_rounds - rounds_before,
            "messages_sent": ctx.messages_sent,
            "bytes_sent": ctx.bytes_sent,
            "max_dropped": coeffs.max_dropped,
        }
        return local_u, stats

    results = transport.spawn_ranks(part.rank_count, sys.periodic, body)
    if audit is not None:
        audit["rounds_per_rank"] = [stats["rounds"] for _, stats in results]
        audit["messages_sent"] = sum(stats["messages_sent"] for _, stats in results)
        audit["bytes_sent"] = sum(stats["bytes_sent"] for _, stats in results)
        audit["max_dropped"] = max(stats["max_dropped"] for _, stats in results)
    return np.concatenate([u for u, _ in results], axis=1)
