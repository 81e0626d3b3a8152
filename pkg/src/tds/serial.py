"""Serial tridiagonal solvers and the subdomain-based reference algorithms.

All solvers take a shared TridiagonalSystem plus an RhsBatch of m
independent right-hand sides and return a new RhsBatch of solutions.
Inputs are never mutated; elimination works on internal buffers laid
out position-major so the per-position vector operations run over
contiguous batch slices.
"""

import numpy as np

from .errors import (
    SingularCorrection,
    SingularMatrix,
    SingularPair,
    SingularPivot,
    TruncationUnsafe,
)
from .system import RhsBatch, SubdomainPartition, TridiagonalSystem

PIVOT_FLOOR = 1e-300
PAIR_DET_FLOOR = 1e-12
DEFAULT_TRUNCATION_THRESHOLD = 1e-14


def thomas_solve(sys, rhs, pivot_floor=PIVOT_FLOOR):
    """Forward elimination and back substitution for an open system.

    Forward pass: normalize row 1, then for each row i eliminate a_i
    against the previous (already normalized) row, leaving unit diagonal
    and an updated upper coupling c'_i. Backward pass removes c'_i.
    """
    if sys.periodic:
        raise ValueError("thomas_solve handles open systems; use periodic_thomas_solve")
    a, b, c = sys.lower, sys.diag, sys.upper
    n = sys.n
    if rhs.n != n:
        raise ValueError(f"rhs length {rhs.n} does not match system size {n}")
    d = rhs.values.T.copy()
    cp = np.empty(n)
    cp[0] = c[0] / b[0]
    d[0] /= b[0]
    # in-place row updates keep the inner loop allocation-free, which is
    # what keeps per-point runtime flat across batch shapes
    for i in range(1, n):
        denom = b[i] - a[i] * cp[i - 1]
        if abs(denom) <= pivot_floor:
            raise SingularPivot(f"pivot {denom:.3e} at row {i + 1}")
        w = 1.0 / denom
        cp[i] = c[i] * w
        row = d[i]
        row -= a[i] * d[i - 1]
        row *= w
    for i in range(n - 2, -1, -1):
        d[i] -= cp[i] * d[i + 1]
    return RhsBatch(d.T)


def periodic_thomas_solve(sys, rhs, pivot_floor=PIVOT_FLOOR):
    """Cyclic solve via a rank-1 correction of an open system.

    The cyclic matrix A is split as B + p q^T where B is open, p has
    nonzeros only in rows 1 and n, and the splitting modifies b_1.
    Two open solves (one for the batch, one for the correction column)
    combine into the cyclic solution.
    """
    if not sys.periodic:
        raise ValueError("periodic_thomas_solve requires a periodic system")
    a, b, c = sys.lower, sys.diag, sys.upper
    n = sys.n
    if rhs.n != n:
        raise ValueError(f"rhs length {rhs.n} does not match system size {n}")
    gamma = -b[0]
    b_mod = b.copy()
    b_mod[0] = b[0] - gamma
    b_mod[-1] = b[-1] - c[-1] * a[0] / gamma
    open_sys = TridiagonalSystem(a, b_mod, c, periodic=False)

    p = np.zeros(n)
    p[0] = gamma
    p[-1] = c[-1]
    z = thomas_solve(open_sys, RhsBatch(p), pivot_floor).values[0]
    y = thomas_solve(open_sys, rhs, pivot_floor).values

    q_first, q_last = 1.0, a[0] / gamma
    denom = 1.0 + q_first * z[0] + q_last * z[-1]
    if abs(denom) <= pivot_floor:
        raise SingularCorrection(f"correction denominator {denom:.3e}")
    factors = (q_first * y[:, 0] + q_last * y[:, -1]) / denom
    return RhsBatch(y - factors[:, np.newaxis] * z[np.newaxis, :])


def dense_solve_oracle(sys, rhs):
    """Independent check: materialize the matrix and solve it densely.

    Uses LU factorization with partial pivoting on the full n-by-n
    matrix, cyclic corners included. Intended for validation, hence the
    size guard.
    """
    if sys.n > 4096:
        raise ValueError(f"dense oracle is limited to n <= 4096, got {sys.n}")
    try:
        sol = np.linalg.solve(sys.dense(), rhs.values.T)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrix(str(exc)) from exc
    return RhsBatch(sol.T)


def _eliminate_block(a, b, c, d, pivot_floor):
    """Two-sided elimination of one subdomain block, right-hand side included.

    Input rows (local indices 0..m-1, d is (m, batch)):

        row 0:   a[0]*u_ext_prev + b[0]*u_0 + c[0]*u_1            = d_0
        row j:   a[j]*u_{j-1}    + b[j]*u_j + c[j]*u_{j+1}        = d_j
        row m-1: a[m-1]*u_{m-2}  + b[m-1]*u_{m-1} + c[m-1]*u_ext_next = d_{m-1}

    Output rows, all with unit diagonal:

        row 0:    u_0 + sa[0]*u_ext_prev + sc[0]*u_{m-1}   = d~_0
        interior: u_j + sa[j]*u_0        + sc[j]*u_{m-1}   = d~_j
        row m-1:  u_{m-1} + sa[m-1]*u_0  + sc[m-1]*u_ext_next = d~_{m-1}

    The forward sweep normalizes rows 0 and 1 and then folds each lower
    coupling into a growing column under u_0; the backward sweep moves
    the upper couplings onto u_{m-1}; a final step eliminates row 0's
    remaining coupling to u_1. Nothing is dropped here.
    """
    m = len(b)
    sa = np.empty(m)
    sc = np.empty(m)
    dd = d.astype(np.float64, copy=True)

    sa[0] = a[0] / b[0]
    sc[0] = c[0] / b[0]
    dd[0] = dd[0] / b[0]
    sa[1] = a[1] / b[1]
    sc[1] = c[1] / b[1]
    dd[1] = dd[1] / b[1]
    for j in range(2, m):
        denom = b[j] - a[j] * sc[j - 1]
        if abs(denom) <= pivot_floor:
            raise SingularPivot(f"pivot {denom:.3e} at local row {j + 1}")
        w = 1.0 / denom
        sa[j] = -a[j] * sa[j - 1] * w
        sc[j] = c[j] * w
        dd[j] = (dd[j] - a[j] * dd[j - 1]) * w
    for j in range(m - 3, 0, -1):
        sa[j] = sa[j] - sc[j] * sa[j + 1]
        dd[j] = dd[j] - sc[j] * dd[j + 1]
        sc[j] = -sc[j] * sc[j + 1]
    closure = 1.0 - sc[0] * sa[1]
    if abs(closure) <= pivot_floor:
        raise SingularPivot(f"closure pivot {closure:.3e}")
    w1 = 1.0 / closure
    dd[0] = w1 * (dd[0] - sc[0] * dd[1])
    sa[0] = w1 * sa[0]
    sc[0] = -w1 * sc[0] * sc[1]
    return sa, sc, dd


def modified_thomas_solve(sys, rhs, part, pivot_floor=PIVOT_FLOOR):
    """Subdomain elimination, shared reduced solve, then substitution.

    Each subdomain eliminates locally so only its first and last
    unknowns couple to the outside; those pairs form a reduced
    tridiagonal system of size 2P which is solved serially; interior
    unknowns follow by substitution. Exact (no truncation): matches
    thomas_solve up to rounding for any valid partition.
    """
    if sys.periodic:
        raise ValueError("modified_thomas_solve handles open systems only")
    if part.n != sys.n:
        raise ValueError(f"partition covers {part.n} rows, system has {sys.n}")
    if part.rank_count == 1:
        return thomas_solve(sys, rhs, pivot_floor)

    a = sys.effective_lower()
    b = sys.diag
    c = sys.effective_upper()
    d_t = rhs.values.T
    nb = rhs.m

    blocks = []
    for k, (off, m) in enumerate(zip(part.offsets(), part.local_sizes)):
        sa, sc, dd = _eliminate_block(
            a[off:off + m], b[off:off + m], c[off:off + m], d_t[off:off + m],
            pivot_floor,
        )
        blocks.append((off, m, sa, sc, dd))

    p = part.rank_count
    red_lower = np.zeros(2 * p)
    red_diag = np.ones(2 * p)
    red_upper = np.zeros(2 * p)
    red_d = np.empty((2 * p, nb))
    for k, (off, m, sa, sc, dd) in enumerate(blocks):
        red_lower[2 * k] = sa[0]      # first_k couples to last_{k-1}
        red_upper[2 * k] = sc[0]      # first_k couples to last_k
        red_lower[2 * k + 1] = sa[m - 1]   # last_k couples to first_k
        red_upper[2 * k + 1] = sc[m - 1]   # last_k couples to first_{k+1}
        red_d[2 * k] = dd[0]
        red_d[2 * k + 1] = dd[m - 1]
    reduced = TridiagonalSystem(red_lower, red_diag, red_upper, periodic=False)
    red_u = thomas_solve(reduced, RhsBatch(red_d.T), pivot_floor).values.T

    out = np.empty((sys.n, nb))
    for k, (off, m, sa, sc, dd) in enumerate(blocks):
        u_first = red_u[2 * k]
        u_last = red_u[2 * k + 1]
        out[off] = u_first
        out[off + m - 1] = u_last
        interior = slice(off + 1, off + m - 1)
        out[interior] = (
            dd[1:m - 1]
            - sa[1:m - 1, np.newaxis] * u_first[np.newaxis, :]
            - sc[1:m - 1, np.newaxis] * u_last[np.newaxis, :]
        )
    return RhsBatch(out.T)


def pdd_solve(sys, rhs, part, truncation_threshold=DEFAULT_TRUNCATION_THRESHOLD):
    """Local-inverse subdomain solve with truncated corner couplings.

    Each subdomain block A_k is inverted densely; the couplings to the
    neighbouring subdomains become two spike columns v (toward the
    previous subdomain's last unknown) and w (toward the next
    subdomain's first unknown). Diagonal dominance makes the far ends
    of the spikes decay below rounding, so v's last and w's first entry
    are dropped, decoupling the reduced problem into independent 2x2
    systems per subdomain boundary.

    Raises TruncationUnsafe when a dropped entry exceeds the threshold
    (measured against the unit diagonal of the inverted system); the
    exception carries the offending magnitude so the caller can accept
    a weaker bound explicitly.
    """
    if part.n != sys.n:
        raise ValueError(f"partition covers {part.n} rows, system has {sys.n}")
    if part.rank_count == 1:
        if sys.periodic:
            return periodic_thomas_solve(sys, rhs)
        return thomas_solve(sys, rhs)

    a = sys.effective_lower()
    b = sys.diag
    c = sys.effective_upper()
    d_t = rhs.values.T
    nb = rhs.m
    p = part.rank_count

    blocks = []
    max_dropped = 0.0
    for k, (off, m) in enumerate(zip(part.offsets(), part.local_sizes)):
        block = np.diag(b[off:off + m])
        block += np.diag(a[off + 1:off + m], -1)
        block += np.diag(c[off:off + m - 1], 1)
        stacked = np.empty((m, nb + 2))
        stacked[:, :nb] = d_t[off:off + m]
        stacked[:, nb:] = 0.0
        stacked[0, nb] = 1.0
        stacked[m - 1, nb + 1] = 1.0
        try:
            x = np.linalg.solve(block, stacked)
        except np.linalg.LinAlgError as exc:
            raise SingularMatrix(f"subdomain {k}: {exc}") from exc
        dd = x[:, :nb]
        a_ext = a[off] if (k > 0 or sys.periodic) else 0.0
        c_ext = c[off + m - 1] if (k < p - 1 or sys.periodic) else 0.0
        v = a_ext * x[:, nb]
        w = c_ext * x[:, nb + 1]
        max_dropped = max(max_dropped, abs(v[m - 1]), abs(w[0]))
        v[m - 1] = 0.0
        w[0] = 0.0
        blocks.append((off, m, v, w, dd))

    if max_dropped > truncation_threshold:
        raise TruncationUnsafe(max_dropped, truncation_threshold)

    # One 2x2 system per subdomain boundary, acting on (u_last_k, u_first_{k+1}).
    u_first = [None] * p
    u_last = [None] * p
    boundaries = list(range(p - 1)) + ([p - 1] if sys.periodic else [])
    for k in boundaries:
        knext = (k + 1) % p
        _, m_k, _, w_k, dd_k = blocks[k]
        _, _, v_n, _, dd_n = blocks[knext]
        w_edge = w_k[m_k - 1]
        v_edge = v_n[0]
        det = 1.0 - w_edge * v_edge
        if abs(det) < PAIR_DET_FLOOR:
            raise SingularPair(f"boundary {k}: determinant {det:.3e}")
        d_last = dd_k[m_k - 1]
        d_first = dd_n[0]
        u_last[k] = (d_last - w_edge * d_first) / det
        u_first[knext] = (d_first - v_edge * d_last) / det
    if not sys.periodic:
        u_first[0] = blocks[0][4][0].copy()
        m_last = blocks[p - 1][1]
        u_last[p - 1] = blocks[p - 1][4][m_last - 1].copy()

    out = np.empty((sys.n, nb))
    zero = np.zeros(nb)
    for k, (off, m, v, w, dd) in enumerate(blocks):
        prev_last = u_last[k - 1] if (k > 0 or sys.periodic) else zero
        next_first = u_first[(k + 1) % p] if (k < p - 1 or sys.periodic) else zero
        out[off:off + m] = (
            dd
            - v[:, np.newaxis] * prev_last[np.newaxis, :]
            - w[:, np.newaxis] * next_first[np.newaxis, :]
        )
    return RhsBatch(out.T)
