"""Independent reference computations for the test suite.

Everything here is deliberately naive: dense linear algebra and direct
formula evaluation only, no reuse of the package's own sweep code, so
a shared bug cannot hide.
"""

import numpy as np


def dense_matrix(a, b, c, periodic):
    n = len(b)
    A = np.zeros((n, n))
    for j in range(n):
        A[j, j] = b[j]
        if j > 0:
            A[j, j - 1] = a[j]
        if j < n - 1:
            A[j, j + 1] = c[j]
    if periodic:
        A[0, n - 1] = a[0]
        A[n - 1, 0] = c[n - 1]
    return A


def dense_solve(a, b, c, d, periodic=False):
    """Batched dense solve; d is (..., n)."""
    A = dense_matrix(a, b, c, periodic)
    return np.linalg.solve(A, np.asarray(d, dtype=np.float64).T).T


def dense_dropped_couplings(a, b, c, a_ext, c_ext):
    """Exact magnitudes of the couplings the subdomain solvers discard.

    For a local block A (open tridiagonal) with external couplings
    a_ext (row 1 to the previous subdomain) and c_ext (row m to the
    next), the eliminated block's first row couples to the next
    subdomain's first unknown with weight c_ext * (A^-1)[0, m-1], and
    the last row to the previous subdomain's last unknown with weight
    a_ext * (A^-1)[m-1, 0].
    """
    Ainv = np.linalg.inv(dense_matrix(a, b, c, periodic=False))
    m = len(b)
    return abs(c_ext * Ainv[0, m - 1]), abs(a_ext * Ainv[m - 1, 0])


def roll_stencil_apply(weights, u):
    """Periodic width-5 stencil application via np.roll, one line."""
    u = np.asarray(u, dtype=np.float64)
    out = np.zeros_like(u)
    for o, w in zip(range(-2, 3), weights):
        out += w * np.roll(u, -o)
    return out


def boundary_pair_by_hand(s_c, s_a, d_last, d_first):
    """2x2 boundary system solved with explicit substitution.

        u_last + s_c * u_first = d_last
        s_a * u_last + u_first = d_first

    Eliminate u_first = d_first - s_a * u_last.
    """
    u_last = (d_last - s_c * d_first) / (1.0 - s_c * s_a)
    u_first = d_first - s_a * u_last
    return u_last, u_first


def cartesian_index_walk(nx, ny, nz, sz, direction):
    """Slow per-point computation of (group, position, lane) triples.

    Enumerates transverse lines in the documented order (x lines vary
    j fastest then k; y lines i then k; z lines i then j) and chops
    them into groups of sz.
    """
    out = {}
    if direction == "x":
        lines = [(j, k) for k in range(nz) for j in range(ny)]
        for t, (j, k) in enumerate(lines):
            for i in range(nx):
                out[(i, j, k)] = (t // sz, i, t % sz)
    elif direction == "y":
        lines = [(i, k) for k in range(nz) for i in range(nx)]
        for t, (i, k) in enumerate(lines):
            for j in range(ny):
                out[(i, j, k)] = (t // sz, j, t % sz)
    else:
        lines = [(i, j) for j in range(ny) for i in range(nx)]
        for t, (i, j) in enumerate(lines):
            for k in range(nz):
                out[(i, j, k)] = (t // sz, k, t % sz)
    return out


def compact_row_residual(alpha_l, alpha_r, weights, poly_coeffs, h, x0):
    """Row residual of a compact first-derivative relation on a polynomial.

    Returns LHS - RHS for p(x) = sum coeff_d x^d at the grid point x0
    with the width-5 sample window x0 + o*h, o in -2..2. Left and right
    couplings may differ so one-sided closure rows fit the same mold.
    """
    p = np.polynomial.Polynomial(poly_coeffs)
    dp = p.deriv()
    lhs = alpha_l * dp(x0 - h) + dp(x0) + alpha_r * dp(x0 + h)
    xs = [x0 + o * h for o in range(-2, 3)]
    rhs = sum(w * p(x) for w, x in zip(weights, xs))
    return lhs - rhs


def first_derivative_row_residual(alpha, weights, poly_coeffs, h, x0):
    """Interior-row special case: symmetric couplings."""
    return compact_row_residual(alpha, alpha, weights, poly_coeffs, h, x0)
