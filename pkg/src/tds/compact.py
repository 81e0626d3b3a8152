"""Compact finite-difference schemes posed as tridiagonal solves.

A compact scheme couples unknown derivative values through a
tridiagonal left-hand side,

    alpha u'_{j-1} + u'_j + alpha u'_{j+1} =
        a (u_{j+1} - u_{j-1}) / (2h) + b (u_{j+2} - u_{j-2}) / (4h),

so evaluating the derivative means assembling a TridiagonalSystem plus
a width-5 right-hand-side stencil and handing both to any of the
solvers. The pair is what the distributed solver consumes directly.
"""

from dataclasses import dataclass

import numpy as np

from .distributed import StencilCoeffs, build_rhs, run_distd2
from .system import TridiagonalSystem


@dataclass(frozen=True)
class CompactScheme:
    derivative_order: int
    alpha: float
    a_w: float
    b_w: float
    formal_order: int
    h: float

    def __post_init__(self):
        if self.derivative_order not in (1, 2):
            raise ValueError("derivative_order must be 1 or 2")
        if self.h <= 0:
            raise ValueError("grid spacing must be positive")

    def interior_weights(self):
        """RHS weights at offsets -2..+2 for an interior row."""
        a, b, h = self.a_w, self.b_w, self.h
        if self.derivative_order == 1:
            return np.array([-b / (4 * h), -a / (2 * h), 0.0,
                             a / (2 * h), b / (4 * h)])
        h2 = h * h
        return np.array([b / (4 * h2), a / h2,
                         -2 * a / h2 - b / (2 * h2),
                         a / h2, b / (4 * h2)])


def sixth_order_first_derivative(h):
    return CompactScheme(1, 1.0 / 3.0, 14.0 / 9.0, 1.0 / 9.0, 6, h)


def second_derivative_scheme(h):
    # alpha=2/11 with a=12/11, b=3/11 makes the fourth-order truncation
    # term vanish as well.
    return CompactScheme(2, 2.0 / 11.0, 12.0 / 11.0, 3.0 / 11.0, 6, h)


# One-sided closures for the first derivative on non-periodic domains,
# expressed in the same width-5 offset window. The first row pairs
# alpha_edge=2 on the left-hand side with a three-point biased stencil
# (exact through cubics); the second row is the symmetric four-point
# form (exact through quartics). Last two rows mirror them.
_EDGE0_LHS = 2.0
_EDGE0_W = np.array([0.0, 0.0, -2.5, 2.0, 0.5])
_EDGE1_LHS = 0.25
_EDGE1_W = np.array([0.0, -0.75, 0.0, 0.75, 0.0])


def assemble(scheme, n, periodic=True):
    """Materialize (TridiagonalSystem, StencilCoeffs) on an n-point grid."""
    if n < 8:
        raise ValueError(f"need at least 8 grid points, got {n}")
    lower = np.full(n, scheme.alpha)
    diag = np.ones(n)
    upper = np.full(n, scheme.alpha)
    c = np.tile(scheme.interior_weights(), (n, 1))
    if not periodic:
        if scheme.derivative_order != 1:
            raise NotImplementedError(
                "one-sided closures are only provided for the first derivative")
        h = scheme.h
        lower[0] = 0.0
        upper[0] = _EDGE0_LHS
        c[0] = _EDGE0_W / h
        lower[1] = _EDGE1_LHS
        upper[1] = _EDGE1_LHS
        c[1] = _EDGE1_W / h
        lower[n - 2] = _EDGE1_LHS
        upper[n - 2] = _EDGE1_LHS
        c[n - 2] = _EDGE1_W / h
        lower[n - 1] = _EDGE0_LHS
        upper[n - 1] = 0.0
        c[n - 1] = -_EDGE0_W[::-1] / h
    return (TridiagonalSystem(lower, diag, upper, periodic=periodic),
            StencilCoeffs(c))


def apply_operator(sys, stencil, values, rank_count=1):
    """Differentiate 1-D grid samples: solve sys u' = stencil(values)."""
    values = np.asarray(values, dtype=np.float64)
    field = values.reshape(1, values.shape[0], 1)
    out = run_distd2(sys, field, stencil=stencil, rank_count=rank_count)
    return out.reshape(values.shape[0])


def operator_applier(rank_count=1):
    """Solver adapter for order_of_accuracy with a fixed rank count."""

    def solver(sys, stencil, values):
        return apply_operator(sys, stencil, values, rank_count=rank_count)

    return solver


@dataclass(frozen=True)
class OrderResult:
    n_list: tuple
    errors: tuple
    slope: float

    def error_at(self, n):
        return self.errors[self.n_list.index(n)]


def order_of_accuracy(scheme, solver, n_list):
    """Measure convergence on sin over [0, 2*pi) with periodic assembly.

    Returns the max-norm error per grid size and the least-squares
    log-log slope. Grid sizes whose error has hit the rounding floor
    (within 100x machine epsilon) are excluded from the fit.
    """
    errors = []
    for n in n_list:
        h = 2 * np.pi / n
        run_scheme = type(scheme)(scheme.derivative_order, scheme.alpha,
                                  scheme.a_w, scheme.b_w, scheme.formal_order, h)
        sys, stencil = assemble(run_scheme, n, periodic=True)
        x = h * np.arange(n)
        u = np.sin(x)
        exact = np.cos(x) if scheme.derivative_order == 1 else -np.sin(x)
        approx = solver(sys, stencil, u)
        errors.append(float(np.max(np.abs(approx - exact))))

    floor = 100 * np.finfo(np.float64).eps
    pts = [(n, e) for n, e in zip(n_list, errors) if e > floor]
    if len(pts) >= 2:
        logn = np.log([n for n, _ in pts])
        loge = np.log([e for _, e in pts])
        slope = -float(np.polyfit(logn, loge, 1)[0])
    else:
        slope = float("nan")
    return OrderResult(tuple(n_list), tuple(errors), slope)


def periodic_stencil_apply(stencil, values):
    """Reference stencil application with periodic wraparound."""
    values = np.asarray(values, dtype=np.float64)
    n = values.shape[0]
    pad = stencil.halo_depth
    ext = np.concatenate([values[n - pad:], values, values[:pad]])
    return build_rhs(ext[:, np.newaxis], stencil).reshape(n)
