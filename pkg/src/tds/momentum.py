"""Momentum-transport right-hand side on a periodic box, direction-fused.

The convective term is kept in its skew-symmetric average form,

    RHS_j of u_i = -1/2 (u_j d(u_i)/dx_j + d(u_j u_i)/dx_j)
                   + nu d2(u_i)/dx_j2,

and work is grouped by direction j: all kernels that differentiate
along j run while the fields sit in the j-packed layout, then results
fold back into the x-layout accumulators. One full evaluation costs 3
diagonal kernels (i = j, one input field), 6 off-diagonal kernels
(i != j, two input fields), 6 input reorders and 6 result
accumulations. Every kernel call is recorded in a MovementLedger so
the logical traffic of the pipeline can be audited.
"""

from dataclasses import dataclass

import numpy as np

from .compact import assemble, second_derivative_scheme, sixth_order_first_derivative
from .distributed import run_distd2
from .layout import GroupedField, LayoutDescriptor, pack, reorder, unpack
from .movement import TRANSPORT_BLOCKED, MovementLedger
from .serial import periodic_thomas_solve
from .system import RhsBatch

_COMPONENTS = ("u", "v", "w")
_DIRECTIONS = ("x", "y", "z")


@dataclass(frozen=True)
class VelocityField:
    u: GroupedField
    v: GroupedField
    w: GroupedField
    nu: float
    h: float

    def __post_init__(self):
        lay = self.u.layout
        if self.v.layout != lay or self.w.layout != lay:
            raise ValueError("velocity components must share one layout")
        if not (lay.nx == lay.ny == lay.nz):
            raise ValueError("transport demo expects a cubic grid")
        for f in (self.u, self.v, self.w):
            if not np.all(np.isfinite(f.data)):
                raise ValueError("velocity values must be finite")
        if self.h <= 0:
            raise ValueError("grid spacing must be positive")

    @property
    def layout(self):
        return self.u.layout

    @property
    def n(self):
        return self.layout.nx

    def component(self, i):
        return (self.u, self.v, self.w)[i]

    @classmethod
    def from_arrays(cls, u3, v3, w3, nu, h, sz=8, pad=False):
        u3 = np.asarray(u3, dtype=np.float64)
        lay = LayoutDescriptor(*u3.shape, sz=sz, direction="x", pad=pad)
        return cls(pack(u3, lay), pack(v3, lay), pack(w3, lay), nu, h)


_OPERATOR_CACHE = {}


def _operator(order, h, n):
    key = (order, h, n)
    hit = _OPERATOR_CACHE.get(key)
    if hit is None:
        scheme = (sixth_order_first_derivative(h) if order == 1
                  else second_derivative_scheme(h))
        hit = assemble(scheme, n, periodic=True)
        _OPERATOR_CACHE[key] = hit
    return hit


def _differentiate(values, order, h, rank_count):
    """Compact derivative along the packed direction of a grouped block."""
    sys, stencil = _operator(order, h, values.shape[1])
    return run_distd2(sys, values, stencil=stencil, rank_count=rank_count)


def _component_index(i):
    if isinstance(i, str):
        return _COMPONENTS.index(i)
    return int(i)


def _direction_name(j):
    if isinstance(j, str):
        return j
    return _DIRECTIONS[int(j)]


def directional_contribution(i, j, fields, rank_count=1, ledger=None,
                             catalog=TRANSPORT_BLOCKED):
    """Direction-j transport contribution to component i, in j layout.

    Reads one distinct input field when i = j (the advecting velocity
    is the component itself), two otherwise.
    """
    ci = _component_index(i)
    dj = _direction_name(j)
    lay = fields.layout
    if lay.direction != dj:
        raise ValueError(f"fields are packed for {lay.direction!r}, kernel needs {dj!r}")
    comp = fields.component(ci).data
    advect = fields.component(_DIRECTIONS.index(dj)).data

    d_comp = _differentiate(comp, 1, fields.h, rank_count)
    d_prod = _differentiate(advect * comp, 1, fields.h, rank_count)
    out = -0.5 * (advect * d_comp + d_prod)
    if fields.nu != 0.0:
        out = out + fields.nu * _differentiate(comp, 2, fields.h, rank_count)

    if ledger is not None:
        name = "diag" if ci == _DIRECTIONS.index(dj) else "offdiag"
        ledger.record(name, name, catalog[name][0], 1)
    return GroupedField(lay, out)


def _reorder_logged(field, direction, ledger, catalog):
    if ledger is not None:
        ledger.record("reorder", "reorder", catalog["reorder"][0], 1)
    return reorder(field, direction)


def _accumulate_logged(acc, contrib, ledger, catalog):
    """Fold a j-layout contribution into the x-layout accumulator."""
    if ledger is not None:
        ledger.record("accumulate", "accumulate", catalog["accumulate"][0], 1)
    return acc + reorder(contrib, "x").data


def evaluate_transport_rhs(fields, rank_count=1, ledger=None,
                           catalog=TRANSPORT_BLOCKED):
    """Full right-hand side for all three components, x-layout results.

    x-direction kernels run in place; the fields are then reordered to
    y and z in turn, each direction's three kernels run, and their
    results fold back into the x-layout accumulators.
    """
    if fields.layout.direction != "x":
        raise ValueError("inputs must arrive in x layout")
    lay = fields.layout

    acc = [directional_contribution(i, "x", fields, rank_count, ledger,
                                    catalog).data
           for i in range(3)]

    for dj in ("y", "z"):
        rot = VelocityField(
            _reorder_logged(fields.u, dj, ledger, catalog),
            _reorder_logged(fields.v, dj, ledger, catalog),
            _reorder_logged(fields.w, dj, ledger, catalog),
            fields.nu, fields.h)
        for i in range(3):
            contrib = directional_contribution(i, dj, rot, rank_count,
                                               ledger, catalog)
            acc[i] = _accumulate_logged(acc[i], contrib, ledger, catalog)

    return tuple(GroupedField(lay, a) for a in acc)


def _axis_derivative(arr, axis, scheme, n):
    """Cartesian-layout compact derivative along one axis, periodic."""
    sys, stencil = assemble(scheme, n, periodic=True)
    weights = stencil.c[0]
    lines = np.moveaxis(arr, axis, -1)
    flat = np.ascontiguousarray(lines).reshape(-1, n)
    rhs = np.zeros_like(flat)
    for o, wt in zip(range(-2, 3), weights):
        if wt != 0.0:
            rhs += wt * np.roll(flat, -o, axis=1)
    sol = periodic_thomas_solve(sys, RhsBatch(rhs)).values
    return np.moveaxis(sol.reshape(lines.shape), -1, axis)


def evaluate_transport_rhs_reference(fields):
    """Naive unfused evaluation in Cartesian layout, term by term.

    Returns three (nx, ny, nz) arrays. Serves as the independent check
    for the fused pipeline: every derivative is its own whole-domain
    solve with the batched periodic solver.
    """
    n = fields.n
    h = fields.h
    d1 = sixth_order_first_derivative(h)
    d2 = second_derivative_scheme(h)
    vel = [unpack(fields.component(i)) for i in range(3)]
    out = []
    for i in range(3):
        total = np.zeros_like(vel[i])
        for j in range(3):
            du_i = _axis_derivative(vel[i], j, d1, n)
            d_prod = _axis_derivative(vel[j] * vel[i], j, d1, n)
            total += -0.5 * (vel[j] * du_i + d_prod)
            if fields.nu != 0.0:
                total += fields.nu * _axis_derivative(vel[i], j, d2, n)
        out.append(total)
    return tuple(out)


def reorder_cost_fraction(ledger):
    """Share of total logical traversals spent permuting layouts."""
    return ledger.fraction("reorder")


def euler_step(fields, dt, rank_count=1):
    """One explicit step: u <- u + dt * RHS(u). Smoke-test integrator."""
    rhs = evaluate_transport_rhs(fields, rank_count=rank_count)
    comps = [GroupedField(fields.layout,
                          fields.component(i).data + dt * rhs[i].data)
             for i in range(3)]
    return VelocityField(comps[0], comps[1], comps[2], fields.nu, fields.h)
