"""Group-packed field layout for batched line solves.

A 3D Cartesian field is split into 1D lines along one direction. Lines
are bundled into groups of `sz`; inside a group the sz lines advance in
lockstep, so the memory order is (group, position, lane) with lane
fastest. The linear index of lane i, position j, group g is

    i + sz * j + sz * n * g

which keeps the sz entries at one position contiguous (the
vectorization-friendly property) while each full line stays sz entries
apart in memory.
"""

from dataclasses import dataclass, replace

import numpy as np

from .errors import DivisibilityError, OutOfBounds

DIRECTIONS = ("x", "y", "z")


@dataclass(frozen=True)
class LayoutDescriptor:
    """Extents, group width, solve direction, and optional line padding."""

    nx: int
    ny: int
    nz: int
    sz: int
    direction: str = "x"
    pad: bool = False

    def __post_init__(self):
        for name in ("nx", "ny", "nz", "sz"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.direction not in DIRECTIONS:
            raise ValueError(f"direction must be one of {DIRECTIONS}")
        if not self.pad and self.lines % self.sz != 0:
            raise DivisibilityError(
                f"{self.lines} lines along {self.direction!r} are not divisible "
                f"by sz={self.sz}; enable padding to round up with ghost lines"
            )

    @property
    def n(self):
        """Points per line along the solve direction."""
        return {"x": self.nx, "y": self.ny, "z": self.nz}[self.direction]

    @property
    def lines(self):
        """Number of real lines (product of the transverse extents)."""
        return self.nx * self.ny * self.nz // self.n

    @property
    def padded_lines(self):
        return -(-self.lines // self.sz) * self.sz

    @property
    def n_groups(self):
        return self.padded_lines // self.sz


@dataclass(frozen=True)
class GroupedField:
    """A field stored in (n_groups, n, sz) order for one solve direction."""

    layout: LayoutDescriptor
    data: np.ndarray

    def __post_init__(self):
        lay = self.layout
        arr = np.ascontiguousarray(self.data, dtype=np.float64)
        expected = (lay.n_groups, lay.n, lay.sz)
        if arr.shape != expected:
            raise ValueError(f"data shape {arr.shape}, layout expects {expected}")
        object.__setattr__(self, "data", arr)


def _transverse_index(layout, i, j, k):
    # The faster-varying transverse Cartesian axis enumerates first.
    if layout.direction == "x":
        return j + layout.ny * k
    if layout.direction == "y":
        return i + layout.nx * k
    return i + layout.nx * j


def cartesian_to_packed(layout, i, j, k):
    """Map grid indices to (lane, position, group)."""
    if not (0 <= i < layout.nx and 0 <= j < layout.ny and 0 <= k < layout.nz):
        raise OutOfBounds(f"({i}, {j}, {k}) outside ({layout.nx}, {layout.ny}, {layout.nz})")
    position = {"x": i, "y": j, "z": k}[layout.direction]
    t = _transverse_index(layout, i, j, k)
    return t % layout.sz, position, t // layout.sz


def packed_linear_index(layout, i, j, k):
    lane, position, group = cartesian_to_packed(layout, i, j, k)
    return lane + layout.sz * position + layout.sz * layout.n * group


def _to_lines(cart, layout):
    """Reshape a Cartesian array to (lines, n) in transverse-index order."""
    if layout.direction == "x":
        return cart.transpose(2, 1, 0).reshape(layout.lines, layout.n)
    if layout.direction == "y":
        return cart.transpose(2, 0, 1).reshape(layout.lines, layout.n)
    return cart.transpose(1, 0, 2).reshape(layout.lines, layout.n)


def _from_lines(lines, layout):
    if layout.direction == "x":
        return lines.reshape(layout.nz, layout.ny, layout.nx).transpose(2, 1, 0)
    if layout.direction == "y":
        return lines.reshape(layout.nz, layout.nx, layout.ny).transpose(1, 2, 0)
    return lines.reshape(layout.ny, layout.nx, layout.nz).transpose(1, 0, 2)


def pack(cartesian_field, layout):
    """Pack an (nx, ny, nz) array into the grouped layout."""
    cart = np.asarray(cartesian_field, dtype=np.float64)
    if cart.shape != (layout.nx, layout.ny, layout.nz):
        raise ValueError(
            f"field shape {cart.shape}, expected ({layout.nx}, {layout.ny}, {layout.nz})"
        )
    lines = _to_lines(cart, layout)
    if layout.padded_lines != layout.lines:
        ghost = np.zeros((layout.padded_lines - layout.lines, layout.n))
        lines = np.concatenate([lines, ghost], axis=0)
    grouped = lines.reshape(layout.n_groups, layout.sz, layout.n).transpose(0, 2, 1)
    return GroupedField(layout, grouped)


def unpack(field):
    """Recover the (nx, ny, nz) Cartesian array; ghost lines are stripped."""
    lay = field.layout
    lines = field.data.transpose(0, 2, 1).reshape(lay.padded_lines, lay.n)
    return _from_lines(np.ascontiguousarray(lines[:lay.lines]), lay)


def reorder(field, to_direction):
    """Re-pack a field for a different solve direction.

    A pure permutation: every value keeps its Cartesian coordinate, so
    round trips are bit-identical. Reordering to the current direction
    returns a bit-identical copy.
    """
    new_layout = replace(field.layout, direction=to_direction)
    return pack(unpack(field), new_layout)
