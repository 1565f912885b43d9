"""Discrete model of R^n: grid domains, grid functions, cubes and fast power integrals.

The domain is the half-open box [0, N*h)^n split into N^n cells of side h,
and the cube families are grid-aligned only.  For a function supported in
the box and 1/p - 1/q < 0, any cube sticking out of the box is dominated by
a contained grid cube carrying the same mass (equal integral, smaller and
therefore better measure factor); for q = p the full box realizes the global
L^p norm.  The grid-aligned family is therefore sufficient for supported
functions.  For functions that are not grid-representable the restriction is
an approximation; that caveat is inherent to the discretization.

Power integrals over cubes run on cached prefix-sum tables, one table per
(function, exponent) pair, so a cube query costs a constant number of
additions after a single O(N^n) setup.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from itertools import product
from typing import Iterable, Iterator

import numpy as np

_CONJ_TOL = 1e-12


class CubeFamily(Enum):
    """Which cube family a supremum ranges over."""

    ALL = "all"
    DYADIC = "dyadic"


@dataclass(frozen=True)
class ExponentPair:
    """Integrability parameters p, q with their conjugates.

    The block-space regime requires 1 < q <= p < inf.  Morrey-only
    operations additionally accept 0 < q <= 1, flagged as a quasi-norm via
    :attr:`is_quasi`; conjugate exponents are undefined there.
    """

    p: float
    q: float

    def __post_init__(self):
        if not (0.0 < self.q <= self.p < np.inf):
            raise ValueError(f"need 0 < q <= p < inf, got p={self.p}, q={self.q}")

    @property
    def is_quasi(self) -> bool:
        return self.q <= 1.0

    @property
    def p_conj(self) -> float:
        if self.p <= 1.0:
            raise ValueError("p' requires p > 1")
        return self.p / (self.p - 1.0)

    @property
    def q_conj(self) -> float:
        if self.q <= 1.0:
            raise ValueError("q' requires q > 1")
        return self.q / (self.q - 1.0)

    @property
    def measure_exponent(self) -> float:
        """1/p - 1/q, the (nonpositive) exponent on the cube measure."""
        return 1.0 / self.p - 1.0 / self.q

    def require_block_regime(self) -> None:
        if self.q <= 1.0:
            raise ValueError(f"block-space operations need q > 1, got q={self.q}")

    def validate_conjugates(self) -> None:
        assert abs(1.0 / self.p + 1.0 / self.p_conj - 1.0) < _CONJ_TOL
        assert abs(1.0 / self.q + 1.0 / self.q_conj - 1.0) < _CONJ_TOL


@dataclass(frozen=True)
class GridDomain:
    """The box [0, N*h)^n split into N^n cells of side h (N a power of two)."""

    dimension: int
    cells_per_side: int
    cell_side: float = 1.0

    def __post_init__(self):
        n, N = self.dimension, self.cells_per_side
        if not (1 <= n <= 3):
            raise ValueError(f"dimension must be 1..3, got {n}")
        if N < 1 or (N & (N - 1)) != 0:
            raise ValueError(f"cells_per_side must be a positive power of two, got {N}")
        if not (self.cell_side > 0.0 and np.isfinite(self.cell_side)):
            raise ValueError(f"cell_side must be positive and finite, got {self.cell_side}")

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.cells_per_side,) * self.dimension

    @property
    def cell_measure(self) -> float:
        return self.cell_side**self.dimension

    @property
    def cell_count(self) -> int:
        return self.cells_per_side**self.dimension

    def contains_cube(self, cube: "Cube") -> bool:
        N = self.cells_per_side
        return all(0 <= a and a + cube.side_cells <= N for a in cube.anchor)


@dataclass(frozen=True)
class Cube:
    """A grid-aligned cube: anchor cell index and side length in cells.

    Anchors may be negative or stick out of a domain (as the triples of
    in-domain cubes do); operations that need containment check it against
    the domain explicitly.
    """

    anchor: tuple[int, ...]
    side_cells: int

    def __post_init__(self):
        if self.side_cells < 1:
            raise ValueError(f"side_cells must be positive, got {self.side_cells}")

    @property
    def dimension(self) -> int:
        return len(self.anchor)

    def measure(self, domain: GridDomain) -> float:
        """Uncropped measure (m*h)^n, even if the cube leaves the domain box."""
        return (self.side_cells * domain.cell_side) ** domain.dimension

    def slices(self) -> tuple[slice, ...]:
        return tuple(slice(a, a + self.side_cells) for a in self.anchor)

    def clip(self, domain: GridDomain) -> "Cube | None":
        """Largest grid-aligned box inside the domain; None if disjoint.

        The clipped region is a box, not necessarily a cube; it is returned
        as anchor plus per-axis extents via :func:`clip_region`.
        """
        region = clip_region(self, domain)
        if region is None:
            return None
        anchor, extents = region
        if len(set(extents)) == 1:
            return Cube(anchor, extents[0])
        return None


def clip_region(cube: Cube, domain: GridDomain) -> tuple[tuple[int, ...], tuple[int, ...]] | None:
    """Intersect a cube with the domain box: (anchor, per-axis extents) or None."""
    N = domain.cells_per_side
    anchor, extents = [], []
    for a in cube.anchor:
        lo = max(a, 0)
        hi = min(a + cube.side_cells, N)
        if hi <= lo:
            return None
        anchor.append(lo)
        extents.append(hi - lo)
    return tuple(anchor), tuple(extents)


def region_slices(anchor: tuple[int, ...], extents: tuple[int, ...]) -> tuple[slice, ...]:
    return tuple(slice(a, a + e) for a, e in zip(anchor, extents))


class GridFunction:
    """A real-valued function on a grid domain, immutable after construction.

    Immutability makes the per-exponent prefix-sum cache sound: tables are
    built lazily per exponent and reused across every cube query.
    """

    def __init__(self, domain: GridDomain, values):
        arr = np.asarray(values, dtype=float)
        if arr.size != domain.cell_count:
            raise ValueError(f"expected {domain.cell_count} values, got {arr.size}")
        arr = arr.reshape(domain.shape).copy()
        if not np.all(np.isfinite(arr)):
            raise ValueError("grid function values must be finite")
        arr.flags.writeable = False
        self.domain = domain
        self.values = arr
        self._tables: dict[float, np.ndarray] = {}

    def power_table(self, s: float) -> np.ndarray:
        """Prefix-sum table of |f|^s * h^n, padded with a zero margin."""
        if s <= 0.0:
            raise ValueError(f"power exponent must be positive, got {s}")
        tab = self._tables.get(s)
        if tab is None:
            n = self.domain.dimension
            acc = np.abs(self.values) ** s * self.domain.cell_measure
            for axis in range(n):
                acc = np.cumsum(acc, axis=axis)
            tab = np.zeros(tuple(m + 1 for m in acc.shape))
            tab[(slice(1, None),) * n] = acc
            tab.flags.writeable = False
            self._tables[s] = tab
        return tab

    def is_zero(self) -> bool:
        return not np.any(self.values)

    def __repr__(self):
        return f"GridFunction(domain={self.domain!r}, max|f|={np.max(np.abs(self.values)):g})"


@dataclass(frozen=True)
class CellSet:
    """A set of cells, stored as flat row-major indices."""

    domain: GridDomain
    members: frozenset[int]

    def __post_init__(self):
        count = self.domain.cell_count
        if any(not (0 <= m < count) for m in self.members):
            raise ValueError("cell index out of range")

    @property
    def measure(self) -> float:
        return len(self.members) * self.domain.cell_measure

    def indicator(self) -> GridFunction:
        flat = np.zeros(self.domain.cell_count)
        if self.members:
            flat[np.fromiter(self.members, dtype=int)] = 1.0
        return GridFunction(self.domain, flat)

    def mask(self) -> np.ndarray:
        return self.indicator().values.astype(bool)


def integrate_abs_power(f: GridFunction, s: float, cube: Cube) -> float:
    """Integral of |f|^s over a cube contained in the domain.

    Runs on the cached prefix-sum table: 2^n additions per query.
    """
    if not f.domain.contains_cube(cube):
        raise ValueError(f"cube {cube} not contained in domain {f.domain}")
    tab = f.power_table(s)
    n = f.domain.dimension
    total = 0.0
    for corner in product((0, 1), repeat=n):
        idx = tuple(a + d * cube.side_cells for a, d in zip(cube.anchor, corner))
        sign = (-1) ** (n - sum(corner))
        total += sign * tab[idx]
    return max(total, 0.0)


def box_integrals(f: GridFunction, s: float, side_cells: int) -> np.ndarray:
    """Integrals of |f|^s over every cube of the given side, indexed by anchor.

    Returns an array of shape (N - m + 1,)^n; entry [a] is the integral over
    the cube anchored at a.  This is the vectorized core behind the norm
    suprema and the separation oracle.
    """
    tab = f.power_table(s)
    n = f.domain.dimension
    m = side_cells
    acc = tab
    for axis in range(n):
        hi = [slice(None)] * n
        lo = [slice(None)] * n
        hi[axis] = slice(m, None)
        lo[axis] = slice(None, -m)
        acc = acc[tuple(hi)] - acc[tuple(lo)]
    return np.maximum(acc, 0.0)


def all_sides(domain: GridDomain, family: CubeFamily) -> list[int]:
    N = domain.cells_per_side
    if family is CubeFamily.ALL:
        return list(range(1, N + 1))
    return [1 << k for k in range((N).bit_length())]


def enumerate_cubes(domain: GridDomain, family: CubeFamily = CubeFamily.ALL) -> Iterator[Cube]:
    """All cubes of the family: side ascending, anchor lexicographic.

    ALL yields every side 1..N at every admissible anchor; DYADIC yields
    power-of-two sides at anchors aligned to the side.
    """
    N = domain.cells_per_side
    n = domain.dimension
    for m in all_sides(domain, family):
        step = m if family is CubeFamily.DYADIC else 1
        axis_anchors = range(0, N - m + 1, step)
        for anchor in product(axis_anchors, repeat=n):
            yield Cube(anchor, m)


def count_cubes(domain: GridDomain, family: CubeFamily = CubeFamily.ALL) -> int:
    N, n = domain.cells_per_side, domain.dimension
    if family is CubeFamily.ALL:
        return sum((N - m + 1) ** n for m in range(1, N + 1))
    return sum((N // m) ** n for m in all_sides(domain, family))


def triple(cube: Cube) -> Cube:
    """The concentric cube 3Q.  It may extend beyond the domain box; integrals
    then see zeros outside, while the measure stays the uncropped (3m*h)^n."""
    m = cube.side_cells
    return Cube(tuple(a - m for a in cube.anchor), 3 * m)


def first_unit_cube(domain: GridDomain) -> Cube:
    return Cube((0,) * domain.dimension, 1)


# ---------------------------------------------------------------------------
# JSON interchange


def grid_function_to_json(f: GridFunction) -> dict:
    return {
        "dimension": f.domain.dimension,
        "cells_per_side": f.domain.cells_per_side,
        "cell_side": f.domain.cell_side,
        "values": [float(v) for v in f.values.ravel()],
    }


def grid_function_from_json(obj: dict) -> GridFunction:
    domain = GridDomain(int(obj["dimension"]), int(obj["cells_per_side"]), float(obj["cell_side"]))
    return GridFunction(domain, obj["values"])


def cell_set_to_json(e: CellSet) -> dict:
    return {
        "dimension": e.domain.dimension,
        "cells_per_side": e.domain.cells_per_side,
        "cell_side": e.domain.cell_side,
        "members": sorted(e.members),
    }


def cell_set_from_json(obj: dict) -> CellSet:
    domain = GridDomain(int(obj["dimension"]), int(obj["cells_per_side"]), float(obj["cell_side"]))
    return CellSet(domain, frozenset(int(i) for i in obj["members"]))


def load_grid_function(path: str) -> GridFunction:
    with open(path) as fh:
        return grid_function_from_json(json.load(fh))
