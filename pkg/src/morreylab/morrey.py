"""Morrey norm with argmax certificate, embedding checks and dilation law.

The norm is the supremum over a cube family of

    |Q|^(1/p - 1/q) * (integral of |f|^q over Q)^(1/q)

and the reported argmax cube doubles as a separation oracle for the dual
block-norm solver: the most violated constraint of the Morrey unit ball is
exactly the argmax of this score.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import (
    Cube,
    CubeFamily,
    ExponentPair,
    GridDomain,
    GridFunction,
    all_sides,
    box_integrals,
    first_unit_cube,
)


@dataclass(frozen=True)
class MorreyResult:
    value: float
    argmax_cube: Cube
    family: CubeFamily
    is_quasi: bool = False


def _side_scores(f: GridFunction, pq: ExponentPair, m: int, family: CubeFamily) -> np.ndarray:
    """Scores of every cube of side m, indexed by anchor (subsampled if dyadic)."""
    integrals = box_integrals(f, pq.q, m)
    if family is CubeFamily.DYADIC and m > 1:
        sub = (slice(None, None, m),) * f.domain.dimension
        integrals = integrals[sub]
    measure = (m * f.domain.cell_side) ** f.domain.dimension
    return measure**pq.measure_exponent * integrals ** (1.0 / pq.q)


def morrey_norm(f: GridFunction, pq: ExponentPair, family: CubeFamily = CubeFamily.ALL) -> MorreyResult:
    """Maximize the Morrey score over the cube family.

    Ties break toward the enumeration order (side ascending, anchor
    lexicographic); the zero function reports the first unit cube.
    """
    best = 0.0
    best_cube = first_unit_cube(f.domain)
    for m in all_sides(f.domain, family):
        scores = _side_scores(f, pq, m, family)
        flat = int(np.argmax(scores))
        val = float(scores.ravel()[flat])
        if val > best:
            best = val
            anchor = np.unravel_index(flat, scores.shape)
            step = m if family is CubeFamily.DYADIC else 1
            best_cube = Cube(tuple(int(a) * step for a in anchor), m)
    return MorreyResult(best, best_cube, family, pq.is_quasi)


def top_scoring_cubes(
    f: GridFunction, pq: ExponentPair, family: CubeFamily, k: int = 8
) -> list[tuple[float, Cube]]:
    """The best cube of each side, sorted by score descending, at most k.

    Used by the cutting-plane solver to add several violated constraints per
    round; the first entry is the global argmax.
    """
    per_side = []
    for m in all_sides(f.domain, family):
        scores = _side_scores(f, pq, m, family)
        flat = int(np.argmax(scores))
        anchor = np.unravel_index(flat, scores.shape)
        step = m if family is CubeFamily.DYADIC else 1
        cube = Cube(tuple(int(a) * step for a in anchor), m)
        per_side.append((float(scores.ravel()[flat]), cube))
    per_side.sort(key=lambda t: -t[0])
    return per_side[:k]


@dataclass(frozen=True)
class EmbeddingReport:
    norm_q: float
    norm_r: float
    max_violation: float
    lp_norm: float | None
    passed: bool


def check_embedding(f: GridFunction, p: float, q: float, r: float, tol: float = 1e-10) -> EmbeddingReport:
    """Check the per-cube Holder comparison and the resulting norm ordering.

    Requires 0 < r < q <= p.  Asserts score_r(Q) <= score_q(Q) on every cube
    (hence norm_r <= norm_q) and, when p = q, that the Morrey norm equals the
    global L^p norm.
    """
    if not (0.0 < r < q <= p):
        raise ValueError(f"need 0 < r < q <= p, got p={p}, q={q}, r={r}")
    pq = ExponentPair(p, q)
    pr = ExponentPair(p, r)
    violation = 0.0
    for m in all_sides(f.domain, CubeFamily.ALL):
        s_q = _side_scores(f, pq, m, CubeFamily.ALL)
        s_r = _side_scores(f, pr, m, CubeFamily.ALL)
        violation = max(violation, float(np.max(s_r - s_q)))
    norm_q = morrey_norm(f, pq).value
    norm_r = morrey_norm(f, pr).value
    lp = None
    if p == q:
        lp = float(np.sum(np.abs(f.values) ** p) * f.domain.cell_measure) ** (1.0 / p)
        scale = max(lp, 1.0)
        if abs(lp - norm_q) > tol * scale:
            return EmbeddingReport(norm_q, norm_r, violation, lp, False)
    passed = violation <= tol * max(norm_q, 1.0)
    return EmbeddingReport(norm_q, norm_r, violation, lp, passed)


def dilate(f: GridFunction, k: int) -> GridFunction:
    """x -> f(2^k x) on the same grid, by exact coarsening.

    Requires f to be constant on aligned blocks of 2^k cells per axis
    (otherwise the dilation is not representable at this resolution and a
    ValueError is raised).  The result occupies the first N/2^k cells per
    axis and vanishes elsewhere.
    """
    if k < 1:
        raise ValueError(f"k must be a positive integer, got {k}")
    B = 1 << k
    N = f.domain.cells_per_side
    n = f.domain.dimension
    if B > N:
        raise ValueError(f"dilation by 2^{k} not representable on {N} cells")
    v = f.values
    split_shape = []
    for _ in range(n):
        split_shape.extend([N // B, B])
    blocks = v.reshape(split_shape)
    # move the B-axes last, then test constancy per block
    order = list(range(0, 2 * n, 2)) + list(range(1, 2 * n, 2))
    blocks = np.transpose(blocks, order).reshape((N // B,) * n + (B**n,))
    if not np.all(blocks == blocks[..., :1]):
        raise ValueError(f"function is not constant on 2^{k}-cell blocks; dilation not representable")
    out = np.zeros(f.domain.shape)
    out[(slice(0, N // B),) * n] = blocks[..., 0]
    return GridFunction(f.domain, out)


@dataclass(frozen=True)
class DilationReport:
    norm_original: float
    norm_dilated: float
    expected_ratio: float
    deviation: float
    passed: bool


def dilation_check(
    f: GridFunction, pq: ExponentPair, k: int, family: CubeFamily = CubeFamily.ALL, tol: float = 1e-10
) -> DilationReport:
    """Verify the scaling law |f(2^k .)| = 2^(-kn/p) |f| on the grid.

    Exact in one dimension.  In two or more dimensions the coarsened
    function's cube family only reaches block-aligned cubes of the original,
    and the supremum of a block-constant function can sit on a misaligned
    cube, so the identity may fail at finite scale; the report then carries
    the measured deviation.
    """
    g = dilate(f, k)
    n = f.domain.dimension
    ratio = 2.0 ** (-k * n / pq.p)
    nf = morrey_norm(f, pq, family).value
    ng = morrey_norm(g, pq, family).value
    expected = ratio * nf
    deviation = abs(ng - expected) / max(expected, np.finfo(float).tiny)
    return DilationReport(nf, ng, ratio, deviation, deviation <= tol)
