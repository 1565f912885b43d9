"""Exact piecewise-constant 1-D engine and the named counterexample families.

Breakpoints are exact rationals; floating point enters only at the final
power evaluations.  The Morrey supremum over all real intervals is computed
combinatorially: with the endpoints l, r ranging over a fixed pair of
pieces, the inner integral is affine in each endpoint, so the score is
maximized per pair on the box edges, where the stationarity condition is
linear and solvable in closed form; corners and the clamped critical points
cover every candidate.  Interior critical points require equal piece powers
and are then constant along the diagonal, so the edge sweep still sees
their value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .grid import ExponentPair
from .hausdorff import IntervalSet


def _frac(x) -> Fraction:
    if isinstance(x, str):
        return Fraction(x)
    return Fraction(x)


class StepFunction1D:
    """Piecewise-constant function on [x_0, x_m), zero outside.

    values[i] is the value on [breakpoints[i], breakpoints[i+1]).  An empty
    breakpoint list is the zero function.
    """

    def __init__(self, breakpoints: Sequence, values: Sequence[float]):
        bps = tuple(_frac(b) for b in breakpoints)
        vals = tuple(float(v) for v in values)
        if bps and len(vals) != len(bps) - 1:
            raise ValueError("need one value per piece")
        if not bps and vals:
            raise ValueError("values given without breakpoints")
        for a, b in zip(bps, bps[1:]):
            if not a < b:
                raise ValueError("breakpoints must be strictly increasing")
        if any(not math.isfinite(v) for v in vals):
            raise ValueError("piece values must be finite")
        self.breakpoints = bps
        self.values = vals

    @classmethod
    def zero(cls) -> "StepFunction1D":
        return cls((), ())

    @classmethod
    def from_segments(cls, segments: Iterable[tuple]) -> "StepFunction1D":
        """Build from (start, end, value) segments, inserting zero gaps."""
        segs = sorted(((_frac(a), _frac(b), float(v)) for a, b, v in segments), key=lambda s: s[0])
        segs = [(a, b, v) for a, b, v in segs if a < b]
        if not segs:
            return cls.zero()
        for (a0, b0, _), (a1, _, _) in zip(segs, segs[1:]):
            if a1 < b0:
                raise ValueError("segments overlap")
        bps: list[Fraction] = []
        vals: list[float] = []
        cursor = segs[0][0]
        bps.append(cursor)
        for a, b, v in segs:
            if a > cursor:
                vals.append(0.0)
                bps.append(a)
            vals.append(v)
            bps.append(b)
            cursor = b
        return cls(bps, vals)

    @property
    def pieces(self) -> list[tuple[Fraction, Fraction, float]]:
        return [
            (a, b, v)
            for a, b, v in zip(self.breakpoints, self.breakpoints[1:], self.values)
        ]

    def __call__(self, x) -> float:
        t = _frac(x)
        for a, b, v in self.pieces:
            if a <= t < b:
                return v
        return 0.0

    def integrate_over(self, a, b, absolute: bool = False) -> float:
        """Integral over [a, b]; overlap lengths are exact rationals."""
        lo, hi = _frac(a), _frac(b)
        total = 0.0
        for s, e, v in self.pieces:
            ov = min(e, hi) - max(s, lo)
            if ov > 0:
                total += (abs(v) if absolute else v) * float(ov)
        return total

    def integrate_abs_over(self, a, b) -> float:
        return self.integrate_over(a, b, absolute=True)

    def restrict_beyond(self, cutoff) -> "StepFunction1D":
        """The tail: f restricted to (cutoff, infinity)."""
        c = _frac(cutoff)
        segs = []
        for a, b, v in self.pieces:
            if b <= c:
                continue
            segs.append((max(a, c), b, v))
        return StepFunction1D.from_segments([(a, b, v) for a, b, v in segs if v != 0.0])

    def combine(self, other: "StepFunction1D", op) -> "StepFunction1D":
        bps = sorted(set(self.breakpoints) | set(other.breakpoints))
        segs = []
        for a, b in zip(bps, bps[1:]):
            v = op(self(a), other(a))
            if v != 0.0:
                segs.append((a, b, v))
        return StepFunction1D.from_segments(segs)

    def scaled_argument(self, lam) -> "StepFunction1D":
        """x -> f(x / lam), i.e. the graph stretched by lam > 0."""
        factor = _frac(lam)
        if factor <= 0:
            raise ValueError("scale factor must be positive")
        return StepFunction1D([b * factor for b in self.breakpoints], self.values)


@dataclass(frozen=True)
class StepMorreyResult:
    value: float
    left: float
    right: float


def morrey_norm_exact_1d(f: StepFunction1D, pq: ExponentPair) -> StepMorreyResult:
    """Exact supremum of the Morrey score over all real intervals."""
    q = pq.q
    me = pq.measure_exponent  # 1/p - 1/q
    qe = q * me
    nz = [(a, b, abs(v)) for a, b, v in f.pieces if v != 0.0]
    if not nz:
        return StepMorreyResult(0.0, 0.0, 1.0)
    K = len(nz)
    starts = [a for a, _, _ in nz]
    ends = [b for _, b, _ in nz]
    c = np.array([float(b - a) for a, b, _ in nz])
    W = np.array([v**q for _, _, v in nz])
    vabs = np.array([v for _, _, v in nz])
    # mass prefix over nonzero pieces (gaps contribute nothing)
    M = np.concatenate([[0.0], np.cumsum(W * c)])

    # exact float path when every breakpoint is representable
    floats_exact = all(Fraction(float(x)) == x for x in f.breakpoints)
    sf = np.array([float(x) for x in starts])
    ef = np.array([float(x) for x in ends])

    best = 0.0
    best_lr = (float(starts[0]), float(ends[0]))

    def consider(val, l, r):
        nonlocal best, best_lr
        idx = np.argmax(val)
        if val[idx] > best:
            best = float(val[idx])
            best_lr = (float(l[idx]), float(r[idx]))

    def score(d, A):
        dd = np.maximum(d, 0.0)
        AA = np.maximum(A, 0.0)
        out = np.zeros_like(dd)
        mask = (AA > 0.0) & (dd > 0.0)
        out[mask] = dd[mask] ** me * AA[mask] ** (1.0 / q)
        return out

    # single-piece candidates: score = |v| * length^(1/p)
    single = vabs * c ** (1.0 / pq.p)
    consider(single, sf, ef)

    for i in range(K):
        js = np.arange(i + 1, K)
        if js.size == 0:
            continue
        if floats_exact:
            B = sf[js] - ef[i]
        else:
            B = np.array([float(starts[j] - ends[i]) for j in js])
        S = M[js] - M[i + 1]
        ci, Wi = c[i], W[i]
        cj, Wj = c[js], W[js]
        li, ri = sf[i], ef[i]
        lj, rj = sf[js], ef[js]

        cand_vals = []
        cand_l = []
        cand_r = []
        # corners (lam, rho) in {0,1}^2; lam=1 and rho=0 shrink onto
        # neighboring pairs but are kept as cheap duplicates
        for lam in (0.0, 1.0):
            for rho in (1.0, 0.0):
                d = B + (1.0 - lam) * ci + rho * cj
                A = S + Wi * ci * (1.0 - lam) + Wj * cj * rho
                cand_vals.append(score(d, A))
                cand_l.append(np.full(js.shape, li + lam * ci))
                cand_r.append(lj + rho * cj)
        if qe < 0.0:
            kj = Wj / (-qe)
            ki = Wi / (-qe)
            # free rho on the lam edges: A = kj * d at the critical point
            for lam in (0.0, 1.0):
                d0 = B + (1.0 - lam) * ci
                A0 = S + Wi * ci * (1.0 - lam)
                denom = cj * (Wj - kj)
                with np.errstate(divide="ignore", invalid="ignore"):
                    rho = np.where(denom != 0.0, (kj * d0 - A0) / denom, 0.0)
                rho = np.clip(np.nan_to_num(rho), 0.0, 1.0)
                d = d0 + rho * cj
                A = A0 + Wj * cj * rho
                cand_vals.append(score(d, A))
                cand_l.append(np.full(js.shape, li + lam * ci))
                cand_r.append(lj + rho * cj)
            # free lam on the rho edges: A = ki * d
            for rho in (0.0, 1.0):
                d1 = B + ci + rho * cj
                A1 = S + Wi * ci + Wj * cj * rho
                denom = ci * (ki - Wi)
                if denom != 0.0:
                    lam = (ki * d1 - A1) / denom
                else:
                    lam = np.zeros(js.shape)
                lam = np.clip(np.nan_to_num(lam), 0.0, 1.0)
                d = d1 - ci * lam
                A = A1 - Wi * ci * lam
                cand_vals.append(score(d, A))
                cand_l.append(li + lam * ci)
                cand_r.append(lj + rho * cj)
        for val, ll, rr in zip(cand_vals, cand_l, cand_r):
            consider(val, ll, rr)
    return StepMorreyResult(best, best_lr[0], best_lr[1])


# ---------------------------------------------------------------------------
# named example families


@dataclass(frozen=True)
class GroupedSpikesReport:
    groups: int
    set_integral: float
    norm: float
    ratio: float
    argmax: tuple[float, float]
    argmax_single_interval: bool


def example_p5_failure(
    p: float, q: float, J: int, alpha: float = 100.0
) -> tuple[StepFunction1D, GroupedSpikesReport]:
    """Grouped spike family whose set integral grows while the norm stays 1.

    Group l (l = 0..J-1) carries 2^l intervals of length 4^(-l) at amplitude
    4^(l/p), clustered near alpha^(l+1) with intra-cluster gaps alpha.  Each
    single interval scores exactly 1; the wide spacing keeps every
    multi-interval window below 1, so the norm is 1 while the set integral
    adds 2^l * 4^(l/p - l) per group.
    """
    if not (1.0 < q < p):
        raise ValueError(f"need 1 < q < p, got p={p}, q={q}")
    if not (1 <= J <= 12):
        raise ValueError(f"need 1 <= J <= 12, got {J}")
    if alpha < 4.0:
        raise ValueError(f"spacing alpha must be at least 4, got {alpha}")
    a = _frac(alpha)
    segments = []
    integral = 0.0
    for l in range(J):
        length = Fraction(1, 4) ** l
        amplitude = 4.0 ** (l / p)
        base = a ** (l + 1)
        count = 2**l
        for t in range(count):
            start = base + t * (length + a)
            segments.append((start, start + length, amplitude))
        integral += count * amplitude * float(length)
    f = StepFunction1D.from_segments(segments)
    res = morrey_norm_exact_1d(f, ExponentPair(p, q))
    single = any(
        float(s) <= res.left + 1e-9 and res.right <= float(e) + 1e-9
        for s, e, _ in segments
    )
    report = GroupedSpikesReport(J, integral, res.value, integral / res.value, (res.left, res.right), single)
    return f, report


def _spread_interval(k: int, p: float, q: float) -> tuple[Fraction, Fraction]:
    expo = p / (p - q)
    shift = _frac(float(k) ** expo) if expo != round(expo) else Fraction(k) ** int(round(expo))
    return (Fraction(k - 1) + shift, Fraction(k) + shift)


@dataclass(frozen=True)
class SpreadSetReport:
    norm: float
    tails: tuple[tuple[float, float], ...]
    min_tail_norm: float


def example_non_dense(p: float, q: float, K: int) -> tuple[IntervalSet, SpreadSetReport]:
    """Unit intervals running off to infinity: every tail keeps norm >= 1.

    The k-th interval sits at k - 1 + k^(p/(p-q)) with unit length, so any
    truncation leaves a unit interval whose score alone is exactly 1.
    """
    if not (1.0 < q < p):
        raise ValueError(f"need 1 < q < p, got p={p}, q={q}")
    if not (1 <= K <= 50):
        raise ValueError(f"need 1 <= K <= 50, got {K}")
    intervals = [_spread_interval(k, p, q) for k in range(1, K + 1)]
    E = IntervalSet(intervals)
    chi = StepFunction1D.from_segments([(a, b, 1.0) for a, b in intervals])
    pq = ExponentPair(p, q)
    norm = morrey_norm_exact_1d(chi, pq).value
    tails = []
    min_tail = math.inf
    for a, b in intervals[:-1]:
        cutoff = b
        tail = chi.restrict_beyond(cutoff)
        tnorm = morrey_norm_exact_1d(tail, pq).value
        tails.append((float(cutoff), tnorm))
        min_tail = min(min_tail, tnorm)
    if not tails:
        min_tail = norm
    return E, SpreadSetReport(norm, tuple(tails), min_tail)


def example_functional_sequence(f: StepFunction1D, p: float, q: float, K: int) -> list[float]:
    """Exact integrals of f over the spread-out windows I_1..I_K."""
    if not (1.0 < q < p):
        raise ValueError(f"need 1 < q < p, got p={p}, q={q}")
    out = []
    for k in range(1, K + 1):
        a, b = _spread_interval(k, p, q)
        out.append(f.integrate_over(a, b))
    return out


@dataclass(frozen=True)
class PowerNormRow:
    level: int
    value: float
    left: float
    right: float
    relative_error: float
    centered: bool


@dataclass(frozen=True)
class PowerNormReport:
    limit: float
    rows: tuple[PowerNormRow, ...]


def power_approximant(p: float, level: int) -> StepFunction1D:
    """Graded dyadic under-approximant of |x|^(-1/p) on [-1, 1].

    Dyadic shells [2^(-j-1), 2^(-j)) down to the inner scale 4^(-level),
    each split into 2^(1 + ceil(level/2)) equal cells carrying the cell
    infimum, mirrored to the negative axis.  Meshes are nested across
    levels, so the approximants increase pointwise with the level.
    """
    shells = 2 * level
    sub = 2 ** (1 + (level + 1) // 2)
    segments = []
    inner = Fraction(1, 4**level)
    segments.append((Fraction(0), inner, float(inner) ** (-1.0 / p)))
    segments.append((-inner, Fraction(0), float(inner) ** (-1.0 / p)))
    for j in range(shells):
        lo = Fraction(1, 2 ** (j + 1))
        width = lo / sub
        for t in range(sub):
            a = lo + t * width
            b = a + width
            v = float(b) ** (-1.0 / p)
            segments.append((a, b, v))
            segments.append((-b, -a, v))
    return StepFunction1D.from_segments(segments)


def power_function_norm(p: float, q: float, levels: int) -> PowerNormReport:
    """Exact norms of the graded approximants of |x|^(-1/p).

    The singularity forces a graded mesh: a uniform mesh of width d only
    recovers the q-mass up to O(d^(1 - q/p)), too slow near x = 0.  With
    nested graded meshes the norms increase with the level toward the
    closed-form limit 2^(1/p) * (1 - q/p)^(-1/q), attained on centered
    intervals.
    """
    if not (0.0 < q < p):
        raise ValueError(f"need 0 < q < p, got p={p}, q={q}")
    if levels < 1:
        raise ValueError("levels must be at least 1")
    limit = 2.0 ** (1.0 / p) * (1.0 - q / p) ** (-1.0 / q)
    pq = ExponentPair(p, q)
    rows = []
    for L in range(1, levels + 1):
        f = power_approximant(p, L)
        res = morrey_norm_exact_1d(f, pq)
        mid = 0.5 * (res.left + res.right)
        centered = abs(mid) <= 0.01 * (res.right - res.left)
        rows.append(
            PowerNormRow(L, res.value, res.left, res.right, abs(res.value - limit) / limit, centered)
        )
    return PowerNormReport(limit, tuple(rows))
