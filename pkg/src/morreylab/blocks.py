"""Blocks, decompositions and the block norm with two-sided certificates.

A (p', q')-block is a function supported in a cube Q with q'-norm at most
|Q|^(1/p - 1/q).  The block norm of f is the infimum of the total weight
over decompositions f = sum_k lambda_k b_k into weighted blocks.  On a
finite grid this infimum equals

    min { sum_Q |Q|^(1/q - 1/p) * ||g_Q||_{q'} :  f = sum_Q g_Q, supp g_Q in Q }

whose dual is the support-function problem

    max { <f, g> :  Morrey score of g at every cube Q is <= 1 }.

The solver runs cutting plane on the dual.  The separation oracle is the
Morrey argmax cube.  The restricted problem over the active cubes is solved
through its multiplier (Lagrangian) dual, a smooth convex bound-constrained
program in one variable per active cube, minimized by projected quasi-Newton
ascent; the per-cell inner maximization has a closed form, and the optimal
multipliers hand back the primal splitting g_Q directly (each active cube
receives the q-norm subgradient of the witness, scaled by its multiplier).
Any rounding residual f - sum_Q g_Q is assigned to the full-domain cube and
priced honestly, so the upper certificate is always a feasible weight.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import (
    Cube,
    CubeFamily,
    ExponentPair,
    GridDomain,
    GridFunction,
    clip_region,
    region_slices,
    triple,
)
from .morrey import morrey_norm, top_scoring_cubes

_ADMISSIBILITY_TOL = 1e-12
# synthesized sums agree with the mathematically exact value up to IEEE
# rounding of the merge normalization; comparisons use this relative slack
SYNTHESIS_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class Block:
    """Values supported in (the in-domain part of) a support cube.

    The support cube may stick out of the domain box, as the triples
    produced by dyadic regrouping do; admissibility always uses the
    uncropped measure of the declared cube.
    """

    support_cube: Cube
    values: np.ndarray

    def q_conj_norm(self, pq: ExponentPair, domain: GridDomain) -> float:
        qc = pq.q_conj
        return float(np.sum(np.abs(self.values) ** qc) * domain.cell_measure) ** (1.0 / qc)


def is_block(values, cube: Cube, pq: ExponentPair, domain: GridDomain) -> tuple[bool, float]:
    """Admissibility check: slack = |Q|^(1/p-1/q) - ||b||_{q'}.

    Values must vanish outside the cube (ValueError otherwise); the returned
    flag is slack >= -1e-12.
    """
    pq.require_block_regime()
    arr = np.asarray(values, dtype=float).reshape(domain.shape)
    region = clip_region(cube, domain)
    outside = arr.copy()
    if region is not None:
        outside[region_slices(*region)] = 0.0
    if np.any(outside != 0.0):
        raise ValueError("values do not vanish outside the support cube")
    qc = pq.q_conj
    norm = float(np.sum(np.abs(arr) ** qc) * domain.cell_measure) ** (1.0 / qc)
    slack = cube.measure(domain) ** pq.measure_exponent - norm
    return slack >= -_ADMISSIBILITY_TOL, slack


@dataclass
class Decomposition:
    """Weighted blocks over one domain; weights nonnegative, signs in blocks."""

    domain: GridDomain
    terms: list[tuple[float, Block]] = field(default_factory=list)

    @property
    def weight(self) -> float:
        return float(sum(lam for lam, _ in self.terms))

    def __len__(self):
        return len(self.terms)


def synthesize(d: Decomposition, domain: GridDomain | None = None) -> GridFunction:
    """Pointwise finite sum of the weighted blocks."""
    if domain is None:
        domain = d.domain
    if domain != d.domain:
        raise ValueError("decomposition domain does not match the requested domain")
    acc = np.zeros(domain.shape)
    for lam, block in d.terms:
        if block.values.shape != domain.shape:
            raise ValueError("block defined on a different domain")
        acc += lam * block.values
    return GridFunction(domain, acc)


@dataclass(frozen=True)
class BlockNormCertificate:
    """Two-sided certificate: a priced decomposition and a Morrey-unit witness.

    upper is the weight of the decomposition (feasible, so an upper bound);
    lower is the pairing <f, witness_g> with morrey_norm(witness_g) <= 1.
    """

    upper: float
    lower: float
    gap: float
    witness_g: GridFunction
    decomposition: Decomposition
    rounds: int = 0

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.upper + self.lower)


class BlockNormError(RuntimeError):
    """Raised when the solver exhausts its budget; carries the best certificate."""

    def __init__(self, message: str, certificate: BlockNormCertificate):
        super().__init__(message)
        self.certificate = certificate


def _cap(cube: Cube, pq: ExponentPair, domain: GridDomain) -> float:
    # linear-constraint bound in u = g^q space: sum_Q u h^n <= |Q|^(1 - q/p)
    return cube.measure(domain) ** (1.0 - pq.q / pq.p)


def _solve_restricted(fa, supp, pq, domain, cubes, caps, nu0):
    """Minimize the multiplier dual of the restricted witness problem.

    Projected Newton with the explicit Hessian: the dual is smooth and
    convex in one multiplier per active cube, so this reaches the KKT point
    to machine precision, which makes the recovered primal splitting
    complementary (no priced mass on slack cubes).  Returns (nu, sigma)
    with sigma the per-cell sum of covering multipliers over support cells.
    """
    q, qc = pq.q, pq.q_conj
    hn = domain.cell_measure
    fs = fa[supp] ** qc
    coef = hn * q ** (1.0 - qc) / qc
    sigma_floor = 10.0 ** (-200.0 / max(qc - 1.0, 1.0))
    k = len(cubes)
    # incidence over support cells
    M = np.zeros((k, int(np.count_nonzero(supp))))
    for i, cube in enumerate(cubes):
        mask = np.zeros(domain.shape, dtype=bool)
        mask[region_slices(*clip_region(cube, domain))] = True
        M[i] = mask[supp]

    def parts(nu):
        sig = np.maximum(M.T @ nu, sigma_floor)
        u = (fa[supp] / (q * sig)) ** qc
        val = coef * float(np.sum(fs * sig ** (1.0 - qc))) + float(np.dot(nu, caps))
        grad = caps - hn * (M @ u)
        return val, grad, sig, u

    nu = np.maximum(np.asarray(nu0, dtype=float), 0.0)
    val, grad, sig, u = parts(nu)
    scale = max(float(np.max(caps)), 1.0)
    for _ in range(120):
        kkt = np.where((nu > 0.0) | (grad < 0.0), grad, np.minimum(grad, 0.0))
        if float(np.linalg.norm(kkt, np.inf)) <= 1e-13 * scale:
            break
        free = (nu > 0.0) | (grad < 0.0)
        step = np.zeros(k)
        w = hn * qc * u / sig
        Mf = M[free]
        H = (Mf * w) @ Mf.T
        H[np.diag_indices_from(H)] += 1e-14 * max(np.trace(H), 1.0)
        try:
            step[free] = np.linalg.solve(H, -grad[free])
        except np.linalg.LinAlgError:
            step[free] = -grad[free]
        t = 1.0
        for _ in range(60):
            cand = np.maximum(nu + t * step, 0.0)
            cval, cgrad, csig, cu = parts(cand)
            if cval < val:
                nu, val, grad, sig, u = cand, cval, cgrad, csig, cu
                break
            t *= 0.5
        else:
            break
    sigma = np.zeros(domain.shape)
    sigma[supp] = sig
    return nu, np.maximum(sigma, sigma_floor)


def _qconj_norm(arr, qc, hn) -> float:
    return float(np.sum(np.abs(arr) ** qc) * hn) ** (1.0 / qc)


def block_norm(
    f: GridFunction,
    pq: ExponentPair,
    tol: float = 1e-3,
    family: CubeFamily = CubeFamily.ALL,
) -> BlockNormCertificate:
    """Block norm of f with a two-sided certificate at relative gap <= tol.

    Raises :class:`BlockNormError` (carrying the best certificate) if the
    iteration budget is exhausted before the gap closes.
    """
    pq.require_block_regime()
    if tol <= 0.0:
        raise ValueError(f"tol must be positive, got {tol}")
    domain = f.domain
    if f.is_zero():
        zero = GridFunction(domain, np.zeros(domain.shape))
        return BlockNormCertificate(0.0, 0.0, 0.0, zero, Decomposition(domain))

    scale = float(np.max(np.abs(f.values)))
    signs = np.sign(f.values)
    fa = np.abs(f.values) / scale
    supp = fa > 0.0
    q, qc = pq.q, pq.q_conj
    hn = domain.cell_measure
    me = pq.measure_exponent

    full = Cube((0,) * domain.dimension, domain.cells_per_side)
    cubes: list[Cube] = [full]
    keys = {(full.anchor, full.side_cells)}
    caps = [_cap(full, pq, domain)]
    # exact single-cube optimum as the starting multiplier
    nu = [(_qconj_norm(fa, qc, hn) ** qc / caps[0]) ** (1.0 / qc) / q]

    best: BlockNormCertificate | None = None
    rounds = 0
    stalled = 0
    while True:
        rounds += 1
        nu, sigma = _solve_restricted(fa, supp, pq, domain, cubes, np.asarray(caps), nu)
        g = np.zeros(domain.shape)
        g[supp] = (fa[supp] / (q * sigma[supp])) ** (1.0 / (q - 1.0))
        gf = GridFunction(domain, g)
        sep = morrey_norm(gf, pq, family)
        score = max(sep.value, np.finfo(float).tiny)

        witness = GridFunction(domain, signs * g / max(score, 1.0))
        # in normalized units; the certificate scales both bounds back
        lower = float(np.sum(fa * g) * hn) / max(score, 1.0)

        # primal splitting from the multipliers; residual goes to the full cube
        terms: list[tuple[float, Block]] = []
        covered = np.zeros(domain.shape)
        g_pow = np.zeros(domain.shape)
        g_pow[supp] = g[supp] ** (q - 1.0)
        for cube, nu_q in zip(cubes, nu):
            if nu_q <= 0.0:
                continue
            w = np.zeros(domain.shape)
            sl = region_slices(*clip_region(cube, domain))
            w[sl] = q * nu_q * g_pow[sl]
            covered += w
            price = cube.measure(domain) ** (-me) * _qconj_norm(w, qc, hn)
            if price > 0.0:
                terms.append((price, (cube, w)))
        residual = fa - covered
        res_price = full.measure(domain) ** (-me) * _qconj_norm(residual, qc, hn)
        if res_price > 0.0:
            terms.append((res_price, (full, residual)))
        upper = float(sum(lam for lam, _ in terms))

        gap = max((upper - lower) / max(lower, np.finfo(float).tiny), 0.0)
        if best is None or gap < best.gap:
            deco = Decomposition(domain)
            shrink = 1.0 - 1e-13
            for lam, (cube, w) in terms:
                bvals = signs * w * (cube.measure(domain) ** me * shrink / _qconj_norm(w, qc, hn))
                deco.terms.append((scale * lam / shrink, Block(cube, bvals)))
            best = BlockNormCertificate(
                scale * upper, scale * lower, gap, witness, deco, rounds
            )
        if best.gap <= tol:
            return best

        new_cubes = [
            (s, c)
            for s, c in top_scoring_cubes(gf, pq, family, k=8)
            if s > 1.0 + 1e-12 and (c.anchor, c.side_cells) not in keys
        ]
        if not new_cubes:
            stalled += 1
        else:
            stalled = 0
            for _, c in new_cubes:
                cubes.append(c)
                keys.add((c.anchor, c.side_cells))
                caps.append(_cap(c, pq, domain))
            nu = list(nu) + [0.0] * len(new_cubes)
        if stalled >= 3 or rounds > 10 * len(cubes) + 30:
            raise BlockNormError(
                f"block norm did not reach gap {tol:g} in {rounds} rounds (best {best.gap:g})",
                best,
            )
        if stalled:
            # restart the restricted solve from the single-cube profile
            nu = [0.0] * len(cubes)
            nu[0] = (_qconj_norm(fa, qc, hn) ** qc / caps[0]) ** (1.0 / qc) / q


def dominate_transfer(f: GridFunction, g: GridFunction, dg: Decomposition) -> Decomposition:
    """Carry a decomposition of a dominating g >= |f| over to f.

    Each block is multiplied pointwise by f/g (0/0 read as 0), which keeps
    admissibility since |f/g| <= 1, preserves the weight, and synthesizes to
    f exactly.
    """
    if f.domain != g.domain or dg.domain != g.domain:
        raise ValueError("mismatched domains")
    gv = g.values
    if np.any(gv < 0.0):
        raise ValueError("dominating function must be nonnegative")
    if np.any(np.abs(f.values) > gv * (1.0 + 1e-12) + 1e-300):
        raise ValueError("domination |f| <= g violated")
    synth = synthesize(dg).values
    if not np.allclose(synth, gv, rtol=SYNTHESIS_RTOL, atol=1e-12 * max(1.0, float(np.max(gv, initial=0.0)))):
        raise ValueError("decomposition does not synthesize the dominating function")
    ratio = np.zeros(f.domain.shape)
    np.divide(f.values, gv, out=ratio, where=gv > 0.0)
    out = Decomposition(f.domain)
    for lam, block in dg.terms:
        out.terms.append((lam, Block(block.support_cube, ratio * block.values)))
    return out


def _dyadic_home(cube: Cube) -> Cube:
    """Dyadic cube of comparable side whose triple contains the given cube.

    Side s is the largest power of two with s <= m < 2s; the anchor is the
    dyadic cube of that side containing the center of the input cube (the
    standard thirds containment).
    """
    m = cube.side_cells
    s = 1 << (m.bit_length() - 1)
    anchor = tuple(s * ((2 * a + m) // (2 * s)) for a in cube.anchor)
    home = Cube(anchor, s)
    tq = triple(home)
    for a, ta in zip(cube.anchor, tq.anchor):
        if not (ta <= a and a + m <= ta + tq.side_cells):
            raise ValueError(f"no admissible dyadic anchor for {cube}")
    return home


def regroup_dyadic(d: Decomposition) -> Decomposition:
    """Regroup a decomposition onto dyadic cubes, supports inside triples.

    Terms whose support cubes share the same dyadic home Q merge into a
    single term with weight 3^n * (sum of their weights), supported in 3Q;
    the synthesized function is unchanged and the total weight inflates by
    exactly 3^n.
    """
    n = d.domain.dimension
    factor = 3**n
    groups: dict[tuple, list[tuple[float, Block]]] = {}
    order: list[tuple] = []
    for lam, block in d.terms:
        home = _dyadic_home(block.support_cube)
        key = (home.anchor, home.side_cells)
        if key not in groups:
            groups[key] = []
            order.append(key)
        groups[key].append((lam, block))
    out = Decomposition(d.domain)
    for key in order:
        members = groups[key]
        total = sum(lam for lam, _ in members)
        merged = np.zeros(d.domain.shape)
        for lam, block in members:
            merged += lam * block.values
        lam_q = factor * total
        home = Cube(key[0], key[1])
        if lam_q > 0.0:
            out.terms.append((lam_q, Block(triple(home), merged / lam_q)))
        else:
            out.terms.append((0.0, Block(triple(home), merged)))
    return out


def finite_decomposition(f: GridFunction, pq: ExponentPair, tol: float = 1e-2) -> Decomposition:
    """Finite decomposition with certified weight control.

    For f >= 0 the weight is at most 2(1+tol) times the block norm; signed
    functions are split into positive and negative parts, which at most
    doubles that bound (well inside the stated factor 8).  The tail of the
    near-optimal decomposition beyond a cutoff is folded into a single block
    on the bounding cube Q0 of the support, priced as
    |Q0|^(1/q - 1/p) * ||tail||_{q'}.
    """
    pq.require_block_regime()
    domain = f.domain
    if f.is_zero():
        return Decomposition(domain)
    neg = np.minimum(f.values, 0.0)
    if np.any(neg != 0.0):
        pos_part = finite_decomposition(GridFunction(domain, np.maximum(f.values, 0.0)), pq, tol)
        neg_part = finite_decomposition(GridFunction(domain, -neg), pq, tol)
        out = Decomposition(domain, list(pos_part.terms))
        for lam, block in neg_part.terms:
            out.terms.append((lam, Block(block.support_cube, -block.values)))
        return out

    q0 = _bounding_cube(f)
    cert = block_norm(f, pq, tol=min(tol, 1e-3))
    terms = sorted(cert.decomposition.terms, key=lambda t: -t[0])
    me = pq.measure_exponent
    qc = pq.q_conj
    hn = domain.cell_measure
    q0_price = q0.measure(domain) ** (-me)

    # smallest cutoff whose folded tail contributes at most tol * weight
    suffix = np.zeros(domain.shape)
    tail_prices = [0.0]
    for lam, block in reversed(terms):
        suffix = suffix + lam * block.values
        tail_prices.append(q0_price * _qconj_norm(suffix, qc, hn))
    tail_prices.reverse()  # tail_prices[k] folds terms[k:]
    cut = len(terms)
    for k in range(len(terms) + 1):
        kept = sum(lam for lam, _ in terms[:k])
        if tail_prices[k] <= tol * max(kept + tail_prices[k], np.finfo(float).tiny):
            cut = k
            break

    out = Decomposition(domain, list(terms[:cut]))
    if cut < len(terms):
        tail = np.zeros(domain.shape)
        for lam, block in terms[cut:]:
            tail += lam * block.values
        lam_tail = q0_price * _qconj_norm(tail, qc, hn)
        if lam_tail > 0.0:
            out.terms.append((lam_tail, Block(q0, tail / lam_tail)))
    return out


def _bounding_cube(f: GridFunction) -> Cube:
    """Smallest grid cube containing the support (square, fitted to the box)."""
    idx = np.nonzero(f.values)
    N = f.domain.cells_per_side
    lo = [int(np.min(ax)) for ax in idx]
    hi = [int(np.max(ax)) + 1 for ax in idx]
    side = max(h - l for l, h in zip(lo, hi))
    anchor = tuple(min(l, N - side) for l in lo)
    return Cube(anchor, side)
