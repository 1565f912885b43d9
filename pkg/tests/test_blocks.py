import numpy as np
import pytest

from morreylab.blocks import (
    Block,
    BlockNormError,
    Decomposition,
    _dyadic_home,
    block_norm,
    dominate_transfer,
    finite_decomposition,
    is_block,
    regroup_dyadic,
    synthesize,
)
from morreylab.grid import Cube, CubeFamily, ExponentPair, GridDomain, GridFunction, triple
from morreylab.morrey import morrey_norm

from conftest import random_admissible_block, random_function


def test_is_block_indicator(pq):
    dom = GridDomain(1, 4, 1.0)
    vals = np.zeros(4)
    vals[0] = 1.0
    ok, slack = is_block(vals, Cube((0,), 1), pq, dom)
    assert ok and slack == pytest.approx(0.0, abs=1e-12)


def test_is_block_zero(pq):
    dom = GridDomain(1, 4, 1.0)
    ok, slack = is_block(np.zeros(4), Cube((1,), 2), pq, dom)
    assert ok
    assert slack == pytest.approx(2.0 ** pq.measure_exponent)


def test_is_block_doubled_indicator_fails():
    dom = GridDomain(1, 4, 1.0)
    pq = ExponentPair(2.0, 2.0)
    vals = np.zeros(4)
    vals[0] = 2.0
    ok, slack = is_block(vals, Cube((0,), 1), pq, dom)
    assert not ok and slack == pytest.approx(-1.0)


def test_is_block_support_violation(pq):
    dom = GridDomain(1, 4, 1.0)
    with pytest.raises(ValueError):
        is_block(np.ones(4), Cube((0,), 2), pq, dom)


def test_synthesize_empty_and_single(pq):
    dom = GridDomain(1, 4, 1.0)
    assert synthesize(Decomposition(dom)).is_zero()
    vals = np.zeros(4)
    vals[0] = 1.0
    d = Decomposition(dom, [(2.0, Block(Cube((0,), 1), vals))])
    assert np.array_equal(synthesize(d).values, 2.0 * vals)


def test_synthesize_overlapping_matches_oracle(rng, pq):
    dom = GridDomain(1, 8, 0.5)
    blocks_ = [random_admissible_block(rng, dom, pq) for _ in range(4)]
    lams = rng.uniform(0.0, 2.0, 4)
    d = Decomposition(dom, list(zip(lams, blocks_)))
    expected = np.zeros(dom.shape)
    for lam, b in zip(lams, blocks_):
        expected = expected + lam * b.values
    assert np.allclose(synthesize(d).values, expected, rtol=1e-15, atol=0.0)


def test_synthesize_domain_mismatch(pq):
    d = Decomposition(GridDomain(1, 4), [])
    with pytest.raises(ValueError):
        synthesize(d, GridDomain(1, 8))


def test_block_norm_indicator(pq):
    dom = GridDomain(1, 8, 0.25)
    vals = np.zeros(8)
    vals[:4] = 1.0
    cert = block_norm(GridFunction(dom, vals), pq, tol=1e-3)
    assert cert.upper == pytest.approx(1.0, abs=2e-3)
    assert cert.lower == pytest.approx(1.0, abs=2e-3)
    # the indicator itself is the optimal witness
    assert morrey_norm(cert.witness_g, pq).value <= 1 + 1e-9


def test_block_norm_zero(pq):
    dom = GridDomain(1, 8)
    cert = block_norm(GridFunction(dom, np.zeros(8)), pq)
    assert cert.upper == 0.0 and cert.lower == 0.0 and cert.gap == 0.0
    assert len(cert.decomposition) == 0


def test_block_norm_two_cells(pq):
    dom = GridDomain(1, 2, 1.0)
    cert = block_norm(GridFunction(dom, [1.0, 1.0]), pq, tol=1e-4)
    root2 = np.sqrt(2.0)
    assert cert.upper == pytest.approx(root2, rel=1e-3)
    assert cert.lower == pytest.approx(root2, rel=1e-3)
    assert np.allclose(cert.witness_g.values, [2.0**-0.5, 2.0**-0.5], atol=1e-6)


def test_block_norm_weak_duality_random(rng, pq):
    for trial in range(20):
        dom = GridDomain(1, 8, 0.5) if trial % 2 else GridDomain(2, 4, 1.0)
        f = random_function(rng, dom, nonnegative=True)
        cert = block_norm(f, pq, tol=1e-3)
        assert cert.lower <= cert.upper + 1e-12
        assert cert.gap <= 1e-3
        assert morrey_norm(cert.witness_g, pq).value <= 1 + 1e-9
        # certificate invariants: decomposition feasible and synthesizes f
        for lam, b in cert.decomposition.terms:
            assert lam >= 0.0
            ok, slack = is_block(b.values, b.support_cube, pq, dom)
            assert ok, slack
        assert np.allclose(synthesize(cert.decomposition).values, f.values, rtol=1e-9, atol=1e-12)


def test_block_norm_certificate_pairing_consistent(rng, pq):
    from morreylab.duality import pairing

    dom = GridDomain(1, 16, 0.5)
    f = random_function(rng, dom)
    cert = block_norm(f, pq, tol=1e-4)
    assert cert.lower == pytest.approx(pairing(f, cert.witness_g), rel=1e-12)


def test_block_norm_signed_equals_abs(rng, pq):
    dom = GridDomain(1, 16, 0.5)
    f = random_function(rng, dom)
    fa = GridFunction(dom, np.abs(f.values))
    c1 = block_norm(f, pq, tol=1e-5)
    c2 = block_norm(fa, pq, tol=1e-5)
    assert c1.upper == pytest.approx(c2.upper, rel=1e-4)


def test_block_norm_inclusion_in_q(rng):
    # finer blocks (larger q) decompose more cheaply: norm at q' <= norm at r'
    pr = ExponentPair(2.0, 1.2)
    pq = ExponentPair(2.0, 4.0 / 3.0)
    dom = GridDomain(1, 16, 0.5)
    for _ in range(10):
        f = random_function(rng, dom, nonnegative=True)
        cq = block_norm(f, pq, tol=1e-4)
        cr = block_norm(f, pr, tol=1e-4)
        assert cq.upper <= cr.upper * (1 + 3e-4) + 1e-12


def test_admissible_blocks_transfer_up_in_q(rng):
    # every (p', r')-block passes the admissibility check at (p', q'), r < q
    pr = ExponentPair(2.0, 1.2)
    pq = ExponentPair(2.0, 4.0 / 3.0)
    dom = GridDomain(1, 8, 0.5)
    for _ in range(50):
        b = random_admissible_block(rng, dom, pr)
        ok, _ = is_block(b.values, b.support_cube, pq, dom)
        assert ok


def test_block_norm_budget_error_carries_certificate(rng, pq):
    dom = GridDomain(1, 32, 0.5)
    f = random_function(rng, dom, nonnegative=True)
    with pytest.raises(BlockNormError) as err:
        block_norm(f, pq, tol=1e-15)
    cert = err.value.certificate
    assert cert.lower <= cert.upper


def test_dominate_transfer_identity(rng, pq):
    dom = GridDomain(1, 8, 0.5)
    g = random_function(rng, dom, nonnegative=True)
    dg = block_norm(g, pq, tol=1e-4).decomposition
    out = dominate_transfer(g, g, dg)
    assert out.weight == pytest.approx(dg.weight, rel=1e-12)
    assert np.allclose(synthesize(out).values, g.values, rtol=1e-9, atol=1e-12)


def test_dominate_transfer_zero(rng, pq):
    dom = GridDomain(1, 8, 0.5)
    g = random_function(rng, dom, nonnegative=True)
    dg = block_norm(g, pq, tol=1e-4).decomposition
    zero = GridFunction(dom, np.zeros(dom.shape))
    out = dominate_transfer(zero, g, dg)
    assert out.weight == pytest.approx(dg.weight, rel=1e-12)
    assert synthesize(out).is_zero()


def test_dominate_transfer_half(rng, pq):
    dom = GridDomain(1, 8, 0.5)
    g = random_function(rng, dom, nonnegative=True)
    dg = block_norm(g, pq, tol=1e-4).decomposition
    f = GridFunction(dom, 0.5 * g.values)
    out = dominate_transfer(f, g, dg)
    assert out.weight == pytest.approx(dg.weight, rel=1e-12)
    assert np.allclose(synthesize(out).values, f.values, rtol=1e-9, atol=1e-12)
    for lam, b in out.terms:
        ok, slack = is_block(b.values, b.support_cube, pq, dom)
        assert ok, slack
    # the transferred weight upper-bounds the block norm of f
    assert block_norm(f, pq, tol=1e-4).lower <= out.weight * (1 + 1e-9)


def test_dominate_transfer_rejects_violation(rng, pq):
    dom = GridDomain(1, 8, 0.5)
    g = random_function(rng, dom, nonnegative=True)
    dg = block_norm(g, pq, tol=1e-4).decomposition
    too_big = GridFunction(dom, g.values + 1.0)
    with pytest.raises(ValueError):
        dominate_transfer(too_big, g, dg)


def test_dyadic_home_center_rule():
    # cells [3, 8) at h = 1/8 model the interval [0.375, 1.0): side 5 gets
    # dyadic side 4, the center 5.5 lands in [4, 8) = [0.5, 1.0)
    home = _dyadic_home(Cube((3,), 5))
    assert home == Cube((4,), 4)
    assert triple(home) == Cube((0,), 12)


def test_dyadic_home_fixed_point_on_dyadic_cubes():
    for anchor, side in (((0,), 4), ((8,), 8), ((4, 12), 4)):
        assert _dyadic_home(Cube(anchor, side)) == Cube(anchor, side)


def test_dyadic_home_containment_random(rng):
    for _ in range(200):
        n = int(rng.integers(1, 3))
        m = int(rng.integers(1, 65))
        anchor = tuple(int(rng.integers(0, 64)) for _ in range(n))
        cube = Cube(anchor, m)
        home = _dyadic_home(cube)
        s = home.side_cells
        assert s <= m < 2 * s
        t = triple(home)
        for a, ta in zip(cube.anchor, t.anchor):
            assert ta <= a and a + m <= ta + t.side_cells


def test_regroup_empty(pq):
    out = regroup_dyadic(Decomposition(GridDomain(1, 8)))
    assert len(out.terms) == 0


def test_regroup_single_dyadic_block(rng, pq):
    dom = GridDomain(2, 8, 0.5)
    vals = np.zeros(dom.shape)
    cube = Cube((2, 2), 2)
    vals[cube.slices()] = 0.1
    d = Decomposition(dom, [(1.5, Block(cube, vals))])
    out = regroup_dyadic(d)
    assert len(out.terms) == 1
    lam, b = out.terms[0]
    assert lam == pytest.approx(1.5 * 9.0)
    assert b.support_cube == triple(cube)
    assert np.allclose(synthesize(out).values, synthesize(d).values, rtol=1e-12, atol=1e-300)


def test_regroup_random_decompositions(rng, pq):
    dom = GridDomain(1, 16, 0.25)
    for _ in range(50):
        k = int(rng.integers(1, 6))
        lams = rng.uniform(0.0, 1.0, k)
        total = float(rng.uniform(0.5, 2.0))
        lams *= total / max(lams.sum(), 1e-12)
        d = Decomposition(dom, [(float(l), random_admissible_block(rng, dom, pq)) for l in lams])
        before = synthesize(d).values
        out = regroup_dyadic(d)
        after = synthesize(out).values
        scale = max(1.0, float(np.max(np.abs(before))))
        assert np.max(np.abs(after - before)) <= 1e-12 * scale
        assert out.weight <= 3.0 * d.weight * (1 + 1e-12)
        for lam, b in out.terms:
            ok, slack = is_block(b.values, b.support_cube, pq, dom)
            assert ok, slack


def test_finite_decomposition_indicator(pq):
    dom = GridDomain(1, 8, 0.25)
    vals = np.zeros(8)
    vals[:4] = 1.0
    f = GridFunction(dom, vals)
    d = finite_decomposition(f, pq, tol=1e-2)
    assert d.weight <= 2.0 * (1 + 1e-2) * 1.0 + 1e-6
    assert np.allclose(synthesize(d).values, vals, rtol=1e-9, atol=1e-12)


def test_finite_decomposition_zero(pq):
    dom = GridDomain(1, 8)
    d = finite_decomposition(GridFunction(dom, np.zeros(8)), pq)
    assert len(d.terms) == 0 and d.weight == 0.0


def test_finite_decomposition_random(rng, pq):
    for _ in range(20):
        dom = GridDomain(1, 16, 0.5)
        f = random_function(rng, dom, nonnegative=True, density=0.6)
        if f.is_zero():
            continue
        d = finite_decomposition(f, pq, tol=1e-2)
        cert = block_norm(f, pq, tol=1e-4)
        ratio = d.weight / cert.lower
        assert 1.0 - 1e-9 <= ratio <= 2.0 * (1 + 1e-2)
        assert np.allclose(synthesize(d).values, f.values, rtol=1e-9, atol=1e-12)
        for lam, b in d.terms:
            ok, slack = is_block(b.values, b.support_cube, pq, dom)
            assert ok, slack


def test_finite_decomposition_signed(rng, pq):
    dom = GridDomain(1, 16, 0.5)
    f = random_function(rng, dom)
    if f.is_zero():
        return
    d = finite_decomposition(f, pq, tol=1e-2)
    cert = block_norm(f, pq, tol=1e-4)
    assert d.weight <= 8.0 * (1 + 1e-2) * cert.upper
    assert np.allclose(synthesize(d).values, f.values, rtol=1e-9, atol=1e-12)


def test_block_norm_indicator_certificate_tight_on_cubes(rng, pq):
    # for any grid cube Q the two-sided certificate pinches: upper/lower <= 1+tol
    dom = GridDomain(1, 16, 0.5)
    for cube in [Cube((0,), 1), Cube((3,), 4), Cube((0,), 16), Cube((5,), 8)]:
        vals = np.zeros(16)
        vals[cube.slices()[0]] = 1.0
        cert = block_norm(GridFunction(dom, vals), pq, tol=1e-3)
        assert cert.upper / cert.lower <= 1 + 1e-3
