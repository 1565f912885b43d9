import numpy as np
import pytest

from morreylab.duality import (
    associate_norm,
    block_associate_norm,
    block_oracle,
    morrey_oracle,
    pairing,
    second_associate_check,
)
from morreylab.grid import CubeFamily, GridDomain, GridFunction, ExponentPair
from morreylab.morrey import morrey_norm
from morreylab import blocks

from conftest import random_function


def test_pairing_hand_values(pq):
    dom = GridDomain(1, 2, 1.0)
    f = GridFunction(dom, [1.0, 1.0])
    g = GridFunction(dom, [2.0**-0.5, 2.0**-0.5])
    assert pairing(f, g) == pytest.approx(np.sqrt(2.0), rel=1e-15)
    chi = GridFunction(dom, [1.0, 0.0])
    assert pairing(chi, chi) == pytest.approx(1.0)
    other = GridFunction(dom, [0.0, 3.0])
    assert pairing(chi, other) == 0.0


def test_pairing_domain_mismatch():
    with pytest.raises(ValueError):
        pairing(GridFunction(GridDomain(1, 2), [1, 1]), GridFunction(GridDomain(1, 4), [1, 1, 1, 1]))


def test_block_associate_hand_value(pq):
    dom = GridDomain(1, 2, 1.0)
    g = GridFunction(dom, [1.0, 1.0])
    assert block_associate_norm(g, pq) == pytest.approx(np.sqrt(2.0), rel=1e-12)


def test_block_associate_zero(pq):
    dom = GridDomain(1, 4)
    assert block_associate_norm(GridFunction(dom, np.zeros(4)), pq) == 0.0


@pytest.mark.parametrize("dim,N", [(1, 16), (2, 8)])
def test_block_associate_equals_morrey(rng, pq, dim, N):
    dom = GridDomain(dim, N, 0.5)
    for _ in range(50):
        g = random_function(rng, dom)
        a = block_associate_norm(g, pq)
        m = morrey_norm(g, pq).value
        assert a == pytest.approx(m, rel=1e-10, abs=1e-14)


def test_weak_duality_pairing_bound(rng, pq):
    dom = GridDomain(1, 16, 0.5)
    for _ in range(20):
        f = random_function(rng, dom)
        g = random_function(rng, dom)
        rho = blocks.block_norm(f, pq, tol=1e-3).upper
        rho_prime = morrey_norm(g, pq).value
        assert abs(pairing(f, g)) <= rho * rho_prime * (1 + 1e-9) + 1e-12


def test_associate_of_morrey_is_block_norm(pq):
    dom = GridDomain(1, 8, 0.25)
    vals = np.zeros(8)
    vals[:4] = 1.0
    g = GridFunction(dom, vals)
    res = associate_norm(g, morrey_oracle(pq), tol=1e-3)
    assert res.upper == pytest.approx(1.0, rel=2e-3)
    assert res.lower <= res.upper
    assert not res.flagged
    assert morrey_norm(res.witness, pq).value <= 1 + 1e-9


def test_associate_zero(pq):
    dom = GridDomain(1, 8)
    res = associate_norm(GridFunction(dom, np.zeros(8)), morrey_oracle(pq))
    assert res.lower == 0.0 and res.upper == 0.0


def test_associate_of_block_is_morrey(rng, pq):
    dom = GridDomain(1, 16, 0.5)
    g = random_function(rng, dom)
    res = associate_norm(g, block_oracle(pq), tol=1e-3)
    assert res.upper == pytest.approx(morrey_norm(g, pq).value, rel=1e-10)
    # witness is an admissible block, so its block norm is at most one
    cert = blocks.block_norm(res.witness, pq, tol=1e-3)
    assert cert.upper <= 1 + 2e-3
    assert pairing(res.witness, g) == pytest.approx(res.lower, rel=1e-9)


def test_associate_generic_oracle_lower_bound(rng, pq):
    dom = GridDomain(1, 8, 0.5)
    oracle_lp = lambda f: float(np.sum(np.abs(f.values) ** 2) * dom.cell_measure) ** 0.5
    from morreylab.duality import NormOracle

    oracle = NormOracle(name="l2", evaluate=oracle_lp)
    g = random_function(rng, dom, nonnegative=True)
    res = associate_norm(g, oracle, tol=1e-3)
    exact = oracle_lp(g)  # self-dual
    assert res.flagged and res.upper is None
    assert res.lower <= exact * (1 + 1e-9)
    assert res.lower >= 0.95 * exact


def test_associate_rejects_non_homogeneous(rng, pq):
    from morreylab.duality import NormOracle

    dom = GridDomain(1, 8, 0.5)
    oracle = NormOracle(name="affine", evaluate=lambda f: 1.0 + float(np.max(np.abs(f.values))))
    with pytest.raises(ValueError):
        associate_norm(random_function(rng, dom), oracle)


def test_second_associate_morrey_indicator(pq):
    dom = GridDomain(1, 8, 0.25)
    vals = np.zeros(8)
    vals[:4] = 1.0
    rep = second_associate_check(GridFunction(dom, vals), morrey_oracle(pq), tol=1e-3)
    assert rep.passed
    assert rep.rho_upper == pytest.approx(1.0, abs=1e-12)
    assert rep.second_upper == pytest.approx(1.0, abs=1e-10)


def test_second_associate_zero(pq):
    dom = GridDomain(1, 8)
    rep = second_associate_check(GridFunction(dom, np.zeros(8)), morrey_oracle(pq))
    assert rep.passed and rep.relative_deviation == 0.0


def test_second_associate_random(rng, pq):
    dom = GridDomain(1, 8, 0.5)
    for _ in range(20):
        f = random_function(rng, dom)
        rep = second_associate_check(f, morrey_oracle(pq), tol=1e-3)
        assert rep.passed
        assert rep.relative_deviation <= 1e-3


def test_second_associate_block_oracle(rng, pq):
    dom = GridDomain(1, 8, 0.5)
    f = random_function(rng, dom, nonnegative=True)
    rep = second_associate_check(f, block_oracle(pq, tol=1e-4), tol=1e-3)
    assert rep.passed or rep.inconclusive


def test_associate_triangle_inequality_sampled(rng, pq):
    # the associate norm is itself a norm
    dom = GridDomain(1, 8, 0.5)
    oracle = morrey_oracle(pq)
    for _ in range(10):
        f = random_function(rng, dom)
        g = random_function(rng, dom)
        s = associate_norm(GridFunction(dom, f.values + g.values), oracle, tol=1e-4)
        af = associate_norm(f, oracle, tol=1e-4)
        ag = associate_norm(g, oracle, tol=1e-4)
        assert s.lower <= af.upper + ag.upper + 1e-9 * max(1.0, af.upper + ag.upper)


def test_dyadic_family_associate_identity(rng, pq):
    dom = GridDomain(1, 16, 0.5)
    g = random_function(rng, dom)
    a = block_associate_norm(g, pq, CubeFamily.DYADIC)
    m = morrey_norm(g, pq, CubeFamily.DYADIC).value
    assert a == pytest.approx(m, rel=1e-10)
