from fractions import Fraction
import random

import pytest
from hypothesis import given, settings, strategies as st

from rspin.hierarchy import initial_L
from rspin.psido import PsiDO, commutator, compose, gen_binomial, power, rth_root
from rspin.series import MSeries, VarSystem
from rspin.verify import random_psido

W = 8
V = VarSystem.T(W)


def fn(series, order=0):
    return PsiDO.function(series, W)


def x(c=1, lam=0):
    return MSeries.var(V, W, 0, c, lam)


def const(c=1):
    return MSeries.const(V, W, c)


def D(k=1, e_min=None):
    return PsiDO.dx(V, W, k, e_min=e_min)


def op(terms, order=None, e_min=None):
    return PsiDO(V, W, terms, order=order, e_min=e_min)


def same(A, B):
    floor = max(A.e_min, B.e_min)
    return A.with_window(floor).terms == B.with_window(floor).terms


def test_gen_binomial():
    assert [gen_binomial(3, l) for l in range(5)] == [1, 3, 3, 1, 0]
    assert [gen_binomial(-1, l) for l in range(4)] == [1, -1, 1, -1]
    assert gen_binomial(-2, 3) == -4


def test_compose_examples():
    assert same(compose(D(), fn(x())), op({1: x(), 0: const()}))
    A = compose(D(-1, e_min=-6), fn(x()))
    assert A.coeff(-1) == x().truncate(A.coeff_weight(-1))
    assert A.coeff(-2) == const(-1).truncate(A.coeff_weight(-2))
    assert set(A.terms) == {-1, -2}
    # (D + u)(D - u) = D^2 - u' - u^2, since D o u = u D + u'
    u = x()
    left = op({1: const(), 0: u}, order=1)
    right = op({1: const(), 0: -u}, order=1)
    P = compose(left, right)
    assert P.coeff(2) == const()
    assert P.coeff(1).is_zero()
    assert P.coeff(0) == (-(u * u) - const()).truncate(P.coeff_weight(0))


def test_positive_part_and_residue():
    u, v = x(), x(lam=1) * x()
    A = op({2: const(), 0: u, -1: v}, e_min=-4)
    assert A.positive_part() == op({2: const(), 0: u}, order=2)
    assert not op({-3: const()}, order=-3).positive_part()
    assert same(A.positive_part() + A.negative_part(), A)
    assert A.residue() == v.truncate(A.coeff_weight(-1))
    assert op({1: const(), -1: u}, order=1).residue() == u.truncate(W - 2)
    assert not op({2: const()}, order=2, e_min=-3).residue()
    with pytest.raises(ValueError):
        op({2: const()}, order=2, e_min=0).residue()


def test_commutator_examples():
    C = commutator(D(), fn(x()))
    assert C.terms == {0: const().truncate(C.coeff_weight(0))}
    A = op({2: const(), 0: x()})
    assert not commutator(A, A)


def test_root_of_pure_power():
    for r in (2, 3, 4):
        R = rth_root(D(r), r)
        assert R.terms == {1: const().truncate(R.coeff_weight(1))}


def test_square_root_by_hand():
    # u = T1 T3 (x-dependent, so u' is nonzero)
    u = MSeries.monomial(V, W, {0: 1, 2: 1})
    R = rth_root(op({2: const(), 0: u}), 2)
    assert R.coeff(-1) == u.scale(Fraction(1, 2)).truncate(R.coeff_weight(-1))
    assert R.coeff(-2) == u.derive(0).scale(Fraction(-1, 4)).truncate(R.coeff_weight(-2))


def test_root_of_initial_operator():
    for r in (2, 3, 4, 5):
        L = initial_L(r, W)
        R = rth_root(L, r)
        assert R.coeff(1 - r) == x(1, lam=-r).truncate(R.coeff_weight(1 - r))
        assert all(R.coeff(e).is_zero() for e in range(2 - r, 1))
        assert same(power(R, r), L)


def test_root_rejects_non_monic():
    with pytest.raises(ValueError):
        rth_root(op({2: const(2), 0: x()}), 2)
    with pytest.raises(ValueError):
        rth_root(op({3: const()}), 2)


def test_power_with_high_floor_keeps_top_terms():
    u = MSeries.monomial(V, W, {0: 1, 2: 1})
    B = op({1: const(), -1: u}, order=1, e_min=-7)
    P = power(B, 4, e_min=1)
    assert P.coeff(4) == const().truncate(P.coeff_weight(4))
    assert P.coeff(1) == u.derive(0).scale(6).truncate(P.coeff_weight(1))


def test_format():
    A = op({2: const(), 0: x(3)})
    assert A.format() == "[(1)] * Dx^2 + [(3)*T1] * Dx^0"


seeds = st.integers(0, 10 ** 6)


@settings(max_examples=25, deadline=None)
@given(seeds)
def test_associativity(seed):
    rng = random.Random(seed)
    Ws = 5
    Vs = VarSystem.T(Ws)
    A, B, C = (random_psido(rng, Vs, Ws, rng.randint(-1, 2)) for _ in range(3))
    assert same(compose(compose(A, B), C), compose(A, compose(B, C)))


@settings(max_examples=15, deadline=None)
@given(seeds, st.integers(2, 4))
def test_root_roundtrip(seed, r):
    rng = random.Random(seed)
    Ws = 6
    A = random_psido(rng, VarSystem.T(Ws), Ws, r, monic=True, depth=r + 1)
    assert same(power(rth_root(A, r), r), A)
