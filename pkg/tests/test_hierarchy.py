from fractions import Fraction

import pytest

from rspin.hierarchy import (FlowInconsistency, genus_component, high_weight, solve_L, solve_wave_function)
from rspin.series import MSeries
from rspin.verify import check_commutator_support, check_flows, check_ramond_vanishing, corrupt_L

from conftest import solution


def at_origin(f: MSeries) -> MSeries:
    return f.restrict(lambda e, l: high_weight(e) == 0)


@pytest.mark.parametrize("r", [2, 3, 4])
def test_initial_condition_preserved(r):
    sol = solution(r, 8)
    V = sol.vars
    assert at_origin(sol.L.coeff(0)) == MSeries.var(V, sol.L.coeff_weight(0), 0, r, lam=-r)
    for i in range(1, r - 1):
        assert at_origin(sol.L.coeff(i)).is_zero()
    assert sol.L.coeff(r) == MSeries.const(V, sol.W, 1)
    assert sol.L.coeff(r - 1).is_zero()
    assert at_origin(sol.Phi) == MSeries.const(V, sol.W, 1)
    assert at_origin(sol.phi).is_zero()


def test_kdv_flow_by_hand(sol2):
    # u_{T3} = lambda^2 (u''' + 6 u u')/4 with u = 2 lambda^{-2} x at T_{>=2} = 0
    f0 = sol2.L.coeff(0)
    assert f0.coefficient({0: 1, 2: 1}, -2) == 6
    assert f0.coefficient({0: 1}, -2) == 2


def test_wave_function_low_orders_by_hand(sol2):
    # dPhi/dT2 = lambda L Phi and dPhi/dT3 = lambda^2 (D^3 + 3/2 u D + 3/4 u') Phi
    phi = sol2.phi
    assert phi.coefficient({0: 1, 1: 1}, -1) == 2
    assert phi.coefficient({1: 3}, -1) == Fraction(4, 3)
    assert phi.coefficient({2: 1}, 0) == Fraction(3, 2)
    assert sol2.Phi.coefficient({1: 2, 0: 2}, -2) == 2


def test_genus_components(sol2):
    phi = sol2.phi
    assert genus_component(phi, 0) == phi.lambda_component(-1)
    assert genus_component(phi, 1).coefficient({2: 1}) == Fraction(3, 2)
    assert genus_component(phi, 7).is_zero()
    assert phi.constant_term() == 0


def test_phi_is_weight_homogeneous(sol3):
    # a monomial with M variables in phi_g has weight (r+1)(M+g-1)
    r = sol3.r
    for (e, lam), c in sol3.phi.items():
        g = lam + 1
        assert sol3.vars.weight(e) == (r + 1) * (sum(e) + g - 1)


@pytest.mark.parametrize("r,W", [(2, 9), (3, 9)])
def test_flow_identities(r, W):
    sol = solution(r, W)
    check_flows(sol)
    check_commutator_support(sol)
    check_ramond_vanishing(sol)


def test_corrupted_operator_is_detected():
    bad = corrupt_L(solve_L(2, 8))
    with pytest.raises(FlowInconsistency) as err:
        solve_wave_function(bad)
    assert err.value.key is not None


def test_solve_rejects_bad_input():
    with pytest.raises(ValueError):
        solve_L(1, 5)
    with pytest.raises(ValueError):
        solve_L(2, 0)


def test_fractional_powers_are_cached(sol3):
    a = sol3.fractional_power(4)
    assert sol3.fractional_power(4) is a
    assert not sol3.residue(3)
