import pytest
from hypothesis import given
from hypothesis import strategies as st

from kchain.ktheory import (
    FiniteAbelianGroup,
    VanishingHypothesisWarning,
    assemble_integral,
    even_vanishing_bound,
    k1_units_check,
    k_p_parts,
    odd_order,
    quillen_k,
    ratio_check,
)
from kchain.padic_linalg import AbelianPGroup
from kchain.prism_envelope import FieldSpec

Z4 = FieldSpec(2, (-2, 1))
Z9 = FieldSpec(3, (-3, 1))
Z8 = FieldSpec(2, (-2, 1))


def test_quillen():
    assert quillen_k(2, 3) == FiniteAbelianGroup.cyclic(3)
    assert quillen_k(8, 1) == FiniteAbelianGroup.cyclic(7)
    assert quillen_k(3, 4).is_trivial()
    assert quillen_k(5, 0).free_rank == 1
    with pytest.raises(ValueError):
        quillen_k(2, -1)


def test_assemble_integral_orders():
    assert assemble_integral(Z4, 2, 3).order == 24
    assert assemble_integral(Z9, 2, 5).order == 81 * 26
    assert assemble_integral(Z9, 2, 5) == FiniteAbelianGroup(((3, 4), (2, 1), (13, 1)))


@pytest.mark.parametrize("r", range(1, 8))
def test_assemble_integral_for_residue_field(r):
    assert assemble_integral(Z4, 1, r) == quillen_k(2, r)
    assert assemble_integral(Z9, 1, r) == quillen_k(3, r)


def test_even_vanishing_bound():
    assert even_vanishing_bound(Z4, 2) == 12
    assert even_vanishing_bound(Z9, 2) == 18
    assert even_vanishing_bound(FieldSpec(2, (-2, 0, 1)), 3) == 12
    assert even_vanishing_bound(Z4, 1) == 4


def test_odd_order():
    assert odd_order(Z4, 2, 13) == 2**13 * (2**13 - 1)
    assert odd_order(Z9, 2, 19) == 3**19 * (3**19 - 1)
    with pytest.warns(VanishingHypothesisWarning):
        assert odd_order(Z4, 1, 3) == 2**3 - 1


def test_ratio_check_examples():
    assert ratio_check(AbelianPGroup(2, (3,)), AbelianPGroup(2, (1,)), Z4, 2, 2)
    assert ratio_check(AbelianPGroup(3, (4,)), AbelianPGroup(3, (1,)), Z9, 2, 3)
    assert ratio_check(AbelianPGroup(2, (2, 3)), AbelianPGroup(2, (1,)), Z8, 3, 2)
    assert not ratio_check(AbelianPGroup(2, (3,)), AbelianPGroup(2), Z4, 2, 2)
    with pytest.raises(ValueError):
        ratio_check(AbelianPGroup(2), AbelianPGroup(2), Z4, 2, 1)


def test_k1_units():
    assert k1_units_check(Z4, 2)
    assert k1_units_check(Z9, 2)
    assert k1_units_check(FieldSpec(2, (2, 2, 1)), 8, k1=AbelianPGroup(2, (2, 2, 3)))
    assert not k1_units_check(Z4, 3, k1=AbelianPGroup(2, (1,)))


def test_k_p_parts_examples():
    assert k_p_parts(Z4, 2, 6) == (AbelianPGroup(2, (1, 5)), AbelianPGroup(2))
    assert k_p_parts(Z8, 3, 3)[0] == AbelianPGroup(2, (1, 6))
    assert k_p_parts(FieldSpec(2, (-2, 0, 0, 1)), 3, 3)[0] == AbelianPGroup(2, (1, 1, 4))


@given(st.lists(st.tuples(st.sampled_from([2, 3, 5, 7]), st.integers(0, 5)), max_size=8))
def test_finite_abelian_group_canonical(factors):
    g = FiniteAbelianGroup(tuple(factors))
    h = FiniteAbelianGroup(tuple(reversed(factors)))
    assert g == h
    assert g.factors == tuple(sorted(f for f in factors if f[1]))
    inv = g.invariant_factors()
    assert all(b % a == 0 for a, b in zip(inv, inv[1:]))
    assert (g.order if not g.free_rank else 1) == (1 if not inv else __import__("math").prod(inv))


def test_finite_abelian_group_parts():
    g = FiniteAbelianGroup.cyclic(24) + FiniteAbelianGroup.cyclic(4)
    assert g.p_part(2) == AbelianPGroup(2, (2, 3))
    assert g.prime_to(2) == FiniteAbelianGroup.cyclic(3)
    assert g.invariant_factors() == (4, 24)
    with pytest.raises(ValueError):
        FiniteAbelianGroup(((4, 1),))
