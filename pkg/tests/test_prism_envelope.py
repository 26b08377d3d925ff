from fractions import Fraction

import pytest

from kchain.delta_series import DeltaRingDescriptor, TruncatedElement, WeightWindow, delta, frobenius, mul
from kchain.prism_envelope import (
    FieldSpec,
    InvalidFieldSpec,
    build_prism,
    codegeneracy,
    cosimplicial_faces,
    elements_matrix,
    envelope,
    intersect_row_lattices,
    matrix_elements,
    nygaard_lattice,
    parse_polynomial,
    twist_data,
    twist_tower_check,
    twisted_frobenius,
)
from kchain.padic_linalg import ScaledMatrix

import numpy as np

Z4 = FieldSpec(2, (-2, 1))
SPECS = [Z4, FieldSpec(3, (-3, 1)), FieldSpec(2, (2, 2, 1)), FieldSpec(2, (-2, 0, 0, 1)), FieldSpec(5, (5, 0, 1))]


def test_parse_polynomial():
    assert parse_polynomial("z^2+2z+2") == (2, 2, 1)
    assert parse_polynomial("z**3 - 2") == (-2, 0, 0, 1)
    assert parse_polynomial("z-2") == (-2, 1)
    spec = FieldSpec.parse(2, "z^2 + 14", label="2.2.3.1")
    assert spec.e == 2 and spec.q == 2 and spec.d == 2 and spec.unit == Fraction(7)
    assert spec.polynomial_string() == "z^2+14"


@pytest.mark.parametrize(
    "p, coeffs, message",
    [
        (2, (-4, 1), "valuation"),
        (2, (2, 1, 1), "divisible"),
        (2, (2, 0, 3), "monic"),
        (4, (2, 1), "prime"),
    ],
)
def test_eisenstein_validation(p, coeffs, message):
    with pytest.raises(InvalidFieldSpec, match=message):
        FieldSpec(p, coeffs)


def test_f_above_one_rejected():
    with pytest.raises(NotImplementedError, match="not yet supported"):
        FieldSpec(2, (-2, 1), f=2)


@pytest.mark.parametrize("spec", SPECS, ids=str)
def test_distinguished_and_tower(spec):
    prism = build_prism(spec, 0, WeightWindow(6, 30))
    assert prism.is_distinguished()
    assert twist_tower_check(spec, 4)


def test_faces_and_codegeneracy():
    window = WeightWindow(4, 20)
    d0, d1 = cosimplicial_faces(3, window)
    uni = DeltaRingDescriptor(3)
    f = TruncatedElement.polynomial(uni, window, (1, 2, 3))
    assert codegeneracy(d0(f)) == f and codegeneracy(d1(f)) == f
    assert d0(f) != d1(f)


@pytest.mark.parametrize("spec", SPECS, ids=str)
@pytest.mark.parametrize("n", [1, 2, 3])
def test_envelope_relations_and_ranks(spec, n):
    b = 7
    window = WeightWindow(b, 60)
    for level in (0, 1):
        env = envelope(build_prism(spec, level, window), n)
        for r in env.relation_residuals():
            assert r.is_zero()
        for twisted in (False, True):
            basis = env.graded_basis(twisted=twisted)
            expected = {w: 1 if level == 0 else w + 1 for w in range(1, b + 1)}
            assert basis.rank_by_weight() == expected
    # x lies in the envelope and δ(x) is its next generator
    env0 = envelope(build_prism(spec, 0, window), n)
    if len(env0.x_iterates) > 1:
        assert env0.x_iterates[1] == delta(env0.x_iterates[0])


def test_coordinates_roundtrip():
    window = WeightWindow(6, 60)
    env = envelope(build_prism(Z4, 1, window), 2)
    G = env.graded_basis(twisted=True)
    rng = np.random.default_rng(0)
    coeffs = ScaledMatrix(np.array(rng.integers(-5, 6, size=(3, len(G))), dtype=object), 0, 2, 50)
    vecs = coeffs @ G.matrix
    back = G.coordinates(vecs)
    assert (back - coeffs).with_precision(back.N - 4).is_zero()


@pytest.mark.parametrize("i", [1, 2, 3])
def test_nygaard_lattice(i):
    n = 2
    b = i * n - 1
    window = WeightWindow(b, 80)
    env = envelope(build_prism(Z4, 0, window), n)
    lat = nygaard_lattice(env, i)
    assert lat.rank == b
    # every basis element is divisible by E^i inside the untwisted envelope
    multiples = env.graded_basis(twisted=False, power_of_E=i)
    coords = multiples.coordinates(lat.basis)
    assert coords.with_precision(coords.N - 10).is_integral()
    assert lat.inclusion.with_precision(lat.inclusion.N - 10).is_integral()
    # the divided Frobenius lands in the twisted envelope
    phi = twisted_frobenius(env, lat, twist_data(env.prism, i))
    assert phi.with_precision(phi.N - 20).is_integral()


def test_intersect_row_lattices():
    A = ScaledMatrix(np.array([[2, 0], [0, 1]], dtype=object), 0, 2, 40)
    B = ScaledMatrix(np.array([[1, 0], [0, 4]], dtype=object), 0, 2, 40)
    C = intersect_row_lattices(A, B)
    # the intersection is 2Z + 4Z: index 8
    assert C.inverse().min_valuation() == -2
    det = C.fractions()
    assert abs(det[0][0] * det[1][1] - det[0][1] * det[1][0]) in (8, Fraction(8))


def test_element_matrix_roundtrip():
    window = WeightWindow(5, 30)
    ring = DeltaRingDescriptor(3, 2)
    els = [TruncatedElement.from_terms(ring, window, {(1, 0): 1, (2, 3): Fraction(1, 3)}),
           TruncatedElement.from_terms(ring, window, {(0, 4): 5})]
    back = matrix_elements(elements_matrix(els), ring, window)
    assert all(a == b for a, b in zip(els, back))
