import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kchain.padic_linalg import (
    INF,
    AbelianPGroup,
    CompositionError,
    PadicMatrix,
    PrecisionError,
    ScaledMatrix,
    cokernel_structure,
    inverse_mod,
    saturate_image,
    smith_normal_form,
    total_complex_cohomology,
)

from oracles import integer_elementary_exponents, integer_saturation, rational_rank

PRIMES = [2, 3, 5]


@st.composite
def integer_matrices(draw, max_dim=8):
    p = draw(st.sampled_from(PRIMES))
    m = draw(st.integers(1, max_dim))
    n = draw(st.integers(1, max_dim))
    # products with powers of p make the valuations interesting
    entries = draw(
        st.lists(
            st.tuples(st.integers(-30, 30), st.integers(0, 4)),
            min_size=m * n,
            max_size=m * n,
        )
    )
    rows = [[a * p**k for a, k in entries[r * n : (r + 1) * n]] for r in range(m)]
    # occasionally force a rank drop
    if m > 1 and draw(st.booleans()):
        rows[-1] = [x + 2 * y for x, y in zip(rows[0], rows[1 % m])]
    return p, rows


def test_snf_examples():
    rep, _, _ = smith_normal_form(PadicMatrix([[2, 1], [0, 4]], 2, 10))
    assert rep.exponents == (0, 3) and rep.certified
    rep, _, _ = smith_normal_form(PadicMatrix([[4, 0], [0, 8]], 2, 3))
    assert rep.exponents == (2, INF) and not rep.certified


@settings(max_examples=1000)
@given(integer_matrices())
def test_snf_matches_integer_oracle(data):
    p, rows = data
    N = 200
    M = PadicMatrix(rows, p, N)
    rep, U, V = smith_normal_form(M)
    assert rep.exponents == integer_elementary_exponents(rows, p)
    D = (U @ M @ V).array()
    for r in range(M.rows):
        for c in range(M.cols):
            want = 0 if r != c or rep.exponents[r] == INF else p ** int(rep.exponents[r])
            assert D[r, c] == want


@settings(max_examples=1000)
@given(integer_matrices())
def test_saturation_matches_integer_oracle(data):
    p, rows = data
    N = 200
    S = saturate_image(PadicMatrix(rows, p, N), strict=False)
    L = integer_saturation(rows)
    r = rational_rank(rows)
    assert S.cols == r
    if r == 0:
        return
    L = PadicMatrix(L, p, S.N)
    # equal Z_p-lattices: each is saturated and their sum has the same rank
    for lattice in (S, L, PadicMatrix.hstack([S, L])):
        assert smith_normal_form(lattice)[0].finite() == (0,) * r


def test_saturation_example():
    M = PadicMatrix([[2, 2], [2, 6]], 2, 10)
    S = saturate_image(M)
    assert S.cols == 2
    rep, _, _ = smith_normal_form(S)
    assert rep.exponents == (0, 0)
    # (1,1) and (0,1) lie in the saturation: the stacked matrix keeps rank 2 with unit divisors
    ext = PadicMatrix.hstack([S, PadicMatrix([[1, 0], [1, 1]], 2, 10)])
    assert smith_normal_form(ext)[0].exponents == (0, 0)


@settings(max_examples=200)
@given(integer_matrices(max_dim=6))
def test_saturation_idempotent(data):
    p, rows = data
    S = saturate_image(PadicMatrix(rows, p, 120), strict=False)
    if S.cols == 0:
        return
    S2 = saturate_image(S)
    ext = PadicMatrix.hstack([S.lift(S2.N), S2])
    assert smith_normal_form(ext)[0].finite() == (0,) * S.cols


def test_inverse_and_cokernel():
    M = PadicMatrix([[1, 2], [3, 5]], 3, 8)
    assert (M @ inverse_mod(M)) == PadicMatrix([[1, 0], [0, 1]], 3, 8)
    assert cokernel_structure(PadicMatrix([[9, 0], [0, 3]], 3, 8)) == AbelianPGroup(3, (1, 2))
    with pytest.raises(PrecisionError):
        cokernel_structure(PadicMatrix([[9, 0], [0, 0]], 3, 8))


def test_total_complex_basic():
    # Z_p --(p, 0)--> Z_p^2 --(0, 1)--> Z_p : H0 = 0, H1 = Z/p, H2 = 0
    d0 = PadicMatrix([[3], [0]], 3, 10)
    d1 = PadicMatrix([[0, 1]], 3, 10)
    coh = total_complex_cohomology(d0, d1)
    assert coh.certified and coh.H0.is_zero() and coh.H2.is_zero()
    assert coh.H1.free_rank == 0 and coh.H1.torsion.exponents == (1,)
    with pytest.raises(CompositionError):
        total_complex_cohomology(d0, PadicMatrix([[1, 1]], 3, 10))


@settings(max_examples=200)
@given(st.integers(1, 5), st.data())
def test_total_complex_rationally_exact_has_no_h0(r, data):
    # syn0 = (A; B), syn1 = (B', -A') with A B' = B A' built from a commuting square
    p = data.draw(st.sampled_from(PRIMES))
    ints = st.integers(-20, 20)
    A = np.array(data.draw(st.lists(st.lists(ints, min_size=r, max_size=r), min_size=r, max_size=r)), dtype=object)
    A = A + p**3 * np.eye(r, dtype=object) * 0 + np.eye(r, dtype=object) * p
    B = np.eye(r, dtype=object) * p**2
    d0 = PadicMatrix(np.vstack([A, B]), p, 80)
    d1 = PadicMatrix(np.hstack([B, -A]), p, 80)
    coh = total_complex_cohomology(d0, d1)
    if np.linalg.matrix_rank(np.array(A, dtype=float)) == r:
        assert coh.H0.is_zero()
        assert coh.H1.free_rank == 0 and coh.H2.free_rank == 0


def test_scaled_matrix_arithmetic():
    p = 2
    a = ScaledMatrix(np.array([[1, 2], [0, 4]], dtype=object), 1, p, 30)  # entries 1/2, 1, 0, 2
    inv = a.inverse()
    ident = (a @ inv)
    assert ident.with_precision(ident.N - 4).fractions() == [[1, 0], [0, 1]]
    assert a.min_valuation() == -1
    assert not a.is_integral()
    assert (a - a).is_zero()


@settings(max_examples=200)
@given(integer_matrices(max_dim=6))
def test_column_basis_spans_columns(data):
    p, rows = data
    m = ScaledMatrix(np.array(rows, dtype=object), 0, p, 150)
    P = m.column_basis()
    assert len(P) == rational_rank(rows)
    if not P:
        return
    # every column is a Z_p-combination of the chosen ones
    chosen = PadicMatrix([[rows[r][c] for c in P] for r in range(len(rows))], p, 150)
    full = PadicMatrix(rows, p, 150)
    rep_c = smith_normal_form(chosen)[0]
    rep_f = smith_normal_form(PadicMatrix.hstack([chosen, full]))[0]
    assert rep_c.finite() == rep_f.finite()


def test_abelian_p_group_str():
    g = AbelianPGroup(2, (2, 1, 2))
    assert g.exponents == (1, 2, 2)
    assert str(g) == "Z/2 + (Z/4)^2"
    assert g.order == 32 and g.log_order == 5
    with pytest.raises(ValueError):
        AbelianPGroup(2, (0,))
