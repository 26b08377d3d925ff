"""The weight-i syntomic complex of O_K/π^n as a pair of matrices.

For ``b = i*n - 1`` the weight-truncated syntomic cohomology is the total
cohomology of a commuting square of rank-b lattices

    X00 = F^[1,b] N^{>=i} φ^*D0{i}  --h0-->  S0
      | v0 = can - φ                         | v1 = can - φ
    X10 = F^[1,b] φ^*D0{i}          --h1-->  S1

where D0 is the level-0 envelope and S0, S1 are the saturations, inside
the corresponding level-1 lattices, of the images of the coface
difference ``h``.  The total complex is

    syn0 = (h0, v0): X00 -> S0 ⊕ X10,   syn1 = (v1, -h1): S0 ⊕ X10 -> S1,

and H^1, H^2 of it are the p-adic K-groups K_{2i-1}, K_{2i-2}.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .delta_series import DeltaRingDescriptor, WeightWindow, frobenius, mul, substitute_variable
from .padic_linalg import (
    AbelianPGroup,
    CompositionError,
    PadicMatrix,
    PrecisionError,
    ScaledMatrix,
    total_complex_cohomology,
)
from .prism_envelope import (
    FieldSpec,
    build_prism,
    elements_matrix,
    envelope,
    matrix_elements,
    nygaard_lattice,
    twist_data,
)

BASIS_VERSION = 1


def weight_bound(i: int, n: int) -> int:
    """Smallest admissible truncation weight ``b = i*n - 1``."""
    if i < 1 or n < 1:
        raise ValueError("need i >= 1 and n >= 1")
    return i * n - 1


@dataclass(frozen=True)
class SyntomicSquare:
    """The four corner maps in row convention (row k = image of basis k)."""

    spec: FieldSpec
    n: int
    i: int
    b: int
    h0: ScaledMatrix
    h1: ScaledMatrix
    v0: ScaledMatrix
    v1: ScaledMatrix
    working_precision: int

    @property
    def rank(self) -> int:
        return self.b

    @property
    def precision(self) -> int:
        """Absolute precision held by all four maps."""
        return min(m.N for m in (self.h0, self.h1, self.v0, self.v1))

    def commutes(self) -> bool:
        return ((self.h0 @ self.v1) - (self.v0 @ self.h1)).is_zero()


@dataclass(frozen=True)
class SyntomicComplex:
    """``Z_p^b --syn0--> Z_p^2b --syn1--> Z_p^b`` (column convention)."""

    spec: FieldSpec
    n: int
    i: int
    syn0: PadicMatrix
    syn1: PadicMatrix
    basis_version: int = BASIS_VERSION

    @property
    def precision(self) -> int:
        return self.syn0.N


def build_square(spec: FieldSpec, n: int, i: int, precision: int, b: int | None = None) -> SyntomicSquare:
    """Assemble the square at working precision ``precision``.

    ``b`` defaults to ``weight_bound(i, n)``; larger values give the same
    cohomology.
    """
    if b is None:
        b = weight_bound(i, n)
    elif b < weight_bound(i, n):
        raise ValueError(f"b = {b} is below the admissible bound {weight_bound(i, n)}")
    p = spec.p
    window = WeightWindow(b, precision)
    uni = DeltaRingDescriptor(p, 1)
    ring1 = DeltaRingDescriptor(p, 2)

    # level 0
    prism0 = build_prism(spec, 0, window)
    env0 = envelope(prism0, n)
    twisted0 = env0.graded_basis(twisted=True)
    lattice = nygaard_lattice(env0, i)
    if lattice.rank != b or len(twisted0) != b:
        raise PrecisionError(f"level-0 lattices have rank {lattice.rank}, {len(twisted0)}; expected {b}")
    factor0 = twist_data(prism0, i).frobenius_factor
    nygaard = matrix_elements(lattice.basis, uni, window)
    v0 = twisted0.coordinates(elements_matrix([g - mul(frobenius(g), factor0) for g in nygaard]))

    # level 1
    prism1 = build_prism(spec, 1, window)
    env1 = envelope(prism1, n)
    G = env1.graded_basis(twisted=True)
    H = env1.graded_basis(twisted=False, power_of_E=i)
    twist1 = twist_data(prism1, i)
    gamma = twist1.face_unit
    factor1 = twist1.frobenius_factor

    def coface_difference(f):
        return mul(gamma, substitute_variable(f, ring1, 1)) - substitute_variable(f, ring1, 0)

    V0 = [coface_difference(g) for g in nygaard]
    V1 = [coface_difference(g) for g in twisted0.elements]

    C1 = G.coordinates(elements_matrix(V1))
    P1 = C1.column_basis()
    if len(P1) != b:
        raise PrecisionError(f"image of h1 has rank {len(P1)}, expected {b}")
    h1 = C1[:, P1]

    both = ScaledMatrix.hstack([G.coordinates(elements_matrix(V0)), H.coordinates(elements_matrix(V0))])
    P0 = both.column_basis()
    if len(P0) != b:
        raise PrecisionError(f"image of h0 has rank {len(P0)}, expected {b}")
    h0 = both[:, P0]

    U = [v - mul(frobenius(v), factor1) for v in V0]
    UG = G.coordinates(elements_matrix(U))
    Y = UG[:, P1]
    # the images must lie in the span of S1: UG = Y h1^-1 C1
    if not (UG - (Y @ h1.inverse()) @ C1).with_precision(Y.N - 2 * h1.inverse().shift).is_zero():
        raise CompositionError("can - φ does not land in the saturated image at level 1")
    v1 = h0.inverse() @ Y
    return SyntomicSquare(spec, n, i, b, h0, h1, v0, v1, precision)


def syn_matrices(square: SyntomicSquare, precision: int | None = None) -> SyntomicComplex:
    """Stack the square into ``syn0 = (h0, v0)`` and ``syn1 = (v1, -h1)``."""
    N = square.precision if precision is None else precision
    if N < 1:
        raise PrecisionError("no p-adic digits survive; raise the working precision")
    mats = {}
    for name in ("h0", "h1", "v0", "v1"):
        m = getattr(square, name)
        if not m.is_integral():
            raise PrecisionError(f"{name} has non-integral entries at the working precision")
        mats[name] = m.to_padic(N)
    syn0 = PadicMatrix.vstack([mats["h0"].T, mats["v0"].T])
    syn1 = PadicMatrix.hstack([mats["v1"].T, -mats["h1"].T])
    if not (syn1 @ syn0).is_zero():
        raise CompositionError("syn1 . syn0 is not zero")
    return SyntomicComplex(square.spec, square.n, square.i, syn0, syn1)


@dataclass(frozen=True)
class SyntomicResult:
    spec: FieldSpec
    n: int
    i: int
    H1: AbelianPGroup
    H2: AbelianPGroup
    precision: int
    working_precision: int
    certified: bool
    seconds: float = field(default=0.0, compare=False)
    complex: SyntomicComplex | None = field(default=None, compare=False, repr=False)


def initial_precision(spec: FieldSpec, n: int, i: int) -> int:
    """Starting working precision for the escalation loop."""
    b = weight_bound(i, n)
    budget = i * (n - 1) * spec.f + math.ceil(math.log(spec.q**i, spec.p)) + 4
    # the tracked loss grows roughly quadratically in b (denominators of
    # weight-w elements are about p^-w, and products compound them)
    return 2 * b * b + 2 * budget + 40


def cohomology_of_complex(
    cx: SyntomicComplex, working_precision: int, check_ratio: bool = True
) -> SyntomicResult | None:
    """Certified H^1, H^2 of a stored complex, or None if precision is short."""
    from .ktheory import ratio_identity

    try:
        coh = total_complex_cohomology(cx.syn0, cx.syn1)
    except PrecisionError:
        return None
    ok = coh.certified and coh.H0.is_zero() and coh.H1.free_rank == 0 and coh.H2.free_rank == 0
    if ok and check_ratio and cx.i >= 2:
        ok = ratio_identity(coh.H1.torsion, coh.H2.torsion, cx.spec, cx.n, cx.i)
    if not ok:
        return None
    return SyntomicResult(
        cx.spec, cx.n, cx.i, coh.H1.torsion, coh.H2.torsion, cx.precision, working_precision,
        True, complex=cx,
    )


def syntomic_cohomology(
    spec: FieldSpec,
    n: int,
    i: int,
    precision: int | None = None,
    max_precision: int = 20000,
    b: int | None = None,
    check_ratio: bool = True,
) -> SyntomicResult:
    """H^1 and H^2 of the weight-i syntomic complex, certified.

    Precision is doubled until every elementary divisor is resolved and,
    for ``i >= 2``, the order-ratio identity holds.
    """
    t0 = time.perf_counter()
    N = precision or initial_precision(spec, n, i)
    last_error: Exception | None = None
    while N <= max_precision:
        try:
            cx = syn_matrices(build_square(spec, n, i, N, b=b))
        except PrecisionError as exc:
            last_error = exc
            N *= 2
            continue
        res = cohomology_of_complex(cx, N, check_ratio)
        if res is not None:
            return replace(res, seconds=time.perf_counter() - t0)
        last_error = PrecisionError(f"uncertified at working precision {N}")
        N *= 2
    raise PrecisionError(f"escalation exhausted below {max_precision}: {last_error}")
