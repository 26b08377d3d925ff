"""Breuil-Kisin prisms, their envelopes, Nygaard lattices and twists.

Level s of the cosimplicial prism is ``A^s = Z_p[[z_0, ..., z_s]]`` with
distinguished element ``E(z_0)``.  The relative prismatic cohomology of
``O_K/π^n`` is the envelope obtained by adjoining ``x = z_0^n / E(z_0)``
(and at level 1 also ``y = (z_1 - z_0) / E(z_0)``) as δ-ring elements.
All of these rings embed in ``Q_p[[z_0, ..., z_s]]``, which is where
elements are stored.

The envelopes come with explicit weight-adapted bases:

* level 0: ``z^a * prod_j δ^j(x)^{m_j}`` for ``0 <= a < n`` and base-p
  digits ``m_j`` of ``m``; one element in each weight ``a + n*m``.
* its Frobenius twist ``A ⊗_φ D``: ``z^a * φ(prod_j δ^j(x)^{m_j})`` for
  ``0 <= a < p*n``.
* level 1: the level-0 basis in ``z_0`` times ``prod_j δ^j(y)^{m_j}``;
  twisted, the twisted level-0 basis times ``z_1^c φ(...)`` with
  ``0 <= c < p``.  Weight ``w`` then carries ``w + 1`` basis elements.

Each basis is block lower-triangular by weight, which gives fast
coordinate solves (:class:`GradedBasis`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

from .delta_series import (
    DeltaRingDescriptor,
    TruncatedElement,
    WeightWindow,
    delta,
    frobenius,
    inverse,
    mul,
    mul_by_univariate,
    power,
    substitute_variable,
    collapse_variables,
)
from .padic_linalg import INF, PrecisionError, ScaledMatrix, split_unit, valuation


class InvalidFieldSpec(ValueError):
    pass


def _digits(m: int, p: int) -> list[int]:
    out = []
    while m:
        out.append(m % p)
        m //= p
    return out


@dataclass(frozen=True)
class FieldSpec:
    """A local field K = Q_p(π) given by an Eisenstein polynomial for π.

    ``eisenstein`` lists the coefficients ``a_0, ..., a_{e-1}, 1`` of
    ``E(z)`` in increasing degree.
    """

    p: int
    eisenstein: tuple[int, ...]
    f: int = 1
    label: str | None = None

    def __post_init__(self):
        coeffs = tuple(int(c) for c in self.eisenstein)
        object.__setattr__(self, "eisenstein", coeffs)
        p = self.p
        if p < 2 or any(p % d == 0 for d in range(2, math.isqrt(p) + 1)):
            raise InvalidFieldSpec(f"{p} is not prime")
        if self.f != 1:
            raise NotImplementedError("residual degree f > 1 is not yet supported")
        if len(coeffs) < 2 or coeffs[-1] != 1:
            raise InvalidFieldSpec("Eisenstein polynomial must be monic of degree >= 1")
        if valuation(coeffs[0], p) != 1:
            raise InvalidFieldSpec(
                f"constant term {coeffs[0]} must have {p}-adic valuation exactly 1"
            )
        for j, a in enumerate(coeffs[1:-1], start=1):
            if a % p:
                raise InvalidFieldSpec(f"coefficient of z^{j} ({a}) is not divisible by {p}")

    @classmethod
    def parse(cls, p: int, text: str, label: str | None = None) -> "FieldSpec":
        """Read ``E`` from text such as ``"z^2+2z+2"``."""
        return cls(p, parse_polynomial(text), label=label)

    @property
    def e(self) -> int:
        return len(self.eisenstein) - 1

    @property
    def q(self) -> int:
        return self.p**self.f

    @property
    def d(self) -> int:
        return self.e * self.f

    @property
    def unit(self) -> Fraction:
        """``E(0) / p``."""
        return Fraction(self.eisenstein[0], self.p)

    def polynomial_string(self) -> str:
        terms = []
        for k in range(self.e, -1, -1):
            c = self.eisenstein[k]
            if not c:
                continue
            mono = "" if k == 0 else ("z" if k == 1 else f"z^{k}")
            if k and abs(c) == 1:
                coef = "-" if c < 0 else "+"
            else:
                coef = f"{c:+d}"
            terms.append(coef + mono)
        s = "".join(terms)
        return s[1:] if s.startswith("+") else s

    def digest_fields(self) -> dict:
        return {"p": self.p, "f": self.f, "eisenstein": list(self.eisenstein)}


def parse_polynomial(text: str) -> tuple[int, ...]:
    """Integer coefficients (increasing degree) of a polynomial in z.

    Accepts ``^`` for powers and implicit products such as ``2z``.
    """
    from tokenize import TokenError
    import sympy
    from sympy.parsing.sympy_parser import (
        convert_xor,
        implicit_multiplication_application,
        parse_expr,
        standard_transformations,
    )

    z = sympy.Symbol("z")
    rules = standard_transformations + (convert_xor, implicit_multiplication_application)
    try:
        expr = parse_expr(text, local_dict={"z": z}, transformations=rules)
        poly = sympy.Poly(expr, z)
    except (sympy.SympifyError, sympy.PolynomialError, TypeError, SyntaxError, TokenError) as exc:
        raise InvalidFieldSpec(f"cannot read polynomial {text!r}: {exc}") from None
    if poly.free_symbols - {z}:
        raise InvalidFieldSpec(f"polynomial {text!r} involves symbols other than z")
    coeffs = poly.all_coeffs()[::-1]
    if not all(c.is_integer for c in coeffs):
        raise InvalidFieldSpec(f"polynomial {text!r} must have integer coefficients")
    return tuple(int(c) for c in coeffs)


# ---------------------------------------------------------------------------
# prisms


@dataclass(frozen=True)
class PrismLevel:
    """``(A^s, E(z_0))`` truncated to a weight window."""

    spec: FieldSpec
    level: int
    ring: DeltaRingDescriptor
    window: WeightWindow

    @cached_property
    def distinguished(self) -> TruncatedElement:
        return TruncatedElement.polynomial(self.ring, self.window, self.spec.eisenstein, var=0)

    def univariate_ring(self) -> DeltaRingDescriptor:
        return DeltaRingDescriptor(self.spec.p, 1)

    def is_distinguished(self) -> bool:
        """δ(E) is a unit mod (p, E): its constant term is prime to p."""
        d = delta(self.distinguished)
        c0 = d.coefficient((0,) * self.ring.nvars)
        return c0 != 0 and valuation(c0.numerator, self.spec.p) == 0 and c0.denominator % self.spec.p != 0


def build_prism(spec: FieldSpec, s: int, window: WeightWindow | None = None) -> PrismLevel:
    if s not in (0, 1):
        raise ValueError("only levels 0 and 1 are used")
    window = window or WeightWindow(max(spec.e, 1), 32)
    ring = DeltaRingDescriptor(spec.p, s + 1, spec.f)
    return PrismLevel(spec, s, ring, window)


def cosimplicial_faces(
    p: int, window: WeightWindow
) -> tuple[Callable[[TruncatedElement], TruncatedElement], Callable[[TruncatedElement], TruncatedElement]]:
    """The two coface maps ``A^0 -> A^1``: ``z -> z_0`` and ``z -> z_1``."""
    ring1 = DeltaRingDescriptor(p, 2)

    def face0(a: TruncatedElement) -> TruncatedElement:
        return substitute_variable(a, ring1, 0)

    def face1(a: TruncatedElement) -> TruncatedElement:
        return substitute_variable(a, ring1, 1)

    return face0, face1


def codegeneracy(a: TruncatedElement) -> TruncatedElement:
    """``A^1 -> A^0``, both variables to z."""
    return collapse_variables(a, DeltaRingDescriptor(a.p, 1))


# ---------------------------------------------------------------------------
# graded bases


class GradedBasis:
    """A lattice basis whose elements are ordered by leading weight.

    ``elements[k]`` has no terms below weight ``weights[k]``, and the
    weight-w parts of the weight-w elements form an invertible block.
    Coordinates are computed weight by weight, from ``lo`` up to ``b``.
    """

    def __init__(self, elements: Sequence[TruncatedElement], weights: Sequence[int], lo: int = 1):
        order = sorted(range(len(elements)), key=lambda k: weights[k])
        self.elements = [elements[k] for k in order if weights[k] >= lo]
        self.weights = [weights[k] for k in order if weights[k] >= lo]
        if not self.elements:
            raise ValueError("empty basis")
        first = self.elements[0]
        self.p = first.p
        self.nvars = first.ring.nvars
        self.b = first.b
        self.lo = lo
        self.precision = min(e.prec for e in self.elements)
        shift = max(e.shift for e in self.elements)
        rows = np.array([e.vector(lo, shift) for e in self.elements], dtype=object)
        self.matrix = ScaledMatrix(rows, shift, self.p, self.precision)
        # column blocks: monomials of each weight, in graded-lex order
        sizes = [math.comb(w + self.nvars - 1, self.nvars - 1) for w in range(lo, self.b + 1)]
        starts = np.cumsum([0] + sizes)
        self.blocks = {w: (int(starts[w - lo]), int(starts[w - lo + 1])) for w in range(lo, self.b + 1)}
        counts = [self.weights.count(w) for w in range(lo, self.b + 1)]
        if counts != sizes:
            raise PrecisionError(
                f"basis has {counts} elements per weight, expected {sizes}"
            )
        self._inverses: dict[int, ScaledMatrix] = {}

    def __len__(self):
        return len(self.elements)

    def rank_by_weight(self) -> dict[int, int]:
        return {w: self.weights.count(w) for w in range(self.lo, self.b + 1)}

    def _block_inverse(self, w: int) -> ScaledMatrix:
        if w not in self._inverses:
            a, c = self.blocks[w]
            self._inverses[w] = self.matrix[a:c, a:c].inverse()
        return self._inverses[w]

    def coordinates(self, vectors: ScaledMatrix) -> ScaledMatrix:
        """Solve ``X @ basis = vectors`` (rows are ambient vectors)."""
        rest = vectors.with_precision(self.precision)
        pieces = []
        for w in range(self.lo, self.b + 1):
            a, c = self.blocks[w]
            width = c - a
            x = rest[:, :width] @ self._block_inverse(w)
            pieces.append(x)
            if c < self.matrix.shape[1]:
                rest = rest[:, width:] - x @ self.matrix[a:c, c:]
        return ScaledMatrix.hstack(pieces)

    def vectors(self, elements: Sequence[TruncatedElement]) -> ScaledMatrix:
        """Ambient coordinates (weights lo..b) of arbitrary elements."""
        return elements_matrix(elements, self.lo)


def elements_matrix(elements: Sequence[TruncatedElement], lo: int = 1) -> ScaledMatrix:
    shift = max(e.shift for e in elements)
    prec = min(e.prec for e in elements)
    rows = np.array([e.vector(lo, shift) for e in elements], dtype=object)
    return ScaledMatrix(rows, shift, elements[0].p, prec)


def matrix_elements(
    m: ScaledMatrix, ring: DeltaRingDescriptor, window: WeightWindow, lo: int = 1
) -> list[TruncatedElement]:
    """Inverse of :func:`elements_matrix`."""
    from .delta_series import _flat_index

    idx = _flat_index(ring.nvars, window.max_weight, lo)
    shape = (window.max_weight + 1,) * ring.nvars
    out = []
    for row in m.ints:
        grid = np.zeros(int(np.prod(shape)), dtype=object)
        grid[idx] = row
        out.append(TruncatedElement(ring, window, grid.reshape(shape), m.shift, m.N))
    return out


# ---------------------------------------------------------------------------
# envelopes


@dataclass
class EnvelopeRing:
    """The envelope of ``O_K/π^n`` over ``A^s``, truncated to a window."""

    prism: PrismLevel
    n: int
    x_iterates: list[TruncatedElement]
    y_iterates: list[TruncatedElement] = field(default_factory=list)

    @property
    def spec(self) -> FieldSpec:
        return self.prism.spec

    @property
    def window(self) -> WeightWindow:
        return self.prism.window

    @property
    def level(self) -> int:
        return self.prism.level

    @property
    def p(self) -> int:
        return self.spec.p

    @property
    def b(self) -> int:
        return self.window.max_weight

    @cached_property
    def _uni_ring(self) -> DeltaRingDescriptor:
        return DeltaRingDescriptor(self.p, 1)

    def relation_residuals(self) -> list[TruncatedElement]:
        """``E x - z_0^n`` (and ``E y - (z_1 - z_0)``); all vanish."""
        ring, window = self.prism.ring, self.window
        E = self.prism.distinguished
        z0 = TruncatedElement.variable(ring, window, 0)
        x = self.x_iterates[0] if self.level == 0 else substitute_variable(self.x_iterates[0], ring, 0)
        out = [E * x - z0**self.n]
        if self.level == 1:
            z1 = TruncatedElement.variable(ring, window, 1)
            out.append(E * self.y_iterates[0] - (z1 - z0))
        return out

    # level-0 pieces, as one-variable series in z = z_0

    def _x_products(self, frob: bool) -> dict[int, TruncatedElement]:
        """``prod_j δ^j(x)^{m_j}`` (or its Frobenius) for every usable m."""
        p, n, b = self.p, self.n, self.b
        step = p * n if frob else n
        ring, window = self._uni_ring, self.window
        one = TruncatedElement.constant(ring, window, 1)
        gens = [frobenius(x) for x in self.x_iterates] if frob else self.x_iterates
        out = {0: one}
        for m in range(1, b // step + 1):
            j = 0
            while (m // p**j) % p == 0:
                j += 1
            out[m] = mul(out[m - p**j], gens[j])
        return out

    def base_basis(self, twisted: bool) -> list[tuple[int, TruncatedElement]]:
        """Weight-adapted basis ``(weight, element)`` of the level-0 envelope."""
        p, n, b = self.p, self.n, self.b
        span = p * n if twisted else n
        ring, window = self._uni_ring, self.window
        z = TruncatedElement.variable(ring, window, 0)
        zpow = [TruncatedElement.constant(ring, window, 1)]
        for _ in range(span):
            zpow.append(zpow[-1] * z)
        out = []
        for m, g in self._x_products(twisted).items():
            for a in range(span):
                w = a + span * m
                if w <= b:
                    out.append((w, g if a == 0 else mul(zpow[a], g)))
        out.sort(key=lambda t: t[0])
        return out

    def _y_products(self, frob: bool) -> dict[int, TruncatedElement]:
        p, b = self.p, self.b
        step = p if frob else 1
        gens = [frobenius(y) for y in self.y_iterates] if frob else self.y_iterates
        one = TruncatedElement.constant(self.prism.ring, self.window, 1)
        out = {0: one}
        for m in range(1, b // step + 1):
            j = 0
            while (m // p**j) % p == 0:
                j += 1
            out[m] = mul(out[m - p**j], gens[j])
        return out

    def basis_elements(self, twisted: bool, scale_by: TruncatedElement | None = None) -> list[tuple[int, TruncatedElement]]:
        """Weight-adapted basis of the envelope at this level.

        ``scale_by`` (a series in z_0) multiplies every element, which is
        how the basis of ``E^i`` times the envelope is produced.
        """
        base = self.base_basis(twisted)
        if scale_by is not None:
            base = [(w, mul(scale_by, g)) for w, g in base]
        if self.level == 0:
            return base
        p, b = self.p, self.b
        ring, window = self.prism.ring, self.window
        out = []
        for m, beta in self._y_products(twisted).items():
            wm = p * m if twisted else m
            shifts = range(p) if twisted else range(1)
            for c in shifts:
                if wm + c > b:
                    continue
                gm = beta if c == 0 else mul(TruncatedElement.from_terms(ring, window, {(0, c): 1}), beta)
                for w, ell in base:
                    if w + wm + c <= b:
                        out.append((w + wm + c, mul_by_univariate(ell, gm, var=0)))
        out.sort(key=lambda t: t[0])
        return out

    def graded_basis(self, twisted: bool, power_of_E: int = 0) -> GradedBasis:
        scale_by = None
        if power_of_E:
            E = TruncatedElement.polynomial(self._uni_ring, self.window, self.spec.eisenstein)
            scale_by = power(E, power_of_E)
        pairs = self.basis_elements(twisted, scale_by)
        return GradedBasis([g for _, g in pairs], [w for w, _ in pairs])


def envelope(prism: PrismLevel, n: int, window: WeightWindow | None = None) -> EnvelopeRing:
    """Adjoin ``z_0^n / E(z_0)`` (and ``(z_1 - z_0)/E(z_0)`` at level 1)."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if window is not None and window != prism.window:
        prism = PrismLevel(prism.spec, prism.level, prism.ring, window)
    window = prism.window
    p, b = prism.spec.p, window.max_weight
    uni = DeltaRingDescriptor(p, 1)
    E = TruncatedElement.polynomial(uni, window, prism.spec.eisenstein)
    Einv = inverse(E)
    z = TruncatedElement.variable(uni, window, 0)
    x = mul(power(z, n), Einv)
    xs = [x]
    while n * p ** len(xs) <= b:
        xs.append(delta(xs[-1]))
    ys: list[TruncatedElement] = []
    if prism.level == 1:
        ring = prism.ring
        diff = TruncatedElement.variable(ring, window, 1) - TruncatedElement.variable(ring, window, 0)
        ys = [mul_by_univariate(Einv, diff, var=0)]
        while p ** len(ys) <= b:
            ys.append(delta(ys[-1]))
    return EnvelopeRing(prism, n, xs, ys)


# ---------------------------------------------------------------------------
# Nygaard filtration and twists


@dataclass(frozen=True)
class NygaardLattice:
    """``F^[1,b] N^{>=i}`` of the twisted level-0 envelope.

    ``basis`` holds ambient vectors (weights 1..b, one row per basis
    element); ``inclusion`` gives the same rows in the coordinates of the
    twisted envelope basis.
    """

    weight: int
    b: int
    basis: ScaledMatrix
    inclusion: ScaledMatrix

    @property
    def rank(self) -> int:
        return self.basis.shape[0]


def intersect_row_lattices(A: ScaledMatrix, B: ScaledMatrix) -> ScaledMatrix:
    """Basis of ``rowspan(A) ∩ rowspan(B)`` for full-rank square A, B.

    Uses duality: the intersection is dual to the sum of the duals, and
    the dual of ``rowspan(A)`` is the column span of ``A^-1``.
    """
    dual = ScaledMatrix.hstack([A.inverse(), B.inverse()])
    cols = dual.column_basis()
    if len(cols) != A.shape[0]:
        raise PrecisionError("lattices do not span the same space")
    W = dual[:, cols]
    return W.inverse()


def nygaard_lattice(env: EnvelopeRing, i: int) -> NygaardLattice:
    """``F^[1,b]`` of ``φ^*D ∩ E^i D`` at level 0."""
    if env.level != 0:
        raise ValueError("the Nygaard lattice is built at level 0")
    twisted = env.graded_basis(twisted=True)
    if i == 0:
        basis = twisted.matrix
    else:
        multiples = env.graded_basis(twisted=False, power_of_E=i)
        basis = intersect_row_lattices(twisted.matrix, multiples.matrix)
    inclusion = twisted.coordinates(basis)
    return NygaardLattice(i, env.b, basis, inclusion)


@dataclass(frozen=True)
class TwistData:
    """Trivialisation of the Breuil-Kisin twist ``{i}``.

    With the normalised generator ``Ẽ = E * p / E(0)`` (constant term p),
    the divided Frobenius on ``N^{>=i}{i}`` is ``f -> φ(f) / φ(Ẽ)^i``;
    ``frobenius_factor`` stores ``φ(Ẽ)^{-i}``.  At level 1 the second
    coface carries the comparison unit ``∏_{k>=1} φ^k(E(z_1)/E(z_0))``
    raised to the i-th power (``face_unit``).
    """

    weight: int
    level: int
    normalized_generator: TruncatedElement
    unit: Fraction
    frobenius_factor: TruncatedElement
    face_unit: TruncatedElement | None
    tower_stages: int


def twist_tower_check(spec: FieldSpec, stages: int) -> bool:
    """Each transition ``I_r/I_r^2 -> I_{r-1}/I_{r-1}^2`` is p times a unit.

    Equivalently ``φ^k(E) ≡ p * (unit of A/(p, E)) mod E`` for k < stages.
    """
    import sympy

    z = sympy.Symbol("z")
    p = spec.p
    E = sympy.Poly(list(reversed(spec.eisenstein)), z)
    for k in range(1, stages):
        phiE = sympy.Poly(E.as_expr().subs(z, z ** (p**k)), z)
        rem = phiE.rem(E)
        coeffs = [int(c) for c in rem.all_coeffs()[::-1]] or [0]
        if any(c % p for c in coeffs):
            return False
        if (coeffs[0] // p) % p == 0:
            return False
    return True


def twist_data(prism: PrismLevel, i: int) -> TwistData:
    spec = prism.spec
    uni = DeltaRingDescriptor(spec.p, 1)
    window = prism.window
    u0 = spec.unit
    E = TruncatedElement.polynomial(uni, window, spec.eisenstein)
    Et = E * (1 / u0)
    stages = i + max(1, math.ceil(math.log(max(window.precision, 2), spec.p)))
    if not twist_tower_check(spec, min(stages, 4)):
        raise InvalidFieldSpec("twist tower transition is not p times a unit")
    factor = power(inverse(frobenius(Et)), i) if i else TruncatedElement.constant(uni, window, 1)
    if prism.level == 0:
        factor_lvl = factor
        face = None
    else:
        ring = prism.ring
        factor_lvl = substitute_variable(factor, ring, 0)
        face = comparison_unit(spec, window, i)
    return TwistData(i, prism.level, Et, u0, factor_lvl, face, stages)


def comparison_unit(spec: FieldSpec, window: WeightWindow, i: int) -> TruncatedElement:
    """``(∏_{k>=1} φ^k(E(z_1)/E(z_0)))^i`` in ``Z_p[[z_0, z_1]]``."""
    p, b = spec.p, window.max_weight
    ring = DeltaRingDescriptor(p, 2)
    uni = DeltaRingDescriptor(p, 1)
    E = TruncatedElement.polynomial(uni, window, spec.eisenstein)
    ratio = mul_by_univariate(inverse(E), substitute_variable(E, ring, 1), var=0)
    gamma = TruncatedElement.constant(ring, window, 1)
    term = ratio
    k = 1
    while p**k <= b:
        term = frobenius(term)
        gamma = mul(gamma, term)
        k += 1
    return power(gamma, i)


def twisted_frobenius(env: EnvelopeRing, lattice: NygaardLattice, twist: TwistData) -> ScaledMatrix:
    """Divided Frobenius ``N^{>=i}{i} -> φ^*D{i}`` in basis coordinates.

    Row k holds the coordinates of ``φ(g_k) * φ(Ẽ)^{-i}`` in the twisted
    envelope basis, for the k-th Nygaard basis element ``g_k``.
    """
    uni = DeltaRingDescriptor(env.p, 1)
    gens = matrix_elements(lattice.basis, uni, env.window)
    images = [mul(frobenius(g), twist.frobenius_factor) for g in gens]
    twisted = env.graded_basis(twisted=True)
    return twisted.coordinates(elements_matrix(images))
