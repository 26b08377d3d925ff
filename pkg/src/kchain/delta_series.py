"""Truncated power series over Z_p with the δ-structure δ(z_j) = 0.

An element of ``Z_p[[z_0, ..., z_s]]`` (or of Q_p[[...]] when it carries a
denominator) is stored densely, up to total degree ``b``, as a grid of
integer numerators and a common power-of-p denominator.  Every variable
has weight 1, so the weight of a monomial is its total degree.  The
Frobenius lift is ``z_j -> z_j^p`` and acts trivially on coefficients
(residual degree 1), so δ(a) = (φ(a) - a^p)/p.

Rings obtained by adjoining fractions such as ``z^n / E(z)`` embed in
``Q_p[[z]]``; their elements are represented by their expansions, so
the same type covers the prismatic envelopes built on top.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterator, Mapping, Sequence

import numpy as np

from .padic_linalg import balanced, common_valuation, split_unit


@dataclass(frozen=True)
class WeightWindow:
    """Keep weights ``0..max_weight`` and coefficients mod ``p**precision``."""

    max_weight: int
    precision: int

    def __post_init__(self):
        if self.max_weight < 0:
            raise ValueError("max_weight must be non-negative")
        if self.precision < 1:
            raise ValueError("precision must be at least 1")


@dataclass(frozen=True)
class DeltaRingDescriptor:
    """The ambient δ-ring ``W(F_q)[[z_0, ..., z_{nvars-1}]]``."""

    p: int
    nvars: int = 1
    f: int = 1
    names: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.nvars < 1:
            raise ValueError("need at least one variable")
        if self.f != 1:
            raise NotImplementedError("residual degree f > 1 is not yet supported")
        if self.names is None:
            default = ("z",) if self.nvars == 1 else tuple(f"z{j}" for j in range(self.nvars))
            object.__setattr__(self, "names", default)


class RingMismatch(ValueError):
    pass


@lru_cache(maxsize=None)
def _degree_grid(nvars: int, b: int) -> np.ndarray:
    axes = np.indices((b + 1,) * nvars)
    return axes.sum(axis=0)


@lru_cache(maxsize=None)
def monomials(nvars: int, b: int, lo: int = 0) -> tuple[tuple[int, ...], ...]:
    """Monomials of total degree ``lo..b`` in graded-lex order."""
    out = []
    for w in range(lo, b + 1):
        block = [m for m in itertools.product(range(w + 1), repeat=nvars) if sum(m) == w]
        block.sort(reverse=True)
        out.extend(block)
    return tuple(out)


def _as_fraction(c) -> Fraction:
    if isinstance(c, Fraction):
        return c
    if isinstance(c, (int, np.integer)):
        return Fraction(int(c))
    raise TypeError(f"unsupported scalar {c!r}")


class TruncatedElement:
    """Element of a weight-truncated, p-adically truncated δ-ring.

    ``grid[k_0, ..., k_s] / p**shift`` is the coefficient of
    ``z_0^k_0 ... z_s^k_s``.  The element is known modulo ``p**prec``
    (absolute precision, at most the window precision); operations lower
    ``prec`` by the worst-case loss, so equality is tested only to the
    precision actually held.  Numerators are balanced representatives mod
    ``p**(prec + shift)`` and vanish above total degree ``b``.
    """

    __slots__ = ("ring", "window", "grid", "shift", "prec")

    def __init__(
        self,
        ring: DeltaRingDescriptor,
        window: WeightWindow,
        grid: np.ndarray,
        shift: int = 0,
        prec: int | None = None,
    ):
        self.ring = ring
        self.window = window
        self.shift = shift
        self.prec = window.precision if prec is None else min(prec, window.precision)
        self.grid = grid
        self._reduce()

    # construction -------------------------------------------------------

    @classmethod
    def zero(cls, ring, window) -> "TruncatedElement":
        shape = (window.max_weight + 1,) * ring.nvars
        return cls(ring, window, np.zeros(shape, dtype=object))

    @classmethod
    def constant(cls, ring, window, c) -> "TruncatedElement":
        return cls.from_terms(ring, window, {(0,) * ring.nvars: c})

    @classmethod
    def variable(cls, ring, window, j: int = 0) -> "TruncatedElement":
        mono = tuple(1 if k == j else 0 for k in range(ring.nvars))
        return cls.from_terms(ring, window, {mono: 1})

    @classmethod
    def from_terms(cls, ring, window, terms: Mapping[tuple[int, ...], object]) -> "TruncatedElement":
        """Build from ``{exponent tuple: rational coefficient}``."""
        fr = {m: _as_fraction(c) for m, c in terms.items()}
        p = ring.p
        shift = 0
        for c in fr.values():
            if c:
                v, _ = split_unit(c.denominator, p)
                shift = max(shift, v)
        mod = p ** (window.precision + shift)
        el = cls.zero(ring, window)
        for m, c in fr.items():
            if len(m) != ring.nvars:
                raise ValueError(f"monomial {m} has the wrong number of variables")
            if sum(m) > window.max_weight or not c:
                continue
            num = c.numerator * p**shift
            den = c.denominator
            v, u = split_unit(den, p)
            el.grid[m] = (num // p**v) * pow(u, -1, mod) % mod
        el.shift = shift
        el._reduce()
        return el

    @classmethod
    def polynomial(cls, ring, window, coeffs: Sequence, var: int = 0) -> "TruncatedElement":
        """``sum coeffs[k] * z_var^k``."""
        terms = {}
        for k, c in enumerate(coeffs):
            mono = tuple(k if j == var else 0 for j in range(ring.nvars))
            terms[mono] = c
        return cls.from_terms(ring, window, terms)

    # bookkeeping --------------------------------------------------------

    @property
    def p(self) -> int:
        return self.ring.p

    @property
    def b(self) -> int:
        return self.window.max_weight

    @property
    def modulus(self) -> int:
        return self.p ** max(self.prec + self.shift, 0)

    @property
    def valuation_bound(self) -> int:
        """Lower bound for the valuation of every coefficient."""
        return -self.shift

    def _reduce(self):
        p = self.p
        g = self.grid
        if self.ring.nvars > 1:
            g[_degree_grid(self.ring.nvars, self.b) > self.b] = 0
        mod = self.modulus
        half = mod // 2
        g = (g + half) % mod - half
        if self.shift > 0:
            k = common_valuation(g, p, self.shift)
            if k:
                g //= p**k
                self.shift -= k
        self.grid = g

    def _like(self, grid, shift, prec) -> "TruncatedElement":
        return TruncatedElement(self.ring, self.window, grid, shift, prec)

    def _check(self, other: "TruncatedElement"):
        if self.ring != other.ring or self.window != other.window:
            raise RingMismatch(
                f"cannot combine elements of {self.ring}/{self.window} and {other.ring}/{other.window}"
            )

    def _coerce(self, other) -> "TruncatedElement":
        if isinstance(other, TruncatedElement):
            self._check(other)
            return other
        return TruncatedElement.constant(self.ring, self.window, other)

    def numerators(self, shift: int) -> np.ndarray:
        if shift < self.shift:
            raise ValueError("cannot lower the shift")
        return self.grid * self.p ** (shift - self.shift)

    def copy(self) -> "TruncatedElement":
        return self._like(self.grid.copy(), self.shift, self.prec)

    def congruent(self, other, k: int | None = None) -> bool:
        """Equality mod ``p**k`` (default: the precision both sides hold)."""
        d = self - other
        if k is None:
            return d.is_zero()
        return not np.any(d.numerators(d.shift) % self.p ** max(k + d.shift, 0))

    # inspection ---------------------------------------------------------

    def coefficient(self, mono: tuple[int, ...] | int) -> Fraction:
        """Coefficient as a rational number (balanced representative)."""
        if isinstance(mono, int):
            mono = (mono,)
        if sum(mono) > self.b:
            return Fraction(0)
        return Fraction(int(self.grid[tuple(mono)]), self.p**self.shift)

    def terms(self) -> Iterator[tuple[tuple[int, ...], Fraction]]:
        for m in monomials(self.ring.nvars, self.b):
            c = self.coefficient(m)
            if c:
                yield m, c

    def components(self) -> dict[int, dict[tuple[int, ...], Fraction]]:
        """Nonzero homogeneous pieces keyed by weight."""
        out: dict[int, dict] = {}
        for m, c in self.terms():
            out.setdefault(sum(m), {})[m] = c
        return out

    def min_weight(self) -> int | None:
        """Least weight carrying a nonzero coefficient."""
        if not np.any(self.grid):
            return None
        deg = _degree_grid(self.ring.nvars, self.b)
        return int(deg[self.grid != 0].min())

    def is_zero(self) -> bool:
        return not np.any(self.grid)

    def vector(self, lo: int = 1, shift: int | None = None) -> np.ndarray:
        """Numerators of weights ``lo..b`` in graded-lex order."""
        g = self.grid if shift is None else self.numerators(shift)
        idx = _flat_index(self.ring.nvars, self.b, lo)
        return g.reshape(-1)[idx]

    # arithmetic ---------------------------------------------------------

    def __add__(self, other) -> "TruncatedElement":
        return add(self, self._coerce(other))

    __radd__ = __add__

    def __neg__(self) -> "TruncatedElement":
        return self._like(-self.grid, self.shift, self.prec)

    def __sub__(self, other) -> "TruncatedElement":
        return add(self, -self._coerce(other))

    def __rsub__(self, other) -> "TruncatedElement":
        return add(self._coerce(other), -self)

    def __mul__(self, other) -> "TruncatedElement":
        if isinstance(other, TruncatedElement):
            return mul(self, other)
        return scale(self, other)

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "TruncatedElement":
        return power(self, k)

    def __eq__(self, other) -> bool:
        if not isinstance(other, (TruncatedElement, int, Fraction)):
            return NotImplemented
        return (self - other).is_zero()

    __hash__ = None

    def __repr__(self) -> str:
        parts = []
        for m, c in self.terms():
            mono = "*".join(
                f"{n}^{k}" if k > 1 else n for n, k in zip(self.ring.names, m) if k
            )
            parts.append(f"{c}" if not mono else (mono if c == 1 else f"{c}*{mono}"))
        return " + ".join(parts) or "0"


@lru_cache(maxsize=None)
def _flat_index(nvars: int, b: int, lo: int) -> np.ndarray:
    shape = (b + 1,) * nvars
    return np.array([np.ravel_multi_index(m, shape) for m in monomials(nvars, b, lo)], dtype=np.intp)


# ---------------------------------------------------------------------------
# operations


def add(a: TruncatedElement, b: TruncatedElement) -> TruncatedElement:
    a._check(b)
    s = max(a.shift, b.shift)
    return a._like(a.numerators(s) + b.numerators(s), s, min(a.prec, b.prec))


def scale(a: TruncatedElement, c) -> TruncatedElement:
    """Multiply by a rational scalar prime-to-p up to a power of p."""
    c = _as_fraction(c)
    if not c:
        return TruncatedElement.zero(a.ring, a.window)
    p = a.p
    vn, un = split_unit(c.numerator, p)
    vd, ud = split_unit(c.denominator, p)
    shift = a.shift + vd - vn
    prec = a.prec + vn - vd
    mod = p ** max(prec + max(shift, 0), 1)
    grid = a.grid * (un * pow(ud, -1, mod))
    if shift < 0:
        grid = grid * p ** (-shift)
        shift = 0
    return a._like(grid, shift, prec)


def mul(a: TruncatedElement, b: TruncatedElement) -> TruncatedElement:
    a._check(b)
    # loop over the sparser factor
    if np.count_nonzero(a.grid) > np.count_nonzero(b.grid):
        a, b = b, a
    top = a.b
    out = np.zeros_like(b.grid)
    g = b.grid
    for idx in zip(*np.nonzero(a.grid)):
        if sum(idx) > top:
            continue
        c = a.grid[idx]
        dst = tuple(slice(k, None) for k in idx)
        src = tuple(slice(0, top + 1 - k) for k in idx)
        out[dst] += c * g[src]
    prec = min(a.prec + b.valuation_bound, b.prec + a.valuation_bound)
    return a._like(out, a.shift + b.shift, prec)


def power(a: TruncatedElement, k: int) -> TruncatedElement:
    if k < 0:
        return power(inverse(a), -k)
    result = TruncatedElement.constant(a.ring, a.window, 1)
    base = a
    while k:
        if k & 1:
            result = mul(result, base)
        k >>= 1
        if k:
            base = mul(base, base)
    return result


def frobenius(a: TruncatedElement) -> TruncatedElement:
    """φ: z_j -> z_j^p, identity on coefficients."""
    p, top, nv = a.p, a.b, a.ring.nvars
    out = np.zeros_like(a.grid)
    keep = top // p
    src = tuple(slice(0, keep + 1) for _ in range(nv))
    dst = tuple(slice(0, p * keep + 1, p) for _ in range(nv))
    out[dst] = a.grid[src]
    return a._like(out, a.shift, a.prec)


def delta(a: TruncatedElement) -> TruncatedElement:
    """δ(a) = (φ(a) - a^p) / p."""
    d = frobenius(a) - power(a, a.p)
    return a._like(d.grid, d.shift + 1, d.prec - 1)


def weight_truncate(a: TruncatedElement, lo: int, hi: int) -> TruncatedElement:
    """Keep the homogeneous pieces of weight ``lo..hi``."""
    if not 0 <= lo <= hi <= a.b:
        raise ValueError(f"need 0 <= lo <= hi <= {a.b}, got [{lo}, {hi}]")
    deg = _degree_grid(a.ring.nvars, a.b)
    grid = a.grid.copy()
    grid[(deg < lo) | (deg > hi)] = 0
    return a._like(grid, a.shift, a.prec)


def inverse(a: TruncatedElement) -> TruncatedElement:
    """Inverse of a series with nonzero constant term."""
    c0 = a.coefficient((0,) * a.ring.nvars)
    if not c0:
        raise ZeroDivisionError("constant term vanishes; not invertible")
    t = scale(a, 1 / c0) - 1
    # 1/(1+t) = prod_k (1 + (-t)^(2^k)) while 2^k <= b
    u = -t
    result = 1 + u
    k = 2
    while k <= a.b:
        u = mul(u, u)
        result = mul(result, 1 + u)
        k *= 2
    return scale(result, 1 / c0)


def substitute_variable(a: TruncatedElement, ring: DeltaRingDescriptor, var: int) -> TruncatedElement:
    """View a one-variable series as a series in ``z_var`` of ``ring``."""
    if a.ring.nvars != 1:
        raise ValueError("expected a one-variable series")
    if ring.p != a.p:
        raise RingMismatch("different primes")
    out = TruncatedElement.zero(ring, a.window)
    idx = [0] * ring.nvars
    idx[var] = slice(None)
    out.grid[tuple(idx)] = a.grid
    return TruncatedElement(ring, a.window, out.grid, a.shift, a.prec)


def collapse_variables(a: TruncatedElement, ring: DeltaRingDescriptor) -> TruncatedElement:
    """Send every ``z_j`` to the single variable of ``ring``."""
    if ring.nvars != 1:
        raise ValueError("target must have one variable")
    out = TruncatedElement.zero(ring, a.window)
    deg = _degree_grid(a.ring.nvars, a.b)
    for w in range(a.b + 1):
        out.grid[w] = a.grid[deg == w].sum() if np.any(deg == w) else 0
    return TruncatedElement(ring, a.window, out.grid, a.shift, a.prec)


def mul_by_univariate(f: TruncatedElement, g: TruncatedElement, var: int = 0) -> TruncatedElement:
    """``f(z_var) * g`` for a one-variable ``f``, cheaper than embedding."""
    top = g.b
    out = np.zeros_like(g.grid)
    nv = g.ring.nvars
    for k in np.nonzero(f.grid)[0]:
        k = int(k)
        c = f.grid[k]
        dst = [slice(None)] * nv
        src = [slice(None)] * nv
        dst[var] = slice(k, None)
        src[var] = slice(0, top + 1 - k)
        out[tuple(dst)] += c * g.grid[tuple(src)]
    prec = min(f.prec + g.valuation_bound, g.prec + f.valuation_bound)
    return g._like(out, f.shift + g.shift, prec)
