"""From syntomic cohomology to K-groups of O_K/π^n.

For ``r >= 1`` the p-adic part of ``K_r`` is read off the weight-i
syntomic cohomology (``K_{2i-1} = H^1``, ``K_{2i-2} = H^2``), and the
prime-to-p part is that of the residue field by rigidity.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction

import sympy

from .padic_linalg import AbelianPGroup
from .prism_envelope import FieldSpec

@dataclass(frozen=True)
class FiniteAbelianGroup:
    """``⊕ Z/prime^exponent`` in canonical (prime, exponent) order.

    ``free_rank`` is only ever nonzero for K_0 (which is ``Z``).
    """

    factors: tuple[tuple[int, int], ...] = ()
    free_rank: int = 0

    def __post_init__(self):
        facs = []
        for prime, exp in self.factors:
            prime, exp = int(prime), int(exp)
            if exp < 0 or not sympy.isprime(prime):
                raise ValueError(f"bad cyclic factor ({prime}, {exp})")
            if exp:
                facs.append((prime, exp))
        object.__setattr__(self, "factors", tuple(sorted(facs)))

    @classmethod
    def cyclic(cls, order: int) -> "FiniteAbelianGroup":
        if order < 1:
            raise ValueError("order must be positive")
        return cls(tuple(sympy.factorint(order).items()))

    @classmethod
    def from_p_group(cls, group: AbelianPGroup) -> "FiniteAbelianGroup":
        return cls(tuple((group.prime, v) for v in group.exponents))

    def p_part(self, p: int) -> AbelianPGroup:
        return AbelianPGroup(p, tuple(v for q, v in self.factors if q == p))

    def prime_to(self, p: int) -> "FiniteAbelianGroup":
        return FiniteAbelianGroup(tuple(f for f in self.factors if f[0] != p), self.free_rank)

    def __add__(self, other: "FiniteAbelianGroup") -> "FiniteAbelianGroup":
        return FiniteAbelianGroup(self.factors + other.factors, self.free_rank + other.free_rank)

    @property
    def order(self) -> int:
        if self.free_rank:
            raise ValueError("group is infinite")
        return math.prod(q**v for q, v in self.factors)

    def is_trivial(self) -> bool:
        return not self.factors and not self.free_rank

    def invariant_factors(self) -> tuple[int, ...]:
        """Orders ``d_1 | d_2 | ...`` of the cyclic decomposition."""
        by_prime: dict[int, list[int]] = {}
        for q, v in self.factors:
            by_prime.setdefault(q, []).append(v)
        length = max((len(v) for v in by_prime.values()), default=0)
        out = [1] * length
        for q, exps in by_prime.items():
            for k, v in enumerate(reversed(exps)):
                out[length - 1 - k] *= q**v
        return tuple(out)

    def __str__(self) -> str:
        parts = ["Z"] * self.free_rank + [f"Z/{q**v}" for q, v in self.factors]
        return " + ".join(parts) or "0"


@dataclass
class KEntry:
    """Both K-groups attached to one syntomic weight."""

    i: int
    odd: AbelianPGroup  # K_{2i-1}, p-part
    even: AbelianPGroup  # K_{2i-2}, p-part; trivial for i = 1 by convention
    precision: int | None = None
    certified: bool = True
    seconds: float = 0.0
    cache_hit: bool = False
    from_vanishing: bool = False
    error: str | None = None


@dataclass
class KGroupTable:
    spec: FieldSpec
    n: int
    weights: tuple[int, int]
    entries: dict[int, KEntry] = field(default_factory=dict)
    integral: dict[int, FiniteAbelianGroup] = field(default_factory=dict)

    def missing(self) -> list[int]:
        lo, hi = self.weights
        return [i for i in range(lo, hi + 1) if i not in self.entries]

    def k_group(self, r: int) -> AbelianPGroup | None:
        """p-part of ``K_r`` for ``r >= 1``, if its weight was computed."""
        if r < 1:
            raise ValueError("K_0 is Z and carries no p-part table entry")
        i = (r + 1) // 2 if r % 2 else r // 2 + 1
        entry = self.entries.get(i)
        if entry is None or entry.error:
            return None
        return entry.odd if r % 2 else entry.even

    def degrees(self) -> list[int]:
        lo, hi = self.weights
        return list(range(max(1, 2 * lo - 2), 2 * hi))


def ratio_identity(H1: AbelianPGroup, H2: AbelianPGroup, spec: FieldSpec, n: int, i: int) -> bool:
    """``log_p #H^1 - log_p #H^2 == i (n-1) f``."""
    return H1.log_order - H2.log_order == i * (n - 1) * spec.f


def ratio_check(H1: AbelianPGroup, H2: AbelianPGroup, spec: FieldSpec, n: int, i: int) -> bool:
    if i < 2:
        raise ValueError("the order ratio only constrains weights i >= 2")
    return ratio_identity(H1, H2, spec, n, i)


def k_p_parts(spec: FieldSpec, n: int, i: int, **kwargs) -> tuple[AbelianPGroup, AbelianPGroup]:
    """p-parts of ``(K_{2i-1}, K_{2i-2})`` of ``O_K/π^n``.

    Keyword arguments go to :func:`kchain.syntomic.syntomic_cohomology`.
    """
    from .syntomic import syntomic_cohomology

    if i < 1 or n < 1:
        raise ValueError("need i >= 1 and n >= 1")
    if n == 1:
        # the residue field has no p-torsion in positive degrees
        return AbelianPGroup(spec.p), AbelianPGroup(spec.p)
    res = syntomic_cohomology(spec, n, i, **kwargs)
    even = res.H2 if i >= 2 else AbelianPGroup(spec.p)
    return res.H1, even


def quillen_k(q: int, r: int) -> FiniteAbelianGroup:
    """``K_r(F_q)``: ``Z`` for r = 0, ``Z/(q^i - 1)`` for r = 2i-1, else 0."""
    if r < 0:
        raise ValueError("r must be non-negative")
    if r == 0:
        return FiniteAbelianGroup(free_rank=1)
    if r % 2 == 0:
        return FiniteAbelianGroup()
    return FiniteAbelianGroup.cyclic(q ** ((r + 1) // 2) - 1)


def assemble_integral(spec: FieldSpec, n: int, r: int, p_part: AbelianPGroup | None = None, **kwargs) -> FiniteAbelianGroup:
    """Integral ``K_r(O_K/π^n)`` for ``r >= 1``.

    ``p_part`` skips the syntomic computation when it is already known.
    """
    if r < 1:
        raise ValueError("r must be at least 1")
    if p_part is None:
        i = (r + 1) // 2 if r % 2 else r // 2 + 1
        odd, even = k_p_parts(spec, n, i, **kwargs)
        p_part = odd if r % 2 else even
    return FiniteAbelianGroup.from_p_group(p_part) + quillen_k(spec.q, r).prime_to(spec.p)


def even_vanishing_bound(spec: FieldSpec, n: int) -> int:
    """Weight beyond which every ``K_{2i-2}`` vanishes."""
    p = spec.p
    return math.ceil(Fraction(p * p, (p - 1) ** 2) * (p ** (-(-n // spec.e)) - 1))


class VanishingHypothesisWarning(UserWarning):
    pass


def odd_order(spec: FieldSpec, n: int, i: int) -> int:
    """``#K_{2i-1} = q^{i(n-1)} (q^i - 1)`` in the even-vanishing range.

    Below the bound the formula is not guaranteed; the value is still
    returned, with a warning.
    """
    if i < even_vanishing_bound(spec, n):
        warnings.warn(
            f"i = {i} is below the even-vanishing bound {even_vanishing_bound(spec, n)}",
            VanishingHypothesisWarning,
            stacklevel=2,
        )
    q = spec.q
    return q ** (i * (n - 1)) * (q**i - 1)


def k1_units_check(spec: FieldSpec, n: int, k1: AbelianPGroup | None = None, **kwargs) -> bool:
    """The p-part of ``K_1`` must have the order of the p-part of the units."""
    if k1 is None:
        k1 = k_p_parts(spec, n, 1, **kwargs)[0]
    return k1.log_order == spec.f * (n - 1)
