"""Linear algebra over Z/p^N with precision certification.

Two kinds of matrices live here.  :class:`PadicMatrix` is the public,
integral object: entries are residues mod ``p**N`` and every reported
elementary divisor carries a certificate saying whether it was resolved
at that precision.  :class:`ScaledMatrix` is the working type used while
building lattices: a matrix over Q_p stored as an integer numerator
matrix and a common power-of-p denominator, known modulo ``p**N``.

Matrices act on column vectors throughout (shape = (target, source)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

INF = math.inf


class PrecisionError(ArithmeticError):
    """Raised when a quantity cannot be resolved at the working precision."""


class CompositionError(ValueError):
    """Raised when two differentials do not compose to zero."""


def valuation(x: int, p: int, cap: float = INF) -> float:
    """p-adic valuation of an integer, ``cap`` for zero."""
    if x == 0:
        return cap
    v = 0
    if p == 2:
        v = (x & -x).bit_length() - 1
        return min(v, cap)
    while x % p == 0:
        x //= p
        v += 1
        if v >= cap:
            return cap
    return v


def common_valuation(a: np.ndarray, p: int, cap: int) -> int:
    """Largest k <= cap with p^k dividing every entry of ``a``."""
    g = int(np.gcd.reduce(a.ravel())) if a.size else 0
    return int(valuation(g, p, cap))


def split_unit(x: int, p: int) -> tuple[int, int]:
    """Write nonzero ``x`` as ``p**v * u`` with ``u`` prime to p."""
    v = int(valuation(x, p))
    return v, x // p**v


def balanced(x: int, modulus: int) -> int:
    """Representative of ``x mod modulus`` in (-modulus/2, modulus/2]."""
    x %= modulus
    return x - modulus if 2 * x > modulus else x


def object_array(rows: Iterable[Iterable[int]] | np.ndarray, shape=None) -> np.ndarray:
    """Dense object array of Python ints (numpy int64 would overflow)."""
    if isinstance(rows, np.ndarray) and rows.dtype == object:
        out = rows.copy()
    else:
        out = np.array([[int(x) for x in row] for row in rows], dtype=object)
    if shape is not None:
        out = out.reshape(shape)
    if out.ndim == 1:
        out = out.reshape(1, -1) if out.size else np.zeros((0, 0), dtype=object)
    return out


def zeros(m: int, n: int) -> np.ndarray:
    return np.zeros((m, n), dtype=object)


def identity(n: int) -> np.ndarray:
    out = zeros(n, n)
    for k in range(n):
        out[k, k] = 1
    return out


@dataclass(frozen=True)
class PadicScalar:
    value: int
    modulus_exponent: int
    prime: int

    def __post_init__(self):
        if self.modulus_exponent < 1:
            raise ValueError("precision must be at least 1")
        object.__setattr__(self, "value", self.value % self.prime**self.modulus_exponent)

    @property
    def valuation(self) -> float:
        return valuation(self.value, self.prime, self.modulus_exponent)


@dataclass(frozen=True)
class AbelianPGroup:
    """Finite abelian p-group, ``⊕ Z/p^v`` over the stored exponents."""

    prime: int
    exponents: tuple[int, ...] = ()

    def __post_init__(self):
        exps = tuple(sorted(int(v) for v in self.exponents))
        if any(v <= 0 for v in exps):
            raise ValueError(f"exponents must be positive, got {exps}")
        object.__setattr__(self, "exponents", exps)

    @property
    def log_order(self) -> int:
        return sum(self.exponents)

    @property
    def order(self) -> int:
        return self.prime**self.log_order

    def is_trivial(self) -> bool:
        return not self.exponents

    def __str__(self) -> str:
        if not self.exponents:
            return "0"
        parts = []
        for v in sorted(set(self.exponents)):
            k = self.exponents.count(v)
            term = f"Z/{self.prime**v}"
            parts.append(term if k == 1 else f"({term})^{k}")
        return " + ".join(parts)


@dataclass(frozen=True)
class ElementaryDivisorReport:
    exponents: tuple[float, ...]
    certified: bool
    precision_used: int

    def finite(self) -> tuple[int, ...]:
        return tuple(int(v) for v in self.exponents if v != INF)

    @property
    def rank(self) -> int:
        """Rank over Q_p, counting only the resolved divisors."""
        return sum(1 for v in self.exponents if v != INF)


class PadicMatrix:
    """Immutable dense matrix over Z/p^N."""

    __slots__ = ("p", "N", "_a")

    def __init__(self, entries, p: int, N: int):
        if N < 1:
            raise ValueError("precision must be at least 1")
        a = np.array(entries, dtype=object)
        if a.ndim == 1:
            a = a.reshape(1, -1)
        if a.ndim != 2:
            raise ValueError("entries must form a 2-D grid")
        a = a % p**N
        a.flags.writeable = False
        self.p = p
        self.N = N
        self._a = a

    @classmethod
    def zero(cls, rows: int, cols: int, p: int, N: int) -> "PadicMatrix":
        return cls(zeros(rows, cols), p, N)

    @property
    def shape(self) -> tuple[int, int]:
        return self._a.shape

    @property
    def rows(self) -> int:
        return self._a.shape[0]

    @property
    def cols(self) -> int:
        return self._a.shape[1]

    @property
    def modulus(self) -> int:
        return self.p**self.N

    def array(self) -> np.ndarray:
        """Writable copy of the residues."""
        return self._a.copy()

    def __getitem__(self, key) -> PadicScalar:
        return PadicScalar(int(self._a[key]), self.N, self.p)

    def tolist(self) -> list[list[int]]:
        return [[int(x) for x in row] for row in self._a]

    def balanced(self) -> list[list[int]]:
        m = self.modulus
        return [[balanced(int(x), m) for x in row] for row in self._a]

    def _check(self, other: "PadicMatrix"):
        if (self.p, self.N) != (other.p, other.N):
            raise ValueError("matrices live over different Z/p^N")

    def __matmul__(self, other: "PadicMatrix") -> "PadicMatrix":
        self._check(other)
        return PadicMatrix(self._a.dot(other._a), self.p, self.N)

    def __add__(self, other: "PadicMatrix") -> "PadicMatrix":
        self._check(other)
        return PadicMatrix(self._a + other._a, self.p, self.N)

    def __sub__(self, other: "PadicMatrix") -> "PadicMatrix":
        self._check(other)
        return PadicMatrix(self._a - other._a, self.p, self.N)

    def __neg__(self) -> "PadicMatrix":
        return PadicMatrix(-self._a, self.p, self.N)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PadicMatrix):
            return NotImplemented
        return (self.p, self.N, self.shape) == (other.p, other.N, other.shape) and bool(
            np.all(self._a == other._a)
        )

    def __hash__(self):
        return hash((self.p, self.N, self.shape, tuple(map(int, self._a.flat))))

    @property
    def T(self) -> "PadicMatrix":
        return PadicMatrix(self._a.T, self.p, self.N)

    def is_zero(self) -> bool:
        return not np.any(self._a)

    def lift(self, N: int) -> "PadicMatrix":
        """Same integer representatives read at another precision."""
        return PadicMatrix(self._a, self.p, N)

    @staticmethod
    def hstack(blocks: Sequence["PadicMatrix"]) -> "PadicMatrix":
        p, N = blocks[0].p, blocks[0].N
        return PadicMatrix(np.hstack([b._a for b in blocks]), p, N)

    @staticmethod
    def vstack(blocks: Sequence["PadicMatrix"]) -> "PadicMatrix":
        p, N = blocks[0].p, blocks[0].N
        return PadicMatrix(np.vstack([b._a for b in blocks]), p, N)

    def __repr__(self):
        return f"PadicMatrix({self.balanced()}, p={self.p}, N={self.N})"


def _argmin_valuation(sub: np.ndarray, p: int, cap: int):
    """First entry (row-major) of least valuation below ``cap``.

    Returns ``((row, col), v)`` or ``(None, cap)`` when every entry
    vanishes mod ``p**cap``.
    """
    if sub.size == 0:
        return None, cap
    pk = 1
    for v in range(cap):
        pk *= p
        hit = np.argwhere(sub % pk != 0)
        if len(hit):
            r, c = hit[0]
            return (int(r), int(c)), v
    return None, cap


def smith_normal_form(M: PadicMatrix):
    """Smith form ``left @ M @ right = diag(p^v1, p^v2, ...)`` mod p^N.

    Returns ``(report, left, right)``.  Divisors that vanish at precision N
    are reported as ``inf`` and clear the ``certified`` flag.
    """
    p, N = M.p, M.N
    mod = p**N
    m, n = M.shape
    if m == 0 or n == 0:
        raise ValueError("smith_normal_form needs a nonempty matrix")
    a = M.array()
    U = identity(m)
    V = identity(n)
    exps: list[float] = []
    for k in range(min(m, n)):
        pos, v = _argmin_valuation(a[k:, k:], p, N)
        if pos is None:
            exps.extend([INF] * (min(m, n) - k))
            break
        r, c = pos[0] + k, pos[1] + k
        if r != k:
            a[[k, r]] = a[[r, k]]
            U[[k, r]] = U[[r, k]]
        if c != k:
            a[:, [k, c]] = a[:, [c, k]]
            V[:, [k, c]] = V[:, [c, k]]
        pv = p**v
        unit = a[k, k] // pv
        uinv = pow(unit, -1, mod)
        a[k] = (a[k] * uinv) % mod
        U[k] = (U[k] * uinv) % mod
        f = a[k + 1 :, k] // pv
        if np.any(f):
            a[k + 1 :] = (a[k + 1 :] - np.outer(f, a[k])) % mod
            U[k + 1 :] = (U[k + 1 :] - np.outer(f, U[k])) % mod
        g = a[k, k + 1 :] // pv
        if np.any(g):
            a[:, k + 1 :] = (a[:, k + 1 :] - np.outer(a[:, k], g)) % mod
            V[:, k + 1 :] = (V[:, k + 1 :] - np.outer(V[:, k], g)) % mod
        exps.append(v)
    certified = all(v != INF for v in exps)
    report = ElementaryDivisorReport(tuple(exps), certified, N)
    return report, PadicMatrix(U, p, N), PadicMatrix(V, p, N)


def inverse_mod(M: PadicMatrix) -> PadicMatrix:
    """Inverse of a matrix that is invertible over Z/p^N."""
    report, U, V = smith_normal_form(M)
    if M.rows != M.cols or any(v != 0 for v in report.exponents):
        raise ValueError("matrix is not invertible mod p")
    # U M V = I  =>  M^-1 = V U
    return V @ U


def saturate_image(M: PadicMatrix, strict: bool = True) -> PadicMatrix:
    """Basis (as columns) of the saturation of the column span of ``M``.

    With ``strict`` a divisor that vanishes at the working precision is an
    error (the rank is ambiguous); otherwise it is taken to be zero.  The
    result is known mod ``p^(N - v)`` for the largest resolved divisor p^v,
    since the row operations divide by the pivots.
    """
    report, U, _ = smith_normal_form(M)
    finite = [v for v in report.exponents if v != INF]
    if strict and not report.certified:
        raise PrecisionError(
            f"rank of a {M.rows}x{M.cols} matrix is ambiguous at precision {M.N}"
        )
    r = len(finite)
    # M = U^-1 D V^-1, so the image saturates to the first r columns of U^-1.
    Uinv = inverse_mod(U)
    N = M.N - max(finite, default=0)
    return PadicMatrix(Uinv.array()[:, :r].reshape(M.rows, r), M.p, max(N, 1))


def cokernel_structure(M: PadicMatrix) -> AbelianPGroup:
    """Finite cokernel of ``M`` (target = rows)."""
    report, _, _ = smith_normal_form(M)
    if not report.certified or M.rows > M.cols:
        raise PrecisionError(
            "cokernel has a divisor that vanishes at precision "
            f"{M.N} (or a free part)"
        )
    return AbelianPGroup(M.p, tuple(v for v in report.finite() if v > 0))


@dataclass(frozen=True)
class CohomologyGroup:
    """``Z_p^free_rank ⊕ torsion``."""

    free_rank: int
    torsion: AbelianPGroup

    def is_zero(self) -> bool:
        return self.free_rank == 0 and self.torsion.is_trivial()

    def __str__(self) -> str:
        parts = []
        if self.free_rank:
            parts.append("Z_p" if self.free_rank == 1 else f"Z_p^{self.free_rank}")
        if not self.torsion.is_trivial():
            parts.append(str(self.torsion))
        return " + ".join(parts) or "0"


@dataclass(frozen=True)
class ComplexCohomology:
    H0: CohomologyGroup
    H1: CohomologyGroup
    H2: CohomologyGroup
    reports: tuple[ElementaryDivisorReport, ElementaryDivisorReport] = field(repr=False)

    @property
    def certified(self) -> bool:
        return all(r.certified for r in self.reports)


def total_complex_cohomology(d0: PadicMatrix, d1: PadicMatrix) -> ComplexCohomology:
    """Cohomology of ``C0 --d0--> C1 --d1--> C2``.

    Divisors that vanish at precision N count as rank defects; the result
    is then flagged uncertified so that callers can escalate.
    """
    if d0.rows != d1.cols:
        raise ValueError(f"shapes do not compose: {d0.shape} then {d1.shape}")
    if not (d1 @ d0).is_zero():
        raise CompositionError("d1 . d0 is not zero at the working precision")
    c0, c1, c2 = d0.cols, d0.rows, d1.rows
    p = d0.p
    r0_rep = smith_normal_form(d0)[0] if d0.rows and d0.cols else None
    r1_rep = smith_normal_form(d1)[0] if d1.rows and d1.cols else None
    empty = ElementaryDivisorReport((), True, d0.N)
    r0_rep = r0_rep or empty
    r1_rep = r1_rep or empty
    r0, r1 = r0_rep.rank, r1_rep.rank
    t0 = AbelianPGroup(p, tuple(v for v in r0_rep.finite() if v > 0))
    t1 = AbelianPGroup(p, tuple(v for v in r1_rep.finite() if v > 0))
    return ComplexCohomology(
        H0=CohomologyGroup(c0 - r0, AbelianPGroup(p)),
        H1=CohomologyGroup(c1 - r0 - r1, t0),
        H2=CohomologyGroup(c2 - r1, t1),
        reports=(r0_rep, r1_rep),
    )


# ---------------------------------------------------------------------------
# Rational matrices used while building lattices


class ScaledMatrix:
    """Matrix over Q_p stored as ``ints / p**shift``, known mod ``p**N``.

    ``N`` is an absolute precision that every operation lowers by its
    worst-case loss (products by the other factor's denominator, inverses
    by twice the inverse's denominator).  Numerators are reduced mod
    ``p**(N + shift)``.
    """

    __slots__ = ("ints", "shift", "p", "N")

    def __init__(self, ints: np.ndarray, shift: int, p: int, N: int, normalize=True):
        if ints.ndim != 2:
            raise ValueError("expected a 2-D array")
        self.ints = ints % p ** max(N + shift, 0)
        self.shift = shift
        self.p = p
        self.N = N
        if normalize:
            self._normalize()

    def _normalize(self):
        if self.shift <= 0 or not self.ints.size:
            return
        k = common_valuation(self.ints, self.p, self.shift)
        if k:
            self.ints = self.ints // self.p**k
            self.shift -= k

    @classmethod
    def integral(cls, ints, p: int, N: int) -> "ScaledMatrix":
        return cls(object_array(ints), 0, p, N)

    @property
    def shape(self):
        return self.ints.shape

    def with_shift(self, s: int) -> np.ndarray:
        """Numerators relative to ``p**s`` (requires ``s >= shift``)."""
        if s < self.shift:
            raise ValueError("cannot lower the shift")
        return self.ints * self.p ** (s - self.shift)

    def __matmul__(self, other: "ScaledMatrix") -> "ScaledMatrix":
        N = min(self.N - other.shift, other.N - self.shift)
        return ScaledMatrix(self.ints.dot(other.ints), self.shift + other.shift, self.p, N)

    def __sub__(self, other: "ScaledMatrix") -> "ScaledMatrix":
        s = max(self.shift, other.shift)
        N = min(self.N, other.N)
        return ScaledMatrix(self.with_shift(s) - other.with_shift(s), s, self.p, N)

    def __add__(self, other: "ScaledMatrix") -> "ScaledMatrix":
        s = max(self.shift, other.shift)
        N = min(self.N, other.N)
        return ScaledMatrix(self.with_shift(s) + other.with_shift(s), s, self.p, N)

    def with_precision(self, N: int) -> "ScaledMatrix":
        return ScaledMatrix(self.ints, self.shift, self.p, min(N, self.N))

    def __neg__(self) -> "ScaledMatrix":
        return ScaledMatrix(-self.ints, self.shift, self.p, self.N)

    def __getitem__(self, key) -> "ScaledMatrix":
        sub = self.ints[key]
        if sub.ndim == 1:
            sub = sub.reshape(1, -1) if isinstance(key, (int, np.integer)) or (
                isinstance(key, tuple) and isinstance(key[0], (int, np.integer))
            ) else sub.reshape(-1, 1)
        return ScaledMatrix(sub.copy(), self.shift, self.p, self.N)

    @property
    def T(self) -> "ScaledMatrix":
        return ScaledMatrix(self.ints.T.copy(), self.shift, self.p, self.N, normalize=False)

    @staticmethod
    def hstack(blocks: Sequence["ScaledMatrix"]) -> "ScaledMatrix":
        s = max(b.shift for b in blocks)
        N = min(b.N for b in blocks)
        return ScaledMatrix(np.hstack([b.with_shift(s) for b in blocks]), s, blocks[0].p, N)

    @staticmethod
    def vstack(blocks: Sequence["ScaledMatrix"]) -> "ScaledMatrix":
        s = max(b.shift for b in blocks)
        N = min(b.N for b in blocks)
        return ScaledMatrix(np.vstack([b.with_shift(s) for b in blocks]), s, blocks[0].p, N)

    def is_integral(self) -> bool:
        return self.shift == 0

    def is_zero(self) -> bool:
        return not np.any(self.ints)

    def min_valuation(self) -> float:
        """Least valuation of an entry (``inf`` for zero)."""
        best = INF
        for x in self.ints.flat:
            if x:
                best = min(best, valuation(x, self.p, best + self.shift))
        return best - self.shift if best != INF else INF

    def to_padic(self, N: int | None = None) -> PadicMatrix:
        if self.shift:
            raise PrecisionError("matrix has non-integral entries")
        return PadicMatrix(self.ints, self.p, N if N is not None else self.N)

    def fractions(self):
        from fractions import Fraction

        mod = self.p ** (self.N + self.shift)
        den = self.p**self.shift
        return [[Fraction(balanced(int(x), mod), den) for x in row] for row in self.ints]

    def inverse(self) -> "ScaledMatrix":
        """Inverse over Q_p, through the Smith form of the numerators."""
        m, n = self.shape
        if m != n:
            raise ValueError("inverse of a non-square matrix")
        p = self.p
        report, U, V = smith_normal_form(PadicMatrix(self.ints, p, self.N + self.shift))
        if not report.certified:
            raise PrecisionError("matrix is singular at the working precision")
        # ints = U^-1 D V^-1  =>  ints^-1 = V D^-1 U
        t = int(max(report.exponents))
        scale = np.array([p ** (t - int(v)) for v in report.exponents], dtype=object)
        out = (V.array() * scale[None, :]).dot(U.array())
        s = t - self.shift
        if s < 0:
            out = out * p ** (-s)
            s = 0
        return ScaledMatrix(out, s, p, self.N - 2 * s)

    def column_basis(self) -> list[int]:
        """Columns generating the Z_p-span of all columns.

        Full least-valuation pivoting; the chosen columns of the original
        matrix span the same Z_p-module as all of them.
        """
        p = self.p
        work_prec = self.N + self.shift
        mod = p**work_prec
        a = self.ints.copy()
        m, n = a.shape
        chosen: list[int] = []
        free_rows = np.arange(m)
        free_cols = np.arange(n)
        while len(free_rows) and len(free_cols):
            pos, v = _argmin_valuation(a[np.ix_(free_rows, free_cols)], p, work_prec)
            if pos is None:
                break
            r, c = int(free_rows[pos[0]]), int(free_cols[pos[1]])
            chosen.append(c)
            free_rows = free_rows[free_rows != r]
            free_cols = free_cols[free_cols != c]
            pv = p**v
            a[:, c] = (a[:, c] * pow(a[r, c] // pv, -1, mod)) % mod
            g = a[r, free_cols] // pv
            if np.any(g):
                a[:, free_cols] = (a[:, free_cols] - np.outer(a[:, c], g)) % mod
        return chosen

    def __repr__(self):
        return f"ScaledMatrix(shape={self.shape}, shift={self.shift}, p={self.p}, N={self.N})"
