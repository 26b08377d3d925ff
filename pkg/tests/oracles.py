"""Independent exact reference computations used by the tests."""

from __future__ import annotations

from fractions import Fraction

from sympy import Matrix, ZZ
from sympy.matrices.normalforms import invariant_factors, smith_normal_decomp


def padic_valuation(x: int, p: int) -> int:
    if x == 0:
        raise ValueError("valuation of 0")
    v = 0
    while x % p == 0:
        x //= p
        v += 1
    return v


def integer_elementary_exponents(rows: list[list[int]], p: int) -> tuple[float, ...]:
    """p-adic valuations of the integer invariant factors, inf for zeros."""
    M = Matrix(rows)
    facs = list(invariant_factors(M, domain=ZZ)) if M.rows and M.cols else []
    facs = [int(f) for f in facs]
    facs += [0] * (min(M.shape) - len(facs))
    vals = [float("inf") if f == 0 else padic_valuation(f, p) for f in facs]
    return tuple(sorted(vals))


def integer_saturation(rows: list[list[int]]) -> list[list[int]]:
    """Columns spanning (column span over Q) ∩ Z^m, via an integer Smith decomposition."""
    M = Matrix(rows)
    r = M.rank()
    if r == 0:
        return [[] for _ in range(M.rows)]
    _, U, _ = smith_normal_decomp(M, domain=ZZ)
    Uinv = U.inv()
    return [[int(Uinv[i, j]) for j in range(r)] for i in range(M.rows)]


def rational_rank(rows) -> int:
    return Matrix(rows).rank() if rows and rows[0] else 0


# polynomials as {exponent tuple: Fraction}, truncated at total degree b


def poly_mul(a: dict, b: dict, top: int) -> dict:
    out: dict = {}
    for ma, ca in a.items():
        for mb, cb in b.items():
            m = tuple(x + y for x, y in zip(ma, mb))
            if sum(m) <= top:
                out[m] = out.get(m, 0) + ca * cb
    return {m: c for m, c in out.items() if c}


def poly_pow(a: dict, k: int, top: int) -> dict:
    nv = len(next(iter(a))) if a else 1
    out = {(0,) * nv: Fraction(1)}
    for _ in range(k):
        out = poly_mul(out, a, top)
    return out


def poly_frobenius(a: dict, p: int, top: int) -> dict:
    out = {}
    for m, c in a.items():
        mm = tuple(p * x for x in m)
        if sum(mm) <= top:
            out[mm] = c
    return out


def poly_delta(a: dict, p: int, top: int) -> dict:
    """(a(z^p) - a^p) / p for integer-coefficient a."""
    fa = poly_frobenius(a, p, top)
    ap = poly_pow(a, p, top)
    keys = set(fa) | set(ap)
    out = {m: Fraction(fa.get(m, 0) - ap.get(m, 0), p) for m in keys}
    return {m: c for m, c in out.items() if c}
