"""Exact characteristic polynomials and multiplicity-aware root extraction.

Float eigensolvers lose half the machine digits at a defective eigenvalue
(a double root is only located to ~sqrt(eps)). The graph matrices here have
rational entries, so the characteristic polynomial is computed exactly over
``fractions.Fraction``, factored square-free (Yun's algorithm), and only the
resulting simple roots are located numerically. Multiplicities and zero roots
come out exact.
"""
from __future__ import annotations

from fractions import Fraction

import numpy as np

Poly = list[Fraction]  # coefficients, highest degree first, leading != 0


def charpoly(matrix: list[list[Fraction]]) -> Poly:
    """Coefficients of det(x*I - M) via the Faddeev-LeVerrier recursion."""
    n = len(matrix)
    coeffs: Poly = [Fraction(1)]
    work = [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    for k in range(1, n + 1):
        work = [
            [sum(matrix[i][t] * work[t][j] for t in range(n)) for j in range(n)]
            for i in range(n)
        ]
        ck = -sum(work[i][i] for i in range(n)) / k
        coeffs.append(ck)
        for i in range(n):
            work[i][i] += ck
    return coeffs


def _normalize(p: Poly) -> Poly:
    i = 0
    while i < len(p) and p[i] == 0:
        i += 1
    p = p[i:]
    if not p:
        return []
    lead = p[0]
    return [c / lead for c in p]


def _derivative(p: Poly) -> Poly:
    deg = len(p) - 1
    return [p[i] * (deg - i) for i in range(deg)]


def _divmod(a: Poly, b: Poly) -> tuple[Poly, Poly]:
    q: Poly = []
    r = list(a)
    while len(r) >= len(b) and r:
        f = r[0] / b[0]
        q.append(f)
        for i in range(1, len(b)):
            r[i] -= f * b[i]
        r = r[1:]
    return q, _normalize(r)


def _gcd(a: Poly, b: Poly) -> Poly:
    a, b = _normalize(a), _normalize(b)
    while b:
        _, rem = _divmod(a, b)
        a, b = b, rem
    return a


def _square_free_factors(p: Poly) -> list[tuple[Poly, int]]:
    """Yun's decomposition: p = prod f_i^i with each f_i square-free."""
    p = _normalize(p)
    if len(p) <= 1:
        return []
    dp = _derivative(p)
    g = _gcd(p, dp)
    if len(g) == 1:
        return [(p, 1)]
    w, _ = _divmod(p, g)
    y, _ = _divmod(dp, g)
    z = [yc - wc for yc, wc in _pad(y, _derivative(w))]
    z = _normalize(z)
    factors = []
    i = 1
    while len(w) > 1:
        h = _gcd(w, z) if z else list(w)
        if len(h) > 1:
            factors.append((h, i))
        w, _ = _divmod(w, h)
        y, _ = _divmod(z, h) if z else ([], [])
        z = _normalize([yc - wc for yc, wc in _pad(y, _derivative(w))])
        i += 1
    return factors


def _pad(a: Poly, b: Poly) -> list[tuple[Fraction, Fraction]]:
    n = max(len(a), len(b))
    a = [Fraction(0)] * (n - len(a)) + list(a)
    b = [Fraction(0)] * (n - len(b)) + list(b)
    return list(zip(a, b))


def _polish(root: complex, coeffs: np.ndarray, dcoeffs: np.ndarray) -> complex:
    # one or two Newton steps against the exact factor; roots are simple here
    for _ in range(2):
        dp = np.polyval(dcoeffs, root)
        if dp == 0:
            break
        root = root - np.polyval(coeffs, root) / dp
    return root


def roots_with_multiplicity(p: Poly) -> list[tuple[complex, int]]:
    """All roots of an exact polynomial with exact integer multiplicities.

    Zero roots are read off the exact trailing coefficients; the remaining
    square-free factors have simple roots, located by the companion-matrix
    solver and Newton-polished.
    """
    p = _normalize(p)
    out: list[tuple[complex, int]] = []
    zero_mult = 0
    while p and p[-1] == 0:
        p = p[:-1]
        zero_mult += 1
    if zero_mult:
        out.append((0j, zero_mult))
    for factor, mult in _square_free_factors(p):
        fc = np.array([float(c) for c in factor])
        dfc = np.array([float(c) for c in _derivative(factor)]) if len(factor) > 2 else None
        for r in np.roots(fc):
            root = complex(r)
            if dfc is not None:
                root = _polish(root, fc, dfc)
            elif len(factor) == 2:
                root = complex(-float(factor[1]))  # monic linear factor, exact
            if abs(root.imag) < 1e-14 * (1.0 + abs(root.real)):
                root = complex(root.real, 0.0)
            out.append((root, mult))
    return out


def zero_root_multiplicity(p: Poly) -> int:
    """Exact multiplicity of the zero root."""
    p = _normalize(p)
    mult = 0
    while p and p[-1] == 0:
        p = p[:-1]
        mult += 1
    return mult
