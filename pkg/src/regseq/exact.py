"""Exact rational linear algebra and polynomial utilities (gmpy2 mpq).

Matrices are tuples of tuples of mpq, polynomials are lists of mpq
coefficients in increasing degree order.  Everything here is exact; these
routines back the sequence-level oracles and the certified spectral data.
"""

from __future__ import annotations

from gmpy2 import mpq

Matrix = tuple  # tuple of tuples of mpq
Poly = list  # list of mpq, c[0] + c[1] x + ...


# -- matrices ----------------------------------------------------------------


def mat(rows) -> Matrix:
    return tuple(tuple(mpq(x) for x in row) for row in rows)


def identity(d: int) -> Matrix:
    return tuple(tuple(mpq(1 if i == j else 0) for j in range(d)) for i in range(d))


def zeros(d: int, m: int | None = None) -> Matrix:
    m = d if m is None else m
    return tuple(tuple(mpq(0) for _ in range(m)) for _ in range(d))


def mat_add(a: Matrix, b: Matrix) -> Matrix:
    return tuple(tuple(x + y for x, y in zip(ra, rb)) for ra, rb in zip(a, b))


def mat_sub(a: Matrix, b: Matrix) -> Matrix:
    return tuple(tuple(x - y for x, y in zip(ra, rb)) for ra, rb in zip(a, b))


def mat_mul(a: Matrix, b: Matrix) -> Matrix:
    bt = tuple(zip(*b))
    return tuple(
        tuple(sum(x * y for x, y in zip(row, col)) for col in bt) for row in a
    )


def mat_vec(a: Matrix, v) -> tuple:
    return tuple(sum(x * y for x, y in zip(row, v)) for row in a)


def vec_mat(v, a: Matrix) -> tuple:
    return tuple(sum(v[i] * a[i][j] for i in range(len(v))) for j in range(len(a[0])))


def mat_scale(a: Matrix, c) -> Matrix:
    c = mpq(c)
    return tuple(tuple(c * x for x in row) for row in a)


def trace(a: Matrix):
    return sum(a[i][i] for i in range(len(a)))


def row_sum_norm(a: Matrix):
    """Maximum absolute row sum, the matrix norm used throughout."""
    return max(sum(abs(x) for x in row) for row in a)


def rank(a: Matrix) -> int:
    """Rank by exact Gaussian elimination."""
    rows = [list(row) for row in a]
    n = len(rows)
    m = len(rows[0]) if n else 0
    r = 0
    col = 0
    while r < n and col < m:
        piv = next((i for i in range(r, n) if rows[i][col]), None)
        if piv is None:
            col += 1
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        inv = 1 / rows[r][col]
        for i in range(r + 1, n):
            f = rows[i][col] * inv
            if f:
                rows[i] = [x - f * y for x, y in zip(rows[i], rows[r])]
        r += 1
        col += 1
    return r


def solve(a: Matrix, b) -> tuple:
    """Solve a x = b exactly; raises ZeroDivisionError if singular."""
    n = len(a)
    rows = [list(ra) + [mpq(x)] for ra, x in zip(a, b)]
    for c in range(n):
        piv = next((i for i in range(c, n) if rows[i][c]), None)
        if piv is None:
            raise ZeroDivisionError("singular matrix")
        rows[c], rows[piv] = rows[piv], rows[c]
        inv = 1 / rows[c][c]
        rows[c] = [x * inv for x in rows[c]]
        for i in range(n):
            if i != c and rows[i][c]:
                f = rows[i][c]
                rows[i] = [x - f * y for x, y in zip(rows[i], rows[c])]
    return tuple(rows[i][n] for i in range(n))


def inverse(a: Matrix) -> Matrix:
    n = len(a)
    cols = [solve(a, tuple(mpq(1 if i == j else 0) for i in range(n))) for j in range(n)]
    return tuple(tuple(cols[j][i] for j in range(n)) for i in range(n))


# -- polynomials ---------------------------------------------------------------


def poly_trim(p: Poly) -> Poly:
    while len(p) > 1 and p[-1] == 0:
        p = p[:-1]
    return p


def poly_add(p: Poly, q: Poly) -> Poly:
    n = max(len(p), len(q))
    return poly_trim([
        (p[i] if i < len(p) else mpq(0)) + (q[i] if i < len(q) else mpq(0))
        for i in range(n)
    ])


def poly_mul(p: Poly, q: Poly) -> Poly:
    out = [mpq(0)] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        if a:
            for j, b in enumerate(q):
                out[i + j] += a * b
    return poly_trim(out)


def poly_divmod(p: Poly, q: Poly) -> tuple[Poly, Poly]:
    q = poly_trim(q)
    if q == [mpq(0)]:
        raise ZeroDivisionError("polynomial division by zero")
    rem = list(p)
    quot = [mpq(0)] * max(len(p) - len(q) + 1, 1)
    inv = 1 / q[-1]
    for i in range(len(p) - len(q), -1, -1):
        c = rem[i + len(q) - 1] * inv
        quot[i] = c
        if c:
            for j, b in enumerate(q):
                rem[i + j] -= c * b
    return poly_trim(quot), poly_trim(rem)


def poly_monic(p: Poly) -> Poly:
    p = poly_trim(p)
    lc = p[-1]
    return [c / lc for c in p] if lc != 1 else p


def poly_gcd(p: Poly, q: Poly) -> Poly:
    p, q = poly_trim(p), poly_trim(q)
    while q != [mpq(0)]:
        p, q = q, poly_divmod(p, q)[1]
    return poly_monic(p) if p != [mpq(0)] else p


def poly_deriv(p: Poly) -> Poly:
    if len(p) == 1:
        return [mpq(0)]
    return [mpq(i) * p[i] for i in range(1, len(p))]


def poly_eval(p: Poly, x):
    acc = mpq(0)
    for c in reversed(p):
        acc = acc * mpq(x) + c
    return acc


def squarefree_decomposition(p: Poly) -> list[tuple[Poly, int]]:
    """Yun's algorithm: p = prod f_i^i with pairwise coprime squarefree f_i.

    Returns the list of (f_i, i) with deg f_i >= 1.
    """
    p = poly_monic(p)
    dp = poly_deriv(p)
    a = poly_gcd(p, dp)
    b = poly_divmod(p, a)[0]
    c = poly_divmod(dp, a)[0]
    d = poly_add(c, [-x for x in poly_deriv(b)])
    out = []
    i = 1
    while poly_trim(b) != [mpq(1)]:
        f = poly_gcd(b, d)
        if len(f) > 1:
            out.append((f, i))
        b2 = poly_divmod(b, f)[0]
        c2 = poly_divmod(d, f)[0]
        d = poly_add(c2, [-x for x in poly_deriv(b2)])
        b = b2
        i += 1
    return out


def charpoly_and_adjugate(c: Matrix) -> tuple[Poly, list[Matrix]]:
    """Faddeev-LeVerrier: char poly of C and the adjugate of (xI - C).

    Returns (p, [M_0, ..., M_{d-1}]) with p monic of degree d (increasing
    order) and adj(xI - C) = sum_k M_k x^{d-1-k}.
    """
    d = len(c)
    coeffs_desc = [mpq(1)]  # x^d coefficient
    m = identity(d)
    mats = [m]
    for k in range(1, d + 1):
        cm = mat_mul(c, m)
        ck = -trace(cm) / k
        coeffs_desc.append(ck)
        m = mat_add(cm, mat_scale(identity(d), ck))
        if k < d:
            mats.append(m)
    return list(reversed(coeffs_desc)), mats


def charpoly(c: Matrix) -> Poly:
    return charpoly_and_adjugate(c)[0]


def minimal_polynomial(c: Matrix) -> Poly:
    """Exact minimal polynomial: charpoly / gcd of the adjugate entries."""
    p, mats = charpoly_and_adjugate(c)
    d = len(c)
    g = [mpq(0)]
    for i in range(d):
        for j in range(d):
            entry = [mats[d - 1 - k][i][j] for k in range(d)]  # increasing degree
            entry = poly_trim(entry)
            if entry != [mpq(0)]:
                g = poly_gcd(g, entry) if g != [mpq(0)] else poly_monic(entry)
            if g == [mpq(1)]:
                return poly_monic(p)
    q, r = poly_divmod(p, g)
    assert poly_trim(r) == [mpq(0)], "adjugate gcd must divide the charpoly"
    return poly_monic(q)


def rational_roots(p: Poly) -> list[tuple]:
    """All rational roots with multiplicities, by exact candidate testing.

    Works on the primitive integer form; divisor enumeration is capped so
    that huge coefficients simply yield no candidates (callers fall back to
    certified-ball roots).
    """
    p = poly_trim(p)
    den = 1
    for c in p:
        den = den * c.denominator // _gcd(den, c.denominator)
    ip = [int(c * den) for c in p]
    while ip and ip[0] == 0:
        ip = ip[1:]  # factor out x; root 0 handled below
    roots = []
    zero_mult = _root_multiplicity(p, mpq(0))
    if zero_mult:
        roots.append((mpq(0), zero_mult))
    if not ip:
        return roots
    a0, ad = abs(ip[0]), abs(ip[-1])
    num_div = _divisors_capped(a0)
    den_div = _divisors_capped(ad)
    if num_div is None or den_div is None:
        return roots
    seen = set()
    for nu in num_div:
        for de in den_div:
            for cand in (mpq(nu, de), mpq(-nu, de)):
                if cand in seen:
                    continue
                seen.add(cand)
                if poly_eval(p, cand) == 0:
                    roots.append((cand, _root_multiplicity(p, cand)))
    return roots


def _root_multiplicity(p: Poly, x) -> int:
    m = 0
    while poly_eval(p, x) == 0 and len(p) > 1:
        p = poly_divmod(p, [-mpq(x), mpq(1)])[0]
        m += 1
    return m


def _gcd(a: int, b: int) -> int:
    while b:
        a, b = b, a % b
    return a


def _divisors_capped(n: int, cap: int = 10**6, max_count: int = 4096):
    if n == 0:
        return [1]
    n = abs(n)
    out = []
    i = 1
    while i * i <= n:
        if len(out) > max_count or i > cap:
            return None
        if n % i == 0:
            out.append(i)
            if i != n // i:
                out.append(n // i)
        i += 1
    return sorted(out)
