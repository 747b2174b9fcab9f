"""Certified eigen-structure of C and joint-spectral-radius bounds.

Eigenvalues are isolated as complex balls: nonrigorous floating hints
(numpy) are refined by complex Newton iteration and then certified by a
Krawczyk test against the exact rational characteristic polynomial, factor
by squarefree factor.  Algebraic multiplicities come from the exact
squarefree decomposition, largest-Jordan-block sizes from the exact minimal
polynomial (equivalently, from rank stabilization of (C - lambda I)^k,
which is also available exactly for rational eigenvalues).

The joint-spectral-radius side enumerates products of the digit matrices in
the maximum absolute row-sum norm; norms are exact rationals, so the
finiteness property can be certified by exact comparisons whenever the
witness product has a rational dominant eigenvalue.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from gmpy2 import mpfr, mpq

from . import exact
from .ball import _DOWN, _UP, CBall, Context, RBall
from .exact import (
    charpoly,
    mat,
    mat_mul,
    mat_scale,
    mat_sub,
    identity,
    minimal_polynomial,
    poly_deriv,
    poly_eval,
    poly_gcd,
    rank,
    rational_roots,
    row_sum_norm,
    squarefree_decomposition,
)
from .linrep import LinRep


class SpectralError(ArithmeticError):
    pass


class ClusterUnresolved(SpectralError):
    """Two roots could not be separated at the working precision."""


class RankAmbiguous(SpectralError):
    """A Jordan-block size could not be certified at the working precision."""


class GapUnresolvable(SpectralError):
    """An eigenvalue modulus lies strictly between rho_lower and R."""


@dataclass
class EigenDatum:
    lam: CBall
    alg_mult: int
    jordan_m: int
    is_unit_distance_certified: bool
    is_real: bool
    real_value: mpq | None = None  # set when the eigenvalue is exactly rational
    factor: tuple = ()  # squarefree charpoly factor this root annihilates

    def abs_ball(self, ctx: Context) -> RBall:
        if self.is_real:
            r = self.lam.re
            return r.neg() if r.mid < 0 else RBall(r.mid, r.rad)
        lo, hi = self.lam.abs_lower(), self.lam.abs_upper()
        return RBall.from_endpoints(lo, hi, ctx)

    def log_q(self, q: int, ctx: Context) -> CBall:
        """log_q(lambda) with the principal branch; negative reals get arg = pi."""
        logq = RBall.exact(q).log(ctx)
        if self.is_real:
            r = self.lam.re
            if r.lower() > 0:
                return CBall(r.log(ctx).div(logq, ctx))
            if r.upper() < 0:
                return CBall(r.neg().log(ctx).div(logq, ctx),
                             ctx.pi().div(logq, ctx))
            raise SpectralError("cannot take log of an eigenvalue ball containing 0")
        return self.lam.log(ctx).mul_real(logq.recip(ctx), ctx)


# ---------------------------------------------------------------------------
# Certified polynomial roots (Krawczyk operator on the exact factors)
# ---------------------------------------------------------------------------


def _poly_eval_ball(p, x: CBall, ctx: Context) -> CBall:
    acc = CBall.zero()
    for c in reversed(p):
        acc = acc.mul(x, ctx).add(CBall.from_mpq(c, 0, ctx), ctx)
    return acc


def _mpc_newton(p, dp, z, ctx_prec: int, iters: int):
    """Nonrigorous complex Newton refinement at mpfr precision (hint polishing)."""
    import gmpy2

    c = gmpy2.context(precision=ctx_prec, allow_complex=True)
    z = gmpy2.mpc(z, precision=ctx_prec)
    pf = [c.div(gmpy2.mpc(mpfr(x.numerator, ctx_prec)),
                gmpy2.mpc(mpfr(x.denominator, ctx_prec))) for x in p]
    dpf = [c.div(gmpy2.mpc(mpfr(x.numerator, ctx_prec)),
                 gmpy2.mpc(mpfr(x.denominator, ctx_prec))) for x in dp]

    def ev(cs, w):
        acc = gmpy2.mpc(0)
        for coeff in reversed(cs):
            acc = c.add(c.mul(acc, w), coeff)
        return acc

    for _ in range(iters):
        d = ev(dpf, z)
        if d == 0:
            break
        z = c.sub(z, c.div(ev(pf, z), d))
    return z


def _krawczyk_once(p, dp, x_ball: CBall, ctx: Context) -> CBall | None:
    """One Krawczyk step; returns the contraction if it certifies, else None.

    K(X) = x - c^{-1} g(x) + (1 - c^{-1} g'(X)) (X - x) with x the midpoint
    and c the midpoint evaluation of g'; K(X) strictly inside X certifies
    existence and uniqueness of a root in X.
    """
    x_mid = CBall(RBall(x_ball.re.mid), RBall(x_ball.im.mid))
    gx = _poly_eval_ball(p, x_mid, ctx)
    dgx = _poly_eval_ball(dp, x_mid, ctx)
    if dgx.contains_zero():
        return None
    c_mid = CBall(RBall(dgx.re.mid), RBall(dgx.im.mid))
    if c_mid.contains_zero():
        return None
    c_inv = c_mid.recip(ctx)
    dg_all = _poly_eval_ball(dp, x_ball, ctx)
    one = CBall.one()
    slope = one.sub(c_inv.mul(dg_all, ctx), ctx)
    delta = CBall(RBall(mpfr(0), x_ball.re.rad), RBall(mpfr(0), x_ball.im.rad))
    k = x_mid.sub(c_inv.mul(gx, ctx), ctx).add(slope.mul(delta, ctx), ctx)
    if _strictly_inside(k, x_ball):
        return k
    return None


def _strictly_inside(a: CBall, b: CBall) -> bool:
    dre = abs(mpq(a.re.mid) - mpq(b.re.mid)) + mpq(a.re.rad)
    dim = abs(mpq(a.im.mid) - mpq(b.im.mid)) + mpq(a.im.rad)
    return dre < mpq(b.re.rad) and dim < mpq(b.im.rad)


def certify_root(p, hint, ctx: Context, max_tries: int = 40) -> CBall:
    """Certify a unique root of the squarefree polynomial p near the hint."""
    dp = poly_deriv(p)
    z = _mpc_newton(p, dp, hint, ctx.prec + 32, max(12, ctx.prec // 8))
    mid = CBall(RBall(mpfr(z.real, ctx.prec)), RBall(mpfr(z.imag, ctx.prec)))
    r = mpfr(2) ** (-(ctx.prec - 8))
    scale = max(abs(mid.re.mid), abs(mid.im.mid), mpfr(1))
    r = _UP.mul(r, scale)
    for _ in range(max_tries):
        x = CBall(RBall(mid.re.mid, r), RBall(mid.im.mid, r))
        k = _krawczyk_once(p, dp, x, ctx)
        if k is not None:
            for _ in range(3):  # polish the enclosure
                k2 = _krawczyk_once(p, dp, k, ctx)
                if k2 is None:
                    break
                k = k2
            return k
        r = _UP.mul(r, mpfr(32))
    raise ClusterUnresolved(
        f"could not certify a root of degree-{len(p)-1} factor near {hint}")


def _float_roots(p) -> list[complex]:
    coeffs = [float(c) for c in reversed(p)]
    return list(np.roots(coeffs)) if len(coeffs) > 1 else []


# ---------------------------------------------------------------------------
# Eigen certification
# ---------------------------------------------------------------------------


def eigen_certify(c_matrix, precision: int = 128) -> list[EigenDatum]:
    """Certified eigenvalues of an exact rational matrix with multiplicities.

    Raises ClusterUnresolved when two roots cannot be separated at the
    working precision.
    """
    ctx = Context.get(precision)
    c_matrix = mat(c_matrix)
    p = charpoly(c_matrix)
    mp = minimal_polynomial(c_matrix)
    mp_sf = squarefree_decomposition(mp)
    data: list[EigenDatum] = []
    for g, mult in squarefree_decomposition(p):
        balls = []
        g_rem = g
        for root, _one in rational_roots(g):
            balls.append((CBall(RBall.from_mpq(root, ctx), RBall.zero()), root))
            g_rem = exact.poly_divmod(g_rem, [-root, mpq(1)])[0]
        for hint in _float_roots(g_rem):
            ball = certify_root(g_rem, hint, ctx)
            balls.append((ball, None))
        if len(balls) != len(g) - 1:
            raise ClusterUnresolved(
                f"found {len(balls)} certified roots for a degree-{len(g)-1} factor")
        for ball, ratval in balls:
            data.append(EigenDatum(
                lam=ball, alg_mult=mult, jordan_m=0,
                is_unit_distance_certified=False, is_real=ratval is not None,
                real_value=ratval, factor=tuple(g)))
    _certify_separation(data)
    _certify_real(data)
    for datum in data:
        datum.jordan_m = _jordan_size(c_matrix, datum, mp_sf, ctx)
    data.sort(key=lambda e: (-float(e.abs_ball(ctx).mid), float(e.lam.im.mid)))
    return data


def _certify_separation(data: list[EigenDatum]):
    for i, a in enumerate(data):
        ok = True
        for j, b in enumerate(data):
            if i != j and a.lam.intersects(b.lam):
                ok = False
        a.is_unit_distance_certified = ok
    if not all(d.is_unit_distance_certified for d in data):
        raise ClusterUnresolved("certified eigenvalue balls overlap; raise the precision")


def _certify_real(data: list[EigenDatum]):
    """An isolated root with 0 in its imaginary ball is real when its
    conjugate rectangle meets no other root ball (the conjugate root must
    then be the root itself)."""
    for i, d in enumerate(data):
        if d.is_real:
            continue
        if not d.lam.im.contains_zero():
            continue
        conj = d.lam.conj()
        if any(j != i and conj.intersects(e.lam) for j, e in enumerate(data)):
            continue
        d.is_real = True
        d.lam = CBall(d.lam.re, RBall.zero())


def _jordan_size(c_matrix, datum: EigenDatum, mp_sf, ctx: Context) -> int:
    if datum.alg_mult == 1:
        return 1
    if datum.real_value is not None:
        return _jordan_exact_rank(c_matrix, datum.real_value, datum.alg_mult)
    return _jordan_window(datum, mp_sf, ctx)


def _jordan_exact_rank(c_matrix, lam: mpq, alg_mult: int) -> int:
    d = len(c_matrix)
    b = mat_sub(c_matrix, mat_scale(identity(d), lam))
    power = b
    prev = rank(power)
    for k in range(1, alg_mult + 1):
        nxt_m = mat_mul(power, b)
        nxt = rank(nxt_m)
        if nxt == prev:
            return k
        power, prev = nxt_m, nxt
    return alg_mult


def _jordan_window(datum: EigenDatum, mp_sf, ctx: Context) -> int:
    """Multiplicity of the root in the minimal polynomial, located by
    evaluating the gcds of its charpoly factor with the squarefree parts of
    the minimal polynomial on the certified ball."""
    g = list(datum.factor)
    candidates = []
    for h, j in mp_sf:
        gc = poly_gcd(g, h)
        if len(gc) > 1:
            candidates.append((j, gc))
    ball = datum.lam
    for attempt in range(6):
        alive = [j for j, gc in candidates
                 if _poly_eval_ball(gc, ball, ctx).contains_zero()]
        if len(alive) == 1:
            return alive[0]
        # shrink the enclosure and retry
        hi_ctx = Context.get(ctx.prec * 2 ** (attempt + 1))
        hint = complex(float(ball.re.mid), float(ball.im.mid))
        ball = certify_root(g, hint, hi_ctx)
    raise RankAmbiguous(
        "could not attribute the eigenvalue to a unique minimal-polynomial factor")


def jordan_block_size(c_matrix, lam, alg_mult: int, precision: int = 128) -> int:
    """Size of the largest Jordan block for the eigenvalue lam of C.

    ``lam`` may be an exact rational or a CBall enclosing one root of the
    characteristic polynomial.  Exact rank stabilization is used for
    rational eigenvalues; otherwise the minimal-polynomial multiplicity is
    determined on the certified enclosure.
    """
    c_matrix = mat(c_matrix)
    if alg_mult == 1:
        return 1
    if isinstance(lam, (int, mpq)) or getattr(lam, "denominator", None) is not None:
        return _jordan_exact_rank(c_matrix, mpq(lam), alg_mult)
    ctx = Context.get(precision)
    p = charpoly(c_matrix)
    for root, m in rational_roots(p):
        if lam.contains_exact(root, 0):
            return _jordan_exact_rank(c_matrix, root, alg_mult)
    mp_sf = squarefree_decomposition(minimal_polynomial(c_matrix))
    for g, mult in squarefree_decomposition(p):
        if _poly_eval_ball(g, lam, ctx).contains_zero():
            datum = EigenDatum(lam=lam, alg_mult=mult, jordan_m=0,
                               is_unit_distance_certified=True, is_real=False,
                               factor=tuple(g))
            return _jordan_window(datum, mp_sf, ctx)
    raise RankAmbiguous("ball does not enclose a certified eigenvalue")


# ---------------------------------------------------------------------------
# Joint spectral radius
# ---------------------------------------------------------------------------


@dataclass
class JsrBounds:
    rho_ell: list  # [(l, RBall upper value rho_l)]
    rho_ell_pow: list  # [(l, exact mpq nu_l = rho_l^l)] for exact comparisons
    rho_lower: RBall
    rho_lower_exact: tuple | None  # (word, mpq |eig|^p, p) certificate when rational
    r_value: RBall
    finiteness_witness: tuple | None  # product word attaining rho
    note: str = ""

    def min_rho_ell(self) -> RBall:
        return min(self.rho_ell, key=lambda t: float(t[1].upper()))[1]


def _enumerate_norms(rep: LinRep, ell_max: int, budget: int):
    """Exact rho_l^l values and the per-level best spectral-radius candidates.

    Returns (levels, candidates): levels as [(l, nu_l exact)], candidates as
    [(l, word, matrix)] with the largest floating spectral radius per level.
    """
    d = rep.d
    integral = all(x.denominator == 1 for a in rep.matrices for row in a for x in row)
    m_norm = max(row_sum_norm(a) for a in rep.matrices)
    use_int64 = integral and (m_norm ** ell_max) < 2**60
    if use_int64:
        base = [np.array([[int(x) for x in row] for row in a], dtype=np.int64)
                for a in rep.matrices]
    else:
        base = [np.array([[mpq(x) for x in row] for row in a], dtype=object)
                for a in rep.matrices]
    levels = []
    candidates = []
    prods = np.stack(base)
    words = [(r,) for r in range(rep.q)]
    used = rep.q
    ell = 1
    while True:
        norms = [max(sum(abs(x) for x in row) for row in p) for p in prods]
        nu = max(x if isinstance(x, mpq) else mpq(int(x)) for x in norms)
        levels.append((ell, nu))
        flo = prods.astype(np.float64) if use_int64 else np.array(
            [[[float(x) for x in row] for row in p] for p in prods])
        try:
            eigs = np.linalg.eigvals(flo)
            radii = np.abs(eigs).max(axis=1)
            best = int(np.argmax(radii))
            candidates.append((ell, words[best],
                               tuple(tuple(mpq(int(x)) if use_int64 else x
                                           for x in row) for row in prods[best])))
        except np.linalg.LinAlgError:
            pass
        if ell >= ell_max or used + len(words) * rep.q > budget:
            break
        prods = np.concatenate([prods @ b for b in base])
        words = [w + (r,) for r in range(rep.q) for w in words]
        used += len(words)
        ell += 1
    return levels, candidates


def _block_triangular_norm_bound(rep: LinRep) -> mpq | None:
    """Upper bound for rho from the common block-triangular structure.

    Edges i -> j where some A_r has a nonzero (i, j) entry; the strongly
    connected components give a simultaneous block triangularization, and
    the joint spectral radius is the maximum of the diagonal blocks'.  Each
    block's is bounded by the largest row-sum norm of the restricted
    matrices, so the maximum of those norms bounds rho.
    """
    from .models import _strongly_connected_components

    d = rep.d
    succ = {i: sorted({j for a in rep.matrices for j in range(d) if a[i][j]})
            for i in range(d)}
    comps = _strongly_connected_components(succ)
    bound = mpq(0)
    for comp in comps:
        for a in rep.matrices:
            s = max(sum(abs(a[i][j]) for j in comp) for i in comp)
            bound = max(bound, s)
    return bound


def jsr_bounds(rep: LinRep, ell_max: int = 8, *, budget: int = 10**6,
               override_r=None, precision: int = 128,
               eigen_data: list[EigenDatum] | None = None) -> JsrBounds:
    """Upper bounds rho_l, the best certified lower bound, and the working R.

    R = rho_lower when a finiteness witness certifies rho_l = rho_lower
    exactly; otherwise the smallest structural upper bound, with the gap
    condition against the certified eigenvalues of C enforced (or an
    explicit override honored).
    """
    ctx = Context.get(precision)
    levels, candidates = _enumerate_norms(rep, ell_max, budget)
    rho_ell = [(ell, _root_ball(nu, ell, ctx)) for ell, nu in levels]

    rho_lower = RBall.zero()
    rho_lower_exact = None
    for ell, word, prod in candidates:
        cb = _certified_dominant_modulus(prod, ctx)
        if cb is None:
            continue
        val, exact_val = cb
        est = _root_ball_from_rball(val, ell, ctx)
        if est.lower() > rho_lower.lower():
            rho_lower = est
            rho_lower_exact = (word, exact_val, ell) if exact_val is not None else None

    finiteness = None
    if rho_lower_exact is not None:
        word, wpow, wl = rho_lower_exact  # |eig|^wl == wpow exactly
        for ell, nu in levels:
            # rho_l == rho_lower  <=>  nu^wl == wpow^ell
            if nu ** wl == wpow ** ell:
                finiteness = word
                break

    note = ""
    if finiteness is not None:
        r_value = rho_lower
    else:
        min_ell = min(rho_ell, key=lambda t: float(t[1].upper()))[1]
        block_bound = _block_triangular_norm_bound(rep)
        if (block_bound is not None and rho_lower_exact is not None
                and rho_lower_exact[1] == block_bound ** rho_lower_exact[2]):
            # structural upper bound meets the certified lower bound: rho is
            # known exactly, but no finite product attains it
            r_value = RBall.from_mpq(block_bound, ctx)
            note = ("rho certified by block-triangular norm bound; finiteness "
                    "not established, so norm products may exceed R^l by "
                    "polynomial factors")
        elif block_bound is not None and float(block_bound) < float(min_ell.upper()):
            r_value = RBall.from_mpq(block_bound, ctx)
            note = "R from block-triangular norm bound (upper bound only)"
        else:
            r_value = min_ell
            note = "R is an upper bound for rho (no finiteness witness)"

    if override_r is not None:
        r_value = RBall.from_mpq(mpq(override_r), ctx)
        note = "R overridden by caller"

    if eigen_data is None:
        from .linrep import DerivedMatrices

        eigen_data = eigen_certify(DerivedMatrices.of(rep).c, precision)
    if override_r is None:
        for datum in eigen_data:
            ab = datum.abs_ball(ctx)
            if ab.lower() > rho_lower.upper() and ab.upper() < r_value.lower():
                raise GapUnresolvable(
                    f"eigenvalue modulus {float(ab.mid):.6g} lies strictly between "
                    f"rho_lower and R; pass an explicit R override")

    return JsrBounds(rho_ell=rho_ell, rho_ell_pow=levels, rho_lower=rho_lower,
                     rho_lower_exact=rho_lower_exact, r_value=r_value,
                     finiteness_witness=finiteness, note=note)


def _root_ball(nu: mpq, ell: int, ctx: Context) -> RBall:
    """nu^(1/ell) as a ball."""
    if nu == 0:
        return RBall.zero()
    b = RBall.from_mpq(nu, ctx)
    if ell == 1:
        return b
    return b.log(ctx).scale_mpq(mpq(1, ell), ctx).exp(ctx)


def _root_ball_from_rball(v: RBall, ell: int, ctx: Context) -> RBall:
    if ell == 1 or v.mig() == 0:
        return v if ell == 1 else RBall.zero()
    return v.log(ctx).scale_mpq(mpq(1, ell), ctx).exp(ctx)


def _certified_dominant_modulus(prod, ctx: Context):
    """Certified |dominant eigenvalue| of an exact product matrix.

    Returns (RBall, exact mpq modulus or None), or None if certification
    fails; failures only weaken the lower bound.
    """
    p = charpoly(mat(prod))
    best_ball = None
    best_exact = None
    try:
        sf = squarefree_decomposition(p)
    except ZeroDivisionError:
        return None
    for g, _ in sf:
        rats = rational_roots(g)
        g_rem = g
        for root, _m in rats:
            if best_ball is None or abs(root) > mpq(best_ball.mid):
                best_ball = RBall.from_mpq(abs(root), ctx)
                best_exact = abs(root)
            g_rem = exact.poly_divmod(g_rem, [-root, mpq(1)])[0]
        for hint in _float_roots(g_rem):
            try:
                ball = certify_root(g_rem, hint, ctx)
            except ClusterUnresolved:
                return None
            ab = RBall.from_endpoints(ball.abs_lower(), ball.abs_upper(), ctx)
            if best_ball is None or ab.lower() > best_ball.upper():
                best_ball = ab
                best_exact = None
    if best_ball is None:
        return None
    return best_ball, best_exact


def sanity_eigen_vs_jsr(eigen_data: list[EigenDatum], bounds: JsrBounds,
                        q: int, precision: int = 64) -> dict:
    """Check |lambda| <= q * min rho_l (with radius slack) for every
    certified eigenvalue; a failure indicates a bug, not bad input."""
    ctx = Context.get(precision)
    limit = bounds.min_rho_ell().scale_int(q, ctx)
    checks = []
    for datum in eigen_data:
        ab = datum.abs_ball(ctx)
        checks.append({
            "eigenvalue_abs": float(ab.mid),
            "bound": float(limit.upper()),
            "ok": ab.lower() <= limit.upper(),
        })
    return {"ok": all(c["ok"] for c in checks), "checks": checks}
