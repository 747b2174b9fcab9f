"""Fourier coefficients of the periodic fluctuations as certified residues.

For an eigenvalue lambda of C with |lambda| > R and 0 <= k < m(lambda), the
coefficient with index l is the Laurent coefficient of Z^{-(k+1)} of
(x(0) + X(s))/s at s0 = log_q(lambda) + 2 l pi i / log q.  The scalar series
X(s) is expanded there through the functional equation: writing
M(Z) = I - q^{-s0-Z} C, Cramer's rule gives

    e . F_{n0}(s0+Z) . v0 = sum_i e_i det(M with column i -> G v0) / det M,

and det M vanishes to order exactly alg_mult(lambda) at Z = 0 (each
eigenvalue factor 1 - q^{-s} mu contributes a simple zero precisely when
q^{s0} = mu = lambda).  The quotient is formed by the exact-index Laurent
division, and a certified pole order <= m(lambda) is verified on the result.

Families of symmetrically arranged eigenvalues (vertices of a regular
p-gon) are regrouped into a single p-periodic fluctuation by interleaving
the residue grids of the rotated family members.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

from gmpy2 import mpfr, mpq

from .ball import (
    CBall,
    Context,
    Jet,
    LaurentSeries,
    RBall,
    ValuationNotCertified,
    laurent_div,
)
from .dirichlet import DirichletConfig, EvalSession
from .linrep import LinRep
from .spectral import EigenDatum


class FourierError(ArithmeticError):
    pass


class PoleOrderExceeded(FourierError):
    """A Laurent coefficient below -m(lambda) could not be certified zero."""


class InconsistentFamily(FourierError):
    """A rotated eigenvalue is not among the certified members of the family."""


class PoleAtZero(FourierError):
    """s0 = 0 (lambda = 1, l = 0): the 1/s factor merges with the eigenvalue
    pole; such inputs are rejected."""


@dataclass
class PoleSite:
    s0: CBall
    det_valuation: int  # order of the zero of det(I - q^{-s} C), = alg_mult
    max_pole_order: int  # m(lambda)


@dataclass
class FourierTable:
    """Map l -> certified coefficient ball for one (lambda, k) pair.

    ``period`` is 1 before regrouping; ``effective_period`` may flag a
    structurally finer period (the coefficients breaking it are then zero).
    """

    lam: CBall
    k: int
    coeffs: dict = field(default_factory=dict)
    period: int = 1
    effective_period: int | None = None

    def ell_range(self) -> int:
        return max((abs(l) for l in self.coeffs), default=-1)

    def to_json(self) -> dict:
        status = nonvanishing_report(self)
        return {
            "lambda": self.lam.to_json(),
            "k": self.k,
            "period": self.period,
            "effective_period": self.effective_period or self.period,
            "coefficients": [
                {"ell": l, "value": self.coeffs[l].to_json(), "status": status[l]}
                for l in sorted(self.coeffs)
            ],
        }


def _threads() -> int:
    env = os.environ.get("REGSEQ_THREADS", "")
    if env.strip():
        return max(1, int(env))
    return 1


def _jet_det(m, ctx: Context) -> Jet:
    """Division-free determinant of a matrix of jets (subset convolution).

    d[mask] is the determinant of the first popcount(mask) rows restricted
    to the column set mask; no pivoting is needed, which matters because at
    a pole site the constant terms are singular.
    """
    d = len(m)
    order = m[0][0].order
    table = {0: Jet.constant(CBall.one(), order)}
    for mask in range(1, 1 << d):
        row = bin(mask).count("1") - 1
        acc = None
        pos = 0
        for j in range(d):
            bit = 1 << j
            if not mask & bit:
                continue
            sub = table[mask ^ bit]
            term = m[row][j].mul(sub, ctx)
            if (row + pos) % 2:
                term = term.neg()
            acc = term if acc is None else acc.add(term, ctx)
            pos += 1
        table[mask] = acc
    return table[(1 << d) - 1]


def _chi_ell(ell: int, q: int, ctx: Context) -> RBall:
    """2 pi ell / log q (the imaginary part of the pole grid step)."""
    if ell == 0:
        return RBall.zero()
    return ctx.pi().scale_int(2 * ell, ctx).div(RBall.exact(q).log(ctx), ctx)


def pole_s0(datum: EigenDatum, ell: int, q: int, ctx: Context) -> CBall:
    base = datum.log_q(q, ctx)
    return CBall(base.re, base.im.add(_chi_ell(ell, q, ctx), ctx))


def laurent_X_at_pole(rep: LinRep, datum: EigenDatum, ell: int,
                      config: DirichletConfig, *,
                      session: EvalSession | None = None,
                      slack: int = 1) -> tuple[PoleSite, LaurentSeries]:
    """Laurent series of (x(0) + X(s))/s in Z = s - s0 at the pole site.

    The jet order is alg_mult + m + slack: the determinant zero consumes
    alg_mult, the deepest needed coefficient sits at Z^{-m}, and the slack
    order (default one) feeds the pole-order verification.
    """
    ctx = Context.get(config.precision_bits)
    a = datum.alg_mult
    m_jordan = datum.jordan_m
    order = a + m_jordan + slack
    s0 = pole_s0(datum, ell, rep.q, ctx)
    if s0.contains_zero():
        raise PoleAtZero(
            "s0 = 0: the eigenvalue pole coincides with the 1/s factor")
    if session is None:
        # q^{-s0} = 1/lambda exactly: s0 log q = log lambda + 2 l pi i
        q_pow = datum.lam.recip(ctx)
        cols = tuple((x,) for x in rep.initial)
        session = EvalSession(rep, s0, order, config, cols=cols, q_pow_s0=q_pow)
    else:
        s0 = session.s0
        config = session.config
    g = session.g_value(0)
    q_jet = session.q_pow_jet(0)
    c_mat = session.der.c
    d = rep.d
    m_jet = []
    for i in range(d):
        row = []
        for j in range(d):
            entry = q_jet.scale_mpq(-c_mat[i][j], ctx) if c_mat[i][j] else \
                Jet.constant(CBall.zero(), order)
            if i == j:
                entry = entry.add(Jet.constant(CBall.one(), order), ctx)
            row.append(entry)
        m_jet.append(row)
    det = _jet_det(m_jet, ctx)
    numer = None
    for i in range(d):
        if not rep.left[i]:
            continue
        replaced = [r[:] for r in m_jet]
        for t in range(d):
            replaced[t][i] = g[t][0]
        di = _jet_det(replaced, ctx).scale_mpq(rep.left[i], ctx)
        numer = di if numer is None else numer.add(di, ctx)
    if numer is None:
        numer = Jet.constant(CBall.zero(), order)
    head = session.head_range(1, config.n0, 0)
    head_x = Jet.constant(CBall.zero(), order)
    for i in range(d):
        if rep.left[i]:
            head_x = head_x.add(head[i][0].scale_mpq(rep.left[i], ctx), ctx)
    x0 = sum(l * v for l, v in zip(rep.left, rep.initial))
    const = head_x.add(Jet.constant(CBall.from_mpq(x0, 0, ctx), order), ctx)
    p_jet = const.mul(det, ctx).add(numer, ctx)
    q_jet_full = det.mul(Jet.variable(s0, order), ctx)
    series = laurent_div(p_jet, q_jet_full, a, ctx)
    for j in range(-a, -m_jordan):
        if not series.coeff(j).contains_zero():
            raise PoleOrderExceeded(
                f"coefficient of Z^{j} excludes zero but the pole order is "
                f"at most {m_jordan}")
    site = PoleSite(s0=s0, det_valuation=a, max_pole_order=m_jordan)
    return site, series


def _site_coefficients(rep: LinRep, datum: EigenDatum, ells, config,
                       threads: int | None = None) -> dict:
    """Laurent series per l, optionally on a thread pool.

    The serial path shares the exact tables (W, log n) between the sites
    through a common scratch dictionary.
    """
    ells = list(ells)
    workers = threads if threads is not None else _threads()

    if workers > 1 and len(ells) > 1:
        def work(ell):
            return ell, laurent_X_at_pole(rep, datum, ell, config)[1]

        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(work, ells))
        return dict(results)

    ctx = Context.get(config.precision_bits)
    shared: dict = {}
    q_pow = datum.lam.recip(ctx)
    cols = tuple((x,) for x in rep.initial)
    order = datum.alg_mult + datum.jordan_m + 1
    out = {}
    for ell in ells:
        s0 = pole_s0(datum, ell, rep.q, ctx)
        session = EvalSession(rep, s0, order, config, cols=cols,
                              q_pow_s0=q_pow, shared=shared)
        out[ell] = laurent_X_at_pole(rep, datum, ell, config,
                                     session=session)[1]
    return out


def chained_site_series(rep: LinRep, datum: EigenDatum, ell_max: int,
                        config: DirichletConfig, *, n0_schedule=None,
                        reset_every: int = 128, slack: int = 1) -> dict:
    """Laurent series for all sites l = 0..ell_max of one eigenvalue,
    optimized for long runs (plotting-degree coefficient tables).

    Consecutive sites differ by chi_1 = 2 pi i / log q, so the per-n factors
    satisfy n^{-s0(l)} = n^{-s0(l-1)} exp(-2 pi i log_q n) exactly; the
    phase balls are chained from site to site (recomputed afresh every
    ``reset_every`` sites to keep the radii from drifting) and the exact
    tables are shared.  ``n0_schedule(l)`` may grow the split point with l:
    the conditioning of the truncated k-sum degrades once |Im s| becomes
    comparable to q * n0.
    """
    ctx = Context.get(config.precision_bits)
    q = rep.q
    shared: dict = {}
    q_pow = datum.lam.recip(ctx)
    cols = tuple((x,) for x in rep.initial)
    order = datum.alg_mult + datum.jordan_m + slack
    logq = RBall.exact(q).log(ctx)
    two_pi = ctx.pi().scale_int(2, ctx)
    omega: dict[int, CBall] = {}
    en: dict[int, CBall] = {}
    en_ell = None

    def omega_n(n: int) -> CBall:
        w = omega.get(n)
        if w is None:
            ln = shared.setdefault("logs", {}).get(n)
            if ln is None:
                ln = RBall.exact(n).log(ctx)
                shared["logs"][n] = ln
            theta = two_pi.mul(ln.div(logq, ctx), ctx)
            w = CBall(theta.cos(ctx), theta.sin(ctx).neg())
            omega[n] = w
        return w

    def fresh(n: int, s0: CBall) -> CBall:
        ln = shared.setdefault("logs", {}).get(n)
        if ln is None:
            ln = RBall.exact(n).log(ctx)
            shared["logs"][n] = ln
        return s0.mul_real(ln, ctx).neg().exp(ctx)

    out = {}
    for ell in range(0, ell_max + 1):
        n0_l = n0_schedule(ell) if n0_schedule is not None else config.n0
        cfg_l = replace(config, n0=n0_l)
        s0 = pole_s0(datum, ell, q, ctx)
        need = range(1, q * n0_l)
        if en_ell is None or ell % reset_every == 0:
            en = {n: fresh(n, s0) for n in need}
        else:
            step = ell - en_ell
            for n in list(en):
                w = omega_n(n)
                val = en[n]
                for _ in range(step):
                    val = val.mul(w, ctx)
                en[n] = val
            for n in need:
                if n not in en:
                    en[n] = fresh(n, s0)
        en_ell = ell
        session = EvalSession(rep, s0, order, cfg_l, cols=cols,
                              q_pow_s0=q_pow, shared=shared, en_table=en)
        out[ell] = laurent_X_at_pole(rep, datum, ell, cfg_l,
                                     session=session, slack=slack)[1]
    return out


def fourier_tables(rep: LinRep, datum: EigenDatum, ell_max: int,
                   config: DirichletConfig, *, conjugate_symmetry: bool = True,
                   threads: int | None = None) -> dict[int, FourierTable]:
    """All tables (one per log-power k < m) for one eigenvalue.

    For certified-real eigenvalues of a rational representation the
    negative-l sites are conjugates of positive-l sites, so by default only
    one half is evaluated; ``conjugate_symmetry=False`` computes every site
    honestly (used by the symmetry cross-checks).
    """
    use_conj = conjugate_symmetry and datum.is_real
    if use_conj and datum.lam.re.lower() > 0:
        ells = range(0, ell_max + 1)
        mirror = lambda l: -l  # noqa: E731
    elif use_conj and datum.lam.re.upper() < 0:
        ells = range(0, ell_max + 1)
        mirror = lambda l: -l - 1  # noqa: E731
    else:
        ells = range(-ell_max, ell_max + 1)
        mirror = None
    laurents = _site_coefficients(rep, datum, ells, config, threads)
    out = {}
    for k in range(datum.jordan_m):
        coeffs = {}
        for ell, series in laurents.items():
            coeffs[ell] = series.coeff(-(k + 1))
            if mirror is not None:
                coeffs[mirror(ell)] = series.coeff(-(k + 1)).conj()
        coeffs = {l: v for l, v in coeffs.items() if -ell_max <= l <= ell_max}
        out[k] = FourierTable(lam=datum.lam, k=k, coeffs=coeffs, period=1)
    return out


def fourier_table(rep: LinRep, datum: EigenDatum, k: int, ell_max: int,
                  config: DirichletConfig, *, conjugate_symmetry: bool = True,
                  threads: int | None = None) -> FourierTable:
    if not 0 <= k < datum.jordan_m:
        raise ValueError(f"k must satisfy 0 <= k < m(lambda) = {datum.jordan_m}")
    return fourier_tables(rep, datum, ell_max, config,
                          conjugate_symmetry=conjugate_symmetry,
                          threads=threads)[k]


# ---------------------------------------------------------------------------
# Symmetric regrouping
# ---------------------------------------------------------------------------


def _arg_ball(lam: CBall, ctx: Context) -> RBall:
    if lam.im.contains_zero() and lam.re.lower() > 0:
        return RBall.zero()
    if lam.im.contains_zero() and lam.re.upper() < 0:
        return ctx.pi()
    return lam.log(ctx).im


def symmetric_group(tables: list[FourierTable], lam: CBall, k: int, p: int,
                    ctx: Context) -> FourierTable:
    """Interleave the residue grids of the family {zeta lambda : zeta^p = 1}.

    The regrouped coefficient with index L is the residue at
    log_q lambda + 2 L pi i / (p log q), which belongs to the rotation
    zeta_j with j = j0 + ((L - j0) mod p) and original index (L - j) / p;
    j0 = floor(-p (pi + arg lambda) / (2 pi)) + 1 keeps every rotated
    logarithm principal.
    """
    if p < 1:
        raise ValueError("p must be positive")
    if p == 1:
        if len(tables) != 1:
            raise InconsistentFamily("p = 1 expects exactly one table")
        return tables[0]
    import math

    if lam.im.contains_zero() and lam.re.lower() > 0:
        # arg = 0 exactly: v = -p/2 lands on a grid point for even p
        v_exact = mpq(-p, 2)
        j0 = v_exact.numerator // v_exact.denominator + 1
    elif lam.im.contains_zero() and lam.re.upper() < 0:
        # arg = pi exactly: v = -p
        j0 = -p + 1
    else:
        arg = _arg_ball(lam, ctx)
        pi_ball = ctx.pi()
        v = pi_ball.add(arg, ctx).scale_int(-p, ctx).div(
            pi_ball.scale_int(2, ctx), ctx)
        lo, hi = float(v.lower()), float(v.upper())
        if math.floor(lo) != math.floor(hi):
            raise InconsistentFamily(
                "window index j0 not determined at this precision")
        j0 = math.floor(lo) + 1

    # match each window rotation to a supplied table
    by_j = {}
    for j in range(j0, j0 + p):
        zeta = _root_of_unity(j, p, ctx)
        target = lam.mul(zeta, ctx)
        match = next((t for t in tables if t.lam.intersects(target)), None)
        if match is None:
            raise InconsistentFamily(
                f"no table for the rotation exp(2 pi i {j}/{p}) lambda")
        by_j[j] = match
    coeffs = {}
    spans = [t.ell_range() for t in tables]
    span = min(spans) if spans else -1
    for big_l in range(-(span * p + p - 1), span * p + p):
        j = j0 + ((big_l - j0) % p)
        ell, rem = divmod(big_l - j, p)
        assert rem == 0
        table = by_j[j]
        if ell in table.coeffs:
            coeffs[big_l] = table.coeffs[ell]
    if k != tables[0].k or any(t.k != k for t in tables):
        raise InconsistentFamily("tables must share the log-power index k")
    return FourierTable(lam=lam, k=k, coeffs=coeffs, period=p)


def _root_of_unity(j: int, p: int, ctx: Context) -> CBall:
    j = j % p
    if j == 0:
        return CBall.one()
    if 2 * j == p:
        return CBall.exact(-1)
    theta = ctx.pi().scale_mpq(mpq(2 * j, p), ctx)
    return CBall(theta.cos(ctx), theta.sin(ctx))


# ---------------------------------------------------------------------------
# Evaluation and reporting
# ---------------------------------------------------------------------------


def fourier_eval(table: FourierTable, u, degree: int, ctx: Context) -> CBall:
    """Partial sum of the Fourier series at u: sum_{|l| <= degree} phi_l
    exp(2 l pi i u / period).

    The partial sum itself is evaluated in ball arithmetic, but no bound on
    the truncation of the series is claimed (the series converges pointwise
    with no stated rate).
    """
    if degree > table.ell_range():
        raise ValueError(
            f"degree {degree} exceeds the computed range {table.ell_range()}")
    u_ball = RBall.exact(mpfr(u, ctx.prec)) if not isinstance(u, RBall) else u
    acc = CBall.zero()
    two_pi = ctx.pi().scale_int(2, ctx)
    base = two_pi.mul(u_ball, ctx).scale_mpq(mpq(1, table.period), ctx)
    for ell in sorted(table.coeffs):
        if abs(ell) > degree:
            continue
        theta = base.scale_int(ell, ctx)
        e = CBall(theta.cos(ctx), theta.sin(ctx))
        acc = acc.add(table.coeffs[ell].mul(e, ctx), ctx)
    return acc


def nonvanishing_report(table: FourierTable) -> dict:
    """'nonzero' exactly when the ball excludes zero; 'contains_zero' is
    explicitly inconclusive."""
    return {
        l: ("nonzero" if c.excludes_zero() else "contains_zero")
        for l, c in table.coeffs.items()
    }
