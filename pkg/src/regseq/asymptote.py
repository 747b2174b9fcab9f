"""Assembly of the full asymptotic expansion and empirical cross-validation.

The summatory function decomposes as

    X(N) = sum over eigenvalues lambda of C with |lambda| > R, 0 <= k < m:
           N^{log_q lambda} (log N)^k / k!  Phi_{lambda k}(frac(log_q N))
         + O(N^{log_q R} (log N)^{max m over |lambda| = R}),

where the error term disappears when every eigenvalue contributes a main
term.  Certified eigenvalue balls are classified against the certified R
ball; an eigenvalue ball meeting R is assigned to the error clause with its
log power.  Empirical sampling evaluates X at floor(q^{j+u}) exactly (the
sequence side carries no floating error) and rescales by the term under
test for figure-level comparison against the truncated Fourier series.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import gmpy2
from gmpy2 import mpfr, mpq

from .ball import CBall, Context, RBall
from .dirichlet import DirichletConfig
from .exact import identity, inverse, mat_sub, mat_vec, poly_eval, charpoly, poly_gcd
from .fourier import (
    FourierTable,
    fourier_eval,
    fourier_tables,
    laurent_X_at_pole,
    nonvanishing_report,
    symmetric_group,
)
from .linrep import DerivedMatrices, LinRep, Mode, summatory_fast
from .spectral import EigenDatum, JsrBounds, eigen_certify, jsr_bounds
from . import exact


class UnsupportedConstants(ArithmeticError):
    """Matrix-product mode with 1 in the spectrum of C: the Jordan-basis
    constants are out of scope."""


@dataclass
class Term:
    datum: EigenDatum
    k: int
    exponent: CBall  # log_q lambda
    holder: RBall | None = None  # open upper bound log_q(|lambda|/R)
    fluctuation: FourierTable | None = None
    grouped_with: tuple = ()  # rotated family members folded into this term

    def sort_key(self):
        return (-float(self.exponent.re.mid), -self.k, float(self.exponent.im.mid))


@dataclass
class AsymptoticExpansion:
    terms: list
    error_exponent: RBall | None  # log_q R; None when the O-term is omitted
    error_log_power: int
    error_omitted: bool
    constants: dict | None = None  # matrix-mode constants (1 not in spectrum)
    notes: list = field(default_factory=list)


def _one_in_spectrum(c_matrix) -> bool:
    return poly_eval(charpoly(c_matrix), mpq(1)) == 0


def holder_bound(datum: EigenDatum, jsr: JsrBounds, q: int, ctx: Context) -> RBall:
    """log_q(|lambda| / R), an open upper bound for the Hölder exponent."""
    ab = datum.abs_ball(ctx)
    if ab.lower() <= 0 or jsr.r_value.lower() <= 0:
        raise ValueError("Hölder bound needs positive |lambda| and R")
    logq = RBall.exact(q).log(ctx)
    return ab.log(ctx).sub(jsr.r_value.log(ctx), ctx).div(logq, ctx)


def expansion(rep: LinRep, eigen_data: list[EigenDatum], jsr: JsrBounds,
              config: DirichletConfig, *, tables=None) -> AsymptoticExpansion:
    """Classify the certified eigenvalues into terms and the error clause.

    ``tables`` may map (eigenvalue index in eigen_data, k) to a FourierTable
    to attach; the structure of the expansion never depends on them.
    """
    ctx = Context.get(config.precision_bits)
    r_ball = jsr.r_value
    notes = list(filter(None, [jsr.note]))
    terms = []
    boundary = []
    below = []
    logq = RBall.exact(rep.q).log(ctx)
    for idx, datum in enumerate(eigen_data):
        ab = datum.abs_ball(ctx)
        if ab.lower() > r_ball.upper():
            exponent = datum.log_q(rep.q, ctx)
            hb = ab.log(ctx).sub(r_ball.log(ctx), ctx).div(logq, ctx) \
                if r_ball.lower() > 0 else None
            for k in range(datum.jordan_m):
                table = tables.get((idx, k)) if tables else None
                terms.append(Term(datum=datum, k=k, exponent=exponent,
                                  holder=hb, fluctuation=table))
        elif ab.upper() < r_ball.lower():
            below.append(datum)
        else:
            boundary.append(datum)
    error_log_power = max((d.jordan_m for d in boundary), default=0)
    error_omitted = not boundary and not below
    constants = None
    if rep.mode == Mode.MATRIX_PRODUCT:
        der = DerivedMatrices.of(rep)
        if _one_in_spectrum(der.c):
            raise UnsupportedConstants(
                "matrix-product mode with eigenvalue 1 of C: constants require "
                "a certified Jordan basis and are not supported")
        d = rep.d
        k_matrix = exact.mat_mul(inverse(mat_sub(identity(d), der.c)),
                                 mat_sub(identity(d), rep.matrices[0]))
        k_scalar = sum(
            rep.left[i] * sum(k_matrix[i][j] * rep.initial[j] for j in range(d))
            for i in range(d))
        constants = {"K": k_matrix, "K_scalar": k_scalar, "theta": mpq(0)}
        notes.append("matrix-product mode: constant term K attached (theta = 0)")
    terms.sort(key=Term.sort_key)
    return AsymptoticExpansion(
        terms=terms,
        error_exponent=None if error_omitted else
        (r_ball.log(ctx).div(logq, ctx) if r_ball.lower() > 0 else RBall.zero()),
        error_log_power=error_log_power,
        error_omitted=error_omitted,
        constants=constants,
        notes=notes,
    )


@dataclass
class EmpiricalSample:
    u: float
    j: int
    n: int
    x_exact: mpq
    value: complex


def empirical_sample(rep: LinRep, term: Term, u_grid, j: int,
                     config: DirichletConfig, *, higher_terms=(),
                     degree: int | None = None) -> list[EmpiricalSample]:
    """Exact summatory values rescaled by the term under test.

    For each u, N = floor(q^{j+u}); X(N) is exact; certified higher terms
    (list of Terms with attached fluctuation tables) are subtracted using
    series midpoints before dividing by N^{Re exponent} (log N)^k / k!.
    """
    ctx = Context.get(max(config.precision_bits, 64))
    out = []
    q = rep.q
    for u in u_grid:
        n = _floor_q_power(q, j, u)
        x = summatory_fast(rep, n)[1]
        log_n = RBall.exact(n).log(ctx)
        log_q_n = log_n.div(RBall.exact(q).log(ctx), ctx)
        val = CBall(RBall.from_mpq(x, ctx))
        for ht in higher_terms:
            if ht.fluctuation is None:
                raise ValueError("higher terms need attached fluctuation tables")
            deg = degree if degree is not None else ht.fluctuation.ell_range()
            phi = fourier_eval(ht.fluctuation, log_q_n, deg, ctx)
            scale = _term_scale(ht, n, log_n, ctx)
            val = val.sub(phi.mul(scale, ctx), ctx)
        val = val.div(_term_scale(term, n, log_n, ctx), ctx)
        out.append(EmpiricalSample(
            u=float(u), j=j, n=n, x_exact=x,
            value=complex(float(val.re.mid), float(val.im.mid))))
    return out


def _term_scale(term: Term, n: int, log_n: RBall, ctx: Context) -> CBall:
    """N^{log_q lambda} (log N)^k / k!"""
    power = term.exponent.mul_real(log_n, ctx).exp(ctx)
    fact = 1
    for i in range(2, term.k + 1):
        fact *= i
    extra = RBall.exact(1)
    for _ in range(term.k):
        extra = extra.mul(log_n, ctx)
    return power.mul_real(extra.scale_mpq(mpq(1, fact), ctx), ctx)


def _floor_q_power(q: int, j: int, u) -> int:
    ctx = gmpy2.context(precision=256)
    val = ctx.exp(ctx.mul(mpfr(j, 256) + mpfr(u, 256), ctx.log(mpfr(q, 256))))
    return max(1, int(ctx.floor(val)))


# ---------------------------------------------------------------------------
# Report orchestration
# ---------------------------------------------------------------------------


def minus_pair_index(eigen_data: list[EigenDatum], idx: int) -> int | None:
    """Index of the certified eigenvalue -lambda, or None.

    The test is exact: lambda is a root of h = gcd(g(x), +-g(-x)) (with g
    its squarefree charpoly factor) if and only if -lambda is an eigenvalue;
    membership of the certified ball in h versus g/h is decided by ball
    evaluation, which separates for a fine enough enclosure.
    """
    from .spectral import _poly_eval_ball
    from .exact import poly_divmod, poly_monic, poly_trim

    datum = eigen_data[idx]
    g = list(datum.factor)
    g_neg = [(-1) ** i * c for i, c in enumerate(g)]
    h = poly_gcd(g, g_neg)
    if len(h) <= 1:
        return None
    ctx = Context.get(128)
    rest = poly_divmod(g, h)[0]
    in_h = _poly_eval_ball(h, datum.lam, ctx).contains_zero()
    in_rest = len(rest) > 1 and _poly_eval_ball(rest, datum.lam, ctx).contains_zero()
    if in_h and in_rest:
        return None  # ambiguous at this radius; caller may raise precision
    if not in_h:
        return None
    neg = datum.lam.neg()
    for j, other in enumerate(eigen_data):
        if j != idx and other.lam.intersects(neg):
            return j
    return None


@dataclass
class AnalysisReport:
    rep: LinRep
    eigen_data: list
    jsr: JsrBounds
    expansion: AsymptoticExpansion
    tables: dict  # (eigen index, k) -> FourierTable (grouped tables included)
    notes: list


def full_report(rep: LinRep, config: DirichletConfig, *, ell_max: int = 10,
                jsr_ell_max: int = 6, group_minus_pairs: bool = True,
                effective_period_hint: int | None = None,
                threads: int | None = None) -> AnalysisReport:
    """End-to-end analysis: certified spectrum, JSR bounds, Fourier tables
    (with +-lambda families regrouped into 2-periodic fluctuations), and the
    assembled expansion."""
    der = DerivedMatrices.of(rep)
    try:
        eigen_data = eigen_certify(der.c, config.precision_bits)
    except Exception:
        eigen_data = eigen_certify(der.c, 2 * config.precision_bits)
    jsr = jsr_bounds(rep, ell_max=jsr_ell_max, precision=config.precision_bits,
                     eigen_data=eigen_data)
    ctx = Context.get(config.precision_bits)
    r_ball = jsr.r_value
    term_idx = [i for i, d in enumerate(eigen_data)
                if d.abs_ball(ctx).lower() > r_ball.upper()]
    grouped: dict[int, int] = {}  # negative-member index -> positive partner
    if group_minus_pairs:
        for i in term_idx:
            d = eigen_data[i]
            if i in grouped:
                continue
            if d.is_real and d.lam.re.lower() > 0:
                j = minus_pair_index(eigen_data, i)
                if j is not None and j in term_idx:
                    grouped[j] = i
    tables: dict = {}
    notes: list[str] = []
    for i in term_idx:
        if i in grouped:
            continue  # folded into its positive partner
        d = eigen_data[i]
        per_k = fourier_tables(rep, d, ell_max, config, threads=threads)
        partner = next((j for j, pos in grouped.items() if pos == i), None)
        if partner is not None:
            d_neg = eigen_data[partner]
            neg_k = fourier_tables(rep, d_neg, ell_max, config, threads=threads)
            for k in per_k:
                group = symmetric_group([per_k[k], neg_k[k]], d.lam, k, 2, ctx)
                # regrouped index L covers the paper-style period-p index up
                # to ell_max, i.e. |L| <= p * ell_max (plus the interleaves)
                group.coeffs = {l: v for l, v in group.coeffs.items()
                                if abs(l) <= 2 * ell_max + 1}
                if effective_period_hint is not None:
                    group.effective_period = effective_period_hint
                per_k[k] = group
            notes.append(
                "eigenvalue pair +-%.6g regrouped into a 2-periodic fluctuation"
                % float(d.lam.re.mid))
        for k, t in per_k.items():
            tables[(i, k)] = t
    exp = expansion(rep, eigen_data, jsr, config, tables=tables)
    exp.terms = [t for t in exp.terms
                 if not any(eigen_data[j] is t.datum for j in grouped)]
    notes.extend(exp.notes)
    return AnalysisReport(rep=rep, eigen_data=eigen_data, jsr=jsr,
                          expansion=exp, tables=tables, notes=notes)
