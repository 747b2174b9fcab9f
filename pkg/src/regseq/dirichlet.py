"""Rigorous evaluation of the matrix Dirichlet series of a linear representation.

For F(s) = sum_{n >= n0} n^{-s} f(n) the two workhorses are

* direct summation with a certified tail bound, usable when Re s is well
  above ``log_q M + 1`` (M the largest row-sum norm of the digit matrices),
  and
* the functional-equation recursion
  ``(I - q^{-s} C) F(s) = G(s)`` with
  ``G(s) = sum_{n0 <= n < q n0} n^{-s} f(n)
  + q^{-s} sum_r A_r sum_{k >= 1} binom(-s, k) (r/q)^k F(s+k)``,
  whose inner sum is truncated adaptively with a certified remainder bound.

Everything is evaluated on jets at a base point s0 (order 0 recovers plain
ball evaluation), so the same machinery feeds both point evaluation and the
local Laurent data at pole sites.  A session object memoizes the values at
the integer shifts s0 + k; the recursion terminates because beyond a finite
shift the whole series is absorbed by its tail bound.

Right-multiplication by a fixed exact column block (for instance the
initial vector) is supported throughout and keeps the recursion on skinny
matrices.
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass, replace

import gmpy2
from gmpy2 import mpfr, mpq

from .ball import _DOWN, _UP, CBall, Context, Jet, RBall
from .exact import mat_vec, row_sum_norm
from .linrep import DerivedMatrices, LinRep

log = logging.getLogger("regseq.dirichlet")

_ZERO = mpfr(0)


class DirichletError(ArithmeticError):
    pass


class DomainError(DirichletError):
    """A bound formula was used outside its half plane of validity."""


class TruncationBudgetExceeded(DirichletError):
    """k_max was reached before the truncation bound met the target."""


class NearPole(DirichletError):
    """Pivot certification failed: s is too close to a pole at this precision."""


@dataclass(frozen=True)
class DirichletConfig:
    """Evaluation parameters.

    ``re_base`` is the real-part threshold above which direct summation is
    considered (default log_q M + 3); ``cut`` is the direct-summation length
    (default max(10**5, n0)).  ``fast_heads`` switches the head sums to the
    fused accumulation with an aggregate error bound; the slow path applies
    ball arithmetic term by term and exists to cross-check the fast one.
    """

    n0: int = 1024
    precision_bits: int = 128
    k_max: int = 400
    re_base: float | None = None
    cut: int | None = None
    fast_heads: bool = True
    target_bits: int | None = None  # tail/truncation target; default prec + 8
    floor_bits: int | None = None  # absolute floor of the shift-scaled target

    def __post_init__(self):
        if self.n0 < 2:
            raise ValueError("n0 must be at least 2")
        if self.precision_bits < 16:
            raise ValueError("precision_bits must be at least 16")

    @property
    def effective_target_bits(self) -> int:
        return self.target_bits if self.target_bits is not None \
            else self.precision_bits + 8

    @property
    def effective_floor_bits(self) -> int:
        return self.floor_bits if self.floor_bits is not None \
            else self.effective_target_bits


def matrix_norm_upper(rep: LinRep) -> mpq:
    """M = max_r of the maximum absolute row sum of A_r (exact)."""
    return max(row_sum_norm(a) for a in rep.matrices)


def _log_q_norm(rep: LinRep, ctx: Context) -> RBall:
    m = matrix_norm_upper(rep)
    if m == 0:
        return RBall.exact(0)  # zero representation; any threshold works
    return RBall.from_mpq(m, ctx).log(ctx).div(RBall.exact(rep.q).log(ctx), ctx)


def default_re_base(rep: LinRep) -> float:
    m = matrix_norm_upper(rep)
    return float(gmpy2.log(mpfr(max(m, mpq(1)))) / gmpy2.log(mpfr(rep.q))) + 3.0


def tail_bound(rep: LinRep, re_s, n0: int) -> mpfr:
    """Upper bound for sum_{n >= n0} ||f(n)|| n^{-Re s}.

    The bound is M / ((Re s - log_q M - 1) (n0 - 1)^(Re s - log_q M - 1)),
    valid for Re s > log_q M + 1.
    """
    ctx = Context.get(64)
    re_s = re_s if isinstance(re_s, RBall) else RBall.exact(mpfr(re_s, 64))
    m = matrix_norm_upper(rep)
    if m == 0:
        return _ZERO
    t = re_s.sub(_log_q_norm(rep, ctx), ctx).sub(RBall.exact(1), ctx)
    if t.lower() <= 0:
        raise DomainError("tail bound needs Re s > log_q M + 1")
    return _UP.div(_UP.add(_ZERO, m), _denom_lower(t.lower(), n0))


def _denom_lower(t_lo: mpfr, n0: int) -> mpfr:
    """Lower bound of t (n0-1)^t from the left endpoint (increasing for t > 0)."""
    return _DOWN.mul(t_lo, _DOWN.exp(_DOWN.mul(_DOWN.log(mpfr(n0 - 1)), t_lo)))


def tail_bound_coeffs(rep: LinRep, re_s, n0: int, order: int) -> list[mpfr]:
    """Per-coefficient tail bounds for the jet of F at a point with Re s.

    The Z^j coefficient of the tail is sum n^{-s} (-log n)^j / j! f(n); use
    (log n)^j <= (2j/e)^j n^{1/2} and absorb n^{1/2} into the exponent, so
    coefficient j is bounded by (2j/e)^j / j! times the scalar tail bound at
    Re s - 1/2.
    """
    ctx = Context.get(64)
    re_s = re_s if isinstance(re_s, RBall) else RBall.exact(mpfr(re_s, 64))
    half = RBall.from_mpq(mpq(1, 2), ctx)
    base = tail_bound(rep, re_s.sub(half, ctx), n0)
    out = [base]
    e_low = _DOWN.exp(mpfr(1))
    fact = 1
    for j in range(1, order + 1):
        fact *= j
        c = _UP.div(mpfr(2 * j), e_low)
        pw = mpfr(1)
        for _ in range(j):
            pw = _UP.mul(pw, c)
        out.append(_UP.div(_UP.mul(base, pw), mpfr(fact, 64)))
    return out


def truncation_bound(rep: LinRep, s: CBall, big_k: int, n0: int) -> mpfr:
    """Upper bound for the error of truncating the k-sum of G at k = K.

    Valid for Re s + K > max(log_q M + 1, 0); this is the certified
    remainder q^{-Re s} |binom(-s, K)| tail(Re s + K) sum_r ||A_r|| (r/q)^K.
    """
    from .ball import binom_neg_s

    ctx = Context.get(64)
    m = matrix_norm_upper(rep)
    if m == 0:
        return _ZERO
    re_s = s.re
    if _DOWN.add(re_s.lower(), mpfr(big_k)) <= 0:
        raise DomainError("truncation bound needs Re s + K > 0")
    t = re_s.add(RBall.exact(big_k), ctx)
    t = t.sub(_log_q_norm(rep, ctx), ctx).sub(RBall.exact(1), ctx)
    if t.lower() <= 0:
        raise DomainError("truncation bound needs Re s + K > log_q M + 1")
    binom_up = binom_neg_s(s, big_k, ctx).abs_upper()
    logq = RBall.exact(rep.q).log(ctx)
    q_fac = re_s.neg().mul(logq, ctx).exp(ctx).mag()
    tail_fac = _UP.div(_UP.add(_ZERO, m), _denom_lower(t.lower(), n0))
    row_fac = _ZERO
    for r in range(1, rep.q):
        pw = RBall.from_mpq(mpq(r, rep.q), ctx).log(ctx).scale_int(big_k, ctx) \
            .exp(ctx).mag()
        row_fac = _UP.add(row_fac,
                          _UP.mul(_UP.add(_ZERO, row_sum_norm(rep.matrices[r])), pw))
    return _UP.mul(_UP.mul(_UP.mul(q_fac, binom_up), tail_fac), row_fac)


def truncation_bound_coeffs(rep: LinRep, s0: CBall, big_k: int, n0: int,
                            order: int) -> list[mpfr]:
    """Per-coefficient truncation bounds for jets at s0 via Cauchy estimates.

    The remainder is analytic on the disc |s - s0| <= 1/2 (granted the
    shifted domain condition), and bounded there by the scalar bound on the
    inflated ball; the Z^j coefficient is then bounded by that value times 2^j.
    """
    half = mpfr(1) / 2
    s_infl = CBall(RBall(s0.re.mid, _UP.add(s0.re.rad, half)),
                   RBall(s0.im.mid, _UP.add(s0.im.rad, half)))
    base = truncation_bound(rep, s_infl, big_k, n0)
    return [_UP.mul(base, mpfr(2) ** j) for j in range(order + 1)]


# ---------------------------------------------------------------------------
# Evaluation sessions
# ---------------------------------------------------------------------------


class EvalSession:
    """Memoized evaluation of F and G jets at the integer shifts of s0.

    ``cols`` is an exact d x m block multiplied from the right (the identity
    for full matrices, the initial vector for the scalar series);
    ``q_pow_s0`` optionally supplies an exact ball for q^{-s0} (at a pole
    site log_q(lambda) + chi_l this equals 1/lambda, which avoids a needless
    exp/log round trip).
    """

    def __init__(self, rep: LinRep, s0: CBall, order: int,
                 config: DirichletConfig, cols=None, q_pow_s0: CBall | None = None,
                 shared: dict | None = None, en_table: dict | None = None):
        self.rep = rep
        self.s0 = s0
        self.order = order
        self.config = config
        self.ctx = Context.get(config.precision_bits)
        d = rep.d
        if cols is None:
            cols = tuple(tuple(mpq(1 if i == j else 0) for j in range(d))
                         for i in range(d))
        else:
            cols = tuple(tuple(mpq(x) for x in row) for row in cols)
        self.cols = cols
        self.m = len(cols[0])
        self.der = DerivedMatrices.of(rep)
        ctx = self.ctx
        self.log_q = RBall.exact(rep.q).log(ctx)
        if q_pow_s0 is None:
            q_pow_s0 = s0.mul_real(self.log_q, ctx).neg().exp(ctx)
        self.q_pow_s0 = q_pow_s0
        self.colmax = max(max(abs(x) for x in row) for row in cols)
        self._colmax_up = _UP.add(_ZERO, max(mpq(1), self.colmax))
        self.target = _UP.mul(mpfr(2) ** (-config.effective_target_bits),
                              self._colmax_up)
        self.cache: dict[int, list] = {}
        # shared holds exact per-representation data reusable across base
        # points (the W table and log n balls); en_table optionally supplies
        # precomputed n^{-s0} balls for this session's own s0
        self.shared = shared if shared is not None else {}
        self.en_table = en_table
        self._v_mid = {}
        self._v_meta = {}
        self._agg = {}
        self._targets: dict[int, mpfr] = {}
        self._m_norm = matrix_norm_upper(rep)

    def target_for(self, shift: int) -> mpfr:
        """Shift-dependent error target.

        The values F(s0 + k) decay roughly like the tail bound as k grows;
        keeping the error targets proportional to that scale keeps the
        k-sum's binomial factors from amplifying flat absolute radii.  An
        absolute floor of 2^{-target_bits} on the scale guarantees that the
        recursion bottoms out in the whole-tail base case.
        """
        t = self._targets.get(shift)
        if t is None:
            floor = mpfr(2) ** (-self.config.effective_floor_bits)
            try:
                ctx = self.ctx
                scale = tail_bound(self.rep,
                                   self.s0.re.add(RBall.exact(shift), ctx),
                                   self.config.n0)
                if scale > 1:
                    scale = mpfr(1)
                elif scale < floor:
                    scale = floor
            except DomainError:
                scale = mpfr(1)
            t = _UP.mul(self.target, scale)
            self._targets[shift] = t
        return t

    # -- exact tables -----------------------------------------------------------

    def w_table(self, upto: int):
        """W(n) = f(n) cols for 0 <= n < upto, exact (shared across sessions)."""
        w = self.shared.get("w")
        if w is None or len(w) < upto:
            w = w or [self.cols]
            for n in range(len(w), upto):
                a = self.rep.matrices[n % self.rep.q]
                prev = w[n // self.rep.q]
                w.append(tuple(
                    tuple(sum(a[i][t] * prev[t][j] for t in range(self.rep.d))
                          for j in range(self.m))
                    for i in range(self.rep.d)))
            self.shared["w"] = w
        return w

    def log_n(self, n: int) -> RBall:
        logs = self.shared.setdefault("logs", {})
        ln = logs.get(n)
        if ln is None:
            ln = RBall.exact(n).log(self.ctx)
            logs[n] = ln
        return ln

    def e_n(self, n: int) -> CBall:
        """n^{-s0} as a ball (from the override table when provided)."""
        if self.en_table is not None:
            e = self.en_table.get(n)
            if e is not None:
                return e
        return self.s0.mul_real(self.log_n(n), self.ctx).neg().exp(self.ctx)

    # -- per-n jet weights -------------------------------------------------------

    def _v_raw_range(self, lo: int, hi: int):
        """Raw midpoints of V_{n,t} = n^{-s0} (-log n)^t / t! for lo <= n < hi.

        Only the midpoint pairs are stored per n; the per-coefficient error
        is bounded analytically: with L = log(hi) and E the ball of n^{-s0},
        |V_t| <= |E| L^t/t!, and the midpoint chain (one division and two
        multiplications per step, all correctly rounded) drifts from the
        exact E.mid (-log n)^t/t! by at most 4 t eps relatively, so
        vrad_t = (max rad(E) + 4 t eps max|E|) L^t/t!.
        """
        key = (lo, hi)
        if key in self._v_mid:
            return self._v_mid[key], self._v_meta[key]
        ctx = self.ctx
        mid = ctx.mid
        mul = mid.mul
        div = mid.div
        from .ball import _neg

        mids = {}
        e_mag = _ZERO
        e_rad = _ZERO
        order = self.order
        for n in range(lo, hi):
            e = self.e_n(n)
            ln_mid = self.log_n(n).mid
            neg_ln = _neg(ln_mid)
            re, im = e.re.mid, e.im.mid
            row = [(re, im)]
            for t in range(1, order + 1):
                f = div(neg_ln, t)
                re = mul(re, f)
                im = mul(im, f)
                row.append((re, im))
            mids[n] = row
            m = _UP.add(_UP.add(_UP.abs(e.re.mid), _UP.abs(e.im.mid)),
                        _UP.add(e.re.rad, e.im.rad))
            if m > e_mag:
                e_mag = m
            r = e.re.rad if e.re.rad > e.im.rad else e.im.rad
            if r > e_rad:
                e_rad = r
        log_hi = _UP.log(mpfr(hi))
        vmax = []
        vrad = []
        lpow = mpfr(1)
        fact = 1
        for t in range(order + 1):
            if t:
                lpow = _UP.mul(lpow, log_hi)
                fact *= t
            scale = _UP.div(lpow, mpfr(fact))
            vmax.append(_UP.mul(e_mag, scale))
            vrad.append(_UP.mul(
                _UP.add(e_rad, _UP.mul(_UP.mul(mpfr(4 * t), ctx.eps), e_mag)),
                scale))
        self._v_mid[key] = mids
        self._v_meta[key] = (vmax, vrad)
        return mids, (vmax, vrad)

    # -- head sums ----------------------------------------------------------------

    def head_range(self, lo: int, hi: int, shift: int):
        """sum_{lo <= n < hi} n^{-s0-shift-Z} W(n) as a d x m matrix of jets."""
        if self.config.fast_heads:
            return self._head_fused(lo, hi, shift)
        return self._head_ballwise(lo, hi, shift)

    def _head_ballwise(self, lo: int, hi: int, shift: int):
        """Term-by-term ball arithmetic; the slow cross-check of the fused path."""
        ctx = self.ctx
        w = self.w_table(hi)
        out = [[Jet.constant(CBall.zero(), self.order) for _ in range(self.m)]
               for _ in range(self.rep.d)]
        for n in range(lo, hi):
            ln = self.log_n(n)
            e = self.e_n(n)
            row = [e]
            for t in range(1, self.order + 1):
                row.append(row[-1].mul_real(ln, ctx).scale_mpq(mpq(-1, t), ctx))
            nk = mpq(1, n ** shift) if shift else mpq(1)
            scaled = [c.scale_mpq(nk, ctx) for c in row] if shift else row
            jn = Jet(list(scaled))
            for i in range(self.rep.d):
                for j in range(self.m):
                    c = w[n][i][j]
                    if c:
                        out[i][j] = out[i][j].add(jn.scale_mpq(c, ctx), ctx)
        return out

    def _head_fused(self, lo: int, hi: int, shift: int):
        """Fused accumulation: midpoints by fma chains, radii by one aggregate bound.

        For each coefficient t the radius bound is
        S_k (vrad_t + (4L+6) eps vmax_t) with S_k >= sum_n |w_n| / n^shift
        (bounded by SW lo^{-shift}) and L the term count: every stored V
        midpoint carries its own ball radius (first term), and each fused
        step makes at most four correctly rounded operations (the n^{-shift}
        scaling of V and the fma), each bounded by eps times the largest
        intermediate magnitude S_k vmax_t (second term).
        """
        ctx = self.ctx
        fma = ctx.mid.fma
        mul = ctx.mid.mul
        div = ctx.mid.div
        w = self.w_table(hi)
        v, (vmax, vrad) = self._v_raw_range(lo, hi)
        d, m, order = self.rep.d, self.m, self.order
        acc_re = [[[_ZERO] * (order + 1) for _ in range(m)] for _ in range(d)]
        acc_im = [[[_ZERO] * (order + 1) for _ in range(m)] for _ in range(d)]
        rng = range(order + 1)
        sw_key = ("sw", lo, hi)
        sw = self.shared.get(sw_key)
        if sw is None:
            sw = sum(max(abs(x) for row in w[n] for x in row) or mpq(0)
                     for n in range(lo, hi))
            self.shared[sw_key] = sw
        count = hi - lo
        wi_key = ("wint", lo, hi)
        w_int = self.shared.get(wi_key)
        if w_int is None:
            w_int = [
                [(i, j, int(c) if c.denominator == 1 else c)
                 for i in range(d) for j in range(m) if (c := w[n][i][j])]
                for n in range(lo, hi)
            ]
            self.shared[wi_key] = w_int
        for idx, n in enumerate(range(lo, hi)):
            row = v[n]
            if shift:
                pk = div(1, n ** shift)
                scaled = [(mul(re, pk), mul(im, pk)) for re, im in row]
            else:
                scaled = row
            for i, j, c in w_int[idx]:
                are, aim = acc_re[i][j], acc_im[i][j]
                for t in rng:
                    sre, sim = scaled[t]
                    are[t] = fma(c, sre, are[t])
                    aim[t] = fma(c, sim, aim[t])
        s_up = _UP.mul(_UP.add(_ZERO, sw),
                       _UP.div(mpfr(1), lo ** shift) if shift else mpfr(1))
        eps_fac = _UP.mul(mpfr(4 * count + 6), ctx.eps)
        rads = [
            _UP.mul(s_up, _UP.add(vrad[t], _UP.mul(eps_fac, vmax[t])))
            for t in rng
        ]
        out = []
        for i in range(d):
            row_out = []
            for j in range(m):
                coeffs = [
                    CBall(RBall(acc_re[i][j][t], rads[t]),
                          RBall(acc_im[i][j][t], rads[t]))
                    for t in rng
                ]
                row_out.append(Jet(coeffs))
            out.append(row_out)
        return out

    # -- jets of q^{-s} and the aggregated digit matrices -----------------------------

    def q_pow_jet(self, shift: int) -> Jet:
        ctx = self.ctx
        base = self.q_pow_s0.scale_mpq(mpq(1, self.rep.q ** shift), ctx)
        j = Jet.exp_affine(CBall.zero(), CBall(self.log_q.neg()), self.order, ctx)
        return j.scale(base, ctx)

    def agg_matrix(self, k: int):
        """sum_r (r/q)^k A_r, exact."""
        if k not in self._agg:
            q = self.rep.q
            d = self.rep.d
            agg = [[mpq(0)] * d for _ in range(d)]
            for r in range(1, q):
                f = mpq(r, q) ** k
                a = self.rep.matrices[r]
                for i in range(d):
                    for j in range(d):
                        if a[i][j]:
                            agg[i][j] += f * a[i][j]
            self._agg[k] = tuple(tuple(row) for row in agg)
        return self._agg[k]

    # -- the functional equation --------------------------------------------------

    def s_ball(self, shift: int) -> CBall:
        return CBall(self.s0.re.add(RBall.exact(shift), self.ctx), self.s0.im)

    def g_value(self, shift: int):
        """G at s0 + shift + Z as a d x m matrix of jets (certified truncation)."""
        ctx = self.ctx
        rep = self.rep
        head = self.head_range(self.config.n0, rep.q * self.config.n0, shift)
        s_jet = Jet.variable(self.s_ball(shift), self.order)
        ksum = None
        binom = Jet.constant(CBall.one(), self.order)
        neg_s = s_jet.neg()
        kk = 0
        chosen = None
        shift_target = self.target_for(shift)
        while True:
            kk += 1
            try:
                bound = truncation_bound_coeffs(rep, self.s_ball(shift), kk,
                                                self.config.n0, self.order)
            except DomainError:
                bound = None
            if bound is not None and all(
                _UP.mul(b, self._colmax_up) <= shift_target for b in bound
            ):
                chosen = (kk, bound)
                break
            if kk > self.config.k_max:
                raise TruncationBudgetExceeded(
                    f"k-sum still above target after {self.config.k_max} terms")
            # binom(-s, kk) = binom(-s, kk-1) (-s - kk + 1) / kk
            binom = binom.mul(
                neg_s.sub(Jet.constant(CBall.exact(kk - 1), self.order), ctx), ctx
            ).scale_mpq(mpq(1, kk), ctx)
            f_next = self.f_value(shift + kk)
            agg = self.agg_matrix(kk)
            term = _exact_mat_times_jets(agg, f_next, ctx, self.order)
            term = [[jet.mul(binom, ctx) for jet in row] for row in term]
            ksum = term if ksum is None else _jet_mat_add(ksum, term, ctx)
        big_k, bound = chosen
        log.debug("G shift=%s: truncated k-sum at K=%s, bound=%.3g",
                  shift, big_k, float(bound[0]))
        q_jet = self.q_pow_jet(shift)
        if ksum is not None:
            ksum = [[jet.mul(q_jet, ctx) for jet in row] for row in ksum]
            out = _jet_mat_add(head, ksum, ctx)
        else:
            out = head
        colmax_scaled = [_UP.mul(b, self._colmax_up) for b in bound]
        return [[jet.add_error(colmax_scaled) for jet in row] for row in out]

    def f_value(self, shift: int):
        """F at s0 + shift + Z, via the whole-tail base case or the recursion."""
        cached = self.cache.get(shift)
        if cached is not None:
            return cached
        if shift > self.config.k_max:
            raise TruncationBudgetExceeded(
                f"shift recursion exceeded k_max = {self.config.k_max}")
        ctx = self.ctx
        re_s = self.s0.re.add(RBall.exact(shift), ctx)
        shift_target = self.target_for(shift)
        try:
            tb = tail_bound_coeffs(self.rep, re_s, self.config.n0, self.order)
        except DomainError:
            tb = None
        if tb is not None and all(
            _UP.mul(b, self._colmax_up) <= shift_target for b in tb
        ):
            scaled = [_UP.mul(b, self._colmax_up) for b in tb]
            zero = Jet.constant(CBall.zero(), self.order)
            out = [[zero.add_error(scaled) for _ in range(self.m)]
                   for _ in range(self.rep.d)]
            log.debug("F shift=%s: whole tail below target", shift)
            self.cache[shift] = out
            return out
        g = self.g_value(shift)
        out = self._solve(shift, g)
        self.cache[shift] = out
        return out

    def _solve(self, shift: int, g):
        """Solve (I - q^{-s} C) X = G over jets with certified pivots."""
        ctx = self.ctx
        d = self.rep.d
        q_jet = self.q_pow_jet(shift)
        c_mat = self.der.c
        rows = []
        for i in range(d):
            row = []
            for j in range(d):
                entry = q_jet.scale_mpq(-c_mat[i][j], ctx) if c_mat[i][j] else \
                    Jet.constant(CBall.zero(), self.order)
                if i == j:
                    entry = entry.add(Jet.constant(CBall.one(), self.order), ctx)
                row.append(entry)
            rows.append(row + list(g[i]))
        n_cols = d + self.m
        for col in range(d):
            piv = None
            piv_mag = _ZERO
            for i in range(col, d):
                c0 = rows[i][col].coeffs[0]
                if c0.excludes_zero():
                    mag = c0.abs_lower()
                    if piv is None or mag > piv_mag:
                        piv, piv_mag = i, mag
            if piv is None:
                raise NearPole(
                    f"no certifiable pivot in column {col} at shift {shift}; "
                    f"s may be too close to a pole for this precision")
            rows[col], rows[piv] = rows[piv], rows[col]
            pivot = rows[col][col]
            inv_rest = [rows[col][j].div(pivot, ctx) for j in range(col, n_cols)]
            for j in range(col, n_cols):
                rows[col][j] = inv_rest[j - col]
            for i in range(d):
                if i == col:
                    continue
                factor = rows[i][col]
                if all(c.contains_zero() and c.re.rad == 0 and c.im.rad == 0
                       for c in factor.coeffs):
                    continue
                for j in range(col, n_cols):
                    rows[i][j] = rows[i][j].sub(factor.mul(rows[col][j], ctx), ctx)
        return [[rows[i][d + j] for j in range(self.m)] for i in range(d)]

    # -- direct summation -----------------------------------------------------------

    def f_direct(self, shift: int = 0):
        """Direct summation up to the cut with a certified tail, at s0 + shift."""
        ctx = self.ctx
        re_s = self.s0.re.add(RBall.exact(shift), ctx)
        re_base = self.config.re_base
        if re_base is None:
            re_base = default_re_base(self.rep)
        if not float(re_s.lower()) > re_base:
            raise DomainError(
                f"direct summation needs Re s > re_base = {re_base:.3g}")
        cut = self.config.cut or max(10**5, self.config.n0)
        head = self.head_range(self.config.n0, cut, shift)
        tb = tail_bound_coeffs(self.rep, re_s, cut, self.order)
        scaled = [_UP.mul(b, self._colmax_up) for b in tb]
        return [[jet.add_error(scaled) for jet in row] for row in head]


def _exact_mat_times_jets(a, jets, ctx: Context, order: int):
    d = len(a)
    m = len(jets[0])
    out = []
    for i in range(d):
        row = []
        for j in range(m):
            acc = None
            for t in range(d):
                if a[i][t]:
                    term = jets[t][j].scale_mpq(a[i][t], ctx)
                    acc = term if acc is None else acc.add(term, ctx)
            row.append(acc if acc is not None
                       else Jet.constant(CBall.zero(), order))
        out.append(row)
    return out


def _jet_mat_add(a, b, ctx: Context):
    return [[x.add(y, ctx) for x, y in zip(ra, rb)] for ra, rb in zip(a, b)]


# ---------------------------------------------------------------------------
# Public operations
# ---------------------------------------------------------------------------


def make_session(rep: LinRep, s0: CBall, order: int, config: DirichletConfig,
                 cols=None, q_pow_s0: CBall | None = None) -> EvalSession:
    return EvalSession(rep, s0, order, config, cols=cols, q_pow_s0=q_pow_s0)


def eval_F(rep: LinRep, s0: CBall, config: DirichletConfig, *, order: int = 0,
           cols=None, session: EvalSession | None = None):
    """F_{n0}(s0 + Z) as a matrix of jets (order 0: plain ball values)."""
    session = session or make_session(rep, s0, order, config, cols)
    return session.f_value(0)


def eval_G(rep: LinRep, s0: CBall, config: DirichletConfig, *, order: int = 0,
           cols=None, session: EvalSession | None = None):
    session = session or make_session(rep, s0, order, config, cols)
    return session.g_value(0)


def eval_F_direct(rep: LinRep, s0: CBall, config: DirichletConfig, *,
                  order: int = 0, cols=None,
                  session: EvalSession | None = None):
    session = session or make_session(rep, s0, order, config, cols)
    return session.f_direct(0)


def eval_X(rep: LinRep, s0: CBall, config: DirichletConfig, *,
           order: int = 0) -> Jet:
    """The scalar Dirichlet series of the sequence: e (head + F_{n0}) v0.

    head = sum_{1 <= n < n0} n^{-s} f(n); the result is a jet at s0.
    """
    initial = tuple((x,) for x in rep.initial)
    session = make_session(rep, s0, order, config, cols=initial)
    head = session.head_range(1, config.n0, 0)
    tail = session.f_value(0)
    ctx = session.ctx
    total = _jet_mat_add(head, tail, ctx)
    acc = Jet.constant(CBall.zero(), order)
    for i in range(rep.d):
        if rep.left[i]:
            acc = acc.add(total[i][0].scale_mpq(rep.left[i], ctx), ctx)
    return acc
