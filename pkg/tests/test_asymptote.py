import math

import pytest
from gmpy2 import mpq

from regseq.asymptote import (
    UnsupportedConstants,
    empirical_sample,
    expansion,
    full_report,
    holder_bound,
)
from regseq.ball import Context
from regseq.dirichlet import DirichletConfig
from regseq.fourier import fourier_eval
from regseq.linrep import DerivedMatrices, Mode, make_linrep
from regseq.models import esthetic, pascal_rhombus, stern_brocot, sum_of_digits
from regseq.spectral import eigen_certify, jsr_bounds
from conftest import contains_decimal

CFG = DirichletConfig(n0=64, precision_bits=64)


def spectral_pair(rep, prec=64, ell_max=4):
    data = eigen_certify(DerivedMatrices.of(rep).c, prec)
    return data, jsr_bounds(rep, ell_max=ell_max, eigen_data=data, precision=prec)


class TestExpansion:
    def test_sum_of_digits_shape(self):
        rep = sum_of_digits(2)
        data, jsr = spectral_pair(rep)
        exp = expansion(rep, data, jsr, CFG)
        assert [(float(t.exponent.re.mid), t.k) for t in exp.terms] == \
            [(1.0, 1), (1.0, 0)]
        assert exp.error_omitted

    def test_pascal_shape(self):
        rep = pascal_rhombus()
        data, jsr = spectral_pair(rep)
        exp = expansion(rep, data, jsr, CFG)
        # single dominant eigenvalue above R = 2, error O(N (log N)^1)
        assert len(exp.terms) == 1
        assert contains_decimal_r(exp.terms[0].exponent.re, "1.83250638358045",
                                  1e-13)
        assert not exp.error_omitted
        assert float(exp.error_exponent.mid) == pytest.approx(1.0, abs=1e-12)
        assert exp.error_log_power == 1

    def test_esthetic_q4_exponent(self):
        rep = esthetic(4)
        data, jsr = spectral_pair(rep)
        exp = expansion(rep, data, jsr, CFG)
        # exponent log_4(sqrt 5 + 1) - 1/2 = 0.3471...
        target = math.log(math.sqrt(5) + 1, 4) - 0.5
        tops = [t for t in exp.terms
                if abs(float(t.exponent.re.mid) - target) < 1e-12]
        assert tops
        assert exp.constants is not None and exp.constants["theta"] == 0

    @pytest.mark.parametrize("q", [2, 5])
    def test_unsupported_constants(self, q):
        # q = 2 and q = 5 put the eigenvalue 1 into the spectrum (q+1 = 0 mod 3)
        rep = esthetic(q)
        data, jsr = spectral_pair(rep)
        with pytest.raises(UnsupportedConstants):
            expansion(rep, data, jsr, CFG)

    def test_completeness(self):
        for rep in (pascal_rhombus(), esthetic(4), sum_of_digits(2)):
            data, jsr = spectral_pair(rep)
            exp = expansion(rep, data, jsr, CFG)
            ctx = Context.get(64)
            term_ids = {id(t.datum) for t in exp.terms}
            for d in data:
                in_terms = id(d) in term_ids
                assert in_terms or not exp.error_omitted


def contains_decimal_r(ball, s, slack):
    from fractions import Fraction

    return abs(mpq(ball.mid) - mpq(Fraction(s))) <= mpq(ball.rad) + mpq(Fraction(str(slack)))


class TestHolder:
    def test_pascal_dominant(self):
        rep = pascal_rhombus()
        data, jsr = spectral_pair(rep)
        ctx = Context.get(64)
        hb = holder_bound(data[0], jsr, rep.q, ctx)
        assert contains_decimal_r(hb, "0.83250638358045", 1e-12)

    def test_sum_of_digits(self):
        rep = sum_of_digits(2)
        data, jsr = spectral_pair(rep)
        hb = holder_bound(data[0], jsr, rep.q, Context.get(64))
        assert hb.contains_exact(1)

    def test_boundary_lambda_q_r(self):
        # lambda = q R means the bound is exactly 1
        rep = sum_of_digits(2)  # lambda = 2 = 2 * 1 = q R
        data, jsr = spectral_pair(rep)
        hb = holder_bound(data[0], jsr, rep.q, Context.get(64))
        assert hb.contains_exact(1)


class TestEmpirical:
    def test_constant_sequence(self):
        rep = make_linrep(2, [[[1]], [[1]]], [1], [1], Mode.SEQUENCE)
        data, jsr = spectral_pair(rep, ell_max=3)
        exp = expansion(rep, data, jsr, CFG)
        term = exp.terms[0]
        samples = empirical_sample(rep, term, [0.0, 0.25, 0.5], 10, CFG)
        for s in samples:
            assert s.x_exact == s.n  # X(N) = N exactly
            assert abs(s.value - 1.0) < 1e-12

    def test_sum_of_digits_dual_route(self):
        # (X(N) - N log N phi_210) / N compared against the series of Phi_20
        rep = sum_of_digits(2)
        rpt = full_report(rep, DirichletConfig(n0=64, precision_bits=64),
                          ell_max=120)
        t_k1 = next(t for t in rpt.expansion.terms if t.k == 1)
        t_k0 = next(t for t in rpt.expansion.terms if t.k == 0)
        samples = empirical_sample(rep, t_k0, [0.0], 20, CFG,
                                   higher_terms=[t_k1])
        ctx = Context.get(64)
        series = fourier_eval(t_k0.fluctuation, samples[0].u + 0.0, 120, ctx)
        # the empirical argument is log_2 N = 20 + tiny; u = 0 on the grid
        assert abs(samples[0].value.real - float(series.re.mid)) < 1e-3

    def test_dual_route_converges_in_j(self):
        rep = pascal_rhombus()
        rpt = full_report(rep, DirichletConfig(n0=64, precision_bits=64),
                          ell_max=60)
        term = rpt.expansion.terms[0]
        ctx = Context.get(64)
        grid = [i / 16 for i in range(16)]

        def maxdiff(j):
            samples = empirical_sample(rep, term, grid, j, CFG)
            worst = 0.0
            for s in samples:
                ln = math.log(s.n, 2)
                series = fourier_eval(term.fluctuation, ln, 60, ctx)
                worst = max(worst, abs(s.value -
                                       complex(float(series.re.mid),
                                               float(series.im.mid))))
            return worst

        d12, d20 = maxdiff(12), maxdiff(20)
        assert d20 <= 2 * d12
        assert d20 < 0.02
