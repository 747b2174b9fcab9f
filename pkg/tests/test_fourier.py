import math

import gmpy2
import pytest
from gmpy2 import mpfr, mpq

from regseq.ball import CBall, Context, RBall
from regseq.dirichlet import DirichletConfig
from regseq.fourier import (
    FourierTable,
    InconsistentFamily,
    PoleAtZero,
    fourier_eval,
    fourier_table,
    fourier_tables,
    laurent_X_at_pole,
    nonvanishing_report,
    symmetric_group,
)
from regseq.linrep import DerivedMatrices, Mode, make_linrep
from regseq.models import esthetic, pascal_rhombus, sum_of_digits
from regseq.spectral import eigen_certify
from conftest import contains_decimal

CFG96 = DirichletConfig(n0=256, precision_bits=96)


def dominant(rep, prec=96):
    return eigen_certify(DerivedMatrices.of(rep).c, prec)[0]


class TestLaurentAtPole:
    def test_delange_constant(self):
        rep = sum_of_digits(2)
        site, series = laurent_X_at_pole(rep, dominant(rep), 0, CFG96)
        assert site.det_valuation == 2 and site.max_pole_order == 2
        c = series.coeff(-2)
        ctx300 = gmpy2.context(precision=300)
        expected = ctx300.div(mpfr(1, 300),
                              ctx300.mul(mpfr(2, 300), ctx300.log(mpfr(2, 300))))
        assert abs(mpq(c.re.mid) - mpq(expected)) <= mpq(c.re.rad) + mpq(2) ** -290
        assert c.im.contains_zero()

    def test_delange_higher_harmonics_vanish(self):
        rep = sum_of_digits(2)
        _, series = laurent_X_at_pole(rep, dominant(rep), 1, CFG96)
        assert series.coeff(-2).contains_zero()
        assert float(series.coeff(-2).re.rad) < 1e-20

    def test_pascal_mean(self):
        rep = pascal_rhombus()
        _, series = laurent_X_at_pole(rep, dominant(rep), 0, CFG96)
        assert contains_decimal(series.coeff(-1), "0.6911615112341912755021246",
                                slack="1e-25")

    def test_pole_at_zero_rejected(self):
        # a contracting representation with eigenvalue 1 > R puts a pole at 0
        rep = make_linrep(2, [[["1/2"]], [["1/2"]]], [1], [1],
                          Mode.MATRIX_PRODUCT)
        datum = eigen_certify(DerivedMatrices.of(rep).c, 64)[0]
        assert datum.lam.contains_exact(1, 0)
        with pytest.raises(PoleAtZero):
            laurent_X_at_pole(rep, datum, 0, DirichletConfig(n0=64,
                                                             precision_bits=64))


class TestFourierTable:
    def test_pascal_ell_one(self):
        rep = pascal_rhombus()
        table = fourier_table(rep, dominant(rep), 0, 1, CFG96)
        assert contains_decimal(table.coeffs[1],
                                "-0.01079216311240407872950510",
                                "-0.0023421761940286789685827", slack="1e-25")
        # conjugate index filled by symmetry
        assert table.coeffs[-1].im.mid == table.coeffs[1].conj().im.mid

    def test_zero_sequence_all_contains_zero(self):
        rep = make_linrep(2, [[[1, 0], [0, 1]], [[1, 1], [0, 1]]],
                          [0, 0], [0, 1], Mode.MATRIX_PRODUCT)
        datum = eigen_certify(DerivedMatrices.of(rep).c, 64)[0]
        cfg = DirichletConfig(n0=64, precision_bits=64)
        tables = fourier_tables(rep, datum, 1, cfg)
        for t in tables.values():
            for c in t.coeffs.values():
                assert c.contains_zero()
                assert float(c.re.rad) < 1e-10

    def test_conjugate_symmetry_honest(self):
        rep = sum_of_digits(2)
        cfg = DirichletConfig(n0=64, precision_bits=64)
        datum = eigen_certify(DerivedMatrices.of(rep).c, 64)[0]
        table = fourier_table(rep, datum, 0, 2, cfg, conjugate_symmetry=False)
        for ell in (1, 2):
            assert table.coeffs[-ell].intersects(table.coeffs[ell].conj())

    def test_precision_refinement(self):
        rep = sum_of_digits(2)
        c64 = fourier_table(rep, dominant(rep, 64), 1, 0,
                            DirichletConfig(n0=128, precision_bits=64)).coeffs[0]
        c128 = fourier_table(rep, dominant(rep, 128), 1, 0,
                             DirichletConfig(n0=128, precision_bits=128)).coeffs[0]
        # the refined ball lies inside the coarse ball inflated by its radius
        inflated = CBall(RBall(c64.re.mid, c64.re.rad + c64.re.rad),
                         RBall(c64.im.mid, c64.im.rad + c64.im.rad))
        assert c128.contained_in(inflated)

    def test_k_range_checked(self):
        rep = sum_of_digits(2)
        with pytest.raises(ValueError):
            fourier_table(rep, dominant(rep, 64), 5, 1,
                          DirichletConfig(n0=64, precision_bits=64))


class TestSymmetricGroup:
    def test_p1_identity(self, ctx64):
        t = FourierTable(lam=CBall.exact(2), k=0, coeffs={0: CBall.one()})
        assert symmetric_group([t], CBall.exact(2), 0, 1, ctx64) is t

    def test_esthetic_q4_regroup(self):
        rep = esthetic(4)
        cfg = DirichletConfig(n0=256, precision_bits=96)
        data = eigen_certify(DerivedMatrices.of(rep).c, 96)
        pos = next(d for d in data if d.is_real and d.lam.re.lower() > 0
                   and float(d.lam.re.mid) > 1.5)
        neg = next(d for d in data if d.is_real and d.lam.re.upper() < 0
                   and float(d.lam.re.mid) < -1.5)
        ctx = Context.get(96)
        t_pos = fourier_table(rep, pos, 0, 2, cfg)
        t_neg = fourier_table(rep, neg, 0, 2, cfg)
        grouped = symmetric_group([t_pos, t_neg], pos.lam, 0, 2, ctx)
        assert grouped.period == 2
        assert contains_decimal(grouped.coeffs[0], "4.886821584515",
                                slack="1e-12")
        # odd regrouped indices come from the negated eigenvalue and vanish
        # for even q (the fluctuation is in fact 1-periodic)
        assert grouped.coeffs[1].contains_zero()
        assert contains_decimal(grouped.coeffs[2], "0.036565359077",
                                "-0.012421753685", slack="1e-11")

    def test_inconsistent_family(self, ctx64):
        t = FourierTable(lam=CBall.exact(2), k=0, coeffs={0: CBall.one()})
        with pytest.raises(InconsistentFamily):
            symmetric_group([t, t], CBall.exact(2), 0, 2, ctx64)
        # the rotation -2 has no matching table above: the same single table
        # twice still lacks a ball intersecting -2


class TestEvalAndReport:
    def test_constant_table(self, ctx64):
        t = FourierTable(lam=CBall.exact(2), k=0,
                         coeffs={0: CBall.exact(3)})
        v = fourier_eval(t, 0.37, 0, ctx64)
        assert v.contains_exact(3, 0)

    def test_real_series_at_real_point(self):
        rep = sum_of_digits(2)
        table = fourier_table(rep, dominant(rep, 64), 0, 2,
                              DirichletConfig(n0=64, precision_bits=64))
        ctx = Context.get(64)
        v = fourier_eval(table, 0.3, 2, ctx)
        assert v.im.contains_zero()

    def test_degree_beyond_range(self, ctx64):
        t = FourierTable(lam=CBall.exact(2), k=0, coeffs={0: CBall.one()})
        with pytest.raises(ValueError):
            fourier_eval(t, 0.0, 3, ctx64)

    def test_nonvanishing_report(self):
        rep = pascal_rhombus()
        table = fourier_table(rep, dominant(rep, 64), 0, 1,
                              DirichletConfig(n0=64, precision_bits=64))
        rpt = nonvanishing_report(table)
        assert rpt[0] == "nonzero"
        zero_table = FourierTable(lam=CBall.exact(2), k=0,
                                  coeffs={0: CBall.zero()})
        assert nonvanishing_report(zero_table)[0] == "contains_zero"
