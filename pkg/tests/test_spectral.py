import random

import pytest
from gmpy2 import mpq

from regseq.ball import Context, RBall
from regseq.exact import charpoly, identity, mat, mat_mul, poly_eval, inverse
from regseq.linrep import DerivedMatrices, Mode, make_linrep
from regseq.models import esthetic, pascal_rhombus, stern_brocot, sum_of_digits
from regseq.spectral import (
    EigenDatum,
    GapUnresolvable,
    eigen_certify,
    jordan_block_size,
    jsr_bounds,
    sanity_eigen_vs_jsr,
)
from regseq.spectral import _poly_eval_ball


def c_of(rep):
    return DerivedMatrices.of(rep).c


class TestEigenCertify:
    def test_sum_of_digits_jordan_block(self):
        data = eigen_certify(c_of(sum_of_digits(2)), 128)
        assert len(data) == 1
        d = data[0]
        assert d.lam.contains_exact(2, 0)
        assert d.alg_mult == 2 and d.jordan_m == 2
        assert d.is_real and d.real_value == 2

    def test_pascal_spectrum(self):
        data = eigen_certify(c_of(pascal_rhombus()), 128)
        assert len(data) == 5
        assert all(d.alg_mult == 1 and d.jordan_m == 1 for d in data)
        mods = sorted(float(d.lam.re.mid) for d in data)
        # lambda_1 = (3 + sqrt 17)/2 = 3.5615528128088...
        assert abs(mods[-1] - 3.5615528128088) < 1e-12
        rationals = {d.real_value for d in data if d.real_value is not None}
        assert {mpq(2), mpq(-2), mpq(-1)} <= rationals
        # (3 +- sqrt 17)/2 are the roots of x^2 - 3x - 2
        for d in data:
            if d.real_value is None:
                x = mpq(d.lam.re.mid)
                assert abs(x * x - 3 * x - 2) < mpq(1, 10**30)

    def test_esthetic_q5_zero_block(self):
        # q = 1 mod 4: eigenvalue 0 with algebraic multiplicity 2 and a
        # 2-block (geometric multiplicity 1)
        data = eigen_certify(c_of(esthetic(5)), 128)
        zero = next(d for d in data if d.lam.contains_exact(0, 0))
        assert zero.alg_mult == 2 and zero.jordan_m == 2

    def test_esthetic_q7_zero_diagonal(self):
        # q = 3 mod 4: eigenvalue 0 has equal multiplicities (two 1-blocks)
        data = eigen_certify(c_of(esthetic(7)), 128)
        zero = next(d for d in data if d.lam.contains_exact(0, 0))
        assert zero.alg_mult == 2 and zero.jordan_m == 1

    def test_multiplicity_conservation_and_charpoly_containment(self):
        for rep in (sum_of_digits(2), pascal_rhombus(), esthetic(4), stern_brocot()):
            c = c_of(rep)
            data = eigen_certify(c, 96)
            assert sum(d.alg_mult for d in data) == rep.d
            p = charpoly(c)
            ctx = Context.get(96)
            for d in data:
                assert _poly_eval_ball(p, d.lam, ctx).contains_zero()
                assert d.is_unit_distance_certified


class TestJordanBlockSize:
    def test_identity(self):
        assert jordan_block_size(identity(3), mpq(1), 3) == 1

    def test_jordan_block(self):
        assert jordan_block_size(mat([[2, 1], [0, 2]]), mpq(2), 2) == 2

    def test_planted_jordan_forms(self):
        # conjugate planted Jordan structures by unimodular matrices and
        # recover the block sizes
        random.seed(9)
        cases = [
            ([[3, 1, 0], [0, 3, 0], [0, 0, 3]], mpq(3), 3, 2),
            ([[3, 1, 0], [0, 3, 1], [0, 0, 3]], mpq(3), 3, 3),
            ([[5, 0, 0], [0, 5, 0], [0, 0, 2]], mpq(5), 2, 1),
        ]
        for j, lam, mult, size in cases:
            for _ in range(4):
                u = [[1 if a == b else 0 for b in range(3)] for a in range(3)]
                for _k in range(4):
                    a, b = random.sample(range(3), 2)
                    f = random.randint(-2, 2)
                    for col in range(3):
                        u[a][col] += f * u[b][col]
                m = mat_mul(mat_mul(mat(u), mat(j)), inverse(mat(u)))
                assert jordan_block_size(m, lam, mult) == size


class TestJsr:
    def test_pascal(self):
        b = jsr_bounds(pascal_rhombus(), ell_max=6)
        assert b.r_value.contains_exact(2)
        assert b.finiteness_witness is not None
        assert len(b.finiteness_witness) == 1
        # rho_1 = 2 in the row-sum norm
        assert b.rho_ell[0][1].contains_exact(2)

    @pytest.mark.parametrize("q", [2, 3, 4, 5])
    def test_esthetic(self, q):
        b = jsr_bounds(esthetic(q), ell_max=6)
        assert b.r_value.contains_exact(1)
        assert b.finiteness_witness is not None

    def test_sum_of_digits_non_finiteness(self):
        b = jsr_bounds(sum_of_digits(2), ell_max=6)
        assert b.r_value.contains_exact(1)
        assert b.finiteness_witness is None
        assert "finiteness" in b.note
        # rho_l = (1 + l)^{1/l} in the row-sum norm
        for ell, nu in b.rho_ell_pow:
            assert nu == 1 + ell

    def test_rho_ell_fekete_and_lower_bound(self):
        for rep in (pascal_rhombus(), esthetic(4), stern_brocot()):
            b = jsr_bounds(rep, ell_max=6)
            values = [float(x[1].mid) for x in b.rho_ell]
            for i in range(1, len(values)):
                assert values[i] <= min(values[:i]) * 1.0001 or \
                    values[i] <= values[i - 1] * 1.0001
            assert float(b.rho_lower.lower()) <= min(
                float(x[1].upper()) for x in b.rho_ell) * 1.0001

    def test_sanity_eigen_vs_jsr(self):
        for rep in (pascal_rhombus(), esthetic(4), sum_of_digits(2)):
            data = eigen_certify(c_of(rep), 64)
            bounds = jsr_bounds(rep, ell_max=4, eigen_data=data)
            report = sanity_eigen_vs_jsr(data, bounds, rep.q)
            assert report["ok"]

    def test_sanity_random_reps(self):
        random.seed(77)
        for _ in range(5):
            q = 2
            d = random.randint(1, 3)
            mats = [[[random.randint(0, 2) for _ in range(d)] for _ in range(d)]
                    for _ in range(q)]
            rep = make_linrep(q, mats, [1] + [0] * (d - 1),
                              [1] * d, Mode.MATRIX_PRODUCT)
            data = eigen_certify(c_of(rep), 64)
            bounds = jsr_bounds(rep, ell_max=4, eigen_data=data)
            assert sanity_eigen_vs_jsr(data, bounds, q)["ok"]

    def test_override_honored(self):
        b = jsr_bounds(stern_brocot(), ell_max=3, override_r=mpq(7, 4))
        assert b.r_value.contains_exact(mpq(7, 4))
        assert "overridden" in b.note
