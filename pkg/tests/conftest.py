import pytest

from gmpy2 import mpq

from regseq.ball import Context


@pytest.fixture(scope="session")
def ctx64():
    return Context.get(64)


@pytest.fixture(scope="session")
def ctx128():
    return Context.get(128)


def contains_decimal(ball, re_str: str, im_str: str = "0", slack="0") -> bool:
    """Exact containment of decimal-string values, with optional slack for
    values only printed to finitely many digits."""
    from fractions import Fraction

    sl = mpq(Fraction(str(slack)))
    dre = abs(mpq(ball.re.mid) - mpq(Fraction(re_str)))
    dim = abs(mpq(ball.im.mid) - mpq(Fraction(im_str)))
    return dre <= mpq(ball.re.rad) + sl and dim <= mpq(ball.im.rad) + sl
