"""Rigorous midpoint-radius arithmetic: real and complex balls, jets, Laurent series.

A real ball ``m +/- r`` represents the interval ``[m - r, m + r]``; a complex
ball is a rectangle (real ball for the real part times real ball for the
imaginary part).  Every operation returns a ball that provably contains the
exact image of its input sets: midpoints are computed in round-to-nearest
MPFR arithmetic (via gmpy2) at the working precision, radii are propagated
with low-precision upward-rounded arithmetic plus a per-operation rounding
allowance of two units in the last place of the midpoint.

Jets are truncated power series with complex-ball coefficients; a Laurent
series is a jet together with an exactly known (declared) valuation shift.
Only the elementary functions actually needed downstream are provided:
exp/log/pow on balls, exp of affine jets, and the falling-product binomial
``binom(-s, k)``.
"""

from __future__ import annotations

import gmpy2
from gmpy2 import mpfr, mpq, mpz

__all__ = [
    "BallError",
    "DivisorContainsZero",
    "BranchCut",
    "LeadingCoefficientContainsZero",
    "ValuationNotCertified",
    "Context",
    "RBall",
    "CBall",
    "Jet",
    "LaurentSeries",
    "ball_add",
    "ball_sub",
    "ball_mul",
    "ball_div",
    "ball_exp",
    "ball_log",
    "ball_pow",
    "jet_mul",
    "jet_div",
    "laurent_div",
    "binom_neg_s",
    "dyadic_to_decimal",
]


class BallError(ArithmeticError):
    """Base class for certification failures in ball arithmetic."""


class DivisorContainsZero(BallError):
    """The divisor's ball (rectangle) contains zero."""


class BranchCut(BallError):
    """The argument ball meets the branch cut (-inf, 0] of the principal log."""


class LeadingCoefficientContainsZero(BallError):
    """Jet division needs the divisor's Z^0 coefficient to exclude zero."""


class ValuationNotCertified(BallError):
    """A declared valuation is inconsistent with the coefficient balls."""


# Radius bookkeeping never needs more than a few digits; upward rounding at
# low precision only overestimates, which is sound.
_RAD_PREC = 40
_UP = gmpy2.context(precision=_RAD_PREC, round=gmpy2.RoundUp)
_DOWN = gmpy2.context(precision=_RAD_PREC, round=gmpy2.RoundDown)
_ZERO = mpfr(0)

# Bare arithmetic operators on mpfr values round to the *thread* context
# (53 bits by default), so negation must go through a context wide enough
# to be exact for the operand.
_NEG_CTX: dict[int, "gmpy2.context"] = {}


def _neg(x: mpfr) -> mpfr:
    p = x.precision
    c = _NEG_CTX.get(p)
    if c is None:
        c = gmpy2.context(precision=p)
        _NEG_CTX[p] = c
    return c.minus(x)


class Context:
    """Working precision bundle: round-to-nearest midpoint context and slack.

    ``eps`` is ``2^(1-prec)``, an upper bound for two units in the last place
    relative to any round-to-nearest result at this precision; MPFR operations
    are correctly rounded, so adding ``|mid| * eps`` to the radius after each
    midpoint operation covers the rounding error with room to spare.
    """

    __slots__ = ("prec", "mid", "eps", "_pi")
    _cache: dict[int, "Context"] = {}

    def __init__(self, prec: int):
        if prec < 8:
            raise ValueError("precision must be at least 8 bits")
        self.prec = prec
        self.mid = gmpy2.context(precision=prec)
        self.eps = mpfr(2) ** (1 - prec)
        self._pi = None

    @classmethod
    def get(cls, prec: int) -> "Context":
        ctx = cls._cache.get(prec)
        if ctx is None:
            ctx = cls(prec)
            cls._cache[prec] = ctx
        return ctx

    def pi(self) -> "RBall":
        if self._pi is None:
            m = self.mid.const_pi()
            self._pi = RBall(m, _UP.mul(_UP.abs(m), self.eps))
        return self._pi


def _rad(x) -> mpfr:
    """Coerce a nonnegative quantity to an upward-rounded radius value."""
    r = _UP.add(_ZERO, x)
    if r < 0:
        raise ValueError("negative radius")
    return r


class RBall:
    """Real ball ``mid +/- rad`` with outward rounding on every operation."""

    __slots__ = ("mid", "rad")

    def __init__(self, mid: mpfr, rad: mpfr = _ZERO):
        self.mid = mid
        self.rad = rad

    # -- constructors -------------------------------------------------------

    @staticmethod
    def exact(x) -> "RBall":
        """Ball of radius zero around an exactly representable value."""
        if isinstance(x, mpfr):
            return RBall(x, _ZERO)
        if isinstance(x, float):
            return RBall(mpfr(x, 60), _ZERO)
        x = int(x)
        m = mpfr(x, max(x.bit_length() + 8, 24))
        if mpq(m) != x:
            raise ValueError(f"{x} is not exactly representable; use from_mpq")
        return RBall(m, _ZERO)

    @staticmethod
    def from_mpq(x, ctx: Context) -> "RBall":
        """Round a rational into a ball at the context precision."""
        x = mpq(x)
        m = ctx.mid.add(_ZERO, x)
        err = abs(mpq(m) - x)
        return RBall(m, _UP.add(_ZERO, err) if err else _ZERO)

    @staticmethod
    def from_endpoints(lo: mpfr, hi: mpfr, ctx: Context) -> "RBall":
        """Ball covering the interval [lo, hi]."""
        if lo > hi:
            raise ValueError("empty interval")
        m = ctx.mid.div(ctx.mid.add(lo, hi), 2)
        r = _UP.add(max(_UP.sub(hi, m), _UP.sub(m, lo)), _UP.mul(_UP.abs(m), ctx.eps))
        return RBall(m, r)

    @staticmethod
    def zero() -> "RBall":
        return RBall(_ZERO, _ZERO)

    # -- bounds and predicates ----------------------------------------------

    def upper(self) -> mpfr:
        return _UP.add(self.mid, self.rad)

    def lower(self) -> mpfr:
        return _DOWN.sub(self.mid, self.rad)

    def mag(self) -> mpfr:
        """Upper bound for the absolute value over the ball."""
        return _UP.add(_UP.abs(self.mid), self.rad)

    def mig(self) -> mpfr:
        """Lower bound for the absolute value over the ball (0 if it contains 0)."""
        lo = _DOWN.sub(_DOWN.abs(self.mid), self.rad)
        return lo if lo > 0 else _ZERO

    def contains_zero(self) -> bool:
        # mpfr comparisons are exact; the 40-bit radius negates exactly at 53
        return -self.rad <= self.mid <= self.rad

    def excludes_zero(self) -> bool:
        return not self.contains_zero()

    def contains_exact(self, x) -> bool:
        """Exact containment test for a rational/integer/mpfr value."""
        return abs(mpq(self.mid) - mpq(x)) <= mpq(self.rad)

    def intersects(self, other: "RBall") -> bool:
        return abs(mpq(self.mid) - mpq(other.mid)) <= mpq(self.rad) + mpq(other.rad)

    def contained_in(self, other: "RBall") -> bool:
        return abs(mpq(self.mid) - mpq(other.mid)) + mpq(self.rad) <= mpq(other.rad)

    # -- arithmetic ----------------------------------------------------------

    def neg(self) -> "RBall":
        return RBall(_neg(self.mid), self.rad)

    def add(self, other: "RBall", ctx: Context) -> "RBall":
        m = ctx.mid.add(self.mid, other.mid)
        r = _UP.add(_UP.add(self.rad, other.rad), _UP.mul(_UP.abs(m), ctx.eps))
        return RBall(m, r)

    def sub(self, other: "RBall", ctx: Context) -> "RBall":
        m = ctx.mid.sub(self.mid, other.mid)
        r = _UP.add(_UP.add(self.rad, other.rad), _UP.mul(_UP.abs(m), ctx.eps))
        return RBall(m, r)

    def mul(self, other: "RBall", ctx: Context) -> "RBall":
        m = ctx.mid.mul(self.mid, other.mid)
        # |a| rb + ra |b| + ra rb  <=  (|a| + ra) rb + ra |b|
        r = _UP.add(
            _UP.add(_UP.mul(self.mag(), other.rad),
                    _UP.mul(self.rad, _UP.abs(other.mid))),
            _UP.mul(_UP.abs(m), ctx.eps),
        )
        return RBall(m, r)

    def scale_int(self, n: int, ctx: Context) -> "RBall":
        m = ctx.mid.mul(self.mid, n)
        r = _UP.add(_UP.mul(self.rad, abs(n)) if n else _ZERO,
                    _UP.mul(_UP.abs(m), ctx.eps))
        return RBall(m, r)

    def scale_mpq(self, q, ctx: Context) -> "RBall":
        m = ctx.mid.mul(self.mid, q)
        r = _UP.add(_UP.mul(self.rad, abs(mpq(q))), _UP.mul(_UP.abs(m), ctx.eps))
        return RBall(m, r)

    def sqr(self, ctx: Context) -> "RBall":
        """Square without the x*x dependency loss: sup |x^2 - m^2| = 2|m|r + r^2."""
        m = ctx.mid.mul(self.mid, self.mid)
        r = _UP.mul(_UP.abs(m), ctx.eps)
        if self.rad:
            spread = _UP.mul(self.rad,
                             _UP.add(_UP.mul(mpfr(2), _UP.abs(self.mid)), self.rad))
            r = _UP.add(r, spread)
        return RBall(m, r)

    def recip(self, ctx: Context) -> "RBall":
        lo = self.mig()
        if lo <= 0:
            raise DivisorContainsZero("real ball contains zero")
        m = ctx.mid.div(1, self.mid)
        # sup |1/x - 1/mid| over the ball is rad / (|mid| * (|mid| - rad))
        den = _DOWN.mul(_DOWN.abs(self.mid),
                        _DOWN.sub(_DOWN.abs(self.mid), self.rad))
        r = _UP.add(_UP.div(self.rad, den) if self.rad else _ZERO,
                    _UP.mul(_UP.abs(m), ctx.eps))
        return RBall(m, r)

    def div(self, other: "RBall", ctx: Context) -> "RBall":
        return self.mul(other.recip(ctx), ctx)

    # -- elementary functions -------------------------------------------------

    def exp(self, ctx: Context) -> "RBall":
        m = ctx.mid.exp(self.mid)
        r = _UP.mul(_UP.abs(m), ctx.eps)
        if self.rad:
            # first-derivative bound: sup exp over the ball times the radius
            r = _UP.add(r, _UP.mul(_UP.exp(self.upper()), self.rad))
        return RBall(m, r)

    def log(self, ctx: Context) -> "RBall":
        lo = self.lower()
        if lo <= 0:
            raise BranchCut("real log needs a ball strictly right of zero")
        m = ctx.mid.log(self.mid)
        r = _UP.mul(_UP.abs(m), ctx.eps)
        if self.rad:
            r = _UP.add(r, _UP.div(self.rad, lo))
        return RBall(m, r)

    def cos(self, ctx: Context) -> "RBall":
        m = ctx.mid.cos(self.mid)
        return RBall(m, _UP.add(self.rad, _UP.mul(_UP.abs(m), ctx.eps)))

    def sin(self, ctx: Context) -> "RBall":
        m = ctx.mid.sin(self.mid)
        return RBall(m, _UP.add(self.rad, _UP.mul(_UP.abs(m), ctx.eps)))

    def sqrt(self, ctx: Context) -> "RBall":
        lo = self.lower()
        if lo < 0:
            raise BranchCut("sqrt needs a nonnegative ball")
        m = ctx.mid.sqrt(self.mid)
        r = _UP.mul(_UP.abs(m), ctx.eps)
        if self.rad:
            if lo == 0:
                # |sqrt x - sqrt y| <= sqrt |x - y|
                r = _UP.add(r, _UP.sqrt(self.rad))
            else:
                r = _UP.add(r, _UP.div(self.rad, _DOWN.mul(mpfr(2), _DOWN.sqrt(lo))))
        return RBall(m, r)

    def __repr__(self):
        return f"RBall({self.mid!r} +/- {self.rad!r})"


class CBall:
    """Complex ball: rectangle re x im of two real balls."""

    __slots__ = ("re", "im")

    def __init__(self, re: RBall, im: RBall | None = None):
        self.re = re
        self.im = im if im is not None else RBall.zero()

    @staticmethod
    def exact(re, im=0) -> "CBall":
        return CBall(RBall.exact(re), RBall.exact(im))

    @staticmethod
    def from_mpq(re, im, ctx: Context) -> "CBall":
        return CBall(RBall.from_mpq(re, ctx), RBall.from_mpq(im, ctx))

    @staticmethod
    def zero() -> "CBall":
        return CBall(RBall.zero(), RBall.zero())

    @staticmethod
    def one() -> "CBall":
        return CBall(RBall.exact(1), RBall.zero())

    # -- predicates -----------------------------------------------------------

    def contains_zero(self) -> bool:
        return self.re.contains_zero() and self.im.contains_zero()

    def excludes_zero(self) -> bool:
        return not self.contains_zero()

    def contains_exact(self, re, im=0) -> bool:
        return self.re.contains_exact(re) and self.im.contains_exact(im)

    def intersects(self, other: "CBall") -> bool:
        return self.re.intersects(other.re) and self.im.intersects(other.im)

    def contained_in(self, other: "CBall") -> bool:
        return self.re.contained_in(other.re) and self.im.contained_in(other.im)

    def abs_upper(self) -> mpfr:
        return _UP.hypot(self.re.mag(), self.im.mag())

    def abs_lower(self) -> mpfr:
        return _DOWN.hypot(self.re.mig(), self.im.mig())

    def rad_upper(self) -> mpfr:
        """Upper bound for the distance of any point of the ball to the midpoint."""
        return _UP.add(self.re.rad, self.im.rad)

    # -- arithmetic -----------------------------------------------------------

    def conj(self) -> "CBall":
        return CBall(self.re, self.im.neg())

    def neg(self) -> "CBall":
        return CBall(self.re.neg(), self.im.neg())

    def add(self, other: "CBall", ctx: Context) -> "CBall":
        return CBall(self.re.add(other.re, ctx), self.im.add(other.im, ctx))

    def sub(self, other: "CBall", ctx: Context) -> "CBall":
        return CBall(self.re.sub(other.re, ctx), self.im.sub(other.im, ctx))

    def mul(self, other: "CBall", ctx: Context) -> "CBall":
        a, b, c, d = self.re, self.im, other.re, other.im
        return CBall(
            a.mul(c, ctx).sub(b.mul(d, ctx), ctx),
            a.mul(d, ctx).add(b.mul(c, ctx), ctx),
        )

    def mul_real(self, other: RBall, ctx: Context) -> "CBall":
        return CBall(self.re.mul(other, ctx), self.im.mul(other, ctx))

    def scale_int(self, n: int, ctx: Context) -> "CBall":
        return CBall(self.re.scale_int(n, ctx), self.im.scale_int(n, ctx))

    def scale_mpq(self, q, ctx: Context) -> "CBall":
        return CBall(self.re.scale_mpq(q, ctx), self.im.scale_mpq(q, ctx))

    def recip(self, ctx: Context) -> "CBall":
        if self.abs_lower() <= 0:
            raise DivisorContainsZero("complex ball contains zero")
        den = self.re.sqr(ctx).add(self.im.sqr(ctx), ctx)
        inv = den.recip(ctx)
        return CBall(self.re.mul(inv, ctx), self.im.neg().mul(inv, ctx))

    def div(self, other: "CBall", ctx: Context) -> "CBall":
        return self.mul(other.recip(ctx), ctx)

    # -- elementary functions ---------------------------------------------------

    def exp(self, ctx: Context) -> "CBall":
        e = self.re.exp(ctx)
        return CBall(e.mul(self.im.cos(ctx), ctx), e.mul(self.im.sin(ctx), ctx))

    def log(self, ctx: Context) -> "CBall":
        """Principal branch; the rectangle must not meet (-inf, 0]."""
        if self.im.contains_zero() and self.re.lower() <= 0:
            raise BranchCut("ball meets the branch cut (-inf, 0]")
        # |z| as a real ball around hypot of the midpoints
        h = ctx.mid.sqrt(ctx.mid.fma(self.re.mid, self.re.mid,
                                     ctx.mid.mul(self.im.mid, self.im.mid)))
        lo = self.abs_lower()
        absz = RBall(h, _UP.add(self.rad_upper(), _UP.mul(_UP.abs(h), ctx.eps)))
        a = ctx.mid.atan2(self.im.mid, self.re.mid)
        arad = _UP.add(_UP.div(self.rad_upper(), lo) if self.rad_upper() else _ZERO,
                       _UP.mul(_UP.add(_UP.abs(a), mpfr(1)), ctx.eps))
        return CBall(absz.log(ctx), RBall(a, arad))

    def pow(self, other: "CBall", ctx: Context) -> "CBall":
        return self.log(ctx).mul(other, ctx).exp(ctx)

    def __repr__(self):
        return f"CBall({self.re!r}, {self.im!r})"

    # -- serialization ------------------------------------------------------------

    def to_json(self) -> dict:
        """Exact decimal serialization; the single radius covers both components."""
        r = self.re.rad if self.re.rad >= self.im.rad else self.im.rad
        return {
            "mid_re": dyadic_to_decimal(self.re.mid),
            "mid_im": dyadic_to_decimal(self.im.mid),
            "rad": dyadic_to_decimal(r),
        }

    @staticmethod
    def from_json(obj: dict, ctx: Context) -> "CBall":
        re = _decimal_to_rball(obj["mid_re"], obj["rad"], ctx)
        im = _decimal_to_rball(obj["mid_im"], obj["rad"], ctx)
        return CBall(re, im)


def dyadic_to_decimal(x: mpfr) -> str:
    """Exact decimal string of a dyadic mpfr value (no rounding)."""
    if x == 0:
        return "0"
    num, den = x.as_integer_ratio()
    num, den = int(num), int(den)
    if den == 1:
        return str(num)
    k = den.bit_length() - 1  # den == 2**k
    digits = num * 5**k
    sign = "-" if digits < 0 else ""
    digits = abs(digits)
    s = str(digits).rjust(k + 1, "0")
    return f"{sign}{s[:-k]}.{s[-k:]}".rstrip("0").rstrip(".")


def _decimal_to_rball(mid_str: str, rad_str: str, ctx: Context) -> RBall:
    from fractions import Fraction

    m_exact = mpq(Fraction(mid_str))
    r_exact = mpq(Fraction(rad_str))
    b = RBall.from_mpq(m_exact, ctx)
    return RBall(b.mid, _UP.add(b.rad, _UP.add(_ZERO, r_exact)))


# ---------------------------------------------------------------------------
# Jets: truncated power series with CBall coefficients
# ---------------------------------------------------------------------------


class Jet:
    """Truncated power series sum_{j<=order} c_j Z^j with complex-ball coefficients."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: list[CBall]):
        if not coeffs:
            raise ValueError("a jet needs at least the constant coefficient")
        self.coeffs = list(coeffs)

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    @staticmethod
    def constant(c: CBall, order: int) -> "Jet":
        return Jet([c] + [CBall.zero() for _ in range(order)])

    @staticmethod
    def variable(s0: CBall, order: int) -> "Jet":
        """The affine jet s0 + Z."""
        coeffs = [s0] + [CBall.zero() for _ in range(order)]
        if order >= 1:
            coeffs[1] = CBall.one()
        return Jet(coeffs)

    @staticmethod
    def exp_affine(a: CBall, b: CBall, order: int, ctx: Context) -> "Jet":
        """exp(a + b Z) = exp(a) * sum_j b^j/j! Z^j, truncated at the order."""
        coeffs = [a.exp(ctx)]
        for j in range(1, order + 1):
            coeffs.append(coeffs[-1].mul(b, ctx).scale_mpq(mpq(1, j), ctx))
        return Jet(coeffs)

    def add(self, other: "Jet", ctx: Context) -> "Jet":
        self._check(other)
        return Jet([a.add(b, ctx) for a, b in zip(self.coeffs, other.coeffs)])

    def sub(self, other: "Jet", ctx: Context) -> "Jet":
        self._check(other)
        return Jet([a.sub(b, ctx) for a, b in zip(self.coeffs, other.coeffs)])

    def neg(self) -> "Jet":
        return Jet([c.neg() for c in self.coeffs])

    def mul(self, other: "Jet", ctx: Context) -> "Jet":
        self._check(other)
        n = len(self.coeffs)
        out = []
        for k in range(n):
            acc = None
            for i in range(k + 1):
                t = self.coeffs[i].mul(other.coeffs[k - i], ctx)
                acc = t if acc is None else acc.add(t, ctx)
            out.append(acc)
        return Jet(out)

    def div(self, other: "Jet", ctx: Context) -> "Jet":
        self._check(other)
        b0 = other.coeffs[0]
        if b0.contains_zero():
            raise LeadingCoefficientContainsZero(
                "jet division needs a constant coefficient excluding zero")
        inv0 = b0.recip(ctx)
        out = [self.coeffs[0].mul(inv0, ctx)]
        for k in range(1, len(self.coeffs)):
            acc = self.coeffs[k]
            for j in range(1, k + 1):
                acc = acc.sub(other.coeffs[j].mul(out[k - j], ctx), ctx)
            out.append(acc.mul(inv0, ctx))
        return Jet(out)

    def scale(self, c: CBall, ctx: Context) -> "Jet":
        return Jet([x.mul(c, ctx) for x in self.coeffs])

    def scale_real(self, r: RBall, ctx: Context) -> "Jet":
        return Jet([x.mul_real(r, ctx) for x in self.coeffs])

    def scale_int(self, n: int, ctx: Context) -> "Jet":
        return Jet([x.scale_int(n, ctx) for x in self.coeffs])

    def scale_mpq(self, q, ctx: Context) -> "Jet":
        return Jet([x.scale_mpq(q, ctx) for x in self.coeffs])

    def add_error(self, bounds) -> "Jet":
        """Widen each coefficient by a per-coefficient nonnegative error bound."""
        out = []
        for c, b in zip(self.coeffs, bounds):
            rb = _rad(b)
            out.append(CBall(RBall(c.re.mid, _UP.add(c.re.rad, rb)),
                             RBall(c.im.mid, _UP.add(c.im.rad, rb))))
        return Jet(out)

    def truncate(self, order: int) -> "Jet":
        if order > self.order:
            raise ValueError("cannot extend a jet by truncation")
        return Jet(self.coeffs[: order + 1])

    def _check(self, other: "Jet"):
        if len(self.coeffs) != len(other.coeffs):
            raise ValueError("jets must have equal order")

    def __repr__(self):
        return f"Jet(order={self.order}, c0={self.coeffs[0]!r})"


class LaurentSeries:
    """sum_{j >= valuation} c_{j-valuation} Z^j with an exactly declared valuation.

    The valuation is index arithmetic, not a numerical claim; the flag
    ``leading_contains_zero`` records when the lowest stored coefficient ball
    fails to exclude zero.
    """

    __slots__ = ("valuation", "body", "leading_contains_zero")

    def __init__(self, valuation: int, body: Jet):
        self.valuation = valuation
        self.body = body
        self.leading_contains_zero = body.coeffs[0].contains_zero()

    def coeff(self, j: int) -> CBall:
        i = j - self.valuation
        if i < 0:
            return CBall.zero()
        if i > self.body.order:
            raise IndexError(f"coefficient of Z^{j} not computed")
        return self.body.coeffs[i]

    def __repr__(self):
        return f"LaurentSeries(valuation={self.valuation}, body={self.body!r})"


# ---------------------------------------------------------------------------
# Spec-surface functions
# ---------------------------------------------------------------------------


def ball_add(a: CBall, b: CBall, ctx: Context) -> CBall:
    return a.add(b, ctx)


def ball_sub(a: CBall, b: CBall, ctx: Context) -> CBall:
    return a.sub(b, ctx)


def ball_mul(a: CBall, b: CBall, ctx: Context) -> CBall:
    return a.mul(b, ctx)


def ball_div(a: CBall, b: CBall, ctx: Context) -> CBall:
    return a.div(b, ctx)


def ball_exp(a: CBall, ctx: Context) -> CBall:
    return a.exp(ctx)


def ball_log(a: CBall, ctx: Context) -> CBall:
    return a.log(ctx)


def ball_pow(a: CBall, b: CBall, ctx: Context) -> CBall:
    return a.pow(b, ctx)


def jet_mul(a: Jet, b: Jet, ctx: Context) -> Jet:
    return a.mul(b, ctx)


def jet_div(a: Jet, b: Jet, ctx: Context) -> Jet:
    return a.div(b, ctx)


def laurent_div(num: Jet, den: Jet, den_valuation: int, ctx: Context) -> LaurentSeries:
    """Divide by a jet with a known-order zero at Z = 0.

    The caller declares (on external grounds) that ``den`` vanishes to order
    exactly ``den_valuation``; the low coefficients are checked to be
    consistent with that claim (they must contain zero) and then dropped,
    which is exact because their true values are zero.
    """
    if not 0 <= den_valuation <= den.order:
        raise ValueError("valuation out of range")
    for j in range(den_valuation):
        if not den.coeffs[j].contains_zero():
            raise ValuationNotCertified(
                f"denominator coefficient {j} excludes zero below the declared valuation")
    if den.coeffs[den_valuation].contains_zero():
        raise ValuationNotCertified(
            f"denominator coefficient {den_valuation} contains zero; raise the precision")
    order = den.order - den_valuation
    den_high = Jet(den.coeffs[den_valuation:])
    body = num.truncate(order).div(den_high, ctx)
    return LaurentSeries(-den_valuation, body)


def binom_neg_s(s, k: int, ctx: Context):
    """binom(-s, k) = (-s)(-s-1)...(-s-k+1)/k! for a CBall or Jet argument."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    if isinstance(s, Jet):
        neg_s = s.neg()
        acc = Jet.constant(CBall.one(), s.order)
        for j in range(k):
            term = neg_s.sub(Jet.constant(CBall.exact(j), s.order), ctx)
            acc = acc.mul(term, ctx).scale_mpq(mpq(1, j + 1), ctx)
        return acc
    acc = CBall.one()
    neg_s = s.neg()
    for j in range(k):
        term = neg_s.sub(CBall.exact(j), ctx)
        acc = acc.mul(term, ctx).scale_mpq(mpq(1, j + 1), ctx)
    return acc
