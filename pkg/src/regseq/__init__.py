"""Certified asymptotics of summatory functions of q-regular sequences.

Given a q-linear representation (digit matrices A_0..A_{q-1}, a row
functional and an initial vector), this package computes, with certified
error balls throughout:

* the spectrum of C = sum_r A_r with algebraic multiplicities and largest
  Jordan-block sizes,
* upper and lower bounds for the joint spectral radius of the digit
  matrices and the working constant R,
* the asymptotic expansion of the summatory function X(N) = sum_{n<N} x(n)
  into terms N^{log_q lambda} (log N)^k / k! Phi(frac(log_q N)) plus an
  error clause, and
* the Fourier coefficients of every periodic fluctuation Phi, as residues
  of the associated Dirichlet series evaluated through its functional
  equation.
"""

from .ball import CBall, Context, Jet, LaurentSeries, RBall
from .dirichlet import DirichletConfig
from .linrep import LinRep, Mode, make_linrep, parse_linrep, serialize_linrep

__all__ = [
    "CBall",
    "Context",
    "Jet",
    "LaurentSeries",
    "RBall",
    "DirichletConfig",
    "LinRep",
    "Mode",
    "make_linrep",
    "parse_linrep",
    "serialize_linrep",
]

__version__ = "0.1.0"
