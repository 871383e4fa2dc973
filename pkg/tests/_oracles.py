"""Closed-form reference quantities shared by the test modules."""

import math

import numpy as np
from numpy.polynomial import hermite_e as He
from numpy.polynomial import legendre as Leg
from numpy.polynomial import polynomial as P
from scipy.special import ndtr


def _gauss_partial_moments(x, jmax):
    # I_j(x) = int_{-inf}^x t^j phi(t) dt, by parts: I_j = -x^{j-1} phi(x) + (j-1) I_{j-2}
    x = np.asarray(x, dtype=float)
    phi = np.exp(-0.5 * x * x) / math.sqrt(2 * math.pi)
    out = [ndtr(x), -phi]
    for j in range(2, jmax + 1):
        out.append(-x ** (j - 1) * phi + (j - 1) * out[j - 2])
    return out


def hermite_sq_cdf(k, x):
    """CDF of He_k(y)^2 / k! times the standard Gaussian density."""
    coef = He.herme2poly([0] * k + [1])
    sq = P.polymul(coef, coef) / math.factorial(k)
    moments = _gauss_partial_moments(x, len(sq) - 1)
    return sum(c * moments[j] for j, c in enumerate(sq))


def legendre_sq_cdf(k, x):
    """CDF of (2k+1) P_k(y)^2 times the uniform density 1/2 on [-1, 1]."""
    coef = Leg.leg2poly([0] * k + [1])
    sq = P.polymul(coef, coef) * (2 * k + 1) / 2
    anti = P.polyint(sq)
    x = np.clip(np.asarray(x, dtype=float), -1, 1)
    return P.polyval(x, anti) - P.polyval(-1.0, anti)


def univariate_sq_cdf(family, k, x):
    if family.kind == "hermite":
        return hermite_sq_cdf(k, x)
    if family.a == 0 and family.b == 0:
        return legendre_sq_cdf(k, x)
    raise NotImplementedError("closed-form CDF only for Hermite and Legendre")
