"""Transforms of the model distributions and truncated-Taylor (jet) arithmetic.

Moments come out of transforms by differentiation at zero.  Instead of
symbolic differentiation, every formula in this package is evaluated on
jets: truncated Taylor expansions f(w) ~ sum_k c[k] w^k around w = 0,
with plain (unscaled) coefficients.  The k-th raw moment of X is then
(-1)^k k! c[k] when f is the transform of X.  Scalars flow through the
same formulas unchanged, which gives pointwise transform values on the
nonnegative real axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import (
    IndeterminateScalar,
    NegativeArgument,
    NotNormalized,
    PoleDetected,
    ZeroMeanDistribution,
)
from .model import DistributionSpec

NEGATIVE_SLACK = 1e-9  # tolerated rounding below zero in transform arguments
LEADING_TOL = 1e-12  # removable-singularity threshold on leading coefficients


class Jet:
    """Truncated Taylor series around 0; ``c[k]`` is the k-th coefficient.

    Binary operations between jets of different orders truncate to the
    shorter one: higher coefficients would not be fully determined.
    """

    __slots__ = ("c",)

    def __init__(self, coeffs):
        c = [float(x) for x in coeffs]
        if not c:
            raise ValueError("a jet needs at least the constant coefficient")
        self.c = c

    @classmethod
    def variable(cls, order: int, at: float = 0.0) -> "Jet":
        """The identity jet w -> at + w, carried to the given order."""
        c = [0.0] * (order + 1)
        c[0] = float(at)
        if order >= 1:
            c[1] = 1.0
        return cls(c)

    @classmethod
    def constant(cls, value: float, order: int) -> "Jet":
        c = [0.0] * (order + 1)
        c[0] = float(value)
        return cls(c)

    @property
    def order(self) -> int:
        return len(self.c) - 1

    def __repr__(self):
        return f"Jet({self.c})"

    def __eq__(self, other):
        return isinstance(other, Jet) and self.c == other.c

    def __add__(self, other):
        if isinstance(other, Jet):
            n = min(len(self.c), len(other.c))
            return Jet([self.c[k] + other.c[k] for k in range(n)])
        out = list(self.c)
        out[0] += other
        return Jet(out)

    __radd__ = __add__

    def __neg__(self):
        return Jet([-x for x in self.c])

    def __sub__(self, other):
        return self + (-other if isinstance(other, Jet) else -float(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        a = self.c
        if isinstance(other, Jet):
            b = other.c
            n = min(len(a), len(b))
            out = [0.0] * n
            for k in range(n):
                s = 0.0
                for j in range(k + 1):
                    s += a[j] * b[k - j]
                out[k] = s
            return Jet(out)
        return Jet([x * other for x in a])

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return _series_div(self.c, other.c)
        return Jet([x / other for x in self.c])

    def __rtruediv__(self, other):
        return _series_div([float(other)] + [0.0] * (len(self.c) - 1), self.c)


def _series_div(a, b):
    """Strict series division a/b; the denominator must not vanish at 0."""
    if b[0] == 0.0:
        raise PoleDetected("series division by a jet with zero constant term")
    n = min(len(a), len(b))
    q = [0.0] * n
    for k in range(n):
        s = a[k] if k < len(a) else 0.0
        for j in range(1, k + 1):
            s -= b[j] * q[k - j]
        q[k] = s / b[0]
    return Jet(q)


def jet_div(num, den, *, tol: float = LEADING_TOL):
    """Series division that cancels matching leading zeros (0/0 sites).

    When both leading coefficients vanish within ``tol`` the common
    zero(s) are struck and the shifted series are divided; the result
    order drops by the number of cancelled zeros.  A denominator zero
    without a matching numerator zero is a true pole.
    """
    if not isinstance(num, Jet):
        num = Jet.constant(num, den.order if isinstance(den, Jet) else 0)
    if not isinstance(den, Jet):
        den = Jet.constant(den, num.order)
    n = min(len(num.c), len(den.c))
    a, b = num.c[:n], den.c[:n]
    k = 0
    while k < n and abs(b[k]) <= tol:
        k += 1
    if k >= n:
        raise PoleDetected("denominator jet is zero to working order")
    if any(abs(a[j]) > tol for j in range(k)):
        raise PoleDetected("denominator has more leading zeros than numerator")
    return _series_div(a[k:], b[k:])


def jet_exp(x: Jet) -> Jet:
    c = x.c
    n = len(c)
    y = [0.0] * n
    y[0] = math.exp(c[0])
    for k in range(1, n):
        s = 0.0
        for j in range(1, k + 1):
            s += j * c[j] * y[k - j]
        y[k] = s / k
    return Jet(y)


def jet_log(x: Jet) -> Jet:
    c = x.c
    if c[0] <= 0.0:
        raise ValueError("jet_log needs a positive constant term")
    n = len(c)
    y = [0.0] * n
    y[0] = math.log(c[0])
    for k in range(1, n):
        s = k * c[k]
        for j in range(1, k):
            s -= j * y[j] * c[k - j]
        y[k] = s / (k * c[0])
    return Jet(y)


def vexp(x):
    return jet_exp(x) if isinstance(x, Jet) else math.exp(x)


def vpow(x, p):
    """x**p for a positive-constant jet or a positive scalar."""
    if isinstance(x, Jet):
        return jet_exp(jet_log(x) * float(p))
    return math.pow(x, p)


def const_term(x) -> float:
    return x.c[0] if isinstance(x, Jet) else float(x)


def lst(dist: DistributionSpec, s):
    """Transform E[exp(-sX)] of ``dist`` at a scalar or jet argument s.

    Only the nonnegative real axis is supported.  The forms below are
    arranged so that an argument with constant term exactly 0.0 yields
    a value with constant term exactly 1.0, which keeps the removable
    singularities downstream exact cancellations.
    """
    if const_term(s) < -NEGATIVE_SLACK:
        raise NegativeArgument(f"transform argument has constant term {const_term(s)!r} < 0")
    kind = dist.kind
    if kind == "det":
        return vexp(s * (-dist.d))
    if kind == "exp":
        return dist.rate / (dist.rate + s)
    if kind == "erlang":
        return vpow(dist.rate / (dist.rate + s), dist.phases)
    if kind == "hyperexp":
        acc = 0.0
        for w, r in zip(dist.weights, dist.rates):
            acc = acc + w * (s / (r + s))
        return 1.0 - acc
    if kind == "gamma":
        return vpow(1.0 + s * (1.0 / dist.rate), -dist.shape)
    raise ValueError(f"unknown distribution kind {kind!r}")


def lst_jet(dist: DistributionSpec, order: int, at: float = 0.0) -> Jet:
    """Taylor expansion of the transform of ``dist`` around a real point."""
    return lst(dist, Jet.variable(order, at))


@dataclass(frozen=True)
class Moments:
    """Raw moments extracted from a transform jet; raw[k-1] = E[X^k]."""

    raw: tuple

    @property
    def mean(self) -> float:
        return self.raw[0]

    @property
    def variance(self) -> float:
        return self.raw[1] - self.raw[0] ** 2 if len(self.raw) >= 2 else 0.0

    @property
    def sd(self) -> float:
        return math.sqrt(max(self.variance, 0.0))

    def moment(self, k: int) -> float:
        return 1.0 if k == 0 else self.raw[k - 1]


def moments_from_jet(j: Jet, upto: int | None = None) -> Moments:
    """Raw moments m_k = (-1)^k k! c[k] of the variable behind a transform jet."""
    if abs(j.c[0] - 1.0) > 1e-9:
        raise NotNormalized(f"transform jet has constant term {j.c[0]!r}, expected 1")
    kmax = j.order if upto is None else min(upto, j.order)
    raw = []
    fact = 1.0
    for k in range(1, kmax + 1):
        fact *= k
        raw.append((-1.0) ** k * fact * j.c[k])
    return Moments(raw=tuple(raw))


def _divided_difference(dist, a, b, order: int):
    """(X~(a) - X~(b)) / (a - b) as a jet, stable when a - b nearly vanishes.

    Expands the transform around the midpoint of the constant terms and
    sums g_k * (abar^k - bbar^k)/(abar - bbar); each homogeneous term is
    a polynomial, so nothing is ever divided by a small quantity.
    """
    mid = 0.5 * (const_term(a) + const_term(b))
    g = lst(dist, Jet.variable(order + 1, mid)).c
    if not isinstance(a, Jet):
        a = Jet.constant(a, order)
    if not isinstance(b, Jet):
        b = Jet.constant(b, order)
    abar = (a - mid).c[: order + 1]
    bbar = (b - mid).c[: order + 1]
    abar_j = Jet(abar + [0.0] * (order + 1 - len(abar)))
    bbar_j = Jet(bbar + [0.0] * (order + 1 - len(bbar)))
    h = Jet.constant(1.0, order)  # h_{k-1}(abar, bbar), starting at h_0 = 1
    bpow = Jet.constant(1.0, order)
    acc = Jet.constant(g[1], order)
    for k in range(2, order + 2):
        bpow = Jet((bpow * bbar_j).c[: order + 1])
        h = abar_j * h + bpow
        acc = acc + g[k] * h
    return acc


def past_residual(dist: DistributionSpec, omega_p, omega_r):
    """Joint transform of past and residual parts of an in-progress ``dist``.

    Value: (X~(omega_p) - X~(omega_r)) / ((omega_r - omega_p) * E[X]).
    At omega_p = omega_r = 0 this is exactly 1; when the two arguments
    (nearly) coincide the removable singularity is evaluated through a
    divided-difference expansion rather than by cancelling rounding noise.
    """
    mean = dist.mean
    if mean <= 0.0:
        raise ZeroMeanDistribution("past/residual decomposition needs E[X] > 0")
    d0 = const_term(omega_r) - const_term(omega_p)
    scale = 1.0 + abs(const_term(omega_p)) + abs(const_term(omega_r))
    if isinstance(omega_p, Jet) or isinstance(omega_r, Jet):
        order = min(x.order for x in (omega_p, omega_r) if isinstance(x, Jet))
        if abs(d0) > 1e-8 * scale:
            num = lst(dist, omega_p) - lst(dist, omega_r)
            den = (omega_r - omega_p) * mean
            if not isinstance(num, Jet):
                num = Jet.constant(num, order)
            return num / den
        dd = _divided_difference(dist, omega_r, omega_p, order)
        return dd * (-1.0 / mean)
    if abs(d0) > 1e-8 * scale:
        return (lst(dist, omega_p) - lst(dist, omega_r)) / (d0 * mean)
    deriv = lst(dist, Jet.variable(1, 0.5 * (omega_p + omega_r))).c[1]
    return -deriv / mean
