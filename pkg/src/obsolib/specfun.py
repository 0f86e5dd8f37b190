"""Special functions used by the distribution and tail formulas.

Everything here is scalar, pure Python and thread-safe.  The routines are
accurate well beyond what the tail tables need; the test suite pins the
guarantees (see ``tests/test_specfun.py``).
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass

from .errors import ConvergenceError, DomainError, PoleError

MAX_ITERS_ENV = "OBSOLIB_MAX_ITERS"

# Modified Lentz floor.
_TINY = 1e-300

_EULER_GAMMA = 0.57721566490153286061
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)

# zeta(k) - 1 for k = 2, 3, ...; drives the Taylor series of lnGamma(1 + z).
_ZETA_MINUS_ONE = (
    0.64493406684822643647, 0.2020569031595942854, 0.082323233711138191516,
    0.036927755143369926331, 0.017343061984449139715, 0.0083492773819228268398,
    0.0040773561979443393787, 0.0020083928260822144179, 0.00099457512781808533715,
    0.0004941886041194645587, 0.00024608655330804829864, 0.00012271334757848914675,
    0.000061248135058704829259, 0.000030588236307020493552, 0.000015282259408651871733,
    7.6371976378997622736e-6, 3.8172932649998398565e-6, 1.9082127165539389257e-6,
    9.5396203387279611315e-7, 4.7693298678780646312e-7, 2.3845050272773299e-7,
    1.1921992596531107307e-7, 5.9608189051259479612e-8, 2.9803503514652280186e-8,
    1.4901554828365041235e-8, 7.450711789835429492e-9, 3.7253340247884570548e-9,
    1.8626597235130490064e-9, 9.3132743241966818287e-10, 4.656629065033784073e-10,
    2.328311833676505492e-10, 1.1641550172700519776e-10, 5.8207720879027008893e-11,
    2.9103850444970996869e-11, 1.4551921891041984236e-11, 7.2759598350574810145e-12,
    3.6379795473786511902e-12, 1.8189896503070659477e-12, 9.0949478402638892829e-13,
)

# B_2k / (2k (2k - 1)) for the Stirling series of lnGamma.
_STIRLING = (
    1.0 / 12.0, -1.0 / 360.0, 1.0 / 1260.0, -1.0 / 1680.0,
    1.0 / 1188.0, -691.0 / 360360.0, 1.0 / 156.0, -3617.0 / 122400.0,
)

# B_2k / (2k) for the asymptotic series of digamma.
_DIGAMMA_ASYMP = (
    1.0 / 12.0, -1.0 / 120.0, 1.0 / 252.0, -1.0 / 240.0,
    1.0 / 132.0, -691.0 / 32760.0, 1.0 / 12.0,
)


@dataclass(frozen=True)
class ConvergenceSpec:
    """Stopping rules for the iterative special-function evaluations."""

    max_iterations: int = 10_000
    abs_tolerance: float = 1e-14
    rel_tolerance: float = 1e-12

    def __post_init__(self):
        if int(self.max_iterations) != self.max_iterations or self.max_iterations < 1:
            raise DomainError(f"max_iterations must be a positive integer, got {self.max_iterations!r}")
        if not (self.abs_tolerance > 0 and self.rel_tolerance > 0):
            raise DomainError("tolerances must be positive")

    @classmethod
    def default(cls) -> "ConvergenceSpec":
        """Defaults, with ``OBSOLIB_MAX_ITERS`` overriding the iteration cap."""
        raw = os.environ.get(MAX_ITERS_ENV)
        if raw is None or raw.strip() == "":
            return cls()
        try:
            return cls(max_iterations=int(raw))
        except ValueError as exc:
            raise DomainError(f"{MAX_ITERS_ENV} must be a positive integer, got {raw!r}") from exc


def _check_positive(name, x):
    if not math.isfinite(x) or x <= 0:
        raise DomainError(f"{name} must be positive and finite, got {x!r}")


def _lngamma1p(z):
    # lnGamma(1 + z) for |z| <= 0.5, accurate in the relative sense near z = 0.
    total = 0.0
    power = -z
    for k, zm1 in enumerate(_ZETA_MINUS_ONE, start=2):
        power *= -z
        term = zm1 * power / k
        total += term
        if abs(term) < 1e-17 * abs(total):
            break
    return total + z * (1.0 - _EULER_GAMMA) - math.log1p(z)


def _stirling(x):
    inv = 1.0 / x
    inv2 = inv * inv
    series = 0.0
    power = inv
    for coeff in _STIRLING:
        series += coeff * power
        power *= inv2
    return (x - 0.5) * math.log(x) - x + _HALF_LOG_2PI + series


def ln_gamma(x: float) -> float:
    """Natural log of the gamma function for real ``x > 0``."""
    _check_positive("x", x)
    if x < 0.5:
        return ln_gamma(x + 1.0) - math.log(x)
    if x < 1.5:
        return _lngamma1p(x - 1.0)
    if x < 2.5:
        return _lngamma1p(x - 2.0) + math.log1p(x - 2.0)
    if x < 15.0:
        # Walk down into [1.5, 2.5); every factor is > 1 so nothing cancels.
        m = int(x - 1.5)
        y = x - m
        prod = 1.0
        for k in range(m):
            prod *= y + k
        return ln_gamma(y) + math.log(prod)
    return _stirling(x)


def ln_beta(a: float, b: float) -> float:
    return ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)


def digamma(x: float) -> float:
    """psi(x) = d/dx lnGamma(x) for ``x > 0``."""
    _check_positive("x", x)
    shift = 0.0
    while x < 10.0:
        shift -= 1.0 / x
        x += 1.0
    inv2 = 1.0 / (x * x)
    series = 0.0
    power = inv2
    for coeff in _DIGAMMA_ASYMP:
        series += coeff * power
        power *= inv2
    return shift + math.log(x) - 0.5 / x - series


def _beta_cf(a, b, z, spec):
    # Continued fraction for I_z(a, b), modified Lentz.
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * z / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    for m in range(1, spec.max_iterations + 1):
        m2 = 2 * m
        aa = m * (b - m) * z / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * z / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < spec.abs_tolerance:
            return h
    raise ConvergenceError(
        "incomplete beta continued fraction did not converge",
        a=a, b=b, z=z, iterations=spec.max_iterations, last=h,
    )


def reg_inc_beta(z: float, a: float, b: float, spec: ConvergenceSpec | None = None) -> float:
    """Regularized incomplete beta I_z(a, b) = B(z; a, b) / B(a, b)."""
    _check_positive("a", a)
    _check_positive("b", b)
    if not (0.0 <= z <= 1.0):
        raise DomainError(f"z must lie in [0, 1], got {z!r}")
    if z == 0.0:
        return 0.0
    if z == 1.0:
        return 1.0
    spec = spec or ConvergenceSpec.default()
    log_front = a * math.log(z) + b * math.log1p(-z) - ln_beta(a, b)
    if z > (a + 1.0) / (a + b + 2.0):
        tail = math.exp(log_front) * _beta_cf(b, a, 1.0 - z, spec) / b
        return min(1.0, max(0.0, 1.0 - tail))
    return min(1.0, max(0.0, math.exp(log_front) * _beta_cf(a, b, z, spec) / a))


def _is_nonpositive_int(v):
    return v <= 0 and v == math.floor(v)


def _hyp_series(a, b, c, z, spec):
    total, comp = 1.0, 0.0
    term = 1.0
    for n in range(spec.max_iterations):
        ratio = (a + n) * (b + n) / ((c + n) * (n + 1.0)) * z
        term *= ratio
        if term == 0.0:
            return total + comp
        # Neumaier compensated accumulation.
        t = total + term
        if abs(total) >= abs(term):
            comp += (total - t) + term
        else:
            comp += (term - t) + total
        total = t
        if abs(ratio) < 1.0 and abs(term) <= spec.abs_tolerance * abs(total + comp):
            return total + comp
    raise ConvergenceError(
        "2F1 series did not converge",
        a=a, b=b, c=c, z=z, iterations=spec.max_iterations, partial_sum=total + comp,
    )


def gauss_2f1(a: float, b: float, c: float, z: float, spec: ConvergenceSpec | None = None) -> float:
    """Gauss hypergeometric 2F1(a, b; c; z) by its power series, |z| < 1.

    For z < 0 the series alternates and cancels badly, so a Pfaff
    transformation first maps z to z/(z-1) in (0, 1/2).
    """
    for name, v in (("a", a), ("b", b), ("c", c), ("z", z)):
        if not math.isfinite(v):
            raise DomainError(f"{name} must be finite, got {v!r}")
    if abs(z) >= 1.0:
        raise DomainError(f"series requires |z| < 1, got z={z!r}")
    if _is_nonpositive_int(c):
        raise PoleError(f"2F1 has a pole at c={c!r}")
    spec = spec or ConvergenceSpec.default()
    if z < 0.0:
        w = z / (z - 1.0)
        # keep the variant whose parameters stay least negative: fewer sign flips
        if min(a, c - b) >= min(c - a, b):
            return (1.0 - z) ** (-a) * _hyp_series(a, c - b, c, w, spec)
        return (1.0 - z) ** (-b) * _hyp_series(c - a, b, c, w, spec)
    return _hyp_series(a, b, c, z, spec)
