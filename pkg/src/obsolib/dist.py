"""Count models for cited-reference ages.

A journal's ages are Poisson with rate ``theta``; across journals ``theta``
varies as a gamma law with shape ``alpha`` and rate ``beta``.  Integrating
the rate out gives a negative binomial whose mean is ``alpha / beta``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConvergenceError, DomainError
from .specfun import ConvergenceSpec, ln_gamma, reg_inc_beta


def _check_positive(name, v):
    if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
        raise DomainError(f"{name} must be a positive finite number, got {v!r}")


def _check_count(x):
    if isinstance(x, bool) or int(x) != x or x < 0:
        raise DomainError(f"x must be a non-negative integer, got {x!r}")
    return int(x)


@dataclass(frozen=True)
class PoissonModel:
    theta: float

    def __post_init__(self):
        _check_positive("theta", self.theta)


@dataclass(frozen=True)
class GammaMixing:
    alpha: float
    beta: float

    def __post_init__(self):
        _check_positive("alpha", self.alpha)
        _check_positive("beta", self.beta)


@dataclass(frozen=True)
class NegBinModel:
    """Negative binomial from gamma(alpha, rate beta) mixing of a Poisson."""

    alpha: float
    beta: float

    def __post_init__(self):
        _check_positive("alpha", self.alpha)
        _check_positive("beta", self.beta)

    @property
    def q0(self) -> float:
        """beta / (1 + beta), the weight raised to the power alpha in the pmf."""
        return self.beta / (1.0 + self.beta)

    @property
    def mixing(self) -> GammaMixing:
        return GammaMixing(self.alpha, self.beta)

    @property
    def mean(self) -> float:
        return self.alpha / self.beta


def poisson_logpmf(model: PoissonModel, x: int) -> float:
    x = _check_count(x)
    return x * math.log(model.theta) - model.theta - ln_gamma(x + 1.0)


def poisson_pmf(model: PoissonModel, x: int) -> float:
    return math.exp(poisson_logpmf(model, x))


def gamma_pdf(mix: GammaMixing, theta: float) -> float:
    _check_positive("theta", theta)
    a, b = mix.alpha, mix.beta
    return math.exp(a * math.log(b) - ln_gamma(a) + (a - 1.0) * math.log(theta) - b * theta)


def negbin_logpmf(model: NegBinModel, x: int) -> float:
    x = _check_count(x)
    a, b = model.alpha, model.beta
    log_q0 = math.log(b) - math.log1p(b)
    log_q1 = -math.log1p(b)
    return ln_gamma(a + x) - ln_gamma(a) - ln_gamma(x + 1.0) + a * log_q0 + x * log_q1


def negbin_pmf(model: NegBinModel, x: int) -> float:
    return math.exp(negbin_logpmf(model, x))


def negbin_mean_var(model: NegBinModel) -> tuple[float, float, float]:
    """Return ``(mean, variance, dispersion_index)``."""
    a, b = model.alpha, model.beta
    mean = a / b
    var = a * (1.0 + b) / (b * b)
    return mean, var, (1.0 + b) / b


def negbin_cdf_sum(model: NegBinModel, x: int) -> float:
    """Pr(X <= x) by direct pmf summation."""
    x = _check_count(x)
    return math.fsum(negbin_pmf(model, k) for k in range(x + 1))


def negbin_cdf(model: NegBinModel, x: int, spec: ConvergenceSpec | None = None) -> float:
    """Pr(X <= x) = I_{q0}(alpha, x + 1)."""
    x = _check_count(x)
    return reg_inc_beta(model.q0, model.alpha, x + 1.0, spec)


def negbin_tail_sum(model: NegBinModel, x: int, tol: float = 1e-17) -> float:
    """Pr(X >= x) by summing the pmf upward from ``x``.

    Summation stops once a geometric bound on the remainder falls below
    ``tol`` (in absolute terms).
    """
    x = _check_count(x)
    a = model.alpha
    q1 = 1.0 / (1.0 + model.beta)
    terms = []
    k = x
    p = negbin_pmf(model, k)
    while True:
        terms.append(p)
        # pmf(k+1)/pmf(k) = q1 (a + k)/(k + 1), monotone in k towards q1
        ratio = q1 * (a + k) / (k + 1.0)
        bound_ratio = max(ratio, q1)
        if bound_ratio < 1.0 and p * ratio / (1.0 - bound_ratio) < tol:
            break
        p *= ratio
        k += 1
        if p == 0.0 and bound_ratio < 1.0:
            break
    return math.fsum(terms)


def mixture_pmf_oracle(mix: GammaMixing, x: int, tail_mass: float = 1e-12) -> float:
    """Pr(X = x) by integrating Poisson(x | theta) against the gamma density.

    Independent of :func:`negbin_pmf`: it never uses the closed form, only
    adaptive quadrature over ``(0, theta_max)`` where the gamma tail beyond
    ``theta_max`` holds less than ``tail_mass``.
    """
    import warnings

    from scipy import integrate, stats

    x = _check_count(x)
    a, b = mix.alpha, mix.beta
    theta_max = float(stats.gamma.isf(tail_mass, a, scale=1.0 / b))
    log_norm = a * math.log(b) - ln_gamma(a) - ln_gamma(x + 1.0)

    def integrand(theta):
        if theta <= 0.0:
            return 0.0
        return math.exp(log_norm + (x + a - 1.0) * math.log(theta) - (1.0 + b) * theta)

    peak = (x + a - 1.0) / (1.0 + b)
    points = [peak] if 0.0 < peak < theta_max else None
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            value, err = integrate.quad(
                integrand, 0.0, theta_max, points=points,
                epsabs=1e-14, epsrel=1e-11, limit=500,
            )
        except integrate.IntegrationWarning as exc:
            raise ConvergenceError(f"mixture quadrature failed: {exc}", alpha=a, beta=b, x=x) from exc
    if not math.isfinite(value) or err > 1e-9:
        raise ConvergenceError("mixture quadrature failed", alpha=a, beta=b, x=x, error=err)
    return value
