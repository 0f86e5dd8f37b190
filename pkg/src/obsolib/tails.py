"""Tail measures of a fitted age distribution.

Survival R(x) = Pr(X >= x), mortality (hazard) Pr(X = x) / R(x), the
percentile VaR_p and the tail expectation TVaR_p, plus the aging factors
of the exponential and NB models and the synchronic half-life.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .dist import NegBinModel, negbin_pmf, negbin_tail_sum
from .errors import ConvergenceError, DomainError, TailUnderflowError
from .ingest import AgeSample, median_age
from .specfun import ConvergenceSpec, gauss_2f1, reg_inc_beta

TVAR_SUM_TOL = 1e-12


def _check_age(x):
    if isinstance(x, bool) or int(x) != x or x < 0:
        raise DomainError(f"age must be a non-negative integer, got {x!r}")
    return int(x)


def _check_prob(p):
    if not (0.0 < p < 1.0):
        raise DomainError(f"p must lie in (0, 1), got {p!r}")


def survival(model: NegBinModel, x: int, spec: ConvergenceSpec | None = None) -> float:
    """Pr(X >= x) = I_{1/(1+beta)}(x, alpha); exactly 1 at x = 0."""
    x = _check_age(x)
    if x == 0:
        return 1.0
    return reg_inc_beta(1.0 / (1.0 + model.beta), float(x), model.alpha, spec)


def survival_sum(model: NegBinModel, x: int) -> float:
    """Pr(X >= x) by summing the pmf; the oracle for :func:`survival`."""
    return negbin_tail_sum(model, _check_age(x))


def _largest_positive_survival(model, spec):
    lo, hi = 0, 1
    while survival(model, hi, spec) > 0.0:
        lo, hi = hi, hi * 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if survival(model, mid, spec) > 0.0:
            lo = mid
        else:
            hi = mid
    return lo


def mortality(model: NegBinModel, x: int, spec: ConvergenceSpec | None = None) -> float:
    """Hazard Pr(X = x) / Pr(X >= x)."""
    x = _check_age(x)
    r = survival(model, x, spec)
    if r <= 0.0:
        raise TailUnderflowError(
            f"survival underflows to 0 at age {x}", largest_valid_x=_largest_positive_survival(model, spec)
        )
    return min(1.0, negbin_pmf(model, x) / r)


def var_p(model: NegBinModel, p: float, spec: ConvergenceSpec | None = None) -> int:
    """Smallest integer x with Pr(X > x) <= p."""
    _check_prob(p)

    def exceeds(x):
        return survival(model, x + 1, spec) > p

    if not exceeds(0):
        return 0
    lo = 0
    hi = max(1, int(model.mean))
    while exceeds(hi):
        lo, hi = hi, hi * 2
    # exceeds(lo) is True, exceeds(hi) is False
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if exceeds(mid):
            lo = mid
        else:
            hi = mid
    return hi


def tvar_closed_form(model: NegBinModel, x_p: int, z: float | None = None,
                     spec: ConvergenceSpec | None = None) -> float:
    """(x+1) 2F1(1, x+1+alpha; x+1; z) / 2F1(1, x+1+alpha; x+2; z).

    ``z`` defaults to beta/(beta+1), the argument under which the ratio
    reproduces the reference TVaR values.  With ``z = 1/(beta+1)``
    the same ratio equals E[X | X > x].
    """
    x_p = _check_age(x_p)
    if z is None:
        z = model.beta / (1.0 + model.beta)
    b = x_p + 1.0 + model.alpha
    num = gauss_2f1(1.0, b, x_p + 1.0, z, spec)
    den = gauss_2f1(1.0, b, x_p + 2.0, z, spec)
    return (x_p + 1.0) * num / den


def _excess_sum(model, x_p, tol):
    # sum_{k > x_p} (k - x_p) pmf(k), with a certified bound on what is left
    a = model.alpha
    q1 = 1.0 / (1.0 + model.beta)
    terms = []
    k = x_p + 1
    p = negbin_pmf(model, k)
    while True:
        terms.append((k - x_p) * p)
        ratio = q1 * (a + k) / (k + 1.0)
        # later ratios never exceed rho, so the remainder is at most
        # p * sum_{j>=1} (k + j - x_p) rho^j
        rho = max(ratio, q1)
        if rho < 1.0:
            bound = p * ((k - x_p) * rho / (1.0 - rho) + rho / (1.0 - rho) ** 2)
            if bound < tol:
                return math.fsum(terms), bound
        p *= ratio
        k += 1
        if p == 0.0 and rho < 1.0:
            return math.fsum(terms), 0.0


@dataclass(frozen=True)
class TvarResult:
    """TVaR at one probability level, by every route we compute.

    ``value`` is the closed form (or the summation when the closed form is
    unavailable).  ``summation`` is x_p + sum_{x>=x_p}(x-x_p)Pr(X=x)/R(x_p),
    i.e. E[X | X >= x_p]; ``conditional_mean`` is E[X | X > x_p].
    """

    p: float
    var: int
    value: float
    closed_form: float | None
    summation: float
    conditional_mean: float
    conditional_closed_form: float | None
    truncation_bound: float

    @property
    def discrepancy(self) -> float | None:
        if self.closed_form is None:
            return None
        return self.closed_form - self.summation


def tvar_p(model: NegBinModel, p: float, spec: ConvergenceSpec | None = None) -> TvarResult:
    _check_prob(p)
    x = var_p(model, p, spec)
    r_ge = survival(model, x, spec)
    r_gt = survival(model, x + 1, spec)
    if r_ge <= 0.0 or r_gt <= 0.0:
        raise TailUnderflowError(f"survival underflows at VaR {x}", largest_valid_x=x)
    # scale the stopping rule so the error on the TVaR itself stays below tol
    num, bound = _excess_sum(model, x, TVAR_SUM_TOL * r_gt)
    summation = x + num / r_ge
    conditional = x + num / r_gt

    def closed(z):
        try:
            return tvar_closed_form(model, x, z, spec)
        except (ConvergenceError, DomainError):
            return None

    cf = closed(None)
    cond_cf = closed(1.0 / (1.0 + model.beta))
    return TvarResult(
        p=p,
        var=x,
        value=cf if cf is not None else summation,
        closed_form=cf,
        summation=summation,
        conditional_mean=conditional,
        conditional_closed_form=cond_cf,
        truncation_bound=bound / r_gt,
    )


def obsolescence_factor(model: NegBinModel, t: int) -> float:
    """a(t) = beta/(beta+1) * (1 + (alpha-1)/(t+1))."""
    if t < 0:
        raise DomainError(f"t must be non-negative, got {t!r}")
    b = model.beta
    return b / (b + 1.0) * (1.0 + (model.alpha - 1.0) / (t + 1.0))


def citation_intensity(theta: float, t: float) -> float:
    """c(t) = theta exp(-theta t) of the exponential aging model."""
    if not theta > 0:
        raise DomainError(f"theta must be positive, got {theta!r}")
    return theta * math.exp(-theta * t)


def exp_aging_factor(theta: float) -> float:
    """c(t+1)/c(t) = exp(-theta); does not depend on t."""
    if not theta > 0:
        raise DomainError(f"theta must be positive, got {theta!r}")
    return math.exp(-theta)


def half_life(sample: AgeSample) -> float:
    """Synchronic half-life: the median cited-reference age."""
    return median_age(sample)


@dataclass(frozen=True)
class TailReport:
    dataset_id: str
    ages: tuple[int, ...]
    survival: tuple[float, ...]
    mortality: tuple[float, ...]


@dataclass(frozen=True)
class RiskReport:
    dataset_id: str
    probabilities: tuple[float, ...]
    var: tuple[int, ...]
    tvar: tuple[float, ...]
    details: tuple[TvarResult, ...]

    @property
    def tvar_summation(self) -> tuple[float, ...]:
        return tuple(d.summation for d in self.details)

    @property
    def tvar_conditional(self) -> tuple[float, ...]:
        return tuple(d.conditional_mean for d in self.details)


def tail_report(model: NegBinModel, ages: Sequence[int], dataset_id: str = "",
                spec: ConvergenceSpec | None = None) -> TailReport:
    ages = tuple(_check_age(a) for a in ages)
    surv = tuple(survival(model, a, spec) for a in ages)
    mort = tuple(mortality(model, a, spec) for a in ages)
    return TailReport(dataset_id, ages, surv, mort)


def risk_report(model: NegBinModel, probabilities: Sequence[float], dataset_id: str = "",
                spec: ConvergenceSpec | None = None) -> RiskReport:
    details = tuple(tvar_p(model, p, spec) for p in probabilities)
    return RiskReport(
        dataset_id,
        tuple(float(p) for p in probabilities),
        tuple(d.var for d in details),
        tuple(d.value for d in details),
        details,
    )

