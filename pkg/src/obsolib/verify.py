"""Oracle-equivalence suites: every closed form against an independent route.

Each suite returns a :class:`~obsolib.report.Check` carrying the largest
deviation seen.  Inputs come from a fixed-seed generator, so two runs of
:func:`run_all` give identical results.
"""
from __future__ import annotations

import math
from decimal import Decimal, localcontext

import numpy as np

from .dist import GammaMixing, NegBinModel, mixture_pmf_oracle, negbin_pmf
from .report import Check
from .specfun import digamma, gauss_2f1, ln_gamma, reg_inc_beta
from .tails import mortality, survival, survival_sum, tvar_closed_form, tvar_p

SEED = 20240917
PROBS = tuple(round(0.01 * i, 2) for i in range(1, 10))


def _rng(offset):
    return np.random.default_rng(SEED + offset)


def model_grid(n_alpha=10, n_beta=5):
    """The 50-point (alpha, beta) grid over [0.5, 3] x [0.03, 0.5]."""
    return [NegBinModel(float(a), float(b))
            for a in np.linspace(0.5, 3.0, n_alpha) for b in np.linspace(0.03, 0.5, n_beta)]


def check_beta_complement(n=1000):
    rng = _rng(1)
    worst = 0.0
    for _ in range(n):
        z = 1.0 - (1.0 - float(rng.uniform()))  # makes 1 - z exact
        a, b = (float(v) for v in np.exp(rng.uniform(math.log(0.1), math.log(100.0), 2)))
        worst = max(worst, abs(reg_inc_beta(z, a, b) + reg_inc_beta(1.0 - z, b, a) - 1.0))
    return Check.against("inc_beta_complement", worst, 1e-10)


def check_beta_monotone(n=20, points=201):
    rng = _rng(2)
    worst = 0.0
    zs = np.linspace(0.0, 1.0, points)
    for _ in range(n):
        a, b = (float(v) for v in np.exp(rng.uniform(math.log(0.1), math.log(100.0), 2)))
        vals = [reg_inc_beta(float(z), a, b) for z in zs]
        worst = max(worst, max(0.0, *(p - q for p, q in zip(vals, vals[1:]))))
    return Check.against("inc_beta_monotone_drop", worst, 0.0)


def check_digamma_difference(n=200, h=1e-5):
    xs = np.linspace(0.5, 100.0, n)
    worst = max(abs(digamma(float(x)) - (ln_gamma(x + h) - ln_gamma(x - h)) / (2 * h)) for x in xs)
    return Check.against("digamma_vs_lngamma_difference", worst, 1e-5)


def hyp2f1_decimal(a, b, c, z, digits=50):
    """Term-by-term 2F1 series in ``digits``-digit decimal arithmetic."""
    with localcontext() as ctx:
        ctx.prec = digits
        a, b, c, z = (Decimal(repr(float(v))) for v in (a, b, c, z))
        term = Decimal(1)
        total = Decimal(1)
        eps = Decimal(10) ** (-(digits - 5))
        n = 0
        while True:
            term = term * (a + n) * (b + n) / ((c + n) * (n + 1)) * z
            total += term
            n += 1
            if term == 0 or (abs(term) <= eps * abs(total) and abs((a + n) * (b + n) / ((c + n) * (n + 1)) * z) < 1):
                return float(total)


def check_hyp2f1(n=200):
    rng = _rng(3)
    worst = 0.0
    for _ in range(n):
        a = float(rng.uniform(0.0, 3.0))
        b = float(rng.uniform(0.0, 5.0))
        c = float(rng.uniform(0.5, 10.0))
        z = float(rng.uniform(-0.8, 0.8))
        ref = hyp2f1_decimal(a, b, c, z)
        worst = max(worst, abs(gauss_2f1(a, b, c, z) - ref) / abs(ref))
    return Check.against("hyp2f1_vs_decimal_series", worst, 1e-9)


def check_mixture(n=100, ages=range(61)):
    rng = _rng(4)
    worst = 0.0
    for _ in range(n):
        a = float(rng.uniform(0.5, 3.0))
        b = float(rng.uniform(0.03, 0.5))
        model, mix = NegBinModel(a, b), GammaMixing(a, b)
        worst = max(worst, max(abs(negbin_pmf(model, x) - mixture_pmf_oracle(mix, x)) for x in ages))
    return Check.against("negbin_pmf_vs_mixture_quadrature", worst, 1e-8)


def check_survival(models=None, top=200):
    models = models or model_grid()
    worst = max(abs(survival(m, x) - survival_sum(m, x)) for m in models for x in range(top + 1))
    return Check.against("survival_closed_vs_sum", worst, 1e-10)


def check_hazard_identity(models=None, top=150):
    models = models or model_grid()
    worst = 0.0
    for m in models:
        for x in range(top + 1):
            r = survival(m, x)
            if r == 0.0:
                break
            worst = max(worst, abs(survival(m, x + 1) - r * (1.0 - mortality(m, x))))
    return Check.against("hazard_survival_identity", worst, 1e-12)


def tvar_checks(models=None, probs=PROBS):
    """Conditional-mean agreement, truncation certificate and printed-form diagnostics."""
    models = models or model_grid()
    cond = trunc = printed_gap = 0.0
    for m in models:
        for p in probs:
            r = tvar_p(m, p)
            if r.conditional_closed_form is not None:
                cond = max(cond, abs(r.conditional_closed_form - r.conditional_mean))
            trunc = max(trunc, r.truncation_bound)
            if r.closed_form is not None:
                printed_gap = max(printed_gap, abs(r.closed_form - r.summation))
    return [
        Check.against("tvar_2f1_vs_conditional_sum", cond, 1e-6),
        Check.against("tvar_truncation_bound", trunc, 1e-9),
        Check("tvar_printed_2f1_minus_printed_sum", printed_gap, None, None),
    ]


def literal_variant_checks(models=None, top=200):
    """How far the literally-printed argument orders land from the oracles."""
    models = models or model_grid()
    surv = 0.0
    for m in models:
        q0 = m.beta / (1.0 + m.beta)
        for x in range(1, top + 1):
            surv = max(surv, abs(reg_inc_beta(q0, m.alpha, float(x)) - survival_sum(m, x)))
    return [Check("survival_literal_argument_order", surv, None, None)]


def run_all(quick=False):
    """Every suite; ``quick`` shrinks the sample counts for smoke runs."""
    models = model_grid(5, 2) if quick else model_grid()
    checks = [
        check_beta_complement(100 if quick else 1000),
        check_beta_monotone(5 if quick else 20),
        check_digamma_difference(),
        check_hyp2f1(40 if quick else 200),
        check_mixture(5 if quick else 100, range(0, 61, 10) if quick else range(61)),
        check_survival(models),
        check_hazard_identity(models),
    ]
    checks.extend(tvar_checks(models))
    checks.extend(literal_variant_checks(models))
    return checks


def all_passed(checks):
    return all(c.passed is not False for c in checks)
