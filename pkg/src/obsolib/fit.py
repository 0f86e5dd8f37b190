"""Maximum-likelihood fits, AIC and Poisson-vs-NB model comparison."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from enum import Enum

from .dist import NegBinModel, PoissonModel, negbin_logpmf, poisson_logpmf
from .errors import ConvergenceError, DataError, DegenerateSampleError, UnderdispersionError
from .ingest import AgeSample

SCORE_TOL = 1e-9
STEP_RTOL = 1e-10
MAX_NEWTON_ITERS = 200


class FitQualityWarning(UserWarning):
    """The likelihood is -inf: an observed age has zero model probability."""


class Preferred(str, Enum):
    POISSON = "Poisson"
    NEGBIN = "NegBin"


def _require_nonempty(sample: AgeSample):
    if sample.n_obs == 0:
        raise DataError(f"{sample.dataset_id}: empty sample")


def fit_poisson(sample: AgeSample) -> PoissonModel:
    _require_nonempty(sample)
    mean = sample.mean
    if mean == 0:
        raise DegenerateSampleError(f"{sample.dataset_id}: all ages are 0, Poisson rate must be positive")
    return PoissonModel(mean)


def loglik(model, sample: AgeSample) -> float:
    """Histogram-weighted log-likelihood of ``sample`` under ``model``."""
    _require_nonempty(sample)
    if isinstance(model, PoissonModel):
        logpmf = poisson_logpmf
    elif isinstance(model, NegBinModel):
        logpmf = negbin_logpmf
    else:
        raise TypeError(f"unsupported model type {type(model).__name__}")
    parts = []
    for age, n in sample.counts.items():
        lp = logpmf(model, age)
        if not math.isfinite(lp):
            warnings.warn(
                f"{sample.dataset_id}: zero probability at observed age {age}", FitQualityWarning, stacklevel=2
            )
            return -math.inf
        parts.append(n * lp)
    return math.fsum(parts)


def aic(loglik_value: float, k: int) -> float:
    if not math.isfinite(loglik_value):
        raise DataError(f"AIC needs a finite log-likelihood, got {loglik_value!r}")
    if k < 1:
        raise DataError(f"parameter count must be positive, got {k}")
    return 2.0 * k - 2.0 * loglik_value


class _ProfileScore:
    """Score of the NB log-likelihood in alpha with beta profiled out.

    With beta = alpha / mean the score is

        sum_x c_x [psi(alpha + x) - psi(alpha)] + n log(alpha / (alpha + mean))

    and, ages being integers, the digamma difference telescopes to
    sum_{j<x} 1 / (alpha + j), so the first term is sum_j N_{>j} / (alpha + j).
    """

    def __init__(self, sample: AgeSample):
        self.n = sample.n_obs
        self.mean = sample.mean
        self.survivors = [(j, s) for j, s in enumerate(sample.survivors()) if s > 0]

    def __call__(self, alpha):
        harmonic = math.fsum(s / (alpha + j) for j, s in self.survivors)
        return harmonic + self.n * (math.log(alpha) - math.log(alpha + self.mean))

    def derivative(self, alpha):
        curv = math.fsum(s / (alpha + j) ** 2 for j, s in self.survivors)
        return -curv + self.n * self.mean / (alpha * (alpha + self.mean))


def profile_score(alpha: float, sample: AgeSample) -> float:
    """d/d(alpha) of the NB log-likelihood at beta = alpha / mean."""
    return _ProfileScore(sample)(alpha)


@dataclass(frozen=True)
class NegBinFit:
    model: NegBinModel
    iterations: int
    score: float
    alpha_start: float
    beta_start: float


def moment_start(mean: float, dispersion_index: float) -> tuple[float, float]:
    """Method-of-moments starting point ``(alpha0, beta0)``."""
    if dispersion_index <= 1:
        raise UnderdispersionError(f"index of dispersion {dispersion_index:.6g} <= 1")
    beta0 = 1.0 / (dispersion_index - 1.0)
    return mean * beta0, beta0


def fit_negbin_detailed(sample: AgeSample, max_iter: int = MAX_NEWTON_ITERS) -> NegBinFit:
    """Profile MLE for the NB; Newton on log(alpha) inside a sign bracket."""
    _require_nonempty(sample)
    mean = sample.mean
    if mean == 0:
        raise DegenerateSampleError(f"{sample.dataset_id}: all ages are 0")
    idx = sample.dispersion_index
    if idx <= 1:
        raise UnderdispersionError(
            f"{sample.dataset_id}: index of dispersion {idx:.6g} <= 1; the NB MLE does not exist, use Poisson"
        )
    alpha0, beta0 = moment_start(mean, idx)
    score = _ProfileScore(sample)

    # score > 0 below the root, < 0 above it
    u = math.log(alpha0)
    s = score(alpha0)
    lo = hi = None
    if s > 0:
        lo = u
    else:
        hi = u
    probe = u
    for _ in range(200):
        if lo is not None and hi is not None:
            break
        probe = probe + 1.0 if hi is None else probe - 1.0
        sp = score(math.exp(probe))
        if sp > 0:
            lo = probe
        else:
            hi = probe
    if lo is None or hi is None:
        raise ConvergenceError(f"{sample.dataset_id}: could not bracket the NB profile score", alpha_start=alpha0)

    for it in range(1, max_iter + 1):
        alpha = math.exp(u)
        if abs(s) <= SCORE_TOL:
            return NegBinFit(NegBinModel(alpha, alpha / mean), it - 1, s, alpha0, beta0)
        slope = alpha * score.derivative(alpha)
        step_ok = slope < 0
        u_new = u - s / slope if step_ok else None
        if u_new is None or not (min(lo, hi) < u_new < max(lo, hi)):
            u_new = 0.5 * (lo + hi)
        alpha_new = math.exp(u_new)
        s_new = score(alpha_new)
        if s_new > 0:
            lo = u_new
        else:
            hi = u_new
        rel_step = abs(alpha_new - alpha) / alpha
        u, s = u_new, s_new
        if rel_step <= STEP_RTOL:
            return NegBinFit(NegBinModel(alpha_new, alpha_new / mean), it, s, alpha0, beta0)
    raise ConvergenceError(
        f"{sample.dataset_id}: NB profile likelihood did not converge in {max_iter} iterations",
        alpha=math.exp(u), score=s, bracket=(math.exp(lo), math.exp(hi)), alpha_start=alpha0,
    )


def fit_negbin(sample: AgeSample) -> NegBinModel:
    return fit_negbin_detailed(sample).model


@dataclass(frozen=True)
class ModelFit:
    model: object
    loglik: float
    aic: float
    k: int


@dataclass(frozen=True)
class FitReport:
    dataset_id: str
    n_obs: int
    poisson: ModelFit
    negbin: ModelFit | None
    preferred: Preferred
    aic_reduction_pct: float | None
    negbin_skip_reason: str | None = None


def compare_models(sample: AgeSample, dataset_id=None) -> FitReport:
    """Fit both models and pick the one with the strictly smaller AIC."""
    dataset_id = sample.dataset_id if dataset_id is None else dataset_id
    pois = fit_poisson(sample)
    ll_p = loglik(pois, sample)
    pfit = ModelFit(pois, ll_p, aic(ll_p, 1), 1)

    nfit = None
    reason = None
    try:
        nb = fit_negbin(sample)
    except (UnderdispersionError, DegenerateSampleError) as exc:
        reason = str(exc)
    else:
        ll_n = loglik(nb, sample)
        nfit = ModelFit(nb, ll_n, aic(ll_n, 2), 2)

    if nfit is not None and nfit.aic < pfit.aic:
        preferred = Preferred.NEGBIN
    else:
        preferred = Preferred.POISSON
    reduction = None
    if nfit is not None:
        reduction = 100.0 * (pfit.aic - nfit.aic) / pfit.aic
    return FitReport(dataset_id, sample.n_obs, pfit, nfit, preferred, reduction, reason)
