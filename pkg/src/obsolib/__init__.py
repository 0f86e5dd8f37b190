"""Citation-age obsolescence: Poisson and negative binomial fits, survival,
mortality, VaR and TVaR of cited-reference ages."""

from .dist import GammaMixing, NegBinModel, PoissonModel, negbin_cdf, negbin_mean_var, negbin_pmf, poisson_pmf
from .errors import (
    ConvergenceError,
    DataError,
    DegenerateSampleError,
    DomainError,
    ObsolibError,
    ParseError,
    PoleError,
    TailUnderflowError,
    UnderdispersionError,
)
from .fit import FitReport, Preferred, aic, compare_models, fit_negbin, fit_poisson, loglik
from .ingest import AgeSample, descriptive_stats, parse_ages, read_ages
from .report import StudyOptions, StudyReport, build_study, render
from .sampling import simulate_negbin
from .specfun import ConvergenceSpec, digamma, gauss_2f1, ln_gamma, reg_inc_beta
from .tails import half_life, mortality, obsolescence_factor, risk_report, survival, tail_report, tvar_p, var_p

__version__ = "0.1.0"
