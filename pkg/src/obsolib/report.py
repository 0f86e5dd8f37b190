"""Study assembly and rendering (csv, json, text tables).

A study runs every dataset through stats -> fit -> tails -> risk and
attaches per-dataset numerical cross-checks.  Datasets that cannot be taken
through a stage are kept, with the reason, never dropped.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .dist import NegBinModel
from .errors import ConvergenceError, DataError, ObsolibError, TailUnderflowError
from .fit import FitReport, compare_models, profile_score
from .ingest import AgeSample, StatsReport, descriptive_stats
from .specfun import ConvergenceSpec
from .tails import (
    RiskReport,
    TailReport,
    mortality,
    risk_report,
    survival,
    survival_sum,
    tail_report,
)

DEFAULT_AGES = tuple(range(20, 101, 10))
DEFAULT_PROBS = tuple(round(0.01 * i, 2) for i in range(1, 10))
FORMATS = ("csv", "json", "table")
SECTIONS = ("stats", "fit", "tails", "risk", "verification")

SURVIVAL_ORACLE_TOL = 1e-10
HAZARD_IDENTITY_TOL = 1e-12
TVAR_ORACLE_TOL = 1e-6
TVAR_TRUNCATION_TOL = 1e-9
SCORE_TOL = 1e-9


@dataclass(frozen=True)
class Check:
    name: str
    max_deviation: float
    tolerance: float | None
    passed: bool | None  # None for diagnostics that carry no pass/fail

    @classmethod
    def against(cls, name, deviation, tolerance):
        deviation = float(deviation)
        return cls(name, deviation, tolerance, bool(deviation <= tolerance))


@dataclass(frozen=True)
class DatasetReport:
    dataset_id: str
    kind: str
    stats: StatsReport | None = None
    fit: FitReport | None = None
    model: NegBinModel | None = None
    model_source: str | None = None
    tails: TailReport | None = None
    risk: RiskReport | None = None
    verification: tuple[Check, ...] = ()
    skipped: tuple[tuple[str, str], ...] = ()
    # sections skipped because an iteration failed to converge or underflowed
    numerical_failures: tuple[str, ...] = ()


@dataclass(frozen=True)
class StudyReport:
    ages: tuple[int, ...]
    probabilities: tuple[float, ...]
    datasets: tuple[DatasetReport, ...]

    def numerical_failures(self, sections=SECTIONS) -> list[tuple[str, str]]:
        return [(d.dataset_id, s) for d in self.datasets for s in d.numerical_failures if s in sections]

    @property
    def verification_passed(self) -> bool:
        return all(c.passed is not False for d in self.datasets for c in d.verification)


@dataclass
class StudyOptions:
    """``models`` injects NB parameters per dataset id, bypassing the fit."""

    models: Mapping[str, NegBinModel] = field(default_factory=dict)
    verify: bool = True
    spec: ConvergenceSpec | None = None


def validate_grids(ages: Sequence[int], probs: Sequence[float]) -> tuple[tuple[int, ...], tuple[float, ...]]:
    if len(ages) == 0:
        raise DataError("age grid is empty")
    if len(probs) == 0:
        raise DataError("probability grid is empty")
    out_ages = []
    for a in ages:
        if isinstance(a, bool) or int(a) != a or a < 0:
            raise DataError(f"ages must be non-negative integers, got {a!r}")
        out_ages.append(int(a))
    if any(b <= a for a, b in zip(out_ages, out_ages[1:])):
        raise DataError(f"age grid must be strictly increasing, got {out_ages}")
    out_probs = []
    for p in probs:
        p = float(p)
        if not 0.0 < p < 1.0:
            raise DataError(f"probabilities must lie in (0, 1), got {p!r}")
        out_probs.append(p)
    return tuple(out_ages), tuple(out_probs)


def model_checks(model: NegBinModel, ages, risk: RiskReport | None, spec=None) -> list[Check]:
    """Closed forms against brute-force routes, on the study grids."""
    checks = []
    surv_dev = max(abs(survival(model, a, spec) - survival_sum(model, a)) for a in ages)
    checks.append(Check.against("survival_closed_vs_sum", surv_dev, SURVIVAL_ORACLE_TOL))
    hz = 0.0
    for a in ages:
        r = survival(model, a, spec)
        if r > 0:
            hz = max(hz, abs(survival(model, a + 1, spec) - r * (1.0 - mortality(model, a, spec))))
    checks.append(Check.against("hazard_survival_identity", hz, HAZARD_IDENTITY_TOL))
    if risk is not None:
        cond = [d for d in risk.details if d.conditional_closed_form is not None]
        if cond:
            dev = max(abs(d.conditional_closed_form - d.conditional_mean) for d in cond)
            checks.append(Check.against("tvar_conditional_2f1_vs_sum", dev, TVAR_ORACLE_TOL))
        checks.append(Check.against(
            "tvar_truncation_bound", max(d.truncation_bound for d in risk.details), TVAR_TRUNCATION_TOL))
        coherent = 0.0
        for d in risk.details:
            above = survival(model, d.var + 1, spec)
            below = survival(model, d.var, spec) if d.var > 0 else 1.0
            if not (above <= d.p < below and d.value > d.var):
                coherent = 1.0
        checks.append(Check.against("var_tvar_coherence", coherent, 0.0))
        disc = [abs(d.discrepancy) for d in risk.details if d.discrepancy is not None]
        if disc:
            checks.append(Check("tvar_closed_form_minus_summation", max(disc), None, None))
        gaps = [v - x for v, x in zip(risk.tvar, risk.var)]
        checks.append(Check("tvar_var_gap_spread", max(gaps) - min(gaps), None, None))
    return checks


_NUMERIC = (ConvergenceError, TailUnderflowError)


def _dataset(sample, dataset_id, kind, injected, ages, probs, options):
    skipped = []
    numeric = []
    stats = fit = None
    if sample is not None:
        try:
            stats = descriptive_stats(sample)
        except DataError as exc:
            skipped.append(("stats", str(exc)))
        try:
            fit = compare_models(sample, dataset_id)
        except DataError as exc:
            skipped.append(("fit", str(exc)))
        except ConvergenceError as exc:
            skipped.append(("fit", str(exc)))
            numeric.append("fit")
    else:
        skipped.append(("stats", "no sample; model parameters supplied directly"))
        skipped.append(("fit", "no sample; model parameters supplied directly"))

    model, source = None, None
    if injected is not None:
        model, source = injected, "supplied"
    elif fit is not None and fit.negbin is not None:
        model, source = fit.negbin.model, "fitted"

    tails = risk = None
    checks = []
    if model is None:
        reason = "no negative binomial model"
        if fit is not None and fit.negbin_skip_reason:
            reason = f"negative binomial fit skipped: {fit.negbin_skip_reason}"
        skipped.append(("tails", reason))
        skipped.append(("risk", reason))
    else:
        try:
            tails = tail_report(model, ages, dataset_id, options.spec)
        except ObsolibError as exc:
            skipped.append(("tails", str(exc)))
            if isinstance(exc, _NUMERIC):
                numeric.append("tails")
        try:
            risk = risk_report(model, probs, dataset_id, options.spec)
        except ObsolibError as exc:
            skipped.append(("risk", str(exc)))
            if isinstance(exc, _NUMERIC):
                numeric.append("risk")
        if options.verify:
            try:
                checks = model_checks(model, ages, risk, options.spec)
            except _NUMERIC as exc:
                skipped.append(("verification", str(exc)))
                numeric.append("verification")
    if options.verify and fit is not None and fit.negbin is not None and sample is not None:
        nb = fit.negbin.model
        checks.append(Check.against("nb_profile_score", abs(profile_score(nb.alpha, sample)), SCORE_TOL))
    return DatasetReport(
        dataset_id=dataset_id, kind=kind, stats=stats, fit=fit, model=model, model_source=source,
        tails=tails, risk=risk, verification=tuple(checks), skipped=tuple(skipped),
        numerical_failures=tuple(numeric),
    )


def build_study(samples: Iterable[AgeSample] = (), ages_grid: Sequence[int] = DEFAULT_AGES,
                prob_grid: Sequence[float] = DEFAULT_PROBS, options: StudyOptions | None = None) -> StudyReport:
    """Run every dataset through the pipeline, ordered by (id, kind)."""
    options = options or StudyOptions()
    ages, probs = validate_grids(ages_grid, prob_grid)
    entries = {}
    for s in samples:
        key = (s.dataset_id, s.kind)
        if key in entries:
            raise DataError(f"duplicate dataset {s.dataset_id!r} ({s.kind})")
        entries[key] = s
    known_ids = {k[0] for k in entries}
    for dataset_id in options.models:
        if dataset_id not in known_ids:
            entries[(dataset_id, "model")] = None
    datasets = []
    for (dataset_id, kind) in sorted(entries):
        datasets.append(_dataset(entries[(dataset_id, kind)], dataset_id, kind,
                                 options.models.get(dataset_id), ages, probs, options))
    return StudyReport(ages, probs, tuple(datasets))


# --- formatting -------------------------------------------------------------

def fmt_prob(v: float | None) -> str:
    """Four decimals, switching to E-notation (``6.30E-6``) below 1e-4."""
    if v is None:
        return ""
    if v == 0:
        return "0"
    if abs(v) < 1e-4:
        mantissa, exp = f"{v:.2E}".split("E")
        return f"{mantissa}E{int(exp)}"
    return f"{v:.4f}"


def fmt_fixed(v: float | None, digits: int) -> str:
    if v is None:
        return ""
    return f"{v:.{digits}f}"


def fmt_dev(v: float | None) -> str:
    return "" if v is None else f"{v:.3e}"


def _num(v):
    if v is None or isinstance(v, (bool, int)):
        return v
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return float(v)


def _stats_dict(s: StatsReport | None):
    if s is None:
        return None
    return {
        "n_obs": s.n_obs, "mean": _num(s.mean), "median": _num(s.median), "mode": s.mode,
        "min": s.min, "max": s.max, "variance": _num(s.variance), "dispersion_index": _num(s.dispersion_index),
    }


def _fit_dict(f: FitReport | None):
    if f is None:
        return None
    nb = None
    if f.negbin is not None:
        nb = {"alpha": _num(f.negbin.model.alpha), "beta": _num(f.negbin.model.beta),
              "loglik": _num(f.negbin.loglik), "aic": _num(f.negbin.aic)}
    return {
        "n_obs": f.n_obs,
        "poisson": {"theta": _num(f.poisson.model.theta), "loglik": _num(f.poisson.loglik), "aic": _num(f.poisson.aic)},
        "negbin": nb,
        "preferred": f.preferred.value,
        "aic_reduction_pct": _num(f.aic_reduction_pct),
        "negbin_skip_reason": f.negbin_skip_reason,
    }


def study_to_dict(report: StudyReport) -> dict:
    out = {"ages": list(report.ages), "probabilities": list(report.probabilities), "datasets": []}
    for d in report.datasets:
        model = None
        if d.model is not None:
            model = {"alpha": _num(d.model.alpha), "beta": _num(d.model.beta), "source": d.model_source}
        tails = None
        if d.tails is not None:
            tails = {"ages": list(d.tails.ages), "survival": [_num(v) for v in d.tails.survival],
                     "mortality": [_num(v) for v in d.tails.mortality]}
        risk = None
        if d.risk is not None:
            risk = {
                "probabilities": list(d.risk.probabilities),
                "var": list(d.risk.var),
                "tvar": [_num(v) for v in d.risk.tvar],
                "tvar_summation": [_num(v.summation) for v in d.risk.details],
                "tvar_conditional": [_num(v.conditional_mean) for v in d.risk.details],
            }
        out["datasets"].append({
            "dataset_id": d.dataset_id,
            "kind": d.kind,
            "stats": _stats_dict(d.stats),
            "fit": _fit_dict(d.fit),
            "model": model,
            "tails": tails,
            "risk": risk,
            "verification": [
                {"name": c.name, "max_deviation": _num(c.max_deviation), "tolerance": _num(c.tolerance),
                 "passed": c.passed}
                for c in d.verification
            ],
            "skipped": [{"section": s, "reason": r} for s, r in d.skipped],
        })
    return out


CSV_COLUMNS = ("dataset_id", "kind", "section", "grid", "survival", "mortality", "var", "tvar", "tvar_summation", "note")


def csv_rows(report: StudyReport, sections=("tails", "risk")) -> list[list[str]]:
    """One row per dataset x grid point, plus one row per skipped section."""
    rows = []
    for d in report.datasets:
        if "tails" in sections and d.tails is not None:
            for a, s, m in zip(d.tails.ages, d.tails.survival, d.tails.mortality):
                rows.append([d.dataset_id, d.kind, "tails", str(a), fmt_prob(s), fmt_prob(m), "", "", "", ""])
        if "risk" in sections and d.risk is not None:
            for p, v, det in zip(d.risk.probabilities, d.risk.var, d.risk.details):
                rows.append([d.dataset_id, d.kind, "risk", f"{p:.4f}", "", "", str(v),
                             fmt_fixed(det.value, 2), fmt_fixed(det.summation, 2), ""])
        for section, reason in d.skipped:
            if section in sections:
                rows.append([d.dataset_id, d.kind, "skip", section, "", "", "", "", "", reason])
    return rows


def text_table(headers: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    widths = [len(h) for h in headers]
    for r in rows:
        widths = [max(w, len(c)) for w, c in zip(widths, r)]
    def line(cells):
        first = cells[0].ljust(widths[0])
        rest = [c.rjust(w) for c, w in zip(cells[1:], widths[1:])]
        return "  ".join([first] + rest).rstrip()
    out = [line(headers), line(["-" * w for w in widths])]
    out.extend(line(r) for r in rows)
    return "\n".join(out)


def _label(d):
    return d.dataset_id if d.kind in ("sample", "model") else f"{d.dataset_id} [{d.kind}]"


def stats_table(report: StudyReport):
    headers = ["dataset", "n", "mean", "median", "mode", "min", "max", "variance", "ID"]
    rows = [[_label(d), str(s.n_obs), fmt_fixed(s.mean, 2), f"{s.median:g}", str(s.mode), str(s.min), str(s.max),
             fmt_fixed(s.variance, 2), fmt_fixed(s.dispersion_index, 2)]
            for d in report.datasets if (s := d.stats) is not None]
    return headers, rows


def fit_table(report: StudyReport):
    headers = ["dataset", "theta", "AIC Poisson", "alpha", "beta", "AIC NB", "preferred", "AIC cut %"]
    rows = []
    for d in report.datasets:
        f = d.fit
        if f is None:
            continue
        nb = f.negbin
        rows.append([
            _label(d), fmt_fixed(f.poisson.model.theta, 2), fmt_fixed(f.poisson.aic, 2),
            fmt_fixed(nb.model.alpha, 4) if nb else "-", fmt_fixed(nb.model.beta, 4) if nb else "-",
            fmt_fixed(nb.aic, 2) if nb else "-", f.preferred.value,
            fmt_fixed(f.aic_reduction_pct, 2) if f.aic_reduction_pct is not None else "-",
        ])
    return headers, rows


def compare_table(report: StudyReport):
    headers = ["dataset", "n", "loglik Poisson", "AIC Poisson", "loglik NB", "AIC NB", "preferred", "AIC cut %",
               "note"]
    rows = []
    for d in report.datasets:
        f = d.fit
        if f is None:
            continue
        nb = f.negbin
        rows.append([
            _label(d), str(f.n_obs), fmt_fixed(f.poisson.loglik, 4), fmt_fixed(f.poisson.aic, 4),
            fmt_fixed(nb.loglik, 4) if nb else "-", fmt_fixed(nb.aic, 4) if nb else "-", f.preferred.value,
            fmt_fixed(f.aic_reduction_pct, 4) if f.aic_reduction_pct is not None else "-",
            f.negbin_skip_reason or "",
        ])
    return headers, rows


def tails_table(report: StudyReport):
    rows = []
    for d in report.datasets:
        if d.tails is None:
            continue
        rows.append([_label(d), "R(x)"] + [fmt_prob(v) for v in d.tails.survival])
        rows.append(["", "h(x)"] + [fmt_prob(v) for v in d.tails.mortality])
    return ["dataset", ""] + [str(a) for a in report.ages], rows


def risk_table(report: StudyReport):
    rows = []
    for d in report.datasets:
        if d.risk is None:
            continue
        rows.append([_label(d), "VaR"] + [str(v) for v in d.risk.var])
        rows.append(["", "TVaR"] + [fmt_fixed(v, 2) for v in d.risk.tvar])
    return ["dataset", ""] + [f"{p:g}" for p in report.probabilities], rows


def verification_table(report: StudyReport):
    rows = []
    for d in report.datasets:
        rows.extend([_label(d)] + check_cells(c) for c in d.verification)
    return ["dataset", "check", "max dev", "tol", "status"], rows


def check_cells(c: Check) -> list[str]:
    status = "info" if c.passed is None else ("pass" if c.passed else "FAIL")
    return [c.name, fmt_dev(c.max_deviation), fmt_dev(c.tolerance), status]


_TEXT_SECTIONS = (
    ("stats", "Descriptive statistics", stats_table),
    ("fit", "Model fits (AIC = 2k - 2 loglik)", fit_table),
    ("compare", "Model comparison", compare_table),
    ("tails", "Survival R(x) and mortality h(x) by age", tails_table),
    ("risk", "Percentile VaR and TVaR by p", risk_table),
    ("verification", "Verification", verification_table),
)


def _text_sections(report: StudyReport, sections) -> list[str]:
    blocks = []
    for key, title, build in _TEXT_SECTIONS:
        if key in sections:
            headers, rows = build(report)
            if rows:
                blocks.append(title + "\n" + text_table(headers, rows))
    skipped = {"compare": "fit"}
    wanted = {skipped.get(s, s) for s in sections}
    skips = [[_label(d), s, r] for d in report.datasets for s, r in d.skipped if s in wanted]
    if skips:
        blocks.append("Skipped\n" + text_table(["dataset", "section", "reason"], skips))
    return blocks


def csv_bytes(headers, rows) -> bytes:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(headers)
    writer.writerows(rows)
    return buf.getvalue().encode("utf-8")


def render(report: StudyReport, fmt: str = "table", sections: Sequence[str] = SECTIONS) -> bytes:
    """Serialize a study; identical reports give identical bytes."""
    if fmt not in FORMATS:
        raise DataError(f"unknown output format {fmt!r}")
    if fmt == "json":
        data = study_to_dict(report)
        keep = set(sections)
        if "compare" in keep:
            keep.add("fit")
        if keep & {"tails", "risk"}:
            keep.add("model")
        for d in data["datasets"]:
            for key in ("stats", "fit", "model", "tails", "risk", "verification"):
                if key not in keep:
                    d.pop(key)
            d["skipped"] = [s for s in d["skipped"] if s["section"] in keep]
        return (json.dumps(data, indent=2, allow_nan=False) + "\n").encode("utf-8")
    if fmt == "csv":
        for key, build in (("stats", stats_table), ("fit", fit_table), ("compare", compare_table)):
            if tuple(sections) == (key,):
                headers, rows = build(report)
                return csv_bytes(headers, rows)
        return csv_bytes(CSV_COLUMNS, csv_rows(report, sections))
    return ("\n\n".join(_text_sections(report, sections)) + "\n").encode("utf-8")
