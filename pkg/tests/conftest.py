import json
from pathlib import Path

import pytest

from obsolib.dist import NegBinModel

DATA = Path(__file__).parent / "data"


def load_reference():
    with open(DATA / "category_reference.json") as fh:
        return json.load(fh)


def category_models(ref, beta_source="mean"):
    """NB models for the eight categories.

    ``beta_source="mean"`` rebuilds beta as alpha / sample mean (the MLE
    stationarity condition) instead of using the 2-decimal rounded beta;
    ``"theta"`` uses the Poisson theta column instead of the mean; anything
    else (e.g. ``"rounded"``) takes the 2-decimal beta as is.
    """
    out = {}
    for name, row in ref["categories"].items():
        if beta_source == "mean":
            beta = row["alpha"] / row["sample_mean"]
        elif beta_source == "theta":
            beta = row["alpha"] / row["poisson_theta"]
        else:
            beta = row["beta"]
        out[name] = NegBinModel(row["alpha"], beta)
    return out


@pytest.fixture(scope="session")
def reference():
    return load_reference()


@pytest.fixture(scope="session")
def models(reference):
    return category_models(reference)


def printed_interval(printed: str):
    """Interval of true values that round to the printed decimal string."""
    text = printed.strip()
    if "E" in text.upper():
        mantissa, exp = text.upper().split("E")
        decimals = len(mantissa.split(".")[1]) if "." in mantissa else 0
        half = 0.5 * 10.0 ** (int(exp) - decimals)
    else:
        decimals = len(text.split(".")[1]) if "." in text else 0
        half = 0.5 * 10.0 ** (-decimals)
    value = float(text)
    return value - half, value + half


def survival_close(got: float, printed: str, abs_tol=5e-3, rel_tol=0.30) -> bool:
    """Absolute tolerance for values >= 1e-3, relative below.

    Below 1e-3 the relative band is taken around the whole rounding
    interval of the printed value, since "0.0001" only pins the true value
    to [5e-5, 1.5e-4].
    """
    value = float(printed)
    if value >= 1e-3:
        return abs(got - value) <= abs_tol
    lo, hi = printed_interval(printed)
    return (1 - rel_tol) * lo <= got <= (1 + rel_tol) * hi


def survival_close_strict(got: float, printed: str, abs_tol=5e-3, rel_tol=0.30) -> bool:
    value = float(printed)
    if value >= 1e-3:
        return abs(got - value) <= abs_tol
    return abs(got / value - 1) <= rel_tol
