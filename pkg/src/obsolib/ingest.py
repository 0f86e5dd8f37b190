"""Loading cited-reference ages from CSV and summarising them.

Two input layouts are accepted:

* ``records``:   ``journal,subject_category,age`` (one row per cited reference)
* ``histogram``: ``journal,subject_category,age,count``

Each distinct journal becomes one :class:`AgeSample`, and every subject
category gets a sample whose counts are the sum over its journals.
"""
from __future__ import annotations

import csv
import io
import math
import re
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Mapping

from .errors import DataError, DegenerateSampleError, ParseError

DEFAULT_AGE_CAP = 150

RECORD_COLUMNS = ("journal", "subject_category", "age")
HISTOGRAM_COLUMNS = ("journal", "subject_category", "age", "count")
FORMATS = ("records", "histogram")

_INT_RE = re.compile(r"^[+-]?[0-9]+$")


@dataclass(frozen=True)
class AgeSample:
    """Histogram of cited-reference ages (years) for one journal or category."""

    dataset_id: str
    counts: Mapping[int, int]
    kind: str = "sample"
    category: str | None = None

    def __post_init__(self):
        clean = {}
        for age, n in sorted(dict(self.counts).items()):
            if isinstance(age, bool) or int(age) != age or age < 0:
                raise DataError(f"{self.dataset_id}: ages must be non-negative integers, got {age!r}")
            if isinstance(n, bool) or int(n) != n or n < 1:
                raise DataError(f"{self.dataset_id}: counts must be positive integers, got {n!r} at age {age}")
            clean[int(age)] = int(n)
        object.__setattr__(self, "counts", MappingProxyType(clean))

    @classmethod
    def from_ages(cls, dataset_id, ages: Iterable[int], **kwargs) -> "AgeSample":
        return cls(dataset_id, Counter(int(a) for a in ages), **kwargs)

    @property
    def n_obs(self) -> int:
        return sum(self.counts.values())

    @property
    def total_age(self) -> int:
        return sum(a * n for a, n in self.counts.items())

    @property
    def mean(self) -> float:
        n = self.n_obs
        if n == 0:
            raise DataError(f"{self.dataset_id}: empty sample")
        return self.total_age / n

    @property
    def variance(self) -> float:
        """Population (divide-by-n) variance."""
        m = self.mean
        return math.fsum(n * (a - m) ** 2 for a, n in self.counts.items()) / self.n_obs

    @property
    def dispersion_index(self) -> float:
        m = self.mean
        if m == 0:
            raise DegenerateSampleError(f"{self.dataset_id}: mean age is 0, index of dispersion undefined")
        return self.variance / m

    def survivors(self) -> list[int]:
        """``out[j]`` = number of observations with age > j, for j < max age."""
        if not self.counts:
            return []
        top = max(self.counts)
        out = [0] * top
        running = self.n_obs
        for j in range(top):
            running -= self.counts.get(j, 0)
            out[j] = running
        return out


def merge_samples(dataset_id, samples: Iterable[AgeSample], kind="category") -> AgeSample:
    total = Counter()
    for s in samples:
        total.update(s.counts)
    return AgeSample(dataset_id, total, kind=kind, category=dataset_id if kind == "category" else None)


def median_age(sample: AgeSample) -> float:
    """Median of the expanded histogram; even counts average the central pair."""
    n = sample.n_obs
    if n == 0:
        raise DataError(f"{sample.dataset_id}: empty sample")
    lo_rank, hi_rank = (n - 1) // 2, n // 2
    lo = hi = None
    seen = 0
    for age, cnt in sample.counts.items():
        seen += cnt
        if lo is None and seen > lo_rank:
            lo = age
        if seen > hi_rank:
            hi = age
            break
    return (lo + hi) / 2.0


@dataclass(frozen=True)
class StatsReport:
    dataset_id: str
    n_obs: int
    mean: float
    median: float
    mode: int
    min: int
    max: int
    variance: float
    dispersion_index: float


def descriptive_stats(sample: AgeSample) -> StatsReport:
    if sample.n_obs == 0:
        raise DataError(f"{sample.dataset_id}: empty sample")
    counts = sample.counts
    top = max(counts.values())
    mode = min(a for a, n in counts.items() if n == top)
    return StatsReport(
        dataset_id=sample.dataset_id,
        n_obs=sample.n_obs,
        mean=sample.mean,
        median=median_age(sample),
        mode=mode,
        min=min(counts),
        max=max(counts),
        variance=sample.variance,
        dispersion_index=sample.dispersion_index,
    )


@dataclass
class IngestResult:
    samples: list[AgeSample]
    issues: list[ParseError] = field(default_factory=list)
    rows_read: int = 0

    def journals(self) -> list[AgeSample]:
        return [s for s in self.samples if s.kind == "journal"]

    def categories(self) -> list[AgeSample]:
        return [s for s in self.samples if s.kind == "category"]

    def get(self, dataset_id, kind=None) -> AgeSample:
        for s in self.samples:
            if s.dataset_id == dataset_id and (kind is None or s.kind == kind):
                return s
        raise KeyError(dataset_id)


def _parse_int(text, line, name):
    text = (text or "").strip()
    if text == "":
        raise ParseError("missing value", line, name)
    if not _INT_RE.match(text):
        raise ParseError(f"not a base-10 integer: {text!r}", line, name)
    return int(text)


def _text_stream(stream):
    if isinstance(stream, (bytes, bytearray)):
        return io.StringIO(bytes(stream).decode("utf-8-sig"), newline="")
    if isinstance(stream, str):
        return io.StringIO(stream, newline="")
    if isinstance(stream, io.TextIOBase):
        return stream
    return io.TextIOWrapper(stream, encoding="utf-8-sig", newline="")


def read_ages(stream, fmt: str = "records", age_cap: int = DEFAULT_AGE_CAP, lenient: bool = False) -> IngestResult:
    """Parse a CSV stream into journal and category samples.

    ``stream`` may be a text stream, a binary stream, ``bytes`` or ``str``.
    In the default fail-fast mode the first bad row raises
    :class:`ParseError`; with ``lenient=True`` bad rows are skipped and
    reported in ``IngestResult.issues``.  A header lacking a required
    column is fatal in both modes.
    """
    if fmt not in FORMATS:
        raise DataError(f"unknown format {fmt!r}; expected one of {FORMATS}")
    if age_cap < 0:
        raise DataError(f"age_cap must be non-negative, got {age_cap}")
    columns = RECORD_COLUMNS if fmt == "records" else HISTOGRAM_COLUMNS

    reader = csv.reader(_text_stream(stream))
    header = next(reader, None)
    if header is None:
        raise ParseError("empty input, no header", 1)
    header = [h.strip().lstrip("\ufeff") for h in header]
    for col in columns:
        if col not in header:
            raise ParseError(f"missing column {col!r} in header", 1, col)
    index = {col: header.index(col) for col in columns}

    per_journal = defaultdict(Counter)
    journal_category = {}
    issues = []
    rows = 0
    for row in reader:
        line_no = reader.line_num
        if not row or all(not cell.strip() for cell in row):
            continue
        rows += 1
        try:
            values = {}
            for col in columns:
                i = index[col]
                if i >= len(row):
                    raise ParseError("missing value", line_no, col)
                values[col] = row[i].strip()
            for col in ("journal", "subject_category"):
                if not values[col]:
                    raise ParseError("missing value", line_no, col)
            age = _parse_int(values["age"], line_no, "age")
            if age < 0:
                raise ParseError(f"negative age {age}", line_no, "age")
            if age > age_cap:
                raise ParseError(f"age {age} exceeds age cap {age_cap}", line_no, "age")
            count = 1
            if fmt == "histogram":
                count = _parse_int(values["count"], line_no, "count")
                if count <= 0:
                    raise ParseError(f"count must be positive, got {count}", line_no, "count")
        except ParseError as err:
            if not lenient:
                raise
            issues.append(err)
            continue
        journal = values["journal"]
        per_journal[journal][age] += count
        journal_category.setdefault(journal, values["subject_category"])

    journals = [
        AgeSample(j, per_journal[j], kind="journal", category=journal_category[j])
        for j in sorted(per_journal)
    ]
    by_category = defaultdict(list)
    for s in journals:
        by_category[s.category].append(s)
    categories = [merge_samples(c, by_category[c], kind="category") for c in sorted(by_category)]
    return IngestResult(samples=journals + categories, issues=issues, rows_read=rows)


def parse_ages(stream, fmt: str = "records", age_cap: int = DEFAULT_AGE_CAP, lenient: bool = False) -> list[AgeSample]:
    """Journal samples followed by per-category aggregates."""
    return read_ages(stream, fmt, age_cap=age_cap, lenient=lenient).samples


def write_histogram(samples: Iterable[AgeSample], stream) -> None:
    """Write samples as histogram CSV (``journal`` column = dataset id)."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(HISTOGRAM_COLUMNS)
    for s in samples:
        category = s.category or s.dataset_id
        for age, n in s.counts.items():
            writer.writerow([s.dataset_id, category, age, n])


def write_records(journal: str, category: str, ages: Iterable[int], stream) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(RECORD_COLUMNS)
    for a in ages:
        writer.writerow([journal, category, int(a)])
