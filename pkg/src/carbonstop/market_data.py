"""Daily allowance price ingestion and GBM parameter estimation.

Prices are treated as one observation per trading day: consecutive rows are
consecutive unit time steps, regardless of calendar gaps.  The drift estimate
is the plain mean of daily log returns (no Ito +sigma^2/2 adjustment), which
is the convention the rest of the package is calibrated to; it estimates the
log-drift mu - sigma^2/2 of the underlying GBM, not mu itself.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from datetime import date, datetime

import numpy as np

from .errors import DataError

DEFAULT_COLUMNS = {"date": "date", "price": "close", "volume": "volume"}


@dataclass(frozen=True)
class PriceSeries:
    """Dated daily allowance quotations.

    Dates must be strictly increasing and prices strictly positive.  Rows
    with zero traded volume are retained; `zero_volume_indices` flags them.
    """

    dates: tuple[date, ...]
    prices: tuple[float, ...]
    volumes: tuple[float, ...]
    label: str = ""

    def __post_init__(self):
        if not (len(self.dates) == len(self.prices) == len(self.volumes)):
            raise DataError("dates, prices and volumes must have equal length")
        for i in range(1, len(self.dates)):
            if self.dates[i] <= self.dates[i - 1]:
                raise DataError(
                    f"non-monotone dates: {self.dates[i]} follows {self.dates[i - 1]}"
                )
        for i, p in enumerate(self.prices):
            if not (p > 0):
                raise DataError(f"non-positive price {p} at row {i}")
        for i, v in enumerate(self.volumes):
            if v < 0:
                raise DataError(f"negative volume {v} at row {i}")

    def __len__(self) -> int:
        return len(self.prices)

    @property
    def zero_volume_indices(self) -> tuple[int, ...]:
        return tuple(i for i, v in enumerate(self.volumes) if v == 0)


@dataclass(frozen=True)
class ReturnSeries:
    """Daily log returns r_i = ln(Y_i) - ln(Y_{i-1})."""

    returns: tuple[float, ...]

    def __len__(self) -> int:
        return len(self.returns)


@dataclass(frozen=True)
class GbmEstimate:
    """Per-trading-day drift/volatility estimate from historical returns."""

    mu: float
    sigma: float
    sample_count: int

    def to_dict(self) -> dict:
        return {"mu": self.mu, "sigma": self.sigma, "sample_count": self.sample_count}


def _parse_date(text: str, line_no: int) -> date:
    try:
        return datetime.strptime(text.strip(), "%Y-%m-%d").date()
    except ValueError as exc:
        raise DataError(f"line {line_no}: unparseable date {text!r}") from exc


def load_price_csv(
    path,
    columns: dict[str, str] | None = None,
    label: str = "",
) -> PriceSeries:
    """Load a PriceSeries from a headered CSV file.

    `columns` maps the logical names {"date", "price", "volume"} to the
    file's header names; defaults to date/close/volume.  Dates must be
    ISO-8601 (YYYY-MM-DD).  A missing volume column is treated as all-zero.
    """
    mapping = dict(DEFAULT_COLUMNS)
    if columns:
        mapping.update(columns)

    try:
        handle = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot open price CSV {path}: {exc}") from exc

    dates: list[date] = []
    prices: list[float] = []
    volumes: list[float] = []
    with handle:
        reader = csv.DictReader(handle)
        header = reader.fieldnames or []
        for logical in ("date", "price"):
            if mapping[logical] not in header:
                raise DataError(
                    f"missing column {mapping[logical]!r} (for {logical}) in {path}"
                )
        has_volume = mapping["volume"] in header
        for row in reader:
            line_no = reader.line_num
            dates.append(_parse_date(row[mapping["date"]], line_no))
            try:
                prices.append(float(row[mapping["price"]]))
            except (TypeError, ValueError) as exc:
                raise DataError(
                    f"line {line_no}: unparseable price {row[mapping['price']]!r}"
                ) from exc
            if has_volume:
                try:
                    volumes.append(float(row[mapping["volume"]]))
                except (TypeError, ValueError) as exc:
                    raise DataError(
                        f"line {line_no}: unparseable volume "
                        f"{row[mapping['volume']]!r}"
                    ) from exc
            else:
                volumes.append(0.0)

    return PriceSeries(tuple(dates), tuple(prices), tuple(volumes), label=label)


def log_returns(series: PriceSeries) -> ReturnSeries:
    """Daily log returns of a price series (length n-1)."""
    if len(series) < 2:
        raise DataError("need at least 2 prices to compute returns")
    logs = np.log(np.asarray(series.prices))
    return ReturnSeries(tuple(np.diff(logs).tolist()))


def estimate_gbm(returns: ReturnSeries) -> GbmEstimate:
    """Historical drift/volatility estimators.

    mu is the sample mean of the log returns and sigma the sample standard
    deviation with an n-1 denominator, both per trading day.
    """
    n = len(returns)
    if n < 2:
        raise DataError("need at least 2 returns to estimate sigma")
    r = np.asarray(returns.returns)
    mu = float(r.mean())
    sigma = math.sqrt(float(np.sum((r - mu) ** 2)) / (n - 1))
    return GbmEstimate(mu=mu, sigma=sigma, sample_count=n)


def split_at(series: PriceSeries, cutoff: date) -> tuple[PriceSeries, PriceSeries]:
    """Split into (strictly before cutoff, at/after cutoff).

    The cutoff must fall within the series' date range; concatenating the
    parts restores the input.  Either part may be empty at the range edges.
    """
    if not series.dates:
        raise DataError("cannot split an empty series")
    if cutoff < series.dates[0] or cutoff > series.dates[-1]:
        raise DataError(
            f"cutoff {cutoff} outside date range "
            f"[{series.dates[0]}, {series.dates[-1]}]"
        )
    k = sum(1 for d in series.dates if d < cutoff)
    head = _slice(series, 0, k, f"{series.label}[:{cutoff}]")
    tail = _slice(series, k, len(series), f"{series.label}[{cutoff}:]")
    return head, tail


def _slice(series: PriceSeries, lo: int, hi: int, label: str) -> PriceSeries:
    return PriceSeries(
        series.dates[lo:hi], series.prices[lo:hi], series.volumes[lo:hi], label=label
    )
