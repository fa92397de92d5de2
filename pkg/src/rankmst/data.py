"""Price ingestion, cleaning, log returns, and sliding windows.

The price CSV contract: a leading ISO-8601 ``date`` column, one column per
ticker, empty cells marking missing observations.  The sector CSV contract:
``ticker,sector`` rows with sector names drawn from the 11 GICS sectors.
"""

from __future__ import annotations

import csv
import datetime as dt
import io
import logging
import math
from dataclasses import dataclass
from typing import Sequence, TextIO

import numpy as np

from .errors import CsvFormatError, DataError

logger = logging.getLogger(__name__)

GICS_SECTORS = frozenset(
    {
        "Technology",
        "Real Estate",
        "Materials",
        "Communications",
        "Energy",
        "Financials",
        "Utilities",
        "Industrials",
        "Consumer Discretionary",
        "Healthcare",
        "Consumer Staples",
    }
)

DEFAULT_MAX_MISSING_FRAC = 0.10


@dataclass(frozen=True)
class PriceTable:
    """Adjusted close prices on a common calendar; NaN marks missing cells."""

    dates: tuple[dt.date, ...]
    tickers: tuple[str, ...]
    prices: np.ndarray  # n x p float64, NaN where missing

    def __post_init__(self):
        n, p = self.prices.shape
        if n != len(self.dates) or p != len(self.tickers):
            raise DataError("price matrix shape does not match dates/tickers")
        if len(set(self.tickers)) != p:
            raise DataError("duplicate ticker in price table")
        if any(b <= a for a, b in zip(self.dates, self.dates[1:])):
            raise DataError("dates must be strictly increasing")
        with np.errstate(invalid="ignore"):
            if np.any(self.prices[~np.isnan(self.prices)] <= 0):
                raise DataError("prices must be strictly positive where present")

    @property
    def missing(self) -> np.ndarray:
        return np.isnan(self.prices)

    @property
    def n_dates(self) -> int:
        return len(self.dates)


@dataclass(frozen=True)
class ReturnPanel:
    """Daily log returns for a fixed ticker universe; no missing values."""

    dates: tuple[dt.date, ...]
    tickers: tuple[str, ...]
    returns: np.ndarray  # n x p float64

    def __post_init__(self):
        n, p = self.returns.shape
        if n != len(self.dates) or p != len(self.tickers):
            raise DataError("return matrix shape does not match dates/tickers")
        if not np.all(np.isfinite(self.returns)):
            raise DataError("returns must be finite with no missing values")

    @property
    def n_days(self) -> int:
        return self.returns.shape[0]

    @property
    def n_assets(self) -> int:
        return self.returns.shape[1]


@dataclass(frozen=True)
class SectorMap:
    """Ticker to GICS sector assignment."""

    entries: dict[str, str]

    def __post_init__(self):
        bad = sorted(set(self.entries.values()) - GICS_SECTORS)
        if bad:
            raise DataError(f"unknown sector names: {', '.join(bad)}")

    def for_universe(self, tickers: Sequence[str]) -> "SectorMap":
        """Restrict to ``tickers``, warning about map entries that are unused.

        Raises if any ticker in the universe lacks a sector.
        """
        missing = [t for t in tickers if t not in self.entries]
        if missing:
            raise DataError(f"no sector assigned for: {', '.join(missing)}")
        unused = sorted(set(self.entries) - set(tickers))
        if unused:
            logger.warning(
                "ignoring sector entries for %d tickers outside the universe: %s",
                len(unused),
                ", ".join(unused[:10]) + ("..." if len(unused) > 10 else ""),
            )
        return SectorMap({t: self.entries[t] for t in tickers})

    def sector_of(self, ticker: str) -> str:
        return self.entries[ticker]


@dataclass(frozen=True)
class WindowSpec:
    """Sliding-window layout: 504-day windows advanced 30 days at a time."""

    window: int = 504
    step: int = 30

    def __post_init__(self):
        if self.window < 2:
            raise DataError("window length must be at least 2 days")
        if self.step < 1:
            raise DataError("window step must be at least 1 day")

    def starts(self, n_days: int) -> list[int]:
        if self.window > n_days:
            raise DataError(
                f"window of {self.window} days does not fit a panel of {n_days} days"
            )
        return list(range(0, n_days - self.window + 1, self.step))


def _as_text_stream(source: str | TextIO) -> TextIO:
    if isinstance(source, str):
        return io.StringIO(source)
    return source


def load_prices(source: str | TextIO) -> PriceTable:
    """Parse a price CSV stream into a PriceTable sorted by date.

    Individual cells that fail to parse as positive decimals become missing
    entries; structural problems (bad header, bad date, duplicate ticker)
    raise :class:`CsvFormatError` identifying the offending row/column.
    """
    reader = csv.reader(_as_text_stream(source))
    try:
        header = next(reader)
    except StopIteration:
        raise CsvFormatError("empty CSV", row=1) from None
    header = [h.strip() for h in header]
    if len(header) < 2 or header[0].lower() != "date":
        raise CsvFormatError("header must be 'date,<ticker>,...'", row=1)
    tickers = header[1:]
    if any(not t for t in tickers):
        raise CsvFormatError("empty ticker name in header", row=1)
    seen: set[str] = set()
    for t in tickers:
        if t in seen:
            raise CsvFormatError("duplicate ticker", row=1, column=t)
        seen.add(t)

    dates: list[dt.date] = []
    rows: list[list[float]] = []
    for lineno, record in enumerate(reader, start=2):
        if not record or (len(record) == 1 and not record[0].strip()):
            continue
        if len(record) != len(header):
            raise CsvFormatError(
                f"expected {len(header)} fields, found {len(record)}", row=lineno
            )
        try:
            date = dt.date.fromisoformat(record[0].strip())
        except ValueError:
            raise CsvFormatError(
                f"unparseable date {record[0]!r}", row=lineno, column="date"
            ) from None
        values = []
        for ticker, cell in zip(tickers, record[1:]):
            cell = cell.strip()
            if not cell:
                values.append(math.nan)
                continue
            try:
                price = float(cell)
            except ValueError:
                values.append(math.nan)
                continue
            if not math.isfinite(price) or price <= 0:
                raise CsvFormatError(
                    f"non-positive price {cell!r}", row=lineno, column=ticker
                )
            values.append(price)
        dates.append(date)
        rows.append(values)

    if not rows:
        raise CsvFormatError("no data rows", row=2)
    order = np.argsort(np.array([d.toordinal() for d in dates], dtype=np.int64))
    sorted_dates = [dates[i] for i in order]
    for a, b in zip(sorted_dates, sorted_dates[1:]):
        if a == b:
            raise CsvFormatError(f"duplicate date {a.isoformat()}", column="date")
    prices = np.asarray(rows, dtype=np.float64)[order]
    return PriceTable(tuple(sorted_dates), tuple(tickers), prices)


def load_sectors(source: str | TextIO) -> SectorMap:
    """Parse a ``ticker,sector`` CSV into a SectorMap."""
    reader = csv.reader(_as_text_stream(source))
    try:
        header = [h.strip().lower() for h in next(reader)]
    except StopIteration:
        raise CsvFormatError("empty sector CSV", row=1) from None
    if header[:2] != ["ticker", "sector"]:
        raise CsvFormatError("header must be 'ticker,sector'", row=1)
    entries: dict[str, str] = {}
    for lineno, record in enumerate(reader, start=2):
        if not record or (len(record) == 1 and not record[0].strip()):
            continue
        if len(record) < 2:
            raise CsvFormatError("expected 'ticker,sector'", row=lineno)
        ticker, sector = record[0].strip(), record[1].strip()
        if ticker in entries:
            raise CsvFormatError("duplicate ticker", row=lineno, column=ticker)
        if sector not in GICS_SECTORS:
            raise CsvFormatError(
                f"unknown sector {sector!r}", row=lineno, column=ticker
            )
        entries[ticker] = sector
    if not entries:
        raise CsvFormatError("no sector rows", row=2)
    return SectorMap(entries)


def clean_prices(
    table: PriceTable, max_missing_frac: float = DEFAULT_MAX_MISSING_FRAC
) -> PriceTable:
    """Drop sparse assets, then fill the remaining gaps.

    Dates on which every asset is missing (market holidays) are removed
    before the per-asset filter so they count against nobody.  Assets missing
    strictly more than ``max_missing_frac`` of the remaining dates are
    dropped; survivors are forward-filled, with leading gaps backfilled from
    the first good value.
    """
    if not 0 <= max_missing_frac < 1:
        raise DataError("max_missing_frac must lie in [0, 1)")
    missing = table.missing
    live_rows = ~missing.all(axis=1)
    prices = table.prices[live_rows]
    dates = tuple(d for d, keep in zip(table.dates, live_rows) if keep)
    if prices.shape[0] == 0:
        raise DataError("no assets remain")

    frac = np.isnan(prices).mean(axis=0)
    keep = frac <= max_missing_frac
    if not keep.any():
        raise DataError("no assets remain")
    prices = prices[:, keep]
    tickers = tuple(t for t, k in zip(table.tickers, keep) if k)

    filled = prices.copy()
    n = filled.shape[0]
    idx = np.arange(n)[:, None]
    valid = ~np.isnan(filled)
    # forward fill: index of the most recent valid row at or before each row
    last_valid = np.where(valid, idx, -1)
    np.maximum.accumulate(last_valid, axis=0, out=last_valid)
    # leading gaps: backfill from the first valid row
    first_valid = valid.argmax(axis=0)
    last_valid = np.where(last_valid < 0, first_valid[None, :], last_valid)
    filled = np.take_along_axis(filled, last_valid, axis=0)
    return PriceTable(dates, tickers, filled)


def log_returns(table: PriceTable) -> ReturnPanel:
    """Daily log returns ln(P(t+1)/P(t)); output is one row shorter."""
    if table.missing.any():
        raise DataError("price table still has missing values; clean it first")
    if table.n_dates < 2:
        raise DataError("need at least 2 price rows to form returns")
    bad = np.argwhere(table.prices <= 0)
    if bad.size:
        r, c = bad[0]
        raise DataError(
            f"non-positive price for {table.tickers[c]} on {table.dates[r].isoformat()}"
        )
    rets = np.diff(np.log(table.prices), axis=0)
    return ReturnPanel(table.dates[1:], table.tickers, rets)


def windows(
    panel: ReturnPanel, spec: WindowSpec
) -> list[tuple[int, ReturnPanel]]:
    """Slice the panel into full-length windows; a trailing partial window is dropped."""
    out = []
    for start in spec.starts(panel.n_days):
        stop = start + spec.window
        out.append(
            (
                start,
                ReturnPanel(
                    panel.dates[start:stop],
                    panel.tickers,
                    panel.returns[start:stop],
                ),
            )
        )
    return out


def sample_variances(panel: ReturnPanel) -> np.ndarray:
    """Per-asset sample variance (n-1 denominator) of the panel's returns."""
    if panel.n_days < 2:
        raise DataError("variance needs at least 2 observations")
    return panel.returns.var(axis=0, ddof=1)


def write_prices_csv(table: PriceTable, stream: TextIO) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["date", *table.tickers])
    for date, row in zip(table.dates, table.prices):
        writer.writerow([date.isoformat(), *[_format_cell(v) for v in row]])


def write_returns_csv(panel: ReturnPanel, stream: TextIO) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["date", *panel.tickers])
    for date, row in zip(panel.dates, panel.returns):
        writer.writerow([date.isoformat(), *[repr(float(v)) for v in row]])


def read_returns_csv(source: str | TextIO) -> ReturnPanel:
    """Read back a returns CSV produced by :func:`write_returns_csv`."""
    reader = csv.reader(_as_text_stream(source))
    header = next(reader)
    if header[0] != "date":
        raise CsvFormatError("header must be 'date,<ticker>,...'", row=1)
    tickers = tuple(header[1:])
    dates = []
    rows = []
    for record in reader:
        if not record:
            continue
        dates.append(dt.date.fromisoformat(record[0]))
        rows.append([float(v) for v in record[1:]])
    return ReturnPanel(tuple(dates), tickers, np.asarray(rows, dtype=np.float64))


def _format_cell(v: float) -> str:
    return "" if math.isnan(v) else repr(float(v))
