"""Price data, the Sharpe-ratio objective, and realized strategy statistics.

A PriceSeries is an immutable table of strictly positive close prices.
The optimization objective for a trade date is the Sharpe ratio of a
portfolio over the 10 trading days preceding it, computed from simple
1-day returns with zero risk-free rate and the sample (n-1) standard
deviation.  Forward-looking evaluation of executed strategies lives in
realized_stats.

The real dataset the workflow was designed around is not distributable,
so this module also ships a seeded geometric-random-walk generator with
configurable cross-asset correlation.
"""

from __future__ import annotations

import csv
import io
from bisect import bisect_left
from dataclasses import dataclass
from datetime import date, timedelta
from typing import Sequence

import numpy as np

from .simplex import Portfolio

DEFAULT_LOOKBACK = 10
MIN_DATES = 11

# finite stand-in for an infinite Sharpe ratio (zero variance, nonzero
# mean); the GP surrogate needs finite targets
LARGE_SCORE = 1e6

DEFAULT_ASSETS = ("INDU", "ENER", "COND", "UTIL", "TELE")


class ParseError(ValueError):
    """CSV input is malformed; the message names the offending line."""


class InsufficientHistoryError(ValueError):
    """Not enough trading days before the requested anchor date."""


@dataclass(frozen=True, eq=False)
class PriceSeries:
    """Close prices on strictly increasing trading dates."""

    dates: tuple[date, ...]
    assets: tuple[str, ...]
    prices: np.ndarray  # (T, A)

    def __post_init__(self):
        p = np.array(self.prices, dtype=float)
        object.__setattr__(self, "dates", tuple(self.dates))
        object.__setattr__(self, "assets", tuple(self.assets))
        if p.ndim != 2 or p.shape != (len(self.dates), len(self.assets)):
            raise ValueError("prices must be a (dates x assets) matrix")
        if len(self.dates) < MIN_DATES:
            raise ValueError(f"need at least {MIN_DATES} dates, got {len(self.dates)}")
        if not all(a < b for a, b in zip(self.dates, self.dates[1:])):
            raise ValueError("dates must be strictly increasing")
        if not np.all(np.isfinite(p)) or np.any(p <= 0.0):
            raise ValueError("prices must be finite and strictly positive")
        p.setflags(write=False)
        object.__setattr__(self, "prices", p)

    @property
    def n_assets(self) -> int:
        return len(self.assets)

    def index_of(self, d: date) -> int:
        i = bisect_left(self.dates, d)
        if i == len(self.dates) or self.dates[i] != d:
            raise KeyError(f"date {d.isoformat()} not in series")
        return i


@dataclass(frozen=True, eq=False)
class ReturnWindow:
    """Simple daily returns for the lookback window preceding anchor_date."""

    returns: np.ndarray  # (T, A)
    anchor_date: date

    def __post_init__(self):
        r = np.array(self.returns, dtype=float)
        if r.ndim != 2:
            raise ValueError("returns must be a matrix")
        if not np.all(np.isfinite(r)) or np.any(r <= -1.0):
            raise ValueError("each return must be finite and > -1")
        r.setflags(write=False)
        object.__setattr__(self, "returns", r)

    @property
    def n_assets(self) -> int:
        return self.returns.shape[1]


def load_price_series(source) -> PriceSeries:
    """Parse `date,<asset>,...` CSV text (or file object) into a PriceSeries.

    Rows may arrive in any order; the result is sorted by date.  Raises
    ParseError with a 1-based line number on malformed rows, non-positive
    prices, duplicate dates, or fewer than MIN_DATES rows.
    """
    if isinstance(source, (bytes, bytearray)):
        source = source.decode("utf-8")
    if isinstance(source, str):
        source = io.StringIO(source)
    reader = csv.reader(source)

    try:
        header = next(reader)
    except StopIteration:
        raise ParseError("empty input: missing header row") from None
    header = [h.strip() for h in header]
    if len(header) < 2 or header[0].lower() != "date":
        raise ParseError("line 1: header must be 'date,<asset1>,...,<assetN>'")
    assets = tuple(header[1:])

    rows: list[tuple[date, list[float]]] = []
    seen: dict[date, int] = {}
    for lineno, row in enumerate(reader, start=2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue  # trailing blank line
        if len(row) != len(header):
            raise ParseError(f"line {lineno}: expected {len(header)} cells, got {len(row)}")
        try:
            d = date.fromisoformat(row[0].strip())
        except ValueError:
            raise ParseError(f"line {lineno}: invalid ISO-8601 date {row[0]!r}") from None
        if d in seen:
            raise ParseError(f"line {lineno}: duplicate date {d.isoformat()} (first at line {seen[d]})")
        seen[d] = lineno
        values = []
        for cell in row[1:]:
            try:
                v = float(cell)
            except ValueError:
                raise ParseError(f"line {lineno}: invalid number {cell!r}") from None
            if not np.isfinite(v) or v <= 0.0:
                raise ParseError(f"line {lineno}: non-positive price {cell!r}")
            values.append(v)
        rows.append((d, values))

    if len(rows) < MIN_DATES:
        raise ParseError(f"need at least {MIN_DATES} price rows, got {len(rows)}")
    rows.sort(key=lambda item: item[0])
    dates = tuple(d for d, _ in rows)
    prices = np.array([v for _, v in rows], dtype=float)
    return PriceSeries(dates=dates, assets=assets, prices=prices)


def write_csv(series: PriceSeries) -> str:
    """Serialize a PriceSeries to the CSV format load_price_series accepts.

    Floats are written with repr so the file reloads bit-exactly.
    """
    lines = ["date," + ",".join(series.assets)]
    for i, d in enumerate(series.dates):
        cells = ",".join(repr(float(v)) for v in series.prices[i])
        lines.append(f"{d.isoformat()},{cells}")
    return "\n".join(lines) + "\n"


def return_window(series: PriceSeries, anchor: date, lookback: int = DEFAULT_LOOKBACK) -> ReturnWindow:
    """Daily simple returns over the `lookback` intervals ending at the last
    trading day strictly before `anchor`.

    The anchor itself is excluded: trading on day t may only use prices up
    to day t-1.
    """
    if lookback < 1:
        raise ValueError("lookback must be >= 1")
    n_before = bisect_left(series.dates, anchor)
    if n_before < lookback + 1:
        if len(series.dates) > lookback + 1:
            earliest = series.dates[lookback + 1]
        else:
            earliest = series.dates[-1] + timedelta(days=1)
        raise InsufficientHistoryError(
            f"anchor {anchor.isoformat()} has {n_before} prior trading days, "
            f"need {lookback + 1}; earliest usable anchor is {earliest.isoformat()}"
        )
    window = series.prices[n_before - (lookback + 1): n_before]
    returns = window[1:] / window[:-1] - 1.0
    return ReturnWindow(returns=returns, anchor_date=anchor)


def sharpe_objective(window: ReturnWindow, portfolio: Portfolio) -> float:
    """Sharpe ratio of the portfolio's daily returns over the window.

    mean / sample-std with zero risk-free rate and no annualization.  A
    zero-variance window scores 0 when the mean is 0, otherwise
    sign(mean) * LARGE_SCORE so the objective stays finite.
    """
    if portfolio.n_assets != window.n_assets:
        raise ValueError(
            f"portfolio has {portfolio.n_assets} assets, window has {window.n_assets}"
        )
    r = window.returns @ portfolio.weights
    mean = float(r.mean())
    std = float(r.std(ddof=1))
    if std == 0.0:
        if mean == 0.0:
            return 0.0
        return LARGE_SCORE if mean > 0 else -LARGE_SCORE
    return mean / std


def realized_stats(
    series: PriceSeries,
    trade_dates: Sequence[date],
    strategy_per_date: Sequence[Portfolio],
    horizon: int = 1,
) -> tuple[float, float]:
    """Sample mean and variance of realized per-date strategy returns.

    The realized return for a trade date is the portfolio-weighted simple
    return from that date's close to the close `horizon` trading days
    later.  Requires at least two trade dates (variance is sample, n-1).
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    if len(trade_dates) != len(strategy_per_date):
        raise ValueError("one portfolio required per trade date")
    if len(trade_dates) < 2:
        raise ValueError(f"need >=2 trade dates for a sample variance, got {len(trade_dates)}")
    realized = []
    for d, portfolio in zip(trade_dates, strategy_per_date):
        try:
            i = series.index_of(d)
        except KeyError:
            raise ValueError(f"trade date {d.isoformat()} not in series") from None
        if i + horizon >= len(series.dates):
            raise ValueError(
                f"trade date {d.isoformat()} lacks {horizon} forward trading day(s)"
            )
        fwd = series.prices[i + horizon] / series.prices[i] - 1.0
        realized.append(float(fwd @ portfolio.weights))
    arr = np.asarray(realized)
    return float(arr.mean()), float(arr.var(ddof=1))


# ---------------------------------------------------------------------------
# synthetic data


def trading_days(start: date, n: int) -> list[date]:
    """n consecutive weekdays starting at the first weekday >= start."""
    out: list[date] = []
    d = start
    while len(out) < n:
        if d.weekday() < 5:
            out.append(d)
        d += timedelta(days=1)
    return out


def second_wednesdays(start: date, end: date) -> list[date]:
    """The second Wednesday of every month intersecting [start, end]."""
    out: list[date] = []
    year, month = start.year, start.month
    while (year, month) <= (end.year, end.month):
        first = date(year, month, 1)
        offset = (2 - first.weekday()) % 7  # Wednesday
        second = first + timedelta(days=offset + 7)
        if start <= second <= end:
            out.append(second)
        month += 1
        if month == 13:
            month, year = 1, year + 1
    return out


def correlation_preset(name: str, n_assets: int) -> np.ndarray:
    """Named correlation structures for the generator.

    'identity' is independent assets; 'two-group' splits the universe
    into a first block of ceil(A*0.6) assets and the rest, positively
    correlated within blocks and anticorrelated across them.
    """
    if name == "identity":
        return np.eye(n_assets)
    if name == "two-group":
        split = max(1, min(n_assets - 1, round(n_assets * 0.6)))
        corr = np.full((n_assets, n_assets), -0.45)
        corr[:split, :split] = 0.5
        corr[split:, split:] = 0.5
        np.fill_diagonal(corr, 1.0)
        return corr
    raise ValueError(f"unknown correlation preset {name!r}")


def generate_price_series(
    assets: Sequence[str] = DEFAULT_ASSETS,
    days: int = 260,
    start: date = date(2016, 1, 4),
    seed: int = 0,
    correlation: str | np.ndarray | Sequence = "identity",
    drift: float | Sequence[float] = 0.0,
    daily_vol: float | Sequence[float] = 0.01,
    initial: float | Sequence[float] = 100.0,
) -> PriceSeries:
    """Seeded geometric random walk over weekday trading dates.

    Log prices take i.i.d. Gaussian steps with per-asset drift and a
    covariance of diag(vol) @ corr @ diag(vol).  Identical arguments give
    an identical series.
    """
    assets = tuple(assets)
    n = len(assets)
    if n < 2:
        raise ValueError("need at least 2 assets")
    if days < MIN_DATES:
        raise ValueError(f"need at least {MIN_DATES} days")
    if isinstance(correlation, str):
        corr = correlation_preset(correlation, n)
    else:
        corr = np.asarray(correlation, dtype=float)
    if corr.shape != (n, n):
        raise ValueError(f"correlation must be {n}x{n}")
    if not np.allclose(corr, corr.T, atol=1e-12):
        raise ValueError("correlation matrix must be symmetric")
    if not np.allclose(np.diag(corr), 1.0, atol=1e-9):
        raise ValueError("correlation matrix must have unit diagonal")

    vol = np.broadcast_to(np.asarray(daily_vol, dtype=float), (n,)).copy()
    mu = np.broadcast_to(np.asarray(drift, dtype=float), (n,)).copy()
    p0 = np.broadcast_to(np.asarray(initial, dtype=float), (n,)).copy()
    if np.any(vol < 0) or np.any(p0 <= 0):
        raise ValueError("volatility must be >= 0 and initial prices > 0")

    cov = np.outer(vol, vol) * corr
    try:
        chol = np.linalg.cholesky(cov + 1e-18 * np.eye(n))
    except np.linalg.LinAlgError:
        raise ValueError("correlation matrix is not positive definite") from None

    rng = np.random.default_rng(seed)
    steps = rng.standard_normal((days - 1, n)) @ chol.T + mu
    log_prices = np.vstack([np.log(p0), np.log(p0) + np.cumsum(steps, axis=0)])
    return PriceSeries(
        dates=tuple(trading_days(start, days)),
        assets=assets,
        prices=np.exp(log_prices),
    )
