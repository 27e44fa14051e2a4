"""Price ingestion, daily returns, window features, and synthetic markets.

Panels are dense date x ticker matrices. A ticker without a close on some
date carries NaN in that cell; any window that touches a NaN excludes that
ticker from the window's universe rather than imputing. All returned objects
are immutable (arrays are marked read-only) and safe to share across threads.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from datetime import date
from typing import NamedTuple, Sequence

import numpy as np

from .errors import (
    EmptyUniverseError,
    InsufficientDataError,
    MalformedInputError,
    ValidationError,
)

FEATURE_WINDOW = 20   # rows needed for m20 / v20
SHORT_WINDOW = 5      # rows needed for m5
_BASE_PRICE = 100.0
_DAYS_PER_MONTH = 21  # synthetic calendar: trading days per synthetic month


def _freeze(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class PricePanel:
    """Aligned date x ticker matrix of daily closes (NaN marks a missing cell)."""

    dates: tuple[date, ...]
    tickers: tuple[str, ...]
    closes: np.ndarray

    def __post_init__(self):
        closes = np.asarray(self.closes, dtype=np.float64)
        if closes.shape != (len(self.dates), len(self.tickers)):
            raise ValidationError(
                f"closes shape {closes.shape} does not match "
                f"{len(self.dates)} dates x {len(self.tickers)} tickers"
            )
        if len(self.dates) >= 2 and any(
            a >= b for a, b in zip(self.dates, self.dates[1:])
        ):
            raise ValidationError("dates must be strictly increasing")
        present = ~np.isnan(closes)
        if not np.all(closes[present] > 0):
            bad = np.argwhere(present & ~(closes > 0))[0]
            raise ValidationError(
                f"non-positive close for {self.tickers[bad[1]]} on {self.dates[bad[0]]}"
            )
        object.__setattr__(self, "closes", _freeze(closes))

    @property
    def n_dates(self) -> int:
        return len(self.dates)

    @property
    def n_tickers(self) -> int:
        return len(self.tickers)


@dataclass(frozen=True)
class ReturnPanel:
    """Daily simple returns; row t covers the move from date t to date t+1."""

    dates: tuple[date, ...]
    tickers: tuple[str, ...]
    returns: np.ndarray

    def __post_init__(self):
        returns = np.asarray(self.returns, dtype=np.float64)
        if returns.shape != (len(self.dates), len(self.tickers)):
            raise ValidationError("returns shape does not match dates x tickers")
        object.__setattr__(self, "returns", _freeze(returns))

    @property
    def n_rows(self) -> int:
        return len(self.dates)


class StockFeatures(NamedTuple):
    m5: float
    m20: float
    v20: float


@dataclass(frozen=True)
class SyntheticMarketConfig:
    """Regime-switching geometric random walk used for desk-scale tests.

    ``group_drifts[r][g]`` is the daily drift of stock group ``g`` during
    regime ``r``; regimes rotate every ``regime_length`` days. Stocks are
    split into ``len(group_vols)`` equal contiguous groups.
    """

    n_stocks: int
    n_days: int
    n_regimes: int
    regime_length: int
    group_drifts: tuple[tuple[float, ...], ...]
    group_vols: tuple[float, ...]
    seed: int
    start_month: str = "2020-01"

    def __post_init__(self):
        object.__setattr__(
            self, "group_drifts", tuple(tuple(map(float, row)) for row in self.group_drifts)
        )
        object.__setattr__(self, "group_vols", tuple(map(float, self.group_vols)))

    @property
    def n_groups(self) -> int:
        return len(self.group_vols)

    def validate(self) -> None:
        if self.n_stocks < 1 or self.n_days < 2:
            raise ValidationError("need n_stocks >= 1 and n_days >= 2")
        if self.n_regimes < 1:
            raise ValidationError("need n_regimes >= 1")
        if self.regime_length < _DAYS_PER_MONTH:
            raise ValidationError(f"regime_length must be >= {_DAYS_PER_MONTH}")
        if self.n_groups == 0 or self.n_stocks % self.n_groups != 0:
            raise ValidationError("n_stocks must be divisible by the group count")
        if len(self.group_drifts) != self.n_regimes or any(
            len(row) != self.n_groups for row in self.group_drifts
        ):
            raise ValidationError("group_drifts must be n_regimes x n_groups")
        if any(v < 0 for v in self.group_vols):
            raise ValidationError("group_vols must be non-negative")
        try:
            _parse_month(self.start_month)
        except ValueError as exc:
            raise ValidationError(f"bad start_month {self.start_month!r}") from exc


def _parse_month(text: str) -> tuple[int, int]:
    year, month = text.split("-")
    y, m = int(year), int(month)
    if not 1 <= m <= 12:
        raise ValueError(text)
    return y, m


def synthetic_dates(start_month: str, n_days: int) -> tuple[date, ...]:
    """Synthetic trading calendar: the first 21 calendar days of each month."""
    year, month = _parse_month(start_month)
    out = []
    day = 1
    for _ in range(n_days):
        out.append(date(year, month, day))
        day += 1
        if day > _DAYS_PER_MONTH:
            day = 1
            month += 1
            if month > 12:
                month, year = 1, year + 1
    return tuple(out)


def load_prices(path, fmt: str = "csv") -> PricePanel:
    """Read a ``date,ticker,close`` CSV into an aligned PricePanel.

    Dates are sorted ascending; duplicate (date, ticker) cells and
    non-positive prices are rejected.
    """
    if fmt != "csv":
        raise ValidationError(f"unsupported price file format {fmt!r}")
    rows: dict[tuple[date, str], float] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["date", "ticker", "close"]:
            raise MalformedInputError(f"{path}: expected header 'date,ticker,close'")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise MalformedInputError(f"{path}:{lineno}: expected 3 fields, got {len(row)}")
            try:
                d = date.fromisoformat(row[0].strip())
                close = float(row[2])
            except ValueError as exc:
                raise MalformedInputError(f"{path}:{lineno}: {exc}") from exc
            ticker = row[1].strip()
            if not ticker:
                raise MalformedInputError(f"{path}:{lineno}: empty ticker")
            if not np.isfinite(close) or close <= 0:
                raise ValidationError(f"{path}:{lineno}: non-positive close {close} for {ticker}")
            key = (d, ticker)
            if key in rows:
                raise ValidationError(f"{path}:{lineno}: duplicate cell ({d}, {ticker})")
            rows[key] = close
    if not rows:
        raise MalformedInputError(f"{path}: no data rows")
    dates = tuple(sorted({d for d, _ in rows}))
    if len(dates) < 2:
        raise InsufficientDataError(f"{path}: need at least 2 dates, got {len(dates)}")
    tickers = tuple(sorted({t for _, t in rows}))
    closes = np.full((len(dates), len(tickers)), np.nan)
    date_ix = {d: i for i, d in enumerate(dates)}
    ticker_ix = {t: j for j, t in enumerate(tickers)}
    for (d, t), close in rows.items():
        closes[date_ix[d], ticker_ix[t]] = close
    return PricePanel(dates=dates, tickers=tickers, closes=closes)


def load_benchmark(path) -> tuple[tuple[date, ...], np.ndarray]:
    """Read a ``date,close`` CSV; returns sorted dates and their closes."""
    rows: dict[date, float] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["date", "close"]:
            raise MalformedInputError(f"{path}: expected header 'date,close'")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                d = date.fromisoformat(row[0].strip())
                close = float(row[1])
            except (ValueError, IndexError) as exc:
                raise MalformedInputError(f"{path}:{lineno}: {exc}") from exc
            if not np.isfinite(close) or close <= 0:
                raise ValidationError(f"{path}:{lineno}: non-positive close {close}")
            if d in rows:
                raise ValidationError(f"{path}:{lineno}: duplicate date {d}")
            rows[d] = close
    if len(rows) < 2:
        raise InsufficientDataError(f"{path}: need at least 2 dates")
    dates = tuple(sorted(rows))
    closes = np.array([rows[d] for d in dates])
    return dates, closes


def compute_returns(prices: PricePanel) -> ReturnPanel:
    """Daily simple returns: r[t] = close[t+1]/close[t] - 1 (NaN propagates)."""
    if prices.n_dates < 2:
        raise InsufficientDataError("need at least 2 dates to compute returns")
    with np.errstate(invalid="ignore"):
        returns = prices.closes[1:] / prices.closes[:-1] - 1.0
    return ReturnPanel(dates=prices.dates[1:], tickers=prices.tickers, returns=returns)


def _compound(r: np.ndarray) -> float:
    return float(np.prod(1.0 + r) - 1.0)


def window_features(returns: ReturnPanel, end_index: int, ticker: int) -> StockFeatures:
    """Features of one stock over the 20 return rows ending at ``end_index``.

    m5 and m20 are compounded cumulative returns over the trailing 5 and 20
    rows; v20 is the sample standard deviation (ddof=1) of the 20 rows.
    """
    if end_index < FEATURE_WINDOW - 1:
        raise InsufficientDataError(
            f"end_index {end_index} leaves fewer than {FEATURE_WINDOW} return rows"
        )
    if end_index >= returns.n_rows:
        raise InsufficientDataError(f"end_index {end_index} out of range")
    win = returns.returns[end_index - FEATURE_WINDOW + 1 : end_index + 1, ticker]
    if not np.all(np.isfinite(win)):
        raise InsufficientDataError(
            f"ticker {returns.tickers[ticker]} lacks full coverage in window"
        )
    return StockFeatures(
        m5=_compound(win[-SHORT_WINDOW:]),
        m20=_compound(win),
        v20=float(np.std(win, ddof=1)),
    )


def feature_matrix(
    returns: ReturnPanel, end_index: int, window: int = FEATURE_WINDOW
) -> tuple[np.ndarray, list[int]]:
    """Per-stock [m5, m20, v20] rows for every ticker fully covered in the window.

    ``window`` (>= 20) controls the coverage requirement; features themselves
    always use the trailing 20/5 rows. Returns the N' x 3 matrix and the
    ticker indices forming the window's universe, in ticker order.
    """
    if window < FEATURE_WINDOW:
        raise ValidationError(f"window must be >= {FEATURE_WINDOW}")
    if end_index < window - 1:
        raise InsufficientDataError(
            f"end_index {end_index} leaves fewer than {window} return rows"
        )
    if end_index >= returns.n_rows:
        raise InsufficientDataError(f"end_index {end_index} out of range")
    block = returns.returns[end_index - window + 1 : end_index + 1]
    covered = np.all(np.isfinite(block), axis=0)
    universe = [int(i) for i in np.flatnonzero(covered)]
    if not universe:
        raise EmptyUniverseError(f"no ticker has full coverage ending at row {end_index}")
    feat = block[-FEATURE_WINDOW:, universe]
    growth = np.prod(1.0 + feat, axis=0)
    m5 = np.prod(1.0 + feat[-SHORT_WINDOW:], axis=0) - 1.0
    m20 = growth - 1.0
    v20 = np.std(feat, axis=0, ddof=1)
    return np.column_stack([m5, m20, v20]), universe


def equal_weight_returns(returns: ReturnPanel) -> np.ndarray:
    """Cross-sectional mean return per row over the tickers present that day."""
    with np.errstate(invalid="ignore"):
        out = np.nanmean(returns.returns, axis=1)
    return out


def generate_synthetic_market(cfg: SyntheticMarketConfig) -> PricePanel:
    """Regime-switching geometric random walk, deterministic for a fixed seed.

    Day d's gross return for stock i is
    ``1 + group_drifts[regime(d)][group(i)] + group_vols[group(i)] * z`` with
    ``regime(d) = (d // regime_length) % n_regimes`` so that, on the 21-day
    synthetic calendar with regime_length=21, regimes align with months.
    """
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    group_size = cfg.n_stocks // cfg.n_groups
    groups = np.repeat(np.arange(cfg.n_groups), group_size)
    drifts = np.asarray(cfg.group_drifts)           # (n_regimes, n_groups)
    vols = np.asarray(cfg.group_vols)[groups]       # (n_stocks,)
    z = rng.standard_normal((cfg.n_days - 1, cfg.n_stocks))
    day = np.arange(1, cfg.n_days)
    regime = (day // cfg.regime_length) % cfg.n_regimes
    gross = 1.0 + drifts[regime][:, groups] + vols * z
    if np.any(gross <= 0):
        raise ValidationError("drift/vol configuration produced a non-positive price")
    closes = np.empty((cfg.n_days, cfg.n_stocks))
    closes[0] = _BASE_PRICE
    closes[1:] = _BASE_PRICE * np.cumprod(gross, axis=0)
    tickers = tuple(f"S{i:03d}" for i in range(cfg.n_stocks))
    return PricePanel(
        dates=synthetic_dates(cfg.start_month, cfg.n_days), tickers=tickers, closes=closes
    )


def write_prices_csv(panel: PricePanel, path) -> None:
    """Inverse of load_prices for full panels (skips NaN cells)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["date", "ticker", "close"])
        for i, d in enumerate(panel.dates):
            for j, t in enumerate(panel.tickers):
                c = panel.closes[i, j]
                if np.isfinite(c):
                    writer.writerow([d.isoformat(), t, repr(float(c))])


def stock_group(cfg: SyntheticMarketConfig, ticker_index: int) -> int:
    """Group id of a synthetic stock (contiguous equal-size groups)."""
    return ticker_index // (cfg.n_stocks // cfg.n_groups)
