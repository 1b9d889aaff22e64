"""
Fill-level forecasting from sparse collection records.

Collection trucks only weigh a container when they empty it, so the raw
history has no value for the days in between. Preprocessing spreads each
collected mass uniformly over the days since the previous visit, giving a
gap-free daily fill-rate series per container. Three interchangeable
regressors (ordinary least squares, Gaussian-process regression with a
squared-exponential kernel, linear epsilon-insensitive SVR) then predict
future daily rates from lagged rates, day-of-week and a collected-yesterday
flag; iterated one-step prediction accumulates rates into fill levels.
"""

import itertools
import logging
from dataclasses import dataclass
from datetime import date as Date, timedelta
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .model import Container, FillRecord, FillRateSeries, Forecast, InsufficientHistoryError

logger = logging.getLogger(__name__)

DEFAULT_WINDOW = 7
FEATURE_EXTRAS = 8  # 7 day-of-week indicators + collected-yesterday flag

# Hyperparameter grid for GP tuning: (signal_sd, length_scale, noise_sd).
GP_GRID = (0.1, 1.0, 10.0)
# Gram matrices beyond this row count get truncated to the most recent rows;
# keeps fleet-scale fitting tractable without touching small problems.
GP_MAX_TRAIN_ROWS = 120

SVR_EPOCHS = 5000


# ---------------------------------------------------------------------------
# Preprocessing


def derive_daily_rates(records: Sequence[FillRecord], container: Container) -> FillRateSeries:
    """Reconstruct a gap-free daily fill-rate series from collection events.

    A collection of k kg after a gap of g days spreads (k / capacity) / g
    fill-fraction onto each day of the gap. Days before the first record are
    unknown and omitted; the series runs from the day after the first record
    through the last record.
    """
    recs = sorted((r for r in records if r.container_id == container.id),
                  key=lambda r: r.date)
    if not recs:
        raise InsufficientHistoryError(f"{container.id}: no records")
    cap = container.capacity_kg

    events: List[Tuple[Date, float]] = []
    for r in recs:
        kg = r.collected_kg
        if kg > cap:
            logger.warning("%s: collected %.1f kg exceeds capacity %.1f kg, clamping",
                           container.id, kg, cap)
            kg = cap
        events.append((r.date, kg))

    if len({d for d, _ in events}) < 2:
        raise InsufficientHistoryError(f"{container.id}: insufficient history")

    rates: List[float] = []
    prev = events[0][0]
    for d, kg in events[1:]:
        g = (d - prev).days
        if g == 0:
            # Second collection on the same day: fold its mass into that day.
            if rates:
                rates[-1] += kg / cap
            continue
        rates.extend([(kg / cap) / g] * g)
        prev = d
    return FillRateSeries(
        container_id=container.id,
        start=events[0][0] + timedelta(days=1),
        rates=tuple(rates),
        collection_dates=tuple(d for d, _ in events),
    )


def _feature_row(lags_desc: Sequence[float], d: Date, collected_yesterday: bool,
                 window: int) -> np.ndarray:
    """lags_desc[0] is yesterday's rate, lags_desc[window-1] the oldest lag."""
    x = np.zeros(window + FEATURE_EXTRAS)
    x[:window] = lags_desc
    x[window + d.weekday()] = 1.0
    x[window + 7] = 1.0 if collected_yesterday else 0.0
    return x


def build_training(series: FillRateSeries, window: int) -> Tuple[np.ndarray, np.ndarray]:
    """Supervised rows over the series: features for day t, target rate(t)."""
    if window < 1:
        raise ValueError("window must be >= 1")
    if len(series) < window + 7:
        raise InsufficientHistoryError(
            f"{series.container_id}: insufficient history "
            f"({len(series)} days < window {window} + 7)")
    coll = set(series.collection_dates)
    rates = series.rates
    n = len(rates)
    X = np.empty((n - window, window + FEATURE_EXTRAS))
    y = np.empty(n - window)
    for i, k in enumerate(range(window, n)):
        d = series.date_of(k)
        lags = [rates[k - 1 - j] for j in range(window)]
        X[i] = _feature_row(lags, d, series.date_of(k - 1) in coll, window)
        y[i] = rates[k]
    return X, y


# ---------------------------------------------------------------------------
# Models


@dataclass
class RegressionModel:
    """Common state for the fitted per-container regressors."""
    model_tag: str
    window: int
    container_id: str
    train_start: Date
    train_end: Date

    def predict_row(self, x: np.ndarray) -> float:
        raise NotImplementedError


@dataclass
class LinearModel(RegressionModel):
    coef: np.ndarray = None
    rss: float = 0.0
    ridge_fallback: bool = False

    def predict_row(self, x: np.ndarray) -> float:
        return float(x @ self.coef)


@dataclass
class GPModel(RegressionModel):
    signal_sd: float = 1.0
    length_scale: float = 1.0
    noise_sd: float = 0.1
    x_train: np.ndarray = None
    y_train: np.ndarray = None
    chol: tuple = None
    alpha: np.ndarray = None
    jitter: float = 0.0

    def _cross(self, x: np.ndarray) -> np.ndarray:
        sq = np.sum((self.x_train - x) ** 2, axis=1)
        return self.signal_sd ** 2 * np.exp(-sq / (2.0 * self.length_scale ** 2))

    def predict_row(self, x: np.ndarray) -> float:
        return float(self._cross(x) @ self.alpha)


@dataclass
class SVRModel(RegressionModel):
    C: float = 1.0
    epsilon: float = 0.01
    w: np.ndarray = None
    b: float = 0.0
    support_fraction: float = 0.0
    final_loss: float = 0.0

    def predict_row(self, x: np.ndarray) -> float:
        return float(x @ self.w + self.b)


def fit_linear(series: FillRateSeries, window: int = DEFAULT_WINDOW) -> LinearModel:
    """Ordinary least squares on the lag/day-of-week features.

    A rank-deficient design (constant series, colinear lags) falls back to
    a lightly regularized ridge solve and flags it on the model.
    """
    X, y = build_training(series, window)
    ridge = np.linalg.matrix_rank(X) < X.shape[1]
    if ridge:
        d = X.shape[1]
        coef = np.linalg.solve(X.T @ X + 1e-8 * np.eye(d), X.T @ y)
    else:
        coef, _, _, _ = np.linalg.lstsq(X, y, rcond=None)
    rss = float(np.sum((y - X @ coef) ** 2))
    return LinearModel(model_tag="linear", window=window,
                       container_id=series.container_id,
                       train_start=series.start, train_end=series.end,
                       coef=coef, rss=rss, ridge_fallback=ridge)


def _pairwise_sq(X: np.ndarray) -> np.ndarray:
    return np.sum((X[:, None, :] - X[None, :, :]) ** 2, axis=2)


def _gp_solve(sq: np.ndarray, y: np.ndarray, signal_sd: float, length_scale: float,
              noise_sd: float):
    """Factor the kernel Gram matrix, adding jitter when it is numerically
    indefinite (at most three attempts)."""
    gram = signal_sd ** 2 * np.exp(-sq / (2.0 * length_scale ** 2))
    gram[np.diag_indices_from(gram)] += noise_sd ** 2
    jitter = 0.0
    for _ in range(4):
        try:
            chol = cho_factor(gram + jitter * np.eye(len(y)), lower=True)
            alpha = cho_solve(chol, y)
            return chol, alpha, jitter
        except np.linalg.LinAlgError:
            jitter += 1e-8
    raise np.linalg.LinAlgError("kernel Gram matrix is not positive definite")


def _assemble_gp(X: np.ndarray, y: np.ndarray, params: Tuple[float, float, float],
                 series: FillRateSeries, window: int,
                 sq: Optional[np.ndarray] = None) -> GPModel:
    signal_sd, length_scale, noise_sd = params
    if sq is None:
        sq = _pairwise_sq(X)
    chol, alpha, jitter = _gp_solve(sq, y, signal_sd, length_scale, noise_sd)
    return GPModel(model_tag="gp", window=window,
                   container_id=series.container_id,
                   train_start=series.start, train_end=series.end,
                   signal_sd=signal_sd, length_scale=length_scale,
                   noise_sd=noise_sd, x_train=X, y_train=y, chol=chol,
                   alpha=alpha, jitter=jitter)


def _kernel_supported(model: GPModel, series: FillRateSeries, steps: int) -> bool:
    """Walk deployment-style iterated queries and require every one to sit
    inside the kernel's support: either one near-identical training row
    (interpolation) or plenty of aggregate weight (averaging). Queries in
    between get multiplicatively shrunk toward the zero prior mean."""
    w = model.window
    lags = [series.rates[-1 - j] for j in range(w)]
    collected_yesterday = series.end in set(series.collection_dates)
    for h in range(1, steps + 1):
        x = _feature_row(lags, series.end + timedelta(days=h),
                         collected_yesterday, w)
        weights = model._cross(x) / model.signal_sd ** 2
        if weights.max() < 0.9 and weights.sum() < 5.0:
            return False
        lags = [model.predict_row(x)] + lags[:-1]
        collected_yesterday = False
    return True


def fit_gp(series: FillRateSeries, window: int = DEFAULT_WINDOW,
           params: Optional[Tuple[float, float, float]] = None,
           max_train_rows: int = GP_MAX_TRAIN_ROWS) -> GPModel:
    """Zero-mean GP regression with a squared-exponential kernel.

    params is (signal_sd, length_scale, noise_sd); when omitted they are
    picked by grid search over {0.1, 1, 10}^3, scored by the MAE of iterated
    rate predictions over held-out tail weeks (cut at collection dates).
    Tuned kernels must also keep future queries inside their support: a
    narrow kernel can score well on the holdout yet see no training mass at
    deployment, where a zero-mean GP degenerates to predicting 0; such
    candidates are skipped.
    """
    X, y = build_training(series, window)
    if max_train_rows and len(y) > max_train_rows:
        X, y = X[-max_train_rows:], y[-max_train_rows:]
    if params is not None:
        return _assemble_gp(X, y, params, series, window)
    sq = _pairwise_sq(X)
    model = None
    for candidate in _gp_candidates(series, window, max_train_rows):
        model = _assemble_gp(X, y, candidate, series, window, sq=sq)
        if _kernel_supported(model, series, steps=35):
            return model
    return model


def _truncate(series: FillRateSeries, days: int) -> FillRateSeries:
    """Drop the last `days` entries of the series."""
    end = series.date_of(len(series) - days - 1)
    return FillRateSeries(
        container_id=series.container_id,
        start=series.start,
        rates=series.rates[:-days],
        collection_dates=tuple(d for d in series.collection_dates if d <= end),
    )


def _holdout_cuts(series: FillRateSeries, window: int, folds: int = 3) -> List[int]:
    """Holdout lengths (days off the end) for tuning, one per fold.

    Each cut lands on a collection date so every evaluation starts right
    after an emptying, the exact condition a deployed forecast starts from.
    Cuts step back at least a week apart; at minimum the plain last week is
    used.
    """
    cuts: List[int] = []
    horizon = 7
    dates = sorted(series.collection_dates, reverse=True)
    for _ in range(folds):
        boundary = next((d for d in dates
                         if d < series.end and (series.end - d).days >= horizon),
                        None)
        if boundary is None:
            break
        days = (series.end - boundary).days
        if len(series) - days < window + 7:
            break
        cuts.append(days)
        horizon = days + 7
    return cuts or [7]


def _gp_candidates(series: FillRateSeries, window: int,
                   max_train_rows: int) -> List[Tuple[float, float, float]]:
    """Grid candidates ordered by mean holdout MAE over the tuning cuts."""
    if len(series) < window + 7 + 7:
        return [(1.0, 1.0, 0.1), (1.0, 10.0, 0.1)]  # too short to hold a week out
    totals: dict = {}
    counts: dict = {}
    for holdout in _holdout_cuts(series, window):
        train = _truncate(series, holdout)
        Xt, yt = build_training(train, window)
        if max_train_rows and len(yt) > max_train_rows:
            Xt, yt = Xt[-max_train_rows:], yt[-max_train_rows:]
        sq = _pairwise_sq(Xt)
        actual = np.asarray(series.rates[-holdout:])
        for params in itertools.product(GP_GRID, GP_GRID, GP_GRID):
            try:
                model = _assemble_gp(Xt, yt, params, train, window, sq=sq)
            except np.linalg.LinAlgError:
                continue
            preds = predict_rates(model, train, holdout)
            mae = float(np.mean(np.abs(np.asarray(preds) - actual)))
            totals[params] = totals.get(params, 0.0) + mae
            counts[params] = counts.get(params, 0) + 1
    if not totals:
        return [(1.0, 1.0, 0.1), (1.0, 10.0, 0.1)]
    full_folds = max(counts.values())
    scored = [(totals[p] / counts[p], p) for p in totals if counts[p] == full_folds]
    scored.sort(key=lambda mp: (mp[0], -mp[1][1], mp[1][0], mp[1][2]))
    return [p for _, p in scored]


def fit_svr(series: FillRateSeries, window: int = DEFAULT_WINDOW,
            C: float = 10.0, epsilon: float = 0.01) -> SVRModel:
    """Linear epsilon-insensitive SVR, trained in the primal.

    Projected subgradient descent, 5,000 full-batch epochs with step
    1 / (C * t); the loss term is averaged over rows so the step size stays
    scale-free in the sample count.
    """
    if C <= 0:
        raise ValueError("C must be positive")
    if epsilon < 0:
        raise ValueError("epsilon must be non-negative")
    X, y = build_training(series, window)
    n, d = X.shape
    w = np.zeros(d)
    b = float(y.max() + y.min()) / 2.0
    # ||w*|| bound from the objective value of the zero vector; projection target.
    radius = np.sqrt(2.0 * C * max(np.abs(y - b).max(), 1e-12))
    for t in range(1, SVR_EPOCHS + 1):
        r = y - X @ w - b
        viol = np.abs(r) > epsilon
        if viol.any():
            s = np.sign(r[viol])
            grad_w = w - (C / n) * (X[viol].T @ s)
            grad_b = -(C / n) * float(s.sum())
        else:
            grad_w = w
            grad_b = 0.0
        eta = 1.0 / (C * t)
        w = w - eta * grad_w
        b = b - eta * grad_b
        norm = float(np.linalg.norm(w))
        if norm > radius:
            w *= radius / norm
    resid = np.abs(y - X @ w - b)
    loss = float(np.sum(np.maximum(resid - epsilon, 0.0)))
    support = float(np.mean(resid >= epsilon * (1 - 1e-9)))
    return SVRModel(model_tag="svr", window=window,
                    container_id=series.container_id,
                    train_start=series.start, train_end=series.end,
                    C=C, epsilon=epsilon, w=w, b=b,
                    support_fraction=support, final_loss=loss)


MODEL_TAGS = ("linear", "gp", "svr")


def fit_model(model_tag: str, series: FillRateSeries,
              window: int = DEFAULT_WINDOW, **kwargs) -> RegressionModel:
    if model_tag == "linear":
        return fit_linear(series, window)
    if model_tag == "gp":
        return fit_gp(series, window, **kwargs)
    if model_tag == "svr":
        return fit_svr(series, window, **kwargs)
    raise ValueError(f"unknown model tag {model_tag!r}")


# ---------------------------------------------------------------------------
# Prediction


def predict_rates(model: RegressionModel, series: FillRateSeries,
                  horizon_days: int) -> List[float]:
    """Iterated one-step rate predictions; each prediction feeds the next lag window."""
    if horizon_days < 1:
        raise ValueError("horizon must be >= 1")
    w = model.window
    if len(series) < w:
        raise ValueError(
            f"series too short for model window {w} ({len(series)} days)")
    lags = [series.rates[-1 - j] for j in range(w)]
    # The series ends on the last collection day, so the first forecast day
    # follows a collection when that day is recorded as such.
    collected_yesterday = series.end in set(series.collection_dates)
    out: List[float] = []
    for h in range(1, horizon_days + 1):
        d = series.end + timedelta(days=h)
        x = _feature_row(lags, d, collected_yesterday, w)
        rate = model.predict_row(x)
        if not np.isfinite(rate):
            raise ArithmeticError(f"non-finite prediction for {series.container_id}")
        out.append(float(rate))
        lags = [rate] + lags[:-1]
        collected_yesterday = False
    return out


def predict(model: RegressionModel, series: FillRateSeries, horizon_days: int,
            last_fill: float = 0.0) -> List[Forecast]:
    """Cumulative fill forecasts: last known fill plus summed predicted rates,
    clamped to [0, 1] with an overflow flag where the raw sum exceeded 1."""
    rates = predict_rates(model, series, horizon_days)
    out: List[Forecast] = []
    cum = last_fill
    for h, rate in enumerate(rates, start=1):
        cum += rate
        out.append(Forecast(
            container_id=series.container_id,
            date=series.end + timedelta(days=h),
            predicted_fill=min(max(cum, 0.0), 1.0),
            model_tag=model.model_tag,
            overflow=cum > 1.0,
        ))
    return out


def evaluate_mae(forecasts: Iterable[Forecast], actuals: Iterable[Forecast]) -> float:
    """Mean absolute error in percentage points of fill, paired on (container, date)."""
    pred = {(f.container_id, f.date): f.predicted_fill for f in forecasts}
    act = {(a.container_id, a.date): a.predicted_fill for a in actuals}
    keys = sorted(pred.keys() & act.keys())
    if not keys:
        raise ValueError("no overlapping (container, date) pairs")
    return float(np.mean([abs(pred[k] - act[k]) for k in keys])) * 100.0


# ---------------------------------------------------------------------------
# Backtesting


@dataclass
class BacktestResult:
    container_id: str
    model_mae: float
    baseline_mae: float
    days: int


def backtest_many(series_list: Sequence[FillRateSeries], model_tag: str,
                  horizon_days: int = 30, window: int = DEFAULT_WINDOW,
                  workers: Optional[int] = None,
                  **fit_kwargs) -> List["BacktestResult"]:
    """Backtest every container, fanning fits out over a thread pool.

    Containers with too little history are skipped. Results keep the input
    order of the series that survived.
    """
    from concurrent.futures import ThreadPoolExecutor

    def run(series):
        try:
            return backtest_container(series, model_tag, horizon_days, window,
                                      **fit_kwargs)
        except InsufficientHistoryError:
            return None

    with ThreadPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(run, series_list))
    return [r for r in results if r is not None]


def backtest_container(series: FillRateSeries, model_tag: str,
                       horizon_days: int = 30, window: int = DEFAULT_WINDOW,
                       **fit_kwargs) -> BacktestResult:
    """Hold out the last horizon_days, fit on the rest, and score daily
    fill-level MAE against the reconstructed actuals, rolling-origin style.

    The walk mirrors deployment: each time the container is actually
    emptied, the forecaster re-anchors its lag window on the rates that
    collection revealed and predicts the next gap; fill resets to zero at
    every collection. The last-rate-persistence baseline re-anchors the
    same way, so the comparison isolates rate-prediction quality rather
    than error compounding.
    """
    if len(series) < window + 7 + horizon_days:
        raise InsufficientHistoryError(
            f"{series.container_id}: need {window + 7 + horizon_days} days, "
            f"have {len(series)}")
    train = _truncate(series, horizon_days)
    model = fit_model(model_tag, train, window, **fit_kwargs)

    coll = set(series.collection_dates)
    n = len(series)
    start = n - horizon_days
    # fill carried into the test window: accumulation since the last
    # collection before the cut (identical for all three walks)
    fill_m = fill_b = fill_a = _carry_in_fill(train, coll)

    cid = series.container_id
    model_fills: List[Forecast] = []
    base_fills: List[Forecast] = []
    actual_fills: List[Forecast] = []
    lags = [series.rates[start - 1 - j] for j in range(window)]
    base_rate = series.rates[start - 1]
    collected_yesterday = series.date_of(start - 1) in coll
    for k in range(start, n):
        d = series.date_of(k)
        if k > start and series.date_of(k - 1) in coll:
            # the actual collection closed a gap: its rates are now known
            lags = [series.rates[k - 1 - j] for j in range(window)]
            base_rate = series.rates[k - 1]
            collected_yesterday = True
        x = _feature_row(lags, d, collected_yesterday, window)
        rate = model.predict_row(x)
        fill_m += rate
        fill_b += base_rate
        fill_a += series.rates[k]
        model_fills.append(Forecast(cid, d, min(max(fill_m, 0.0), 1.0), model_tag))
        base_fills.append(Forecast(cid, d, min(max(fill_b, 0.0), 1.0), "persistence"))
        actual_fills.append(Forecast(cid, d, min(fill_a, 1.0), "actual"))
        lags = [rate] + lags[:-1]
        collected_yesterday = False
        if d in coll:
            fill_m = fill_b = fill_a = 0.0
    return BacktestResult(
        container_id=cid,
        model_mae=evaluate_mae(model_fills, actual_fills),
        baseline_mae=evaluate_mae(base_fills, actual_fills),
        days=horizon_days,
    )


def _carry_in_fill(train: FillRateSeries, collection_dates: set) -> float:
    fill = 0.0
    for k in range(len(train)):
        fill += train.rates[k]
        if train.date_of(k) in collection_dates:
            fill = 0.0
    return fill
