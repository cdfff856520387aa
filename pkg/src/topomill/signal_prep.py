"""Noise injection, embedding-parameter selection, and delay embedding.

Time series are turned into point clouds by delay (Takens) embedding.  The
embedding delay is chosen at the first prominent maximum of the normalized
permutation entropy swept over delays; the dimension by the false nearest
neighbor criterion.  Clouds can be greedily subsampled (farthest point) to
bound the cost of downstream persistence computations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from numba import njit

from .milling import TimeSeries


@dataclass(frozen=True)
class EmbeddingParams:
    delay: int
    dimension: int

    def __post_init__(self):
        if self.delay < 1:
            raise ValueError("delay must be a positive integer")
        if self.dimension < 2:
            raise ValueError("dimension must be >= 2")


@dataclass
class PointCloud:
    """Finite set of equal-dimension points with the id of its source series."""

    points: np.ndarray
    source: Optional[str] = None

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.float64)
        if self.points.ndim != 2 or self.points.shape[0] < 1:
            raise ValueError("points must be a non-empty (n, dim) array")
        if not np.all(np.isfinite(self.points)):
            raise ValueError("points must be finite")


def _samples(ts: Union[TimeSeries, np.ndarray]) -> np.ndarray:
    x = ts.samples if isinstance(ts, TimeSeries) else np.asarray(ts, dtype=np.float64)
    return np.asarray(x, dtype=np.float64)


def add_noise(ts: TimeSeries, snr_db: float, seed: int) -> TimeSeries:
    """Add zero-mean Gaussian noise at the requested signal-to-noise ratio.

    Noise variance is P_signal / 10^(snr_db/10) where P_signal is the mean
    squared deviation of the series from its mean.  Deterministic per seed.
    """
    x = ts.samples
    power = float(np.mean((x - np.mean(x)) ** 2))
    if power <= 0.0:
        raise ValueError("cannot set an SNR on a zero-power (constant) series")
    variance = power / 10.0 ** (snr_db / 10.0)
    rng = np.random.default_rng(seed)
    noisy = x + rng.normal(0.0, math.sqrt(variance), size=x.size)
    return TimeSeries(
        samples=noisy,
        sample_interval=ts.sample_interval,
        grid_point=ts.grid_point,
        label=ts.label,
        snr_db=float(snr_db),
        saturated=ts.saturated,
        series_id=ts.series_id,
    )


def permutation_entropy(ts, order: int = 3, delay: int = 1) -> float:
    """Normalized permutation entropy of the ordinal patterns of the series.

    Windows of ``order`` samples spaced ``delay`` apart are ranked (ties broken
    by earlier index smaller) and the Shannon entropy of the pattern frequency
    distribution is normalized by log(order!), giving a value in [0, 1].
    """
    if not 3 <= order <= 7:
        raise ValueError("order must lie in [3, 7]")
    if delay < 1:
        raise ValueError("delay must be a positive integer")
    x = _samples(ts)
    n_windows = x.size - (order - 1) * delay
    if n_windows < 100:
        raise ValueError(
            f"series too short: {n_windows} ordinal windows, need >= 100"
        )
    idx = np.arange(n_windows)[:, None] + np.arange(order)[None, :] * delay
    # Stable argsort realizes the earlier-index-smaller tie rule.
    patterns = np.argsort(x[idx], axis=1, kind="stable")
    codes = patterns @ (order ** np.arange(order))
    _, counts = np.unique(codes, return_counts=True)
    probs = counts / n_windows
    entropy = -np.sum(probs * np.log(probs))
    return float(entropy / math.log(math.factorial(order)))


def select_delay(ts, max_delay: int, order: int = 3,
                 prominence: float = 0.01) -> int:
    """Embedding delay at the first prominent permutation-entropy maximum.

    The entropy is swept over delays 1..max_delay; the first running maximum
    followed by a drop of at least ``prominence`` is returned.  If the sweep
    never drops (flat or monotone curves, e.g. white noise is flat near 1),
    the earliest delay within ``prominence`` of the global maximum is used.
    """
    if max_delay < 2:
        raise ValueError("max_delay must be >= 2")
    pe = np.array([permutation_entropy(ts, order, d)
                   for d in range(1, max_delay + 1)])
    peak = pe[0]
    peak_delay = 1
    for d in range(2, max_delay + 1):
        value = pe[d - 1]
        if value > peak:
            peak = value
            peak_delay = d
        elif peak - value >= prominence:
            return peak_delay
    return int(np.argmax(pe >= pe.max() - prominence)) + 1


@njit(cache=True, nogil=True)
def _fnn_fraction(x, n_valid, dim, delay, ratio_threshold, floor_sq, stride):
    false = 0
    checked = 0
    for i in range(0, n_valid, stride):
        best = np.inf
        best_j = -1
        for j in range(n_valid):
            if j == i:
                continue
            dist_sq = 0.0
            for k in range(dim):
                diff = x[i + k * delay] - x[j + k * delay]
                dist_sq += diff * diff
            if dist_sq < best:
                best = dist_sq
                best_j = j
        ext = abs(x[i + dim * delay] - x[best_j + dim * delay])
        # Division-free ratio test; distances below the roundoff floor are
        # clamped so coincident (repeated) points never count as false.
        if best < floor_sq:
            best = floor_sq
        if ext * ext > ratio_threshold * ratio_threshold * best:
            false += 1
        checked += 1
    return false / checked


def select_dimension(ts, delay: int, max_dimension: int = 8,
                     ratio_threshold: float = 10.0,
                     fnn_tolerance: float = 0.01,
                     max_reference_points: int = 400) -> int:
    """Smallest embedding dimension with a false-nearest-neighbor rate < 1%.

    A neighbor pair in dimension d is false when the extra coordinate of
    dimension d+1 separates it by more than ``ratio_threshold`` times its
    distance.  Dimensions 2..max_dimension are tried in order; the result is
    capped at ``max_dimension``.  If the series becomes too short to assess a
    larger dimension the last assessable one is returned.

    On long series the rate is estimated from an evenly strided subset of at
    most ``max_reference_points`` query points (neighbors are still searched
    over all points), which keeps the scan deterministic and fast.
    """
    if delay < 1:
        raise ValueError("delay must be a positive integer")
    x = _samples(ts)
    if x.size - 2 * delay < 2:
        raise ValueError("series too short to embed in dimension 2")
    floor = 1e-9 * float(np.std(x))
    for dim in range(2, max_dimension + 1):
        n_valid = x.size - dim * delay
        if n_valid < 2:
            return max(2, dim - 1)
        stride = max(1, -(-n_valid // max_reference_points))
        fraction = _fnn_fraction(x, n_valid, dim, delay, ratio_threshold,
                                 floor * floor, stride)
        if fraction < fnn_tolerance:
            return dim
    return max_dimension


def takens_embed(ts, params: EmbeddingParams,
                 source: Optional[str] = None) -> PointCloud:
    """Delay-embed a series: point i is (x_i, x_{i+d}, ..., x_{i+(m-1)d})."""
    x = _samples(ts)
    d, m = params.delay, params.dimension
    count = x.size - (m - 1) * d
    if count < 1:
        raise ValueError(
            f"(dimension-1)*delay = {(m - 1) * d} must be < series length {x.size}"
        )
    idx = np.arange(count)[:, None] + np.arange(m)[None, :] * d
    if source is None and isinstance(ts, TimeSeries):
        source = ts.series_id
    return PointCloud(points=x[idx], source=source)


def farthest_point_indices(points: np.ndarray, max_points: int) -> np.ndarray:
    """Greedy farthest-point subset of row indices, starting from row 0.

    Deterministic: ties in the farthest-point search resolve to the lowest
    index.  Returns sorted indices; all rows when max_points >= n.
    """
    points = np.asarray(points, dtype=np.float64)
    n = points.shape[0]
    if max_points < 1:
        raise ValueError("max_points must be positive")
    if max_points >= n:
        return np.arange(n)
    selected = np.empty(max_points, dtype=np.int64)
    selected[0] = 0
    dist = np.linalg.norm(points - points[0], axis=1)
    for k in range(1, max_points):
        nxt = int(np.argmax(dist))
        selected[k] = nxt
        dist = np.minimum(dist, np.linalg.norm(points - points[nxt], axis=1))
    return np.sort(selected)


def subsample_cloud(pc: PointCloud, max_points: int) -> PointCloud:
    idx = farthest_point_indices(pc.points, max_points)
    if idx.size == pc.points.shape[0]:
        return pc
    return PointCloud(points=pc.points[idx], source=pc.source)
