"""Occupation measures, space-time histograms and metrics between measures.

Occupation measures are kept as raw weighted point masses so that
Kolmogorov-Smirnov statistics are exact at sample resolution; space-time
content is binned.  The bounded-Lipschitz metric is not exactly
computable, so it is reported as a certified lower bound (a maximum over
an explicit dictionary of test functions of unit BL norm) paired with a
1-Wasserstein upper bound.

Measures are immutable after construction and merging is associative and
commutative, so Monte Carlo replicas can be combined in any order.
"""

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import CoverageError, ParameterError, ResolutionError


@dataclass(frozen=True)
class EmpiricalMeasure:
    """Weighted point masses on the real line, sorted by location."""

    points: np.ndarray
    weights: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        wts = np.asarray(self.weights, dtype=float)
        if pts.shape != wts.shape or pts.ndim != 1:
            raise ParameterError("points and weights must be 1-d arrays of equal length")
        if np.any(wts < 0):
            raise ParameterError("weights must be nonnegative")
        order = np.argsort(pts, kind="stable")
        pts = pts[order]
        wts = wts[order]
        pts.setflags(write=False)
        wts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", wts)

    @classmethod
    def from_samples(cls, samples, meta=None):
        samples = np.asarray(samples, dtype=float)
        n = samples.size
        return cls(samples, np.full(n, 1.0 / n), meta or {})

    @classmethod
    def point_mass(cls, x, mass=1.0, meta=None):
        return cls(np.array([x]), np.array([mass]), meta or {})

    @property
    def total_mass(self):
        return float(self.weights.sum())

    def is_probability(self, tol=1e-9):
        return abs(self.total_mass - 1.0) <= tol

    def cdf(self, x):
        """Right-continuous distribution function."""
        cum = np.cumsum(self.weights)
        idx = np.searchsorted(self.points, np.asarray(x, dtype=float), side="right")
        vals = np.concatenate(([0.0], cum))[idx]
        return float(vals) if np.isscalar(x) else vals

    def mean(self):
        return float(np.dot(self.points, self.weights) / self.total_mass)

    def moment(self, p):
        return float(np.dot(np.abs(self.points) ** p, self.weights) / self.total_mass)

    def variance(self):
        mu = self.mean()
        return float(np.dot((self.points - mu) ** 2, self.weights) / self.total_mass)

    def integrate(self, fn):
        return float(np.dot(np.asarray(fn(self.points), dtype=float), self.weights))

    def normalized(self):
        total = self.total_mass
        if total <= 0:
            raise ParameterError("cannot normalize a zero measure")
        return EmpiricalMeasure(self.points, self.weights / total, dict(self.meta))

    def scaled(self, factor):
        return EmpiricalMeasure(self.points, self.weights * factor, dict(self.meta))

    def merge(self, other):
        """Associative, commutative union of mass; metadata from self wins."""
        return EmpiricalMeasure(
            np.concatenate([self.points, other.points]),
            np.concatenate([self.weights, other.weights]),
            dict(self.meta),
        )

    def difference(self, other, tol=1e-9):
        """self - other when other's points are a subset pattern of self's.

        Only defined when the result is again a nonnegative measure, which
        is the case for cumulative slices of the same histogram.
        """
        if self.points.size == other.points.size and np.allclose(self.points, other.points):
            w = self.weights - other.weights
            if np.any(w < -tol):
                raise ParameterError("difference is not a nonnegative measure")
            return EmpiricalMeasure(self.points, np.clip(w, 0.0, None), dict(self.meta))
        if other.points.size == 0:
            return self
        raise ParameterError("measures are not defined on a common support")

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["value", "weight"])
            for v, w in zip(self.points, self.weights):
                writer.writerow([repr(float(v)), repr(float(w))])


def _trapezoid_weights(n, dt):
    w = np.full(n, dt)
    w[0] *= 0.5
    w[-1] *= 0.5
    return w


def occupation_measure(path, window=(0.0, 1.0)):
    """Time-occupation measure of a path over `window`, total mass 1.

    Point masses sit at the sampled values with trapezoid-corrected
    weights, then are normalized exactly.
    """
    w0, w1 = window
    tol = 1e-9 * path.dt
    if path.t_start > w0 + tol or path.t_end < w1 - tol:
        raise CoverageError("path does not cover the requested window")
    sub = path.restricted(w0, w1)
    weights = _trapezoid_weights(len(sub), sub.dt)
    weights /= weights.sum()
    meta = {"seed": _path_seed(path), "window": window}
    return EmpiricalMeasure(sub.values, weights, meta)


def _path_seed(path):
    desc = path.meta.get("descriptor")
    return getattr(desc, "seed", None)


# ---------------------------------------------------------------------------
# Space-time measures
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SpaceTimeHistogram:
    """Binned measure on [0,1] x R whose first marginal is Lebesgue."""

    time_edges: np.ndarray
    value_edges: np.ndarray
    mass: np.ndarray

    def __post_init__(self):
        te = np.asarray(self.time_edges, dtype=float)
        ve = np.asarray(self.value_edges, dtype=float)
        m = np.asarray(self.mass, dtype=float)
        if m.shape != (te.size - 1, ve.size - 1):
            raise ParameterError("mass matrix shape does not match bin edges")
        for arr in (te, ve, m):
            arr.setflags(write=False)
        object.__setattr__(self, "time_edges", te)
        object.__setattr__(self, "value_edges", ve)
        object.__setattr__(self, "mass", m)

    @property
    def total_mass(self):
        return float(self.mass.sum())

    def first_marginal(self):
        return self.mass.sum(axis=1)

    def second_marginal(self):
        centers = 0.5 * (self.value_edges[1:] + self.value_edges[:-1])
        return EmpiricalMeasure(centers, self.mass.sum(axis=0))

    def row_profile(self, k):
        """Value distribution inside time bin k, normalized to mass 1."""
        centers = 0.5 * (self.value_edges[1:] + self.value_edges[:-1])
        row = self.mass[k]
        total = row.sum()
        if total <= 0:
            raise ParameterError(f"time bin {k} carries no mass")
        return EmpiricalMeasure(centers, row / total)

    def row_ks(self, k, target_cdf):
        """KS distance of a row profile to a target CDF, evaluated at the
        value-bin edges where the binned CDF is exact."""
        row = self.mass[k]
        total = row.sum()
        if total <= 0:
            raise ParameterError(f"time bin {k} carries no mass")
        cum = np.concatenate(([0.0], np.cumsum(row / total)))
        targets = np.asarray(target_cdf(self.value_edges), dtype=float)
        return float(np.max(np.abs(cum - targets)))

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t_bin", "v_bin", "mass"])
            for i in range(self.mass.shape[0]):
                for j in range(self.mass.shape[1]):
                    writer.writerow([i, j, repr(float(self.mass[i, j]))])


def space_time_measure(path, time_bins, value_bins, window=(0.0, 1.0), value_edges=None):
    """Histogram of (t, Z(t)) weighted by time, normalized to total mass 1."""
    if time_bins < 2 or value_bins < 2:
        raise ParameterError("need at least 2 bins per axis")
    w0, w1 = window
    sub = path.restricted(w0, w1)
    if abs(sub.t_start - w0) > 1e-9 + sub.dt or sub.t_end < w1 - 1e-9:
        raise CoverageError("path does not cover the requested window")
    weights = _trapezoid_weights(len(sub), sub.dt)
    weights /= weights.sum()
    te = np.linspace(w0, w1, time_bins + 1)
    if value_edges is None:
        lo, hi = sub.values.min(), sub.values.max()
        pad = 1e-9 + 1e-6 * (hi - lo)
        value_edges = np.linspace(lo - pad, hi + pad, value_bins + 1)
    mass, _, _ = np.histogram2d(sub.times, sub.values, bins=[te, value_edges],
                                weights=weights)
    return SpaceTimeHistogram(te, value_edges, mass)


@dataclass(frozen=True)
class MeasurePath:
    """Cumulative-in-time slices F(M)(t) of a space-time measure."""

    times: np.ndarray
    cumulative: list

    def increment(self, k):
        """Mass gained between times[k] and times[k+1] (a nonnegative measure)."""
        return self.cumulative[k + 1].difference(self.cumulative[k])

    def n_blocks(self):
        return len(self.cumulative) - 1


def f_map(hist):
    """Cumulative-in-time slices of a histogram; invertible by differencing."""
    centers = 0.5 * (hist.value_edges[1:] + hist.value_edges[:-1])
    cum = np.concatenate([np.zeros((1, hist.mass.shape[1])),
                          np.cumsum(hist.mass, axis=0)], axis=0)
    slices = [EmpiricalMeasure(centers, cum[k]) for k in range(cum.shape[0])]
    return MeasurePath(hist.time_edges.copy(), slices)


# ---------------------------------------------------------------------------
# Metrics
# ---------------------------------------------------------------------------

def ks_distance(mu, target_cdf):
    """Exact sup distance between the measure's CDF and a target CDF.

    Valid for discontinuous targets too: left limits of the target are
    probed just below each support point.
    """
    if not mu.is_probability(tol=1e-6):
        raise ParameterError("Kolmogorov-Smirnov needs a probability measure")
    points, first = np.unique(mu.points, return_index=True)
    weights = np.add.reduceat(mu.weights, first)
    cum = np.cumsum(weights)
    cum_prev = np.concatenate(([0.0], cum[:-1]))
    targets = np.asarray(target_cdf(points), dtype=float)
    targets_left = np.asarray(target_cdf(np.nextafter(points, -np.inf)), dtype=float)
    return float(np.max(np.maximum(np.abs(cum - targets),
                                   np.abs(cum_prev - targets_left))))


def ks_two_sample(mu, nu):
    """Exact sup distance between two weighted empirical CDFs."""
    grid = np.concatenate([mu.points, nu.points])
    grid.sort(kind="stable")
    return float(np.max(np.abs(mu.cdf(grid) - nu.cdf(grid))))


def ks_critical_value(n_a, n_b=None, alpha=0.01):
    """Asymptotic critical value of the (two-sample) KS statistic."""
    c = np.sqrt(-0.5 * np.log(alpha / 2.0))
    if n_b is None:
        return float(c / np.sqrt(n_a))
    return float(c * np.sqrt((n_a + n_b) / (n_a * n_b)))


def wasserstein1(mu, nu):
    """Exact 1-Wasserstein distance between two probability measures on R."""
    grid = np.concatenate([mu.points, nu.points])
    grid.sort(kind="stable")
    if grid.size < 2:
        return 0.0
    diffs = np.abs(mu.cdf(grid[:-1]) - nu.cdf(grid[:-1]))
    return float(np.sum(diffs * np.diff(grid)))


@dataclass(frozen=True)
class BLBound:
    """Certified enclosure of the bounded-Lipschitz distance."""

    lower: float
    upper: float
    witness: str


def _bl_dictionary(knots, widths):
    """Test functions of BL norm at most 1: hats, tanh bumps, clipped ramps."""
    fns = []
    for c in knots:
        for w in widths:
            s = 1.0 / (1.0 + w)
            fns.append((f"hat({c:.4g},{w:.4g})",
                        lambda x, c=c, w=w, s=s: s * np.clip(w - np.abs(x - c), 0.0, None)))
            fns.append((f"ramp({c:.4g},{w:.4g})",
                        lambda x, c=c, w=w: np.clip((x - c) / w, -1.0, 1.0) * w / (w + 1.0)))
            fns.append((f"tanh({c:.4g},{w:.4g})",
                        lambda x, c=c, w=w: np.tanh((x - c) / w) * w / (w + 1.0)))
    return fns


def dbl_distance(mu, nu, dictionary_size=8):
    """Bounded-Lipschitz distance, reported as (lower bound, upper bound).

    The lower bound maximizes |int f dmu - int f dnu| over a dictionary of
    functions with BL norm <= 1 anchored at pooled quantiles; the upper
    bound is min(W1, 2).
    """
    for m in (mu, nu):
        if not m.is_probability(tol=1e-6):
            raise ParameterError("bounded-Lipschitz distance needs probability measures")
    pooled = mu.merge(nu).normalized()
    qs = np.linspace(0.0, 1.0, dictionary_size + 2)[1:-1]
    cum = np.cumsum(pooled.weights)
    knots = np.unique(pooled.points[np.searchsorted(cum, qs * cum[-1], side="left").clip(0, pooled.points.size - 1)])
    mids = 0.5 * (knots[1:] + knots[:-1]) if knots.size > 1 else np.array([])
    knots = np.unique(np.concatenate([knots, mids]))
    spread = max(float(np.ptp(pooled.points)), 1e-12)
    widths = spread * np.array([0.25, 0.5, 1.0, 2.0])
    best, witness = 0.0, "zero"
    for name, fn in _bl_dictionary(knots, widths):
        gap = abs(mu.integrate(fn) - nu.integrate(fn))
        if gap > best:
            best, witness = gap, name
    upper = min(wasserstein1(mu, nu), 2.0)
    return BLBound(lower=min(best, upper), upper=upper, witness=witness)


# ---------------------------------------------------------------------------
# Fixed-lag second-order increment measures
# ---------------------------------------------------------------------------

def second_difference_sd(hurst):
    """Standard deviation of the unit-grid second difference of fBm."""
    return float(np.sqrt(4.0 - 2.0 ** (2.0 * hurst)))


def fixed_lag_second_order(path, n, hurst):
    """Empirical measure of normalized second differences on the grid i/n.

    Point masses at n^H (B((i+2)/n) - 2 B((i+1)/n) + B(i/n)) / sigma for
    i = 0..n-2, each of weight 1/(n-1); sigma is the exact standard
    deviation of the unit-grid second difference.
    """
    if n < 4:
        raise ResolutionError("need n >= 4 grid points per unit time")
    stride = (1.0 / n) / path.dt
    stride_i = int(round(stride))
    if abs(stride - stride_i) > 1e-9 or stride_i < 1:
        raise CoverageError("path grid is not aligned with the i/n sampling grid")
    base = path.node_index(0.0)
    if base is None or path.t_end < 1.0 - 1e-9:
        raise CoverageError("path must cover [0, 1] with a node at 0")
    idx = base + stride_i * np.arange(n + 1)
    if idx[-1] >= len(path):
        raise CoverageError("path does not reach time 1")
    b = path.values[idx]
    second = b[2:] - 2.0 * b[1:-1] + b[:-2]
    scaled = n ** hurst * second / second_difference_sd(hurst)
    meta = {"seed": _path_seed(path), "kind": "second-order", "n": n}
    return EmpiricalMeasure.from_samples(scaled, meta)
