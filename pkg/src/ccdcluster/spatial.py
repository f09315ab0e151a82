"""Spatial randomness statistics on box and ball windows.

Implements the translation-corrected Ripley K estimator, complete spatial
randomness (CSR) simulation, Monte Carlo envelope construction in the unit
ball, and the one-sided upper-envelope CSR test that drives covering-ball
radius selection.

Ball windows are evaluated in window-relative units: points are implicitly
rescaled to the unit ball, so a K curve computed for ``BallWindow(c, R)`` at
distance ``t`` equals the unit-ball curve at ``t / R``.  This makes the
estimator invariant under similarity transforms and lets a single unit-ball
envelope table serve every covering ball of a given sample size.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import Iterable, Optional, Union

import numpy as np
from scipy.spatial.distance import pdist

DEFAULT_GRID_SIZE = 64
UNIT_BALL_T_MAX = 0.5
DEFAULT_MIN_POINTS = 3
DEFAULT_REPLICATES = 99

ENVELOPE_FORMAT_VERSION = 1

_CONTAINMENT_RTOL = 1e-9


class EnvelopeMissingError(LookupError):
    """No stored envelope for the requested sample size and lazy builds are off."""


# ---------------------------------------------------------------------------
# windows


@dataclass(frozen=True)
class BoxWindow:
    """Axis-aligned box with per-axis lower and upper bounds."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.atleast_1d(np.asarray(self.lower, dtype=float))
        upper = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lower.shape != upper.shape or lower.ndim != 1:
            raise ValueError("box bounds must be 1-d vectors of equal length")
        if not np.all(lower < upper):
            raise ValueError("box bounds must satisfy lower < upper on every axis")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def dimension(self) -> int:
        return self.lower.size

    @property
    def sides(self) -> np.ndarray:
        return self.upper - self.lower

    @property
    def volume(self) -> float:
        return float(np.prod(self.sides))

    def contains(self, points: np.ndarray) -> bool:
        pts = np.asarray(points, dtype=float)
        tol = _CONTAINMENT_RTOL * np.max(self.sides)
        return bool(
            np.all(pts >= self.lower - tol) and np.all(pts <= self.upper + tol)
        )


@dataclass(frozen=True)
class BallWindow:
    """Hyperball given by a center vector and a positive radius."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        center = np.atleast_1d(np.asarray(self.center, dtype=float))
        if center.ndim != 1:
            raise ValueError("ball center must be a 1-d vector")
        if not self.radius > 0:
            raise ValueError("ball radius must be positive")
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def dimension(self) -> int:
        return self.center.size

    @property
    def volume(self) -> float:
        return ball_volume(self.dimension, self.radius)

    def contains(self, points: np.ndarray) -> bool:
        pts = np.asarray(points, dtype=float)
        norms = np.linalg.norm(pts - self.center, axis=-1)
        return bool(np.all(norms <= self.radius * (1.0 + _CONTAINMENT_RTOL)))


Window = Union[BoxWindow, BallWindow]


def ball_volume(dimension: int, radius: float = 1.0) -> float:
    """Volume of a ``dimension``-ball, pi^(d/2) R^d / Gamma(d/2 + 1)."""
    d = int(dimension)
    return math.pi ** (d / 2.0) * radius**d / math.gamma(d / 2.0 + 1.0)


# ---------------------------------------------------------------------------
# edge corrections


def sin_power_integral(power: int, theta):
    """Integral of sin^power from 0 to theta via the reduction recurrence.

    Uses the standard antiderivative reduction so the result is exact to
    floating round-off (no quadrature).  ``theta`` may be a scalar or array
    with values in [0, pi].
    """
    p = int(power)
    if p < 0:
        raise ValueError("power must be a non-negative integer")
    th = np.asarray(theta, dtype=float)
    if np.any(th < 0) or np.any(th > math.pi + 1e-12):
        raise ValueError("theta must lie in [0, pi]")
    cos_t = np.cos(th)
    sin_t = np.sin(th)
    values = [th.copy() if isinstance(th, np.ndarray) else th, 1.0 - cos_t]
    for k in range(2, p + 1):
        values.append((-cos_t * sin_t ** (k - 1) + (k - 1) * values[k - 2]) / k)
    out = values[p]
    return float(out) if np.isscalar(theta) else out


def translation_correction_box(delta, window: BoxWindow) -> float:
    """Translation edge-correction weight for a pair displacement in a box.

    ``delta`` is the per-axis displacement between the two points.  The
    weight is the ratio of the window volume to the volume of the window
    intersected with its own translate, prod(s_i) / prod(s_i - |delta_i|).
    """
    d = np.abs(np.asarray(delta, dtype=float))
    sides = window.sides
    if d.shape != sides.shape:
        raise ValueError("displacement dimension does not match the window")
    if np.any(d >= sides):
        raise ValueError(
            "pair displacement reaches the window side; the pair cannot co-occur"
        )
    return float(np.prod(sides) / np.prod(sides - d))


def translation_correction_ball(rho, radius: float, dimension: int):
    """Translation edge-correction weight for a pair at distance rho in a ball.

    The weight is vol(ball) / (2 vol(cap)) where the cap is cut by the
    bisecting hyperplane of the pair, evaluated through the sin-power
    integral of the cap angle arccos(rho / 2R).  Equals 1 at rho = 0 and
    grows as the cap shrinks.  ``rho`` may be a scalar or array.
    """
    if not radius > 0:
        raise ValueError("window radius must be positive")
    r = np.asarray(rho, dtype=float)
    if np.any(r < 0):
        raise ValueError("pair distance must be non-negative")
    if np.any(r >= 2.0 * radius):
        raise ValueError("pair distance must be smaller than the ball diameter")
    phi = np.arccos(r / (2.0 * radius))
    cap = sin_power_integral(dimension, phi)
    const = math.sqrt(math.pi) * math.gamma((dimension + 1) / 2.0) / math.gamma(
        dimension / 2.0 + 1.0
    )
    weight = const / (2.0 * cap)
    return float(weight) if np.isscalar(rho) else weight


# ---------------------------------------------------------------------------
# K curves


@dataclass(frozen=True)
class KCurve:
    """Estimated K function sampled on a distance grid."""

    t_grid: np.ndarray
    values: np.ndarray
    sample_size: int
    dimension: int

    def __post_init__(self):
        t = np.asarray(self.t_grid, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if t.shape != v.shape or t.ndim != 1:
            raise ValueError("t_grid and values must be 1-d arrays of equal length")
        object.__setattr__(self, "t_grid", t)
        object.__setattr__(self, "values", v)


def unit_ball_grid(size: int = DEFAULT_GRID_SIZE, t_max: float = UNIT_BALL_T_MAX) -> np.ndarray:
    """Equally spaced evaluation grid in (0, t_max] for the unit ball."""
    if size < 1 or not t_max > 0:
        raise ValueError("grid size must be >= 1 and t_max positive")
    return np.linspace(t_max / size, t_max, size)


def box_grid(window: BoxWindow, size: int = DEFAULT_GRID_SIZE) -> np.ndarray:
    """Grid in (0, t_max] with t_max a quarter of the smallest box side."""
    t_max = float(np.min(window.sides)) / 4.0
    return np.linspace(t_max / size, t_max, size)


def _validate_grid(t_grid: np.ndarray) -> np.ndarray:
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or t.size == 0:
        raise ValueError("t_grid must be a non-empty 1-d array")
    if np.any(t <= 0) or np.any(np.diff(t) <= 0):
        raise ValueError("t_grid must be positive and strictly increasing")
    return t


def k_hat(points: np.ndarray, window: Window, t_grid) -> KCurve:
    """Translation-corrected K estimate on ``t_grid``.

    K(t) = vol * sum over ordered pairs of I(d(z, z') < t) * w(z, z') divided
    by n (n - 1), with the window-appropriate correction weight w.  For box
    windows vol is the box volume and distances are physical.  For ball
    windows the estimate is scale-free: vol is the unit-ball volume and the
    curve corresponds to the configuration rescaled into the unit ball (pass
    a grid in the same physical units as the points; a value at ``t`` maps to
    the unit-ball curve at ``t / R``).

    Raises ``ValueError`` when fewer than two points are given or some point
    lies outside the window.
    """
    X = np.asarray(points, dtype=float)
    if X.ndim != 2:
        raise ValueError("points must be an n x d array")
    n, d = X.shape
    if n < 2:
        raise ValueError("the K estimator needs at least two points")
    if window.dimension != d:
        raise ValueError("window dimension does not match the points")
    if not window.contains(X):
        raise ValueError("all points must lie inside the window")
    t = _validate_grid(t_grid)

    diffs = X[:, None, :] - X[None, :, :]
    rho = np.sqrt((diffs**2).sum(axis=-1))
    countable = rho < t[-1]
    np.fill_diagonal(countable, False)

    if isinstance(window, BoxWindow):
        denom = np.prod(window.sides - np.abs(diffs), axis=-1)
        vol = window.volume
        with np.errstate(divide="ignore"):
            weights = np.where(countable, vol / denom, 0.0)
    else:
        ratio = np.clip(rho / (2.0 * window.radius), 0.0, 1.0)
        phi = np.arccos(np.where(countable, ratio, 0.0))
        cap = sin_power_integral(d, phi)
        const = math.sqrt(math.pi) * math.gamma((d + 1) / 2.0) / math.gamma(d / 2.0 + 1.0)
        vol = ball_volume(d)
        with np.errstate(divide="ignore"):
            weights = np.where(countable, const / (2.0 * cap), 0.0)

    values = np.empty(t.size)
    for j, tj in enumerate(t):
        values[j] = vol * (weights * (rho < tj)).sum() / (n * (n - 1))
    return KCurve(t_grid=t, values=values, sample_size=n, dimension=d)


def l_hat_minus_t(curve: KCurve) -> np.ndarray:
    """The centred L transform sqrt(K / pi) - t, planar point sets only.

    Identically zero under exact CSR where K(t) = pi t^2.
    """
    if curve.dimension != 2:
        raise ValueError("the L transform is defined for dimension 2 only")
    return np.sqrt(curve.values / math.pi) - curve.t_grid


def _pair_curve(rho: np.ndarray, t_grid: np.ndarray, dimension: int, sample_size: int) -> np.ndarray:
    """K values on ``t_grid`` from condensed unit-ball pair distances.

    Cumulative-histogram path used by the envelope builder and the CSR test;
    equivalent to ``k_hat`` on the unit ball up to summation order.
    """
    m = sample_size
    sel = rho < t_grid[-1]
    r = rho[sel]
    if r.size == 0:
        return np.zeros(t_grid.size)
    w = translation_correction_ball(r, 1.0, dimension)
    idx = np.searchsorted(t_grid, r, side="right")
    hist = np.bincount(idx, weights=w, minlength=t_grid.size + 1)[: t_grid.size]
    return np.cumsum(hist) * 2.0 * ball_volume(dimension) / (m * (m - 1))


# ---------------------------------------------------------------------------
# CSR simulation and envelopes


def _sample_unit_ball(m: int, dimension: int, rng: np.random.Generator) -> np.ndarray:
    direction = rng.standard_normal((m, dimension))
    norms = np.linalg.norm(direction, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    radii = rng.random(m) ** (1.0 / dimension)
    return direction / norms * radii[:, None]


def simulate_csr(m: int, window: Window, rng: np.random.Generator) -> np.ndarray:
    """Draw ``m`` uniform points inside the window.

    Ball windows are sampled by radial inversion (uniform direction times a
    U^(1/d) radius), box windows coordinate-wise.  Deterministic for a given
    generator state.
    """
    if m < 0:
        raise ValueError("sample size must be non-negative")
    if isinstance(window, BoxWindow):
        return rng.random((m, window.dimension)) * window.sides + window.lower
    return _sample_unit_ball(m, window.dimension, rng) * window.radius + window.center


class EnvelopeTable:
    """Per-sample-size upper envelopes of the CSR K curve in the unit ball.

    For each stored sample size m, ``upper_for(m)`` is the pointwise maximum
    over ``replicates`` simulated uniform samples.  Entries are built lazily
    and memoized; the whole table is deterministic given (seed, replicates,
    t_grid) because replicate r of size m draws from a generator seeded with
    spawn key (m, r).  Sample sizes below ``min_points`` are never tested.
    """

    def __init__(
        self,
        dimension: int,
        replicates: int = DEFAULT_REPLICATES,
        seed: int = 0,
        t_grid: Optional[np.ndarray] = None,
        min_points: int = DEFAULT_MIN_POINTS,
        lazy: bool = True,
        cache_path: Optional[str] = None,
    ):
        if replicates < 1:
            raise ValueError("replicates must be >= 1")
        if min_points < 2:
            raise ValueError("min_points must be >= 2")
        self.dimension = int(dimension)
        self.replicates = int(replicates)
        self.seed = int(seed)
        self.t_grid = _validate_grid(unit_ball_grid() if t_grid is None else t_grid)
        self.min_points = int(min_points)
        self.lazy = bool(lazy)
        self.cache_path = cache_path
        self._upper: dict[int, np.ndarray] = {}
        self._dirty = False

    @property
    def alpha(self) -> float:
        """Nominal one-sided level of the pointwise envelope test."""
        return 1.0 / (self.replicates + 1)

    @property
    def m_values(self) -> list[int]:
        return sorted(self._upper)

    def _build_upper(self, m: int) -> np.ndarray:
        upper = np.zeros(self.t_grid.size)
        for rep in range(self.replicates):
            rng = np.random.default_rng(
                np.random.SeedSequence(self.seed, spawn_key=(m, rep))
            )
            pts = _sample_unit_ball(m, self.dimension, rng)
            vals = _pair_curve(pdist(pts), self.t_grid, self.dimension, m)
            np.maximum(upper, vals, out=upper)
        return upper

    def upper_for(self, m: int) -> np.ndarray:
        if m < self.min_points:
            raise ValueError(
                f"no envelope below the min_points threshold ({self.min_points})"
            )
        got = self._upper.get(m)
        if got is None:
            if not self.lazy:
                raise EnvelopeMissingError(
                    f"no envelope for sample size {m} and lazy building is disabled"
                )
            got = self._build_upper(m)
            self._upper[m] = got
            self._dirty = True
        return got

    def ensure(self, m_values: Iterable[int]) -> None:
        """Build and memoize envelopes for every listed sample size."""
        for m in sorted(set(int(m) for m in m_values)):
            if m >= self.min_points and m not in self._upper:
                self._upper[m] = self._build_upper(m)
                self._dirty = True

    # -- persistence --------------------------------------------------------

    def save(self, path: Optional[str] = None) -> str:
        path = path or self.cache_path
        if path is None:
            raise ValueError("no cache path given")
        ms = np.array(self.m_values, dtype=np.int64)
        upper = np.vstack([self._upper[m] for m in ms]) if ms.size else np.empty((0, self.t_grid.size))
        tmp = f"{path}.tmp"
        with open(tmp, "wb") as fh:
            np.savez(
                fh,
                version=np.int64(ENVELOPE_FORMAT_VERSION),
                dimension=np.int64(self.dimension),
                replicates=np.int64(self.replicates),
                seed=np.int64(self.seed),
                min_points=np.int64(self.min_points),
                t_grid=self.t_grid,
                m_values=ms,
                upper=upper,
            )
        os.replace(tmp, path)
        self._dirty = False
        return path

    @classmethod
    def load(cls, path: str, lazy: bool = True) -> "EnvelopeTable":
        with np.load(path) as data:
            if int(data["version"]) != ENVELOPE_FORMAT_VERSION:
                raise ValueError(
                    f"unsupported envelope cache version {int(data['version'])}"
                )
            table = cls(
                dimension=int(data["dimension"]),
                replicates=int(data["replicates"]),
                seed=int(data["seed"]),
                t_grid=data["t_grid"],
                min_points=int(data["min_points"]),
                lazy=lazy,
                cache_path=path,
            )
            for m, row in zip(data["m_values"], data["upper"]):
                table._upper[int(m)] = np.array(row)
        return table

    @property
    def dirty(self) -> bool:
        return self._dirty


def envelope_cache_name(
    dimension: int,
    replicates: int,
    seed: int,
    t_grid: Optional[np.ndarray] = None,
) -> str:
    """Canonical cache file name keyed by (d, N, seed, grid)."""
    t = unit_ball_grid() if t_grid is None else np.asarray(t_grid, dtype=float)
    return f"envelope-d{dimension}-n{replicates}-s{seed}-g{t.size}x{t[-1]:g}.npz"


def build_envelope(
    m_values: Iterable[int],
    replicates: int = DEFAULT_REPLICATES,
    t_grid: Optional[np.ndarray] = None,
    seed: int = 0,
    *,
    dimension: int,
    min_points: int = DEFAULT_MIN_POINTS,
) -> EnvelopeTable:
    """Eagerly build an envelope table for the given sample sizes."""
    table = EnvelopeTable(
        dimension=dimension,
        replicates=replicates,
        seed=seed,
        t_grid=t_grid,
        min_points=min_points,
    )
    table.ensure(m_values)
    return table


# ---------------------------------------------------------------------------
# the CSR test


@dataclass(frozen=True)
class CsrTestResult:
    """Outcome of the one-sided upper-envelope CSR test.

    ``first_rejecting_t`` and the observed curve are in unit-ball units
    (fractions of the window radius); it is present exactly when the test
    rejects.
    """

    rejected: bool
    first_rejecting_t: Optional[float]
    observed: KCurve


def csr_test(points: np.ndarray, ball: BallWindow, table: EnvelopeTable) -> CsrTestResult:
    """Test the points inside ``ball`` against CSR.

    The points are mapped into the unit ball, their K curve is computed on
    the table grid, and the null is rejected as soon as the observed curve
    exceeds the stored upper envelope for this sample size at any grid
    distance.  Samples smaller than ``table.min_points`` never reject.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2:
        raise ValueError("points must be an n x d array")
    m, d = pts.shape
    if d != table.dimension:
        raise ValueError("envelope table dimension does not match the points")
    if ball.dimension != d:
        raise ValueError("window dimension does not match the points")
    if not ball.contains(pts):
        raise ValueError("all points must lie inside the ball")

    if m >= 2:
        normalized = (pts - ball.center) / ball.radius
        values = _pair_curve(pdist(normalized), table.t_grid, d, m)
    else:
        values = np.zeros(table.t_grid.size)
    observed = KCurve(t_grid=table.t_grid, values=values, sample_size=m, dimension=d)

    if m < table.min_points:
        return CsrTestResult(rejected=False, first_rejecting_t=None, observed=observed)

    exceed = values > table.upper_for(m)
    if not exceed.any():
        return CsrTestResult(rejected=False, first_rejecting_t=None, observed=observed)
    first_t = float(table.t_grid[int(np.argmax(exceed))])
    return CsrTestResult(rejected=True, first_rejecting_t=first_t, observed=observed)
