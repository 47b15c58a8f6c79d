"""Vector state spaces: box bounds, distance metrics, sampling and unit scaling."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

TWO_PI = 2.0 * np.pi


def angle_diff(a, b):
    """Shortest absolute angular difference, in [0, pi]."""
    d = np.mod(np.asarray(a, dtype=float) - np.asarray(b, dtype=float), TWO_PI)
    return np.minimum(d, TWO_PI - d)


def wrap_angle(theta):
    """Normalize to [0, 2*pi)."""
    return np.mod(theta, TWO_PI)


@dataclass(frozen=True)
class BoxBounds:
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.array(self.lo, dtype=float).ravel()
        hi = np.array(self.hi, dtype=float).ravel()
        if lo.shape != hi.shape:
            raise ValueError(f"bound shapes differ: {lo.shape} vs {hi.shape}")
        if np.any(np.isnan(lo)) or np.any(np.isnan(hi)) or np.any(lo > hi):
            raise ValueError(f"invalid bounds lo={lo} hi={hi}")
        lo.flags.writeable = False
        hi.flags.writeable = False
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self) -> int:
        return self.lo.shape[0]

    @property
    def width(self) -> np.ndarray:
        return self.hi - self.lo

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.lo)) and np.all(np.isfinite(self.hi)))

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lo) and np.all(x <= self.hi))

    def append_axis(self, lo: float, hi: float) -> "BoxBounds":
        return BoxBounds(np.append(self.lo, lo), np.append(self.hi, hi))

    def with_axis(self, axis: int, lo: float, hi: float) -> "BoxBounds":
        new_lo, new_hi = self.lo.copy(), self.hi.copy()
        new_lo[axis], new_hi[axis] = lo, hi
        return BoxBounds(new_lo, new_hi)


@dataclass(frozen=True)
class Metric:
    """Weighted euclidean distance, optionally with circular (angle) axes.

    d(a, b)^2 = sum_i weights[i] * diff_i(a, b)^2, where diff_i is the shortest
    angular difference on angular axes and |a_i - b_i| elsewhere.
    """

    weights: np.ndarray
    angular_axes: tuple[int, ...] = field(default=())

    def __post_init__(self):
        w = np.array(self.weights, dtype=float).ravel()
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ValueError(f"metric weights must be finite and >= 0, got {w}")
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)
        axes = tuple(sorted(int(a) for a in self.angular_axes))
        if any(a < 0 or a >= w.shape[0] for a in axes):
            raise ValueError(f"angular axis out of range: {axes}")
        object.__setattr__(self, "angular_axes", axes)

    @classmethod
    def euclidean(cls, dim: int) -> "Metric":
        return cls(np.ones(dim))

    @property
    def dim(self) -> int:
        return self.weights.shape[0]

    @property
    def kind(self) -> str:
        if not self.angular_axes and np.all(self.weights == 1.0):
            return "euclidean"
        return "weighted-with-angles"

    def extended(self, weight: float) -> "Metric":
        """Same metric with one extra linear axis appended (e.g. the cost axis)."""
        return Metric(np.append(self.weights, weight), self.angular_axes)

    def with_weights(self, weights: Sequence[float]) -> "Metric":
        return Metric(np.asarray(weights, dtype=float), self.angular_axes)

    def axis_diffs(self, a, b) -> np.ndarray:
        """Per-axis absolute differences; works row-wise on 2D ``a``."""
        d = np.abs(np.asarray(a, dtype=float) - np.asarray(b, dtype=float))
        if self.angular_axes:
            ax = list(self.angular_axes)
            d[..., ax] = angle_diff(d[..., ax], 0.0)
        return d

    def distance(self, a, b) -> float:
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        if a.shape != (self.dim,) or b.shape != (self.dim,):
            raise ValueError(
                f"dimension mismatch: metric {self.dim}, got {a.shape} and {b.shape}")
        d = self.axis_diffs(a, b)
        return float(np.sqrt(np.dot(self.weights, d * d)))

    def distances(self, points, q) -> np.ndarray:
        """Distances from each row of ``points`` to ``q``."""
        d = self.axis_diffs(points, q)
        return np.sqrt((d * d) @ self.weights)


def metric_distance(m: Metric, a, b) -> float:
    return m.distance(a, b)


def sample_uniform(b: BoxBounds, rng: np.random.Generator) -> np.ndarray:
    if not b.is_finite():
        raise ValueError("cannot sample uniformly from unbounded box")
    return rng.uniform(b.lo, b.hi)


def scale_to_unit(x, b: BoxBounds) -> np.ndarray:
    """Affine map of ``b`` onto [0,1]^n; zero-width axes map to 0.5."""
    x = np.asarray(x, dtype=float)
    w = b.width
    if not np.all(np.isfinite(w)):
        raise ValueError("cannot scale against unbounded box")
    safe = np.where(w > 0, w, 1.0)
    return np.where(w > 0, (x - b.lo) / safe, 0.5)


def unscale_from_unit(s, b: BoxBounds) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    return b.lo + s * b.width
