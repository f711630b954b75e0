"""Euclidean primitives.

Distances, angles, projection fractions, the (1+eps)-ellipse around a
segment, and the two waist bands inside it that drive edge
classification in the pruning pipeline.  Everything here is pure and
dimension-independent.
"""

from __future__ import annotations

import math
from enum import Enum

import numpy as np

# Relative tolerance for geometric inequality tests.  The underlying
# analysis is in exact reals; every float comparison in this package is
# guarded so the comparison contract is explicit.
GEOM_RTOL = 1e-9

# Projection-fraction bands of the two waist regions inside the ellipse:
# region A sits in a band of half-width 1/50 around 3/8, region B mirrors
# it around 5/8.  Band membership uses closed intervals with a small
# absolute tolerance.
BAND_HALF_WIDTH = 1.0 / 50.0
A_LO = 3.0 / 8.0 - BAND_HALF_WIDTH
A_HI = 3.0 / 8.0 + BAND_HALF_WIDTH
B_LO = 5.0 / 8.0 - BAND_HALF_WIDTH
B_HI = 5.0 / 8.0 + BAND_HALF_WIDTH
BAND_TOL = 1e-12


class GeomError(ValueError):
    """Base class for geometric precondition violations."""


class DuplicatePoint(GeomError):
    pass


class TooFewPoints(GeomError):
    pass


class ZeroVector(GeomError):
    pass


class DegenerateSegment(GeomError):
    pass


class Region(Enum):
    """Position of a point relative to the ellipse of a segment."""

    OUTSIDE = 0
    INSIDE_NEITHER = 1
    IN_A = 2
    IN_B = 3


class PointSet:
    """A finite set of d-dimensional points.

    ``scale`` records the factor the raw coordinates were divided by
    during :func:`normalize` (1.0 for raw sets), so results can be mapped
    back to input units.
    """

    __slots__ = ("coords", "scale", "_min_dist", "_max_dist")

    def __init__(self, coords, scale: float = 1.0):
        arr = np.ascontiguousarray(np.asarray(coords, dtype=np.float64))
        if arr.ndim != 2:
            raise GeomError("coordinates must be an (n, d) array")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise TooFewPoints("need at least one point with dimension >= 1")
        if not np.all(np.isfinite(arr)):
            raise GeomError("all coordinates must be finite")
        if arr.shape[0] > 1 and len(np.unique(arr, axis=0)) != arr.shape[0]:
            raise DuplicatePoint("point set contains duplicate points")
        if not scale > 0:
            raise GeomError("scale must be positive")
        self.coords = arr
        self.scale = float(scale)
        self._min_dist = None
        self._max_dist = None

    @property
    def n(self) -> int:
        return self.coords.shape[0]

    @property
    def dim(self) -> int:
        return self.coords.shape[1]

    def __len__(self) -> int:
        return self.n

    def dist(self, i: int, j: int) -> float:
        return float(np.linalg.norm(self.coords[i] - self.coords[j]))

    def _pairwise_extremes(self):
        if self._min_dist is None:
            lo, hi = math.inf, 0.0
            c = self.coords
            for i in range(self.n - 1):
                d = np.linalg.norm(c[i + 1 :] - c[i], axis=1)
                lo = min(lo, float(d.min()))
                hi = max(hi, float(d.max()))
            self._min_dist, self._max_dist = lo, hi
        return self._min_dist, self._max_dist

    def min_pairwise_distance(self) -> float:
        if self.n < 2:
            raise TooFewPoints("pairwise distance needs two points")
        return self._pairwise_extremes()[0]

    def spread(self) -> float:
        """Ratio of max to min pairwise distance."""
        lo, hi = self._pairwise_extremes()
        return hi / lo

    def is_normalized(self, rtol: float = GEOM_RTOL) -> bool:
        return abs(self.min_pairwise_distance() - 1.0) <= rtol

    def __repr__(self) -> str:  # pragma: no cover
        return f"PointSet(n={self.n}, dim={self.dim}, scale={self.scale})"


def normalize(raw) -> PointSet:
    """Scale a raw point set so its minimum pairwise distance is 1.

    The divisor is recorded as ``scale`` on the result.  Raises
    ``TooFewPoints`` for fewer than two points and ``DuplicatePoint``
    for coincident points.
    """
    if isinstance(raw, PointSet):
        raw = raw.coords
    ps = PointSet(raw)
    if ps.n < 2:
        raise TooFewPoints("normalization needs at least two points")
    d = ps.min_pairwise_distance()
    if d <= 0:
        raise DuplicatePoint("zero minimum pairwise distance")
    return PointSet(ps.coords / d, scale=d)


def angle_between(e1, e2) -> float:
    """Undirected angle between two vectors, in [0, pi/2].

    Computed as arccos(|e1.e2| / (|e1||e2|)); the absolute value folds
    antiparallel onto parallel.
    """
    v1 = np.asarray(e1, dtype=np.float64)
    v2 = np.asarray(e2, dtype=np.float64)
    n1 = float(np.linalg.norm(v1))
    n2 = float(np.linalg.norm(v2))
    if n1 == 0.0 or n2 == 0.0:
        raise ZeroVector("angle undefined for a zero vector")
    c = abs(float(np.dot(v1, v2))) / (n1 * n2)
    return math.acos(min(1.0, c))


def proj_fraction(s, t, x) -> float:
    """Signed fraction along st of the orthogonal projection of x.

    0 at s, 1 at t; negative or > 1 when the foot of the projection
    falls outside the segment.
    """
    s = np.asarray(s, dtype=np.float64)
    t = np.asarray(t, dtype=np.float64)
    st = t - s
    d2 = float(np.dot(st, st))
    if d2 == 0.0:
        raise DegenerateSegment("s and t coincide")
    return float(np.dot(np.asarray(x, dtype=np.float64) - s, st)) / d2


def region_of(s, t, x, eps: float) -> Region:
    """Classify x against the (1+eps)-ellipse with foci s and t.

    OUTSIDE when |sx|+|xt| > (1+eps)|st|; otherwise IN_A / IN_B when the
    projection fraction of x lies in the band around 3/8 resp. 5/8
    (closed intervals, tolerance 1e-12), else INSIDE_NEITHER.  Points
    whose projection falls outside the segment are never IN_A / IN_B.
    """
    if not 0.0 < eps < 1.0:
        raise GeomError("eps must lie in (0, 1)")
    s = np.asarray(s, dtype=np.float64)
    t = np.asarray(t, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    d = float(np.linalg.norm(t - s))
    if d == 0.0:
        raise DegenerateSegment("s and t coincide")
    ds = float(np.linalg.norm(x - s))
    dt = float(np.linalg.norm(x - t))
    if ds + dt > (1.0 + eps) * d * (1.0 + BAND_TOL):
        return Region.OUTSIDE
    f = proj_fraction(s, t, x)
    if A_LO - BAND_TOL <= f <= A_HI + BAND_TOL:
        return Region.IN_A
    if B_LO - BAND_TOL <= f <= B_HI + BAND_TOL:
        return Region.IN_B
    return Region.INSIDE_NEITHER


def region_codes(s, t, coords: np.ndarray, eps: float) -> np.ndarray:
    """Vectorized :func:`region_of` over the rows of ``coords``.

    Returns an int8 array of Region values.
    """
    s = np.asarray(s, dtype=np.float64)
    t = np.asarray(t, dtype=np.float64)
    st = t - s
    d2 = float(np.dot(st, st))
    if d2 == 0.0:
        raise DegenerateSegment("s and t coincide")
    d = math.sqrt(d2)
    ds = np.linalg.norm(coords - s, axis=1)
    dt = np.linalg.norm(coords - t, axis=1)
    inside = ds + dt <= (1.0 + eps) * d * (1.0 + BAND_TOL)
    f = (coords - s) @ st / d2
    in_a = inside & (f >= A_LO - BAND_TOL) & (f <= A_HI + BAND_TOL)
    in_b = inside & (f >= B_LO - BAND_TOL) & (f <= B_HI + BAND_TOL)
    out = np.full(coords.shape[0], Region.OUTSIDE.value, dtype=np.int8)
    out[inside] = Region.INSIDE_NEITHER.value
    out[in_a] = Region.IN_A.value
    out[in_b] = Region.IN_B.value
    return out


def low_angle_weight(edges, a, b, theta: float) -> float:
    """Total length of the edges making angle <= theta with segment ab.

    ``edges`` is a sequence of (p, q) endpoint pairs; zero-length
    entries contribute nothing.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    ab = b - a
    if float(np.dot(ab, ab)) == 0.0:
        raise DegenerateSegment("a and b coincide")
    total = 0.0
    for p, q in edges:
        e = np.asarray(q, dtype=np.float64) - np.asarray(p, dtype=np.float64)
        ln = float(np.linalg.norm(e))
        if ln == 0.0:
            continue
        if angle_between(e, ab) <= theta + BAND_TOL:
            total += ln
    return total
