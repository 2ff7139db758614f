"""Convex planar sets (points of the complex plane): hulls, membership in
the closure or the relative interior, support values."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

DEDUP_TOL = 1e-12

POINT = "point"
SEGMENT = "segment"
POLYGON = "polygon"


def _cross(o: complex, a: complex, b: complex) -> float:
    return (a - o).real * (b - o).imag - (a - o).imag * (b - o).real


def convex_hull_indices(points) -> list[int]:
    """Indices of the convex hull of a point cloud, counterclockwise.

    Monotone chain; collinear points on the hull boundary are dropped so
    the output vertices are extreme points only.
    """
    pts = list(points)
    idx = sorted(range(len(pts)), key=lambda i: (pts[i].real, pts[i].imag))
    if len(idx) <= 2:
        return idx
    lower: list[int] = []
    for i in idx:
        while len(lower) >= 2 and _cross(pts[lower[-2]], pts[lower[-1]], pts[i]) <= 0:
            lower.pop()
        lower.append(i)
    upper: list[int] = []
    for i in reversed(idx):
        while len(upper) >= 2 and _cross(pts[upper[-2]], pts[upper[-1]], pts[i]) <= 0:
            upper.pop()
        upper.append(i)
    return lower[:-1] + upper[:-1]


def _segment_distance(z: complex, a: complex, b: complex) -> float:
    """Distance from z to the closed segment [a, b]."""
    d = b - a
    L2 = abs(d) ** 2
    if L2 == 0.0:
        return abs(z - a)
    t = ((z - a).real * d.real + (z - a).imag * d.imag) / L2
    t = min(1.0, max(0.0, t))
    return abs(z - (a + t * d))


@dataclass(frozen=True)
class Polygon:
    """A convex subset of the plane: a point, a segment, or a 2-D polygon
    with counterclockwise vertices."""

    vertices: tuple[complex, ...]
    kind: str

    @classmethod
    def from_points(cls, points, tol: float = DEDUP_TOL) -> "Polygon":
        pts = [complex(p) for p in points]
        if not pts:
            raise ValueError("cannot build a polygon from no points")
        scale = 1.0 + max(abs(p) for p in pts)
        # deduplicate
        uniq: list[complex] = []
        for p in pts:
            if all(abs(p - q) > tol * scale for q in uniq):
                uniq.append(p)
        if len(uniq) == 1:
            return cls((uniq[0],), POINT)
        # collinearity test against the two extreme points
        lo = min(uniq, key=lambda p: (p.real, p.imag))
        hi = max(uniq, key=lambda p: (p.real, p.imag))
        max_dev = max(abs(_cross(lo, hi, p)) for p in uniq) / max(abs(hi - lo), tol)
        if max_dev <= tol * scale:
            d = hi - lo
            ts = sorted(((p - lo).real * d.real + (p - lo).imag * d.imag) for p in uniq)
            a = lo + d * (ts[0] / abs(d) ** 2)
            b = lo + d * (ts[-1] / abs(d) ** 2)
            if abs(b - a) <= tol * scale:
                return cls((a,), POINT)
            return cls((a, b), SEGMENT)
        hull = convex_hull_indices(uniq)
        if len(hull) == 2:
            return cls((uniq[hull[0]], uniq[hull[1]]), SEGMENT)
        return cls(tuple(uniq[i] for i in hull), POLYGON)

    @property
    def is_degenerate(self) -> bool:
        return self.kind != POLYGON

    def support(self, theta: float) -> float:
        """max over the set of Re(e^{-i theta} z)."""
        u = complex(math.cos(theta), math.sin(theta))
        return max((v * u.conjugate()).real for v in self.vertices)

    def distance(self, z: complex) -> float:
        """Euclidean distance from z to the set (0 if inside)."""
        z = complex(z)
        if self.kind == POINT:
            return abs(z - self.vertices[0])
        if self.kind == SEGMENT:
            return _segment_distance(z, self.vertices[0], self.vertices[1])
        if self._inside_2d(z):
            return 0.0
        n = len(self.vertices)
        return min(
            _segment_distance(z, self.vertices[i], self.vertices[(i + 1) % n])
            for i in range(n)
        )

    def _inside_2d(self, z: complex) -> bool:
        n = len(self.vertices)
        return all(
            _cross(self.vertices[i], self.vertices[(i + 1) % n], z) >= 0.0
            for i in range(n)
        )

    def inward_margin(self, z: complex) -> float:
        """Margin of z relative to the relative boundary.

        For a 2-D polygon this is the least signed inward distance to an
        edge (negative outside).  For a segment it is the least distance
        to an endpoint measured along the segment, provided z sits on the
        carrier line; for a point, minus the distance to it.
        """
        z = complex(z)
        if self.kind == POINT:
            return -abs(z - self.vertices[0])
        if self.kind == SEGMENT:
            a, b = self.vertices
            d = b - a
            L = abs(d)
            off = abs(_cross(a, b, z)) / L  # distance to the carrier line
            t = ((z - a).real * d.real + (z - a).imag * d.imag) / (L * L)
            along = min(t, 1.0 - t) * L
            return along if off <= DEDUP_TOL * (1 + abs(a) + abs(b)) else min(along, 0.0) - off
        n = len(self.vertices)
        margins = []
        for i in range(n):
            a, b = self.vertices[i], self.vertices[(i + 1) % n]
            margins.append(_cross(a, b, z) / abs(b - a))
        return min(margins)

    def contains(self, z: complex, mode: str = "closure", tol: float = 1e-8) -> bool:
        """Membership test.

        ``closure``: within distance tol of the set.  ``relint``: inside
        the relative interior with margin at least tol (for a point this
        degenerates to equality within tol).
        """
        z = complex(z)
        if mode == "closure":
            return self.distance(z) <= tol
        if mode != "relint":
            raise ValueError(f"unknown membership mode {mode!r}")
        if self.kind == POINT:
            return abs(z - self.vertices[0]) <= tol
        if self.kind == SEGMENT:
            a, b = self.vertices
            if _segment_distance(z, a, b) > tol:
                return False
            d = b - a
            L = abs(d)
            t = ((z - a).real * d.real + (z - a).imag * d.imag) / (L * L)
            return min(t, 1.0 - t) * L >= tol
        return self.inward_margin(z) >= tol

    def to_csv(self) -> str:
        """One vertex per line as ``re,im``."""
        return "\n".join(f"{v.real!r},{v.imag!r}" for v in self.vertices) + "\n"

    def hausdorff_to(self, other: "Polygon", probes: int = 720) -> float:
        """Support-function estimate of the Hausdorff distance."""
        worst = 0.0
        for k in range(probes):
            th = 2 * math.pi * k / probes
            worst = max(worst, abs(self.support(th) - other.support(th)))
        return worst


def disc(center: complex, radius: float, m: int = 720) -> Polygon:
    """Inscribed m-gon of a disc, handy as a reference set in tests."""
    pts = [center + radius * complex(math.cos(2 * math.pi * k / m),
                                     math.sin(2 * math.pi * k / m)) for k in range(m)]
    return Polygon.from_points(pts)
