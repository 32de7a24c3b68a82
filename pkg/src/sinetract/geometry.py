"""Planar geometry primitives: triangle degeneracy, distortion ratios, Koebe bounds.

The degeneracy measure of a triangle with vertices z1, z2, z3 and side
lengths d_{j,k} = |z_j - z_k| is

    D = max over labelings of  d_{j,k} / (d_{j,l} + d_{k,l}),

which by the triangle inequality lies in [1/2, 1], equals 1 exactly for
collinear points, and is invariant under similarity transforms of the
plane.  A univalent map with derivative-magnitude ratio L on a convex set
can increase D by at most the factor L, which is what makes shrinking
near-collinearity tests meaningful under conformal pullbacks.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

_SQRT2_MINUS_1 = math.sqrt(2.0) - 1.0

# 1 - D below this is treated as exactly collinear.
COLLINEAR_TOL = 1e-12


class InvalidTriangleError(ValueError):
    """Raised when triangle vertices are not pairwise distinct."""


class NonUnivalentSampleError(ValueError):
    """Raised when a derivative-magnitude sample is zero or negative."""


@dataclass(frozen=True)
class Triangle:
    """Triangle given by three pairwise distinct complex vertices."""

    z1: complex
    z2: complex
    z3: complex

    def __post_init__(self):
        if min(self.side_lengths()) <= 0.0:
            raise InvalidTriangleError(
                "triangle vertices must be pairwise distinct"
            )

    def vertices(self) -> tuple[complex, complex, complex]:
        return (self.z1, self.z2, self.z3)

    def side_lengths(self) -> tuple[float, float, float]:
        """(d12, d13, d23)."""
        return (
            abs(self.z1 - self.z2),
            abs(self.z1 - self.z3),
            abs(self.z2 - self.z3),
        )

    def diameter(self) -> float:
        return max(self.side_lengths())


@dataclass(frozen=True)
class DistortionEstimate:
    """Sampled sup/inf of |f'| over a set, and their ratio."""

    sup_abs_deriv: float
    inf_abs_deriv: float
    ratio: float


def degeneracy(tri: Triangle) -> float:
    """Degeneracy measure D(tri) in [1/2, 1]; 1 iff the vertices are collinear.

    The maximum over the three labelings of one side length divided by the
    sum of the other two.
    """
    d12, d13, d23 = tri.side_lengths()
    q1 = d12 / (d13 + d23)
    q2 = d13 / (d12 + d23)
    q3 = d23 / (d12 + d13)
    return min(max(q1, q2, q3), 1.0)


def is_collinear(tri: Triangle) -> bool:
    return 1.0 - degeneracy(tri) < COLLINEAR_TOL


def triangle_angles(tri: Triangle) -> tuple[float, float, float]:
    """Interior angles at (z1, z2, z3), each in (0, pi), summing to pi.

    Computed with atan2 of cross/dot products, which stays accurate for
    needle triangles where acos of a clamped cosine would not.
    """
    z1, z2, z3 = tri.vertices()

    def angle_at(a: complex, b: complex, c: complex) -> float:
        u = b - a
        v = c - a
        cross = u.real * v.imag - u.imag * v.real
        dot = u.real * v.real + u.imag * v.imag
        return abs(math.atan2(cross, dot))

    return (
        angle_at(z1, z2, z3),
        angle_at(z2, z3, z1),
        angle_at(z3, z1, z2),
    )


def distortion_on_set(deriv_abs_samples) -> DistortionEstimate:
    """Sampled distortion sup|f'|/inf|f'| over a bounded convex set.

    This is a sampling estimate: a lower bound on the true distortion.
    Certificates that need a guaranteed bound use koebe_distortion_bound
    instead.
    """
    samples = [float(s) for s in deriv_abs_samples]
    if len(samples) < 2:
        raise ValueError("need at least 2 derivative samples")
    if min(samples) <= 0.0:
        raise NonUnivalentSampleError(
            "zero (or negative) |f'| sample: map is not univalent on the set"
        )
    sup_v = max(samples)
    inf_v = min(samples)
    return DistortionEstimate(sup_v, inf_v, sup_v / inf_v)


def koebe_distortion_bound(r: float, s: float) -> float:
    """((r+s)/(r-s))^4: distortion bound on D(z0,s) for f univalent on D(z0,r)."""
    if not 0.0 <= s < r:
        raise ValueError(f"need 0 <= s < r, got s={s}, r={r}")
    return ((r + s) / (r - s)) ** 4


def convexity_radius_check(r: float) -> bool:
    """True iff a univalent image of D(0,r), r <= sqrt(2)-1, is guaranteed convex."""
    if r <= 0:
        raise ValueError("radius must be positive")
    return r <= _SQRT2_MINUS_1


def smooth_curve_degeneracy_profile(curve, t0_index: int, scales):
    """Per-scale minimum of D over triangles anchored at curve[t0_index].

    For each scale eps, forms all triangles (z1, p0, z2) with z1, z2 curve
    samples within eps of p0 = curve[t0_index] and records the smallest
    degeneracy found (the most non-degenerate triangle).  For a curve
    differentiable at the anchor with nonzero derivative this minimum tends
    to 1 as eps -> 0; staying bounded away from 1 at shrinking scales is
    evidence against differentiability there.

    Scales with fewer than 2 usable samples are reported as None with a
    warning.
    """
    pts = [complex(p) for p in curve]
    if not 0 <= t0_index < len(pts):
        raise ValueError("anchor index out of range")
    p0 = pts[t0_index]
    others = [p for i, p in enumerate(pts) if i != t0_index and p != p0]
    results: list[float | None] = []
    for eps in scales:
        near = [p for p in others if abs(p - p0) <= eps]
        if len(near) < 2:
            warnings.warn(
                f"scale {eps}: fewer than 2 samples within range, skipped",
                stacklevel=2,
            )
            results.append(None)
            continue
        best = 1.0
        for i in range(len(near)):
            for j in range(i + 1, len(near)):
                if near[i] == near[j]:
                    continue
                d = degeneracy(Triangle(near[i], p0, near[j]))
                if d < best:
                    best = d
        results.append(best)
    return results


def map_triangle(tri: Triangle, f) -> Triangle:
    """Image triangle under a pointwise map f (must keep vertices distinct)."""
    return Triangle(f(tri.z1), f(tri.z2), f(tri.z3))
