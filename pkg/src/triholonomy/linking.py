"""Gauss linking numbers of closed space curves and the topological gate phase.

``gauss_linking`` evaluates the double line integral

    Lk = (1/4 pi) oint oint (dr1 x dr2) . (r1 - r2) / |r1 - r2|^3

by a double midpoint sum over segments and rounds to the nearest integer;
``cs_phase`` turns charges, linking and self-linking data, and a positive
integer level k into the state-dependent control phase

    phi = (4 pi / k) sum_{i<j} q_i q_j Lk_ij + (2 pi / k) sum_i q_i^2 SLk_i,

reduced mod 2 pi.  Self-linking requires a framing choice and is accepted
as declared input (default 0) rather than computed from geometry.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, ValidationError

__all__ = ["SpaceCurve", "LinkData", "gauss_linking", "hopf_pair", "cs_phase"]


@dataclass(frozen=True)
class SpaceCurve:
    """Closed polygonal space curve.

    ``points`` holds at least 17 samples (16 segments) with the last sample
    closing onto the first to within 1e-10 of the curve diameter.
    """

    points: np.ndarray
    closed: bool = True

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 3:
            raise ValidationError("curve points must have shape (n, 3)")
        if pts.shape[0] < 17:
            raise ValidationError("a closed curve needs at least 16 segments (17 samples)")
        if not np.all(np.isfinite(pts)):
            raise ValidationError("non-finite curve points")
        seglen = np.linalg.norm(np.diff(pts, axis=0), axis=1)
        if np.any(seglen == 0.0):
            raise ValidationError("consecutive duplicate points on curve")
        diam = self.diameter_of(pts)
        if self.closed and np.linalg.norm(pts[-1] - pts[0]) > 1e-10 * diam:
            raise ValidationError(
                f"curve closure gap {np.linalg.norm(pts[-1] - pts[0]):.3e} exceeds 1e-10 of diameter"
            )
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @staticmethod
    def diameter_of(pts: np.ndarray) -> float:
        lo, hi = pts.min(axis=0), pts.max(axis=0)
        return float(np.linalg.norm(hi - lo))

    @property
    def diameter(self) -> float:
        return self.diameter_of(self.points)

    @property
    def segments(self) -> np.ndarray:
        return np.diff(self.points, axis=0)

    @property
    def midpoints(self) -> np.ndarray:
        return 0.5 * (self.points[1:] + self.points[:-1])

    @classmethod
    def from_function(cls, fn, n_segments: int = 256) -> "SpaceCurve":
        """Sample a parametric curve fn(t), t in [0, 2 pi], into a closed polygon."""
        t = np.linspace(0.0, 2 * math.pi, n_segments + 1)
        pts = np.array([fn(ti) for ti in t], dtype=float)
        pts[-1] = pts[0]
        return cls(pts)

    def reversed(self) -> "SpaceCurve":
        return SpaceCurve(self.points[::-1], self.closed)

    def translated(self, offset) -> "SpaceCurve":
        return SpaceCurve(self.points + np.asarray(offset, dtype=float), self.closed)

    def scaled(self, factor: float) -> "SpaceCurve":
        return SpaceCurve(self.points * float(factor), self.closed)


@dataclass(frozen=True)
class LinkData:
    """Pairwise linking matrix and per-curve self-linking integers."""

    lk_matrix: np.ndarray
    slk: np.ndarray = None

    def __post_init__(self):
        lk = np.array(self.lk_matrix, dtype=int)
        if lk.ndim != 2 or lk.shape[0] != lk.shape[1]:
            raise ValidationError("linking matrix must be square")
        if not np.array_equal(lk, lk.T):
            raise ValidationError("linking matrix must be symmetric")
        np.fill_diagonal(lk, 0)  # diagonal unused
        slk = np.zeros(lk.shape[0], dtype=int) if self.slk is None else np.array(self.slk, dtype=int)
        if slk.shape != (lk.shape[0],):
            raise ValidationError("self-linking vector length must match the matrix")
        lk.setflags(write=False)
        slk.setflags(write=False)
        object.__setattr__(self, "lk_matrix", lk)
        object.__setattr__(self, "slk", slk)

    @classmethod
    def pair(cls, lk: int, slk=(0, 0)) -> "LinkData":
        return cls(np.array([[0, lk], [lk, 0]]), np.asarray(slk, dtype=int))


def gauss_linking_integral(c1: SpaceCurve, c2: SpaceCurve) -> float:
    """The raw (pre-rounding) Gauss double integral over segment midpoints."""
    m1, d1 = c1.midpoints, c1.segments
    m2, d2 = c2.midpoints, c2.segments
    diff = m1[:, None, :] - m2[None, :, :]  # (n1, n2, 3)
    dist = np.linalg.norm(diff, axis=2)
    min_sep = float(dist.min())
    scale = max(c1.diameter, c2.diameter)
    if min_sep < 1e-3 * scale:
        raise ValidationError(
            f"curves approach within {min_sep:.3e} (< 1e-3 of diameter); linking integral unreliable"
        )
    cross = np.cross(d1[:, None, :], d2[None, :, :])
    integrand = np.einsum("ijk,ijk->ij", cross, diff) / dist**3
    return float(integrand.sum() / (4 * math.pi))


def gauss_linking(c1: SpaceCurve, c2: SpaceCurve) -> int:
    """Gauss linking number of two disjoint closed curves.

    Raises:
        ValidationError: curves approach closer than 1e-3 of their diameter.
        NumericalError: the quadrature is more than 0.05 away from an
            integer (refine the sampling).
    """
    raw = gauss_linking_integral(c1, c2)
    nearest = round(raw)
    if abs(raw - nearest) > 0.05:
        raise NumericalError(
            f"Gauss integral {raw:.4f} deviates from an integer by more than 0.05; refine sampling"
        )
    return int(nearest)


def hopf_pair(radius1: float = 1.0, radius2: float = 1.0, n_segments: int = 512):
    """The standard Hopf-linked circle pair, oriented so gauss_linking = +1.

    Circle 1 lies in the xy-plane centred at the origin; circle 2 lies in
    the xz-plane centred at (radius1, 0, 0) and threads through circle 1.
    """
    if radius1 <= 0 or radius2 <= 0:
        raise ValidationError("radii must be positive")

    def circle1(t):
        return (radius1 * math.cos(t), radius1 * math.sin(t), 0.0)

    def circle2(t):
        return (radius1 + radius2 * math.cos(t), 0.0, -radius2 * math.sin(t))

    return (
        SpaceCurve.from_function(circle1, n_segments),
        SpaceCurve.from_function(circle2, n_segments),
    )


def cs_phase(charges, link: LinkData, k: int) -> float:
    """State-dependent topological phase of linked control cycles, mod 2 pi.

    Each unordered curve pair contributes (4 pi / k) q_i q_j Lk_ij and each
    curve (2 pi / k) q_i^2 SLk_i.
    """
    if not isinstance(k, (int, np.integer)) or k < 1:
        raise ValidationError("level k must be a positive integer")
    q = np.asarray(charges, dtype=float)
    if q.ndim != 1 or q.size != link.lk_matrix.shape[0]:
        raise ValidationError("need one finite charge per curve")
    if not np.all(np.isfinite(q)):
        raise ValidationError("charges must be finite")
    pair_term = 0.0
    n = q.size
    for i in range(n):
        for j in range(i + 1, n):
            pair_term += q[i] * q[j] * link.lk_matrix[i, j]
    self_term = float(np.sum(q**2 * link.slk))
    return float((4 * math.pi / k) * pair_term + (2 * math.pi / k) * self_term) % (2 * math.pi)
