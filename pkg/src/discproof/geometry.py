"""Triangle quantities over interval edge lengths.

Every function here accepts scalar or batched intervals.  A batched
:class:`TriangleBox` is a stack of boxes sharing one radius-class triple,
which is how the verifier evaluates thousands of boxes per call.

Convention: edge ``k`` is opposite vertex ``k`` (``edges[0]`` is |BC|).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .interval import PI, Interval, contains_zero, where

if TYPE_CHECKING:
    from .constants import CaseParams

__all__ = [
    "RadiusClass",
    "TriangleBox",
    "angle",
    "angles",
    "area",
    "cos_args",
    "excess",
    "support_radius",
    "support_center",
    "signed_edge_distance",
    "signed_edge_distances",
    "tight_edges",
    "min_altitude",
    "TAYLOR_BOUND",
]

# f(x) = 2(1 - sqrt(1 - x))/x has 0 < f' < 1 on (-inf, 0.78]
TAYLOR_BOUND = 0.78


class RadiusClass(enum.Enum):
    LARGE = "1"
    SMALL = "r"

    def radius(self, r: Interval) -> Interval:
        return Interval(1.0) if self is RadiusClass.LARGE else r

    def __lt__(self, other: "RadiusClass") -> bool:
        # large first: canonical triples read 111, 11r, 1rr, rrr
        return self is RadiusClass.LARGE and other is RadiusClass.SMALL


L = RadiusClass.LARGE
S = RadiusClass.SMALL


def classes_label(classes) -> str:
    return "".join(c.value for c in classes)


def parse_classes(label: str) -> tuple[RadiusClass, RadiusClass, RadiusClass]:
    if len(label) != 3 or any(ch not in "1r" for ch in label):
        raise ValueError(f"bad class triple {label!r}")
    return tuple(RadiusClass(ch) for ch in label)  # type: ignore[return-value]


@dataclass(frozen=True)
class TriangleBox:
    """Radius classes at vertices A, B, C and the three edge intervals.

    ``r`` is the small radius of the case; the large radius is 1.
    """

    classes: tuple[RadiusClass, RadiusClass, RadiusClass]
    edges: tuple[Interval, Interval, Interval]
    r: Interval

    @property
    def radii(self) -> tuple[Interval, Interval, Interval]:
        return tuple(c.radius(self.r) for c in self.classes)  # type: ignore[return-value]

    @property
    def label(self) -> str:
        return classes_label(self.classes)

    def edge_radii(self, k: int) -> tuple[Interval, Interval]:
        """Radii of the two discs at the endpoints of edge ``k``."""
        i, j = [v for v in range(3) if v != k]
        return self.radii[i], self.radii[j]

    def edge_classes(self, k: int) -> tuple[RadiusClass, RadiusClass]:
        i, j = [v for v in range(3) if v != k]
        return self.classes[i], self.classes[j]

    def permuted(self, order: tuple[int, int, int]) -> "TriangleBox":
        return TriangleBox(
            tuple(self.classes[i] for i in order),  # type: ignore[arg-type]
            tuple(self.edges[i] for i in order),  # type: ignore[arg-type]
            self.r,
        )

    def __getitem__(self, idx) -> "TriangleBox":
        return TriangleBox(self.classes, tuple(e[idx] for e in self.edges), self.r)  # type: ignore[arg-type]


def tight_edges(classes, r: Interval) -> tuple[Interval, Interval, Interval]:
    radii = [c.radius(r) for c in classes]
    return (radii[1] + radii[2], radii[0] + radii[2], radii[0] + radii[1])


def tight_box(classes, r: Interval) -> TriangleBox:
    return TriangleBox(tuple(classes), tight_edges(classes, r), r)


def _cos_arg(opposite: Interval, side1: Interval, side2: Interval) -> Interval:
    return (side1.square() + side2.square() - opposite.square()) / (2 * side1 * side2)


def cos_args(T: TriangleBox) -> tuple[Interval, Interval, Interval]:
    a, b, c = T.edges
    return _cos_arg(a, b, c), _cos_arg(b, a, c), _cos_arg(c, a, b)


def angle(opposite: Interval, side1: Interval, side2: Interval) -> Interval:
    """Angle between ``side1`` and ``side2`` by the law of cosines."""
    return _cos_arg(opposite, side1, side2).acos()


def angles(T: TriangleBox) -> tuple[Interval, Interval, Interval]:
    return tuple(ca.acos() for ca in cos_args(T))  # type: ignore[return-value]


def heron_radicand(e1: Interval, e2: Interval, e3: Interval) -> Interval:
    """16 * area**2 written as a product of four factors."""
    return (e1 + e2 + e3) * (e2 + e3 - e1) * (e1 - e2 + e3) * (e1 + e2 - e3)


def area(e1: Interval, e2: Interval, e3: Interval) -> Interval:
    """Heron's formula; the radicand is clamped at zero."""
    return heron_radicand(e1, e2, e3).sqrt() * 0.25


def excess(T: TriangleBox, params: "CaseParams", angs=None, ar=None) -> Interval:
    """delta * area - covered area, coverage taken as the three disc sectors."""
    if angs is None:
        angs = angles(T)
    if ar is None:
        ar = area(*T.edges)
    cov = None
    for rv, th in zip(T.radii, angs):
        term = rv.square() * th
        cov = term if cov is None else cov + term
    return params.delta * ar - cov * 0.5


def min_altitude(T: TriangleBox, ar=None) -> Interval:
    if ar is None:
        ar = area(*T.edges)
    twice = ar * 2
    alts = [twice / e for e in T.edges]
    return alts[0].min(alts[1]).min(alts[2])


# -- support disc ---------------------------------------------------------


def _support_coefficients(T: TriangleBox):
    """Coefficients of A R^2 + B R + C = 0 for the support radius R.

    Frame: alpha = (0, 0), beta = (c, 0), gamma = (u, v).  With
    X = 2c x and Y = 4c^2 v y both linear in R, the tangency conditions
    reduce to K X^2 + Y^2 = 4 c^2 K (R + ra)^2 where K = 4 c^2 v^2 = 16 area^2,
    a polynomial identity free of divisions and square roots.
    """
    a, b, c = T.edges
    ra, rb, rc = T.radii
    a2, b2, c2 = a.square(), b.square(), c.square()
    w = b2 + c2 - a2  # 2cu
    K = heron_radicand(a, b, c)
    p0 = c2 + ra.square() - rb.square()
    p1 = (ra - rb) * 2
    q0 = c2 * (b2 + ra.square() - rc.square()) * 2 - w * p0
    q1 = c2 * (ra - rc) * 4 - w * p1
    four_c2 = c2 * 4
    A = K * p1.square() + q1.square() - four_c2 * K
    B = (K * p0 * p1 + q0 * q1) * 2 - four_c2 * K * ra * 2
    C = K * p0.square() + q0.square() - four_c2 * K * ra.square()
    return A, B, C


def support_radius(T: TriangleBox) -> Interval:
    """Enclosure of the smallest positive root of A R^2 + B R + C.

    With s = sign(C) the root is (-B - s sqrt(D)) / (2A), D = B^2 - 4AC.
    When B and C have opposite certified signs the same root is evaluated as
    2C / (-B + s sqrt(D)), which adds terms of equal sign and stays valid
    as A goes through zero.  Otherwise, where A*C is bounded away from zero
    the quotient form is used; if B is bounded away from zero and
    x = 4AC/B^2 stays below ``TAYLOR_BOUND`` the root lies in
    -(C/B) * hull(1, 1 + x).  Anything else gets the entire real line.
    """
    A, B, C = _support_coefficients(T)
    AC = A * C
    if not A.is_batch:
        return _support_radius_scalar(A, B, C, AC)

    ac_zero = contains_zero(AC)
    b_zero = contains_zero(B)
    c_zero = contains_zero(C)
    opposite = ~b_zero & ~c_zero & ((B.lo > 0) != (C.lo > 0))
    one = Interval(1.0)
    B_s = where(b_zero, one, B)
    C_s = where(c_zero, one, C)
    disc = _discriminant_root(A, B, C)
    conj = _conjugate_root(B_s, C_s, disc)
    quot = _quotient_root(where(ac_zero, one, A), B, where(ac_zero, one, C), disc)
    x = AC * 4 / B_s.square()
    taylor = _taylor_root(B_s, C, x)
    taylor_ok = ~b_zero & (x.hi <= TAYLOR_BOUND)
    entire = Interval.entire(A.lo)
    R = where(opposite, conj, where(~ac_zero, quot, where(taylor_ok, taylor, entire)))
    # both Taylor and the conjugate form enclose the root: keep the overlap
    both = opposite & taylor_ok
    if np.any(both):
        lo = np.where(both, np.maximum(R.lo, taylor.lo), R.lo)
        hi = np.where(both, np.minimum(R.hi, taylor.hi), R.hi)
        R = Interval._raw(lo, hi)
    return R


def _support_radius_scalar(A: Interval, B: Interval, C: Interval, AC: Interval) -> Interval:
    b_zero, c_zero = contains_zero(B), contains_zero(C)
    disc = _discriminant_root(A, B, C)
    taylor = None
    if not b_zero:
        x = AC * 4 / B.square()
        if x.hi <= TAYLOR_BOUND:
            taylor = _taylor_root(B, C, x)
    if not b_zero and not c_zero and (B.lo > 0) != (C.lo > 0):
        R = _conjugate_root(B, C, disc)
        return R if taylor is None else R.intersect(taylor)
    if not contains_zero(AC):
        return _quotient_root(A, B, C, disc)
    if taylor is not None:
        return taylor
    return Interval.entire()


def _discriminant_root(A: Interval, B: Interval, C: Interval) -> Interval:
    return (B.square() - A * C * 4).sqrt()


def _sign_times(C: Interval, x: Interval) -> Interval:
    # C is bounded away from zero here, so its sign is certified
    if C.is_batch:
        return where(C.lo > 0, x, -x)
    return x if C.lo > 0 else -x


def _quotient_root(A: Interval, B: Interval, C: Interval, disc: Interval) -> Interval:
    return (-B - _sign_times(C, disc)) / (A * 2)


def _conjugate_root(B: Interval, C: Interval, disc: Interval) -> Interval:
    return (C * 2) / (_sign_times(C, disc) - B)


def _closed_form_root(A: Interval, B: Interval, C: Interval) -> Interval:
    return _quotient_root(A, B, C, _discriminant_root(A, B, C))


def _taylor_root(B: Interval, C: Interval, x: Interval) -> Interval:
    return -(C / B) * (x + 1.0).hull(1.0)


def support_center(T: TriangleBox, R: Interval | None = None):
    """Support-disc center (x, y) in the frame alpha=(0,0), beta=(c,0).

    Returns ``(x, y, u, v)`` where (u, v) is vertex gamma.
    """
    if R is None:
        R = support_radius(T)
    a, b, c = T.edges
    ra, rb, rc = T.radii
    u = (b.square() + c.square() - a.square()) / (c * 2)
    v = heron_radicand(a, b, c).sqrt() / (c * 2)
    x = (c.square() + ra.square() - rb.square() + (ra - rb) * R * 2) / (c * 2)
    y = (b.square() + ra.square() - rc.square() + (ra - rc) * R * 2 - u * x * 2) / (v * 2)
    return x, y, u, v


def signed_edge_distances(T: TriangleBox, R: Interval | None = None):
    """Signed distances of the support center to the three edges.

    Positive when the center lies on the same side of the edge as the
    triangle.  Index ``k`` refers to edge ``k`` (opposite vertex ``k``).
    """
    a, b, c = T.edges
    x, y, u, v = support_center(T, R)
    d_c = y
    d_b = (v * x - u * y) / b
    d_a = ((u - c) * y - v * (x - c)) / a
    return d_a, d_b, d_c


def signed_edge_distance(T: TriangleBox, edge_index: int, R: Interval | None = None) -> Interval:
    """Signed distance to edge ``edge_index`` (1-based, edge k opposite vertex k)."""
    if edge_index not in (1, 2, 3):
        raise ValueError("edge_index must be 1, 2 or 3")
    return signed_edge_distances(T, R)[edge_index - 1]
