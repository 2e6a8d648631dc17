"""First-order (mean-value) enclosures over edge-length boxes.

Plain interval evaluation of a long expression loses the correlation
between its terms, so the enclosure width stays proportional to the box
width times the sum of the absolute partial derivatives of every subterm.
The centred form

    f(box) in f(mid) + sum_i df/dx_i(box) * (x_i - mid_i)

only pays for the derivative of f itself, and the extra width shrinks
quadratically with the box.  Derivatives come from forward-mode
differentiation with interval values (:class:`Dual`).
"""

from __future__ import annotations

import numpy as np

from .geometry import (
    TriangleBox,
    _cos_arg,
    _support_coefficients,
    excess,
    signed_edge_distances,
    support_radius,
)
from .interval import Interval

__all__ = ["Dual", "variables", "centered", "midpoints", "BoxForms"]


class Dual:
    """Interval value with an interval gradient (``None`` for a constant)."""

    __slots__ = ("val", "grad")
    _defer_to = True

    def __init__(self, val: Interval, grad):
        self.val = val
        self.grad = grad

    @staticmethod
    def lift(x) -> "Dual":
        if isinstance(x, Dual):
            return x
        return Dual(Interval.coerce(x), None)

    @staticmethod
    def _combine(ga, gb, fa, fb):
        """Gradient fa * ga + fb * gb, skipping missing parts."""
        if ga is None and gb is None:
            return None
        if ga is None:
            return tuple(g * fb for g in gb)
        if gb is None:
            return tuple(g * fa for g in ga)
        return tuple(x * fa + y * fb for x, y in zip(ga, gb))

    def __add__(self, other):
        o = Dual.lift(other)
        if self.grad is None:
            g = o.grad
        elif o.grad is None:
            g = self.grad
        else:
            g = tuple(x + y for x, y in zip(self.grad, o.grad))
        return Dual(self.val + o.val, g)

    __radd__ = __add__

    def __neg__(self):
        return Dual(-self.val, None if self.grad is None else tuple(-g for g in self.grad))

    def __sub__(self, other):
        return self + (-Dual.lift(other))

    def __rsub__(self, other):
        return Dual.lift(other) + (-self)

    def __mul__(self, other):
        o = Dual.lift(other)
        return Dual(self.val * o.val, Dual._combine(self.grad, o.grad, o.val, self.val))

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = Dual.lift(other)
        val = self.val / o.val
        if self.grad is None and o.grad is None:
            return Dual(val, None)
        inv = 1.0 / o.val
        if o.grad is None:
            return Dual(val, tuple(g * inv for g in self.grad))
        if self.grad is None:
            return Dual(val, tuple(-(g * val) * inv for g in o.grad))
        return Dual(val, tuple((x - val * y) * inv for x, y in zip(self.grad, o.grad)))

    def __rtruediv__(self, other):
        return Dual.lift(other) / self

    def square(self):
        val = self.val.square()
        if self.grad is None:
            return Dual(val, None)
        twice = self.val * 2
        return Dual(val, tuple(g * twice for g in self.grad))

    def sqrt(self):
        val = self.val.sqrt()
        if self.grad is None:
            return Dual(val, None)
        inv = 1.0 / (val * 2)
        return Dual(val, tuple(g * inv for g in self.grad))

    def acos(self):
        val = self.val.acos()
        if self.grad is None:
            return Dual(val, None)
        c = self.val.intersect(Interval(-1.0, 1.0)) if not self.val.is_batch else _clip(self.val)
        inv = -1.0 / (1.0 - c.square()).sqrt()
        return Dual(val, tuple(g * inv for g in self.grad))


def _clip(x: Interval) -> Interval:
    return Interval._raw(np.clip(x.lo, -1.0, 1.0), np.clip(x.hi, -1.0, 1.0))


def variables(edges) -> tuple[Dual, Dual, Dual]:
    """The three edge lengths as independent variables."""
    out = []
    for k, e in enumerate(edges):
        zero = Interval._raw(np.zeros_like(e.lo), np.zeros_like(e.lo))
        one = Interval._raw(np.ones_like(e.lo), np.ones_like(e.lo))
        out.append(Dual(e, tuple(one if j == k else zero for j in range(3))))
    return tuple(out)  # type: ignore[return-value]


def midpoints(edges) -> tuple[Interval, ...]:
    return tuple(Interval._raw(m, m.copy()) for m in (e.lo + (e.hi - e.lo) * 0.5 for e in edges))


def centered(value_at_mid: Interval, d: Dual, edges, mids) -> Interval:
    """Mean-value enclosure, intersected with the direct one."""
    if d.grad is None:
        return d.val
    acc = value_at_mid
    for g, e, m in zip(d.grad, edges, mids):
        acc = acc + g * (e - m)
    lo = np.maximum(acc.lo, d.val.lo)
    hi = np.minimum(acc.hi, d.val.hi)
    return Interval._raw(lo, hi)


class BoxForms:
    """Centred enclosures of the triangle quantities the verifier needs."""

    def __init__(self, T: TriangleBox):
        self.T = T
        self.edges = T.edges
        self.mids = midpoints(T.edges)
        self.T_mid = TriangleBox(T.classes, self.mids, T.r)
        self.T_dual = TriangleBox(T.classes, variables(T.edges), T.r)

    def angles(self) -> tuple[Interval, Interval, Interval]:
        a, b, c = self.edges
        am, bm, cm = self.mids
        ad, bd, cd = self.T_dual.edges
        out = []
        for (o, s1, s2), (om, s1m, s2m), (od, s1d, s2d) in (
            ((a, b, c), (am, bm, cm), (ad, bd, cd)),
            ((b, a, c), (bm, am, cm), (bd, ad, cd)),
            ((c, a, b), (cm, am, bm), (cd, ad, bd)),
        ):
            mid_val = _cos_arg(om, s1m, s2m).acos()
            dual = _cos_arg(od, s1d, s2d).acos()
            out.append(centered(mid_val, dual, self.edges, self.mids))
        return tuple(out)  # type: ignore[return-value]

    def excess(self, params) -> Interval:
        return centered(excess(self.T_mid, params), excess(self.T_dual, params), self.edges, self.mids)

    def support_radius(self, R_box: Interval | None = None) -> Dual:
        """R with its gradient, from implicit differentiation of A R^2 + B R + C."""
        if R_box is None:
            R_box = support_radius(self.T)
        A, B, C = _support_coefficients(self.T_dual)
        denom = A.val * R_box * 2 + B.val
        R2 = R_box.square()
        grad = tuple(-(ga * R2 + gb * R_box + gc) / denom for ga, gb, gc in zip(A.grad, B.grad, C.grad))
        R_mid = support_radius(self.T_mid)
        R = centered(R_mid, Dual(R_box, grad), self.edges, self.mids)
        self._R_mid = R_mid
        return Dual(R, grad)

    def signed_distances(self, R: Dual) -> tuple[Interval, Interval, Interval]:
        d_mid = signed_edge_distances(self.T_mid, self._R_mid)
        d_box = signed_edge_distances(self.T_dual, R)
        return tuple(centered(m, d, self.edges, self.mids) for m, d in zip(d_mid, d_box))  # type: ignore[return-value]
