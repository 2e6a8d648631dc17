"""Local inequality on epsilon-tight triangles via derivative bounds.

On the box where every edge lies between its tight length and that length
plus epsilon, E and U agree at the tight corner.  Moving away from the
corner increases E at least as fast as U when, for each edge x_i,

    max over the box of (sum_v m_v |d angle_v / d x_i|)  <=  min of dE/dx_i.

All displacements are nonnegative on the box, so integrating along the
straight path from the corner gives E >= U everywhere on it.  The vertex
terms of U are constant plus m |angle - tight angle|, hence the rate bound;
edge terms vanish as long as every edge stays below its threshold.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .constants import CaseParams
from .geometry import TriangleBox, area, parse_classes, tight_edges
from .interval import Interval, sure_le
from .potentials import VTable

__all__ = [
    "EpsilonBox",
    "EpsilonVerdict",
    "ThresholdViolationError",
    "epsilon_box",
    "d_area",
    "d_angle",
    "d_excess",
    "d_potential_bound",
    "check_epsilon",
    "TRIPLES",
]

TRIPLES = ("111", "11r", "1rr", "rrr")


class ThresholdViolationError(ValueError):
    """An epsilon-box edge may reach its edge-potential threshold."""


@dataclass(frozen=True)
class EpsilonBox:
    classes: tuple
    eps: Interval
    box: tuple[Interval, Interval, Interval]
    r: Interval

    @property
    def triangle(self) -> TriangleBox:
        return TriangleBox(self.classes, self.box, self.r)

    @property
    def label(self) -> str:
        return "".join(c.value for c in self.classes)


def epsilon_box(classes, r: Interval, eps) -> EpsilonBox:
    if isinstance(classes, str):
        classes = parse_classes(classes)
    eps = Interval.coerce(eps)
    tight = tight_edges(classes, r)
    box = tuple(Interval._raw(t.lo, (t + eps).hi) for t in tight)
    return EpsilonBox(tuple(classes), eps, box, r)  # type: ignore[arg-type]


def _others(i: int) -> tuple[int, int]:
    j, k = [v for v in range(3) if v != i]
    return j, k


def d_area(edges, i: int, ar: Interval | None = None) -> Interval:
    """d area / d x_i (0-based ``i``)."""
    if ar is None:
        ar = area(*edges)
    j, k = _others(i)
    x = edges
    return x[i] * (x[j].square() + x[k].square() - x[i].square()) / (ar * 8)


def d_angle(edges, v: int, i: int, ar: Interval | None = None, cosines=None) -> Interval:
    """d angle_v / d x_i (0-based), angle_v opposite edge v."""
    if ar is None:
        ar = area(*edges)
    twice = ar * 2
    if v == i:
        return edges[i] / twice
    if cosines is None:
        cosines = _cosines(edges)
    w = 3 - v - i
    return -(edges[v] * cosines[w]) / twice


def _cosines(edges):
    a, b, c = edges
    def arg(o, s1, s2):
        return (s1.square() + s2.square() - o.square()) / (s1 * s2 * 2)
    # clamp into [-1, 1]; the true cosines live there
    return tuple(x.intersect(Interval(-1.0, 1.0)) for x in (arg(a, b, c), arg(b, a, c), arg(c, a, b)))


def d_excess(box: EpsilonBox, i: int, params: CaseParams) -> Interval:
    """Enclosure of dE/dx_i over the box (``i`` is 1-based)."""
    k = i - 1
    edges = box.box
    ar = area(*edges)
    cosines = _cosines(edges)
    radii = box.triangle.radii
    cov = None
    for v in range(3):
        term = radii[v].square() * d_angle(edges, v, k, ar, cosines)
        cov = term if cov is None else cov + term
    return params.delta * d_area(edges, k, ar) - cov * 0.5


def _check_thresholds(box: EpsilonBox, params: CaseParams) -> None:
    T = box.triangle
    for k in range(3):
        x, y = T.edge_classes(k)
        if not box.box[k].hi < params.l(x, y).lo:
            raise ThresholdViolationError(
                f"edge {k + 1} of the {box.label} box reaches up to {box.box[k].hi!r}, "
                f"threshold l = {params.l(x, y).lo!r}"
            )


def d_potential_bound(box: EpsilonBox, i: int, vt: VTable, params: CaseParams) -> Interval:
    """Upper bound on the rate of change of U along x_i (1-based)."""
    _check_thresholds(box, params)
    k = i - 1
    edges = box.box
    ar = area(*edges)
    cosines = _cosines(edges)
    total = Interval(0.0)
    for v, cls in enumerate(box.classes):
        rate = abs(d_angle(edges, v, k, ar, cosines))
        total = total + params.m(cls) * Interval(rate.hi)
    return total


@dataclass
class EpsilonVerdict:
    triple: str
    passed: bool
    eps: Interval
    d_excess: list = field(default_factory=list)
    d_potential: list = field(default_factory=list)
    failing_direction: int | None = None
    reason: str = ""


def check_epsilon(params: CaseParams, vt: VTable, eps=None) -> dict[str, EpsilonVerdict]:
    """Per-triple verdicts for the epsilon-tight local inequality."""
    eps = params.epsilon if eps is None else Interval.coerce(eps)
    out = {}
    for label in TRIPLES:
        box = epsilon_box(label, params.r, eps)
        verdict = EpsilonVerdict(label, True, eps)
        try:
            for i in (1, 2, 3):
                dE = d_excess(box, i, params)
                dU = d_potential_bound(box, i, vt, params)
                verdict.d_excess.append(dE)
                verdict.d_potential.append(dU)
                if verdict.passed and not sure_le(dU, dE):
                    verdict.passed = False
                    verdict.failing_direction = i
                    verdict.reason = f"rate of U along x{i} not dominated by dE/dx{i}"
        except ThresholdViolationError as exc:
            verdict.passed = False
            verdict.reason = str(exc)
        out[label] = verdict
    return out
