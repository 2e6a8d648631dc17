"""Vertex and edge potentials.

The six tight-triangle vertex potentials ``V_abc`` (potential at the disc of
radius ``b`` in the tight triangle with discs ``a``, ``b``, ``c``) are the
unique solution of a small linear system.  It has four tight-triangle
equations (the potentials of a tight triangle add up to its excess), one
equation for the corona of each disc size in the target packing (the
potentials around it add up to zero), and a normalization.  These seven
equations have rank six.  Every full-rank subset of six is solved and the
enclosures are intersected; all seven must then hold on the result.

Case 5 differs.  A small disc surrounded by two large then three small discs
is *singular*, and carries ``V'_rrr = E_rrr / 2`` in each small-only
triangle.  The other (regular) vertices of such a triangle share what is
left of ``E_rrr`` equally.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Mapping, Sequence

from .constants import CaseParams
from .geometry import (
    RadiusClass,
    TriangleBox,
    angle,
    angles,
    excess,
    parse_classes,
    signed_edge_distances,
    support_radius,
    tight_box,
)
from .interval import DomainError, Interval, contains_zero, sure_le, where

__all__ = [
    "VTABLE_NAMES",
    "TARGET_CORONAS",
    "VertexRole",
    "VTable",
    "InconsistentSystemError",
    "solve_v_table",
    "tight_excesses",
    "tight_angle",
    "vertex_potential",
    "edge_potential",
    "total_potential",
    "potential_hull_case5",
    "corona_sum",
    "capping_threshold",
    "capping_condition",
    "target_corona_sums",
    "default_roles",
    "case5_role_assignments",
    "base_potential",
    "vtable_name",
]

L = RadiusClass.LARGE
S = RadiusClass.SMALL

VTABLE_NAMES = ("V111", "Vrrr", "Vr1r", "V1rr", "V1r1", "V11r")

# Potential sums that vanish around the small and the large disc of each
# target packing.  In case 5, "Vrrr" in the small-disc sum stands for V'_rrr.
TARGET_CORONAS: dict[int, tuple[dict[str, int], dict[str, int]]] = {
    1: ({"V1r1": 3, "V1rr": 2}, {"V11r": 6, "Vr1r": 1}),
    2: ({"Vrrr": 1, "V1r1": 2, "V1rr": 2}, {"V11r": 4, "V111": 2, "Vr1r": 1}),
    3: ({"V1rr": 4, "V1r1": 1}, {"Vr1r": 4, "V11r": 4}),
    4: ({"V1r1": 4}, {"V11r": 8}),
    5: ({"V1r1": 1, "V1rr": 2, "Vrrr": 2}, {"V11r": 6, "Vr1r": 3}),
    6: ({"Vrrr": 1, "V1rr": 4}, {"Vr1r": 12}),
    7: ({"V1rr": 2, "V1r1": 2}, {"V11r": 8, "Vr1r": 2}),
    8: ({"V1r1": 3}, {"V11r": 12}),
    9: ({"Vrrr": 1, "V1rr": 2, "V1r1": 1}, {"V11r": 12, "Vr1r": 6}),
}

SINGULAR_CASE = 5


class VertexRole(enum.Enum):
    PLAIN = "plain"
    REGULAR = "regular"
    SINGULAR = "singular"


class InconsistentSystemError(ArithmeticError):
    pass


def vtable_name(center: RadiusClass, a: RadiusClass, b: RadiusClass) -> str:
    """Name of the potential at ``center`` whose neighbours are ``a`` and ``b``."""
    n_small = (a is S) + (b is S)
    if center is L:
        return ("V111", "V11r", "Vr1r")[n_small]
    return ("V1r1", "V1rr", "Vrrr")[n_small]


@dataclass(frozen=True)
class VTable:
    case_id: int
    V111: Interval
    Vrrr: Interval
    Vr1r: Interval
    V1rr: Interval
    V1r1: Interval
    V11r: Interval
    Vrrr_singular: Interval | None = None
    tight_excess: Mapping[str, Interval] = field(default_factory=dict, compare=False)
    solved_without: str = ""

    def get(self, name: str) -> Interval:
        return getattr(self, name)

    def lookup(self, center: RadiusClass, a: RadiusClass, b: RadiusClass) -> Interval:
        return self.get(vtable_name(center, a, b))

    def as_dict(self) -> dict[str, Interval]:
        out = {n: self.get(n) for n in VTABLE_NAMES}
        if self.Vrrr_singular is not None:
            out["Vrrr_singular"] = self.Vrrr_singular
        return out


def tight_angle(center: RadiusClass, a: RadiusClass, b: RadiusClass, r: Interval) -> Interval:
    """Angle at ``center`` in the tight triangle with neighbours ``a``, ``b``."""
    rc, ra, rb = center.radius(r), a.radius(r), b.radius(r)
    return angle(ra + rb, rc + ra, rc + rb)


def tight_excesses(params: CaseParams) -> dict[str, Interval]:
    return {
        f"E{label}": excess(tight_box(parse_classes(label), params.r), params)
        for label in ("111", "11r", "1rr", "rrr")
    }


def _equations(params: CaseParams, E: Mapping[str, Interval]):
    """(name, coefficients, rhs) for all seven equations."""
    case = params.case_id
    zero = Interval(0.0)
    eqs = [("tight 111", {"V111": 3}, E["E111"])]
    if case == SINGULAR_CASE:
        eqs.append(("singular rrr", {"Vrrr": 1}, E["Errr"] * 0.5))
    else:
        eqs.append(("tight rrr", {"Vrrr": 3}, E["Errr"]))
    eqs += [
        ("tight 1rr", {"Vr1r": 1, "V1rr": 2}, E["E1rr"]),
        ("tight 11r", {"V1r1": 1, "V11r": 2}, E["E11r"]),
    ]
    small, large = TARGET_CORONAS[case]
    eqs += [("small corona", small, zero), ("large corona", large, zero)]
    eqs.append(("normalization", {"V1r1": 1} if case == 6 else {"Vr1r": 1}, zero))
    return eqs


def _eliminate(rows: Sequence[Mapping[str, int]], rhs: Sequence[Interval]):
    """Gauss-Jordan elimination with largest-magnitude pivots.

    The coefficient matrix is integral, so it is reduced exactly over the
    rationals; only the right-hand side carries intervals.  Returns ``None``
    when the system is singular.
    """
    n = len(VTABLE_NAMES)
    M = [[Fraction(row.get(name, 0)) for name in VTABLE_NAMES] for row in rows]
    # track the right-hand side as an exact combination of the inputs
    comb = [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    for col in range(n):
        piv = max(range(col, n), key=lambda i: abs(M[i][col]))
        if M[piv][col] == 0:
            return None
        M[col], M[piv] = M[piv], M[col]
        comb[col], comb[piv] = comb[piv], comb[col]
        p = M[col][col]
        M[col] = [v / p for v in M[col]]
        comb[col] = [v / p for v in comb[col]]
        for i in range(n):
            if i != col and M[i][col] != 0:
                f = M[i][col]
                M[i] = [a - f * b for a, b in zip(M[i], M[col])]
                comb[i] = [a - f * b for a, b in zip(comb[i], comb[col])]
    solution = {}
    for i, name in enumerate(VTABLE_NAMES):
        acc = Interval(0.0)
        for coef, b in zip(comb[i], rhs):
            if coef != 0:
                acc = acc + Interval.from_fraction(coef) * b
        solution[name] = acc
    return solution


def _apply(coefs: Mapping[str, int], values: Mapping[str, Interval]) -> Interval:
    acc = Interval(0.0)
    for name, k in coefs.items():
        acc = acc + values[name] * k
    return acc


def solve_v_table(params: CaseParams) -> VTable:
    """Solve for the six tight-triangle vertex potentials of a case."""
    E = tight_excesses(params)
    eqs = _equations(params, E)
    # Each six-equation subset of full rank encloses the true solution, so
    # their intersection does too and is usually much narrower.
    sol = None
    dropped = []
    for drop in range(len(eqs)):
        kept = [e for i, e in enumerate(eqs) if i != drop]
        part = _eliminate([e[1] for e in kept], [e[2] for e in kept])
        if part is None:
            continue
        dropped.append(eqs[drop][0])
        if sol is None:
            sol = part
            continue
        for key in VTABLE_NAMES:
            try:
                sol[key] = sol[key].intersect(part[key])
            except DomainError:
                raise InconsistentSystemError(
                    f"case {params.case_id}: enclosures of {key} are disjoint"
                ) from None
    if sol is None:
        raise InconsistentSystemError("no six independent equations")
    for name, coefs, rhs in eqs:
        residual = _apply(coefs, sol) - rhs
        if not contains_zero(residual):
            raise InconsistentSystemError(
                f"case {params.case_id}: {name} residual {residual!r} excludes 0"
            )
    name = ", ".join(dropped)

    singular = None
    if params.case_id == SINGULAR_CASE:
        singular = sol["Vrrr"]
        sol["Vrrr"] = E["Errr"] / 3  # share of a regular vertex with no singular neighbour
    return VTable(
        case_id=params.case_id,
        Vrrr_singular=singular,
        tight_excess=E,
        solved_without=name,
        **sol,
    )


def corona_sum(vt: VTable, coefs: Mapping[str, int], singular: bool = False) -> Interval:
    values = vt.as_dict()
    if singular:
        values = dict(values, Vrrr=vt.Vrrr_singular)
    return _apply(coefs, values)


def target_corona_sums(vt: VTable) -> tuple[Interval, Interval]:
    small, large = TARGET_CORONAS[vt.case_id]
    return corona_sum(vt, small, singular=vt.case_id == SINGULAR_CASE), corona_sum(vt, large)


# -- potentials on arbitrary triangles --------------------------------------


def _role_share(vt: VTable, role: VertexRole, roles: Sequence[VertexRole] | None) -> Interval:
    """V for a small vertex of a small-only triangle in case 5."""
    if role is VertexRole.SINGULAR:
        return vt.Vrrr_singular
    if roles is None:
        return Interval(0.0).hull(vt.Vrrr)
    n_singular = sum(x is VertexRole.SINGULAR for x in roles)
    if n_singular > 2:
        raise ValueError("a small-only triangle has at most two singular vertices")
    # E_rrr minus the singular shares, split among the regular vertices
    rest = vt.tight_excess["Errr"] - vt.Vrrr_singular * n_singular
    if n_singular == 2:
        return Interval(0.0)
    return rest / (3 - n_singular)


def base_potential(T: TriangleBox, vertex: int, role: VertexRole, vt: VTable,
                   roles: Sequence[VertexRole] | None = None) -> Interval:
    k = vertex - 1
    center = T.classes[k]
    a, b = T.edge_classes(k)  # the other two vertices
    if role is not VertexRole.PLAIN and not (vt.case_id == SINGULAR_CASE and center is S):
        raise ValueError("regular/singular roles apply to small discs in case 5 only")
    if vt.case_id == SINGULAR_CASE and T.label == "rrr":
        return _role_share(vt, role, roles)
    return vt.lookup(center, a, b)


def vertex_potential(
    T: TriangleBox,
    vertex: int,
    role: VertexRole,
    vt: VTable,
    params: CaseParams,
    *,
    roles: Sequence[VertexRole] | None = None,
    capped: bool = True,
    angs=None,
) -> Interval:
    """min(V + m |angle - tight angle|, Z) at ``vertex`` (1-based).

    ``roles`` gives the roles of all three vertices; in case 5 it pins down
    the share of a regular vertex, otherwise the share is only known to lie
    between 0 and E_rrr / 3.
    """
    k = vertex - 1
    center = T.classes[k]
    V = base_potential(T, vertex, role, vt, roles)
    if angs is None:
        angs = angles(T)
    a, b = T.edge_classes(k)
    dev = abs(angs[k] - tight_angle(center, a, b, params.r)) * params.m(center)
    U = V + dev
    if capped:
        U = U.min(params.Z(center))
    return U


def edge_potential(T: TriangleBox, edge: int, params: CaseParams, *, dists=None) -> Interval:
    """0 below the threshold l, q times the signed distance above it.

    A box straddling the threshold gets the hull of both branches.
    """
    k = edge - 1
    x, y = T.edge_classes(k)
    l, q = params.l(x, y), params.q(x, y)
    e = T.edges[k]
    below = e.hi < l.lo
    above = e.lo >= l.hi
    if not T.edges[0].is_batch and below:
        return Interval(0.0)
    if dists is None:
        dists = signed_edge_distances(T, support_radius(T))
    active = q * dists[k]
    straddle = active.hull(0.0)
    return where(below, Interval(0.0), where(above, active, straddle))


def total_potential(
    T: TriangleBox,
    roles: Sequence[VertexRole],
    vt: VTable,
    params: CaseParams,
    *,
    capped: bool = True,
    angs=None,
    dists=None,
) -> Interval:
    if angs is None:
        angs = angles(T)
    U = Interval(0.0)
    for v in (1, 2, 3):
        U = U + vertex_potential(T, v, roles[v - 1], vt, params, roles=roles, capped=capped, angs=angs)
    for e in (1, 2, 3):
        U = U + edge_potential(T, e, params, dists=dists)
    return U


def case5_role_assignments() -> list[tuple[VertexRole, VertexRole, VertexRole]]:
    """Admissible role triples of a small-only triangle (at most two singular)."""
    R, G = VertexRole.REGULAR, VertexRole.SINGULAR
    return [t for t in product((R, G), repeat=3) if sum(x is G for x in t) <= 2]


def potential_hull_case5(T: TriangleBox, vt: VTable, params: CaseParams, *, capped=True, angs=None, dists=None):
    """Hull of U over all admissible role triples of a small-only triangle."""
    out = None
    for roles in case5_role_assignments():
        U = total_potential(T, roles, vt, params, capped=capped, angs=angs, dists=dists)
        out = U if out is None else out.hull(U)
    return out


def default_roles(T: TriangleBox, vt: VTable) -> tuple[VertexRole, VertexRole, VertexRole]:
    if vt.case_id == SINGULAR_CASE and T.label == "rrr":
        return (VertexRole.REGULAR,) * 3
    return (VertexRole.PLAIN,) * 3


# -- capping ----------------------------------------------------------------


def _tight_ratios(vt: VTable, params: CaseParams, center: RadiusClass):
    """(V / tight angle) over the tight triangles with ``center`` at the vertex."""
    out = []
    for a, b in ((L, L), (L, S), (S, S)):
        name = vtable_name(center, a, b)
        th = tight_angle(center, a, b, params.r)
        values = [vt.get(name)]
        if name == "Vrrr" and vt.Vrrr_singular is not None:
            values = [Interval(0.0), vt.Vrrr_singular]
        for V in values:
            out.append((name, V, th))
    return out


def capping_threshold(vt: VTable, params: CaseParams, center: RadiusClass) -> Interval:
    """z_q = -2 pi min(V / tight angle) over tight triangles at a q-vertex."""
    from .interval import TWO_PI

    ratios = [V / th for _, V, th in _tight_ratios(vt, params, center)]
    lowest = ratios[0]
    for x in ratios[1:]:
        lowest = lowest.min(x)
    return -(TWO_PI * lowest)


def capping_condition(vt: VTable, params: CaseParams, center: RadiusClass) -> bool:
    """m_q >= -V / tight angle for every tight triangle at a q-vertex (certified)."""
    m = params.m(center)
    return all(bool(sure_le(-(V / th), m)) for _, V, th in _tight_ratios(vt, params, center))
