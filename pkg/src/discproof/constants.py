"""Per-case algebraic constants and tabulated verification parameters.

The radius ratio ``r`` and the density ``delta`` of each of the nine target
packings are algebraic.  Both are recovered here as certified roots of their
integer minimal polynomials, inside brackets given by the published decimal
truncations.  The remaining parameters (deviation coefficients, caps,
tightness threshold, edge-potential thresholds and slopes) are tabulated
decimals; each is stored as the tightest interval around the printed value.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Mapping, Sequence

from .geometry import RadiusClass
from .interval import PI, Interval, contains_zero

__all__ = [
    "CaseParams",
    "CASES",
    "RADIUS_POLYS",
    "DENSITY_POLYS",
    "RADIUS_TRUNC",
    "DENSITY_TRUNC",
    "NoSignChangeError",
    "InvalidCaseError",
    "poly_eval",
    "poly_root_refine",
    "case_params",
    "M1_FLOOR",
]

CASES = tuple(range(1, 10))

# Minimal polynomials, highest degree first.
RADIUS_POLYS: dict[int, tuple[int, ...]] = {
    1: (1, 0, -10, -8, 9),
    2: (1, -8, -44, -232, -482, -24, 388, -120, 9),
    3: (8, 3, -2, -1),
    4: (1, 2, -1),
    5: (9, -12, -26, -12, 9),
    6: (1, -28, -10, 4, 1),
    7: (2, 3, -1),
    8: (3, 6, -1),
    9: (1, -10, 1),
}

# Minimal polynomials of delta / pi.
DENSITY_POLYS: dict[int, tuple[int, ...]] = {
    1: (27, 112, 62, 72, -29),
    2: (1, 0, -4590, -82440, 486999, -1938708, 2158839, -1312200, 243081),
    3: (1024, -692, 448, -97),
    4: (2, -4, 1),
    5: (944784, -3919104, -2191320, -1632960, 757681),
    6: (144, 9216, 133224, -127104, 25633),
    7: (4096, 0, 2924, 0, -289),
    8: (108, 288, -97),
    9: (144, 0, -4162200, 0, 390625),
}

# Published truncations; they pick the meaningful root and bracket it.
RADIUS_TRUNC: dict[int, str] = {
    1: "0.63", 2: "0.54", 3: "0.53", 4: "0.41", 5: "0.38",
    6: "0.34", 7: "0.28", 8: "0.15", 9: "0.10",
}
DENSITY_TRUNC: dict[int, str] = {
    1: "0.9106", 2: "0.9116", 3: "0.9141", 4: "0.9201", 5: "0.9200",
    6: "0.9246", 7: "0.9319", 8: "0.9503", 9: "0.9624",
}

# Lower bounds on the deviation coefficients (m_1, m_r).
M_TABLE: dict[int, tuple[str, str]] = {
    1: ("0", "0.0005"),
    2: ("0.16", "0.087"),
    3: ("0", "0.00028"),
    4: ("0", "0.0021"),
    5: ("0", "0.048"),
    6: ("0.0091", "0.0021"),
    7: ("0", "0.0011"),
    8: ("0", "0.002"),
    9: ("0", "0.002058"),
}
# A zero m_1 is raised to this value so the capping condition holds.
M1_FLOOR = "1e-14"

Z_TABLE: dict[int, tuple[str, str]] = {
    1: ("7.5e-15", "0.00023"),
    2: ("0.011", "0.0046"),
    3: ("1.8e-14", "0.00025"),
    4: ("5.0e-15", "0.00096"),
    5: ("1.3e-14", "0.0076"),
    6: ("0.0013", "0.0016"),
    7: ("9.2e-15", "0.0011"),
    8: ("8.1e-15", "0.0012"),
    9: ("2.333e-14", "0.0008033"),
}

EPSILON_TABLE: dict[int, str] = {
    1: "0.079", 2: "0.020", 3: "0.061", 4: "0.039", 5: "0.012",
    6: "0.027", 7: "0.018", 8: "0.0049", 9: "0.001718",
}

# (l11, q11, l1r, q1r, lrr, qrr)
LQ_TABLE: dict[int, tuple[str, str, str, str, str, str]] = {
    1: ("2.7", "0.1", "2.3", "0.1", "1.9", "0.1"),
    2: ("2.6", "0.2", "2.1", "0.2", "1.6", "0.2"),
    3: ("2.6", "0.1", "2.2", "0.2", "1.65", "0.1"),
    4: ("2.5", "0.15", "1.8", "0.2", "1.2", "0.2"),
    5: ("2.4", "0.05", "1.8", "0.05", "1.1", "0.07"),
    6: ("2.5", "0.2", "1.75", "0.2", "1.0", "0.2"),
    7: ("2.4", "0.08", "1.6", "0.05", "0.8", "0.1"),
    8: ("2.24", "0.02", "1.33", "0.015", "0.44", "0.02"),
    9: ("2.17", "0.02", "1.21787", "0.015", "0.285729", "0.02"),
}

ROOT_WIDTH = 1e-12
TABLE_KEYS = ("m1", "mr", "Z1", "Zr", "epsilon", "l11", "l1r", "lrr", "q11", "q1r", "qrr")


class NoSignChangeError(ValueError):
    """The polynomial's sign change across the bracket could not be certified."""


class InvalidCaseError(ValueError):
    pass


def poly_eval(coefficients: Sequence[int], x: Interval) -> Interval:
    """Horner evaluation in interval arithmetic."""
    acc = Interval(coefficients[0])
    for c in coefficients[1:]:
        acc = acc * x + c
    return acc


def _sign(p: Interval) -> int:
    if p.lo > 0:
        return 1
    if p.hi < 0:
        return -1
    return 0


def poly_root_refine(coefficients: Sequence[int], bracket: Interval, target_width: float) -> Interval:
    """Bisect ``bracket`` down to a root enclosure of width <= ``target_width``.

    The signs at the bracket endpoints must be certified opposite.  When the
    sign at a split point cannot be decided, the split point moves by a
    quarter of the current width (alternating sides); after three such moves
    the current enclosure is returned as is.
    """
    lo, hi = float(bracket.lo), float(bracket.hi)
    s_lo = _sign(poly_eval(coefficients, Interval(lo)))
    s_hi = _sign(poly_eval(coefficients, Interval(hi)))
    if s_lo == 0 or s_hi == 0 or s_lo == s_hi:
        raise NoSignChangeError(f"no certified sign change on [{lo!r}, {hi!r}]")

    while hi - lo > target_width:
        w = hi - lo
        mid = lo + w / 2
        s_mid = 0
        for shift in (0.0, 0.25, -0.25, 0.125):
            m = mid + shift * w
            if not lo < m < hi:
                continue
            s_mid = _sign(poly_eval(coefficients, Interval(m)))
            if s_mid != 0:
                mid = m
                break
        if s_mid == 0:
            break
        if s_mid == s_lo:
            lo = mid
        else:
            hi = mid
    return Interval(lo, hi)


@dataclass(frozen=True)
class CaseParams:
    case_id: int
    r: Interval
    delta: Interval
    m1: Interval
    mr: Interval
    Z1: Interval
    Zr: Interval
    epsilon: Interval
    l11: Interval
    l1r: Interval
    lrr: Interval
    q11: Interval
    q1r: Interval
    qrr: Interval
    delta_over_pi: Interval = field(compare=False, repr=False, default=None)  # type: ignore[assignment]
    m1_bumped: bool = False
    overrides: Mapping[str, str] = field(default_factory=dict)

    @property
    def canonical(self) -> bool:
        return not self.overrides

    def radius(self, c: RadiusClass) -> Interval:
        return c.radius(self.r)

    def m(self, c: RadiusClass) -> Interval:
        return self.m1 if c is RadiusClass.LARGE else self.mr

    def Z(self, c: RadiusClass) -> Interval:
        return self.Z1 if c is RadiusClass.LARGE else self.Zr

    def _pair_key(self, x: RadiusClass, y: RadiusClass) -> str:
        n_small = (x is RadiusClass.SMALL) + (y is RadiusClass.SMALL)
        return ("11", "1r", "rr")[n_small]

    def l(self, x: RadiusClass, y: RadiusClass) -> Interval:
        return getattr(self, "l" + self._pair_key(x, y))

    def q(self, x: RadiusClass, y: RadiusClass) -> Interval:
        return getattr(self, "q" + self._pair_key(x, y))

    def table_values(self) -> dict[str, Interval]:
        return {k: getattr(self, k) for k in TABLE_KEYS}

    def check_invariants(self) -> None:
        """Raise ``ValueError`` if a structural invariant fails."""
        if not (self.r.lo > 0 and self.r.hi < 1):
            raise ValueError("r must lie in (0, 1)")
        for k, v in self.table_values().items():
            if v.lo < 0:
                raise ValueError(f"{k} must be nonnegative")
        one = Interval(1.0)
        pairs = {"11": (one, one), "1r": (one, self.r), "rr": (self.r, self.r)}
        for key, (x, y) in pairs.items():
            lim = getattr(self, "l" + key)
            if not (x + y + self.epsilon).hi < lim.lo:
                raise ValueError(f"x + y + epsilon must stay below l{key}")


def _bracket(trunc: str, step: str) -> Interval:
    lo = Interval.from_decimal(trunc)
    hi = Interval.from_decimal(str(Fraction(trunc) + Fraction(step)))
    return Interval(lo.lo, hi.hi)


@lru_cache(maxsize=None)
def _roots(case_id: int) -> tuple[Interval, Interval]:
    r = poly_root_refine(RADIUS_POLYS[case_id], _bracket(RADIUS_TRUNC[case_id], "0.01"), 0.0)
    d = _bracket(DENSITY_TRUNC[case_id], "0.0001")
    d_over_pi = Interval((d / PI).lo, (Interval(d.hi) / PI).hi)
    x = poly_root_refine(DENSITY_POLYS[case_id], d_over_pi, 0.0)
    for name, enc in (("r", r), ("delta/pi", x)):
        if enc.width > ROOT_WIDTH:
            raise ArithmeticError(f"case {case_id}: {name} enclosure too wide ({enc})")
    return r, x


def case_params(case_id: int, overrides: Mapping[str, str] | None = None) -> CaseParams:
    """Certified parameters for case ``case_id`` (1..9).

    ``overrides`` maps a tabulated key (``epsilon``, ``m1``, ``l1r``, ...) to a
    decimal string and replaces the table value.
    """
    if case_id not in CASES:
        raise InvalidCaseError(f"case id must be in 1..9, got {case_id!r}")
    r, d_over_pi = _roots(case_id)
    m1_text, mr_text = M_TABLE[case_id]
    m1_bumped = Fraction(m1_text) == 0
    if m1_bumped:
        m1_text = M1_FLOOR
    z1, zr = Z_TABLE[case_id]
    l11, q11, l1r, q1r, lrr, qrr = LQ_TABLE[case_id]
    dec = Interval.from_decimal
    params = CaseParams(
        case_id=case_id,
        r=r,
        delta=PI * d_over_pi,
        m1=dec(m1_text),
        mr=dec(mr_text),
        Z1=dec(z1),
        Zr=dec(zr),
        epsilon=dec(EPSILON_TABLE[case_id]),
        l11=dec(l11),
        l1r=dec(l1r),
        lrr=dec(lrr),
        q11=dec(q11),
        q1r=dec(q1r),
        qrr=dec(qrr),
        delta_over_pi=d_over_pi,
        m1_bumped=m1_bumped,
    )
    if overrides:
        unknown = set(overrides) - set(TABLE_KEYS)
        if unknown:
            raise KeyError(f"cannot override {sorted(unknown)}")
        params = dataclasses.replace(
            params,
            overrides=dict(overrides),
            **{k: dec(str(v)) for k, v in overrides.items()},
        )
    return params


def table_text(case_id: int) -> dict[str, str]:
    """The printed decimals behind a case's tabulated parameters."""
    l11, q11, l1r, q1r, lrr, qrr = LQ_TABLE[case_id]
    m1, mr = M_TABLE[case_id]
    z1, zr = Z_TABLE[case_id]
    return {
        "m1": m1, "mr": mr, "Z1": z1, "Zr": zr, "epsilon": EPSILON_TABLE[case_id],
        "l11": l11, "l1r": l1r, "lrr": lrr, "q11": q11, "q1r": q1r, "qrr": qrr,
    }


def polynomial_residuals(params: CaseParams) -> tuple[Interval, Interval]:
    """Minimal polynomials evaluated on r and delta/pi (both should contain 0)."""
    return (
        poly_eval(RADIUS_POLYS[params.case_id], params.r),
        poly_eval(DENSITY_POLYS[params.case_id], params.delta_over_pi),
    )


def residuals_contain_zero(params: CaseParams) -> bool:
    pr, pd = polynomial_residuals(params)
    return bool(contains_zero(pr) and contains_zero(pd))
