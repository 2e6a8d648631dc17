"""Coronas and the lower bounds on the deviation coefficients m_q.

A corona is the cyclic sequence of neighbour classes around a centre disc.
Each consecutive pair together with the centre spans a tight triangle, so
the tight angle sum and the tight potential sum of a corona only depend on
how many neighbour pairs are (1,1), (1,r) and (r,r).  This *signature* is
what the search enumerates; a representative sequence is rebuilt for
reporting.

A signature (n11, n1r, nrr) is realised by some cyclic sequence iff n1r is
even and, when n1r = 0, only one of n11, nrr is nonzero.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Iterator

import numpy as np

from .constants import CaseParams
from .geometry import RadiusClass
from .interval import TWO_PI, Interval
from .potentials import SINGULAR_CASE, TARGET_CORONAS, VTable, tight_angle, vtable_name

__all__ = [
    "Corona",
    "CoronaSearch",
    "ViolatedCoronaError",
    "k_max",
    "smallest_m",
    "corona_search",
    "signatures",
    "canonical_coronas",
    "all_sequences",
    "corona_bound",
]

L = RadiusClass.LARGE
S = RadiusClass.SMALL
PAIRS = ((L, L), (L, S), (S, S))


class ViolatedCoronaError(ArithmeticError):
    """A corona closing up to 2 pi carries a negative potential sum."""


@dataclass(frozen=True)
class Corona:
    center: RadiusClass
    neighbors: tuple[RadiusClass, ...]
    case_id: int = 0

    def __post_init__(self):
        if len(self.neighbors) < 3:
            raise ValueError("a corona has at least three neighbours")

    @property
    def k(self) -> int:
        return len(self.neighbors)

    def pairs(self) -> Iterator[tuple[RadiusClass, RadiusClass]]:
        n = self.neighbors
        for j in range(len(n)):
            yield n[j], n[(j + 1) % len(n)]

    def signature(self) -> tuple[int, int, int]:
        counts = [0, 0, 0]
        for a, b in self.pairs():
            counts[(a is S) + (b is S)] += 1
        return tuple(counts)  # type: ignore[return-value]

    def canonical(self) -> "Corona":
        return Corona(self.center, _canonical_seq(self.neighbors), self.case_id)

    @property
    def singular(self) -> bool:
        """Small centre with two large then three small neighbours (case 5)."""
        return (
            self.case_id == SINGULAR_CASE
            and self.center is S
            and _canonical_seq(self.neighbors) == (L, L, S, S, S)
        )

    def label(self) -> str:
        return self.center.value + ":" + "".join(c.value for c in self.neighbors)


def _canonical_seq(seq: tuple[RadiusClass, ...]) -> tuple[RadiusClass, ...]:
    n = len(seq)
    key = lambda s: tuple(c.value for c in s)  # noqa: E731  ("1" < "r": large first)
    variants = []
    for base in (seq, tuple(reversed(seq))):
        variants += [base[i:] + base[:i] for i in range(n)]
    return min(variants, key=key)


def representative(center: RadiusClass, sig: tuple[int, int, int], case_id: int = 0) -> Corona:
    """A cyclic sequence with signature ``sig``."""
    n11, n1r, nrr = sig
    if n1r == 0:
        seq = (L,) * n11 if n11 else (S,) * nrr
        return Corona(center, seq, case_id)
    runs = n1r // 2
    # first run absorbs all extra pairs, the others are single discs
    seq: list[RadiusClass] = []
    for j in range(runs):
        seq += [L] * (1 + (n11 if j == 0 else 0))
        seq += [S] * (1 + (nrr if j == 0 else 0))
    return Corona(center, tuple(seq), case_id)


def signatures(k_limit: int) -> np.ndarray:
    """All realisable signatures with 3 <= k <= k_limit, as rows (n11, n1r, nrr)."""
    rows = []
    for n1r in range(0, k_limit + 1, 2):
        for n11 in range(0, k_limit - n1r + 1):
            for nrr in range(0, k_limit - n1r - n11 + 1):
                k = n11 + n1r + nrr
                if k < 3 or (n1r == 0 and n11 and nrr):
                    continue
                rows.append((n11, n1r, nrr))
    return np.array(rows, dtype=np.int64)


def k_max(params: CaseParams, center: RadiusClass) -> int:
    """Most neighbours a disc of class ``center`` can have.

    The sine of any angle at a disc of radius x whose neighbours have radii
    y, z is at least min(y/(x+2r+y), z/(x+2r+z)); the neighbour radius
    minimising it is r for a large centre and 1 for a small one.
    """
    r = params.r
    x = center.radius(r)
    bounds = [y / (x + r * 2 + y) for y in (Interval(1.0), r)]
    s_min = bounds[0].min(bounds[1])
    theta_min = s_min.asin()
    return int(np.floor((TWO_PI / theta_min).hi))


@dataclass(frozen=True)
class CoronaSearch:
    center: RadiusClass
    bound: Interval
    argmax: Corona | None
    k_max: int
    n_signatures: int
    closing: tuple[Corona, ...]  # coronas whose angle sum may equal 2 pi


def _pair_values(vt: VTable, params: CaseParams, center: RadiusClass, singular: bool):
    thetas, values = [], []
    for a, b in PAIRS:
        name = vtable_name(center, a, b)
        thetas.append(tight_angle(center, a, b, params.r))
        if name == "Vrrr" and vt.case_id == SINGULAR_CASE:
            values.append(vt.Vrrr_singular if singular else Interval(0.0))
        else:
            values.append(vt.get(name))
    return thetas, values


def _dot(counts: np.ndarray, terms) -> Interval:
    # exact zero terms are skipped so that batch rounding cannot smear them
    zero = np.zeros(len(counts))
    acc = Interval._raw(zero, zero.copy())
    for j, t in enumerate(terms):
        if t.lo == 0 and t.hi == 0:
            continue
        c = counts[:, j].astype(float)
        acc = acc + Interval._raw(c, c) * t
    return acc


def _is_target(vt: VTable, center: RadiusClass, sig: tuple[int, int, int]) -> bool:
    small, large = TARGET_CORONAS[vt.case_id]
    coefs = small if center is S else large
    want = [0, 0, 0]
    for name, n in coefs.items():
        for j, (a, b) in enumerate(PAIRS):
            if vtable_name(center, a, b) == name:
                want[j] += n
    return tuple(want) == tuple(sig)


def corona_bound(corona: Corona, vt: VTable, params: CaseParams):
    """(angle sum, potential sum) of a single corona, evaluated pairwise."""
    thetas, values = _pair_values(vt, params, corona.center, corona.singular)
    ang, pot = Interval(0.0), Interval(0.0)
    for a, b in corona.pairs():
        j = (a is S) + (b is S)
        ang = ang + thetas[j]
        pot = pot + values[j]
    return ang, pot


def corona_search(params: CaseParams, vt: VTable, center: RadiusClass, k_limit: int | None = None) -> CoronaSearch:
    """Largest lower bound on m_q forced by the coronas around ``center``."""
    kmax = k_max(params, center) if k_limit is None else k_limit
    sigs = signatures(kmax)
    thetas, values = _pair_values(vt, params, center, singular=False)
    ang = _dot(sigs, thetas)
    pot = _dot(sigs, values)

    if vt.case_id == SINGULAR_CASE and center is S:
        # the single singular pattern carries V'_rrr on its (r,r) pairs
        sing = np.flatnonzero((sigs[:, 0] == 1) & (sigs[:, 1] == 2) & (sigs[:, 2] == 2))
        for i in sing:
            _, p = corona_bound(representative(center, (1, 2, 2), vt.case_id), vt, params)
            pot.lo[i], pot.hi[i] = p.lo, p.hi

    # keep coronas whose angle sum can stay below 2 pi plus one more angle
    widest = max(t.hi for t in thetas)
    keep = ang.lo < TWO_PI.hi + widest
    closes = (ang.lo <= TWO_PI.hi) & (ang.hi >= TWO_PI.lo)

    closing = []
    for i in np.flatnonzero(closes):
        sig = tuple(int(x) for x in sigs[i])
        if pot.lo[i] >= 0:
            pass
        elif pot.hi[i] >= 0 and _is_target(vt, center, sig):
            pass
        else:
            raise ViolatedCoronaError(
                f"case {vt.case_id}: corona {representative(center, sig, vt.case_id).label()} "
                f"closes up with potential sum [{pot.lo[i]!r}, {pot.hi[i]!r}]"
            )
        closing.append(representative(center, sig, vt.case_id))

    live = keep & ~closes & (pot.lo < 0)
    bound = Interval(0.0)
    argmax = None
    idx = np.flatnonzero(live)
    if idx.size:
        gap = abs(TWO_PI - ang[idx])
        b = -pot[idx] / gap
        best = int(np.argmax(b.hi))
        bound = Interval._raw(max(0.0, float(b.lo.max())), max(0.0, float(b.hi[best])))
        if b.hi[best] > 0:
            argmax = representative(center, tuple(int(x) for x in sigs[idx[best]]), vt.case_id)
    return CoronaSearch(center, bound, argmax, kmax, len(sigs), tuple(closing))


def smallest_m(params: CaseParams, vt: VTable, center: RadiusClass) -> Interval:
    return corona_search(params, vt, center).bound


# -- explicit sequences (used to cross-check the signature search) ----------


def all_sequences(k: int) -> Iterator[tuple[RadiusClass, ...]]:
    yield from product((L, S), repeat=k)


def canonical_coronas(center: RadiusClass, k_limit: int, case_id: int = 0) -> Iterator[Corona]:
    """Every corona with 3..k_limit neighbours, once up to rotation and reflection."""
    for k in range(3, k_limit + 1):
        seen = set()
        for seq in all_sequences(k):
            c = _canonical_seq(seq)
            if c in seen:
                continue
            seen.add(c)
            yield Corona(center, c, case_id)
