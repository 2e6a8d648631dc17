"""Branch-and-bound check of the local inequality E >= U.

Every triangle of a saturated packing has edges between the sum of its two
radii and that sum plus 2r.  Starting from these four boxes (one per radius
triple) each box is either closed or halved along all three edges:

  * pruned when no triangle in it can occur in a saturated packing
    (support disc too large, area too small, an altitude too short, or no
    triangle at all),
  * covered when it lies inside the epsilon-tight box already certified by
    the derivative argument,
  * proved when U <= E surely,
  * failed when E < U surely,
  * split otherwise.

Boxes are processed in numpy batches.  The work is cut into a fixed set of
subtrees, independent of the number of worker processes, so counters and
samples do not depend on scheduling.
"""

from __future__ import annotations

import enum
import hashlib
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .constants import CaseParams
from .geometry import (
    RadiusClass,
    TriangleBox,
    area,
    cos_args,
    heron_radicand,
    parse_classes,
    signed_edge_distances,
    support_radius,
    tight_edges,
)
from .interval import PI, Interval, where
from .potentials import (
    SINGULAR_CASE,
    VertexRole,
    VTable,
    _role_share,
    case5_role_assignments,
    tight_angle,
)
from .meanvalue import BoxForms
from .tightcheck import TRIPLES, epsilon_box

__all__ = [
    "LeafOutcome",
    "Status",
    "Budget",
    "TripleCounts",
    "VerifyReport",
    "initial_boxes",
    "classify_box",
    "classify_batch",
    "verify_case",
    "TripleContext",
]


class LeafOutcome(enum.IntEnum):
    SPLIT = 0
    PRUNED_INFEASIBLE = 1
    COVERED_BY_TIGHT = 2
    PROVED_LE = 3
    FAILED = 4

    @property
    def tag(self) -> str:
        return {
            0: "Split",
            1: "PrunedInfeasible",
            2: "CoveredByTight",
            3: "ProvedLE",
            4: "Failed",
        }[int(self)]


class Status(str, enum.Enum):
    VERIFIED = "Verified"
    COUNTEREXAMPLE = "CounterexampleBox"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class Budget:
    max_depth: int = 60
    max_nodes: int = 10**9
    chunk: int = 16384
    threads: int = 1
    split_depth: int = 3  # depth at which the tree is cut into work items
    samples: int = 0  # leaves of each closed kind to keep for spot checks
    max_failures: int = 16


# -- per-triple constants ---------------------------------------------------


@dataclass
class TripleContext:
    label: str
    classes: tuple
    r: Interval
    delta: Interval
    radii_sq: tuple
    tight_angles: tuple
    m: tuple
    Z: tuple
    V: tuple  # per-vertex V, or None for the case-5 small-only triangle
    role_values: list  # case 5: per role assignment, the three V values
    l: tuple
    q: tuple
    tight_lo: np.ndarray
    eps_hi: np.ndarray
    half_pi_r2: float
    r_lo: float
    r_hi: float
    params: CaseParams

    @classmethod
    def build(cls, label: str, params: CaseParams, vt: VTable) -> "TripleContext":
        classes = parse_classes(label)
        r = params.r
        radii = [c.radius(r) for c in classes]
        angles, V = [], []
        for k in range(3):
            a, b = [classes[j] for j in range(3) if j != k]
            angles.append(tight_angle(classes[k], a, b, r))
            V.append(vt.lookup(classes[k], a, b))
        role_values = []
        if vt.case_id == SINGULAR_CASE and label == "rrr":
            for roles in case5_role_assignments():
                role_values.append(tuple(_role_share(vt, role, roles) for role in roles))
            V = None
        edge_pairs = [[classes[j] for j in range(3) if j != k] for k in range(3)]
        tight = tight_edges(classes, r)
        ebox = epsilon_box(classes, r, params.epsilon)
        return cls(
            label=label,
            classes=classes,
            r=r,
            delta=params.delta,
            radii_sq=tuple(x.square() for x in radii),
            tight_angles=tuple(angles),
            m=tuple(params.m(c) for c in classes),
            Z=tuple(params.Z(c) for c in classes),
            V=tuple(V) if V is not None else None,
            role_values=role_values,
            l=tuple(params.l(x, y) for x, y in edge_pairs),
            q=tuple(params.q(x, y) for x, y in edge_pairs),
            tight_lo=np.array([t.lo for t in tight]),
            eps_hi=np.array([e.hi for e in ebox.box]),
            half_pi_r2=float((PI * r.square() * 0.5).lo),
            r_lo=float(r.lo),
            r_hi=float(r.hi),
            params=params,
        )


def initial_boxes(params: CaseParams) -> list[TriangleBox]:
    """One box per radius triple; each edge spans [x+y, x+y+2r]."""
    out = []
    for label in TRIPLES:
        classes = parse_classes(label)
        tight = tight_edges(classes, params.r)
        two_r = params.r * 2
        edges = tuple(Interval._raw(t.lo, (t + two_r).hi) for t in tight)
        out.append(TriangleBox(classes, edges, params.r))  # type: ignore[arg-type]
    return out


# -- classification -----------------------------------------------------------


def _edges(lo: np.ndarray, hi: np.ndarray):
    return tuple(Interval._raw(lo[:, k], hi[:, k]) for k in range(3))


def _take(x: Interval, idx) -> Interval:
    return Interval._raw(x.lo[idx], x.hi[idx])


def _vertex_terms(ctx: TripleContext, angs):
    """Per-vertex m |angle - tight angle|."""
    return [abs(angs[k] - ctx.tight_angles[k]) * ctx.m[k] for k in range(3)]


def _vertex_potential_sum(ctx: TripleContext, dev) -> Interval:
    if ctx.V is not None:
        total = None
        for k in range(3):
            u = (dev[k] + ctx.V[k]).min(ctx.Z[k])
            total = u if total is None else total + u
        return total
    # case-5 small-only triangle: hull over the admissible role assignments
    out = None
    for values in ctx.role_values:
        total = None
        for k in range(3):
            u = (dev[k] + values[k]).min(ctx.Z[k])
            total = u if total is None else total + u
        out = total if out is None else out.hull(total)
    return out


def _edge_potential_sum(ctx: TripleContext, edges, dists) -> Interval:
    total = None
    n = len(edges[0].lo)
    zero = Interval._raw(np.zeros(n), np.zeros(n))
    for k in range(3):
        e = edges[k]
        below = e.hi < ctx.l[k].lo
        if np.all(below):
            term = zero
        else:
            above = e.lo >= ctx.l[k].hi
            active = dists[k] * ctx.q[k]
            term = where(below, zero, where(above, active, active.hull(0.0)))
        total = term if total is None else total + term
    return total


def classify_batch(ctx: TripleContext, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Outcome code per box; ``lo``/``hi`` have shape (n, 3)."""
    n = len(lo)
    out = np.full(n, int(LeafOutcome.SPLIT), dtype=np.int8)
    if n == 0:
        return out
    edges = _edges(lo, hi)
    T = TriangleBox(ctx.classes, edges, ctx.r)

    # (a) infeasible: no triangle, or excluded by the saturation lemma
    with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
        cosines = cos_args(T)
        bad = heron_radicand(*edges).hi < 0
        for c in cosines:
            bad |= (c.lo > 1.0) | (c.hi < -1.0)
        ar = area(*edges)
        bad |= ar.hi < ctx.half_pi_r2
        twice = ar * 2
        for k in range(3):
            bad |= (twice / edges[k]).hi < ctx.r_lo
        live = np.flatnonzero(~bad)
        if live.size == 0:
            out[:] = int(LeafOutcome.PRUNED_INFEASIBLE)
            return out
        e_live = tuple(_take(e, live) for e in edges)
        forms = BoxForms(TriangleBox(ctx.classes, e_live, ctx.r))
        R = forms.support_radius()
        too_big = R.val.lo >= ctx.r_hi
        out[bad] = int(LeafOutcome.PRUNED_INFEASIBLE)
        out[live[too_big]] = int(LeafOutcome.PRUNED_INFEASIBLE)

        # (b) inside the certified epsilon-tight box
        covered = ~too_big & np.all((lo[live] >= ctx.tight_lo) & (hi[live] <= ctx.eps_hi), axis=1)
        out[live[covered]] = int(LeafOutcome.COVERED_BY_TIGHT)
        rest = ~too_big & ~covered
        if not rest.any():
            return out

        # (c)/(d) compare the potential with the excess
        angs = forms.angles()
        E = forms.excess(ctx.params)
        dists = forms.signed_distances(R)
        U = _vertex_potential_sum(ctx, _vertex_terms(ctx, angs)) + _edge_potential_sum(ctx, e_live, dists)
        proved = U.hi <= E.lo
        failed = E.hi < U.lo
    codes = np.where(proved, int(LeafOutcome.PROVED_LE), np.where(failed, int(LeafOutcome.FAILED), int(LeafOutcome.SPLIT)))
    out[live[rest]] = codes[rest]
    return out


def classify_box(T: TriangleBox, vt: VTable, params: CaseParams, ctx: TripleContext | None = None) -> LeafOutcome:
    """Classify a single box (scalar edges, classes in canonical order)."""
    if ctx is None:
        ctx = TripleContext.build(T.label, params, vt)
    lo = np.array([[float(e.lo) for e in T.edges]])
    hi = np.array([[float(e.hi) for e in T.edges]])
    return LeafOutcome(int(classify_batch(ctx, lo, hi)[0]))


def split_boxes(lo: np.ndarray, hi: np.ndarray):
    """Halve every edge: 8 children per box, in a fixed order."""
    mid = lo + (hi - lo) * 0.5
    n = len(lo)
    clo = np.empty((n, 8, 3))
    chi = np.empty((n, 8, 3))
    for child in range(8):
        for k in range(3):
            upper = (child >> k) & 1
            clo[:, child, k] = np.where(upper, mid[:, k], lo[:, k])
            chi[:, child, k] = np.where(upper, hi[:, k], mid[:, k])
    return clo.reshape(-1, 3), chi.reshape(-1, 3)


# -- counters and reports ------------------------------------------------------


@dataclass
class TripleCounts:
    checked: int = 0
    pruned: int = 0
    tight: int = 0
    proved: int = 0
    split: int = 0
    failed: int = 0
    max_depth: int = 0

    def add(self, codes: np.ndarray, depth: int) -> None:
        self.checked += len(codes)
        counts = np.bincount(codes, minlength=5)
        self.split += int(counts[LeafOutcome.SPLIT])
        self.pruned += int(counts[LeafOutcome.PRUNED_INFEASIBLE])
        self.tight += int(counts[LeafOutcome.COVERED_BY_TIGHT])
        self.proved += int(counts[LeafOutcome.PROVED_LE])
        self.failed += int(counts[LeafOutcome.FAILED])
        if len(codes):
            self.max_depth = max(self.max_depth, depth)

    def merge(self, other: "TripleCounts") -> None:
        for name in ("checked", "pruned", "tight", "proved", "split", "failed"):
            setattr(self, name, getattr(self, name) + getattr(other, name))
        self.max_depth = max(self.max_depth, other.max_depth)

    def as_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class VerifyReport:
    case_id: int
    status: Status
    counts: dict[str, TripleCounts]
    wall_time: float
    params_digest: str
    failures: list = field(default_factory=list)
    frontier: int = 0
    samples: dict = field(default_factory=dict)

    @property
    def boxes_checked(self) -> dict[str, int]:
        return {k: c.checked for k, c in self.counts.items()}

    @property
    def boxes_pruned_infeasible(self) -> int:
        return sum(c.pruned for c in self.counts.values())

    @property
    def boxes_closed_tight(self) -> int:
        return sum(c.tight for c in self.counts.values())

    @property
    def boxes_proved(self) -> int:
        return sum(c.proved for c in self.counts.values())

    @property
    def max_depth(self) -> int:
        return max(c.max_depth for c in self.counts.values())

    @property
    def total_nodes(self) -> int:
        return sum(c.checked for c in self.counts.values())


def params_digest(params: CaseParams, vt: VTable) -> str:
    """SHA-256 over the exact endpoints of every constant used."""
    items = {k: v.as_pair() for k, v in params.table_values().items()}
    items.update(r=params.r.as_pair(), delta=params.delta.as_pair())
    items.update({k: v.as_pair() for k, v in vt.as_dict().items()})
    blob = json.dumps({k: [float.hex(float(x)) for x in v] for k, v in sorted(items.items())})
    return hashlib.sha256(blob.encode()).hexdigest()


# -- traversal -----------------------------------------------------------------


@dataclass
class _ItemResult:
    counts: TripleCounts
    failures: list
    samples: dict
    overflow: bool
    frontier: int


def _reservoir(store: list, seen: int, rows, rng, cap: int) -> int:
    for row in rows:
        if len(store) < cap:
            store.append(row)
        else:
            j = int(rng.integers(0, seen + 1))
            if j < cap:
                store[j] = row
        seen += 1
    return seen


def _pop_chunk(stack: list, chunk: int):
    """Take up to ``chunk`` boxes off the stack, merging entries."""
    parts, n = [], 0
    while stack and n < chunk:
        lo, hi, depth = stack.pop()
        room = chunk - n
        if len(lo) > room:
            stack.append((lo[room:], hi[room:], depth[room:]))
            lo, hi, depth = lo[:room], hi[:room], depth[:room]
        parts.append((lo, hi, depth))
        n += len(lo)
    if len(parts) == 1:
        return parts[0]
    return tuple(np.concatenate(x) for x in zip(*parts))


def _run_item(args) -> _ItemResult:
    ctx, lo, hi, depth, budget, seed = args
    counts = TripleCounts()
    failures: list = []
    rng = np.random.default_rng(seed)
    samples = {int(LeafOutcome.PROVED_LE): [], int(LeafOutcome.PRUNED_INFEASIBLE): []}
    seen = dict.fromkeys(samples, 0)
    stack = [(lo, hi, np.full(len(lo), depth, dtype=np.int64))]
    nodes = 0
    overflow = False
    frontier = 0
    while stack:
        blo, bhi, bdepth = _pop_chunk(stack, budget.chunk)
        codes = classify_batch(ctx, blo, bhi)
        counts.add(codes, int(bdepth.max()))
        nodes += len(codes)
        if counts.failed and len(failures) < budget.max_failures:
            for i in np.flatnonzero(codes == LeafOutcome.FAILED)[: budget.max_failures - len(failures)]:
                failures.append((ctx.label, blo[i].tolist(), bhi[i].tolist()))
        if budget.samples:
            for kind in samples:
                rows = [(ctx.label, blo[i].tolist(), bhi[i].tolist()) for i in np.flatnonzero(codes == kind)]
                seen[kind] = _reservoir(samples[kind], seen[kind], rows, rng, budget.samples)
        split = codes == LeafOutcome.SPLIT
        if not split.any():
            continue
        deep = split & (bdepth + 1 > budget.max_depth)
        if deep.any() or nodes > budget.max_nodes:
            overflow = True
            if nodes > budget.max_nodes:
                frontier += int(split.sum())
                continue
            frontier += int(deep.sum())
            split &= ~deep
            if not split.any():
                continue
        clo, chi = split_boxes(blo[split], bhi[split])
        stack.append((clo, chi, np.repeat(bdepth[split] + 1, 8)))
    return _ItemResult(counts, failures, samples, overflow, frontier)


ITEMS_PER_TRIPLE = 16


def _work_items(contexts, params: CaseParams, budget: Budget):
    """Expand the first levels serially and cut the frontier into fixed groups."""
    counts = {label: TripleCounts() for label in TRIPLES}
    items = []
    failures = []
    for T in initial_boxes(params):
        ctx = contexts[T.label]
        lo = np.array([[e.lo for e in T.edges]], dtype=float)
        hi = np.array([[e.hi for e in T.edges]], dtype=float)
        for d in range(budget.split_depth):
            codes = classify_batch(ctx, lo, hi)
            counts[T.label].add(codes, d)
            for i in np.flatnonzero(codes == LeafOutcome.FAILED):
                failures.append((T.label, lo[i].tolist(), hi[i].tolist()))
            split = codes == LeafOutcome.SPLIT
            lo, hi = split_boxes(lo[split], hi[split])
        for part in np.array_split(np.arange(len(lo)), ITEMS_PER_TRIPLE):
            if part.size:
                items.append((T.label, lo[part], hi[part], budget.split_depth))
    return counts, items, failures


def verify_case(params: CaseParams, vt: VTable, budget: Budget | None = None) -> VerifyReport:
    """Run the subdivision over all four triples of a case."""
    budget = budget or Budget()
    t0 = time.perf_counter()
    contexts = {label: TripleContext.build(label, params, vt) for label in TRIPLES}
    counts, items, failures = _work_items(contexts, params, budget)
    args = [
        (contexts[label], lo, hi, depth, budget, seed)
        for seed, (label, lo, hi, depth) in enumerate(items)
    ]
    if budget.threads > 1 and len(args) > 1:
        with ProcessPoolExecutor(max_workers=budget.threads) as pool:
            results = list(pool.map(_run_item, args, chunksize=1))
    else:
        results = [_run_item(a) for a in args]

    samples = {LeafOutcome.PROVED_LE.tag: [], LeafOutcome.PRUNED_INFEASIBLE.tag: []}
    overflow = False
    frontier = 0
    for (label, *_), res in zip(items, results):
        counts[label].merge(res.counts)
        failures += res.failures
        overflow |= res.overflow
        frontier += res.frontier
        for kind, rows in res.samples.items():
            samples[LeafOutcome(kind).tag] += rows
    if budget.samples:
        rng = np.random.default_rng(0)
        for kind, rows in samples.items():
            if len(rows) > budget.samples:
                pick = sorted(rng.choice(len(rows), budget.samples, replace=False))
                samples[kind] = [rows[i] for i in pick]

    if any(c.failed for c in counts.values()):
        status = Status.COUNTEREXAMPLE
    elif overflow:
        status = Status.INCONCLUSIVE
    else:
        status = Status.VERIFIED
    return VerifyReport(
        case_id=params.case_id,
        status=status,
        counts=counts,
        wall_time=time.perf_counter() - t0,
        params_digest=params_digest(params, vt),
        failures=failures[: budget.max_failures],
        frontier=frontier,
        samples=samples,
    )


def box_from_row(row: Sequence, params: CaseParams) -> TriangleBox:
    label, lo, hi = row
    edges = tuple(Interval(a, b) for a, b in zip(lo, hi))
    return TriangleBox(parse_classes(label), edges, params.r)  # type: ignore[arg-type]
