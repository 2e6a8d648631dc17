"""Command-line driver: run single stages or the whole proof chain per case.

Interval endpoints are written as exact decimal strings (the full binary
expansion of the double) so that reading a report back gives the same bits;
``--hex`` switches to ``float.hex`` notation.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from decimal import Decimal
from pathlib import Path

from . import __version__
from .constants import CASES, CaseParams, case_params, polynomial_residuals, table_text
from .corona import ViolatedCoronaError, corona_search
from .geometry import RadiusClass
from .interval import Interval, sure_le
from .potentials import InconsistentSystemError, VTable, capping_condition, capping_threshold, solve_v_table
from .tightcheck import check_epsilon
from .verifier import Budget, Status, VerifyReport, verify_case

__all__ = ["main", "run_case", "StageError", "EXIT_OK", "EXIT_STAGE", "EXIT_INCONCLUSIVE", "EXIT_USAGE"]

EXIT_OK = 0
EXIT_STAGE = 2
EXIT_INCONCLUSIVE = 3
EXIT_USAGE = 64

STAGES = ("constants", "vtable", "smallest-m", "epsilon-check", "verify")


class StageError(RuntimeError):
    def __init__(self, stage: str, detail: str, partial: dict | None = None, inconclusive: bool = False):
        super().__init__(f"{stage}: {detail}")
        self.stage = stage
        self.detail = detail
        self.partial = partial or {}
        self.inconclusive = inconclusive


# -- encoding -----------------------------------------------------------------


def _num(x: float, hex_floats: bool) -> str:
    x = float(x)
    if hex_floats:
        return x.hex()
    if x != x or x in (float("inf"), float("-inf")):
        return repr(x)
    return str(Decimal(x))


def _pair(iv: Interval, hex_floats: bool) -> list[str]:
    return [_num(iv.lo, hex_floats), _num(iv.hi, hex_floats)]


# -- stages -------------------------------------------------------------------


def constants_json(p: CaseParams, hx: bool) -> dict:
    res_r, res_d = polynomial_residuals(p)
    texts = table_text(p.case_id)
    table = {}
    for key, iv in p.table_values().items():
        table[key] = {
            "value": _pair(iv, hx),
            "printed": p.overrides.get(key, texts[key]),
            "bumped": key == "m1" and p.m1_bumped and key not in p.overrides,
            "override": key in p.overrides,
        }
    return {
        "case_id": p.case_id,
        "canonical": p.canonical,
        "overrides": dict(p.overrides),
        "r": _pair(p.r, hx),
        "delta": _pair(p.delta, hx),
        "delta_over_pi": _pair(p.delta_over_pi, hx),
        "residual_r": _pair(res_r, hx),
        "residual_delta": _pair(res_d, hx),
        "table": table,
    }


def vtable_json(vt: VTable, hx: bool) -> dict:
    out = {k: _pair(v, hx) for k, v in vt.as_dict().items()}
    out["tight_excess"] = {k: _pair(v, hx) for k, v in vt.tight_excess.items()}
    return out


def smallest_m_stage(p: CaseParams, vt: VTable, hx: bool) -> tuple[dict, bool]:
    """Corona bounds, capping thresholds and the capping condition per class."""
    out, ok = {}, True
    for center in (RadiusClass.LARGE, RadiusClass.SMALL):
        search = corona_search(p, vt, center)
        m, Z = p.m(center), p.Z(center)
        z = capping_threshold(vt, p, center)
        checks = {
            "m_dominates_bound": bool(sure_le(search.bound, m)),
            "capping_condition": capping_condition(vt, p, center),
            "cap_above_threshold": bool(sure_le(z, Z)),
        }
        ok &= all(checks.values())
        out[center.value] = {
            "bound": _pair(search.bound, hx),
            "argmax": search.argmax.label() if search.argmax else None,
            "k_max": search.k_max,
            "signatures": search.n_signatures,
            "closing": [c.label() for c in search.closing],
            "m": _pair(m, hx),
            "z": _pair(z, hx),
            "Z": _pair(Z, hx),
            "checks": checks,
        }
    return out, ok


def epsilon_stage(p: CaseParams, vt: VTable, hx: bool) -> tuple[dict, bool]:
    verdicts = check_epsilon(p, vt)
    out = {}
    for label, v in verdicts.items():
        out[label] = {
            "passed": v.passed,
            "eps": _pair(v.eps, hx),
            "d_excess": [_pair(x, hx) for x in v.d_excess],
            "d_potential": [_pair(x, hx) for x in v.d_potential],
            "failing_direction": v.failing_direction,
            "reason": v.reason,
        }
    return out, all(v.passed for v in verdicts.values())


def report_json(rep: VerifyReport) -> dict:
    return {
        "status": rep.status.value,
        "counts": {k: c.as_dict() for k, c in rep.counts.items()},
        "boxes_checked": rep.boxes_checked,
        "boxes_pruned_infeasible": rep.boxes_pruned_infeasible,
        "boxes_closed_tight": rep.boxes_closed_tight,
        "boxes_proved": rep.boxes_proved,
        "max_depth": rep.max_depth,
        "total_nodes": rep.total_nodes,
        "frontier": rep.frontier,
        "failures": [[lab, lo, hi] for lab, lo, hi in rep.failures],
        "params_digest": rep.params_digest,
        "wall_time": rep.wall_time,
    }


def run_case(case_id: int, overrides=None, threads: int = 1, hx: bool = False, budget: Budget | None = None) -> dict:
    """Full chain for one case; returns the certificate or raises StageError."""
    t0 = time.perf_counter()
    cert: dict = {"kind": "ProofCertificate", "tool_version": __version__, "case_id": case_id}
    try:
        p = case_params(case_id, overrides)
        p.check_invariants()
    except (ArithmeticError, ValueError, KeyError) as exc:
        raise StageError("constants", str(exc), cert) from exc
    cert["constants"] = constants_json(p, hx)

    try:
        vt = solve_v_table(p)
    except InconsistentSystemError as exc:
        raise StageError("vtable", str(exc), cert) from exc
    cert["vtable"] = vtable_json(vt, hx)

    try:
        cert["coronas"], ok = smallest_m_stage(p, vt, hx)
    except ViolatedCoronaError as exc:
        raise StageError("smallest-m", str(exc), cert) from exc
    if not ok:
        raise StageError("smallest-m", "a corona or capping check failed", cert)

    cert["epsilon_check"], ok = epsilon_stage(p, vt, hx)
    if not ok:
        raise StageError("epsilon-check", "a triple failed the epsilon-tight check", cert)

    budget = budget or Budget()
    budget = Budget(**{**budget.__dict__, "threads": threads})
    rep = verify_case(p, vt, budget)
    cert["verify"] = report_json(rep)
    cert["wall_time"] = time.perf_counter() - t0
    if rep.status is Status.COUNTEREXAMPLE:
        raise StageError("verify", "counterexample boxes found", cert)
    if rep.status is Status.INCONCLUSIVE:
        raise StageError("verify", "depth or node budget exhausted", cert, inconclusive=True)
    return cert


# -- command line -------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _override(text: str) -> tuple[str, str]:
    if "=" not in text:
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    k, v = text.split("=", 1)
    return k.strip(), v.strip()


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="discproof", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    common = _Parser(add_help=False)
    common.add_argument("--hex", action="store_true", help="write endpoints as hex floats")
    common.add_argument("--override", action="append", type=_override, default=[], metavar="KEY=VALUE",
                        help="replace a tabulated parameter (marks output non-canonical)")
    case = _Parser(add_help=False)
    case.add_argument("--case", type=int, required=True, choices=CASES)
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("constants", parents=[common, case], help="certified parameters")
    sub.add_parser("vtable", parents=[common, case], help="solved vertex potentials")
    sub.add_parser("smallest-m", parents=[common, case], help="corona bounds and capping checks")
    sub.add_parser("epsilon-check", parents=[common, case], help="epsilon-tight derivative check")
    v = sub.add_parser("verify", parents=[common], help="full proof chain for one case")
    v.add_argument("--case", type=int, choices=CASES)
    v.add_argument("--from-certificate", type=Path, metavar="PATH",
                   help="replay the case and overrides recorded in a certificate")
    v.add_argument("--threads", type=int, default=1)
    v.add_argument("--report", type=Path)
    va = sub.add_parser("verify-all", parents=[common], help="full proof chain for all cases")
    va.add_argument("--threads", type=int, default=1)
    va.add_argument("--report-dir", type=Path)
    return ap


def _emit(obj: dict, path: Path | None = None) -> None:
    text = json.dumps(obj, indent=2)
    if path is None:
        print(text)
    else:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text + "\n")


def _single_stage(args) -> int:
    overrides = dict(args.override)
    try:
        p = case_params(args.case, overrides)
    except (KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    hx = args.hex
    if args.command == "constants":
        _emit(constants_json(p, hx))
        return EXIT_OK
    try:
        vt = solve_v_table(p)
    except InconsistentSystemError as exc:
        print(f"vtable: {exc}", file=sys.stderr)
        return EXIT_STAGE
    if args.command == "vtable":
        _emit({"case_id": p.case_id, "vtable": vtable_json(vt, hx)})
        return EXIT_OK
    if args.command == "smallest-m":
        try:
            out, ok = smallest_m_stage(p, vt, hx)
        except ViolatedCoronaError as exc:
            print(f"smallest-m: {exc}", file=sys.stderr)
            return EXIT_STAGE
        _emit({"case_id": p.case_id, "coronas": out, "passed": ok})
        return EXIT_OK if ok else EXIT_STAGE
    out, ok = epsilon_stage(p, vt, hx)
    _emit({"case_id": p.case_id, "epsilon_check": out, "passed": ok})
    return EXIT_OK if ok else EXIT_STAGE


def _verify(case_id: int, args, path: Path | None) -> int:
    try:
        cert = run_case(case_id, dict(args.override), args.threads, args.hex)
    except StageError as exc:
        diag = dict(exc.partial, kind="DiagnosticReport", failed_stage=exc.stage, detail=exc.detail)
        if path is not None:
            _emit(diag, path)
        print(f"case {case_id}: {exc}", file=sys.stderr)
        return EXIT_INCONCLUSIVE if exc.inconclusive else EXIT_STAGE
    _emit(cert, path)
    v = cert["verify"]
    print(f"case {case_id}: {v['status']} ({v['total_nodes']} boxes, {cert['wall_time']:.1f} s)", file=sys.stderr)
    return EXIT_OK


def _replay(args) -> int:
    """Re-run a certificate's case and check the status and constants digest."""
    try:
        old = json.loads(args.from_certificate.read_text())
        case_id = int(old["case_id"])
        overrides = dict(old["constants"]["overrides"])
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: cannot read certificate: {exc}", file=sys.stderr)
        return EXIT_USAGE
    args.override = list(overrides.items())
    code = _verify(case_id, args, args.report)
    if code != EXIT_OK:
        return code
    if args.report is not None:
        new = json.loads(args.report.read_text())
        same = (new["verify"]["status"], new["verify"]["params_digest"]) == (
            old["verify"]["status"], old["verify"]["params_digest"])
        if not same:
            print("replay differs from the certificate", file=sys.stderr)
            return EXIT_STAGE
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "threads", 1) < 1:
        print("error: --threads must be positive", file=sys.stderr)
        return EXIT_USAGE
    if args.command == "verify":
        if args.from_certificate is not None:
            return _replay(args)
        if args.case is None:
            print("error: verify needs --case or --from-certificate", file=sys.stderr)
            return EXIT_USAGE
        return _verify(args.case, args, args.report)
    if args.command == "verify-all":
        first = EXIT_OK
        for i in CASES:
            path = args.report_dir / f"case{i}.json" if args.report_dir else None
            code = _verify(i, args, path)
            if first == EXIT_OK:
                first = code
        return first
    return _single_stage(args)


if __name__ == "__main__":
    sys.exit(main())
