"""Command-line driver: analyze, symmetry, normalize, equiv, check-map.

Every command prints one JSON report (stable key order) and exits with
0 when the verdict is decided, 2 when something is Inconclusive and 1 on error.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from itertools import combinations
from pathlib import Path

from .balls import Ball, Inconclusive
from .hypersurface import HypersurfaceError, PhiForm, check_map, phi_to_q
from .invariants import TruncationTooSmall, profile
from .normalform import (InsufficientTruncation, NormalFormError, equivalence, is_normal_form,
                         normalize)
from .parser import InputFileError, coeff_text, format_expr, read_hypersurface, read_map
from .series import BeyondTruncation, GaussRat, MultiSeries, SeriesError
from .symmetry import (INFINITE, case_AB, cardinality_N, finiteness_decision, fraction, group_N,
                       lambda_index, triviality_decision)

EXIT_DECIDED, EXIT_ERROR, EXIT_INCONCLUSIVE = 0, 1, 2


class _Inconclusive(Exception):
    def __init__(self, reason: str, kind: str):
        super().__init__(reason)
        self.reason, self.kind = reason, kind


def value_text(x):
    """JSON-friendly text for exact numbers, balls and markers."""
    if isinstance(x, Ball):
        return x.text(30)
    if isinstance(x, GaussRat):
        return coeff_text(x)
    if isinstance(x, BeyondTruncation):
        return {"beyond_truncation": x.trunc}
    if x is INFINITE:
        return "infinite"
    if isinstance(x, bool) or x is None:
        return x
    if isinstance(x, int):
        return x
    if hasattr(x, "numerator"):
        q = Fraction(int(x.numerator), int(x.denominator))
        return str(q)
    try:
        from mpmath import iv
        if isinstance(x, type(iv.mpf(0))):
            return Ball(x, 0).text(30)
    except ImportError:
        pass
    return str(x)


def _table(series, max_degree=None):
    rows = []
    for e, c in series.sorted_items():
        if max_degree is not None and sum(e) > max_degree:
            continue
        rows.append({"exponents": list(e), "value": value_text(c)})
    return rows


def _series_report(series, max_degree=None):
    out = {"vars": list(series.vars), "trunc": series.trunc}
    if isinstance(series._zero, GaussRat):
        s = series.truncate(max_degree) if max_degree is not None else series
        out["expr"] = format_expr(s)
    out["coefficients"] = _table(series, max_degree)
    return out


def _load(path, args):
    source = read_hypersurface(Path(path).read_text())
    degree = args.degree if args.degree is not None else source.truncation
    mode = args.mode or source.mode
    bits = args.precision or source.precision
    info = {"file": str(path), "form": source.form, "truncation": degree, "mode": mode}
    if mode == "ball":
        info["precision"] = bits
    return source.load(degree), info, mode, bits


def _triple_list(ts):
    return [list(t) for t in sorted(ts)]


def _group_report(lam):
    N = group_N(lam)
    out = {"circle_plus": N.circle_plus, "circle_minus": N.circle_minus,
           "order": value_text(N.order())}
    if N.is_finite:
        out["elements"] = [str(e) for e in N.elements()]
    card = cardinality_N(lam)
    out["cardinality"] = {"value": value_text(card.value), "formula": value_text(card.formula),
                          "formula_applicable": card.formula_applicable}
    return out


def _symmetry_report(lam):
    fin = finiteness_decision(lam)
    triv = triviality_decision(lam)
    pairs = []
    for t, u in combinations(sorted(lam), 2):
        entry = {"triples": [list(t), list(u)], "case": case_AB(t, u)}
        f = fraction(t, u)
        entry["fraction"] = value_text(f) if f is not None else None
        entry["exceptional_step"] = lambda_index(t, u)
        pairs.append(entry)
    return {
        "group_N": _group_report(lam),
        "finiteness": {
            "kind": fin.kind, "dim_at_most_one": fin.dim_at_most_one, "bound": fin.bound,
            "jet_order": fin.jet_order,
            "witness": None if fin.witness is None else {"triple": list(fin.witness[0]), "reason": fin.witness[1]},
        },
        "triviality": {
            "kind": triv.kind, "witness": None if triv.witness is None else str(triv.witness),
            "at_most": value_text(triv.at_most), "reading_note": triv.reading_note,
        },
        "pairs": pairs,
    }


def _profile(M):
    try:
        return profile(M)
    except TruncationTooSmall as exc:
        raise _Inconclusive(str(exc), "truncation") from None


def cmd_analyze(args):
    M, info, _, _ = _load(args.file, args)
    prof = _profile(M)
    report = {
        "command": "analyze",
        "input": info,
        "invariants": {
            "invariant_pairs": [list(p) for p in sorted(prof.qm)],
            "lambda": _triple_list(prof.lam),
            "tensors": [{"triple": list(t), "value": value_text(prof.tensors[t])} for t in sorted(prof.tensors)],
            "finite_type": value_text(prof.gamma0),
            "m0": value_text(prof.m0),
        },
        "symmetry": _symmetry_report(prof.lam),
        "certificate": {"checked_to_degree": prof.trunc},
        "warnings": [f"invariant pair {list(p)} is provisional at this truncation" for p in sorted(prof.provisional)],
    }
    return report, EXIT_DECIDED


def cmd_symmetry(args):
    M, info, _, _ = _load(args.file, args)
    prof = _profile(M)
    report = {"command": "symmetry", "input": info, "lambda": _triple_list(prof.lam)}
    report.update(_symmetry_report(prof.lam))
    report["certificate"] = {"checked_to_degree": prof.trunc}
    return report, EXIT_DECIDED


def _parse_choice(text):
    if text is None:
        return None, None
    parts = [p for p in text.replace(" ", "").split(";") if p]
    triples = []
    for p in parts:
        nums = [int(x) for x in p.strip("()").split(",")]
        if len(nums) != 3:
            raise InputFileError(f"--choice expects a triple a,n,mu; got {p!r}")
        triples.append(tuple(nums))
    if len(triples) > 2:
        raise InputFileError("--choice takes at most two triples")
    return triples[0], triples[1] if len(triples) == 2 else None


def _normal_form_report(q, degree):
    """q-form text without the implicit leading tau, so it can be saved as an input file."""
    out = {"form": "q", "vars": list(q.vars), "trunc": q.trunc, "certified_degree": degree}
    if isinstance(q._zero, GaussRat):
        tau = MultiSeries.variable(q.vars, "tau", q.trunc)
        out["expr"] = format_expr(q - tau)
    out["coefficients"] = _table(q, degree)
    return out


def _map_report(H, degree):
    return {"F": _series_report(H.F, degree), "G": _series_report(H.G, degree)}


def cmd_normalize(args):
    M, info, mode, bits = _load(args.file, args)
    t, t2 = _parse_choice(args.choice)
    free = Fraction(args.free) if args.free is not None else 0
    try:
        res = normalize(M, info["truncation"], free=free, t=t, t2=t2, mode=mode, bits=bits)
    except InsufficientTruncation as exc:
        raise _Inconclusive(str(exc), "truncation") from None
    except Inconclusive as exc:
        raise _Inconclusive(exc.reason, "precision") from None
    cd = res.certified_degree
    verdict = is_normal_form(res.q_nf, res.t, res.t2, cd)
    report = {
        "command": "normalize",
        "input": info,
        "result": {
            "triples": [list(res.t), list(res.t2)],
            "case": res.case,
            "Fz0": value_text(res.fz0),
            "Gw0": value_text(res.gw0),
            "c_squared": value_text(res.c_squared),
            "c_eps": value_text(res.c_eps),
            "exceptional_steps": sorted(res.K),
            "free_parameters": {name: value_text(v) for name, v in res.free_params},
            "mode": res.mode,
        },
        "steps": [{"k": s.k, "exceptional": s.exceptional, "pivot": s.pivot,
                   "determinant": value_text(s.determinant_formula),
                   "targets": [list(x) for x in s.targets]} for s in res.steps],
        "normal_form": _normal_form_report(res.q_nf.q, cd),
        "map": _map_report(res.map, cd),
        "verification": {"is_normal_form": verdict.kind,
                         "inconclusive_kind": "precision" if verdict.kind == "Inconclusive" else None,
                         "condition": verdict.condition,
                         "degree": verdict.degree, "detail": verdict.detail},
        "certificate": {"certified_degree": cd, "trunc": res.trunc},
    }
    code = EXIT_INCONCLUSIVE if verdict.kind == "Inconclusive" else EXIT_DECIDED
    if verdict.kind == "Fails":
        code = EXIT_ERROR
    return report, code


def cmd_equiv(args):
    A, info_a, _, _ = _load(args.file, args)
    B, info_b, _, _ = _load(args.other, args)
    D = min(info_a["truncation"], info_b["truncation"])
    res = equivalence(A, B, D)
    result_kind = None
    if res.kind == "Inconclusive":
        # irrational scalings need ball arithmetic; the rest needs more jets or other triples
        result_kind = "precision" if "irrational" in res.reason else "truncation"
    report = {
        "command": "equiv",
        "inputs": [info_a, info_b],
        "result": {
            "kind": res.kind,
            "element": None if res.element is None else str(res.element),
            "free": value_text(res.free) if res.free is not None else None,
            "reason": res.reason,
            "inconclusive_kind": result_kind,
        },
        "witness": None if res.map is None else _map_report(res.map, res.checked_to),
        "certificate": {"checked_to_degree": res.checked_to},
    }
    return report, EXIT_INCONCLUSIVE if res.kind == "Inconclusive" else EXIT_DECIDED


def cmd_check_map(args):
    M, info, _, _ = _load(args.file, args)
    if args.target:
        Mt, info_t, _, _ = _load(args.target, args)
    else:
        Mt, info_t = M, info
    source = read_map(Path(args.map).read_text())
    D = min(info["truncation"], info_t["truncation"])
    H = source.load(D if args.degree is None else args.degree)
    v = check_map(_as_q(M), _as_q(Mt), H)
    report = {
        "command": "check-map",
        "input": info,
        "target": info_t,
        "map": {"file": str(args.map), "F": source.F, "G": source.G},
        "result": {"holds": v.holds, "failing_degree": v.failing_degree},
        "certificate": {"checked_to_degree": v.checked_to},
    }
    return report, EXIT_DECIDED


def _as_q(M):
    return phi_to_q(M) if isinstance(M, PhiForm) else M


def build_parser():
    p = argparse.ArgumentParser(prog="formalcr", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--degree", type=int, default=None, help="truncation degree (default: file header or 16)")
        sp.add_argument("--mode", choices=("exact", "ball"), default=None)
        sp.add_argument("--precision", type=int, default=None, help="ball precision in bits")
        sp.add_argument("--json-out", default=None, help="also write the report to this path")

    sp = sub.add_parser("analyze", help="invariant pairs, Lambda, tensors and symmetry decisions")
    sp.add_argument("file")
    common(sp)
    sp.set_defaults(func=cmd_analyze)

    sp = sub.add_parser("symmetry", help="group N, finiteness and triviality from Lambda")
    sp.add_argument("file")
    common(sp)
    sp.set_defaults(func=cmd_symmetry)

    sp = sub.add_parser("normalize", help="normal form and normalizing map")
    sp.add_argument("file")
    common(sp)
    sp.add_argument("--choice", default=None, help="triple a,n,mu for the first role; optionally ';a,n,mu' for the second")
    sp.add_argument("--free", default=None, help="rational value of the free parameter at the exceptional step")
    sp.set_defaults(func=cmd_normalize)

    sp = sub.add_parser("equiv", help="formal equivalence of two hypersurfaces")
    sp.add_argument("file")
    sp.add_argument("other")
    common(sp)
    sp.set_defaults(func=cmd_equiv)

    sp = sub.add_parser("check-map", help="verify that a map sends one hypersurface into another")
    sp.add_argument("file")
    sp.add_argument("--map", required=True)
    sp.add_argument("--target", default=None, help="target hypersurface (default: the source)")
    common(sp)
    sp.set_defaults(func=cmd_check_map)
    return p


def _emit(report, args):
    text = json.dumps(report, indent=2, ensure_ascii=False)
    print(text)
    if getattr(args, "json_out", None):
        Path(args.json_out).write_text(text + "\n")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        report, code = args.func(args)
    except _Inconclusive as exc:
        report = {"command": args.command, "status": "Inconclusive",
                  "reason": {"kind": exc.kind, "detail": exc.reason}}
        code = EXIT_INCONCLUSIVE
    except (NormalFormError, HypersurfaceError, SeriesError, InputFileError, SyntaxError,
            ValueError, OSError) as exc:
        report = {"command": args.command, "status": "error",
                  "error": {"type": type(exc).__name__, "message": str(exc)}}
        code = EXIT_ERROR
    _emit(report, args)
    return code


if __name__ == "__main__":
    sys.exit(main())
