"""Command-line driver: load a theory, run selected checks, report, exit.

The report is deterministic: entries are sorted by check and target, and a
canonical digest is printed that covers everything except the per-entry wall
times, so two runs of the same invocation can be compared by digest even
though their timings differ.  Exit code 0 means every selected check passed;
1 means at least one check failed or was only verifiable on shell; 2 means
the input could not be parsed or validated at all.

Negative controls: ``--mutate sign`` flips one sign before checking (the
leading gamma term when the theory declares gamma, otherwise the leading
Lagrangian term), which must turn a healthy fixture red.  The finer-grained
``mutation_sites`` enumerates one single-sign mutation per structural
ingredient for harness use.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import re
import sys
import time
from concurrent.futures import ThreadPoolExecutor

from .algebra import GradedPoly, GvcError
from .brst import brst_candidate, check_antibracket, check_brst_nilpotent, \
    check_gauge_symmetry
from .noether import NoetherRecord, StageRecord, _el, check_extended, \
    check_kt_nilpotent, comp_label, triviality_report, verify_ni, \
    verify_stage_ni
from .parser import TheorySpec, parse_theory
from . import theories

CHECK_NAMES = ("ni", "stages", "kt", "extended", "gauge", "brst",
               "antibracket", "triviality")
DEFAULT_CHECKS = "ni,kt,gauge,brst"


def _run_stages(theory):
    entries = []
    for k in theory.stage_numbers() or [1]:
        entries.extend(verify_stage_ni(theory, k))
    return entries


def _run_gauge(theory):
    entries = []
    for k in [0] + theory.stage_numbers():
        entries.extend(check_gauge_symmetry(theory, k))
    return entries


_RUNNERS = {
    "ni": verify_ni,
    "stages": _run_stages,
    "kt": check_kt_nilpotent,
    "extended": check_extended,
    "gauge": _run_gauge,
    "brst": lambda theory: check_brst_nilpotent(brst_candidate(theory)),
    "antibracket": check_antibracket,
    "triviality": triviality_report,
}


# ---------------------------------------------------------------------------
# sign mutations (negative controls)


def _flip_leading(poly):
    """Flip the sign of the first monomial in canonical print order.

    Constant monomials are skipped: flipping an additive constant changes
    no variational identity, so it would be an undetectable mutation."""
    keys = poly._sorted_keys()
    key = next((k for k in keys if k[0] or k[1]), keys[0])
    return poly + GradedPoly(poly.reg, {key: -2 * poly.terms[key]})


def _rebuild(theory, **over):
    kw = dict(name=theory.name, registry=theory.registry,
              lagrangian=theory.lagrangian, records=theory.records,
              stages=theory.stages, gauge_candidate=theory.gauge_candidate,
              gamma=theory.gamma, alphas=theory.alphas)
    kw.update(over)
    out = TheorySpec(**kw)
    if "lagrangian" not in over:
        out._el_cache = theory._el_cache
    return out


def _flip_record(rec):
    key = sorted(rec.rows)[0]
    rows = dict(rec.rows)
    rows[key] = _flip_leading(rows[key])
    if isinstance(rec, StageRecord):
        return StageRecord(rec.stage, rec.ghost, rec.component, rows, rec.h)
    return NoetherRecord(rec.ghost, rec.component, rows)


def mutation_sites(theory):
    """Deterministic single-sign negative controls.

    Returns (label, build) pairs; each build() yields a copy of the theory
    with exactly one sign flipped -- in a Lagrangian term, one row of one
    record, one gauge-candidate component, or one gamma component.  Flipping
    a single sign never changes parity, so the mutants stay well formed and
    only the verified identities break.
    """
    sites = []
    if not theory.lagrangian.is_zero():
        sites.append(("lagrangian", lambda: _rebuild(
            theory, lagrangian=_flip_leading(theory.lagrangian))))

    def record_site(i):
        def build():
            records = list(theory.records)
            records[i] = _flip_record(records[i])
            return _rebuild(theory, records=records)
        return build

    for i, rec in enumerate(theory.records):
        sites.append(("record %s" % rec.label(), record_site(i)))

    def stage_site(k, i):
        def build():
            stages = {kk: list(v) for kk, v in theory.stages.items()}
            stages[k][i] = _flip_record(stages[k][i])
            return _rebuild(theory, stages=stages)
        return build

    for k in theory.stage_numbers():
        for i, rec in enumerate(theory.stage_records(k)):
            sites.append(("stage record %s" % rec.label(), stage_site(k, i)))

    def gauge_site(key):
        def build():
            cand = dict(theory.gauge_candidate)
            cand[key] = _flip_leading(cand[key])
            return _rebuild(theory, gauge_candidate=cand)
        return build

    for key in sorted(theory.gauge_candidate or {}):
        sites.append(("gauge %s" % comp_label(*key), gauge_site(key)))

    def gamma_site(key):
        def build():
            gamma = dict(theory.gamma)
            gamma[key] = _flip_leading(gamma[key])
            return _rebuild(theory, gamma=gamma)
        return build

    for key in sorted(theory.gamma):
        sites.append(("gamma %s" % comp_label(*key), gamma_site(key)))
    return sites


def apply_sign_mutation(theory):
    """The single mutation behind ``--mutate sign``; returns (mutant, label)."""
    if theory.gamma:
        key = sorted(theory.gamma)[0]
        gamma = dict(theory.gamma)
        gamma[key] = _flip_leading(gamma[key])
        return (_rebuild(theory, gamma=gamma),
                "sign of leading gamma term on %s" % comp_label(*key))
    return (_rebuild(theory, lagrangian=_flip_leading(theory.lagrangian)),
            "sign of leading Lagrangian term")


# ---------------------------------------------------------------------------
# report assembly


_TERM_SPLIT = re.compile(r" ([+-]) ")


def _truncate_residual(text, limit):
    parts = _TERM_SPLIT.split(text)
    nterms = (len(parts) + 1) // 2
    if nterms <= limit:
        return text
    kept = "".join(
        parts[i] if i % 2 == 0 else " %s " % parts[i]
        for i in range(2 * limit - 1))
    return "%s + [truncated: %d of %d terms shown]" % (kept, limit, nterms)


def run_checks(theory, selected, max_residual_terms=8):
    _el(theory)  # warm the Euler-Lagrange cache once, not per thread
    out = []
    with ThreadPoolExecutor(max_workers=len(selected)) as pool:
        def one(name):
            t0 = time.perf_counter()
            entries = _RUNNERS[name](theory)
            dt = time.perf_counter() - t0
            for e in entries:
                e["time"] = dt
            return entries
        for entries in pool.map(one, selected):
            out.extend(entries)
    for e in out:
        if "residual" in e:
            e["residual"] = _truncate_residual(e["residual"],
                                               max_residual_terms)
    out.sort(key=lambda e: (e["check"], e["target"], e["status"]))
    return out


def _overall(entries):
    statuses = {e["status"] for e in entries}
    if "fail" in statuses:
        return "fail"
    if "unverified-on-shell" in statuses:
        return "unverified"
    return "pass"


def _canonical_digest(report):
    doc = {k: v for k, v in report.items() if k != "canonical_sha256"}
    doc["entries"] = [{k: v for k, v in e.items() if k != "time"}
                      for e in report["entries"]]
    blob = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def build_report(theory, selected, mutation="none", max_residual_terms=8):
    entries = run_checks(theory, selected, max_residual_terms)
    report = {
        "theory": theory.name or "(unnamed)",
        "jet_order": theory.registry.jet_order,
        "checks": list(selected),
        "mutation": mutation,
        "overall": _overall(entries),
        "entries": entries,
    }
    report["canonical_sha256"] = _canonical_digest(report)
    return report


def render_text(report):
    lines = [
        "theory: %s" % report["theory"],
        "jet order: %d" % report["jet_order"],
        "checks: %s" % ",".join(report["checks"]),
        "mutation: %s" % report["mutation"],
        "",
    ]
    for e in report["entries"]:
        lines.append("[%s] %s: %s (%.3fs)"
                     % (e["status"], e["check"], e["target"], e["time"]))
        if "note" in e:
            lines.append("    note: %s" % e["note"])
        if "residual" in e:
            lines.append("    residual: %s" % e["residual"])
    lines.append("")
    lines.append("overall: %s" % report["overall"])
    lines.append("canonical: sha256:%s" % report["canonical_sha256"])
    return "\n".join(lines) + "\n"


def render_json(report):
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


# ---------------------------------------------------------------------------
# argument handling


def build_arg_parser():
    ap = argparse.ArgumentParser(
        prog="gvc",
        description="Verify variational identities of graded field theories.")
    sub = ap.add_subparsers(dest="command", required=True)
    v = sub.add_parser("verify", help="run checks on a theory and report")
    src = v.add_mutually_exclusive_group(required=True)
    src.add_argument("--builtin", choices=theories.BUILTINS,
                     help="one of the shipped fixtures")
    src.add_argument("--theory", metavar="PATH",
                     help="path to a theory file in the gvc grammar")
    v.add_argument("--check", default=DEFAULT_CHECKS, metavar="CSV",
                   help="comma-separated checks from: %s (default: %s)"
                        % (",".join(CHECK_NAMES), DEFAULT_CHECKS))
    v.add_argument("--jet-order", type=int, default=None,
                   help="override the jet-order cap (else the file's "
                        "statement, the GVC_JET_ORDER env var, or 4)")
    v.add_argument("--format", choices=("text", "json"), default="text")
    v.add_argument("--out", metavar="PATH", default=None,
                   help="write the report to a file instead of stdout")
    v.add_argument("--mutate", choices=("none", "sign"), default="none",
                   help="negative control: flip one sign before checking")
    v.add_argument("--max-residual-terms", type=int, default=8,
                   help="truncate printed residuals to this many terms")
    return ap


def _parse_checks(csv):
    names = [n.strip() for n in csv.split(",") if n.strip()]
    if not names:
        raise GvcError("no checks selected")
    for n in names:
        if n not in CHECK_NAMES:
            raise GvcError("unknown check %r; available: %s"
                           % (n, ",".join(CHECK_NAMES)))
    seen = []
    for n in sorted(names, key=CHECK_NAMES.index):
        if n not in seen:
            seen.append(n)
    return seen


def _load_theory(args):
    env = os.environ.get("GVC_JET_ORDER")
    default_jo = None
    if env:
        try:
            default_jo = int(env)
        except ValueError:
            raise GvcError("GVC_JET_ORDER must be an integer, got %r" % env)
    path = theories.builtin_path(args.builtin) if args.builtin else args.theory
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise GvcError("cannot read theory file: %s" % exc)
    return parse_theory(text, jet_order=args.jet_order,
                        default_jet_order=default_jo)


def run(argv):
    """Parse arguments, verify, write the report; returns the exit code."""
    args = build_arg_parser().parse_args(argv)
    try:
        selected = _parse_checks(args.check)
        theory = _load_theory(args)
        mutation = "none"
        if args.mutate == "sign":
            theory, label = apply_sign_mutation(theory)
            mutation = "sign (%s)" % label
        report = build_report(theory, selected, mutation,
                              args.max_residual_terms)
    except GvcError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2
    text = render_text(report) if args.format == "text" else \
        render_json(report)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
        print("wrote %s (overall: %s)" % (args.out, report["overall"]))
    else:
        sys.stdout.write(text)
    return 0 if report["overall"] == "pass" else 1


def main():
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
