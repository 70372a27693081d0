"""Command-line driver.

Subcommands cover the whole pipeline: classification checks with
witnesses, desingularization with certificates, the equidimensional
reduction and the weak-semistability pipeline, base change along
alterations, local normal forms, certificate production and independent
re-verification, and a seeded self-test.

Exit codes are a stable contract:

* 0 — success, or the checked property holds;
* 1 — the checked property fails (witnesses on standard output);
* 2 — invalid input (unreadable file, malformed document, wrong kind);
* 3 — the step budget was exceeded (see ``TOROCOMB_BUDGET``);
* 4 — a computed result failed its own postcondition (a defect).
"""

import argparse
import sys

from . import config
from .complexes import resolve as resolve_complex
from .complexes import validate_complex
from .config import BudgetExceeded
from .corpus import (
    DEFAULT_SEED,
    complex_corpus,
    morphism_corpus,
)
from .docio import DocumentError, emit_document, parse_document
from .morphism import (
    base_change,
    classify_morphism,
    semistable_normal_form,
)
from .oracle import Box, brute_membership, brute_multiplicity
from .plfun import (
    CertificateNotFound,
    certify_projective,
    check_certificate,
    is_good,
)
from .reduction import (
    PostconditionFailed,
    equidimensional_reduction,
    weak_semistable_pipeline,
)

__all__ = ["main", "run_command"]

EXIT_OK = 0
EXIT_PROPERTY_FAILS = 1
EXIT_INVALID_INPUT = 2
EXIT_BUDGET = 3
EXIT_DEFECT = 4

_MORPHISM_PROPERTIES = {
    "equidim": "equidimensional",
    "weakly-semistable": "weakly_semistable",
    "semistable": "semistable",
    "preimage-zero": "preimage_zero_trivial",
}


class _InvalidInput(Exception):
    """Wrong file, kind, or flag combination: reported as exit 2."""


def _read_value(path, kinds, args):
    try:
        with open(path, "r", encoding="utf-8") as handle:
            text = handle.read()
    except OSError as e:
        raise _InvalidInput(f"cannot read {path}: {e.strerror or e}") from None
    doc = parse_document(
        text,
        strict=not getattr(args, "lenient", False),
        validate=not getattr(args, "no_validate", False),
    )
    for warning in doc.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    if doc.kind not in kinds:
        wanted = " or ".join(kinds)
        raise _InvalidInput(
            f"{path} holds a {doc.kind} document; this command wants {wanted}"
        )
    return doc.kind, doc.value


def _write_value(path, value, kind=None):
    text = emit_document(value, kind)
    if path == "-":
        sys.stdout.write(text)
        return
    try:
        with open(path, "w", encoding="utf-8") as handle:
            handle.write(text)
    except OSError as e:
        raise _InvalidInput(f"cannot write {path}: {e.strerror or e}") from None


def _print_witnesses(witnesses):
    for cid, reason in witnesses:
        print(f"cone {cid}: {reason}")


# ---------------------------------------------------------------------------
# fan sketches


def _sketch_complex(c):
    """An SVG sheet with one panel per two-dimensional cone, each drawn
    in the cone's own coordinates."""
    if any(cone.ambient_dim > 2 for cone in c.cones):
        raise _InvalidInput("only two-dimensional complexes can be sketched")
    panels = [
        (cid, cone) for cid, cone in enumerate(c.cones) if cone.rank == 2
    ]
    size, margin, radius = 160, 10, 60
    cols = max(1, int(len(panels) ** 0.5 + 0.9999)) if panels else 1
    rows = (len(panels) + cols - 1) // cols if panels else 1
    width = cols * (size + margin) + margin
    height = rows * (size + margin) + margin
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}">',
        '<rect width="100%" height="100%" fill="white"/>',
    ]

    def scaled(v, cx, cy):
        norm = (v[0] * v[0] + v[1] * v[1]) ** 0.5
        return (cx + radius * v[0] / norm, cy - radius * v[1] / norm)

    for index, (cid, cone) in enumerate(panels):
        col, row = index % cols, index // cols
        x0 = margin + col * (size + margin)
        y0 = margin + row * (size + margin)
        cx, cy = x0 + size / 2, y0 + size / 2
        parts.append(
            f'<rect x="{x0}" y="{y0}" width="{size}" height="{size}" '
            'fill="none" stroke="#ccc"/>'
        )
        points = [scaled(r, cx, cy) for r in cone.rays]
        wedge = " ".join(
            f"{px:.2f},{py:.2f}" for px, py in [(cx, cy)] + points
        )
        parts.append(f'<polygon points="{wedge}" fill="#cfe3ff" stroke="none"/>')
        for (px, py), ray in zip(points, cone.rays):
            parts.append(
                f'<line x1="{cx}" y1="{cy}" x2="{px:.2f}" y2="{py:.2f}" '
                'stroke="#2255aa" stroke-width="2"/>'
            )
            parts.append(
                f'<text x="{px:.2f}" y="{py:.2f}" font-size="10" '
                f'fill="#333">{ray[0]},{ray[1]}</text>'
            )
        parts.append(
            f'<text x="{x0 + 4}" y="{y0 + 14}" font-size="12" '
            f'fill="#000">cone {cid}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


# ---------------------------------------------------------------------------
# subcommands


def _complex_survey(c):
    cones = []
    for cid, cone in enumerate(c.cones):
        entry = {"cone": cid, "rank": cone.rank, "smooth": cone.is_smooth}
        entry["multiplicity"] = (
            cone.multiplicity() if cone.is_simplicial else None
        )
        cones.append(entry)
    return {"subject": "complex", "cones": cones}


def cmd_check(args):
    kind, value = _read_value(args.file, ("complex", "morphism"), args)
    if args.emit_svg:
        if kind != "complex":
            raise _InvalidInput("sketching applies to complex documents")
        try:
            with open(args.emit_svg, "w", encoding="utf-8") as handle:
                handle.write(_sketch_complex(value))
        except OSError as e:
            raise _InvalidInput(
                f"cannot write {args.emit_svg}: {e.strerror or e}"
            ) from None
    if kind == "morphism":
        report = classify_morphism(value)
        sys.stdout.write(emit_document(report))
        if args.property is None:
            return EXIT_OK
        if args.property == "smooth":
            raise _InvalidInput("property smooth applies to complex documents")
        holds = getattr(report, _MORPHISM_PROPERTIES[args.property])
        print(f"property {args.property}: {'holds' if holds else 'fails'}")
        if holds:
            return EXIT_OK
        _print_witnesses(report.failing_witnesses)
        return EXIT_PROPERTY_FAILS
    survey = _complex_survey(value)
    sys.stdout.write(emit_document(survey, "report"))
    if args.property is None:
        return EXIT_OK
    if args.property != "smooth":
        raise _InvalidInput(
            f"property {args.property} applies to morphism documents"
        )
    rough = [e for e in survey["cones"] if not e["smooth"]]
    print(f"property smooth: {'holds' if not rough else 'fails'}")
    if not rough:
        return EXIT_OK
    for entry in rough:
        detail = (
            f"multiplicity {entry['multiplicity']}"
            if entry["multiplicity"] is not None
            else "not simplicial"
        )
        print(f"cone {entry['cone']}: {detail}")
    return EXIT_PROPERTY_FAILS


def cmd_resolve(args):
    _kind, c = _read_value(args.file, ("complex",), args)
    s = resolve_complex(c, certify=True)
    _write_value(args.output, s)
    if args.certificate:
        if s.certificate is None:
            print("no certificate produced for this desingularization")
            return EXIT_PROPERTY_FAILS
        _write_value(args.certificate, s.certificate)
    return EXIT_OK


def _emit_reduction(args, result):
    for note in result.notes:
        print(f"note: {note}")
    _write_value(args.output, result.reduced_morphism)
    if args.alteration:
        _write_value(args.alteration, result.alteration)
    return EXIT_OK


def cmd_reduce_equidim(args):
    _kind, f = _read_value(args.file, ("morphism",), args)
    return _emit_reduction(args, equidimensional_reduction(f))


def cmd_weaken(args):
    _kind, f = _read_value(args.file, ("morphism",), args)
    return _emit_reduction(args, weak_semistable_pipeline(f))


def cmd_base_change(args):
    _kind, f = _read_value(args.morphism, ("morphism",), args)
    _kind, a = _read_value(args.alteration, ("alteration",), args)
    _write_value(args.output, base_change(f, a))
    return EXIT_OK


def cmd_normal_form(args):
    _kind, f = _read_value(args.file, ("morphism",), args)
    report = classify_morphism(f)
    if not report.semistable:
        print("property semistable: fails")
        _print_witnesses(report.failing_witnesses)
        return EXIT_PROPERTY_FAILS
    cones = []
    for sid in range(len(f.source.cones)):
        nf = semistable_normal_form(f, sid)
        cones.append(
            {
                "cone": nf["cone"],
                "image": nf["target"],
                "blocks": [
                    {"target_ray": rid, "source_rays": list(rays)}
                    for rid, rays in nf["blocks"]
                ],
                "collapsed": list(nf["zero"]),
            }
        )
    _write_value(args.output, {"subject": "normal-form", "cones": cones}, "report")
    return EXIT_OK


def cmd_certify(args):
    _kind, s = _read_value(args.file, ("subdivision",), args)
    try:
        cert = certify_projective(s)
    except CertificateNotFound as e:
        print(f"no goodness certificate exists: {e}")
        if getattr(e, "witness", None) is not None:
            print(f"witness: {e.witness}")
        return EXIT_PROPERTY_FAILS
    _write_value(args.output, cert)
    return EXIT_OK


def cmd_verify(args):
    kind, value = _read_value(args.file, ("certificate", "subdivision"), args)
    if kind == "subdivision":
        if value.certificate is None:
            raise _InvalidInput(
                f"{args.file} holds a subdivision without an embedded "
                "certificate"
            )
        cert = value.certificate
    else:
        cert = value
    problems = list(check_certificate(cert))
    good, good_problems = is_good(cert.plfunction)
    if not good:
        problems += list(good_problems)
    if problems:
        print("certificate: invalid")
        for problem in problems:
            print(f"problem: {problem}")
        return EXIT_PROPERTY_FAILS
    print("certificate: valid")
    return EXIT_OK


# ---------------------------------------------------------------------------
# selftest


def _selftest_documents(seed):
    count = 0
    for c in complex_corpus(count=6, count_high_rank=1, seed=seed):
        text = emit_document(c)
        again = parse_document(text)
        if again.value.key() != c.key() or emit_document(again.value) != text:
            return f"round-trip broke on a complex of {len(c.cones)} cones"
        count += 1
    for f in morphism_corpus(count=4, seed=seed):
        text = emit_document(f)
        if emit_document(parse_document(text).value) != text:
            return "round-trip broke on a morphism"
        count += 1
    return count


def _selftest_desingularize(seed):
    checked = 0
    for c in complex_corpus(count=8, count_high_rank=0, seed=seed):
        s = resolve_complex(c, certify=True)
        if validate_complex(s.source):
            return "desingularization produced an invalid complex"
        if not all(cone.is_smooth for cone in s.source.cones):
            return "desingularization left a singular cone"
        if s.certificate is None or check_certificate(s.certificate):
            return "desingularization certificate failed re-verification"
        checked += 1
    return checked


def _selftest_reduction(seed):
    checked = 0
    for f in morphism_corpus(count=5, seed=seed):
        result = weak_semistable_pipeline(f)
        report = classify_morphism(result.reduced_morphism)
        if not report.weakly_semistable:
            return "the pipeline's result is not weakly semistable"
        checked += 1
    return checked


def _selftest_ladder(seed):
    for f in morphism_corpus(count=30, seed=seed):
        report = classify_morphism(f)
        if report.semistable and not report.weakly_semistable:
            return "a semistable morphism was not weakly semistable"
        if report.weakly_semistable and not report.equidimensional:
            return "a weakly semistable morphism was not equidimensional"
    return 30


def _selftest_oracles(seed):
    box = Box(3)
    checked = 0
    for c in complex_corpus(count=6, count_high_rank=0, seed=seed):
        for cone in c.cones:
            if cone.rank == 0 or cone.rank > 3:
                continue
            if any(abs(x) > 6 for r in cone.rays for x in r):
                continue
            if cone.is_simplicial:
                if brute_multiplicity(cone) != cone.multiplicity():
                    return "a multiplicity disagreed with its oracle"
            p = tuple(
                sum(r[j] for r in cone.rays) for j in range(cone.ambient_dim)
            )
            if not brute_membership(cone, p, box):
                return "a membership disagreed with its oracle"
            checked += 1
    return checked


def cmd_selftest(args):
    seed = args.seed if args.seed is not None else DEFAULT_SEED
    phases = (
        ("documents", _selftest_documents),
        ("desingularize", _selftest_desingularize),
        ("reduction", _selftest_reduction),
        ("classification-ladder", _selftest_ladder),
        ("oracles", _selftest_oracles),
    )
    failed = False
    for name, phase in phases:
        outcome = phase(seed)
        if isinstance(outcome, str):
            print(f"selftest {name}: FAIL — {outcome}")
            failed = True
        else:
            print(f"selftest {name}: ok ({outcome} instances)")
    print("selftest " + ("FAILED" if failed else "passed"))
    return EXIT_PROPERTY_FAILS if failed else EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing


def _add_io_flags(sub):
    sub.add_argument(
        "--no-validate",
        action="store_true",
        help="skip domain validation after parsing",
    )
    sub.add_argument(
        "--lenient",
        action="store_true",
        help="warn about unknown document fields instead of rejecting them",
    )


def build_parser():
    parser = argparse.ArgumentParser(
        prog="torocomb",
        description=(
            "Exact computations on rational conical polyhedral complexes: "
            "checks, desingularization, reductions, and certificates."
        ),
    )
    commands = parser.add_subparsers(dest="command", required=True)

    check = commands.add_parser(
        "check", help="classify a complex or morphism, optionally testing a property"
    )
    check.add_argument("file")
    check.add_argument(
        "--property",
        choices=sorted(_MORPHISM_PROPERTIES) + ["smooth"],
        help="exit 0 when the property holds, 1 with witnesses when it fails",
    )
    check.add_argument(
        "--emit-svg",
        metavar="PATH",
        help="also write a panel-per-cone sketch of a two-dimensional complex",
    )
    _add_io_flags(check)
    check.set_defaults(func=cmd_check)

    res = commands.add_parser(
        "resolve", help="desingularize a complex, emitting a certified subdivision"
    )
    res.add_argument("file")
    res.add_argument("-o", "--output", required=True)
    res.add_argument(
        "--certificate",
        metavar="PATH",
        help="also write the goodness certificate as its own document",
    )
    _add_io_flags(res)
    res.set_defaults(func=cmd_resolve)

    red = commands.add_parser(
        "reduce-equidim",
        help="make a morphism equidimensional over a smooth base",
    )
    red.add_argument("file")
    red.add_argument("-o", "--output", required=True)
    red.add_argument(
        "--alteration",
        metavar="PATH",
        help="also write the applied alteration as its own document",
    )
    _add_io_flags(red)
    red.set_defaults(func=cmd_reduce_equidim)

    weak = commands.add_parser(
        "weaken", help="run the full weak-semistability pipeline on a morphism"
    )
    weak.add_argument("file")
    weak.add_argument("-o", "--output", required=True)
    weak.add_argument(
        "--alteration",
        metavar="PATH",
        help="also write the applied alteration as its own document",
    )
    _add_io_flags(weak)
    weak.set_defaults(func=cmd_weaken)

    bc = commands.add_parser(
        "base-change", help="pull a morphism back along an alteration of its target"
    )
    bc.add_argument("morphism")
    bc.add_argument("alteration")
    bc.add_argument("-o", "--output", required=True)
    _add_io_flags(bc)
    bc.set_defaults(func=cmd_base_change)

    nf = commands.add_parser(
        "normal-form",
        help="the per-cone monomial shape of a semistable morphism",
    )
    nf.add_argument("file")
    nf.add_argument("-o", "--output", default="-")
    _add_io_flags(nf)
    nf.set_defaults(func=cmd_normal_form)

    cert = commands.add_parser(
        "certify", help="produce a goodness certificate for a subdivision"
    )
    cert.add_argument("file")
    cert.add_argument("-o", "--output", required=True)
    _add_io_flags(cert)
    cert.set_defaults(func=cmd_certify)

    ver = commands.add_parser(
        "verify",
        help="re-check a certificate from its document alone",
    )
    ver.add_argument("file")
    _add_io_flags(ver)
    ver.set_defaults(func=cmd_verify)

    st = commands.add_parser(
        "selftest", help="run the seeded self-checks and report each phase"
    )
    st.add_argument("--seed", type=int, default=None)
    st.set_defaults(func=cmd_selftest)

    return parser


def run_command(argv):
    """Run one invocation; returns the exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if not e.code else EXIT_INVALID_INPUT
    config.reset()
    try:
        return args.func(args)
    except _InvalidInput as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID_INPUT
    except DocumentError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID_INPUT
    except BudgetExceeded as e:
        print(f"error: step budget exceeded: {e}", file=sys.stderr)
        return EXIT_BUDGET
    except PostconditionFailed as e:
        print(f"defect: {e}", file=sys.stderr)
        for key, value in sorted(getattr(e, "diagnostic", {}).items()):
            print(f"defect detail: {key} = {value}", file=sys.stderr)
        return EXIT_DEFECT
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID_INPUT


def main(argv=None):
    sys.exit(run_command(sys.argv[1:] if argv is None else argv))


if __name__ == "__main__":
    main()
