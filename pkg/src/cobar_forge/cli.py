"""Command-line front end.

Exit codes: 0 ok, 1 a check or golden comparison failed, 2 bad input.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .comod import Comodule, builtin_comodule, transform, verify_comodule
from .ext import (
    ExtError,
    WindowOverflow,
    assign_names,
    compute_ext_chart,
    find_bounding_chain,
    parse_chain,
)
from .hopf import HopfPresentation, builtin_hopf, verify_bialgebra_axioms
from .lattice import (
    GroupSeries,
    closed_form_G,
    cokernel_series,
    compare_series,
    divided_power_model,
    g_lattice_map,
    tate_series,
)
from .render import add_product_lines, render_chart
from .specseq import (
    HiddenExtension,
    SpecSeqError,
    extract_homotopy,
    load_catalog,
    long_exact_sequence,
    name_tmf3_sphere,
    run_adams,
    tmf3_catalog,
)

SCENARIO_DIR = Path(__file__).parent / "scenarios"


class InputError(Exception):
    pass


# ---------------------------------------------------------------------------
# parsing labels


def parse_algebra(text: str) -> HopfPresentation:
    path = Path(text)
    if text.endswith(".json"):
        if not path.exists():
            raise InputError(f"no such file: {text}")
        return HopfPresentation.from_json(json.loads(path.read_text()))
    try:
        return builtin_hopf(text)
    except KeyError as exc:
        raise InputError(str(exc)) from exc


def parse_comodule(text: str | None, h: HopfPresentation) -> Comodule:
    """'hZ', 'R3:61', 'tate-R3:-1,2', 'R3-skeleton:9/e0' (quotient by the
    listed subcomodule basis) or a JSON file."""
    if text is None:
        return builtin_comodule("trivial", h.p, algebra=h)
    if text.endswith(".json"):
        path = Path(text)
        if not path.exists():
            raise InputError(f"no such file: {text}")
        return Comodule.from_json(json.loads(path.read_text()), h)
    text, _, killed = text.partition("/")
    label, _, args = text.partition(":")
    params = [int(a) for a in args.split(",") if a] if args else []
    if label in ("trivial", "hZ") and not params:
        params = [h.p]
    try:
        m = builtin_comodule(label, *params)
    except (KeyError, ValueError, IndexError, TypeError) as exc:
        raise InputError(f"bad comodule {text!r}: {exc}") from exc
    if killed:
        m = transform(m, "sub", killed.split(",")).quotient
    return m


def _write(text: str, out: str | None):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _chart(args):
    h = parse_algebra(args.algebra)
    m = parse_comodule(args.comodule, h)
    return compute_ext_chart(h, m, args.max_s, args.max_t, engine=args.engine, jobs=args.jobs)


# ---------------------------------------------------------------------------
# subcommands


def cmd_verify(args) -> int:
    h = parse_algebra(args.algebra)
    rep = verify_bialgebra_axioms(h, args.max_deg)
    lines = [f"{h.label}: bialgebra axioms through degree {args.max_deg}: {'ok' if rep.ok else 'FAILED'}"]
    if not rep.coassociativity:
        lines.append(f"  coassociativity fails at {rep.coassociativity_failure}")
    if not rep.counit:
        lines.append(f"  counit fails at {rep.counit_failure}")
    if not rep.well_defined:
        lines.append("  a generator power allowed by its height has nonzero coproduct")
    ok = rep.ok
    if args.comodule:
        m = parse_comodule(args.comodule, h)
        if m.algebra.label != h.label:
            m = m.over(h)
        crep = verify_comodule(m)
        lines.append(f"{m.label}: comodule axioms: {'ok' if crep.ok else 'FAILED'}")
        lines += [f"  {f}" for f in crep.failures[:20]]
        ok = ok and crep.ok
    _write("\n".join(lines) + "\n", args.out)
    return 0 if ok else 1


def cmd_ext(args) -> int:
    chart = _chart(args)
    if args.names:
        assign_names(chart, json.loads(Path(args.names).read_text()))
    if args.format != "json":
        add_product_lines(chart)
    _write(render_chart(chart, args.format), args.out)
    return 0


def cmd_chart(args) -> int:
    try:
        data = json.loads(Path(args.file).read_text())
        text = render_chart(data, args.format)
    except (OSError, json.JSONDecodeError, ValueError) as exc:
        raise InputError(str(exc)) from exc
    _write(text, args.out)
    return 0


def cmd_witness(args) -> int:
    h = parse_algebra(args.algebra)
    m = parse_comodule(args.comodule, h)
    if m.algebra.label != h.label:
        m = m.over(h)
    from .ext import CobarComplex

    cx = CobarComplex(m)
    try:
        z = parse_chain(cx, args.cocycle)
        w = find_bounding_chain(h, m, z, cobar=cx)
    except (KeyError, ValueError) as exc:
        raise InputError(str(exc)) from exc
    text = json.dumps(w.to_json(), indent=1, sort_keys=True) + "\n" if args.format == "json" else str(w) + "\n"
    _write(text, args.out)
    return 0 if w.found else 1


def cmd_les(args) -> int:
    h = parse_algebra(args.algebra)
    m = parse_comodule(args.comodule, h)
    if m.algebra.label != h.label:
        m = m.over(h)
    ses = transform(m, "sub", args.sub.split(","))
    les = long_exact_sequence(ses, args.max_s, args.max_t)
    data = {
        "exact": les.exact,
        "failures": les.failures,
        "unverified": sorted([list(b) for b in les.unverified]),
        "connecting": {f"{s},{t}": mat.tolist() for (s, t), mat in sorted(les.connecting.items())
                       if mat.size and mat.any()},
    }
    _write(json.dumps(data, indent=1, sort_keys=True) + "\n", args.out)
    return 0 if les.exact else 1


def cmd_adams(args) -> int:
    chart = _chart(args)
    if args.names:
        assign_names(chart, json.loads(Path(args.names).read_text()))
    if chart.algebra.label == "A-tmf-p3":
        name_tmf3_sphere(chart)
    catalog = load_catalog(args.catalog) if args.catalog else tmf3_catalog()
    page = run_adams(chart, catalog, strict=args.strict)
    if args.format == "json":
        text = json.dumps(page.to_json(), indent=1, sort_keys=True) + "\n"
    else:
        lines = [f"# E_infinity for {chart.label} over {chart.algebra.label}"]
        lines += [f"d{d.page}: {d.source} -> {d.target}{'' if d.forced else ' (unforced)'}"
                  for d in page.differentials]
        lines.append(f"undetermined: {len(page.undetermined)}")
        if args.homotopy:
            g = extract_homotopy(page)
            lines.append(g.table())
        text = "\n".join(lines) + "\n"
    _write(text, args.out)
    return 0


def cmd_groups(args) -> int:
    if args.model:
        model = divided_power_model(args.model, (0, args.max_n))
        series = model.series(range(0, args.max_n + 1))
        _write(series.dumps() + "\n" if args.format == "json" else series.table() + "\n", args.out)
        return 0
    computed = cokernel_series(g_lattice_map(), range(args.max_n + 1))
    formula = GroupSeries(3, {n: closed_form_G(n) for n in range(args.max_n + 1)}, "closed form")
    problems = compare_series(computed, formula, range(args.max_n + 1))
    lines = ["n  cokernel  closed-form"]
    for n in range(args.max_n + 1):
        if not computed[n].is_zero() or not formula[n].is_zero():
            lines.append(f"{n}  {computed[n]}  {formula[n]}")
    lines += [f"MISMATCH {p}" for p in problems]
    _write("\n".join(lines) + "\n", args.out)
    return 1 if problems else 0


def cmd_tate(args) -> int:
    ladder = [int(k) for k in args.ladder.split(",")]
    series, report = tate_series(range(args.stem_lo, args.stem_hi + 1), ladder)
    text = json.dumps({"series": series.to_json(), "report": report.to_json()}, indent=1, sort_keys=True)
    _write(text + "\n", args.out)
    return 0 if report.ok else 1


def cmd_scenario(args) -> int:
    from .scenario import run_scenario

    path = Path(args.path)
    if not path.exists():
        path = SCENARIO_DIR / f"{args.path}.json"
    if not path.exists():
        raise InputError(f"no scenario {args.path!r}")
    result = run_scenario(path, out_dir=args.out, update=args.update_goldens)
    for line in result.log:
        print(line)
    return 0 if result.ok else 1


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cobar-forge", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, chart=True):
        p.add_argument("--algebra", default="A-tmf-p3")
        p.add_argument("--comodule", default=None)
        p.add_argument("--out", default=None)
        if chart:
            p.add_argument("--max-s", type=int, default=8)
            p.add_argument("--max-t", type=int, default=40)
            p.add_argument("--engine", default="minimal_resolution")
            p.add_argument("--jobs", type=int, default=None,
                           help="worker processes for cobar columns (default: $COBAR_FORGE_JOBS or 1)")

    p = sub.add_parser("verify", help="check Hopf algebra and comodule axioms")
    common(p, chart=False)
    p.add_argument("--max-deg", type=int, default=12)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("ext", help="compute an Ext chart")
    common(p)
    p.add_argument("--format", choices=["json", "ascii", "svg"], default="ascii")
    p.add_argument("--names", default=None, help="JSON naming table")
    p.set_defaults(func=cmd_ext)

    p = sub.add_parser("chart", help="render a stored chart")
    p.add_argument("file")
    p.add_argument("--format", choices=["json", "ascii", "svg"], default="ascii")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_chart)

    p = sub.add_parser("witness", help="search for a bounding cochain")
    common(p, chart=False)
    p.add_argument("cocycle", help="e.g. '[tau0|tau0]i13 + 2[xi1]i5'")
    p.add_argument("--format", choices=["json", "text"], default="text")
    p.set_defaults(func=cmd_witness)

    p = sub.add_parser("les", help="long exact sequence of a subcomodule")
    common(p)
    p.add_argument("--sub", required=True, help="comma-separated basis of the subcomodule")
    p.set_defaults(func=cmd_les)

    p = sub.add_parser("adams", help="propagate Adams differentials")
    common(p)
    p.add_argument("--catalog", default=None, help="differential catalog JSON (default: tmf at p=3)")
    p.add_argument("--names", default=None)
    p.add_argument("--strict", action="store_true")
    p.add_argument("--homotopy", action="store_true")
    p.add_argument("--format", choices=["json", "text"], default="text")
    p.set_defaults(func=cmd_adams)

    p = sub.add_parser("groups", help="G_n table or a lattice model series")
    p.add_argument("--max-n", type=int, default=48)
    p.add_argument("--model", default=None)
    p.add_argument("--format", choices=["json", "text"], default="text")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_groups)

    p = sub.add_parser("tate", help="Tate series along a truncation ladder")
    p.add_argument("--ladder", default="-1,-2,-3")
    p.add_argument("--stem-lo", type=int, default=-13)
    p.add_argument("--stem-hi", type=int, default=23)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_tate)

    p = sub.add_parser("scenario", help="run a scenario file or builtin scenario name")
    p.add_argument("path")
    p.add_argument("--out", default=None, help="directory for artifacts")
    p.add_argument("--update-goldens", action="store_true")
    p.set_defaults(func=cmd_scenario)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    try:
        return args.func(args)
    except (InputError, WindowOverflow, ExtError, SpecSeqError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
