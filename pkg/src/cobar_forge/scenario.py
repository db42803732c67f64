"""Scenario files: a named list of steps whose results are written as
artifacts and compared with golden files.

A step is a JSON object with an ``op`` and usually an ``as`` label under
which its result is stored for later steps. Checks (``compare``, ``expect``)
record failures instead of raising, so one run reports every problem.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .comod import builtin_comodule, transform, verify_comodule
from .ext import WitnessChain, assign_names, compute_ext_chart, find_bounding_chain, parse_chain
from .hopf import builtin_hopf, verify_bialgebra_axioms
from .lattice import (
    Group,
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
    extract_homotopy,
    load_catalog,
    long_exact_sequence,
    name_tmf3_sphere,
    run_adams,
    tmf3_catalog,
    v0_strings,
)


class ScenarioError(Exception):
    pass


@dataclass
class ScenarioResult:
    name: str
    ok: bool = True
    log: list = field(default_factory=list)
    artifacts: dict = field(default_factory=dict)  # file name -> text

    def fail(self, msg: str):
        self.ok = False
        self.log.append(f"FAIL {msg}")


def _range(spec) -> range:
    lo, hi = spec
    return range(int(lo), int(hi) + 1)


def _comodule(spec, h):
    if isinstance(spec, str):
        spec = {"label": spec}
    m = builtin_comodule(spec["label"], *spec.get("params", []))
    if "quotient_by" in spec:
        m = transform(m, "sub", spec["quotient_by"]).quotient
    if m.algebra.label != h.label:
        m = m.over(h)
    return m


def _series_text(series: GroupSeries, degrees) -> str:
    data = {str(n): series[n].to_json() for n in degrees}
    return json.dumps(data, indent=1) + "\n"


class _Runner:
    def __init__(self, result: ScenarioResult):
        self.env: dict = {}
        self.result = result

    def get(self, label):
        if label not in self.env:
            raise ScenarioError(f"undefined label {label!r}")
        return self.env[label]

    # -- ops ---------------------------------------------------------------
    def op_verify(self, st):
        h = builtin_hopf(st["algebra"])
        rep = verify_bialgebra_axioms(h, st.get("max_degree", 12))
        if not rep.ok:
            self.result.fail(f"{h.label} fails the bialgebra axioms")
        if "comodule" in st:
            crep = verify_comodule(_comodule(st["comodule"], h))
            if not crep.ok:
                self.result.fail(f"{st['comodule']} fails the comodule axioms: {crep.failures[:3]}")
        return rep.ok

    def op_ext(self, st):
        h = builtin_hopf(st["algebra"])
        m = _comodule(st.get("comodule", {"label": "trivial", "params": [h.p]}), h)
        chart = compute_ext_chart(h, m, st["max_s"], st["max_t"], engine=st.get("engine", "minimal_resolution"))
        if h.label == "A-tmf-p3":
            name_tmf3_sphere(chart)
        if "names" in st:
            assign_names(chart, st["names"])
        return chart

    def op_render(self, st):
        chart = self.get(st["chart"])
        add_product_lines(chart)
        return render_chart(chart, st.get("format", "ascii"))

    def op_adams(self, st):
        chart = self.get(st["chart"])
        cat = st.get("catalog", "tmf3")
        catalog = tmf3_catalog() if cat == "tmf3" else load_catalog(cat) if isinstance(cat, list) else []
        return run_adams(chart, catalog, strict=st.get("strict", False))

    def op_homotopy(self, st):
        page = self.get(st["page"])
        exts = [HiddenExtension(e["stem"], e["from"], e["to"], justification=e.get("justification", "les"))
                for e in st.get("extensions", [])]
        return extract_homotopy(page, exts, stems=_range(st["stems"]))

    def op_model(self, st):
        return divided_power_model(st["label"], tuple(st["window"])).series(_range(st["stems"]))

    def op_cokernel(self, st):
        return cokernel_series(g_lattice_map(), _range(st["stems"]))

    def op_closed_form(self, st):
        return GroupSeries(3, {n: closed_form_G(n) for n in _range(st["stems"])}, "closed form")

    def op_compare(self, st):
        a, b = self.get(st["a"]), self.get(st["b"])
        msgs = compare_series(a, b, _range(st["stems"]))
        for m in msgs:
            self.result.fail(f"{st['a']} vs {st['b']}: {m}")
        return not msgs

    def op_towers(self, st):
        """v0-string table of an E_infinity page: stem -> [[start, length, free]]."""
        page = self.get(st["page"])
        return {n: [list(x) for x in v0_strings(page, n)] for n in _range(st["stems"])}

    def op_expect(self, st):
        value = self.get(st["value"])
        key = st.get("key")
        if key is not None:
            value = value[int(key)] if isinstance(value, (GroupSeries, dict)) else value
        if isinstance(value, Group):
            value = str(value)
        if value != st["equals"]:
            self.result.fail(f"{st['value']}[{key}] = {value!r}, expected {st['equals']!r}")
        return value

    def op_les(self, st):
        h = builtin_hopf(st["algebra"])
        m = _comodule(st["comodule"], h)
        ses = transform(m, "sub", st["sub"])
        les = long_exact_sequence(ses, st["max_s"], st["max_t"])
        for f in les.failures:
            self.result.fail(f"exactness: {f}")
        return les

    def op_witness(self, st):
        """Cocycle = text in ``cocycle`` plus, with ``sphere_class`` [s,t], the
        representative of the unique sphere class there placed on ``on``."""
        h = builtin_hopf(st["algebra"])
        m = _comodule(st["comodule"], h)
        from .ext import CobarComplex

        cx = CobarComplex(m)
        z = parse_chain(cx, st["cocycle"]) if st.get("cocycle") else {}
        if "sphere_class" in st:
            k = builtin_comodule("trivial", h.p).over(h)
            coh = CobarComplex(k).cohomology(*st["sphere_class"])
            if coh.dim != 1:
                raise ScenarioError(f"no unique sphere class at {st['sphere_class']}")
            for (mono, _), c in coh.representatives[0].items():
                key = (mono, st["on"])
                z[key] = (z.get(key, 0) + c) % h.p
        w = find_bounding_chain(h, m, {k: c for k, c in z.items() if c % h.p}, cobar=cx)
        if w.found != st.get("bounds", True) or not w.verify():
            self.result.fail(f"witness {st.get('as', '')}: found={w.found}")
        for term, c in st.get("terms", {}).items():
            if w.found and w.coefficient(term) % h.p != c % h.p:
                self.result.fail(f"coefficient of {term} is {w.coefficient(term)}, expected {c}")
        return w

    def op_skeleta(self, st):
        """Torsion of tmf_* of R3-skeleton(n)/e0 for n in ``n``; checks the
        annihilation bound 3^(3k+2), n = 12k+i, and the exact orders."""
        h = builtin_hopf("A-tmf-p3")
        rows = {}
        for n in _range(st["n"]):
            m = transform(builtin_comodule("R3-skeleton", n), "sub", ["e0"]).quotient
            chart = name_tmf3_sphere(compute_ext_chart(h, m, st["max_s"], st["max_t"]))
            page = run_adams(chart, tmf3_catalog())
            g = extract_homotopy(page, stems=range(0, st["max_t"] - 3))
            k, i = divmod(n, 12)
            top = max((max(g[d].torsion) for d in g.degrees() if g[d].torsion), default=1)
            rows[n] = {"max_order": top, "bound": 3 ** (3 * k + 2), "undetermined": len(page.undetermined)}
            if top > 3 ** (3 * k + 2):
                self.result.fail(f"n={n}: torsion of order {top} exceeds 3^{3 * k + 2}")
            if i >= 5 and top < 3 ** (3 * k + 1):
                self.result.fail(f"n={n}: no element of order 3^{3 * k + 1}")
            if i >= 9 and top != 3 ** (3 * k + 2):
                self.result.fail(f"n={n}: no element of order 3^{3 * k + 2}")
        return rows

    def op_graded(self, st):
        from .specseq import compare_associated_graded

        w = (st["max_s"], st["max_t"])
        gr = compute_ext_chart(builtin_hopf(st["graded"]), None, *w)
        full = compute_ext_chart(builtin_hopf(st["full"]), None, *w)
        base = compute_ext_chart(builtin_hopf(st["base"]), None, *w) if "base" in st else None
        cmp = compare_associated_graded(gr, full, base)
        if not cmp.consistent:
            self.result.fail(f"no consistent differential pattern; first problem at {cmp.first_inconsistent}")
        for d in st.get("require", []):
            if cmp.find(d["page"], tuple(d["source"]), tuple(d["target"])) is None:
                self.result.fail(f"missing d{d['page']} {d['source']} -> {d['target']}")
        return {"consistent": cmp.consistent,
                "differentials": [[d.page, list(d.source), list(d.target), d.rank] for d in cmp.differentials],
                "unverified": sorted(list(b) for b in cmp.unverified)}

    def op_tate(self, st):
        h = builtin_hopf("A-tmf-p3")
        stems = _range(st["stems"])
        charts = {}

        def compute(k_min):
            m = builtin_comodule("tate-R3", k_min, st.get("k_max", 2))
            chart = name_tmf3_sphere(compute_ext_chart(h, m, st["max_s"], st["max_t"]))
            charts[k_min] = chart
            return extract_homotopy(run_adams(chart, tmf3_catalog()), stems=stems)

        series, report = tate_series(stems, st["ladder"], st.get("k_max", 2),
                                     compute if st.get("from_charts", True) else None)
        for chart in charts.values():
            low = sorted((s, t) for (s, t) in chart.dims if (t - s) % 12 == 3 and s < 2 and t - s in stems)
            if low:
                self.result.fail(f"{chart.label}: classes below filtration 2 in stems 3 mod 12: {low}")
        if not report.ok and st.get("require_stable", True):
            self.result.fail("tate ladder: " + report.summary().replace("\n", "; "))
        return {"series": series, "report": report}

    def run(self, st):
        fn = getattr(self, "op_" + st["op"], None)
        if fn is None:
            raise ScenarioError(f"unknown op {st['op']!r}")
        value = fn(st)
        if "as" in st:
            self.env[st["as"]] = value
        return value


def _artifact_text(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, GroupSeries):
        return _series_text(value, value.degrees())
    if isinstance(value, WitnessChain):
        return json.dumps(value.to_json(), indent=1, sort_keys=True) + "\n"
    if hasattr(value, "to_json"):
        return json.dumps(value.to_json(), indent=1, sort_keys=True) + "\n"
    if isinstance(value, dict) and "report" in value:
        return json.dumps({"series": value["series"].to_json(), "report": value["report"].to_json()},
                          indent=1, sort_keys=True) + "\n"
    if hasattr(value, "connecting"):
        cx = value.sub.cobar
        bottom = {f"{t}": [cx.chain_str(value.connecting_cocycle(0, t, i)) for i in range(value.quotient.dim(0, t))]
                  for (s, t) in sorted(value.connecting) if s == 0 and value.quotient.dim(0, t)}
        maps = {f"{s},{t}": m.tolist() for (s, t), m in sorted(value.connecting.items()) if m.size and m.any()}
        return json.dumps({"connecting": maps, "filtration_zero_cocycles": bottom, "exact": value.exact},
                          indent=1, sort_keys=True) + "\n"
    return json.dumps(value, indent=1, sort_keys=True, default=str) + "\n"


def run_scenario(path, out_dir=None, update: bool = False) -> ScenarioResult:
    """Run a scenario; artifacts go to ``out_dir`` if given, and each artifact
    with a golden file next to the scenario is compared byte for byte."""
    path = Path(path)
    try:
        spec = json.loads(path.read_text())
        steps = spec["steps"]
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        raise ScenarioError(f"cannot read scenario {path}: {exc}") from exc
    result = ScenarioResult(spec.get("name", path.stem))
    runner = _Runner(result)
    for st in steps:
        runner.run(st)
    golden_dir = path.parent / "golden"
    for label, fname in sorted(spec.get("artifacts", {}).items()):
        text = _artifact_text(runner.get(label))
        result.artifacts[fname] = text
        if out_dir:
            Path(out_dir).mkdir(parents=True, exist_ok=True)
            (Path(out_dir) / fname).write_text(text)
        golden = golden_dir / fname
        if update:
            golden_dir.mkdir(exist_ok=True)
            golden.write_text(text)
        elif golden.exists():
            if golden.read_text() != text:
                result.fail(f"{fname} differs from its golden file")
            else:
                result.log.append(f"ok {fname} matches golden")
    result.log.insert(0, f"scenario {result.name}: {'PASS' if result.ok else 'FAIL'}")
    return result
