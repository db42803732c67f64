import json

import numpy as np
import pytest

from cobar_forge.comod import builtin_comodule, transform
from cobar_forge.exactlin import rank_mod_p
from cobar_forge.ext import ExtClass, assign_names, compute_ext_chart, evaluate
from cobar_forge.hopf import builtin_hopf
from cobar_forge.lattice import divided_power_model
from cobar_forge.specseq import (
    HiddenExtension,
    InconsistentInput,
    InputDifferential,
    SpecSeqError,
    UndeterminedDifferential,
    compare_associated_graded,
    extract_homotopy,
    load_catalog,
    long_exact_sequence,
    name_tmf3_sphere,
    run_adams,
    tmf3_catalog,
    v0_strings,
)

TMF = builtin_hopf("A-tmf-p3")


@pytest.fixture(scope="module")
def sphere():
    chart = compute_ext_chart(TMF, None, 11, 70)
    name_tmf3_sphere(chart)
    return chart


@pytest.fixture(scope="module")
def sphere_page(sphere):
    return run_adams(sphere, tmf3_catalog())


@pytest.fixture(scope="module")
def skel4(sphere):
    chart = compute_ext_chart(TMF, builtin_comodule("R3-skeleton", 4), 11, 70)
    name_tmf3_sphere(chart)
    assign_names(chart, [{"name": "e0", "s": 0, "t": 0}, {"name": "[alphae4]", "s": 1, "t": 8}])
    return chart


@pytest.fixture(scope="module")
def skel4_page(skel4):
    return run_adams(skel4, tmf3_catalog())


# -- Adams differentials ----------------------------------------------------


def test_sphere_differentials_propagate(sphere, sphere_page):
    # d2(Delta^2) = +-2 Delta alpha beta^2 is not an input; the sign depends
    # on the commutation convention for Ext products
    y, forced = sphere_page.d(2, evaluate(sphere, "Delta*Delta"))
    assert forced
    assert any(sphere_page.equal_mod_boundaries(y, evaluate(sphere, f"{c}*Delta*alpha*beta^2"), 2)
               for c in (1, 2))
    assert not y.is_zero()
    assert sphere_page.undetermined == []


def test_skeleton_differentials(skel4, skel4_page):
    y, forced = skel4_page.d(2, evaluate(skel4, "Delta*[alphae4]"))
    assert forced and skel4_page.equal_mod_boundaries(y, evaluate(skel4, "beta^3*e0"), 2)
    y, forced = skel4_page.d(3, evaluate(skel4, "Delta^2*e0"))
    assert forced and skel4_page.equal_mod_boundaries(y, evaluate(skel4, "beta^4*[alphae4]"), 3)


def test_module_relation_used(skel4):
    # the relation that drives the first skeleton differential
    assert evaluate(skel4, "alpha*[alphae4]") == evaluate(skel4, "beta*e0")


def test_no_inputs_means_collapse(skel4):
    page = run_adams(skel4, [])
    assert page.differentials == []
    assert page.dims() == skel4.dims


def test_page_ranks(skel4_page):
    p = skel4_page.p
    for before, after in zip(skel4_page.history, skel4_page.history[1:]):
        r = before.r
        for b, n in ((b, len(c)) for b, c in before.C.items()):
            out = before.D.get(b)
            src = (b[0] - r, b[1] - r + 1)
            inc = before.D.get(src)
            r_out = rank_mod_p(out, p) if out is not None and out.size else 0
            r_in = rank_mod_p(inc, p) if inc is not None and inc.size else 0
            assert len(after.C.get(b, ())) == n - r_out - r_in


def test_linearity_over_permanent_classes(skel4, skel4_page):
    # beta and alpha are permanent; d_r(x.m) = +-x.d_r(m) on the whole chart
    p = skel4.p
    for name in ("alpha", "beta"):
        x = skel4.sphere.cls(name)
        for d in skel4_page.differentials:
            s, t = d.source
            if not skel4.in_window(s + x.s + d.page, t + x.t + d.page - 1):
                continue
            src = skel4.act(x, ExtClass(s, t, d.source_rep, skel4.label))
            tgt = skel4.act(x, ExtClass(*d.target, d.target_rep, skel4.label))
            if not skel4_page.survives(src, d.page):
                continue
            y, _ = skel4_page.d(d.page, src)
            ok = skel4_page.equal_mod_boundaries(y, tgt, d.page) or skel4_page.equal_mod_boundaries(
                y, tgt.scaled(-1, p), d.page)
            assert ok, (name, d.source)


def test_square_zero(skel4_page):
    for pg in skel4_page.history:
        for b, mat in pg.D.items():
            tb = (b[0] + pg.r, b[1] + pg.r - 1)
            nxt = pg.D.get(tb)
            if mat.size and nxt is not None and nxt.size:
                assert not np.any((mat @ nxt) % 3)


def test_inconsistent_inputs(sphere):
    with pytest.raises(InconsistentInput):
        run_adams(sphere, [InputDifferential("Delta", 2, "beta^2")])
    with pytest.raises(InconsistentInput):
        # Leibniz forces d2(beta*Delta) != 0
        run_adams(sphere, tmf3_catalog() + [InputDifferential("beta*Delta", 2, None)])
    with pytest.raises(InconsistentInput):
        run_adams(sphere, [InputDifferential("Delta", 2, "alpha*beta^2", bidegree=(3, 26))])


def test_strict_mode_rejects_guesses():
    m = transform(builtin_comodule("R3-skeleton", 8), "sub", ["e0"]).quotient
    chart = name_tmf3_sphere(compute_ext_chart(TMF, m, 16, 60))
    page = run_adams(chart, tmf3_catalog())
    assert page.undetermined
    with pytest.raises(UndeterminedDifferential):
        run_adams(chart, tmf3_catalog(), strict=True)


def test_catalog_json(tmp_path):
    path = tmp_path / "cat.json"
    path.write_text(json.dumps([{"name": "Delta", "page": 2, "source": [3, 27], "target_name": "alpha*beta^2"}]))
    (inp,) = load_catalog(path)
    assert (inp.source, inp.page, inp.target, inp.bidegree) == ("Delta", 2, "alpha*beta^2", (3, 27))


def test_page_json(skel4_page):
    data = skel4_page.to_json()
    assert {d["page"] for d in data["differentials"]} == {2, 3}
    json.dumps(data)


# -- homotopy ---------------------------------------------------------------


def test_tmf_homotopy(sphere_page):
    g = extract_homotopy(sphere_page, stems=range(0, 41))
    torsion = {n for n in range(41) if g[n].torsion}
    assert torsion == {3, 10, 13, 20, 27, 30, 37, 40}
    assert all(g[n].torsion == (3,) for n in torsion)
    assert [g[n].free for n in (0, 8, 12, 16, 20, 24)] == [1, 1, 1, 1, 1, 2]
    assert g[7].is_zero()


def test_torsion_count_matches_dots(sphere_page):
    g = extract_homotopy(sphere_page, stems=range(0, 41))
    for n in range(41):
        if g[n].torsion and not g[n].free:
            dots = sum(sphere_page.dim(s, n + s) for s in range(12))
            assert np.prod(g[n].torsion) == 3 ** dots


def test_r3_homotopy_matches_lattice():
    chart = name_tmf3_sphere(compute_ext_chart(TMF, builtin_comodule("R3", 37), 16, 34))
    page = run_adams(chart, tmf3_catalog())
    g = extract_homotopy(page, stems=range(0, 25))
    model = divided_power_model("tmf-R3", (0, 24))
    for n in range(25):
        assert g[n].free == model.rank(n) and not g[n].torsion, n


def test_unbacked_extension_rejected(sphere_page):
    with pytest.raises(SpecSeqError):
        extract_homotopy(sphere_page, [HiddenExtension(3, 1, 2)], stems=[3])


def test_extension_joins_strings():
    m = transform(builtin_comodule("R3-skeleton", 13), "sub", ["e0"]).quotient
    chart = name_tmf3_sphere(compute_ext_chart(TMF, m, 16, 60))
    page = run_adams(chart, tmf3_catalog())
    for n in range(4, 40):
        strings = [x for x in v0_strings(page, n) if not x[2]]
        pairs = [(a, b) for a in strings for b in strings if a[0] + a[1] <= b[0]]
        if pairs:
            a, b = pairs[0]
            break
    else:
        pytest.skip("no pair of finite strings")
    base = extract_homotopy(page, stems=[n])[n]
    merged = extract_homotopy(page, [HiddenExtension(n, a[0] + a[1] - 1, b[0], justification="les")],
                              stems=[n])[n]
    assert merged.torsion_order == base.torsion_order
    assert max(merged.torsion) == 3 ** (a[1] + b[1])


# -- long exact sequences ---------------------------------------------------


@pytest.fixture(scope="module")
def skeleton_les():
    m = builtin_comodule("R3-skeleton", 9)
    ses = transform(m, "quotient", [n for n in m.names if m.deg[n] == 9])
    return long_exact_sequence(ses, 3, 16)


def test_les_exact(skeleton_les):
    assert skeleton_les.exact, skeleton_les.failures
    assert skeleton_les.unverified


def test_connecting_on_top_cell(skeleton_les):
    les = skeleton_les
    e9 = les.quotient.basis_class(0, 9, 0)
    image = les.connect(e9)
    assert not image.is_zero()
    z = les.connecting_cocycle(0, 9, 0)
    tau0 = TMF.mono({"tau0": 1})
    assert z[((tau0,), "e8")] % 3 in (1, 2)
    # the rest lives on the bottom cells and is the c4-tilde part
    assert {x for (_, x) in z} <= {"e0", "e4", "e5", "e8"}


def test_hz_les():
    hz = builtin_comodule("hZ", 3)
    ses = transform(hz, "sub", ["i0", "i4", "i8"])
    les = long_exact_sequence(ses, 2, 14)
    assert les.exact
    assert np.any(les.connecting[(0, 5)] % 3)


def test_bottom_cell_les():
    r3 = builtin_comodule("R3-skeleton", 12)
    les = long_exact_sequence(transform(r3, "sub", ["e0"]), 2, 12)
    assert les.exact
    assert les.inclusion[(0, 0)].tolist() == [[1]]


# -- associated graded ------------------------------------------------------


@pytest.fixture(scope="module")
def graded():
    gr = compute_ext_chart(builtin_hopf("GrA-tmf-p3"), None, 6, 40)
    full = compute_ext_chart(TMF, None, 6, 40)
    base = compute_ext_chart(builtin_hopf("A1-p3"), None, 6, 40)
    return gr, full, base, compare_associated_graded(gr, full, base)


def test_graded_consistent(graded):
    *_, cmp = graded
    assert cmp.consistent and cmp.gr_mismatch == []


def test_graded_d1(graded):
    *_, cmp = graded
    assert cmp.find(1, (1, 9, 1), (2, 9, 0)) is not None


def test_graded_d2(graded):
    *_, cmp = graded
    assert cmp.find(2, (4, 27, 2), (5, 27, 0)) is not None
    assert cmp.find(2, (3, 19, 2), (4, 19, 0)) is not None


def test_graded_stem7(graded):
    gr, _, _, cmp = graded
    assert gr.stem_dims().get(7)
    assert cmp.remaining_in_stem(7) == 0


def test_graded_identical(graded):
    _, full, _, _ = graded
    cmp = compare_associated_graded(full, full)
    assert cmp.differentials == [] and cmp.consistent
