import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cobar_forge.comod import builtin_comodule, transform
from cobar_forge.ext import (
    ChartData,
    CobarComplex,
    EngineDisagreement,
    NamingError,
    WindowOverflow,
    assign_names,
    change_of_rings,
    check_relation,
    cobar_differential,
    compute_ext_chart,
    cup,
    find_bounding_chain,
    juxtapose,
    multiply_classes,
    parse_chain,
)
from cobar_forge.ext import resolution
from cobar_forge.hopf import builtin_hopf


def over(label, alg, *params):
    h = builtin_hopf(alg)
    return h, builtin_comodule(label, *params).over(h)


@pytest.fixture(scope="module")
def a1():
    h, k = over("trivial", "A1-p3", 3)
    chart = compute_ext_chart(h, k, 6, 40)
    return assign_names(chart, [
        {"name": "v0", "s": 1, "t": 1},
        {"name": "a1", "s": 1, "t": 4},
        {"name": "a2", "s": 2, "t": 9},
        {"name": "b", "s": 2, "t": 12},
        {"name": "c6", "s": 3, "t": 15},
    ])


@pytest.fixture(scope="module")
def a1_cobar():
    h, k = over("trivial", "A1-p3", 3)
    chart = compute_ext_chart(h, k, 4, 16, engine="cobar")
    return assign_names(chart, [
        {"name": "v0", "s": 1, "t": 1}, {"name": "a1", "s": 1, "t": 4},
        {"name": "a2", "s": 2, "t": 9}, {"name": "b", "s": 2, "t": 12},
    ])


# -- the complex -------------------------------------------------------------

@pytest.mark.parametrize("alg,label,params,tmax", [
    ("A1-p3", "trivial", (3,), 16),
    ("A1-p3", "hZ", (3,), 18),
    ("A1-p2", "R2", (8,), 9),
])
def test_d_squared_on_bases(alg, label, params, tmax):
    h, m = over(label, alg, *params)
    cx = CobarComplex(m)
    for s in range(3):
        for t in range(tmax + 1):
            for key in cx.basis(s, t):
                assert cx.differential(cx.differential({key: 1})) == {}


@settings(max_examples=100, deadline=None)
@given(st.data())
def test_d_squared_random_chains_r3(data):
    h, m = over("R3", "A-tmf-p3", 25)
    cx = CobarComplex(m)
    s = data.draw(st.integers(0, 2))
    t = data.draw(st.integers(0, 18))
    basis = cx.basis(s, t)
    if not basis:
        return
    coeffs = data.draw(st.lists(st.integers(0, 2), min_size=len(basis), max_size=len(basis)))
    chain = {k: c for k, c in zip(basis, coeffs) if c}
    assert cobar_differential(h, m, cobar_differential(h, m, chain)) == {}


def test_tau0_is_a_cocycle():
    h, k = over("trivial", "A1-p3", 3)
    assert cobar_differential(h, k, {((h.mono("tau0"),), "e0"): 1}) == {}


def test_differential_rejects_foreign_names():
    h, k = over("trivial", "A1-p3", 3)
    with pytest.raises(WindowOverflow):
        cobar_differential(h, k, {((h.mono("tau0"),), "e4"): 1})


@pytest.mark.parametrize("alg,label,params,s,t", [
    ("A1-p3", "trivial", (3,), 4, 24),
    ("A1-p3", "hZ", (3,), 4, 24),
    ("A-tmf-p3", "trivial", (3,), 3, 20),
    ("A1-p2", "trivial", (2,), 5, 14),
    ("A1-p2", "R2", (12,), 4, 12),
    ("A-tmf-p3", "R3", (25,), 3, 18),
])
def test_engines_agree(alg, label, params, s, t):
    h, m = over(label, alg, *params)
    compute_ext_chart(h, m, s, t, engine="both")


def test_engine_disagreement_is_loud(monkeypatch):
    h, k = over("trivial", "A1-p3", 3)
    real = resolution.MinimalResolution.dims

    def broken(self):
        d = real(self)
        d[(1, 4)] = 2
        return d

    monkeypatch.setattr(resolution.MinimalResolution, "dims", broken)
    with pytest.raises(EngineDisagreement):
        compute_ext_chart(h, k, 2, 10, engine="both")


def test_parallel_columns_match_serial():
    h, m = over("hZ", "A1-p3", 3)
    a = compute_ext_chart(h, m, 3, 16, engine="cobar", jobs=1)
    b = compute_ext_chart(h, m, 3, 16, engine="cobar", jobs=2)
    assert a.dims == b.dims


def test_euler_characteristic_per_column():
    h, m = over("hZ", "A1-p3", 3)
    cx = CobarComplex(m)
    for t in range(0, 14):
        # chains with s > t vanish, so the column is complete
        chain = sum((-1) ** s * len(cx.basis(s, t)) for s in range(t + 1))
        ext = sum((-1) ** s * cx.cohomology(s, t).dim for s in range(t + 1))
        assert chain == ext


def test_truncation_window_guard():
    h, m = over("R3", "A-tmf-p3", 25)
    with pytest.raises(WindowOverflow):
        compute_ext_chart(h, m, 2, 30)


def test_truncation_stability():
    h = builtin_hopf("A-tmf-p3")
    small = compute_ext_chart(h, builtin_comodule("R3", 25), 6, 25)
    big = compute_ext_chart(h, builtin_comodule("R3", 37), 6, 37)
    assert {k: v for k, v in big.dims.items() if k[1] <= 25} == small.dims


def test_direct_sum_and_suspension():
    h, m = over("hZ", "A1-p3", 3)
    base = compute_ext_chart(h, m, 5, 30).dims
    shifted = compute_ext_chart(h, transform(m, "suspend", 4), 5, 34).dims
    assert shifted == {(s, t + 4): n for (s, t), n in base.items()}
    both = compute_ext_chart(h, transform(m, "direct_sum", transform(m, "suspend", 4)), 5, 30).dims
    for (s, t) in set(both) | set(base):
        assert both.get((s, t), 0) == base.get((s, t), 0) + shifted.get((s, t), 0)


def test_stem_seven_vanishes_for_tmf_algebra():
    h, k = over("trivial", "A-tmf-p3", 3)
    chart = compute_ext_chart(h, k, 12, 19)
    assert all(chart.dim(s, s + 7) == 0 for s in range(13))


# -- products and names ----------------------------------------------------------

def test_a1_relations(a1):
    assert not multiply_classes(a1, "v0", "v0").is_zero()
    assert check_relation(a1, "v0*a1 = 0")[0]
    assert check_relation(a1, "v0*a2 = 0")[0]
    assert check_relation(a1, "a1*a1 = 0")[0]
    assert check_relation(a1, "a1*a2 = v0*b")[0]


def test_cobar_products_match_resolution_products(a1, a1_cobar):
    for x, y in itertools.product(["v0", "a1", "a2", "b"], repeat=2):
        u, v = a1.cls(x), a1.cls(y)
        if u.s + v.s > 4 or u.t + v.t > 16:
            continue
        assert multiply_classes(a1, x, y).is_zero() == multiply_classes(a1_cobar, x, y).is_zero()
    # bases are chosen independently by the two engines, so only up to a unit
    assert check_relation(a1_cobar, "a1*a2 = v0*b", up_to_unit=True)[0]


def test_graded_commutativity_and_associativity(a1):
    names = ["v0", "a1", "a2", "b"]
    for x, y in itertools.product(names, repeat=2):
        u, v = a1.cls(x), a1.cls(y)
        sign = (-1) ** (u.s * v.s + u.t * v.t)
        assert multiply_classes(a1, x, y) == multiply_classes(a1, y, x).scaled(sign, 3)
    for x, y, z in itertools.product(names, repeat=3):
        cls = [a1.cls(n) for n in (x, y, z)]
        if sum(c.s for c in cls) > a1.max_s:
            continue
        left = multiply_classes(a1, multiply_classes(a1, x, y), a1.cls(z))
        right = multiply_classes(a1, a1.cls(x), multiply_classes(a1, y, z))
        assert left == right


def test_naming_ambiguity_fails():
    h, k = over("trivial", "A1-p2", 2)
    chart = compute_ext_chart(h, k, 4, 12)
    with pytest.raises(NamingError):
        assign_names(chart, [{"name": "x", "s": 0, "t": 5}])
    with pytest.raises(NamingError):
        assign_names(chart, [{"name": "h0", "s": 1, "t": 1}, {"relation": "h0*h0 = 0"}])


def test_product_out_of_window(a1):
    with pytest.raises(WindowOverflow):
        multiply_classes(a1, "v0", multiply_classes(a1, "c6", "c6"))


def test_hz_chart_is_polynomial_in_v0_and_c4():
    h, m = over("hZ", "A-tmf-p3", 3)
    chart = compute_ext_chart(h, m, 10, 40)
    want = {(a + b, a + 9 * b): 1 for a in range(11) for b in range(11)
            if a + b <= 10 and a + 9 * b <= 40}
    assert chart.dims == want
    assign_names(chart.sphere, [{"name": "v0", "s": 1, "t": 1}])
    assign_names(chart, [{"name": "c4t", "s": 1, "t": 9}, {"name": "c4", "as": "v0*c4t"}])
    assert chart.names["c4"].t == 10


def test_delta_is_c4_cubed():
    h, m = over("hZ", "A-tmf-p3", 3)
    k = builtin_comodule("trivial", 3).over(h)
    delta = CobarComplex(k).cohomology(3, 27).representatives[0]
    c4 = CobarComplex(m).cohomology(1, 9).representatives[0]
    cube = cup(m, c4, cup(m, c4, c4))
    cx, to_c = change_of_rings(h, m, ["xi1", "tau1"], {"i0": 1})
    image = {(mono, "i0"): c for (mono, _), c in delta.items()}
    a = cx.coordinates(to_c(cube), 3, 27)
    b = cx.coordinates(to_c(image), 3, 27)
    assert a.tolist() == b.tolist() and any(a)


def test_chart_json():
    h, k = over("trivial", "A1-p3", 3)
    chart = assign_names(compute_ext_chart(h, k, 3, 12), [{"name": "v0", "s": 1, "t": 1}])
    data = chart.to_json()
    assert {"s": 1, "t": 1, "index": 0, "name": "v0"} in data["classes"]
    back = ChartData.from_json(data)
    assert back.max_t == 12 and len(back.classes) == sum(chart.dims.values())
    with pytest.raises(ValueError):
        ChartData.from_json({"prime": 3})


# -- witnesses ---------------------------------------------------------------------

def _c6_on(m, name):
    k = builtin_comodule("trivial", 3).over(m.algebra)
    rep = CobarComplex(k).cohomology(3, 15).representatives[0]
    return {(mono, name): c for (mono, _), c in rep.items()}


def test_x16_over_hz():
    h, m = over("hZ", "A1-p3", 3)
    w = find_bounding_chain(h, m, _c6_on(m, "i0"))
    assert w.found and w.verify()
    assert w.coefficient("[tau0|tau0]i13") != 0


def test_r3_hidden_extension_sign():
    h, m = over("R3", "A1-p3", 25)
    v0_cubed = {((h.mono("tau0"),) * 3, "e12"): 1}
    found = []
    for eps in (1, 2):
        z = _c6_on(m, "e0")
        for key, c in v0_cubed.items():
            z[key] = (z.get(key, 0) + eps * c) % 3
        w = find_bounding_chain(h, m, z)
        assert w.verify()
        found.append(w.found)
    assert found.count(True) == 1


def test_v0_is_not_a_boundary():
    h, k = over("trivial", "A1-p3", 3)
    w = find_bounding_chain(h, k, {((h.mono("tau0"),), "e0"): 1})
    assert not w.found and w.verify()
    assert w.certificate["rank_augmented"] == w.certificate["rank_d"] + 1


def test_x7_over_r2():
    h, m = over("R2", "A1-p2", 12)
    k = builtin_comodule("trivial", 2).over(h)
    rep = CobarComplex(k).cohomology(3, 7).representatives[0]
    z = {(mono, "e0"): c for (mono, _), c in rep.items()}
    assert not find_bounding_chain(h, m, z).found
    z[((h.mono("xi1"),) * 3, "e4")] = 1
    w = find_bounding_chain(h, m, z)
    assert w.found and w.verify()
    assert w.coefficient("[xi1|xi1]e5") == 1
    assert w.to_json()["chain"]


def test_bounding_chain_rejects_non_cocycle():
    h, k = over("trivial", "A1-p3", 3)
    with pytest.raises(ValueError):
        find_bounding_chain(h, k, {((h.mono("tau1"),), "e0"): 1})


def test_parse_chain_roundtrip():
    h, m = over("hZ", "A1-p3", 3)
    cx = CobarComplex(m)
    chain = parse_chain(cx, "[tau0|tau0]i13 - [tau1|xi1 tau0]i5 + 2[xi1]i4")
    assert parse_chain(cx, cx.chain_str(chain)) == chain


def test_sphere_action_by_juxtaposition():
    h, m = over("hZ", "A1-p3", 3)
    cx = CobarComplex(m)
    z = juxtapose({((h.mono("tau0"),), "e0"): 1}, {((), "i0"): 1}, 3)
    assert cx.differential(z) == {} and not cx.is_coboundary(z, 1, 1)
