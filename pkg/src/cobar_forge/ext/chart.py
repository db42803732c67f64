"""Ext charts: dimensions, chosen bases, products, names and witnesses."""

from __future__ import annotations

import json
import os
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from ..comod import Comodule
from ..hopf import HopfPresentation, builtin_hopf
from .cobar import (
    CobarCohomology,
    CobarComplex,
    chain_from_json,
    chain_to_json,
    cup,
    juxtapose,
    map_chain,
)
from .resolution import MinimalResolution

ENGINES = ("cobar", "minimal_resolution", "both")


class ExtError(Exception):
    pass


class WindowOverflow(ExtError):
    pass


class EngineDisagreement(ExtError):
    pass


class NamingError(ExtError):
    pass


@dataclass(frozen=True)
class ExtClass:
    """Element of Ext^(s,t), as coordinates in the chart's basis there."""

    s: int
    t: int
    coords: tuple
    owner: str = ""

    @property
    def stem(self) -> int:
        return self.t - self.s

    def is_zero(self) -> bool:
        return not any(self.coords)

    def scaled(self, c: int, p: int) -> "ExtClass":
        return ExtClass(self.s, self.t, tuple(c * x % p for x in self.coords), self.owner)


def _trivial(h: HopfPresentation) -> Comodule:
    return Comodule(h, [("e0", 0)], {}, label=f"trivial({h.p})")


class ExtChart:
    """Bigraded Ext_A(F_p, M) in the window s <= max_s, t <= max_t."""

    def __init__(self, h: HopfPresentation, m: Comodule, max_s: int, max_t: int, engine: str,
                 dims: Mapping, resolution: MinimalResolution | None = None,
                 cobar: CobarComplex | None = None):
        self.algebra = h
        self.comodule = m
        self.p = h.p
        self.max_s, self.max_t = max_s, max_t
        self.engine = engine
        self.dims = {k: v for k, v in dims.items() if v}
        self._res = resolution
        self._cobar = cobar
        self._sphere: ExtChart | None = None
        self._prod_cache: dict = {}
        self.names: dict = {}
        self.products: list = []
        self.is_sphere = len(m) == 1 and m.deg[m.names[0]] == 0 and not m.reduced_coaction(m.names[0])

    # -- basic access --------------------------------------------------------
    @property
    def label(self) -> str:
        return self.comodule.label

    def dim(self, s: int, t: int) -> int:
        return self.dims.get((s, t), 0)

    def in_window(self, s: int, t: int) -> bool:
        return 0 <= s <= self.max_s and t <= self.max_t

    def basis_class(self, s: int, t: int, i: int) -> ExtClass:
        n = self.dim(s, t)
        if not 0 <= i < n:
            raise IndexError(f"Ext^({s},{t}) has dimension {n}")
        return ExtClass(s, t, tuple(int(j == i) for j in range(n)), self.label)

    def zero(self, s: int, t: int) -> ExtClass:
        return ExtClass(s, t, (0,) * self.dim(s, t), self.label)

    def classes(self) -> list[tuple[int, int, int]]:
        return [(s, t, i) for (s, t), n in sorted(self.dims.items()) for i in range(n)]

    def stem_dims(self) -> dict:
        out: dict = {}
        for (s, t), n in self.dims.items():
            out.setdefault(t - s, {})[s] = n
        return out

    def cls(self, name: str) -> ExtClass:
        if name in self.names:
            return self.names[name]
        if not self.is_sphere and name in self.sphere.names:
            return self.sphere.names[name]
        raise KeyError(f"no class named {name!r}")

    def name_of(self, c: ExtClass) -> str | None:
        for n, v in self.names.items():
            if v == c:
                return n
        return None

    @property
    def sphere(self) -> "ExtChart":
        if self.is_sphere:
            return self
        if self._sphere is None:
            eng = "cobar" if self.engine == "cobar" else "minimal_resolution"
            # at least the module window, so sphere names mean the same in every chart
            lo = min(0, min(self.comodule.deg.values(), default=0))
            self._sphere = compute_ext_chart(self.algebra, _trivial(self.algebra), self.max_s,
                                             self.max_t - lo, engine=eng)
        return self._sphere

    # -- cobar representatives ---------------------------------------------
    @property
    def cobar(self) -> CobarComplex:
        if self._cobar is None:
            self._cobar = CobarComplex(self.comodule)
        return self._cobar

    def representative(self, c: ExtClass) -> dict:
        """A cobar cocycle representing ``c`` (cobar basis of the chart)."""
        if self.engine == "minimal_resolution":
            raise ExtError("representatives need the cobar engine")
        reps = self.cobar.cohomology(c.s, c.t).representatives
        out: dict = {}
        for coeff, r in zip(c.coords, reps):
            for k, v in r.items():
                out[k] = (out.get(k, 0) + coeff * v) % self.p
        return {k: v for k, v in out.items() if v}

    def class_of(self, z: Mapping, s: int, t: int) -> ExtClass:
        coords = self.cobar.coordinates(z, s, t)
        return ExtClass(s, t, tuple(int(x) for x in coords), self.label)

    # -- products ------------------------------------------------------------
    def _sphere_products(self, s: int, gen: int) -> dict:
        key = (s, gen)
        if key not in self._prod_cache:
            self._prod_cache[key] = self._res.products_with_sphere(s, gen, self.sphere._res)
        return self._prod_cache[key]

    def act(self, a: ExtClass, x: ExtClass) -> ExtClass:
        """Product of a sphere class ``a`` with a class ``x`` of this chart."""
        s, t = a.s + x.s, a.t + x.t
        if not self.in_window(s, t):
            raise WindowOverflow(f"product lands at ({s},{t}) outside the window")
        p = self.p
        if self.engine == "cobar":
            z = juxtapose(self.sphere.representative(a), self.representative(x), p)
            if not z:
                return self.zero(s, t)
            return self.class_of(z, s, t)
        out = np.zeros(self.dim(s, t), dtype=np.int64)
        if not out.size:
            return self.zero(s, t)
        tgt = self._res.ext_index(s, t)
        sph_gens = self.sphere._res.generators(a.s, a.t)
        for j, g in enumerate(self._res.generators(x.s, x.t)):
            cx = x.coords[j]
            if not cx:
                continue
            prods = self._sphere_products(x.s, g)
            for i, q in enumerate(sph_gens):
                ca = a.coords[i]
                if not ca:
                    continue
                for h, c in prods.get((a.s, q), {}).items():
                    out[tgt[h]] += ca * cx * c
        return ExtClass(s, t, tuple(int(v) % p for v in out), self.label)

    def cup(self, x: ExtClass, y: ExtClass) -> ExtClass:
        """Product of two classes of a comodule algebra (cobar engine)."""
        s, t = x.s + y.s, x.t + y.t
        if not self.in_window(s, t):
            raise WindowOverflow(f"product lands at ({s},{t}) outside the window")
        z = cup(self.comodule, self.representative(x), self.representative(y))
        return self.class_of(z, s, t) if z else self.zero(s, t)

    # -- serialization ---------------------------------------------------------
    def to_json(self) -> dict:
        named = {(c.s, c.t, c.coords.index(1)): n for n, c in self.names.items()
                 if sum(1 for v in c.coords if v) == 1 and 1 in c.coords}
        classes = []
        for s, t, i in self.classes():
            entry = {"s": s, "t": t, "index": i}
            if (s, t, i) in named:
                entry["name"] = named[(s, t, i)]
            classes.append(entry)
        return {
            "prime": self.p,
            "algebra": self.algebra.label,
            "comodule": self.label,
            "window": {"max_s": self.max_s, "max_t": self.max_t},
            "engine": self.engine,
            "classes": classes,
            "products": [list(x) for x in self.products],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=1, sort_keys=True)

    def __repr__(self):
        return (f"ExtChart({self.algebra.label}, {self.label}, s<={self.max_s}, "
                f"t<={self.max_t}, {sum(self.dims.values())} classes)")


@dataclass
class ChartData:
    """A chart read back from JSON (no engine attached); enough to render."""

    prime: int
    algebra: str
    comodule: str
    max_s: int
    max_t: int
    classes: list
    products: list = field(default_factory=list)

    @classmethod
    def from_json(cls, data: Mapping) -> "ChartData":
        try:
            w = data["window"]
            classes = [dict(c) for c in data["classes"]]
            for c in classes:
                int(c["s"]), int(c["t"]), int(c["index"])
            return cls(int(data["prime"]), str(data["algebra"]), str(data["comodule"]),
                       int(w["max_s"]), int(w["max_t"]), classes, list(data.get("products", [])))
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"malformed chart: {exc}") from exc

    @classmethod
    def from_chart(cls, chart: ExtChart) -> "ChartData":
        return cls.from_json(chart.to_json())


# ---------------------------------------------------------------------------
# computing charts


def _cobar_column(args) -> dict:
    alg_json, com_json, max_s, t, product = args
    h = HopfPresentation.from_json(alg_json)
    m = Comodule.from_json(com_json, h)
    cx = CobarComplex(m)
    out = {}
    for s in range(max_s + 1):
        coh = cx.cohomology(s, t)
        if coh.dim:
            out[s] = [chain_to_json(cx, r) for r in coh.representatives]
    return out


def _cobar_dims(cx: CobarComplex, max_s: int, max_t: int, jobs: int) -> dict:
    m = cx.m
    lo = min(m.deg.values()) if m.names else 0
    ts = list(range(lo, max_t + 1))
    dims: dict = {}
    if jobs > 1 and len(ts) > 1:
        args = [(cx.h.to_json(), m.to_json(), max_s, t, None) for t in ts]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_cobar_column, args))
        for t, res in zip(ts, results):
            for s, reps in res.items():
                dims[(s, t)] = len(reps)
                # seed the local cache so representatives agree with the workers
                chains = [chain_from_json(cx, r) for r in reps]
                cx._coh[(s, t)] = CobarCohomology(s, t, len(chains), chains, -1, -1)
        return dims
    for t in ts:
        for s in range(0, max_s + 1):
            if t - lo < s:
                break
            n = cx.cohomology(s, t).dim
            if n:
                dims[(s, t)] = n
    return dims


def default_jobs() -> int:
    try:
        return max(1, int(os.environ.get("COBAR_FORGE_JOBS", "1")))
    except ValueError:
        return 1


def compute_ext_chart(h: HopfPresentation, m: Comodule | None, max_s: int, max_t: int,
                      engine: str = "minimal_resolution", jobs: int | None = None) -> ExtChart:
    """Ext_A(F_p, M) for s <= max_s and t <= max_t (M = F_p when m is None).

    ``engine='both'`` runs the cobar complex and the minimal resolution and
    raises ``EngineDisagreement`` if any dimension differs.
    """
    if engine not in ENGINES:
        raise ValueError(f"engine must be one of {ENGINES}")
    if m is None:
        m = _trivial(h)
    if m.algebra.label != h.label:
        m = m.over(h)
    h = m.algebra
    if m.truncated and max_t > m.window[1]:
        raise WindowOverflow(f"{m.label} is only known through degree {m.window[1]} < {max_t}")
    jobs = default_jobs() if jobs is None else max(1, jobs)
    res = cx = None
    dims: dict = {}
    if engine in ("minimal_resolution", "both"):
        res = MinimalResolution(m, max_s, max_t).compute()
        dims = res.dims()
    if engine in ("cobar", "both"):
        cx = CobarComplex(m)
        cdims = _cobar_dims(cx, max_s, max_t, jobs)
        if engine == "both":
            keys = set(cdims) | set(dims)
            bad = sorted(k for k in keys if cdims.get(k, 0) != dims.get(k, 0))
            if bad:
                s, t = bad[0]
                raise EngineDisagreement(
                    f"engines disagree at (s,t)=({s},{t}): cobar {cdims.get((s, t), 0)}, "
                    f"resolution {dims.get((s, t), 0)}")
        else:
            dims = cdims
    return ExtChart(h, m, max_s, max_t, engine, dims, res, cx)


# ---------------------------------------------------------------------------
# products and names


def multiply_classes(chart: ExtChart, a: ExtClass | str, b: ExtClass | str) -> ExtClass:
    """Product a.b. A sphere class acts on a class of ``chart``; two classes of
    a comodule algebra multiply by the cobar cup product."""
    a = chart.cls(a) if isinstance(a, str) else a
    b = chart.cls(b) if isinstance(b, str) else b
    sphere_label = chart.sphere.label
    if a.owner == sphere_label or chart.is_sphere:
        if b.owner == sphere_label and not chart.is_sphere:
            return chart.sphere.act(a, b)
        return chart.act(a, b)
    if b.owner == sphere_label:
        # graded commutativity: b.a = (-1)^(s s' + t t') a.b
        sign = -1 if (a.s * b.s + a.t * b.t) % 2 and chart.p != 2 else 1
        return chart.act(b, a).scaled(sign, chart.p)
    if chart.comodule.product is None:
        raise ExtError(f"{chart.label} is not a comodule algebra")
    return chart.cup(a, b)


_TOKEN = re.compile(r"^([A-Za-z_\[][\w~\[\]']*)(?:\^(\d+))?$")


def evaluate(chart: ExtChart, expr: str) -> ExtClass:
    """Evaluate monomials such as ``"2*a*b^3*e0"`` right to left."""
    coeff = 1
    names: list[str] = []
    for tok in (x.strip() for x in expr.split("*")):
        if re.fullmatch(r"-?\d+", tok):
            coeff *= int(tok)
            continue
        if tok.startswith("-"):
            coeff, tok = -coeff, tok[1:]
        m = _TOKEN.match(tok)
        if not m:
            raise NamingError(f"cannot parse {expr!r}")
        names += [m.group(1)] * int(m.group(2) or 1)
    if not names:
        raise NamingError(f"no class in {expr!r}")
    value = chart.cls(names[-1])
    for n in reversed(names[:-1]):
        value = multiply_classes(chart, chart.cls(n), value)
    return value.scaled(coeff, chart.p)


def check_relation(chart: ExtChart, relation: str, up_to_unit: bool = False) -> tuple[bool, int | None]:
    """Check ``"lhs = rhs"`` (either side may be ``0``). Returns (ok, unit)
    where unit u satisfies lhs = u * rhs when ``up_to_unit``."""
    lhs, _, rhs = relation.partition("=")
    sides = []
    for side in (lhs.strip(), rhs.strip()):
        sides.append(None if side == "0" else evaluate(chart, side))
    l, r = sides
    if l is None and r is None:
        return True, 1
    if l is None or r is None:
        v = r if l is None else l
        return v.is_zero(), 1
    if (l.s, l.t) != (r.s, r.t):
        raise NamingError(f"sides of {relation!r} live in different bidegrees")
    if l.coords == r.coords:
        return True, 1
    if up_to_unit and not l.is_zero() and not r.is_zero():
        for u in range(2, chart.p):
            if r.scaled(u, chart.p).coords == l.coords:
                return True, u
    return False, None


def assign_names(chart: ExtChart, table: Sequence[Mapping] | Mapping) -> ExtChart:
    """Attach names from a table of entries

        {"name": "v0", "s": 1, "t": 1}              -- unique class there
        {"name": "c4", "as": "v0*c4~"}              -- defined by a product
        {"relation": "a1*a2 = v0*b", "up_to_unit": false}

    Entries are processed in order; a bidegree whose dimension is not 1 is a
    naming ambiguity and fails. Relations are re-verified by products.
    """
    if isinstance(table, Mapping):
        table = table.get("entries", [])
    for entry in table:
        if "relation" in entry:
            ok, unit = check_relation(chart, entry["relation"], bool(entry.get("up_to_unit")))
            if not ok:
                raise NamingError(f"relation fails: {entry['relation']}")
            chart.products.append([entry["relation"], "verified" if unit == 1 else f"unit {unit}"])
            continue
        name = entry["name"]
        if "as" in entry:
            value = evaluate(chart, entry["as"])
            if value.is_zero():
                raise NamingError(f"{name} = {entry['as']} is zero")
        else:
            s, t = int(entry["s"]), int(entry["t"])
            n = chart.dim(s, t)
            if n != int(entry.get("dim", 1)) or n != 1:
                raise NamingError(f"cannot name {name}: Ext^({s},{t}) has dimension {n}")
            value = chart.basis_class(s, t, 0).scaled(int(entry.get("scale", 1)), chart.p)
        if name in chart.names and chart.names[name] != value:
            raise NamingError(f"name {name} already used")
        chart.names[name] = value
    return chart


# ---------------------------------------------------------------------------
# cobar differential and witnesses


def cobar_differential(h: HopfPresentation, m: Comodule, chain: Mapping) -> dict:
    if m.algebra.label != h.label:
        m = m.over(h)
    top = m.window[1]
    for (monos, x), _ in chain.items():
        if x not in m.deg:
            raise WindowOverflow(f"chain mentions {x}, not in {m.label}")
        if m.truncated and m.deg[x] > top:
            raise WindowOverflow(f"{x} lies outside the window of {m.label}")
    return CobarComplex(m).differential(chain)


@dataclass
class WitnessChain:
    """z together with x satisfying d(x) = z, or rank data proving none exists."""

    algebra: str
    comodule: str
    s: int
    t: int
    target: dict
    chain: dict | None
    certificate: dict
    _cx: CobarComplex | None = field(default=None, repr=False, compare=False)

    @property
    def found(self) -> bool:
        return self.chain is not None

    def verify(self) -> bool:
        if self.chain is None:
            return self.certificate["rank_augmented"] > self.certificate["rank_d"]
        return self._cx.differential(self.chain) == {k: v for k, v in self.target.items() if v}

    def coefficient(self, term: str) -> int:
        """Coefficient of a term written like ``[tau0|tau0]i13`` in the chain."""
        if self.chain is None:
            return 0
        for k, c in self.chain.items():
            if self._cx.term_str(k) == term:
                return c
        return 0

    def to_json(self) -> dict:
        return {
            "algebra": self.algebra,
            "comodule": self.comodule,
            "s": self.s,
            "t": self.t,
            "target": chain_to_json(self._cx, self.target),
            "chain": None if self.chain is None else chain_to_json(self._cx, self.chain),
            "certificate": self.certificate,
        }

    def __str__(self):
        cx = self._cx
        if self.chain is None:
            return f"no bounding chain for {cx.chain_str(self.target)}: {self.certificate}"
        return f"d({cx.chain_str(self.chain)}) = {cx.chain_str(self.target)}"


def find_bounding_chain(h: HopfPresentation, m: Comodule, z: Mapping,
                        cobar: CobarComplex | None = None) -> WitnessChain:
    """Solve d(x) = z in the cobar complex, or certify that z is not a boundary."""
    if m.algebra.label != h.label:
        m = m.over(h)
    cx = cobar or CobarComplex(m)
    z = {k: v % m.p for k, v in z.items() if v % m.p}
    if not z:
        return WitnessChain(h.label, m.label, 0, 0, {}, {}, {"trivial": True}, cx)
    degs = {(len(k[0]), cx.term_degree(k)) for k in z}
    if len(degs) != 1:
        raise ValueError("target is not homogeneous")
    s, t = degs.pop()
    if cx.differential(z):
        raise ValueError("target is not a cocycle")
    if s == 0:
        return WitnessChain(h.label, m.label, s, t, z, None,
                            {"rank_d": 0, "rank_augmented": 1, "source_dim": 0,
                             "target_dim": len(cx.basis(0, t))}, cx)
    x, cert = cx.bounding_chain(z, s, t)
    return WitnessChain(h.label, m.label, s, t, z, x, cert, cx)


def parse_chain(cx: CobarComplex, text: str) -> dict:
    """Parse ``"[tau0|tau0]i13 - 2[xi1]e4"`` into a chain."""
    out: dict = {}
    for coeff, body, x in re.findall(r"([+-]?\s*\d*)\s*\[([^\]]*)\]\s*([\w']+)", text):
        c = coeff.replace(" ", "")
        c = -1 if c == "-" else (1 if c in ("", "+") else int(c))
        monos = tuple(cx.h.mono(a) for a in body.split("|")) if body.strip() else ()
        key = (monos, x)
        out[key] = (out.get(key, 0) + c) % cx.p
    return {k: v for k, v in out.items() if v}


def change_of_rings(h: HopfPresentation, m: Comodule, kill: Iterable[str],
                    augmentation: Mapping[str, int]):
    """For M = A box_C F_p with C = A/(kill), return the cobar complex of C
    with trivial coefficients and the chain map C(A; M) -> C(C; F_p) that
    induces Ext_A(F_p, M) = Ext_C(F_p, F_p).

    ``augmentation`` is the comodule map M -> F_p on basis names.
    """
    from ..hopf import project_monomial, quotient_hopf

    kill = list(kill)
    if m.algebra.label != h.label:
        m = m.over(h)
    c = quotient_hopf(m.algebra, kill, label=f"{h.label}/({','.join(kill)})")
    cx = CobarComplex(Comodule(c, [("e0", 0)], {}, label=f"trivial({c.p})"))
    elem = {x: {"e0": v} for x, v in augmentation.items()}

    def to_quotient(chain: Mapping) -> dict:
        return map_chain(chain, lambda a: project_monomial(m.algebra, c, a), elem, m.p)

    return cx, to_quotient
