"""Spectral-sequence bookkeeping on Ext charts.

* long exact sequences in Ext from short exact sequences of comodules;
* dimension-level comparison of Ext over an associated graded algebra with
  Ext over the algebra itself (the algebraic filtration spectral sequence);
* Adams differentials propagated from an input catalog by linearity over the
  sphere: d_r(x.m) = d_r(x).m + (-1)^(rs + (r-1)t) x.d_r(m) for x in
  bidegree (s,t);
* homotopy groups read off from E_infinity by v0-strings.

Classes are always handled as coordinate vectors in the E_2 basis of the
chart; a page E_r(s,t) is stored as a pair of subspaces B_r <= Z_r of E_2.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .comod import SES
from .exactlin import kernel_mod_p, rank_mod_p, rref
from .ext import ExtChart, ExtClass, WindowOverflow, WitnessChain, compute_ext_chart, evaluate
from .lattice import Group, GroupSeries


class SpecSeqError(Exception):
    pass


class InconsistentInput(SpecSeqError):
    pass


class UndeterminedDifferential(SpecSeqError):
    pass


# ---------------------------------------------------------------------------
# small linear algebra helpers


def _rows(a, n: int) -> np.ndarray:
    a = np.asarray(a, dtype=np.int64)
    return a.reshape(-1, n) if a.size else np.zeros((0, n), dtype=np.int64)


def _span_basis(rows: np.ndarray, p: int) -> np.ndarray:
    """Independent rows spanning the same space (reduced echelon form)."""
    if not len(rows):
        return rows
    red, piv = rref(rows, p)
    return red[: len(piv)] % p


def _complement(sub: np.ndarray, whole: np.ndarray, p: int) -> np.ndarray:
    """Rows of ``whole`` completing a basis of ``sub`` to one of span(whole)."""
    n = whole.shape[1]
    if not len(whole):
        return np.zeros((0, n), dtype=np.int64)
    stack = np.vstack([sub, whole]) if len(sub) else whole
    _, piv = rref(stack.T, p)
    k = len(sub)
    return whole[[c - k for c in piv if c >= k]]


def _solve_rows(basis: np.ndarray, v: np.ndarray, p: int) -> np.ndarray | None:
    """Coefficients c with c @ basis = v, or None."""
    if not len(basis):
        return np.zeros(0, dtype=np.int64) if not np.any(v % p) else None
    m = np.concatenate([basis.T, v.reshape(-1, 1)], axis=1) % p
    red, piv = rref(m, p)
    k = basis.shape[0]
    if k in piv:
        return None
    out = np.zeros(k, dtype=np.int64)
    for row, c in enumerate(piv):
        out[c] = red[row, k]
    return out % p


# ---------------------------------------------------------------------------
# long exact sequences


@dataclass
class LESData:
    """Ext(sub) -> Ext(total) -> Ext(quotient) -> Ext^(s+1)(sub) in a window."""

    ses: SES
    sub: ExtChart
    total: ExtChart
    quotient: ExtChart
    inclusion: dict  # (s,t) -> matrix, columns = sub basis, rows = total basis
    projection: dict
    connecting: dict  # (s,t) -> matrix quotient(s,t) -> sub(s+1,t)
    unverified: set = field(default_factory=set)
    failures: list = field(default_factory=list)

    @property
    def exact(self) -> bool:
        return not self.failures

    def connecting_cocycle(self, s: int, t: int, i: int) -> dict:
        """d of the lift of the i-th quotient representative: a sub cocycle."""
        return _connecting_chain(self, s, t, i)

    def connect(self, cls: ExtClass) -> ExtClass:
        mat = self.connecting[(cls.s, cls.t)]
        v = (mat @ np.array(cls.coords, dtype=np.int64)) % self.sub.p
        return ExtClass(cls.s + 1, cls.t, tuple(int(x) for x in v), self.sub.label)


def _rename(chain: Mapping, table: Mapping) -> dict:
    out = {}
    for (monos, x), c in chain.items():
        if x in table:
            out[(monos, table[x])] = c
    return out


def _coords(chart: ExtChart, chain: dict, s: int, t: int) -> np.ndarray:
    n = chart.dim(s, t)
    if not n:
        return np.zeros(0, dtype=np.int64)
    if not chain:
        return np.zeros(n, dtype=np.int64)
    return chart.cobar.coordinates(chain, s, t).astype(np.int64)


def _connecting_chain(les: LESData, s: int, t: int, i: int) -> dict:
    lift = {v: k for k, v in les.ses.projection.items()}
    back = {v: k for k, v in les.ses.inclusion.items()}
    z = les.quotient.cobar.cohomology(s, t).representatives[i]
    dz = les.total.cobar.differential(_rename(z, lift))
    if any(x not in back for (_, x) in dz):
        raise SpecSeqError("boundary of a lift leaves the subcomodule")
    return _rename(dz, back)


def long_exact_sequence(ses: SES, max_s: int, max_t: int) -> LESData:
    """Maps of the long exact sequence on chosen cobar bases, with exactness
    checked at every node whose neighbours lie in the window."""
    h = ses.total.algebra
    sub = compute_ext_chart(h, ses.sub, max_s, max_t, engine="cobar")
    tot = compute_ext_chart(h, ses.total, max_s, max_t, engine="cobar")
    quo = compute_ext_chart(h, ses.quotient, max_s, max_t, engine="cobar")
    p = h.p
    les = LESData(ses, sub, tot, quo, {}, {}, {})
    t_lo = min([min(c.comodule.deg.values()) for c in (sub, tot, quo)])
    for s in range(max_s + 1):
        for t in range(t_lo + s, max_t + 1):
            cols = []
            for r in sub.cobar.cohomology(s, t).representatives if sub.dim(s, t) else []:
                cols.append(_coords(tot, _rename(r, ses.inclusion), s, t))
            les.inclusion[(s, t)] = np.array(cols, dtype=np.int64).reshape(len(cols), tot.dim(s, t)).T
            cols = []
            for r in tot.cobar.cohomology(s, t).representatives if tot.dim(s, t) else []:
                cols.append(_coords(quo, _rename(r, ses.projection), s, t))
            les.projection[(s, t)] = np.array(cols, dtype=np.int64).reshape(len(cols), quo.dim(s, t)).T
            if s < max_s:
                cols = []
                for i in range(quo.dim(s, t)):
                    cols.append(_coords(sub, _connecting_chain(les, s, t, i), s + 1, t))
                les.connecting[(s, t)] = np.array(cols, dtype=np.int64).reshape(
                    len(cols), sub.dim(s + 1, t)).T
            else:
                les.unverified.add((s, t))
    # exactness
    for s in range(max_s + 1):
        for t in range(t_lo + s, max_t + 1):
            inc, proj = les.inclusion[(s, t)], les.projection[(s, t)]
            _check_node(les, f"Ext(total)^({s},{t})", inc, proj, tot.dim(s, t), p)
            if (s, t) in les.connecting:
                _check_node(les, f"Ext(quotient)^({s},{t})", proj, les.connecting[(s, t)], quo.dim(s, t), p)
            if s > 0 and (s - 1, t) in les.connecting:
                _check_node(les, f"Ext(sub)^({s},{t})", les.connecting[(s - 1, t)], inc, sub.dim(s, t), p)
    return les


def _check_node(les: LESData, where: str, f: np.ndarray, g: np.ndarray, dim: int, p: int):
    if dim == 0:
        return
    rf = rank_mod_p(f, p) if f.size else 0
    rg = rank_mod_p(g, p) if g.size else 0
    if f.size and g.size and np.any((g @ f) % p):
        les.failures.append(f"{where}: composite is nonzero")
    elif rf + rg != dim:
        les.failures.append(f"{where}: rank(in)={rf} + rank(out)={rg} != {dim}")


# ---------------------------------------------------------------------------
# associated graded comparison


@dataclass
class AGDifferential:
    page: int
    source: tuple  # (s, t, weight)
    target: tuple
    rank: int
    source_name: str = ""
    target_name: str = ""

    def __str__(self):
        return (f"d{self.page}: {self.source_name or self.source} -> "
                f"{self.target_name or self.target} (rank {self.rank})")


@dataclass
class AGComparison:
    differentials: list
    consistent: bool
    first_inconsistent: tuple | None
    unverified: set
    gr_mismatch: list  # bidegrees where Ext_Gr differs from base[c]
    remaining: dict = field(default_factory=dict)  # unpaired classes: key -> count

    def remaining_in_stem(self, n: int) -> int:
        return sum(v for k, v in self.remaining.items() if k[1] - k[0] == n)

    def find(self, page: int, source: tuple, target: tuple) -> AGDifferential | None:
        for d in self.differentials:
            if d.page == page and d.source == source and d.target == target:
                return d
        return None


def product_names(chart: ExtChart, generators: Sequence[str], max_len: int = 8) -> dict:
    """Name each bidegree of dimension 1 by the first nonzero monomial in the
    named generators (shortest first)."""
    gens = [(g, chart.cls(g)) for g in generators]
    out: dict = {}
    frontier = [("", None)]
    for _ in range(max_len):
        nxt = []
        for name, cls in frontier:
            for g, c in gens:
                if cls is None:
                    val, nm = c, g
                else:
                    s, t = cls.s + c.s, cls.t + c.t
                    if not chart.in_window(s, t) or not chart.dim(s, t):
                        continue
                    val, nm = chart.act(c, cls) if not chart.is_sphere else chart.act(c, cls), f"{g}*{name}"
                if val.is_zero():
                    continue
                key = (val.s, val.t)
                if chart.dim(*key) == 1 and key not in out:
                    out[key] = nm
                nxt.append((nm, val))
        # keep one representative per bidegree to bound the search
        seen, frontier = set(), []
        for nm, val in nxt:
            if (val.s, val.t) not in seen:
                seen.add((val.s, val.t))
                frontier.append((nm, val))
    return out


def compare_associated_graded(chart_gr: ExtChart, chart_full: ExtChart, base: ExtChart | None = None,
                              generator: tuple = (1, 9), d1_target: str | None = None,
                              base_names: Mapping | None = None) -> AGComparison:
    """Pair classes of Ext_Gr with differentials so the homology matches Ext_full.

    With ``base`` given, Ext_Gr is read as Ext_base[c] with c in bidegree
    ``generator``; differentials lower the c-weight, d_r: (s,t,w) -> (s+1,t,w-r).
    d_1 is computed from d_1(c) = ``d1_target`` (default: the unique base class
    in bidegree generator + (1,0)) and the Leibniz rule; higher pages are
    dimension bookkeeping, smallest page first. Without ``base`` every class
    has weight 0 and pairs are formed by dimension alone.
    """
    if chart_gr.p != chart_full.p:
        raise ValueError("charts over different primes")
    if base is None:
        return _compare_plain(chart_gr, chart_full)
    if d1_target is None:
        b1 = (generator[0] + 1, generator[1])
        if base.dim(*b1) != 1:
            raise SpecSeqError(f"no unique base class in bidegree {b1}")
        x = base.basis_class(*b1, 0)
    else:
        x = base.cls(d1_target)
    p = base.p
    gs, gt = generator
    max_s, max_t = chart_full.max_s, chart_full.max_t
    names = dict(base_names or {})
    e: dict = {}
    for s in range(max_s + 1):
        for t in range(max_t + 1):
            for w in range(s // gs + 1):
                n = base.dim(s - w * gs, t - w * gt)
                if n:
                    e[(s, t, w)] = n
    mismatch = []
    for s in range(chart_gr.max_s + 1):
        for t in range(chart_gr.max_t + 1):
            if s > max_s or t > max_t:
                continue
            total = sum(n for (a, b, _), n in e.items() if (a, b) == (s, t))
            if total != chart_gr.dim(s, t):
                mismatch.append((s, t))

    def label(key):
        s, t, w = key
        bn = names.get((s - w * gs, t - w * gt), f"<{s - w * gs},{t - w * gt}>")
        if bn == "1" and w:
            bn = ""
        c = "" if w == 0 else ("c" if w == 1 else f"c^{w}")
        return "*".join(x for x in (bn, c) if x) or "1"

    diffs: list = []
    unverified: set = set()
    # d1 from multiplication by the image of c on the base chart
    for (s, t, w), n in sorted(e.items()):
        if w == 0 or w % p == 0:
            continue
        src_b = (s - w * gs, t - w * gt)
        tgt = (s + 1, t, w - 1)
        if tgt not in e:
            continue
        if not base.in_window(src_b[0] + x.s, src_b[1] + x.t):
            unverified.add((s, t))
            continue
        mat = np.array([base.act(x, base.basis_class(*src_b, i)).coords for i in range(n)],
                       dtype=np.int64).reshape(n, -1)
        r = rank_mod_p(mat, p)
        if r:
            diffs.append(AGDifferential(1, (s, t, w), tgt, r, label((s, t, w)), label(tgt)))
    avail = dict(e)
    for d in diffs:
        avail[d.source] -= d.rank
        avail[d.target] -= d.rank
    excess: dict = {}
    for (s, t, w), n in avail.items():
        excess[(s, t)] = excess.get((s, t), 0) + n
    for key in list(excess):
        excess[key] -= chart_full.dim(*key)
    for key in chart_full.dims:
        excess.setdefault(key, -chart_full.dim(*key))
    top_w = max((w for (_, _, w) in e), default=0)
    for r in range(2, top_w + 1):
        for (s, t, w) in sorted(avail, key=lambda k: (k[1], k[0], -k[2])):
            tgt = (s + 1, t, w - r)
            if w - r < 0 or tgt not in avail:
                continue
            k = min(avail[(s, t, w)], avail[tgt], excess.get((s, t), 0), excess.get((s + 1, t), 0))
            if k > 0:
                avail[(s, t, w)] -= k
                avail[tgt] -= k
                excess[(s, t)] -= k
                excess[(s + 1, t)] -= k
                diffs.append(AGDifferential(r, (s, t, w), tgt, k, label((s, t, w)), label(tgt)))
    bad = None
    for (s, t), v in sorted(excess.items(), key=lambda kv: (kv[0][1], kv[0][0])):
        if v == 0:
            continue
        if s >= max_s or (s, t) in unverified:
            unverified.add((s, t))
            continue
        bad = (s, t)
        break
    return AGComparison(diffs, bad is None, bad, unverified, mismatch,
                        {k: v for k, v in avail.items() if v})


def _compare_plain(chart_gr: ExtChart, chart_full: ExtChart) -> AGComparison:
    max_s = min(chart_gr.max_s, chart_full.max_s)
    max_t = min(chart_gr.max_t, chart_full.max_t)
    avail = {(s, t): n for (s, t), n in chart_gr.dims.items() if s <= max_s and t <= max_t}
    excess = dict(avail)
    for (s, t), n in chart_full.dims.items():
        if s <= max_s and t <= max_t:
            excess[(s, t)] = excess.get((s, t), 0) - n
    diffs, unverified, bad = [], set(), None
    for (s, t) in sorted(excess, key=lambda b: (b[1], b[0])):
        k = min(avail.get((s, t), 0), avail.get((s + 1, t), 0),
                excess.get((s, t), 0), excess.get((s + 1, t), 0))
        if k > 0:
            for b in ((s, t), (s + 1, t)):
                avail[b] -= k
                excess[b] -= k
            diffs.append(AGDifferential(1, (s, t, 0), (s + 1, t, 0), k))
    for (s, t), v in sorted(excess.items(), key=lambda kv: (kv[0][1], kv[0][0])):
        if v == 0:
            continue
        if s >= max_s:
            unverified.add((s, t))
            continue
        bad = (s, t)
        break
    return AGComparison(diffs, bad is None, bad, unverified, [], {(s, t, 0): v for (s, t), v in avail.items() if v})


# ---------------------------------------------------------------------------
# Adams differentials


@dataclass
class InputDifferential:
    """d_page(source) = target; ``target`` None means the source is a
    d_page-cycle. Expressions are evaluated in the chart (sphere names first
    resolve in the sphere chart)."""

    source: str
    page: int
    target: str | None
    name: str = ""
    bidegree: tuple | None = None

    @classmethod
    def from_json(cls, entry: Mapping) -> "InputDifferential":
        src = entry.get("expression", entry["name"])
        tgt = entry.get("target_name")
        bideg = tuple(entry["source"]) if "source" in entry else None
        return cls(src, int(entry["page"]), None if tgt in (None, "0") else tgt, entry.get("name", src), bideg)


def load_catalog(path_or_data) -> list[InputDifferential]:
    if isinstance(path_or_data, (str, bytes)) or hasattr(path_or_data, "read_text"):
        with open(path_or_data) as fh:
            data = json.load(fh)
    else:
        data = path_or_data
    return [InputDifferential.from_json(e) for e in data]


TMF3_SPHERE_NAMES = [
    {"name": "v0", "s": 1, "t": 1},
    {"name": "alpha", "s": 1, "t": 4},
    {"name": "beta", "s": 2, "t": 12},
    {"name": "Delta", "s": 3, "t": 27},
    {"name": "[alphaDelta2]", "as": "alpha*Delta*Delta"},
]

TMF3_CATALOG = [
    {"name": "Delta", "page": 2, "source": [3, 27], "target_name": "alpha*beta^2"},
    {"name": "[alphaDelta2]", "page": 3, "source": [7, 58], "target_name": "beta^5"},
]


def name_tmf3_sphere(chart: ExtChart) -> ExtChart:
    """Attach the standard names to the sphere chart over A-tmf-p3 (only
    those whose bidegrees fit in the window)."""
    from .ext import assign_names

    sphere = chart.sphere
    keep = []
    for e in TMF3_SPHERE_NAMES:
        if "s" in e and not sphere.in_window(e["s"], e["t"]):
            continue
        if "as" in e and not sphere.in_window(7, 58):
            continue
        keep.append(e)
    assign_names(sphere, keep)
    return chart


def tmf3_catalog() -> list[InputDifferential]:
    return load_catalog(TMF3_CATALOG)


@dataclass
class _Page:
    r: int
    Z: dict  # (s,t) -> rows (E2 coordinates)
    B: dict
    C: dict  # complement of B in Z: basis of E_r
    D: dict = field(default_factory=dict)  # (s,t) -> matrix e_src x e_tgt (E_r coords)
    determined: dict = field(default_factory=dict)  # (s,t) -> bool matrix like D


@dataclass
class Differential:
    page: int
    source: tuple
    target: tuple
    source_rep: tuple  # E2 coordinates
    target_rep: tuple
    forced: bool
    source_name: str = ""
    target_name: str = ""

    def to_json(self) -> dict:
        return {"page": self.page, "source": list(self.source), "target": list(self.target),
                "source_coords": list(self.source_rep), "target_coords": list(self.target_rep),
                "forced": self.forced, "source_name": self.source_name,
                "target_name": self.target_name}


class DifferentialPage:
    """E_infinity (the last computed page) with the full page history."""

    def __init__(self, chart: ExtChart, history: list, differentials: list, unverified: dict,
                 undetermined: list, sphere_page: "DifferentialPage | None" = None):
        self.chart = chart
        self.p = chart.p
        self.history = history
        self.differentials = differentials
        self.unverified = unverified
        self.undetermined = undetermined
        self.sphere_page = sphere_page
        self.skipped_inputs: list = []  # inputs whose classes leave the window

    @property
    def r(self) -> int:
        return self.history[-1].r

    def page(self, r: int) -> _Page:
        for pg in self.history:
            if pg.r == r:
                return pg
        return self.history[-1] if r > self.history[-1].r else self.history[0]

    def dim(self, s: int, t: int, r: int | None = None) -> int:
        pg = self.history[-1] if r is None else self.page(r)
        return len(pg.C.get((s, t), ()))

    def dims(self, r: int | None = None) -> dict:
        pg = self.history[-1] if r is None else self.page(r)
        return {b: len(c) for b, c in pg.C.items() if len(c)}

    def _vec(self, cls: ExtClass) -> np.ndarray:
        return np.array(cls.coords, dtype=np.int64) % self.p

    def survives(self, cls: ExtClass, r: int | None = None) -> bool:
        """Nonzero at page r (default E_infinity)."""
        pg = self.history[-1] if r is None else self.page(r)
        b = (cls.s, cls.t)
        z, bb = pg.Z.get(b), pg.B.get(b)
        if z is None:
            return False
        v = self._vec(cls)
        return _solve_rows(z, v, self.p) is not None and _solve_rows(bb, v, self.p) is None

    def is_zero(self, cls: ExtClass, r: int | None = None) -> bool:
        pg = self.history[-1] if r is None else self.page(r)
        bb = pg.B.get((cls.s, cls.t))
        if bb is None:
            return True
        return _solve_rows(bb, self._vec(cls), self.p) is not None

    def d(self, r: int, cls: ExtClass) -> tuple[ExtClass, bool]:
        """(d_r(cls) as an E2 representative, whether it was forced)."""
        pg = self.page(r)
        b = (cls.s, cls.t)
        tb = (b[0] + r, b[1] + r - 1)
        coords = _page_coords(pg, b, self._vec(cls), self.p)
        if coords is None:
            raise SpecSeqError(f"class at {b} does not survive to E_{r}")
        n_t = self.chart.dim(*tb)
        if b not in pg.D:
            return ExtClass(tb[0], tb[1], (0,) * n_t, self.chart.label), self.verified(b, r)
        img = (coords @ pg.D[b]) % self.p
        rep = (img @ pg.C[tb]) % self.p if len(img) else np.zeros(n_t, dtype=np.int64)
        involved = [i for i, c in enumerate(coords) if c]
        forced = all(pg.determined[b][i].all() for i in involved)
        return ExtClass(tb[0], tb[1], tuple(int(x) for x in rep), self.chart.label), forced

    def verified(self, b: tuple, r: int) -> bool:
        """Whether d_r out of bidegree b was checked inside the window."""
        return r < self.unverified.get(b, r + 1)

    def equal_mod_boundaries(self, a: ExtClass, b: ExtClass, r: int) -> bool:
        pg = self.page(r)
        diff = (self._vec(a) - self._vec(b)) % self.p
        bb = pg.B.get((a.s, a.t), np.zeros((0, len(diff)), dtype=np.int64))
        return _solve_rows(bb, diff, self.p) is not None

    def to_json(self) -> dict:
        return {
            "chart": self.chart.label,
            "pages": [pg.r for pg in self.history],
            "e_infinity": [{"s": s, "t": t, "dim": n} for (s, t), n in sorted(self.dims().items())],
            "differentials": [d.to_json() for d in self.differentials],
            "unverified": [{"s": b[0], "t": b[1], "from_page": r} for b, r in sorted(self.unverified.items())],
            "undetermined": [list(u) for u in self.undetermined],
        }


def _page_coords(pg: _Page, b: tuple, v: np.ndarray, p: int) -> np.ndarray | None:
    """E_r coordinates of a class with E2 vector v (None if not a cycle)."""
    if b not in pg.Z:
        return None if np.any(v % p) else np.zeros(0, dtype=np.int64)
    bb, c = pg.B[b], pg.C[b]
    basis = np.vstack([bb, c]) if len(bb) else c
    sol = _solve_rows(basis, v % p, p)
    if sol is None:
        return None
    return sol[len(bb):]


class _Products:
    """E2 products sphere x module, cached per pair of bidegrees."""

    def __init__(self, chart: ExtChart):
        self.chart = chart
        self.sphere = chart.sphere
        self.cache: dict = {}

    def tensor(self, bx: tuple, bm: tuple) -> np.ndarray:
        key = (bx, bm)
        if key not in self.cache:
            ch, sp = self.chart, self.sphere
            nx, nm = sp.dim(*bx), ch.dim(*bm)
            s, t = bx[0] + bm[0], bx[1] + bm[1]
            nt = ch.dim(s, t)
            out = np.zeros((nx, nm, nt), dtype=np.int64)
            if nt and nx and nm:
                for a in range(nx):
                    xa = sp.basis_class(*bx, a)
                    for b in range(nm):
                        out[a, b] = ch.act(xa, ch.basis_class(*bm, b)).coords
            self.cache[key] = out
        return self.cache[key]

    def product(self, bx: tuple, x: np.ndarray, bm: tuple, m: np.ndarray) -> np.ndarray:
        t = self.tensor(bx, bm)
        if not t.size:
            return np.zeros(t.shape[2], dtype=np.int64)
        return np.einsum("a,b,abt->t", x, m, t) % self.chart.p


def _sign(p: int, bx: tuple, r: int) -> int:
    # moving d_r, of bidegree (r, r-1), past x; products commute up to (-1)^(ss'+tt')
    return 1 if p == 2 or (r * bx[0] + (r - 1) * bx[1]) % 2 == 0 else -1


def _initial_page(chart: ExtChart) -> _Page:
    Z, B, C = {}, {}, {}
    for b, n in chart.dims.items():
        Z[b] = np.eye(n, dtype=np.int64)
        B[b] = np.zeros((0, n), dtype=np.int64)
        C[b] = Z[b]
    return _Page(2, Z, B, C)


def _target(b: tuple, r: int) -> tuple:
    return (b[0] + r, b[1] + r - 1)


def _resolve(chart: ExtChart, expr: str) -> ExtClass:
    return evaluate(chart, expr)


def _tokens(expr: str) -> list[str]:
    return [t.split("^")[0].lstrip("-0123456789") for t in expr.replace(" ", "").split("*")]


def run_adams(chart: ExtChart, input_differentials: Sequence[InputDifferential] = (),
              strict: bool = False, max_page: int | None = None,
              sphere_page: DifferentialPage | None = None) -> DifferentialPage:
    """Propagate the input differentials through the chart.

    Sphere inputs are first propagated through the sphere's own chart by the
    Leibniz rule; module differentials are then the unique solution of the
    module-Leibniz equations. Unknowns left free by the equations are set to
    zero and listed as undetermined (``strict`` raises instead). Bidegrees
    whose targets leave the window are marked unverified.
    """
    p = chart.p
    sphere = chart.sphere
    ring = chart.is_sphere
    sphere_inputs, module_inputs = [], []
    for inp in input_differentials:
        own = not ring and any(tok in chart.names for tok in _tokens(inp.source))
        (module_inputs if own else sphere_inputs).append(inp)
    if ring:
        sphere_inputs, module_inputs = [], list(input_differentials)
    elif sphere_page is None:
        sphere_page = run_adams(sphere, sphere_inputs, strict=strict, max_page=max_page)
    prods = _Products(chart)
    top = max_page or chart.max_s
    pg = _initial_page(chart)
    history: list[_Page] = []
    differentials: list[Differential] = []
    unverified: dict = {}
    undetermined: list = []
    resolved_inputs, skipped = [], []
    for inp in module_inputs:
        try:
            resolved_inputs.append((inp, _resolve(chart, inp.source),
                                    None if inp.target is None else _resolve(chart, inp.target)))
        except (WindowOverflow, KeyError):
            # a sphere class beyond this window, or named only in a larger one
            if inp in sphere_inputs or ring:
                skipped.append(inp)
            else:
                raise
        else:
            src = resolved_inputs[-1][1]
            if inp.bidegree is not None and tuple(inp.bidegree) != (src.s, src.t):
                raise InconsistentInput(f"{inp.name} is in bidegree {(src.s, src.t)}, not {inp.bidegree}")
    for r in range(2, top + 1):
        in_window = lambda b: chart.in_window(*b)
        # variables
        var: dict = {}
        nvar = 0
        for b, c in sorted(pg.C.items()):
            tb = _target(b, r)
            if not len(c):
                continue
            if not in_window(tb):
                unverified.setdefault(b, r)
                continue
            et = len(pg.C.get(tb, ()))
            if et:
                var[b] = nvar
                nvar += len(c) * et
        sph = pg if ring else sphere_page.page(r)
        eqs: list = []
        rhs: list = []

        def vidx(b, i, j):
            et = len(pg.C[_target(b, r)])
            return var[b] + i * et + j

        def add_eq(row: dict, val: int):
            if any(v % p for v in row.values()) or val % p:
                eqs.append(row)
                rhs.append(val % p)

        # module Leibniz
        for bm, cm in sorted(pg.C.items()):
            if not len(cm):
                continue
            for bx, cx in sorted(sph.C.items()):
                if bx == (0, 0) or not len(cx):
                    continue
                b = (bx[0] + bm[0], bx[1] + bm[1])
                tb = _target(b, r)
                if not in_window(b) or not in_window(tb) or b not in var:
                    continue
                eps = _sign(p, bx, r)
                tbm, tbx = _target(bm, r), _target(bx, r)
                for a in range(len(cx)):
                    for i in range(len(cm)):
                        prod = prods.product(bx, cx[a], bm, cm[i])
                        pc = _page_coords(pg, b, prod, p)
                        if pc is None:
                            raise SpecSeqError(f"product at {b} is not a d_{r}-cycle")
                        et = len(pg.C[tb])
                        rows = [dict() for _ in range(et)]
                        consts = np.zeros(et, dtype=np.int64)
                        for k, c in enumerate(pc):
                            if c:
                                for j in range(et):
                                    rows[j][vidx(b, k, j)] = rows[j].get(vidx(b, k, j), 0) + c
                        # d(x).m
                        ok = True
                        ex = len(sph.C.get(tbx, ()))
                        for kk in range(ex):
                            pr = _page_coords(pg, tb, prods.product(tbx, sph.C[tbx][kk], bm, cm[i]), p)
                            if pr is None:
                                ok = False
                                break
                            if ring:
                                if bx not in var:
                                    ok = False
                                    break
                                for j in range(et):
                                    if pr[j]:
                                        key = vidx(bx, a, kk)
                                        rows[j][key] = rows[j].get(key, 0) - pr[j]
                            else:
                                dx = sphere_page.page(r).D.get(bx)
                                coef = 0 if dx is None else dx[a, kk]
                                consts = (consts + coef * pr) % p
                        if not ok:
                            continue
                        # x.d(m)
                        em = len(pg.C.get(tbm, ()))
                        if em and bm not in var:
                            continue
                        for kk in range(em):
                            pr = _page_coords(pg, tb, prods.product(bx, cx[a], tbm, pg.C[tbm][kk]), p)
                            if pr is None:
                                ok = False
                                break
                            for j in range(et):
                                if pr[j]:
                                    key = vidx(bm, i, kk)
                                    rows[j][key] = rows[j].get(key, 0) - eps * pr[j]
                        if not ok:
                            continue
                        for j in range(et):
                            add_eq(rows[j], consts[j])
        # inputs
        pinned: set = set()
        for inp, src, tgt in resolved_inputs:
            if inp.page < r:
                continue
            b = (src.s, src.t)
            coords = _page_coords(pg, b, np.array(src.coords, dtype=np.int64), p)
            if coords is None or not np.any(coords):
                raise InconsistentInput(f"{inp.name or inp.source} does not survive to E_{r}")
            tb = _target(b, r)
            et = len(pg.C.get(tb, ()))
            want = np.zeros(et, dtype=np.int64)
            if inp.page == r and tgt is not None:
                if (tgt.s, tgt.t) != tb:
                    raise InconsistentInput(f"target of {inp.name} is not in bidegree {tb}")
                want = _page_coords(pg, tb, np.array(tgt.coords, dtype=np.int64), p)
                if want is None:
                    raise InconsistentInput(f"target of {inp.name} is not a cycle on E_{r}")
                if not np.any(want):
                    raise InconsistentInput(f"target of {inp.name} is already zero on E_{r}")
            if b not in var:
                if np.any(want):
                    raise InconsistentInput(f"no room for d_{r} on {inp.name}")
                continue
            for j in range(et):
                row = {vidx(b, k, j): int(c) for k, c in enumerate(coords) if c}
                pinned.update(row)
                add_eq(row, int(want[j]))
        sol, determined = _solve_system(eqs, rhs, nvar, p, r)
        # assemble D
        pg.D, pg.determined = {}, {}
        for b, c in pg.C.items():
            if not len(c):
                continue
            tb = _target(b, r)
            et = len(pg.C.get(tb, ())) if in_window(tb) else 0
            mat = np.zeros((len(c), et), dtype=np.int64)
            det = np.ones((len(c), et), dtype=bool)
            if b in var:
                for i in range(len(c)):
                    for j in range(et):
                        mat[i, j] = sol[vidx(b, i, j)]
                        det[i, j] = determined[vidx(b, i, j)]
                        if not det[i, j]:
                            undetermined.append((r, b[0], b[1], i, j))
            pg.D[b], pg.determined[b] = mat % p, det
        if strict and undetermined:
            raise UndeterminedDifferential(f"d_{r} not forced at {sorted(set(u[1:3] for u in undetermined))}")
        # square zero
        for b, mat in pg.D.items():
            tb = _target(b, r)
            if tb in pg.D and mat.size and pg.D[tb].size and np.any((mat @ pg.D[tb]) % p):
                raise InconsistentInput(f"d_{r} does not square to zero at {b}")
        for b, mat in sorted(pg.D.items()):
            tb = _target(b, r)
            for i in range(mat.shape[0]):
                if mat.shape[1] and np.any(mat[i]):
                    differentials.append(Differential(
                        r, b, tb, tuple(int(x) for x in pg.C[b][i]),
                        tuple(int(x) for x in (mat[i] @ pg.C[tb]) % p),
                        bool(pg.determined[b][i].all())))
        history.append(pg)
        pg = _next_page(pg, r, p, in_window)
    history.append(pg)
    for d in differentials:
        d.source_name = chart.name_of(ExtClass(d.source[0], d.source[1], d.source_rep, chart.label)) or ""
        d.target_name = chart.name_of(ExtClass(d.target[0], d.target[1], d.target_rep, chart.label)) or ""
    page = DifferentialPage(chart, history, differentials, unverified, undetermined, sphere_page)
    page.skipped_inputs = skipped
    return page


def _solve_system(eqs: list, rhs: list, nvar: int, p: int, r: int):
    if nvar == 0:
        return np.zeros(0, dtype=np.int64), np.ones(0, dtype=bool)
    if not eqs:
        return np.zeros(nvar, dtype=np.int64), np.zeros(nvar, dtype=bool)
    a = np.zeros((len(eqs), nvar + 1), dtype=np.int64)
    for k, (row, val) in enumerate(zip(eqs, rhs)):
        for j, c in row.items():
            a[k, j] = (a[k, j] + c) % p
        a[k, nvar] = val
    red, piv = rref(a, p)
    if nvar in piv:
        raise InconsistentInput(f"the inputs and the Leibniz rule are inconsistent on E_{r}")
    sol = np.zeros(nvar, dtype=np.int64)
    determined = np.zeros(nvar, dtype=bool)
    free = [j for j in range(nvar) if j not in set(piv)]
    for row, c in enumerate(piv):
        sol[c] = red[row, nvar]
        determined[c] = not np.any(red[row, free] % p) if free else True
    return sol % p, determined


def _next_page(pg: _Page, r: int, p: int, in_window) -> _Page:
    Z = {b: z.copy() for b, z in pg.Z.items()}
    B = {b: x.copy() for b, x in pg.B.items()}
    for b, c in pg.C.items():
        if not len(c):
            continue
        mat = pg.D.get(b)
        tb = _target(b, r)
        if mat is None or not mat.shape[1]:
            continue
        ker = kernel_mod_p(mat.T, p)  # beta with beta @ mat = 0
        Z[b] = _span_basis(np.vstack([pg.B[b], (ker @ c) % p]) if len(ker) else pg.B[b], p) \
            if len(pg.B[b]) or len(ker) else np.zeros((0, c.shape[1]), dtype=np.int64)
        image = (mat @ pg.C[tb]) % p
        B[tb] = _span_basis(np.vstack([B[tb], image]), p)
    C = {}
    for b in Z:
        Z[b] = _span_basis(Z[b], p) if len(Z[b]) else Z[b]
        C[b] = _complement(B[b], Z[b], p)
    return _Page(r + 1, Z, B, C)


# ---------------------------------------------------------------------------
# homotopy


@dataclass
class HiddenExtension:
    """p times the class at (stem, source_s) equals the class at
    (stem, target_s), backed by a bounding-chain witness or flagged as proven
    by a long exact sequence argument."""

    stem: int
    source_s: int
    target_s: int
    witness: WitnessChain | None = None
    justification: str = "witness"

    def check(self):
        if self.justification == "les":
            return
        if self.witness is None or not self.witness.found or not self.witness.verify():
            raise SpecSeqError(f"extension in stem {self.stem} is not witness-backed")


def v0_strings(page: DifferentialPage, stem: int, v0: ExtClass | None = None) -> list[tuple[int, int, bool]]:
    """Decompose E_infinity in a stem into v0-strings: (start s, length, reaches top)."""
    chart, p = page.chart, page.p
    sphere = chart.sphere
    if v0 is None:
        if sphere.dim(1, 1) != 1:
            raise SpecSeqError("no unique class at (1,1)")
        v0 = sphere.basis_class(1, 1, 0)
    pg = page.history[-1]
    s_top = min(chart.max_s, chart.max_t - stem)
    if s_top < 0:
        return []
    prods = _Products(chart)
    dims = {s: len(pg.C.get((s, stem + s), ())) for s in range(s_top + 1)}
    maps: dict = {}
    for s in range(s_top):
        b, b1 = (s, stem + s), (s + 1, stem + s + 1)
        n0, n1 = dims[s], dims[s + 1]
        m = np.zeros((n0, n1), dtype=np.int64)
        for i in range(n0):
            prod = prods.product((1, 1), np.array(v0.coords, dtype=np.int64), b, pg.C[b][i])
            c = _page_coords(pg, b1, prod, p) if n1 or np.any(prod) else np.zeros(0, dtype=np.int64)
            if c is None:
                raise SpecSeqError(f"v0 times a permanent class at {b} is not a cycle")
            m[i] = c if n1 else m[i]
        maps[s] = m

    def rank(s, k):
        if s < 0 or s + k > s_top:
            return 0
        if k == 0:
            return dims[s]
        m = np.eye(dims[s], dtype=np.int64)
        for j in range(s, s + k):
            m = (m @ maps[j]) % p
        return rank_mod_p(m, p) if m.size else 0

    out = []
    for s in range(s_top + 1):
        for length in range(1, s_top - s + 2):
            n = (rank(s, length - 1) - rank(s - 1, length)) - (rank(s, length) - rank(s - 1, length + 1))
            out += [(s, length, s + length - 1 == s_top)] * n
    return out


def extract_homotopy(page: DifferentialPage, hidden_extensions: Iterable[HiddenExtension] = (),
                     stems: Iterable[int] | None = None, free_at_top: bool = True) -> GroupSeries:
    """Homotopy groups per stem: v0-strings reaching the top of the window
    count as Z_p (flagged), finite strings of length L as Z/p^L; hidden
    extensions join the string ending at source_s to the one starting at
    target_s."""
    chart, p = page.chart, page.p
    if stems is None:
        stems = range(min(0, min((t - s for s, t in chart.dims), default=0)), chart.max_t + 1)
    ext_by_stem: dict = {}
    for e in hidden_extensions:
        e.check()
        ext_by_stem.setdefault(e.stem, []).append(e)
    series = GroupSeries(p, label=f"pi_*({chart.label})")
    notes = []
    for n in stems:
        strings = v0_strings(page, n)
        for e in ext_by_stem.get(n, []):
            lower = [x for x in strings if x[0] + x[1] - 1 == e.source_s and not x[2]]
            upper = [x for x in strings if x[0] == e.target_s]
            through = [x for x in strings if x[0] <= e.source_s and x[0] + x[1] - 1 >= e.target_s]
            if through and not lower:
                continue  # already visible as a v0 multiplication
            if not lower or not upper:
                raise SpecSeqError(f"extension in stem {n} does not join two strings")
            a, b = lower[0], upper[0]
            strings.remove(a)
            strings.remove(b)
            strings.append((a[0], a[1] + b[1], b[2]))
        free = sum(1 for x in strings if x[2]) if free_at_top else 0
        torsion = tuple(p ** x[1] for x in strings if not (x[2] and free_at_top))
        if any(x[2] for x in strings):
            notes.append(n)
        series[n] = Group(free, torsion)
    series.notes = notes  # stems whose free part rests on towers reaching the window top
    return series
