"""Graded left comodules with explicit coaction tables.

A ``Comodule`` stores, for each basis element ``x``, its full coaction
``psi(x) = sum c * (a (x) y)`` as ``{(monomial, target): c}``, the term
``1 (x) x`` included.  Builtins cover every comodule used in the tmf and
ko computations; transforms produce suspensions, truncations, sums and
short exact sequences.
"""

from __future__ import annotations

import json
import random
import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .exactlin import LinearSolver, kernel_mod_p, rank_mod_p
from .hopf import HopfPresentation, builtin_hopf

__all__ = [
    "Comodule",
    "ComoduleReport",
    "SES",
    "FiltrationReport",
    "builtin_comodule",
    "verify_comodule",
    "transform",
    "check_filtration_graded",
    "find_isomorphism",
    "subcomodule_of_algebra",
]


class Comodule:
    def __init__(self, algebra: HopfPresentation, basis: Iterable[tuple[str, int]],
                 coaction: Mapping[str, Mapping], window: tuple[int, int] | None = None,
                 label: str = ""):
        self.algebra = algebra
        self.p = algebra.p
        basis = list(basis)
        self.names = [n for n, _ in basis]
        if len(set(self.names)) != len(self.names):
            raise ValueError("basis names must be distinct")
        self.deg = {n: int(d) for n, d in basis}
        self.index = {n: i for i, n in enumerate(self.names)}
        one = algebra.one
        self.coaction: dict = {}
        for n in self.names:
            terms: dict = {}
            for key, c in dict(coaction.get(n, {})).items():
                mono, tgt = key
                if not isinstance(mono, tuple) or len(mono) != len(one):
                    mono = algebra.mono(mono)
                if tgt not in self.deg:
                    raise KeyError(f"coaction of {n} targets unknown {tgt}")
                terms[(mono, tgt)] = (terms.get((mono, tgt), 0) + c) % self.p
            terms.setdefault((one, n), 1)
            self.coaction[n] = {k: v for k, v in terms.items() if v}
        degs = [self.deg[n] for n in self.names]
        if window is None:
            window = (min(degs), max(degs)) if degs else (0, 0)
        self.window = tuple(window)
        self.label = label
        # optional algebra structure {(x, y): {z: c}}; set when the comodule
        # is a subalgebra of the Hopf algebra (hZ), used for cup products
        self.product: dict | None = None
        # True when this is a finite window of an unbounded comodule, so
        # Ext in internal degrees above window[1] would be wrong
        self.truncated = False

    # -- helpers ---------------------------------------------------------
    def degree_of(self, name: str) -> int:
        return self.deg[name]

    def names_in_degree(self, d: int) -> list[str]:
        return [n for n in self.names if self.deg[n] == d]

    def degrees(self) -> list[int]:
        return sorted({self.deg[n] for n in self.names})

    def dims(self) -> dict:
        out: dict = {}
        for n in self.names:
            out[self.deg[n]] = out.get(self.deg[n], 0) + 1
        return out

    def reduced_coaction(self, name: str) -> dict:
        one = self.algebra.one
        return {k: v for k, v in self.coaction[name].items() if k[0] != one}

    def coaction_str(self, name: str) -> str:
        h = self.algebra
        parts = []
        for (m, t), c in sorted(self.coaction[name].items(), key=lambda kv: (-h.degree(kv[0][0]), kv[0])):
            cc = c if c <= self.p // 2 else c - self.p
            coef = "" if cc == 1 else ("-" if cc == -1 else f"{cc}*")
            parts.append(f"{coef}{h.mono_str(m)}(x){t}")
        return " + ".join(parts).replace("+ -", "- ")

    def over(self, algebra: HopfPresentation) -> "Comodule":
        """Re-express over another algebra containing the same generators."""
        coaction = {}
        for n, terms in self.coaction.items():
            coaction[n] = {(algebra.mono(self.algebra.mono_dict(m)), t): c for (m, t), c in terms.items()}
        out = Comodule(algebra, [(n, self.deg[n]) for n in self.names], coaction, self.window, self.label)
        out.product, out.truncated = self.product, self.truncated
        return out

    def __len__(self):
        return len(self.names)

    def __repr__(self):
        return f"Comodule({self.label!r}, dim={len(self)}, algebra={self.algebra.label})"

    # -- serialization ---------------------------------------------------
    def to_json(self) -> dict:
        h = self.algebra
        return {
            "label": self.label,
            "algebra": h.label,
            "window": list(self.window),
            "truncated": self.truncated,
            "basis": [{"name": n, "degree": self.deg[n]} for n in self.names],
            "coaction": {
                n: [[h.mono_dict(m), t, c] for (m, t), c in sorted(self.coaction[n].items())]
                for n in self.names
            },
        }

    @classmethod
    def from_json(cls, data: Mapping, algebra: HopfPresentation | None = None) -> "Comodule":
        if algebra is None:
            algebra = builtin_hopf(data["algebra"])
        coaction = {n: {(tuple(sorted(m.items())) if m else (), t): int(c) for m, t, c in terms}
                    for n, terms in data["coaction"].items()}
        basis = [(b["name"], int(b["degree"])) for b in data["basis"]]
        m = cls(algebra, basis, coaction, tuple(data.get("window", ())) or None, data.get("label", ""))
        m.truncated = bool(data.get("truncated", False))
        return m

    @classmethod
    def load(cls, path, algebra=None) -> "Comodule":
        with open(path) as fh:
            return cls.from_json(json.load(fh), algebra)


# ---------------------------------------------------------------------------
# verification


@dataclass
class ComoduleReport:
    counit: bool = True
    coassociativity: bool = True
    degree_monotonicity: bool = True
    failures: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.counit and self.coassociativity and self.degree_monotonicity


def verify_comodule(m: Comodule) -> ComoduleReport:
    h, p = m.algebra, m.p
    one = h.one
    rep = ComoduleReport()
    for x in m.names:
        psi = m.coaction[x]
        for (a, y), c in psi.items():
            if h.degree(a) + m.deg[y] != m.deg[x] or m.deg[y] > m.deg[x]:
                rep.degree_monotonicity = False
                rep.failures.append(("degree", x))
        unit_terms = {y: c for (a, y), c in psi.items() if a == one}
        if unit_terms != {x: 1}:
            rep.counit = False
            rep.failures.append(("counit", x))
        left: dict = {}
        for (a, y), c in psi.items():
            for (a1, a2), c2 in h.coproduct(a).items():
                k = (a1, a2, y)
                left[k] = (left.get(k, 0) + c * c2) % p
        right: dict = {}
        for (a, y), c in psi.items():
            for (b, z), c2 in m.coaction[y].items():
                k = (a, b, z)
                right[k] = (right.get(k, 0) + c * c2) % p
        if {k: v for k, v in left.items() if v} != {k: v for k, v in right.items() if v}:
            rep.coassociativity = False
            rep.failures.append(("coassociativity", x))
    return rep


# ---------------------------------------------------------------------------
# construction helpers


def subcomodule_of_algebra(h: HopfPresentation, elements: Sequence[tuple[str, Mapping]],
                           label: str = "") -> Comodule:
    """Comodule spanned by algebra elements closed under the left coaction Delta.

    ``elements`` is ``[(name, {monomial-spec: coeff})]``; the coaction is
    Delta restricted and rewritten in the given basis.
    """
    p = h.p
    vecs = []
    for name, elt in elements:
        v = {}
        for mono, c in elt.items():
            m = h.mono(mono)
            v[m] = (v.get(m, 0) + c) % p
        vecs.append((name, {k: c for k, c in v.items() if c}))
    degrees = {}
    for name, v in vecs:
        ds = {h.degree(m) for m in v}
        if len(ds) != 1:
            raise ValueError(f"element {name} is not homogeneous")
        degrees[name] = ds.pop()
    by_deg: dict = {}
    for name, v in vecs:
        by_deg.setdefault(degrees[name], []).append((name, v))
    coaction: dict = {}
    for name, v in vecs:
        delta: dict = {}
        for m, c in v.items():
            for (a, b), c2 in h.coproduct(m).items():
                delta.setdefault(a, {})
                delta[a][b] = (delta[a].get(b, 0) + c * c2) % p
        terms: dict = {}
        for a, right in delta.items():
            right = {k: c for k, c in right.items() if c}
            if not right:
                continue
            d = h.degree(next(iter(right)))
            cands = by_deg.get(d, [])
            monos = sorted({m for _, w in cands for m in w} | set(right))
            mat = np.array([[w.get(mm, 0) for _, w in cands] for mm in monos], dtype=np.int64).reshape(len(monos), len(cands))
            rhs = np.array([right.get(mm, 0) for mm in monos], dtype=np.int64)
            solver = LinearSolver(mat, p)
            if not solver.image_contains(rhs):
                raise ValueError(f"span is not closed under the coaction at {name}")
            sol = solver.solve(rhs)
            for (tname, _), coeff in zip(cands, sol):
                if coeff % p:
                    terms[(a, tname)] = int(coeff) % p
        coaction[name] = terms
    m = Comodule(h, [(n, degrees[n]) for n, _ in vecs], coaction, label=label)
    m.product = _subalgebra_product(h, vecs, degrees)
    return m


def _express(h, vecs_in_degree, target: dict):
    monos = sorted({mm for _, w in vecs_in_degree for mm in w} | set(target))
    mat = np.array([[w.get(mm, 0) for _, w in vecs_in_degree] for mm in monos],
                   dtype=np.int64).reshape(len(monos), len(vecs_in_degree))
    rhs = np.array([target.get(mm, 0) for mm in monos], dtype=np.int64)
    solver = LinearSolver(mat, h.p)
    if not solver.image_contains(rhs):
        return None
    sol = solver.solve(rhs)
    return {name: int(c) % h.p for (name, _), c in zip(vecs_in_degree, sol) if c % h.p}


def _subalgebra_product(h: HopfPresentation, vecs, degrees) -> dict | None:
    """Multiplication table if the span is closed under products, else None."""
    by_deg: dict = {}
    for name, v in vecs:
        by_deg.setdefault(degrees[name], []).append((name, v))
    table: dict = {}
    for x, vx in vecs:
        for y, vy in vecs:
            prod: dict = {}
            for a, ca in vx.items():
                for b, cb in vy.items():
                    r = h.mul(a, b)
                    if r is not None:
                        prod[r[1]] = (prod.get(r[1], 0) + r[0] * ca * cb) % h.p
            prod = {k: c for k, c in prod.items() if c}
            if not prod:
                continue
            got = _express(h, by_deg.get(degrees[x] + degrees[y], []), prod)
            if got is None:
                return None
            if got:
                table[(x, y)] = got
    return table


def _hz_elements(p: int) -> list:
    if p == 2:
        return [("i0", {"1": 1}), ("i2", {"xi1^2": 1}), ("i3", {"xi2": 1, "xi1^3": 1}),
                ("i5", {"xi1^2 xi2": 1})]
    q = 2 * (p - 1)
    out = []
    for e in (0, 1):
        for i in range(p):
            d = q * i + e * (q + 1)
            # scalings chosen so that at p = 3 psi(i4) = -xi1 (x) i0 and psi(i13)
            # carries the all-plus terms xi1 (x) i9, tau1 (x) i8, ...
            s = (-1) ** i if i < p - 1 else 1
            xi = f"xi1^{i}" if i else "1"
            if e == 0:
                elt = {xi: s}
            else:
                elt = {f"{xi} tau1" if i else "tau1": s}
                if i + 1 < p:
                    elt[f"xi1^{i + 1} tau0"] = -s
            out.append((f"i{d}", elt))
    out.sort(key=lambda t: int(t[0][1:]))
    return out


def _hz(h: HopfPresentation) -> Comodule:
    return subcomodule_of_algebra(h, _hz_elements(h.p), label=f"hZ({h.p})")


def _default_algebra(p: int) -> HopfPresentation:
    return builtin_hopf({2: "A1-p2", 3: "A-tmf-p3"}.get(p, "A-eo-p"), p if p > 3 else None)


def _shift_name(name: str, k: int) -> str:
    m = re.fullmatch(r"([A-Za-z_]+)(-?\d+)", name)
    if m:
        return f"{m.group(1)}{int(m.group(2)) + k}"
    return f"S{k}{name}"


def _glued_copies(hz: Comodule, shifts: Sequence[int], glue: tuple, prefix: str = "e",
                  max_deg: int | None = None, drop: Iterable[str] = ()) -> tuple[list, dict]:
    """Copies of hZ at the given shifts; the top class of copy j gains
    ``glue_monomial (x) bottom(copy j+1)``."""
    h = hz.algebra
    glue_mono, glue_coeff = glue
    top = max(hz.names, key=lambda n: hz.deg[n])
    bottom = min(hz.names, key=lambda n: hz.deg[n])
    basis, coaction = [], {}
    drop = set(drop)
    for j, s in enumerate(shifts):
        for n in hz.names:
            nm = f"{prefix}{hz.deg[n] + s}"
            basis.append((nm, hz.deg[n] + s))
            coaction[nm] = {(m, f"{prefix}{hz.deg[t] + s}"): c for (m, t), c in hz.coaction[n].items()}
        if j + 1 < len(shifts):
            nb = f"{prefix}{hz.deg[bottom] + shifts[j + 1]}"
            coaction[f"{prefix}{hz.deg[top] + s}"][(h.mono(glue_mono), nb)] = glue_coeff
    keep = {nm for nm, d in basis if (max_deg is None or d <= max_deg) and nm not in drop}
    basis = sorted([(nm, d) for nm, d in basis if nm in keep], key=lambda t: t[1])
    coaction = {nm: {k: c for k, c in coaction[nm].items() if k[1] in keep} for nm in keep}
    return basis, coaction


def _r3(h: HopfPresentation, max_deg: int, glue_coeff: int = 1) -> Comodule:
    if max_deg < 0:
        raise ValueError("window too small")
    hz = _hz(h)
    p = h.p
    period = 2 * p * (p - 1)
    shifts = list(range(0, max_deg + 1, period))
    basis, coaction = _glued_copies(hz, shifts, ("tau0", glue_coeff), "e", max_deg)
    return Comodule(h, basis, coaction, (0, max_deg), label=f"R{p}({max_deg})")


def _r2(h: HopfPresentation, max_deg: int) -> Comodule:
    hz = _hz(h)
    shifts = list(range(0, max_deg + 1, 4))
    basis, coaction = _glued_copies(hz, shifts, ("xi1", 1), "e", max_deg)
    return Comodule(h, basis, coaction, (0, max_deg), label=f"R2({max_deg})")


def _tate(h: HopfPresentation, k_min: int, k_max: int) -> Comodule:
    if k_max < k_min:
        raise ValueError("empty Tate window")
    hz = _hz(h)
    shifts = [12 * k - 1 for k in range(k_min, k_max + 1)]
    basis, coaction = _glued_copies(hz, shifts, ("tau0", 1), "e")
    lo = 12 * k_min - 1
    return Comodule(h, basis, coaction, (lo, 12 * k_max + 12), label=f"tate-R3({k_min},{k_max})")


def builtin_comodule(label: str, *params, algebra: HopfPresentation | str | None = None) -> Comodule:
    """Builtin comodules.

    ``trivial(p)``, ``hZ(p)``, ``R2(max_deg)``, ``R3(max_deg)``,
    ``SigmaBSigma3(max_deg)``, ``M(i)``, ``R3-skeleton(n)``, ``RPinf(max_deg)``,
    ``tate-R3(k_min, k_max)``, ``Rp(p, max_deg)``, ``Rp-graded(p, max_deg)``.
    """
    if isinstance(algebra, str):
        algebra = builtin_hopf(algebra)

    def alg(p):
        return algebra if algebra is not None else _default_algebra(p)

    if label == "trivial":
        p = params[0] if params else 3
        h = alg(p)
        return Comodule(h, [("e0", 0)], {}, label=f"trivial({p})")
    if label == "hZ":
        p = params[0] if params else 3
        return _hz(alg(p))
    if label == "R2":
        return _truncated(_r2(alg(2), params[0]))
    if label == "R3":
        return _truncated(_r3(alg(3), params[0]))
    if label == "R3-skeleton":
        n = params[0]
        m = _r3(alg(3), n)
        m.label = f"R3-skeleton({n})"
        return m
    if label == "SigmaBSigma3":
        ses = transform(_r3(alg(3), params[0]), "sub", ["e0"])
        q = ses.quotient
        q.label = f"SigmaBSigma3({params[0]})"
        return _truncated(q)
    if label == "RPinf":
        ses = transform(_r2(alg(2), params[0] + 1), "sub", ["e0"])
        q = transform(ses.quotient, "suspend", -1)
        q.label = f"RPinf({params[0]})"
        return _truncated(q)
    if label == "M":
        i = params[0]
        if not 1 <= i <= 12:
            raise ValueError("M(i) needs 1 <= i <= 12")
        hz = _hz(alg(3))
        keep = [n for n in hz.names if hz.deg[n] <= min(i, 11)]
        m = transform(hz, "sub", keep).sub
        if i == 12:
            m = transform(m, "direct_sum", Comodule(hz.algebra, [("e12", 12)], {}))
        m = Comodule(m.algebra, [(_e(n), m.deg[n]) for n in m.names],
                     {_e(n): {(a, _e(t)): c for (a, t), c in m.coaction[n].items()} for n in m.names},
                     label=f"M({i})")
        return m
    if label == "tate-R3":
        k_min, k_max = params
        return _tate(alg(3), k_min, k_max)
    if label in ("Rp", "Rp-graded"):
        p, max_deg = params
        h = alg(p)
        if label == "Rp":
            return _truncated(_r3(h, max_deg) if p != 2 else _r2(h, max_deg))
        hz = _hz(h)
        period = 2 * p * (p - 1)
        shifts = list(range(0, max_deg + 1, period))
        # zero glue: the direct sum of the shifted copies
        glue = ("xi1" if p == 2 else "tau0", 0)
        basis, coaction = _glued_copies(hz, shifts, glue, "e", max_deg)
        return _truncated(Comodule(h, basis, coaction, (0, max_deg), label=f"Rp-graded({p},{max_deg})"))
    raise KeyError(f"unknown comodule label {label!r}")


def _truncated(m: Comodule) -> Comodule:
    m.truncated = True
    return m


def _e(name: str) -> str:
    return "e" + name[1:] if name[0] == "i" else name


# ---------------------------------------------------------------------------
# transforms


@dataclass
class SES:
    sub: Comodule
    total: Comodule
    quotient: Comodule
    inclusion: dict  # sub name -> total name
    projection: dict  # total name -> quotient name (only for kept names)


def _closed(m: Comodule, names: Iterable[str]) -> bool:
    s = set(names)
    return all(t in s for n in s for (_, t) in m.coaction[n])


def closure(m: Comodule, names: Iterable[str]) -> set:
    """Smallest basis-spanned subcomodule containing ``names``."""
    out = set(names)
    todo = list(out)
    while todo:
        n = todo.pop()
        for (_, t) in m.coaction[n]:
            if t not in out:
                out.add(t)
                todo.append(t)
    return out


def _restrict(m: Comodule, keep: Sequence[str], label: str) -> Comodule:
    ks = set(keep)
    basis = [(n, m.deg[n]) for n in m.names if n in ks]
    coaction = {n: {k: c for k, c in m.coaction[n].items() if k[1] in ks} for n in ks}
    return Comodule(m.algebra, basis, coaction, None, label)


def transform(m: Comodule, op: str, arg=None):
    """``suspend(k)``, ``truncate(max_deg)``, ``direct_sum(m2)``,
    ``sub(names)`` and ``quotient(names)``; the last two return an ``SES``."""
    if op == "suspend":
        k = int(arg)
        ren = {n: _shift_name(n, k) for n in m.names}
        basis = [(ren[n], m.deg[n] + k) for n in m.names]
        coaction = {ren[n]: {(a, ren[t]): c for (a, t), c in m.coaction[n].items()} for n in m.names}
        return Comodule(m.algebra, basis, coaction, (m.window[0] + k, m.window[1] + k), f"S^{k}{m.label}")
    if op == "truncate":
        keep = [n for n in m.names if m.deg[n] <= arg]
        out = _restrict(m, keep, f"{m.label}<={arg}")
        out.window = (m.window[0], min(m.window[1], arg))
        return out
    if op == "direct_sum":
        other: Comodule = arg
        if other.algebra.names != m.algebra.names:
            other = other.over(m.algebra)
        ren = {n: (n if n not in m.deg else n + "'") for n in other.names}
        basis = [(n, m.deg[n]) for n in m.names] + [(ren[n], other.deg[n]) for n in other.names]
        coaction = dict(m.coaction)
        coaction.update({ren[n]: {(a, ren[t]): c for (a, t), c in other.coaction[n].items()} for n in other.names})
        lo = min(m.window[0], other.window[0])
        hi = max(m.window[1], other.window[1])
        return Comodule(m.algebra, basis, coaction, (lo, hi), f"{m.label}+{other.label}")
    if op in ("sub", "quotient"):
        names = list(arg)
        unknown = [n for n in names if n not in m.deg]
        if unknown:
            raise KeyError(f"unknown basis elements {unknown}")
        if op == "sub":
            sub_names = [n for n in m.names if n in set(names)]
        else:
            sub_names = [n for n in m.names if n not in set(names)]
        if not _closed(m, sub_names):
            raise ValueError("subset is not closed under the coaction")
        sub = _restrict(m, sub_names, f"sub({m.label})")
        q_names = [n for n in m.names if n not in set(sub_names)]
        quot = _restrict(m, q_names, f"quot({m.label})")
        return SES(sub, m, quot, {n: n for n in sub_names}, {n: n for n in q_names})
    raise KeyError(f"unknown transform {op!r}")


# ---------------------------------------------------------------------------
# isomorphisms and filtrations


def find_isomorphism(a: Comodule, b: Comodule, shift: int = 0, seed: int = 0) -> dict | None:
    """A comodule isomorphism a -> Sigma^{-shift} b as {a-name: {b-name: c}}, or None.

    Solves the linear equations psi_b phi = (1 (x) phi) psi_a for a
    degree-preserving phi and picks an invertible solution.
    """
    p = a.p
    if a.algebra.names != b.algebra.names:
        b = b.over(a.algebra)
    da = {d: c for d, c in a.dims().items()}
    db = {d - shift: c for d, c in b.dims().items()}
    if da != db:
        return None
    # unknowns: phi[x, y] for x in a, y in b with deg y = deg x + shift
    unknowns = [(x, y) for x in a.names for y in b.names if b.deg[y] == a.deg[x] + shift]
    uidx = {u: i for i, u in enumerate(unknowns)}
    rows: dict = {}

    def add(key, col, c):
        row = rows.setdefault(key, {})
        row[col] = (row.get(col, 0) + c) % p

    for x in a.names:
        # psi_b(phi(x)) = sum_y phi[x,y] psi_b(y)
        for y in b.names:
            if (x, y) not in uidx:
                continue
            for (m, z), c in b.coaction[y].items():
                add((x, m, z), uidx[(x, y)], c)
        # (1 (x) phi) psi_a(x) = sum c m (x) phi(w)
        for (m, w), c in a.coaction[x].items():
            for z in b.names:
                if (w, z) in uidx:
                    add((x, m, z), uidx[(w, z)], -c)
    keys = list(rows)
    mat = np.zeros((len(keys), len(unknowns)), dtype=np.int64)
    for i, k in enumerate(keys):
        for j, c in rows[k].items():
            mat[i, j] = c
    ker = kernel_mod_p(mat, p) if len(unknowns) else np.zeros((0, 0), np.int64)
    if ker.shape[0] == 0:
        return None if a.names else {}
    rng = random.Random(seed)
    for _ in range(20):
        coeffs = np.array([rng.randrange(p) for _ in range(ker.shape[0])], dtype=np.int64)
        sol = (coeffs @ ker) % p
        ok = True
        for d in da:
            xs = [x for x in a.names if a.deg[x] == d]
            ys = [y for y in b.names if b.deg[y] == d + shift]
            blk = np.array([[sol[uidx[(x, y)]] for y in ys] for x in xs], dtype=np.int64)
            if rank_mod_p(blk, p) != len(xs):
                ok = False
                break
        if ok:
            return {x: {y: int(sol[uidx[(x, y)]]) for y in b.names
                        if (x, y) in uidx and sol[uidx[(x, y)]]} for x in a.names}
    return None


@dataclass
class FiltrationReport:
    ok: bool
    shifts: list = field(default_factory=list)  # shifts of complete blocks
    partial: list = field(default_factory=list)  # names in incomplete top block
    obstruction: str | None = None
    isomorphisms: list = field(default_factory=list)


def check_filtration_graded(m: Comodule, block_size: int, model: Comodule) -> FiltrationReport:
    """Check that the filtration by subcomodules generated by the top classes
    of each block has associated graded a sum of shifted copies of ``model``."""
    top_deg = max(model.deg.values())
    bot_deg = min(model.deg.values())
    if not m.names:
        return FiltrationReport(True)
    base = min(m.deg.values())
    off = (base - bot_deg + top_deg) % block_size
    tops = sorted([n for n in m.names if m.deg[n] % block_size == off], key=lambda n: m.deg[n])
    shifts = [m.deg[t] - top_deg for t in tops]
    # F_k: everything from the bottom of block k up, except the tops of
    # earlier blocks (which overlap the next block in degree)
    def level(k, lo):
        early = set(tops[:k])
        return closure(m, [n for n in m.names if m.deg[n] >= lo + bot_deg and n not in early])

    levels = [level(k, s) for k, s in enumerate(shifts)]
    if shifts:
        levels.append(level(len(shifts), shifts[-1] + block_size))
    rep = FiltrationReport(True)
    for k, shift in enumerate(shifts):
        piece = levels[k] - levels[k + 1]
        q = _restrict(m, [n for n in m.names if n in piece], "gr")
        iso = find_isomorphism(model, q, shift)
        if iso is None:
            rep.ok = False
            rep.obstruction = f"block with top {tops[k]} is not a shifted copy of {model.label}"
            return rep
        rep.shifts.append(shift)
        rep.isomorphisms.append(iso)
    used = set().union(*[levels[k] - levels[k + 1] for k in range(len(shifts))]) if shifts else set()
    rep.partial = [n for n in m.names if n not in used]
    if shifts and any(m.deg[n] < shifts[-1] + block_size + bot_deg for n in rep.partial):
        rep.ok = False
        rep.obstruction = f"classes {rep.partial} are not in any block"
    return rep
