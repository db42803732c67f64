"""Reduced cobar complex of a left comodule.

A chain is a dict ``{((m1, ..., ms), x): coeff}`` standing for the sum of
terms ``[m1|...|ms] x`` with positive-degree monomials ``mi``. The
differential uses the cosimplicial signs

    d[m1|...|ms]x = sum_i (-1)^i [..|D(mi)|..]x + (-1)^(s+1) [m1|...|ms|psi(x)]

with D and psi the reduced coproduct and coaction. Internal degrees never
enter the differential's signs; they only enter cup products, through the
Koszul rule for the tensor product of graded algebras.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Mapping

import numpy as np

from ..comod import Comodule
from ..exactlin import LinearSolver, kernel_mod_p, rank_mod_p, rref
from ..hopf import HopfPresentation

Chain = dict


def _clean(chain: Mapping, p: int) -> Chain:
    return {k: v % p for k, v in chain.items() if v % p}


def add_chains(p: int, *terms: tuple[int, Mapping]) -> Chain:
    out: dict = {}
    for c, chain in terms:
        for k, v in chain.items():
            out[k] = (out.get(k, 0) + c * v) % p
    return {k: v for k, v in out.items() if v}


@dataclass
class CobarCohomology:
    s: int
    t: int
    dim: int
    representatives: list  # chains
    cycles_dim: int
    boundaries_dim: int


class CobarComplex:
    """Cobar complex C(A; M) with cached bases and differential matrices."""

    def __init__(self, m: Comodule):
        self.m = m
        self.h: HopfPresentation = m.algebra
        self.p = m.p
        h = self.h
        self._pos_by_deg: dict = {}
        for mono in h.basis():
            d = h.degree(mono)
            if d > 0:
                self._pos_by_deg.setdefault(d, []).append(mono)
        self._rcop = {mono: h.reduced_coproduct(mono) for ms in self._pos_by_deg.values() for mono in ms}
        self._rcoact = {x: m.reduced_coaction(x) for x in m.names}
        self._mats: dict = {}
        self._coh: dict = {}
        self._seqs = lru_cache(maxsize=None)(self._sequences)

    # -- degrees and bases -----------------------------------------------
    def term_degree(self, key) -> int:
        monos, x = key
        return sum(self.h.degree(a) for a in monos) + self.m.deg[x]

    def _sequences(self, s: int, n: int) -> tuple:
        if s == 0:
            return ((),) if n == 0 else ()
        out = []
        for d, monos in self._pos_by_deg.items():
            if d > n - (s - 1):
                continue
            rest = self._seqs(s - 1, n - d)
            if not rest:
                continue
            for a in monos:
                out.extend((a,) + r for r in rest)
        return tuple(out)

    def basis(self, s: int, t: int) -> list:
        key = ("basis", s, t)
        if key not in self._mats:
            out = []
            for x in self.m.names:
                for seq in self._seqs(s, t - self.m.deg[x]):
                    out.append((seq, x))
            self._mats[key] = out
            self._mats[("index", s, t)] = {k: i for i, k in enumerate(out)}
        return self._mats[key]

    def index(self, s: int, t: int) -> dict:
        self.basis(s, t)
        return self._mats[("index", s, t)]

    def to_vector(self, chain: Mapping, s: int, t: int) -> np.ndarray:
        idx = self.index(s, t)
        v = np.zeros(len(idx), dtype=np.int64)
        for k, c in chain.items():
            if k not in idx:
                raise ValueError(f"term {self.term_str(k)} is not in C^({s},{t})")
            v[idx[k]] = c % self.p
        return v

    def from_vector(self, v, s: int, t: int) -> Chain:
        b = self.basis(s, t)
        return {b[i]: int(c) % self.p for i, c in enumerate(v) if int(c) % self.p}

    # -- differential ----------------------------------------------------
    def differential(self, chain: Mapping) -> Chain:
        p = self.p
        out: dict = {}
        for (monos, x), c in chain.items():
            s = len(monos)
            for i, a in enumerate(monos):
                sign = -1 if i % 2 == 0 else 1  # (-1)^(i+1) with 0-based i
                for (l, r), c2 in self._rcop[a].items():
                    key = (monos[:i] + (l, r) + monos[i + 1:], x)
                    out[key] = (out.get(key, 0) + sign * c * c2) % p
            sign = 1 if s % 2 else -1  # (-1)^(s+1)
            for (a, y), c2 in self._rcoact[x].items():
                key = (monos + (a,), y)
                out[key] = (out.get(key, 0) + sign * c * c2) % p
        return {k: v for k, v in out.items() if v}

    def matrix(self, s: int, t: int) -> np.ndarray:
        """Matrix of d: C^(s,t) -> C^(s+1,t), columns indexed by basis(s, t)."""
        key = ("d", s, t)
        if key not in self._mats:
            src = self.basis(s, t)
            tgt = self.index(s + 1, t)
            mat = np.zeros((len(tgt), len(src)), dtype=np.int64)
            for j, k in enumerate(src):
                for k2, c in self.differential({k: 1}).items():
                    mat[tgt[k2], j] = c
            self._mats[key] = mat
        return self._mats[key]

    # -- cohomology ------------------------------------------------------
    def cohomology(self, s: int, t: int) -> CobarCohomology:
        key = (s, t)
        if key in self._coh:
            return self._coh[key]
        p = self.p
        n = len(self.basis(s, t))
        d_out = self.matrix(s, t)
        cycles = kernel_mod_p(d_out, p) if d_out.shape[0] else np.eye(n, dtype=np.int64)
        if s > 0:
            d_in = self.matrix(s - 1, t)
        else:
            d_in = np.zeros((n, 0), dtype=np.int64)
        b_rank = rank_mod_p(d_in, p) if d_in.size else 0
        reps = []
        if len(cycles):
            # pivot columns past the boundaries pick cycles independent mod them
            aug = np.concatenate([d_in, cycles.T], axis=1)
            _, piv = rref(aug, p)
            nb = d_in.shape[1]
            reps = [self.from_vector(cycles[c - nb], s, t) for c in piv if c >= nb]
        res = CobarCohomology(s, t, len(reps), reps, len(cycles), b_rank)
        self._coh[key] = res
        return res

    def coordinates(self, z: Mapping, s: int, t: int) -> np.ndarray:
        """Coordinates of a cocycle in the chosen representative basis."""
        if self.differential(z):
            raise ValueError("chain is not a cocycle")
        coh = self.cohomology(s, t)
        if not coh.dim:
            return np.zeros(0, dtype=np.int64)
        cols = [self.to_vector(r, s, t) for r in coh.representatives]
        d_in = self.matrix(s - 1, t) if s > 0 else np.zeros((len(self.basis(s, t)), 0), dtype=np.int64)
        a = np.concatenate([np.array(cols, dtype=np.int64).reshape(len(cols), -1).T, d_in], axis=1)
        sol = LinearSolver(a, self.p).solve(self.to_vector(z, s, t))
        return sol[: len(cols)] % self.p

    def is_coboundary(self, z: Mapping, s: int, t: int) -> bool:
        if s == 0:
            return not _clean(z, self.p)
        d_in = self.matrix(s - 1, t)
        return bool(LinearSolver(d_in, self.p).image_contains(self.to_vector(z, s, t)))

    def bounding_chain(self, z: Mapping, s: int, t: int) -> tuple[Chain | None, dict]:
        """Solve d(x) = z for x in C^(s-1,t); also returns rank data."""
        d_in = self.matrix(s - 1, t)
        rhs = self.to_vector(z, s, t)
        solver = LinearSolver(d_in, self.p)
        aug = rank_mod_p(np.concatenate([d_in, rhs.reshape(-1, 1)], axis=1), self.p)
        cert = {"rank_d": solver.rank, "rank_augmented": aug,
                "source_dim": d_in.shape[1], "target_dim": d_in.shape[0]}
        if not solver.image_contains(rhs):
            return None, cert
        return self.from_vector(solver.solve(rhs), s - 1, t), cert

    # -- printing --------------------------------------------------------
    def term_str(self, key) -> str:
        monos, x = key
        return "[" + "|".join(self.h.mono_str(a) for a in monos) + "]" + x

    def chain_str(self, chain: Mapping) -> str:
        parts = []
        for k in sorted(chain, key=lambda k: (k[1], k[0])):
            c = chain[k]
            cc = c if c <= self.p // 2 else c - self.p
            coef = "" if cc == 1 else ("-" if cc == -1 else f"{cc}")
            parts.append(f"{coef}{self.term_str(k)}")
        return " + ".join(parts).replace("+ -", "- ") or "0"


# ---------------------------------------------------------------------------
# products and maps


def _product_table(m: Comodule) -> dict:
    if m.product is not None:
        return m.product
    if len(m) == 1 and m.deg[m.names[0]] == 0:
        x = m.names[0]
        return {(x, x): {x: 1}}
    raise ValueError(f"{m.label} carries no algebra structure")


def iterated_coaction(m: Comodule, x: str, k: int) -> dict:
    """psi^k(x) = sum a1 (x) ... (x) ak (x) y as {((a1..ak), y): c}."""
    if k == 0:
        return {((), x): 1}
    out: dict = {}
    for (a, y), c in m.coaction[x].items():
        for (rest, z), c2 in iterated_coaction(m, y, k - 1).items():
            key = ((a,) + rest, z)
            out[key] = (out.get(key, 0) + c * c2) % m.p
    return {k_: v for k_, v in out.items() if v}


def cup(m: Comodule, u: Mapping, v: Mapping) -> Chain:
    """Cup product of cochains for a comodule algebra ``m``.

    [a]x . [b]y = sum +- [a | x(1) b1 | ... | x(k) bk] x(k+1) y, the front/back
    face product of the cosimplicial algebra, with Koszul signs.
    """
    h, p = m.algebra, m.p
    table = _product_table(m)
    out: dict = {}
    for (amonos, x), cu in u.items():
        for (bmonos, y), cv in v.items():
            k = len(bmonos)
            for (xs, xl), c1 in iterated_coaction(m, x, k).items():
                sign = 1
                monos = list(amonos)
                ok = True
                for i, b in enumerate(bmonos):
                    r = h.mul(xs[i], b)
                    if r is None:
                        ok = False
                        break
                    sign *= r[0]
                    later = sum(h.degree(xx) for xx in xs[i + 1:]) + m.deg[xl]
                    if p != 2 and (h.degree(b) * later) % 2:
                        sign = -sign
                    monos.append(r[1])
                if not ok:
                    continue
                for z, c2 in table.get((xl, y), {}).items():
                    key = (tuple(monos), z)
                    out[key] = (out.get(key, 0) + sign * cu * cv * c1 * c2) % p
    return {k_: v_ for k_, v_ in out.items() if v_}


def juxtapose(sphere_chain: Mapping, chain: Mapping, p: int) -> Chain:
    """Action of a sphere cochain [a]1 on a module cochain [b]y: [a|b]y."""
    out: dict = {}
    for (amonos, _), c1 in sphere_chain.items():
        for (bmonos, y), c2 in chain.items():
            key = (amonos + bmonos, y)
            out[key] = (out.get(key, 0) + c1 * c2) % p
    return {k: v for k, v in out.items() if v}


def map_chain(chain: Mapping, mono_map: Callable, elem_map: Mapping, p: int) -> Chain:
    """Apply an algebra map on every slot and a linear map on the module slot.

    ``mono_map(m)`` returns a monomial of the target algebra or None; terms
    whose slots die or become degree zero are dropped (reduced complex).
    """
    out: dict = {}
    for (monos, x), c in chain.items():
        images = []
        for a in monos:
            b = mono_map(a)
            if b is None or not any(b):
                break
            images.append(b)
        else:
            for y, c2 in elem_map.get(x, {}).items():
                key = (tuple(images), y)
                out[key] = (out.get(key, 0) + c * c2) % p
    return {k: v for k, v in out.items() if v}


def chain_to_json(cx: CobarComplex, chain: Mapping) -> list:
    h = cx.h
    return [[[h.mono_str(a) for a in monos], x, int(c)] for (monos, x), c in
            sorted(chain.items(), key=lambda kv: (kv[0][1], kv[0][0]))]


def chain_from_json(cx: CobarComplex, data) -> Chain:
    h = cx.h
    return _clean({(tuple(h.mono(a) for a in monos), x): int(c) for monos, x, c in data}, cx.p)
