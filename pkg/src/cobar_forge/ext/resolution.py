"""Minimal free resolutions over the dual of a finite Hopf algebra.

A left A-comodule M is a right module over B = A* through x.f = sum f(a) x'
for psi(x) = sum a (x) x'. Its linear dual N is then a left B-module, and

    Ext_A(F_p, M)^(s,t) = Ext_B(N, F_p)^(s,t) = #(generators of P_s in degree t)

for a minimal resolution P -> N. We keep the dual element x* in degree
deg x, so B acts by raising degrees. Products with the sphere come from
lifting a class to a chain map into the resolution of F_p (Yoneda
composition).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..comod import Comodule
from ..exactlin import LinearSolver, kernel_mod_p, rref
from ..hopf import DualAlgebra, dualize_to_algebra


@dataclass
class DualModule:
    """Left B-module N = M* with basis named after M's basis."""

    degrees: dict  # name -> degree
    by_degree: dict  # degree -> [names]
    action: dict  # (f index, name) -> {name: c}

    @classmethod
    def from_comodule(cls, m: Comodule, b: DualAlgebra) -> "DualModule":
        pos = {mono: i for i, mono in enumerate(b.basis)}
        action: dict = {}
        for x in m.names:
            for (a, y), c in m.coaction[x].items():
                slot = action.setdefault((pos[a], y), {})
                slot[x] = (slot.get(x, 0) + c) % m.p
        by_degree: dict = {}
        for x in m.names:
            by_degree.setdefault(m.deg[x], []).append(x)
        return cls(dict(m.deg), by_degree, action)


@dataclass
class _Level:
    gens: list = field(default_factory=list)  # degrees of generators
    boundary: list = field(default_factory=list)  # dicts into the previous level
    bases: dict = field(default_factory=dict)  # t -> list of (f, g)
    index: dict = field(default_factory=dict)  # t -> {(f, g): i}
    dmat: dict = field(default_factory=dict)  # t -> matrix to previous level
    solvers: dict = field(default_factory=dict)


class MinimalResolution:
    """Minimal resolution of N = M* through homological degree ``max_s`` and
    internal degree ``max_t``."""

    def __init__(self, m: Comodule, max_s: int, max_t: int, algebra: DualAlgebra | None = None):
        self.comodule = m
        self.p = m.p
        self.b = algebra or dualize_to_algebra(m.algebra)
        self.n = DualModule.from_comodule(m, self.b)
        self.max_s = max_s
        self.max_t = max_t
        self.min_t = min(m.deg.values()) if m.names else 0
        self._bdeg = self.b.by_degree
        self._top = max(self.b.degrees)
        # left multiplication by f on B: f_j -> {k: c}
        self._lmul: dict = {}
        for (i, j), prod in self.b.mult.items():
            self._lmul.setdefault(i, {})[j] = prod
        self.levels: list[_Level] = []
        self._computed = False

    # -- bases -------------------------------------------------------------
    def _basis(self, s: int, t: int) -> list:
        lev = self.levels[s]
        if t not in lev.bases:
            out = []
            for g, dg in enumerate(lev.gens):
                if 0 <= t - dg <= self._top:
                    out.extend((f, g) for f in self._bdeg.get(t - dg, []))
            lev.bases[t] = out
            lev.index[t] = {k: i for i, k in enumerate(out)}
        return lev.bases[t]

    def _target_index(self, s: int, t: int) -> dict:
        """Basis index of the target of d_s in degree t."""
        if s == 0:
            return {x: i for i, x in enumerate(self.n.by_degree.get(t, []))}
        self._basis(s - 1, t)
        return self.levels[s - 1].index[t]

    def act(self, s: int, f: int, elem: dict) -> dict:
        """f . elem for elem in P_s (keys (f', g)) or in N when s == -1."""
        p = self.p
        out: dict = {}
        if s == -1:
            for x, c in elem.items():
                for y, c2 in self.n.action.get((f, x), {}).items():
                    out[y] = (out.get(y, 0) + c * c2) % p
        else:
            row = self._lmul.get(f, {})
            for (f2, g), c in elem.items():
                for k, c2 in row.get(f2, {}).items():
                    out[(k, g)] = (out.get((k, g), 0) + c * c2) % p
        return {k: v for k, v in out.items() if v}

    def _dmatrix(self, s: int, t: int, upto: int | None = None) -> np.ndarray:
        """Matrix of d_s: (P_s)_t -> target; columns for generators < upto only."""
        lev = self.levels[s]
        basis = self._basis(s, t) if upto is None else [
            (f, g) for f, g in self._basis_partial(s, t, upto)]
        tgt = self._target_index(s, t)
        mat = np.zeros((len(tgt), len(basis)), dtype=np.int64)
        for j, (f, g) in enumerate(basis):
            for key, c in self.act(s - 1, f, lev.boundary[g]).items():
                mat[tgt[key], j] = c
        return mat

    def _basis_partial(self, s: int, t: int, upto: int) -> list:
        lev = self.levels[s]
        out = []
        for g in range(upto):
            dg = lev.gens[g]
            if 0 <= t - dg <= self._top:
                out.extend((f, g) for f in self._bdeg.get(t - dg, []))
        return out

    def dmat(self, s: int, t: int) -> np.ndarray:
        lev = self.levels[s]
        if t not in lev.dmat:
            lev.dmat[t] = self._dmatrix(s, t)
        return lev.dmat[t]

    def solver(self, s: int, t: int) -> LinearSolver:
        lev = self.levels[s]
        if t not in lev.solvers:
            lev.solvers[t] = LinearSolver(self.dmat(s, t), self.p)
        return lev.solvers[t]

    # -- the resolution ----------------------------------------------------
    def compute(self) -> "MinimalResolution":
        if self._computed:
            return self
        p = self.p
        for s in range(self.max_s + 1):
            lev = _Level()
            self.levels.append(lev)
            for t in range(self.min_t + s, self.max_t + 1):
                tgt = self._target_index(s, t)
                if not tgt:
                    continue
                if s == 0:
                    kernel = np.eye(len(tgt), dtype=np.int64)
                else:
                    prev = self.dmat(s - 1, t)
                    kernel = kernel_mod_p(prev, p) if prev.shape[0] else np.eye(prev.shape[1], dtype=np.int64)
                if not len(kernel):
                    continue
                old = len(lev.gens)
                image = self._dmatrix(s, t, upto=old)
                aug = np.concatenate([image, kernel.T], axis=1)
                _, piv = rref(aug, p)
                nimg = image.shape[1]
                keys = list(tgt)
                new = [kernel[c - nimg] for c in piv if c >= nimg]
                for v in new:
                    lev.gens.append(t)
                    lev.boundary.append({keys[i]: int(c) for i, c in enumerate(v) if c})
                if new:
                    lev.bases.pop(t, None)
                    lev.index.pop(t, None)
        self._computed = True
        return self

    # -- Ext ---------------------------------------------------------------
    def dims(self) -> dict:
        self.compute()
        out: dict = {}
        for s, lev in enumerate(self.levels):
            for t in lev.gens:
                out[(s, t)] = out.get((s, t), 0) + 1
        return out

    def generators(self, s: int, t: int) -> list[int]:
        """Indices of generators of P_s in degree t; these index Ext^(s,t)."""
        self.compute()
        return [g for g, d in enumerate(self.levels[s].gens) if d == t]

    def ext_index(self, s: int, t: int) -> dict:
        return {g: i for i, g in enumerate(self.generators(s, t))}

    # -- chain maps and products ---------------------------------------------
    def lift_class(self, s: int, gen: int, sphere: "MinimalResolution", depth: int) -> list[dict]:
        """Chain map P_(s+i) -> Q_i (i <= depth) lifting the dual of ``gen``.

        Returns, for each i, ``{h: element of Q_i}`` over generators h of
        P_(s+i) inside the window.
        """
        self.compute()
        sphere.compute()
        p = self.p
        tx = self.levels[s].gens[gen]
        maps: list[dict] = [{gen: {(0, 0): 1}}]
        for i in range(1, depth + 1):
            if s + i > self.max_s or i > sphere.max_s:
                break
            lev = self.levels[s + i]
            prev = maps[-1]
            cur: dict = {}
            by_u: dict = {}
            for h, dh in enumerate(lev.gens):
                u = dh - tx
                if u > sphere.max_t:
                    continue
                rhs: dict = {}
                for (f, g2), c in lev.boundary[h].items():
                    img = prev.get(g2)
                    if not img:
                        continue
                    for key, c2 in sphere.act(i - 1, f, img).items():
                        rhs[key] = (rhs.get(key, 0) + c * c2) % p
                rhs = {k: v for k, v in rhs.items() if v}
                if rhs:
                    by_u.setdefault(u, []).append((h, rhs))
            for u, items in by_u.items():
                sphere._basis(i, u)
                tgt = sphere._target_index(i, u)
                rhs_mat = np.zeros((len(tgt), len(items)), dtype=np.int64)
                for j, (_, rhs) in enumerate(items):
                    for key, c in rhs.items():
                        rhs_mat[tgt[key], j] = c
                sol = sphere.solver(i, u).solve(rhs_mat)
                basis = sphere._basis(i, u)
                for j, (h, _) in enumerate(items):
                    col = sol[:, j]
                    cur[h] = {basis[k]: int(c) for k, c in enumerate(col) if c % p}
            maps.append(cur)
        return maps

    def products_with_sphere(self, s: int, gen: int, sphere: "MinimalResolution",
                             depth: int | None = None) -> dict:
        """All products a . x for sphere generators a, x = dual of ``gen``.

        Returns ``{(i, a_gen): {h: coeff}}``: the product of the sphere class
        (i, a_gen) with x, expanded over generators h of P_(s+i).
        """
        if depth is None:
            depth = self.max_s - s
        maps = self.lift_class(s, gen, sphere, depth)
        out: dict = {}
        for i, fmap in enumerate(maps):
            for h, elem in fmap.items():
                for (f, q), c in elem.items():
                    if f == 0 and c % self.p:
                        slot = out.setdefault((i, q), {})
                        slot[h] = c % self.p
        return out
