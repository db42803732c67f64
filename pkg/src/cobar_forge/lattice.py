"""Graded p-local lattices with monomial bases, cokernels of lattice maps, and
graded abelian group series.

The rings modelled here are divided-power subrings such as Z_(3)[c4/3, c6/27]
(generators c4~ = c4/3 in degree 8 and c6~ = c6/27 in degree 12) together
with sublattices spanned by explicit families of elements, e.g. the image of
the filtration-zero part of tmf_*. Every computation is exact over Z.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

from .exactlin import IntMatrix, snf_divisors

Poly = dict  # exponent tuple -> int


# ---------------------------------------------------------------------------
# groups


@dataclass(frozen=True)
class Group:
    """Z^free plus cyclic torsion of the listed orders (ascending)."""

    free: int = 0
    torsion: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "torsion", tuple(sorted(int(t) for t in self.torsion if t != 1)))

    def is_zero(self) -> bool:
        return not self.free and not self.torsion

    @property
    def torsion_order(self) -> int:
        out = 1
        for t in self.torsion:
            out *= t
        return out

    @property
    def exponent(self) -> int:
        """Largest torsion order (1 when torsion-free)."""
        return max(self.torsion, default=1)

    def to_json(self) -> dict:
        return {"free": self.free, "torsion": list(self.torsion)}

    @classmethod
    def from_json(cls, data: Mapping) -> "Group":
        return cls(int(data.get("free", 0)), tuple(int(t) for t in data.get("torsion", [])))

    def __add__(self, other: "Group") -> "Group":
        return Group(self.free + other.free, self.torsion + other.torsion)

    def __str__(self):
        parts = []
        if self.free:
            parts.append("Z" if self.free == 1 else f"Z^{self.free}")
        parts += [f"Z/{t}" for t in self.torsion]
        return " + ".join(parts) or "0"


@dataclass
class GroupSeries:
    """A graded abelian group, one Group per degree (missing degrees are 0)."""

    prime: int
    groups: dict = field(default_factory=dict)
    label: str = ""

    def __getitem__(self, n: int) -> Group:
        return self.groups.get(n, Group())

    def __setitem__(self, n: int, g: Group):
        self.groups[n] = g

    def degrees(self) -> list[int]:
        return sorted(self.groups)

    def nonzero(self) -> dict:
        return {n: g for n, g in sorted(self.groups.items()) if not g.is_zero()}

    def to_json(self) -> dict:
        return {str(n): g.to_json() for n, g in sorted(self.groups.items())}

    @classmethod
    def from_json(cls, data: Mapping, prime: int = 3, label: str = "") -> "GroupSeries":
        return cls(prime, {int(n): Group.from_json(g) for n, g in data.items()}, label)

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=1)

    def table(self, degrees: Iterable[int] | None = None) -> str:
        degrees = self.degrees() if degrees is None else degrees
        return "\n".join(f"{n:>5}  {self[n]}" for n in degrees)


def compare_series(a: GroupSeries, b: GroupSeries, degrees: Iterable[int]) -> list[str]:
    """Human-readable list of degrees where the two series differ."""
    out = []
    for n in degrees:
        if a[n] != b[n]:
            out.append(f"degree {n}: {a.label or 'left'} = {a[n]}, {b.label or 'right'} = {b[n]}")
    return out


# ---------------------------------------------------------------------------
# lattices


@dataclass(frozen=True)
class LatticeGenerator:
    name: str
    degree: int
    denominator: int = 1  # the generator is (named integral element) / denominator
    bounds: tuple | None = None  # (lo, hi) exponent range; None means [0, inf)


class MonomialLattice:
    """Graded free Z_(p)-module.

    Either a polynomial (Laurent in bounded generators) ring on ``generators``
    shifted by ``shift``, or, when ``family`` is given, the sublattice of
    ``ambient`` spanned in degree n by ``family(n)``: a list of
    (name, coordinates in ambient's monomial basis).
    """

    def __init__(self, label: str, prime: int, generators: Sequence[LatticeGenerator] = (),
                 shift: int = 0, ambient: "MonomialLattice | None" = None,
                 family: Callable[[int], list] | None = None):
        self.label = label
        self.prime = prime
        self.generators = list(generators)
        self.shift = shift
        self.ambient = ambient
        self.family = family
        for g in self.generators:
            if g.degree <= 0:
                raise ValueError("generator degrees must be positive")

    # -- monomials -------------------------------------------------------------
    def monomials(self, n: int) -> list[tuple]:
        """Exponent vectors of total degree n - shift, sorted."""
        if self.family is not None:
            raise TypeError("a spanned sublattice has no monomial basis")
        target = n - self.shift
        gens = self.generators
        out: list = []

        def rec(i: int, rest: int, acc: list):
            if i == len(gens) - 1:
                g = gens[i]
                if rest % g.degree:
                    return
                e = rest // g.degree
                lo, hi = g.bounds if g.bounds else (0, None)
                if e >= lo and (hi is None or e <= hi):
                    out.append(tuple(acc + [e]))
                return
            g = gens[i]
            lo, hi = g.bounds if g.bounds else (0, None)
            if hi is None:
                if lo < 0:
                    raise ValueError(f"{g.name} needs an upper exponent bound")
                # later generators with negative exponents can lower the degree
                slack = sum(-h.bounds[0] * h.degree for h in gens[i + 1:] if h.bounds and h.bounds[0] < 0)
                hi = max(-1, (rest + slack) // g.degree)
            for e in range(lo, hi + 1):
                rec(i + 1, rest - e * g.degree, acc + [e])

        if not gens:
            return [()] if target == 0 else []
        # unbounded-below generators must be bounded for a finite basis
        for g in gens:
            if g.bounds is not None and g.bounds[0] < 0 and g.bounds[1] is None:
                raise ValueError(f"{g.name} needs an upper exponent bound")
        rec(0, target, [])
        return sorted(set(out))

    def name(self, mono: tuple) -> str:
        parts = []
        for g, e in zip(self.generators, mono):
            if e:
                parts.append(g.name if e == 1 else f"{g.name}^{e}")
        body = " ".join(parts) or "1"
        return f"S^{self.shift} {body}" if self.shift else body

    # -- spanning sets -------------------------------------------------------
    def basis(self, n: int) -> list[str]:
        if self.family is not None:
            return [nm for nm, _ in self.family(n)]
        return [self.name(m) for m in self.monomials(n)]

    def embedding(self, n: int) -> list[tuple[str, Poly]]:
        """Spanning elements of degree n with coordinates in the ambient basis."""
        if self.family is not None:
            return self.family(n)
        return [(self.name(m), {m: 1}) for m in self.monomials(n)]

    def rank(self, n: int) -> int:
        if self.family is None:
            return len(self.monomials(n))
        amb = self.ambient.monomials(n)
        rows = [[coords.get(m, 0) for m in amb] for _, coords in self.family(n)]
        if not rows:
            return 0
        divisors, free = snf_divisors(rows, len(amb))
        return len(amb) - free

    def series(self, degrees: Iterable[int]) -> GroupSeries:
        return GroupSeries(self.prime, {n: Group(self.rank(n)) for n in degrees}, self.label)

    def __repr__(self):
        return f"MonomialLattice({self.label!r})"


@dataclass
class LatticeMap:
    """Degree-preserving map of lattices, given per degree as an IntMatrix
    whose columns are images of the source spanning elements in the target
    monomial basis."""

    source: MonomialLattice
    target: MonomialLattice
    images: Callable[[int], list]  # n -> [(name, coords)]

    def matrix(self, n: int) -> IntMatrix:
        basis = self.target.monomials(n)
        pos = {m: i for i, m in enumerate(basis)}
        imgs = self.images(n)
        entries = {}
        for j, (_, coords) in enumerate(imgs):
            for m, c in coords.items():
                if c:
                    entries[(pos[m], j)] = c
        return IntMatrix(len(basis), len(imgs), entries)

    @classmethod
    def inclusion(cls, sub: MonomialLattice) -> "LatticeMap":
        if sub.ambient is None:
            raise ValueError("inclusion needs a sublattice")
        return cls(sub, sub.ambient, sub.embedding)


def cokernel_series(f: LatticeMap, window: Iterable[int]) -> GroupSeries:
    """Cokernel of ``f`` degree by degree, via Smith normal form."""
    out = GroupSeries(f.target.prime, label=f"coker({f.source.label} -> {f.target.label})")
    for n in window:
        basis = f.target.monomials(n)
        rows = [[coords.get(m, 0) for m in basis] for _, coords in f.images(n)]
        divisors, free = snf_divisors(rows, len(basis))
        out[n] = Group(free, tuple(divisors))
    return out


# ---------------------------------------------------------------------------
# the models


def _poly_mul(a: Poly, b: Poly) -> Poly:
    out: Poly = {}
    for m1, c1 in a.items():
        for m2, c2 in b.items():
            m = tuple(x + y for x, y in zip(m1, m2))
            out[m] = out.get(m, 0) + c1 * c2
    return {m: c for m, c in out.items() if c}


def _poly_pow(a: Poly, k: int, one: tuple) -> Poly:
    out: Poly = {one: 1}
    for _ in range(k):
        out = _poly_mul(out, a)
    return out


def delta_poly() -> Poly:
    """Delta = (c4^3 - c6^2)/27 = c4~^3 - 27 c6~^2 in the (c4~, c6~) basis."""
    return {(3, 0): 1, (0, 2): -27}


def tmf_r3_lattice() -> MonomialLattice:
    return MonomialLattice("tmf-R3", 3, [LatticeGenerator("c4~", 8, 3), LatticeGenerator("c6~", 12, 27)])


def filtration_zero_family(n: int) -> list[tuple[str, Poly]]:
    """Spanning set of the image of the filtration-zero subring of tmf_* in
    Z_(3)[c4~, c6~]: Delta^k c6^j c4^i with k = 0 mod 3 or i + j > 0, and the
    classes [3 Delta] Delta^k and [3 Delta^2] Delta^k."""
    out = []
    if n < 0 or n % 4:
        return out
    d = delta_poly()
    for k in range(n // 24 + 1):
        for j in range((n - 24 * k) // 12 + 1):
            rest = n - 24 * k - 12 * j
            if rest % 8:
                continue
            i = rest // 8
            if k % 3 == 0 or i + j > 0:
                coords = _poly_mul(_poly_pow(d, k, (0, 0)), {(i, j): 3 ** (3 * j + i)})
                out.append((_f0_name(k, j, i), coords))
    for extra in (1, 2):
        rest = n - 24 * extra
        if rest >= 0 and rest % 24 == 0:
            k = rest // 24
            name = f"[3Delta{'^2' if extra == 2 else ''}]" + (f" Delta^{k}" if k else "")
            out.append((name, {m: 3 * c for m, c in _poly_pow(d, k + extra, (0, 0)).items()}))
    return out


def _f0_name(k: int, j: int, i: int) -> str:
    parts = []
    for sym, e in (("Delta", k), ("c6", j), ("c4", i)):
        if e:
            parts.append(sym if e == 1 else f"{sym}^{e}")
    return " ".join(parts) or "1"


def divided_power_model(label: str, window: tuple | None = None) -> MonomialLattice:
    """Lattice models: ``tmf-R3`` (Z_(3)[c4/3, c6/27]), ``ko-R2``
    (Z_(2)[v1^2/4]), ``tmf-sphere-f0`` (image of filtration zero of tmf_*,
    spanning a sublattice of tmf-R3) and ``tate`` (the -1 shifted ring with
    c6~ invertible; ``window = (k_min, k_max)`` bounds its exponent)."""
    if label == "tmf-R3":
        return tmf_r3_lattice()
    if label == "ko-R2":
        return MonomialLattice("ko-R2", 2, [LatticeGenerator("v1^2/4", 4, 4)])
    if label == "tmf-sphere-f0":
        return MonomialLattice("tmf-sphere-f0", 3, ambient=tmf_r3_lattice(), family=filtration_zero_family)
    if label == "tate":
        k_min, k_max = window if window is not None else (-1, 2)
        return MonomialLattice(f"tate[{k_min},{k_max}]", 3,
                               [LatticeGenerator("c4~", 8, 3), LatticeGenerator("c6~", 12, 27, (k_min, k_max))],
                               shift=-1)
    raise KeyError(f"unknown lattice model {label!r}")


def g_lattice_map() -> LatticeMap:
    """tmf_n -> tmf_n(R3) on filtration zero, as a lattice inclusion."""
    return LatticeMap.inclusion(divided_power_model("tmf-sphere-f0"))


def decompose_g_degree(n: int) -> tuple[int, int, int] | None:
    """(k, j, i) with n = 24k + 12j + 8i, j < 2, i < 3, or None."""
    for j in range(2):
        for i in range(3):
            rest = n - 12 * j - 8 * i
            if rest >= 0 and rest % 24 == 0:
                return rest // 24, j, i
    return None


def closed_form_G(n: int) -> Group:
    """The displayed case formula for G_n, evaluated literally."""
    dec = decompose_g_degree(n)
    if dec is None:
        return Group()
    k, j, i = dec
    if k % 3 in (1, 2) and i + j == 0:
        return Group(0, (3,) + tuple(3 ** (6 * m) for m in range(1, k + 1)))
    return Group(0, tuple(3 ** (6 * m + 3 * j + i) for m in range(k + 1)))


# ---------------------------------------------------------------------------
# Tate ladder


@dataclass
class StabilizationReport:
    ladder: list
    stems: list
    rungs: dict  # k_min -> GroupSeries
    unstable: dict  # stem -> [Group per rung]
    model_mismatch: list  # messages where a rung disagrees with its lattice model

    @property
    def stable(self) -> bool:
        return not self.unstable

    @property
    def ok(self) -> bool:
        return self.stable and not self.model_mismatch

    def to_json(self) -> dict:
        return {
            "ladder": self.ladder,
            "stems": [self.stems[0], self.stems[-1]] if self.stems else [],
            "stable": self.stable,
            "unstable": {str(n): [str(g) for g in gs] for n, gs in sorted(self.unstable.items())},
            "model_mismatch": self.model_mismatch,
        }

    def summary(self) -> str:
        if self.ok:
            return f"stable across k_min in {self.ladder} for stems {self.stems[0]}..{self.stems[-1]}"
        lines = []
        for n, gs in sorted(self.unstable.items()):
            lines.append(f"stem {n}: " + ", ".join(f"k_min={k}: {g}" for k, g in zip(self.ladder, gs)))
        return "\n".join(lines + self.model_mismatch)


def tate_series(stems: Sequence[int], ladder: Sequence[int], k_max: int = 2,
                compute: Callable[[int], GroupSeries] | None = None) -> tuple[GroupSeries, StabilizationReport]:
    """Series for the truncations with bottom block k_min in ``ladder``.

    ``compute(k_min)`` supplies the series of each truncation (e.g. from an
    Adams computation); by default the lattice model of that truncation is
    used. Each rung is compared with the lattice model, and the rungs are
    compared with one another on ``stems``. The last rung is returned.
    """
    if len(ladder) < 3:
        raise ValueError("a stabilization check needs at least three truncations")
    stems = list(stems)
    rungs, mismatch = {}, []
    for k_min in ladder:
        model = divided_power_model("tate", (k_min, k_max)).series(stems)
        series = compute(k_min) if compute else model
        rungs[k_min] = series
        for msg in compare_series(series, model, stems):
            mismatch.append(f"k_min={k_min}: {msg}")
    unstable = {}
    for n in stems:
        gs = [rungs[k][n] for k in ladder]
        if any(g != gs[0] for g in gs):
            unstable[n] = gs
    report = StabilizationReport(list(ladder), stems, rungs, unstable, mismatch)
    return rungs[ladder[-1]], report
