"""Finite graded Hopf algebras over F_p given by generators and coproducts.

A monomial is a tuple of exponents, one per generator in presentation
order. The product is graded commutative: odd generators anticommute and
have height 2. Coproducts are extended multiplicatively with the Koszul
rule ``(a (x) a')(b (x) b') = (-1)^{|a'||b|} ab (x) a'b'``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from itertools import product as iproduct
from math import factorial
from typing import Iterable, Mapping

from .exactlin import inv_mod, is_prime

Monomial = tuple  # exponent vector
Tensor2 = dict  # {(left, right): coeff}

__all__ = [
    "GeneratorSpec",
    "HopfPresentation",
    "AxiomReport",
    "DualAlgebra",
    "builtin_hopf",
    "BUILTIN_HOPF_LABELS",
    "monomial_basis",
    "expand_coproduct",
    "verify_bialgebra_axioms",
    "dualize_to_algebra",
    "quotient_hopf",
    "project_monomial",
]


@dataclass(frozen=True)
class GeneratorSpec:
    name: str
    degree: int
    height: int
    # ((left exponents by name, right exponents by name, coeff), ...)
    coproduct: tuple = ()

    def __post_init__(self):
        if self.degree < 0:
            raise ValueError(f"generator {self.name} has negative degree")
        if self.height < 2:
            raise ValueError(f"generator {self.name} needs height >= 2")


def _freeze(m: Mapping[str, int]) -> tuple:
    return tuple(sorted((k, v) for k, v in m.items() if v))


class HopfPresentation:
    """Graded Hopf algebra presented by generators, heights and coproducts."""

    def __init__(self, p: int, generators: Iterable[GeneratorSpec], label: str = ""):
        if not is_prime(p):
            raise ValueError(f"{p} is not prime")
        self.p = p
        self.generators = tuple(generators)
        self.label = label
        names = [g.name for g in self.generators]
        if len(set(names)) != len(names):
            raise ValueError("generator names must be distinct")
        self.names = tuple(names)
        self.index = {n: i for i, n in enumerate(names)}
        self.degrees = tuple(g.degree for g in self.generators)
        self.heights = tuple(g.height for g in self.generators)
        for g in self.generators:
            if p != 2 and g.degree % 2 and g.height != 2:
                raise ValueError(f"odd generator {g.name} must be exterior")
        self._gen_coproducts = [self._parse_coproduct(g) for g in self.generators]
        self._cop_cache: dict = {}

    # -- monomials -------------------------------------------------------
    @property
    def one(self) -> Monomial:
        return (0,) * len(self.generators)

    def mono(self, spec: Mapping[str, int] | Iterable | str | None = None, **kw) -> Monomial:
        """Build a monomial from ``{"xi1": 2}``, a name string or keywords."""
        exps = [0] * len(self.generators)
        items: list = []
        if isinstance(spec, str):
            for tok in spec.replace("*", " ").split():
                if tok == "1":
                    continue
                name, _, e = tok.partition("^")
                items.append((name, int(e) if e else 1))
        elif isinstance(spec, Mapping):
            items.extend(spec.items())
        elif spec is not None:
            items.extend(spec)
        items.extend(kw.items())
        for name, e in items:
            if name not in self.index:
                raise KeyError(f"unknown generator {name!r} in {self.label}")
            exps[self.index[name]] += e
        m = tuple(exps)
        if not self.valid(m):
            raise ValueError(f"monomial {m} exceeds heights {self.heights}")
        return m

    def valid(self, m: Monomial) -> bool:
        return all(0 <= e < h for e, h in zip(m, self.heights))

    def degree(self, m: Monomial) -> int:
        return sum(e * d for e, d in zip(m, self.degrees))

    def mono_str(self, m: Monomial) -> str:
        parts = []
        for name, e in zip(self.names, m):
            if e == 1:
                parts.append(name)
            elif e > 1:
                parts.append(f"{name}^{e}")
        return " ".join(parts) if parts else "1"

    def mono_dict(self, m: Monomial) -> dict:
        return {n: e for n, e in zip(self.names, m) if e}

    def mul(self, a: Monomial, b: Monomial) -> tuple[int, Monomial] | None:
        """Product of two monomials as (sign, monomial), or None if zero."""
        out = tuple(x + y for x, y in zip(a, b))
        if not self.valid(out):
            return None
        if self.p == 2:
            return 1, out
        parity = 0
        odd = [d % 2 for d in self.degrees]
        for i, (ei, di) in enumerate(zip(a, odd)):
            if not (ei and di):
                continue
            for j in range(i):
                if b[j] and odd[j]:
                    parity += ei * b[j]
        return (-1 if parity % 2 else 1), out

    @cached_property
    def dimension(self) -> int:
        n = 1
        for h in self.heights:
            n *= h
        return n

    @cached_property
    def top_degree(self) -> int:
        return sum((h - 1) * d for h, d in zip(self.heights, self.degrees))

    def basis(self, max_degree: int | None = None) -> list[Monomial]:
        if max_degree is None:
            max_degree = self.top_degree
        out = [m for m in iproduct(*(range(h) for h in self.heights)) if self.degree(m) <= max_degree]
        out.sort(key=lambda m: (self.degree(m), m))
        return out

    # -- coproduct -------------------------------------------------------
    def _parse_coproduct(self, g: GeneratorSpec) -> Tensor2:
        out: Tensor2 = {}
        for left, right, c in g.coproduct:
            key = (self.mono(dict(left)), self.mono(dict(right)))
            out[key] = (out.get(key, 0) + c) % self.p
        return {k: v for k, v in out.items() if v}

    def tensor_mul(self, x: Tensor2, y: Tensor2) -> Tensor2:
        p = self.p
        out: Tensor2 = {}
        for (a, a2), c1 in x.items():
            da2 = self.degree(a2)
            for (b, b2), c2 in y.items():
                l = self.mul(a, b)
                if l is None:
                    continue
                r = self.mul(a2, b2)
                if r is None:
                    continue
                sign = l[0] * r[0]
                if p != 2 and (da2 * self.degree(b)) % 2:
                    sign = -sign
                key = (l[1], r[1])
                out[key] = (out.get(key, 0) + sign * c1 * c2) % p
        return {k: v for k, v in out.items() if v}

    def coproduct(self, m: Monomial) -> Tensor2:
        hit = self._cop_cache.get(m)
        if hit is not None:
            return hit
        result: Tensor2 = {(self.one, self.one): 1}
        for i, e in enumerate(m):
            for _ in range(e):
                result = self.tensor_mul(result, self._gen_coproducts[i])
        self._cop_cache[m] = result
        return result

    def reduced_coproduct(self, m: Monomial) -> Tensor2:
        one = self.one
        return {k: v for k, v in self.coproduct(m).items() if k[0] != one and k[1] != one}

    # -- serialization ---------------------------------------------------
    def to_json(self) -> dict:
        return {
            "label": self.label,
            "prime": self.p,
            "generators": [
                {
                    "name": g.name,
                    "degree": g.degree,
                    "height": g.height,
                    "coproduct": [[dict(l), dict(r), c] for l, r, c in g.coproduct],
                }
                for g in self.generators
            ],
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "HopfPresentation":
        gens = [
            GeneratorSpec(
                g["name"],
                int(g["degree"]),
                int(g["height"]),
                tuple((_freeze(l), _freeze(r), int(c)) for l, r, c in g.get("coproduct", [])),
            )
            for g in data["generators"]
        ]
        return cls(int(data["prime"]), gens, data.get("label", ""))

    @classmethod
    def load(cls, path) -> "HopfPresentation":
        with open(path) as fh:
            return cls.from_json(json.load(fh))

    def with_coproduct(self, name: str, terms) -> "HopfPresentation":
        """Copy with the coproduct of one generator replaced (used for mutation tests)."""
        gens = []
        for g in self.generators:
            if g.name == name:
                g = GeneratorSpec(g.name, g.degree, g.height,
                                  tuple((_freeze(l), _freeze(r), c) for l, r, c in terms))
            gens.append(g)
        return HopfPresentation(self.p, gens, self.label + "*")

    def generator_coproduct_terms(self, name: str) -> list:
        g = self.generators[self.index[name]]
        return [(dict(l), dict(r), c) for l, r, c in g.coproduct]

    def __repr__(self):
        return f"HopfPresentation({self.label!r}, p={self.p}, dim={self.dimension})"


# ---------------------------------------------------------------------------
# builtins


def _prim(name):
    return (((name, 1),), (), 1), ((), ((name, 1),), 1)


def _gen(name, degree, height, extra=()):
    return GeneratorSpec(name, degree, height, _prim(name) + tuple(extra))


def _a1_p2() -> list[GeneratorSpec]:
    return [
        _gen("xi1", 1, 4),
        _gen("xi2", 3, 2, [((("xi1", 2),), (("xi1", 1),), 1)]),
    ]


def _eo_generators(p: int, a2_primitive: bool = False) -> list[GeneratorSpec]:
    q = 2 * (p - 1)
    gens = [_gen("xi1", q, p), _gen("tau0", 1, 2)]
    names = ["tau0", "tau1"] + [f"a{j}" for j in range(2, p)]
    for j in range(1, p):
        extra = []
        if not (a2_primitive and j >= 2):
            for k in range(1, j + 1):
                coeff = inv_mod(factorial(k), p)
                extra.append(((("xi1", k),), ((names[j - k], 1),), coeff))
        gens.append(_gen(names[j], q * j + 1, 2, extra))
    return gens


def builtin_hopf(label: str, p: int | None = None) -> HopfPresentation:
    """Return a builtin presentation.

    Labels: ``A1-p2``, ``A1-p3``, ``A-tmf-p3``, ``GrA-tmf-p3``, ``Ea2-p3`` and
    ``A-eo-p`` (with ``p``, or written ``A-eo-p5``).
    """
    if label.startswith("A-eo-p") and label != "A-eo-p":
        p = int(label[len("A-eo-p"):].strip("()"))
        label = "A-eo-p"
    if label == "A1-p2":
        return HopfPresentation(2, _a1_p2(), label)
    if label == "A1-p3":
        return HopfPresentation(3, _eo_generators(3)[:3], label)
    if label == "A-tmf-p3":
        return HopfPresentation(3, _eo_generators(3), label)
    if label == "GrA-tmf-p3":
        return HopfPresentation(3, _eo_generators(3, a2_primitive=True), label)
    if label == "Ea2-p3":
        return HopfPresentation(3, [_gen("a2", 9, 2)], label)
    if label == "A-eo-p":
        if p is None or p == 2 or not is_prime(p) or p > 7:
            raise ValueError("A-eo-p needs an odd prime p <= 7")
        return HopfPresentation(p, _eo_generators(p), f"A-eo-p{p}")
    raise KeyError(f"unknown Hopf algebra label {label!r}")


def quotient_hopf(h: HopfPresentation, kill: Iterable[str], label: str = "") -> HopfPresentation:
    """Quotient by the Hopf ideal generated by ``kill``.

    Coproduct terms touching a killed generator are dropped; the caller is
    responsible for the ideal being a Hopf ideal (the axiom check will say).
    Returns the quotient and leaves ``project`` to map monomials across.
    """
    kill = set(kill)
    gens = []
    for g in h.generators:
        if g.name in kill:
            continue
        terms = tuple(t for t in g.coproduct
                      if not any(n in kill for n, _ in t[0]) and not any(n in kill for n, _ in t[1]))
        gens.append(GeneratorSpec(g.name, g.degree, g.height, terms))
    return HopfPresentation(h.p, gens, label or f"{h.label}/({','.join(sorted(kill))})")


def project_monomial(src: HopfPresentation, dst: HopfPresentation, m: Monomial) -> Monomial | None:
    """Image of a monomial under the quotient map, or None if it dies."""
    exps = src.mono_dict(m)
    if any(n not in dst.index for n in exps):
        return None
    return dst.mono(exps)


BUILTIN_HOPF_LABELS = ("A1-p2", "A1-p3", "A-tmf-p3", "GrA-tmf-p3", "Ea2-p3", "A-eo-p")


def monomial_basis(h: HopfPresentation, max_degree: int) -> list[tuple[Monomial, int]]:
    return [(m, h.degree(m)) for m in h.basis(max_degree)]


def expand_coproduct(h: HopfPresentation, m: Monomial) -> Tensor2:
    if not h.valid(m):
        raise ValueError(f"{m} exceeds heights")
    return dict(h.coproduct(m))


# ---------------------------------------------------------------------------
# axiom checks


@dataclass
class AxiomReport:
    coassociativity: bool = True
    coassociativity_failure: tuple | None = None  # (monomial string, degree)
    counit: bool = True
    counit_failure: tuple | None = None
    graded_commutativity_of_product: bool = True
    well_defined: bool = True  # Delta(x)^height == 0 for every generator
    checked_degree: int = 0

    @property
    def ok(self) -> bool:
        return (self.coassociativity and self.counit
                and self.graded_commutativity_of_product and self.well_defined)


def _left_delta(h: HopfPresentation, x: Tensor2) -> dict:
    p = h.p
    out: dict = {}
    for (a, b), c in x.items():
        for (a1, a2), c2 in h.coproduct(a).items():
            key = (a1, a2, b)
            out[key] = (out.get(key, 0) + c * c2) % p
    return {k: v for k, v in out.items() if v}


def _right_delta(h: HopfPresentation, x: Tensor2) -> dict:
    p = h.p
    out: dict = {}
    for (a, b), c in x.items():
        for (b1, b2), c2 in h.coproduct(b).items():
            key = (a, b1, b2)
            out[key] = (out.get(key, 0) + c * c2) % p
    return {k: v for k, v in out.items() if v}


def verify_bialgebra_axioms(h: HopfPresentation, max_degree: int) -> AxiomReport:
    rep = AxiomReport(checked_degree=max_degree)
    one = h.one
    basis = h.basis(max_degree)
    for m in basis:
        d = h.coproduct(m)
        for (a, b), c in d.items():
            if h.degree(a) + h.degree(b) != h.degree(m):
                rep.counit = False
        left = {b: c for (a, b), c in d.items() if a == one}
        right = {a: c for (a, b), c in d.items() if b == one}
        if left != {m: 1} or right != {m: 1}:
            if rep.counit:
                rep.counit_failure = (h.mono_str(m), h.degree(m))
            rep.counit = False
        if _left_delta(h, d) != _right_delta(h, d):
            if rep.coassociativity:
                rep.coassociativity_failure = (h.mono_str(m), h.degree(m))
            rep.coassociativity = False
    for a in basis:
        for b in basis:
            if h.degree(a) + h.degree(b) > max_degree:
                continue
            x, y = h.mul(a, b), h.mul(b, a)
            if (x is None) != (y is None):
                rep.graded_commutativity_of_product = False
                continue
            if x is None:
                continue
            sign = -1 if (h.p != 2 and h.degree(a) * h.degree(b) % 2) else 1
            if x[1] != y[1] or (x[0] - sign * y[0]) % h.p:
                rep.graded_commutativity_of_product = False
    for i, g in enumerate(h.generators):
        if g.degree * g.height > max_degree and g.degree > 0:
            continue
        power: Tensor2 = {(one, one): 1}
        for _ in range(g.height):
            power = h.tensor_mul(power, h._gen_coproducts[i])
        if power:
            rep.well_defined = False
    return rep


# ---------------------------------------------------------------------------
# graded dual algebra


@dataclass
class DualAlgebra:
    """Graded dual of a finite Hopf algebra: basis dual to monomials.

    ``mult[(i, j)]`` is ``{k: c}`` with ``f_i * f_j = sum c f_k`` where
    ``(f_i * f_j)(x) = (f_i (x) f_j)(Delta x)`` (no Koszul sign in the pairing).
    """

    p: int
    basis: list
    degrees: list
    mult: dict = field(default_factory=dict)
    label: str = ""

    @cached_property
    def by_degree(self) -> dict:
        out: dict = {}
        for i, d in enumerate(self.degrees):
            out.setdefault(d, []).append(i)
        return out

    def product(self, x: Mapping[int, int], y: Mapping[int, int]) -> dict:
        out: dict = {}
        for i, a in x.items():
            for j, b in y.items():
                for k, c in self.mult.get((i, j), {}).items():
                    out[k] = (out.get(k, 0) + a * b * c) % self.p
        return {k: v for k, v in out.items() if v}

    def check_associativity(self) -> bool:
        n = len(self.basis)
        for i in range(n):
            for j in range(n):
                if (i, j) not in self.mult and self.degrees[i] + self.degrees[j] > max(self.degrees):
                    continue
                ij = self.mult.get((i, j), {})
                for k in range(n):
                    left = self.product(ij, {k: 1})
                    right = self.product({i: 1}, self.mult.get((j, k), {}))
                    if left != right:
                        return False
        return True


def dualize_to_algebra(h: HopfPresentation, max_degree: int | None = None) -> DualAlgebra:
    basis = h.basis(max_degree)
    pos = {m: i for i, m in enumerate(basis)}
    mult: dict = {}
    for k, m in enumerate(basis):
        for (a, b), c in h.coproduct(m).items():
            i, j = pos.get(a), pos.get(b)
            if i is None or j is None:
                continue
            mult.setdefault((i, j), {})[k] = c
    return DualAlgebra(h.p, basis, [h.degree(m) for m in basis], mult, h.label)
