"""Axiom schemas over circle-formulas and brute-force validity on finite neighborhood frames."""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from typing import Callable, Dict, Optional, Tuple

from .errors import CapExceeded
from .kripke import Verdict, from_mask
from .neighborhood import ConvexNbhModel, circle_map
from .terms import (Circle, Conj, Formula, Neg, Prop, Top, big_conj, big_disj, formula_props, implies,
                    map_circles, parse_formula, render)

# fixed-shape templates; metavariables are ordinary propositions
_FIXED = {
    "CONV": "O (phi & psi) & O (phi | chi) -> O phi",
    "EQU": "O phi -> F phi",
    "N": "O T",
    "D": "~O ~T",
    "T": "O phi -> phi",
    "4p": "O phi -> O (phi & (O (phi | psi) -> O phi))",
    "4pp": "O phi & O (phi | psi) -> O (phi & O (phi | psi))",
    "4ppp": "O phi & O psi -> O (phi & O psi)",
    "5ppp": "O phi & ~O psi -> O (phi & ~O psi)",
    "DE": "O phi -> O (phi & ~O psi)",
    "R1": "phi & O (phi | psi) -> O phi",
}

PARAMETRIC = ("Cn", "5Cn", "DIVn")

# schema family -> frame property whose frames validate it
CORRESPONDENCE = {
    "EQU": "Sym", "N": "Pur", "D": "Ser", "T": "Refl", "Cn": "nDBd", "4p": "PIprime", "5Cn": "nCoa",
    "DIVn": "nSBd", "4pp": "PIdoubleprime", "4ppp": "PItripleprime", "5ppp": "NItripleprime", "DE": "Emp",
    "R1": "Id",
}


def _pairwise_meets(vs):
    return big_disj(Circle(Conj(a, b)) for a, b in itertools.combinations(vs, 2))


def _build_parametric(base: str, n: int) -> Formula:
    if base == "Cn":
        ps = [Prop(f"p{i}") for i in range(n + 1)]
        return implies(big_conj(Circle(p) for p in ps), _pairwise_meets(ps))
    if base == "5Cn":
        phi = Prop("phi")
        qs = [Prop(f"q{i}") for i in range(n + 1)]
        left = Conj(Circle(phi), big_conj(Neg(Circle(Conj(phi, q))) for q in qs))
        inner = implies(big_conj(Circle(q) for q in qs), _pairwise_meets(qs))
        return implies(left, Circle(Conj(phi, inner)))
    if base == "DIVn":
        ps = [Prop(f"p{i}") for i in range(n + 1)]
        rest = [big_disj(p for j, p in enumerate(ps) if j != i) for i in range(n + 1)]
        return implies(Circle(big_disj(ps)), big_disj(Circle(r) for r in rest))
    raise KeyError(base)


@dataclass(frozen=True)
class Schema:
    name: str                # e.g. "Cn+" or "CONV"
    base: str                # e.g. "Cn"
    filled: bool             # the filled-circle (negative) variant
    n: Optional[int]
    formula: Formula

    @property
    def variables(self) -> Tuple[str, ...]:
        return tuple(sorted(formula_props(self.formula)))

    @property
    def property_name(self) -> Optional[str]:
        prop = CORRESPONDENCE.get(self.base)
        if prop is None:
            return None
        return prop if prop == "Sym" else prop + ("-" if self.filled else "+")

    def __str__(self):
        return f"{self.name}" + (f" n={self.n}" if self.n is not None else "")


def _to_filled(f: Formula) -> Formula:
    return map_circles(f, lambda g: Circle(Neg(g)))


def parse_schema_name(text: str) -> Tuple[str, bool, Optional[int]]:
    """``"Cn+ n=2"`` / ``"Cn+:n=2"`` / ``"4p-"`` -> (base, filled, n)."""
    text = text.strip()
    n = None
    m = re.search(r"[\s:,(]*n\s*=\s*(\d+)\)?\s*$", text)
    if m:
        n = int(m.group(1))
        text = text[:m.start()].strip()
    if text in ("CONV", "EQU"):
        return text, False, n
    if not text or text[-1] not in "+-":
        raise ValueError(f"schema {text!r} needs a polarity suffix + or -")
    base, sign = text[:-1], text[-1]
    if base not in _FIXED and base not in PARAMETRIC:
        raise ValueError(f"unknown schema {text!r}")
    return base, sign == "-", n


def get_schema(name: str, n: Optional[int] = None) -> Schema:
    base, filled, parsed_n = parse_schema_name(name)
    if n is None:
        n = parsed_n
    if base in PARAMETRIC:
        if n is None:
            raise ValueError(f"schema {name!r} needs a parameter n")
        f = _build_parametric(base, n)
    else:
        n = None
        f = parse_formula(_FIXED[base])
    if filled:
        f = _to_filled(f)
    label = base if base in ("CONV", "EQU") else base + ("-" if filled else "+")
    return Schema(label, base, filled, n, f)


def all_schema_names():
    out = ["CONV", "EQU"]
    for base in ["N", "D", "T", "Cn", "4p", "5Cn", "DIVn", "4pp", "4ppp", "5ppp", "DE", "R1"]:
        out += [base + "+", base + "-"]
    return out


# ---------------------------------------------------------------------------
# validity on frames

def _compile(f: Formula, index: Dict[str, int], omap: Callable[[int], int], full: int):
    if isinstance(f, Prop):
        i = index[f.name]
        return lambda env: env[i]
    if isinstance(f, Top):
        return lambda env: full
    if isinstance(f, Neg):
        g = _compile(f.sub, index, omap, full)
        return lambda env: full & ~g(env)
    if isinstance(f, Conj):
        a = _compile(f.left, index, omap, full)
        b = _compile(f.right, index, omap, full)
        return lambda env: a(env) & b(env)
    if isinstance(f, Circle):
        g = _compile(f.sub, index, omap, full)
        return lambda env: omap(g(env))
    raise TypeError(f"not a formula: {f!r}")


def schema_valid_on_frame(frame: ConvexNbhModel, schema, n: Optional[int] = None, max_worlds: int = 6,
                          max_assignments: int = 2 ** 24) -> Verdict:
    """Truth of the schema at every world under every assignment of world sets to its variables.

    The witness on failure is ``(world, {variable: set})`` for the first
    falsifying assignment in enumeration order.
    """
    if isinstance(schema, str):
        schema = get_schema(schema, n)
    size = frame.n
    if size > max_worlds:
        raise CapExceeded(f"frame has {size} worlds, validity search is capped at {max_worlds}")
    variables = schema.variables
    total = (1 << size) ** len(variables)
    if total > max_assignments:
        raise CapExceeded(f"{total} assignments exceed the cap of {max_assignments}")
    full = (1 << size) - 1
    # the circle map is a function of the argument's extension only: tabulate it
    table = [0] * (1 << size)
    raw = circle_map(frame)
    for u in range(1 << size):
        table[u] = raw(u)
    ev = _compile(schema.formula, {v: i for i, v in enumerate(variables)}, table.__getitem__, full)
    for env in itertools.product(range(1 << size), repeat=len(variables)):
        got = ev(env)
        if got != full:
            bad = min(w for w in range(size) if not got >> w & 1)
            return Verdict(False, (bad, {v: from_mask(m) for v, m in zip(variables, env)}))
    return Verdict(True)


def describe(schema: Schema) -> str:
    return render(schema.formula)
