"""Symbolic reordering-sign ledgers for fermionic moves over GF(2)."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .substrate import Move, Network, is_open
from .tensors import GradedDim, Model, as_graded, evaluate_network, to_float

Monomial = frozenset  # of variable names; the empty monomial is the constant 1


class Poly:
    """Multilinear polynomial over GF(2); variables are Boolean (x*x = x)."""

    __slots__ = ("terms",)

    def __init__(self, terms: Iterable[frozenset] = ()) -> None:
        acc: set = set()
        for t in terms:
            acc ^= {frozenset(t)}
        self.terms = frozenset(acc)

    @staticmethod
    def var(name: str) -> "Poly":
        return Poly([frozenset([name])])

    @staticmethod
    def one() -> "Poly":
        return Poly([frozenset()])

    def __add__(self, o: "Poly") -> "Poly":
        return Poly(self.terms ^ o.terms)

    def __mul__(self, o: "Poly") -> "Poly":
        acc: set = set()
        for a in self.terms:
            for b in o.terms:
                acc ^= {a | b}
        return Poly(acc)

    def __eq__(self, o: object) -> bool:
        return isinstance(o, Poly) and self.terms == o.terms

    def __hash__(self) -> int:
        return hash(self.terms)

    def __bool__(self) -> bool:
        return bool(self.terms)

    @property
    def variables(self) -> set[str]:
        return {v for t in self.terms for v in t}

    def substitute(self, name: str, value: "Poly") -> "Poly":
        out = Poly()
        for t in self.terms:
            if name in t:
                out = out + Poly([t - {name}]) * value
            else:
                out = out + Poly([t])
        return out

    def evaluate(self, values: Mapping[str, int]) -> int:
        return sum(all(values[v] for v in t) for t in self.terms) % 2

    def __str__(self) -> str:
        if not self.terms:
            return ""
        parts = sorted(("".join(sorted(t)) if t else "1") for t in self.terms)
        return "+".join(sorted(parts, key=lambda s: (len(s), s)))

    __repr__ = __str__


def reduce_poly(p: Poly, relations: Sequence[frozenset[str]], order: Sequence[str]) -> Poly:
    """Reduce ``p`` on the affine space cut out by ``sum(relation) = 0`` constraints.

    Gaussian elimination over GF(2): the earliest variable in ``order`` of each
    row is solved for and substituted.
    """
    rank = {v: i for i, v in enumerate(order)}
    rows = [set(r) for r in relations if r]
    pivots: list[tuple[str, set[str]]] = []
    while rows:
        row = rows.pop()
        for piv, prow in pivots:
            if piv in row:
                row ^= prow
        if not row:
            continue
        piv = min(row, key=lambda v: (rank.get(v, len(rank)), v))
        for k, (q, qrow) in enumerate(pivots):
            if piv in qrow:
                pivots[k] = (q, qrow ^ row)
        pivots.append((piv, row))
    for piv, row in pivots:
        p = p.substitute(piv, Poly([frozenset([v]) for v in row if v != piv]))
    return p


# ---------------------------------------------------------------------------
# Ledgers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LedgerStep:
    state: tuple[str, ...]
    sign: Poly

    def shorthand(self) -> str:
        return f"({self.sign})|{''.join(self.state)}|" if self.sign else f"|{''.join(self.state)}|"


@dataclass(frozen=True)
class SideLedger:
    steps: tuple[LedgerStep, ...]
    sign: Poly  # accumulated sign, unreduced
    reduced: Poly  # reduced with this side's own parity constraints
    relations: tuple[frozenset[str], ...]
    internal: tuple[str, ...]


@dataclass(frozen=True)
class SignLedger:
    move: str
    lhs: SideLedger
    rhs: SideLedger
    difference: Poly

    @property
    def cancels(self) -> bool:
        return not self.difference

    def shorthand(self) -> str:
        l = " = ".join(s.shorthand() for s in self.lhs.steps)
        r = " = ".join(s.shorthand() for s in self.rhs.steps)
        return f"{self.move}:\n  lhs: {l}\n  rhs: {r}\n  difference: ({self.difference})"

    def to_json(self) -> dict:
        def side(s: SideLedger) -> dict:
            return {
                "steps": [{"state": list(st.state), "sign": str(st.sign)} for st in s.steps],
                "final": str(s.reduced),
            }

        return {"move": self.move, "lhs": side(self.lhs), "rhs": side(self.rhs), "difference": str(self.difference), "cancels": self.cancels}


def _side_ledger(n: Network, orderings: Mapping[str, Sequence[str]], prefix: str, rename: Mapping[str, str], reverse: bool = False) -> SideLedger:
    """Track the Koszul sign of contracting ``n`` pair by pair.

    Tokens are (variable, display).  Internal bonds get one variable shared by
    both ends; the first end is shown as ``x`` and the second as ``x'``.
    """
    var_of: dict = {}
    disp_of: dict = {}
    firsts: dict = {}
    inward: list[str] = []
    relations: list[set[str]] = []
    internal: list[str] = []
    tokens: list[tuple[str, object]] = []
    bond_order: list[tuple] = []
    for i, b in enumerate(n.bonds):
        e0, e1 = b.ordered()
        if b.is_bare:
            v0, v1 = rename.get(e0[1], e0[1]), rename.get(e1[1], e1[1])
            tokens += [(v0, ("wire", e0[1])), (v1, ("wire", e1[1]))]
            var_of[("wire", e0[1])], var_of[("wire", e1[1])] = v0, v1
            disp_of[("wire", e0[1])], disp_of[("wire", e1[1])] = v0, v1
            relations.append({v0, v1} if v0 != v1 else set())
            continue
        if is_open(e0) or is_open(e1):
            inner, lab = (e1, e0) if is_open(e0) else (e0, e1)
            v = rename.get(lab[1], lab[1])
            var_of[inner] = v
            disp_of[inner] = v
            if b.direction is not None and is_open(e0):
                inward.append(v)
            continue
        v = f"{prefix}{i}"
        internal.append(v)
        var_of[e0], var_of[e1] = v, v
        disp_of[e0], disp_of[e1] = f"x{i}", f"x{i}'"
        firsts[e0] = e1
        bond_order.append((e0, e1))
    atom_tokens = []
    for a in n.atoms:
        el = n.substrate.element(a.element)
        order = orderings.get(a.element, el.slot_names)
        ends = [("atom", a.id, s) for s in order]
        atom_tokens += [(var_of[e], e) for e in ends]
        counts: dict[str, int] = {}
        for e in ends:
            counts[var_of[e]] = counts.get(var_of[e], 0) + 1
        relations.append({v for v, c in counts.items() if c % 2})
    tokens = atom_tokens + tokens
    sign = Poly()
    for v in inward:
        sign = sign + Poly.var(v)

    def state() -> tuple[str, ...]:
        return tuple(disp_of[k] for _v, k in tokens)

    steps = [LedgerStep(state(), sign)]
    schedule = list(reversed(bond_order)) if reverse else bond_order
    for f, s in schedule:
        for key in (f, s):
            pos = [k for _v, k in tokens].index(key)
            v = tokens[pos][0]
            for w, _k in tokens[pos + 1 :]:
                sign = sign + Poly.var(v) * Poly.var(w)
            tokens.append(tokens.pop(pos))
        tokens = tokens[:-2]
        steps.append(LedgerStep(state(), sign))
    # bring the open indices into the network's open order
    current = [v for v, _k in tokens]
    target = [rename.get(l, l) for l in n.open_order]
    pos = {v: i for i, v in enumerate(target)}
    for i in range(len(current)):
        for j in range(i + 1, len(current)):
            if pos[current[i]] > pos[current[j]]:
                sign = sign + Poly.var(current[i]) * Poly.var(current[j])
    tokens.sort(key=lambda t: pos[t[0]])
    if [v for v, _k in tokens] != current or len(steps) == 1:
        steps.append(LedgerStep(state(), sign))
    rels = tuple(frozenset(r) for r in relations)
    reduced = reduce_poly(sign, rels, internal + target)
    return SideLedger(tuple(steps), sign, reduced, rels, tuple(internal))


def compute_sign_ledger(mv: Move, orderings: Mapping[str, Sequence[str]], reverse_schedule: bool = False) -> SignLedger:
    """Ledger of both sides of ``mv``; the rhs uses the lhs names for open indices."""
    back = {r: l for l, r in mv.corr.items()}
    lhs = _side_ledger(mv.lhs, orderings, "L", {}, reverse_schedule)
    rhs = _side_ledger(mv.rhs, orderings, "R", back, reverse_schedule)
    order = list(lhs.internal) + list(rhs.internal) + list(mv.lhs.open_order)
    diff = reduce_poly(lhs.sign + rhs.sign, lhs.relations + rhs.relations, order)
    return SignLedger(mv.name, lhs, rhs, diff)


def schedule_independent(mv: Move, orderings: Mapping[str, Sequence[str]]) -> bool:
    a = compute_sign_ledger(mv, orderings)
    b = compute_sign_ledger(mv, orderings, reverse_schedule=True)
    return a.lhs.reduced == b.lhs.reduced and a.rhs.reduced == b.rhs.reduced and a.difference == b.difference


# ---------------------------------------------------------------------------
# Numeric shadow
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NumericVerdict:
    passed: bool
    trials: int
    failures: int
    worst: float


def random_even_tensor(shape_dims: Sequence[GradedDim], rng: np.random.Generator, complex_entries: bool = True) -> np.ndarray:
    shape = tuple(d.total for d in shape_dims)
    arr = rng.uniform(-1, 1, shape)
    if complex_entries:
        arr = arr + 1j * rng.uniform(-1, 1, shape)
    par = np.zeros(shape, dtype=np.int64)
    for ax, d in enumerate(shape_dims):
        p = d.parity().reshape([-1 if k == ax else 1 for k in range(len(shape))])
        par = par + p
    return np.where(par % 2 == 0, arr, 0)


def verify_cancellation_numerically(
    mv: Move,
    orderings: Mapping[str, Sequence[str]],
    trials: int = 20,
    dims: Mapping[str, GradedDim | int] | None = None,
    seed: int = 0,
    eps: float = 1e-12,
) -> NumericVerdict:
    """Fermionic and graded-array residuals of ``mv`` must agree on random even tensors.

    Agreement is entrywise in absolute value, so a sign common to both sides
    of the move is allowed, matching the ledger's notion of cancellation.
    """
    sub = mv.lhs.substrate
    dims = {b.name: as_graded(dims[b.name]) if dims and b.name in dims else GradedDim(1, 1) for b in sub.bindings}
    rng = np.random.default_rng(seed)
    failures = 0
    worst = 0.0
    back_order = [mv.corr[l] for l in mv.lhs.open_order]
    rhs = mv.rhs.with_order(back_order)
    for _ in range(trials):
        tensors = {}
        for el in sub.elements:
            tensors[el.name] = random_even_tensor([dims[s.binding] for s in el.slots], rng)
        ferm = Model(sub, dims, tensors, "fermionic_plain", {k: tuple(v) for k, v in orderings.items() if sub.has_element(k)})
        plain = Model(sub, dims, tensors, "complex")
        rf = to_float(evaluate_network(ferm, mv.lhs)) - to_float(evaluate_network(ferm, rhs))
        rg = to_float(evaluate_network(plain, mv.lhs)) - to_float(evaluate_network(plain, rhs))
        gap = float(np.max(np.abs(np.abs(rf) - np.abs(rg)), initial=0.0))
        worst = max(worst, gap)
        if gap > eps:
            failures += 1
    return NumericVerdict(failures == 0, trials, failures, worst)


@dataclass(frozen=True)
class SigncheckResult:
    ledger: SignLedger
    schedule_independent: bool
    numeric: NumericVerdict

    @property
    def passed(self) -> bool:
        return self.ledger.cancels and self.schedule_independent and self.numeric.passed

    def to_json(self) -> dict:
        out = self.ledger.to_json()
        out["schedule_independent"] = self.schedule_independent
        out["numeric"] = {"pass": self.numeric.passed, "trials": self.numeric.trials, "failures": self.numeric.failures, "worst": self.numeric.worst}
        out["pass"] = self.passed
        return out


def signcheck_liquid(liquid, orderings: Mapping[str, Sequence[str]] | None = None, trials: int = 20, seed: int = 0, include_derived: bool = False) -> list[SigncheckResult]:
    orderings = orderings if orderings is not None else liquid.metadata.get("orderings", {})
    moves = liquid.all_moves if include_derived else liquid.moves
    out = []
    for k, mv in enumerate(moves):
        led = compute_sign_ledger(mv, orderings)
        out.append(SigncheckResult(led, schedule_independent(mv, orderings), verify_cancellation_numerically(mv, orderings, trials, seed=seed + k)))
    return out
