"""Move residuals, verification reports, circuit equivalence and derivation replay."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .substrate import (
    EqualityPolicy,
    Move,
    Network,
    NetworkError,
    Substrate,
    find_occurrences,
    find_wire_occurrences,
    is_isomorphic,
    rewrite,
    rewrite_wire,
    validate_move,
)
from .tensors import Comparison, EvaluationError, Model, equal, evaluate_network, is_exact_array, to_float


@dataclass(frozen=True)
class Liquid:
    """A substrate plus its named moves.

    ``derived`` holds moves that follow from the axioms; they are checked
    like any other move but are not counted as axioms.
    """

    name: str
    substrate: Substrate
    moves: tuple[Move, ...]
    derived: tuple[Move, ...] = ()
    notes: Mapping[str, str] = field(default_factory=dict)
    metadata: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self) -> None:
        names = [m.name for m in self.moves + self.derived]
        if len(set(names)) != len(names):
            raise NetworkError(f"liquid {self.name}: duplicate move names")
        for m in self.moves + self.derived:
            if m.lhs.substrate.name != self.substrate.name:
                raise NetworkError(f"move {m.name} lives on another substrate")
            problems = validate_move(m)
            if problems:
                raise NetworkError(f"move {m.name}: " + "; ".join(problems))

    def move(self, name: str) -> Move:
        for m in self.moves + self.derived:
            if m.name == name:
                return m
        raise KeyError(name)

    @property
    def all_moves(self) -> tuple[Move, ...]:
        return self.moves + self.derived


@dataclass(frozen=True)
class MoveResult:
    name: str
    policy: EqualityPolicy
    residual: float
    lam: complex | None
    passed: bool
    lhs: np.ndarray | None = None
    rhs: np.ndarray | None = None
    residual_tensor: np.ndarray | None = None
    error: str | None = None

    def to_json(self) -> dict:
        lam = None
        if self.lam is not None:
            lam = [self.lam.real, self.lam.imag]
        out = {"name": self.name, "policy": self.policy.kind, "residual": self.residual, "lambda": lam, "pass": self.passed}
        if self.error:
            out["error"] = self.error
        return out


@dataclass(frozen=True)
class VerificationReport:
    liquid: str
    model: str
    moves: tuple[MoveResult, ...]

    @property
    def passed(self) -> bool:
        return all(m.passed for m in self.moves)

    def result(self, name: str) -> MoveResult:
        for m in self.moves:
            if m.name == name:
                return m
        raise KeyError(name)

    def to_json(self) -> dict:
        return {"liquid": self.liquid, "model": self.model, "moves": [m.to_json() for m in self.moves], "pass": self.passed}

    def table(self) -> str:
        rows = [f"{'move':<28} {'policy':<10} {'residual':>12} {'lambda':>22}  verdict"]
        for m in self.moves:
            lam = "" if m.lam is None else f"{m.lam.real:.6g}{m.lam.imag:+.3g}j"
            rows.append(f"{m.name:<28} {m.policy.kind:<10} {m.residual:>12.3e} {lam:>22}  {'PASS' if m.passed else 'FAIL'}")
            if m.error:
                rows.append(f"    error: {m.error}")
        rows.append(f"overall: {'PASS' if self.passed else 'FAIL'}")
        return "\n".join(rows)


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("LIQUIDLAB_THREADS", "4")))
    except ValueError:
        return 1


def evaluate_sides(model: Model, mv: Move) -> tuple[np.ndarray, np.ndarray]:
    """Both sides of ``mv``; the rhs axes are permuted to line up with the lhs."""
    lhs = evaluate_network(model, mv.lhs)
    corr = mv.corr
    rhs_net = mv.rhs.with_order([corr[l] for l in mv.lhs.open_order])
    rhs = evaluate_network(model, rhs_net)
    if is_exact_array(lhs) != is_exact_array(rhs):
        lhs, rhs = to_float(lhs), to_float(rhs)
    return np.asarray(lhs), np.asarray(rhs)


def move_residual(model: Model, mv: Move, policy: EqualityPolicy | None = None) -> MoveResult:
    """Evaluate both sides of a move and compare them under ``policy``."""
    pol = policy or mv.policy
    try:
        lhs, rhs = evaluate_sides(model, mv)
    except (EvaluationError, NetworkError, KeyError) as exc:
        return MoveResult(mv.name, pol, float("inf"), None, False, error=str(exc))
    cmp: Comparison = equal(lhs, rhs, pol)
    fl, fr = to_float(lhs), to_float(rhs)
    lam = cmp.lam
    diff = fl - (lam if lam is not None else 1.0) * fr
    passed = cmp.equal
    error = None
    if model.semantics == "real":
        tol = max(pol.eps, 0.0)
        imag = max(float(np.max(np.abs(fl.imag))) if fl.size else 0.0, float(np.max(np.abs(fr.imag))) if fr.size else 0.0)
        if imag > tol:
            passed = False
            error = f"imaginary part {imag:.3e} in a real model"
    return MoveResult(mv.name, pol, cmp.residual, lam, passed, lhs, rhs, diff, error)


def check_model(liquid: Liquid, model: Model, policy: EqualityPolicy | None = None, include_derived: bool = True, model_name: str | None = None) -> VerificationReport:
    """One residual per move, in declaration order; ``policy`` overrides every move."""
    if model.substrate.name != liquid.substrate.name:
        raise EvaluationError(f"model substrate {model.substrate.name!r} does not match liquid {liquid.name!r}")
    moves = liquid.all_moves if include_derived else liquid.moves
    with ThreadPoolExecutor(max_workers=_threads()) as pool:
        results = list(pool.map(lambda mv: move_residual(model, mv, policy), moves))
    return VerificationReport(liquid.name, model_name or model.name, tuple(results))


# ---------------------------------------------------------------------------
# Circuits
# ---------------------------------------------------------------------------


class CircuitError(ValueError):
    pass


@dataclass(frozen=True)
class CircuitStep:
    """Apply ``move`` at every listed occurrence at once (all of them when None)."""

    move: Move
    occurrences: tuple[Mapping[int, int], ...] | None = None


def distinct_occurrences(host: Network, pattern: Network) -> list[dict[int, int]]:
    """Occurrences up to automorphisms of the pattern (one per atom set)."""
    seen: set[frozenset[int]] = set()
    out = []
    for occ in find_occurrences(host, pattern):
        key = frozenset(occ.values())
        if key not in seen:
            seen.add(key)
            out.append(occ)
    return out


def apply_everywhere(host: Network, step: CircuitStep) -> Network:
    occs = list(step.occurrences) if step.occurrences is not None else distinct_occurrences(host, step.move.lhs)
    used: set[int] = set()
    for occ in occs:
        atoms = set(occ.values())
        if atoms & used:
            raise CircuitError(f"step {step.move.name}: overlapping occurrences")
        used |= atoms
    for occ in occs:
        host = rewrite(host, step.move, occ)
    return host


def _merge_models(a: Model, b: Model) -> Model:
    tensors = dict(b.tensors)
    tensors.update(a.tensors)
    dims = dict(b.dims)
    dims.update(a.dims)
    return Model(a.substrate, dims, tensors, a.semantics, {**dict(b.orderings), **dict(a.orderings)}, a.name + "+" + b.name)


def _same(x: np.ndarray, y: np.ndarray, eps: float) -> tuple[bool, float]:
    x, y = np.asarray(x), np.asarray(y)
    if is_exact_array(x) and is_exact_array(y):
        return bool(np.all(x == y)), float(np.max(np.abs(to_float(x) - to_float(y)), initial=0.0))
    r = float(np.max(np.abs(to_float(x) - to_float(y)), initial=0.0))
    return r <= eps, r


@dataclass(frozen=True)
class CircuitReport:
    passed: bool
    finals: tuple[Network, ...]
    message: str = ""
    exact: bool = True


def check_circuit_equivalence(a: Model, b: Model, steps: Sequence[CircuitStep], probes: Iterable[Network], eps: float = 1e-12) -> CircuitReport:
    """Certify that ``b`` becomes ``a`` through a finite circuit.

    Each probe is a closed network written in ``b``'s elements.  Every step
    rewrites all its occurrences at once and must preserve the evaluation
    under the union of both models; the final network, evaluated under ``a``
    alone, must equal the probe's value under ``b``.
    """
    if a.substrate.name != b.substrate.name:
        raise CircuitError("models live on different substrates")
    both = _merge_models(a, b)
    finals = []
    all_exact = True
    for k, probe in enumerate(probes):
        if not probe.is_closed():
            raise CircuitError("probe networks must be closed")
        start = evaluate_network(b, probe)
        host = probe
        value = start
        for i, st in enumerate(steps):
            host = apply_everywhere(host, st)
            new = evaluate_network(both, host) if host.atoms else evaluate_network(a, host)
            ok, r = _same(value, new, eps)
            all_exact &= is_exact_array(np.asarray(new)) or not host.atoms
            if not ok:
                return CircuitReport(False, tuple(finals), f"probe {k}: step {i} ({st.move.name}) changed the evaluation by {r:.3e}")
            value = new
        final = evaluate_network(a, host)
        ok, r = _same(start, final, eps)
        if not ok:
            return CircuitReport(False, tuple(finals), f"probe {k}: final value differs by {r:.3e}")
        finals.append(host)
    return CircuitReport(True, tuple(finals), "", all_exact)


# ---------------------------------------------------------------------------
# Derivation replay
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DerivationStep:
    move: Move
    reverse: bool = False
    conjugate: bool = False

    def resolved(self) -> Move:
        m = self.move.reversed() if self.reverse else self.move
        return m.conjugated() if self.conjugate else m


def _successors(host: Network, mv: Move) -> list[Network]:
    out = []
    if not mv.lhs.atoms:
        binding = mv.lhs.bonds[0].binding
        for i in find_wire_occurrences(host, binding):
            for flip in (False, True):
                try:
                    out.append(rewrite_wire(host, mv, i, flip))
                except NetworkError:
                    pass
        return out
    for occ in find_occurrences(host, mv.lhs):
        try:
            out.append(rewrite(host, mv, occ))
        except NetworkError:
            pass
    return out


def replay_derivation(start: Network, steps: Sequence[DerivationStep], target: Network) -> list[Network] | None:
    """Search for occurrences making ``steps`` turn ``start`` into ``target``.

    Returns the list of intermediate networks (start first) or None.
    """
    moves = [s.resolved() for s in steps]

    def dfs(host: Network, k: int, path: list[Network]) -> list[Network] | None:
        if k == len(moves):
            return path if is_isomorphic(host, target) else None
        seen: list[Network] = []
        for nxt in _successors(host, moves[k]):
            if any(is_isomorphic(nxt, s) for s in seen):
                continue
            seen.append(nxt)
            found = dfs(nxt, k + 1, path + [nxt])
            if found is not None:
                return found
        return None

    return dfs(start, 0, [start])
