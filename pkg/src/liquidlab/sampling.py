"""Random networks, hosts and models for property checks."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .substrate import (
    BACKWARD,
    FORWARD,
    Atom,
    Bond,
    Move,
    Network,
    Substrate,
    atom_end,
    check_network,
    find_occurrences,
    is_open,
    is_isomorphic,
    open_end,
    rewrite,
)
from .tensors import GradedDim, Model, QSqrt2, as_graded, dim_total

_FLIP = {"in": "out", "out": "in", None: None}


@dataclass(frozen=True)
class _Free:
    end: tuple
    binding: str
    arrow: str | None


def _compatible(sub: Substrate, a: _Free, b: _Free) -> bool:
    if a.binding != b.binding or a.end == b.end:
        return False
    if sub.binding(a.binding).arrow_semantics:
        return sorted((str(a.arrow), str(b.arrow))) == ["in", "out"]
    return True


def _pair_up(
    sub: Substrate,
    free: list[_Free],
    rng: np.random.Generator,
    p_open: float,
    directed: bool,
    label_prefix: str = "o",
) -> tuple[list[Bond], list[str]]:
    order = list(rng.permutation(len(free)))
    done: set[int] = set()
    bonds: list[Bond] = []
    labels: list[str] = []
    for pos, i in enumerate(order):
        if i in done:
            continue
        done.add(i)
        partner = None
        if rng.random() >= p_open:
            options = [j for j in order[pos + 1 :] if j not in done and _compatible(sub, free[i], free[j])]
            if options:
                partner = options[int(rng.integers(len(options)))]
        if partner is None:
            lab = f"{label_prefix}{len(labels)}"
            labels.append(lab)
            direction = (FORWARD if rng.random() < 0.5 else BACKWARD) if directed else None
            bonds.append(Bond((free[i].end, open_end(lab)), direction))
        else:
            done.add(partner)
            direction = (FORWARD if rng.random() < 0.5 else BACKWARD) if directed else None
            bonds.append(Bond((free[i].end, free[partner].end), direction))
    return bonds, labels


def random_network(
    sub: Substrate,
    rng: np.random.Generator,
    n_atoms: int,
    p_open: float = 0.3,
    directed: bool = False,
    elements: Sequence[str] | None = None,
    p_conjugate: float = 0.0,
) -> Network:
    """A valid network with ``n_atoms`` atoms; arrows are respected where the binding has them."""
    names = list(elements) if elements is not None else [e.name for e in sub.elements]
    atoms = []
    free: list[_Free] = []
    for i in range(n_atoms):
        name = names[int(rng.integers(len(names)))]
        conj = bool(rng.random() < p_conjugate)
        atoms.append(Atom(i, name, conj))
        for s in sub.element(name).slots:
            arrow = _FLIP[s.arrow] if conj else s.arrow
            free.append(_Free(atom_end(i, s.name), s.binding, arrow))
    bonds, labels = _pair_up(sub, free, rng, p_open, directed)
    order = [labels[k] for k in rng.permutation(len(labels))]
    return check_network(Network(sub, tuple(atoms), tuple(bonds), tuple(order), directed))


def random_host_with(pattern: Network, rng: np.random.Generator, extra_atoms: int, p_open: float = 0.3) -> Network:
    """Embed ``pattern`` in a larger host: its open stubs attach to random extra atoms or stay open.

    Bare wires of the pattern are not supported.
    """
    sub = pattern.substrate
    base = pattern.renumbered()
    names = [e.name for e in sub.elements]
    atoms = list(base.atoms)
    kept: list[Bond] = []
    free: list[_Free] = []
    for b in base.bonds:
        e0, e1 = b.ends
        if b.is_bare:
            raise ValueError("patterns with bare wires cannot be embedded")
        if is_open(e0) or is_open(e1):
            inner = e1 if is_open(e0) else e0
            free.append(_Free(inner, base.slot_binding(inner), base.slot_arrow(inner)))
        else:
            kept.append(b)
    for k in range(extra_atoms):
        i = len(atoms)
        name = names[int(rng.integers(len(names)))]
        atoms.append(Atom(i, name))
        for s in sub.element(name).slots:
            free.append(_Free(atom_end(i, s.name), s.binding, s.arrow))
    bonds, labels = _pair_up(sub, free, rng, p_open, False, "h")
    return check_network(Network(sub, tuple(atoms), tuple(kept + bonds), tuple(labels), False))


def random_exact_tensor(shape: Sequence[int], rng: np.random.Generator, lo: int = -2, hi: int = 2) -> np.ndarray:
    vals = rng.integers(lo, hi + 1, size=tuple(shape))
    out = np.empty(tuple(shape), dtype=object)
    for idx, v in np.ndenumerate(vals):
        out[idx] = QSqrt2(int(v))
    return out


def random_model(
    sub: Substrate,
    rng: np.random.Generator,
    dims: dict[str, int | GradedDim] | None = None,
    max_dim: int = 3,
    semantics: str = "complex",
    orderings: dict[str, tuple[str, ...]] | None = None,
) -> Model:
    """Integer-valued exact tensors; graded dims zero out odd-parity entries."""
    if dims is None:
        dims = {b.name: int(rng.integers(1, max_dim + 1)) for b in sub.bindings}
    tensors = {}
    for el in sub.elements:
        shape = [dim_total(dims[s.binding]) for s in el.slots]
        t = random_exact_tensor(shape, rng)
        if any(isinstance(dims[s.binding], GradedDim) for s in el.slots):
            par = [as_graded(dims[s.binding]).parity() for s in el.slots]
            for idx in np.ndindex(*shape):
                if sum(int(par[k][i]) for k, i in enumerate(idx)) % 2:
                    t[idx] = QSqrt2(0)
        tensors[el.name] = t
    return Model(sub, dict(dims), tensors, semantics, dict(orderings or {}), "random")


def rewrite_round_trip(host: Network, mv: Move, occ: dict[int, int]) -> bool:
    """Rewrite forward at ``occ`` and back at the inserted atoms; True when isomorphic to ``host``."""
    forward = rewrite(host, mv, occ)
    kept = set(host.atom_ids()) - set(occ.values())
    inserted = set(forward.atom_ids()) - kept
    back = mv.reversed()
    for occ2 in find_occurrences(forward, back.lhs):
        if set(occ2.values()) == inserted and is_isomorphic(rewrite(forward, back, occ2), host):
            return True
    return False


def induced_subnetwork(host: Network, atom_ids: Sequence[int]) -> Network:
    """Atoms ``atom_ids`` with their mutual bonds; every other slot becomes an open stub."""
    keep = set(atom_ids)
    atoms = tuple(a for a in host.atoms if a.id in keep)
    bonds: list[Bond] = []
    labels: list[str] = []
    for b in host.bonds:
        inside = [e for e in b.ends if not is_open(e) and e[1] in keep]
        if len(inside) == 2:
            bonds.append(b)
        elif len(inside) == 1:
            lab = f"s{len(labels)}"
            labels.append(lab)
            inner = inside[0]
            direction = None
            if b.direction is not None:
                direction = FORWARD if b.ordered()[0] == inner else BACKWARD
            bonds.append(Bond((inner, open_end(lab)), direction))
    return check_network(Network(host.substrate, atoms, tuple(bonds), tuple(labels), host.directed)).renumbered()
