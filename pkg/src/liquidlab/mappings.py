"""Substrate mappings: substitution of element images, model pull-back, mapped moves."""

from __future__ import annotations

import itertools
from fractions import Fraction
from dataclasses import dataclass, field
from functools import lru_cache, reduce
from typing import Mapping, Sequence

import numpy as np

from .checker import Liquid, VerificationReport, move_residual
from .liquids import net, substrate
from .substrate import (
    BACKWARD,
    FORWARD,
    Atom,
    Bond,
    Move,
    Network,
    NetworkError,
    Substrate,
    atom_end,
    check_network,
    is_open,
    open_end,
)
from .tensors import GradedDim, Model, QSqrt2, dim_total, evaluate_network


class MappingError(ValueError):
    pass


@dataclass(frozen=True)
class SubstrateMapping:
    """Element -> image network, binding -> ordered list of target bindings.

    ``slot_groups[element][slot]`` lists the image's open labels standing for
    that slot, in the order of ``binding_map`` of the slot's binding.
    ``orderings`` fixes the fermionic index ordering of pulled-back tensors.
    """

    name: str
    source: Substrate
    target: Substrate
    binding_map: Mapping[str, tuple[str, ...]]
    element_map: Mapping[str, Network]
    slot_groups: Mapping[str, Mapping[str, tuple[str, ...]]]
    orderings: Mapping[str, tuple[str, ...]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for el in self.source.elements:
            if el.name not in self.element_map:
                raise MappingError(f"{self.name}: no image for element {el.name}")
            image = self.element_map[el.name]
            if image.substrate.name != self.target.name:
                raise MappingError(f"{self.name}: image of {el.name} is not over {self.target.name}")
            groups = self.slot_groups[el.name]
            if set(groups) != set(el.slot_names):
                raise MappingError(f"{self.name}: slot groups of {el.name} do not match its slots")
            used = [l for s in el.slot_names for l in groups[s]]
            if sorted(used) != sorted(image.open_order):
                raise MappingError(f"{self.name}: groups of {el.name} must cover the image's open indices once")
            for s in el.slots:
                want = tuple(self.binding_map[s.binding])
                got = tuple(image.open_info(l)[0] for l in groups[s.name])
                if got != want:
                    raise MappingError(f"{self.name}: slot {el.name}.{s.name} carries {got}, binding map says {want}")
            for b in image.bonds:
                if b.is_bare:
                    raise MappingError(f"{self.name}: images may not contain bare wires")

    def group(self, element: str, slot: str) -> tuple[str, ...]:
        return tuple(self.slot_groups[element][slot])

    def width(self, binding: str) -> int:
        return len(self.binding_map[binding])

    def to_json(self) -> dict:
        from .io import network_to_json

        return {
            "name": self.name,
            "source": self.source.name,
            "target": self.target.name,
            "binding_map": {k: list(v) for k, v in self.binding_map.items()},
            "element_map": {k: network_to_json(v) for k, v in self.element_map.items()},
            "slot_groups": {k: {s: list(g) for s, g in v.items()} for k, v in self.slot_groups.items()},
            "orderings": {k: list(v) for k, v in self.orderings.items()},
        }


def _split_labels(label: str, width: int) -> list[str]:
    return [label] if width == 1 else [f"{label}.{i}" for i in range(width)]


def apply_mapping(m: SubstrateMapping, n: Network) -> Network:
    """Substitute every atom by its image; bonds fan out along the binding map.

    An open index ``x`` whose binding maps to several bindings becomes
    ``x.0, x.1, ...``.
    """
    if n.substrate.name != m.source.name:
        raise MappingError(f"network is over {n.substrate.name}, mapping expects {m.source.name}")
    atoms: list[Atom] = []
    bonds: list[Bond] = []
    # (source atom, image label) -> (target atom end, stub direction: True if the atom end comes first)
    stubs: dict[tuple[int, str], tuple[tuple, bool | None]] = {}
    directed = n.directed
    offset = 0
    for a in n.atoms:
        image = m.element_map[a.element]
        directed = directed or image.directed
        shift = {x.id: offset + i for i, x in enumerate(image.atoms)}
        offset += len(image.atoms)
        for x in image.atoms:
            atoms.append(Atom(shift[x.id], x.element, x.conjugated != a.conjugated))

        def moved(e):
            return e if is_open(e) else atom_end(shift[e[1]], e[2])

        for b in image.bonds:
            e0, e1 = moved(b.ends[0]), moved(b.ends[1])
            if is_open(e0) or is_open(e1):
                inner, k = (e1, 1) if is_open(e0) else (e0, 0)
                label = (e0 if is_open(e0) else e1)[1]
                first = None if b.direction is None else (b.ordered()[0] == b.ends[k])
                stubs[(a.id, label)] = (inner, first)
            else:
                bonds.append(Bond((e0, e1), b.direction, b.binding))

    def group_of(end) -> list[tuple[tuple, bool | None]]:
        aid, slot = end[1], end[2]
        el = n.atom(aid).element
        return [stubs[(aid, l)] for l in m.group(el, slot)]

    new_open: dict[str, list[str]] = {}
    for b in n.bonds:
        e0, e1 = b.ends
        src_first0 = None if b.direction is None else (b.ordered()[0] == e0)
        if is_open(e0) and is_open(e1):
            w = m.width(b.binding)
            l0, l1 = _split_labels(e0[1], w), _split_labels(e1[1], w)
            new_open[e0[1]], new_open[e1[1]] = l0, l1
            for x, y, tb in zip(l0, l1, m.binding_map[b.binding]):
                bonds.append(Bond((open_end(x), open_end(y)), b.direction, tb))
            continue
        if is_open(e0) or is_open(e1):
            inner, label = (e1, e0[1]) if is_open(e0) else (e0, e1[1])
            g = group_of(inner)
            labels = _split_labels(label, len(g))
            new_open[label] = labels
            inner_first = None if src_first0 is None else (src_first0 == (inner == e0))
            for (tend, stub_first), lab in zip(g, labels):
                first = inner_first if inner_first is not None else stub_first
                bonds.append(Bond((tend, open_end(lab)), None if first is None else (FORWARD if first else BACKWARD)))
            continue
        g0, g1 = group_of(e0), group_of(e1)
        if len(g0) != len(g1):
            raise MappingError("arity mismatch across a bond")
        for (t0, f0), (t1, _f1) in zip(g0, g1):
            first = src_first0 if src_first0 is not None else f0
            bonds.append(Bond((t0, t1), None if first is None else (FORWARD if first else BACKWARD)))
    order = [l for lab in n.open_order for l in new_open[lab]]
    out = Network(m.target, tuple(atoms), tuple(bonds), tuple(order), directed)
    try:
        return check_network(out)
    except NetworkError as exc:
        raise MappingError(f"mapped network is invalid: {exc}") from exc


def pull_back_model(m: SubstrateMapping, target: Model, name: str | None = None) -> Model:
    """Source model whose tensors are the evaluations of the element images.

    Composite indices are flattened in binding-map order (first target index
    most significant).
    """
    if target.substrate.name != m.target.name:
        raise MappingError(f"model is over {target.substrate.name}, mapping targets {m.target.name}")
    blocking = any(len(v) > 1 for v in m.binding_map.values())
    if target.is_fermionic and blocking and not target.particle_hole:
        raise MappingError("fermionic mappings may not block indices unless tensors use particle-hole semantics")
    dims: dict[str, int | GradedDim] = {}
    for b in m.source.bindings:
        parts = m.binding_map[b.name]
        if len(parts) == 1:
            dims[b.name] = target.dims[parts[0]]
        else:
            dims[b.name] = reduce(lambda x, y: x * y, (dim_total(target.dims[p]) for p in parts), 1)
    tensors = {}
    for el in m.source.elements:
        image = m.element_map[el.name]
        order = tuple(m.orderings.get(el.name, el.slot_names))
        labels = [l for s in order for l in m.group(el.name, s)]
        val = evaluate_network(target, image.with_order(labels))
        shape = [dim_total(dims[el.slot(s).binding]) for s in order]
        val = np.asarray(val).reshape(shape)
        tensors[el.name] = np.transpose(val, [order.index(s) for s in el.slot_names])
    orderings = {k: tuple(v) for k, v in m.orderings.items()} if target.is_fermionic else {}
    return Model(m.source, dims, tensors, target.semantics, orderings, name or f"{m.name}*{target.name}")


def map_move(m: SubstrateMapping, mv: Move) -> Move:
    lhs, rhs = apply_mapping(m, mv.lhs), apply_mapping(m, mv.rhs)
    corr = {}
    for l, r in mv.corr.items():
        w = m.width(mv.lhs.open_info(l)[0])
        for a, b in zip(_split_labels(l, w), _split_labels(r, w)):
            corr[a] = b
    return Move(mv.name, lhs, rhs, tuple(sorted(corr.items())), mv.policy, mv.derived)


def verify_mapped_moves(m: SubstrateMapping, source: Liquid, target: Model) -> VerificationReport:
    """Evaluate both mapped sides of each source move under ``target``."""
    results = [move_residual(target, map_move(m, mv)) for mv in source.all_moves]
    return VerificationReport(f"{source.name}->{m.target.name}", target.name, tuple(results))


# ---------------------------------------------------------------------------
# Catalog mappings
# ---------------------------------------------------------------------------


def _mapping(name: str, src: str, tgt: str, images: Mapping[str, tuple[Network, Mapping[str, Sequence[str]]]], binding_map: Mapping[str, Sequence[str]] | None = None, orderings=None) -> SubstrateMapping:
    s, t = substrate(src), substrate(tgt)
    bm = {b.name: tuple(binding_map[b.name]) if binding_map and b.name in binding_map else (b.name,) for b in s.bindings}
    return SubstrateMapping(
        name,
        s,
        t,
        bm,
        {k: v[0] for k, v in images.items()},
        {k: {sl: tuple(g) for sl, g in v[1].items()} for k, v in images.items()},
        dict(orderings or {}),
    )


def _single(labels: str) -> dict[str, tuple[str]]:
    return {l: (l,) for l in labels}


def identity_mapping() -> SubstrateMapping:
    t = substrate("toy2d")
    return _mapping("identity", "toy2d", "toy2d", {"T": (net(t, [("T", {"a": "a", "b": "b", "c": "c"})], "abc"), _single("abc"))})


def stacking_mapping() -> SubstrateMapping:
    """Two independent copies of a toy2d network."""
    t = substrate("toy2d")
    image = net(t, [("T", {"a": "a0", "b": "b0", "c": "c0"}), ("T", {"a": "a1", "b": "b1", "c": "c1"})], ["a0", "a1", "b0", "b1", "c0", "c1"])
    groups = {s: (f"{s}0", f"{s}1") for s in "abc"}
    return _mapping("stacking", "toy2d", "toy2d", {"T": (image, groups)}, {"e": ("e", "e")})


def extension_mapping() -> SubstrateMapping:
    """Square cell cut along a diagonal into two triangles."""
    t = substrate("toy2d")
    image = net(t, [("T", {"a": "t", "b": "l", "c": "~x"}), ("T", {"a": "b", "b": "r", "c": "~x"})], ["t", "b", "l", "r"])
    return _mapping("extension", "square", "toy2d", {"Q": (image, _single(("t", "b", "l", "r")))})


def algebra_mapping() -> SubstrateMapping:
    t = substrate("toy2d")
    return _mapping("algebra", "algebra", "toy2d", {"A": (net(t, [("T", {"a": "a", "b": "b", "c": "c"})], "abc"), _single("abc"))})


def projector_mapping() -> SubstrateMapping:
    t = substrate("toy2d")
    image = net(t, [("T", {"a": "a", "b": "c", "c": "~x"}), ("T", {"a": "b", "b": "d", "c": "~x"})], "abcd")
    return _mapping("projector", "commproj", "toy2d", {"P": (image, _single("abcd"))})


def boundary_mapping() -> SubstrateMapping:
    """Boundary liquid into the bulk: a boundary edge becomes a bulk triangle."""
    t = substrate("toy2d")
    tri = net(t, [("T", {"a": "a", "b": "b", "c": "c"})], "abc")
    b = net(t, [("T", {"a": "l", "b": "r", "c": "t"})], ["l", "r", "t"])
    return _mapping("bulk_to_boundary", "toy2d-boundary", "toy2d", {"T": (tri, _single("abc")), "B": (b, _single(("l", "r", "t")))}, {"f": ("e",)})


def toric_mapping() -> SubstrateMapping:
    """Commuting projectors of a square lattice into a face-edge cellulation.

    Each projector slot is a pair (outgoing, incoming) of edge indices.
    ``PA`` is a pair of faces glued along an internal edge with four copy
    tensors on the outer edges; ``PB`` is the dual picture.
    """
    f = substrate("faceedge3d-toy")

    def cell(centre: str, rim: str) -> Network:
        return net(
            f,
            [
                (centre, {"a": "~m", "b": "~s0", "c": "~s3"}),
                (centre, {"a": "~m", "b": "~s1", "c": "~s2"}),
                (rim, {"a": "a", "b": "a_", "c": "~s0"}),
                (rim, {"a": "b", "b": "b_", "c": "~s1"}),
                (rim, {"a": "c", "b": "c_", "c": "~s3"}),
                (rim, {"a": "d", "b": "d_", "c": "~s2"}),
            ],
            ["a", "a_", "b", "b_", "c", "c_", "d", "d_"],
        )

    groups = {s: (s, s + "_") for s in "abcd"}
    return _mapping("toric", "toric-commproj", "faceedge3d-toy", {"PA": (cell("F", "E"), groups), "PB": (cell("E", "F"), groups)}, {"q": ("e", "e")})


def cluster_mapping() -> SubstrateMapping:
    """A square plaquette as two branching triangles sharing an edge."""
    b = substrate("branch2d")
    image = net(b, [("T", {"01": "~x", "12": "01", "02": "03"}), ("T", {"01": "32", "12": "~x", "02": "12"})], ["01", "12", "32", "03"])
    return _mapping("cluster", "cluster-square", "branch2d", {"S": (image, _single(("01", "12", "32", "03")))})


def kitaev_mapping() -> SubstrateMapping:
    """A rhombus of space-time as two spin triangles joined through a 2-gon."""
    s = substrate("spin2d")
    image = net(
        s,
        [
            ("T", {"01": "a", "12": "~x>", "02": "d"}),
            ("D", {"10": "~x", "01": "~y"}),
            ("T", {"01": "~y>", "12": "b", "02": "c"}),
        ],
        "abcd",
        directed=True,
    )
    return _mapping("kitaev_rhombus", "kitaev-rhombus", "spin2d", {"R": (image, _single("abcd"))}, orderings={"R": ("d", "c", "b", "a")})


MAPPINGS = {
    "identity": identity_mapping,
    "stacking": stacking_mapping,
    "extension": extension_mapping,
    "algebra": algebra_mapping,
    "projector": projector_mapping,
    "bulk_to_boundary": boundary_mapping,
    "toric": toric_mapping,
    "cluster": cluster_mapping,
    "kitaev_rhombus": kitaev_mapping,
}

MAPPING_IDS = tuple(MAPPINGS)


@lru_cache(maxsize=None)
def load_mapping(name: str) -> SubstrateMapping:
    if name not in MAPPINGS:
        raise KeyError(f"unknown mapping {name!r}; known: {', '.join(MAPPINGS)}")
    return MAPPINGS[name]()


# ---------------------------------------------------------------------------
# Reference operators
# ---------------------------------------------------------------------------

I2 = np.eye(2)
X = np.array([[0.0, 1.0], [1.0, 0.0]])
Z = np.diag([1.0, -1.0])
XZ = X @ Z


def kron(*ops: np.ndarray) -> np.ndarray:
    return reduce(np.kron, ops)


def ising_projector(x: int = 2) -> np.ndarray:
    """P[t, b, l, r] = 1 iff all four indices agree."""
    p = np.zeros((x,) * 4)
    for i in range(x):
        p[i, i, i, i] = 1.0
    return p


def toric_projectors() -> tuple[np.ndarray, np.ndarray]:
    """P_A = (1 - ZZZZ)/2 and P_B = (1 - XXXX)/2 as 16x16 matrices."""
    one = np.eye(16)
    return (one - kron(Z, Z, Z, Z)) / 2, (one - kron(X, X, X, X)) / 2


def operator_to_slots(op: np.ndarray, n_sites: int = 4) -> np.ndarray:
    """Operator on ``n_sites`` qubits -> tensor with one composite index 2*out + in per site."""
    t = op.reshape((2,) * (2 * n_sites))
    perm = [k for s in range(n_sites) for k in (s, n_sites + s)]
    return np.transpose(t, perm).reshape((4,) * n_sites)


def blocked_cluster_projector() -> np.ndarray:
    """Cluster-state plaquette projector on two blocked two-qubit sites, rows = outputs."""
    one = kron(I2, I2, I2, I2)
    terms = kron(XZ, Z, XZ, I2) + kron(I2, XZ, Z, XZ) + kron(XZ, X, X, XZ)
    return (one - terms) / 4


def cluster_projector_slots() -> np.ndarray:
    """Blocked projector as a tensor in the slot order (01, 12, 32, 03).

    Outputs are the slots 01 and 12, inputs the slots 03 and 32.
    """
    p = blocked_cluster_projector().reshape(4, 4, 4, 4)  # out1, out2, in1, in2
    return np.transpose(p, (0, 1, 3, 2))


def kitaev_projector_array(exact: bool = False) -> np.ndarray:
    """A[d, c, b, a] = 1/2 delta_{a+b, c+d} (-1)^{dc + ab}."""
    out = np.empty((2,) * 4, dtype=object) if exact else np.zeros((2,) * 4)
    half = QSqrt2(Fraction(1, 2)) if exact else 0.5
    for d, c, b, a in itertools.product(range(2), repeat=4):
        val = half * (-1) ** (d * c + a * b) if (a + b) % 2 == (c + d) % 2 else half * 0
        out[d, c, b, a] = val
    return out
