"""Shipped circuit equivalences on the toy 1+1D liquid.

``hadamard``: the ℤ₂ triangle becomes δ(2) with a Hadamard on every leg,
then adjacent Hadamard pairs cancel.  ``product``: each product triangle
splits into three vectors, then every normalized vector pair disappears.
"""

from __future__ import annotations

from dataclasses import dataclass

from .checker import CircuitReport, CircuitStep, check_circuit_equivalence
from .geometry import Triangulation, from_triangles, surface_triangulation
from .liquids import TOL, net, substrate
from .substrate import Move, Network, check_network, make_move, Atom, Bond, atom_end
from .tensors import Model
from .models import circuit_models

CIRCUIT_IDS = ("hadamard", "product")
TETRAHEDRON = ((0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3))


@dataclass(frozen=True)
class Circuit:
    name: str
    target: Model
    source: Model
    steps: tuple[CircuitStep, ...]
    probes: tuple[Network, ...]

    def check(self, eps: float = 1e-12) -> CircuitReport:
        return check_circuit_equivalence(self.target, self.source, self.steps, self.probes, eps)


def closed_toy_network(t: Triangulation, substrate_name: str, element: str) -> Network:
    """One ``element`` atom per triangle, slots a, b, c on edges 01, 12, 02."""
    sub = substrate(substrate_name)
    atoms = tuple(Atom(i, element) for i in range(len(t.triangles)))
    ends: dict[int, list] = {}
    for i, edges in enumerate(t.tri_edges):
        for slot, e in zip("abc", edges):
            ends.setdefault(e, []).append(atom_end(i, slot))
    bonds = tuple(Bond((a, b)) for a, b in ends.values())
    return check_network(Network(sub, atoms, bonds, ()))


def toy_probes(substrate_name: str, element: str) -> tuple[Network, ...]:
    surfaces = (from_triangles(4, TETRAHEDRON), surface_triangulation("torus"))
    return tuple(closed_toy_network(t, substrate_name, element) for t in surfaces)


def basis_change_move() -> Move:
    sub = substrate("toy2d-hadamard")
    lhs = net(sub, [("Tz", {"a": "a", "b": "b", "c": "c"})], "abc")
    rhs = net(
        sub,
        [
            ("T", {"a": "~x", "b": "~y", "c": "~z"}),
            ("H", {"i": "~x", "o": "a"}),
            ("H", {"i": "~y", "o": "b"}),
            ("H", {"i": "~z", "o": "c"}),
        ],
        "abc",
    )
    return make_move("z2_basis_change", lhs, rhs, policy=TOL)


def hadamard_pair_move() -> Move:
    sub = substrate("toy2d-hadamard")
    lhs = net(sub, [("H", {"i": "a", "o": "~x"}), ("H", {"i": "b", "o": "~x"})], "ab")
    rhs = net(sub, [], "ab", wires=[("a", "b", "e")])
    return make_move("hadamard_selfinverse", lhs, rhs, policy=TOL)


def product_split_move() -> Move:
    sub = substrate("toy2d-product")
    lhs = net(sub, [("T", {"a": "a", "b": "b", "c": "c"})], "abc")
    rhs = net(sub, [("V", {"a": "a"}), ("V", {"a": "b"}), ("V", {"a": "c"})], "abc")
    return make_move("product_tensor", lhs, rhs, policy=TOL)


def vector_pair_move() -> Move:
    sub = substrate("toy2d-product")
    lhs = net(sub, [("V", {"a": "~x"}), ("V", {"a": "~x"})], [])
    rhs = net(sub, [], [])
    return make_move("vector_normalization", lhs, rhs, policy=TOL)


def load_circuit(name: str, x: int = 2) -> Circuit:
    if name == "hadamard":
        a, b = circuit_models("hadamard")
        steps = (CircuitStep(basis_change_move()), CircuitStep(hadamard_pair_move()))
        return Circuit(name, a, b, steps, toy_probes("toy2d-hadamard", "Tz"))
    if name == "product":
        a, b = circuit_models("product", x)
        steps = (CircuitStep(product_split_move()), CircuitStep(vector_pair_move()))
        return Circuit(name, a, b, steps, toy_probes("toy2d-product", "T"))
    raise KeyError(f"unknown circuit {name!r}; known: {', '.join(CIRCUIT_IDS)}")
