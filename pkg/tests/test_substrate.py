from __future__ import annotations

import numpy as np
import pytest

from liquidlab.checker import CircuitError, CircuitStep, apply_everywhere, distinct_occurrences
from liquidlab.circuits import hadamard_pair_move
from liquidlab.liquids import load_liquid, net, substrate
from liquidlab.mappings import apply_mapping, extension_mapping, projector_mapping
from liquidlab.sampling import random_network
from liquidlab.substrate import (
    Atom,
    Bond,
    EqualityPolicy,
    Network,
    NetworkBuilder,
    NetworkError,
    SymmetryMove,
    atom_end,
    brute_force_occurrences,
    canonical_form,
    check_network,
    expand_symmetry_move,
    find_occurrences,
    is_isomorphic,
    open_end,
    rewrite,
    validate_move,
    validate_network,
)


def hadamard_chain(length: int) -> Network:
    sub = substrate("toy2d-hadamard")
    nb = NetworkBuilder(sub)
    ids = [nb.atom("H") for _ in range(length)]
    nb.open(ids[0], "i", "left")
    for a, b in zip(ids, ids[1:]):
        nb.bond(a, "o", b, "i")
    nb.open(ids[-1], "o", "right")
    return check_network(nb.build())


def composed_hadamard_pair() -> Network:
    sub = substrate("toy2d-hadamard")
    return net(sub, [("H", {"i": "a", "o": "~x"}), ("H", {"i": "~x", "o": "b"})], "ab")


def test_unknown_element_is_rejected() -> None:
    with pytest.raises(NetworkError, match="unknown element"):
        substrate("toy2d").element("nope")


def test_validation_reports_dangling_slot() -> None:
    sub = substrate("toy2d")
    n = Network(sub, (Atom(0, "T"),), (Bond((atom_end(0, "a"), open_end("x"))),), ("x",))
    problems = validate_network(n)
    assert problems and any("b" in p or "c" in p for p in problems)
    with pytest.raises(NetworkError):
        check_network(n)


def test_validation_reports_open_order_mismatch() -> None:
    sub = substrate("toy2d")
    n = net(sub, [("T", {"a": "a", "b": "b", "c": "c"})], "abc")
    broken = Network(sub, n.atoms, n.bonds, ("a", "b"))
    assert validate_network(broken)


def test_every_shipped_move_validates() -> None:
    from liquidlab.liquids import LIQUID_IDS

    for lid in LIQUID_IDS:
        for mv in load_liquid(lid).all_moves:
            assert validate_move(mv) == [], (lid, mv.name)


def test_hadamard_chain_of_three_has_two_overlapping_occurrences() -> None:
    occs = distinct_occurrences(hadamard_chain(3), composed_hadamard_pair())
    sets = sorted(sorted(o.values()) for o in occs)
    assert sets == [[0, 1], [1, 2]]


def test_overlapping_occurrences_abort_a_circuit_step() -> None:
    host = hadamard_chain(3)
    mv = hadamard_pair_move()
    step = CircuitStep(type(mv)(mv.name, composed_hadamard_pair(), mv.rhs, mv.correspondence, mv.policy))
    with pytest.raises(CircuitError, match="overlapping"):
        apply_everywhere(host, step)


def test_rewriting_a_hadamard_pair_leaves_a_bare_bond() -> None:
    mv = hadamard_pair_move()
    sub = substrate("toy2d-hadamard")
    host = net(sub, [("H", {"i": "p", "o": "~x"}), ("H", {"i": "q", "o": "~x"})], "pq")
    occ = find_occurrences(host, mv.lhs)[0]
    out = rewrite(host, mv, occ)
    assert not out.atoms
    assert len(out.bonds) == 1 and out.bonds[0].is_bare
    assert sorted(out.open_order) == ["p", "q"]


def test_occurrence_search_matches_brute_force_on_a_fixed_torus() -> None:
    from liquidlab.geometry import build_surface

    host = build_surface("torus", "unoriented", liquid="toy2d").network
    pattern = load_liquid("toy2d").move("2-2").lhs
    assert find_occurrences(host, pattern) == brute_force_occurrences(host, pattern)
    assert find_occurrences(host, pattern)


def test_symmetry_move_expands_to_a_single_atom_permutation() -> None:
    mv = expand_symmetry_move(substrate("toy2d"), SymmetryMove("T", ("a", "b", "c")))
    assert len(mv.lhs.atoms) == len(mv.rhs.atoms) == 1
    stub = {b.ends[0][2]: b.ends[1][1] for b in mv.rhs.bonds}
    assert stub == {"a": "b", "b": "c", "c": "a"}


def test_symmetry_move_rejects_repeated_slots() -> None:
    sub = substrate("toy2d")
    with pytest.raises(NetworkError):
        expand_symmetry_move(sub, SymmetryMove("T", ("a", "a")))


def test_move_reversed_twice_has_original_sides() -> None:
    mv = load_liquid("toy2d").move("1-3")
    back = mv.reversed().reversed()
    assert back.lhs == mv.lhs and back.rhs == mv.rhs and back.correspondence == mv.correspondence


def test_equality_policy_rejects_unknown_kind_and_negative_eps() -> None:
    with pytest.raises(ValueError):
        EqualityPolicy("fuzzy")
    with pytest.raises(ValueError):
        EqualityPolicy("tolerance", -1.0)
    assert EqualityPolicy.from_json(EqualityPolicy("projective", 1e-3).to_json()) == EqualityPolicy("projective", 1e-3)


def test_renumbering_atoms_preserves_isomorphism() -> None:
    rng = np.random.default_rng(3)
    for _ in range(20):
        n = random_network(substrate("toy2d"), rng, 5)
        assert is_isomorphic(n, n.renumbered())
        assert is_isomorphic(n, n.shift_atoms(10))


def square_grid(sub_name: str, element: str, slots: tuple[str, str, str, str]) -> Network:
    """2x2 grid of four-slot atoms; slots are (left, right, bottom, top)."""
    l, r, b, t = slots
    nb = NetworkBuilder(substrate(sub_name))
    ids = [nb.atom(element) for _ in range(4)]
    nb.bond(ids[0], r, ids[1], l)
    nb.bond(ids[2], r, ids[3], l)
    nb.bond(ids[0], t, ids[2], b)
    nb.bond(ids[1], t, ids[3], b)
    k = 0
    for a, s in ((ids[0], l), (ids[2], l), (ids[1], r), (ids[3], r), (ids[0], b), (ids[1], b), (ids[2], t), (ids[3], t)):
        nb.open(a, s, f"x{k}")
        k += 1
    return check_network(nb.build())


def test_projector_mapping_turns_a_2x2_grid_into_eight_triangles() -> None:
    m = projector_mapping()
    grid = square_grid(m.source.name, "P", ("a", "b", "c", "d"))
    out = apply_mapping(m, grid)
    assert len(out.atoms) == 8
    assert {a.element for a in out.atoms} == {"T"}
    assert sorted(out.open_order) == sorted(grid.open_order)


def test_extension_mapping_turns_a_2x2_grid_into_eight_triangles() -> None:
    m = extension_mapping()
    grid = square_grid(m.source.name, "Q", ("l", "r", "b", "t"))
    out = apply_mapping(m, grid)
    assert len(out.atoms) == 8
    assert {a.element for a in out.atoms} == {"T"}
