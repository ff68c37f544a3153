from __future__ import annotations

import pytest

from liquidlab.checker import Liquid
from liquidlab.liquids import LIQUID_IDS, SPIN_ORDERINGS, liquid_with_policy, load_liquid, substrate
from liquidlab.substrate import EqualityPolicy, NetworkError


@pytest.mark.parametrize("lid", LIQUID_IDS)
def test_liquid_loads_with_unique_valid_moves(lid: str) -> None:
    l = load_liquid(lid)
    names = [m.name for m in l.all_moves]
    assert names and len(set(names)) == len(names)
    assert all(m.lhs.substrate.name == l.substrate.name for m in l.all_moves)


def test_unknown_liquid() -> None:
    with pytest.raises(KeyError):
        load_liquid("nope")


def test_axiom_counts() -> None:
    assert len(load_liquid("toy2d").moves) == 2
    assert len(load_liquid("branch2d").moves) == 5
    assert len(load_liquid("spin2d").moves) == 4


def test_derived_moves_are_flagged() -> None:
    for lid in LIQUID_IDS:
        l = load_liquid(lid)
        assert all(m.derived for m in l.derived)
        assert not any(m.derived for m in l.moves)


def test_spin_liquid_carries_orderings_and_bond_rule() -> None:
    l = load_liquid("spin2d")
    assert dict(l.metadata["orderings"]) == dict(SPIN_ORDERINGS)
    assert "eta" in l.metadata["bond_rule"]
    assert all(m.lhs.directed and m.rhs.directed for m in l.all_moves)
    for el, order in SPIN_ORDERINGS.items():
        assert sorted(order) == sorted(l.substrate.element(el).slot_names)


def test_arrow_semantics_on_oriented_substrates() -> None:
    assert substrate("orient2d").binding("e").arrow_semantics
    assert not substrate("toy2d").binding("e").arrow_semantics


def test_policy_override_touches_only_the_named_move() -> None:
    l = load_liquid("toy2d")
    out = liquid_with_policy(l, {"1-3": EqualityPolicy("projective", 1e-9)})
    assert out.move("1-3").policy.kind == "projective"
    assert out.move("2-2").policy == l.move("2-2").policy


def test_duplicate_move_names_are_rejected() -> None:
    l = load_liquid("toy2d")
    with pytest.raises(NetworkError):
        Liquid("dup", l.substrate, l.moves + l.moves[:1])
