from __future__ import annotations

import numpy as np
import pytest

from liquidlab.checker import check_model
from liquidlab.liquids import load_liquid, net, substrate
from liquidlab.mappings import (
    MAPPING_IDS,
    MappingError,
    SubstrateMapping,
    apply_mapping,
    cluster_mapping,
    cluster_projector_slots,
    extension_mapping,
    identity_mapping,
    ising_projector,
    kitaev_mapping,
    kitaev_projector_array,
    load_mapping,
    operator_to_slots,
    pull_back_model,
    stacking_mapping,
    toric_mapping,
    toric_projectors,
)
from liquidlab.models import delta, kitaev_chain, quaternion, toric_code, z2
from liquidlab.substrate import EqualityPolicy
from liquidlab.geometry import invariant
from liquidlab.tensors import equal, is_exact_array, to_float

CASES = [
    ("identity", "toy2d", z2()),
    ("stacking", "toy2d", z2()),
    ("algebra", "algebra", delta(2)),
    ("projector", "commproj", delta(2)),
    ("bulk_to_boundary", "toy2d-boundary", delta(2)),
]


@pytest.mark.parametrize("mapping_id,liquid_id,model", CASES)
def test_mapped_moves_hold_in_the_target_model(mapping_id: str, liquid_id: str, model) -> None:
    from liquidlab.mappings import verify_mapped_moves

    rep = verify_mapped_moves(load_mapping(mapping_id), load_liquid(liquid_id), model)
    assert rep.passed, rep.table()


@pytest.mark.parametrize("mapping_id,liquid_id,model", CASES)
def test_pulled_back_models_satisfy_the_source_liquid(mapping_id: str, liquid_id: str, model) -> None:
    pulled = pull_back_model(load_mapping(mapping_id), model)
    assert check_model(load_liquid(liquid_id), pulled).passed


def test_all_catalog_mappings_load() -> None:
    for mid in MAPPING_IDS:
        assert load_mapping(mid).name == mid
    with pytest.raises(KeyError):
        load_mapping("nope")


def test_identity_pullback_returns_the_same_tensors() -> None:
    pulled = pull_back_model(identity_mapping(), z2())
    assert np.allclose(to_float(pulled.tensors["T"]), to_float(z2().tensors["T"]))


def test_stacking_squares_the_sphere_value() -> None:
    pulled = pull_back_model(stacking_mapping(), delta(3))
    assert pulled.dims["e"] == 9
    assert complex(to_float(np.asarray(invariant(pulled, "sphere")))) == pytest.approx(9.0)


def test_extension_pullback_of_delta_is_the_ising_projector() -> None:
    pulled = pull_back_model(extension_mapping(), delta(2))
    assert np.allclose(to_float(pulled.tensors["Q"]), ising_projector(2))


def test_cluster_pullback_is_the_blocked_plaquette_projector() -> None:
    pulled = pull_back_model(cluster_mapping(), quaternion())
    assert np.max(np.abs(to_float(pulled.tensors["S"]) - cluster_projector_slots())) <= 1e-12


def test_kitaev_rhombus_pullback_is_exact_in_order_dcba() -> None:
    r = pull_back_model(kitaev_mapping(), kitaev_chain()).tensors["R"]
    dcba = np.transpose(r, (3, 2, 1, 0))
    assert is_exact_array(dcba)
    assert np.array_equal(dcba, kitaev_projector_array(exact=True))


def test_toric_pullback_gives_the_complementary_projectors() -> None:
    """The pulled-back cells project onto ZZZZ = +1 and XXXX = +1."""
    pulled = pull_back_model(toric_mapping(), toric_code())
    pa, pb = toric_projectors()
    proj = EqualityPolicy("projective", 1e-12)
    a = equal(to_float(pulled.tensors["PA"]), operator_to_slots(np.eye(16) - pa), proj)
    b = equal(to_float(pulled.tensors["PB"]), operator_to_slots(np.eye(16) - pb), proj)
    assert a.equal and a.lam == pytest.approx(1.0)
    assert b.equal and b.lam == pytest.approx(2.0)
    assert not equal(to_float(pulled.tensors["PA"]), operator_to_slots(pa), proj).equal


def test_operator_to_slots_pairs_output_and_input_per_site() -> None:
    op = np.zeros((16, 16))
    op[1, 0] = 1.0  # |0001><0000|
    t = operator_to_slots(op)
    assert t[0, 0, 0, 2] == 1.0 and np.count_nonzero(t) == 1


def test_mapping_requires_an_image_for_every_element() -> None:
    m = identity_mapping()
    with pytest.raises(MappingError, match="no image"):
        SubstrateMapping("broken", m.source, m.target, m.binding_map, {}, {})


def test_mapping_requires_slot_groups_covering_the_image() -> None:
    m = identity_mapping()
    with pytest.raises(MappingError):
        SubstrateMapping("broken", m.source, m.target, m.binding_map, m.element_map, {"T": {"a": ("a",), "b": ("b",), "c": ("a",)}})


def test_pull_back_rejects_a_model_on_the_wrong_substrate() -> None:
    with pytest.raises(MappingError):
        pull_back_model(stacking_mapping(), kitaev_chain())


def test_apply_mapping_rejects_a_network_on_the_wrong_substrate() -> None:
    with pytest.raises(MappingError):
        apply_mapping(extension_mapping(), load_liquid("toy2d").move("1-3").lhs)


def test_fermionic_blocking_needs_particle_hole_semantics() -> None:
    spin = substrate("spin2d")
    image = net(
        spin,
        [("T", {"01": "a0", "12": "b0", "02": "c0"}), ("T", {"01": "a1", "12": "b1", "02": "c1"})],
        ["a0", "a1", "b0", "b1", "c0", "c1"],
        directed=True,
    )
    toy = substrate("toy2d")
    doubled = SubstrateMapping(
        "doubled_spin",
        toy,
        spin,
        {"e": ("e", "e")},
        {"T": image},
        {"T": {s: (f"{s}0", f"{s}1") for s in "abc"}},
    )
    with pytest.raises(MappingError, match="particle-hole"):
        pull_back_model(doubled, kitaev_chain())
