from __future__ import annotations

import numpy as np
import pytest

from liquidlab.checker import check_model
from liquidlab.liquids import LIQUID_IDS, load_liquid
from liquidlab.mappings import X, kron
from liquidlab.models import (
    CATALOG,
    MODEL_IDS,
    apply_g_basis_change,
    check_grading,
    delta,
    g_basis_change,
    is_real_model,
    kitaev_chain,
    klein4_representation,
    load_model,
    matrix,
    model_for_liquid,
    parse_ref,
    quaternion,
    quaternion_product,
    scalar_alpha,
    spt_matrix2,
    toric_code,
    verify_symmetry,
    verify_symmetry_on,
    z2,
)
from liquidlab.tensors import is_exact_array, to_float

PAIRS = [(mid, lid) for mid, entry in CATALOG.items() for lid in entry.targets]


@pytest.mark.parametrize("model_id,liquid_id", PAIRS)
def test_catalog_models_satisfy_their_liquids(model_id: str, liquid_id: str) -> None:
    l = load_liquid(liquid_id)
    rep = check_model(l, model_for_liquid(model_id, l.substrate.name))
    assert rep.passed, rep.table()


def test_every_liquid_has_a_catalog_model() -> None:
    covered = {lid for _, lid in PAIRS}
    assert set(LIQUID_IDS) - covered <= {"algebra", "commproj"}


def test_parse_ref_splits_parameters() -> None:
    assert parse_ref("delta:3") == ("delta", ["3"])
    assert parse_ref("delta_boundary:2,1") == ("delta_boundary", ["2", "1"])
    assert parse_ref("quaternion") == ("quaternion", [])


def test_load_model_errors() -> None:
    with pytest.raises(KeyError):
        load_model("nosuch")
    with pytest.raises(ValueError):
        load_model("delta:1.5")
    with pytest.raises(ValueError):
        load_model("quaternion:2")
    with pytest.raises(ValueError):
        scalar_alpha(0)


def test_loaded_name_keeps_the_reference() -> None:
    assert load_model("delta:3").name == "delta:3"
    assert set(MODEL_IDS) == set(CATALOG)


def test_exact_models_are_exact() -> None:
    for m in (delta(2), z2(), matrix(2), quaternion(), toric_code(), kitaev_chain()):
        assert all(is_exact_array(np.asarray(t)) for t in m.tensors.values()), m.name


def test_quaternion_multiplication_table() -> None:
    assert quaternion_product("i", "j") == (1, "k")
    assert quaternion_product("j", "i") == (-1, "k")
    assert quaternion_product("i", "i") == (-1, "1")
    assert quaternion_product("1", "k") == (1, "k")


def test_g_is_unitary_and_maps_quaternions_to_matrix_units() -> None:
    g = g_basis_change()
    assert np.allclose(g @ g.conj().T, np.eye(4), atol=1e-14)
    got = apply_g_basis_change(quaternion().tensors["T"])
    assert np.allclose(got, to_float(matrix(2).tensors["T"]), atol=1e-12)


def test_klein_four_representation_is_a_symmetry_of_matrix_two() -> None:
    rep = klein4_representation()
    assert len(rep) == 4
    assert verify_symmetry(spt_matrix2(), rep).passed


def test_x_on_one_tensor_factor_is_not_a_symmetry_of_matrix_two() -> None:
    one_factor = kron(X, np.eye(2))
    verdict = verify_symmetry(matrix(2), [one_factor])
    assert not verdict.passed and verdict.residual > 0.5
    assert not verify_symmetry_on(matrix(2), "T", [one_factor] * 3).passed


def test_symmetry_shape_mismatch_is_an_error() -> None:
    with pytest.raises(ValueError):
        verify_symmetry(matrix(2), [np.eye(2)])


def test_kitaev_chain_is_even() -> None:
    assert check_grading(kitaev_chain()).passed
    odd = kitaev_chain()
    t = to_float(odd.tensors["T"]).copy()
    t[1, 0, 0] = 1.0
    verdict = check_grading(odd.with_tensors(T=t))
    assert not verdict.passed and "T" in verdict.violations


def test_realness() -> None:
    assert is_real_model(toric_code())
    assert not is_real_model(scalar_alpha(-2.0))
