from __future__ import annotations

import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from liquidlab.io import (
    SchemaError,
    dump_json,
    liquid_from_json,
    liquid_to_json,
    load_json,
    mapping_from_json,
    mapping_to_json,
    model_from_json,
    model_to_json,
    network_from_json,
    network_to_json,
    substrate_from_json,
    substrate_to_json,
    tensor_from_json,
    tensor_to_json,
)
from liquidlab.liquids import LIQUID_IDS, load_liquid, substrate
from liquidlab.mappings import MAPPING_IDS, load_mapping
from liquidlab.models import CATALOG, load_model
from liquidlab.sampling import random_network
from liquidlab.substrate import is_isomorphic
from liquidlab.tensors import QSqrt2, to_float


def _through_text(d: dict) -> dict:
    return json.loads(json.dumps(d))


@pytest.mark.parametrize("lid", LIQUID_IDS)
def test_liquid_round_trip(lid: str) -> None:
    l = load_liquid(lid)
    back = liquid_from_json(_through_text(liquid_to_json(l)))
    assert back.name == l.name and back.substrate == l.substrate
    assert [m.name for m in back.all_moves] == [m.name for m in l.all_moves]
    for a, b in zip(l.all_moves, back.all_moves):
        assert a.lhs == b.lhs and a.rhs == b.rhs and a.policy == b.policy and a.correspondence == b.correspondence


@pytest.mark.parametrize("mid", [m for m in CATALOG])
def test_model_round_trip(mid: str) -> None:
    m = load_model(mid)
    back = model_from_json(_through_text(model_to_json(m)))
    assert back.semantics == m.semantics and dict(back.dims) == dict(m.dims)
    for k, t in m.tensors.items():
        assert np.array_equal(np.asarray(back.tensors[k]), np.asarray(t)) or np.allclose(to_float(back.tensors[k]), to_float(t))


def test_inline_substrate_round_trip() -> None:
    m = load_model("quaternion")
    back = model_from_json(_through_text(model_to_json(m, inline_substrate=True)))
    assert back.substrate == m.substrate


@pytest.mark.parametrize("mid", MAPPING_IDS)
def test_mapping_round_trip(mid: str) -> None:
    m = load_mapping(mid)
    back = mapping_from_json(_through_text(mapping_to_json(m)))
    assert dict(back.binding_map) == dict(m.binding_map)
    for el, image in m.element_map.items():
        assert back.element_map[el] == image


exact_entries = st.builds(QSqrt2, st.fractions(max_denominator=7, min_value=-9, max_value=9), st.fractions(max_denominator=7, min_value=-9, max_value=9))


@given(st.lists(exact_entries, min_size=1, max_size=8))
def test_exact_tensor_round_trip(values: list) -> None:
    arr = np.empty(len(values), dtype=object)
    arr[:] = values
    back = tensor_from_json(_through_text(tensor_to_json(arr)))
    assert back.dtype == object and all(x == y for x, y in zip(back, arr))


@settings(max_examples=30)
@given(st.lists(st.complex_numbers(allow_nan=False, allow_infinity=False, max_magnitude=1e6), min_size=1, max_size=8))
def test_float_tensor_round_trip(values: list) -> None:
    arr = np.array(values, dtype=complex)
    back = tensor_from_json(_through_text(tensor_to_json(arr)))
    assert np.array_equal(np.asarray(back, dtype=complex), arr)


def test_random_networks_round_trip() -> None:
    rng = np.random.default_rng(9)
    for name in ("toy2d", "branch2d", "orient2d", "spin2d"):
        for _ in range(5):
            n = random_network(substrate(name), rng, 4, directed=name == "spin2d")
            back = network_from_json(_through_text(network_to_json(n)))
            assert back == n and is_isomorphic(back, n)


def test_substrate_by_name_or_inline() -> None:
    s = substrate("orient2d")
    assert substrate_from_json("orient2d") == s
    assert substrate_from_json(_through_text(substrate_to_json(s))) == s


def test_files_with_a_foreign_schema_are_refused(tmp_path) -> None:
    p = tmp_path / "x.json"
    p.write_text(json.dumps({"schema": "other/9"}))
    with pytest.raises(SchemaError):
        load_json(p)
    p.write_text("[1, 2]")
    with pytest.raises(SchemaError):
        load_json(p)


def test_dump_json_writes_the_file(tmp_path) -> None:
    p = tmp_path / "m.json"
    text = dump_json(model_to_json(load_model("delta:2")), p)
    assert json.loads(p.read_text()) == json.loads(text)
    assert model_from_json(load_json(p)).name == "delta:2"
