from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from liquidlab.checker import (
    CircuitError,
    CircuitStep,
    check_circuit_equivalence,
    check_model,
    move_residual,
    replay_derivation,
)
from liquidlab.circuits import CIRCUIT_IDS, load_circuit, toy_probes
from liquidlab.liquids import branch_derivation, hermiticity_chain, load_liquid
from liquidlab.models import circuit_models, delta, matrix, model_for_liquid, quaternion, toric_code, z2
from liquidlab.substrate import EqualityPolicy
from liquidlab.tensors import EvaluationError, to_float

from oracles import load_frozen, move_sides, projective_lambda

FROZEN = load_frozen()
EXACT = EqualityPolicy("exact", 0.0)


def _frozen_complex(key: str, table: str = "lambdas") -> complex:
    re, im = FROZEN[table][key]
    return complex(re, im)


def test_delta_passes_toy_moves_exactly() -> None:
    rep = check_model(load_liquid("toy2d"), delta(2), policy=EXACT)
    assert rep.passed and all(m.residual == 0.0 for m in rep.moves)


def test_engine_sides_match_the_einsum_oracle() -> None:
    for lid, model in (("toy2d", z2()), ("branch2d", quaternion()), ("faceedge3d-toy", toric_code())):
        for mv in load_liquid(lid).all_moves:
            r = move_residual(model, mv)
            lo, ro = move_sides(model, mv)
            assert np.allclose(to_float(r.lhs), lo, atol=1e-12), mv.name
            assert np.allclose(to_float(r.rhs), ro, atol=1e-12), mv.name


@pytest.mark.parametrize(
    "liquid,model,move",
    [
        ("faceedge3d-toy", "toric_code", "face_1-3"),
        ("orient2d-invertible", "matrix:2", "0-surgery"),
        ("orient2d-invertible", "matrix:2", "1-surgery"),
    ],
)
def test_projective_scalars_match_frozen_oracle(liquid: str, model: str, move: str) -> None:
    l = load_liquid(liquid)
    m = model_for_liquid(model, l.substrate.name)
    r = move_residual(m, l.move(move))
    assert r.passed
    assert r.lam == pytest.approx(_frozen_complex(f"{liquid}/{move}"), abs=1e-12)


def test_reversing_a_projective_move_inverts_the_scalar() -> None:
    l = load_liquid("orient2d-invertible")
    m = model_for_liquid("matrix:2", "orient2d")
    for name in ("0-surgery", "1-surgery"):
        mv = l.move(name)
        fwd = move_residual(m, mv)
        back = move_residual(m, mv.reversed())
        assert back.passed
        assert fwd.lam * back.lam == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(["toy2d", "branch2d", "orient2d"]), st.data())
def test_residual_is_symmetric_in_the_two_sides(lid: str, data) -> None:
    l = load_liquid(lid)
    mv = data.draw(st.sampled_from(l.all_moves))
    m = {"toy2d": z2(), "branch2d": quaternion(), "orient2d": model_for_liquid("matrix:3", "orient2d")}[lid]
    a = move_residual(m, mv)
    b = move_residual(m, mv.reversed())
    assert a.passed == b.passed
    assert a.residual == pytest.approx(b.residual, abs=1e-12)


def test_exact_policy_fails_where_only_a_scalar_differs() -> None:
    l = load_liquid("orient2d-invertible")
    m = model_for_liquid("matrix:2", "orient2d")
    r = move_residual(m, l.move("0-surgery"), EXACT)
    assert not r.passed
    lo, ro = move_sides(m, l.move("0-surgery"))
    assert projective_lambda(lo, ro) == pytest.approx(r.lam if r.lam else _frozen_complex("orient2d-invertible/0-surgery"))


def test_broken_tensor_is_reported_with_a_residual_tensor() -> None:
    m = delta(2)
    t = to_float(m.tensors["T"]).copy()
    t[0, 0, 0] = 0.5
    rep = check_model(load_liquid("toy2d"), m.with_tensors(T=t))
    assert not rep.passed
    bad = [r for r in rep.moves if not r.passed]
    assert bad and all(r.residual_tensor is not None and np.max(np.abs(r.residual_tensor)) > 0 for r in bad)
    assert "FAIL" in rep.table()


def test_model_on_another_substrate_is_rejected() -> None:
    with pytest.raises(EvaluationError):
        check_model(load_liquid("branch2d"), delta(2))


def test_branch_one_three_follows_from_the_axioms() -> None:
    l = load_liquid("branch2d")
    mv = l.move("1-3")
    assert mv.derived
    assert replay_derivation(mv.lhs, branch_derivation(l), mv.rhs) is not None


def test_hermiticity_chain_reaches_the_counter_clockwise_two_gon() -> None:
    l = load_liquid("orient2d-hermitian")
    mv = l.move("ccw_2gon_hermiticity")
    path = replay_derivation(mv.lhs, hermiticity_chain(l), mv.rhs)
    assert path is not None and len(path) == len(hermiticity_chain(l)) + 1


def test_replay_returns_none_for_an_unreachable_target() -> None:
    l = load_liquid("branch2d")
    mv = l.move("1-3")
    assert replay_derivation(mv.lhs, branch_derivation(l)[:1], mv.rhs) is None


@pytest.mark.parametrize("name", CIRCUIT_IDS)
def test_shipped_circuits_preserve_every_probe_exactly(name: str) -> None:
    rep = load_circuit(name).check(eps=0.0)
    assert rep.passed and rep.exact, rep.message


def test_empty_circuit_between_a_model_and_itself_passes() -> None:
    a, b = circuit_models("hadamard")
    rep = check_circuit_equivalence(b, b, (), toy_probes("toy2d-hadamard", "Tz"))
    assert rep.passed


def test_circuit_with_wrong_target_fails_naming_the_probe() -> None:
    c = load_circuit("hadamard")
    wrong = c.target.with_tensors(**{k: 2 * to_float(v) for k, v in c.target.tensors.items()})
    rep = check_circuit_equivalence(wrong, c.source, c.steps, c.probes)
    assert not rep.passed and "probe 0" in rep.message


def test_circuit_probes_must_be_closed() -> None:
    c = load_circuit("hadamard")
    open_probe = c.steps[0].move.lhs
    with pytest.raises(CircuitError):
        check_circuit_equivalence(c.target, c.source, c.steps, (open_probe,))
