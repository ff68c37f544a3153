from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from liquidlab.liquids import load_liquid
from liquidlab.models import delta, matrix, quaternion
from liquidlab.solver import (
    ParamVector,
    SolveConfig,
    finite_difference_jacobian,
    jacobian,
    make_params,
    model_from_params,
    param_layout,
    params_from_model,
    residuals,
    solve,
)
from liquidlab.tensors import GradedDim, to_float

from oracles import load_frozen

TOY = load_liquid("toy2d")


def test_layout_lists_free_elements_with_their_shapes() -> None:
    assert param_layout(TOY, {"e": 3}) == (("T", (3, 3, 3)),)
    assert make_params(TOY, {"e": 2}).values.size == 16
    assert make_params(TOY, {"e": 2}, complex_entries=False).values.size == 8


def test_graded_dimensions_keep_only_even_entries_free() -> None:
    spin = load_liquid("spin2d")
    p = make_params(spin, {"e": GradedDim(1, 1)})
    per_element = {el: int(np.count_nonzero(p.mask[el])) for el, _ in p.layout}
    assert per_element["T"] == 4
    assert p.values.size == 2 * sum(per_element.values())


def test_wrong_length_is_rejected() -> None:
    with pytest.raises(ValueError):
        make_params(TOY, {"e": 1}, np.zeros(3))


def test_model_to_params_round_trip() -> None:
    p = params_from_model(TOY, delta(2))
    m = model_from_params(TOY, p)
    assert np.allclose(m.tensors["T"], to_float(delta(2).tensors["T"]))


@pytest.mark.parametrize("liquid,model", [("toy2d", delta(2)), ("branch2d", matrix(2)), ("branch2d", quaternion())])
def test_known_models_have_zero_residual(liquid: str, model) -> None:
    l = load_liquid(liquid)
    assert np.max(np.abs(residuals(l, params_from_model(l, model)))) <= 1e-12


@settings(max_examples=25, deadline=None)
@given(st.floats(-2, 2), st.floats(-2, 2))
def test_dimension_one_residual_is_t_minus_t_cubed(x: float, y: float) -> None:
    t = complex(x, y)
    r = residuals(TOY, make_params(TOY, {"e": 1}, np.array([x, y])))
    got = complex(r[2], r[3])
    assert abs(got + (t - t**3)) <= 1e-9
    assert np.allclose(r[:2], 0.0)


def test_dimension_one_roots_match_the_hand_solution() -> None:
    for t in load_frozen()["toy_dim1_roots"]:
        assert np.max(np.abs(residuals(TOY, make_params(TOY, {"e": 1}, np.array([t, 0.0]))))) == 0.0


@pytest.mark.parametrize("lid", ["toy2d", "branch2d", "orient2d", "faceedge3d-toy", "spin2d"])
def test_jacobian_matches_central_differences(lid: str) -> None:
    l = load_liquid(lid)
    dims = {b.name: (GradedDim(1, 1) if lid == "spin2d" else 2) for b in l.substrate.bindings}
    rng = np.random.default_rng(1)
    for _ in range(3):
        p = make_params(l, dims, rng=rng)
        J, F = jacobian(l, p), finite_difference_jacobian(l, p)
        assert np.linalg.norm(J - F) <= 1e-5 * max(np.linalg.norm(F), 1.0)


def test_dimension_one_solve_finds_the_unit_root() -> None:
    rep = solve(TOY, {"e": 1}, SolveConfig(restarts=20, seed=0))
    assert sum(r.residual < 1e-8 for r in rep.runs) >= 10
    values = [complex(*root.params.values) for root in rep.roots]
    assert any(abs(v - 1) <= 1e-6 for v in values)
    assert all(abs(v) > 1e-3 for v in values)


def test_dimension_two_solve_reports_a_sphere_value_of_one_or_two() -> None:
    rep = solve(TOY, {"e": 2}, SolveConfig(restarts=20, seed=0))
    assert any(min(abs(r.fingerprint[0] - 1), abs(r.fingerprint[0] - 2)) <= 1e-6 for r in rep.roots)


def test_solve_is_reproducible_and_thread_independent() -> None:
    a = solve(TOY, {"e": 1}, SolveConfig(restarts=6, seed=3, threads=1))
    b = solve(TOY, {"e": 1}, SolveConfig(restarts=6, seed=3, threads=4))
    assert [r.residual for r in a.runs] == [r.residual for r in b.runs]
    assert all(np.array_equal(x.params.values, y.params.values) for x, y in zip(a.runs, b.runs))


def test_allow_trivial_admits_the_zero_model() -> None:
    cfg = SolveConfig(restarts=1, seed=0, allow_trivial=True)
    from liquidlab.solver import levenberg_marquardt

    run = levenberg_marquardt(TOY, make_params(TOY, {"e": 1}, np.array([0.05, 0.0])), cfg)
    assert run.converged and abs(run.params.values[0]) < 1e-4


def test_missing_dimension_and_bad_settings() -> None:
    with pytest.raises(ValueError):
        solve(TOY, {})
    with pytest.raises(ValueError):
        SolveConfig(restarts=0)
    with pytest.raises(ValueError):
        SolveConfig(damping_decay=1.5)


def test_param_vector_json_lists_the_tensors() -> None:
    p = make_params(TOY, {"e": 1}, np.array([1.0, 0.0]))
    d = p.to_json()
    assert d["tensors"]["T"] == [[1.0, 0.0]]
    assert isinstance(p, ParamVector)
