from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from liquidlab.geometry import build_surface
from liquidlab.liquids import load_liquid, substrate
from liquidlab.models import delta, matrix, quaternion, z2
from liquidlab.sampling import random_model, random_network
from liquidlab.substrate import EqualityPolicy, empty_network
from liquidlab.tensors import (
    SQRT2,
    EvaluationError,
    FermionicTensor,
    GradedDim,
    Model,
    QSqrt2,
    contract,
    equal,
    evaluate_network,
    is_exact_array,
    koszul_sign,
    particle_hole_map,
    reorder,
    tensor_product,
    to_exact,
    to_float,
)

from oracles import einsum_evaluate

fractions = st.fractions(min_value=-20, max_value=20, max_denominator=12)
qsqrt2 = st.builds(QSqrt2, fractions, fractions)


@given(qsqrt2, qsqrt2, qsqrt2)
def test_qsqrt2_is_a_commutative_ring(x: QSqrt2, y: QSqrt2, z: QSqrt2) -> None:
    assert x + y == y + x
    assert x * y == y * x
    assert (x + y) + z == x + (y + z)
    assert (x * y) * z == x * (y * z)
    assert x * (y + z) == x * y + x * z
    assert x - x == 0


@given(qsqrt2, qsqrt2)
def test_qsqrt2_division_inverts_multiplication(x: QSqrt2, y: QSqrt2) -> None:
    if y:
        assert (x * y) / y == x
        assert y * y.inverse() == 1


@given(qsqrt2, qsqrt2)
def test_qsqrt2_float_image_is_a_homomorphism(x: QSqrt2, y: QSqrt2) -> None:
    assert float(x * y) == pytest.approx(float(x) * float(y), rel=1e-12, abs=1e-12)
    assert float(x + y) == pytest.approx(float(x) + float(y), rel=1e-12, abs=1e-12)


def test_sqrt2_squares_to_two() -> None:
    assert SQRT2 * SQRT2 == QSqrt2(2)
    assert QSqrt2(0, Fraction(1, 2)) * SQRT2 == 1


def test_qsqrt2_refuses_inexact_floats_and_zero_division() -> None:
    with pytest.raises(TypeError):
        QSqrt2.coerce(0.3)
    with pytest.raises(ZeroDivisionError):
        QSqrt2(0).inverse()


def test_tensor_product_of_vectors() -> None:
    assert np.array_equal(tensor_product(np.array([1, 2]), np.array([3, 4])), np.array([[3, 4], [6, 8]]))


def test_trace_of_identity() -> None:
    assert contract(np.eye(3), 0, 1) == 3
    with pytest.raises(EvaluationError):
        contract(np.eye(3), 0, 0)


def test_koszul_sign_table_for_swapping_two_dim_one_one_indices() -> None:
    p = GradedDim(1, 1).parity()
    assert np.array_equal(koszul_sign([p, p], [1, 0]), np.array([[1, 1], [1, -1]]))
    assert koszul_sign([p, p], [0, 1]) == 1


def test_reorder_twice_returns_the_original() -> None:
    rng = np.random.default_rng(0)
    g = GradedDim(1, 2)
    arr = rng.normal(size=(3, 3, 3))
    par = [g.parity()] * 3
    once = reorder(arr, par, [2, 0, 1])
    back = reorder(once, [par[i] for i in (2, 0, 1)], [1, 2, 0])
    assert np.allclose(back, arr)


def test_fermionic_product_does_not_depend_on_the_factor_order() -> None:
    g = GradedDim(1, 1)
    v = FermionicTensor.from_representative(np.array([1.0, 0.0]), ("x",), {"x": g})
    w = FermionicTensor.from_representative(np.array([2.0, 0.0]), ("y",), {"y": g})
    assert tensor_product(v, w) == tensor_product(w, v)


def _even_tensor(rng: np.random.Generator, g: GradedDim, n: int) -> np.ndarray:
    arr = rng.normal(size=(g.total,) * n)
    par = g.parity()
    for idx in np.ndindex(*arr.shape):
        if sum(int(par[i]) for i in idx) % 2:
            arr[idx] = 0.0
    return arr


def _blocked_trace(arr: np.ndarray, g: GradedDim, particle_hole: bool) -> complex:
    """Order (a, b, a', b'), block ab and a'b' into single indices, trace them."""
    par, hole = g.parity(), g.hole()
    total = 0.0
    for a in range(g.total):
        for b in range(g.total):
            w = 1.0
            if particle_hole:
                grade = (par[a] + 2 * hole[a] + par[b] + 2 * hole[b]) % 4
                w = -1.0 if grade >= 2 else 1.0
            total += w * arr[a, b, a, b]
    return total


@pytest.mark.parametrize("particle_hole", [False, True])
def test_blocked_pair_contraction_against_sequential(particle_hole: bool) -> None:
    g = GradedDim(2, 2, hole_even=1, hole_odd=1)
    rng = np.random.default_rng(5)
    arr = _even_tensor(rng, g, 4)
    ft = FermionicTensor.from_representative(arr, ("a", "b", "a2", "b2"), {l: g for l in ("a", "b", "a2", "b2")}, particle_hole)
    seq = complex(np.asarray(contract(contract(ft, "a", "a2"), "b", "b2").array))
    blocked = _blocked_trace(arr, g, particle_hole)
    if particle_hole:
        assert seq == pytest.approx(blocked, abs=1e-12)
    else:
        par = g.parity()
        signed = sum((-1) ** (par[b] * par[a]) * arr[a, b, a, b] for a in range(g.total) for b in range(g.total))
        assert seq == pytest.approx(signed, abs=1e-12)
        assert abs(seq - blocked) > 1e-6


def test_particle_hole_map_leaves_an_all_particle_tensor_unchanged() -> None:
    g = GradedDim(2, 0)
    arr = np.array([[1.0, 2.0], [0.0, 3.0]])
    ft = FermionicTensor.from_representative(arr, ("a", "b"), {"a": g, "b": g}, True)
    assert np.allclose(particle_hole_map(ft).array, ft.array)


def test_two_odd_particles_block_to_the_even_hole_sector() -> None:
    g = GradedDim(1, 1)
    arr = np.array([[1.0, 0.0], [0.0, 3.0]])
    ft = FermionicTensor.from_representative(arr, ("a", "b"), {"a": g, "b": g}, True)
    assert np.allclose(particle_hole_map(ft).array, [[1.0, 0.0], [0.0, -3.0]])


def test_particle_hole_map_negates_the_hole_configuration_of_a_delta_vector() -> None:
    ft = FermionicTensor.from_representative(np.array([1.0, 1.0]), ("a",), {"a": GradedDim(2, 0, hole_even=1)}, True)
    assert np.allclose(particle_hole_map(ft).array, [1.0, -1.0])


def test_particle_hole_map_squares_to_identity_on_even_tensors() -> None:
    g = GradedDim(2, 2, hole_even=1, hole_odd=1)
    arr = _even_tensor(np.random.default_rng(2), g, 3)
    ft = FermionicTensor.from_representative(arr, ("a", "b", "c"), {l: g for l in "abc"}, True)
    assert np.allclose(particle_hole_map(particle_hole_map(ft)).array, ft.array)


def test_particle_hole_map_rejects_plain_tensors() -> None:
    ft = FermionicTensor.from_representative(np.array([1.0]), ("a",), {"a": GradedDim(1)}, False)
    with pytest.raises(EvaluationError):
        particle_hole_map(ft)


def test_projective_equality_reports_the_scalar() -> None:
    b = np.array([1.0, 2.0, 3.0])
    cmp = equal(2 * b, b, EqualityPolicy("projective", 1e-12))
    assert cmp.equal and cmp.lam == pytest.approx(2.0)
    assert equal(b, b, EqualityPolicy("exact", 0.0)).equal
    assert equal(np.zeros(2), np.zeros(2), EqualityPolicy("projective", 1e-12)).equal
    with pytest.raises(EvaluationError):
        equal(b, b[:2])


def test_empty_network_evaluates_to_exact_one() -> None:
    v = evaluate_network(delta(2), empty_network(substrate("toy2d")))
    assert is_exact_array(v) and v.reshape(()).item() == QSqrt2(1)


def test_two_triangle_sphere_with_delta_two_gives_two() -> None:
    s = build_surface("sphere", "unoriented", liquid="toy2d")
    assert len(s.network.atoms) == 2
    assert evaluate_network(delta(2), s.network).reshape(()).item() == QSqrt2(2)


def test_missing_tensor_and_wrong_substrate_are_errors() -> None:
    toy = load_liquid("toy2d").move("1-3").lhs
    with pytest.raises(EvaluationError):
        evaluate_network(quaternion(), toy)
    m = delta(2)
    bare = Model(m.substrate, m.dims, {}, m.semantics)
    with pytest.raises(EvaluationError):
        evaluate_network(bare, toy)


def test_fermionic_model_needs_a_directed_network() -> None:
    from liquidlab.models import kitaev_chain

    kc = kitaev_chain()
    undirected = random_network(kc.substrate, np.random.default_rng(0), 2, directed=False)
    with pytest.raises(EvaluationError):
        evaluate_network(kc, undirected)


def test_exact_and_float_evaluation_agree() -> None:
    for mv in load_liquid("branch2d").moves:
        for side in (mv.lhs, mv.rhs):
            ex = evaluate_network(quaternion(), side)
            fl = evaluate_network(quaternion(), side, exact=False)
            assert np.allclose(to_float(ex), fl, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from(["toy2d", "branch2d", "orient2d"]))
def test_engine_matches_einsum_oracle(seed: int, name: str) -> None:
    rng = np.random.default_rng(seed)
    sub = substrate(name)
    n = random_network(sub, rng, int(rng.integers(1, 6)), p_conjugate=0.3 if name == "orient2d" else 0.0)
    m = random_model(sub, rng)
    assert np.allclose(to_float(evaluate_network(m, n)), einsum_evaluate(m, n), atol=1e-9)


def test_engine_matches_einsum_oracle_on_catalog_models() -> None:
    for m in (delta(3), z2(), matrix(2), quaternion()):
        for mv in load_liquid("toy2d" if m.substrate.name == "toy2d" else "branch2d").moves:
            for side in (mv.lhs, mv.rhs):
                assert np.allclose(to_float(evaluate_network(m, side)), einsum_evaluate(m, side), atol=1e-12)


def test_to_exact_round_trips_integers() -> None:
    arr = np.array([[1.0, -2.0], [0.0, 5.0]])
    assert np.array_equal(to_float(to_exact(arr)).real, arr)
