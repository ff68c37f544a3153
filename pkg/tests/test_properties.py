"""Randomized invariants of the network engine, checked with hypothesis."""

from __future__ import annotations

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from liquidlab.checker import move_residual
from liquidlab.liquids import SPIN_ORDERINGS, load_liquid, substrate
from liquidlab.models import model_for_liquid, quaternion, z2
from liquidlab.sampling import induced_subnetwork, random_host_with, random_model, random_network, rewrite_round_trip
from liquidlab.substrate import Move, brute_force_occurrences, canonical_form, find_occurrences, is_isomorphic
from liquidlab.tensors import GradedDim, evaluate_network

SEEDS = st.integers(0, 2**32 - 1)
BOSONIC = st.sampled_from(["toy2d", "branch2d", "orient2d"])


@settings(max_examples=60, deadline=None)
@given(SEEDS, BOSONIC)
def test_evaluation_does_not_depend_on_the_schedule(seed: int, name: str) -> None:
    rng = np.random.default_rng(seed)
    sub = substrate(name)
    n = random_network(sub, rng, int(rng.integers(1, 7)), p_conjugate=0.3 if name == "orient2d" else 0.0)
    m = random_model(sub, rng)
    ref = evaluate_network(m, n, "greedy")
    assert np.array_equal(ref, evaluate_network(m, n, "sequential"))
    assert np.array_equal(ref, evaluate_network(m, n, "random", seed=seed))


@settings(max_examples=40, deadline=None)
@given(SEEDS)
def test_fermionic_evaluation_does_not_depend_on_the_schedule(seed: int) -> None:
    rng = np.random.default_rng(seed)
    sub = substrate("spin2d")
    n = random_network(sub, rng, int(rng.integers(1, 6)), directed=True)
    m = random_model(sub, rng, {"e": GradedDim(1, 1)}, semantics="fermionic_plain", orderings=SPIN_ORDERINGS)
    ref = evaluate_network(m, n, "greedy")
    assert np.array_equal(ref, evaluate_network(m, n, "sequential"))
    assert np.array_equal(ref, evaluate_network(m, n, "random", seed=seed))


def _rewritable_moves() -> list[Move]:
    out = []
    for lid in ("toy2d", "branch2d", "orient2d"):
        for mv in load_liquid(lid).moves:
            if mv.lhs.atoms and mv.rhs.atoms and not any(b.is_bare for b in mv.lhs.bonds + mv.rhs.bonds):
                out.append(mv)
    return out


MOVES = _rewritable_moves()


@settings(max_examples=60, deadline=None)
@given(SEEDS, st.sampled_from(MOVES))
def test_rewrite_then_reverse_returns_an_isomorphic_network(seed: int, mv: Move) -> None:
    rng = np.random.default_rng(seed)
    host = random_host_with(mv.lhs, rng, int(rng.integers(0, 7 - len(mv.lhs.atoms))))
    occs = find_occurrences(host, mv.lhs)
    assert occs
    assert rewrite_round_trip(host, mv, occs[int(rng.integers(len(occs)))])


@settings(max_examples=60, deadline=None)
@given(SEEDS, BOSONIC, st.booleans())
def test_occurrence_search_is_complete(seed: int, name: str, induced: bool) -> None:
    rng = np.random.default_rng(seed)
    sub = substrate(name)
    host = random_network(sub, rng, int(rng.integers(1, 7)), p_open=0.2, p_conjugate=0.3 if name == "orient2d" else 0.0)
    if induced:
        size = int(rng.integers(1, min(3, len(host.atoms)) + 1))
        pattern = induced_subnetwork(host, list(rng.choice(host.atom_ids(), size=size, replace=False)))
        assert find_occurrences(host, pattern)
    else:
        pattern = random_network(sub, rng, int(rng.integers(1, 4)), p_open=0.5)
    assert find_occurrences(host, pattern) == brute_force_occurrences(host, pattern)


@settings(max_examples=60, deadline=None)
@given(SEEDS, BOSONIC)
def test_canonical_form_ignores_atom_numbering(seed: int, name: str) -> None:
    rng = np.random.default_rng(seed)
    n = random_network(substrate(name), rng, int(rng.integers(1, 6)))
    shifted = n.shift_atoms(int(rng.integers(1, 50)))
    assert canonical_form(n) == canonical_form(shifted.renumbered())
    assert is_isomorphic(n, shifted)


@settings(max_examples=30, deadline=None)
@given(SEEDS, st.sampled_from(["toy2d", "branch2d"]), st.data())
def test_move_residual_ignores_atom_numbering(seed: int, lid: str, data) -> None:
    l = load_liquid(lid)
    mv = data.draw(st.sampled_from(l.all_moves))
    shift = np.random.default_rng(seed).integers(1, 40)
    moved = Move(mv.name, mv.lhs.shift_atoms(int(shift)), mv.rhs.shift_atoms(int(shift) + 3), mv.correspondence, mv.policy)
    m = z2() if lid == "toy2d" else quaternion()
    a, b = move_residual(m, mv), move_residual(m, moved)
    assert a.passed == b.passed and a.residual == b.residual


@settings(max_examples=30, deadline=None)
@given(SEEDS)
def test_conjugating_every_atom_conjugates_the_value(seed: int) -> None:
    rng = np.random.default_rng(seed)
    sub = substrate("orient2d")
    n = random_network(sub, rng, int(rng.integers(1, 5)))
    m = model_for_liquid("matrix:2", "orient2d")
    from liquidlab.tensors import to_float

    v = to_float(evaluate_network(m, n))
    w = to_float(evaluate_network(m, n.with_conjugation(True)))
    assert np.allclose(w, np.conj(v))
