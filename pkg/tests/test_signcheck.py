from __future__ import annotations

import itertools

import pytest
from hypothesis import given
from hypothesis import strategies as st

from liquidlab.liquids import SPIN_ORDERINGS, load_liquid
from liquidlab.signcheck import Poly, compute_sign_ledger, reduce_poly, schedule_independent, signcheck_liquid

NAMES = ["a", "b", "c", "d"]
monomials = st.frozensets(st.sampled_from(NAMES), max_size=3)
polys = st.lists(monomials, max_size=5).map(Poly)


@given(polys, polys, polys)
def test_gf2_polynomials_form_a_commutative_ring(p: Poly, q: Poly, r: Poly) -> None:
    assert p + q == q + p and p * q == q * p
    assert p * (q + r) == p * q + p * r
    assert p + p == Poly()
    assert p * Poly.one() == p


@given(polys)
def test_boolean_variables_are_idempotent(p: Poly) -> None:
    assert p * p == p


@given(polys, polys)
def test_evaluation_is_a_ring_homomorphism(p: Poly, q: Poly) -> None:
    for bits in itertools.product((0, 1), repeat=len(NAMES)):
        v = dict(zip(NAMES, bits))
        assert (p + q).evaluate(v) == (p.evaluate(v) + q.evaluate(v)) % 2
        assert (p * q).evaluate(v) == p.evaluate(v) * q.evaluate(v)


@given(polys)
def test_reduction_agrees_on_the_constraint_surface(p: Poly) -> None:
    rel = [frozenset({"a", "b", "c"})]
    red = reduce_poly(p, rel, NAMES)
    assert "a" not in red.variables
    for bits in itertools.product((0, 1), repeat=len(NAMES)):
        v = dict(zip(NAMES, bits))
        if (v["a"] + v["b"] + v["c"]) % 2 == 0:
            assert red.evaluate(v) == p.evaluate(v)


def test_reduction_uses_the_earliest_variable_as_pivot() -> None:
    x = Poly.var("a") * Poly.var("d")
    assert reduce_poly(x, [frozenset({"a", "b"})], NAMES) == Poly.var("b") * Poly.var("d")


def test_shipped_orderings_cancel_on_every_spin_move() -> None:
    results = signcheck_liquid(load_liquid("spin2d"), trials=20, seed=0)
    assert len(results) == 4
    for r in results:
        assert r.ledger.cancels, (r.ledger.move, str(r.ledger.difference))
        assert r.schedule_independent
        assert r.numeric.trials == 20 and r.numeric.failures == 0
        assert r.to_json()["pass"]


def test_derived_two_gon_symmetry_also_cancels() -> None:
    l = load_liquid("spin2d")
    led = compute_sign_ledger(l.move("2gon_symmetry"), SPIN_ORDERINGS)
    assert led.cancels


def test_permuted_triangle_ordering_is_caught_by_both_routes() -> None:
    l = load_liquid("spin2d")
    bad = dict(SPIN_ORDERINGS)
    bad["T"] = ("01", "02", "12")
    results = signcheck_liquid(l, bad, trials=20, seed=0)
    caught = [r for r in results if not r.ledger.cancels]
    assert caught
    assert all(r.numeric.failures > 0 for r in caught)
    assert all(r.numeric.failures == 0 for r in results if r.ledger.cancels)


@pytest.mark.parametrize("name", ["2-2", "triangle_cancellation", "012_symmetry", "2gon_cancellation"])
def test_ledgers_do_not_depend_on_the_contraction_schedule(name: str) -> None:
    assert schedule_independent(load_liquid("spin2d").move(name), SPIN_ORDERINGS)


def test_ledger_steps_have_a_readable_shorthand() -> None:
    led = compute_sign_ledger(load_liquid("spin2d").move("2-2"), SPIN_ORDERINGS)
    assert led.lhs.steps and all(s.shorthand().count("|") == 2 for s in led.lhs.steps)
