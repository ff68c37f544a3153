"""The frozen reference values are reproducible from the independent evaluators."""

from __future__ import annotations

import numpy as np

from liquidlab.geometry import build_surface
from liquidlab.models import delta, z2

from oracles import brute_force_evaluate, compute_values, einsum_evaluate, load_frozen


def test_frozen_values_regenerate() -> None:
    fresh = compute_values()
    frozen = load_frozen()
    assert fresh.keys() == frozen.keys()
    for table in ("invariants", "lambdas", "brute_force"):
        assert fresh[table].keys() == frozen[table].keys()
        for key, value in frozen[table].items():
            assert np.allclose(fresh[table][key], value, atol=1e-9), (table, key)


def test_two_oracles_agree_on_a_small_closed_surface() -> None:
    n = build_surface("rp2", "unoriented", liquid="toy2d").network
    for m in (delta(2), z2()):
        assert np.isclose(complex(einsum_evaluate(m, n)), brute_force_evaluate(m, n))
